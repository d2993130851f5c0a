"""Brute-force product-space oracle for small ensembles.

For N <= 6 atoms the full product space with at most one excited atom
(dimension 2^N + N*2^(N-1)) is small enough to build explicitly.  Embedding
the symmetrized collective states into it gives an independent check of the
chain Hamiltonian: the projected block must reproduce the chain entrywise
and the symmetric subspace must be dynamically closed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .basis import StateVector, SymmetricBasis

_A, _B, _R = 0, 1, 2
ORACLE_MAX_ATOMS = 6


class OracleError(ValueError):
    """Raised for oracle construction outside its validity range."""


@dataclass(frozen=True)
class FullSpaceOracle:
    """Explicit product basis {a, b, r}^N restricted to <= 1 excited atom."""

    n_atoms: int
    states: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    index: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 1 <= self.n_atoms <= ORACLE_MAX_ATOMS:
            raise OracleError(
                f"oracle limited to 1..{ORACLE_MAX_ATOMS} atoms, got {self.n_atoms}"
            )
        states = tuple(
            s for s in product((_A, _B, _R), repeat=self.n_atoms) if s.count(_R) <= 1
        )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "index", {s: i for i, s in enumerate(states)})

    @property
    def dim(self) -> int:
        return len(self.states)

    def hamiltonian(
        self, omega1: float, omega2: float, delta1: float, delta2: float
    ) -> np.ndarray:
        """Blockade-projected drive Hamiltonian on the product basis.

        Per atom: omega1 |r><a| + omega2 |r><b| + h.c. plus level shifts
        delta1 per a atom and delta2 per b atom.  Transitions that would
        create a second excitation fall outside the basis and are dropped,
        which is the perfect-blockade projection.
        """
        h = np.zeros((self.dim, self.dim), dtype=np.float64)
        for i, s in enumerate(self.states):
            h[i, i] = delta1 * s.count(_A) + delta2 * s.count(_B)
            if _R in s:
                continue  # blockade: no further excitation out of this state
            for k in range(self.n_atoms):
                target = list(s)
                coupling = omega1 if s[k] == _A else omega2
                target[k] = _R
                j = self.index[tuple(target)]
                h[j, i] += coupling
                h[i, j] += coupling
        return h

    def embedding(self, basis: SymmetricBasis) -> np.ndarray:
        """Isometry from the collective basis into the product space.

        Column for g_m spreads 1/sqrt(C(N, m)) over every arrangement of m
        b atoms; column for r_m spreads 1/sqrt(N*C(N-1, m)) over every
        placement of the single excitation and of m b atoms among the rest.
        """
        if basis.n_atoms != self.n_atoms:
            raise OracleError("basis and oracle atom numbers differ")
        n = self.n_atoms
        e = np.zeros((self.dim, basis.dim), dtype=np.float64)
        for i, s in enumerate(self.states):
            m = s.count(_B)
            if _R not in s:
                e[i, basis.index_g(m)] = 1.0 / math.sqrt(math.comb(n, m))
            else:
                e[i, basis.index_r(m)] = 1.0 / math.sqrt(n * math.comb(n - 1, m))
        return e

    def embed_full(self, state: StateVector) -> np.ndarray:
        """Collective state as a product-space amplitude vector."""
        return self.embedding(state.basis) @ state.amplitudes


@dataclass(frozen=True)
class EquivalenceReport:
    """Outcome of a chain-vs-oracle comparison over random drive draws."""

    n_atoms: int
    n_draws: int
    max_block_deviation: float
    worst_entry: tuple[int, int]
    max_closure_defect: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return (
            self.max_block_deviation <= self.tolerance
            and self.max_closure_defect <= self.tolerance
        )


def run_equivalence_check(
    n_atoms: int,
    n_draws: int = 100,
    seed: int = 7,
    tolerance: float = 1e-12,
    corrupt: tuple[int, int, float] | None = None,
) -> EquivalenceReport:
    """Compare the chain against the projected product-space Hamiltonian.

    Draws (omega1, omega2, delta1, delta2) uniformly from [-2, 2]^4 and
    checks, entrywise, E^T H_full E == H_chain, plus the closure defect
    max |(1 - E E^T) H_full E| certifying that the symmetric subspace is
    invariant.  `corrupt` is a test hook perturbing one chain entry
    (row, col, epsilon) so the detection path itself can be exercised.
    """
    from .hamiltonian import ChainHamiltonian

    oracle = FullSpaceOracle(n_atoms)
    basis = SymmetricBasis(n_atoms)
    chain = ChainHamiltonian(basis)
    e = oracle.embedding(basis)
    projector_out = np.eye(oracle.dim) - e @ e.T
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_entry = (0, 0)
    worst_closure = 0.0
    for _ in range(n_draws):
        o1, o2, d1, d2 = rng.uniform(-2.0, 2.0, size=4)
        h_full = oracle.hamiltonian(o1, o2, d1, d2)
        h_chain = chain.assemble(o1, o2, d1, d2)
        if corrupt is not None:
            row, col, eps = corrupt
            h_chain = h_chain.copy()
            h_chain[row, col] += eps
        dev = np.abs(e.T @ h_full @ e - h_chain)
        entry = np.unravel_index(int(np.argmax(dev)), dev.shape)
        if dev[entry] > worst:
            worst = float(dev[entry])
            worst_entry = (int(entry[0]), int(entry[1]))
        closure = float(np.max(np.abs(projector_out @ h_full @ e)))
        worst_closure = max(worst_closure, closure)
    return EquivalenceReport(
        n_atoms=n_atoms,
        n_draws=n_draws,
        max_block_deviation=worst,
        worst_entry=worst_entry,
        max_closure_defect=worst_closure,
        tolerance=tolerance,
    )
