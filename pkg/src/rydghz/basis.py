"""Collective basis for an ensemble of three-level atoms under perfect blockade.

Each atom has two stable levels (a, b) and one strongly interacting excited
level (r).  Blockade restricts the ensemble to at most one r excitation, and
permutation symmetry reduces the state space to 2N+1 collective states:

    g_m = symmetrized |a^(N-m) b^m>          m = 0 .. N
    r_m = symmetrized |a^(N-1-m) b^m r>      m = 0 .. N-1

Ground states occupy indices 0..N, singly excited states N+1..2N.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class BasisError(ValueError):
    """Raised for invalid atom numbers or basis labels."""


@dataclass(frozen=True)
class SymmetricBasis:
    """Index bookkeeping for the blockaded symmetric subspace of N atoms."""

    n_atoms: int

    def __post_init__(self) -> None:
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise BasisError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")

    @property
    def dim(self) -> int:
        return 2 * self.n_atoms + 1

    def index_g(self, m: int) -> int:
        if not 0 <= m <= self.n_atoms:
            raise BasisError(f"g_{m} out of range for N={self.n_atoms}")
        return m

    def index_r(self, m: int) -> int:
        if not 0 <= m <= self.n_atoms - 1:
            raise BasisError(f"r_{m} out of range for N={self.n_atoms}")
        return self.n_atoms + 1 + m

    def index_of(self, label: str) -> int:
        kind, _, num = label.partition("_")
        if kind not in ("g", "r") or not num.lstrip("-").isdigit():
            raise BasisError(f"unknown basis label {label!r}")
        m = int(num)
        return self.index_g(m) if kind == "g" else self.index_r(m)

    def label_of(self, index: int) -> str:
        n = self.n_atoms
        if 0 <= index <= n:
            return f"g_{index}"
        if n + 1 <= index <= 2 * n:
            return f"r_{index - n - 1}"
        raise BasisError(f"index {index} out of range for dim {self.dim}")

    def labels(self) -> list[str]:
        return [self.label_of(i) for i in range(self.dim)]

    def a_counts(self) -> np.ndarray:
        """Number of atoms in level a for each basis state."""
        n = self.n_atoms
        counts = np.empty(self.dim, dtype=np.float64)
        for m in range(n + 1):
            counts[self.index_g(m)] = n - m
        for m in range(n):
            counts[self.index_r(m)] = n - 1 - m
        return counts

    def b_counts(self) -> np.ndarray:
        """Number of atoms in level b for each basis state."""
        n = self.n_atoms
        counts = np.empty(self.dim, dtype=np.float64)
        for m in range(n + 1):
            counts[self.index_g(m)] = m
        for m in range(n):
            counts[self.index_r(m)] = m
        return counts

    def rydberg_mask(self) -> np.ndarray:
        """Boolean mask selecting the singly excited states r_m."""
        mask = np.zeros(self.dim, dtype=bool)
        mask[self.n_atoms + 1 :] = True
        return mask


@dataclass
class StateVector:
    """Complex amplitudes over a :class:`SymmetricBasis`."""

    basis: SymmetricBasis
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.basis.dim,):
            raise BasisError(
                f"amplitude vector has shape {amps.shape}, expected ({self.basis.dim},)"
            )
        self.amplitudes = amps

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def population(self, label: str) -> float:
        return float(np.abs(self.amplitudes[self.basis.index_of(label)]) ** 2)

    def populations(self) -> dict[str, float]:
        return {lab: float(p) for lab, p in zip(self.basis.labels(), np.abs(self.amplitudes) ** 2)}

    def overlap(self, other: "StateVector") -> complex:
        if other.basis.n_atoms != self.basis.n_atoms:
            raise BasisError("states live on different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return float(np.abs(self.overlap(other)) ** 2)

    def normalized(self) -> "StateVector":
        return StateVector(self.basis, self.amplitudes / np.sqrt(self.norm2))

    def copy(self) -> "StateVector":
        return StateVector(self.basis, self.amplitudes.copy())


def build_basis(n_atoms: int) -> SymmetricBasis:
    return SymmetricBasis(n_atoms)


def collective_state(basis: SymmetricBasis, label: str) -> StateVector:
    """Unit amplitude on a single collective basis state."""
    amps = np.zeros(basis.dim, dtype=np.complex128)
    amps[basis.index_of(label)] = 1.0
    return StateVector(basis, amps)


def superposition(basis: SymmetricBasis, weights: dict[str, complex]) -> StateVector:
    """Normalized superposition of labeled basis states."""
    amps = np.zeros(basis.dim, dtype=np.complex128)
    for label, w in weights.items():
        amps[basis.index_of(label)] += w
    nrm = np.linalg.norm(amps)
    if nrm == 0.0:
        raise BasisError("superposition weights are all zero")
    return StateVector(basis, amps / nrm)
