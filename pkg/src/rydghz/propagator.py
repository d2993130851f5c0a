"""Time propagation of collective states under a pulse schedule.

Two integration routes solve the same Schroedinger equation
dpsi/dt = -i H(t) psi - (gamma/2) P_r psi: the compiled adaptive core in
:mod:`rydghz._integrator` (default, fast) and scipy's solve_ivp (reference,
used to cross-validate the compiled route in the test suite).  Both share
rtol/atol and the max-step cap, so agreement is a genuine two-implementation
check, not the same code twice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _integrator
from .basis import StateVector, SymmetricBasis
from .hamiltonian import ChainHamiltonian
from .pulses import PulseSchedule

METHODS = ("compiled", "scipy")


class IntegrationError(RuntimeError):
    """Propagation failed (step-size underflow or solver rejection)."""


@dataclass(frozen=True)
class DecayParams:
    """Markovian loss from the excited manifold.

    rydberg_rate is the population decay rate gamma of the collective r
    states, entering as the anti-Hermitian term -i (gamma/2) P_r.  Lost norm
    is the probability that the run was interrupted by a decay event, so the
    squared final norm is the protocol success probability.
    """

    rydberg_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.rydberg_rate < 0.0:
            raise ValueError(f"decay rate must be >= 0, got {self.rydberg_rate}")


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float | None = None  # None: 0.1*min(window, 1/peak gap scale)
    method: str = "compiled"
    samples: int = 2000  # trajectory sample count over the window

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step is not None and self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if self.samples < 2:
            raise ValueError("need at least 2 trajectory samples")

    def tightened(self, factor: float = 100.0) -> "IntegratorConfig":
        """Copy with tolerances divided by factor, floored at 1e-14/1e-16."""
        return replace(
            self,
            rtol=max(self.rtol / factor, 1e-14),
            atol=max(self.atol / factor, 1e-16),
        )


@dataclass
class Trajectory:
    """Sampled solution of one propagation window."""

    basis: SymmetricBasis
    times: np.ndarray
    states: np.ndarray  # (n_samples, dim) complex amplitudes
    final: StateVector
    n_steps: int
    n_rhs: int

    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    def population_of(self, label: str) -> np.ndarray:
        return np.abs(self.states[:, self.basis.index_of(label)]) ** 2

    def norm2(self) -> np.ndarray:
        return np.sum(np.abs(self.states) ** 2, axis=1)

    def rydberg_population(self) -> np.ndarray:
        mask = self.basis.rydberg_mask()
        return np.sum(np.abs(self.states[:, mask]) ** 2, axis=1)

    def write_csv(self, path) -> None:
        """Populations per collective state plus norm, one row per sample."""
        labels = self.basis.labels()
        pops = self.populations()
        norm = self.norm2()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t," + ",".join(labels) + ",norm2\n")
            for k in range(self.times.size):
                row = [repr(float(self.times[k]))]
                row += [repr(float(p)) for p in pops[k]]
                row.append(repr(float(norm[k])))
                fh.write(",".join(row) + "\n")


def read_trajectory_csv(path) -> tuple[np.ndarray, dict[str, np.ndarray], np.ndarray]:
    """Read a file written by Trajectory.write_csv.

    Returns (times, populations keyed by collective-state label, norm2).
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.array([[float(x) for x in line.split(",")] for line in fh])
    if header[0] != "t" or header[-1] != "norm2" or data.shape[1] != len(header):
        raise ValueError(f"not a trajectory CSV: {path}")
    pops = {label: data[:, 1 + k] for k, label in enumerate(header[1:-1])}
    return data[:, 0], pops, data[:, -1]


def peak_rate(schedule: PulseSchedule, basis: SymmetricBasis, grid: int = 512) -> float:
    """Largest Hamiltonian frequency scale over the window.

    Bounds the spectral radius by N*max(|delta1|, |delta2|) plus the largest
    collective coupling sqrt(N)*(|omega1| + |omega2|), maximized on a grid.
    """
    n = basis.n_atoms
    ts = np.linspace(*schedule.window, grid)
    rate = 0.0
    for t in ts:
        o1, o2, d1, d2 = schedule.values(t)
        rate = max(rate, n * max(abs(d1), abs(d2)) + math.sqrt(n) * (abs(o1) + abs(o2)))
    return rate


def _resolve_max_step(
    schedule: PulseSchedule, basis: SymmetricBasis, config: IntegratorConfig
) -> float:
    if config.max_step is not None:
        return config.max_step
    t0, t1 = schedule.window
    span = t1 - t0
    rate = peak_rate(schedule, basis)
    if rate <= 0.0:
        return 0.1 * span
    return 0.1 * min(span, 1.0 / rate)


def propagate(
    schedule: PulseSchedule,
    state: StateVector,
    config: IntegratorConfig | None = None,
    decay: DecayParams | None = None,
    sample_times: np.ndarray | None = None,
) -> Trajectory:
    """Propagate a collective state across the schedule window."""
    config = config or IntegratorConfig()
    decay = decay or DecayParams()
    basis = state.basis
    t0, t1 = schedule.window
    if sample_times is None:
        sample_times = np.linspace(t0, t1, config.samples)
    else:
        sample_times = np.sort(np.asarray(sample_times, dtype=np.float64))
        if sample_times.size and (sample_times[0] < t0 or sample_times[-1] > t1):
            raise ValueError("sample times must lie inside the schedule window")
    max_step = _resolve_max_step(schedule, basis, config)
    if config.method == "compiled":
        return _propagate_compiled(
            schedule, state, config, decay, sample_times, max_step
        )
    return _propagate_scipy(schedule, state, config, decay, sample_times, max_step)


def _propagate_compiled(schedule, state, config, decay, sample_times, max_step):
    basis = state.basis
    chain = ChainHamiltonian(basis)
    tab_o1, tab_o2, tab_d1, tab_d2 = schedule.term_tables()
    t0, t1 = schedule.window
    ys, y_final, status, n_steps, n_rhs = _integrator.integrate(
        float(t0),
        float(t1),
        np.ascontiguousarray(state.amplitudes, dtype=np.complex128),
        float(config.rtol),
        float(config.atol),
        float(max_step),
        tab_o1,
        tab_o2,
        tab_d1,
        tab_d2,
        chain.w1,
        chain.w2,
        chain.n_a,
        chain.n_b,
        float(decay.rydberg_rate),
        sample_times,
    )
    if status != _integrator.STATUS_OK:
        raise IntegrationError(
            f"compiled integrator failed with status {status} after {n_steps} steps"
        )
    return Trajectory(
        basis=basis,
        times=sample_times,
        states=ys,
        final=StateVector(basis, y_final),
        n_steps=int(n_steps),
        n_rhs=int(n_rhs),
    )


def _propagate_scipy(schedule, state, config, decay, sample_times, max_step):
    from scipy.integrate import solve_ivp

    basis = state.basis
    chain = ChainHamiltonian(basis)
    gamma = decay.rydberg_rate
    mask = basis.rydberg_mask()

    def rhs(t, y):
        h = chain.assemble_at(schedule, t)
        dy = -1j * (h @ y)
        if gamma > 0.0:
            dy[mask] -= 0.5 * gamma * y[mask]
        return dy

    t0, t1 = schedule.window
    # evaluation grid must end at t1 so the final state is the window edge
    t_eval = sample_times
    if t_eval.size == 0 or t_eval[-1] < t1:
        t_eval = np.append(t_eval, t1)
    sol = solve_ivp(
        rhs,
        (t0, t1),
        np.asarray(state.amplitudes, dtype=np.complex128),
        method="DOP853",
        t_eval=t_eval,
        rtol=config.rtol,
        atol=config.atol,
        max_step=max_step,
    )
    if not sol.success:
        raise IntegrationError(f"solve_ivp failed: {sol.message}")
    return Trajectory(
        basis=basis,
        times=sample_times,
        states=sol.y.T[: sample_times.size].copy(),
        final=StateVector(basis, sol.y[:, -1].copy()),
        n_steps=int(sol.t.size),
        n_rhs=int(sol.nfev),
    )


def propagator_matrix(
    schedule: PulseSchedule,
    basis: SymmetricBasis,
    config: IntegratorConfig | None = None,
    decay: DecayParams | None = None,
) -> np.ndarray:
    """Full propagator over the window, one basis column at a time."""
    config = config or IntegratorConfig()
    dim = basis.dim
    t0, t1 = schedule.window
    endpoints = np.array([t0, t1])
    u = np.empty((dim, dim), dtype=np.complex128)
    for j in range(dim):
        amps = np.zeros(dim, dtype=np.complex128)
        amps[j] = 1.0
        traj = propagate(
            schedule, StateVector(basis, amps), config, decay, sample_times=endpoints
        )
        u[:, j] = traj.final.amplitudes
    return u


def success_probability(trajectory: Trajectory) -> float:
    """Probability that no decay event interrupted the run."""
    return trajectory.final.norm2
