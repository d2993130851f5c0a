"""Collective chain Hamiltonian and its dressed-mode analysis.

In the blockaded symmetric subspace the drive couples the 2N+1 collective
states into a single alternating chain

    g_0 -- r_0 -- g_1 -- r_1 -- ... -- r_{N-1} -- g_N

with matrix elements <r_m|H|g_m> = omega1*sqrt(N-m) and
<r_{m-1}|H|g_m> = omega2*sqrt(m), and diagonal energies delta1*n_a +
delta2*n_b.  Rotating the two lower-level modes by the mixing angle
theta = arctan(omega1/omega2) splits them into a dark mode, decoupled from
the excited state, and a bright mode coupled with strength
omega0 = sqrt(omega1^2 + omega2^2).  With opposite detunings
(delta1 = -delta2 = delta) each manifold of conserved bright-plus-excited
number M reduces to a two-level system; its adiabatic propagator has the
closed form implemented by :func:`analytic_propagator`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import SymmetricBasis
from .pulses import PulseSchedule


class DegenerateFrameError(ValueError):
    """Dark/bright decomposition requested where omega1 = omega2 = 0."""


class TrackingWarning(UserWarning):
    """Eigenbranch continuation met a near-degenerate, ambiguous crossing."""


# ---------------------------------------------------------------------------
# chain assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainHamiltonian:
    """Precomputed coupling structure of the collective chain."""

    basis: SymmetricBasis
    w1: np.ndarray = field(init=False, repr=False)  # sqrt(N-m), g_m <-> r_m
    w2: np.ndarray = field(init=False, repr=False)  # sqrt(m),   g_m <-> r_{m-1}
    n_a: np.ndarray = field(init=False, repr=False)
    n_b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.basis.n_atoms
        object.__setattr__(self, "w1", np.sqrt(np.arange(n, 0, -1, dtype=np.float64)))
        object.__setattr__(self, "w2", np.sqrt(np.arange(1, n + 1, dtype=np.float64)))
        object.__setattr__(self, "n_a", self.basis.a_counts())
        object.__setattr__(self, "n_b", self.basis.b_counts())

    def assemble(
        self, omega1: float, omega2: float, delta1: float, delta2: float
    ) -> np.ndarray:
        """Dense real-symmetric matrix in the g_0..g_N, r_0..r_{N-1} ordering."""
        basis = self.basis
        n = basis.n_atoms
        h = np.zeros((basis.dim, basis.dim), dtype=np.float64)
        h[np.diag_indices_from(h)] = delta1 * self.n_a + delta2 * self.n_b
        for m in range(n):
            g, r = basis.index_g(m), basis.index_r(m)
            h[g, r] = h[r, g] = omega1 * self.w1[m]
        for m in range(1, n + 1):
            g, r = basis.index_g(m), basis.index_r(m - 1)
            h[g, r] = h[r, g] = omega2 * self.w2[m - 1]
        return h

    def assemble_at(self, schedule: PulseSchedule, t: float) -> np.ndarray:
        return self.assemble(*schedule.values(t))

    def interleaved_permutation(self) -> np.ndarray:
        """Ordering g_0, r_0, g_1, r_1, ..., g_N that makes the chain tridiagonal."""
        n = self.basis.n_atoms
        perm = []
        for m in range(n):
            perm.append(self.basis.index_g(m))
            perm.append(self.basis.index_r(m))
        perm.append(self.basis.index_g(n))
        return np.array(perm, dtype=np.intp)

    def bands(self, omega1: float, omega2: float, delta1: float, delta2: float):
        """(diagonal, subdiagonal) of the chain in interleaved ordering."""
        h = self.assemble(omega1, omega2, delta1, delta2)
        perm = self.interleaved_permutation()
        hp = h[np.ix_(perm, perm)]
        return np.diag(hp).copy(), np.diag(hp, k=-1).copy()


# ---------------------------------------------------------------------------
# dark/bright decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DressedFrame:
    """Pointwise dark/bright frame of the two-color drive.

    theta is the mode mixing angle, omega0 the bright coupling strength.
    common_mode, difference_mode and dark_bright_coupling are the three
    detuning coefficients of the rotated Hamiltonian:
    (delta1+delta2)/2, (delta1-delta2)/2*cos(2 theta) and
    (delta1-delta2)/2*sin(2 theta).  beta is the adiabatic rotation angle of
    the bright/excited two-level system, with
    tan(beta) = omega0/(delta_eff*cos 2 theta) folded into [0, pi], and
    omega_bar the corresponding gap scale.
    """

    theta: float
    omega0: float
    beta: float
    omega_bar: float
    common_mode: float
    difference_mode: float
    dark_bright_coupling: float


def dressed_frame(
    omega1: float, omega2: float, delta1: float, delta2: float
) -> DressedFrame:
    omega0 = math.hypot(omega1, omega2)
    if omega0 == 0.0:
        raise DegenerateFrameError("mixing angle undefined: omega1 = omega2 = 0")
    theta = math.atan2(omega1, omega2)
    cos2t = math.cos(2.0 * theta)
    sin2t = math.sin(2.0 * theta)
    d_eff = 0.5 * (delta1 - delta2)
    beta = math.atan2(omega0, d_eff * cos2t)
    return DressedFrame(
        theta=theta,
        omega0=omega0,
        beta=beta,
        omega_bar=math.hypot(omega0, d_eff * cos2t),
        common_mode=0.5 * (delta1 + delta2),
        difference_mode=d_eff * cos2t,
        dark_bright_coupling=d_eff * sin2t,
    )


def dark_bright_decomposition(schedule: PulseSchedule, t: float) -> DressedFrame:
    return dressed_frame(*schedule.values(t))


def frame_on_grid(schedule: PulseSchedule, ts: np.ndarray) -> dict[str, np.ndarray]:
    """Frame quantities on a grid, freezing theta across degenerate points.

    Wherever omega0 vanishes the mixing angle keeps its last well-defined
    value (forward filled; leading gaps are back filled).  All-zero drive has
    no frame and raises.
    """
    ts = np.asarray(ts, dtype=float)
    vals = [schedule.values(t) for t in ts]
    o1 = np.array([v[0] for v in vals])
    o2 = np.array([v[1] for v in vals])
    d1 = np.array([v[2] for v in vals])
    d2 = np.array([v[3] for v in vals])
    omega0 = np.hypot(o1, o2)
    defined = omega0 > 0.0
    if not defined.any():
        raise DegenerateFrameError("drive vanishes on the entire grid")
    theta = np.where(defined, np.arctan2(o1, o2), np.nan)
    idx = np.where(defined, np.arange(ts.size), -1)
    idx = np.maximum.accumulate(idx)
    first = np.argmax(defined)
    idx[idx < 0] = int(first + np.argmax(defined[first:]))
    theta = theta[np.maximum(idx, 0)]
    d_eff = 0.5 * (d1 - d2)
    cos2t = np.cos(2.0 * theta)
    sin2t = np.sin(2.0 * theta)
    return {
        "omega1": o1,
        "omega2": o2,
        "delta1": d1,
        "delta2": d2,
        "omega0": omega0,
        "theta": theta,
        "beta": np.arctan2(omega0, d_eff * cos2t),
        "omega_bar": np.hypot(omega0, d_eff * cos2t),
        "common_mode": 0.5 * (d1 + d2),
        "difference_mode": d_eff * cos2t,
        "dark_bright_coupling": d_eff * sin2t,
    }


def theta_rate(schedule: PulseSchedule, t: float) -> float:
    """d theta/dt from the analytic envelope derivatives; 0 where undefined."""
    o1, o2, _, _ = schedule.values(t)
    do1, do2, _, _ = schedule.derivatives(t)
    denom = o1 * o1 + o2 * o2
    if denom == 0.0:
        return 0.0
    return (do1 * o2 - o1 * do2) / denom


# ---------------------------------------------------------------------------
# conserved-manifold two-level model and its adiabatic propagator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticModel:
    """Two-level reduction on one manifold of conserved excitation number.

    M counts bright bosons plus the excited-state population; it is conserved
    once the dark-bright coupling is dropped and delta1 = -delta2.  Basis
    order is (excited with M-1 bright bosons, M bright bosons); the spin
    operators below act in that basis.
    """

    n_atoms: int
    manifold: int  # M = 1 .. N
    delta: float  # delta1 = -delta2 = delta

    def __post_init__(self) -> None:
        if not 1 <= self.manifold <= self.n_atoms:
            raise ValueError(
                f"manifold must be in 1..{self.n_atoms}, got {self.manifold}"
            )

    @property
    def j1(self) -> np.ndarray:
        return np.array([[0.0, 0.5], [0.5, 0.0]], dtype=np.complex128)

    @property
    def j2(self) -> np.ndarray:
        return np.array([[0.0, 0.5j], [-0.5j, 0.0]], dtype=np.complex128)

    @property
    def j3(self) -> np.ndarray:
        return np.array([[0.5, 0.0], [0.0, -0.5]], dtype=np.complex128)

    def coupling(self, omega0: float) -> float:
        """Matrix element omega0*sqrt(M) between the two manifold states."""
        return math.sqrt(self.manifold) * omega0

    def hamiltonian(
        self, omega1: float, omega2: float, delta1: float, delta2: float
    ) -> np.ndarray:
        """Manifold Hamiltonian delta*cos(2 theta)*J3 + 2*sqrt(M)*omega0*J1."""
        omega0 = math.hypot(omega1, omega2)
        if omega0 > 0.0:
            cos2t = math.cos(2.0 * math.atan2(omega1, omega2))
        else:
            cos2t = 1.0  # drive off: bare detuning splitting, sign immaterial here
        d_eff = 0.5 * (delta1 - delta2)
        g = self.coupling(omega0)
        return np.array(
            [[0.5 * d_eff * cos2t, g], [g, -0.5 * d_eff * cos2t]], dtype=np.complex128
        )

    def hamiltonian_at(self, schedule: PulseSchedule, t: float) -> np.ndarray:
        return self.hamiltonian(*schedule.values(t))


def manifold_angles(
    model: AnalyticModel, schedule: PulseSchedule, ts: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(beta_M, omega_bar_M) on a grid, with the manifold-scaled coupling.

    Diagonalizing the manifold Hamiltonian exactly gives
    tan(beta_M) = 2*sqrt(M)*omega0 / (delta*cos 2 theta) and gap
    omega_bar_M = sqrt(4*M*omega0^2 + delta^2 cos^2 2 theta).
    """
    fr = frame_on_grid(schedule, ts)
    y = 2.0 * math.sqrt(model.manifold) * fr["omega0"]
    x = fr["difference_mode"]
    if y[0] == 0.0 and x[0] == 0.0:
        raise DegenerateFrameError("beta unresolved at window start")
    return np.arctan2(y, x), np.hypot(y, x)


def _rot(beta: float) -> np.ndarray:
    c, s = math.cos(0.5 * beta), math.sin(0.5 * beta)
    return np.array([[c, s], [-s, c]], dtype=np.complex128)


def analytic_propagator(
    model: AnalyticModel,
    schedule: PulseSchedule,
    t: float | None = None,
    grid_points: int = 4001,
) -> np.ndarray:
    """Closed-form adiabatic propagator on one conserved manifold.

    U(t) = R(beta(t)) . exp(-i J3 Phi(t)) . R(beta(t0))^T with
    R(beta) = exp(-i beta J2) and dynamical phase Phi = integral of
    omega_bar_M.  Exact in the limit of slow beta; unitary by construction.
    """
    from scipy.integrate import simpson

    t0, t1 = schedule.window
    if t is None:
        t = t1
    if not t0 <= t <= t1:
        raise ValueError(f"t={t} outside schedule window {schedule.window}")
    ts = np.linspace(t0, t, grid_points)
    beta, omega_bar = manifold_angles(model, schedule, ts)
    phi = float(simpson(omega_bar, x=ts))
    phase = np.array(
        [[np.exp(-0.5j * phi), 0.0], [0.0, np.exp(0.5j * phi)]], dtype=np.complex128
    )
    return _rot(float(beta[-1])) @ phase @ _rot(float(beta[0])).T


def dynamical_phase(
    model: AnalyticModel, schedule: PulseSchedule, grid_points: int = 4001
) -> float:
    from scipy.integrate import simpson

    ts = np.linspace(*schedule.window, grid_points)
    _, omega_bar = manifold_angles(model, schedule, ts)
    return float(simpson(omega_bar, x=ts))


def nonadiabatic_defect(
    model: AnalyticModel, schedule: PulseSchedule, grid_points: int = 4001
) -> float:
    """First-order estimate of leakage out of the followed dressed state.

    integral of (d beta/dt)^2 / (4 omega_bar) dt: the squared local mixing
    rate beta_dot/(2 omega_bar) accumulated over one gap period at a time.
    Halves when the schedule is dilated by two.
    """
    from scipy.integrate import simpson

    ts = np.linspace(*schedule.window, grid_points)
    beta, omega_bar = manifold_angles(model, schedule, ts)
    beta = np.unwrap(beta)
    dbeta = np.gradient(beta, ts)
    return float(simpson(dbeta**2 / (4.0 * omega_bar), x=ts))


# ---------------------------------------------------------------------------
# eigenstructure diagnostics
# ---------------------------------------------------------------------------


@dataclass
class EigenTrack:
    """Continuously ordered instantaneous eigensystem along a schedule."""

    times: np.ndarray
    values: np.ndarray  # (n_t, dim), column k follows one branch
    vectors: np.ndarray  # (n_t, dim, dim), [:, :, k] follows branch k
    ambiguous: list[float]  # times where branch matching was not decisive


def eigen_tracking(
    chain: ChainHamiltonian, schedule: PulseSchedule, ts: np.ndarray
) -> EigenTrack:
    """Track instantaneous eigenbranches by maximal-overlap continuation.

    Branches are matched between neighboring grid points by a one-to-one
    assignment maximizing |<v_prev|v_next>|, with phases fixed so the matched
    overlap is real positive.  Points where the best match is weak or the
    local gap is below 1e-10 of the spectral scale are reported as ambiguous
    and raised as :class:`TrackingWarning`.
    """
    from scipy.optimize import linear_sum_assignment

    ts = np.asarray(ts, dtype=float)
    dim = chain.basis.dim
    values = np.empty((ts.size, dim))
    vectors = np.empty((ts.size, dim, dim), dtype=np.complex128)
    ambiguous: list[float] = []
    prev = None
    for k, t in enumerate(ts):
        w, v = np.linalg.eigh(chain.assemble_at(schedule, t))
        if prev is not None:
            overlap = np.abs(prev.conj().T @ v)
            row, col = linear_sum_assignment(-overlap)
            order = np.empty(dim, dtype=np.intp)
            order[row] = col
            v = v[:, order]
            w = w[order]
            scale = max(np.max(np.abs(w)), 1e-300)
            matched = np.abs(np.sum(prev.conj() * v, axis=0))
            gaps = np.min(np.abs(np.subtract.outer(w, w)) + np.eye(dim) * 1e300, axis=1)
            if np.any(matched < math.sqrt(0.5)) or np.any(gaps < 1e-10 * scale):
                ambiguous.append(float(t))
            phase = np.sum(prev.conj() * v, axis=0)
            phase = np.where(np.abs(phase) > 0, phase / np.abs(phase), 1.0)
            v = v * phase.conj()
        values[k] = w
        vectors[k] = v
        prev = v
    if ambiguous:
        warnings.warn(
            f"eigenbranch matching ambiguous at {len(ambiguous)} grid points",
            TrackingWarning,
            stacklevel=2,
        )
    return EigenTrack(times=ts, values=values, vectors=vectors, ambiguous=ambiguous)
