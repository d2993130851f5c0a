"""Parameter sweeps, minimum-area search, and power-law scaling fits.

The sweep engine evaluates the branch-splitting step or the full three-step
entangling chain over a one-dimensional parameter grid, emitting one row per
point with key populations, fidelity, and the decay-rate-normalized
adiabaticity budget.  The area search exploits the measured structure of the
fidelity landscape: success turns on sharply above a critical pulse area,
plateaus, and degrades again at very large area, so bisection is confined to
the first success plateau.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .propagator import IntegratorConfig, DecayParams
from .protocols import (
    ISOLATED_W,
    SUPERPOSITION_TRANSFER,
    WParams,
    adiabaticity_metric,
    ghz_overlap,
    ghz_protocol,
    prepare_superposition,
    superposition_transfer,
)

SWEEPABLE = ("tau_over_T", "omega_m_T", "delta_T", "n_atoms")
OBSERVABLES = ("step2_populations", "ghz_fidelity")

# search-phase tolerances: population-level accuracy is ample for bracketing
COARSE = IntegratorConfig(rtol=1e-6, atol=1e-8)
VERIFY = IntegratorConfig(rtol=1e-8, atol=1e-10)


class SweepError(ValueError):
    """Raised for invalid sweep specifications or unbracketed searches."""


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep: which knob, over which grid, around which point.

    base holds the branch-transfer parameters; the swept field overrides the
    matching entry per grid point.  observable selects how far the chain
    runs: "step2_populations" stops after the branch transfer (the
    robustness-plateau view), "ghz_fidelity" runs all three steps.
    """

    parameter: str
    grid: tuple[float, ...]
    n_atoms: int = 5
    base: WParams = SUPERPOSITION_TRANSFER
    isolation: WParams = ISOLATED_W
    observable: str = "step2_populations"
    prepare_omega: float = 125.0
    rap_variant: str = "resonant_half_pi"
    gamma: float = 0.0
    config: IntegratorConfig = VERIFY

    def __post_init__(self) -> None:
        if self.parameter not in SWEEPABLE:
            raise SweepError(f"unknown sweep parameter {self.parameter!r}")
        if self.observable not in OBSERVABLES:
            raise SweepError(f"unknown observable {self.observable!r}")
        if len(self.grid) == 0:
            raise SweepError("empty sweep grid")
        diffs = np.diff(np.asarray(self.grid, dtype=float))
        if len(self.grid) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise SweepError("sweep grid must be strictly monotone")
        if self.n_atoms < 2:
            raise SweepError("n_atoms must be >= 2")
        if self.gamma < 0:
            raise SweepError("gamma must be >= 0")

    def point(self, value: float) -> tuple[int, WParams]:
        """(n_atoms, transfer params) with the swept entry replaced."""
        if self.parameter == "tau_over_T":
            return self.n_atoms, replace(self.base, tau=float(value))
        if self.parameter == "omega_m_T":
            return self.n_atoms, replace(self.base, omega_max=float(value))
        if self.parameter == "delta_T":
            return self.n_atoms, replace(self.base, delta=float(value))
        return int(value), self.base


@dataclass(frozen=True)
class SweepRow:
    value: float
    n_atoms: int
    omega_m_T: float
    delta_T: float
    tau_over_T: float
    p_g0: float
    p_gN: float
    p_r_last: float
    ghz_fidelity: float
    branch_phase: float
    norm2: float
    adiabaticity_per_gamma: float
    status: str = "ok"


CSV_COLUMNS = (
    "value",
    "n_atoms",
    "omega_m_T",
    "delta_T",
    "tau_over_T",
    "p_g0",
    "p_gN",
    "p_r_last",
    "ghz_fidelity",
    "branch_phase",
    "norm2",
    "adiabaticity_per_gamma",
    "status",
)


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepRow, ...]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])

    def write_csv(self, path: str | Path) -> None:
        """Deterministic CSV: repr floats, grid order, no timestamps."""
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            cells = []
            for name in CSV_COLUMNS:
                x = getattr(row, name)
                cells.append(str(x) if isinstance(x, (str, int)) else repr(float(x)))
            lines.append(",".join(cells))
        Path(path).write_text("\n".join(lines) + "\n")


def read_sweep_csv(path: str | Path) -> tuple[SweepRow, ...]:
    """Read rows written by SweepResult.write_csv (round-trip exact)."""
    lines = Path(path).read_text().splitlines()
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise SweepError(f"not a sweep CSV: {path}")
    rows = []
    for line in lines[1:]:
        cells = line.split(",", maxsplit=len(CSV_COLUMNS) - 1)
        kwargs = {}
        for name, cell in zip(CSV_COLUMNS, cells):
            if name == "n_atoms":
                kwargs[name] = int(cell)
            elif name == "status":
                kwargs[name] = cell
            else:
                kwargs[name] = float(cell)
        rows.append(SweepRow(**kwargs))
    return tuple(rows)


def _evaluate_point(spec: SweepSpec, value: float) -> SweepRow:
    n_atoms, params = spec.point(value)
    decay = DecayParams(rydberg_rate=spec.gamma) if spec.gamma > 0 else None
    budget = adiabaticity_metric(params.schedule(), 1.0)
    if spec.observable == "ghz_fidelity":
        budget += adiabaticity_metric(spec.isolation.schedule(), 1.0)
    try:
        if spec.observable == "step2_populations":
            prep = prepare_superposition(
                n_atoms,
                omega_max=spec.prepare_omega,
                variant=spec.rap_variant,
                config=spec.config,
                decay=decay,
            )
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                result = superposition_transfer(
                    prep.final, params, config=spec.config, decay=decay
                )
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                result = ghz_protocol(
                    n_atoms,
                    transfer=params,
                    isolation=spec.isolation,
                    rap_variant=spec.rap_variant,
                    prepare_omega=spec.prepare_omega,
                    config=spec.config,
                    decay=decay,
                )
    except Exception as exc:  # per-point failures stay in-row, sweep continues
        return SweepRow(
            value=float(value),
            n_atoms=n_atoms,
            omega_m_T=params.omega_max,
            delta_T=params.delta,
            tau_over_T=params.tau,
            p_g0=math.nan,
            p_gN=math.nan,
            p_r_last=math.nan,
            ghz_fidelity=math.nan,
            branch_phase=math.nan,
            norm2=math.nan,
            adiabaticity_per_gamma=budget,
            status=f"error: {type(exc).__name__}: {exc}",
        )
    final = result.final
    fid, phase = ghz_overlap(final)
    return SweepRow(
        value=float(value),
        n_atoms=n_atoms,
        omega_m_T=params.omega_max,
        delta_T=params.delta,
        tau_over_T=params.tau,
        p_g0=final.population("g_0"),
        p_gN=final.population(f"g_{n_atoms}"),
        p_r_last=final.population(f"r_{n_atoms - 1}"),
        ghz_fidelity=fid,
        branch_phase=phase,
        norm2=final.norm2,
        adiabaticity_per_gamma=budget,
        status="ok",
    )


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate every grid point; output order always matches the grid.

    Points are independent pure computations, so they may be farmed out to
    a process pool; assembly is order-preserving either way, and a failing
    point is recorded in its row rather than aborting the sweep.
    """
    if workers < 1:
        raise SweepError("workers must be >= 1")
    if workers == 1 or len(spec.grid) == 1:
        rows = tuple(_evaluate_point(spec, v) for v in spec.grid)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(_evaluate_point, [spec] * len(spec.grid), spec.grid))
    return SweepResult(spec=spec, rows=rows)


@dataclass(frozen=True)
class MinAreaResult:
    """Minimum transfer pulse area reaching the fidelity threshold."""

    n_atoms: int
    omega_min: float
    tau_opt: float
    fidelity: float
    threshold: float
    per_tau: dict[float, float]  # tau -> plateau-edge area (inf when absent)

    def as_dict(self) -> dict:
        return {
            "n_atoms": self.n_atoms,
            "omega_min": self.omega_min,
            "tau_opt": self.tau_opt,
            "fidelity": self.fidelity,
            "threshold": self.threshold,
            "per_tau": {str(k): v for k, v in sorted(self.per_tau.items())},
        }


def _ghz_fidelity_at(
    n_atoms: int,
    omega: float,
    tau: float,
    base: WParams,
    isolation: WParams,
    config: IntegratorConfig,
) -> float:
    from .protocols import RegimeError

    params = replace(base, omega_max=omega, tau=tau)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = ghz_protocol(
                n_atoms, transfer=params, isolation=isolation, config=config
            )
    except RegimeError:
        # outside the transfer's hard regime gate: counts as failed, not fatal
        return 0.0
    return result.ghz_fidelity


def _plateau_edge(
    n_atoms: int,
    tau: float,
    lo: float,
    hi: float,
    threshold: float,
    rel_tol: float,
    base: WParams,
    isolation: WParams,
    config: IntegratorConfig,
    give_up_above: float = math.inf,
) -> float:
    """Left edge of the first success plateau in pulse area, or inf.

    Geometric up-scan from lo to the first success, then bisection between
    the last failure and that success.  The up-scan step (x1.2) is smaller
    than any observed plateau width, so the first success cannot skip over
    a plateau onto the large-area degradation side.
    """

    def ok(omega: float) -> bool:
        return (
            _ghz_fidelity_at(n_atoms, omega, tau, base, isolation, config) >= threshold
        )

    omega = lo
    last_fail = None
    while omega <= hi:
        if omega > give_up_above:
            return math.inf
        if ok(omega):
            break
        last_fail = omega
        omega *= 1.2
    else:
        return math.inf
    if last_fail is None:
        # success at the range start: the edge is below lo; probe down a bit
        probe = lo
        for _ in range(3):
            probe /= 1.2
            if not ok(probe):
                last_fail = probe
                break
        else:
            return lo
    lo_edge, hi_edge = last_fail, omega
    while (hi_edge - lo_edge) > rel_tol * hi_edge:
        mid = 0.5 * (lo_edge + hi_edge)
        if ok(mid):
            hi_edge = mid
        else:
            lo_edge = mid
    return hi_edge


def find_min_area(
    n_atoms: int,
    threshold: float = 0.95,
    search_range: tuple[float, float] = (40.0, 600.0),
    rel_tol: float = 0.01,
    taus: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7),
    refine: bool = True,
    base: WParams = SUPERPOSITION_TRANSFER,
    isolation: WParams = ISOLATED_W,
    config: IntegratorConfig = COARSE,
    verify_config: IntegratorConfig = VERIFY,
) -> MinAreaResult:
    """Smallest transfer-step pulse area whose GHZ fidelity meets the threshold.

    The delay is optimized over a coarse grid, then refined once by a
    golden-section probe around the best grid point.  The search runs at
    coarse integrator tolerance; the winning point is re-verified at the
    tight tolerance and nudged up a step if the coarse edge was optimistic.
    """
    if not 0.0 < threshold < 1.0:
        raise SweepError("threshold must be in (0, 1)")
    lo, hi = search_range
    if not 0.0 < lo < hi:
        raise SweepError(f"invalid search range {search_range}")
    per_tau: dict[float, float] = {}
    best_tau, best_area = math.nan, math.inf
    # the up-scan ladder overshoots an edge by up to its step factor, so a
    # tau is abandoned only once its rungs exceed best * 1.2 (no smaller
    # edge can hide above that)
    prune = 1.2 * (1.0 + rel_tol)
    for tau in taus:
        edge = _plateau_edge(
            n_atoms, tau, lo, hi, threshold, rel_tol, base, isolation, config,
            give_up_above=best_area * prune,
        )
        per_tau[tau] = edge
        if edge < best_area:
            best_tau, best_area = tau, edge
    if not math.isfinite(best_area):
        raise SweepError(
            f"no pulse area in [{lo}, {hi}] reaches fidelity {threshold} "
            f"for N={n_atoms} over taus {taus}"
        )
    if refine and len(taus) > 1:
        step = min(abs(taus[i + 1] - taus[i]) for i in range(len(taus) - 1))
        golden = 0.5 * (3.0 - math.sqrt(5.0))
        for flank in (-1.0, 1.0):
            tau_probe = best_tau + flank * golden * step
            if tau_probe <= 0 or any(abs(tau_probe - t) < 1e-9 for t in taus):
                continue
            edge = _plateau_edge(
                n_atoms, tau_probe, lo, hi, threshold, rel_tol, base, isolation,
                config, give_up_above=best_area * prune,
            )
            per_tau[round(tau_probe, 6)] = edge
            if edge < best_area:
                best_tau, best_area = tau_probe, edge
    # re-verify at tight tolerance; the coarse edge can sit a hair early
    fid = _ghz_fidelity_at(n_atoms, best_area, best_tau, base, isolation, verify_config)
    bumps = 0
    while fid < threshold and bumps < 4:
        best_area *= 1.0 + rel_tol
        fid = _ghz_fidelity_at(
            n_atoms, best_area, best_tau, base, isolation, verify_config
        )
        bumps += 1
    if fid < threshold:
        raise SweepError(
            f"verification failed: fidelity {fid:.4f} < {threshold} at "
            f"area {best_area:.1f}, tau {best_tau}"
        )
    return MinAreaResult(
        n_atoms=n_atoms,
        omega_min=best_area,
        tau_opt=best_tau,
        fidelity=fid,
        threshold=threshold,
        per_tau=per_tau,
    )


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power law through (N, area) points on log-log axes."""

    points: tuple[tuple[float, float], ...]
    alpha: float
    prefactor: float
    residual: float
    local_slopes: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "points": [list(p) for p in self.points],
            "alpha": self.alpha,
            "prefactor": self.prefactor,
            "residual": self.residual,
            "local_slopes": list(self.local_slopes),
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")


def fit_scaling(points) -> ScalingFit:
    """Fit area ~ C * N^alpha; also report slopes between consecutive points.

    The local slopes exhibit how the effective exponent drifts with N; the
    global alpha comes from the least-squares line on log-log axes.
    """
    pts = tuple((float(n), float(a)) for n, a in points)
    if len(pts) < 3:
        raise SweepError("scaling fit needs at least 3 points")
    if any(n <= 0 or a <= 0 for n, a in pts):
        raise SweepError("scaling fit needs positive values")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    if np.ptp(x) == 0.0:
        raise SweepError("degenerate abscissae: all N equal")
    (alpha, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(math.sqrt(res[0])) if len(res) else 0.0
    slopes = tuple(float(s) for s in np.diff(y) / np.diff(x))
    return ScalingFit(
        points=pts,
        alpha=float(alpha),
        prefactor=float(math.exp(intercept)),
        residual=residual,
        local_slopes=slopes,
    )
