"""Pulse envelopes and two-color schedules.

All times are measured in units of the envelope width T (T = 1 internally);
Rabi amplitudes and detunings are in 1/T.  A schedule carries four channels:
the two couplings omega1 (a <-> r) and omega2 (b <-> r) and the two level
detunings delta1, delta2.  Channel values are sums of primitive envelope
terms, each of which knows its value, its time derivative, and a flat numeric
encoding consumed by the compiled integrator core.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# term kind codes shared with the compiled right-hand side
KIND_CONST = 0
KIND_GAUSS = 1
KIND_RAMP = 2
KIND_RECT = 3
KIND_GAUSS_OFF = 4
KIND_GAUSS_ON = 5

TERM_WIDTH = 6  # kind + up to five parameters


class PulseError(ValueError):
    """Raised for invalid pulse or schedule parameters."""


def _smoothstep(x: float) -> float:
    """Cosine step rising 0 -> 1 over x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return 0.5 * (1.0 - math.cos(math.pi * x))


def _smoothstep_deriv(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return 0.5 * math.pi * math.sin(math.pi * x)


@dataclass(frozen=True)
class EnvelopeTerm:
    """One additive envelope primitive.

    kind KIND_CONST:     p = (value,)
    kind KIND_GAUSS:     p = (amp, center, width)
    kind KIND_RAMP:      p = (v_start, t_start, v_end, t_end), clamped outside
    kind KIND_RECT:      p = (amp, t_on, t_off, edge)  cosine edges centered
                         on t_on/t_off, so the area equals amp*(t_off - t_on)
    kind KIND_GAUSS_OFF: p = (amp, center, width, t_cut, edge)  gaussian times
                         a falling cosine step over [t_cut, t_cut + edge]
    kind KIND_GAUSS_ON:  same, rising step (time reverse of GAUSS_OFF)
    """

    kind: int
    p: tuple[float, ...]

    def value(self, t: float) -> float:
        k, p = self.kind, self.p
        if k == KIND_CONST:
            return p[0]
        if k == KIND_GAUSS:
            u = (t - p[1]) / p[2]
            return p[0] * math.exp(-u * u)
        if k == KIND_RAMP:
            v0, t0, v1, t1 = p
            if t <= t0:
                return v0
            if t >= t1:
                return v1
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        if k == KIND_RECT:
            amp, t_on, t_off, e = p
            rise = _smoothstep((t - (t_on - 0.5 * e)) / e)
            fall = _smoothstep(((t_off + 0.5 * e) - t) / e)
            return amp * rise * fall
        if k == KIND_GAUSS_OFF:
            amp, c, w, t_cut, e = p
            u = (t - c) / w
            return amp * math.exp(-u * u) * _smoothstep((t_cut + e - t) / e)
        if k == KIND_GAUSS_ON:
            amp, c, w, t_cut, e = p
            u = (t - c) / w
            return amp * math.exp(-u * u) * _smoothstep((t - t_cut + e) / e)
        raise PulseError(f"unknown term kind {k}")

    def derivative(self, t: float) -> float:
        k, p = self.kind, self.p
        if k == KIND_CONST:
            return 0.0
        if k == KIND_GAUSS:
            u = (t - p[1]) / p[2]
            return p[0] * math.exp(-u * u) * (-2.0 * u / p[2])
        if k == KIND_RAMP:
            v0, t0, v1, t1 = p
            if t0 < t < t1:
                return (v1 - v0) / (t1 - t0)
            return 0.0
        if k == KIND_RECT:
            amp, t_on, t_off, e = p
            xr = (t - (t_on - 0.5 * e)) / e
            xf = ((t_off + 0.5 * e) - t) / e
            return amp * (
                _smoothstep_deriv(xr) / e * _smoothstep(xf)
                - _smoothstep(xr) * _smoothstep_deriv(xf) / e
            )
        if k == KIND_GAUSS_OFF:
            amp, c, w, t_cut, e = p
            u = (t - c) / w
            g = math.exp(-u * u)
            x = (t_cut + e - t) / e
            return amp * g * (-2.0 * u / w * _smoothstep(x) - _smoothstep_deriv(x) / e)
        if k == KIND_GAUSS_ON:
            amp, c, w, t_cut, e = p
            u = (t - c) / w
            g = math.exp(-u * u)
            x = (t - t_cut + e) / e
            return amp * g * (-2.0 * u / w * _smoothstep(x) + _smoothstep_deriv(x) / e)
        raise PulseError(f"unknown term kind {k}")

    def reflected(self) -> "EnvelopeTerm":
        """Term whose value at t equals this term's value at -t."""
        k, p = self.kind, self.p
        if k == KIND_CONST:
            return self
        if k == KIND_GAUSS:
            return EnvelopeTerm(k, (p[0], -p[1], p[2]))
        if k == KIND_RAMP:
            v0, t0, v1, t1 = p
            return EnvelopeTerm(k, (v1, -t1, v0, -t0))
        if k == KIND_RECT:
            amp, t_on, t_off, e = p
            return EnvelopeTerm(k, (amp, -t_off, -t_on, e))
        if k == KIND_GAUSS_OFF:
            amp, c, w, t_cut, e = p
            return EnvelopeTerm(KIND_GAUSS_ON, (amp, -c, w, -t_cut, e))
        if k == KIND_GAUSS_ON:
            amp, c, w, t_cut, e = p
            return EnvelopeTerm(KIND_GAUSS_OFF, (amp, -c, w, -t_cut, e))
        raise PulseError(f"unknown term kind {k}")

    def negated(self) -> "EnvelopeTerm":
        k, p = self.kind, self.p
        if k == KIND_CONST:
            return EnvelopeTerm(k, (-p[0],))
        if k == KIND_RAMP:
            v0, t0, v1, t1 = p
            return EnvelopeTerm(k, (-v0, t0, -v1, t1))
        return EnvelopeTerm(k, (-p[0],) + p[1:])

    def row(self) -> list[float]:
        out = [float(self.kind)] + [float(x) for x in self.p]
        out += [0.0] * (TERM_WIDTH - len(out))
        return out


@dataclass(frozen=True)
class GaussianPulse:
    """Gaussian Rabi envelope amp * exp(-((t - center)/width)^2).

    The 1/e half width is the pulse width T.  Five widths from the center the
    envelope is below 1.4e-11 of the peak, which is where schedule windows
    are truncated.
    """

    amplitude: float  # peak Rabi amplitude, 1/T
    center: float  # peak time, T
    width: float = 1.0  # 1/e half width, T

    def __post_init__(self) -> None:
        if self.amplitude < 0.0:
            raise PulseError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.width <= 0.0:
            raise PulseError(f"width must be > 0, got {self.width}")

    def term(self) -> EnvelopeTerm:
        return EnvelopeTerm(KIND_GAUSS, (self.amplitude, self.center, self.width))

    def value(self, t):
        u = (np.asarray(t, dtype=float) - self.center) / self.width
        return self.amplitude * np.exp(-(u**2))


@dataclass(frozen=True)
class ChirpRamp:
    """Linear detuning ramp, clamped to its endpoint values outside the ramp."""

    start_value: float
    end_value: float
    t_start: float
    t_end: float

    def __post_init__(self) -> None:
        if not self.t_end > self.t_start:
            raise PulseError("ramp requires t_end > t_start")

    def term(self) -> EnvelopeTerm:
        return EnvelopeTerm(
            KIND_RAMP, (self.start_value, self.t_start, self.end_value, self.t_end)
        )


@dataclass(frozen=True)
class PulseSchedule:
    """Four-channel drive over a finite time window."""

    omega1: tuple[EnvelopeTerm, ...]
    omega2: tuple[EnvelopeTerm, ...]
    delta1: tuple[EnvelopeTerm, ...]
    delta2: tuple[EnvelopeTerm, ...]
    window: tuple[float, float]
    time_scale: float = 1.0  # envelope width T, sets integrator step caps

    def __post_init__(self) -> None:
        t0, t1 = self.window
        if not t1 > t0:
            raise PulseError(f"empty window {self.window}")
        if self.time_scale <= 0.0:
            raise PulseError("time_scale must be > 0")

    def _channel(self, terms: tuple[EnvelopeTerm, ...], t: float) -> float:
        return sum(term.value(t) for term in terms)

    def values(self, t: float) -> tuple[float, float, float, float]:
        return (
            self._channel(self.omega1, t),
            self._channel(self.omega2, t),
            self._channel(self.delta1, t),
            self._channel(self.delta2, t),
        )

    def derivatives(self, t: float) -> tuple[float, float, float, float]:
        return (
            sum(term.derivative(t) for term in self.omega1),
            sum(term.derivative(t) for term in self.omega2),
            sum(term.derivative(t) for term in self.delta1),
            sum(term.derivative(t) for term in self.delta2),
        )

    def term_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flat float64 encodings of the four channels for the compiled core."""

        def table(terms: tuple[EnvelopeTerm, ...]) -> np.ndarray:
            if not terms:
                return np.zeros((0, TERM_WIDTH), dtype=np.float64)
            return np.array([term.row() for term in terms], dtype=np.float64)

        return table(self.omega1), table(self.omega2), table(self.delta1), table(self.delta2)


def eval_schedule(schedule: PulseSchedule, ts) -> dict[str, np.ndarray]:
    """Channel values on a time grid.  Pure: identical inputs, identical bits."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = {
        "omega1": np.array([schedule._channel(schedule.omega1, t) for t in ts]),
        "omega2": np.array([schedule._channel(schedule.omega2, t) for t in ts]),
        "delta1": np.array([schedule._channel(schedule.delta1, t) for t in ts]),
        "delta2": np.array([schedule._channel(schedule.delta2, t) for t in ts]),
    }
    return out


def make_w_schedule(
    omega_max: float,
    delta: float,
    tau: float,
    width: float = 1.0,
    order: str = "intuitive",
) -> PulseSchedule:
    """Delayed Gaussian pulse pair with opposite static detunings.

    Intuitive order peaks omega1 at -tau and omega2 at +tau; counterintuitive
    order swaps the envelopes.  Detunings are delta1 = +delta, delta2 =
    -delta.  The window extends five widths beyond the outer pulse peaks.
    """
    if omega_max < 0:
        raise PulseError("omega_max must be >= 0")
    if tau < 0:
        raise PulseError("tau must be >= 0")
    if order not in ("intuitive", "counterintuitive"):
        raise PulseError(f"unknown pulse order {order!r}")
    c1, c2 = (-tau, tau) if order == "intuitive" else (tau, -tau)
    half = 5.0 * width + tau
    return PulseSchedule(
        omega1=(GaussianPulse(omega_max, c1, width).term(),),
        omega2=(GaussianPulse(omega_max, c2, width).term(),),
        delta1=(EnvelopeTerm(KIND_CONST, (delta,)),),
        delta2=(EnvelopeTerm(KIND_CONST, (-delta,)),),
        window=(-half, half),
        time_scale=width,
    )


def resonant_half_pi_duration(n_atoms: int, omega_max: float) -> float:
    """Flat-top duration giving an equal g_0/r_0 superposition.

    The collective coupling matrix element is sqrt(N)*omega_max, so the Bloch
    vector turns by 2*sqrt(N)*omega_max*t; a pi/2 turn needs
    sqrt(N)*omega_max*t_p = pi/4.
    """
    if omega_max <= 0:
        raise PulseError("omega_max must be > 0")
    return math.pi / (4.0 * math.sqrt(n_atoms) * omega_max)


def make_half_pi_schedule(
    n_atoms: int, omega_max: float, edge_fraction: float = 0.2, width: float = 1.0
) -> PulseSchedule:
    """Resonant flat-top pulse on omega1 preparing (g_0 - i r_0)/sqrt(2).

    On resonance the Hamiltonian commutes with itself at all times, so only
    the pulse area matters.  The cosine edges keep the area exactly
    omega_max*t_p as long as rise and fall do not overlap, hence the edge is
    a fraction of the pulse duration, not of the envelope width.
    """
    if not 0.0 < edge_fraction <= 1.0:
        raise PulseError("edge_fraction must be in (0, 1]")
    t_p = resonant_half_pi_duration(n_atoms, omega_max)
    e = edge_fraction * t_p
    return PulseSchedule(
        omega1=(EnvelopeTerm(KIND_RECT, (omega_max, 0.0, t_p, e)),),
        omega2=(),
        delta1=(),
        delta2=(),
        window=(-e, t_p + e),
        time_scale=width,
    )


def make_half_chirp_schedule(
    omega_max: float,
    delta_max: float,
    t_cut: float = 0.0,
    width: float = 1.0,
    edge: float = 0.05,
) -> PulseSchedule:
    """Fractional chirped passage terminating at resonance.

    omega1 is a Gaussian centered at t = 0 that is switched off smoothly at
    t_cut (edge duration 0.05 T); delta1 ramps linearly from -delta_max up to
    zero at the pulse center and holds.  Cutting the drive at resonance
    strands the adiabatically followed state in an equal superposition; the
    exact t_cut is tuned by bisection in the protocol layer.
    """
    if delta_max <= 0:
        raise PulseError("delta_max must be > 0")
    e = edge * width
    return PulseSchedule(
        omega1=(EnvelopeTerm(KIND_GAUSS_OFF, (omega_max, 0.0, width, t_cut, e)),),
        omega2=(),
        delta1=(ChirpRamp(-delta_max, 0.0, -5.0 * width, 0.0).term(),),
        delta2=(),
        window=(-5.0 * width, t_cut + e + 0.5 * width),
        time_scale=width,
    )


def make_half_rap_schedule(
    omega_max: float,
    n_atoms: int,
    delta_max: float = 0.0,
    variant: str = "resonant_half_pi",
    width: float = 1.0,
) -> PulseSchedule:
    """Pulse preparing an equal g_0/r_0 superposition, by either route.

    "resonant_half_pi" is the default: exact pulse-area control, no tuning
    needed.  "half_chirp" returns the chirped passage cut at resonance with
    t_cut = 0; the cut time must then be tuned against the target population
    (see protocols.prepare_superposition).
    """
    if variant == "resonant_half_pi":
        return make_half_pi_schedule(n_atoms, omega_max, width=width)
    if variant == "half_chirp":
        return make_half_chirp_schedule(omega_max, delta_max, width=width)
    raise PulseError(f"unknown variant {variant!r}")


def dilate_schedule(schedule: PulseSchedule, factor: float) -> PulseSchedule:
    """Stretch the schedule in time by a factor, keeping amplitudes.

    Every time-like term parameter (centers, widths, ramp ends, cut times,
    edges) scales by the factor, so values(factor*t) equals the original
    values(t) and all accumulated pulse areas grow by the factor.
    """
    if factor <= 0.0:
        raise PulseError("dilation factor must be > 0")

    def stretch(term: EnvelopeTerm) -> EnvelopeTerm:
        k, p = term.kind, term.p
        if k == KIND_CONST:
            return term
        if k == KIND_GAUSS:
            return EnvelopeTerm(k, (p[0], p[1] * factor, p[2] * factor))
        if k == KIND_RAMP:
            return EnvelopeTerm(k, (p[0], p[1] * factor, p[2], p[3] * factor))
        if k == KIND_RECT:
            return EnvelopeTerm(k, (p[0], p[1] * factor, p[2] * factor, p[3] * factor))
        if k in (KIND_GAUSS_OFF, KIND_GAUSS_ON):
            return EnvelopeTerm(
                k, (p[0], p[1] * factor, p[2] * factor, p[3] * factor, p[4] * factor)
            )
        raise PulseError(f"unknown term kind {k}")

    t0, t1 = schedule.window
    return replace(
        schedule,
        omega1=tuple(stretch(term) for term in schedule.omega1),
        omega2=tuple(stretch(term) for term in schedule.omega2),
        delta1=tuple(stretch(term) for term in schedule.delta1),
        delta2=tuple(stretch(term) for term in schedule.delta2),
        window=(t0 * factor, t1 * factor),
        time_scale=schedule.time_scale * factor,
    )


def mirror_schedule(schedule: PulseSchedule) -> PulseSchedule:
    """Schedule whose channels at t equal the original channels at -t."""
    t0, t1 = schedule.window
    return replace(
        schedule,
        omega1=tuple(term.reflected() for term in schedule.omega1),
        omega2=tuple(term.reflected() for term in schedule.omega2),
        delta1=tuple(term.reflected() for term in schedule.delta1),
        delta2=tuple(term.reflected() for term in schedule.delta2),
        window=(-t1, -t0),
    )


def inverse_schedule(schedule: PulseSchedule) -> PulseSchedule:
    """Schedule realizing the conjugate-transpose propagator exactly.

    Running time backwards through a real Hamiltonian is equivalent to
    mirroring every channel in time and flipping its sign: detunings negate,
    and the envelope sign flip is a fixed pi phase offset of both couplings.
    """
    mirrored = mirror_schedule(schedule)
    return replace(
        mirrored,
        omega1=tuple(term.negated() for term in mirrored.omega1),
        omega2=tuple(term.negated() for term in mirrored.omega2),
        delta1=tuple(term.negated() for term in mirrored.delta1),
        delta2=tuple(term.negated() for term in mirrored.delta2),
    )
