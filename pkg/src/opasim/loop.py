"""LTI modeling of the two homodyne phase locks.

Open loop = PID controller x (fast actuator path + slow actuator path)
x pure delay.  The published constraints on the real loops are only the
-180 deg crossover frequencies (about 4 MHz for the squeezer/probe lock and
2 MHz for the probe/LO lock) and a flat gain below 1 MHz, so the default
plants are first-order low-passes whose delay is solved to place the
crossover exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from .errors import (
    DomainError,
    InstabilityError,
    IntegrationError,
    NoFeasibleCandidateError,
    SingularityError,
)
from .noise import PhaseJitter

__all__ = [
    "TransferFunction",
    "PidController",
    "LoopModel",
    "BodePoint",
    "StabilityMargins",
    "PhaseNoiseSpectrum",
    "bode",
    "stability_margins",
    "select_shift_frequency",
    "demod_frequency",
    "residual_jitter",
    "calibrate_jitter_amplitude",
    "default_lock_loops",
    "log_frequency_grid",
]

LOOP_KINDS = ("opa_probe", "probe_lo")


@dataclass(frozen=True)
class TransferFunction:
    """Rational transfer function in s (coefficients in ascending powers)
    with an optional pure delay and scalar gain."""

    num: tuple[float, ...]
    den: tuple[float, ...]
    delay: float = 0.0
    gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "num", tuple(float(c) for c in self.num))
        object.__setattr__(self, "den", tuple(float(c) for c in self.den))
        if not self.den or self.den[-1] == 0.0:
            raise DomainError("denominator needs a nonzero leading coefficient")
        if self.delay < 0:
            raise DomainError(f"delay must be >= 0, got {self.delay}")

    @classmethod
    def flat(cls, gain: float = 1.0) -> "TransferFunction":
        return cls(num=(1.0,), den=(1.0,), gain=gain)

    @classmethod
    def low_pass(cls, corner_hz: float, gain: float = 1.0) -> "TransferFunction":
        if corner_hz <= 0:
            raise DomainError(f"corner must be > 0 Hz, got {corner_hz}")
        return cls(num=(1.0,), den=(1.0, 1.0 / (2.0 * math.pi * corner_hz)), gain=gain)

    @classmethod
    def integrator(cls, gain: float = 1.0) -> "TransferFunction":
        return cls(num=(1.0,), den=(0.0, 1.0), gain=gain)

    @classmethod
    def pure_delay(cls, delay_s: float, gain: float = 1.0) -> "TransferFunction":
        return cls(num=(1.0,), den=(1.0,), delay=delay_s, gain=gain)

    def __mul__(self, other: "TransferFunction") -> "TransferFunction":
        num = np.polymul(self.num[::-1], other.num[::-1])[::-1]
        den = np.polymul(self.den[::-1], other.den[::-1])[::-1]
        return TransferFunction(
            num=tuple(num),
            den=tuple(den),
            delay=self.delay + other.delay,
            gain=self.gain * other.gain,
        )

    def response(self, f) -> np.ndarray:
        """Complex response at s = i 2 pi f (f in Hz, scalar or array)."""
        f = np.asarray(f, dtype=float)
        if np.any(f <= 0):
            raise DomainError("frequencies must be > 0 Hz")
        s = 1j * 2.0 * np.pi * f
        num = np.polyval(self.num[::-1], s)
        den = np.polyval(self.den[::-1], s)
        if np.any(den == 0):
            raise SingularityError("denominator vanishes on the evaluation grid")
        return self.gain * num / den * np.exp(-s * self.delay)


@dataclass(frozen=True)
class PidController:
    kp: float = 0.0
    ki: float = 0.0  # gain on 1/s, i.e. rad/s scale
    kd: float = 0.0  # gain on s, with a first-order derivative filter
    derivative_corner_hz: float = 1e6

    def __post_init__(self):
        if self.kp == 0.0 and self.ki == 0.0 and self.kd == 0.0:
            raise DomainError("at least one PID gain must be nonzero")
        if self.kd != 0.0 and self.derivative_corner_hz <= 0:
            raise DomainError("derivative corner must be > 0 Hz when kd != 0")

    def transfer_function(self) -> TransferFunction:
        if self.kd == 0.0:
            if self.ki == 0.0:
                return TransferFunction(num=(self.kp,), den=(1.0,))
            # (ki + kp s) / s
            return TransferFunction(num=(self.ki, self.kp), den=(0.0, 1.0))
        c = 1.0 / (2.0 * math.pi * self.derivative_corner_hz)
        # kp + ki/s + kd s/(1 + c s) over common denominator s (1 + c s)
        num = (self.ki, self.kp + self.ki * c, self.kp * c + self.kd)
        den = (0.0, 1.0, c)
        return TransferFunction(num=num, den=den)

    def response(self, f) -> np.ndarray:
        return self.transfer_function().response(f)


@dataclass(frozen=True)
class LoopModel:
    """One phase lock: controller driving a fast path (EOM-like) in parallel
    with a slow path (fiber-stretcher-like), plus a loop transport delay."""

    controller: PidController
    fast_plant: TransferFunction
    slow_plant: TransferFunction
    loop_delay: float = 0.0
    kind: str = "opa_probe"
    label: str = ""

    def __post_init__(self):
        if self.kind not in LOOP_KINDS:
            raise DomainError(f"kind must be one of {LOOP_KINDS}, got {self.kind!r}")
        if self.loop_delay < 0:
            raise DomainError(f"loop_delay must be >= 0, got {self.loop_delay}")

    def response(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        plant = self.fast_plant.response(f) + self.slow_plant.response(f)
        out = self.controller.response(f) * plant
        return out * np.exp(-1j * 2.0 * np.pi * f * self.loop_delay)


@dataclass(frozen=True)
class BodePoint:
    frequency_hz: float
    gain_db: float
    phase_deg: float


@dataclass(frozen=True)
class StabilityMargins:
    """Crossover frequencies and margins; fields are None when the
    corresponding crossover does not exist in the searched range."""

    phase_crossover_hz: float | None
    gain_margin_db: float | None
    gain_crossover_hz: float | None
    phase_margin_deg: float | None

    @property
    def stable(self) -> bool:
        gm_ok = self.gain_margin_db is None or self.gain_margin_db > 0
        pm_ok = self.phase_margin_deg is None or self.phase_margin_deg > 0
        return gm_ok and pm_ok


def log_frequency_grid(f_min: float = 1e3, f_max: float = 2e7, points_per_decade: int = 200) -> np.ndarray:
    if f_min <= 0 or f_max <= f_min:
        raise DomainError("need 0 < f_min < f_max")
    n = max(2, int(round(points_per_decade * math.log10(f_max / f_min))) + 1)
    return np.logspace(math.log10(f_min), math.log10(f_max), n)


def bode(system, frequencies) -> list[BodePoint]:
    """Gain (dB) and unwrapped phase (deg) of any object with .response(f)."""
    f = np.asarray(frequencies, dtype=float)
    if f.size == 0:
        return []
    if np.any(np.diff(f) <= 0):
        raise DomainError("frequencies must be sorted strictly ascending")
    h = system.response(f)
    mag = np.abs(h)
    if np.any(mag == 0):
        raise DomainError("zero response encountered; gain undefined in dB")
    gain_db = 20.0 * np.log10(mag)
    phase_deg = np.degrees(np.unwrap(np.angle(h)))
    return [BodePoint(float(fi), float(g), float(p)) for fi, g, p in zip(f, gain_db, phase_deg)]


def _unwrapped_phase_deg(system, f_grid: np.ndarray) -> np.ndarray:
    return np.degrees(np.unwrap(np.angle(system.response(f_grid))))


def _bisect_on_grid(system, f_lo, f_hi, target_fn, rel_tol=1e-3):
    """Bisection between adjacent grid points; target_fn(f) changes sign."""
    lo, hi = f_lo, f_hi
    while (hi - lo) / hi > rel_tol:
        mid = math.sqrt(lo * hi)
        if target_fn(lo) * target_fn(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return math.sqrt(lo * hi)


def stability_margins(
    loop,
    f_min: float = 1.0,
    f_max: float = 2e7,
    points_per_decade: int = 200,
) -> StabilityMargins:
    """Phase crossover (lowest f where unwrapped phase hits -180 deg) with
    its gain margin, and the first downward unity-gain crossing with its
    phase margin.  Crossovers are refined by bisection to 1e-3 relative."""
    grid = log_frequency_grid(f_min, f_max, points_per_decade)
    h = loop.response(grid)
    mag = np.abs(h)
    phase = np.degrees(np.unwrap(np.angle(h)))

    phase_crossover = gain_margin = None
    idx = np.nonzero(phase <= -180.0)[0]
    if idx.size and idx[0] > 0:
        i = idx[0]
        f_lo, f_hi = grid[i - 1], grid[i]
        p_lo = phase[i - 1]
        h_lo = h[i - 1]

        def phase_rel(f):
            # continue the unwrapped phase locally from the lower grid point
            return p_lo + math.degrees(np.angle(loop.response(f) / h_lo)) + 180.0

        phase_crossover = _bisect_on_grid(loop, f_lo, f_hi, phase_rel)
        gain_margin = -20.0 * math.log10(abs(loop.response(phase_crossover)))
    elif idx.size and idx[0] == 0:
        phase_crossover = float(grid[0])
        gain_margin = -20.0 * math.log10(mag[0])

    gain_crossover = phase_margin = None
    down = np.nonzero((mag[:-1] >= 1.0) & (mag[1:] < 1.0))[0]
    if down.size:
        i = down[0]

        def gain_rel(f):
            return math.log10(abs(loop.response(f)))

        gain_crossover = _bisect_on_grid(loop, grid[i], grid[i + 1], gain_rel)
        # phase at the crossover, continued from the nearest grid point
        phase_at = phase[i] + math.degrees(np.angle(loop.response(gain_crossover) / h[i]))
        phase_margin = 180.0 + phase_at

    return StabilityMargins(
        phase_crossover_hz=phase_crossover,
        gain_margin_db=gain_margin,
        gain_crossover_hz=gain_crossover,
        phase_margin_deg=phase_margin,
    )


def demod_frequency(shift_hz: float, loop_kind: str) -> float:
    """Beat frequency seen by a lock for a given AOM shift.  The squeezer
    lock beats at twice the shift (difference-frequency process in the OPA);
    the LO lock beats at the shift itself."""
    if shift_hz <= 0:
        raise DomainError(f"shift must be > 0 Hz, got {shift_hz}")
    if loop_kind not in LOOP_KINDS:
        raise DomainError(f"unknown loop kind {loop_kind!r}")
    return 2.0 * shift_hz if loop_kind == "opa_probe" else shift_hz


def select_shift_frequency(
    loops: list[LoopModel],
    candidates: list[float],
    min_gain_margin_db: float = 6.0,
    min_phase_margin_deg: float = 30.0,
    flat_band_db: float = 3.0,
    flat_reference_hz: float = 1e4,
) -> float:
    """Largest candidate AOM shift for which every lock's beat frequency sits
    in the flat-gain region and keeps both margins.  Higher is preferred so
    the locks can be driven as fast as the loops allow without oscillating."""
    if min_gain_margin_db < 0 or min_phase_margin_deg < 0:
        raise DomainError("margins must be >= 0")
    cands = sorted(candidates)
    if not cands:
        raise NoFeasibleCandidateError("empty candidate list")

    feasibility = {}
    grids = {}
    for loop in loops:
        m = stability_margins(loop)
        ok = (m.gain_margin_db is None or m.gain_margin_db >= min_gain_margin_db) and (
            m.phase_margin_deg is None or m.phase_margin_deg >= min_phase_margin_deg
        )
        feasibility[id(loop)] = ok
        grid = log_frequency_grid(min(flat_reference_hz, 1e3), 2e7)
        grids[id(loop)] = (grid, _unwrapped_phase_deg(loop, grid))

    def candidate_ok(shift):
        for loop in loops:
            if not feasibility[id(loop)]:
                return False
            fd = demod_frequency(shift, loop.kind)
            grid, phase = grids[id(loop)]
            if fd > grid[-1]:
                return False
            ref = abs(loop.response(flat_reference_hz))
            at = abs(loop.response(fd))
            if abs(20.0 * math.log10(at / ref)) > flat_band_db:
                return False
            # phase distance from -180 deg at the beat frequency
            phase_at = float(np.interp(math.log10(fd), np.log10(grid), phase))
            if phase_at - (-180.0) < min_phase_margin_deg:
                return False
        return True

    for shift in reversed(cands):
        if shift <= 0:
            raise DomainError(f"candidate shift must be > 0 Hz, got {shift}")
        if candidate_ok(shift):
            return shift
    raise NoFeasibleCandidateError(
        f"no candidate in {cands} satisfies the margin and flat-gain constraints"
    )


@dataclass(frozen=True)
class PhaseNoiseSpectrum:
    """One-sided phase-noise density S_phi(f) in rad^2/Hz.

    kind 'white': S = amplitude; kind 'one_over_f2': S = amplitude / f^2
    (amplitude is the density at 1 Hz); kind 'table': log-log interpolation
    of (frequencies_hz, densities).
    """

    kind: str = "one_over_f2"
    amplitude: float = 1.0
    f_min: float = 1.0
    f_max: float = 1e6
    frequencies_hz: tuple[float, ...] = ()
    densities: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("white", "one_over_f2", "table"):
            raise DomainError(f"unknown spectrum kind {self.kind!r}")
        if self.amplitude < 0:
            raise DomainError("amplitude must be >= 0")
        if not 0 < self.f_min < self.f_max:
            raise DomainError("need 0 < f_min < f_max")
        if self.kind == "table":
            if len(self.frequencies_hz) != len(self.densities) or len(self.densities) < 2:
                raise DomainError("table spectrum needs >= 2 matched points")
            if any(d < 0 for d in self.densities):
                raise DomainError("densities must be >= 0")

    def density(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.kind == "white":
            return np.full_like(f, self.amplitude)
        if self.kind == "one_over_f2":
            return self.amplitude / f**2
        return np.exp(
            np.interp(
                np.log(f),
                np.log(np.asarray(self.frequencies_hz)),
                np.log(np.maximum(np.asarray(self.densities), 1e-300)),
            )
        )


def _suppressed_density(noise: PhaseNoiseSpectrum, loop):
    def integrand(u):  # u = ln f
        f = math.exp(u)
        sup = 1.0 / abs(1.0 + complex(loop.response(f)))
        return float(noise.density(f)) * sup * sup * f

    return integrand


def residual_jitter(noise: PhaseNoiseSpectrum, loop) -> PhaseJitter:
    """Rms in-loop phase error: closed-loop suppression 1/(1+L) applied to
    the free-running phase-noise spectrum and integrated over its band."""
    margins = stability_margins(loop)
    if not margins.stable:
        raise InstabilityError(
            f"loop is unstable (gain margin {margins.gain_margin_db}, "
            f"phase margin {margins.phase_margin_deg})"
        )
    integrand = _suppressed_density(noise, loop)
    try:
        var, err = quad(
            integrand,
            math.log(noise.f_min),
            math.log(noise.f_max),
            epsrel=1e-6,
            epsabs=0.0,
            limit=400,
        )
    except Exception as exc:  # noqa: BLE001 - surfaced as a tool error
        raise IntegrationError(f"phase-noise integration failed: {exc}") from exc
    if not math.isfinite(var) or var < 0:
        raise IntegrationError(f"phase-noise integral returned {var!r}")
    return PhaseJitter(math.sqrt(var))


def open_loop_jitter(noise: PhaseNoiseSpectrum) -> float:
    """Free-running rms phase (radians) with no suppression."""
    var, _ = quad(
        lambda u: float(noise.density(math.exp(u))) * math.exp(u),
        math.log(noise.f_min),
        math.log(noise.f_max),
        epsrel=1e-9,
        limit=400,
    )
    return math.sqrt(var)


def calibrate_jitter_amplitude(loop, target: PhaseJitter, template: PhaseNoiseSpectrum) -> PhaseNoiseSpectrum:
    """Scale a spectrum so the closed-loop rms equals the target.  The rms
    variance is linear in the amplitude, so the scale is solved exactly."""
    unit = replace(template, amplitude=1.0)
    base = residual_jitter(unit, loop).theta
    if base == 0:
        raise IntegrationError("template spectrum integrates to zero")
    return replace(template, amplitude=(target.theta / base) ** 2)


def _solve_loop_delay(controller, fast, slow, target_crossover_hz: float) -> float:
    """Delay that places the -180 deg crossing of controller x plant at the
    target frequency.  The non-delay phase is continued from low frequency so
    the calibration is exact, not grid-limited."""
    probe = LoopModel(controller=controller, fast_plant=fast, slow_plant=slow, loop_delay=0.0)
    grid = log_frequency_grid(1.0, target_crossover_hz, 400)
    phase_nodelay = _unwrapped_phase_deg(probe, grid)[-1]
    deficit = 180.0 + phase_nodelay  # phase still to be eaten by the delay
    if deficit <= 0:
        raise DomainError(
            f"plant already crosses -180 deg below {target_crossover_hz} Hz without delay"
        )
    return deficit / (360.0 * target_crossover_hz)


def default_lock_loops(
    opa_probe_crossover_hz: float = 4.0e6,
    probe_lo_crossover_hz: float = 2.0e6,
    flat_gain: float = 0.1,
) -> list[LoopModel]:
    """Calibrated default models of the two locks.

    Fast path: first-order low-pass, 10 MHz corner.  Slow path: low-gain
    100 Hz low-pass (long-range actuator, irrelevant above audio).  The
    loop delay is solved so each -180 deg crossover lands on its measured
    frequency.
    """
    controller = PidController(kp=1.0, ki=2.0 * math.pi * 100.0)
    loops = []
    for kind, label, crossover in (
        ("opa_probe", "squeezer-probe lock", opa_probe_crossover_hz),
        ("probe_lo", "probe-LO lock", probe_lo_crossover_hz),
    ):
        fast = TransferFunction.low_pass(1e7, gain=flat_gain)
        slow = TransferFunction.low_pass(100.0, gain=flat_gain / 2.0)
        delay = _solve_loop_delay(controller, fast, slow, crossover)
        loops.append(
            LoopModel(
                controller=controller,
                fast_plant=fast,
                slow_plant=slow,
                loop_delay=delay,
                kind=kind,
                label=label,
            )
        )
    return loops
