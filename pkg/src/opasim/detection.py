"""Measurement-chain emulation: homodyne detector noise levels and an
electrical spectrum analyzer (zero-span traces and frequency sweeps).

Displayed analyzer points follow standard noise statistics: each
RBW-filtered power sample is exponential (chi-squared, 2 DOF) and the video
filter averages K = RBW/VBW samples per point.  Traces are deterministic
for a fixed seed.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from . import noise as nz

__all__ = [
    "CircuitNoise",
    "DetectorModel",
    "AnalyzerSettings",
    "Scenario",
    "Trace",
    "FrequencySweep",
    "measured_noise_ratio",
    "simulate_zero_span",
    "sweep_frequency",
    "select_measurement_frequency",
    "default_detector_model",
]


@dataclass(frozen=True)
class CircuitNoise:
    """Detector electronic noise: flat floor with a second-order rise above
    ``high_corner_hz`` and, when ``low_corner_hz`` > 0, a matching rise
    toward low frequency (1/f electronics), giving a clearance peak between
    the two corners."""

    floor_dbm: float
    high_corner_hz: float = 30e6
    slope_db_per_decade: float = 20.0
    low_corner_hz: float = 0.0

    def __post_init__(self):
        if self.high_corner_hz <= 0:
            raise DomainError("high_corner_hz must be > 0")
        if self.low_corner_hz < 0:
            raise DomainError("low_corner_hz must be >= 0")
        if self.slope_db_per_decade <= 0:
            raise DomainError("slope must be > 0 dB/decade")

    def level_dbm(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        n = self.slope_db_per_decade / 10.0
        shape = 1.0 + (f / self.high_corner_hz) ** n
        if self.low_corner_hz > 0:
            shape = shape + (self.low_corner_hz / f) ** n
        return self.floor_dbm + 10.0 * np.log10(shape)


@dataclass(frozen=True)
class DetectorModel:
    shot_noise_dbm: float
    circuit: CircuitNoise
    analyzer_floor_dbm: float
    visibility: float = 0.985
    pd_quantum_efficiency: float = 0.98
    design_frequency_hz: float = 11e6

    def __post_init__(self):
        for name, v in (
            ("visibility", self.visibility),
            ("pd_quantum_efficiency", self.pd_quantum_efficiency),
        ):
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must be in [0, 1], got {v}")
        if float(self.circuit.level_dbm(self.design_frequency_hz)) >= self.shot_noise_dbm:
            raise DomainError(
                "circuit noise is not below shot noise at the design frequency"
            )

    def clearance_db(self, f) -> np.ndarray:
        return self.shot_noise_dbm - self.circuit.level_dbm(f)

    def circuit_ratio(self, f) -> np.ndarray:
        """Circuit noise as a linear power ratio relative to shot noise."""
        return 10.0 ** ((self.circuit.level_dbm(f) - self.shot_noise_dbm) / 10.0)


def default_detector_model(
    shot_noise_dbm: float = -83.0,
    clearance_db: float = 25.0,
    clearance_frequency_hz: float = 11e6,
    high_corner_hz: float = 30e6,
    low_corner_hz: float | None = None,
    slope_db_per_decade: float = 20.0,
    analyzer_floor_offset_db: float = -10.0,
    visibility: float = 0.985,
    pd_quantum_efficiency: float = 0.98,
) -> DetectorModel:
    """Detector with the circuit-noise floor calibrated so the shot/circuit
    clearance peaks at the requested frequency with the requested value.
    The low corner defaults to the value that places the clearance maximum
    exactly at ``clearance_frequency_hz``."""
    if low_corner_hz is None:
        # minimum of (f_lo/f)^n + (f/f_hi)^n sits at sqrt(f_lo f_hi)
        low_corner_hz = clearance_frequency_hz**2 / high_corner_hz
    probe = CircuitNoise(
        floor_dbm=0.0,
        high_corner_hz=high_corner_hz,
        slope_db_per_decade=slope_db_per_decade,
        low_corner_hz=low_corner_hz,
    )
    shape_at_peak = float(probe.level_dbm(clearance_frequency_hz))
    floor = shot_noise_dbm - clearance_db - shape_at_peak
    circuit = CircuitNoise(
        floor_dbm=floor,
        high_corner_hz=high_corner_hz,
        slope_db_per_decade=slope_db_per_decade,
        low_corner_hz=low_corner_hz,
    )
    return DetectorModel(
        shot_noise_dbm=shot_noise_dbm,
        circuit=circuit,
        analyzer_floor_dbm=floor + analyzer_floor_offset_db,
        visibility=visibility,
        pd_quantum_efficiency=pd_quantum_efficiency,
        design_frequency_hz=clearance_frequency_hz,
    )


@dataclass(frozen=True)
class AnalyzerSettings:
    center_frequency_hz: float
    span_hz: float
    rbw_hz: float
    vbw_hz: float
    sweep_time_s: float
    points: int
    seed: int

    def __post_init__(self):
        if not self.vbw_hz > 0:
            raise DomainError("vbw must be > 0")
        if self.rbw_hz < self.vbw_hz:
            raise DomainError("rbw must be >= vbw")
        if self.points < 2:
            raise DomainError("points must be >= 2")
        if self.span_hz < 0:
            raise DomainError("span must be >= 0")
        if self.sweep_time_s <= 0:
            raise DomainError("sweep_time must be > 0")

    @property
    def video_averages(self) -> int:
        return max(1, int(round(self.rbw_hz / self.vbw_hz)))


@dataclass(frozen=True)
class Scenario:
    """Complete experiment description.  ``opa.transmittance`` is the
    waveguide-internal transmittance; the detection chain is the loss
    budget, so the net squeezing transmittance is their product."""

    opa: nz.OpaParams
    jitter: nz.PhaseJitter
    detection_budget: nz.LossBudget
    detector: DetectorModel
    analyzer: AnalyzerSettings
    lock_mode: str = "locked"
    scan_rate_hz: float = 20.0
    fold_circuit_into_loss: bool = False

    def __post_init__(self):
        if self.lock_mode not in ("locked", "scanned"):
            raise DomainError(f"lock_mode must be 'locked' or 'scanned', got {self.lock_mode!r}")
        if self.lock_mode == "scanned" and self.scan_rate_hz <= 0:
            raise DomainError("scan_rate must be > 0 for scanned mode")

    @property
    def detection_transmittance(self) -> float:
        return self.detection_budget.transmittance

    def digest(self) -> str:
        blob = repr(self).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Trace:
    axis: np.ndarray  # seconds (zero span) or Hz (sweeps)
    values_dbm: np.ndarray
    axis_kind: str  # "time" | "frequency"
    scenario_digest: str = ""
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float))
        object.__setattr__(self, "values_dbm", np.asarray(self.values_dbm, dtype=float))
        if self.axis.shape != self.values_dbm.shape:
            raise DomainError("axis and values must be the same length")
        if not np.all(np.isfinite(self.values_dbm)):
            raise DomainError("trace values must be finite")


def _optical_pair(s: Scenario) -> nz.QuadraturePair:
    q = nz.opa_output_variances(s.opa)
    eta_det = s.detection_transmittance
    if s.fold_circuit_into_loss:
        eta_det *= 1.0 - float(
            s.detector.circuit_ratio(s.analyzer.center_frequency_hz)
        )
    q = nz.apply_loss(q, eta_det)
    return nz.jitter_mix(q, s.jitter)


def measured_noise_ratio(s: Scenario, f: float) -> tuple[float, float]:
    """(locked, anti-locked) displayed noise ratios at sideband frequency f:
    optical variances through the full loss chain and jitter mixing, with
    circuit noise added as electrical power on top."""
    q = _optical_pair(s)
    n_circ = 0.0 if s.fold_circuit_into_loss else float(s.detector.circuit_ratio(f))
    return q.sq + n_circ, q.anti + n_circ


def _video_averaged_db(rng: np.random.Generator, means: np.ndarray, k: int) -> np.ndarray:
    draws = rng.exponential(size=(means.size, k)) * means[:, None]
    return 10.0 * np.log10(draws.mean(axis=1))


def simulate_zero_span(s: Scenario) -> Trace:
    """Zero-span trace at the analyzer center frequency.

    Locked mode holds the squeezed quadrature; scanned mode ramps the LO
    phase linearly so the displayed level swings between the jittered
    anti-squeezed and squeezed envelopes.
    """
    a = s.analyzer
    if a.span_hz != 0:
        raise DomainError("zero-span simulation requires span = 0")
    t = np.linspace(0.0, a.sweep_time_s, a.points)
    n_circ = float(s.detector.circuit_ratio(a.center_frequency_hz))
    q = _optical_pair(s)
    if s.lock_mode == "locked":
        means = np.full(a.points, q.sq + n_circ)
    else:
        theta = 2.0 * math.pi * s.scan_rate_hz * t
        c2 = np.cos(theta) ** 2
        means = q.sq * c2 + q.anti * (1.0 - c2) + n_circ
    rng = np.random.default_rng(a.seed)
    values = s.detector.shot_noise_dbm + _video_averaged_db(rng, means, a.video_averages)
    return Trace(
        axis=t,
        values_dbm=values,
        axis_kind="time",
        scenario_digest=s.digest(),
        seed=a.seed,
        label=s.lock_mode,
    )


def simulate_shot_reference(s: Scenario) -> Trace:
    """Zero-span trace with the pump blocked (shot noise + circuit noise),
    drawn with an offset seed so it is independent of the signal trace."""
    a = s.analyzer
    n_circ = float(s.detector.circuit_ratio(a.center_frequency_hz))
    t = np.linspace(0.0, a.sweep_time_s, a.points)
    means = np.full(a.points, 1.0 + n_circ)
    rng = np.random.default_rng(a.seed + 1)
    values = s.detector.shot_noise_dbm + _video_averaged_db(rng, means, a.video_averages)
    return Trace(
        axis=t,
        values_dbm=values,
        axis_kind="time",
        scenario_digest=s.digest(),
        seed=a.seed + 1,
        label="shot",
    )


@dataclass(frozen=True)
class FrequencySweep:
    frequencies_hz: np.ndarray
    squeezed: Trace
    shot: Trace
    circuit: Trace
    floor: Trace

    def clearance_db(self) -> np.ndarray:
        return self.shot.values_dbm - self.circuit.values_dbm


def sweep_frequency(s: Scenario, f_min: float, f_max: float, points: int = 97) -> FrequencySweep:
    """Analytic noise levels versus sideband frequency: squeezed, shot,
    circuit and analyzer-floor traces on a common linear grid."""
    if not 0 < f_min < f_max:
        raise DomainError("need 0 < f_min < f_max")
    if points < 1:
        raise DomainError("points must be >= 1")
    f = np.linspace(f_min, f_max, points)
    q = _optical_pair(s)
    n_circ = np.asarray(s.detector.circuit_ratio(f), dtype=float)
    if s.fold_circuit_into_loss:
        n_circ = np.zeros_like(n_circ)
    sq_dbm = s.detector.shot_noise_dbm + 10.0 * np.log10(q.sq + n_circ)
    digest = s.digest()

    def trace(values, label):
        return Trace(axis=f, values_dbm=values, axis_kind="frequency",
                     scenario_digest=digest, seed=s.analyzer.seed, label=label)

    return FrequencySweep(
        frequencies_hz=f,
        squeezed=trace(sq_dbm, "squeezed"),
        shot=trace(np.full(points, s.detector.shot_noise_dbm), "shot"),
        circuit=trace(np.asarray(s.detector.circuit.level_dbm(f), dtype=float), "circuit"),
        floor=trace(np.full(points, s.detector.analyzer_floor_dbm), "analyzer_floor"),
    )


def trace_extrema(trace: Trace, window: int = 9) -> tuple[float, float]:
    """(max_dbm, min_dbm) envelope estimate of a scanned trace.

    The upper envelope is broad in the scan angle, so many displayed points
    sit near it and the raw maximum rides the upper tail of the averaging
    noise; a short moving average in linear power removes that selection
    bias.  The lower envelope is sharp (anti-squeezed power grows
    quadratically off the null), so smoothing would blend it away and the
    raw minimum is the better estimator there.
    """
    if window < 1:
        raise DomainError("window must be >= 1")
    lin = 10.0 ** (trace.values_dbm / 10.0)
    if window > 1:
        kernel = np.full(window, 1.0 / window)
        smoothed = np.convolve(lin, kernel, mode="valid")
    else:
        smoothed = lin
    return float(10.0 * np.log10(smoothed.max())), float(10.0 * np.log10(lin.min()))


def select_measurement_frequency(sweep: FrequencySweep) -> float:
    """Frequency maximizing the shot/circuit clearance; ties break toward
    the lower frequency."""
    if sweep.frequencies_hz.size == 0:
        raise DomainError("empty sweep")
    clearance = sweep.clearance_db()
    return float(sweep.frequencies_hz[int(np.argmax(clearance))])
