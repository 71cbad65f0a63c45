"""Closed-form quantum-noise arithmetic for a single-pass waveguide squeezer.

Quadrature variances are linear power ratios normalized to shot noise = 1.
The two core relations are the loss-degraded parametric gain model

    R_plus/minus = (1 - eta) + eta * exp(+-2 * sqrt(alpha * P))

and the phase-jitter mixing of the two quadratures

    R'_plus/minus = R_plus/minus * cos^2(theta) + R_minus/plus * sin^2(theta)

with theta the rms residual phase error of the lock.  Everything here is a
pure function; dataclasses only validate their invariants.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import DomainError, InfeasibleError

__all__ = [
    "OpaParams",
    "QuadraturePair",
    "PhaseJitter",
    "LossElement",
    "LossBudget",
    "opa_output_variances",
    "jitter_mix",
    "to_db",
    "from_db",
    "cascade_losses",
    "apply_loss",
    "invert_loss",
    "visibility_to_loss",
    "clearance_to_equiv_loss",
]

_LN10_OVER_10 = math.log(10.0) / 10.0


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class OpaParams:
    """Squeezer operating point: SHG efficiency [1/W], pump power [W],
    effective transmittance of the squeezed light [0..1]."""

    shg_efficiency: float
    pump_power: float
    transmittance: float

    def __post_init__(self):
        _check_finite("shg_efficiency", self.shg_efficiency)
        _check_finite("pump_power", self.pump_power)
        _check_finite("transmittance", self.transmittance)
        if self.shg_efficiency < 0:
            raise DomainError(f"shg_efficiency must be >= 0, got {self.shg_efficiency}")
        if self.pump_power < 0:
            raise DomainError(f"pump_power must be >= 0, got {self.pump_power}")
        if not 0.0 <= self.transmittance <= 1.0:
            raise DomainError(f"transmittance must be in [0, 1], got {self.transmittance}")


@dataclass(frozen=True)
class QuadraturePair:
    """Anti-squeezed and squeezed variances relative to shot noise."""

    anti: float
    sq: float

    def __post_init__(self):
        for name, v in (("anti", self.anti), ("sq", self.sq)):
            _check_finite(name, v)
            if v <= 0:
                raise DomainError(f"{name} variance must be > 0, got {v}")


@dataclass(frozen=True)
class PhaseJitter:
    """Rms phase error of the homodyne lock, stored in radians."""

    theta: float

    def __post_init__(self):
        _check_finite("theta", self.theta)
        # pi/2 is allowed as the quadrature-swap limit
        if not 0.0 <= self.theta <= math.pi / 2:
            raise DomainError(f"theta must be in [0, pi/2] rad, got {self.theta}")

    @classmethod
    def from_degrees(cls, degrees: float) -> "PhaseJitter":
        return cls(math.radians(degrees))

    @property
    def degrees(self) -> float:
        return math.degrees(self.theta)


@dataclass(frozen=True)
class LossElement:
    label: str
    loss: float

    def __post_init__(self):
        _check_finite(f"loss[{self.label}]", self.loss)
        if not 0.0 <= self.loss <= 1.0:
            raise DomainError(f"loss[{self.label}] must be in [0, 1], got {self.loss}")


@dataclass(frozen=True)
class LossBudget:
    elements: tuple[LossElement, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def transmittance(self) -> float:
        return cascade_losses(self)

    @property
    def additive_total(self) -> float:
        """Sum of losses.  Physically an approximation; kept for comparison
        against budgets quoted as plain sums."""
        return sum(e.loss for e in self.elements)


def opa_output_variances(p: OpaParams) -> QuadraturePair:
    """Anti-squeezed / squeezed variances of the squeezer output after loss."""
    gain = 2.0 * math.sqrt(p.shg_efficiency * p.pump_power)
    eta = p.transmittance
    return QuadraturePair(
        anti=(1.0 - eta) + eta * math.exp(gain),
        sq=(1.0 - eta) + eta * math.exp(-gain),
    )


def jitter_mix(q: QuadraturePair, j: PhaseJitter, gaussian_average: bool = False) -> QuadraturePair:
    """Mix the quadratures by the residual lock phase error.

    Default is the fixed-angle substitution (theta used directly as the
    mixing angle).  ``gaussian_average=True`` instead averages cos^2 over a
    zero-mean Gaussian phase with std theta: <cos^2> = (1 + exp(-2 theta^2))/2.
    """
    if gaussian_average:
        c2 = 0.5 * (1.0 + math.exp(-2.0 * j.theta**2))
    else:
        c2 = math.cos(j.theta) ** 2
    s2 = 1.0 - c2
    return QuadraturePair(
        anti=q.anti * c2 + q.sq * s2,
        sq=q.sq * c2 + q.anti * s2,
    )


def to_db(ratio: float) -> float:
    if not math.isfinite(ratio) or ratio <= 0:
        raise DomainError(f"power ratio must be > 0 and finite, got {ratio!r}")
    return 10.0 * math.log10(ratio)


def from_db(db: float) -> float:
    _check_finite("dB value", db)
    return math.exp(db * _LN10_OVER_10)


def cascade_losses(budget: LossBudget) -> float:
    """Effective transmittance of a chain of loss elements (product of
    complements; order-independent)."""
    t = 1.0
    for e in budget.elements:
        t *= 1.0 - e.loss
    return t


def apply_loss(q: QuadraturePair, transmittance: float) -> QuadraturePair:
    """Propagate both variances through a beamsplitter-type loss:
    R -> (1 - eta) + eta * R."""
    if not 0.0 <= transmittance <= 1.0:
        raise DomainError(f"transmittance must be in [0, 1], got {transmittance}")
    eta = transmittance
    return QuadraturePair(
        anti=(1.0 - eta) + eta * q.anti,
        sq=(1.0 - eta) + eta * q.sq,
    )


def invert_loss(r_measured: float, transmittance: float) -> float:
    """Undo a known loss on a measured variance: (R - (1 - eta)) / eta.

    Raises InfeasibleError when the measured value is below the vacuum
    contribution of the loss itself, i.e. inconsistent with the claimed
    transmittance.
    """
    if not 0.0 < transmittance <= 1.0:
        raise DomainError(f"transmittance must be in (0, 1], got {transmittance}")
    if r_measured <= 0 or not math.isfinite(r_measured):
        raise DomainError(f"measured ratio must be > 0, got {r_measured!r}")
    out = (r_measured - (1.0 - transmittance)) / transmittance
    if out <= 0:
        raise InfeasibleError(
            f"measured ratio {r_measured} is below the vacuum floor "
            f"{1.0 - transmittance:.6g} implied by transmittance {transmittance}"
        )
    return out


def source_variances(measured: QuadraturePair, detection_transmittance: float) -> QuadraturePair:
    """Both variances referred back through the detection chain."""
    return QuadraturePair(
        anti=invert_loss(measured.anti, detection_transmittance),
        sq=invert_loss(measured.sq, detection_transmittance),
    )


def visibility_to_loss(visibility: float) -> float:
    """Mode-mismatch loss implied by a fringe visibility: 1 - V^2."""
    if not 0.0 <= visibility <= 1.0:
        raise DomainError(f"visibility must be in [0, 1], got {visibility}")
    return 1.0 - visibility**2


def clearance_to_equiv_loss(clearance_db: float) -> float:
    """Optical loss equivalent to electronic noise a given clearance (dB)
    below shot noise: 10^(-C/10).  Clearance <= 0 dB (noise at or above
    shot) is allowed but flagged with a warning."""
    _check_finite("clearance", clearance_db)
    loss = from_db(-clearance_db)
    if loss >= 1.0:
        warnings.warn(
            f"clearance {clearance_db} dB puts circuit noise at or above shot "
            f"noise (equivalent loss {loss:.3g} >= 1)",
            stacklevel=2,
        )
    return loss
