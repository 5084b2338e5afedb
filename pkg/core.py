"""
Feedback functions, regime classification and explosion-time bounds

A feedback function f maps a ball count ω to the positive selection weight of
an agent holding ω balls. Two variants are supported:

- PowerLaw: f(ω) = η ω^γ with η > 0 and γ ≥ 0
- Tabulated: explicit positive values for ω_min, ω_min + 1, ...
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np

from errors import DomainError, NonExplosiveError, UnsupportedClassificationError

logger = logging.getLogger(__name__)


class RegimeLabel(str, Enum):
    """Long-run behaviour of the feedback model"""
    MONOPOLY = "Monopoly"
    FIXED_RANKINGS_NO_MONOPOLY = "FixedRankingsNoMonopoly"
    NO_FIXED_RANKINGS = "NoFixedRankings"


@dataclass(frozen=True)
class PowerLaw:
    """Power law feedback f(ω) = η ω^γ"""
    eta: float
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise DomainError(f"PowerLaw needs eta > 0, got {self.eta}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise DomainError(f"PowerLaw needs gamma >= 0, got {self.gamma}")

    @property
    def min_omega(self) -> int:
        return 1

    @property
    def max_omega(self) -> float:
        return math.inf

    def evaluate(self, omega: int) -> float:
        _check_omega(self, omega)
        return self.eta * float(omega) ** self.gamma

    def log_evaluate(self, omega: int) -> float:
        _check_omega(self, omega)
        return math.log(self.eta) + self.gamma * math.log(omega)

    def evaluate_many(self, omegas: np.ndarray) -> np.ndarray:
        omegas = np.asarray(omegas)
        if omegas.size and omegas.min() < 1:
            raise DomainError(f"Ball counts must be >= 1, got {omegas.min()}")
        return self.eta * omegas.astype(np.float64) ** self.gamma

    def describe(self) -> dict:
        return {"variant": "PowerLaw", "eta": self.eta, "gamma": self.gamma}


@dataclass(frozen=True)
class Tabulated:
    """
    User-tabulated feedback values

    values[k] is f(omega_min + k). Evaluating beyond the table is an error.
    """
    values: Tuple[float, ...]
    omega_min: int = 1

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise DomainError("Tabulated feedback needs at least one value")
        if self.omega_min < 1:
            raise DomainError(f"omega_min must be >= 1, got {self.omega_min}")
        bad = [v for v in self.values if not (math.isfinite(v) and v > 0)]
        if bad:
            raise DomainError(f"Tabulated feedback values must be positive and finite, got {bad[:3]}")

    @property
    def min_omega(self) -> int:
        return self.omega_min

    @property
    def max_omega(self) -> int:
        return self.omega_min + len(self.values) - 1

    def evaluate(self, omega: int) -> float:
        _check_omega(self, omega)
        return self.values[int(omega) - self.omega_min]

    def log_evaluate(self, omega: int) -> float:
        return math.log(self.evaluate(omega))

    def evaluate_many(self, omegas: np.ndarray) -> np.ndarray:
        omegas = np.asarray(omegas)
        if omegas.size and (omegas.min() < self.min_omega or omegas.max() > self.max_omega):
            raise DomainError(
                f"Ball counts outside tabulated domain [{self.min_omega}, {self.max_omega}]"
            )
        table = np.asarray(self.values, dtype=np.float64)
        return table[omegas.astype(np.int64) - self.omega_min]

    def describe(self) -> dict:
        return {"variant": "Tabulated", "omega_min": self.omega_min, "values": list(self.values)}


FeedbackFunction = Union[PowerLaw, Tabulated]


@dataclass(frozen=True)
class ExplosionBounds:
    """Bounds on the expected explosion time; lower is t_γ"""
    lower: float
    upper: float


def _check_omega(f: FeedbackFunction, omega) -> None:
    if int(omega) != omega:
        raise DomainError(f"Ball count must be an integer, got {omega}")
    if omega < f.min_omega or omega > f.max_omega:
        raise DomainError(f"Ball count {omega} outside supported domain [{f.min_omega}, {f.max_omega}]")


def evaluate(f: FeedbackFunction, omega: int) -> float:
    """Return f(ω) exactly as parametrized"""
    return f.evaluate(omega)


def feedback_from_dict(data: dict) -> FeedbackFunction:
    """Rebuild a feedback function from its describe() form"""
    variant = data.get("variant", "PowerLaw")
    if variant == "PowerLaw":
        return PowerLaw(eta=float(data["eta"]), gamma=float(data["gamma"]))
    if variant == "Tabulated":
        return Tabulated(values=tuple(data["values"]), omega_min=int(data.get("omega_min", 1)))
    raise DomainError(f"Unknown feedback variant: {variant}")


def classify_regime(f: FeedbackFunction) -> RegimeLabel:
    """
    Classify the long-run regime of the feedback model

    Only the power law has a decidable answer: γ > 1 gives monopoly,
    1/2 < γ ≤ 1 fixed rankings without monopoly, γ ≤ 1/2 neither.

    Raises:
        UnsupportedClassificationError: for tabulated feedback
    """
    if not isinstance(f, PowerLaw):
        raise UnsupportedClassificationError(
            "Regime classification needs the infinite series of 1/f; a finite table cannot decide it"
        )
    if f.gamma > 1:
        return RegimeLabel.MONOPOLY
    if f.gamma > 0.5:
        return RegimeLabel.FIXED_RANKINGS_NO_MONOPOLY
    return RegimeLabel.NO_FIXED_RANKINGS


def _require_explosive(f: FeedbackFunction) -> PowerLaw:
    if not isinstance(f, PowerLaw):
        raise NonExplosiveError("Explosion-time bounds are only defined for power law feedback")
    if f.gamma <= 1:
        raise NonExplosiveError(f"gamma={f.gamma} <= 1: the explosion time is infinite")
    return f


def t_gamma(f: FeedbackFunction, omega0: int = 1) -> float:
    """Lower bound of the expected explosion time, 1/(η ω0^(γ-1) (γ-1))"""
    f = _require_explosive(f)
    if omega0 < 1:
        raise DomainError(f"omega0 must be >= 1, got {omega0}")
    return 1.0 / (f.eta * float(omega0) ** (f.gamma - 1.0) * (f.gamma - 1.0))


def explosion_time_bounds(f: FeedbackFunction, omega0: int) -> ExplosionBounds:
    """
    Integral-test bounds on E[T] = Σ_{ω≥ω0} 1/f(ω)

    Args:
        f: power law feedback with γ > 1
        omega0: initial ball count

    Returns:
        ExplosionBounds(lower=t_γ, upper=t_γ + 1/(η ω0^γ))
    """
    lower = t_gamma(f, omega0)
    upper = lower + 1.0 / (f.eta * float(omega0) ** f.gamma)
    return ExplosionBounds(lower=lower, upper=upper)


def expected_explosion_time(f: FeedbackFunction, omega0: int, terms: int) -> float:
    """Partial sum Σ_{ω=ω0}^{ω0+terms-1} 1/f(ω) of the expected explosion time series"""
    if terms < 1:
        raise DomainError(f"terms must be >= 1, got {terms}")
    omegas = np.arange(omega0, omega0 + terms, dtype=np.int64)
    return math.fsum((1.0 / f.evaluate_many(omegas)).tolist())
