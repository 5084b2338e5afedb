"""
Tail estimation and diagnostics

Power-law and exponential maximum-likelihood fits, log-log tail slopes, tail
comparison by step interpolation and the regular-variation diagnostic of the
first-term coefficient sequence α(ω).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from errors import DegenerateFitError, DomainError

logger = logging.getLogger(__name__)


class TailSource(str, Enum):
    EMPIRICAL = "Empirical"
    PREDICTED = "Predicted"


@dataclass(frozen=True)
class TailCurve:
    """
    Tail probabilities P(X >= ω) at strictly increasing ω

    Evaluation between stored points is right-continuous: the value at ω is the
    value of the largest stored point not above ω.
    """
    omegas: np.ndarray
    probs: np.ndarray
    source: TailSource = TailSource.EMPIRICAL

    def __post_init__(self):
        omegas = np.asarray(self.omegas)
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "probs", probs)
        if omegas.shape != probs.shape or omegas.ndim != 1 or omegas.size == 0:
            raise DomainError("TailCurve needs matching nonempty omega and probability vectors")
        if np.any(np.diff(omegas) <= 0):
            raise DomainError("TailCurve omegas must be strictly increasing")
        if np.any(np.diff(probs) > 0):
            raise DomainError("TailCurve probabilities must be nonincreasing")
        if probs[0] > 1.0:
            raise DomainError(f"TailCurve first probability exceeds 1: {probs[0]}")
        if self.source == TailSource.EMPIRICAL and np.any(probs <= 0):
            raise DomainError("Empirical tail probabilities must be positive")

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.omegas.tolist(), self.probs.tolist()))

    def __len__(self) -> int:
        return int(self.omegas.size)

    def at(self, omega: float) -> float:
        """Right-continuous step value at ω"""
        if omega < self.omegas[0]:
            raise DomainError(f"TailCurve undefined below its first point {self.omegas[0]}, got {omega}")
        k = int(np.searchsorted(self.omegas, omega, side="right")) - 1
        return float(self.probs[k])


@dataclass(frozen=True)
class PowerLawFit:
    """Continuous power-law fit of the density tail x^(-beta) above x_min"""
    beta: float
    x_min: float
    n_tail: int
    std_err: float

    def to_dict(self) -> dict:
        return {"beta": self.beta, "x_min": self.x_min, "n_tail": self.n_tail, "std_err": self.std_err}


@dataclass(frozen=True)
class RegVarDiag:
    gamma: float
    omega0: int
    values: List[Tuple[int, float]] = field(default_factory=list)


def fit_power_law_mle(samples: Iterable[float], x_min: float) -> PowerLawFit:
    """
    Continuous maximum-likelihood estimate of the tail exponent

    Discrete counts are treated as continuous values. x_min is always supplied
    by the caller.

    Args:
        samples: positive values
        x_min: lower cutoff of the tail

    Returns:
        PowerLawFit with beta = 1 + n / Σ ln(x/x_min) and std_err = (beta - 1)/√n

    Raises:
        DomainError: fewer than two samples at or above x_min
        DegenerateFitError: every tail sample equals x_min
    """
    if not x_min > 0:
        raise DomainError(f"x_min must be positive, got {x_min}")
    x = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=np.float64)
    tail = x[x >= x_min]
    n_tail = int(tail.size)
    if n_tail < 2:
        raise DomainError(f"Need at least 2 samples >= x_min={x_min}, got {n_tail}")

    log_sum = math.fsum(np.log(tail / x_min).tolist())
    if log_sum <= 0:
        raise DegenerateFitError(f"All {n_tail} tail samples equal x_min={x_min}; exponent undefined")

    beta = 1.0 + n_tail / log_sum
    std_err = (beta - 1.0) / math.sqrt(n_tail)
    logger.info(f"Power-law fit: beta={beta:.4f} ± {std_err:.4f} over {n_tail} samples >= {x_min}")
    return PowerLawFit(beta=beta, x_min=float(x_min), n_tail=n_tail, std_err=std_err)


def fit_exponential(samples: Iterable[float]) -> float:
    """Maximum-likelihood rate 1/mean of exponential samples"""
    x = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=np.float64)
    if x.size == 0:
        raise DomainError("Exponential fit needs at least one sample")
    if np.any(x <= 0):
        raise DomainError("Exponential fit needs positive samples")
    mean = math.fsum(x.tolist()) / x.size
    return 1.0 / mean


def fit_report(fit: PowerLawFit) -> dict:
    return fit.to_dict()


def tail_slope(curve: TailCurve, omega_lo: float, omega_hi: float) -> float:
    """Least-squares slope of ln P against ln ω over [omega_lo, omega_hi]"""
    mask = (curve.omegas >= omega_lo) & (curve.omegas <= omega_hi) & (curve.probs > 0)
    if int(mask.sum()) < 3:
        raise DomainError(
            f"tail_slope needs >= 3 positive points in [{omega_lo}, {omega_hi}], got {int(mask.sum())}"
        )
    x = np.log(curve.omegas[mask].astype(np.float64))
    y = np.log(curve.probs[mask])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def tail_compare(a: TailCurve, b: TailCurve, omega_window: Tuple[float, float]) -> float:
    """
    Largest absolute gap between two tails over a window

    Both curves are evaluated by right-continuous step interpolation at the
    window start and at every breakpoint of either curve inside the window.
    """
    lo, hi = omega_window
    if lo > hi:
        raise DomainError(f"Empty comparison window [{lo}, {hi}]")
    grid = np.concatenate([[lo], a.omegas[(a.omegas >= lo) & (a.omegas <= hi)],
                           b.omegas[(b.omegas >= lo) & (b.omegas <= hi)]])
    grid = np.unique(grid)
    return max(abs(a.at(w) - b.at(w)) for w in grid)


def log_alpha(gamma: float, omega0: int, omegas: Sequence[int]) -> np.ndarray:
    """
    ln α(ω) with α(ω) = Π_{j=ω0+1}^{ω} (1 - (ω0/j)^γ)^(-1) · ω^(-γ)

    The product is accumulated as a running sum of logs.
    """
    if not gamma > 0:
        raise DomainError(f"log_alpha needs gamma > 0, got {gamma}")
    omegas = np.asarray(omegas, dtype=np.int64)
    if omegas.size == 0:
        return np.zeros(0)
    if omegas.min() < omega0:
        raise DomainError(f"log_alpha needs omega >= omega0={omega0}")
    top = int(omegas.max())
    j = np.arange(omega0 + 1, top + 1, dtype=np.float64)
    terms = -np.log1p(-(omega0 / j) ** gamma)
    cumulative = np.concatenate([[0.0], np.cumsum(terms)])
    return cumulative[omegas - omega0] - gamma * np.log(omegas.astype(np.float64))


def regvar_diagnostic(gamma: float, omega0: int, omega_list: Sequence[int]) -> RegVarDiag:
    """
    d_ω = ω(1 - α(ω-1)/α(ω)), which tends to -γ

    Uses the simplified exact form ω(1 - (ω^γ - ω0^γ)/(ω-1)^γ).
    """
    if not gamma > 1:
        raise DomainError(f"Regular-variation diagnostic assumes gamma > 1, got {gamma}")
    values = []
    for omega in omega_list:
        omega = int(omega)
        if omega < omega0 + 2:
            raise DomainError(f"d_omega is defined for omega >= omega0 + 2, got {omega}")
        w = float(omega)
        d = w * (1.0 - (w ** gamma - float(omega0) ** gamma) / (w - 1.0) ** gamma)
        values.append((omega, d))
    return RegVarDiag(gamma=gamma, omega0=omega0, values=values)


def regvar_from_product(gamma: float, omega0: int, omega_list: Sequence[int]) -> List[Tuple[int, float]]:
    """d_ω computed from the product definition of α in log space"""
    omegas = np.asarray(omega_list, dtype=np.int64)
    if omegas.size and omegas.min() < omega0 + 2:
        raise DomainError(f"d_omega is defined for omega >= {omega0 + 2}, got {omegas.min()}")
    upper = log_alpha(gamma, omega0, omegas)
    lower = log_alpha(gamma, omega0, omegas - 1)
    d = -omegas.astype(np.float64) * np.expm1(lower - upper)
    return list(zip(omegas.tolist(), d.tolist()))
