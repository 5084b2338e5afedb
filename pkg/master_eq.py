"""
Transient probability mass function of the single-agent pure birth process

p_t(ω) = Σ_{i=ω0}^{ω} a_{ω,i} e^{-f(i) t}, with coefficients from the triangular
recursion

    a_{ω,i} = f(ω-1) / (f(ω) - f(i)) · a_{ω-1,i}    (i < ω)
    a_{ω,ω} = -Σ_{i<ω} a_{ω,i}

Coefficients are built in scaled double-double arithmetic and stored as
(sign, log magnitude). The alternating sum is evaluated with sign-grouped
compensated summation and every result carries a breakdown flag.

Also here: the Poisson and negative binomial closed forms, the first-term
(product form) approximation, its predicted tail, and an ODE oracle that
integrates the truncated master equation directly.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.integrate import solve_ivp

from analysis import TailCurve, TailSource, log_alpha
from compensated import dd_div, dd_mul, exact_sum, normalize, signed_exp_sum, to_sign_log, two_sum
from config import (
    BREAKDOWN_CANCELLATION,
    BREAKDOWN_LOWER,
    BREAKDOWN_UPPER,
    ODE_ATOL,
    ODE_MAX_OMEGA,
    ODE_METHOD,
    ODE_RTOL,
    ROW_SUM_TOLERANCE,
)
from core import FeedbackFunction, PowerLaw
from errors import DistinctnessError, DomainError, IntegrationError, NumericalBreakdownError

logger = logging.getLogger(__name__)

FLAG_OK = "ok"
FLAG_BREAKDOWN = "breakdown"
QUALITY_OK = "ok"
QUALITY_NEGATIVE = "negative"
QUALITY_UNRELIABLE = "unreliable"


@dataclass(frozen=True)
class MasterSolution:
    """
    Coefficient table a_{ω,i} for ω0 <= i <= ω <= omega_max

    signs[k] and log_abs[k] hold row ω = omega0 + k, entries i = omega0..ω.
    """
    feedback: FeedbackFunction
    omega0: int
    omega_max: int
    rates: np.ndarray
    signs: List[np.ndarray]
    log_abs: List[np.ndarray]

    def row(self, omega: int):
        if not self.omega0 <= omega <= self.omega_max:
            raise DomainError(f"omega={omega} outside [{self.omega0}, {self.omega_max}]")
        k = omega - self.omega0
        return self.signs[k], self.log_abs[k]

    def coefficient(self, omega: int, i: int) -> float:
        signs, log_abs = self.row(omega)
        if not self.omega0 <= i <= omega:
            raise DomainError(f"i={i} outside [{self.omega0}, {omega}]")
        k = i - self.omega0
        return float(signs[k]) * math.exp(log_abs[k])


@dataclass(frozen=True)
class PmfPoint:
    omega: int
    t: float
    p: float
    cancellation_ratio: float
    flag: str = FLAG_OK


@dataclass(frozen=True)
class ApproxTerm:
    """
    First term of the coefficient expansion in product form

    log p̂_t(ω) = -η ω0^γ t + γ ln ω0 + ln α(ω)
    """
    eta: float
    gamma: float
    omega0: int = 1

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"ApproxTerm needs eta > 0, got {self.eta}")
        if not self.gamma > 0:
            raise DomainError(f"ApproxTerm needs gamma > 0, got {self.gamma}")
        if self.omega0 < 1:
            raise DomainError(f"ApproxTerm needs omega0 >= 1, got {self.omega0}")

    @property
    def reliable(self) -> bool:
        """The approximation tracks the exact pmf only from a single initial ball"""
        return self.omega0 == 1

    def log_values(self, t: float, omegas: Sequence[int]) -> np.ndarray:
        omegas = np.asarray(omegas, dtype=np.int64)
        if omegas.size and omegas.min() < self.omega0:
            raise DomainError(f"First-term approximation needs omega >= omega0={self.omega0}")
        head = -self.eta * float(self.omega0) ** self.gamma * t + self.gamma * math.log(self.omega0)
        return head + log_alpha(self.gamma, self.omega0, omegas)

    def values(self, t: float, omegas: Sequence[int]) -> np.ndarray:
        return np.exp(self.log_values(t, omegas))


@dataclass(frozen=True)
class TailPrediction:
    value: float
    quality: str


@dataclass(frozen=True)
class OdeResult:
    """pmf over [omega0, omega_max] at time t plus the mass that left the truncation"""
    omegas: np.ndarray
    p: np.ndarray
    deficit: float
    t: float
    omega_max: int


def solve_coefficients(f: FeedbackFunction, omega0: int, omega_max: int) -> MasterSolution:
    """
    Build the coefficient table by the triangular recursion

    Args:
        f: feedback function with pairwise distinct values on [omega0, omega_max]
        omega0: initial ball count
        omega_max: last row

    Raises:
        DomainError: omega_max < omega0 or outside the feedback domain
        DistinctnessError: tied feedback values
    """
    if omega_max < omega0:
        raise DomainError(f"omega_max={omega_max} is below omega0={omega0}")
    if omega0 < f.min_omega:
        raise DomainError(f"omega0 must be >= {f.min_omega}, got {omega0}")
    rates = f.evaluate_many(np.arange(omega0, omega_max + 1, dtype=np.int64))
    if np.unique(rates).size != rates.size:
        raise DistinctnessError(
            "Feedback values must be pairwise distinct for the recursion; use closed_form_poisson for gamma=0"
        )

    # a_{ω0,ω0} = 1 = 0.5 * 2**1
    hi, lo, e = np.array([0.5]), np.array([0.0]), np.array([1], dtype=np.int64)
    signs, logs = [], []
    sign, log_abs = to_sign_log(hi, lo, e)
    signs.append(sign)
    logs.append(log_abs)

    for k in range(1, rates.size):
        den_hi, den_lo = two_sum(rates[k], -rates[:k])
        r_hi, r_lo = dd_div(rates[k - 1], 0.0, den_hi, den_lo)
        new_hi, new_lo = dd_mul(hi, lo, r_hi, r_lo)
        new_hi, new_lo, new_e = normalize(new_hi, new_lo, e)

        s_hi, s_lo, s_e = exact_sum(new_hi, new_lo, new_e)
        hi = np.append(new_hi, -s_hi)
        lo = np.append(new_lo, -s_lo)
        e = np.append(new_e, s_e)

        sign, log_abs = to_sign_log(hi, lo, e)
        signs.append(sign)
        logs.append(log_abs)

    logger.debug(f"Solved coefficient table for omega in [{omega0}, {omega_max}]")
    return MasterSolution(feedback=f, omega0=omega0, omega_max=omega_max, rates=rates,
                          signs=signs, log_abs=logs)


def row_sum_residuals(sol: MasterSolution) -> np.ndarray:
    """|Σ_i a_{ω,i}| / max_i |a_{ω,i}| for every row ω > omega0"""
    residuals = []
    for k in range(1, len(sol.signs)):
        value, ratio = signed_exp_sum(sol.signs[k], sol.log_abs[k])
        residuals.append(0.0 if value == 0.0 else 1.0 / ratio)
    return np.array(residuals)


def mass_function(sol: MasterSolution, t: float, omega: int, strict: bool = False) -> PmfPoint:
    """
    p_t(ω) from the coefficient table

    The result is flagged "breakdown" when it falls outside
    [BREAKDOWN_LOWER, BREAKDOWN_UPPER] or when max|summand| / |result| exceeds
    BREAKDOWN_CANCELLATION. At t = 0 the sum is the row sum, judged against the
    row-sum tolerance instead.

    Raises:
        DomainError: ω outside the table or t < 0
        NumericalBreakdownError: flagged result with strict=True
    """
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    signs, log_abs = sol.row(omega)
    k = omega - sol.omega0
    log_terms = log_abs - sol.rates[:k + 1] * t
    value, ratio = signed_exp_sum(signs, log_terms)

    if t == 0 and omega > sol.omega0:
        ok = abs(value) <= ROW_SUM_TOLERANCE * math.exp(float(np.max(log_abs)))
    else:
        ok = BREAKDOWN_LOWER <= value <= BREAKDOWN_UPPER and ratio <= BREAKDOWN_CANCELLATION
    point = PmfPoint(omega=omega, t=t, p=value, cancellation_ratio=ratio,
                     flag=FLAG_OK if ok else FLAG_BREAKDOWN)
    if not ok and strict:
        raise NumericalBreakdownError(
            f"p_t(omega) at t={t}, omega={omega} = {value:.3e} with cancellation ratio {ratio:.3e}"
        )
    return point


def closed_form_poisson(eta: float, t: float, omega: int, omega0: int) -> float:
    """(ηt)^(ω-ω0) e^(-ηt) / (ω-ω0)!"""
    _check_closed_form(eta, t, omega, omega0)
    if t == 0:
        return 1.0 if omega == omega0 else 0.0
    return float(stats.poisson.pmf(omega - omega0, eta * t))


def closed_form_negbin(eta: float, t: float, omega: int, omega0: int) -> float:
    """C(ω-1, ω-ω0) (1 - e^(-ηt))^(ω-ω0) e^(-η ω0 t)"""
    _check_closed_form(eta, t, omega, omega0)
    if t == 0:
        return 1.0 if omega == omega0 else 0.0
    return float(stats.nbinom.pmf(omega - omega0, omega0, math.exp(-eta * t)))


def _check_closed_form(eta: float, t: float, omega: int, omega0: int) -> None:
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if omega < omega0 or omega0 < 1:
        raise DomainError(f"Need 1 <= omega0 <= omega, got omega0={omega0}, omega={omega}")


def pmf(f: FeedbackFunction, omega0: int, t: float, omegas: Sequence[int],
        sol: Optional[MasterSolution] = None) -> List[PmfPoint]:
    """
    Public pmf entry point

    Constant power-law feedback (γ = 0) has tied rates and goes to the Poisson
    closed form; everything else uses the coefficient table.
    """
    omegas = [int(w) for w in omegas]
    if isinstance(f, PowerLaw) and f.gamma == 0:
        return [PmfPoint(omega=w, t=t, p=closed_form_poisson(f.eta, t, w, omega0), cancellation_ratio=1.0)
                for w in omegas]
    if sol is None:
        sol = solve_coefficients(f, omega0, max(omegas))
    return [mass_function(sol, t, w) for w in omegas]


def first_term_approx(approx: ApproxTerm, t: float, omega: int) -> float:
    """
    p̂_t(ω) = e^{-η ω0^γ t} · Π_{j=ω0+1}^{ω} (1 - (ω0/j)^γ)^{-1} · (ω0/ω)^γ

    Evaluated in log space; ω = ω0 gives e^{-η ω0^γ t}.
    """
    return float(approx.values(t, [omega])[0])


def predicted_tail(approx: ApproxTerm, t: float, omega: int) -> TailPrediction:
    """
    1 - Σ_{k=ω0}^{ω-1} p̂_t(k)

    Small t can drive the value negative; it is returned unchanged with
    quality "negative". Approximations from ω0 > 1 are always "unreliable".
    """
    if omega < approx.omega0:
        raise DomainError(f"predicted_tail needs omega >= omega0={approx.omega0}")
    if omega == approx.omega0:
        value = 1.0
    else:
        terms = approx.values(t, np.arange(approx.omega0, omega))
        value = 1.0 - math.fsum(terms.tolist())
    return TailPrediction(value=value, quality=_tail_quality(approx, value))


def _tail_quality(approx: ApproxTerm, value: float) -> str:
    if not approx.reliable:
        return QUALITY_UNRELIABLE
    if value < 0:
        return QUALITY_NEGATIVE
    return QUALITY_OK


def predicted_tail_curve(approx: ApproxTerm, t: float, omegas: Sequence[int]) -> TailCurve:
    """Predicted tail at every ω in omegas (strictly increasing, >= ω0)"""
    omegas = np.asarray(omegas, dtype=np.int64)
    top = int(omegas.max())
    terms = approx.values(t, np.arange(approx.omega0, top))
    cumulative = np.concatenate([[0.0], np.cumsum(terms)])
    probs = 1.0 - cumulative[omegas - approx.omega0]
    return TailCurve(omegas=omegas, probs=probs, source=TailSource.PREDICTED)


def _integrate(rates: np.ndarray, omega0_index: int, times: Sequence[float]) -> np.ndarray:
    """
    Integrate the truncated master equation with the deficit as last component

    Returns:
        array of shape (len(rates) + 1, len(times))
    """
    n = rates.size
    y0 = np.zeros(n + 1)
    y0[omega0_index] = 1.0

    def rhs(_, y):
        p = y[:n]
        dy = np.empty_like(y)
        dy[:n] = -rates * p
        dy[1:n] += rates[:-1] * p[:-1]
        dy[n] = rates[-1] * p[-1]
        return dy

    t_end = max(times)
    if t_end == 0:
        return np.repeat(y0[:, None], len(times), axis=1)
    sol = solve_ivp(rhs, (0.0, t_end), y0, method=ODE_METHOD, t_eval=sorted(times),
                    rtol=ODE_RTOL, atol=ODE_ATOL)
    if not sol.success:
        logger.error(f"Master equation integration failed: {sol.message}")
        raise IntegrationError(f"Master equation integration failed: {sol.message}")
    return sol.y


def ode_oracle_grid(f: FeedbackFunction, omega0: int, times: Sequence[float], omega_max: int,
                    deficit_target: Optional[float] = None) -> List[OdeResult]:
    """
    Integrate dp/dt for several times on one truncation

    With deficit_target set, omega_max doubles (up to ODE_MAX_OMEGA) until the
    mass past the truncation at the last time is below the target.
    """
    times = sorted(float(t) for t in times)
    if not times or times[0] < 0:
        raise DomainError("ODE oracle needs nonnegative times")
    if omega_max < omega0:
        raise DomainError(f"omega_max={omega_max} is below omega0={omega0}")

    while True:
        omegas = np.arange(omega0, omega_max + 1, dtype=np.int64)
        rates = f.evaluate_many(omegas)
        y = _integrate(rates, 0, times)
        deficit = float(y[-1, -1])
        if deficit_target is None or deficit <= deficit_target:
            break
        if omega_max >= ODE_MAX_OMEGA or omega_max >= f.max_omega:
            logger.warning(
                f"ODE deficit {deficit:.3e} above target {deficit_target:.1e} at truncation omega_max={omega_max}"
            )
            break
        omega_max = int(min(2 * omega_max, ODE_MAX_OMEGA, f.max_omega))
        logger.debug(f"Growing ODE truncation to omega_max={omega_max}")

    return [OdeResult(omegas=omegas, p=y[:-1, k].copy(), deficit=float(y[-1, k]), t=t, omega_max=omega_max)
            for k, t in enumerate(times)]


def ode_oracle(f: FeedbackFunction, omega0: int, t: float, omega_max: int,
               deficit_target: Optional[float] = None) -> OdeResult:
    """pmf over [omega0, omega_max] at time t by direct integration of the master equation"""
    return ode_oracle_grid(f, omega0, [t], omega_max, deficit_target)[0]


def pmf_table(f: FeedbackFunction, omega0: int, times: Sequence[float], omegas: Sequence[int],
              approx: bool = False) -> List[Dict]:
    """
    Rows {omega, t, p, flag} for every (t, ω), plus p_hat and approx_flag when
    approx is set
    """
    omegas = [int(w) for w in omegas]
    sol = None
    if not (isinstance(f, PowerLaw) and f.gamma == 0):
        sol = solve_coefficients(f, omega0, max(omegas))
    term = None
    if approx:
        if not isinstance(f, PowerLaw):
            raise DomainError("First-term approximation needs power-law feedback")
        term = ApproxTerm(eta=f.eta, gamma=f.gamma, omega0=omega0)

    rows = []
    breakdowns = 0
    for t in times:
        points = pmf(f, omega0, t, omegas, sol=sol)
        hats = term.values(t, omegas) if term is not None else None
        for k, point in enumerate(points):
            row = {"omega": point.omega, "t": t, "p": point.p, "flag": point.flag}
            if term is not None:
                row["p_hat"] = float(hats[k])
                row["approx_flag"] = QUALITY_OK if term.reliable else QUALITY_UNRELIABLE
            breakdowns += point.flag == FLAG_BREAKDOWN
            rows.append(row)
    if breakdowns:
        logger.warning(f"{breakdowns} of {len(rows)} pmf values flagged as numerical breakdown")
    return rows


def coefficient_rows(sol: MasterSolution) -> List[Dict]:
    """Debug dump rows {omega, i, sign, log_abs}"""
    rows = []
    for k, (signs, logs) in enumerate(zip(sol.signs, sol.log_abs)):
        omega = sol.omega0 + k
        for j in range(signs.size):
            rows.append({"omega": omega, "i": sol.omega0 + j, "sign": int(signs[j]), "log_abs": float(logs[j])})
    return rows
