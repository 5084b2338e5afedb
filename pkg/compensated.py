"""
Compensated floating-point arithmetic

Error-free transformations and a small double-double layer used to build the
master-equation coefficient tables. A value is carried as (hi, lo, e) meaning
(hi + lo) * 2**e with |hi| in [0.5, 1), so magnitudes never overflow while the
mantissa keeps roughly 106 bits. All helpers accept numpy arrays elementwise.
"""

import math
from typing import Tuple

import numpy as np

SPLITTER = 134217729.0  # 2**27 + 1
LN2 = math.log(2.0)


def two_sum(a, b):
    """s + err == a + b exactly"""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def quick_two_sum(a, b):
    """Requires |a| >= |b|"""
    s = a + b
    err = b - (s - a)
    return s, err


def split(a):
    t = SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    """p + err == a * b exactly (Dekker)"""
    p = a * b
    ahi, alo = split(a)
    bhi, blo = split(b)
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


def dd_mul(ahi, alo, bhi, blo):
    p, e = two_prod(ahi, bhi)
    e = e + (ahi * blo + alo * bhi)
    return quick_two_sum(p, e)


def dd_div(ahi, alo, bhi, blo):
    q1 = ahi / bhi
    p, e = dd_mul(q1, 0.0, bhi, blo)
    s, f = two_sum(ahi, -p)
    f = f - e
    f = f + alo
    q2 = (s + f) / bhi
    return quick_two_sum(q1, q2)


def normalize(hi, lo, e):
    """Rescale so that |hi| lies in [0.5, 1); zeros keep exponent 0"""
    mant, shift = np.frexp(hi)
    lo = np.ldexp(lo, -shift)
    return mant, lo, np.asarray(e) + shift


def exact_sum(hi: np.ndarray, lo: np.ndarray, e: np.ndarray) -> Tuple[float, float, int]:
    """
    Correctly rounded double-double sum of scaled double-double entries

    Entries are aligned to the largest exponent; parts far below it underflow
    to zero, which is below the double-double resolution of the result anyway.
    """
    hi = np.asarray(hi, dtype=np.float64)
    if hi.size == 0:
        return 0.0, 0.0, 0
    e = np.asarray(e, dtype=np.int64)
    emax = int(e.max())
    parts = np.concatenate([np.ldexp(hi, e - emax), np.ldexp(np.asarray(lo, dtype=np.float64), e - emax)])
    parts = parts.tolist()
    s = math.fsum(parts)
    r = math.fsum(parts + [-s])
    mant, rlo, shift = normalize(np.float64(s), np.float64(r), emax)
    return float(mant), float(rlo), int(shift)


def to_sign_log(hi, lo, e) -> Tuple[np.ndarray, np.ndarray]:
    """
    Convert scaled double-double values to (sign, log|value|)

    Zero values get sign 0 and log magnitude -inf.
    """
    hi = np.asarray(hi, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    sign = np.sign(hi).astype(np.int8)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_abs = np.log(np.abs(hi)) + np.log1p(np.where(hi != 0, lo / hi, 0.0)) + np.asarray(e) * LN2
    log_abs = np.where(sign == 0, -np.inf, log_abs)
    return sign, log_abs


def signed_exp_sum(signs: np.ndarray, log_terms: np.ndarray) -> Tuple[float, float]:
    """
    Sum of signs[k] * exp(log_terms[k]) with cancellation control

    Terms are shifted by the largest exponent, each sign group is summed
    smallest first with math.fsum, and the two group totals are differenced
    once.

    Returns:
        (value, cancellation ratio max|term| / |value|); the ratio is inf when
        the value is exactly zero and there is at least one nonzero term
    """
    signs = np.asarray(signs)
    log_terms = np.asarray(log_terms, dtype=np.float64)
    live = (signs != 0) & np.isfinite(log_terms)
    if not live.any():
        return 0.0, 1.0
    log_terms = log_terms[live]
    signs = signs[live]
    shift = float(log_terms.max())
    scaled = np.exp(log_terms - shift)
    pos = math.fsum(np.sort(scaled[signs > 0]).tolist())
    neg = math.fsum(np.sort(scaled[signs < 0]).tolist())
    diff = pos - neg
    if diff == 0.0:
        return 0.0, math.inf
    value = math.copysign(math.exp(math.log(abs(diff)) + shift), diff)
    return value, 1.0 / abs(diff)
