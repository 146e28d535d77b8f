"""Scalar special functions used by the Bayes-factor formulas.

Everything downstream works in log space, so the gamma function is exposed
only through its logarithm.  The Student-t CDF is computed through the
regularized incomplete beta function and is stable for degrees of freedom
up to at least 1e7, which the limit probes need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special as sps

from .errors import Divergent, DomainError

__all__ = [
    "ProbEstimate",
    "log_gamma",
    "student_t_cdf",
    "gauss_2f1",
    "p_value_t",
    "sellke_bound",
]


@dataclass(frozen=True)
class ProbEstimate:
    """A probability (or positive bound) together with its standard error.

    ``std_error`` is 0 for deterministic results.
    """

    value: float
    std_error: float = 0.0

    def __post_init__(self):
        if self.std_error < 0:
            raise DomainError("std_error must be nonnegative")


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if x <= 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def student_t_cdf(x: float, df: float) -> float:
    """CDF of the central Student t distribution with ``df`` degrees of
    freedom, via the regularized incomplete beta function."""
    if df <= 0:
        raise DomainError(f"student_t_cdf requires df > 0, got {df}")
    if x == 0.0:
        return 0.5
    if math.isinf(x):
        return 0.0 if x < 0 else 1.0
    z = df / (df + x * x)
    tail = 0.5 * sps.betainc(0.5 * df, 0.5, z)
    return tail if x < 0 else 1.0 - tail


def _series_2f1(a: float, b: float, c: float, z: float, max_terms: int = 20000) -> float:
    term = 1.0
    total = 1.0
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if abs(term) <= 1e-16 * abs(total):
            return total
    raise DomainError(f"2F1 series did not converge for z={z}")


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for z in [0, 1].

    Direct power series for z <= 0.5, the z -> 1-z connection formula for
    z in (0.5, 1), and Gauss's summation theorem at z = 1 (which requires
    c - a - b > 0).
    """
    if c <= 0 and c == round(c):
        raise DomainError("c must not be a nonpositive integer")
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"z must be in [0, 1], got {z}")
    if z == 0.0:
        return 1.0
    if z == 1.0:
        d = c - a - b
        if d <= 0:
            raise Divergent(f"2F1 diverges at z=1 when c-a-b={d} <= 0")
        return math.exp(log_gamma(c) + log_gamma(d) - log_gamma(c - a) - log_gamma(c - b))
    if z <= 0.5:
        return _series_2f1(a, b, c, z)
    d = c - a - b
    if abs(d - round(d)) < 1e-8:
        # Connection formula degenerates for integer c-a-b; delegate.
        return float(sps.hyp2f1(a, b, c, z))
    w = 1.0 - z
    g1 = float(sps.gamma(c) * sps.gamma(d) / (sps.gamma(c - a) * sps.gamma(c - b)))
    g2 = float(sps.gamma(c) * sps.gamma(-d) / (sps.gamma(a) * sps.gamma(b)))
    return g1 * _series_2f1(a, b, a + b - c + 1.0, w) + g2 * w**d * _series_2f1(
        c - a, c - b, c - a - b + 1.0, w
    )


def p_value_t(t: float, df: float, sides: str = "two") -> float:
    """Classical p-value of a t statistic: 2(1 - T(|t|)) or 1 - T(t)."""
    if sides == "two":
        return 2.0 * (1.0 - student_t_cdf(abs(t), df))
    if sides == "one":
        return 1.0 - student_t_cdf(t, df)
    raise DomainError(f"sides must be 'one' or 'two', got {sides!r}")


def sellke_bound(p: float) -> float:
    """Upper bound 1 / (-e p log p) on the evidence against the null,
    meaningful for p < 1/e."""
    if not 0.0 < p < 1.0 / math.e:
        raise DomainError(f"sellke_bound requires 0 < p < 1/e, got {p}")
    return 1.0 / (-math.e * p * math.log(p))
