"""Paired t-tests and simple least-squares regression.

The p-value of the t-test is computed from the regularized incomplete beta
function, evaluated with a continued fraction (modified Lentz), so the
module depends only on the standard library and numpy.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateX, DomainError, LengthMismatch, TooFewSamples

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 20000


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    p_value: float
    df: int
    degenerate: bool = False

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "df": self.df,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared}


def _beta_continued_fraction(x, a, b):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise DomainError(f"continued fraction did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(x, a, b):
    """Regularized incomplete beta function ``I_x(a, b)``.

    Uses the continued fraction on whichever side of
    ``x = (a + 1) / (a + b + 2)`` converges fastest, together with the
    identity ``I_x(a, b) = 1 - I_{1-x}(b, a)``.
    """
    x = float(x)
    a = float(a)
    b = float(b)
    if not (a > 0 and b > 0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"a and b must be positive and finite, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(x, a, b) / a
    return 1.0 - front * _beta_continued_fraction(1.0 - x, b, a) / b


def t_two_sided_p(statistic, df):
    """Two-sided p-value of Student's t with ``df`` degrees of freedom."""
    if math.isinf(statistic):
        return 0.0
    x = df / (df + statistic * statistic)
    return regularized_incomplete_beta(x, 0.5 * df, 0.5)


def paired_t_test(a, b):
    """Two-sided paired t-test of ``mean(a - b) == 0``.

    When every pairwise difference is exactly zero the result is flagged
    ``degenerate`` and reported as statistic 0, p-value 0.  When the
    differences are all equal but nonzero the statistic is infinite and the
    p-value 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"paired samples differ in shape: {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise TooFewSamples(f"paired t-test needs at least 2 pairs, got {n}")
    d = a - b
    df = n - 1
    if np.all(d == 0.0):
        return TTestResult(0.0, 0.0, df, degenerate=True)
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return TTestResult(math.copysign(math.inf, mean), 0.0, df)
    stat = mean / (sd / math.sqrt(n))
    return TTestResult(stat, t_two_sided_p(stat, df), df)


def linear_regression(xs, ys):
    """Ordinary least-squares fit ``ys ~ slope * xs + intercept``.

    ``r_squared`` is ``1 - SS_res / SS_tot``; it is defined as 0 when ``ys``
    is constant.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise LengthMismatch(f"xs and ys differ in shape: {xs.shape} vs {ys.shape}")
    if xs.size < 2:
        raise TooFewSamples("regression needs at least 2 points")
    xc = xs - xs.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise DegenerateX("all xs are equal")
    yc = ys - ys.mean()
    slope = float(xc @ yc) / sxx
    intercept = float(ys.mean() - slope * xs.mean())
    ss_tot = float(yc @ yc)
    if ss_tot == 0.0:
        return RegressionResult(slope, intercept, 0.0)
    resid = ys - (slope * xs + intercept)
    r2 = 1.0 - float(resid @ resid) / ss_tot
    return RegressionResult(slope, intercept, min(1.0, max(0.0, r2)))


def pearson(xs, ys):
    """Pearson correlation; 0 when either input is constant."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        return 0.0
    return float(xc @ yc) / denom
