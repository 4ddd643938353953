"""Welch's two-sample t-test and Cohen's d, with p-values kept in log10 space."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, NumericError

P_FLOOR_LOG10 = -170.0

_FPMIN = 1e-300
_EPS = 1e-15
_MAXIT = 10000


@dataclass(frozen=True)
class StatTestResult:
    t_stat: float
    dof: float
    log10_p: float
    p_floor_applied: bool
    cohens_d: float
    log10_p_exact: float

    @property
    def p_value(self) -> float:
        return 10.0**self.log10_p

    def to_dict(self) -> dict:
        def f(x):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {
            "t_stat": f(self.t_stat),
            "dof": self.dof,
            "log10_p": self.log10_p,
            "p_floor_applied": self.p_floor_applied,
            "cohens_d": f(self.cohens_d),
            "log10_p_exact": f(self.log10_p_exact),
        }


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _FPMIN if abs(d) < _FPMIN else d
        c = 1.0 + aa / c
        c = _FPMIN if abs(c) < _FPMIN else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _FPMIN if abs(d) < _FPMIN else d
        c = 1.0 + aa / c
        c = _FPMIN if abs(c) < _FPMIN else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NumericError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _log_front(a: float, b: float, x: float, one_minus_x: float) -> float:
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return a * math.log(x) + b * math.log(one_minus_x) - math.log(a) - lbeta


def log_betainc(a: float, b: float, x: float, one_minus_x: float | None = None) -> float:
    """Natural log of the regularized incomplete beta I_x(a, b).

    ``one_minus_x`` may be passed to avoid cancellation when x is close to 1.
    """
    omx = 1.0 - x if one_minus_x is None else one_minus_x
    if x <= 0.0:
        return -math.inf
    if omx <= 0.0:
        return 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        return _log_front(a, b, x, omx) + math.log(_betacf(a, b, x))
    # symmetry: I_x(a, b) = 1 - I_{1-x}(b, a)
    rest = math.exp(_log_front(b, a, omx, x)) * _betacf(b, a, omx)
    return math.log1p(-rest) if rest < 1.0 else -math.inf


def t_two_sided_log10_p(t: float, dof: float) -> float:
    """log10 of P(|T| >= |t|) for Student's t with ``dof`` degrees of freedom."""
    if dof <= 0:
        raise DomainError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.0
    if math.isinf(t):
        return -math.inf
    t2 = t * t
    x = dof / (dof + t2)
    omx = t2 / (dof + t2)
    return min(0.0, log_betainc(0.5 * dof, 0.5, x, omx) / math.log(10.0))


def _moments(a: Sequence[float]):
    a = np.asarray(a, dtype=float)
    if a.size < 2:
        raise DomainError("each sample needs at least two entries")
    return a.size, float(np.mean(a)), float(np.var(a, ddof=1))


def cohens_d(a: Sequence[float], b: Sequence[float]) -> float:
    """(mean a - mean b) / pooled standard deviation.

    Zero pooled deviation returns a signed infinity (or 0.0 for equal means).
    """
    na, ma, va = _moments(a)
    nb, mb, vb = _moments(b)
    pooled = math.sqrt(((na - 1) * va + (nb - 1) * vb) / (na + nb - 2))
    diff = ma - mb
    if pooled == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / pooled


def welch_test(a: Sequence[float], b: Sequence[float]) -> StatTestResult:
    na, ma, va = _moments(a)
    nb, mb, vb = _moments(b)
    d = cohens_d(a, b)
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    if se2 == 0.0:
        dof = float(na + nb - 2)
        if ma == mb:
            return StatTestResult(0.0, dof, 0.0, False, d, 0.0)
        t = math.copysign(math.inf, ma - mb)
        return StatTestResult(t, dof, P_FLOOR_LOG10, True, d, -math.inf)
    t = (ma - mb) / math.sqrt(se2)
    dof = se2 * se2 / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    lp = t_two_sided_log10_p(t, dof)
    floored = lp < P_FLOOR_LOG10
    return StatTestResult(t, dof, P_FLOOR_LOG10 if floored else lp, floored, d, lp)
