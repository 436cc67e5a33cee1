"""Two-sample Welch t-test."""

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .errors import ArgumentError

__all__ = ["TTestResult", "t_sf_two_sided", "welch_t_test"]


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float
    degenerate: bool = False

    def to_dict(self):
        # JSON has no infinity; the degenerate flag already carries the meaning
        t = self.t if np.isfinite(self.t) else None
        return {"t": t, "df": self.df, "p": self.p, "degenerate": self.degenerate}


def t_sf_two_sided(t, df):
    """Two-sided tail probability ``P(|T| >= |t|)`` for Student's t."""
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def welch_t_test(a, b):
    """Welch's unequal-variance two-sample t-test, two-sided.

    If both samples have zero variance the statistic is undefined; the result
    is then flagged ``degenerate`` with ``t = 0, p = 1`` for equal means and
    ``t = +-inf, p = 0`` otherwise.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size < 2 or b.size < 2:
        raise ArgumentError("each sample needs at least 2 observations")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    diff = a.mean() - b.mean()
    se2 = va + vb
    if se2 == 0.0:
        if diff == 0.0:
            return TTestResult(t=0.0, df=float(a.size + b.size - 2), p=1.0, degenerate=True)
        return TTestResult(t=float(np.copysign(np.inf, diff)), df=float(a.size + b.size - 2),
                           p=0.0, degenerate=True)
    t = diff / np.sqrt(se2)
    df = se2 ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    return TTestResult(t=float(t), df=float(df), p=t_sf_two_sided(t, df))
