"""Least-squares order estimation in log-log coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

MIN_POINTS = 4


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    n_points: int

    def bounds(self, confidence=0.95):
        """Two-sided confidence interval for the slope."""
        if self.n_points <= 2:
            return (self.slope, self.slope)
        tq = stats.t.ppf(0.5 + confidence / 2, self.n_points - 2)
        return (self.slope - tq * self.stderr, self.slope + tq * self.stderr)


def loglog_slope(x, y, min_points: int = MIN_POINTS):
    """Fit ``log y = slope * log x + intercept``.

    Returns ``None`` (reported as n/a) when fewer than ``min_points``
    positive samples are available; never extrapolates.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if ok.sum() < min_points:
        return None
    r = stats.linregress(np.log(x[ok]), np.log(y[ok]))
    return SlopeFit(float(r.slope), float(r.intercept), float(r.stderr), int(ok.sum()))


def geometric_grid(lo: float, hi: float, points: int) -> np.ndarray:
    """Decreasing geometric grid from ``hi`` to ``lo`` inclusive."""
    return np.geomspace(hi, lo, points)
