"""Small statistics helpers for the validation harness."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["sample_var", "skew_kurtosis", "correlation", "ks_distance",
           "ks_critical_value"]


def sample_var(values: np.ndarray, axis=0) -> np.ndarray:
    """Unbiased sample variance (numpy pairwise summation underneath)."""
    return np.var(np.asarray(values, dtype=float), axis=axis, ddof=1)


def skew_kurtosis(values: np.ndarray) -> tuple[float, float]:
    """(sample skewness, excess kurtosis) of a 1-D sample."""
    v = np.asarray(values, dtype=float)
    c = v - v.mean()
    m2 = np.mean(c**2)
    if m2 == 0:
        return 0.0, 0.0
    skew = float(np.mean(c**3) / m2**1.5)
    kurt = float(np.mean(c**4) / m2**2 - 3.0)
    return skew, kurt


def correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation; 0 when either side is degenerate."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.std() == 0.0 or b.std() == 0.0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


def ks_distance(samples: np.ndarray, cdf) -> float:
    """sup_x |F_n(x) - F(x)| for a (possibly mixed) c.d.f. callable.

    Compares right values and left limits at every distinct sample point, so
    ties and atoms of F are handled exactly (the plain order-statistic
    formula assumes a continuous F and no ties).
    """
    xs = np.sort(np.asarray(samples, dtype=float))
    n = len(xs)
    uniq, counts = np.unique(xs, return_counts=True)
    cum = np.cumsum(counts)
    f_right = np.asarray(cdf(uniq), dtype=float)
    f_left = np.asarray(cdf(np.nextafter(uniq, -np.inf)), dtype=float)
    emp_right = cum / n
    emp_left = (cum - counts) / n
    return float(max(np.max(np.abs(emp_right - f_right)),
                     np.max(np.abs(emp_left - f_left))))


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """DKW/asymptotic critical value c(alpha)/sqrt(n)."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)
