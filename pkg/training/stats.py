"""Significance testing and relative improvement."""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from errors import SampleTooSmallError


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    p_value: float
    degrees_of_freedom: int


def unpaired_ttest(errors_a: Sequence[float], errors_b: Sequence[float]) -> TTestResult:
    """
    Two-tailed equal-variance two-sample t-test.

    The pooled variance uses n_a + n_b - 2 degrees of freedom. When both
    samples are constant the statistic is 0 for equal means and infinite
    otherwise.
    """
    a = np.asarray(errors_a, dtype=np.float64).reshape(-1)
    b = np.asarray(errors_b, dtype=np.float64).reshape(-1)
    for sample in (a, b):
        if sample.size < 2:
            raise SampleTooSmallError(sample.size)

    df = a.size + b.size - 2
    pooled = ((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)) / df
    difference = a.mean() - b.mean()
    standard_error = math.sqrt(pooled * (1.0 / a.size + 1.0 / b.size))
    if standard_error == 0.0:
        if difference == 0.0:
            return TTestResult(0.0, 1.0, df)
        return TTestResult(math.copysign(math.inf, difference), 0.0, df)

    t = difference / standard_error
    p = float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))
    return TTestResult(float(t), p, df)


def relative_improvement(variant: float, full: float) -> float:
    """(variant - full) / variant: the share of the variant's error the full model removes."""
    if variant == 0.0:
        return 0.0 if full == 0.0 else -math.inf
    return (variant - full) / variant
