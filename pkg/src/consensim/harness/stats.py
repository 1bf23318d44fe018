"""One-way ANOVA and Welch pairwise comparisons.

The F and t statistics are computed directly from their definitions; tail
probabilities go through the regularized incomplete beta function.  The
pairwise table uses Bonferroni-corrected Welch tests — a conservative
stand-in for Tukey HSD, which would need studentized-range quantiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy import special

PAIRWISE_METHOD_NOTE = (
    "pairwise comparisons use Bonferroni-corrected Welch t-tests "
    "(conservative substitute for Tukey HSD)"
)


def _check_groups(groups: Sequence[Sequence[float]], min_size: int) -> list[np.ndarray]:
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    for idx, a in enumerate(arrays):
        if a.size < min_size:
            raise ValueError(f"group {idx} has {a.size} samples, need >= {min_size}")
    return arrays


def _f_sf(f: float, df_num: float, df_den: float) -> float:
    """Upper tail of the F distribution via the regularized incomplete beta."""
    if math.isinf(f):
        return 0.0
    if f <= 0.0:
        return 1.0
    x = df_den / (df_den + df_num * f)
    return float(special.betainc(df_den / 2.0, df_num / 2.0, x))


def _t_sf(t: float, df: float) -> float:
    """Upper tail of Student's t via the regularized incomplete beta."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    tail = 0.5 * float(special.betainc(df / 2.0, 0.5, x))
    return tail if t >= 0 else 1.0 - tail


def anova_oneway(groups: Sequence[Sequence[float]]) -> tuple[float, float]:
    """One-way ANOVA F statistic and p-value.

    Degenerate inputs with zero within-group variance everywhere yield
    ``(inf, 0.0)`` when the group means differ and ``(0.0, 1.0)`` when they
    do not.
    """
    arrays = _check_groups(groups, min_size=2)
    all_vals = np.concatenate(arrays)
    grand = all_vals.mean()
    ss_between = sum(a.size * (a.mean() - grand) ** 2 for a in arrays)
    ss_within = sum(float(((a - a.mean()) ** 2).sum()) for a in arrays)
    df_between = len(arrays) - 1
    df_within = all_vals.size - len(arrays)
    if ss_within == 0.0:
        if ss_between > 0.0:
            return math.inf, 0.0
        return 0.0, 1.0
    f = (ss_between / df_between) / (ss_within / df_within)
    return float(f), _f_sf(float(f), df_between, df_within)


@dataclass(frozen=True)
class WelchResult:
    statistic: float
    df: float
    pvalue: float


def welch_t(
    a: Sequence[float],
    b: Sequence[float],
    alternative: str = "two-sided",
) -> WelchResult:
    """Welch's unequal-variance t-test.

    ``alternative`` is ``two-sided``, ``greater`` (mean(a) > mean(b)), or
    ``less``.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative: {alternative!r}")
    xa, xb = _check_groups([a, b], min_size=2)
    na, nb = xa.size, xb.size
    va, vb = xa.var(ddof=1), xb.var(ddof=1)
    diff = xa.mean() - xb.mean()
    denom_sq = va / na + vb / nb
    if denom_sq == 0.0:
        if diff == 0.0:
            return WelchResult(0.0, float(na + nb - 2), 1.0)
        t = math.inf if diff > 0 else -math.inf
        df = float(na + nb - 2)
    else:
        t = float(diff / math.sqrt(denom_sq))
        df = float(denom_sq ** 2 / (
            (va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)
        ))
    if alternative == "greater":
        p = _t_sf(t, df)
    elif alternative == "less":
        p = _t_sf(-t, df)
    else:
        p = 2.0 * _t_sf(abs(t), df)
    return WelchResult(t, df, min(1.0, p))


def pairwise_compare(
    groups: Sequence[Sequence[float]],
    alpha_level: float = 0.05,
    labels: Optional[Sequence[str]] = None,
) -> list[dict]:
    """All-pairs Welch tests with Bonferroni correction.

    Returns one row per pair: labels, mean difference, corrected p-value
    (clamped to 1), and a significance flag at ``alpha_level``.
    """
    arrays = _check_groups(groups, min_size=2)
    if labels is None:
        labels = [str(i) for i in range(len(arrays))]
    if len(labels) != len(arrays):
        raise ValueError("labels must match group count")
    pairs = list(combinations(range(len(arrays)), 2))
    rows = []
    for ia, ib in pairs:
        res = welch_t(arrays[ia], arrays[ib])
        corrected = min(1.0, res.pvalue * len(pairs))
        rows.append({
            "pair": (labels[ia], labels[ib]),
            "mean_diff": float(arrays[ia].mean() - arrays[ib].mean()),
            "p_corrected": corrected,
            "significant": corrected < alpha_level,
        })
    return rows
