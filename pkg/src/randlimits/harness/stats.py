"""Verdicts comparing simulated statistics with analytic values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class BinomialCI:
    z: float = 3.0


@dataclass(frozen=True)
class KS:
    threshold: float = 0.005


@dataclass(frozen=True)
class Absolute:
    tol: float


@dataclass(frozen=True)
class AtLeast:
    pass


@dataclass(frozen=True)
class AtMost:
    pass


Rule = Union[BinomialCI, KS, Absolute, AtLeast, AtMost]


@dataclass(frozen=True)
class Verdict:
    empirical: float
    analytic: float
    ci: tuple[float, float]
    passed: bool
    detail: str = ""


def _gap(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Distance between two closed intervals (0 when they overlap)."""
    return max(a[0] - b[1], b[0] - a[1], 0.0)


def proportion_verdict(
    hits: int,
    unresolved: int,
    n: int,
    target: tuple[float, float],
    rule: Rule,
) -> Verdict:
    """Judge a frequency whose ``unresolved`` trials could fall either way.

    The empirical value is the interval ``[hits/n, (hits+unresolved)/n]``;
    ``target`` is an interval too, so certified analytic bounds pass through.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    lo, hi = hits / n, (hits + unresolved) / n
    mid = (lo + hi) / 2
    t_mid = (target[0] + target[1]) / 2
    if isinstance(rule, BinomialCI):
        sigma = math.sqrt(max(t_mid * (1 - t_mid), 0.0) / n)
        band = rule.z * sigma
        gap = _gap((lo, hi), target)
        # Rounding in the analytic value must not fail a zero-width band.
        passed = gap <= band + 1e-12
        return Verdict(mid, t_mid, (lo - band, hi + band), passed, f"sigma={sigma:.3g}")
    if isinstance(rule, Absolute):
        gap = _gap((lo, hi), target)
        return Verdict(mid, t_mid, (lo, hi), gap <= rule.tol, f"tol={rule.tol}")
    if isinstance(rule, AtLeast):
        return Verdict(mid, t_mid, (lo, hi), lo >= target[0])
    if isinstance(rule, AtMost):
        return Verdict(mid, t_mid, (lo, hi), hi <= target[1])
    raise TypeError(f"rule {rule!r} does not apply to a frequency")


def mean_verdict(samples: np.ndarray, target: float, rule: Rule) -> Verdict:
    x = np.asarray(samples, dtype=float)
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.inf
    if isinstance(rule, Absolute):
        return Verdict(m, target, (m - 3 * se, m + 3 * se), abs(m - target) <= rule.tol, f"tol={rule.tol}")
    if isinstance(rule, BinomialCI):
        # z standard errors of the sample mean
        return Verdict(m, target, (m - rule.z * se, m + rule.z * se), abs(m - target) <= rule.z * se)
    if isinstance(rule, AtLeast):
        return Verdict(m, target, (m, m), m >= target)
    if isinstance(rule, AtMost):
        return Verdict(m, target, (m, m), m <= target)
    raise TypeError(f"rule {rule!r} does not apply to a mean")


def ks_verdict(samples: np.ndarray, cdf: Callable, rule: KS) -> Verdict:
    res = stats.kstest(np.asarray(samples, dtype=float), cdf)
    d = float(res.statistic)
    return Verdict(d, 0.0, (0.0, rule.threshold), d <= rule.threshold, f"pvalue={res.pvalue:.3g}")


OTHER = "other"


def compare_distribution(
    counts: Mapping[object, int],
    analytic: Mapping[object, float],
    rule: Rule,
) -> dict[object, Verdict]:
    """Per-outcome binomial verdicts; outcomes missing from ``analytic`` are
    pooled into an ``"other"`` bucket whose target is the leftover mass."""
    n = sum(counts.values())
    if n < 1:
        raise ValueError("counts must total at least 1")
    for k, p in analytic.items():
        if not 0 <= p <= 1:
            raise ValueError(f"analytic value for {k!r} outside [0, 1]")
    out = {}
    for outcome, p in analytic.items():
        out[outcome] = proportion_verdict(counts.get(outcome, 0), 0, n, (p, p), rule)
    stray = sum(c for k, c in counts.items() if k not in analytic)
    if stray:
        rest = max(0.0, 1.0 - sum(analytic.values()))
        out[OTHER] = proportion_verdict(stray, 0, n, (rest, rest), rule)
    return out


def ks_statistic(samples: np.ndarray, cdf: Callable) -> float:
    return float(stats.kstest(np.asarray(samples, dtype=float), cdf).statistic)
