"""Random radius of comparison ``R = W0 * 2**(-W)``.

``W = 0.W1 W2 ...`` in binary with independent bits, ``P(W_n = 0) = p_n``
where ``p_n = 1 / (1 + exp(beta / 2**n))``.  ``W0`` is drawn from a finitely
supported distribution on ``{0} U {2**k}``.  This module samples ``R`` and
evaluates its exact distribution and mean.

The "tame or exotic" variation lives here too: choice ``i`` is tame with
probability ``p_i``, and the limit is Z-stable exactly when tame choices
occur infinitely often.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

import numpy as np
from scipy.special import expit

from .markov import as_fraction

LN2 = math.log(2.0)
# |beta| or |beta - ln 2| below this uses the limiting formulas.
SPECIAL_CASE_WIDTH = 1e-8
DEFAULT_BIT_BUDGET = 53


class UnsupportedInputError(ValueError):
    pass


def _power_of_two_exponent(x: Fraction) -> int:
    num, den = x.numerator, x.denominator
    if x <= 0 or num & (num - 1) or den & (den - 1):
        raise ValueError(f"{x} is not an integer power of two")
    return num.bit_length() - den.bit_length()


@dataclass(frozen=True)
class BetaWalkSpec:
    beta: float
    initial: tuple[tuple[Fraction, Fraction], ...]
    bit_budget: int = DEFAULT_BIT_BUDGET

    def __init__(self, beta: float, initial: Mapping, bit_budget: int = DEFAULT_BIT_BUDGET):
        if not isinstance(initial, Mapping):
            raise UnsupportedInputError("initial distribution must be a finite mapping")
        items = []
        for value, weight in initial.items():
            v, w = as_fraction(value), as_fraction(weight)
            if v != 0:
                _power_of_two_exponent(v)
            if w < 0:
                raise ValueError("negative weight")
            if w:
                items.append((v, w))
        if sum(w for _, w in items) != 1:
            raise ValueError("initial weights must sum to 1")
        if not 1 <= bit_budget <= 53:
            raise ValueError("bit_budget must lie in [1, 53] for double-precision R")
        object.__setattr__(self, "beta", float(beta))
        object.__setattr__(self, "initial", tuple(sorted(items)))
        object.__setattr__(self, "bit_budget", int(bit_budget))

    @property
    def zero_mass(self) -> Fraction:
        return sum((w for v, w in self.initial if v == 0), Fraction(0))

    @property
    def scale(self) -> Fraction:
        """``sum_k 2**k * pi_{2**k}``, the mean of ``W0``."""
        return sum((v * w for v, w in self.initial), Fraction(0))


@dataclass(frozen=True)
class RocSample:
    w0: Fraction
    bits: tuple[int, ...]
    r: float = field(compare=False)

    @property
    def w(self) -> float:
        return sum(b * 2.0 ** -(i + 1) for i, b in enumerate(self.bits))


def bit_probability(beta: float, n: int) -> float:
    """``p_n``, the probability that bit ``n`` is 0."""
    if n < 1:
        raise ValueError("bits are indexed from 1")
    return float(expit(-beta / 2.0**n))


def w_density(beta: float, x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if beta == 0.0:
        return 1.0
    return beta * math.exp(beta * x) / math.expm1(beta)


def survival_2_pow_minus_w(beta: float, x: float) -> float:
    """``P(2**(-W) >= x)``, the piecewise function ``G_beta``."""
    if x <= 0.5:
        return 1.0
    if x >= 1.0:
        return 0.0
    log2x = math.log(x) / LN2
    if abs(beta) < SPECIAL_CASE_WIDTH:
        return -log2x
    return math.expm1(-beta * log2x) / math.expm1(beta)


def ccdf_R(spec: BetaWalkSpec, r: float) -> float:
    """``P(R >= r)`` for ``r > 0``."""
    if r <= 0:
        raise ValueError("r must be positive")
    total = 0.0
    for value, weight in spec.initial:
        if value:
            total += float(weight) * survival_2_pow_minus_w(spec.beta, r / float(value))
    return min(max(total, 0.0), 1.0)


def cdf_R(spec: BetaWalkSpec, r) -> np.ndarray:
    """Vectorised ``P(R <= r)``; continuous except for the atom ``P(R = 0)``."""
    r = np.asarray(r, dtype=float)
    out = np.full(r.shape, float(spec.zero_mass))
    beta = spec.beta
    for value, weight in spec.initial:
        if not value:
            continue
        x = r / float(value)
        with np.errstate(divide="ignore", invalid="ignore"):
            log2x = np.log(np.clip(x, 0.5, 1.0)) / LN2
            if abs(beta) < SPECIAL_CASE_WIDTH:
                g = -log2x
            else:
                g = np.expm1(-beta * log2x) / math.expm1(beta)
        g = np.where(x <= 0.5, 1.0, np.where(x >= 1.0, 0.0, g))
        out += float(weight) * (1.0 - g)
    return np.where(r < 0, 0.0, out)


def mean_factor(beta: float) -> float:
    """``E(R) / E(W0)`` as a function of ``beta``."""
    if abs(beta) < SPECIAL_CASE_WIDTH:
        return 1.0 / math.log(4.0)
    if abs(beta - LN2) < SPECIAL_CASE_WIDTH:
        return LN2
    e = math.exp(beta)
    return beta * (e - 2.0) / (2.0 * math.expm1(beta) * (beta - LN2))


def expected_R(spec: BetaWalkSpec) -> float:
    return float(spec.scale) * mean_factor(spec.beta)


def prob_zstable(spec: BetaWalkSpec) -> Fraction:
    """Probability that ``R = 0``, i.e. ``W0 = 0``."""
    return spec.zero_mass


def _bit_one_probabilities(beta: float, budget: int) -> np.ndarray:
    n = np.arange(1, budget + 1)
    return expit(beta / 2.0**n)


def sample_R(spec: BetaWalkSpec, rng: np.random.Generator) -> RocSample:
    values = [v for v, _ in spec.initial]
    weights = np.array([float(w) for _, w in spec.initial])
    w0 = values[int(rng.choice(len(values), p=weights / weights.sum()))]
    q = _bit_one_probabilities(spec.beta, spec.bit_budget)
    bits = tuple(int(b) for b in rng.random(spec.bit_budget) < q)
    w_int = 0
    for b in bits:
        w_int = (w_int << 1) | b
    w = w_int / 2.0**spec.bit_budget
    return RocSample(w0, bits, float(w0) * 2.0**-w)


def sample_R_batch(spec: BetaWalkSpec, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """``(w0, r)`` arrays for ``size`` independent samples."""
    values = np.array([float(v) for v, _ in spec.initial])
    weights = np.array([float(w) for _, w in spec.initial])
    if len(values) == 1:
        w0 = np.full(size, values[0])
    else:
        w0 = values[rng.choice(len(values), size=size, p=weights / weights.sum())]
    w_int = np.zeros(size, dtype=np.uint64)
    for q in _bit_one_probabilities(spec.beta, spec.bit_budget):
        w_int = (w_int << np.uint64(1)) | (rng.random(size) < q).astype(np.uint64)
    w = w_int.astype(float) / 2.0**spec.bit_budget
    return w0, w0 * np.exp2(-w)


# --------------------------------------------------------------------------
# Tame / exotic choices


@dataclass(frozen=True)
class ConstantQ:
    q: Fraction

    def __post_init__(self):
        object.__setattr__(self, "q", as_fraction(self.q))
        if not 0 <= self.q <= 1:
            raise ValueError("q must lie in [0, 1]")

    def __call__(self, i: int) -> Fraction:
        return self.q


@dataclass(frozen=True)
class OneMinusInverseSquare:
    """``q_1 = first`` and ``q_i = 1 - 1/i**2`` for ``i >= 2``."""

    first: Fraction = Fraction(1, 2)

    def __call__(self, i: int) -> Fraction:
        return as_fraction(self.first) if i == 1 else 1 - Fraction(1, i * i)


@dataclass(frozen=True)
class QTable:
    """Explicit ``q_1, ..., q_L`` then a constant tail ``q``."""

    prefix: tuple[Fraction, ...]
    tail: Fraction

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(as_fraction(v) for v in self.prefix))
        object.__setattr__(self, "tail", as_fraction(self.tail))

    def __call__(self, i: int) -> Fraction:
        return self.prefix[i - 1] if i <= len(self.prefix) else self.tail


QFamily = Union[ConstantQ, OneMinusInverseSquare, QTable]


def _tail_product(family: QFamily, m: int) -> Fraction:
    """``prod_{i >= m} q_i`` in closed form."""
    if isinstance(family, ConstantQ):
        return Fraction(1) if family.q == 1 else Fraction(0)
    if isinstance(family, QTable):
        head = Fraction(1)
        for i in range(m, len(family.prefix) + 1):
            head *= family(i)
        return head if family.tail == 1 else Fraction(0)
    if m >= 2:
        return Fraction(m - 1, m)
    return as_fraction(family.first) * Fraction(1, 2)


def zstable_probability(family: QFamily) -> Fraction:
    """Probability that tame choices occur infinitely often.

    Equals ``1 - sum_{j>=0} p_j prod_{i>j} q_i`` with ``p_0 = 1``; the sum
    is the probability that the last tame choice happens at step ``j``.
    """
    p = lambda j: Fraction(1) if j == 0 else 1 - family(j)
    if isinstance(family, OneMinusInverseSquare):
        # j >= 2 terms are 1/(j(j+1)), which telescope to 1/2
        finite = p(0) * _tail_product(family, 1) + p(1) * _tail_product(family, 2)
        return 1 - finite - Fraction(1, 2)
    if isinstance(family, ConstantQ):
        return Fraction(1) if family.q < 1 else Fraction(0)
    if family.tail < 1:
        return Fraction(1)
    return 1 - sum(p(j) * _tail_product(family, j + 1) for j in range(len(family.prefix) + 1))


def tame_in_window_probability(family: QFamily, start: int, stop: int) -> Fraction:
    """Probability of at least one tame choice among steps ``start..stop``."""
    prod = Fraction(1)
    for i in range(start, stop + 1):
        prod *= family(i)
    return 1 - prod


def simulate_tame_choices(family: QFamily, horizon: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Boolean ``(trials, horizon)`` array, column ``i-1`` marking a tame step ``i``."""
    p = np.array([1.0 - float(family(i)) for i in range(1, horizon + 1)])
    return rng.random((trials, horizon)) < p
