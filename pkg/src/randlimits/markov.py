"""Birth-death jump chains on {-1, 0, 1, 2, ...}.

A chain moves from state ``i >= 0`` to ``i + 1`` with probability ``p_i`` and
to ``i - 1`` with probability ``q_i = 1 - p_i``.  State 0 is either a
reflecting barrier (``q_0 = 0``) or the door to the absorbing state -1.

All closed forms are evaluated in exact rational arithmetic.  When a series
has no closed form, the result is an :class:`Interval` whose endpoints are
certified by a monotone tail bound.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

Rational = Union[int, Fraction, str]

# Partial sums are extended until the certified gap drops below this.
_SERIES_TOLERANCE = Fraction(1, 10**30)
_MAX_SERIES_TERMS = 4000


class InvalidStateError(ValueError):
    pass


class BoundaryModeError(ValueError):
    """Operation not defined for the chain's boundary behaviour."""


class SingularSystemError(ArithmeticError):
    pass


def as_fraction(x: Rational | float) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` of rationals certified to hold a value."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __float__(self) -> float:
        return float(self.mid)


Probability = Union[Fraction, Interval]


def bounds(value: Probability) -> tuple[Fraction, Fraction]:
    """``(lo, hi)`` for either an exact value or an interval."""
    if isinstance(value, Interval):
        return value.lo, value.hi
    return value, value


# --------------------------------------------------------------------------
# Rates and families


@dataclass(frozen=True)
class RateSequence:
    """A positive sequence ``x_0, x_1, ...``.

    Values come from ``prefix`` while ``i < len(prefix)`` and from
    ``scale * ratio**i`` afterwards.  A sequence built with
    :meth:`from_function` has no known tail and makes series decisions
    inconclusive.
    """

    scale: Fraction = Fraction(1)
    ratio: Fraction = Fraction(1)
    prefix: tuple[Fraction, ...] = ()
    fn: Optional[Callable[[int], Rational]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "scale", as_fraction(self.scale))
        object.__setattr__(self, "ratio", as_fraction(self.ratio))
        object.__setattr__(self, "prefix", tuple(as_fraction(v) for v in self.prefix))
        if self.fn is None and (self.scale <= 0 or self.ratio <= 0):
            raise ValueError("geometric tail needs positive scale and ratio")

    @classmethod
    def geometric(cls, scale: Rational = 1, ratio: Rational = 1, prefix: Iterable[Rational] = ()):
        return cls(as_fraction(scale), as_fraction(ratio), tuple(prefix))

    @classmethod
    def from_function(cls, fn: Callable[[int], Rational]):
        return cls(fn=fn)

    @property
    def has_tail(self) -> bool:
        return self.fn is None

    def __getitem__(self, i: int) -> Fraction:
        if self.fn is not None:
            return as_fraction(self.fn(i))
        if i < len(self.prefix):
            return self.prefix[i]
        return self.scale * self.ratio**i


@dataclass(frozen=True)
class RateSpec:
    birth: RateSequence
    death: RateSequence

    def __post_init__(self):
        if self.birth.has_tail and self.death.has_tail:
            for i in range(max(len(self.birth.prefix), len(self.death.prefix)) + 1):
                if self.birth[i] <= 0:
                    raise ValueError(f"birth rate at {i} must be positive")
                if self.death[i] < 0 or (i >= 1 and self.death[i] == 0):
                    raise ValueError(f"death rate at {i} must be positive for i >= 1")

    def alpha_ratio(self, i: int) -> Fraction:
        return self.birth[i - 1] / self.death[i]

    def beta_ratio(self, i: int) -> Fraction:
        return self.death[i] / self.birth[i]


@dataclass(frozen=True)
class ConstantPQ:
    p: Fraction

    def __post_init__(self):
        object.__setattr__(self, "p", as_fraction(self.p))
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")


@dataclass(frozen=True)
class Table:
    """Explicit ``p_0, ..., p_{L-1}`` followed by a constant tail."""

    prefix: tuple[Fraction, ...]
    tail: ConstantPQ

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(as_fraction(v) for v in self.prefix))
        for v in self.prefix:
            if not 0 < v < 1:
                raise ValueError(f"table entry {v} outside (0, 1)")


@dataclass(frozen=True)
class FromRates:
    rates: RateSpec


Family = Union[ConstantPQ, Table, FromRates]


@dataclass(frozen=True)
class Reflecting:
    pass


@dataclass(frozen=True)
class Absorbing:
    q0: Fraction

    def __post_init__(self):
        object.__setattr__(self, "q0", as_fraction(self.q0))
        if not 0 < self.q0 <= 1:
            raise ValueError(f"q0 must lie in (0, 1], got {self.q0}")


Boundary = Union[Reflecting, Absorbing]


@dataclass(frozen=True)
class _OddsTail:
    # q_i / p_i == coef * base**i for every i >= start
    start: int
    coef: Fraction
    base: Fraction


@dataclass(frozen=True)
class TransitionSpec:
    family: Family
    boundary: Boundary = Reflecting()

    @classmethod
    def constant(cls, p: Rational, q0: Optional[Rational] = None) -> "TransitionSpec":
        """Constant ``p`` for ``i >= 1``; absorbing with ``q0`` if given."""
        boundary = Reflecting() if q0 is None else Absorbing(as_fraction(q0))
        return cls(ConstantPQ(as_fraction(p)), boundary)

    @classmethod
    def from_rates(cls, rates: RateSpec) -> "TransitionSpec":
        lam0, mu0 = rates.birth[0], rates.death[0]
        boundary = Reflecting() if mu0 == 0 else Absorbing(mu0 / (lam0 + mu0))
        return cls(FromRates(rates), boundary)

    @property
    def absorbing(self) -> bool:
        return isinstance(self.boundary, Absorbing)

    def family_p(self, i: int) -> Fraction:
        fam = self.family
        if isinstance(fam, ConstantPQ):
            return fam.p
        if isinstance(fam, Table):
            return fam.prefix[i] if i < len(fam.prefix) else fam.tail.p
        lam, mu = fam.rates.birth[i], fam.rates.death[i]
        return lam / (lam + mu)

    def p(self, i: int) -> Fraction:
        if i < 0:
            raise InvalidStateError(f"state {i} has no outgoing jump")
        if i == 0:
            if isinstance(self.boundary, Reflecting):
                return Fraction(1)
            return 1 - self.boundary.q0
        return self.family_p(i)

    def q(self, i: int) -> Fraction:
        return 1 - self.p(i)

    def odds(self, i: int) -> Fraction:
        """``q_i / p_i`` for ``i >= 1``."""
        p = self.family_p(i)
        return (1 - p) / p

    def odds_tail(self) -> Optional[_OddsTail]:
        fam = self.family
        if isinstance(fam, ConstantPQ):
            return _OddsTail(1, (1 - fam.p) / fam.p, Fraction(1))
        if isinstance(fam, Table):
            p = fam.tail.p
            return _OddsTail(max(len(fam.prefix), 1), (1 - p) / p, Fraction(1))
        birth, death = fam.rates.birth, fam.rates.death
        if not (birth.has_tail and death.has_tail):
            return None
        start = max(len(birth.prefix), len(death.prefix), 1)
        return _OddsTail(start, death.scale / birth.scale, death.ratio / birth.ratio)

    def p_table(self, size: int) -> np.ndarray:
        """Float ``p_i`` for ``0 <= i < size``."""
        out = np.empty(size, dtype=float)
        tail = self.odds_tail()
        for i in range(size):
            if tail is not None and tail.base == 1 and i >= tail.start:
                out[i:] = float(1 / (1 + tail.coef))
                break
            out[i] = float(self.p(i))
        return out


def jump_probabilities(spec: TransitionSpec, i: int) -> tuple[Fraction, Fraction]:
    p = spec.p(i)
    return p, 1 - p


# --------------------------------------------------------------------------
# Initial distributions and paths


@dataclass(frozen=True)
class InitialDistribution:
    weights: tuple[tuple[int, Fraction], ...]

    def __init__(self, weights: Mapping[int, Rational]):
        items = tuple(sorted((int(s), as_fraction(w)) for s, w in weights.items() if as_fraction(w) != 0))
        if any(w < 0 for _, w in items):
            raise ValueError("negative initial weight")
        if any(s < 0 for s, _ in items):
            raise ValueError("initial states must be >= 0")
        if sum(w for _, w in items) != 1:
            raise ValueError("initial weights must sum to exactly 1")
        object.__setattr__(self, "weights", items)

    @classmethod
    def point(cls, state: int) -> "InitialDistribution":
        return cls({state: 1})

    def __iter__(self):
        return iter(self.weights)

    @property
    def support(self) -> list[int]:
        return [s for s, _ in self.weights]

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        states = np.array(self.support, dtype=np.int64)
        if len(states) == 1:
            return int(states[0]) if size is None else np.full(size, states[0], dtype=np.int64)
        probs = np.array([float(w) for _, w in self.weights])
        probs /= probs.sum()
        return rng.choice(states, size=size, p=probs)


@dataclass(frozen=True)
class WalkPath:
    states: tuple[int, ...]
    absorbed: bool
    truncated_at: int

    def __post_init__(self):
        for a, b in zip(self.states, self.states[1:]):
            if abs(a - b) != 1:
                raise ValueError(f"non-adjacent step {a} -> {b}")

    @property
    def maximum(self) -> int:
        return max(self.states)


def simulate_path(
    spec: TransitionSpec,
    initial: InitialDistribution,
    max_steps: int,
    rng: np.random.Generator,
) -> WalkPath:
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    state = int(initial.sample(rng))
    states = [state]
    cache: dict[int, float] = {}
    for _ in range(max_steps):
        p = cache.get(state)
        if p is None:
            p = cache[state] = float(spec.p(state))
        state += 1 if rng.random() < p else -1
        states.append(state)
        if state == -1:
            return WalkPath(tuple(states), True, len(states) - 1)
    return WalkPath(tuple(states), False, max_steps)


@dataclass
class WalkBatch:
    """Terminal data of many independent walks run side by side."""

    start: np.ndarray
    final: np.ndarray
    maximum: np.ndarray
    absorbed: np.ndarray
    escaped: np.ndarray
    steps: np.ndarray

    @property
    def running(self) -> np.ndarray:
        return ~(self.absorbed | self.escaped)


def simulate_batch(
    spec: TransitionSpec,
    start: np.ndarray,
    rng: np.random.Generator,
    max_steps: int,
    *,
    stop_above: Optional[int] = None,
    escape_eps: Optional[float] = None,
) -> WalkBatch:
    """Run one walk per entry of ``start`` for at most ``max_steps`` steps.

    A walk stops when absorbed, when it exceeds ``stop_above``, or when it
    reaches the escape height for ``escape_eps`` (see :func:`escape_height`).
    Escaped walks are flagged; walks that exceed ``stop_above`` are not.
    """
    start = np.asarray(start, dtype=np.int64)
    pos = start.copy()
    peak = start.copy()
    absorbed = np.zeros(len(pos), dtype=bool)
    escaped = np.zeros(len(pos), dtype=bool)
    steps = np.zeros(len(pos), dtype=np.int64)

    height = None
    if escape_eps is not None and spec.absorbing:
        height = escape_height(spec, escape_eps)
    ceiling = int(start.max(initial=0)) + max_steps + 2
    if height is not None:
        ceiling = min(ceiling, height + 2)
    if stop_above is not None:
        ceiling = min(ceiling, stop_above + 2)
    p_table = spec.p_table(ceiling)

    active = np.ones(len(pos), dtype=bool)
    if height is not None:
        escaped = pos >= height
        active &= ~escaped
    if stop_above is not None:
        active &= pos <= stop_above
    idx = np.flatnonzero(active)
    for _ in range(max_steps):
        if idx.size == 0:
            break
        cur = pos[idx]
        cur = cur + np.where(rng.random(idx.size) < p_table[cur], 1, -1)
        pos[idx] = cur
        steps[idx] += 1
        peak[idx] = np.maximum(peak[idx], cur)
        done = cur < 0
        absorbed[idx[done]] = True
        if height is not None:
            esc = cur >= height
            escaped[idx[esc]] = True
            done |= esc
        if stop_above is not None:
            done |= cur > stop_above
        idx = idx[~done]
    return WalkBatch(start, pos, peak, absorbed, escaped, steps)


# --------------------------------------------------------------------------
# Series of b_n = prod_{i=1}^n q_i / p_i  (b_0 = 1)


@dataclass(frozen=True)
class _SeriesSum:
    """Certified bounds on ``sum_{n>=0} b_n``; ``hi is None`` means unbounded."""

    lo: Fraction
    hi: Optional[Fraction]
    divergent: bool = False

    @property
    def exact(self) -> bool:
        return not self.divergent and self.hi == self.lo


def _b_terms(spec: TransitionSpec, upto: int) -> list[Fraction]:
    terms = [Fraction(1)]
    for i in range(1, upto + 1):
        terms.append(terms[-1] * spec.odds(i))
    return terms


def _product_series_converges(coef: Fraction, base: Fraction) -> bool:
    # sum_n prod_{i<=n} coef * base**i
    return base < 1 or (base == 1 and coef < 1)


def _b_total(spec: TransitionSpec, cutoff: int = 256) -> _SeriesSum:
    tail = spec.odds_tail()
    if tail is None:
        terms = _b_terms(spec, cutoff)
        return _SeriesSum(sum(terms), None)
    if not _product_series_converges(tail.coef, tail.base):
        return _SeriesSum(Fraction(0), None, divergent=True)
    m = tail.start - 1
    terms = _b_terms(spec, m)
    head = sum(terms)
    last = terms[-1]
    if tail.base == 1:
        c = tail.coef
        return _SeriesSum(head + last * c / (1 - c), head + last * c / (1 - c))
    # base < 1: ratios shrink, so the next ratio bounds every later one.
    lo = head
    i = m + 1
    while True:
        r = tail.coef * tail.base**i
        if r < 1:
            remainder = last * r / (1 - r)
            if remainder < _SERIES_TOLERANCE or i - m > _MAX_SERIES_TERMS:
                return _SeriesSum(lo, lo + remainder)
        last = last * r
        lo += last
        i += 1


class AbsorptionMode(enum.Enum):
    ABSORB_AT_MINUS_ONE = "absorb"
    NEVER_REACH_ZERO = "never-zero"


def _require_absorbing(spec: TransitionSpec) -> Absorbing:
    if not isinstance(spec.boundary, Absorbing):
        raise BoundaryModeError("requires an absorbing boundary at 0")
    return spec.boundary


def _lift(f: Callable[[Fraction], Fraction], total: _SeriesSum, at_infinity: Fraction) -> Probability:
    """Apply ``f`` (monotone in the series total) to certified bounds."""
    if total.divergent:
        return at_infinity
    a = f(total.lo)
    b = at_infinity if total.hi is None else f(total.hi)
    if a == b:
        return a
    return Interval(min(a, b), max(a, b))


def absorption_probability(
    spec: TransitionSpec,
    i: int,
    mode: AbsorptionMode = AbsorptionMode.ABSORB_AT_MINUS_ONE,
) -> Probability:
    """Probability of reaching -1 (absorbing) or of never reaching 0 (reflecting)."""
    if i < 0:
        raise InvalidStateError(f"state {i} < 0")
    total = _b_total(spec)
    head = sum(_b_terms(spec, i - 1)) if i > 0 else Fraction(0)
    if mode is AbsorptionMode.ABSORB_AT_MINUS_ONE:
        boundary = _require_absorbing(spec)
        # c_n = (q0/p0) b_n; dividing through by q0/p0 keeps p0 = 0 finite.
        door = (1 - boundary.q0) / boundary.q0
        return _lift(lambda s: (s - head) / (door + s), total, Fraction(1))
    if spec.absorbing:
        raise BoundaryModeError("never-reach-zero needs a reflecting boundary")
    if i < 1:
        raise InvalidStateError("never-reach-zero needs i >= 1")
    return _lift(lambda s: head / s, total, Fraction(0))


def escape_height(spec: TransitionSpec, eps: float) -> Optional[int]:
    """Lowest state whose absorption probability is certified below ``eps``.

    ``None`` when absorption is certain (or cannot be bounded).
    """
    _require_absorbing(spec)
    eps_f = as_fraction(eps)

    def residual(x: int) -> Fraction:
        return bounds(absorption_probability(spec, x))[1]

    if residual(0) < eps_f:
        return 0
    if residual(1) >= 1:
        return None
    hi = 1
    while residual(hi) >= eps_f:
        hi *= 2
        if hi > 1 << 20:
            return None
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if residual(mid) < eps_f:
            hi = mid
        else:
            lo = mid
    return hi


def stay_at_most_probability(spec: TransitionSpec, k: int, i: int) -> Fraction:
    """``P(max_t Y_t <= k | Y_0 = i)`` for an absorbing chain, any ``k >= 0``."""
    boundary = _require_absorbing(spec)
    if k < 0:
        raise ValueError("k must be >= 0")
    if i < 0:
        raise InvalidStateError(f"state {i} < 0")
    if i >= k + 1:
        return Fraction(0)
    terms = _b_terms(spec, k)
    door = (1 - boundary.q0) / boundary.q0
    return sum(terms[i:]) / (door + sum(terms))


def max_not_exceeding_probability(spec: TransitionSpec, k: int, i: int) -> Fraction:
    if k < 1:
        raise ValueError("bound k must be >= 1")
    return stay_at_most_probability(spec, k, i)


# --------------------------------------------------------------------------
# Classification


class ChainKind(enum.Enum):
    POSITIVE_RECURRENT = "positive-recurrent"
    NULL_RECURRENT = "null-recurrent"
    TRANSIENT = "transient"
    INCONCLUSIVE = "inconclusive"

    @property
    def recurrent(self) -> bool:
        return self in (ChainKind.POSITIVE_RECURRENT, ChainKind.NULL_RECURRENT)


@dataclass(frozen=True)
class ChainClassification:
    kind: ChainKind
    diagnostics: dict


def _a_terms(spec: TransitionSpec, upto: int) -> list[Fraction]:
    terms, acc = [], Fraction(1)
    for i in range(1, upto + 1):
        acc *= spec.p(i - 1) / spec.q(i)
        terms.append(acc)
    return terms


def classify_chain(spec: TransitionSpec, terms: int = 40) -> ChainClassification:
    if spec.absorbing:
        raise BoundaryModeError("classification is for the reflecting chain")
    a = _a_terms(spec, terms)
    b = _b_terms(spec, terms)[1:]
    diagnostics = {
        "terms": terms,
        "a_partial_sum": float(sum(a)),
        "b_partial_sum": float(sum(b)),
    }
    tail = spec.odds_tail()
    if tail is None:
        return ChainClassification(ChainKind.INCONCLUSIVE, diagnostics)
    diagnostics["tail"] = {"start": tail.start, "coef": str(tail.coef), "base": str(tail.base)}
    total = _b_total(spec)
    if not total.divergent:
        diagnostics["b_sum_bounds"] = (float(total.lo), float(total.hi))
        return ChainClassification(ChainKind.TRANSIENT, diagnostics)
    # p_{i-1}/q_i tends to 0, 1/coef or infinity as base >, =, < 1.
    a_converges = tail.base > 1 or (tail.base == 1 and tail.coef > 1)
    kind = ChainKind.POSITIVE_RECURRENT if a_converges else ChainKind.NULL_RECURRENT
    return ChainClassification(kind, diagnostics)


def uniqueness_criterion(rates: RateSpec) -> Optional[bool]:
    """Whether ``sum_n (alpha_n + beta_n)`` diverges; ``None`` if undecidable.

    With geometric tails the ratios ``alpha_n / alpha_{n-1}`` and
    ``beta_n / beta_{n-1}`` are themselves geometric in ``n``, which settles
    convergence exactly.  Sequences without a known tail give ``None``.
    """
    birth, death = rates.birth, rates.death
    if not (birth.has_tail and death.has_tail):
        return None
    # past both prefixes: lambda_{i-1}/mu_i = (s_l / (s_m r_l)) (r_l/r_m)^i
    alpha_coef = birth.scale / (death.scale * birth.ratio)
    alpha_base = birth.ratio / death.ratio
    beta_coef = death.scale / birth.scale
    beta_base = death.ratio / birth.ratio
    return not (
        _product_series_converges(alpha_coef, alpha_base)
        and _product_series_converges(beta_coef, beta_base)
    )


# --------------------------------------------------------------------------
# Finite linear-system oracle


def _solve_exact(a: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(rhs)
    m = [row[:] + [rhs[r]] for r, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise SingularSystemError("hitting system is singular")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def finite_hitting_oracle(
    spec: TransitionSpec,
    states: Sequence[int],
    target: Iterable[int],
    start: int,
) -> Fraction:
    """Exact probability of ever hitting ``target`` from ``start``.

    Solves ``h = 1`` on the target and ``h(x) = p_x h(x+1) + q_x h(x-1)``
    elsewhere by Gaussian elimination over the rationals.  State -1 is
    absorbing.  Every jump out of ``states`` must land in ``target``.
    """
    states = sorted(set(states))
    target = set(target)
    if not target <= set(states):
        raise ValueError("target must be a subset of states")
    if start not in states:
        raise InvalidStateError(f"start {start} not among states")
    if start in target:
        return Fraction(1)
    unknown = [s for s in states if s not in target and s != -1]
    if start == -1:
        return Fraction(0)
    index = {s: k for k, s in enumerate(unknown)}
    size = len(unknown)
    a = [[Fraction(0)] * size for _ in range(size)]
    rhs = [Fraction(0)] * size
    for s, row in index.items():
        a[row][row] += 1
        p, q = jump_probabilities(spec, s)
        for nxt, w in ((s + 1, p), (s - 1, q)):
            if w == 0:
                continue
            if nxt in target:
                rhs[row] += w
            elif nxt in index:
                a[row][index[nxt]] -= w
            elif nxt == -1:
                continue
            else:
                raise ValueError(f"jump {s} -> {nxt} leaves the state range")
    return _solve_exact(a, rhs)[index[start]]


__all__ = [
    "Absorbing",
    "AbsorptionMode",
    "BoundaryModeError",
    "ChainClassification",
    "ChainKind",
    "ConstantPQ",
    "FromRates",
    "InitialDistribution",
    "Interval",
    "InvalidStateError",
    "Probability",
    "RateSequence",
    "RateSpec",
    "Reflecting",
    "SingularSystemError",
    "Table",
    "TransitionSpec",
    "WalkBatch",
    "WalkPath",
    "absorption_probability",
    "as_fraction",
    "bounds",
    "classify_chain",
    "escape_height",
    "finite_hitting_oracle",
    "jump_probabilities",
    "max_not_exceeding_probability",
    "simulate_batch",
    "simulate_path",
    "stay_at_most_probability",
    "uniqueness_criterion",
]
