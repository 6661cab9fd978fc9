"""Random UHF algebras driven by a birth-death walk on the primes.

Visiting state ``n >= 1`` tensors on a copy of ``M_{m_n}`` where ``m_n`` is
the n-th prime; states 0 and -1 contribute the scalars.  The algebra is
recorded by its supernatural number.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .markov import (
    BoundaryModeError,
    ChainKind,
    InitialDistribution,
    Interval,
    Probability,
    TransitionSpec,
    WalkPath,
    absorption_probability,
    bounds,
    classify_chain,
    simulate_path,
    stay_at_most_probability,
)


@lru_cache(maxsize=None)
def _primes_upto(limit: int) -> tuple[int, ...]:
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(limit**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, limit + 1, i)))
    return tuple(i for i, v in enumerate(sieve) if v)


def prime_enumeration(n: int) -> int:
    """``m_n``: 1 for ``n in {-1, 0}``, else the n-th prime (``m_1 = 2``)."""
    if n < -1:
        raise ValueError(f"index {n} < -1")
    if n <= 0:
        return 1
    limit = 16
    while True:
        primes = _primes_upto(limit)
        if len(primes) >= n:
            return primes[n - 1]
        limit *= 2


def prime_index(p: int) -> int:
    """Inverse of :func:`prime_enumeration` on primes."""
    n = 1
    while True:
        m = prime_enumeration(n)
        if m == p:
            return n
        if m > p:
            raise ValueError(f"{p} is not prime")
        n += 1


class Terminal(enum.Enum):
    ABSORBED = "absorbed"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class SupernaturalNumber:
    exponents: tuple[tuple[int, int], ...]
    trajectory_length: int
    terminal: Terminal

    @property
    def as_dict(self) -> dict[int, int]:
        return dict(self.exponents)

    def exponent(self, prime: int) -> int:
        return self.as_dict.get(prime, 0)

    @property
    def order(self) -> int | None:
        """``N`` with the algebra equal to ``M_N``; ``None`` unless absorbed."""
        if self.terminal is not Terminal.ABSORBED:
            return None
        n = 1
        for p, e in self.exponents:
            n *= p**e
        return n

    @property
    def largest_prime(self) -> int:
        return max((p for p, _ in self.exponents), default=1)

    def __str__(self) -> str:
        return " ".join(f"{p}^{e}" for p, e in self.exponents)


@dataclass(frozen=True)
class UhfSample:
    path: WalkPath
    number: SupernaturalNumber


def build_supernatural(path: WalkPath) -> SupernaturalNumber:
    counts: dict[int, int] = {}
    for state in path.states:
        if state >= 1:
            counts[state] = counts.get(state, 0) + 1
    exponents = tuple(sorted((prime_enumeration(s), c) for s, c in counts.items()))
    terminal = Terminal.ABSORBED if path.absorbed else Terminal.TRUNCATED
    return SupernaturalNumber(exponents, len(path.states) - 1, terminal)


def sample_uhf(
    spec: TransitionSpec,
    initial: InitialDistribution,
    max_steps: int,
    rng: np.random.Generator,
) -> UhfSample:
    path = simulate_path(spec, initial, max_steps, rng)
    return UhfSample(path, build_supernatural(path))


def _mix(initial: InitialDistribution, per_state) -> Probability:
    lo = hi = Fraction(0)
    for state, weight in initial:
        a, b = bounds(per_state(state))
        lo += weight * a
        hi += weight * b
    return lo if lo == hi else Interval(lo, hi)


def prob_finite_dimensional(spec: TransitionSpec, initial: InitialDistribution) -> Probability:
    """Probability that the walk is absorbed, i.e. the algebra is some ``M_N``."""
    if not spec.absorbing:
        raise BoundaryModeError("finite-dimensional outcomes need an absorbing boundary")
    return _mix(initial, lambda i: absorption_probability(spec, i))


def prob_bounded_prime(spec: TransitionSpec, initial: InitialDistribution, k: int) -> Fraction:
    """Probability of ``M_N`` with every prime factor of ``N`` at most ``m_k``."""
    if not spec.absorbing:
        raise BoundaryModeError("bounded-prime outcomes need an absorbing boundary")
    if k < 0:
        raise ValueError("k must be >= 0")
    return _mix(initial, lambda i: stay_at_most_probability(spec, k, i))


class UhfType(enum.Enum):
    UNIVERSAL_Q = "universal-Q"
    FINITE_TYPE = "finite-type"
    INCONCLUSIVE = "inconclusive"


def classify_uhf_type(spec: TransitionSpec) -> UhfType:
    """Almost-sure type of the algebra built from a reflecting walk.

    Recurrent walks visit every state infinitely often, so every prime has
    infinite multiplicity; transient walks visit each state finitely often.
    """
    if spec.absorbing:
        raise BoundaryModeError("type classification needs a reflecting boundary")
    kind = classify_chain(spec).kind
    if kind.recurrent:
        return UhfType.UNIVERSAL_Q
    if kind is ChainKind.TRANSIENT:
        return UhfType.FINITE_TYPE
    return UhfType.INCONCLUSIVE
