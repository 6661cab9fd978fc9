"""Exact Smith normal form and K-groups of graph algebras.

For a finite graph without sinks, ``K0 = coker(A^t - I)`` and
``K1 = ker(A^t - I)``.  All arithmetic uses Python integers held in numpy
object arrays, so intermediate entries never overflow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graphs import Digraph


class PreconditionError(ValueError):
    pass


class HypothesisError(ValueError):
    """Inputs outside the range where the limiting distribution is known."""


@dataclass(frozen=True)
class SmithNormalForm:
    invariant_factors: tuple[int, ...]
    rows: int
    cols: int

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def nullity(self) -> int:
        return self.cols - self.rank

    @property
    def corank(self) -> int:
        """Free rank of the cokernel."""
        return self.rows - self.rank


def _as_object_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=object)
    if a.ndim == 1 and a.size == 0:
        a = a.reshape(0, 0)
    if a.ndim != 2:
        raise ValueError("expected a 2-d integer matrix")
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        if isinstance(v, (float, np.floating)) and not float(v).is_integer():
            raise ValueError(f"non-integer entry {v}")
        out[idx] = int(v)
    return out


def _drop(a: np.ndarray, i: int, j: int) -> np.ndarray:
    rows = np.arange(a.shape[0]) != i
    cols = np.arange(a.shape[1]) != j
    return a[rows][:, cols]


# int64 is safe while |entries| stay below this (products fit in 63 bits)
_SMALL = 2**30


def _eliminate_units(a: np.ndarray, factors: list[int]) -> np.ndarray:
    """Pivot on +-1 entries until none remain; each pivot yields a factor 1."""
    small = a.size and int(np.abs(a).max()) < _SMALL
    if small:
        a = a.astype(np.int64)
    while a.size:
        units = np.argwhere(np.abs(a) == 1)
        if not len(units):
            break
        i, j = units[0]
        p = a[i, j]
        col = np.delete(a[:, j], i)
        row = np.delete(a[i, :], j)
        # p is +-1, so dividing by p is multiplying by p
        a = _drop(a, i, j) - np.outer(col * p, row)
        factors.append(1)
        if small and a.size and int(np.abs(a).max()) >= _SMALL:
            small = False
            a = a.astype(object)
    # int64 -> object yields Python ints
    return a.astype(object)


def smith_normal_form(m) -> SmithNormalForm:
    """Invariant factors of an integer matrix."""
    a = _as_object_matrix(m)
    rows, cols = a.shape
    factors: list[int] = []
    while a.size:
        mags = np.abs(a)
        nonzero = mags != 0
        if not nonzero.any():
            break
        units = np.argwhere(mags == 1)
        if len(units):
            a = _eliminate_units(a, factors)
            continue
        # smallest nonzero entry as pivot
        flat = np.where(nonzero, mags, 0).ravel()
        cand = np.flatnonzero(flat)
        k = min(cand, key=lambda t: flat[t])
        i, j = divmod(int(k), a.shape[1])
        p = a[i, j]
        q_col = np.array([x // p for x in a[:, j]], dtype=object)
        q_col[i] = 0
        a = a - np.outer(q_col, a[i, :])
        q_row = np.array([x // p for x in a[i, :]], dtype=object)
        q_row[j] = 0
        a = a - np.outer(a[:, j], q_row)
        if any(a[:, j][np.arange(a.shape[0]) != i]) or any(a[i, :][np.arange(a.shape[1]) != j]):
            continue
        rest = _drop(a, i, j)
        bad = np.argwhere(np.array([x % p for x in rest.ravel()], dtype=object).reshape(rest.shape) != 0)
        if len(bad):
            # fold an offending row into the pivot row and reduce again
            r = bad[0][0]
            r = r + (r >= i)
            a[i, :] = a[i, :] + a[r, :]
            continue
        factors.append(abs(int(p)))
        a = rest
    return SmithNormalForm(tuple(factors), rows, cols)


def _det_bareiss(m: list[list[int]]) -> int:
    n = len(m)
    a = [row[:] for row in m]
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k]), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


MAX_ORACLE_DIM = 6


def minors_gcd_oracle(m) -> SmithNormalForm:
    """Invariant factors as ratios of successive gcds of ``k x k`` minors."""
    a = _as_object_matrix(m)
    rows, cols = a.shape
    if rows > MAX_ORACLE_DIM or cols > MAX_ORACLE_DIM:
        raise ValueError(f"oracle limited to {MAX_ORACLE_DIM}x{MAX_ORACLE_DIM}")
    grid = a.tolist()
    factors = []
    prev = 1
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for rs in itertools.combinations(range(rows), k):
            for cs in itertools.combinations(range(cols), k):
                g = math.gcd(g, _det_bareiss([[grid[r][c] for c in cs] for r in rs]))
        if g == 0:
            break
        factors.append(g // prev)
        prev = g
    return SmithNormalForm(tuple(factors), rows, cols)


def _p_valuation(x: int, p: int) -> int:
    e = 0
    while x % p == 0:
        x //= p
        e += 1
    return e


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """``Z^free_rank`` plus cyclic factors ``Z/d`` with ``d_1 | d_2 | ...``, all ``d >= 2``."""

    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        t = tuple(int(d) for d in self.torsion)
        if any(d < 2 for d in t):
            raise ValueError("torsion factors must be >= 2")
        if any(b % a for a, b in zip(t, t[1:])):
            raise ValueError(f"{t} is not a divisibility chain")
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        object.__setattr__(self, "torsion", t)

    @classmethod
    def from_cyclic(cls, orders: Iterable[int], free_rank: int = 0) -> "FiniteAbelianGroup":
        """Normalise any list of cyclic orders into invariant factors."""
        orders = [int(d) for d in orders]
        snf = smith_normal_form(np.diag(orders) if orders else np.zeros((0, 0), dtype=int))
        return cls(free_rank, tuple(d for d in snf.invariant_factors if d > 1))

    @classmethod
    def from_partition(cls, p: int, partition: Sequence[int]) -> "FiniteAbelianGroup":
        return cls.from_cyclic([p**e for e in partition if e > 0])

    @property
    def order(self) -> int | None:
        return math.prod(self.torsion) if self.free_rank == 0 else None

    @property
    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    def partition(self, p: int) -> tuple[int, ...]:
        """Exponents ``lambda_1 >= lambda_2 >= ...`` of the p-primary part."""
        return tuple(sorted((e for e in (_p_valuation(d, p) for d in self.torsion) if e), reverse=True))

    def primary_decomposition(self) -> dict[int, tuple[int, ...]]:
        from sympy import factorint

        primes = set()
        for d in self.torsion:
            primes.update(factorint(d))
        return {p: self.partition(p) for p in sorted(primes)}

    def __str__(self) -> str:
        parts = ([f"Z^{self.free_rank}"] if self.free_rank else []) + [f"Z/{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"

    def to_record(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": [str(d) for d in self.torsion]}


def sylow_component(g: FiniteAbelianGroup, p: int) -> FiniteAbelianGroup:
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    return FiniteAbelianGroup.from_partition(p, g.partition(p))


@dataclass(frozen=True)
class KGroups:
    k0: FiniteAbelianGroup
    k1_rank: int

    def __post_init__(self):
        if self.k0.free_rank != self.k1_rank:
            raise AssertionError("rank(K0) and rank(K1) must agree")

    def __str__(self) -> str:
        k1 = f"Z^{self.k1_rank}" if self.k1_rank else "0"
        return f"K0 = {self.k0}, K1 = {k1}"


def k_groups(d: Digraph) -> KGroups:
    if (d.out_degrees() == 0).any():
        raise PreconditionError("graph has a sink")
    m = d.adjacency.T.astype(object) - np.eye(d.n, dtype=np.int64).astype(object)
    snf = smith_normal_form(m)
    k0 = FiniteAbelianGroup(snf.corank, tuple(f for f in snf.invariant_factors if f > 1))
    return KGroups(k0, snf.nullity)


# --------------------------------------------------------------------------
# Limiting cokernel distribution

TAIL_CUTOFF = 1e-13


def _mu(partition: Sequence[int]) -> list[int]:
    lam = sorted(partition, reverse=True)
    top = lam[0] if lam else 0
    return [sum(1 for l in lam if l >= i) for i in range(1, top + 1)]


def n_of_group(p: int, partition: Sequence[int]) -> Fraction:
    """The weight ``N(V)`` of a p-group ``V`` with exponents ``partition``."""
    mu = _mu(partition)
    out = Fraction(1, p ** sum(m * (m + 1) // 2 for m in mu))
    padded = mu + [0]
    for i in range(len(mu)):
        for j in range(1, (padded[i] - padded[i + 1]) // 2 + 1):
            out /= 1 - Fraction(1, p ** (2 * j))
    return out


def odd_product(p: int) -> float:
    """``prod_{k >= 0} (1 - p**(-2k-1))``, truncated once the term drops below the cutoff."""
    total = 0.0
    k = 0
    while True:
        t = float(p) ** (-2 * k - 1)
        if t < TAIL_CUTOFF:
            return math.exp(total)
        total += math.log1p(-t)
        k += 1


def wood_limit_probability(groups: Mapping[int, object], r: int) -> float:
    """Limiting probability that each p-Sylow part of ``K0`` is the given group.

    ``groups`` maps each odd prime ``p`` (not dividing ``r - 1``) to either a
    :class:`FiniteAbelianGroup` or a partition of exponents.
    """
    prob = 1.0
    for p, v in groups.items():
        if p == 2 or p % 2 == 0:
            raise HypothesisError("only odd primes are covered")
        if not _is_prime(p):
            raise HypothesisError(f"{p} is not prime")
        if (r - 1) % p == 0:
            raise HypothesisError(f"{p} divides r - 1 = {r - 1}")
        if isinstance(v, FiniteAbelianGroup):
            if v.free_rank or any(_p_valuation(d, p) == 0 or d != p ** _p_valuation(d, p) for d in v.torsion):
                raise ValueError(f"{v} is not a finite {p}-group")
            lam = v.partition(p)
        else:
            lam = tuple(v)
        prob *= float(n_of_group(p, lam)) * odd_product(p)
    return prob


def partitions_up_to(total: int):
    """All partitions with sum at most ``total``, largest part first."""

    def gen(remaining, cap):
        yield ()
        for part in range(min(remaining, cap), 0, -1):
            for rest in gen(remaining - part, part):
                yield (part,) + rest

    yield from gen(total, total)
