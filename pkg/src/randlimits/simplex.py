"""Towers of finite-dimensional simplices driven by a birth-death walk.

When the walk steps down from ``d`` to ``d - 1`` the connecting map is the
standard inclusion of the smaller simplex as the first ``d`` vertices.  When
it steps up from ``d`` to ``d + 1`` the new vertex is collapsed onto a random
point of the current simplex, recorded as a barycentric row of length
``d + 1`` (a row of the representing matrix).  Three measures choose that
point:

K
    the barycentre, so every row is ``(1/(d+1), ..., 1/(d+1))``;
C
    a vertex chosen uniformly;
P
    a uniform point on a face of the simplex, cycling through faces of
    every dimension (see :func:`poulsen_face`).

Rows are exact for K and C and double precision for P.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .markov import (
    BoundaryModeError,
    InitialDistribution,
    TransitionSpec,
    WalkPath,
    simulate_path,
    stay_at_most_probability,
)


class Measure(enum.Enum):
    K = "K"
    C = "C"
    P = "P"


@dataclass(frozen=True)
class RepresentingRow:
    """Barycentric coordinates of the collapsed vertex in ``Delta_dim``."""

    dim: int
    coords: tuple

    def __post_init__(self):
        if len(self.coords) != self.dim + 1:
            raise ValueError(f"row for Delta_{self.dim} needs {self.dim + 1} coordinates")
        if any(c < 0 for c in self.coords):
            raise ValueError("negative barycentric coordinate")
        total = sum(self.coords)
        exact = all(isinstance(c, (int, Fraction)) for c in self.coords)
        if (total != 1) if exact else abs(total - 1) > 1e-12:
            raise ValueError(f"coordinates sum to {total}, not 1")

    @property
    def vertex(self) -> Optional[int]:
        """Index of the vertex when the row is a point mass."""
        nonzero = [i for i, c in enumerate(self.coords) if c != 0]
        if len(nonzero) == 1 and self.coords[nonzero[0]] == 1:
            return nonzero[0]
        return None

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(length)
        out[: len(self.coords)] = [float(c) for c in self.coords]
        return out


@dataclass(frozen=True)
class StandardInclusion:
    pass


@dataclass(frozen=True)
class Collapse:
    row: RepresentingRow


ConnectingStep = Union[StandardInclusion, Collapse]


@dataclass(frozen=True)
class SimplexTower:
    dims: tuple[int, ...]
    steps: tuple[ConnectingStep, ...]
    measure: Measure

    def __post_init__(self):
        if len(self.steps) != max(len(self.dims) - 1, 0):
            raise ValueError("need exactly one connecting step per transition")
        for (a, b), step in zip(zip(self.dims, self.dims[1:]), self.steps):
            if b == a + 1:
                if not isinstance(step, Collapse) or step.row.dim != a:
                    raise ValueError(f"step {a}->{b} needs a row in Delta_{a}")
            elif b == a - 1 or (a == b == 0):
                if not isinstance(step, StandardInclusion):
                    raise ValueError(f"step {a}->{b} must be the standard inclusion")
            else:
                raise ValueError(f"dimensions {a}->{b} are not adjacent")

    @property
    def rows(self) -> list[RepresentingRow]:
        return [s.row for s in self.steps if isinstance(s, Collapse)]

    @property
    def top(self) -> int:
        return max(self.dims, default=0)

    def to_records(self) -> list[dict]:
        out = [{"dim": self.dims[0], "step": "start", "row": None}] if self.dims else []
        for dim, step in zip(self.dims[1:], self.steps):
            if isinstance(step, Collapse):
                out.append({"dim": dim, "step": "collapse", "row": [str(c) if isinstance(c, Fraction) else c for c in step.row.coords]})
            else:
                out.append({"dim": dim, "step": "inclusion", "row": None})
        return out


def poulsen_face(index: int) -> tuple[int, int]:
    """Face used by measure P at component ``index``.

    Writing ``index = n(n+1)/2 + i`` with ``1 <= i <= n + 1``, returns
    ``(n, top)`` where the face is ``conv{e_0, ..., e_top}`` with
    ``top = n - i + 1``.  Index 0 (the zero-simplex) gives ``(0, 0)``.
    """
    if index < 0:
        raise ValueError("index must be >= 0")
    if index == 0:
        return 0, 0
    n = (math.isqrt(8 * index + 1) - 1) // 2
    if n * (n + 1) // 2 == index:
        n -= 1
    i = index - n * (n + 1) // 2
    return n, n - i + 1


def sample_connecting_step(
    measure: Measure,
    current_dim: int,
    step_index: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> Collapse:
    """Draw the row collapsing a new vertex onto ``Delta_{current_dim}``.

    ``step_index`` selects the component of measure P; it defaults to
    ``current_dim``.
    """
    d = current_dim
    if d < 0:
        raise ValueError("dimension must be >= 0")
    if measure is Measure.K:
        return Collapse(RepresentingRow(d, (Fraction(1, d + 1),) * (d + 1)))
    if rng is None:
        raise ValueError(f"measure {measure.value} needs a random generator")
    if measure is Measure.C:
        j = int(rng.integers(d + 1))
        coords = tuple(Fraction(int(i == j)) for i in range(d + 1))
        return Collapse(RepresentingRow(d, coords))
    _, top = poulsen_face(d if step_index is None else step_index)
    if top > d:
        raise ValueError(f"face with {top + 1} vertices does not fit in Delta_{d}")
    point = rng.dirichlet(np.ones(top + 1)) if top > 0 else np.ones(1)
    coords = np.zeros(d + 1)
    coords[: top + 1] = point
    # renormalise so the row is barycentric to rounding
    coords /= coords.sum()
    return Collapse(RepresentingRow(d, tuple(float(c) for c in coords)))


def tower_from_path(path: WalkPath | Sequence[int], measure: Measure, rng=None) -> SimplexTower:
    states = path.states if isinstance(path, WalkPath) else tuple(path)
    dims = tuple(max(s, 0) for s in states)
    steps: list[ConnectingStep] = []
    for a, b in zip(dims, dims[1:]):
        steps.append(sample_connecting_step(measure, a, rng=rng) if b > a else StandardInclusion())
    return SimplexTower(dims, tuple(steps), measure)


def sample_tower(
    spec: TransitionSpec,
    initial: InitialDistribution,
    measure: Measure,
    max_steps: int,
    rng: np.random.Generator,
) -> SimplexTower:
    path = simulate_path(spec, initial, max_steps, rng)
    return tower_from_path(path, measure, rng)


def tower_from_splits(splits: Iterable[int]) -> SimplexTower:
    """Case-C tower growing by one vertex per level, splitting ``splits[l]``."""
    dims, steps = [0], []
    for leaf in splits:
        d = dims[-1]
        if not 0 <= leaf <= d:
            raise ValueError(f"leaf {leaf} does not exist at dimension {d}")
        coords = tuple(Fraction(int(i == leaf)) for i in range(d + 1))
        steps.append(Collapse(RepresentingRow(d, coords)))
        dims.append(d + 1)
    return SimplexTower(tuple(dims), tuple(steps), Measure.C)


def extremal_traces_at_most_prob(spec: TransitionSpec, initial: InitialDistribution, k: int) -> Fraction:
    """Probability that the limit simplex has at most ``k`` extreme points.

    The simplex has dimension ``sup_t Y_t``, hence ``sup_t Y_t + 1``
    extreme points.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not spec.absorbing:
        raise BoundaryModeError("finite trace spaces need an absorbing boundary")
    return sum(
        (w * stay_at_most_probability(spec, k - 1, i) for i, w in initial),
        Fraction(0),
    )


# --------------------------------------------------------------------------
# Population-tree view of case C


def _leaf_activity(tower: SimplexTower) -> tuple[list[int], int]:
    if tower.measure is not Measure.C:
        raise ValueError("the splitting tree is defined for measure C")
    last = [0] * (tower.dims[0] + 1) if tower.dims else [0]
    level = 0
    for (a, b), step in zip(zip(tower.dims, tower.dims[1:]), tower.steps):
        if b > a:
            level += 1
            j = step.row.vertex
            last[j] = level
            last.append(level)
        elif b < a:
            last.pop()
    return last, level


def stale_leaves(tower: SimplexTower, depth: int) -> list[int]:
    """Leaves untouched (neither created nor split) in the last ``depth`` levels."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    last, level = _leaf_activity(tower)
    cutoff = level - depth
    return [leaf for leaf, seen in enumerate(last) if seen <= cutoff]


def isolated_leaf_check(tower: SimplexTower, depth: int) -> Optional[int]:
    """A leaf that has not split in the last ``depth`` levels, if any.

    The oldest such leaf is reported, ties going to the highest index.
    """
    stale = stale_leaves(tower, depth)
    if not stale:
        return None
    last, _ = _leaf_activity(tower)
    return min(stale, key=lambda leaf: (last[leaf], -leaf))


def poulsen_coverage_stat(tower: SimplexTower, targets: Sequence[Sequence[float]]) -> float:
    """Largest, over targets, of the l1 distance to the nearest sampled row."""
    rows = tower.rows
    if not rows or len(targets) == 0:
        return math.inf
    width = max(max(r.dim + 1 for r in rows), max(len(t) for t in targets))
    sampled = np.stack([r.padded(width) for r in rows])
    worst = 0.0
    for t in targets:
        point = np.zeros(width)
        point[: len(t)] = t
        worst = max(worst, float(np.abs(sampled - point).sum(axis=1).min()))
    return worst
