"""Random regular multigraphs and the graph predicates behind Kirchberg graph algebras."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components


@dataclass(frozen=True)
class Multigraph:
    """Undirected loopless multigraph on vertices ``0..n-1``.

    ``edges`` holds one ``(i, j)`` pair with ``i < j`` per edge, sorted.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at {i}")
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge {(i, j)} not normalised or out of range")

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def multiplicities(self) -> Counter:
        return Counter(self.edges)

    def to_edge_list(self) -> str:
        lines = [f"# n={self.n}"] + [f"{i} {j}" for i, j in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "Multigraph":
        n = None
        edges = []
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("# n="):
                n = int(line[4:])
            elif line and not line.startswith("#"):
                i, j = map(int, line.split())
                edges.append((min(i, j), max(i, j)))
        if n is None:
            n = 1 + max((j for _, j in edges), default=-1)
        return cls(n, tuple(sorted(edges)))


@dataclass(frozen=True, eq=False)
class Digraph:
    """Finite directed multigraph given by its adjacency matrix.

    ``adjacency[i, j]`` counts the edges from ``i`` to ``j``.
    """

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if (a < 0).any():
            raise ValueError("edge multiplicities must be non-negative")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    def __eq__(self, other):
        return isinstance(other, Digraph) and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.adjacency.tobytes())

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def out_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def in_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=0)

    def to_text(self) -> str:
        return "\n".join(" ".join(str(int(v)) for v in row) for row in self.adjacency) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Digraph":
        rows = [list(map(int, line.split())) for line in text.splitlines() if line.strip()]
        return cls(np.array(rows, dtype=np.int64).reshape(len(rows), -1))

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[tuple[int, int]]) -> "Digraph":
        a = np.zeros((n, n), dtype=np.int64)
        for s, r in edges:
            a[s, r] += 1
        return cls(a)


def sample_perfect_matching(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform perfect matching: shuffle, then pair consecutive entries."""
    if n % 2 or n < 2:
        raise ValueError(f"perfect matchings need an even n >= 2, got {n}")
    perm = rng.permutation(n)
    a, b = perm[0::2], perm[1::2]
    return [(int(min(x, y)), int(max(x, y))) for x, y in zip(a, b)]


def sample_regular_multigraph(n: int, r: int, rng: np.random.Generator) -> Multigraph:
    """Union of ``r`` independent uniform perfect matchings on ``n`` vertices."""
    if r < 1:
        raise ValueError("r must be >= 1")
    edges = []
    for _ in range(r):
        edges.extend(sample_perfect_matching(n, rng))
    return Multigraph(n, tuple(sorted(edges)))


def double_to_digraph(g: Multigraph) -> Digraph:
    a = np.zeros((g.n, g.n), dtype=np.int64)
    for i, j in g.edges:
        a[i, j] += 1
        a[j, i] += 1
    return Digraph(a)


@dataclass(frozen=True)
class KirchbergReport:
    has_sink: bool
    has_source: bool
    every_loop_has_exit: bool
    every_vertex_reaches_loop: bool
    cofinal: bool
    has_loops: bool
    purely_infinite: bool
    # None when a sink makes the simplicity criterion inapplicable
    simple: Optional[bool]


def _loops_without_exit(a: np.ndarray) -> bool:
    # A loop has no exit iff each of its vertices emits exactly one edge.
    out = a.sum(axis=1)
    succ = {v: int(np.flatnonzero(a[v])[0]) for v in np.flatnonzero(out == 1)}
    state = {}
    for v in succ:
        trail = []
        while v in succ and v not in state:
            state[v] = "open"
            trail.append(v)
            v = succ[v]
        if v in succ and state.get(v) == "open":
            return True
        for u in trail:
            state[u] = "done"
    return False


def kirchberg_predicates(d: Digraph) -> KirchbergReport:
    a = d.adjacency
    n = d.n
    out_deg, in_deg = d.out_degrees(), d.in_degrees()
    has_sink = bool((out_deg == 0).any())
    has_source = bool((in_deg == 0).any())
    exitless = _loops_without_exit(a)

    graph = csr_matrix((a > 0).astype(np.int8))
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=n_comp)
    self_loop = np.diag(a) > 0
    cyclic = [c for c in range(n_comp) if sizes[c] > 1 or self_loop[labels == c].any()]

    # Vertices that can reach each cyclic component (reverse reachability).
    reverse = csr_matrix(graph.T)
    reaches_any = np.zeros(n, dtype=bool)
    cofinal = True
    for c in cyclic:
        root = int(np.flatnonzero(labels == c)[0])
        hit = breadth_first_order(reverse, root, directed=True, return_predecessors=False)
        mask = np.zeros(n, dtype=bool)
        mask[hit] = True
        reaches_any |= mask
        if not mask.all():
            cofinal = False
    reaches_loop = bool(reaches_any.all()) if n else True

    return KirchbergReport(
        has_sink=has_sink,
        has_source=has_source,
        every_loop_has_exit=not exitless,
        every_vertex_reaches_loop=reaches_loop,
        cofinal=cofinal,
        has_loops=bool(cyclic),
        purely_infinite=reaches_loop and not exitless and bool(cyclic),
        simple=None if has_sink else (not exitless and cofinal),
    )


def is_connected(g: Multigraph) -> bool:
    if g.n == 0:
        return True
    rows = [i for i, _ in g.edges]
    cols = [j for _, j in g.edges]
    adj = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(g.n, g.n))
    n_comp, _ = connected_components(adj, directed=False)
    return n_comp == 1
