"""Undirected graphs, orientations, Laman recognition, Henneberg construction.

Vertices are 0-based integers. Every undirected edge is stored canonically as
(i, j) with i < j, and edge lists are sorted lexicographically so that all
derived matrices are deterministic.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InputError

# Below this vertex count the Laman check enumerates subsets exhaustively;
# above it a pebble-game sparsity check is used.
EXHAUSTIVE_LAMAN_LIMIT = 16


def _canonical(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Undirected graph with a canonical edge order."""

    n: int
    edges: tuple[tuple[int, int], ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return _canonical(i, j) in set(self.edges)

    def neighbors(self, i: int) -> tuple[int, ...]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return tuple(sorted(out))

    def edge_index(self) -> dict[tuple[int, int], int]:
        """Map canonical edge -> row index in the canonical edge order."""
        return {e: k for k, e in enumerate(self.edges)}


@dataclass(frozen=True)
class OrientedGraph:
    """A graph plus one direction per undirected edge.

    The canonical orientation directs each edge {i, j} with i < j as i -> j,
    in the canonical edge order of the base graph.
    """

    base: Graph
    orientation: tuple[tuple[int, int], ...]

    @property
    def m(self) -> int:
        return self.base.m


def build_graph(n: int, edge_list) -> Graph:
    """Validate and deduplicate an undirected edge list."""
    if n < 1:
        raise InputError(f"vertex count must be >= 1, got {n}")
    seen = set()
    for i, j in edge_list:
        if i == j:
            raise InputError(f"self-loop at vertex {i}")
        if not (0 <= i < n) or not (0 <= j < n):
            raise InputError(f"edge ({i}, {j}) out of range for n={n}")
        seen.add(_canonical(int(i), int(j)))
    return Graph(n, tuple(sorted(seen)))


def orient(g: Graph) -> OrientedGraph:
    """Canonical orientation: each edge {i, j} with i < j is directed i -> j."""
    return OrientedGraph(g, g.edges)


def incidence_matrix(og: OrientedGraph) -> np.ndarray:
    """m x n incidence matrix H with H[k, i] = -1 and H[k, j] = +1 for the
    k-th oriented edge (i, j), so the stacked edge vector is (H kron I_d) p."""
    H = np.zeros((og.m, og.base.n))
    for k, (i, j) in enumerate(og.orientation):
        H[k, i] = -1.0
        H[k, j] = 1.0
    return H


@dataclass(frozen=True)
class LamanCheck:
    laman: bool
    # Vertex subset spanning more than 2k - 3 edges, when one was found.
    violation: tuple[int, ...] | None = None
    reason: str | None = None  # "edge-count" | "subset"


def _edges_within(edges, subset: set) -> int:
    return sum(1 for i, j in edges if i in subset and j in subset)


def _laman_exhaustive(g: Graph) -> LamanCheck:
    # Subsets of size 2 and 3 cannot violate 2k - 3 without multi-edges,
    # and the full vertex set was already checked via the edge count.
    for k in range(4, g.n):
        cap = 2 * k - 3
        for subset in itertools.combinations(range(g.n), k):
            if _edges_within(g.edges, set(subset)) > cap:
                return LamanCheck(False, subset, "subset")
    return LamanCheck(True)


def _laman_pebble_game(g: Graph) -> LamanCheck:
    """(2,3)-pebble game: every vertex starts with 2 pebbles and an edge can
    be inserted only after 4 pebbles sit on its endpoints. A rejected edge
    yields the reachable vertex set as an over-counted certificate."""
    pebbles = [2] * g.n
    out: list[set[int]] = [set() for _ in range(g.n)]

    def pull_pebble(root: int, excluded: tuple[int, int]) -> bool:
        # DFS along directed edges for a free pebble; reverse the path.
        prev = {root: None}
        stack = [root]
        while stack:
            v = stack.pop()
            if v not in excluded and pebbles[v] > 0:
                pebbles[v] -= 1
                pebbles[root] += 1
                while prev[v] is not None:
                    u = prev[v]
                    out[u].remove(v)
                    out[v].add(u)
                    v = u
                return True
            for w in out[v]:
                if w not in prev:
                    prev[w] = v
                    stack.append(w)
        return False

    def reachable(u: int, v: int) -> tuple[int, ...]:
        seen = {u, v}
        stack = [u, v]
        while stack:
            a = stack.pop()
            for b in out[a]:
                if b not in seen:
                    seen.add(b)
                    stack.append(b)
        return tuple(sorted(seen))

    for u, v in g.edges:
        while pebbles[u] + pebbles[v] < 4:
            if not (pull_pebble(u, (u, v)) or pull_pebble(v, (u, v))):
                return LamanCheck(False, reachable(u, v), "subset")
        if pebbles[u] > 0:
            pebbles[u] -= 1
            out[u].add(v)
        else:
            pebbles[v] -= 1
            out[v].add(u)
    return LamanCheck(True)


def is_laman(g: Graph, exhaustive_limit: int = EXHAUSTIVE_LAMAN_LIMIT) -> LamanCheck:
    """Decide whether g has 2n - 3 edges with every k-subset spanning at most
    2k - 3 edges. Returns a violating subset as certificate when one exists."""
    if g.n < 2:
        raise InputError("Laman check requires at least 2 vertices")
    if g.m != 2 * g.n - 3:
        # With too many edges the whole vertex set is itself a violation.
        violation = tuple(range(g.n)) if g.m > 2 * g.n - 3 else None
        return LamanCheck(False, violation, "edge-count")
    if g.n <= exhaustive_limit:
        return _laman_exhaustive(g)
    return _laman_pebble_game(g)


def henneberg_vertex_addition(g: Graph, i: int, j: int) -> Graph:
    """Add a new vertex adjacent to the two existing vertices i and j."""
    if i == j:
        raise InputError("vertex addition needs two distinct attachment vertices")
    for v in (i, j):
        if not (0 <= v < g.n):
            raise InputError(f"vertex {v} does not exist")
    v = g.n
    return Graph(g.n + 1, tuple(sorted(g.edges + ((i, v), (j, v)))))


def henneberg_edge_splitting(g: Graph, i: int, j: int, k: int) -> Graph:
    """Remove edge {i, j} and add a new vertex adjacent to i, j, and k."""
    if not (0 <= k < g.n):
        raise InputError(f"vertex {k} does not exist")
    if k in (i, j):
        raise InputError("third attachment vertex must differ from the split edge")
    e = _canonical(i, j)
    if e not in g.edges:
        raise InputError(f"edge {e} not in graph")
    v = g.n
    edges = tuple(x for x in g.edges if x != e) + ((i, v), (j, v), (k, v))
    return Graph(g.n + 1, tuple(sorted(edges)))


def augment_anchors(g: Graph, anchors) -> Graph:
    """Add the clique on the anchor set (existing edges are kept)."""
    anchors = sorted(set(anchors))
    if len(anchors) < 2:
        raise InputError("anchor augmentation needs at least 2 anchors")
    for a in anchors:
        if not (0 <= a < g.n):
            raise InputError(f"anchor {a} out of range")
    extra = itertools.combinations(anchors, 2)
    return Graph(g.n, tuple(sorted(set(g.edges) | set(extra))))


def random_henneberg_graph(n: int, seed=None) -> Graph:
    """Grow a Laman graph from a single edge by a seeded random sequence of
    vertex additions and edge splittings (operation and attachments uniform)."""
    if n < 2:
        raise InputError("Henneberg construction needs n >= 2")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    g = build_graph(2, [(0, 1)])
    while g.n < n:
        # Edge splitting needs a third vertex, so it is unavailable at n = 2.
        split = g.n >= 3 and rng.integers(2) == 1
        if split:
            i, j = g.edges[rng.integers(g.m)]
            others = [v for v in range(g.n) if v not in (i, j)]
            k = others[rng.integers(len(others))]
            g = henneberg_edge_splitting(g, i, j, k)
        else:
            i, j = rng.choice(g.n, size=2, replace=False)
            g = henneberg_vertex_addition(g, int(i), int(j))
    return g
