"""Graph substrate: lazily addressed regular trees, finite graphs, GW trees.

Tree vertices are addressed by their path word from the root.  Internally the
word is packed into an integer ``code`` (leading digit 1, then one base-``d``
digit per letter), which is what the hot simulation loops use as a dict key.
A tree edge is identified with its child endpoint.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence, Union

from . import _rng

UNREACHABLE = math.inf


@dataclass(frozen=True, order=True)
class VertexRef:
    word: tuple[int, ...] = ()

    @property
    def depth(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        return "".join(map(str, self.word)) or "o"


ROOT = VertexRef()


@dataclass(frozen=True, order=True)
class EdgeRef:
    """Tree edge joining ``child`` to its parent."""

    child: VertexRef


def vref(word: str | Sequence[int] = "") -> VertexRef:
    """``vref("01")`` -> the vertex reached by letters 0 then 1."""
    if isinstance(word, str):
        return VertexRef(tuple(int(c) for c in word))
    return VertexRef(tuple(int(c) for c in word))


@dataclass(frozen=True)
class RegularTree:
    d: int

    def __post_init__(self):
        if self.d < 3:
            raise ValueError(f"regular tree needs degree >= 3, got {self.d}")

    def check(self, v: VertexRef) -> None:
        w = v.word
        if w and not 0 <= w[0] < self.d:
            raise ValueError(f"invalid first letter in {v}")
        if any(not 0 <= c < self.d - 1 for c in w[1:]):
            raise ValueError(f"invalid letter in {v}")

    def code(self, v: VertexRef) -> int:
        c = 1
        for letter in v.word:
            c = c * self.d + letter
        return c

    def vertex(self, code: int) -> VertexRef:
        letters = []
        while code > 1:
            code, r = divmod(code, self.d)
            letters.append(r)
        if code != 1:
            raise ValueError("not a tree code")
        return VertexRef(tuple(reversed(letters)))

    def ball_size(self, r: int) -> int:
        return 1 + self.d * ((self.d - 1) ** r - 1) // (self.d - 2)


@dataclass(frozen=True)
class FiniteGraph:
    """Explicit graph on vertices ``0..n-1``.

    ``host_degree`` overrides the degrees used by :func:`cheeger_brute`, which
    is how a finite ball cut out of an infinite tree keeps its boundary edges.
    """

    adjacency: tuple[tuple[int, ...], ...]
    host_degree: tuple[int, ...] | None = None
    name: str = "finite"

    def __post_init__(self):
        adj = tuple(tuple(int(u) for u in nb) for nb in self.adjacency)
        object.__setattr__(self, "adjacency", adj)
        n = len(adj)
        for v, nb in enumerate(adj):
            if len(set(nb)) != len(nb):
                raise ValueError(f"duplicate neighbor at vertex {v}")
            for u in nb:
                if u == v:
                    raise ValueError(f"self-loop at vertex {v}")
                if not 0 <= u < n or v not in adj[u]:
                    raise ValueError(f"adjacency not symmetric at ({v}, {u})")
        if self.host_degree is not None and len(self.host_degree) != n:
            raise ValueError("host_degree length mismatch")

    @property
    def n(self) -> int:
        return len(self.adjacency)

    @property
    def max_degree(self) -> int:
        return max((len(nb) for nb in self.adjacency), default=0)

    def edges(self) -> list[tuple[int, int]]:
        return sorted({(min(u, v), max(u, v)) for v, nb in enumerate(self.adjacency) for u in nb})

    @classmethod
    def from_edges(cls, n: int, edges, name: str = "finite") -> "FiniteGraph":
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        return cls(tuple(tuple(sorted(a)) for a in adj), name=name)

    @classmethod
    def from_file(cls, path) -> "FiniteGraph":
        """One line per vertex, space-separated 0-based neighbor indices."""
        lines = Path(path).read_text().splitlines()
        adj = tuple(tuple(int(tok) for tok in line.split()) for line in lines)
        return cls(adj, name=Path(path).stem)

    def to_file(self, path) -> None:
        Path(path).write_text("".join(" ".join(map(str, nb)) + "\n" for nb in self.adjacency))


def cycle_graph(n: int) -> FiniteGraph:
    return FiniteGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], name=f"C{n}")


def complete_graph(n: int) -> FiniteGraph:
    return FiniteGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)], name=f"K{n}")


def tree_ball(d: int, r: int) -> tuple[FiniteGraph, list[VertexRef]]:
    """Ball of radius ``r`` around the root of T_d, with host degrees ``d``."""
    tree = RegularTree(d)
    verts = [ROOT]
    index = {ROOT: 0}
    edges = []
    frontier = [ROOT]
    for _ in range(r):
        nxt = []
        for v in frontier:
            for u, _e in neighbors(tree, v):
                if u not in index:
                    index[u] = len(verts)
                    verts.append(u)
                    edges.append((index[v], index[u]))
                    nxt.append(u)
        frontier = nxt
    g = FiniteGraph.from_edges(len(verts), edges, name=f"T{d}_ball{r}")
    return FiniteGraph(g.adjacency, host_degree=(d,) * len(verts), name=g.name), verts


@dataclass
class SampledGW:
    """Galton-Watson tree with Binomial(b, p) offspring, realized lazily.

    Vertices are integer codes of words over ``{0..b-1}`` (root = 1); slot ``j``
    of vertex ``v`` holds a child iff a keyed uniform for code ``v*b+j`` falls
    below ``p``.  The law is that of the root cluster of Bernoulli-p percolation
    on the b-ary tree, and the realization does not depend on query order.
    """

    b: int
    p: float
    depth: int
    seed: int
    _children: dict = field(default_factory=dict, repr=False)

    root = 1

    def children(self, v: int) -> list[int]:
        kids = self._children.get(v)
        if kids is None:
            base = v * self.b
            kids = [base + j for j in range(self.b)
                    if _rng.uniform(_rng.stream_key(self.seed, base + j), 0) < self.p]
            self._children[v] = kids
        return kids

    def parent(self, v: int) -> int:
        return v // self.b

    def depth_of(self, v: int) -> int:
        k = 0
        while v > 1:
            v //= self.b
            k += 1
        return k

    def reaches(self, depth: int) -> bool:
        """Whether some vertex at ``depth`` exists (iterative DFS, early exit)."""
        stack = [(self.root, 0)]
        while stack:
            v, k = stack.pop()
            if k >= depth:
                return True
            for c in self.children(v):
                stack.append((c, k + 1))
        return False

    def offspring_counts(self, depth: int | None = None) -> list[int]:
        """Offspring counts of every vertex above ``depth`` (default: the cap)."""
        depth = self.depth if depth is None else depth
        out = []
        frontier = [self.root]
        for _ in range(depth):
            nxt = []
            for v in frontier:
                kids = self.children(v)
                out.append(len(kids))
                nxt.extend(kids)
            frontier = nxt
        return out


GraphSpec = Union[RegularTree, FiniteGraph, SampledGW]


def sample_gw_tree(b: int, p: float, depth: int, rng=None) -> tuple[SampledGW, bool]:
    if not 0 <= p <= 1:
        raise ValueError("p must be a probability")
    tree = SampledGW(b=b, p=p, depth=depth, seed=_rng.seed_from(rng))
    return tree, tree.reaches(depth)


def degree(g: GraphSpec, v) -> int:
    return len(neighbors(g, v))


def neighbors(g: GraphSpec, v) -> list:
    """Neighbors of ``v`` with the connecting edge, in a fixed order.

    Trees: parent first (if any), then children by letter.  Finite graphs: the
    adjacency-list order, edges as sorted pairs.  GW trees: parent then
    children, edges as child codes.
    """
    if isinstance(g, RegularTree):
        w = v.word
        out = []
        if w:
            out.append((VertexRef(w[:-1]), EdgeRef(v)))
            nkids = g.d - 1
        else:
            nkids = g.d
        for c in range(nkids):
            u = VertexRef(w + (c,))
            out.append((u, EdgeRef(u)))
        return out
    if isinstance(g, FiniteGraph):
        if not isinstance(v, (int,)) or not 0 <= v < g.n:
            raise KeyError(f"unknown vertex {v!r}")
        return [(u, (min(u, v), max(u, v))) for u in g.adjacency[v]]
    if isinstance(g, SampledGW):
        out = [] if v == g.root else [(g.parent(v), v)]
        out.extend((c, c) for c in g.children(v))
        return out
    raise TypeError(f"unsupported graph {type(g).__name__}")


def tree_code_dist(d: int, a: int, b: int) -> int:
    """Distance between two packed tree codes of the same base."""
    da, db = _code_depth(a, d), _code_depth(b, d)
    dist = 0
    while da > db:
        a //= d
        da -= 1
        dist += 1
    while db > da:
        b //= d
        db -= 1
        dist += 1
    while a != b:
        a //= d
        b //= d
        dist += 2
    return dist


def _code_depth(c: int, base: int) -> int:
    k = 0
    while c > 1:
        c //= base
        k += 1
    return k


def dist(g: GraphSpec, u, v):
    if isinstance(g, RegularTree):
        a, b = u.word, v.word
        k = 0
        for x, y in zip(a, b):
            if x != y:
                break
            k += 1
        return len(a) + len(b) - 2 * k
    if isinstance(g, SampledGW):
        return tree_code_dist(g.b, u, v)
    if isinstance(g, FiniteGraph):
        return bfs_distances(g, u).get(v, UNREACHABLE)
    raise TypeError(f"unsupported graph {type(g).__name__}")


def bfs_distances(g: FiniteGraph, source: int) -> dict[int, int]:
    seen = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in g.adjacency[x]:
            if y not in seen:
                seen[y] = seen[x] + 1
                queue.append(y)
    return seen


def connected_subsets(g: FiniteGraph, max_size: int) -> Iterator[frozenset[int]]:
    """Every connected vertex subset of size <= ``max_size``, each exactly once.

    Enumeration by smallest vertex with an exclusive extension set (ESU).
    """
    adj = [set(nb) for nb in g.adjacency]

    def extend(sub: frozenset, nbhood: set, ext: set, root: int):
        yield sub
        if len(sub) == max_size:
            return
        ext = set(ext)
        while ext:
            w = ext.pop()
            fresh = {u for u in adj[w] if u > root and u not in sub and u not in nbhood}
            yield from extend(sub | {w}, nbhood | adj[w], ext | fresh, root)

    for v in range(g.n):
        yield from extend(frozenset([v]), adj[v] | {v}, {u for u in adj[v] if u > v}, v)


def cheeger_brute(g: FiniteGraph, max_size: int) -> Fraction:
    """min |boundary W| / sum deg(W) over connected W with |W| <= max_size."""
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    deg = g.host_degree or tuple(len(nb) for nb in g.adjacency)
    best = None
    for w in connected_subsets(g, max_size):
        vol = sum(deg[x] for x in w)
        internal = sum(1 for x in w for y in g.adjacency[x] if y in w)  # counts each edge twice
        ratio = Fraction(vol - internal, vol)
        if best is None or ratio < best:
            best = ratio
    return best


def tree_cheeger(d: int) -> float:
    """Cheeger constant of T_d: subtrees of n vertices give ((d-2)n+2)/(dn)."""
    return (d - 2) / d
