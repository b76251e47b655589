"""Ordered undirected graphs and the decomposable/homogeneous machinery.

Vertices are labelled ``1..m`` and the label order matters: it is the row
and column order of every matrix attached to the graph.  A vertex ordering
is represented as a tuple ``order`` with ``order[v - 1]`` the new label of
vertex ``v``; :meth:`Graph.relabel` applies it.
"""

from __future__ import annotations

import itertools
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NotDecomposable, NotHomogeneous, ParseError, ValidationError

__all__ = [
    "Graph",
    "CliqueDecomposition",
    "HasseDiagram",
    "NeighborIndex",
    "maximum_cardinality_search",
    "is_decomposable",
    "clique_decomposition",
    "perfect_vertex_order",
    "symbolic_fill",
    "verify_order_in_SD",
    "verify_order_in_SH",
    "is_homogeneous",
    "hasse_diagram",
    "hasse_order",
    "neighbor_index",
    "graph_from_hasse_tree",
    "random_homogeneous_graph",
    "random_decomposable_graph",
    "read_graph",
    "write_graph",
    "format_graph",
    "parse_graph",
]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on the ordered vertex set ``1..m``.

    Edges are stored as pairs ``(i, j)`` with ``i > j``.
    """

    m: int
    edges: frozenset = frozenset()
    _nbrs: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 0:
            raise ValidationError(f"vertex count must be a non-negative integer, got {self.m!r}")
        norm = set()
        for e in self.edges:
            i, j = (int(x) for x in e)
            if i == j:
                raise ValidationError(f"self-loop at vertex {i}")
            if not (1 <= i <= self.m and 1 <= j <= self.m):
                raise ValidationError(f"edge ({i}, {j}) outside vertex range 1..{self.m}")
            norm.add((max(i, j), min(i, j)))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "edges", frozenset(norm))
        nbrs = [set() for _ in range(self.m + 1)]
        for i, j in norm:
            nbrs[i].add(j)
            nbrs[j].add(i)
        object.__setattr__(self, "_nbrs", tuple(frozenset(s) for s in nbrs))

    # construction helpers
    @classmethod
    def complete(cls, m):
        return cls(m, frozenset((i, j) for i in range(1, m + 1) for j in range(1, i)))

    @classmethod
    def empty(cls, m):
        return cls(m)

    @classmethod
    def path(cls, m):
        return cls(m, frozenset((i + 1, i) for i in range(1, m)))

    @classmethod
    def cycle(cls, m):
        return cls(m, frozenset([(i + 1, i) for i in range(1, m)] + [(m, 1)]))

    @classmethod
    def star(cls, m, center=None):
        c = m if center is None else center
        return cls(m, frozenset((max(c, v), min(c, v)) for v in range(1, m + 1) if v != c))

    @property
    def vertices(self):
        return range(1, self.m + 1)

    def has_edge(self, i, j):
        return (max(i, j), min(i, j)) in self.edges

    def neighbors(self, i):
        return self._nbrs[i]

    def closed_neighborhood(self, i):
        return self._nbrs[i] | {i}

    def lower_neighbors(self, i):
        """Sorted tuple of neighbours with a smaller label."""
        return tuple(sorted(j for j in self._nbrs[i] if j < i))

    def upper_neighbors(self, i):
        """Sorted tuple of neighbours with a larger label."""
        return tuple(sorted(j for j in self._nbrs[i] if j > i))

    def is_clique(self, vertices):
        vs = list(vertices)
        return all(self.has_edge(a, b) for a, b in itertools.combinations(vs, 2))

    def adjacency(self):
        """Boolean ``m x m`` adjacency matrix (0-based)."""
        a = np.zeros((self.m, self.m), dtype=bool)
        for i, j in self.edges:
            a[i - 1, j - 1] = a[j - 1, i - 1] = True
        return a

    def pattern(self):
        """Boolean mask of entries allowed to be non-zero in a matrix of P_G."""
        return self.adjacency() | np.eye(self.m, dtype=bool)

    def relabel(self, order):
        """Return the graph with vertex ``v`` renamed to ``order[v - 1]``."""
        order = _check_permutation(order, self.m)
        return Graph(self.m, frozenset((order[i - 1], order[j - 1]) for i, j in self.edges))

    def induced(self, vertices):
        """Induced subgraph on ``vertices`` relabelled ``1..k`` in ascending order."""
        vs = sorted(vertices)
        pos = {v: k + 1 for k, v in enumerate(vs)}
        return Graph(len(vs), frozenset(
            (pos[i], pos[j]) for i, j in self.edges if i in pos and j in pos))

    def components(self):
        seen, comps = set(), []
        for s in self.vertices:
            if s in seen:
                continue
            comp, stack = set(), [s]
            while stack:
                v = stack.pop()
                if v in comp:
                    continue
                comp.add(v)
                stack.extend(self._nbrs[v] - comp)
            seen |= comp
            comps.append(frozenset(comp))
        return comps


def _check_permutation(order, m):
    order = tuple(int(x) for x in order)
    if sorted(order) != list(range(1, m + 1)):
        raise ValidationError(f"not a permutation of 1..{m}: {order}")
    return order


def invert_permutation(order):
    """Inverse of ``order``: ``inv[new - 1]`` is the original vertex."""
    inv = [0] * len(order)
    for v, new in enumerate(order, start=1):
        inv[new - 1] = v
    return tuple(inv)


def permutation_index(order):
    """0-based index array ``idx`` with ``idx[new - 1] = old - 1``.

    ``A[np.ix_(idx, idx)]`` moves a matrix into the relabelled frame.
    """
    return np.asarray(invert_permutation(order), dtype=int) - 1


# ---------------------------------------------------------------------------
# decomposability


def maximum_cardinality_search(g):
    """Visit order of maximum cardinality search.

    Starts at the highest label; ties go to the highest label.  The reversed
    visit order is a perfect elimination ordering iff ``g`` is chordal.
    """
    weight = [0] * (g.m + 1)
    unvisited = set(g.vertices)
    visit = []
    while unvisited:
        v = max(unvisited, key=lambda u: (weight[u], u))
        unvisited.remove(v)
        visit.append(v)
        for u in g.neighbors(v):
            if u in unvisited:
                weight[u] += 1
    return visit


def _is_peo_visit(g, visit):
    pos = {v: k for k, v in enumerate(visit)}
    for v in visit:
        earlier = [u for u in g.neighbors(v) if pos[u] < pos[v]]
        if not earlier:
            continue
        # the latest-visited earlier neighbour must see all the others
        parent = max(earlier, key=pos.__getitem__)
        if not all(u == parent or g.has_edge(u, parent) for u in earlier):
            return False
    return True


def is_decomposable(g):
    """True iff ``g`` has no chordless cycle of length four or more."""
    return _is_peo_visit(g, maximum_cardinality_search(g))


@dataclass(frozen=True)
class CliqueDecomposition:
    """Perfect sequence of cliques with histories, separators and residuals.

    ``separators[j]``, ``residuals[j]`` are defined for ``j >= 1`` (0-based);
    index 0 holds ``None``.
    """

    cliques: tuple
    separators: tuple
    histories: tuple
    residuals: tuple

    @property
    def k(self):
        return len(self.cliques)

    @property
    def multiplicities(self):
        """Mapping separator -> number of ``j`` with ``S_j`` equal to it."""
        return dict(Counter(s for s in self.separators[1:]))


def clique_decomposition(g):
    """Perfect clique order from maximum cardinality search.

    Raises
    ------
    NotDecomposable
        If ``g`` is not chordal.
    """
    visit = maximum_cardinality_search(g)
    if not _is_peo_visit(g, visit):
        raise NotDecomposable("graph contains a chordless cycle of length >= 4")
    cliques, seps = [], []
    seen = set()
    prev_card = -1
    for v in visit:
        before = frozenset(u for u in g.neighbors(v) if u in seen)
        if len(before) <= prev_card or not cliques:
            cliques.append(set(before | {v}))
            seps.append(before)
        else:
            cliques[-1].add(v)
        prev_card = len(before)
        seen.add(v)
    cliques = tuple(frozenset(c) for c in cliques)
    histories, residuals, separators = [], [], []
    h = frozenset()
    for j, c in enumerate(cliques):
        separators.append(None if j == 0 else frozenset(h & c))
        residuals.append(None if j == 0 else frozenset(c - h))
        h = h | c
        histories.append(h)
    return CliqueDecomposition(cliques, tuple(separators), tuple(histories), tuple(residuals))


def perfect_vertex_order(g):
    """Ordering in S_D built from a perfect clique sequence.

    Vertices of ``C_1, R_2, ..., R_k`` receive labels in descending blocks;
    inside a block the original label order is kept.
    """
    dec = clique_decomposition(g)
    blocks = [dec.cliques[0]] + list(dec.residuals[1:])
    order = [0] * g.m
    hi = g.m
    for block in blocks:
        vs = sorted(block)
        for k, v in enumerate(vs):
            order[v - 1] = hi - len(vs) + 1 + k
        hi -= len(vs)
    return tuple(order)


def symbolic_fill(g, order=None):
    """Fill edges created by eliminating vertices in label order.

    Returns the set of fill pairs ``(i, j)``, ``i > j``, in the relabelled
    graph.  An empty set means the Cholesky factor has no fill-in.
    """
    h = g if order is None else g.relabel(order)
    adj = [set(h.neighbors(v)) for v in range(h.m + 1)]
    fill = set()
    for j in range(1, h.m + 1):
        higher = sorted(u for u in adj[j] if u > j)
        for a, b in itertools.combinations(higher, 2):
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                fill.add((max(a, b), min(a, b)))
    return fill


def verify_order_in_SD(g, order):
    """True iff relabelling by ``order`` gives zero Cholesky fill-in."""
    order = _check_permutation(order, g.m)
    return not symbolic_fill(g, order)


def verify_order_in_SH(g, order):
    """True iff ``order`` is in S_D and L^{-1} keeps the zeros of L.

    The second condition is transitivity of the lower-neighbour relation:
    ``i > j > k`` with ``(i, j), (j, k)`` edges forces ``(i, k)``.
    """
    if not verify_order_in_SD(g, order):
        return False
    h = g.relabel(order)
    for j in h.vertices:
        for i in h.upper_neighbors(j):
            if not set(h.lower_neighbors(j)) <= h.neighbors(i):
                return False
    return True


# ---------------------------------------------------------------------------
# homogeneous graphs


def is_homogeneous(g):
    """Decomposable with no induced ``A_4``.

    Uses the nested closed-neighbourhood characterisation on every edge.
    """
    for i, j in g.edges:
        ni, nj = g.closed_neighborhood(i), g.closed_neighborhood(j)
        if not (ni <= nj or nj <= ni):
            return False
    return is_decomposable(g)


@dataclass(frozen=True)
class HasseDiagram:
    """Rooted forest on the twin classes of a homogeneous graph.

    ``parent[c]`` is the index of the immediate ancestor class of ``c`` or
    ``None`` for a root.
    """

    classes: tuple
    parent: tuple

    @property
    def children(self):
        kids = [[] for _ in self.classes]
        for c, p in enumerate(self.parent):
            if p is not None:
                kids[p].append(c)
        return tuple(tuple(k) for k in kids)

    @property
    def roots(self):
        return tuple(c for c, p in enumerate(self.parent) if p is None)

    @property
    def weights(self):
        return tuple(len(c) for c in self.classes)

    def class_of(self, v):
        for c, members in enumerate(self.classes):
            if v in members:
                return c
        raise KeyError(v)

    def edges(self):
        return tuple((p, c) for c, p in enumerate(self.parent) if p is not None)


def hasse_diagram(g):
    """Hasse diagram of the neighbourhood-containment preorder.

    Raises
    ------
    NotHomogeneous
    """
    if not is_homogeneous(g):
        raise NotHomogeneous("graph is not homogeneous")
    by_nbhd = {}
    for v in g.vertices:
        by_nbhd.setdefault(g.closed_neighborhood(v), []).append(v)
    groups = sorted(by_nbhd.items(), key=lambda kv: min(kv[1]))
    nbhds = [nb for nb, _ in groups]
    classes = tuple(tuple(sorted(vs)) for _, vs in groups)
    parent = []
    for c, nb in enumerate(nbhds):
        # ancestors have strictly larger closed neighbourhoods; they form a chain
        ancestors = [a for a, na in enumerate(nbhds) if a != c and nb < na]
        parent.append(min(ancestors, key=lambda a: len(nbhds[a])) if ancestors else None)
    return HasseDiagram(classes, tuple(parent))


def hasse_order(g):
    """Hasse perfect vertex elimination scheme (an ordering in S_H).

    Classes are labelled in descending blocks breadth-first from the roots;
    siblings with larger labels go first and a class keeps its internal
    label order.
    """
    hd = hasse_diagram(g)
    kids = hd.children
    key = lambda c: -max(hd.classes[c])
    queue = deque(sorted(hd.roots, key=key))
    order = [0] * g.m
    hi = g.m
    while queue:
        c = queue.popleft()
        vs = hd.classes[c]
        for k, v in enumerate(vs):
            order[v - 1] = hi - len(vs) + 1 + k
        hi -= len(vs)
        queue.extend(sorted(kids[c], key=key))
    return tuple(order)


def graph_from_hasse_tree(weights, parent):
    """Expand a weighted rooted forest into its homogeneous graph.

    Class ``c`` gets ``weights[c]`` consecutive labels in input order.  Two
    vertices are adjacent iff their classes are equal or one is an ancestor
    of the other.
    """
    if len(weights) != len(parent):
        raise ValidationError("weights and parent must have equal length")
    labels, nxt = [], 1
    for w in weights:
        if w < 1:
            raise ValidationError("class weights must be positive")
        labels.append(list(range(nxt, nxt + w)))
        nxt += w
    edges = set()
    for c in range(len(weights)):
        edges.update(itertools.combinations(labels[c], 2))
        a = parent[c]
        while a is not None:
            edges.update(itertools.product(labels[c], labels[a]))
            a = parent[a]
    return Graph(nxt - 1, frozenset(edges))


def _random_hasse_tree(m, rng, weights, parent, up=None):
    w = int(rng.integers(1, m + 1))
    rest = m - w
    if rest == 1:
        w, rest = w + 1, 0
    me = len(weights)
    weights.append(w)
    parent.append(up)
    if rest == 0:
        return
    k = int(rng.integers(2, rest + 1))
    cuts = np.sort(rng.choice(np.arange(1, rest), size=k - 1, replace=False))
    sizes = np.diff(np.concatenate([[0], cuts, [rest]]))
    for s in sizes:
        _random_hasse_tree(int(s), rng, weights, parent, me)


def random_homogeneous_graph(m, rng, shuffle=True):
    """Random homogeneous graph through a random Hasse tree.

    Every internal node gets at least two children so the tree is a valid
    Hasse diagram.  Labels are randomly permuted unless ``shuffle`` is off.
    """
    weights, parent = [], []
    _random_hasse_tree(m, rng, weights, parent)
    g = graph_from_hasse_tree(weights, parent)
    if shuffle:
        g = g.relabel(tuple(int(x) + 1 for x in rng.permutation(m)))
    return g


def random_decomposable_graph(m, rng, shuffle=True):
    """Random chordal graph grown by attaching simplicial vertices.

    Each new vertex is joined to a random subset of a random existing
    maximal clique, possibly empty.
    """
    cliques = [frozenset([1])] if m else []
    edges = set()
    for v in range(2, m + 1):
        base = sorted(cliques[int(rng.integers(len(cliques)))])
        take = [u for u in base if rng.random() < 0.6]
        edges.update((v, u) for u in take)
        new = frozenset(take) | {v}
        cliques = [c for c in cliques if not c <= new] + [new]
    g = Graph(m, frozenset(edges))
    if shuffle and m:
        g = g.relabel(tuple(int(x) + 1 for x in rng.permutation(m)))
    return g


# ---------------------------------------------------------------------------
# neighbour tables


@dataclass(frozen=True)
class NeighborIndex:
    """Per-vertex ``N(i)``, ``N^<(i)`` and ``n_i`` (count of higher neighbours).

    Tuples are indexed by ``i - 1``.
    """

    neighbors: tuple
    lower: tuple
    n_upper: tuple

    def lower_sizes(self):
        return np.array([len(s) for s in self.lower], dtype=int)


def neighbor_index(g):
    return NeighborIndex(
        neighbors=tuple(tuple(sorted(g.neighbors(i))) for i in g.vertices),
        lower=tuple(g.lower_neighbors(i) for i in g.vertices),
        n_upper=tuple(len(g.upper_neighbors(i)) for i in g.vertices),
    )


# ---------------------------------------------------------------------------
# text format


def parse_graph(text, path=None):
    """Parse ``p <m>`` followed by ``i j`` edge lines; ``#`` starts a comment."""
    m = None
    edges = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if m is None:
            if len(parts) != 2 or parts[0] != "p":
                raise ParseError("expected header 'p <m>'", path, lineno)
            try:
                m = int(parts[1])
            except ValueError:
                raise ParseError(f"bad vertex count {parts[1]!r}", path, lineno) from None
            if m < 0:
                raise ParseError("vertex count must be non-negative", path, lineno)
            continue
        if len(parts) != 2:
            raise ParseError(f"expected 'i j', got {line!r}", path, lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer vertex in {line!r}", path, lineno) from None
        if i == j:
            raise ParseError(f"self-loop at vertex {i}", path, lineno)
        if not (1 <= i <= m and 1 <= j <= m):
            raise ParseError(f"vertex out of range 1..{m} in {line!r}", path, lineno)
        edges.add((max(i, j), min(i, j)))
    if m is None:
        raise ParseError("missing header 'p <m>'", path, None)
    return Graph(m, frozenset(edges))


def format_graph(g):
    lines = [f"p {g.m}"]
    lines += [f"{j} {i}" for i, j in sorted(g.edges, key=lambda e: (e[1], e[0]))]
    return "\n".join(lines) + "\n"


def read_graph(path):
    path = Path(path)
    return parse_graph(path.read_text(), path=str(path))


def write_graph(g, path):
    Path(path).write_text(format_graph(g))
