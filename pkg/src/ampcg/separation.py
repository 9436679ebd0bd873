"""
p-separation queries and minimal-separator problems for AMP chain graphs.

Every answer is taken against the augmented extended subgraph
M(Z) = (G[X u Y u Z])^a. For Z inside ant(X u Y), M(Z) grows with Z and is bounded by
the anterior augmented graph (G_ant(X u Y))^a. When M(empty) already equals that bound
the graph no longer depends on Z ("fixed" pairs) and the two-pass BFS algorithms are
exact on it. Otherwise candidates are grown and shrunk on M(Z) and their minimality is
certified over the subsets that induce a different M.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import FrozenSet

from .exceptions import AdjacentVerticesError, InvalidQueryError, NotASeparatorError, PreconditionError
from .graph import (HEAD, UNDIRECTED, ancestral_closure, anterior, augment, edge_set,
                    extended_subgraph)
from .utils import subsets_up_to

logger = logging.getLogger(__name__)


class _NotSeparable:
    """Result of the restricted problems when no subset of S separates."""

    def __repr__(self):
        return "NotSeparable"

    def __bool__(self):
        return False


NotSeparable = _NotSeparable()


@dataclass(frozen=True)
class SeparationQuery:
    X: FrozenSet[str]
    Y: FrozenSet[str]
    Z: FrozenSet[str] = frozenset()

    @classmethod
    def of(cls, X, Y, Z=()):
        def as_set(s):
            return frozenset([s]) if isinstance(s, str) else frozenset(s)

        return cls(as_set(X), as_set(Y), as_set(Z))

    def validate(self, g):
        if not self.X or not self.Y:
            raise InvalidQueryError("X and Y must be non-empty")
        unknown = (self.X | self.Y | self.Z) - set(g.vertices)
        if unknown:
            raise InvalidQueryError(f"unknown vertices: {','.join(sorted(unknown))}")
        if self.X & self.Y or self.X & self.Z or self.Y & self.Z:
            raise InvalidQueryError("X, Y and Z must be pairwise disjoint")


def _reached(ug, sources, stop):
    """
    BFS from ``sources`` that marks but never expands the vertices of ``stop``.
    Returns the marked subset of ``stop``.
    """
    seen = set(sources)
    queue = deque(sources)
    marked = set()
    while queue:
        x = queue.popleft()
        for y in ug[x]:
            if y in seen:
                continue
            seen.add(y)
            if y in stop:
                marked.add(y)
            else:
                queue.append(y)
    return frozenset(marked)


def _separated_in(ug, X, Y, Z):
    seen = set(X)
    queue = deque(X)
    while queue:
        x = queue.popleft()
        for y in ug[x]:
            if y in seen or y in Z:
                continue
            if y in Y:
                return False
            seen.add(y)
            queue.append(y)
    return True


def _two_pass(ug, X, Y, Z):
    return _reached(ug, Y, _reached(ug, X, Z))


def separation_graph(g, A):
    """M(A): the augmented extended subgraph over ``A``."""
    return augment(extended_subgraph(g, A))


def p_separated_aug(g, q):
    q.validate(g)
    ug = separation_graph(g, q.X | q.Y | q.Z)
    return _separated_in(ug, q.X, q.Y, q.Z)


def _open(b, m_in, m_out, Z, anZ, g):
    triplex = (m_in == HEAD and m_out in (HEAD, UNDIRECTED)) or (m_in == UNDIRECTED and m_out == HEAD)
    if triplex:
        return b in anZ
    if b not in Z:
        return True
    return m_in == UNDIRECTED and m_out == UNDIRECTED and any(p not in Z for p in g.parents(b))


def p_separated_pathwise(g, q):
    """
    True iff no Z-open chain joins X and Y. Searches states (vertex, end mark of the
    edge it was entered by) so every state is expanded once.
    """
    q.validate(g)
    anZ = ancestral_closure(g, q.Z)
    seen = set()
    queue = deque()
    for x in g.sorted(q.X):
        for w in g.adjacent(x):
            if w in q.Y:
                return False
            state = (w, g.mark_at(w, x))
            if state not in seen:
                seen.add(state)
                queue.append(state)
    while queue:
        b, m_in = queue.popleft()
        for c in g.adjacent(b):
            if not _open(b, m_in, g.mark_at(b, c), q.Z, anZ, g):
                continue
            if c in q.Y:
                return False
            state = (c, g.mark_at(c, b))
            if state not in seen:
                seen.add(state)
                queue.append(state)
    return True


class _Context:
    """Per-query state: the anterior set, the bounding graph and M(Z) by ancestral closure."""

    def __init__(self, g, X, Y):
        self.g = g
        self.X = frozenset(X)
        self.Y = frozenset(Y)
        self.T = anterior(g, self.X | self.Y)
        self.bound = augment(g.induced(self.T))
        self._graphs = {}
        base = self.graph(frozenset())
        self.fixed = set(base.nodes()) == set(self.bound.nodes()) and edge_set(base) == edge_set(self.bound)

    def closure(self, Z):
        return ancestral_closure(self.g, self.X | self.Y | Z)

    def graph(self, Z):
        key = self.closure(Z)
        if key not in self._graphs:
            self._graphs[key] = augment(extended_subgraph(self.g, key))
        return self._graphs[key]

    def separates(self, Z):
        return _separated_in(self.graph(Z), self.X, self.Y, Z)

    def candidates(self):
        return self.T - self.X - self.Y

    def first_separator(self, pool):
        """Smallest separator inside ``pool``, lexicographic among equal sizes, or None."""
        for Z in subsets_up_to(pool, self.g.rank):
            if self.separates(Z):
                return Z
        return None

    def grow(self):
        """
        Grow Z by the X-neighbourhood in M(Z) until it separates. None when some M(Z)
        joins X and Y directly.
        """
        Z = frozenset()
        while True:
            ug = self.graph(Z)
            if _separated_in(ug, self.X, self.Y, Z):
                return Z
            nb = set()
            for x in self.X:
                nb.update(ug[x])
            if nb & self.Y:
                return None
            grown = Z | (nb - self.X)
            if grown == Z:
                return None
            Z = grown

    def minimize(self, Z):
        while True:
            shrunk = _two_pass(self.graph(Z), self.X, self.Y, Z)
            if shrunk == Z:
                break
            Z = shrunk
        if self.fixed:
            return Z
        key = self.closure(Z)
        for Z1 in subsets_up_to(Z, self.g.rank, max_size=len(Z) - 1):
            if self.closure(Z1) == key:
                continue
            if self.separates(Z1):
                return Z1
        return Z


def _check_pair(g, u, v):
    if u == v:
        raise InvalidQueryError(f"u and v must differ, got {u} twice")
    for w in (u, v):
        if w not in g:
            raise InvalidQueryError(f"unknown vertex: {w}")
    if g.is_adjacent(u, v):
        raise AdjacentVerticesError(u, v)


def is_minimal_separator(g, u, v, Z):
    Z = frozenset(Z)
    _check_pair(g, u, v)
    if not p_separated_aug(g, SeparationQuery.of(u, v, Z)):
        raise NotASeparatorError(u, v, Z)
    ctx = _Context(g, {u}, {v})
    if not Z <= ctx.T:
        return False
    ug = ctx.bound if ctx.fixed else ctx.graph(Z)
    if _reached(ug, {u}, Z) != Z or _reached(ug, {v}, Z) != Z:
        return False
    if ctx.fixed:
        return True
    key = ctx.closure(Z)
    for Z1 in subsets_up_to(Z, g.rank, max_size=len(Z) - 1):
        if ctx.closure(Z1) != key and ctx.separates(Z1):
            return False
    return True


def _separate(ctx):
    """Minimal separator for the context's X and Y."""
    if ctx.fixed:
        ug = ctx.bound
        start = set()
        for x in ctx.X:
            start.update(ug[x])
        if start & ctx.Y:
            raise PreconditionError("X and Y are joined in the augmented anterior graph, no separator exists")
        return _two_pass(ug, ctx.X, ctx.Y, frozenset(start - ctx.X))
    Z = ctx.grow()
    if Z is None:
        Z = ctx.first_separator(ctx.candidates())
        if Z is None:
            raise PreconditionError("no separator exists")
        return Z
    return ctx.minimize(Z)


def find_minimal_separator(g, u, v):
    _check_pair(g, u, v)
    return _separate(_Context(g, {u}, {v}))


def restricted_separator(g, u, v, S):
    S = frozenset(S)
    _check_pair(g, u, v)
    if u in S or v in S:
        raise InvalidQueryError("u and v must not belong to S")
    ctx = _Context(g, {u}, {v})
    restricted = S & ctx.T
    if ctx.fixed:
        return restricted if _separated_in(ctx.bound, ctx.X, ctx.Y, restricted) else NotSeparable
    if ctx.separates(restricted):
        return restricted
    Z = ctx.first_separator(restricted)
    return NotSeparable if Z is None else Z


def restricted_minimal_separator(g, u, v, S):
    Z = restricted_separator(g, u, v, S)
    if Z is NotSeparable:
        return Z
    ctx = _Context(g, {u}, {v})
    if ctx.fixed:
        return _two_pass(ctx.bound, ctx.X, ctx.Y, Z)
    return ctx.minimize(Z)


class _Dummy:
    def __init__(self, side):
        self.side = side

    def __repr__(self):
        return f"alpha_{self.side}"


def minimal_separator_sets(g, X, Y):
    """
    Minimal separator for vertex sets X and Y through two dummy vertices standing in for them.
    """
    q = SeparationQuery.of(X, Y)
    q.validate(g)
    for x in g.sorted(q.X):
        for y in g.sorted(q.Y):
            if g.is_adjacent(x, y):
                raise AdjacentVerticesError(x, y)
    ctx = _Context(g, q.X, q.Y)
    if not ctx.fixed:
        return _separate(ctx)
    ug = ctx.bound.copy()
    alpha_x, alpha_y = _Dummy("X"), _Dummy("Y")
    for dummy, side in ((alpha_x, q.X), (alpha_y, q.Y)):
        around = set()
        for w in side:
            around.update(ctx.bound[w])
        ug.add_node(dummy)
        ug.add_edges_from((dummy, w) for w in around - side)
    if any(y in ctx.bound[x] for x in q.X for y in q.Y):
        raise PreconditionError("X and Y are joined in the augmented anterior graph, no separator exists")
    ug.remove_nodes_from(q.X | q.Y)
    start = frozenset(ug[alpha_x])
    return _two_pass(ug, {alpha_x}, {alpha_y}, start)


def _sort_family(family, g):
    return sorted(family, key=lambda s: (len(s), g.sorted(s)))


def enumerate_minimal_separators(g, u, v):
    _check_pair(g, u, v)
    ctx = _Context(g, {u}, {v})
    if not ctx.fixed:
        found = []
        for Z in subsets_up_to(ctx.candidates(), g.rank):
            if any(f <= Z for f in found):
                continue
            if ctx.separates(Z):
                found.append(Z)
        return _sort_family(found, g)

    ug = ctx.bound
    first = _separate(ctx)
    found = {first}
    queue = deque([first])
    while queue:
        S = queue.popleft()
        for x in g.sorted(S):
            if v in ug[x]:
                continue
            T = (S | set(ug[x])) - {u}
            close = _reached(ug, {v}, T)
            sep = _reached(ug, {u}, close)
            if sep not in found:
                found.add(sep)
                queue.append(sep)
    logger.debug("%d minimal separators for %s and %s", len(found), u, v)
    return _sort_family(found, g)


def brute_force_minimal_separators(g, u, v):
    """
    Exhaustive reference: every subset of V minus {u, v}, checked with p_separated_aug.
    """
    _check_pair(g, u, v)
    found = []
    pool = set(g.vertices) - {u, v}
    for Z in subsets_up_to(pool, g.rank):
        if any(f <= Z for f in found):
            continue
        if p_separated_aug(g, SeparationQuery.of(u, v, Z)):
            found.append(Z)
    return _sort_family(found, g)
