import logging
import sys
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import FrozenSet

import networkx as nx

from .exceptions import GraphFormatError, GraphMismatchError
from .utils import canonical, rank_of

logger = logging.getLogger(__name__)

HEAD = "head"
TAIL = "tail"
UNDIRECTED = "und"


@dataclass(frozen=True)
class Triplex:
    endpoints: FrozenSet[str]
    middle: str

    def __str__(self):
        x, z = sorted(self.endpoints)
        return f"({x},{z}|{self.middle})"


class ChainGraph:
    def __init__(self, vertices=(), directed=(), undirected=()):
        """
        Initialize a mixed graph with directed and undirected edges.

        ``vertices`` fixes the canonical order. Edge endpoints that are not listed are
        appended in order of first appearance. ``directed`` holds pairs (a, b) for a -> b,
        ``undirected`` holds pairs for a -- b.
        """
        order = list(dict.fromkeys(vertices))
        seen = set(order)
        directed_edges = set()
        undirected_edges = set()

        def register(a, b):
            if a == b:
                raise GraphFormatError(f"self-loop on {a}")
            for x in (a, b):
                if x not in seen:
                    seen.add(x)
                    order.append(x)

        for a, b in directed:
            register(a, b)
            directed_edges.add((a, b))
        for a, b in undirected:
            register(a, b)
            undirected_edges.add(frozenset((a, b)))

        for a, b in directed_edges:
            if (b, a) in directed_edges:
                raise GraphFormatError(f"{a} -> {b} conflicts with {b} -> {a}")
            if frozenset((a, b)) in undirected_edges:
                raise GraphFormatError(f"{a} -> {b} conflicts with {a} -- {b}")

        self.vertices = tuple(order)
        self.rank = rank_of(order)
        self.directed_edges = frozenset(directed_edges)
        self.undirected_edges = frozenset(undirected_edges)

        parents = {v: [] for v in order}
        children = {v: [] for v in order}
        neighbors = {v: [] for v in order}
        for a, b in directed_edges:
            parents[b].append(a)
            children[a].append(b)
        for edge in undirected_edges:
            a, b = tuple(edge)
            neighbors[a].append(b)
            neighbors[b].append(a)
        self._parents = {v: tuple(canonical(p, self.rank)) for v, p in parents.items()}
        self._children = {v: tuple(canonical(c, self.rank)) for v, c in children.items()}
        self._neighbors = {v: tuple(canonical(n, self.rank)) for v, n in neighbors.items()}

    def parents(self, v):
        return self._parents[v]

    def children(self, v):
        return self._children[v]

    def neighbors(self, v):
        """Vertices joined to ``v`` by an undirected edge."""
        return self._neighbors[v]

    def adjacent(self, v):
        return tuple(canonical(set(self._parents[v]) | set(self._children[v]) | set(self._neighbors[v]), self.rank))

    def is_adjacent(self, a, b):
        return (a, b) in self.directed_edges or (b, a) in self.directed_edges or frozenset((a, b)) in self.undirected_edges

    def mark_at(self, y, x):
        """
        The end mark at ``y`` of the edge between ``x`` and ``y``: HEAD for x -> y,
        TAIL for y -> x, UNDIRECTED for x -- y, None when not adjacent.
        """
        if (x, y) in self.directed_edges:
            return HEAD
        if (y, x) in self.directed_edges:
            return TAIL
        if frozenset((x, y)) in self.undirected_edges:
            return UNDIRECTED
        return None

    def boundary(self, A):
        A = set(A)
        bd = set()
        for v in A:
            bd.update(self._parents[v])
            bd.update(self._neighbors[v])
        return frozenset(bd - A)

    def induced(self, A):
        A = set(A)
        return ChainGraph(
            [v for v in self.vertices if v in A],
            [(a, b) for a, b in self.directed_edges if a in A and b in A],
            [tuple(e) for e in self.undirected_edges if e <= A],
        )

    def sorted(self, items):
        return canonical(items, self.rank)

    def edge_count(self):
        return len(self.directed_edges) + len(self.undirected_edges)

    def __contains__(self, v):
        return v in self.rank

    def __len__(self):
        return len(self.vertices)

    def __eq__(self, other):
        if not isinstance(other, ChainGraph):
            return NotImplemented
        return (
            set(self.vertices) == set(other.vertices)
            and self.directed_edges == other.directed_edges
            and self.undirected_edges == other.undirected_edges
        )

    def __hash__(self):
        return hash((frozenset(self.vertices), self.directed_edges, self.undirected_edges))

    def __repr__(self):
        return f"ChainGraph({len(self.vertices)} vertices, {len(self.directed_edges)} directed, {len(self.undirected_edges)} undirected)"


def undirected_graph(vertices, edges=()):
    """
    Build the networkx graph used as UndirectedGraph, nodes inserted in canonical order.
    """
    ug = nx.Graph()
    ug.add_nodes_from(vertices)
    ug.add_edges_from(tuple(e) for e in edges)
    return ug


def edge_set(ug):
    return {frozenset(e) for e in ug.edges()}


def chain_components(g):
    """
    Connected components of the undirected part, listed by their first vertex in canonical order.
    """
    und = undirected_graph(g.vertices, g.undirected_edges)
    comps = [frozenset(c) for c in nx.connected_components(und)]
    return sorted(comps, key=lambda c: min(g.rank[v] for v in c))


def _quotient(g):
    comps = chain_components(g)
    index = {v: i for i, comp in enumerate(comps) for v in comp}
    quotient = nx.DiGraph()
    quotient.add_nodes_from(range(len(comps)))
    inner = False
    for a, b in g.directed_edges:
        if index[a] == index[b]:
            inner = True
        else:
            quotient.add_edge(index[a], index[b])
    return comps, quotient, inner


def is_amp_cg(g):
    """
    True iff ``g`` has no partially directed cycle, i.e. no directed edge inside a chain
    component and an acyclic component quotient.
    """
    _, quotient, inner = _quotient(g)
    if inner:
        return False
    return nx.is_directed_acyclic_graph(quotient)


def component_order(g):
    """Chain components in a topological order of the quotient, ties by canonical order."""
    comps, quotient, _ = _quotient(g)
    order = nx.lexicographical_topological_sort(quotient)
    return [comps[i] for i in order]


def _closure(start, step):
    seen = set(start)
    queue = deque(start)
    while queue:
        x = queue.popleft()
        for y in step(x):
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return frozenset(seen)


def ancestral_closure(g, A):
    return _closure(A, g.parents)


def anterior(g, A):
    return _closure(A, lambda v: g.parents(v) + g.neighbors(v))


def coherent_closure(g, A):
    """Union of the chain components that intersect ``A``."""
    return _closure(A, g.neighbors)


def extended_subgraph(g, A):
    """
    G[A]: the subgraph induced by An(A) plus the undirected edges over Co(An(A)).
    """
    an = ancestral_closure(g, A)
    co = coherent_closure(g, an)
    return ChainGraph(
        [v for v in g.vertices if v in co],
        [(a, b) for a, b in g.directed_edges if a in an and b in an],
        [tuple(e) for e in g.undirected_edges if e <= co],
    )


def _is_triplex_marks(m1, m2):
    if TAIL in (m1, m2):
        return False
    return not (m1 == UNDIRECTED and m2 == UNDIRECTED)


def triplexes(g):
    found = set()
    for y in g.vertices:
        for x, z in combinations(g.adjacent(y), 2):
            if g.is_adjacent(x, z):
                continue
            if _is_triplex_marks(g.mark_at(y, x), g.mark_at(y, z)):
                found.add(Triplex(frozenset((x, z)), y))
    return frozenset(found)


def flags(g):
    """Induced subgraphs X -> Y -- Z, as tuples (X, Y, Z)."""
    found = set()
    for y in g.vertices:
        for x in g.parents(y):
            for z in g.neighbors(y):
                if not g.is_adjacent(x, z):
                    found.add((x, y, z))
    return frozenset(found)


def biflags(g):
    """
    Quadruples (X, A, B, Y) with X -> A, Y -> B, A -- B and X != Y, normalized so that
    A precedes B in the canonical order.
    """
    found = set()
    for edge in g.undirected_edges:
        a, b = canonical(edge, g.rank)
        for x in g.parents(a):
            for y in g.parents(b):
                if x != y:
                    found.add((x, a, b, y))
    return frozenset(found)


def skeleton(g):
    ug = undirected_graph(g.vertices, g.directed_edges)
    ug.add_edges_from(tuple(e) for e in g.undirected_edges)
    return ug


def augment(g):
    """
    The augmented graph: skeleton plus X -- Z for every triplex and X -- Y for every bi-flag.
    """
    ug = skeleton(g)
    for t in triplexes(g):
        ug.add_edge(*canonical(t.endpoints, g.rank))
    for x, _, _, y in biflags(g):
        ug.add_edge(x, y)
    return ug


def triplex_equivalent(g, h):
    if set(g.vertices) != set(h.vertices):
        raise GraphMismatchError("Graphs have different vertex sets")
    if edge_set(skeleton(g)) != edge_set(skeleton(h)):
        return False
    return triplexes(g) == triplexes(h)


def parse_graph(text, source="<string>"):
    """
    Parse the graph text format: ``a -> b``, ``a -- b``, ``node a``, ``#`` comments.
    """
    vertices = []
    directed = []
    undirected = []
    kinds = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) == 2 and tokens[0] == "node":
            vertices.append(tokens[1])
            continue
        if len(tokens) != 3 or tokens[1] not in ("->", "--"):
            raise GraphFormatError(f"cannot parse '{line}' in {source}", line=number)
        a, op, b = tokens
        if a == b:
            raise GraphFormatError(f"self-loop on {a}", line=number)
        key = frozenset((a, b))
        kind = (op, a, b) if op == "->" else (op,) + tuple(sorted((a, b)))
        previous = kinds.get(key)
        if previous is not None and previous[0] != kind:
            earlier = f"{previous[0][1]} {previous[0][0]} {previous[0][2]}"
            raise GraphFormatError(f"{a} {op} {b} conflicts with {earlier} (line {previous[1]})", line=number)
        if previous is not None:
            continue
        kinds[key] = (kind, number)
        vertices.extend((a, b))
        if op == "->":
            directed.append((a, b))
        else:
            undirected.append((a, b))
    return ChainGraph(vertices, directed, undirected)


def format_graph(g):
    """
    Canonical text: ``node`` lines for edgeless vertices, then all edges, each block sorted by name.
    """
    touched = set()
    edges = []
    for a, b in g.directed_edges:
        touched.update((a, b))
        edges.append((a, b, f"{a} -> {b}"))
    for e in g.undirected_edges:
        a, b = sorted(e)
        touched.update((a, b))
        edges.append((a, b, f"{a} -- {b}"))
    lines = [f"node {v}" for v in sorted(set(g.vertices) - touched)]
    lines.extend(line for _, _, line in sorted(edges))
    return "".join(line + "\n" for line in lines)


def read_graph(path):
    if path == "-":
        return parse_graph(sys.stdin.read(), "<stdin>")
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise GraphFormatError(f"cannot read {path}: {e.strerror}")
    return parse_graph(text, path)


def write_graph(g, path):
    text = format_graph(g)
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info("##### Saved graph to: %s", path)
