"""
Orientation of a learned skeleton by end-mark rules.

A block at the ``x`` end of the edge x -- y means the edge cannot point into ``x``.
Rules, tried in this order, each candidate in canonical vertex order, restarting after
any new block:

==== ============================================================ ===========================
rule pattern                                                      adds a block at
==== ============================================================ ===========================
R1   A -- B -- C, A and C non-adjacent, B not in S_AC              the A end of A -- B and the
                                                                  C end of C -- B
R2   block at the A end of A -- B, B -- C, A and C non-adjacent,   the B end of B -- C
     B in S_AC
R3   A -- B and a path A ... B whose every edge carries a block   the A end of A -- B
     at the end nearer A
R4   A -- B, A -- C, A -- D, blocks at the C end of C -- B and     the A end of A -- B
     at the D end of D -- B, C and D non-adjacent, A in S_CD
==== ============================================================ ===========================

With triple labels (conservative variants) R1 needs an unambiguous triplex and R2, R4 an
unambiguous non-triplex instead of the separator membership tests.

Export: a block at one end only gives a directed edge away from it, anything else an
undirected edge.
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

from ..citest import SepSetMap
from ..graph import ChainGraph, Triplex, is_amp_cg, skeleton, triplexes
from ..utils import rank_of
from .utils import phase, unshielded_triples

logger = logging.getLogger(__name__)

TRIPLEX = "unambiguous-triplex"
NONTRIPLEX = "unambiguous-nontriplex"
AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class TripleLabel:
    triple: tuple
    label: str


class PartialGraph:
    def __init__(self, skeleton, order=None):
        self.skeleton = skeleton
        self.order = tuple(order) if order is not None else tuple(skeleton.nodes())
        self.rank = rank_of(self.order)
        self.blocks = set()

    def neighbors(self, x):
        return sorted(self.skeleton[x], key=self.rank.__getitem__)

    def adjacent(self, x, y):
        return self.skeleton.has_edge(x, y)

    def blocked(self, x, y):
        """True when the edge x -- y cannot point into ``x``."""
        return (x, y) in self.blocks

    def block(self, x, y):
        if (x, y) in self.blocks:
            return False
        self.blocks.add((x, y))
        return True

    def to_chain_graph(self):
        directed = []
        undirected = []
        for a, b in self.skeleton.edges():
            at_a, at_b = self.blocked(a, b), self.blocked(b, a)
            if at_a and not at_b:
                directed.append((a, b))
            elif at_b and not at_a:
                directed.append((b, a))
            else:
                undirected.append((a, b))
        return ChainGraph(self.order, directed, undirected)


def _label(labels, x, y, z):
    entry = labels.get((x, y, z)) or labels.get((z, y, x))
    return entry.label if entry is not None else None


class _Rules:
    def __init__(self, pg, sepsets, labels):
        self.pg = pg
        self.sepsets = sepsets
        self.labels = labels

    def _separator(self, x, z):
        return self.sepsets.get(x, z)

    def _triplex(self, a, b, c):
        if self.labels is not None:
            return _label(self.labels, a, b, c) == TRIPLEX
        S = self._separator(a, c)
        return S is not None and b not in S

    def _nontriplex(self, a, b, c):
        if self.labels is not None:
            return _label(self.labels, a, b, c) == NONTRIPLEX
        S = self._separator(a, c)
        return S is not None and b in S

    def r1(self):
        pg = self.pg
        for b in pg.order:
            for a, c in combinations(pg.neighbors(b), 2):
                if pg.adjacent(a, c) or not self._triplex(a, b, c):
                    continue
                changed = pg.block(a, b)
                changed = pg.block(c, b) or changed
                if changed:
                    logger.debug("R1 on (%s, %s, %s)", a, b, c)
                    return True
        return False

    def r2(self):
        pg = self.pg
        for a in pg.order:
            for b in pg.neighbors(a):
                if not pg.blocked(a, b):
                    continue
                for c in pg.neighbors(b):
                    if c == a or pg.adjacent(a, c) or pg.blocked(b, c):
                        continue
                    if self._nontriplex(a, b, c):
                        pg.block(b, c)
                        logger.debug("R2 on (%s, %s, %s)", a, b, c)
                        return True
        return False

    def _blocked_path(self, a, b):
        """True when a path from ``a`` to ``b`` avoiding the edge a -- b has all blocks nearer ``a``."""
        pg = self.pg
        seen = {a}
        queue = deque([a])
        while queue:
            x = queue.popleft()
            for y in pg.neighbors(x):
                if (x, y) == (a, b) or y in seen or not pg.blocked(x, y):
                    continue
                if y == b:
                    return True
                seen.add(y)
                queue.append(y)
        return False

    def r3(self):
        pg = self.pg
        for a in pg.order:
            for b in pg.neighbors(a):
                if pg.blocked(a, b):
                    continue
                if self._blocked_path(a, b):
                    pg.block(a, b)
                    logger.debug("R3 on %s -- %s", a, b)
                    return True
        return False

    def r4(self):
        pg = self.pg
        for a in pg.order:
            around = pg.neighbors(a)
            for b in around:
                if pg.blocked(a, b):
                    continue
                for c, d in combinations([w for w in around if w != b], 2):
                    if pg.adjacent(c, d) or not (pg.adjacent(c, b) and pg.adjacent(d, b)):
                        continue
                    if pg.blocked(c, b) and pg.blocked(d, b) and self._nontriplex(c, a, d):
                        pg.block(a, b)
                        logger.debug("R4 on %s -- %s via %s, %s", a, b, c, d)
                        return True
        return False

    def run(self):
        steps = 0
        while self.r1() or self.r2() or self.r3() or self.r4():
            steps += 1
        return steps


def apply_rules(partial, sepsets, labels=None):
    """Apply R1-R4 to a fixpoint. Returns the number of rule firings."""
    return _Rules(partial, sepsets, labels).run()


@dataclass
class OrientationResult:
    graph: ChainGraph
    partial: PartialGraph
    conflicts: list = field(default_factory=list)


def orient(skeleton, sepsets, labels=None, order=None):
    with phase("orientation"):
        partial = PartialGraph(skeleton, order)
        apply_rules(partial, sepsets, labels)
        graph = partial.to_chain_graph()
    conflicts = []
    if not is_amp_cg(graph):
        conflicts.append("partially directed cycle in the oriented graph")
        logger.warning("Oriented graph has a partially directed cycle, it is not an AMP chain graph")
    return OrientationResult(graph, partial, conflicts)


def pattern(g):
    """
    The skeleton of ``g`` oriented by the rules from the triplexes of ``g``. Every graph
    triplex equivalent to ``g`` has the same pattern, and learning from perfect
    independence information returns it.
    """
    ug = skeleton(g)
    found = triplexes(g)
    labels = {}
    for x, y, z in unshielded_triples(ug, g.rank):
        key = (min(x, z), y, max(x, z))
        label = TRIPLEX if Triplex(frozenset((x, z)), y) in found else NONTRIPLEX
        labels[key] = TripleLabel(key, label)
    return orient(ug, SepSetMap(), labels, g.vertices).graph
