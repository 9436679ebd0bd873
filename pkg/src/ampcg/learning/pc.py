"""
PC-like learners for AMP chain graphs: skeleton recovery (original and stable),
triple labelling for the conservative variants, and the end-to-end ``learn``.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from ..citest import SepSetMap
from ..exceptions import ConfigError, InvalidQueryError
from ..utils import rank_of, subsets
from .orientation import AMBIGUOUS, NONTRIPLEX, TRIPLEX, TripleLabel, orient
from .utils import adjacency_snapshot, adjacency_union, complete_graph, phase, unshielded_triples

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    ORIGINAL = "original"
    STABLE = "stable"
    CONSERVATIVE = "conservative"
    STABLE_CONSERVATIVE = "stable_conservative"

    @property
    def stable(self):
        return self in (Variant.STABLE, Variant.STABLE_CONSERVATIVE)

    @property
    def conservative(self):
        return self in (Variant.CONSERVATIVE, Variant.STABLE_CONSERVATIVE)


@dataclass(frozen=True)
class LearnConfig:
    alpha: float = 0.01
    variable_order: tuple = ()
    max_sepset_size: Optional[int] = None
    variant: Variant = Variant.ORIGINAL
    threads: int = 1

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.max_sepset_size is not None and self.max_sepset_size < 0:
            raise ConfigError(f"max_sepset_size must be non-negative, got {self.max_sepset_size}")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        object.__setattr__(self, "variable_order", tuple(self.variable_order))
        object.__setattr__(self, "variant", Variant(self.variant))

    def order_for(self, variables):
        """The configured order, or ``variables`` as given when none is configured."""
        if not self.variable_order:
            return tuple(variables)
        if sorted(self.variable_order) != sorted(variables):
            raise InvalidQueryError("Invalid order: it must be a permutation of " + ",".join(variables))
        return self.variable_order


@dataclass(frozen=True)
class Removal:
    level: int
    u: str
    v: str
    S: frozenset

    def __str__(self):
        shown = ",".join(sorted(self.S)) or "{}"
        return f"level {self.level}: {self.u} -- {self.v} removed given {shown}"


@dataclass
class SkeletonResult:
    graph: object
    sepsets: SepSetMap
    trace: list = field(default_factory=list)
    max_level: int = 0

    def removals_per_level(self):
        counts = {}
        for r in self.trace:
            counts[r.level] = counts.get(r.level, 0) + 1
        return counts


def _start(order, initial):
    if initial is None:
        return complete_graph(order)
    H = initial.copy()
    missing = set(order) - set(H.nodes())
    H.add_nodes_from(sorted(missing, key=order.index))
    return H


def pc_skeleton(src, cfg, initial=None, order=None):
    """
    Order-dependent skeleton phase: a found separator removes its edge at once and
    changes the candidate sets of every later pair. ``initial`` replaces the complete
    starting graph (the global prune of the decomposition learner starts from its merge).
    """
    order = tuple(order) if order is not None else cfg.order_for(src.variables)
    rank = rank_of(order)
    H = _start(order, initial)
    result = SkeletonResult(H, SepSetMap())
    level = 0
    with phase("skeleton recovery"):
        while cfg.max_sepset_size is None or level <= cfg.max_sepset_size:
            eligible = False
            for u in order:
                for v in order:
                    if u == v or not H.has_edge(u, v):
                        continue
                    candidates = adjacency_union(H, u, (u, v))
                    if len(candidates) < level:
                        continue
                    eligible = True
                    for S in subsets(candidates, level, rank):
                        if src.query(u, v, S):
                            H.remove_edge(u, v)
                            result.sepsets.record(u, v, S)
                            result.trace.append(Removal(level, u, v, S))
                            logger.debug("level %d: removed %s -- %s given {%s}", level, u, v, ",".join(sorted(S)))
                            break
            if not eligible:
                break
            result.max_level = level
            level += 1
    return result


def _search_pair(src, u, v, snapshot, level, rank):
    for a, b in ((u, v), (v, u)):
        candidates = snapshot[a] - {a, b}
        if len(candidates) < level:
            continue
        for S in subsets(candidates, level, rank):
            if src.query(a, b, S):
                return a, b, S
    return None


def stable_skeleton(src, cfg, initial=None, order=None):
    """
    Order-independent skeleton phase. Candidate sets come from a snapshot taken at the
    start of each level and removals are applied when the level ends, so pairs of one
    level can be decided concurrently (``cfg.threads``).
    """
    order = tuple(order) if order is not None else cfg.order_for(src.variables)
    rank = rank_of(order)
    H = _start(order, initial)
    result = SkeletonResult(H, SepSetMap())
    level = 0
    with phase("stable skeleton recovery"):
        while cfg.max_sepset_size is None or level <= cfg.max_sepset_size:
            snapshot = adjacency_snapshot(H)
            pairs = [
                (u, v)
                for u, v in sorted((tuple(sorted(e, key=rank.__getitem__)) for e in H.edges()),
                                   key=lambda e: (rank[e[0]], rank[e[1]]))
                if len(snapshot[u] - {u, v}) >= level or len(snapshot[v] - {u, v}) >= level
            ]
            if not pairs:
                break

            def decide(pair):
                return _search_pair(src, pair[0], pair[1], snapshot, level, rank)

            if cfg.threads > 1:
                with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                    found = list(pool.map(decide, pairs))
            else:
                found = [decide(pair) for pair in pairs]
            # the sequential scan meets (a, b) at the position of a, then b
            removals = sorted((f for f in found if f is not None), key=lambda f: (rank[f[0]], rank[f[1]]))
            for a, b, S in removals:
                H.remove_edge(a, b)
                result.sepsets.record(a, b, S)
                result.trace.append(Removal(level, a, b, S))
                logger.debug("level %d: removed %s -- %s given {%s}", level, a, b, ",".join(sorted(S)))
            result.max_level = level
            level += 1
    return result


def label_triples(src, skeleton, max_size=None, order=None):
    """
    Label every unshielded triple by looking at all separating sets of its endpoints
    drawn from either endpoint's adjacency union: the middle vertex in all of them gives
    a non-triplex, in none of them a triplex, anything else (or no set at all) is ambiguous.
    Only the final skeleton and the CI source decide a label, so stable skeletons give
    labels that do not depend on the order. Keys are (x, y, z) with x and z sorted by name.
    """
    order = tuple(order) if order is not None else tuple(skeleton.nodes())
    rank = rank_of(order)
    labels = {}
    with phase("triple labelling"):
        for x, y, z in unshielded_triples(skeleton, rank):
            found = []
            for a in (x, z):
                candidates = adjacency_union(skeleton, a, (x, z))
                top = len(candidates) if max_size is None else min(max_size, len(candidates))
                for size in range(top + 1):
                    for S in subsets(candidates, size, rank):
                        if S not in found and src.query(x, z, S):
                            found.append(S)
            if not found:
                label = AMBIGUOUS
            elif all(y in S for S in found):
                label = NONTRIPLEX
            elif not any(y in S for S in found):
                label = TRIPLEX
            else:
                label = AMBIGUOUS
            key = (min(x, z), y, max(x, z))
            labels[key] = TripleLabel(key, label)
            logger.debug("triple (%s, %s, %s): %s", x, y, z, label)
    return labels


@dataclass
class LearnResult:
    graph: object
    skeleton: SkeletonResult
    labels: Optional[dict]
    conflicts: list
    query_count: int
    elapsed: float


def learn_report(src, cfg):
    started = time.perf_counter()
    order = cfg.order_for(src.variables)
    if cfg.variant.stable:
        skel = stable_skeleton(src, cfg, order=order)
    else:
        skel = pc_skeleton(src, cfg, order=order)
    labels = None
    if cfg.variant.conservative:
        cap = cfg.max_sepset_size if cfg.max_sepset_size is not None else skel.max_level
        labels = label_triples(src, skel.graph, cap, order)
    oriented = orient(skel.graph, skel.sepsets, labels, order)
    return LearnResult(oriented.graph, skel, labels, oriented.conflicts, src.query_count,
                       time.perf_counter() - started)


def learn(src, cfg):
    return learn_report(src, cfg).graph
