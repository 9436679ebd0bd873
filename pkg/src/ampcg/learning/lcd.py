"""
Decomposition-based learning: an undirected independence graph is triangulated, its
junction tree serves as a p-separation tree, skeletons are learned locally inside every
tree node, merged, pruned globally and finally oriented with the shared rules.
"""
import json
import logging
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Optional

import networkx as nx
import numpy as np

from ..citest import DiscreteTest, GaussianTest, OracleTest, SepSetMap, fisher_z
from ..exceptions import (ConfigError, GraphMismatchError, InputFormatError, InsufficientSampleError,
                          NotChordalError, PreconditionError, SingularMatrixError)
from ..graph import augment, read_graph, skeleton
from ..separation import SeparationQuery, p_separated_aug
from ..utils import rank_of
from .orientation import orient
from .pc import pc_skeleton, stable_skeleton
from .utils import complete_graph, phase

logger = logging.getLogger(__name__)

UIG_KINDS = ("gaussian", "full-cond", "oracle", "file")
MAX_FULL_COND_DISCRETE = 12


@dataclass(frozen=True)
class UIGMethod:
    kind: str
    path: Optional[str] = None

    @classmethod
    def parse(cls, text):
        if text.startswith("file:"):
            path = text[len("file:"):]
            if not path:
                raise ConfigError("UIG method file: needs a path")
            return cls("file", path)
        if text not in UIG_KINDS or text == "file":
            raise ConfigError(f"unknown UIG method '{text}', expected gaussian, full-cond, oracle or file:PATH")
        return cls(text)

    @classmethod
    def default_for(cls, src):
        backend = src.backend
        if isinstance(backend, GaussianTest):
            return cls("gaussian")
        if isinstance(backend, OracleTest):
            return cls("oracle")
        return cls("full-cond")

    def __str__(self):
        return f"file:{self.path}" if self.kind == "file" else self.kind


def _gaussian_uig(src, order):
    backend = src.backend
    if not isinstance(backend, GaussianTest):
        raise PreconditionError("the gaussian UIG method needs a Gaussian dataset")
    p = len(order)
    if backend.n <= p + 3:
        raise InsufficientSampleError(f"gaussian UIG needs n > p + 3, got n = {backend.n}, p = {p}")
    idx = [backend.variables.index(v) for v in order]
    corr = backend.corr[np.ix_(idx, idx)]
    try:
        kappa = np.linalg.inv(corr)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("the correlation matrix is singular, no concentration matrix")
    ug = complete_graph(order)
    for (i, u), (j, v) in combinations(enumerate(order), 2):
        rho = -kappa[i, j] / np.sqrt(abs(kappa[i, i] * kappa[j, j]))
        _, p_value = fisher_z(float(np.clip(rho, -1.0, 1.0)), backend.n, p - 2)
        rest = [w for w in order if w not in (u, v)]
        independent = p_value > backend.alpha
        src.prime(u, v, rest, independent, p_value)
        if independent:
            ug.remove_edge(u, v)
    return ug


def build_uig(src, method, order=None):
    """Undirected independence graph over ``order`` (default: the source's variables)."""
    order = tuple(order) if order is not None else tuple(src.variables)
    with phase(f"UIG construction ({method})"):
        if method.kind == "gaussian":
            return _gaussian_uig(src, order)
        if method.kind == "oracle":
            if not isinstance(src.backend, OracleTest):
                raise PreconditionError("the oracle UIG method needs an oracle source")
            aug = augment(src.backend.graph)
            ug = nx.Graph()
            ug.add_nodes_from(order)
            ug.add_edges_from(aug.edges())
            return ug
        if method.kind == "file":
            g = read_graph(method.path)
            if set(g.vertices) != set(order):
                raise GraphMismatchError(f"UIG file {method.path} does not cover the dataset variables")
            ug = nx.Graph()
            ug.add_nodes_from(order)
            ug.add_edges_from(skeleton(g).edges())
            return ug
        if isinstance(src.backend, DiscreteTest) and len(order) > MAX_FULL_COND_DISCRETE:
            raise PreconditionError(
                f"full-cond UIG on discrete data is limited to {MAX_FULL_COND_DISCRETE} variables, "
                "give --uig file:PATH or --uig oracle"
            )
        ug = complete_graph(order)
        for u, v in combinations(order, 2):
            if src.query(u, v, [w for w in order if w not in (u, v)]):
                ug.remove_edge(u, v)
        return ug


def _mcs(ug, rank):
    """Maximum cardinality search from the first vertex, ties by canonical order."""
    numbered = []
    weight = {v: 0 for v in ug.nodes()}
    remaining = set(ug.nodes())
    while remaining:
        v = min(remaining, key=lambda w: (-weight[w], rank[w]))
        remaining.discard(v)
        numbered.append(v)
        for w in ug[v]:
            if w in remaining:
                weight[w] += 1
    return numbered


def _eliminate(ug, rank):
    """
    Elimination game along the reverse MCS order. Returns (filled graph, cliques in MCS order).
    """
    visit = _mcs(ug, rank)
    filled = ug.copy()
    position = {v: i for i, v in enumerate(visit)}
    candidates = []
    for v in reversed(visit):
        earlier = [w for w in filled[v] if position[w] < position[v]]
        filled.add_edges_from(combinations(earlier, 2))
        candidates.append(frozenset(earlier) | {v})
    candidates.reverse()
    cliques = []
    for c in candidates:
        if any(c < other for other in candidates) or c in cliques:
            continue
        cliques.append(c)
    return filled, cliques


def triangulate(ug, order=None):
    order = tuple(order) if order is not None else tuple(ug.nodes())
    with phase("triangulation"):
        filled, _ = _eliminate(ug, rank_of(order))
        added = filled.number_of_edges() - ug.number_of_edges()
        logger.info("Triangulation added %d fill edges", added)
    return filled


@dataclass
class SeparationTree:
    nodes: list
    edges: list = field(default_factory=list)

    def __post_init__(self):
        self.nodes = [frozenset(n) for n in self.nodes]
        self.edges = [(i, j, frozenset(sep)) for i, j, sep in self.edges]
        self._adjacent = {i: [] for i in range(len(self.nodes))}
        for i, j, sep in self.edges:
            self._adjacent[i].append((j, sep))
            self._adjacent[j].append((i, sep))

    def containing(self, v):
        return [i for i, n in enumerate(self.nodes) if v in n]

    def separator_between(self, u, v):
        """
        Separator of the first tree edge leaving the subtree of ``u`` on the way to the
        subtree of ``v``. None when the two share a node or are not both covered.
        """
        start, goal = set(self.containing(u)), set(self.containing(v))
        if not start or not goal or start & goal:
            return None
        seen = set(start)
        queue = deque((i, None) for i in sorted(start))
        while queue:
            i, first = queue.popleft()
            for j, sep in self._adjacent[i]:
                if j in seen:
                    continue
                seen.add(j)
                via = first if first is not None else sep
                if j in goal:
                    return via
                queue.append((j, via))
        return None

    def sides(self, k):
        """Vertex sets on both sides of tree edge ``k``."""
        i, j, _ = self.edges[k]
        side = {i}
        queue = deque([i])
        while queue:
            x = queue.popleft()
            for y, _ in self._adjacent[x]:
                if y not in side and {x, y} != {i, j}:
                    side.add(y)
                    queue.append(y)
        left = set().union(*(self.nodes[x] for x in side))
        right = set().union(*(self.nodes[x] for x in range(len(self.nodes)) if x not in side))
        return frozenset(left), frozenset(right)

    def to_json(self):
        return {
            "nodes": [sorted(n) for n in self.nodes],
            "edges": [{"i": i, "j": j, "sep": sorted(sep)} for i, j, sep in self.edges],
        }

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as e:
                raise InputFormatError(f"Invalid separation tree: {e}")
        try:
            nodes = [frozenset(n) for n in data["nodes"]]
            edges = [(int(e["i"]), int(e["j"]), frozenset(e["sep"])) for e in data["edges"]]
        except (KeyError, TypeError, ValueError) as e:
            raise InputFormatError(f"Invalid separation tree: missing or malformed field {e}")
        for i, j, sep in edges:
            if not (0 <= i < len(nodes) and 0 <= j < len(nodes)):
                raise InputFormatError(f"Invalid separation tree: edge ({i}, {j}) names a missing node")
            if sep != nodes[i] & nodes[j]:
                raise InputFormatError(f"Invalid separation tree: edge ({i}, {j}) separator is not the intersection")
        tree = nx.Graph()
        tree.add_nodes_from(range(len(nodes)))
        tree.add_edges_from((i, j) for i, j, _ in edges)
        if nodes and not nx.is_tree(tree):
            raise InputFormatError("Invalid separation tree: edges do not form a tree")
        return cls(nodes, edges)

    def write_json(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f)
            f.write("\n")
        logger.info("##### Saved separation tree to: %s", path)


def junction_tree(chordal, order=None):
    """
    Maximal cliques of a chordal graph joined by a maximum-weight spanning tree on
    separator sizes (Kruskal, ties by smaller node indices).
    """
    if chordal.number_of_nodes() and not nx.is_chordal(chordal):
        raise NotChordalError("junction_tree needs a chordal graph, triangulate it first")
    order = tuple(order) if order is not None else tuple(chordal.nodes())
    _, cliques = _eliminate(chordal, rank_of(order))
    weighted = sorted(
        ((len(cliques[i] & cliques[j]), i, j) for i, j in combinations(range(len(cliques)), 2)),
        key=lambda e: (-e[0], e[1], e[2]),
    )
    forest = nx.utils.UnionFind(range(len(cliques)))
    edges = []
    for _, i, j in weighted:
        if forest[i] != forest[j]:
            forest.union(i, j)
            edges.append((i, j, cliques[i] & cliques[j]))
    return SeparationTree(cliques, edges)


def check_separation_tree(tree, g):
    """
    True when every tree-edge separator p-separates the vertices on its two sides in ``g``.
    """
    for k, (i, j, sep) in enumerate(tree.edges):
        left, right = tree.sides(k)
        X, Y = left - sep, right - sep
        if not X or not Y:
            continue
        if not p_separated_aug(g, SeparationQuery.of(X, Y, sep)):
            logger.warning("Tree edge (%d, %d) with separator {%s} does not separate", i, j, ",".join(sorted(sep)))
            return False
    return True


@dataclass
class LCDResult:
    graph: object
    tree: SeparationTree
    uig: object
    chordal: object
    local: list
    merged: object
    prune: object
    sepsets: SepSetMap
    conflicts: list
    query_count: int
    elapsed: float


def merge_local(order, tree, local):
    """
    Keep an edge only when every local skeleton holding both endpoints kept it. Pairs
    that share no tree node get no edge and the tree separator between them.
    """
    merged = nx.Graph()
    merged.add_nodes_from(order)
    sepsets = SepSetMap()
    for u, v in combinations(order, 2):
        holders = [r for node, r in zip(tree.nodes, local) if u in node and v in node]
        if not holders:
            sep = tree.separator_between(u, v)
            if sep is not None:
                sepsets.record(u, v, sep)
            continue
        removed = [r.sepsets.get(u, v) for r in holders if not r.graph.has_edge(u, v)]
        if removed:
            sepsets.record(u, v, removed[0])
        else:
            merged.add_edge(u, v)
    return merged, sepsets


def global_prune(src, cfg, merged, order):
    """Original PC-like loop started from the merged local skeletons."""
    with phase("global prune"):
        return pc_skeleton(src, cfg, initial=merged, order=order)


def lcd_amp(src, cfg, uig=None):
    started = time.perf_counter()
    order = cfg.order_for(src.variables)
    rank = rank_of(order)
    uig = uig or UIGMethod.default_for(src)
    ug = build_uig(src, uig, order)
    chordal = triangulate(ug, order)
    tree = junction_tree(chordal, order)
    logger.info("Separation tree with %d nodes", len(tree.nodes))

    inner = replace(cfg, threads=1)

    def learn_node(node):
        return stable_skeleton(src, inner, order=sorted(node, key=rank.__getitem__))

    with phase("local skeletons"):
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                local = list(pool.map(learn_node, tree.nodes))
        else:
            local = [learn_node(node) for node in tree.nodes]

    merged, sepsets = merge_local(order, tree, local)
    prune = global_prune(src, cfg, merged, order)
    for key, S in prune.sepsets.items():
        u, v = sorted(key)
        sepsets.record(u, v, S)
    oriented = orient(prune.graph, sepsets, None, order)
    return LCDResult(oriented.graph, tree, ug, chordal, local, merged, prune, sepsets, oriented.conflicts,
                     src.query_count, time.perf_counter() - started)
