import logging
import time
from contextlib import contextmanager
from itertools import combinations

import networkx as nx

logger = logging.getLogger(__name__)


def complete_graph(order):
    ug = nx.Graph()
    ug.add_nodes_from(order)
    ug.add_edges_from(combinations(order, 2))
    return ug


def adjacency_union(H, u, exclude=()):
    """
    ad_H(u) together with ad_H(ad_H(u)), minus ``exclude``.
    """
    near = set(H[u])
    reach = set(near)
    for w in near:
        reach.update(H[w])
    return reach - set(exclude)


def adjacency_snapshot(H):
    """Frozen a_H(v) for every vertex, taken once per level by the stable phases."""
    return {v: frozenset(adjacency_union(H, v, (v,))) for v in H.nodes()}


def unshielded_triples(H, rank):
    """
    Triples (x, y, z) with x -- y -- z in H, x and z non-adjacent and x before z,
    listed by middle vertex and then endpoints in canonical order.
    """
    found = []
    for y in sorted(H.nodes(), key=rank.__getitem__):
        around = sorted(H[y], key=rank.__getitem__)
        for x, z in combinations(around, 2):
            if not H.has_edge(x, z):
                found.append((x, y, z))
    return found


@contextmanager
def phase(name):
    logger.info("##### Start %s", name)
    started = time.perf_counter()
    yield
    logger.info("##### Finished %s in %.3fs", name, time.perf_counter() - started)
