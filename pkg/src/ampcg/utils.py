from itertools import combinations


def rank_of(vertices):
    """
    Map each vertex to its position in the canonical order
    """
    return {v: i for i, v in enumerate(vertices)}


def canonical(items, rank):
    return sorted(items, key=rank.__getitem__)


def subsets(candidates, size, rank):
    """
    Subsets of ``candidates`` with ``size`` elements, lexicographic in the canonical order.
    """
    ordered = canonical(candidates, rank)
    for combo in combinations(ordered, size):
        yield frozenset(combo)


def subsets_up_to(candidates, rank, max_size=None, min_size=0):
    """
    All subsets by increasing size, then lexicographic. ``max_size`` of None means no cap.
    """
    ordered = canonical(candidates, rank)
    top = len(ordered) if max_size is None else min(max_size, len(ordered))
    for size in range(min_size, top + 1):
        for combo in combinations(ordered, size):
            yield frozenset(combo)


def format_set(items):
    """
    Comma-separated sorted names, ``{}`` for the empty set.
    """
    items = sorted(items)
    if not items:
        return "{}"
    return ",".join(items)


def parse_list(text):
    """
    Parse ``"a,b, c"`` into ``["a", "b", "c"]``; ``None``, ``""`` and ``"{}"`` give an empty list.
    """
    if text is None:
        return []
    text = text.strip()
    if text in ("", "{}"):
        return []
    return [t.strip() for t in text.split(",") if t.strip()]


def pair_key(u, v):
    return frozenset((u, v))
