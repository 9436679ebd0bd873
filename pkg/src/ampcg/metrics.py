from dataclasses import asdict, dataclass
from itertools import combinations

from .exceptions import GraphMismatchError


@dataclass(frozen=True)
class MetricsReport:
    tpr: float
    fpr: float
    tdr: float
    acc: float
    shd: int
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    query_count: int = 0
    elapsed_ms: int = 0

    def to_dict(self, timings=False):
        data = asdict(self)
        if not timings:
            del data["elapsed_ms"]
        return data


def _ends(g, u, v):
    return g.mark_at(u, v), g.mark_at(v, u)


def metrics(learned, truth, query_count=0, elapsed_ms=0):
    """
    Skeleton rates of ``learned`` against ``truth`` plus the structural Hamming distance:
    one per pair for a missing or extra edge, one per shared edge with other end marks.
    """
    if set(learned.vertices) != set(truth.vertices):
        raise GraphMismatchError("Invalid comparison: learned and true graphs have different vertex sets")
    tp = fp = fn = tn = shd = 0
    for u, v in combinations(sorted(truth.vertices), 2):
        in_learned, in_truth = learned.is_adjacent(u, v), truth.is_adjacent(u, v)
        if in_learned and in_truth:
            tp += 1
            if _ends(learned, u, v) != _ends(truth, u, v):
                shd += 1
        elif in_learned:
            fp += 1
            shd += 1
        elif in_truth:
            fn += 1
            shd += 1
        else:
            tn += 1
    pos, neg = tp + fn, fp + tn
    return MetricsReport(
        tpr=tp / pos if pos else 1.0,
        fpr=fp / neg if neg else 0.0,
        tdr=tp / (tp + fp) if tp + fp else 1.0,
        acc=(tp + tn) / (pos + neg) if pos + neg else 1.0,
        shd=shd,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        query_count=query_count,
        elapsed_ms=elapsed_ms,
    )
