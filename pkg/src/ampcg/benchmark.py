"""
Seeded benchmark grids: generate a random AMP chain graph per cell and repetition,
parametrize and sample it, run every learner and score it against the pattern of the truth,
which is what a learner with perfect independence information returns.

Reports are JSON lines. ``run`` records hold one learner on one repetition, ``summary``
records the mean and standard deviation per cell and learner.
"""
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Optional

import numpy as np
import pandas as pd

from .citest import CISource
from .exceptions import AMPCGError, ConfigError
from .learning import ALGORITHMS, LearnConfig, UIGMethod, pattern, run_learner
from .metrics import metrics
from .synth import GenConfig, derive_seed, parametrize, random_amp_cg, sample

logger = logging.getLogger(__name__)

SCHEMA = 1
SOURCES = ("gaussian", "oracle")
LIST_KEYS = ("p", "N", "n", "alpha", "algos")
SCORES = ("tpr", "fpr", "tdr", "acc", "shd", "query_count")


@dataclass(frozen=True)
class BenchConfig:
    p: tuple = (10,)
    N: tuple = (2,)
    n: tuple = (1000,)
    alpha: tuple = (0.01,)
    algos: tuple = ("stable", "lcd")
    reps: int = 1
    seed: int = 0
    source: str = "gaussian"
    uig: Optional[str] = None
    max_sepset: Optional[int] = None

    def __post_init__(self):
        for name in ("p", "N", "n", "alpha", "algos"):
            value = getattr(self, name)
            if not isinstance(value, (list, tuple)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        unknown = [a for a in self.algos if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithms: {', '.join(unknown)}")
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {', '.join(SOURCES)}, got '{self.source}'")
        if self.reps < 0:
            raise ConfigError(f"reps must be non-negative, got {self.reps}")
        if self.uig is not None:
            UIGMethod.parse(self.uig)

    @classmethod
    def from_mapping(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_text(cls, text):
        stripped = text.strip()
        if stripped.startswith("{"):
            try:
                return cls.from_mapping(json.loads(stripped))
            except json.JSONDecodeError as e:
                raise ConfigError(f"malformed JSON: {e.msg}", line=e.lineno)
        data = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected key=value, got '{line}'", line=number)
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                data[key] = _convert(key, value)
            except ValueError:
                raise ConfigError(f"cannot read value '{value}' for {key}", line=number)
        return cls.from_mapping(data)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e.strerror}")
        return cls.from_text(text)

    def cells(self):
        return list(product(self.p, self.N, self.n, self.alpha))


def _convert(key, value):
    items = [v.strip() for v in value.split(",") if v.strip()]
    if key == "algos":
        return tuple(items)
    if key in ("p", "n"):
        return tuple(int(v) for v in items)
    if key in ("N", "alpha"):
        return tuple(float(v) for v in items)
    if key in ("reps", "seed", "max_sepset"):
        return int(value)
    return value


def _run_rep(cfg, cell_index, cell, rep, timings):
    p, N, n, alpha = cell
    seed = derive_seed(cfg.seed, cell_index, rep)
    base = {"schema": SCHEMA, "type": "run", "cell": cell_index, "p": p, "N": N, "n": n,
            "alpha": alpha, "rep": rep, "seed": seed, "shd_reference": "pattern"}
    truth = random_amp_cg(GenConfig(p, N, seed))
    reference = pattern(truth)
    data = None
    if cfg.source == "gaussian":
        data = sample(parametrize(truth, seed), n, seed)
    records = []
    for algo in cfg.algos:
        record = dict(base, algo=algo)
        try:
            src = CISource.oracle(truth) if data is None else CISource.gaussian(data, alpha)
            uig = UIGMethod.parse(cfg.uig) if cfg.uig else None
            learn_cfg = LearnConfig(alpha=alpha, max_sepset_size=cfg.max_sepset)
            started = time.perf_counter()
            result = run_learner(algo, src, learn_cfg, uig)
            elapsed_ms = int(round((time.perf_counter() - started) * 1000))
            report = metrics(result.graph, reference, src.query_count, elapsed_ms)
            record.update(report.to_dict(timings))
        except (AMPCGError, np.linalg.LinAlgError) as e:
            logger.warning("Cell %d rep %d algo %s failed: %s", cell_index, rep, algo, e)
            record["error"] = str(e)
        records.append(record)
    return records


def benchmark(cfg, threads=1, timings=False):
    """All ``run`` records in (cell, rep, algo) order, independent of ``threads``."""
    tasks = [(i, cell, rep) for i, cell in enumerate(cfg.cells()) for rep in range(cfg.reps)]
    logger.info("##### Start benchmark: %d cells, %d repetitions each", len(cfg.cells()), cfg.reps)

    def work(task):
        return _run_rep(cfg, task[0], task[1], task[2], timings)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, tasks))
    else:
        chunks = [work(task) for task in tasks]
    runs = [record for chunk in chunks for record in chunk]
    logger.info("##### Finished benchmark with %d runs", len(runs))
    return runs


def summarize(runs):
    """Mean and sample standard deviation per (cell, algo) as a DataFrame."""
    keys = ["cell", "p", "N", "n", "alpha", "algo"]
    ok = [r for r in runs if "error" not in r]
    if not ok:
        return pd.DataFrame(columns=keys + ["runs"])
    frame = pd.DataFrame(ok)
    grouped = frame.groupby(keys, sort=True)
    summary = grouped[list(SCORES)].agg(["mean", "std"])
    summary.columns = [f"{score}_{stat}" for score, stat in summary.columns]
    summary["runs"] = grouped.size()
    return summary.reset_index()


def summary_records(summary):
    records = []
    for row in summary.to_dict(orient="records"):
        clean = {k: (None if isinstance(v, float) and np.isnan(v) else _plain(v)) for k, v in row.items()}
        records.append(dict({"schema": SCHEMA, "type": "summary"}, **clean))
    return records


def _plain(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def write_jsonl(records, stream):
    for record in records:
        stream.write(json.dumps({k: _plain(v) for k, v in record.items()}, sort_keys=True) + "\n")


def write_csv(summary, path):
    summary.to_csv(path, index=False)
    logger.info("##### Saved summary CSV to: %s", path)
