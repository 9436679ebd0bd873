"""
Conditional-independence decision sources.

A ``CISource`` wraps one backend (graph oracle, explicit table, Gaussian Fisher-z or
discrete G²) and adds a thread-safe decision cache keyed on the unordered pair and the
conditioning set, plus an exact count of backend evaluations.
"""
import logging
import math
import threading
from concurrent.futures import Future
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.stats import chi2, norm

from .exceptions import (DataFormatError, DegenerateTestError, InsufficientSampleError,
                         InvalidQueryError, SingularMatrixError)
from .separation import SeparationQuery, p_separated_aug
from .utils import pair_key

logger = logging.getLogger(__name__)

CONTINUOUS = "continuous"
DISCRETE = "discrete"
KINDS = (CONTINUOUS, DISCRETE)

RHO_CLAMP = 1 - 1e-7
RIDGE = 1e-10
MAX_DISCRETE_LEVELS = 10


@dataclass
class Dataset:
    """
    n x p sample. Discrete columns hold category indices 0..k-1 with ``cardinalities[j] = k``.
    """

    variable_names: tuple
    kind: str
    values: np.ndarray
    cardinalities: Optional[tuple] = None

    def __post_init__(self):
        self.variable_names = tuple(self.variable_names)
        if self.kind not in KINDS:
            raise DataFormatError(f"unknown kind '{self.kind}', expected one of {', '.join(KINDS)}")
        if len(set(self.variable_names)) != len(self.variable_names):
            raise DataFormatError("duplicate variable names")
        if self.values.ndim != 2 or self.values.shape[1] != len(self.variable_names):
            raise DataFormatError(f"expected {len(self.variable_names)} columns, got shape {self.values.shape}")
        if self.values.shape[0] < 1:
            raise DataFormatError("at least one row is required")
        if self.kind == DISCRETE:
            if self.cardinalities is None:
                self.cardinalities = tuple(int(c) + 1 for c in self.values.max(axis=0))
            for name, k in zip(self.variable_names, self.cardinalities):
                if k < 2:
                    raise DataFormatError(f"discrete variable {name} has fewer than 2 categories")
        self._index = {v: i for i, v in enumerate(self.variable_names)}

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def column(self, name):
        return self._index[name]

    def correlation(self):
        if self.n < 2:
            raise InsufficientSampleError("a correlation matrix needs at least 2 rows")
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.corrcoef(self.values, rowvar=False)
        return np.nan_to_num(np.atleast_2d(corr), nan=0.0)

    @classmethod
    def from_frame(cls, frame, kind=None):
        if frame.shape[0] < 1:
            raise DataFormatError("at least one row is required")
        if frame.isnull().values.any():
            raise DataFormatError("missing values are not supported")
        try:
            numeric = frame.apply(pd.to_numeric)
        except (ValueError, TypeError) as e:
            raise DataFormatError(f"non-numeric cell: {e}")
        if kind is None:
            kind = DISCRETE if _looks_discrete(numeric) else CONTINUOUS
        names = [str(c) for c in frame.columns]
        if kind == CONTINUOUS:
            return cls(names, CONTINUOUS, numeric.to_numpy(dtype=float))
        raw = numeric.to_numpy()
        if not np.all(np.equal(np.mod(raw, 1), 0)) or (raw < 0).any():
            raise DataFormatError("discrete cells must be non-negative integers")
        codes = np.empty(raw.shape, dtype=np.int64)
        cards = []
        for j in range(raw.shape[1]):
            levels, inverse = np.unique(raw[:, j], return_inverse=True)
            codes[:, j] = inverse
            cards.append(len(levels))
        return cls(names, DISCRETE, codes, tuple(cards))

    @classmethod
    def read_csv(cls, path, kind=None):
        try:
            frame = pd.read_csv(path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise DataFormatError(f"cannot read {path}: {e}")
        return cls.from_frame(frame, kind)

    def to_frame(self):
        return pd.DataFrame(self.values, columns=list(self.variable_names))

    def write_csv(self, path):
        if self.kind == CONTINUOUS:
            self.to_frame().to_csv(path, index=False, float_format="%.10g")
        else:
            self.to_frame().to_csv(path, index=False)
        logger.info("##### Saved dataset to: %s", path)


def _looks_discrete(frame):
    values = frame.to_numpy(dtype=float)
    if not np.all(np.equal(np.mod(values, 1), 0)) or (values < 0).any():
        return False
    return all(frame[c].nunique() <= MAX_DISCRETE_LEVELS for c in frame.columns)


@dataclass(frozen=True)
class CIResult:
    independent: bool
    p_value: float
    statistic: Optional[float] = None
    dof: Optional[int] = None


def partial_correlation(corr, u, v, S=()):
    """
    rho(u, v | S) from a correlation matrix, with u, v and S given as column indices.
    """
    S = list(S)
    if not S:
        return float(corr[u, v])
    idx = [u, v] + S
    sub = corr[np.ix_(idx, idx)]
    if np.linalg.cond(sub) > 1 / (RIDGE * 100):
        logger.warning("Near-singular correlation submatrix for %s, adding ridge %g", idx, RIDGE)
        sub = sub + RIDGE * np.eye(len(idx))
    try:
        kappa = np.linalg.inv(sub)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(f"correlation submatrix over {idx} is singular")
    denom = math.sqrt(abs(kappa[0, 0] * kappa[1, 1]))
    if denom == 0 or not np.isfinite(denom):
        raise SingularMatrixError(f"correlation submatrix over {idx} is singular")
    return float(np.clip(-kappa[0, 1] / denom, -1.0, 1.0))


def fisher_z(rho, n, size):
    """Two-sided Fisher-z test of zero partial correlation. Returns (statistic, p_value)."""
    df = n - size - 3
    if df <= 0:
        raise InsufficientSampleError(f"n - |S| - 3 = {df}, the Fisher-z test needs a positive value")
    rho = max(-RHO_CLAMP, min(RHO_CLAMP, rho))
    statistic = math.sqrt(df) * abs(math.atanh(rho))
    return statistic, float(2 * norm.sf(statistic))


def gsquare(dataset, u, v, S=()):
    """
    G² likelihood-ratio statistic over the strata of S. Returns (statistic, dof, p_value).
    """
    if dataset.kind != DISCRETE:
        raise InvalidQueryError("the G² test needs a discrete dataset")
    iu, iv = dataset.column(u), dataset.column(v)
    iS = [dataset.column(s) for s in S]
    cards = dataset.cardinalities
    ku, kv = cards[iu], cards[iv]
    strata_dims = [cards[i] for i in iS]
    dof = (ku - 1) * (kv - 1) * int(np.prod(strata_dims, dtype=np.int64))
    if dof == 0:
        raise DegenerateTestError(f"G² test of {u} and {v} has zero degrees of freedom")
    data = dataset.values
    if iS:
        stratum = np.ravel_multi_index(tuple(data[:, i] for i in iS), strata_dims)
        _, stratum = np.unique(stratum, return_inverse=True)
    else:
        stratum = np.zeros(dataset.n, dtype=np.int64)
    counts = np.zeros((int(stratum.max()) + 1, ku, kv))
    np.add.at(counts, (stratum, data[:, iu], data[:, iv]), 1)
    totals = counts.sum(axis=(1, 2), keepdims=True)
    expected = counts.sum(axis=2, keepdims=True) * counts.sum(axis=1, keepdims=True) / totals
    observed = counts > 0
    statistic = 2.0 * float(np.sum(counts[observed] * np.log(counts[observed] / expected[observed])))
    statistic = max(statistic, 0.0)
    return statistic, dof, float(chi2.sf(statistic, dof))


class OracleTest:
    """Decisions read off the graph with p_separated_aug; ``overrides`` force single answers."""

    def __init__(self, graph, overrides=None):
        self.graph = graph
        self.variables = graph.vertices
        self.overrides = {}
        for (u, v, S), decision in (overrides or {}).items():
            self.overrides[(pair_key(u, v), frozenset(S))] = bool(decision)

    def test(self, u, v, S):
        key = (pair_key(u, v), frozenset(S))
        if key in self.overrides:
            independent = self.overrides[key]
        else:
            independent = p_separated_aug(self.graph, SeparationQuery.of(u, v, S))
        return CIResult(independent, 1.0 if independent else 0.0)


class TableTest:
    """Explicit independence statements; anything not listed is dependent."""

    def __init__(self, variables, statements):
        self.variables = tuple(variables)
        self.statements = {(pair_key(u, v), frozenset(S)) for u, v, S in statements}

    def test(self, u, v, S):
        independent = (pair_key(u, v), frozenset(S)) in self.statements
        return CIResult(independent, 1.0 if independent else 0.0)


class GaussianTest:
    def __init__(self, variables, corr, n, alpha):
        self.variables = tuple(variables)
        self.corr = corr
        self.n = n
        self.alpha = alpha
        self._index = {v: i for i, v in enumerate(self.variables)}

    @classmethod
    def from_dataset(cls, dataset, alpha):
        return cls(dataset.variable_names, dataset.correlation(), dataset.n, alpha)

    def test(self, u, v, S):
        idx = self._index
        rho = partial_correlation(self.corr, idx[u], idx[v], [idx[s] for s in S])
        statistic, p_value = fisher_z(rho, self.n, len(S))
        return CIResult(p_value > self.alpha, p_value, statistic)


class DiscreteTest:
    def __init__(self, dataset, alpha):
        self.dataset = dataset
        self.variables = dataset.variable_names
        self.alpha = alpha

    def test(self, u, v, S):
        statistic, dof, p_value = gsquare(self.dataset, u, v, S)
        return CIResult(p_value > self.alpha, p_value, statistic, dof)


class CISource:
    def __init__(self, backend):
        self.backend = backend
        self.cache = {}
        self.query_count = 0
        self._lock = threading.Lock()
        self._pending = {}

    @classmethod
    def oracle(cls, graph, overrides=None):
        return cls(OracleTest(graph, overrides))

    @classmethod
    def table(cls, variables, statements):
        return cls(TableTest(variables, statements))

    @classmethod
    def gaussian(cls, dataset, alpha):
        return cls(GaussianTest.from_dataset(dataset, alpha))

    @classmethod
    def discrete(cls, dataset, alpha):
        return cls(DiscreteTest(dataset, alpha))

    @classmethod
    def from_dataset(cls, dataset, alpha):
        if dataset.kind == DISCRETE:
            return cls.discrete(dataset, alpha)
        return cls.gaussian(dataset, alpha)

    @property
    def variables(self):
        return self.backend.variables

    @property
    def kind(self):
        return type(self.backend).__name__

    @staticmethod
    def key(u, v, S):
        return (pair_key(u, v), frozenset(S))

    def _check(self, u, v, S):
        if u == v:
            raise InvalidQueryError(f"u and v must differ, got {u} twice")
        if u in S or v in S:
            raise InvalidQueryError(f"{u} and {v} must not belong to the conditioning set")

    def result(self, u, v, S=()):
        S = frozenset(S)
        self._check(u, v, S)
        key = self.key(u, v, S)
        with self._lock:
            cached = self.cache.get(key)
            if cached is not None:
                return cached
            pending = self._pending.get(key)
            owner = pending is None
            if owner:
                pending = self._pending[key] = Future()
        if not owner:
            return pending.result()
        # backends see a canonical argument order so swapped pairs give identical floats
        a, b = sorted((u, v))
        try:
            outcome = self.backend.test(a, b, sorted(S))
        except BaseException as e:
            with self._lock:
                del self._pending[key]
            pending.set_exception(e)
            raise
        with self._lock:
            if key not in self.cache:
                self.cache[key] = outcome
                self.query_count += 1
            outcome = self.cache[key]
            del self._pending[key]
        pending.set_result(outcome)
        return outcome

    def query(self, u, v, S=()):
        return self.result(u, v, S).independent

    def prime(self, u, v, S, independent, p_value=None):
        """Store a decision computed elsewhere (e.g. in bulk) as if it had been queried."""
        S = frozenset(S)
        self._check(u, v, S)
        if p_value is None:
            p_value = 1.0 if independent else 0.0
        with self._lock:
            key = self.key(u, v, S)
            if key not in self.cache:
                self.cache[key] = CIResult(bool(independent), p_value)
                self.query_count += 1


def ci_query(src, u, v, S=()):
    return src.query(u, v, S)


class SepSetMap:
    """Separating set recorded per unordered pair when its edge was removed."""

    def __init__(self):
        self._sets = {}

    def record(self, u, v, S):
        S = frozenset(S)
        if u in S or v in S:
            raise InvalidQueryError(f"separating set for {u} and {v} must exclude both")
        self._sets[pair_key(u, v)] = S

    def get(self, u, v, default=None):
        return self._sets.get(pair_key(u, v), default)

    def __getitem__(self, pair):
        return self._sets[pair_key(*pair)]

    def __contains__(self, pair):
        return pair_key(*pair) in self._sets

    def __len__(self):
        return len(self._sets)

    def items(self):
        return self._sets.items()

    def copy(self):
        other = SepSetMap()
        other._sets = dict(self._sets)
        return other

    def __eq__(self, other):
        return isinstance(other, SepSetMap) and self._sets == other._sets
