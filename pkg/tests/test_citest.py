import threading
import time
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations

import numpy as np
import pandas as pd
import pytest

from ampcg.citest import (CONTINUOUS, DISCRETE, CIResult, CISource, Dataset, SepSetMap, ci_query, fisher_z,
                          gsquare, partial_correlation)
from ampcg.exceptions import DataFormatError, InsufficientSampleError, InvalidQueryError, SingularMatrixError
from ampcg.synth import GenConfig, random_amp_cg


def test_oracle_answers_by_p_separation(biflag):
    src = CISource.oracle(biflag)
    assert ci_query(src, "X", "Y", {"A"})
    assert not src.query("X", "Y", {"A", "B"})
    assert src.result("X", "Y", {"A"}).p_value == 1.0


def test_cache_is_symmetric(biflag):
    """Swapping u and v hits the cached decision."""
    src = CISource.oracle(biflag)
    src.query("X", "Y", {"A"})
    src.query("Y", "X", ["A"])
    assert src.query_count == 1
    src.query("X", "Y")
    assert src.query_count == 2


def test_overrides_replace_single_decisions(noisy_source):
    assert not noisy_source.query("c", "d")
    assert noisy_source.query("d", "c", {"b"})
    assert noisy_source.query("c", "d", {"e"})
    assert noisy_source.query("b", "c")


def test_table_source(table_source):
    assert table_source.query("c", "b", {"a"})
    assert not table_source.query("b", "c")
    assert table_source.variables == ("a", "b", "c", "d", "e")


def test_invalid_queries(biflag):
    src = CISource.oracle(biflag)
    with pytest.raises(InvalidQueryError):
        src.query("X", "X")
    with pytest.raises(InvalidQueryError):
        src.query("X", "Y", {"Y"})


def test_primed_decisions_count_once(biflag):
    src = CISource.oracle(biflag)
    src.prime("A", "Y", {"B", "X"}, False, 0.003)
    src.prime("Y", "A", {"X", "B"}, True)
    assert src.query_count == 1
    result = src.result("A", "Y", {"X", "B"})
    assert not result.independent and result.p_value == 0.003
    assert src.query_count == 1


def test_concurrent_queries_count_exactly():
    g = random_amp_cg(GenConfig(8, 2, 5))
    src = CISource.oracle(g)
    keys = [(u, v, S) for u, v in combinations(g.vertices, 2)
            for S in ((), tuple(w for w in g.vertices[:2] if w not in (u, v)))]
    distinct = {CISource.key(u, v, S) for u, v, S in keys}
    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(lambda k: src.query(*k), keys * 4))
    assert src.query_count == len(distinct)


class _SlowBackend:
    variables = ("a", "b", "c")

    def __init__(self, fail=False):
        self.calls = 0
        self.fail = fail
        self.lock = threading.Lock()

    def test(self, u, v, S):
        with self.lock:
            self.calls += 1
        time.sleep(0.05)
        if self.fail:
            raise SingularMatrixError("singular")
        return CIResult(True, 0.5)


def test_concurrent_misses_run_the_test_once():
    backend = _SlowBackend()
    src = CISource(backend)
    with ThreadPoolExecutor(max_workers=8) as pool:
        answers = list(pool.map(lambda _: src.result("a", "b", {"c"}), range(8)))
    assert backend.calls == 1
    assert src.query_count == 1
    assert all(a is answers[0] for a in answers)


def test_failed_test_is_not_cached():
    backend = _SlowBackend(fail=True)
    src = CISource(backend)
    with ThreadPoolExecutor(max_workers=4) as pool:
        futures = [pool.submit(src.query, "a", "b") for _ in range(4)]
    for future in futures:
        with pytest.raises(SingularMatrixError):
            future.result()
    assert src.query_count == 0
    backend.fail = False
    assert src.query("a", "b")
    assert src.query_count == 1


def test_partial_correlation():
    corr = np.array([[1.0, 0.8, 0.64], [0.8, 1.0, 0.8], [0.64, 0.8, 1.0]])
    assert partial_correlation(corr, 0, 2) == pytest.approx(0.64)
    assert partial_correlation(corr, 0, 2, [1]) == pytest.approx(0.0, abs=1e-12)
    assert partial_correlation(np.eye(3), 0, 1, [2]) == 0.0


def test_fisher_z():
    statistic, p_value = fisher_z(0.0, 100, 0)
    assert statistic == 0.0 and p_value == 1.0
    statistic, p_value = fisher_z(0.3, 103, 0)
    assert statistic == pytest.approx(3.0952, abs=1e-4)
    assert p_value == pytest.approx(0.00197, abs=5e-5)
    _, p_value = fisher_z(1.0, 100, 2)
    assert np.isfinite(p_value) and p_value < 1e-10
    with pytest.raises(InsufficientSampleError):
        fisher_z(0.5, 4, 1)


def test_gaussian_source_on_sampled_data():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(2000)
    y = x + 0.5 * rng.standard_normal(2000)
    z = rng.standard_normal(2000)
    w = y + 0.5 * rng.standard_normal(2000)
    data = Dataset(["x", "y", "z", "w"], CONTINUOUS, np.column_stack([x, y, z, w]))
    src = CISource.from_dataset(data, 0.01)
    assert not src.query("x", "y")
    assert not src.query("x", "w")
    assert src.result("x", "z").p_value > 1e-4
    assert src.result("x", "w", {"y"}).p_value > 1e-4


def _coins(n, seed):
    return np.random.default_rng(seed).integers(0, 2, size=n)


def test_gsquare_detects_duplicated_column():
    x = _coins(1000, 1)
    data = Dataset(["x", "y"], DISCRETE, np.column_stack([x, x]))
    statistic, dof, p_value = gsquare(data, "x", "y")
    assert dof == 1
    assert statistic == pytest.approx(2 * 1000 * np.log(2), rel=0.01)
    assert p_value < 1e-10
    assert not CISource.discrete(data, 0.05).query("x", "y")


def test_gsquare_degrees_of_freedom_over_strata():
    rng = np.random.default_rng(2)
    values = np.column_stack([_coins(500, 3), _coins(500, 4), rng.integers(0, 3, size=500)])
    data = Dataset(["u", "v", "s"], DISCRETE, values)
    statistic, dof, p_value = gsquare(data, "u", "v", ["s"])
    assert dof == 3
    assert statistic >= 0 and 0 <= p_value <= 1


def test_gsquare_needs_discrete_data():
    data = Dataset(["u", "v"], CONTINUOUS, np.zeros((3, 2)))
    with pytest.raises(InvalidQueryError):
        gsquare(data, "u", "v")


def test_dataset_kind_detection():
    discrete = Dataset.from_frame(pd.DataFrame({"a": [3, 7, 3, 7], "b": [0, 1, 2, 1]}))
    assert discrete.kind == DISCRETE
    assert discrete.cardinalities == (2, 3)
    assert discrete.values[:, 0].tolist() == [0, 1, 0, 1]
    continuous = Dataset.from_frame(pd.DataFrame({"a": [0.5, 1.5, 2.0], "b": [1.0, 2.0, 3.0]}))
    assert continuous.kind == CONTINUOUS


def test_dataset_rejects_bad_input():
    with pytest.raises(DataFormatError):
        Dataset.from_frame(pd.DataFrame({"a": [1.0, None], "b": [1.0, 2.0]}))
    with pytest.raises(DataFormatError):
        Dataset.from_frame(pd.DataFrame({"a": [1, 1, 1], "b": [0, 1, 0]}), DISCRETE)
    with pytest.raises(DataFormatError):
        Dataset.from_frame(pd.DataFrame({"a": ["x", "y"]}))
    with pytest.raises(InsufficientSampleError):
        Dataset(["a", "b"], CONTINUOUS, np.ones((1, 2))).correlation()


def test_csv_files(tmp_path):
    data = Dataset(["p", "q"], CONTINUOUS, np.array([[0.25, 1.0], [1.5, -2.0], [3.0, 0.125]]))
    path = tmp_path / "data.csv"
    data.write_csv(path)
    back = Dataset.read_csv(path, CONTINUOUS)
    assert back.variable_names == ("p", "q")
    np.testing.assert_allclose(back.values, data.values)
    with pytest.raises(DataFormatError):
        Dataset.read_csv(tmp_path / "missing.csv")


def test_sepset_map_is_symmetric():
    sepsets = SepSetMap()
    sepsets.record("b", "a", {"c"})
    assert sepsets.get("a", "b") == {"c"}
    assert ("a", "b") in sepsets and sepsets["b", "a"] == {"c"}
    assert sepsets.get("a", "c") is None
    with pytest.raises(InvalidQueryError):
        sepsets.record("a", "b", {"a"})
