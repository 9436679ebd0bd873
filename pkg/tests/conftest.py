from pathlib import Path

import pytest

from ampcg.citest import CISource
from ampcg.graph import read_graph

DATA = Path(__file__).parent / "data"

# independence statements of the five-variable order-dependence example
ORDER_EXAMPLE = [
    ("b", "c", {"a"}),
    ("a", "e", {"d"}),
    ("a", "b", {"d"}),
    ("a", "c", {"d"}),
    ("b", "d", {"e"}),
    ("c", "d", {"e"}),
]

# decisions that differ from the DAG in dag5.cg, making c and d separable given b or e
NOISY_OVERRIDES = {
    ("c", "d", ()): False,
    ("c", "d", ("b",)): True,
    ("c", "d", ("e",)): True,
}


def load(name):
    return read_graph(str(DATA / name))


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def biflag():
    return load("biflag.cg")


@pytest.fixture
def six():
    return load("six.cg")


@pytest.fixture
def two_cliques():
    return load("two_cliques.cg")


@pytest.fixture
def dag5():
    return load("dag5.cg")


@pytest.fixture
def table_source():
    return CISource.table("abcde", ORDER_EXAMPLE)


@pytest.fixture
def noisy_source(dag5):
    return CISource.oracle(dag5, NOISY_OVERRIDES)
