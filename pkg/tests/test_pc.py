import random
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ampcg.citest import CISource
from ampcg.exceptions import ConfigError, InvalidQueryError
from ampcg.graph import edge_set, parse_graph, skeleton, triplex_equivalent
from ampcg.learning.orientation import AMBIGUOUS, NONTRIPLEX, TRIPLEX
from ampcg.learning.pc import (LearnConfig, Removal, Variant, label_triples, learn, learn_report,
                               pc_skeleton, stable_skeleton)
from ampcg.synth import GenConfig, random_amp_cg

from conftest import NOISY_OVERRIDES
from strategies import amp_graphs

ORDER_1 = ("d", "c", "b", "a", "e")
ORDER_2 = ("d", "e", "a", "c", "b")
ORDER_3 = ("c", "d", "e", "a", "b")


def edges(*pairs):
    return {frozenset(p) for p in pairs}


def test_original_skeleton_trace(table_source):
    result = pc_skeleton(table_source, LearnConfig(variable_order=ORDER_1))
    assert result.trace == [
        Removal(1, "d", "c", frozenset("e")),
        Removal(1, "d", "b", frozenset("e")),
        Removal(1, "c", "b", frozenset("a")),
        Removal(1, "c", "a", frozenset("d")),
        Removal(1, "b", "a", frozenset("d")),
        Removal(1, "a", "e", frozenset("d")),
    ]
    assert edge_set(result.graph) == edges("ad", "de", "be", "ce")
    assert result.removals_per_level() == {1: 6}


def test_original_skeleton_depends_on_order(table_source):
    result = pc_skeleton(table_source, LearnConfig(variable_order=ORDER_2))
    assert edge_set(result.graph) == edges("ad", "de", "be", "ce", "bc")
    assert ("b", "c") not in result.sepsets


def test_stable_skeleton_ignores_order(table_source):
    first = stable_skeleton(table_source, LearnConfig(variable_order=ORDER_1))
    second = stable_skeleton(table_source, LearnConfig(variable_order=ORDER_2))
    assert edge_set(first.graph) == edge_set(second.graph) == edges("ad", "de", "be", "ce")
    assert first.sepsets == second.sepsets


def test_learned_graphs_differ_only_for_original_variant(table_source):
    original = [learn(table_source, LearnConfig(variable_order=o)) for o in (ORDER_1, ORDER_2)]
    stable = [learn(table_source, LearnConfig(variable_order=o, variant=Variant.STABLE)) for o in (ORDER_1, ORDER_2)]
    assert original[0] != original[1]
    assert stable[0] == stable[1]


def test_separators_decide_orientation(noisy_source):
    """S_cd = {b} makes c -> e <- d a triplex, S_cd = {e} does not."""
    first = learn(noisy_source, LearnConfig(variable_order=ORDER_1))
    assert first == parse_graph("b -> a\nc -> a\nc -> e\nd -> e\nb -- d\n")
    third = learn(noisy_source, LearnConfig(variable_order=ORDER_3))
    assert third == parse_graph("b -> a\nc -> a\nc -- e\nd -- e\nb -- d\n")


def test_conservative_variant_flags_ambiguous_triple(noisy_source):
    report = learn_report(noisy_source, LearnConfig(variable_order=ORDER_1, variant=Variant.CONSERVATIVE))
    assert report.labels[("c", "e", "d")].label == AMBIGUOUS
    assert report.labels[("b", "a", "c")].label == TRIPLEX
    assert report.labels[("a", "b", "d")].label == NONTRIPLEX
    assert report.graph == parse_graph("b -> a\nc -> a\nc -- e\nd -- e\nb -- d\n")


def test_label_triples_on_collider_and_chain():
    for text, label in (("x -> y\nz -> y\n", TRIPLEX), ("x -> y\ny -> z\n", NONTRIPLEX)):
        g = parse_graph(text)
        src = CISource.oracle(g)
        skel = pc_skeleton(src, LearnConfig())
        labels = label_triples(src, skel.graph)
        assert labels[("x", "y", "z")].label == label


def _isolating_statements():
    statements = [("x", "z", {"y", "a"}), ("x", "z", {"b", "c"})]
    for lone in "abc":
        for other in "xyzabc":
            if other == lone:
                continue
            rest = [w for w in "xyzabc" if w not in (lone, other)]
            statements.extend((lone, other, set(pair)) for pair in combinations(rest, 2))
    return statements


@pytest.mark.parametrize("order", ["xzyabc", "xzbcya", "cbazyx"])
def test_separator_outside_final_skeleton_leaves_triple_ambiguous(order):
    src = CISource.table("xzyabc", _isolating_statements())
    report = learn_report(src, LearnConfig(variable_order=tuple(order), variant=Variant.STABLE_CONSERVATIVE))
    assert edge_set(report.skeleton.graph) == edges("xy", "yz")
    assert {k: v.label for k, v in report.labels.items()} == {("x", "y", "z"): AMBIGUOUS}
    assert report.graph == parse_graph("x -- y\ny -- z\nnode a\nnode b\nnode c\n")


@pytest.mark.parametrize("variant", list(Variant))
def test_every_variant_recovers_triplexes(six, variant):
    src = CISource.oracle(six)
    report = learn_report(src, LearnConfig(variant=variant))
    assert triplex_equivalent(report.graph, six)
    assert report.conflicts == []
    assert report.query_count == src.query_count > 0


def test_max_sepset_size_caps_levels(table_source):
    result = pc_skeleton(table_source, LearnConfig(max_sepset_size=0))
    assert result.graph.number_of_edges() == 10
    assert result.trace == []


def test_config_validation(table_source):
    with pytest.raises(ConfigError):
        LearnConfig(alpha=0)
    with pytest.raises(ConfigError):
        LearnConfig(alpha=1.5)
    with pytest.raises(ConfigError):
        LearnConfig(threads=0)
    with pytest.raises(ConfigError):
        LearnConfig(max_sepset_size=-1)
    with pytest.raises(ValueError):
        LearnConfig(variant="greedy")
    with pytest.raises(InvalidQueryError):
        pc_skeleton(table_source, LearnConfig(variable_order=("a", "b")))


def test_threads_do_not_change_stable_results():
    for seed in range(5):
        g = random_amp_cg(GenConfig(9, 2.5, seed))
        single, many = CISource.oracle(g), CISource.oracle(g)
        one = stable_skeleton(single, LearnConfig())
        four = stable_skeleton(many, LearnConfig(threads=4))
        assert one.trace == four.trace
        assert one.sepsets == four.sepsets
        assert single.query_count == many.query_count


@settings(max_examples=40, deadline=None)
@given(amp_graphs(max_p=7), st.randoms(use_true_random=False))
def test_stable_skeleton_is_order_invariant(g, rnd):
    order = list(g.vertices)
    rnd.shuffle(order)
    base = stable_skeleton(CISource.oracle(g), LearnConfig())
    shuffled = stable_skeleton(CISource.oracle(g), LearnConfig(variable_order=order))
    assert edge_set(base.graph) == edge_set(shuffled.graph)


def test_noisy_stable_results_are_order_invariant(dag5):
    rnd = random.Random(11)
    skeletons, labels = set(), []
    for _ in range(20):
        order = list(dag5.vertices)
        rnd.shuffle(order)
        src = CISource.oracle(dag5, NOISY_OVERRIDES)
        report = learn_report(src, LearnConfig(variable_order=order, variant=Variant.STABLE_CONSERVATIVE))
        skeletons.add(frozenset(edge_set(report.skeleton.graph)))
        labels.append({k: v.label for k, v in report.labels.items()})
    assert len(skeletons) == 1
    assert all(entry == labels[0] for entry in labels)


@settings(max_examples=40, deadline=None)
@given(amp_graphs(max_p=7))
def test_removed_edges_have_separating_sets(g):
    src = CISource.oracle(g)
    result = pc_skeleton(src, LearnConfig())
    assert edge_set(result.graph) == edge_set(skeleton(g))
    for u in g.vertices:
        for v in g.vertices:
            if u < v and not result.graph.has_edge(u, v):
                assert src.query(u, v, result.sepsets.get(u, v))


@settings(max_examples=30, deadline=None)
@given(amp_graphs(max_p=7), st.sampled_from(list(Variant)))
def test_oracle_learning_is_triplex_equivalent(g, variant):
    assert triplex_equivalent(learn(CISource.oracle(g), LearnConfig(variant=variant)), g)


@pytest.mark.slow
@pytest.mark.parametrize("p", [6, 8, 10])
def test_oracle_learning_on_many_graphs(p):
    for seed in range(30):
        g = random_amp_cg(GenConfig(p, 2, seed))
        for variant in Variant:
            assert triplex_equivalent(learn(CISource.oracle(g), LearnConfig(variant=variant)), g)
