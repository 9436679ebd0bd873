import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ampcg.exceptions import ConfigError
from ampcg.graph import augment, chain_components, is_amp_cg, parse_graph
from ampcg.synth import (GenConfig, derive_seed, implied_concentration, implied_covariance, parametrize,
                         random_amp_cg, rng_for, sample)


def test_generator_is_deterministic():
    assert random_amp_cg(GenConfig(12, 2, 7)) == random_amp_cg(GenConfig(12, 2, 7))
    assert random_amp_cg(GenConfig(12, 2, 7)) != random_amp_cg(GenConfig(12, 2, 8))
    assert random_amp_cg(GenConfig(4, 1, 0)).vertices == ("V1", "V2", "V3", "V4")


def test_generator_config_validation():
    with pytest.raises(ConfigError):
        GenConfig(1, 1)
    with pytest.raises(ConfigError):
        GenConfig(5, 0)
    with pytest.raises(ConfigError):
        GenConfig(5, 5)


def test_streams_are_independent():
    a = rng_for(3, 0).random(4)
    b = rng_for(3, 1).random(4)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, rng_for(3, 0).random(4))
    assert derive_seed(3, 0, 1) == derive_seed(3, 0, 1) != derive_seed(3, 1, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 25), st.integers(0, 2**31 - 1))
def test_generated_graphs_are_amp(p, seed):
    g = random_amp_cg(GenConfig(p, min(2.0, p - 1), seed))
    assert is_amp_cg(g)
    assert len(g) == p


def test_mean_degree_matches_request():
    p, N, graphs = 20, 3, 200
    degrees = [2 * random_amp_cg(GenConfig(p, N, seed)).edge_count() / p for seed in range(graphs)]
    assert np.mean(degrees) == pytest.approx(N, abs=0.2)


def test_parametrization_follows_the_graph():
    g = parse_graph("a -> b\nb -- c\nc -- d\nd -> e\n")
    model = parametrize(g, 1)
    assert [set(c) for c in model.components] == [set(c) for c in chain_components(g)]
    for omega, sigma in zip(model.omega, model.sigma):
        assert np.all(np.linalg.eigvalsh(omega) > 0)
        np.testing.assert_allclose(omega @ sigma, np.eye(len(omega)), atol=1e-10)
    bcd = model.components.index(("b", "c", "d"))
    omega = model.omega[bcd]
    assert omega[0, 2] == 0.0 and omega[0, 1] != 0.0


def test_concentration_vanishes_off_the_augmented_graph():
    for seed in range(10):
        g = random_amp_cg(GenConfig(8, 2, seed))
        K = implied_concentration(parametrize(g, seed))
        aug = augment(g)
        for i, u in enumerate(g.vertices):
            for j, v in enumerate(g.vertices):
                if i < j and not aug.has_edge(u, v):
                    assert abs(K[i, j]) < 1e-8


def test_samples_are_reproducible():
    model = parametrize(random_amp_cg(GenConfig(6, 2, 2)), 2)
    first, second = sample(model, 50, 9), sample(model, 50, 9)
    np.testing.assert_array_equal(first.values, second.values)
    assert sample(model, 1, 9).values.shape == (1, 6)
    with pytest.raises(ConfigError):
        sample(model, 0)


def test_edgeless_graph_has_identity_covariance():
    g = parse_graph("node a\nnode b\nnode c\n")
    np.testing.assert_allclose(implied_covariance(parametrize(g)), np.eye(3))


def test_sample_covariance_approaches_model():
    model = parametrize(random_amp_cg(GenConfig(5, 2, 11)), 11)
    data = sample(model, 200_000, 11)
    empirical = np.cov(data.values, rowvar=False)
    expected = implied_covariance(model)
    scale = np.sqrt(np.outer(np.diag(expected), np.diag(expected)))
    assert np.max(np.abs(empirical - expected) / scale) < 0.02
