"""
Random AMP chain graphs and Gaussian models that are Markov to them.

Every random draw goes through ``rng_for(seed, *key)``: a PCG64 generator on a
SeedSequence whose spawn key names the purpose, so each stream is independent of the
order in which other streams are consumed.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .citest import CONTINUOUS, Dataset
from .exceptions import ConfigError
from .graph import ChainGraph, component_order

logger = logging.getLogger(__name__)

GRAPH_STREAM = 0
PARAM_STREAM = 1
SAMPLE_STREAM = 2


def rng_for(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=key)))


def derive_seed(seed, *key):
    """A 32-bit seed for a sub-task, e.g. one benchmark repetition."""
    return int(np.random.SeedSequence(entropy=seed, spawn_key=key).generate_state(1)[0])


@dataclass(frozen=True)
class GenConfig:
    p: int
    N: float
    seed: int = 0

    def __post_init__(self):
        if self.p < 2:
            raise ConfigError(f"p must be at least 2, got {self.p}")
        if not 0 < self.N <= self.p - 1:
            raise ConfigError(f"N must lie in (0, p - 1], got {self.N}")


def random_amp_cg(cfg):
    """
    Lower-triangle Bernoulli(N / (p - 1)) adjacencies over V1..Vp, cut into k consecutive
    blocks with k uniform in 1..p. Edges inside a block are undirected, edges between
    blocks point from the earlier block to the later one.
    """
    rng = rng_for(cfg.seed, GRAPH_STREAM)
    p = cfg.p
    s = cfg.N / (p - 1)
    lower = np.tril(rng.random((p, p)) < s, k=-1)
    k = int(rng.integers(1, p + 1))
    block = [min(k - 1, math.floor(i * k / (p - 1))) for i in range(p)]
    names = [f"V{i + 1}" for i in range(p)]
    directed = []
    undirected = []
    for i, j in zip(*np.nonzero(lower)):
        if block[i] == block[j]:
            undirected.append((names[j], names[i]))
        else:
            directed.append((names[j], names[i]))
    g = ChainGraph(names, directed, undirected)
    logger.debug("Generated %r with k = %d", g, k)
    return g


@dataclass
class GaussianCGModel:
    """
    Block-recursive Gaussian: x_tau = B_tau x_pa(tau) + e_tau with e_tau ~ N(0, Sigma_tau)
    for every chain component tau, in ``components`` order.
    """

    graph: ChainGraph
    components: list
    parents: list
    B: list
    omega: list
    sigma: list


def parametrize(g, seed=0):
    rng = rng_for(seed, PARAM_STREAM)
    components, parents, Bs, omegas, sigmas = [], [], [], [], []
    for comp in component_order(g):
        tau = g.sorted(comp)
        pa = g.sorted({w for v in tau for w in g.parents(v)} - set(tau))
        B = np.zeros((len(tau), len(pa)))
        for r, v in enumerate(tau):
            for c, w in enumerate(pa):
                if w in g.parents(v):
                    B[r, c] = rng.choice((-1.0, 1.0)) * rng.uniform(0.5, 1.5)
        omega = np.eye(len(tau))
        index = {v: i for i, v in enumerate(tau)}
        for a, b in sorted(tuple(g.sorted(e)) for e in g.undirected_edges if e <= set(tau)):
            value = rng.choice((-1.0, 1.0)) * rng.uniform(0.1, 0.4)
            omega[index[a], index[b]] = omega[index[b], index[a]] = value
        off = np.abs(omega - np.diag(np.diag(omega))).sum(axis=1).max() if len(tau) > 1 else 0.0
        if off > 0:
            scale = min(1.0, 0.9 / off)
            omega = np.eye(len(tau)) + scale * (omega - np.eye(len(tau)))
        components.append(tuple(tau))
        parents.append(tuple(pa))
        Bs.append(B)
        omegas.append(omega)
        sigmas.append(np.linalg.inv(omega))
    return GaussianCGModel(g, components, parents, Bs, omegas, sigmas)


def sample(model, n, seed=0):
    if n < 1:
        raise ConfigError(f"n must be at least 1, got {n}")
    rng = rng_for(seed, SAMPLE_STREAM)
    names = model.graph.vertices
    column = {v: i for i, v in enumerate(names)}
    X = np.zeros((n, len(names)))
    for tau, pa, B, sigma in zip(model.components, model.parents, model.B, model.sigma):
        L = linalg.cholesky(sigma, lower=True)
        noise = rng.standard_normal((n, len(tau))) @ L.T
        cols = [column[v] for v in tau]
        if pa:
            noise += X[:, [column[w] for w in pa]] @ B.T
        X[:, cols] = noise
    return Dataset(names, CONTINUOUS, X)


def implied_covariance(model):
    """Joint covariance in ``model.graph.vertices`` order, composed component by component."""
    names = model.graph.vertices
    column = {v: i for i, v in enumerate(names)}
    p = len(names)
    cov = np.zeros((p, p))
    done = []
    for tau, pa, B, sigma in zip(model.components, model.parents, model.B, model.sigma):
        t = [column[v] for v in tau]
        if pa:
            P = [column[w] for w in pa]
            cross = B @ cov[np.ix_(P, done)] if done else np.zeros((len(t), 0))
            cov[np.ix_(t, done)] = cross
            cov[np.ix_(done, t)] = cross.T
            cov[np.ix_(t, t)] = B @ cov[np.ix_(P, P)] @ B.T + sigma
        else:
            cov[np.ix_(t, t)] = sigma
        done.extend(t)
    return cov


def implied_concentration(model):
    return np.linalg.inv(implied_covariance(model))
