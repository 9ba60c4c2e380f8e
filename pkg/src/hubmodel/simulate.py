"""Synthetic ground truth and grouped data from the Hub Model.

Ground truth follows the usual simulation recipe: hub weights are
normalized i.i.d. uniforms, the network structure is an erased
configuration-model graph with a power-law degree sequence, and each
structural edge gets a Beta(alpha, beta) strength.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .core import AdjacencyMatrix, GroupedData, HubAssignments, HubWeights
from .errors import DegenerateDegreeSequence, ValidationError

MAX_GRAPH_ATTEMPTS = 100


@dataclass(frozen=True)
class SimConfig:
    n: int
    T: int
    power: float = 2.0
    alpha: float = 1.0
    beta: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.T < 1:
            raise ValidationError("n and T must be positive")
        if self.power <= 1:
            raise ValidationError("power must exceed 1")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValidationError("Beta shape parameters must be positive")


def gen_hub_weights(n, rng):
    gen = rngmod.generator(rng)
    x = gen.random(n)
    # random() lies in [0, 1); an exact 0 would leave a node that can never lead
    while np.any(x == 0):
        x[x == 0] = gen.random(int(np.sum(x == 0)))
    return HubWeights(x / x.sum())


def power_law_degrees(n, power, gen):
    """Degrees drawn from P(k) proportional to k**-power on 1..n-1, with an even sum."""
    k = np.arange(1, n)
    p = k ** -float(power)
    deg = gen.choice(k, size=n, p=p / p.sum())
    if deg.sum() % 2:
        # n * (n - 1) is even, so some node is below the maximum degree
        candidates = np.flatnonzero(deg < n - 1)
        deg[gen.choice(candidates)] += 1
    return deg


def configuration_edges(deg, gen):
    """Uniform stub matching with self-loops and multi-edges erased."""
    stubs = np.repeat(np.arange(len(deg)), deg)
    gen.shuffle(stubs)
    pairs = stubs.reshape(-1, 2)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs.sort(axis=1)
    return np.unique(pairs, axis=0)


def gen_structure(n, power, rng):
    """Boolean adjacency of an erased configuration-model graph."""
    gen = rngmod.generator(rng)
    S = np.zeros((n, n), dtype=bool)
    if n < 2:
        return S
    for _ in range(MAX_GRAPH_ATTEMPTS):
        edges = configuration_edges(power_law_degrees(n, power, gen), gen)
        if len(edges):
            S[edges[:, 0], edges[:, 1]] = True
            return S | S.T
    raise DegenerateDegreeSequence(
        f"no edges survived erasure in {MAX_GRAPH_ATTEMPTS} degree sequences (n={n})"
    )


def gen_network(n, power, alpha, beta, rng):
    """Weighted adjacency: Beta(alpha, beta) strengths on a power-law structure."""
    gen = rngmod.generator(rng)
    S = gen_structure(n, power, gen)
    iu, ju = np.nonzero(np.triu(S, 1))
    A = np.eye(n)
    w = gen.beta(alpha, beta, size=len(iu))
    A[iu, ju] = w
    A[ju, iu] = w
    return AdjacencyMatrix(A)


def gen_groups(A, rho, T, rng, node_labels=None):
    """Sample T independent groups. Returns ``(GroupedData, HubAssignments)``."""
    gen = rngmod.generator(rng)
    A = np.asarray(A, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    n = len(rho)
    hubs = gen.choice(n, size=T, p=rho)
    U = gen.random((T, n))
    # A[i, i] == 1 > U, so the hub always joins its own group
    G = (U < A[hubs]).astype(np.uint8)
    G[np.arange(T), hubs] = 1
    data = GroupedData(G, node_labels)
    return data, HubAssignments(hubs, n, data)


@dataclass(frozen=True)
class Simulation:
    A: AdjacencyMatrix
    rho: HubWeights
    groups: GroupedData
    hubs: HubAssignments
    config: SimConfig

    @property
    def structure(self):
        return self.A.values > 0

    def truth_document(self):
        """JSON-ready description of the ground truth."""
        S = self.structure.astype(int)
        np.fill_diagonal(S, 0)
        return {
            "labels": list(self.groups.node_labels),
            "rho": self.rho.values.tolist(),
            "A": self.A.values.tolist(),
            "structure": S.tolist(),
            "config": {
                "n": self.config.n,
                "T": self.config.T,
                "power": self.config.power,
                "alpha": self.config.alpha,
                "beta": self.config.beta,
                "seed": self.config.seed,
            },
        }


def simulate(cfg: SimConfig) -> Simulation:
    """Draw (rho, A) and then T groups, each from its own substream of ``cfg.seed``."""
    s_rho, s_net, s_groups = rngmod.child_seeds(cfg.seed, 3)
    rho = gen_hub_weights(cfg.n, s_rho)
    A = gen_network(cfg.n, cfg.power, cfg.alpha, cfg.beta, s_net)
    G, S = gen_groups(A, rho, cfg.T, s_groups)
    return Simulation(A, rho, G, S, cfg)
