"""Comparison metrics, community scores, bootstrap errors and identifiability diagnostics."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import rng as rngmod
from .core import GroupedData, read_text
from .errors import (
    AllRestartsDegenerate,
    DimensionMismatch,
    EmptyCommunity,
    MalformedFile,
    SingularDenominator,
    ValidationError,
    ZeroAssociation,
)
from .hub_model import (
    EmConfig,
    best_restart,
    em_restarts,
    fit_em,
    group_probability,
    pair_group_frequencies,
)

PERCENTILES = (("max", 100), ("95%", 95), ("75%", 75), ("median", 50), ("25%", 25), ("5%", 5), ("min", 0))


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a, b


def _upper(M):
    return M[np.triu_indices(M.shape[0], 1)]


def structure_accuracy(A_true, A_est, threshold=1e-4):
    """Share of node pairs (i < j) whose edge/non-edge status agrees.

    A true edge is any positive entry; an estimated edge is one above
    ``threshold``.
    """
    At, Ae = _pair(A_true, A_est)
    n = At.shape[0]
    if n < 2:
        return 1.0
    return float(np.mean((_upper(At) > 0) == (_upper(Ae) > threshold)))


def mae_matrix(A_true, A_est):
    """Mean absolute error over the off-diagonal pairs i < j."""
    At, Ae = _pair(A_true, A_est)
    if At.shape[0] < 2:
        return 0.0
    return float(np.mean(np.abs(_upper(Ae) - _upper(At))))


def mae_vector(rho_true, rho_est):
    a, b = _pair(rho_true, rho_est)
    return float(np.mean(np.abs(b - a)))


@dataclass(frozen=True, eq=False)
class Partition:
    """Two-community split; ``in_first[i]`` is True for nodes in C1."""

    in_first: np.ndarray

    def __init__(self, in_first):
        mask = np.asarray(in_first, dtype=bool)
        if mask.all() or not mask.any():
            raise EmptyCommunity("both communities must be non-empty")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "in_first", mask)

    @classmethod
    def from_labels(cls, node_labels, community_of):
        """Build from a ``{node label: community name}`` mapping with two names."""
        missing = [lab for lab in node_labels if lab not in community_of]
        if missing:
            raise ValidationError(f"no community given for node {missing[0]!r}")
        names = sorted({community_of[lab] for lab in node_labels})
        if len(names) != 2:
            raise EmptyCommunity(f"expected exactly two communities, got {names}")
        return cls([community_of[lab] == names[0] for lab in node_labels])


def load_partition(path, node_labels):
    """Read a ``node,community`` CSV into a Partition over ``node_labels``."""
    rows = [r for r in csv.reader(io.StringIO(read_text(path))) if r]
    if not rows or [c.strip() for c in rows[0]] != ["node", "community"]:
        raise MalformedFile(f"{path}: header must be 'node,community'")
    mapping = {}
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != 2:
            raise MalformedFile(f"{path}: line {line} needs two fields")
        mapping[r[0].strip()] = r[1].strip()
    return Partition.from_labels(node_labels, mapping)


def normalized_cut(A, partition: Partition):
    """``cut / assoc(C1) + cut / assoc(C2)``.

    ``cut`` sums A over i in C1, j in C2; ``assoc(C)`` sums A over all
    ordered pairs in C, diagonal included.
    """
    A = np.asarray(A, dtype=np.float64)
    c1 = partition.in_first
    if A.shape != (len(c1), len(c1)):
        raise DimensionMismatch("partition does not match matrix")
    c2 = ~c1
    cut = A[np.ix_(c1, c2)].sum()
    assoc1 = A[np.ix_(c1, c1)].sum()
    assoc2 = A[np.ix_(c2, c2)].sum()
    if assoc1 == 0 or assoc2 == 0:
        raise ZeroAssociation("a community has no internal weight")
    return float(cut / assoc1 + cut / assoc2)


def cooccurrence_probability(A, rho, i, j):
    """Model probability that nodes i and j appear in the same group."""
    if i == j:
        raise ValidationError("co-occurrence probability needs two distinct nodes")
    A = np.asarray(A, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    return float(math.fsum(rho * A[:, i] * A[:, j]))


def asym_curve(p_x, p_y, p_xy, a_yx):
    """``A_xy`` implied by ``A_yx`` when A need not be symmetric.

    ``p_x``, ``p_y`` and ``p_xy`` are the probabilities of the groups {x},
    {y} and {x, y}. Every asymmetric parameter set producing those three
    probabilities lies on this curve.
    """
    num = p_xy - a_yx * (p_y + p_xy)
    den = (p_x + p_xy) - a_yx * (p_x + p_y + p_xy)
    if den == 0:
        raise SingularDenominator(f"curve undefined at A_yx={a_yx!r}")
    return num / den


def exact_pair_probabilities(A, rho, x, y):
    """Model probabilities of the groups {x}, {y} and {x, y}."""
    n = len(np.asarray(rho))
    out = []
    for members in ((x,), (y,), (x, y)):
        g = np.zeros(n)
        g[list(members)] = 1
        out.append(group_probability(g, A, rho))
    return tuple(out)


@dataclass(frozen=True)
class AsymmetricFit:
    A: np.ndarray
    rho: np.ndarray
    log_likelihood: float
    seed: int


def fit_asymmetric(G, cfg: EmConfig = EmConfig(), jobs=1):
    """EM without the symmetry constraint. Diagnostic only: A is not identifiable here."""
    runs = em_restarts(G, cfg, symmetric=False, jobs=jobs)
    k = best_restart(runs)
    rec, A, rho = runs[k]
    return AsymmetricFit(A, rho, rec.final_ll, cfg.seed)


@dataclass(frozen=True)
class CurveDiagnostic:
    x: int
    y: int
    p_x: float
    p_y: float
    p_xy: float
    fits: tuple

    def points(self):
        """Array of (A_xy, A_yx) pairs, one per fit."""
        return np.array([(f.A[self.x, self.y], f.A[self.y, self.x]) for f in self.fits])

    def vertical_distances(self, p=None):
        """``|A_xy - curve(A_yx)|`` per fit, using ``p`` = (p_x, p_y, p_xy) if given."""
        px, py, pxy = p if p is not None else (self.p_x, self.p_y, self.p_xy)
        pts = self.points()
        return np.array([abs(axy - asym_curve(px, py, pxy, ayx)) for axy, ayx in pts])

    def log_likelihoods(self):
        return np.array([f.log_likelihood for f in self.fits])


def asym_curve_diagnostic(G, x, y, fits, cfg: EmConfig = EmConfig(), jobs=1):
    """Fit the unconstrained model ``fits`` times from different seeds.

    Each fit derives its own seed from ``cfg.seed``. The empirical singleton
    and doubleton frequencies of the data are recorded for drawing the curve.
    """
    seeds = rngmod.child_seeds(cfg.seed, fits)
    X = np.asarray(G, dtype=np.float64)

    def one(seed):
        return fit_asymmetric(X, replace(cfg, seed=seed))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    px, py, pxy = pair_group_frequencies(G, x, y)
    return CurveDiagnostic(x, y, float(px), float(py), float(pxy), tuple(results))


@dataclass(frozen=True)
class BootstrapSummary:
    A_std: np.ndarray
    rho_std: np.ndarray
    percentiles: dict
    replicates: int
    dropped: int

    def to_dict(self):
        return {
            "A_std": self.A_std.tolist(),
            "rho_std": self.rho_std.tolist(),
            "A_std_percentiles": self.percentiles,
            "replicates": self.replicates,
            "dropped": self.dropped,
        }


def bootstrap(G: GroupedData, reps, cfg: EmConfig = EmConfig(), seed=0, jobs=1):
    """Bootstrap standard deviations of the EM estimates.

    Each replicate resamples the T observations with replacement (from its
    own substream of ``seed``) and refits with ``cfg`` unchanged, so the
    spread reflects resampling rather than different EM starting points.
    Replicates in which every restart degenerates are dropped and counted.
    """
    if reps < 2:
        raise ValidationError("bootstrap needs at least 2 replicates")
    if not isinstance(G, GroupedData):
        G = GroupedData(G)
    seeds = rngmod.child_seeds(seed, reps)

    def one(s):
        idx = rngmod.generator(s).integers(0, G.T, size=G.T)
        try:
            fit = fit_em(G.take(idx), cfg)
        except AllRestartsDegenerate:
            return None
        return fit.A.values, fit.rho.values

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    kept = [r for r in results if r is not None]
    if len(kept) < 2:
        raise AllRestartsDegenerate(f"only {len(kept)} of {reps} bootstrap replicates could be fitted")
    A_stack = np.stack([a for a, _ in kept])
    rho_stack = np.stack([r for _, r in kept])
    A_std = A_stack.std(axis=0, ddof=1)
    rho_std = rho_stack.std(axis=0, ddof=1)
    off = _upper(A_std) if G.n > 1 else np.zeros(1)
    table = {name: float(np.percentile(off, q)) for name, q in PERCENTILES}
    return BootstrapSummary(A_std, rho_std, table, len(kept), reps - len(kept))
