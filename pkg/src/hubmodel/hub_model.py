"""Hub Model likelihood and estimators.

A group is generated by drawing a hub ``i`` with probability ``rho[i]``;
the hub is always a member and every other node ``j`` joins independently
with probability ``A[i, j]``. The probability of a group ``g`` is therefore
a mixture over its members::

    P(g) = sum_i rho_i g_i prod_j A_ij^g_j (1 - A_ij)^(1 - g_j)

All mixture components are evaluated in log space. Exact zeros in ``A`` or
``rho`` are kept as ``-inf`` log weights rather than being clipped, so that
zero stays an absorbing state of the EM iteration.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .core import (
    AdjacencyMatrix,
    FitResult,
    GroupedData,
    HubAssignments,
    HubWeights,
    Responsibilities,
    RestartRecord,
)
from .errors import (
    AllRestartsDegenerate,
    DimensionMismatch,
    EmptyGroup,
    UndefinedPairWarning,
    ValidationError,
    ZeroProbabilityGroup,
)

OFF_DIAGONAL_CAP = 1.0 - 1e-12


@dataclass(frozen=True)
class EmConfig:
    """Settings for :func:`fit_em`.

    Ten restarts, 100 iterations and a 1e-4 zero threshold follow the
    published algorithm. The relative log-likelihood tolerance is tighter
    than its 1e-4: at 1e-4 the iteration stops while entries headed for
    zero are still around 1e-3, which shows up as spurious edges.
    """

    restarts: int = 10
    max_iterations: int = 100
    rel_ll_tolerance: float = 1e-6
    zero_threshold: float = 1e-4
    seed: int = 0
    off_diagonal_cap: float = OFF_DIAGONAL_CAP

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not 0 < self.rel_ll_tolerance < 1:
            raise ValidationError("rel_ll_tolerance must lie in (0, 1)")
        if not 0 < self.zero_threshold < 1:
            raise ValidationError("zero_threshold must lie in (0, 1)")
        if not 0 < self.off_diagonal_cap <= 1:
            raise ValidationError("off_diagonal_cap must lie in (0, 1]")


def _as_groups(G):
    X = np.asarray(G, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    return X


def _check_params(X, A, rho):
    A = np.asarray(A, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    n = X.shape[1]
    if A.shape != (n, n) or rho.shape != (n,):
        raise DimensionMismatch(
            f"groups have {n} nodes but A is {A.shape} and rho is {rho.shape}"
        )
    return A, rho


def component_log_weights(G, A, rho):
    """Log of ``P(G^(t), hub = x)`` for every observation t and node x.

    Entry ``[t, x]`` is ``-inf`` when node x cannot have produced group t
    (x is not a member, ``rho[x] == 0``, or the group contains a node that
    x never recruits / omits one it always recruits).
    """
    X = _as_groups(G)
    A, rho = _check_params(X, A, rho)
    with np.errstate(divide="ignore"):
        log_rho = np.log(rho)
        log_in = np.where(A > 0, np.log(A), 0.0)
        log_out = np.where(A < 1, np.log1p(-A), 0.0)
    L = X @ log_in.T + (1.0 - X) @ log_out.T + log_rho
    blocked = X @ (A == 0).T + (1.0 - X) @ (A == 1).T
    L[blocked > 0] = -np.inf
    return L


def _normalize(L):
    """Row-wise log-sum-exp and posterior. Returns (R, row_log_probs)."""
    top = L.max(axis=1)
    dead = np.isneginf(top)
    shift = np.where(dead, 0.0, top)
    W = np.exp(L - shift[:, None])
    s = W.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        R = W / s[:, None]
        logp = shift + np.log(s)
    logp[dead] = -np.inf
    return R, logp


def group_probability(g, A, rho):
    """Probability that the Hub Model with parameters (A, rho) emits group ``g``."""
    X = _as_groups(g)
    if X.shape[0] != 1:
        raise DimensionMismatch("group_probability takes a single group")
    if not X.any():
        raise EmptyGroup("the empty group is not modelled")
    _, logp = _normalize(component_log_weights(X, A, rho))
    return float(np.exp(logp[0]))


def log_likelihood(G, A, rho):
    """Sum of log group probabilities; ``-inf`` if any group is impossible."""
    _, logp = _normalize(component_log_weights(G, A, rho))
    if np.any(np.isneginf(logp)):
        return -math.inf
    return float(logp.sum())


def _e_step(X, A, rho, weights=None):
    R, logp = _normalize(component_log_weights(X, A, rho))
    dead = np.flatnonzero(np.isneginf(logp))
    if len(dead):
        raise ZeroProbabilityGroup(int(dead[0]))
    ll = logp.sum() if weights is None else weights @ logp
    return R, float(ll)


def e_step(G, A, rho):
    """Posterior probability that each member of each group is its hub."""
    R, _ = _e_step(_as_groups(G), A, rho)
    return Responsibilities(R)


def m_step(G, R, off_diagonal_cap=OFF_DIAGONAL_CAP, symmetric=True, weights=None):
    """Maximize the expected complete-data likelihood given responsibilities.

    Returns raw ``(A, rho)`` arrays. For the symmetric model::

        A_xy = (sum_t G_y R_x + sum_t G_x R_y) / sum_t (R_x + R_y)

    and ``rho_x = mean_t R_x``. Pairs whose nodes carry no responsibility at
    all get ``A_xy = 0``. With ``symmetric=False`` each row is estimated on
    its own (``A_xy = sum_t G_y R_x / sum_t R_x``); that mode exists only for
    identifiability diagnostics.

    ``weights`` gives a multiplicity per row, for data collapsed to
    distinct groups.
    """
    X = _as_groups(G)
    R = np.asarray(R, dtype=np.float64)
    if R.shape != X.shape:
        raise DimensionMismatch(f"responsibilities {R.shape} vs groups {X.shape}")
    if weights is not None:
        R = R * weights[:, None]
    N = R.T @ X
    r = R.sum(axis=0)
    if symmetric:
        num = N + N.T
        den = r[:, None] + r[None, :]
    else:
        num = N
        den = np.broadcast_to(r[:, None], N.shape)
    A = np.zeros_like(N)
    np.divide(num, den, out=A, where=den > 0)
    np.minimum(A, off_diagonal_cap, out=A)
    np.fill_diagonal(A, 1.0)
    rho = r / (X.shape[0] if weights is None else weights.sum())
    return A, rho


def _initial_params(n, gen, symmetric):
    U = gen.random((n, n))
    if symmetric:
        A = np.triu(U, 1)
        A = A + A.T
    else:
        A = U.copy()
    np.fill_diagonal(A, 1.0)
    x = gen.random(n)
    return A, x / x.sum()


def collapse_groups(G):
    """Distinct groups (sorted) and how often each occurs."""
    U, counts = np.unique(np.asarray(G, dtype=np.uint8), axis=0, return_counts=True)
    return U.astype(np.float64), counts.astype(np.float64)


def _run_restart(data, seed, cfg, symmetric):
    X, w = data
    gen = rngmod.generator(seed)
    A, rho = _initial_params(X.shape[1], gen, symmetric)
    trace = []
    try:
        R, ll = _e_step(X, A, rho, w)
        trace.append(ll)
        converged = False
        it = 0
        while it < cfg.max_iterations:
            A, rho = m_step(X, R, cfg.off_diagonal_cap, symmetric, w)
            it += 1
            R, new_ll = _e_step(X, A, rho, w)
            trace.append(new_ll)
            step = abs(new_ll - ll)
            ll = new_ll
            if step <= cfg.rel_ll_tolerance * abs(trace[-2]):
                converged = True
                break
    except ZeroProbabilityGroup:
        record = RestartRecord(seed, len(trace), -math.inf, False, tuple(trace))
        return record, None, None
    return RestartRecord(seed, it, ll, converged, tuple(trace)), A, rho


def em_restarts(G, cfg: EmConfig, symmetric=True, jobs=1):
    """Run every EM restart of ``cfg``; returns a list of ``(record, A, rho)``.

    Each restart gets its own seed derived from ``cfg.seed``, so the output
    does not depend on ``jobs``. Identical groups are collapsed first; the
    iteration is the same, only cheaper when groups repeat.
    """
    data = collapse_groups(_as_groups(G))
    seeds = rngmod.child_seeds(cfg.seed, cfg.restarts)
    if jobs > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda s: _run_restart(data, s, cfg, symmetric), seeds))
    return [_run_restart(data, s, cfg, symmetric) for s in seeds]


def best_restart(runs):
    """Index of the restart with the highest final log likelihood (lowest index on ties)."""
    best = None
    for k, (rec, _, _) in enumerate(runs):
        if rec.final_ll == -math.inf:
            continue
        if best is None or rec.final_ll > runs[best][0].final_ll:
            best = k
    if best is None:
        raise AllRestartsDegenerate(f"all {len(runs)} restarts hit a zero-probability group")
    return best


def fit_em(G: GroupedData, cfg: EmConfig = EmConfig(), jobs=1) -> FitResult:
    """Maximum likelihood fit of (A, rho) by multi-start EM.

    The restart with the highest final log likelihood wins; its off-diagonal
    entries at or below ``cfg.zero_threshold`` are then set to exactly 0.
    """
    if not isinstance(G, GroupedData):
        G = GroupedData(G)
    runs = em_restarts(G, cfg, symmetric=True, jobs=jobs)
    k = best_restart(runs)
    rec, A_raw, rho = runs[k]
    A = np.where(A_raw <= cfg.zero_threshold, 0.0, A_raw)
    np.fill_diagonal(A, 1.0)
    return FitResult(
        A=AdjacencyMatrix(A),
        rho=HubWeights(rho),
        log_likelihood=rec.final_ll,
        restarts=tuple(r for r, _, _ in runs),
        chosen_restart=k,
        zero_threshold=cfg.zero_threshold,
        seed=cfg.seed,
        labels=G.node_labels,
        A_unthresholded=A_raw,
    )


def fit_known_hub(G, S: HubAssignments):
    """Closed-form estimates when each group's hub is observed.

    ``rho_x`` is the fraction of groups led by x, and ``A_xy`` pools the
    groups led by x or y::

        A_xy = (#{hub x, y present} + #{hub y, x present}) / (#{hub x} + #{hub y})

    Pairs where neither node ever leads a group are set to 0 and reported
    through an :class:`UndefinedPairWarning`.
    """
    X = _as_groups(G)
    if S.T != X.shape[0] or S.n != X.shape[1]:
        raise DimensionMismatch("hub assignments do not match grouped data")
    Sm = S.indicators()
    N = Sm.T @ X
    c = Sm.sum(axis=0)
    den = c[:, None] + c[None, :]
    A = np.zeros_like(N)
    np.divide(N + N.T, den, out=A, where=den > 0)
    np.fill_diagonal(A, 1.0)
    undefined = np.triu(den == 0, 1)
    if undefined.any():
        warnings.warn(
            f"{int(undefined.sum())} node pairs have no hub among them; estimates set to 0",
            UndefinedPairWarning,
            stacklevel=2,
        )
    return AdjacencyMatrix(A), HubWeights(c / X.shape[0])


def pair_group_frequencies(G, x, y):
    """Empirical frequencies of the groups {x}, {y} and {x, y}."""
    X = np.asarray(G, dtype=np.int64)
    size = X.sum(axis=1)
    only_x = (size == 1) & (X[:, x] == 1)
    only_y = (size == 1) & (X[:, y] == 1)
    both = (size == 2) & (X[:, x] == 1) & (X[:, y] == 1)
    T = X.shape[0]
    return only_x.sum() / T, only_y.sum() / T, both.sum() / T


def mom_pair_estimate(G, x, y):
    """Method-of-moments estimate of ``A_xy`` from singleton and doubleton frequencies.

    Returns ``None`` when none of the three groups is observed.
    """
    if x == y:
        raise ValidationError("method-of-moments estimate needs two distinct nodes")
    px, py, pxy = pair_group_frequencies(G, x, y)
    total = px + py + pxy
    if total == 0:
        return None
    return float(pxy / total)
