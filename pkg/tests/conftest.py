import numpy as np
import pytest

from hubmodel.core import GroupedData

FIVE_GROUPS = [
    [1, 0, 0, 0],
    [1, 1, 0, 0],
    [1, 1, 0, 0],
    [1, 0, 1, 1],
    [0, 1, 1, 1],
]

# Non-identifiable example: v1, v2 always emit {1,2,3}; v3, v4 emit {2,3,4}.
TWIN_A = np.array(
    [
        [1, 1, 1, 0],
        [1, 1, 1, 0],
        [0, 1, 1, 1],
        [0, 1, 1, 1],
    ],
    dtype=float,
)
TWIN_RHO = np.full(4, 0.25)

# Asymmetric parameters used for the identifiability curve.
ASYM_A = np.array(
    [
        [1.0000, 0.7854, 0.9063, 0.7957],
        [0.7032, 1.0000, 0.8324, 0.5885],
        [0.9464, 0.8817, 1.0000, 0.9334],
        [0.7452, 0.8594, 0.9478, 1.0000],
    ]
)
ASYM_RHO = np.array([0.5499, 0.3269, 0.1016, 0.0216])

# Two-node model used throughout: P({1}) = .42, P({2}) = .28, P({1,2}) = .30
PAIR_A = np.array([[1.0, 0.3], [0.3, 1.0]])
PAIR_RHO = np.array([0.6, 0.4])


@pytest.fixture
def five_groups():
    return GroupedData(FIVE_GROUPS)


@pytest.fixture
def five_groups_csv(tmp_path):
    path = tmp_path / "five_groups.csv"
    lines = ["v1,v2,v3,v4"] + [",".join(map(str, r)) for r in FIVE_GROUPS]
    path.write_text("\n".join(lines) + "\n")
    return path


def random_params(n, rng, symmetric=True, sparsity=0.0):
    """Random (A, rho) with optional exact zeros off the diagonal."""
    U = rng.random((n, n))
    if sparsity:
        U[rng.random((n, n)) < sparsity] = 0.0
    if symmetric:
        U = np.triu(U, 1)
        U = U + U.T
    np.fill_diagonal(U, 1.0)
    x = rng.random(n) + 1e-3
    return U, x / x.sum()


def all_groups(n):
    """Every non-empty 0/1 vector of length n."""
    return [np.array([(k >> i) & 1 for i in range(n)]) for k in range(1, 2**n)]
