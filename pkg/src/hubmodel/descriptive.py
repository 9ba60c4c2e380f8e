"""Baseline co-occurrence statistics computed directly from grouped data."""

import numpy as np


def _counts(G):
    X = np.asarray(G, dtype=np.int64)
    return X, X.T @ X


def co_occurrence(G):
    """Fraction of observations containing both nodes, ``G'G / T``.

    The diagonal holds each node's appearance frequency.
    """
    X, C = _counts(G)
    return C / X.shape[0]


def half_weight(G):
    """Half-weight index ``2 * #(i and j) / (#i + #j)``.

    Pairs where neither node ever appears are set to 0; use
    :func:`half_weight_undefined` to find them.
    """
    X, C = _counts(G)
    appear = np.diag(C)
    denom = appear[:, None] + appear[None, :]
    H = np.zeros(C.shape)
    np.divide(2 * C, denom, out=H, where=denom > 0)
    return H


def half_weight_undefined(G):
    """Boolean mask of pairs whose half-weight index is 0/0."""
    appear = np.asarray(G, dtype=np.int64).sum(axis=0)
    absent = appear == 0
    return absent[:, None] & absent[None, :]
