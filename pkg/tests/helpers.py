"""Shared fixtures and generators for the test suite."""

import numpy as np

from orbitlab import builtin_algebra


def random_spd(rng, d, spread=1.5):
    """Well-conditioned random SPD matrix with eigenvalues in e^[-spread, spread]."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigs = np.exp(rng.uniform(-spread, spread, d))
    return Q @ np.diag(eigs) @ Q.T


def random_definite_gram(rng, d):
    """SPD Gram matrix built from a random lower-triangular gauge."""
    q = np.tril(rng.standard_normal((d, d))) + 2.0 * np.eye(d)
    return np.linalg.inv(q @ q.T)


def sl2():
    return builtin_algebra("sl", [2])


def heisenberg3():
    L, _ = builtin_algebra("heisenberg", [3])
    return L


SMALL_BUILTINS = [
    ("sl", [2]),
    ("heisenberg", [3]),
    ("heisenberg", [5]),
    ("abelian", [4]),
    ("borel_sl2", []),
    ("so_pq", [1, 2]),
    ("so_pq", [2, 2]),
]
