"""Shared numerical linear algebra helpers (SVD null spaces, clustering,
invariant subspaces)."""

from __future__ import annotations

import numpy as np
import scipy.linalg


def nullspace(A, cutoff):
    """Orthonormal basis (columns) of the kernel of A.

    Singular values <= cutoff * max(1, s_max) count as zero. An empty system
    (zero rows) has a full kernel.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    if n == 0:
        return np.zeros((0, 0))
    if m == 0 or not A.any():
        return np.eye(n)
    u, s, vh = np.linalg.svd(A, full_matrices=True)
    thresh = cutoff * max(1.0, s[0])
    rank = int(np.sum(s > thresh))
    return vh[rank:].T.copy()


def smallest_singular_value(A):
    """Smallest singular value of A; +inf for systems with no unknowns."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[1] == 0:
        return np.inf
    if A.shape[0] == 0:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def orth_columns(M, cutoff):
    """Orthonormal basis (columns) of the column span of M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] == 0 or not M.any():
        return np.zeros((M.shape[0], 0))
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    thresh = cutoff * max(1.0, s[0])
    rank = int(np.sum(s > thresh))
    return u[:, :rank].copy()


def cluster_points(points, radius):
    """Single-linkage clustering of row vectors with the given link radius.

    Returns a list of index arrays. Points at sup-distance <= radius are
    linked transitively.
    """
    pts = np.atleast_2d(np.asarray(points))
    n = pts.shape[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.max(np.abs(pts[i] - pts[j])) <= radius:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = [np.array(v) for v in groups.values()]
    clusters.sort(key=lambda idx: tuple(np.round(pts[idx].mean(axis=0), 12)))
    return clusters


def invariant_subspace(A, keep):
    """Real orthonormal basis of the A-invariant subspace for the eigenvalue
    set selected by ``keep`` (a predicate on complex eigenvalues).

    The selected set must be closed under conjugation, since a real basis is
    returned (real Schur reordering).
    """
    A = np.asarray(A, dtype=float)
    if A.shape[0] == 0:
        return np.zeros((0, 0))
    _, Z, sdim = scipy.linalg.schur(A, output="real", sort=lambda x, y: keep(x + 1j * y))
    return Z[:, :sdim].copy()


def invariant_subspace_complex(A, keep):
    """Complex orthonormal basis of the A-invariant subspace for the
    eigenvalues selected by ``keep``."""
    A = np.asarray(A)
    if A.shape[0] == 0:
        return np.zeros((0, 0), dtype=complex)
    _, Z, sdim = scipy.linalg.schur(A.astype(complex), output="complex", sort=keep)
    return Z[:, :sdim].copy()


def symmetrize(M):
    return 0.5 * (M + M.T)


def is_lower_triangular(q, tol):
    q = np.asarray(q, dtype=float)
    scale = max(1.0, np.abs(q).max())
    return np.all(np.abs(np.triu(q, 1)) <= tol * scale)


def rng_from_seed(seed):
    return np.random.default_rng(seed)
