"""Lie algebras over R as structure constants: brackets, Killing form,
structural predicates, centralizers/normalizers, derivations, nilradical and
simple-ideal decomposition.

All scalars are doubles; every exact identity of the theory becomes a residual
bound controlled by the per-algebra ``tolerance``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import (
    cluster_points,
    invariant_subspace,
    invariant_subspace_complex,
    nullspace,
    orth_columns,
    rng_from_seed,
    smallest_singular_value,
)
from .errors import (
    AlgorithmFailure,
    IndeterminateError,
    InputError,
    InputShapeError,
    JacobiError,
    PreconditionError,
)

DEFAULT_TOLERANCE = 1e-9


class LieAlgebraData:
    """A finite-dimensional real Lie algebra in a fixed basis.

    The rank-3 array ``c`` encodes [e_i, e_j] = sum_k c[i, j, k] e_k. Input
    constants are antisymmetrized on construction; the Jacobi identity is
    checked (never repaired) and a violation raises :class:`JacobiError`.
    """

    def __init__(self, structure_constants, basis_labels=None, tolerance=DEFAULT_TOLERANCE):
        c = np.asarray(structure_constants, dtype=float)
        if c.ndim != 3 or c.shape[0] != c.shape[1] or c.shape[1] != c.shape[2]:
            raise InputShapeError(f"structure constants must be d x d x d, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InputError("structure constants contain non-finite entries")
        if tolerance <= 0:
            raise InputError("tolerance must be positive")
        dim = c.shape[0]
        if dim == 0:
            raise InputError("dimension must be positive")
        if basis_labels is None:
            basis_labels = [f"e{i + 1}" for i in range(dim)]
        basis_labels = [str(s) for s in basis_labels]
        if len(basis_labels) != dim:
            raise InputShapeError("basis_labels length does not match dim")

        asym_residual = float(np.abs(c + np.swapaxes(c, 0, 1)).max())
        scale = (1.0 + float(np.abs(c).max())) ** 2
        if asym_residual > tolerance * scale:
            raise InputError(
                f"structure constants are not antisymmetric (residual {asym_residual:.3e})"
            )
        c = 0.5 * (c - np.swapaxes(c, 0, 1))

        self.dim = dim
        self.basis_labels = basis_labels
        self.structure_constants = c
        self.tolerance = float(tolerance)
        # ad(e_i) as a matrix: ad[i][k, j] = c[i, j, k]
        self._ad_basis = np.transpose(c, (0, 2, 1)).copy()

        self._check_jacobi()

    def _check_jacobi(self):
        c = self.structure_constants
        # [[e_i, e_j], e_k]_m = sum_l c[i,j,l] c[l,k,m]
        t = np.einsum("ijl,lkm->ijkm", c, c)
        jac = t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))
        norms = np.linalg.norm(jac, axis=3)
        worst = np.unravel_index(np.argmax(norms), norms.shape)
        residual = float(norms[worst])
        bound = self.tolerance * (1.0 + float(np.abs(c).max())) ** 2
        if residual > bound:
            raise JacobiError(
                f"Jacobi identity fails at triple {worst} with residual {residual:.3e} "
                f"(bound {bound:.3e})",
                worst_triple=tuple(int(w) for w in worst),
                residual=residual,
            )

    def ad(self, X):
        """Matrix of ad(X): Y -> [X, Y]."""
        X = _as_vector(X, self.dim)
        return np.einsum("i,ikj->kj", X, self._ad_basis)

    def ad_traces(self):
        """Vector of trace(ad e_i)."""
        return np.einsum("ikk->i", self._ad_basis)

    def __repr__(self):
        return f"LieAlgebraData(dim={self.dim}, labels={self.basis_labels})"


class Subspace:
    """A linear subspace of R^d, stored as an orthonormal column basis."""

    def __init__(self, basis_matrix, ambient_dim=None, tolerance=DEFAULT_TOLERANCE):
        M = np.asarray(basis_matrix, dtype=float)
        if M.ndim == 1:
            M = M.reshape(-1, 1)
        if ambient_dim is None:
            ambient_dim = M.shape[0]
        if M.shape[0] != ambient_dim:
            raise InputShapeError(
                f"basis vectors live in R^{M.shape[0]}, ambient_dim={ambient_dim}"
            )
        self.ambient_dim = int(ambient_dim)
        self.tolerance = float(tolerance)
        self.basis = orth_columns(M, tolerance)

    @classmethod
    def zero(cls, ambient_dim, tolerance=DEFAULT_TOLERANCE):
        return cls(np.zeros((ambient_dim, 0)), ambient_dim, tolerance)

    @classmethod
    def full(cls, ambient_dim, tolerance=DEFAULT_TOLERANCE):
        return cls(np.eye(ambient_dim), ambient_dim, tolerance)

    @property
    def rank(self):
        return self.basis.shape[1]

    def projector(self):
        return self.basis @ self.basis.T

    def project(self, v):
        return self.basis @ (self.basis.T @ v)

    def residual_of(self, v):
        """Distance of v from the subspace, relative to max(1, |v|)."""
        v = np.asarray(v, dtype=float)
        return float(np.linalg.norm(v - self.project(v)) / max(1.0, np.linalg.norm(v)))

    def contains(self, v, tol=None):
        return self.residual_of(v) <= (self.tolerance if tol is None else tol)

    def contains_subspace(self, other, tol=None):
        if other.rank == 0:
            return True
        res = max(self.residual_of(other.basis[:, j]) for j in range(other.rank))
        return res <= (self.tolerance if tol is None else tol)

    def same_as(self, other, tol=None):
        return (
            self.rank == other.rank
            and self.contains_subspace(other, tol)
            and other.contains_subspace(self, tol)
        )

    def union(self, *others):
        cols = [self.basis] + [o.basis for o in others]
        return Subspace(np.hstack(cols), self.ambient_dim, self.tolerance)

    def orthogonal_complement(self):
        return Subspace(
            nullspace(self.basis.T, self.tolerance), self.ambient_dim, self.tolerance
        )

    def __repr__(self):
        return f"Subspace(rank={self.rank}, ambient_dim={self.ambient_dim})"


@dataclass
class LinearMapData:
    """A linear endomorphism of the algebra's underlying vector space."""

    matrix: np.ndarray
    description: str = ""

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise InputShapeError(f"linear map must be square, got {self.matrix.shape}")
        if not np.all(np.isfinite(self.matrix)):
            raise InputError("linear map has non-finite entries")


@dataclass
class StructureInvariants:
    semisimple: bool
    unimodular: bool
    nilpotent: bool
    center_dim: int


def _as_vector(X, dim):
    X = np.asarray(X, dtype=float).reshape(-1)
    if X.shape[0] != dim:
        raise InputShapeError(f"expected a vector of length {dim}, got {X.shape[0]}")
    return X


def _as_matrix(M):
    if isinstance(M, LinearMapData):
        return M.matrix
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputShapeError(f"expected a square matrix, got {M.shape}")
    return M


def bracket_apply(L, X, Y):
    """[X, Y] evaluated through the structure constants."""
    X = _as_vector(X, L.dim)
    Y = _as_vector(Y, L.dim)
    return np.einsum("i,j,ijk->k", X, Y, L.structure_constants)


def killing_form(L):
    """Killing form B(X, Y) = trace(ad X . ad Y) as a symmetric matrix."""
    ads = L._ad_basis
    B = np.einsum("iab,jba->ij", ads, ads)
    return 0.5 * (B + B.T)


def subspace_bracket(L, S1, S2):
    """Span of [S1, S2] as a Subspace."""
    b1, b2 = S1.basis, S2.basis
    if b1.shape[1] == 0 or b2.shape[1] == 0:
        return Subspace.zero(L.dim, L.tolerance)
    vecs = np.einsum("ia,jb,ijk->kab", b1, b2, L.structure_constants)
    return Subspace(vecs.reshape(L.dim, -1), L.dim, L.tolerance)


def lower_central_series(L, S=None, max_steps=None):
    """Lower central series S, [S,S], [S,[S,S]], ... until stable or zero."""
    if S is None:
        S = Subspace.full(L.dim, L.tolerance)
    series = [S]
    current = subspace_bracket(L, S, S)
    steps = max_steps if max_steps is not None else L.dim + 1
    for _ in range(steps):
        series.append(current)
        if current.rank == 0 or current.rank == series[-2].rank:
            break
        current = subspace_bracket(L, S, current)
    return series


def derived_series(L, S=None, max_steps=None):
    """Derived series S, [S,S], [[S,S],[S,S]], ... until stable or zero."""
    if S is None:
        S = Subspace.full(L.dim, L.tolerance)
    series = [S]
    steps = max_steps if max_steps is not None else L.dim + 1
    for _ in range(steps):
        nxt = subspace_bracket(L, series[-1], series[-1])
        series.append(nxt)
        if nxt.rank == 0 or nxt.rank == series[-2].rank:
            break
    return series


def is_nilpotent_subalgebra(L, S):
    return lower_central_series(L, S)[-1].rank == 0


def is_solvable_subalgebra(L, S):
    return derived_series(L, S)[-1].rank == 0


def structure_invariants(L):
    """Semisimplicity (Cartan's criterion), unimodularity, nilpotency and
    the dimension of the center.

    Raises IndeterminateError when the Killing determinant test falls inside
    the tolerance band [tol/10, 10*tol] on the eigenvalue ratio.
    """
    tol = L.tolerance
    traces = L.ad_traces()
    unimodular = bool(np.abs(traces).max() <= tol) if L.dim else True

    B = killing_form(L)
    eigs = np.abs(np.linalg.eigvalsh(B))
    s_max = float(eigs.max())
    if s_max <= tol:
        semisimple = False
    else:
        ratio = float(eigs.min()) / s_max
        if ratio > 10.0 * tol:
            semisimple = True
        elif ratio < 0.1 * tol:
            semisimple = False
        else:
            raise IndeterminateError(
                "Killing form is borderline degenerate "
                f"(eigenvalue ratio {ratio:.3e} within a factor 10 of tolerance "
                f"{tol:.1e}); the algebra may or may not be semisimple"
            )

    nilpotent = is_nilpotent_subalgebra(L, Subspace.full(L.dim, tol))

    K = L._ad_basis.reshape(L.dim, L.dim * L.dim).T
    center_dim = nullspace(K, tol).shape[1]

    return StructureInvariants(
        semisimple=semisimple,
        unimodular=unimodular,
        nilpotent=nilpotent,
        center_dim=int(center_dim),
    )


def _bracket_with_fixed(L, s):
    """Matrix of X -> [X, s]."""
    return np.einsum("ijk,j->ki", L.structure_constants, s)


def _constrained_nullspace(L, kind, S, within):
    """Coefficient-space kernel for centralizer/normalizer conditions.

    Returns (coefficient matrix columns, stacked constraint matrix).
    """
    W = within.basis
    if W.shape[1] == 0:
        return np.zeros((0, 0)), np.zeros((0, 0))
    rows = []
    if S.rank == 0:
        return np.eye(W.shape[1]), np.zeros((0, W.shape[1]))
    P_perp = np.eye(L.dim) - S.projector()
    for j in range(S.rank):
        M = _bracket_with_fixed(L, S.basis[:, j]) @ W
        if kind == "centralizer":
            rows.append(M)
        elif kind == "normalizer":
            rows.append(P_perp @ M)
        else:
            raise InputError(f"unknown subspace operator kind {kind!r}")
    A = np.vstack(rows)
    return nullspace(A, L.tolerance), A


def subspace_operator(L, kind, S, within):
    """Centralizer {X in within : [X, S] = 0} or normalizer
    {X in within : [X, S] subset S}, via a stacked linear system."""
    coeffs, _ = _constrained_nullspace(L, kind, S, within)
    if coeffs.shape[1] == 0:
        return Subspace.zero(L.dim, L.tolerance)
    return Subspace(within.basis @ coeffs, L.dim, L.tolerance)


def centralizer_margin(L, S, within):
    """Smallest singular value of the centralizer constraint system; the
    margin certifying a trivial centralizer."""
    _, A = _constrained_nullspace(L, "centralizer", S, within)
    return smallest_singular_value(A)


def derivations(L):
    """Basis of Der(L) = {D : D[X,Y] = [DX,Y] + [X,DY]} as a Subspace of the
    dim^2-dimensional space of matrices (row-major vectorization)."""
    d = L.dim
    c = L.structure_constants
    eye = np.eye(d)
    # Row (i,j,k), unknown D[a,b]:
    #   + c[i,j,b] [a==k]  - c[b,j,k] [... D[l,i] c[l,j,k]: coeff at (a,b)= (l,i)]
    A = (
        np.einsum("ak,ijb->ijkab", eye, c)
        - np.einsum("bi,ajk->ijkab", eye, c)
        - np.einsum("bj,iak->ijkab", eye, c)
    ).reshape(d**3, d**2)
    return Subspace(nullspace(A, L.tolerance), d**2, L.tolerance)


def derivation_residual(L, D):
    """Max-norm residual of the Leibniz identity for the map D."""
    D = _as_matrix(D)
    if D.shape[0] != L.dim:
        raise InputShapeError("derivation candidate has wrong size")
    c = L.structure_constants
    lhs = np.einsum("kl,ijl->ijk", D, c)
    rhs = np.einsum("li,ljk->ijk", D, c) + np.einsum("lj,ilk->ijk", D, c)
    return float(np.abs(lhs - rhs).max())


def is_derivation(L, D, tol=None):
    D = _as_matrix(D)
    scale = (1.0 + float(np.abs(D).max())) * (1.0 + float(np.abs(L.structure_constants).max()))
    return derivation_residual(L, D) <= (L.tolerance if tol is None else tol) * scale


def radical(L):
    """Solvable radical via Cartan's criterion: the B-orthogonal complement
    of the derived algebra [l, l]."""
    derived = subspace_bracket(L, Subspace.full(L.dim, L.tolerance), Subspace.full(L.dim, L.tolerance))
    if derived.rank == 0:
        return Subspace.full(L.dim, L.tolerance)
    B = killing_form(L)
    return Subspace(nullspace((B @ derived.basis).T, L.tolerance), L.dim, L.tolerance)


def _restricted_operator(L, X, R):
    """ad(X) corestricted to the (invariant) column span R, in R-coordinates."""
    return R.T @ L.ad(X) @ R


def _fitting_split(A, tol):
    """Split R^m into the Fitting-null and Fitting-one components of A.

    The zero eigenvalue cluster is found by an adaptive gap search on the
    eigenvalue magnitudes (non-normal matrices smear nilpotent eigenvalues
    by roughly eps^(1/k), so a fixed tolerance cannot be used).
    """
    m = A.shape[0]
    if m == 0:
        return np.zeros((0, 0)), np.zeros((0, 0))
    w = np.linalg.eigvals(A)
    mags = np.sort(np.abs(w))
    scale = max(mags[-1], 1.0)
    if mags[-1] <= 1e-6 * max(1.0, np.abs(A).max()):
        return np.eye(m), np.zeros((m, 0))
    floor = 1e-13 * scale
    lifted = np.maximum(mags, floor)
    ratios = lifted[1:] / lifted[:-1]
    split = int(np.argmax(ratios))
    if ratios[split] < 1e4 or mags[split] > 1e-4 * scale:
        # no zero cluster: A is invertible on the whole space
        if mags[0] > 1e-4 * scale:
            return np.zeros((m, 0)), np.eye(m)
        raise AlgorithmFailure(
            "could not separate the zero eigenvalue cluster "
            f"(magnitudes {np.array2string(mags, precision=3)})"
        )
    cutoff = np.sqrt(max(mags[split], floor) * mags[split + 1])
    null_part = invariant_subspace(A, lambda z: abs(z) <= cutoff)
    one_part = invariant_subspace(A, lambda z: abs(z) > cutoff)
    if null_part.shape[1] + one_part.shape[1] != m:
        raise AlgorithmFailure("Fitting components do not fill the space")
    return null_part, one_part


def nilradical(L, seed=42, retries=8):
    """The maximal nilpotent ideal.

    Radical-then-nilpotency-filter: r is the B-orthocomplement of [l, l];
    inside r, a Cartan subalgebra h (Fitting-null of a generic ad Y) splits
    r = h + r1, and the nilradical is r1 plus the kernel in h of all weight
    functionals of the h-action on r1. Verified a posteriori (ideal property,
    nilpotency, containment of [l, r]); retried with fresh generic elements,
    then AlgorithmFailure.
    """
    tol = L.tolerance
    r = radical(L)
    if r.rank == 0:
        return Subspace.zero(L.dim, tol)

    rng = rng_from_seed(seed)
    R = r.basis
    m = r.rank
    last_error = None
    for _ in range(retries):
        try:
            y = rng.standard_normal(m)
            Y = R @ (y / np.linalg.norm(y))
            A = _restricted_operator(L, Y, R)
            h_coords, r1_coords = _fitting_split(A, tol)

            h = Subspace(R @ h_coords, L.dim, tol)
            if not is_nilpotent_subalgebra(L, h):
                raise AlgorithmFailure("Fitting-null component is not nilpotent")
            n_h = subspace_operator(L, "normalizer", h, r)
            if not n_h.same_as(h, tol * 10):
                raise AlgorithmFailure("Fitting-null component is not self-normalizing")

            if r1_coords.shape[1] == 0:
                candidate = r
            else:
                Q1 = R @ r1_coords  # columns span r1 in ambient coordinates
                A1 = Q1.T @ L.ad(Y) @ Q1
                w = np.linalg.eigvals(A1)
                clusters = cluster_points(
                    np.column_stack([w.real, w.imag]), 1e-6 * max(1.0, np.abs(w).max())
                )
                rows = []
                h_basis = h.basis
                scale_w = max(1.0, float(np.abs(w).max()))
                for idx in clusters:
                    members = [complex(w[i]) for i in idx]
                    outside = [complex(w[j]) for j in range(len(w)) if j not in idx]
                    rad = 0.5 * min(
                        [min(abs(o - c) for c in members) for o in outside] or [1.0]
                    )
                    rad = max(rad, 1e-8 * scale_w)

                    def keep(z, members=members, rad=rad):
                        return min(abs(z - c) for c in members) <= rad

                    V = invariant_subspace_complex(A1, keep)
                    if V.shape[1] != len(idx):
                        raise AlgorithmFailure("weight cluster subspace has wrong dimension")
                    phi = []
                    for e in range(h.rank):
                        Az = Q1.T @ L.ad(h_basis[:, e]) @ Q1
                        phi.append(np.trace(V.conj().T @ Az @ V) / V.shape[1])
                    phi = np.array(phi)
                    rows.append(phi.real)
                    rows.append(phi.imag)
                K = nullspace(np.vstack(rows), tol)
                cols = [Q1]
                if K.shape[1]:
                    cols.append(h_basis @ K)
                candidate = Subspace(np.hstack(cols), L.dim, tol)

            _verify_nilradical(L, candidate, r)
            return candidate
        except AlgorithmFailure as err:
            last_error = err
            continue
    raise AlgorithmFailure(f"nilradical: retries exhausted ({last_error})")


def _verify_nilradical(L, n, r):
    tol = L.tolerance
    full = Subspace.full(L.dim, tol)
    ln = subspace_bracket(L, full, n)
    if not n.contains_subspace(ln, 100 * tol):
        raise AlgorithmFailure("candidate nilradical is not an ideal")
    if not is_nilpotent_subalgebra(L, n):
        raise AlgorithmFailure("candidate nilradical is not nilpotent")
    lr = subspace_bracket(L, full, r)
    if not n.contains_subspace(lr, 100 * tol):
        raise AlgorithmFailure("candidate nilradical misses [l, r]")


def _ideal_closure(L, v, cap=None):
    """Smallest ideal containing v, by repeated bracketing with the basis."""
    S = Subspace(v.reshape(-1, 1), L.dim, L.tolerance)
    full = Subspace.full(L.dim, L.tolerance)
    for _ in range(cap if cap is not None else L.dim + 1):
        grown = S.union(subspace_bracket(L, full, S))
        if grown.rank == S.rank:
            return grown
        S = grown
    return S


def simple_ideals(L, seed=42, retries=8):
    """Pairwise B-orthogonal simple ideals summing to L (semisimple input).

    Decomposition via clustering the spectrum of a generic element of the
    commutant of ad(L); each piece is verified to be an ideal and simple
    (random ideal closures fill the piece).
    """
    inv = structure_invariants(L)
    if not inv.semisimple:
        raise PreconditionError("simple_ideals requires a semisimple algebra")
    d = L.dim
    tol = L.tolerance
    # Commutant of {ad e_i}: solve ad_i C - C ad_i = 0 for all i.
    eye = np.eye(d)
    rows = [np.kron(A, eye) - np.kron(eye, A.T) for A in L._ad_basis]
    comm = nullspace(np.vstack(rows), tol)
    B = killing_form(L)

    rng = rng_from_seed(seed)
    last_error = None
    for _ in range(retries):
        coeff = rng.standard_normal(comm.shape[1])
        C = (comm @ coeff).reshape(d, d)
        w = np.linalg.eigvals(C)
        # conjugation-closed clustering: cluster on (Re, |Im|)
        keyed = np.column_stack([w.real, np.abs(w.imag)])
        clusters = cluster_points(keyed, 1e-6 * max(1.0, np.abs(w).max()))
        try:
            pieces = []
            for idx in clusters:
                centers = [complex(w[i]) for i in idx] + [complex(w[i]).conjugate() for i in idx]
                others = [complex(w[j]) for j in range(d) if j not in idx]
                rad = 0.5 * min(
                    [min(abs(o - c) for c in centers) for o in others] or [1.0]
                )
                rad = max(rad, 1e-8 * max(1.0, float(np.abs(w).max())))

                def keep(z, centers=centers, rad=rad):
                    return min(abs(z - c) for c in centers) <= rad

                basis = invariant_subspace(C, keep)
                pieces.append(Subspace(basis, d, tol))
            _verify_simple_ideals(L, pieces, B, rng)
            pieces.sort(key=lambda s: (s.rank, tuple(np.round(s.basis[:, 0], 9))))
            return pieces
        except AlgorithmFailure as err:
            last_error = err
            continue
    raise AlgorithmFailure(f"simple_ideals: retries exhausted ({last_error})")


def _verify_simple_ideals(L, pieces, B, rng):
    tol = L.tolerance
    d = L.dim
    if sum(p.rank for p in pieces) != d:
        raise AlgorithmFailure("ideal ranks do not sum to dim")
    combined = pieces[0].union(*pieces[1:]) if len(pieces) > 1 else pieces[0]
    if combined.rank != d:
        raise AlgorithmFailure("ideals do not span the algebra")
    full = Subspace.full(d, tol)
    for a, P in enumerate(pieces):
        if not P.contains_subspace(subspace_bracket(L, full, P), 100 * tol):
            raise AlgorithmFailure("piece is not an ideal")
        for Q in pieces[a + 1 :]:
            if float(np.abs(P.basis.T @ B @ Q.basis).max()) > 100 * tol * max(
                1.0, float(np.abs(B).max())
            ):
                raise AlgorithmFailure("ideals are not B-orthogonal")
            if subspace_bracket(L, P, Q).rank != 0:
                raise AlgorithmFailure("distinct ideals do not commute")
        for _ in range(3):
            v = P.basis @ rng.standard_normal(P.rank)
            if not _ideal_closure(L, v).same_as(P, 100 * tol):
                raise AlgorithmFailure("piece has a proper ideal; not simple")


def direct_sum(L1, L2, tolerance=None):
    """Direct sum of two algebras (block structure constants)."""
    d1, d2 = L1.dim, L2.dim
    tol = tolerance if tolerance is not None else min(L1.tolerance, L2.tolerance)
    c = np.zeros((d1 + d2, d1 + d2, d1 + d2))
    c[:d1, :d1, :d1] = L1.structure_constants
    c[d1:, d1:, d1:] = L2.structure_constants
    labels = [f"a.{s}" for s in L1.basis_labels] + [f"b.{s}" for s in L2.basis_labels]
    return LieAlgebraData(c, labels, tol)
