"""Cartan and Iwasawa machinery: builtin classical algebras, validated Cartan
involutions, maximal abelian subspaces, restricted-root decompositions, Borel
and minimal parabolic subalgebras, and the Appendix-style structural checks
(Borel-nilradical span, bracket coverage of m+a, trivial centralizers,
self-normalizing k).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import liealg
from ._linalg import nullspace, rng_from_seed, smallest_singular_value
from .errors import (
    AlgorithmFailure,
    CartanValidationError,
    ClusteringError,
    InputError,
    NotRegularError,
    PreconditionError,
)
from .liealg import LieAlgebraData, LinearMapData, Subspace


# ---------------------------------------------------------------------------
# Builtin algebras
# ---------------------------------------------------------------------------

def _matrix_family(mats, labels, tolerance):
    """Structure constants of a Lie algebra of matrices, in the given basis."""
    n = mats[0].shape[0]
    d = len(mats)
    BM = np.column_stack([m.reshape(-1) for m in mats])
    pinv = np.linalg.pinv(BM)
    c = np.zeros((d, d, d))
    for i in range(d):
        for j in range(i + 1, d):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            coef = pinv @ comm.reshape(-1)
            if np.linalg.norm(BM @ coef - comm.reshape(-1)) > 1e-10 * max(
                1.0, np.linalg.norm(comm)
            ):
                raise InputError("matrix family is not closed under brackets")
            c[i, j] = coef
            c[j, i] = -coef
    L = LieAlgebraData(c, labels, tolerance)
    # Cartan involution X -> -X^T expressed in this basis
    theta_cols = [pinv @ (-m.T).reshape(-1) for m in mats]
    theta = LinearMapData(np.column_stack(theta_cols), "theta: X -> -X^T")
    return L, theta


def _sl_basis(n):
    mats, labels = [], []
    for k in range(n - 1):
        h = np.zeros((n, n))
        h[k, k] = 1.0
        h[k + 1, k + 1] = -1.0
        mats.append(h)
        labels.append(f"H{k + 1}")
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n))
            e[i, j] = 1.0
            mats.append(e)
            labels.append(f"E{i + 1}{j + 1}")
    for i in range(n):
        for j in range(i + 1, n):
            f = np.zeros((n, n))
            f[j, i] = 1.0
            mats.append(f)
            labels.append(f"F{i + 1}{j + 1}")
    return mats, labels


def _sl2_basis():
    # order H, E, F so that k = span(E - F) sits at indices (1, 2)
    H = np.diag([1.0, -1.0])
    E = np.array([[0.0, 1.0], [0.0, 0.0]])
    F = np.array([[0.0, 0.0], [1.0, 0.0]])
    return [H, E, F], ["H", "E", "F"]


def _so_pq_basis(p, q):
    n = p + q
    mats, labels = [], []
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n))
            if j < p or i >= p:
                m[i, j] = 1.0
                m[j, i] = -1.0
                labels.append(f"R{i + 1}{j + 1}")
            else:
                m[i, j] = 1.0
                m[j, i] = 1.0
                labels.append(f"B{i + 1}{j + 1}")
            mats.append(m)
    return mats, labels


def builtin_algebra(name, params=()):
    """Builtin families: sl[n], so_pq[p,q], heisenberg[odd dim], abelian[n],
    borel_sl2[]. Returns (algebra, theta) with theta=None for the
    non-semisimple families."""
    params = [int(x) for x in params]
    tol = liealg.DEFAULT_TOLERANCE
    if name == "sl":
        if len(params) != 1 or params[0] < 2:
            raise InputError("sl expects one parameter n >= 2")
        n = params[0]
        mats, labels = _sl2_basis() if n == 2 else _sl_basis(n)
        return _matrix_family(mats, labels, tol)
    if name == "so_pq":
        if len(params) != 2 or params[0] < 0 or params[1] < 0 or params[0] + params[1] < 3:
            raise InputError("so_pq expects parameters p, q >= 0 with p + q >= 3")
        mats, labels = _so_pq_basis(params[0], params[1])
        return _matrix_family(mats, labels, tol)
    if name == "heisenberg":
        if len(params) != 1 or params[0] < 3 or params[0] % 2 == 0:
            raise InputError("heisenberg expects one odd parameter dim >= 3")
        d = params[0]
        k = (d - 1) // 2
        c = np.zeros((d, d, d))
        for i in range(k):
            c[i, k + i, d - 1] = 1.0
            c[k + i, i, d - 1] = -1.0
        labels = [f"X{i + 1}" for i in range(k)] + [f"Y{i + 1}" for i in range(k)] + ["Z"]
        return LieAlgebraData(c, labels, tol), None
    if name == "abelian":
        if len(params) != 1 or params[0] < 1:
            raise InputError("abelian expects one parameter n >= 1")
        n = params[0]
        return LieAlgebraData(np.zeros((n, n, n)), None, tol), None
    if name == "borel_sl2":
        if params not in ([], [2]):
            raise InputError("borel_sl2 takes no parameters")
        c = np.zeros((2, 2, 2))
        c[0, 1, 1] = 1.0
        c[1, 0, 1] = -1.0
        return LieAlgebraData(c, ["A", "E"], tol), None
    raise InputError(f"unknown builtin algebra {name!r}")


# ---------------------------------------------------------------------------
# Cartan data
# ---------------------------------------------------------------------------

@dataclass
class CartanData:
    algebra: LieAlgebraData
    theta: LinearMapData
    k: Subspace
    p: Subspace
    b_theta: np.ndarray


def validate_cartan(L, theta):
    """Validate a candidate Cartan involution and extract the eigenspace
    decomposition and the inner product B_theta.

    Raises CartanValidationError naming the first failed invariant, or
    PreconditionError if L is not semisimple.
    """
    inv = liealg.structure_invariants(L)
    if not inv.semisimple:
        raise PreconditionError("validate_cartan requires a semisimple algebra")
    T = theta.matrix if isinstance(theta, LinearMapData) else np.asarray(theta, dtype=float)
    if T.shape != (L.dim, L.dim):
        raise InputError(f"theta must be {L.dim} x {L.dim}")
    tol = L.tolerance
    d = L.dim

    res = float(np.abs(T @ T - np.eye(d)).max())
    if res > tol * (1.0 + np.abs(T).max()) ** 2:
        raise CartanValidationError("theta is not an involution", res)

    c = L.structure_constants
    lhs = np.einsum("ka,ija->ijk", T, c)
    rhs = np.einsum("ai,bj,abk->ijk", T, T, c)
    res = float(np.abs(lhs - rhs).max())
    scale = (1.0 + float(np.abs(c).max())) * (1.0 + float(np.abs(T).max())) ** 2
    if res > tol * scale:
        raise CartanValidationError("theta is not an automorphism", res)

    k = Subspace(nullspace(T - np.eye(d), tol), d, tol)
    p = Subspace(nullspace(T + np.eye(d), tol), d, tol)
    if k.rank + p.rank != d:
        raise CartanValidationError("eigenspaces of theta do not fill the algebra", k.rank + p.rank)

    pairs = [(k, k, k), (k, p, p), (p, p, k)]
    names = ["[k,k] in k", "[k,p] in p", "[p,p] in k"]
    for (s1, s2, target), nm in zip(pairs, names):
        br = liealg.subspace_bracket(L, s1, s2)
        if not target.contains_subspace(br, 100 * tol):
            raise CartanValidationError(f"bracket relation {nm} fails", br.rank)

    B = liealg.killing_form(L)
    b_theta = -B @ T
    res = float(np.abs(b_theta - b_theta.T).max())
    if res > tol * (1.0 + np.abs(b_theta).max()):
        raise CartanValidationError("B_theta is not symmetric", res)
    b_theta = 0.5 * (b_theta + b_theta.T)
    eigs = np.linalg.eigvalsh(b_theta)
    if eigs[0] <= tol * max(1.0, eigs[-1]):
        raise CartanValidationError("B_theta is not positive definite", float(eigs[0]))

    return CartanData(algebra=L, theta=LinearMapData(T, "Cartan involution"), k=k, p=p, b_theta=b_theta)


def maximal_abelian_subspace(C, seed=42, retries=8):
    """A maximal abelian subspace a of p: the centralizer in p of a generic
    element, verified abelian and self-centralizing; seeded retries."""
    L = C.algebra
    rng = rng_from_seed(seed)
    for _ in range(retries):
        v = C.p.basis @ rng.standard_normal(C.p.rank) if C.p.rank else np.zeros(L.dim)
        if C.p.rank == 0:
            return Subspace.zero(L.dim, L.tolerance)
        A = Subspace(v, L.dim, L.tolerance)
        a = liealg.subspace_operator(L, "centralizer", A, C.p)
        if liealg.subspace_bracket(L, a, a).rank != 0:
            continue
        if not liealg.subspace_operator(L, "centralizer", a, C.p).same_as(a, 100 * L.tolerance):
            continue
        return a
    raise AlgorithmFailure("maximal_abelian_subspace: retries exhausted")


# ---------------------------------------------------------------------------
# Restricted roots
# ---------------------------------------------------------------------------

@dataclass
class RootRecord:
    functional: np.ndarray  # coordinates with respect to the basis of a
    space: Subspace
    multiplicity: int


@dataclass
class RootDecomposition:
    a: Subspace
    roots: list
    l0: Subspace
    radius: float


def _simultaneous_eigenspaces(ops, radius):
    """Joint eigen-decomposition of commuting symmetric operators by
    recursive eigenvalue-cluster refinement.

    Returns a list of (orthonormal basis, eigenvalue tuple). Raises
    ClusteringError when two clusters approach within 10x the radius.
    """
    d = ops[0].shape[0]
    blocks = [(np.eye(d), ())]
    for M in ops:
        refined = []
        for basis, vals in blocks:
            S = basis.T @ M @ basis
            S = 0.5 * (S + S.T)
            w, U = np.linalg.eigh(S)
            idx_clusters = []
            start = 0
            for i in range(1, len(w) + 1):
                if i == len(w) or w[i] - w[i - 1] > radius:
                    idx_clusters.append(np.arange(start, i))
                    start = i
            centers = [float(w[idx].mean()) for idx in idx_clusters]
            for b1 in range(len(centers)):
                for b2 in range(b1 + 1, len(centers)):
                    gap = abs(centers[b1] - centers[b2])
                    if gap < 10 * radius:
                        raise ClusteringError(
                            f"ambiguous eigenvalue clusters: centers {centers[b1]:.6g} and "
                            f"{centers[b2]:.6g} are {gap:.3e} apart (radius {radius:.3e})"
                        )
            for idx, center in zip(idx_clusters, centers):
                refined.append((basis @ U[:, idx], vals + (center,)))
        blocks = refined
    return blocks


def restricted_roots(C, a):
    """Restricted-root decomposition of the commuting family {ad A : A in a}.

    Operators are symmetrized in a B_theta-orthonormal frame; joint
    eigenvalues are clustered with radius 10 * tolerance into root
    functionals (coordinates with respect to the basis of a).
    """
    L = C.algebra
    tol = L.tolerance
    radius = 10.0 * tol
    d = L.dim
    if a.rank == 0:
        return RootDecomposition(a=a, roots=[], l0=Subspace.full(d, tol), radius=radius)

    T = np.linalg.cholesky(C.b_theta)
    ops = []
    for j in range(a.rank):
        P = L.ad(a.basis[:, j])
        # operator in the B_theta-orthonormal frame: T^T P T^{-T}
        M = T.T @ scipy.linalg.solve_triangular(T, P.T, lower=True).T
        asym = float(np.abs(M - M.T).max())
        if asym > 1e-6 * max(1.0, np.abs(M).max()):
            raise ClusteringError(f"ad(a) is not B_theta-symmetric (residual {asym:.3e})")
        ops.append(0.5 * (M + M.T))

    blocks = _simultaneous_eigenspaces(ops, radius)

    roots = []
    l0_cols = []
    for basis_on, vals in blocks:
        lam = np.array(vals)
        # back to original coordinates: x = T^{-T} y
        cols = scipy.linalg.solve_triangular(T, basis_on, lower=True, trans="T")
        if np.max(np.abs(lam)) <= radius:
            l0_cols.append(cols)
        else:
            roots.append(
                RootRecord(
                    functional=lam,
                    space=Subspace(cols, d, tol),
                    multiplicity=basis_on.shape[1],
                )
            )
    if not l0_cols:
        raise ClusteringError("no zero joint eigenvalue: a does not centralize itself")
    l0 = Subspace(np.hstack(l0_cols), d, tol)
    total = sum(r.multiplicity for r in roots) + l0.rank
    if total != d:
        raise AlgorithmFailure(f"root multiplicities sum to {total}, expected {d}")
    roots.sort(key=lambda r: tuple(np.round(r.functional, 9)))
    return RootDecomposition(a=a, roots=roots, l0=l0, radius=radius)


# ---------------------------------------------------------------------------
# Iwasawa assembly
# ---------------------------------------------------------------------------

@dataclass
class IwasawaData:
    cartan: CartanData
    a: Subspace
    roots: list
    positive_roots: list
    n: Subspace
    n_minus: Subspace
    m: Subspace
    q: Subspace
    borel: Subspace
    split: bool
    regular: np.ndarray = field(default=None, repr=False)


def _theta_image(C, S):
    return Subspace(C.theta.matrix @ S.basis, C.algebra.dim, C.algebra.tolerance)


def iwasawa_assemble(C, decomposition, regular):
    """Assemble the Iwasawa data for the positive system cut out by a regular
    covector; all structural invariants are verified."""
    L = C.algebra
    tol = L.tolerance
    a = decomposition.a
    roots = decomposition.roots
    regular = np.asarray(regular, dtype=float).reshape(-1)
    if regular.shape[0] != a.rank:
        raise InputError("regular covector has wrong length")

    pairing = [float(np.dot(r.functional, regular)) for r in roots]
    if any(abs(t) <= tol for t in pairing):
        raise NotRegularError("regular covector hits a root hyperplane")
    positive = [i for i, t in enumerate(pairing) if t > 0]
    negative = [i for i, t in enumerate(pairing) if t < 0]
    if len(positive) != len(negative):
        raise AlgorithmFailure("positive and negative systems are unbalanced")

    n_cols = [roots[i].space.basis for i in positive]
    n = Subspace(np.hstack(n_cols), L.dim, tol) if n_cols else Subspace.zero(L.dim, tol)
    n_minus = _theta_image(C, n)
    m = liealg.subspace_operator(L, "centralizer", a, C.k)
    q = m.union(a, n)
    borel = a.union(n)

    _verify_iwasawa(C, decomposition, n, n_minus, m, q, borel)
    return IwasawaData(
        cartan=C,
        a=a,
        roots=roots,
        positive_roots=positive,
        n=n,
        n_minus=n_minus,
        m=m,
        q=q,
        borel=borel,
        split=(m.rank == 0),
        regular=regular,
    )


def _match_root(roots, functional, radius):
    for i, r in enumerate(roots):
        if np.max(np.abs(r.functional - functional)) <= radius:
            return i
    return None


def _verify_iwasawa(C, decomposition, n, n_minus, m, q, borel):
    L = C.algebra
    tol = L.tolerance
    a = decomposition.a
    roots = decomposition.roots
    radius = decomposition.radius

    if liealg.subspace_bracket(L, a, a).rank != 0:
        raise AlgorithmFailure("a is not abelian")
    if C.k.rank + a.rank + n.rank != L.dim:
        raise AlgorithmFailure(
            f"dim k + dim a + dim n = {C.k.rank + a.rank + n.rank} != {L.dim}"
        )
    if m.union(a).rank != decomposition.l0.rank:
        raise AlgorithmFailure("l0 is not m + a")
    # theta maps each root space onto the space of the negated functional
    for r in roots:
        j = _match_root(roots, -r.functional, radius)
        if j is None:
            raise AlgorithmFailure("root set is not symmetric under negation")
        img = _theta_image(C, r.space)
        if not roots[j].space.same_as(img, 1e-6):
            raise AlgorithmFailure("theta does not map a root space onto its negative")
    # l0 normalizes n
    if n.rank:
        l0n = liealg.subspace_bracket(L, decomposition.l0, n)
        if not n.contains_subspace(l0n, 1e-6):
            raise AlgorithmFailure("l0 does not normalize n")
    if not liealg.is_nilpotent_subalgebra(L, n):
        raise AlgorithmFailure("n is not nilpotent")
    if not liealg.is_solvable_subalgebra(L, borel):
        raise AlgorithmFailure("a + n is not solvable")


def iwasawa_decompose(L, theta, seed=42, retries=8):
    """Full pipeline: validate theta, find a, compute restricted roots, and
    assemble with a seeded random regular covector (fresh draw on a wall
    hit)."""
    C = validate_cartan(L, theta)
    a = maximal_abelian_subspace(C, seed=seed)
    decomposition = restricted_roots(C, a)
    rng = rng_from_seed(seed + 1)
    for _ in range(retries):
        reg = rng.standard_normal(a.rank) if a.rank else np.zeros(0)
        nrm = np.linalg.norm(reg)
        if nrm > 0:
            reg = reg / nrm
        try:
            return iwasawa_assemble(C, decomposition, reg)
        except NotRegularError:
            continue
    raise AlgorithmFailure("iwasawa_decompose: no regular covector found")


# ---------------------------------------------------------------------------
# Appendix-style structural verification
# ---------------------------------------------------------------------------

@dataclass
class AppendixCReport:
    span_full: bool
    span_samples_used: int
    bracket_contains_ma: bool
    centralizers_trivial: bool
    normalizer_k_equals_k: bool
    residuals: dict
    margins: dict

    def all_pass(self):
        return (
            self.span_full
            and self.bracket_contains_ma
            and self.centralizers_trivial
            and self.normalizer_k_equals_k
        )


def _require_no_compact_factor(L, seed):
    B = liealg.killing_form(L)
    for ideal in liealg.simple_ideals(L, seed=seed):
        sub = ideal.basis.T @ B @ ideal.basis
        eigs = np.linalg.eigvalsh(0.5 * (sub + sub.T))
        if eigs[-1] <= L.tolerance * max(1.0, abs(eigs[0])):
            raise PreconditionError(
                "algebra has a compact simple factor (Killing form negative definite on it)"
            )


def verify_appendix_c(I, samples=8, seed=42):
    """Four structural checks on an Iwasawa decomposition:

    (a) conjugates of the Borel nilradical span the whole algebra;
    (b) m + a is contained in [n, theta n];
    (c) Z_m(n) = Z_a(n) = 0;
    (d) the normalizer of k in l equals k.

    Precondition: semisimple with no compact simple factor.
    """
    L = I.cartan.algebra
    tol = L.tolerance
    _require_no_compact_factor(L, seed)

    rng = rng_from_seed(seed)
    # (a) span of conjugated nilradicals
    cols = [I.n.basis]
    used = 0
    rank = I.n.rank
    for _ in range(samples):
        if rank == L.dim:
            break
        X = rng.standard_normal(L.dim)
        X = X / np.linalg.norm(X)
        g = scipy.linalg.expm(L.ad(X))
        cols.append(g @ I.n.basis)
        used += 1
        rank = liealg.Subspace(np.hstack(cols), L.dim, tol).rank
    span_full = rank == L.dim

    # (b) m + a inside [n, theta n]
    bracket = liealg.subspace_bracket(L, I.n, I.n_minus)
    ma = I.m.union(I.a)
    if ma.rank == 0:
        bracket_res = 0.0
    else:
        bracket_res = max(bracket.residual_of(ma.basis[:, j]) for j in range(ma.rank))
    bracket_ok = bracket_res <= 1e-6

    # (c) trivial centralizers of n in m and in a
    zm = liealg.subspace_operator(L, "centralizer", I.n, I.m)
    za = liealg.subspace_operator(L, "centralizer", I.n, I.a)
    margin_m = liealg.centralizer_margin(L, I.n, I.m)
    margin_a = liealg.centralizer_margin(L, I.n, I.a)
    centralizers_ok = zm.rank == 0 and za.rank == 0

    # (d) N_l(k) = k
    nk = liealg.subspace_operator(L, "normalizer", I.cartan.k, Subspace.full(L.dim, tol))
    normalizer_ok = nk.same_as(I.cartan.k, 1e-6)

    return AppendixCReport(
        span_full=bool(span_full),
        span_samples_used=used,
        bracket_contains_ma=bool(bracket_ok),
        centralizers_trivial=bool(centralizers_ok),
        normalizer_k_equals_k=bool(normalizer_ok),
        residuals={"bracket_ma": float(bracket_res)},
        margins={"Z_m(n)": float(margin_m), "Z_a(n)": float(margin_a)},
    )
