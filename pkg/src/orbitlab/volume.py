"""Weighted determinants and volume densities.

Given nondecreasing weights W with eigenspace flag V_1 + ... + V_l, the
parabolic group Q_W consists of block-lower-triangular invertible matrices,
factoring as q = g u with g block-diagonal and u unipotent. det_W is the
positive homomorphism q -> prod_i |det g_i|^{w_i}, with differential
tr_W(A) = trace(A W).

An inner product h is gauged against a background by the unique lower
triangular q with positive diagonal satisfying gram(h) = (q q^T)^{-1} in a
background-orthonormal basis; the weighted volume density is
v_W(h) = det_{-W}(q) for definite h and 0 otherwise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateError, InputError, InputShapeError, PreconditionError, StratumError
from .liealg import DEFAULT_TOLERANCE, LinearMapData, bracket_apply, is_derivation


class WeightVector:
    """Nondecreasing weights w_1 <= ... <= w_d with the block flag induced by
    equal weights (equality up to the tolerance)."""

    def __init__(self, weights, tolerance=DEFAULT_TOLERANCE):
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise InputError("weights must be nonempty")
        if not np.all(np.isfinite(w)):
            raise InputError("weights must be finite")
        if np.any(np.diff(w) < -tolerance):
            raise InputError("weights must be nondecreasing")
        self.weights = w
        self.tolerance = float(tolerance)
        blocks = []
        start = 0
        for i in range(1, w.size + 1):
            if i == w.size or w[i] - w[i - 1] > tolerance:
                blocks.append(range(start, i))
                start = i
        self.eigenspace_flag = blocks
        self.block_weights = np.array([w[b.start] for b in blocks])

    @property
    def dim(self):
        return self.weights.size

    @property
    def all_positive(self):
        return bool(np.all(self.weights > 0))

    def __repr__(self):
        return f"WeightVector({self.weights.tolist()})"


class InnerProductData:
    """A positive semi-definite inner product (Gram matrix) on R^d."""

    def __init__(self, gram, tolerance=DEFAULT_TOLERANCE):
        G = np.asarray(gram, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise InputShapeError(f"gram must be square, got {G.shape}")
        scale = max(1.0, float(np.abs(G).max()))
        if float(np.abs(G - G.T).max()) > tolerance * scale:
            raise InputError("gram matrix is not symmetric")
        G = 0.5 * (G + G.T)
        eigs = np.linalg.eigvalsh(G)
        if eigs[0] < -tolerance * scale:
            raise InputError(f"gram matrix is not positive semi-definite (min eig {eigs[0]:.3e})")
        self.dim = G.shape[0]
        self.gram = G
        self.tolerance = float(tolerance)
        self.eigenvalues = eigs
        self.definite = bool(eigs[0] > tolerance)

    @classmethod
    def identity(cls, dim, tolerance=DEFAULT_TOLERANCE):
        return cls(np.eye(dim), tolerance)

    def __repr__(self):
        return f"InnerProductData(dim={self.dim}, definite={self.definite})"


class TriangularGauge:
    """Lower-triangular gauge with strictly positive diagonal."""

    def __init__(self, q, tolerance=DEFAULT_TOLERANCE):
        q = np.asarray(q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise InputShapeError(f"gauge must be square, got {q.shape}")
        scale = max(1.0, float(np.abs(q).max()))
        if float(np.abs(np.triu(q, 1)).max(initial=0.0)) > tolerance * scale:
            raise InputError("gauge is not lower triangular")
        if np.any(np.diag(q) <= 0):
            raise InputError("gauge diagonal must be strictly positive")
        self.q = np.tril(q)
        self.tolerance = float(tolerance)

    @property
    def diagonal(self):
        return np.diag(self.q)


@dataclass
class StratumLabel:
    """Symmetric label beta with its normalization beta+ = beta/tr(beta^2) + Id."""

    beta: np.ndarray
    beta_plus: np.ndarray

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.beta_plus = np.asarray(self.beta_plus, dtype=float)
        d = self.beta.shape[0]
        if self.beta.shape != (d, d) or self.beta_plus.shape != (d, d):
            raise InputShapeError("stratum label matrices must be square and equal-sized")
        t2 = float(np.trace(self.beta @ self.beta))
        if t2 <= DEFAULT_TOLERANCE:
            raise InputError("trace(beta^2) vanishes")
        if np.abs(self.beta / t2 + np.eye(d) - self.beta_plus).max() > 1e-8:
            raise StratumError("beta_plus is not beta / trace(beta^2) + Id")
        if np.linalg.eigvalsh(0.5 * (self.beta_plus + self.beta_plus.T))[0] <= 0:
            raise StratumError("beta_plus is not positive definite")
        tr_check = abs(np.trace(self.beta_plus) - (np.trace(self.beta) / t2 + d))
        if tr_check > 1e-8:
            raise StratumError("trace consistency of the stratum label fails")


@dataclass
class ParabolicFactorization:
    in_Q: bool
    g_part: np.ndarray | None
    u_part: np.ndarray | None


def _check_square(q, W):
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise InputShapeError(f"expected a square matrix, got {q.shape}")
    if q.shape[0] != W.dim:
        raise InputShapeError(f"matrix size {q.shape[0]} does not match weights ({W.dim})")
    return q


def _is_block_lower(q, W, tol):
    scale = max(1.0, float(np.abs(q).max()))
    for bi, b in enumerate(W.eigenspace_flag):
        for b2 in W.eigenspace_flag[bi + 1 :]:
            if np.abs(q[np.ix_(b, b2)]).max(initial=0.0) > tol * scale:
                return False
    return True


def parabolic_membership(q, W):
    """Membership of q in Q_W, with the block factorization q = g u when it
    holds (g block-diagonal, u unipotent block-lower)."""
    q = _check_square(q, W)
    sv = np.linalg.svd(q, compute_uv=False)
    if sv[-1] <= W.tolerance * max(1.0, sv[0]):
        raise InputError("matrix is singular")
    if not _is_block_lower(q, W, W.tolerance):
        return ParabolicFactorization(in_Q=False, g_part=None, u_part=None)
    d = W.dim
    g = np.zeros((d, d))
    for b in W.eigenspace_flag:
        g[np.ix_(b, b)] = q[np.ix_(b, b)]
    qm = _mask_block_lower(q, W)
    u = np.linalg.solve(g, qm)
    residual = np.abs(g @ u - qm).max()
    if residual > 1e3 * W.tolerance * max(1.0, np.abs(q).max()):
        raise InputError(f"block factorization failed (residual {residual:.3e})")
    return ParabolicFactorization(in_Q=True, g_part=g, u_part=u)


def _mask_block_lower(q, W):
    out = np.zeros_like(q)
    for bi, b in enumerate(W.eigenspace_flag):
        for b2 in W.eigenspace_flag[: bi + 1]:
            out[np.ix_(b, b2)] = q[np.ix_(b, b2)]
    return out


def tr_weighted(A, W):
    """trace(A W) for A in the parabolic subalgebra q_W (block lower)."""
    A = _check_square(A, W)
    if not _is_block_lower(A, W, W.tolerance):
        raise PreconditionError("matrix is not block-lower-triangular for these weights")
    return float(np.trace(A @ np.diag(W.weights)))


def _log_det_weighted(q, W):
    fac = parabolic_membership(q, W)
    if not fac.in_Q:
        raise PreconditionError("matrix is not in the parabolic group of these weights")
    logv = 0.0
    for b, w in zip(W.eigenspace_flag, W.block_weights):
        sign, logdet = np.linalg.slogdet(fac.g_part[np.ix_(b, b)])
        if sign == 0:
            raise InputError("singular diagonal block")
        logv += w * logdet
    return logv


def det_weighted(q, W):
    """Weighted determinant prod_i |det g_i|^{w_i} on Q_W; multiplicative,
    equal to 1 on K_W."""
    return float(np.exp(_log_det_weighted(q, W)))


def gauge_lower_triangular(h, background, basis_order=None):
    """Canonical gauge: the lower-triangular q with positive diagonal and
    gram(h) = (q q^T)^{-1} in the background-orthonormal basis.

    The background is orthonormalized by a flag-preserving (upper-triangular)
    Cholesky transformation. With a basis_order permutation, both forms are
    reindexed first and q refers to the permuted basis.
    """
    if not isinstance(h, InnerProductData):
        h = InnerProductData(h)
    if not isinstance(background, InnerProductData):
        background = InnerProductData(background)
    if h.dim != background.dim:
        raise InputShapeError("inner product and background dimensions differ")
    if not background.definite:
        raise InputError("background inner product must be positive definite")
    if not h.definite:
        raise DegenerateError("inner product is degenerate; the gauge does not exist")
    d = h.dim
    G = h.gram
    Gb = background.gram
    if basis_order is not None:
        order = list(basis_order)
        if sorted(order) != list(range(d)):
            raise InputError("basis_order must be a permutation of 0..d-1")
        G = G[np.ix_(order, order)]
        Gb = Gb[np.ix_(order, order)]

    Lb = np.linalg.cholesky(Gb)
    # H = gram of h in the background-orthonormal basis: Lb^{-1} G Lb^{-T}
    tmp = scipy.linalg.solve_triangular(Lb, G, lower=True)
    H = scipy.linalg.solve_triangular(Lb, tmp.T, lower=True).T
    H = 0.5 * (H + H.T)

    # reverse Cholesky H = R^T R with R lower triangular, then q = R^{-1}
    P = np.eye(d)[::-1]
    Lrev = np.linalg.cholesky(P @ H @ P)
    R = P @ Lrev.T @ P
    q = scipy.linalg.solve_triangular(R, np.eye(d), lower=True)

    residual = float(np.abs(R.T @ R - H).max())
    cond = h.eigenvalues[-1] / h.eigenvalues[0]
    bound = max(h.tolerance, 1e2 * np.finfo(float).eps * cond) * max(1.0, np.abs(H).max())
    if residual > bound:
        raise DegenerateError(f"triangular factorization residual {residual:.3e} too large")
    return TriangularGauge(q, h.tolerance)


def v_weighted(h, background, W, basis_order=None):
    """Weighted volume density: det_{-W} of the canonical gauge for definite
    h, and 0 on degenerate h (the continuous extension when W > 0)."""
    if not isinstance(h, InnerProductData):
        h = InnerProductData(h)
    if not isinstance(W, WeightVector):
        W = WeightVector(W)
    if h.dim != W.dim:
        raise InputShapeError("inner product and weights have different dimensions")
    if not h.definite:
        if not W.all_positive:
            warnings.warn(
                "degenerate inner product with non-positive weights: returning 0, "
                "but v_W has no continuous extension here",
                stacklevel=2,
            )
        return 0.0
    gauge = gauge_lower_triangular(h, background, basis_order=basis_order)
    return float(np.exp(-np.dot(W.weights, np.log(gauge.diagonal))))


def orbit_density_vN(h):
    """Unweighted volume density sqrt(det gram(h)); equals v_Id on definite
    inner products and vanishes on degenerate ones."""
    if not isinstance(h, InnerProductData):
        h = InnerProductData(h)
    if h.definite:
        sign, logdet = np.linalg.slogdet(h.gram)
        return float(np.exp(0.5 * logdet))
    return float(np.sqrt(max(float(np.prod(h.eigenvalues)), 0.0)))


def beta_plus_from_beta(beta, algebra=None):
    """Normalize a stratum label: beta+ = beta / trace(beta^2) + Id, verified
    positive definite (and a derivation of the supplied nilpotent algebra)."""
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 2 or beta.shape[0] != beta.shape[1]:
        raise InputShapeError(f"beta must be square, got {beta.shape}")
    if np.abs(beta - beta.T).max() > 1e-9 * max(1.0, np.abs(beta).max()):
        raise InputError("beta must be symmetric")
    t2 = float(np.trace(beta @ beta))
    if t2 <= DEFAULT_TOLERANCE:
        raise InputError("trace(beta^2) is zero; the label is trivial")
    beta_plus = beta / t2 + np.eye(beta.shape[0])
    if np.linalg.eigvalsh(0.5 * (beta_plus + beta_plus.T))[0] <= DEFAULT_TOLERANCE:
        raise StratumError("beta_plus is not positive definite")
    if algebra is not None and not is_derivation(algebra, beta_plus):
        raise StratumError("beta_plus is not a derivation of the supplied algebra")
    return StratumLabel(beta=beta, beta_plus=beta_plus)


def heisenberg_stratum_label(dim):
    """Curated label for the Heisenberg algebra of odd dimension 2k+1:
    beta = diag(-1/k, ..., -1/k, 1)."""
    if dim < 3 or dim % 2 == 0:
        raise InputError("Heisenberg dimension must be odd and >= 3")
    k = (dim - 1) // 2
    beta = np.diag([-1.0 / k] * (2 * k) + [1.0])
    return beta_plus_from_beta(beta)


def weights_from_label(label, tolerance=DEFAULT_TOLERANCE):
    """Weights for v_{beta+}: the diagonal of beta+, which must be diagonal
    and nondecreasing in the working basis (re-gauge otherwise)."""
    bp = label.beta_plus
    off = bp - np.diag(np.diag(bp))
    if np.abs(off).max() > tolerance * max(1.0, np.abs(bp).max()):
        raise InputError(
            "beta_plus is not diagonal in this basis; re-gauge the label before "
            "extracting weights"
        )
    diag = np.diag(bp)
    if np.any(np.diff(diag) < -tolerance):
        raise InputError("beta_plus diagonal is not nondecreasing; reorder the basis")
    return WeightVector(diag, tolerance)


@dataclass
class EquivarianceResult:
    lhs: float
    rhs: float
    passed: bool


def _automorphism_residual(algebra, phi):
    c = algebra.structure_constants
    lhs = np.einsum("ai,bj,abk->ijk", phi, phi, c)
    rhs = np.einsum("ka,ija->ijk", phi, c)
    return float(np.abs(lhs - rhs).max())


def equivariance_check(h, phi, algebra, label, background):
    """Check v_{beta+}(phi . h) = det(phi)^{-1} v_{beta+}(h) for an
    automorphism phi of the algebra."""
    phi = phi.matrix if isinstance(phi, LinearMapData) else np.asarray(phi, dtype=float)
    if not isinstance(h, InnerProductData):
        h = InnerProductData(h)
    if not h.definite:
        raise PreconditionError("equivariance_check requires a definite inner product")
    scale = (1.0 + float(np.abs(phi).max())) ** 2 * (
        1.0 + float(np.abs(algebra.structure_constants).max())
    )
    res = _automorphism_residual(algebra, phi)
    if res > algebra.tolerance * scale:
        raise PreconditionError(f"phi is not an automorphism (residual {res:.3e})")

    W = weights_from_label(label, algebra.tolerance)
    phi_inv = np.linalg.inv(phi)
    h2 = InnerProductData(phi_inv.T @ h.gram @ phi_inv, h.tolerance)
    lhs = v_weighted(h2, background, W)
    rhs = v_weighted(h, background, W) / np.linalg.det(phi)
    passed = abs(lhs - rhs) <= algebra.tolerance * max(1.0, abs(rhs)) * 10
    return EquivarianceResult(lhs=float(lhs), rhs=float(rhs), passed=bool(passed))


# ---------------------------------------------------------------------------
# Seeded property batches (used by the CLI verify command and the acceptance
# suite)
# ---------------------------------------------------------------------------

def _random_weightvector(rng, d):
    pool = rng.choice([-1.0, 0.5, 1.0, 1.5, 2.0, 3.0], size=d)
    return WeightVector(np.sort(pool))


def _random_positive_weightvector(rng, d):
    pool = rng.choice([0.5, 1.0, 1.5, 2.0, 3.0], size=d)
    return WeightVector(np.sort(pool))


def _random_block_lower(rng, W):
    d = W.dim
    q = rng.standard_normal((d, d))
    q = _mask_block_lower(q, W) + 3.0 * np.eye(d)
    return q


def _random_k_element(rng, W):
    blocks = []
    for b in W.eigenspace_flag:
        m = len(b)
        Qr, _ = np.linalg.qr(rng.standard_normal((m, m)))
        blocks.append(Qr)
    return scipy.linalg.block_diag(*blocks)


def _gram_from_gauge(q):
    """(q q^T)^{-1} computed by triangular solves (stable for extreme
    diagonals)."""
    qinv = scipy.linalg.solve_triangular(q, np.eye(q.shape[0]), lower=True)
    return qinv.T @ qinv


def check_multiplicativity(seed=42, samples=1000, max_dim=8):
    """Relative error of det_W(q1 q2) against det_W(q1) det_W(q2) over random
    parabolic pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        d = int(rng.integers(2, max_dim + 1))
        W = _random_weightvector(rng, d)
        q1 = _random_block_lower(rng, W)
        q2 = _random_block_lower(rng, W)
        v12 = det_weighted(q1 @ q2, W)
        v1v2 = det_weighted(q1, W) * det_weighted(q2, W)
        worst = max(worst, abs(v12 - v1v2) / abs(v1v2))
    return {"max_rel_error": worst, "samples": samples, "pass": worst <= 1e-8}


def check_gauge_invariance(seed=42, samples=500, max_dim=8):
    """det_{-W} agreement between a canonical gauge q and q k for random
    k in K_W."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        d = int(rng.integers(2, max_dim + 1))
        W = _random_positive_weightvector(rng, d)
        q0 = np.tril(rng.standard_normal((d, d))) + 2.0 * np.eye(d)
        h = InnerProductData(_gram_from_gauge(q0))
        q = gauge_lower_triangular(h, InnerProductData.identity(d)).q
        k = _random_k_element(rng, W)
        v1 = np.exp(-_log_det_weighted(q, W))
        v2 = np.exp(-_log_det_weighted(q @ k, W))
        worst = max(worst, abs(v1 - v2) / abs(v1))
    return {"max_rel_error": worst, "samples": samples, "pass": worst <= 1e-8}


def check_continuity(seed=42, families=20, dim=4):
    """Along degenerating gauge paths with positive weights, v_W decays
    monotonically below 1e-6; with a negative weight it diverges."""
    rng = np.random.default_rng(seed)
    ok = True
    details = []
    for _ in range(families):
        W = _random_positive_weightvector(rng, dim)
        q0 = np.tril(rng.standard_normal((dim, dim))) + 2.0 * np.eye(dim)
        i_star = int(rng.integers(0, dim))
        w_star = W.weights[i_star]
        v0 = v_weighted(
            InnerProductData(_gram_from_gauge(q0), tolerance=1e-14),
            InnerProductData.identity(dim, tolerance=1e-14),
            W,
        )
        t_star = (np.log(max(v0, 1e-30)) + 6.0 * np.log(10.0)) / w_star
        ts = np.linspace(t_star + 0.5, t_star + 3.0, 8)
        vals = []
        for t in ts:
            D = np.eye(dim)
            D[i_star, i_star] = np.exp(t)
            qt = q0 @ D
            h = InnerProductData(_gram_from_gauge(qt), tolerance=1e-14)
            vals.append(v_weighted(h, InnerProductData.identity(dim, tolerance=1e-14), W))
        tail_small = all(v < 1e-6 for v in vals)
        monotone = all(vals[i + 1] <= vals[i] * (1 + 1e-12) for i in range(len(vals) - 1))
        ok = ok and tail_small and monotone
        details.append({"tail_below_1e-6": tail_small, "monotone": monotone})

    # counter-family: a negative weight on the exploding direction diverges
    W = WeightVector(np.array([-1.0] + [1.0] * (dim - 1)))
    q0 = np.eye(dim)
    diverged = []
    for t in (5.0, 10.0, 20.0):
        D = np.eye(dim)
        D[0, 0] = np.exp(t)
        qt = q0 @ D
        h = InnerProductData(_gram_from_gauge(qt), tolerance=1e-30)
        diverged.append(v_weighted(h, InnerProductData.identity(dim, tolerance=1e-30), W))
    diverges = diverged[-1] > 1e6 and diverged[0] < diverged[1] < diverged[2]
    return {"families": families, "pass": bool(ok and diverges), "negative_weight_diverges": bool(diverges)}


def random_heisenberg_automorphism(rng, special=False):
    """A random automorphism of the 3-dim Heisenberg algebra: block matrix
    [[A, 0], [v, det A]]; with special=True, det A = +-1 so det phi = 1."""
    while True:
        A = rng.standard_normal((2, 2))
        det = np.linalg.det(A)
        if abs(det) > 0.2:
            break
    if special:
        A = A / np.sqrt(abs(det))
        det = np.linalg.det(A)
    v = rng.standard_normal(2)
    phi = np.zeros((3, 3))
    phi[:2, :2] = A
    phi[2, :2] = v
    phi[2, 2] = det
    return phi


def check_equivariance(algebra, label, seed=42, samples=50):
    """Automorphism equivariance of v_{beta+} on the 3-dim Heisenberg
    algebra, including exact invariance on the unimodular subgroup."""
    rng = np.random.default_rng(seed)
    bg = InnerProductData.identity(3)
    worst = 0.0
    ok = True
    for s in range(samples):
        q0 = np.tril(rng.standard_normal((3, 3))) + 2.0 * np.eye(3)
        h = InnerProductData(_gram_from_gauge(q0))
        phi = random_heisenberg_automorphism(rng, special=(s % 2 == 0))
        result = equivariance_check(h, phi, algebra, label, bg)
        worst = max(worst, abs(result.lhs - result.rhs) / max(1.0, abs(result.rhs)))
        ok = ok and result.passed
    return {"max_rel_error": worst, "samples": samples, "pass": bool(ok)}
