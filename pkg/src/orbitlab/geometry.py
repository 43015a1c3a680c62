"""Left-invariant Riemannian calculus on a Lie algebra: Ricci curvature from
structure constants and a metric, the mean-curvature element, and nilsoliton
certification (Ric = c Id + D with D a derivation, optionally checked against
a stratum label)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import liealg
from .errors import ConditioningError, InputShapeError, PreconditionError
from .liealg import LieAlgebraData


class MetricData:
    """A positive-definite inner product on a Lie algebra."""

    def __init__(self, algebra, gram):
        if not isinstance(algebra, LieAlgebraData):
            raise InputShapeError("algebra must be a LieAlgebraData")
        G = np.asarray(gram, dtype=float)
        if G.shape != (algebra.dim, algebra.dim):
            raise InputShapeError(f"gram must be {algebra.dim} x {algebra.dim}")
        scale = max(1.0, float(np.abs(G).max()))
        if float(np.abs(G - G.T).max()) > algebra.tolerance * scale:
            raise InputShapeError("gram matrix is not symmetric")
        G = 0.5 * (G + G.T)
        eigs = np.linalg.eigvalsh(G)
        if eigs[0] <= algebra.tolerance:
            raise InputShapeError("metric is not positive definite")
        self.algebra = algebra
        self.gram = G
        self.eigenvalues = eigs

    @property
    def condition_number(self):
        return float(self.eigenvalues[-1] / self.eigenvalues[0])


@dataclass
class SolitonData:
    constant: float
    derivation: np.ndarray
    residual: float
    passed: bool
    label_residual: float | None = None
    label_passed: bool | None = None


@dataclass
class CurvatureReport:
    ricci_endomorphism: np.ndarray
    scalar: float
    mean_curvature_element: np.ndarray
    einstein_residual: float
    soliton: SolitonData | None = None


def mean_curvature_element(L, m):
    """The element H with <H, X>_m = trace(ad X); zero iff L is unimodular."""
    _check_metric(L, m)
    return np.linalg.solve(m.gram, L.ad_traces())


def _check_metric(L, m):
    if not isinstance(m, MetricData) or m.algebra is not L:
        if isinstance(m, MetricData) and m.gram.shape == (L.dim, L.dim):
            return  # a metric built on an identical copy is fine
        raise InputShapeError("metric does not match the algebra")


def _orthonormal_frame_constants(L, m):
    """Structure constants in a gram-orthonormal frame, plus the frame change
    M (columns are frame vectors in the original basis)."""
    Lc = np.linalg.cholesky(m.gram)
    M = scipy.linalg.solve_triangular(Lc, np.eye(L.dim), lower=True).T  # Lc^{-T}
    cf = np.einsum("ia,jb,ijk->abk", M, M, L.structure_constants)
    gamma = np.einsum("abk,kc->abc", cf, Lc)
    return gamma, M, Lc


def ricci_left_invariant(L, m):
    """Ricci endomorphism of the left-invariant metric, from the structure
    constants in a gram-orthonormal frame (mean-curvature term included for
    non-unimodular algebras); scalar curvature and Einstein residual
    |Ric + Id| come along."""
    _check_metric(L, m)
    if m.condition_number > 1e12:
        raise ConditioningError(
            f"metric condition number {m.condition_number:.3e} exceeds 1e12"
        )
    d = L.dim
    gamma, M, Lc = _orthonormal_frame_constants(L, m)

    # ric(a,b) = -1/2 sum <[a,c],[b,c]> + 1/4 sum <[c,d],a><[c,d],b>
    #            - 1/2 B(a,b) - 1/2 (<[H,a],b> + <[H,b],a>)
    ric = -0.5 * np.einsum("acd,bcd->ab", gamma, gamma)
    ric += 0.25 * np.einsum("cda,cdb->ab", gamma, gamma)
    B = np.einsum("acd,bdc->ab", gamma, gamma)
    ric -= 0.5 * 0.5 * (B + B.T)
    H = np.einsum("abb->a", gamma)  # <H, f_a> = trace(ad f_a)
    S = np.einsum("e,eab->ab", H, gamma)  # S[a,b] = <[H, f_a], f_b>
    ric -= 0.5 * (S + S.T)
    ric = 0.5 * (ric + ric.T)

    ric_orig = M @ ric @ Lc.T
    return CurvatureReport(
        ricci_endomorphism=ric_orig,
        scalar=float(np.trace(ric)),
        mean_curvature_element=mean_curvature_element(L, m),
        einstein_residual=float(np.linalg.norm(ric + np.eye(d))),
    )


def nilsoliton_certificate(L, m, label=None, tolerance=None):
    """Best soliton fit Ric = c Id + D over the derivation space of a
    nilpotent algebra, by least squares; the certificate passes when the
    residual is below tolerance * |Ric|.

    With a stratum label, additionally checks the scale-invariant identities
    D / trace(D) = beta+ / trace(beta+) and scal / c = dim - trace(beta+).
    """
    inv = liealg.structure_invariants(L)
    if not inv.nilpotent:
        raise PreconditionError("nilsoliton_certificate requires a nilpotent algebra")
    tol = L.tolerance if tolerance is None else tolerance
    report = ricci_left_invariant(L, m)
    ric = report.ricci_endomorphism
    d = L.dim

    der = liealg.derivations(L)
    cols = [np.eye(d).reshape(-1, 1)]
    if der.rank:
        cols.append(der.basis)
    A = np.hstack(cols)
    x, *_ = np.linalg.lstsq(A, ric.reshape(-1), rcond=None)
    c = float(x[0])
    D = (A[:, 1:] @ x[1:]).reshape(d, d) if der.rank else np.zeros((d, d))
    residual = float(np.linalg.norm(ric - c * np.eye(d) - D))
    norm_ric = float(np.linalg.norm(ric))
    passed = residual <= tol * norm_ric if norm_ric > 0 else residual <= tol

    label_residual = None
    label_passed = None
    if label is not None:
        bp = label.beta_plus
        # compare in the gram-orthonormal frame, where the label lives
        Lc = np.linalg.cholesky(m.gram)
        D_frame = Lc.T @ D @ scipy.linalg.solve_triangular(Lc, np.eye(d), lower=True).T
        tr_d = float(np.trace(D_frame))
        tr_bp = float(np.trace(bp))
        if abs(tr_d) <= tol or abs(c) <= tol:
            label_residual = float("inf")
        else:
            prop = float(np.linalg.norm(D_frame / tr_d - bp / tr_bp))
            scal_identity = abs(report.scalar / c - (d - tr_bp))
            label_residual = max(prop, scal_identity)
        label_passed = bool(label_residual <= 100 * tol)
        passed = bool(passed and label_passed)

    report.soliton = SolitonData(
        constant=c,
        derivation=D,
        residual=residual,
        passed=bool(passed),
        label_residual=label_residual,
        label_passed=label_passed,
    )
    return report
