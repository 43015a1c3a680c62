import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitlab import (
    DegenerateError,
    InputError,
    InnerProductData,
    PreconditionError,
    StratumError,
    WeightVector,
    beta_plus_from_beta,
    builtin_algebra,
    det_weighted,
    equivariance_check,
    gauge_lower_triangular,
    heisenberg_stratum_label,
    orbit_density_vN,
    parabolic_membership,
    tr_weighted,
    v_weighted,
    weights_from_label,
)
from orbitlab.volume import (
    _gram_from_gauge,
    _random_block_lower,
    _random_k_element,
    _random_weightvector,
    check_continuity,
    check_equivariance,
    check_gauge_invariance,
    check_multiplicativity,
    random_heisenberg_automorphism,
)

from helpers import random_definite_gram


# ---------------------------------------------------------------------------
# weights and parabolic membership
# ---------------------------------------------------------------------------

def test_weightvector_blocks():
    W = WeightVector([1.0, 1.0, 2.0, 3.0, 3.0, 3.0])
    assert [list(b) for b in W.eigenspace_flag] == [[0, 1], [2], [3, 4, 5]]
    np.testing.assert_allclose(W.block_weights, [1.0, 2.0, 3.0])


def test_weightvector_rejects_decreasing():
    with pytest.raises(InputError):
        WeightVector([2.0, 1.0])


def test_parabolic_membership_trivial_flag():
    W = WeightVector([1.0, 1.0, 1.0])
    q = np.array([[1.0, 2, 3], [4, 5, 6], [7, 8, 10]])
    fac = parabolic_membership(q, W)
    assert fac.in_Q
    np.testing.assert_allclose(fac.g_part, q)
    np.testing.assert_allclose(fac.u_part, np.eye(3), atol=1e-12)


def test_parabolic_membership_forced_blocks():
    W = WeightVector([1.0, 2.0])
    q = np.array([[2.0, 0.0], [3.0, 5.0]])
    fac = parabolic_membership(q, W)
    assert fac.in_Q
    np.testing.assert_allclose(fac.g_part, np.diag([2.0, 5.0]))
    np.testing.assert_allclose(fac.u_part, [[1.0, 0.0], [0.6, 1.0]])
    np.testing.assert_allclose(fac.g_part @ fac.u_part, q, atol=1e-12)
    np.testing.assert_allclose(np.diag(fac.u_part), [1.0, 1.0])


def test_parabolic_membership_upper_entry_fails():
    W = WeightVector([1.0, 2.0])
    assert not parabolic_membership(np.array([[2.0, 7.0], [0.0, 5.0]]), W).in_Q


def test_parabolic_membership_singular_rejected():
    W = WeightVector([1.0, 2.0])
    with pytest.raises(InputError):
        parabolic_membership(np.zeros((2, 2)), W)


def test_tr_weighted_values():
    W = WeightVector([3.0, 7.0])
    assert tr_weighted(np.array([[4.0, 0.0], [1.0, 6.0]]), W) == pytest.approx(4 * 3 + 6 * 7)
    assert tr_weighted(np.eye(2), W) == pytest.approx(10.0)
    with pytest.raises(PreconditionError):
        tr_weighted(np.array([[0.0, 1.0], [0.0, 0.0]]), W)


def test_tr_weighted_vanishes_on_commutators():
    rng = np.random.default_rng(8)
    W = WeightVector([0.5, 0.5, 1.0, 2.0, 2.0])
    for _ in range(50):
        X = _random_block_lower(rng, W) - 3.0 * np.eye(5)
        Y = _random_block_lower(rng, W) - 3.0 * np.eye(5)
        comm = X @ Y - Y @ X
        assert abs(tr_weighted(comm, W)) < 1e-10 * max(1.0, np.abs(comm).max())


# ---------------------------------------------------------------------------
# weighted determinant
# ---------------------------------------------------------------------------

def test_det_weighted_examples():
    W = WeightVector([1.0, 2.0])
    assert det_weighted(np.array([[2.0, 0.0], [3.0, 5.0]]), W) == pytest.approx(50.0)
    WI = WeightVector([1.0, 1.0, 1.0])
    q = np.array([[2.0, 1, 0], [0, 3, 1], [0, 0, 4]])
    assert det_weighted(q, WI) == pytest.approx(abs(np.linalg.det(q)))


def test_det_weighted_distinct_weights_product_formula():
    rng = np.random.default_rng(4)
    w = np.array([0.5, 1.0, 1.5, 2.5])
    W = WeightVector(w)
    q = np.tril(rng.standard_normal((4, 4))) + 3.0 * np.eye(4)
    expected = np.prod(np.abs(np.diag(q)) ** w)
    assert det_weighted(q, W) == pytest.approx(expected, rel=1e-12)


def test_det_weighted_one_on_K_W():
    rng = np.random.default_rng(6)
    for _ in range(20):
        W = _random_weightvector(rng, 5)
        k = _random_k_element(rng, W)
        assert det_weighted(k, W) == pytest.approx(1.0, abs=1e-12)


def test_det_weighted_requires_membership():
    W = WeightVector([1.0, 2.0])
    with pytest.raises(PreconditionError):
        det_weighted(np.array([[2.0, 7.0], [0.0, 5.0]]), W)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), d=st.integers(2, 6))
def test_det_weighted_multiplicative(seed, d):
    rng = np.random.default_rng(seed)
    W = _random_weightvector(rng, d)
    q1 = _random_block_lower(rng, W)
    q2 = _random_block_lower(rng, W)
    v12 = det_weighted(q1 @ q2, W)
    assert v12 == pytest.approx(det_weighted(q1, W) * det_weighted(q2, W), rel=1e-8)


# ---------------------------------------------------------------------------
# gauge
# ---------------------------------------------------------------------------

def test_gauge_identity():
    bg = InnerProductData.identity(3)
    gauge = gauge_lower_triangular(bg, bg)
    np.testing.assert_allclose(gauge.q, np.eye(3), atol=1e-12)


def test_gauge_diagonal_metric():
    h = InnerProductData(np.diag([4.0, 9.0, 25.0]))
    gauge = gauge_lower_triangular(h, InnerProductData.identity(3))
    np.testing.assert_allclose(gauge.diagonal, [0.5, 1.0 / 3.0, 0.2], rtol=1e-12)


def test_gauge_reconstructs_gram():
    rng = np.random.default_rng(9)
    for d in (2, 4, 6):
        G = random_definite_gram(rng, d)
        h = InnerProductData(G)
        q = gauge_lower_triangular(h, InnerProductData.identity(d)).q
        np.testing.assert_allclose(np.linalg.inv(q @ q.T), G, atol=1e-10)


def test_gauge_heisenberg_backward_gram_schmidt():
    # q_ii must match h(u_i, u_i)^{-1/2} for the backward orthogonalization
    rng = np.random.default_rng(12)
    for _ in range(25):
        G = random_definite_gram(rng, 3)
        h = InnerProductData(G)
        q = gauge_lower_triangular(h, InnerProductData.identity(3)).q
        e = np.eye(3)

        def ip(a, b):
            return a @ G @ b

        u3 = e[2]
        u2 = e[1] - (ip(e[1], u3) / ip(u3, u3)) * u3
        u1 = e[0] - (ip(e[0], u2) / ip(u2, u2)) * u2 - (ip(e[0], u3) / ip(u3, u3)) * u3
        np.testing.assert_allclose(
            np.diag(q),
            [ip(u1, u1) ** -0.5, ip(u2, u2) ** -0.5, ip(u3, u3) ** -0.5],
            rtol=1e-10,
        )


def test_gauge_nontrivial_background():
    rng = np.random.default_rng(10)
    Gb = random_definite_gram(rng, 4)
    G = random_definite_gram(rng, 4)
    h, bg = InnerProductData(G), InnerProductData(Gb)
    gauge = gauge_lower_triangular(h, bg)
    assert np.all(gauge.diagonal > 0)
    # the gauge acts on background-orthonormal coordinates: h = q . bg
    Lb = np.linalg.cholesky(Gb)
    H = np.linalg.inv(Lb) @ G @ np.linalg.inv(Lb).T
    np.testing.assert_allclose(np.linalg.inv(gauge.q @ gauge.q.T), H, atol=1e-9)


def test_gauge_degenerate_raises():
    h = InnerProductData(np.diag([1.0, 0.0]))
    with pytest.raises(DegenerateError):
        gauge_lower_triangular(h, InnerProductData.identity(2))


def test_gauge_basis_order():
    G = np.diag([4.0, 9.0, 25.0])
    h = InnerProductData(G)
    gauge = gauge_lower_triangular(h, InnerProductData.identity(3), basis_order=[2, 1, 0])
    np.testing.assert_allclose(gauge.diagonal, [0.2, 1.0 / 3.0, 0.5], rtol=1e-12)


# ---------------------------------------------------------------------------
# weighted volume density
# ---------------------------------------------------------------------------

def test_v_weighted_background_is_one():
    bg = InnerProductData.identity(4)
    W = WeightVector([0.5, 1.0, 2.0, 2.0])
    assert v_weighted(bg, bg, W) == pytest.approx(1.0)


def test_v_weighted_heisenberg_diagonal_closed_form():
    label = heisenberg_stratum_label(3)
    W = weights_from_label(label)
    bg = InnerProductData.identity(3)
    rng = np.random.default_rng(3)
    for _ in range(100):
        d = np.exp(rng.uniform(-2, 2, 3))
        v = v_weighted(InnerProductData(np.diag(d)), bg, W)
        assert v == pytest.approx((d[0] * d[1] * d[2] ** 2) ** (1.0 / 3.0), rel=1e-12)


def test_v_weighted_degenerate_zero():
    W = WeightVector([0.5, 1.0, 2.0])
    h = InnerProductData(np.diag([1.0, 1.0, 0.0]))
    assert v_weighted(h, InnerProductData.identity(3), W) == 0.0


def test_v_weighted_degenerate_negative_weight_warns():
    W = WeightVector([-1.0, 1.0, 2.0])
    h = InnerProductData(np.diag([1.0, 1.0, 0.0]))
    with pytest.warns(UserWarning):
        assert v_weighted(h, InnerProductData.identity(3), W) == 0.0


def test_v_weighted_scaling_law():
    rng = np.random.default_rng(14)
    W = WeightVector([0.5, 1.0, 1.0, 3.0])
    bg = InnerProductData.identity(4)
    G = random_definite_gram(rng, 4)
    for c in (0.3, 2.0, 11.0):
        lhs = v_weighted(InnerProductData(c * G), bg, W)
        rhs = c ** (W.weights.sum() / 2.0) * v_weighted(InnerProductData(G), bg, W)
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_v_weighted_additivity_splitting():
    # v_{W1 + W2} = v_{W1} v_{W2}; in particular v_{b+} = v_{b+ - Id} v_N
    rng = np.random.default_rng(15)
    label = heisenberg_stratum_label(3)
    W = weights_from_label(label)
    Wm = WeightVector(W.weights - 1.0)
    bg = InnerProductData.identity(3)
    for _ in range(200):
        h = InnerProductData(random_definite_gram(rng, 3))
        lhs = v_weighted(h, bg, W)
        rhs = v_weighted(h, bg, Wm) * orbit_density_vN(h)
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_orbit_density():
    assert orbit_density_vN(InnerProductData(np.eye(3))) == pytest.approx(1.0)
    assert orbit_density_vN(InnerProductData(np.diag([4.0, 9.0]))) == pytest.approx(6.0)
    rng = np.random.default_rng(16)
    for _ in range(20):
        G = random_definite_gram(rng, 4)
        vN = orbit_density_vN(InnerProductData(G))
        assert vN**2 == pytest.approx(np.linalg.det(G), rel=1e-12)
        ones = WeightVector(np.ones(4))
        assert vN == pytest.approx(
            v_weighted(InnerProductData(G), InnerProductData.identity(4), ones), rel=1e-10
        )


# ---------------------------------------------------------------------------
# stratum labels
# ---------------------------------------------------------------------------

def test_beta_plus_heisenberg_example():
    label = beta_plus_from_beta(np.diag([-1.0, -1.0, 1.0]))
    np.testing.assert_allclose(
        np.diag(label.beta_plus), [2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0], rtol=1e-14
    )


def test_beta_plus_identity_formula():
    d = 4
    label = beta_plus_from_beta(np.eye(d))
    np.testing.assert_allclose(label.beta_plus, (1.0 / d + 1.0) * np.eye(d), rtol=1e-14)


def test_beta_plus_rejects_zero():
    with pytest.raises(InputError):
        beta_plus_from_beta(np.zeros((3, 3)))


def test_beta_plus_not_positive_definite():
    # trace(beta^2) = 0.27 < 0.5, so beta/trace(beta^2) dips below -1
    with pytest.raises(StratumError):
        beta_plus_from_beta(np.diag([-0.5, 0.1, 0.1]))


def test_beta_plus_derivation_check():
    H3, _ = builtin_algebra("heisenberg", [3])
    label = beta_plus_from_beta(np.diag([-1.0, -1.0, 1.0]), algebra=H3)
    assert label is not None
    with pytest.raises(StratumError):
        beta_plus_from_beta(np.diag([-1.0, 1.0, 3.0]), algebra=H3)


def test_heisenberg5_label_is_derivation():
    H5, _ = builtin_algebra("heisenberg", [5])
    label = heisenberg_stratum_label(5)
    from orbitlab import is_derivation

    assert is_derivation(H5, label.beta_plus)


def test_weights_from_label_requires_diagonal():
    beta = np.array([[0.0, 1.0, 0], [1.0, 0.0, 0], [0, 0, 1.0]])
    label = beta_plus_from_beta(beta)
    with pytest.raises(InputError):
        weights_from_label(label)


# ---------------------------------------------------------------------------
# equivariance
# ---------------------------------------------------------------------------

def test_equivariance_identity_map():
    H3, _ = builtin_algebra("heisenberg", [3])
    label = heisenberg_stratum_label(3)
    h = InnerProductData(np.diag([2.0, 3.0, 5.0]))
    out = equivariance_check(h, np.eye(3), H3, label, InnerProductData.identity(3))
    assert out.passed and out.lhs == pytest.approx(out.rhs)


def test_equivariance_dilation():
    H3, _ = builtin_algebra("heisenberg", [3])
    label = heisenberg_stratum_label(3)
    bg = InnerProductData.identity(3)
    t = 1.7
    phi = np.diag([t, t, t * t])
    out = equivariance_check(bg, phi, H3, label, bg)
    assert out.passed
    assert out.rhs == pytest.approx(t**-4.0, rel=1e-12)


def test_equivariance_sl_invariance():
    H3, _ = builtin_algebra("heisenberg", [3])
    label = heisenberg_stratum_label(3)
    bg = InnerProductData.identity(3)
    rng = np.random.default_rng(18)
    v = v_weighted(InnerProductData(np.diag([1.0, 2.0, 3.0])), bg, weights_from_label(label))
    for _ in range(20):
        phi = random_heisenberg_automorphism(rng, special=True)
        assert abs(np.linalg.det(phi) - 1.0) < 1e-10
        out = equivariance_check(
            InnerProductData(np.diag([1.0, 2.0, 3.0])), phi, H3, label, bg
        )
        assert out.passed
        assert out.lhs == pytest.approx(v, rel=1e-9)


def test_equivariance_rejects_non_automorphism():
    H3, _ = builtin_algebra("heisenberg", [3])
    label = heisenberg_stratum_label(3)
    bg = InnerProductData.identity(3)
    phi = np.diag([1.0, 1.0, 5.0])  # scales the center without scaling the plane
    with pytest.raises(PreconditionError):
        equivariance_check(bg, phi, H3, label, bg)


# ---------------------------------------------------------------------------
# property batches
# ---------------------------------------------------------------------------

def test_batches_pass():
    assert check_multiplicativity(seed=1, samples=200)["pass"]
    assert check_gauge_invariance(seed=1, samples=100)["pass"]
    assert check_continuity(seed=1, families=8)["pass"]
    H3, _ = builtin_algebra("heisenberg", [3])
    assert check_equivariance(H3, heisenberg_stratum_label(3), seed=1, samples=20)["pass"]


def test_gram_from_gauge_stable_for_extreme_diagonal():
    q = np.diag([1.0, np.exp(30.0)])
    G = _gram_from_gauge(q)
    assert np.all(np.isfinite(G))
    assert G[1, 1] == pytest.approx(np.exp(-60.0), rel=1e-12)
