"""Archimedean layer: Iwasawa heights, spherical functions, oscillatory
averages and stationary-phase diagnostics.

Quadrature cross-checks use an independent Gauss-Legendre rule on the
circle; geometric assertions (critical angles, signatures, uniqueness of
height maximizers) have exact expectations.
"""

import math

import numpy as np
import pytest

from heckeamp.archimedean import (
    BumpFunction,
    CriticalSetNotFound,
    GroupModel,
    QuadratureSpec,
    SpectralPoint,
    _f_and_jacobian,
    _random_so,
    critical_set_solve,
    distance_to_levi_K,
    flat_critical_point,
    hessian_signature,
    iwasawa_height,
    kappa,
    levi_pattern_distance,
    model_integral_I,
    model_integral_sweep,
    orbital_integral_J,
    random_element,
    spherical_function,
)

M2 = GroupModel(2)
M3 = GroupModel(3)


# ---------------------------------------------------------------------------
# models and points


def test_model_basics():
    assert (M2.r, M2.dim_k) == (1, 1)
    assert (M3.r, M3.dim_k) == (2, 3)
    for model in (M2, M3):
        B = model.a_basis
        assert np.allclose(B @ B.T, np.eye(model.r), atol=1e-12)
        assert np.allclose(B.sum(axis=1), 0, atol=1e-12)
    with pytest.raises(ValueError):
        GroupModel(4)


def test_spectral_point_flags():
    assert SpectralPoint(M2, [1.0], 1.0).generic
    # rank 2: regular but on a root line (middle entry zero) is not generic
    pt = SpectralPoint(M3, np.array([1.0, 0.0, -1.0]), 1.0)
    assert pt.regular and not pt.generic
    pt2 = SpectralPoint(M3, np.array([0.9, 0.35, -1.25]), 1.0)
    assert pt2.generic
    # non-regular
    pt3 = SpectralPoint(M3, np.array([1.0, 1.0, -2.0]), 1.0)
    assert not pt3.regular and not pt3.generic
    with pytest.raises(ValueError):
        SpectralPoint(M3, np.array([1.0, 0.0, 0.0]), 1.0)  # not traceless


def test_bump_profile():
    b = BumpFunction(0.5)
    assert b.profile(np.array([0.0]))[0] == pytest.approx(1.0)
    assert b.profile(np.array([0.999999]))[0] < 1e-6
    assert b.profile(np.array([1.5]))[0] == 0.0
    assert b(np.zeros((3, 2)))[0] == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# Iwasawa projection


def test_iwasawa_reconstruction_bulk():
    rng = np.random.default_rng(42)
    for model in (M2, M3):
        for _ in range(5000):
            g = random_element(model, rng, spread=0.6)
            H = iwasawa_height(model, g)  # raises if residual > 1e-10
            assert abs(H.sum()) < 1e-9


def test_iwasawa_k_trivial_and_right_invariance():
    rng = np.random.default_rng(1)
    for model in (M2, M3):
        k = _random_so(model.n, rng)
        assert np.allclose(iwasawa_height(model, k), 0, atol=1e-12)
        g = random_element(model, rng)
        assert np.allclose(
            iwasawa_height(model, g @ k), iwasawa_height(model, g), atol=1e-10
        )


def test_iwasawa_nak_uniqueness():
    rng = np.random.default_rng(2)
    u = np.array([0.3, -0.1])
    H_in = u @ M3.a_basis
    k = _random_so(3, rng)
    g = np.diag(np.exp(H_in)) @ k
    assert np.allclose(iwasawa_height(M3, g), H_in, atol=1e-12)
    assert np.allclose(kappa(M3, g), k, atol=1e-10)


def test_iwasawa_rejects_bad_input():
    with pytest.raises(ValueError):
        iwasawa_height(M2, np.array([[2.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        iwasawa_height(M3, np.eye(2))


# ---------------------------------------------------------------------------
# spherical function


def test_spherical_at_identity():
    for model in (M2, M3):
        nu = model.to_a_vector(0.7 * np.arange(1, model.r + 1, dtype=float))
        res = spherical_function(model, nu, np.eye(model.n))
        assert abs(res.value - 1.0) < 1e-10


def test_spherical_bounded_by_one():
    rng = np.random.default_rng(3)
    quad = QuadratureSpec(k_res=32, a_res=4, max_refinements=3, tol=1e-7)
    for model in (M2, M3):
        for _ in range(5):
            g = random_element(model, rng, spread=0.5)
            nu = model.to_a_vector(rng.standard_normal(model.r))
            res = spherical_function(model, nu, g, quad)
            assert abs(res.value) <= 1.0 + 1e-6


def test_spherical_invariances():
    rng = np.random.default_rng(4)
    for model, kr in ((M2, 64), (M3, 24)):
        quad = QuadratureSpec(k_res=kr, a_res=4, max_refinements=3, tol=1e-8)
        for _ in range(3):
            g = random_element(model, rng, spread=0.4)
            nu = model.to_a_vector(rng.standard_normal(model.r))
            base = spherical_function(model, nu, g, quad).value
            k1, k2 = _random_so(model.n, rng), _random_so(model.n, rng)
            bi = spherical_function(model, nu, k1 @ g @ k2, quad).value
            assert abs(base - bi) < 1e-6
            perm = rng.permutation(model.n)
            weyl = spherical_function(model, nu[perm], g, quad).value
            assert abs(base - weyl) < 1e-6


def test_spherical_rank1_against_gauss_legendre_oracle():
    """Independent 1-D Gauss-Legendre quadrature of the same circle
    integral, at doubled resolution."""
    rng = np.random.default_rng(5)
    for _ in range(4):
        g = random_element(M2, rng, spread=0.5)
        nu = M2.to_a_vector(rng.standard_normal(1))
        res = spherical_function(M2, nu, g, QuadratureSpec(k_res=128, a_res=4, tol=1e-10))

        x, w = np.polynomial.legendre.leggauss(512)
        theta = (x + 1.0) * math.pi
        weights = w * math.pi / (2.0 * math.pi)
        total = 0.0 + 0.0j
        for th, wt in zip(theta, weights):
            c, s = math.cos(th), math.sin(th)
            k = np.array([[c, s], [-s, c]])
            H = iwasawa_height(M2, k @ g)
            total += wt * np.exp(H @ (M2.rho + 1j * nu))
        assert abs(res.value - total) < 1e-8


# ---------------------------------------------------------------------------
# model integral


def test_model_integral_zero_scale_real_positive():
    for model, h0 in ((M2, [1.0]), (M3, np.array([0.9, 0.35, -1.25]))):
        pt = SpectralPoint(model, h0, 0.0)
        quad = QuadratureSpec(k_res=16, a_res=6, max_refinements=2, tol=1e-6)
        res = model_integral_I(model, pt, BumpFunction(0.5), quad)
        assert abs(res.value.imag) < 1e-9
        assert res.value.real > 0


def test_model_integral_rank1_scaled_bracket():
    quad = QuadratureSpec(k_res=64, a_res=8, max_refinements=3, tol=1e-8)
    results = model_integral_sweep(M2, [1.0], [10.0, 20.0, 40.0], BumpFunction(0.75), quad)
    scaled = [t * abs(r.value) for t, r in zip((10.0, 20.0, 40.0), results)]
    assert all(r.converged for r in results)
    # bracket pinned from the first converged run
    assert all(1.8 <= s <= 2.1 for s in scaled), scaled


def test_model_integral_sweep_matches_single_calls():
    quad = QuadratureSpec(k_res=32, a_res=8, max_refinements=2, tol=1e-8)
    sweep = model_integral_sweep(M2, [1.0], [3.0, 6.0], BumpFunction(0.75), quad)
    for t, res in zip((3.0, 6.0), sweep):
        single = model_integral_I(M2, SpectralPoint(M2, [1.0], t), BumpFunction(0.75), quad)
        assert abs(res.value - single.value) < 1e-12


# ---------------------------------------------------------------------------
# critical sets


def test_critical_set_rank1_angles():
    sols = critical_set_solve(M2, [1.0], seed_count=20, rng=np.random.default_rng(6))
    assert len(sols) >= 2
    for k in sols:
        theta = math.atan2(k[0, 1], k[0, 0])
        assert abs(math.cos(2 * theta)) < 1e-8
        assert distance_to_levi_K(M2, k) > 0.5


def test_critical_set_rank2_nonempty_verified():
    H0 = M3.to_a_vector(np.array([0.9, 0.35, -1.25]))
    sols = critical_set_solve(M3, H0, seed_count=16, rng=np.random.default_rng(7))
    assert sols
    for k in sols[:4]:
        F, J = _f_and_jacobian(M3, H0, k)
        assert np.linalg.norm(F) < 1e-8
        sv = np.linalg.svd(J, compute_uv=False)
        assert sv[1] > 1e-3
        assert distance_to_levi_K(M3, k) > 1e-3


def test_critical_set_requires_generic():
    with pytest.raises(ValueError):
        critical_set_solve(M3, np.array([1.0, 0.0, -1.0]), seed_count=4)


def test_critical_set_persists_under_perturbation():
    H0 = M3.to_a_vector(np.array([0.9, 0.35, -1.25]))
    sols = critical_set_solve(M3, H0, seed_count=8, rng=np.random.default_rng(8))
    H1 = M3.to_a_vector(np.array([0.92, 0.33, -1.25]))
    for k in sols[:3]:
        moved = critical_set_solve(M3, H1, seed_count=0, rng=None, _continue_from=[k])
        assert moved
        assert np.abs(moved[0] - k).max() < 0.2


def test_hessian_signatures():
    sols2 = critical_set_solve(M2, [1.0], seed_count=8, rng=np.random.default_rng(9))
    assert hessian_signature(M2, [1.0], sols2[0]) == (0, 1, 1)
    H0 = M3.to_a_vector(np.array([0.9, 0.35, -1.25]))
    sols3 = critical_set_solve(M3, H0, seed_count=8, rng=np.random.default_rng(10))
    for k in sols3[:3]:
        assert hessian_signature(M3, H0, k) == (1, 2, 2)


def test_hessian_zero_mode_aligns_with_critical_manifold():
    H0 = M3.to_a_vector(np.array([0.9, 0.35, -1.25]))
    k = critical_set_solve(M3, H0, seed_count=8, rng=np.random.default_rng(11))[0]
    from heckeamp.archimedean import _fd_hessian, _phase_value

    dim = M3.r + M3.dim_k
    He = _fd_hessian(lambda z: _phase_value(M3, H0, k, z), dim, 1e-4)
    eigs, vecs = np.linalg.eigh(0.5 * (He + He.T))
    zero_idx = int(np.argmin(np.abs(eigs)))
    v = vecs[:, zero_idx]
    # the flat part of the zero mode vanishes; the rotation part spans ker J
    assert np.abs(v[: M3.r]).max() < 1e-4
    _, J = _f_and_jacobian(M3, H0, k)
    assert np.linalg.norm(J @ v[M3.r :]) < 1e-3


# ---------------------------------------------------------------------------
# height maximizers


def test_flat_critical_point_at_critical_rotation():
    H0 = M3.to_a_vector(np.array([1.3, 0.2, -1.5]))
    sols = critical_set_solve(M3, H0, seed_count=8, rng=np.random.default_rng(12))
    res = flat_critical_point(M3, H0, sols[0])
    assert res is not None
    assert np.linalg.norm(res.u) < 1e-6
    assert res.hessian_eigenvalues.max() < 0


def test_flat_critical_point_multistart_unique():
    H0 = M3.to_a_vector(np.array([1.3, 0.2, -1.5]))
    rng = np.random.default_rng(13)
    converged = 0
    for _ in range(10):
        g = random_element(M3, rng, spread=0.5)
        points = []
        for _ in range(6):
            u0 = 0.6 * rng.standard_normal(M3.r)
            shifted = g @ np.diag(np.exp(u0 @ M3.a_basis))
            res = flat_critical_point(M3, H0, shifted)
            if res is not None:
                points.append(res.H + u0 @ M3.a_basis)
                assert res.hessian_eigenvalues.max() < 0
        if points:
            converged += 1
            for other in points[1:]:
                assert np.linalg.norm(other - points[0]) < 1e-5
    assert converged >= 5


def test_flat_critical_point_requires_positive_chamber():
    with pytest.raises(ValueError):
        flat_critical_point(M3, np.array([-1.5, 0.2, 1.3]), np.eye(3))


def test_flat_critical_kappa_lands_in_critical_set():
    H0 = M3.to_a_vector(np.array([1.3, 0.2, -1.5]))
    rng = np.random.default_rng(14)
    checked = 0
    for _ in range(10):
        g = random_element(M3, rng, spread=0.5)
        res = flat_critical_point(M3, H0, g)
        if res is None:
            continue
        a = np.diag(np.exp(res.H))
        c = kappa(M3, g @ a)
        F, _ = _f_and_jacobian(M3, H0, c)
        assert np.linalg.norm(F) < 1e-6
        checked += 1
    assert checked >= 3


# ---------------------------------------------------------------------------
# double diagonal averages


def test_orbital_average_identity_bracket_rank1():
    """At g = 1 the double average decays at the t^-r rate; the scaled
    magnitude stays in the bracket pinned at the first converged run."""
    quad = QuadratureSpec(k_res=64, a_res=8, max_refinements=3, tol=1e-8)
    bump = BumpFunction(0.6)
    for t in (5.0, 10.0, 20.0):
        res = orbital_integral_J(M2, SpectralPoint(M2, [1.0], t), np.eye(2), bump, quad)
        assert res.converged
        assert 1.1 <= t * abs(res.value) <= 1.5, (t, t * abs(res.value))


def test_orbital_average_weyl_invariance_rank1():
    quad = QuadratureSpec(k_res=64, a_res=8, max_refinements=3, tol=1e-8)
    bump = BumpFunction(0.6)
    g = random_element(M2, np.random.default_rng(12), spread=0.5)
    a = orbital_integral_J(M2, SpectralPoint(M2, [1.0], 7.0), g, bump, quad)
    b = orbital_integral_J(M2, SpectralPoint(M2, [-1.0], 7.0), g, bump, quad)
    assert abs(a.value - b.value) < 1e-7


def test_orbital_average_extra_decay_off_levi_rank1():
    """Away from the monomial cosets the average decays strictly faster
    than the g = 1 rate (halving ratios pinned at first run)."""
    quad = QuadratureSpec(k_res=64, a_res=8, max_refinements=3, tol=1e-9)
    bump = BumpFunction(0.6)
    g = random_element(M2, np.random.default_rng(12), spread=0.5)
    assert levi_pattern_distance(M2, g) > 0.3

    def ratio(gmat):
        vals = {}
        for t in (10.0, 20.0):
            res = orbital_integral_J(M2, SpectralPoint(M2, [1.0], t), gmat, bump, quad)
            vals[t] = abs(res.value)
        return vals[20.0] / vals[10.0]

    assert 0.4 <= ratio(np.eye(2)) <= 0.6
    assert ratio(g) < 0.35


def test_orbital_average_weyl_invariance_rank2():
    H0 = np.array([0.9, 0.35, -1.25])
    H0 = M3.to_a_vector(H0 / np.linalg.norm(H0))
    quad = QuadratureSpec(k_res=16, a_res=4, max_refinements=1, tol=1e-5, a_growth=1.5)
    bump = BumpFunction(0.5)
    g = random_element(M3, np.random.default_rng(3), spread=0.35)
    base = orbital_integral_J(M3, SpectralPoint(M3, H0, 3.0), g, bump, quad)
    for perm in ((1, 0, 2), (2, 0, 1)):
        other = orbital_integral_J(
            M3, SpectralPoint(M3, H0[list(perm)], 3.0), g, bump, quad
        )
        tol = 5.0 * (base.error + other.error)
        assert abs(base.value - other.value) < tol


# ---------------------------------------------------------------------------
# Levi diagnostics


def test_levi_distance_vanishes_on_cosets():
    rng = np.random.default_rng(15)
    # signed permutations are at distance zero
    for mp in M3._signed_perms[:6]:
        assert distance_to_levi_K(M3, mp) < 1e-9
    # a block rotation times a signed permutation is on a Levi coset
    th = 0.77
    blk = np.array(
        [[math.cos(th), math.sin(th), 0], [-math.sin(th), math.cos(th), 0], [0, 0, 1.0]]
    )
    mp = M3._signed_perms[7]
    assert distance_to_levi_K(M3, mp @ blk) < 1e-9
    # a generic rotation is well away
    k = _random_so(3, rng)
    assert distance_to_levi_K(M3, k) > 0.05


def test_levi_pattern_distance_examples():
    assert levi_pattern_distance(M2, np.eye(2)) < 1e-12
    g = np.array([[1.0, 0.4], [0.0, 1.0]])
    assert abs(levi_pattern_distance(M2, g) - 0.4) < 1e-12
    assert levi_pattern_distance(M3, np.eye(3)) < 1e-12
