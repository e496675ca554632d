"""Planar momentum-space kernels, the scattering chain, and its conductor limit."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvecp.errors import PECUnsupportedSector
from curvecp.kernels import (
    SpectralPoint,
    _free_part,
    _interface_legs,
    _pec_interface_legs,
    _scattering_columns,
    _surface_part,
    _vertex_couplings,
    axial_decay,
    gamma0_integrand,
    gamma1_integrand,
    pec_gamma0_integrand,
    pec_gamma1_integrand,
    planar_blocks,
    planar_resolvent,
)
from curvecp.materials import GOLD, MediumResponse

VACUUM_GOLD = MediumResponse(eps0=1.0, mu0=1.0, eps1=GOLD.epsilon(1.0), mu1=1.0)
DIELECTRIC = MediumResponse(eps0=1.0, mu0=1.0, eps1=4.0, mu1=1.0)
MAGNETO = MediumResponse(eps0=1.3, mu0=1.1, eps1=5.0, mu1=2.0)
PEC_VAC = MediumResponse(eps0=1.0, mu0=1.0, eps1=np.inf, mu1=1.0)


def _rand_points(n, kmax=4.0, seed=11):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.02, kmax, n), rng.uniform(0.0, 2.0 * np.pi, n)


# ---------------------------------------------------------------------------
# axial decay
# ---------------------------------------------------------------------------


def test_axial_decay_examples():
    m = MediumResponse(eps0=1.0, mu0=1.0, eps1=4.0, mu1=1.0)
    assert axial_decay(SpectralPoint(0.0, 0.0, 1.0), m).s1 == pytest.approx(2.0)
    evanescent = axial_decay(SpectralPoint(3.0, 1.0, 0.0), m)
    assert evanescent.s0 == pytest.approx(3.0)
    assert evanescent.s1 == pytest.approx(3.0)
    m3 = MediumResponse(eps0=1.0, mu0=1.0, eps1=3.0, mu1=1.0)
    assert axial_decay(SpectralPoint(1.0, 0.0, 1.0), m3).s1 == pytest.approx(2.0)


def test_axial_decay_pec_sentinel():
    d = axial_decay(SpectralPoint(1.0, 0.0, 1.0), PEC_VAC)
    assert math.isinf(d.s1)
    assert d.s0 == pytest.approx(math.sqrt(2.0))


@given(
    kbar=st.floats(0.0, 50.0),
    kappabar=st.floats(0.0, 50.0),
    eps=st.floats(1.0, 100.0),
    mu=st.floats(0.5, 10.0),
)
def test_axial_decay_bounds(kbar, kappabar, eps, mu):
    m = MediumResponse(eps0=1.0, mu0=1.0, eps1=eps, mu1=mu)
    d = axial_decay(SpectralPoint(kbar, 0.0, kappabar), m)
    assert d.s1 >= kbar - 1e-12
    assert d.s1 >= math.sqrt(eps * mu) * kappabar - 1e-12
    if kappabar == 0.0:
        assert d.s1 == pytest.approx(kbar)


# ---------------------------------------------------------------------------
# single-point blocks and the resolvent
# ---------------------------------------------------------------------------


def test_blocks_zero_contrast_annihilates_scattering():
    m = MediumResponse(eps0=1.2, mu0=1.1, eps1=1.2, mu1=1.1)
    b = planar_blocks(SpectralPoint(0.8, 0.4, 0.6), m)
    for block in (b.k0_eh, b.k0_he):
        assert np.max(np.abs(block.value)) < 1e-14
    # the would-be reflection assembled from the M columns cancels between
    # the two sectors, entering the chain only through this combination
    term = b.g0_out_ee.value @ b.m0_ee.value
    combo = term + b.g0_out_eh.value @ b.m0_he.value
    assert np.max(np.abs(combo)) < 1e-14 * np.max(np.abs(term))


def test_blocks_like_sector_kernels_vanish_on_plane():
    b = planar_blocks(SpectralPoint(0.5, 0.0, 1.0), VACUUM_GOLD)
    assert np.all(b.k0_ee.value == 0.0)
    assert np.all(b.k0_hh.value == 0.0)


def test_blocks_exponent_separation():
    pt = SpectralPoint(300.0, 1.0, 2.0)
    b = planar_blocks(pt, DIELECTRIC)
    # polynomial prefactors stay finite far into the exponential tail
    assert np.all(np.isfinite(b.g0_out_ee.poly))
    assert b.g0_out_ee.exponent == pytest.approx(-axial_decay(pt, DIELECTRIC).s0)
    assert b.g1_out_ee.exponent == pytest.approx(-axial_decay(pt, DIELECTRIC).s1)
    assert b.k0_eh.exponent == 0.0
    assert b.m0_ee.exponent == pytest.approx(-axial_decay(pt, DIELECTRIC).s0)


def test_blocks_reject_pec_sentinel():
    with pytest.raises(PECUnsupportedSector):
        planar_blocks(SpectralPoint(1.0, 0.0, 1.0), PEC_VAC)


def test_resolvent_consistency_gold():
    rng = np.random.default_rng(5)
    for _ in range(10):
        pt = SpectralPoint(rng.uniform(0.05, 6.0), rng.uniform(0.0, 6.28), rng.uniform(0.01, 4.0))
        b = planar_blocks(pt, VACUUM_GOLD)
        res = planar_resolvent(b)
        assert res.residual < 1e-12
        # both like-sector blocks of the 6x6 operator carry the same core
        assert res.o[:3, :3] == pytest.approx(res.r)
        assert res.o[3:, 3:] == pytest.approx(res.r)


def test_resolvent_zero_contrast_is_identity():
    m = MediumResponse(eps0=2.0, mu0=1.0, eps1=2.0, mu1=1.0)
    b = planar_blocks(SpectralPoint(1.0, 0.2, 0.7), m)
    res = planar_resolvent(b)
    assert res.o == pytest.approx(np.eye(6), abs=1e-14)


# ---------------------------------------------------------------------------
# flat integrand
# ---------------------------------------------------------------------------


def test_flat_integrand_zero_contrast_vanishes():
    kb, ph = _rand_points(50)
    g = gamma0_integrand(kb, ph, 0.7, 1.3, 1.1, 1.3, 1.1)
    # cancellation happens between the two sector products, so measure the
    # leftover against the magnitude of one of them
    n = kb.size
    e0, m0 = np.full(n, 1.3), np.full(n, 1.1)
    free = _free_part(kb, ph, np.full(n, 0.7), e0, m0, jets=False)
    m_ee, _ = _scattering_columns(free, e0, m0, e0, m0)
    scale = np.max(np.abs(free.g_out_ee @ m_ee))
    assert np.max(np.abs(g)) < 1e-13 * scale


def test_flat_integrand_decays_with_kappabar():
    kb = np.full(6, 1.5)
    ph = np.linspace(0.0, 5.0, 6)
    lo = np.max(np.abs(gamma0_integrand(kb, ph, 0.8, 1.0, 1.0, 4.0, 1.0)))
    hi = np.max(np.abs(gamma0_integrand(kb, ph, 1.6, 1.0, 1.0, 4.0, 1.0)))
    assert hi < lo


def test_pec_flat_integrand_ignores_mu1():
    kb, ph = _rand_points(40)
    a = pec_gamma0_integrand(kb, ph, 0.9, 1.0, 1.0, 1.0)
    b = pec_gamma0_integrand(kb, ph, 0.9, 1.0, 1.0, 3.0)
    assert a == pytest.approx(b, rel=1e-14)


def test_pec_integrands_are_large_eps_limits():
    # conductor-limit approach rate is ~2/sqrt(eps1) (surface impedance), so
    # the deviation must shrink tenfold per hundredfold permittivity
    kb, ph = _rand_points(40)
    patch = (1.0, 0.5, 0.3)
    for kap in (1e-2, 0.3, 3.0, 10.0):
        f = pec_gamma0_integrand(kb, ph, kap, 1.0, 1.0, 1.0)
        c = pec_gamma1_integrand(kb, ph, kap, 1.0, 1.0, 1.0, patch)
        for eps1, tol in ((1e8, 5e-4), (1e10, 5e-5)):
            g = gamma0_integrand(kb, ph, kap, 1.0, 1.0, eps1, 1.0)
            assert np.max(np.abs(g - f)) < tol * np.max(np.abs(f))
            g1 = gamma1_integrand(kb, ph, kap, 1.0, 1.0, eps1, 1.0, patch)
            assert np.max(np.abs(g1 - c)) < tol * np.max(np.abs(c))


# ---------------------------------------------------------------------------
# displacement vertex: the uniform-shift anchor
# ---------------------------------------------------------------------------


def _legs_product(kb, ph, kap, media):
    """left @ C @ right of the displacement vertex, plainly evaluated."""
    n = kb.size
    kapv = np.full(n, kap)
    e0 = np.full(n, media.eps0)
    m0 = np.full(n, media.mu0)
    free = _free_part(kb, ph, kapv, e0, m0, jets=False)
    if media.is_pec:
        left, right = _pec_interface_legs(free)
        zero = np.zeros(n)
        ch_t = -m0 * free.kb2
        cvec = np.stack([zero, zero, e0, ch_t, ch_t, zero], axis=1)
    else:
        e1 = np.full(n, media.eps1)
        m1 = np.full(n, media.mu1)
        surf = _surface_part(free, e0, m0, e1, m1)
        left, right = _interface_legs(free, surf, e0, m0, e1, m1)
        cvec = _vertex_couplings(free, e0, m0, e1, m1)
    return left @ (cvec[:, :, None] * right), free.s0


def test_uniform_shift_anchor():
    # displacing the whole interface by a constant height rescales the
    # round-trip decay, so the sandwiched vertex must reproduce exactly
    # 2 s0 times the flat integrand -- this identity pins every coupling
    kb, ph = _rand_points(60)
    for media in (DIELECTRIC, MAGNETO, VACUUM_GOLD):
        for kap in (1e-4, 0.4, 1.7):
            got, s0 = _legs_product(kb, ph, kap, media)
            want = 2.0 * s0[:, None, None] * gamma0_integrand(
                kb, ph, kap, media.eps0, media.mu0, media.eps1, media.mu1
            )
            scale = np.max(np.abs(want))
            assert np.max(np.abs(got - want)) < 1e-12 * scale


def test_uniform_shift_anchor_conductor():
    kb, ph = _rand_points(60)
    for e0, m0 in ((1.0, 1.0), (2.0, 1.5)):
        media = MediumResponse(eps0=e0, mu0=m0, eps1=np.inf, mu1=1.0)
        for kap in (1e-4, 0.4, 1.7):
            got, s0 = _legs_product(kb, ph, kap, media)
            want = 2.0 * s0[:, None, None] * pec_gamma0_integrand(
                kb, ph, kap, e0, m0, 1.0
            )
            scale = np.max(np.abs(want))
            assert np.max(np.abs(got - want)) < 1e-12 * scale


def test_conductor_legs_dead_slots():
    # at the conductor plane the tangential-E and normal-H field slots cancel
    # between direct and reflected parts for any source
    kb, ph = _rand_points(80)
    free = _free_part(kb, ph, np.full(kb.size, 0.8), np.ones(kb.size),
                      np.ones(kb.size), jets=False)
    left, right = _pec_interface_legs(free)
    rscale = np.max(np.abs(right))
    lscale = np.max(np.abs(left))
    assert np.max(np.abs(right[:, 0:2, :])) < 1e-13 * rscale
    assert np.max(np.abs(right[:, 5, :])) < 1e-13 * rscale
    assert np.max(np.abs(left[:, :, 0:2])) < 1e-13 * lscale
    assert np.max(np.abs(left[:, :, 5])) < 1e-13 * lscale


# ---------------------------------------------------------------------------
# curvature integrand structure
# ---------------------------------------------------------------------------


def test_curvature_integrand_patch_superposition():
    kb, ph = _rand_points(30)
    pa, pb = (0.7, -0.2, 0.1), (-0.3, 0.5, 0.9)
    psum = tuple(a + b for a, b in zip(pa, pb))
    va = gamma1_integrand(kb, ph, 0.6, 1.0, 1.0, 3.0, 1.2, pa)
    vb = gamma1_integrand(kb, ph, 0.6, 1.0, 1.0, 3.0, 1.2, pb)
    vs = gamma1_integrand(kb, ph, 0.6, 1.0, 1.0, 3.0, 1.2, psum)
    assert vs == pytest.approx(va + vb, rel=1e-12, abs=1e-14)


def test_curvature_integrand_rotation_covariance():
    # rotating the patch and the momentum azimuth together conjugates the
    # integrand matrix by the same in-plane rotation
    psi = np.pi / 6.0
    c, s = np.cos(psi), np.sin(psi)
    q = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    h = np.array([[0.9, 0.3], [0.3, -0.4]])
    hrot = q[:2, :2] @ h @ q[:2, :2].T
    patch = (h[0, 0], h[0, 1], h[1, 1])
    patch_rot = (hrot[0, 0], hrot[0, 1], hrot[1, 1])

    kb, ph = _rand_points(30)
    base = gamma1_integrand(kb, ph, 0.8, 1.0, 1.0, 5.0, 1.5, patch)
    rot = gamma1_integrand(kb, ph + psi, 0.8, 1.0, 1.0, 5.0, 1.5, patch_rot)
    want = np.einsum("ab,nbc,dc->nad", q, base, q)
    assert np.max(np.abs(rot - want)) < 1e-12 * np.max(np.abs(base))


def test_curvature_integrand_zero_patch():
    kb, ph = _rand_points(20)
    v = gamma1_integrand(kb, ph, 0.5, 1.0, 1.0, 4.0, 1.0, (0.0, 0.0, 0.0))
    assert np.all(v == 0.0)
