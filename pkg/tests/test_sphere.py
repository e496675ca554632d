"""Sphere reference solution: Bessel ladders, multipole coefficients, energy."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvecp.constants import HBAR_C_EV_UM, K_B_EV_PER_K
from curvecp.curvature import beta0, beta2
from curvecp.errors import (
    ConfigError,
    NonConvergentMultipoleSum,
    OverflowDomain,
    QuadratureNonConvergence,
)
from curvecp.materials import (
    GOLD,
    PEC,
    SILICON,
    Constant,
    Material,
    MediumResponse,
    matsubara_xi,
)
from curvecp.sphere import (
    BesselPair,
    MieTMatrix,
    bessel_pair,
    mie_t,
    mie_t_matrix,
    sphere_cp,
    sphere_cp_report,
)

EPS4 = Material("eps4", Constant(4.0))
UNIT = Material("unit", Constant(1.0))

# coverage of the stable envelope without an O(l_max^2) dense sweep
_L_GRID = (0, 1, 2, 3, 5, 8, 13, 34, 89, 233, 610, 1597, 2000, 3500, 5000)
_X_GRID = (1e-3, 1e-2, 0.1, 1.0, 2.5, 10.0, 100.0, 700.0, 1e3, 1e4)


# ---------------------------------------------------------------------------
# Bessel pair
# ---------------------------------------------------------------------------


def test_wronskian_identity_across_envelope():
    worst = 0.0
    for x in _X_GRID:
        for l in _L_GRID:
            w = bessel_pair(l, x).wronskian()
            worst = max(worst, abs(w / (-math.pi / 2.0) - 1.0))
    assert worst < 1e-10


def test_wronskian_example_order_three():
    assert bessel_pair(3, 2.5).wronskian() == pytest.approx(-math.pi / 2.0, rel=1e-12)


def test_order_zero_closed_forms():
    x = 2.5
    p = bessel_pair(0, x)
    assert p.i == pytest.approx(math.sinh(x), rel=1e-13)
    assert p.di == pytest.approx(math.cosh(x), rel=1e-13)
    assert p.k == pytest.approx((math.pi / 2.0) * math.exp(-x), rel=1e-13)
    assert p.dk == pytest.approx(-(math.pi / 2.0) * math.exp(-x), rel=1e-13)


def test_large_argument_decay_prefactor():
    # K_l(x) e^x approaches pi/2 from above, with a 1/x first correction that
    # at x = 700, l = 1 is itself 1.43e-3 of the limit.
    p = bessel_pair(1, 700.0)
    kh = float(p.k_hat)
    assert kh == pytest.approx(math.pi / 2.0, rel=2e-3)
    assert kh == pytest.approx((math.pi / 2.0) * (1.0 + 1.0 / 700.0), rel=1e-6)


def test_positivity_throughout():
    for x in (1e-3, 1.0, 1e3):
        for l in (0, 1, 7, 120, 5000):
            p = bessel_pair(l, x)
            assert p.i_hat.mantissa > 0.0
            assert p.di_hat.mantissa > 0.0
            assert p.k_hat.mantissa > 0.0
            assert p.dk_hat_mag.mantissa > 0.0
            assert p.dk <= 0.0


def test_scaled_fields_match_library_values():
    # where scipy's scaled forms are representable the ladder must agree
    from scipy.special import ive, kve

    for x in (0.5, 5.0, 50.0):
        for l in (0, 1, 3, 10, 30):
            p = bessel_pair(l, x)
            i_ref = x * math.sqrt(math.pi / (2.0 * x)) * ive(l + 0.5, x)
            k_ref = x * math.sqrt(math.pi / (2.0 * x)) * kve(l + 0.5, x)
            assert float(p.i_hat) == pytest.approx(i_ref, rel=1e-13)
            assert float(p.k_hat) == pytest.approx(k_ref, rel=1e-13)


def test_recurrence_consistency_deep_in_continuation():
    # the three-term ladder identities, checked via split-form ratios far
    # past where unscaled doubles (or the plain scaled forms) survive
    x, l = 1e-3, 2000
    lo, mid, hi = (bessel_pair(ll, x) for ll in (l - 1, l, l + 1))

    def ratio(a, b):
        return (a.mantissa / b.mantissa) * 2.0 ** float(a.exp2 - b.exp2)

    # x i_{l-1} - x i_{l+1} = (2l+1) i_l
    lhs = ratio(lo.i_hat, mid.i_hat) - ratio(hi.i_hat, mid.i_hat)
    assert lhs == pytest.approx((2 * l + 1) / x, rel=1e-12)
    # x k_{l+1} - x k_{l-1} = (2l+1) k_l
    lhs = ratio(hi.k_hat, mid.k_hat) - ratio(lo.k_hat, mid.k_hat)
    assert lhs == pytest.approx((2 * l + 1) / x, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    l=st.integers(0, 5000),
    x=st.floats(1e-3, 1e4),
)
def test_wronskian_property(l, x):
    w = bessel_pair(l, x).wronskian()
    assert abs(w / (-math.pi / 2.0) - 1.0) < 1e-10


def test_envelope_rejections():
    with pytest.raises(ConfigError):
        bessel_pair(2, 0.0)
    with pytest.raises(ConfigError):
        bessel_pair(2, -1.0)
    with pytest.raises(ConfigError):
        bessel_pair(-1, 1.0)
    with pytest.raises(ConfigError):
        bessel_pair(2.5, 1.0)
    with pytest.raises(OverflowDomain):
        bessel_pair(2, 2e4)
    with pytest.raises(OverflowDomain):
        bessel_pair(2, 1e-13)
    with pytest.raises(OverflowDomain):
        bessel_pair(5001, 1.0)


# ---------------------------------------------------------------------------
# multipole coefficients
# ---------------------------------------------------------------------------


def test_dipole_limit_electric():
    kappa, radius = 1e-3, 1.0
    for eps in (2.0, 4.0, 11.87):
        t_ee, _ = mie_t(1, eps, 1.0, radius, kappa)
        want = (2.0 / 3.0) * (eps - 1.0) / (eps + 2.0) * (kappa * radius) ** 3
        assert t_ee == pytest.approx(want, rel=1e-2)
        assert t_ee == pytest.approx(want, rel=1e-4)


def test_dipole_limit_magnetic():
    kappa, radius = 1e-3, 1.0
    for mu in (3.0, 1.5):
        _, t_hh = mie_t(1, 1.0, mu, radius, kappa)
        want = (2.0 / 3.0) * (mu - 1.0) / (mu + 2.0) * (kappa * radius) ** 3
        assert t_hh == pytest.approx(want, rel=1e-2)


def test_swap_symmetry_of_polarizations():
    for l in (1, 2, 5):
        a_ee, a_hh = mie_t(l, 3.0, 1.4, 1.0, 1.7)
        b_ee, b_hh = mie_t(l, 1.4, 3.0, 1.0, 1.7)
        assert a_ee == pytest.approx(b_hh, rel=1e-13)
        assert a_hh == pytest.approx(b_ee, rel=1e-13)


def test_zero_contrast_coefficients_vanish():
    assert mie_t(1, 1.0, 1.0, 1.0, 2.0) == (0.0, 0.0)
    assert mie_t(3, 1.0, 1.0, 5.0, 0.3) == (0.0, 0.0)


def test_static_limit_of_elements():
    assert mie_t(1, 4.0, 1.0, 1.0, 0.0) == (0.0, 0.0)


def test_perfectly_conducting_limit():
    for x in (0.3, 3.0, 30.0):
        for l in (1, 2, 5):
            p_ee, p_hh = mie_t(l, math.inf, 1.0, 1.0, x)
            g_ee, g_hh = mie_t(l, 1e10, 1.0, 1.0, x)
            assert p_ee == pytest.approx(g_ee, rel=1e-3)
            assert p_hh == pytest.approx(g_hh, rel=1e-3)
            # opposite signs: electric repels the field, magnetic admits it
            assert p_ee > 0.0 > p_hh


def test_mie_order_and_argument_validation():
    with pytest.raises(ConfigError):
        mie_t(0, 4.0, 1.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        mie_t(1, 4.0, 1.0, -1.0, 1.0)
    with pytest.raises(ConfigError):
        mie_t(1, 4.0, 1.0, 1.0, -0.5)
    with pytest.raises(ConfigError):
        mie_t(1, -2.0, 1.0, 1.0, 1.0)


def test_mie_raw_overflow_refused():
    # e^{2 kappa R} alone exceeds double range at kappa R = 400
    with pytest.raises(OverflowDomain):
        mie_t(1, 4.0, 1.0, 1.0, 400.0)


def test_t_matrix_reality_and_decay():
    m = mie_t_matrix(12.0, 1.0, 1.0, 5.0, 40)
    assert isinstance(m, MieTMatrix)
    assert m.l_max == 40
    assert m.scale_log == pytest.approx(10.0)
    assert np.all(np.isfinite(m.t_ee_scaled))
    assert np.all(np.isfinite(m.t_hh_scaled))
    # super-exponential decay beyond l ~ kappa R: log-magnitude ratios fall
    mags = np.abs(m.t_ee_scaled[8:])
    mags = mags[mags > 0.0]
    ratios = np.diff(np.log(mags))
    assert np.all(np.diff(ratios) < 0.0) or np.all(ratios < 0.0)
    assert 0.0 < m.last_term_ratio < 1e-30


def test_t_matrix_scaled_matches_raw():
    m = mie_t_matrix(4.0, 1.0, 1.0, 2.0, 6)
    for l in (1, 3, 6):
        raw_ee, raw_hh = mie_t(l, 4.0, 1.0, 1.0, 2.0)
        grow = math.exp(m.scale_log)
        assert m.t_ee_scaled[l] * grow == pytest.approx(raw_ee, rel=1e-12)
        assert m.t_hh_scaled[l] * grow == pytest.approx(raw_hh, rel=1e-12)


# ---------------------------------------------------------------------------
# sphere potential
# ---------------------------------------------------------------------------


def test_sphere_zero_contrast_vanishes():
    assert sphere_cp(2.0, 0.5, 300.0, 1.0, UNIT) == 0.0
    assert sphere_cp(2.0, 0.5, 0.0, 1.0, UNIT) == 0.0


def test_sphere_alpha_linearity_exact():
    u1 = sphere_cp(2.0, 0.5, 300.0, 1.0, EPS4)
    u2 = sphere_cp(2.0, 0.5, 300.0, 2.0, EPS4)
    assert u2 == 2.0 * u1


def test_sphere_attractive_for_dielectric():
    assert sphere_cp(2.0, 0.5, 300.0, 1.0, EPS4) < 0.0
    assert sphere_cp(5.0, 1.0, 300.0, 1.0, SILICON) < 0.0


def test_static_rung_enters_with_half_weight():
    # an alpha that vanishes at every nonzero frequency isolates the static
    # rung; its value must be exactly half the closed image-type series
    radius, d, temp = 3.0, 1.0, 300.0
    u = sphere_cp(radius, d, temp, lambda xi: 1.0 if xi == 0.0 else 0.0, SILICON)
    eps_s = SILICON.epsilon(0.0)
    a = radius + d
    rho = radius / a
    series = 0.0
    for l in range(1, 4000):
        g = (eps_s - 1.0) / ((l + 1.0) + l * eps_s)
        series += (2 * l + 1) * l * (l + 1) * g * rho ** (2 * l + 1)
    want = K_B_EV_PER_K * temp * 0.5 * (-series / a) / a**2
    assert u == pytest.approx(want, rel=1e-12)


def test_single_rung_matches_manual_partial_wave_assembly():
    # pick out the first nonzero frequency with an indicator alpha and
    # rebuild its contribution from the public coefficient and Bessel ops;
    # this pins the (2/pi)^2 kernel normalization, the (2l+1) weights, the
    # kappa/a^2 prefactor and the exponential bookkeeping all at once
    radius, d, temp = 3.0, 1.0, 300.0
    xi1 = matsubara_xi(temp, 1)
    kappa = xi1 / HBAR_C_EV_UM
    a = radius + d
    u = sphere_cp(
        radius, d, temp,
        lambda xi: 1.0 if abs(xi - xi1) < 1e-12 else 0.0,
        EPS4,
        rel_tol=1e-12,
    )
    total = 0.0
    for l in range(1, 71):
        t_ee, t_hh = mie_t(l, 4.0, 1.0, radius, kappa)
        p = bessel_pair(l, kappa * a)
        k2 = p.k * p.k
        bracket = t_hh * k2 - t_ee * (p.dk * p.dk + l * (l + 1) * k2 / (kappa * a) ** 2)
        total += (2 * l + 1) * (2.0 / math.pi) ** 2 * bracket
    want = K_B_EV_PER_K * temp * (kappa / a**2) * total
    assert u == pytest.approx(want, rel=1e-12)


def test_flat_limit_reproduces_planar_kernel():
    # a sphere a hundred times the gap must look planar to a percent, and
    # applying the leading curvature correction must close the residual to
    # the few-1e-4 level; this anchors the displayed 1/a^2 and kappa_n
    # prefactors against the independently validated planar coefficients
    radius, d, temp = 100.0, 1.0, 300.0
    med = MediumResponse(1.0, 1.0, math.inf, 1.0)
    u_sphere = sphere_cp(radius, d, temp, 1.0, PEC) / (K_B_EV_PER_K * temp)
    step = matsubara_xi(temp, 1)

    def planar(curvature):
        total, n = 0.0, 0
        while True:
            kbar = step * n / HBAR_C_EV_UM * d
            b1, b2 = beta0(kbar, med)
            bracket = 2.0 * b1 + b2
            if curvature is not None:
                q1, q2, _ = beta2(kbar, med)
                bracket += 2.0 * curvature * (2.0 * q1 + q2)
            term = -(0.5 if n == 0 else 1.0) * bracket / d**3
            total += term
            if n > 0 and abs(term) < 1e-7 * abs(total):
                return total
            n += 1

    u_flat = planar(None)
    assert 0.984 < u_sphere / u_flat < 0.994
    # convex surface curving away from the particle: negative parameter
    u_curved = planar(-d / radius)
    assert abs(u_curved / u_sphere - 1.0) < 1.5e-3


def test_zero_temperature_path_against_planar_limit():
    # ground state next to a weakly curved mirror: the planar closed form
    # -3 hbar c alpha / (8 pi d^4) bounds the sphere value from above in
    # magnitude, with a deficit set by d/R (about 11% at d/R = 0.1)
    radius, d = 10.0, 1.0
    u = sphere_cp(radius, d, 0.0, 1.0, PEC, rel_tol=1e-7)
    flat = -3.0 * HBAR_C_EV_UM / (8.0 * math.pi * d**4)
    assert 0.87 < u / flat < 0.92


def test_convergence_report_bounds_refinement():
    coarse = sphere_cp_report(3.0, 1.0, 300.0, 1.0, EPS4, rel_tol=1e-7)
    fine = sphere_cp_report(3.0, 1.0, 300.0, 1.0, EPS4, rel_tol=1e-11)
    assert abs(coarse.energy_ev - fine.energy_ev) <= coarse.truncation_ev
    assert fine.n_matsubara >= coarse.n_matsubara
    assert coarse.l_max_used >= 40


def test_multipole_cap_raises():
    with pytest.raises(NonConvergentMultipoleSum):
        sphere_cp(30.0, 2.1, 300.0, 1.0, GOLD, l_cap=30)


def test_matsubara_cap_raises():
    with pytest.raises(QuadratureNonConvergence):
        sphere_cp(3.0, 1.0, 300.0, 1.0, EPS4, n_cap=3)


def test_sphere_input_validation():
    with pytest.raises(ConfigError):
        sphere_cp(-1.0, 1.0, 300.0, 1.0, EPS4)
    with pytest.raises(ConfigError):
        sphere_cp(1.0, 0.0, 300.0, 1.0, EPS4)
    with pytest.raises(ConfigError):
        sphere_cp(1.0, 1.0, -5.0, 1.0, EPS4)
    with pytest.raises(ConfigError):
        sphere_cp(1.0, 1.0, 300.0, "big", EPS4)
