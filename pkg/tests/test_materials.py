"""Material models, built-ins, the Matsubara ladder, and TOML interchange."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from curvecp.constants import HBAR_C_EV_UM
from curvecp.errors import (
    ConfigError,
    NegativeFrequency,
    StaticDrudeDivergence,
    UnknownMaterial,
    ZeroTemperatureLadder,
)
from curvecp.materials import (
    BROMOBENZENE,
    GOLD,
    PEC,
    POLYSTYRENE,
    SILICON,
    VACUUM,
    Constant,
    DebyeSingle,
    Material,
    MediumResponse,
    available,
    builtin,
    epsilon_or_pec,
    material_from_toml,
    material_to_toml,
    matsubara_ladder,
    matsubara_weight,
    matsubara_xi,
)


def test_gold_drude_parameters():
    model = GOLD.model
    assert model.omega_p_ev == 9.0
    assert model.gamma_ev == 0.035
    assert len(model.oscillators) == 6


def test_gold_at_one_ev():
    # frozen from 1 + 9**2/(1*(1+0.035)) + sum f/(w**2 + g + 1) over the six
    # oscillator rows
    assert GOLD.epsilon(1.0) == pytest.approx(84.87331966600165, rel=1e-14)


def test_static_permittivities():
    assert SILICON.epsilon(0.0) == pytest.approx(11.87, rel=1e-12)
    assert BROMOBENZENE.epsilon(0.0) == pytest.approx(5.302, rel=1e-12)
    # frozen: 1 + sum f/w**2 over the four oscillator rows
    assert POLYSTYRENE.epsilon(0.0) == pytest.approx(2.562263626711971, rel=1e-14)
    assert VACUUM.epsilon(0.0) == 1.0


def test_silicon_half_height_at_resonance():
    # at xi = omega_uv the Debye pole sits at half height
    mid = 1.035 + (11.87 - 1.035) / 2.0
    assert SILICON.epsilon(4.34) == pytest.approx(mid, rel=1e-14)


def test_drude_static_limit_raises():
    with pytest.raises(StaticDrudeDivergence):
        GOLD.epsilon(0.0)
    assert math.isinf(epsilon_or_pec(GOLD, 0.0))
    assert epsilon_or_pec(GOLD, 1.0) == GOLD.epsilon(1.0)


def test_pec_sentinel_everywhere():
    for xi in (0.0, 1e-3, 1.0, 250.0):
        assert math.isinf(PEC.epsilon(xi))
    assert PEC.is_pec
    assert not GOLD.is_pec


def test_negative_frequency_rejected():
    with pytest.raises(NegativeFrequency):
        GOLD.epsilon(-0.1)


@pytest.mark.parametrize("mat", [GOLD, SILICON, POLYSTYRENE, BROMOBENZENE])
def test_monotone_decreasing_along_imaginary_axis(mat):
    xis = [2.0**k for k in range(-8, 8)]
    values = [mat.epsilon(xi) for xi in xis]
    for lo, hi in zip(values[1:], values[:-1]):
        assert lo < hi
    assert all(v > 1.0 for v in values)


@given(st.floats(min_value=1e-6, max_value=1e3))
def test_gold_above_vacuum_and_decreasing(xi):
    val = GOLD.epsilon(xi)
    assert val > 1.0
    assert val <= GOLD.epsilon(xi / 2.0)


def test_builtin_lookup():
    assert builtin("Gold") is GOLD
    assert builtin("PEC") is PEC
    assert set(available()) == {
        "bromobenzene",
        "gold",
        "pec",
        "polystyrene",
        "silicon",
        "vacuum",
    }
    with pytest.raises(UnknownMaterial, match="teflon"):
        builtin("teflon")


def test_matsubara_ladder():
    # 2 pi k_B T at 300 K
    assert matsubara_xi(300.0, 1) == pytest.approx(0.1624329, rel=1e-5)
    assert matsubara_xi(300.0, 7) == pytest.approx(7 * matsubara_xi(300.0, 1), rel=1e-14)
    assert matsubara_weight(0) == 0.5
    assert matsubara_weight(3) == 1.0

    ladder = matsubara_ladder(300.0, 5)
    assert len(ladder) == 6
    assert ladder[0].xi_ev == 0.0
    assert ladder[0].kappa_inv_um == 0.0
    for rung in ladder:
        assert rung.xi_ev == pytest.approx(rung.n * matsubara_xi(300.0, 1), abs=1e-30)
        assert rung.kappa_inv_um == pytest.approx(rung.xi_ev / HBAR_C_EV_UM, abs=1e-30)

    with pytest.raises(ZeroTemperatureLadder):
        matsubara_xi(0.0, 1)
    with pytest.raises(NegativeFrequency):
        matsubara_xi(-1.0, 1)
    with pytest.raises(NegativeFrequency):
        matsubara_xi(300.0, -1)


def test_medium_response_flags():
    vac_gold = MediumResponse(1.0, 1.0, 84.9, 1.0)
    assert not vac_gold.is_pec
    assert not vac_gold.zero_contrast
    assert MediumResponse(1.0, 1.0, math.inf, 1.0).is_pec
    assert MediumResponse(2.3, 1.0, 2.3, 1.0).zero_contrast


@pytest.mark.parametrize("name", available())
def test_toml_round_trip_bit_exact(name):
    mat = builtin(name)
    text = material_to_toml(mat)
    back = material_from_toml(text)
    assert back == mat
    assert material_to_toml(back) == text


def test_toml_round_trip_awkward_floats():
    mat = Material(
        "awkward",
        DebyeSingle(1.0000000000000002, 11.87, 0.30000000000000004),
        mu=1.5,
    )
    back = material_from_toml(material_to_toml(mat))
    assert back.model.eps_inf == 1.0000000000000002
    assert back.model.omega_uv_ev == 0.30000000000000004
    assert back.mu == 1.5


def test_toml_layout_uses_model_sections():
    text = material_to_toml(GOLD)
    assert 'kind = "drude_oscillators"' in text
    assert "[drude]" in text
    assert text.count("[[oscillators]]") == 6
    assert "omega_eV = 3.05" in text
    assert "f_eV2 = 7.091" in text
    assert "g_eV = 0.75" in text
    assert 'kind = "two_band"' in material_to_toml(BROMOBENZENE)
    assert "[debye]" in material_to_toml(SILICON)


def test_toml_missing_key_named_in_error():
    text = material_to_toml(SILICON).replace("eps_static = 11.87\n", "")
    with pytest.raises(ConfigError, match="eps_static"):
        material_from_toml(text)


def test_toml_unknown_kind():
    text = material_to_toml(VACUUM).replace("constant", "plasma")
    with pytest.raises(ConfigError, match="plasma"):
        material_from_toml(text)


def test_toml_defaults_mu_to_one():
    text = 'name = "bare"\nkind = "pec"\n'
    assert material_from_toml(text) == Material("bare", material_from_toml(text).model)
    assert material_from_toml(text).mu == 1.0


def test_constant_material_round_trip():
    mat = Material("oil", Constant(2.25), mu=1.0)
    assert material_from_toml(material_to_toml(mat)) == mat
