import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from exceptions import SpecDecodeError, UnboundedOperator
from fock_core import CPoint
from numerics import norm2
from operators import (
    IN_LP,
    NOT_IN_LP,
    PERSISTS,
    VANISHES,
    AdjointOf,
    AffineComposition,
    Dilation,
    GammaSpec,
    Identity,
    Lacunary,
    Translation,
    berezin,
    berezin_form_min,
    berezin_vanish_probe,
    boundedness_gate,
    composition_exponent_g,
    dilation_plocalization_closed_form,
    from_json,
    gaussian_profile,
    lacunary_F,
    pairing,
    to_json,
    trinomial,
    unitary_fixed_space,
    svd_localization_verdict,
)

Z = np.array([[0.4 - 0.3j], [1.5 + 0.2j], [-2.0 + 1.0j]])
W = np.array([[0.1 + 0.9j], [-0.7 - 0.4j], [2.5 + 0.0j]])

CONTRACTION = np.array([[0.3, 0.2j], [-0.1, 0.5 + 0.1j]])


# ---- pairings ----

def test_identity_berezin_is_one():
    assert berezin(Identity(2), CPoint((1 + 1j, -0.5j))).item() == pytest.approx(1.0)


def test_translation_pairing_at_shifted_point():
    a = CPoint((1.0 - 2.0j,))
    value = pairing(Translation(a), CPoint((0j,)), a)
    assert value.magnitude == pytest.approx(1.0)
    assert value.method == "closed_form"


def test_translation_berezin_modulus():
    a = CPoint((1.0 + 0.5j,))
    value = berezin(Translation(a), CPoint((0.3 - 2.0j,)))
    assert abs(value.item()) == pytest.approx(math.exp(-0.5 * abs(a.coords[0]) ** 2))


def test_translation_adjoint_is_opposite_translation():
    a = CPoint((0.6 + 0.2j,))
    explicit = AdjointOf(Translation(a)).pairing_values(Z, W)
    expected = Translation(CPoint((-a.coords[0],))).pairing_values(Z, W)
    assert_allclose(explicit.to_complex(), expected.to_complex(), rtol=1e-12)


def test_dilation_is_self_adjoint():
    op = Dilation(0.4)
    assert_allclose(AdjointOf(op).pairing_values(Z, W).to_complex(), op.pairing_values(Z, W).to_complex(), rtol=1e-12)


@pytest.mark.parametrize("op", [
    Identity(1),
    Translation(CPoint((1.0 - 0.5j,))),
    Dilation(0.3),
    AffineComposition.scalar(0.5j, 0.7),
])
def test_profile_matches_pairing_modulus(op):
    profile = gaussian_profile(op, Z)
    log_modulus = profile.log_gain - 0.5 * norm2(W - profile.center)
    assert_allclose(op.pairing_values(Z, W).log_mag, log_modulus, atol=1e-12)


def test_adjoint_profile_matches_adjoint_pairing():
    op = AffineComposition(CONTRACTION, CPoint((0.2, -0.4j)))
    z = np.array([[0.5, 1.0j], [-1.0, 0.3]])
    w = np.array([[1.0, 0.0], [0.2j, -0.6]])
    profile = gaussian_profile(op, z, adjoint=True)
    log_modulus = profile.log_gain - 0.5 * norm2(w - profile.center)
    assert_allclose(op.adjoint().pairing_values(z, w).log_mag, log_modulus, atol=1e-12)


def test_pairing_value_dict():
    data = pairing(Identity(1), CPoint((0j,)), CPoint((0j,))).to_dict()
    assert data["re"] == pytest.approx(1.0)
    assert data["log_magnitude"] == pytest.approx(0.0)
    assert set(data) == {"re", "im", "magnitude", "log_magnitude", "phase", "method", "est_rel_err"}

# ---- boundedness gate ----

def test_gate_rejects_large_norm():
    result = boundedness_gate(2 * np.eye(2), np.zeros(2))
    assert not result.bounded
    assert result.norm == pytest.approx(2.0)


def test_gate_rejects_shift_along_unit_direction():
    op = AffineComposition(np.eye(1), CPoint((1.0,)))
    assert not op.gate.bounded
    with pytest.raises(UnboundedOperator) as info:
        op.pairing_values(Z, W)
    assert info.value.witness is not None


def test_gate_accepts_shift_off_unit_directions():
    assert boundedness_gate(np.diag([1.0, 0.5]), np.array([0.0, 3.0])).bounded

# ---- lacunary ----

def test_lacunary_F_values():
    assert lacunary_F(0.0) == 0.0
    expected = math.exp(-1.0) * (1 + 1 / 2 + 1 / 24 + 1 / math.factorial(8))
    assert lacunary_F(1.0) == pytest.approx(expected, rel=1e-12)


def test_lacunary_F_large_argument_stays_finite():
    assert 0.0 < lacunary_F(5000.0) < 1.0


def test_lacunary_berezin_is_F():
    for t in (0.5, 1.0, 3.0):
        value = berezin(Lacunary(), CPoint((math.sqrt(t) * 1j,)))
        assert value.item().real == pytest.approx(lacunary_F(t), rel=1e-10)


def test_geometric_gamma_needs_small_ratio():
    with pytest.raises(SpecDecodeError):
        GammaSpec("geometric", value=1.0, ratio=2.0)

# ---- closed forms ----

@given(st.floats(min_value=-5.0, max_value=5.0), st.floats(min_value=0.1, max_value=8.0))
@settings(max_examples=200)
def test_trinomial_factorisation(sigma, p):
    assert trinomial(sigma, p) == pytest.approx((sigma - 1.0) * (p * sigma - p + 4.0), abs=1e-9)


@pytest.mark.parametrize("r, p", [(0.0, 2.0), (0.5, 2.5), (0.9, 2.1)])
def test_dilation_closed_form_matches_profile(r, p):
    z = np.array([[1.2 - 0.7j]])
    profile = gaussian_profile(Dilation(r), z)
    assert math.log(dilation_plocalization_closed_form(r, p, z)) == pytest.approx(
        float(profile.p_integral_log(p)[0]), abs=1e-10)


def test_composition_exponent_matches_profile():
    B = np.array([0.2, -0.4j])
    z = np.array([[0.5, 1.0j], [-1.0, 0.3], [2.0 - 1.0j, 0.5j]])
    profile = gaussian_profile(AffineComposition(CONTRACTION, CPoint(tuple(B))), z)
    for p in (1.5, 2.0, 3.0):
        assert_allclose(composition_exponent_g(CONTRACTION, B, z, p), profile.p_integral_log(p), atol=1e-10)


@pytest.mark.parametrize("A, expected", [
    (np.eye(2), 0.0),
    (0.5 * np.eye(2), 0.5),
    (np.diag([1.0, -1.0]), 0.0),
    (np.diag([1j, -1.0]), 1.0),
])
def test_berezin_form_min(A, expected):
    assert berezin_form_min(A) == pytest.approx(expected, abs=1e-12)


def test_unitary_fixed_space_dimensions():
    assert unitary_fixed_space(np.eye(2)).shape == (2, 2)
    assert unitary_fixed_space(np.diag([1.0, 1j])).shape == (2, 1)
    assert unitary_fixed_space(np.diag([1j, -1.0])).shape == (2, 0)

# ---- composition verdicts ----

@pytest.mark.parametrize("a, p, expected", [
    (0.5, 7.0, IN_LP),
    (0.5, 9.0, NOT_IN_LP),
    (-1.0, 1.5, IN_LP),
    (-1.0, 2.5, NOT_IN_LP),
    (1j, 2.5, NOT_IN_LP),
])
def test_one_variable_threshold(a, p, expected):
    assert svd_localization_verdict(np.array([[a]]), np.zeros(1), p).verdict == expected


def test_identity_symbol_is_localized():
    verdict = svd_localization_verdict(np.eye(1), np.zeros(1), 10.0)
    assert verdict.verdict == IN_LP


@pytest.mark.parametrize("p", [2.5, 3.0])
def test_half_identity_is_localized(p):
    assert svd_localization_verdict(0.5 * np.eye(2), np.zeros(2), p).verdict == IN_LP


def test_moving_unit_direction_is_not_localized():
    verdict = svd_localization_verdict(np.diag([1.0, 1j]), np.zeros(2), 2.5)
    assert verdict.verdict == NOT_IN_LP
    assert verdict.witness is not None


def test_unbounded_symbol_has_no_verdict():
    with pytest.raises(UnboundedOperator):
        svd_localization_verdict(np.eye(1), np.ones(1), 2.5)

# ---- Berezin probe ----

def test_rotation_berezin_vanishes():
    assert berezin_vanish_probe(AffineComposition.scalar(1j)).verdict == VANISHES


def test_identity_berezin_persists():
    probe = berezin_vanish_probe(Identity(1))
    assert probe.verdict == PERSISTS
    assert probe.witness_ray is not None

# ---- JSON codec ----

def test_decode_errors():
    with pytest.raises(SpecDecodeError):
        from_json("{not json")
    with pytest.raises(SpecDecodeError):
        from_json({"family": "nope"})
    with pytest.raises(SpecDecodeError):
        from_json({"family": "identity", "schema": "other/9"})
    with pytest.raises(SpecDecodeError):
        from_json({"family": "translation"})
    with pytest.raises(SpecDecodeError):
        from_json({"family": "dilation", "r": 1.5})


def test_decoded_spec_keeps_hash():
    op = AffineComposition(CONTRACTION, CPoint((0.2, -0.4j)))
    decoded = from_json(json.dumps(to_json(op)))
    assert decoded.param_hash() == op.param_hash()
    assert len(op.param_hash()) == 12
    assert Dilation(0.3).param_hash() != Dilation(0.4).param_hash()
