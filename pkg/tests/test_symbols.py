import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import integrate, special

from exceptions import SpecDecodeError
from fock_core import CPoint, sample_grid
from operators import ConvolutionSymbol, Identity
from symbols import (
    FAIL,
    PASS,
    ClosedForm,
    DensityMeasure,
    DiscreteMeasure,
    Expression,
    FromDensity,
    FromMultiplier,
    Term,
    ball_mass,
    carleson_check,
    convolution_pairing_quadrature,
    erf_antiderivative,
    hilbert_multiplier,
    l2_window_mass,
    measure_from_json,
    phi_catalog_eval,
    phi_from_json,
    sinc,
    sinc_witness_checks,
    toeplitz_covariance_check,
    window_identity_check,
)

POINTS = np.array([1.0, 0.5 + 1.0j, -1.2 + 0.3j, 2.0 - 1.5j])


# ---- closed forms ----

def test_exponential_symbol():
    a = 0.5 - 0.25j
    assert_allclose(phi_catalog_eval("exponential", POINTS, a=a).to_complex(), np.exp(a * POINTS), rtol=1e-12)


def test_reflected_symbol():
    phi = ClosedForm("exponential", a=0.5 + 0.2j)
    expected = np.conj(phi.evaluate(-np.conj(POINTS)).to_complex())
    assert_allclose(phi.reflected().evaluate(POINTS).to_complex(), expected, rtol=1e-12)


def test_sinc_power_needs_beta_three():
    with pytest.raises(SpecDecodeError):
        ClosedForm("sinc_beta", beta=2)


def test_unknown_closed_form():
    with pytest.raises(SpecDecodeError):
        ClosedForm("cosh")


def test_sinc_near_zero():
    assert_allclose(sinc(np.array([0.0, 1e-4, 1.0])), [1.0, 1.0 - 1e-8 / 6, math.sin(1.0)], rtol=1e-12)


def test_erf_antiderivative_branches():
    assert erf_antiderivative(2.0).item().real == pytest.approx(math.exp(4.0) * special.dawsn(2.0), rel=1e-12)
    assert erf_antiderivative(4.0).item().real == pytest.approx(math.exp(16.0) * special.dawsn(4.0), rel=1e-12)
    assert_allclose(erf_antiderivative(4.0j).item(), 0.5j * math.sqrt(math.pi) * math.erf(4.0), rtol=1e-12)

# ---- symbols built from multipliers and densities ----

def test_hilbert_multiplier_matches_closed_form():
    from_multiplier = FromMultiplier(hilbert_multiplier()).evaluate(POINTS)
    closed = ClosedForm("hilbert").evaluate(POINTS)
    assert_allclose(from_multiplier.to_complex(), closed.to_complex(), rtol=1e-8)
    assert abs(closed[0].item()) == pytest.approx(0.9534, abs=1e-4)


def test_gaussian_density_symbol():
    phi = FromDensity(Expression((Term.gaussian(),)))
    assert phi.method == "closed_form"
    expected = math.sqrt(math.pi) * np.exp(POINTS ** 2 / 4.0)
    assert_allclose(phi.evaluate(POINTS).to_complex(), expected, rtol=1e-12)


def test_indicator_density_symbol():
    phi = FromDensity(Expression((Term.indicator(-1.0, 1.0),)))
    assert phi.evaluate(np.array([0.0])).item().real == pytest.approx(
        math.sqrt(2 * math.pi) * math.erf(1 / math.sqrt(2)), rel=1e-12)

    z = 1.5 + 0.5j
    re, _ = integrate.quad(lambda s: (np.exp(-0.5 * s * s - s * z)).real, -1.0, 1.0)
    im, _ = integrate.quad(lambda s: (np.exp(-0.5 * s * s - s * z)).imag, -1.0, 1.0)
    assert_allclose(phi.evaluate(np.array([z])).item(), complex(re, im), rtol=1e-10)
    assert phi.support_radius == 1.0


def test_density_rejects_non_integrable_terms():
    with pytest.raises(SpecDecodeError):
        FromDensity(Expression((Term.exponential(1.0),)))


def test_term_validation():
    with pytest.raises(SpecDecodeError):
        Term.indicator(1.0, 1.0)
    with pytest.raises(SpecDecodeError):
        Term.gaussian(width=0.0)
    with pytest.raises(SpecDecodeError):
        Term("triangle")


def test_phi_from_json():
    phi = phi_from_json({"kind": "closed_form", "name": "sinc_beta", "beta": 5})
    assert phi.beta == 5
    with pytest.raises(SpecDecodeError):
        phi_from_json({"kind": "spline"})

# ---- measures ----

def test_lebesgue_measure_is_pi_times_identity():
    z = np.array([[0.3 - 0.8j], [1.0 + 0.0j]])
    w = np.array([[-0.5 + 0.2j], [0.4j]])
    lebesgue = DensityMeasure("constant").pairing_values(z, w)
    identity = Identity(1).pairing_values(z, w)
    assert_allclose(lebesgue.to_complex(), math.pi * identity.to_complex(), rtol=1e-12)


@pytest.mark.parametrize("measure", [
    DensityMeasure("constant"),
    DensityMeasure("gaussian", rate=0.5, center=CPoint((0.3 - 0.2j,))),
])
def test_density_pairing_quadrature_matches_closed_form(measure, cfg):
    z, w = np.array([0.3 + 0.4j]), np.array([-0.2 + 0.1j])
    closed = measure.pairing_values(z[None, :], w[None, :])[0].item()
    assert_allclose(measure.quadrature_pairing(z, w, cfg).total.item(), closed, rtol=1e-8)


def test_constant_density_ball_mass():
    assert ball_mass(DensityMeasure("constant"), np.array([5.0 + 5.0j]), 2.0) == pytest.approx(4.0 * math.pi)


def test_discrete_ball_mass():
    measure = DiscreteMeasure.from_masses([(CPoint((0j,)), 2.0), (CPoint((3.0 + 0j,)), 1.0)])
    assert ball_mass(measure, np.array([0.5]), 1.0) == pytest.approx(2.0)


SYMMETRIC_PAIR = DiscreteMeasure.from_masses([(CPoint((1.0 + 0j,)), 1.0), (CPoint((-1.0 + 0j,)), 1.0)])
COVARIANCE_WS = np.array([[0.2 + 0.1j], [-0.7 + 0.5j], [1.0 - 0.3j]])


@pytest.mark.parametrize("measure, tolerance", [
    (DiscreteMeasure.from_masses([(CPoint((0j,)), 1.0)]), 1e-10),
    (DiscreteMeasure.from_masses([(CPoint((0.5 - 0.5j,)), 2.0), (CPoint((-1.0j,)), 0.5)]), 1e-10),
    (SYMMETRIC_PAIR, 1e-10),
])
@pytest.mark.parametrize("z", list(sample_grid(1, count=3, radius=1.0, seed=5)[:, 0]))
def test_toeplitz_covariance(measure, tolerance, z, cfg):
    check = toeplitz_covariance_check(measure, CPoint((z,)), COVARIANCE_WS, cfg)
    assert check.max_abs_deviation <= tolerance


def test_lebesgue_covariance(cfg):
    check = toeplitz_covariance_check(DensityMeasure("constant"), CPoint((0.6 - 0.3j,)), COVARIANCE_WS, cfg)
    assert check.max_abs_deviation <= 1e-8


@given(st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False))
@settings(max_examples=50)
def test_symmetric_pair_covariance(z):
    check = toeplitz_covariance_check(SYMMETRIC_PAIR, CPoint((z,)), COVARIANCE_WS)
    assert check.max_abs_deviation <= 1e-10 * (1.0 + float(np.max(np.abs(check.rhs))))


def test_carleson_lebesgue_passes():
    assert carleson_check(DensityMeasure("constant")).classification == PASS


def test_carleson_exponential_density_fails(cfg):
    verdict = carleson_check(DensityMeasure("exp_modulus", rate=1.0), cfg=cfg)
    assert verdict.classification == FAIL
    assert verdict.witness is not None


def test_measure_decode_errors():
    with pytest.raises(SpecDecodeError):
        measure_from_json({"kind": "cantor"})
    with pytest.raises(SpecDecodeError):
        measure_from_json({"kind": "discrete"})
    with pytest.raises(SpecDecodeError):
        measure_from_json({"kind": "density", "profile": "gaussian", "rate": -2.0})

# ---- multiplier checks ----

@pytest.mark.parametrize("z", [0.0, 1.0j, -2.0j])
def test_hilbert_window_mass(z):
    assert l2_window_mass(hilbert_multiplier(), z) == pytest.approx(math.pi, rel=1e-8)


def test_sign_window_mass():
    sign = Expression((Term.indicator(0.0, math.inf), Term.indicator(-math.inf, 0.0, -1.0)))
    assert l2_window_mass(sign, 0.5j) == pytest.approx(2 * math.pi ** 2, rel=1e-8)


@pytest.mark.parametrize("m", [
    Expression((Term.gaussian(0.3, 0.8, 1.0, 0.5),)),
    Expression((Term.indicator(-1.0, 2.0),)),
])
def test_window_identity(m):
    check = window_identity_check(m, 0.4 - 0.7j, -0.2 + 0.5j)
    assert check.rel_err <= 1e-5


def test_sinc_power_witness():
    witness = sinc_witness_checks(beta=4)
    assert witness.vi_finite
    assert all(witness.ratio_increasing.values())


@pytest.mark.parametrize("phi", [ClosedForm("one"), ClosedForm("exponential", a=0.5)])
def test_pairing_quadrature_matches_closed_form(phi, cfg):
    z, w = np.array([0.3 + 0.4j]), np.array([-0.6 + 0.1j])
    closed = ConvolutionSymbol(phi).pairing_values(z, w)[0].item()
    direct = convolution_pairing_quadrature(phi, z, w, cfg).item()
    assert_allclose(direct, closed, rtol=1e-6)
