import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import config
from config import QuadratureConfig
from exceptions import ConfigError, NonFiniteSample
from numerics import (
    BOUNDED,
    CONVERGED,
    DIVERGENT,
    INCONCLUSIVE,
    LogComplex,
    annulus_integral,
    as_points,
    classify_sup_over_rays,
    complex_svd_small,
    gauss_weighted_integral,
    log_abs_sum,
    norm2,
    polynomial_exponential_bound_holds,
    ray_directions,
    sphere_rule,
    tail_integral,
)

moderate = st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False)


# ---- LogComplex ----

@given(moderate, moderate)
@settings(max_examples=200)
def test_product_matches_complex_product(a, b):
    product = LogComplex.from_complex(a) * LogComplex.from_complex(b)
    assert_allclose(product.item(), a * b, rtol=1e-12)


@given(moderate, moderate)
@settings(max_examples=200)
def test_sum_matches_complex_sum(a, b):
    total = LogComplex.from_complex(a) + LogComplex.from_complex(b)
    assert abs(total.item() - (a + b)) <= 1e-12 * max(abs(a), abs(b))


@given(moderate, st.floats(min_value=-3.0, max_value=3.0))
@settings(max_examples=100)
def test_real_power_scales_log_magnitude(a, exponent):
    powered = LogComplex.from_complex(a) ** exponent
    assert float(powered.log_mag) == pytest.approx(exponent * math.log(abs(a)), abs=1e-12)


def test_zero_is_negative_infinite_log_with_zero_phase():
    zero = LogComplex.from_complex(0.0)
    assert np.isneginf(zero.log_mag)
    assert float(zero.phase) == 0.0
    assert (zero + LogComplex.from_complex(2.0)).item() == pytest.approx(2.0)


def test_nan_is_rejected():
    with pytest.raises(NonFiniteSample):
        LogComplex.from_complex(complex(math.nan, 0.0))
    with pytest.raises(NonFiniteSample):
        LogComplex(math.nan)


def test_reduce_sum_beyond_float_range():
    values = LogComplex(np.array([1000.0, 1000.0, 990.0]))
    total = values.reduce_sum()
    expected = 1000.0 + math.log(2.0 + math.exp(-10.0))
    assert float(total.log_mag) == pytest.approx(expected, abs=1e-12)


def test_reduce_sum_cancellation_gives_zero():
    values = LogComplex(np.array([5.0, 5.0]), np.array([0.0, math.pi]))
    assert float(values.reduce_sum().magnitude()) < 1e-10


def test_phase_is_wrapped():
    value = LogComplex(0.0, 3 * math.pi)
    assert float(value.phase) == pytest.approx(math.pi)


def test_division_by_zero_raises():
    with pytest.raises(ZeroDivisionError):
        LogComplex.ones() / LogComplex.zeros()


def test_log_abs_sum():
    assert log_abs_sum([0.0, 0.0]) == pytest.approx(math.log(2.0))
    assert log_abs_sum([]) == -math.inf

# ---- polynomial/exponential inequality ----

@given(
    st.floats(min_value=0.5, max_value=12.0),
    st.floats(min_value=0.01, max_value=0.99),
    st.floats(min_value=0.0, max_value=1e4),
)
@settings(max_examples=300)
def test_polynomial_exponential_bound(beta, fraction, x):
    assert polynomial_exponential_bound_holds(beta, fraction * beta, x)


def test_polynomial_exponential_bound_needs_beta_above_eps():
    with pytest.raises(ConfigError):
        polynomial_exponential_bound_holds(1.0, 2.0, 1.0)

# ---- points and rules ----

def test_as_points_shapes():
    assert as_points(1 + 2j).shape == (1, 1)
    assert as_points([1, 2], n=2).shape == (1, 2)
    assert as_points([1, 2, 3], n=1).shape == (3, 1)


@pytest.mark.parametrize("n, area", [(1, 2 * math.pi), (2, 2 * math.pi ** 2), (3, math.pi ** 3)])
def test_sphere_rule_area(n, area):
    points, weights = sphere_rule(n)
    assert weights.sum() == pytest.approx(area, rel=1e-12)
    assert_allclose(norm2(points), 1.0, atol=1e-12)


def test_sphere_rule_second_moment():
    points, weights = sphere_rule(2)
    # |z_1|^2 averages to 1/2 over the unit sphere of C^2
    assert np.sum(weights * np.abs(points[:, 0]) ** 2) == pytest.approx(math.pi ** 2, rel=1e-10)


def test_annulus_integral_of_one(cfg):
    value = annulus_integral(lambda w: LogComplex.ones(len(w)), 1, 0.0, 1.0, 2.0, cfg)
    assert value.item().real == pytest.approx(3 * math.pi, rel=1e-12)

# ---- weighted and tail integrals ----

@pytest.mark.parametrize("n", [1, 2])
def test_gaussian_integral(n, cfg):
    verdict = gauss_weighted_integral(lambda w: LogComplex.ones(len(w)), n, -1.0, np.zeros(n), cfg)
    assert verdict.classification == CONVERGED
    assert verdict.value == pytest.approx(math.pi ** n, rel=1e-10)


def test_off_centre_gaussian_product(cfg):
    a = np.array([1.5 - 0.5j])
    verdict = gauss_weighted_integral(lambda w: LogComplex(-norm2(w - a)), 1, -1.0, np.zeros(1), cfg)
    expected = 0.5 * math.pi * math.exp(-0.5 * abs(a[0]) ** 2)
    assert verdict.value == pytest.approx(expected, rel=1e-10)


def test_oscillating_integrand_keeps_phase(cfg):
    # mean value property: int e^{conj(u) w} e^{-|u|^2} dV(u) = pi
    w = 0.8 + 0.3j
    verdict = gauss_weighted_integral(lambda u: LogComplex.from_exponent(w * np.conj(u[:, 0])), 1, -1.0, 0.0, cfg)
    assert_allclose(verdict.total.item(), math.pi, rtol=1e-10)


def test_growing_integrand_is_divergent(cfg):
    verdict = gauss_weighted_integral(lambda w: LogComplex(1.5 * norm2(w)), 1, -1.0, np.zeros(1), cfg)
    assert verdict.classification == DIVERGENT
    assert verdict.value == math.inf


def test_tail_integral_of_gaussian(cfg):
    r = 1.0
    verdict = tail_integral(lambda w: LogComplex(-norm2(w)), 1, 0.0, r, cfg)
    assert verdict.value == pytest.approx(math.pi * math.exp(-r * r), rel=1e-8)


def test_tail_integral_rejects_negative_radius(cfg):
    with pytest.raises(ConfigError):
        tail_integral(lambda w: LogComplex.ones(len(w)), 1, 0.0, -1.0, cfg)

# ---- ray suprema ----

def test_ray_directions_are_unit():
    assert ray_directions(1).shape == (16, 1)
    rays = ray_directions(2)
    assert_allclose(norm2(rays), 1.0, atol=1e-12)
    assert_allclose(ray_directions(2), rays)


def test_decaying_functional_is_bounded():
    verdict = classify_sup_over_rays(lambda z: LogComplex(-float(norm2(z))), 1)
    assert verdict.classification == BOUNDED
    assert verdict.estimate == pytest.approx(1.0)


def test_gaussian_growth_is_divergent():
    verdict = classify_sup_over_rays(lambda z: LogComplex(0.05 * float(norm2(z))), 2)
    assert verdict.classification == DIVERGENT


def test_infinite_sample_is_divergent():
    verdict = classify_sup_over_rays(lambda z: math.inf if norm2(z) > 50 else 1.0, 1)
    assert verdict.classification == DIVERGENT


def _linear_log_growth(z):
    return LogComplex(0.5 * round(float(np.sqrt(norm2(z))), 6))


def test_growth_factor_comes_from_config():
    # log q rises by exactly 1 per step of 2 in radius
    rays = np.ones((1, 1), dtype=complex)
    assert classify_sup_over_rays(_linear_log_growth, 1, rays).classification == DIVERGENT
    patient = QuadratureConfig(divergence_growth_factor=4.0)
    verdict = classify_sup_over_rays(_linear_log_growth, 1, rays, cfg=patient)
    assert verdict.classification == INCONCLUSIVE


def test_ray_directions_follow_the_current_seed(monkeypatch):
    first = ray_directions(2, seed=11)
    monkeypatch.setattr(config.Sampling, "SEED", 11)
    assert_allclose(ray_directions(2), first)

# ---- small SVD ----

def test_complex_svd_reconstructs():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    V, sigma, W = complex_svd_small(A)
    assert_allclose(V @ np.diag(sigma) @ W, A, atol=1e-12)
    assert np.all(np.diff(sigma) <= 0)
