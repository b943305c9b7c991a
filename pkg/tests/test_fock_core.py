import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import config
from exceptions import ConfigError, DimMismatch, SpecDecodeError
from fock_core import (
    CPoint,
    FockParams,
    fock_norm,
    inner_product,
    kernel,
    normalized_kernel,
    pointwise_bound_check,
    sample_grid,
    u_action,
)
from numerics import LogComplex

coordinate = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def test_cpoint_parse_and_print():
    point = CPoint.parse("1,2;3,-1")
    assert point.coords == (1 + 2j, 3 - 1j)
    assert point.n == 2
    assert CPoint.parse(str(point)) == point


def test_cpoint_pairs():
    point = CPoint.from_pairs([[0.5, -1.0]])
    assert point.to_pairs() == [[0.5, -1.0]]


def test_cpoint_rejects_bad_input():
    with pytest.raises(SpecDecodeError):
        CPoint.parse("1;2")
    with pytest.raises(DimMismatch):
        CPoint((0, 0, 0, 0, 0))
    with pytest.raises(DimMismatch):
        CPoint((complex(math.inf, 0),))


def test_fock_params_validation():
    with pytest.raises(ConfigError):
        FockParams(alpha=0.0)
    with pytest.raises(ConfigError):
        FockParams(p=-1.0)


@given(coordinate, coordinate)
@settings(max_examples=100)
def test_normalized_kernel_modulus(z, w):
    value = normalized_kernel(np.array([z]), np.array([w]))
    expected = (w * np.conj(z)).real - 0.5 * abs(z) ** 2
    assert float(value.log_mag[0]) == pytest.approx(expected, abs=1e-12)


@given(coordinate, coordinate)
@settings(max_examples=100)
def test_kernel_is_hermitian(z, w):
    forward = kernel(np.array([z]), np.array([w])).item()
    backward = kernel(np.array([w]), np.array([z])).item()
    assert_allclose(forward, np.conj(backward), rtol=1e-12)


def test_u_action_is_an_involution():
    z = np.array([[0.7 - 0.4j, 0.2j]])
    w = sample_grid(2, count=8, radius=1.5)

    def f(points):
        return LogComplex.from_complex(points[:, 0] ** 2 + 2 * points[:, 1] + 1)

    twice = u_action(z, lambda x: u_action(z, f, x), w)
    assert_allclose(twice.to_complex(), f(w).to_complex(), rtol=1e-10, atol=1e-12)


def test_u_action_takes_single_base_point():
    with pytest.raises(DimMismatch):
        u_action(np.zeros((2, 1)), lambda x: LogComplex.ones(len(x)), np.zeros((1, 1)))


def test_normalized_kernel_has_unit_norm(cfg):
    z = np.array([1.0 - 0.5j])
    assert fock_norm(lambda pts: normalized_kernel(z, pts), 1, cfg=cfg) == pytest.approx(1.0, rel=1e-10)


def test_inner_product_of_kernels(cfg):
    z, w = np.array([0.3 + 0.6j]), np.array([-0.4 + 0.1j])
    verdict = inner_product(lambda pts: normalized_kernel(z, pts), lambda pts: normalized_kernel(w, pts), 1, cfg)
    expected = np.exp(w[0] * np.conj(z[0]) - 0.5 * (abs(z[0]) ** 2 + abs(w[0]) ** 2))
    assert_allclose(verdict.total.item(), expected, rtol=1e-9)


def test_pointwise_bound_holds_for_kernels(cfg):
    z = np.array([0.5 + 0.5j, -1.0])
    report = pointwise_bound_check(lambda pts: normalized_kernel(z, pts), 2, FockParams(1.0, 2.0), cfg=cfg)
    assert report.passed
    assert report.worst_log_margin <= 0
    assert report.samples == 32


def test_sample_grid_is_seeded():
    assert_allclose(sample_grid(1, count=5, seed=7), sample_grid(1, count=5, seed=7))
    assert sample_grid(2, count=5).shape == (5, 2)


def test_sample_grid_reads_the_seed_at_call_time(monkeypatch):
    expected = sample_grid(1, count=5, seed=11)
    monkeypatch.setattr(config.Sampling, "SEED", 11)
    assert_allclose(sample_grid(1, count=5), expected)
