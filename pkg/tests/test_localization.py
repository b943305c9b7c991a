import math

import numpy as np
import pytest

import localization
from config import SCHEMA_TAG, Sampling
from exceptions import ConfigError, UnboundedOperator
from fock_core import CPoint
from localization import (
    FAIL,
    NOT_WL,
    PASS,
    REPORT_COLUMNS,
    WL,
    build_report,
    p_localization_integral,
    p_localization_sup,
    sl_gaussian_fit,
    sl_p_window,
    translated_kernel_integral,
    wl_probe,
    wl_tail,
    xz_decay_fit,
)
from operators import (
    AffineComposition,
    ConvolutionSymbol,
    Dilation,
    Identity,
    Translation,
    dilation_plocalization_closed_form,
)
from symbols import ClosedForm

Z = np.array([0.8 - 0.4j])


# ---- p-localization ----

def test_identity_integral_is_one(cfg):
    exact = p_localization_integral(Identity(1), Z, 3.0, cfg)
    by_quadrature = p_localization_integral(Identity(1), Z, 3.0, cfg, use_profile=False)
    assert exact.log_value == pytest.approx(0.0, abs=1e-12)
    assert by_quadrature.log_value == pytest.approx(0.0, abs=1e-8)


def test_dilation_quadrature_matches_closed_form(cfg):
    r, p = 0.5, 2.5
    verdict = p_localization_integral(Dilation(r), Z, p, cfg, use_profile=False)
    assert verdict.log_value == pytest.approx(math.log(dilation_plocalization_closed_form(r, p, Z)), abs=1e-8)


@pytest.mark.parametrize("op", [Translation(CPoint((1.0,))), AffineComposition.scalar(0.3 + 0.2j)])
def test_quadrature_route_matches_profile(op, cfg):
    by_quadrature = p_localization_integral(op, Z, 3.0, cfg, use_profile=False)
    exact = p_localization_integral(op, Z, 3.0, cfg)
    assert by_quadrature.method != exact.method
    assert by_quadrature.log_value == pytest.approx(exact.log_value, abs=1e-8)


@pytest.mark.parametrize("op", [Dilation(0.3), Translation(CPoint((0.5 + 0.5j,)))])
def test_translated_kernel_route_agrees(op, cfg):
    direct = p_localization_integral(op, Z, 2.5, cfg)
    translated = translated_kernel_integral(op, Z, 2.5, cfg)
    assert translated.log_value == pytest.approx(direct.log_value, abs=1e-6)


def test_p_must_be_positive(cfg):
    with pytest.raises(ConfigError):
        p_localization_integral(Identity(1), Z, 0.0, cfg)


def test_dilation_sup_flips_at_threshold(cfg):
    # 4 / (1 + r) = 8/3 for r = 1/2
    assert p_localization_sup(Dilation(0.5), 2.5, cfg=cfg).bounded
    assert not p_localization_sup(Dilation(0.5), 3.0, cfg=cfg).bounded

# ---- weak localization ----

def test_identity_tail(cfg):
    assert wl_tail(Identity(1), Z, 2.0, cfg) == pytest.approx(2 * math.pi * math.exp(-2.0), rel=1e-10)


def test_tail_by_quadrature_matches_profile(cfg):
    # S_phi with phi = 1 is the identity but has no Gaussian profile
    by_quadrature = wl_tail(ConvolutionSymbol(ClosedForm("one")), Z, 2.0, cfg)
    assert by_quadrature == pytest.approx(2 * math.pi * math.exp(-2.0), rel=1e-6)


def test_identity_is_weakly_localized(cfg):
    probe = wl_probe(Identity(1), cfg=cfg)
    assert probe.verdict == WL
    assert probe.witness is None


def test_partial_rotation_is_not_weakly_localized(cfg):
    probe = wl_probe(AffineComposition(np.diag([1.0, 1j])), cfg=cfg)
    assert probe.verdict == NOT_WL
    assert probe.witness is not None


def test_tail_ladder_must_increase(cfg):
    with pytest.raises(ConfigError):
        wl_probe(Identity(1), r_ladder=(0.0, 4.0, 2.0), cfg=cfg)

# ---- decay fits ----

def test_identity_decay_fits(cfg):
    xz = xz_decay_fit(Identity(1), cfg=cfg)
    sl = sl_gaussian_fit(Identity(1), cfg=cfg)
    assert xz.verdict == PASS
    assert sl.verdict == PASS
    assert sl.exponent == pytest.approx(0.5, abs=1e-8)


def _synthetic_profile(monkeypatch, log_m):
    d = np.array(Sampling.DISTANCE_GRID)
    monkeypatch.setattr(localization, "decay_profile", lambda *args, **kwargs: (d, log_m(d)))


def test_xz_fit_regresses_on_log_one_plus_d(monkeypatch, cfg):
    _synthetic_profile(monkeypatch, lambda d: 1.0 - 5.0 * np.log1p(d))
    fit = xz_decay_fit(Identity(1), cfg=cfg)
    assert fit.exponent == pytest.approx(5.0, abs=1e-10)
    assert fit.constant == pytest.approx(math.e, rel=1e-10)
    assert fit.holdout_excess == pytest.approx(0.0, abs=1e-10)
    assert fit.verdict == PASS


def test_xz_fit_checks_held_out_distances(monkeypatch, cfg):
    def bumped(d):
        log_m = -5.0 * np.log1p(d)
        log_m[len(d) // 2 + 1::2] += 3.0
        return log_m

    _synthetic_profile(monkeypatch, bumped)
    fit = xz_decay_fit(Identity(1), cfg=cfg)
    assert fit.exponent == pytest.approx(5.0, abs=1e-10)
    assert fit.holdout_excess == pytest.approx(3.0, abs=1e-10)
    assert fit.verdict == FAIL


def test_sl_p_window():
    assert sl_p_window(0.25) == (2.0, pytest.approx(4.0))
    assert sl_p_window(0.5) == (2.0, math.inf)

# ---- report ----

def test_identity_report(cfg):
    report = build_report(Identity(1), cfg, p_grid=(2.5, 6.0))
    assert report.chain_consistent
    assert report.wl_verdict == WL
    assert all(result.bounded for result in report.p_results)
    assert report.strongly_localized
    assert report.sufficiently_localized
    assert report.xz_localized

    frame = report.to_frame()
    assert list(frame.columns) == REPORT_COLUMNS
    assert set(frame["diagnostic"]) >= {"p_sup", "wl_tail", "xz_decay", "sl_decay", "berezin"}

    data = report.to_dict()
    assert data["schema"] == SCHEMA_TAG
    assert data["sl_p_check"]["consistent"]
    assert data["verdicts"] == {
        "strongly_localized": True,
        "sufficiently_localized": True,
        "xz_sufficiently_localized": True,
        "weakly_localized": WL,
    }


def test_dilation_report_is_not_strongly_localized(cfg):
    # p = 3 lies above 4 / (1 + r) = 8/3
    report = build_report(Dilation(0.5), cfg, p_grid=(2.5, 3.0))
    assert not report.strongly_localized
    assert report.to_dict()["verdicts"]["strongly_localized"] is False


def test_report_refuses_unbounded_composition(cfg):
    with pytest.raises(UnboundedOperator):
        build_report(AffineComposition(np.eye(1), CPoint((1.0,))), cfg)
