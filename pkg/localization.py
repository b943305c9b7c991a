"""
Localization diagnostics for Fock space operators: p-localization integrals
and their suprema, weak-localization tails, polynomial and Gaussian decay fits,
collected into a LocalizationReport
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats

from config import SCHEMA_TAG, QuadratureConfig, Sampling, Verdicts
from exceptions import ConfigError, LabError, QuadratureDiverged
from fock_core import u_action
from numerics import (
    BOUNDED,
    CONVERGED,
    INCONCLUSIVE,
    IntegralVerdict,
    LogComplex,
    as_points,
    classify_sup_over_rays,
    gauss_weighted_integral,
    norm2,
    parallel_map,
    ray_directions,
    tail_integral,
)
from operators import (
    CLOSED_FORM,
    AdjointOf,
    AffineComposition,
    ConvolutionSymbol,
    Lacunary,
    apply_to_normalized_kernel,
    berezin_vanish_probe,
    to_json,
)

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"

WL = "WL"
NOT_WL = "not_WL"

REPORT_COLUMNS = ["family", "n", "param_hash", "diagnostic", "grid_value", "result", "classification"]

W_INTEGRATION_NOTE = "p-localization integrals are taken in w with the supremum over the base point z"

# ============================================
# SAMPLING SETS
# ============================================

def _underlying(op):
    return op.base if isinstance(op, AdjointOf) else op


def base_rays(op):
    """
    Directions for base points z. Pairing magnitudes of S_phi depend only on
    Im z and w - z, and lacunary pairings are rotation invariant, so those
    families need a single direction.
    """
    family = _underlying(op)
    if isinstance(family, ConvolutionSymbol):
        return np.array([[1j], [-1j]]) if family.n == 1 else 1j * np.eye(family.n, dtype=complex)
    if isinstance(family, Lacunary):
        return np.ones((1, 1), dtype=complex)
    return ray_directions(op.n)


def base_points(op, radii=Sampling.FIT_Z_RADII):
    """Origin plus every base ray scaled by the positive radii; S_phi uses the Im z grid"""
    family = _underlying(op)
    if isinstance(family, ConvolutionSymbol) and family.n == 1:
        return 1j * np.array(Sampling.SYMBOL_Y_GRID, dtype=float).reshape(-1, 1)
    rays = base_rays(op)
    points = [np.zeros((1, op.n), dtype=complex)]
    points += [rays * radius for radius in radii if radius > 0]
    return np.vstack(points)


def _log_to_float(log_value):
    return math.exp(log_value) if log_value < 709.0 else math.inf

# ============================================
# P-LOCALIZATION
# ============================================

def p_localization_integral(op, z, p, cfg=None, use_profile=True):
    """
    pi^{-n} int |<T k_z, k_w>|^p e^{(p/2 - 1)|z - w|^2} dV(w).

    Gaussian families use the exact exponent of their pairing profile;
    the rest, and every family when use_profile is False, go through
    Gaussian-weighted quadrature centred at z.
    A divergent ladder comes back as a divergent verdict.
    """
    if not p > 0:
        raise ConfigError(f"p must be positive, got {p}")
    n = op.n
    z = as_points(z, n)[:1]

    if op.gaussian and use_profile:
        log_value = float(op.profile(z).p_integral_log(p)[0])
        value = _log_to_float(log_value)
        return IntegralVerdict(value, CONVERGED, (value,), log_value, CLOSED_FORM, LogComplex(log_value))

    log_scale = -n * math.log(math.pi)

    def integrand(w):
        values = op.pairing_values(z, w, cfg)
        return LogComplex(p * values.log_mag + 0.5 * p * norm2(w - z) + log_scale)

    return gauss_weighted_integral(integrand, n, -1.0, z[0], cfg)


def translated_kernel_integral(op, z, p, cfg=None):
    """
    int |U_z T U_z 1|^p dmu, dmu = pi^{-n} e^{-|w|^2} dV, with U_z 1 = k_z.

    Equals p_localization_integral(op, z, p); the two routes cross-check
    each other.
    """
    if not p > 0:
        raise ConfigError(f"p must be positive, got {p}")
    n = op.n
    z = as_points(z, n)[:1]
    log_scale = -n * math.log(math.pi)

    def transported(w):
        values = u_action(z, lambda zeta: apply_to_normalized_kernel(op, z, zeta, cfg), w)
        return LogComplex(p * values.log_mag + log_scale)

    return gauss_weighted_integral(transported, n, -1.0, np.zeros(n, dtype=complex), cfg)


@dataclass(frozen=True)
class PSupResult:
    """Ray-sampled sup of the p-localization integral"""

    p: float
    classification: str
    estimate: float
    location: np.ndarray
    curve: tuple = field(repr=False, default=())    # (radius, max log value over rays)

    @property
    def bounded(self):
        return self.classification == BOUNDED

    def to_dict(self):
        return {
            "p": self.p,
            "classification": self.classification,
            "estimate": _json_float(self.estimate),
            "location": _json_point(self.location),
            "curve": [[r, _json_float(v)] for r, v in self.curve],
        }


def p_localization_sup(op, p, rays=None, ladder=None, cfg=None, threads=1):
    """Classify sup_z of the p-localization integral along sampled rays"""
    cfg = cfg or QuadratureConfig()
    rays = base_rays(op) if rays is None else as_points(rays, op.n)
    ladder = tuple(cfg.radius_ladder if ladder is None else ladder)

    def q(point):
        verdict = p_localization_integral(op, point, p, cfg)
        if verdict.divergent:
            return math.inf
        return LogComplex(verdict.log_value)

    sup = classify_sup_over_rays(q, op.n, rays, ladder, threads, cfg=cfg)
    by_radius = {}
    for _, radius, log_value in sup.samples:
        by_radius[radius] = max(by_radius.get(radius, -math.inf), log_value)
    curve = tuple(sorted(by_radius.items()))
    logger.debug("p=%.4g sup for %s: %s", p, op.label(), sup.classification)
    return PSupResult(float(p), sup.classification, sup.estimate, sup.location, curve)

# ============================================
# WEAK LOCALIZATION
# ============================================

def wl_tail(op, z, r, cfg=None):
    """
    int_{|w - z| >= r} |<T k_z, k_w>| dV(w).

    Gaussian families: G (2 pi)^n P(|X - z|^2 >= r^2) with X ~ N(m, I) on R^{2n},
    a non-central chi-square tail. Raises QuadratureDiverged when the ladder diverges.
    """
    if r < 0:
        raise ConfigError(f"tail radius must be non-negative, got {r}")
    n = op.n
    z = as_points(z, n)[:1]

    if op.gaussian:
        profile = op.profile(z)
        offset = float(profile.offset2()[0])
        if offset <= 1e-300:
            survival = stats.chi2.sf(r * r, 2 * n)
        else:
            survival = stats.ncx2.sf(r * r, 2 * n, offset)
        if survival <= 0:
            return 0.0
        return _log_to_float(float(profile.log_gain[0]) + n * math.log(2.0 * math.pi) + math.log(survival))

    verdict = tail_integral(lambda w: op.pairing_values(z, w, cfg).abs(), n, z[0], r, cfg)
    if verdict.divergent:
        raise QuadratureDiverged(f"tail integral of {op.label()} diverges at z={z[0]}, r={r}")
    if verdict.classification == INCONCLUSIVE:
        logger.debug("Tail ladder inconclusive for %s at r=%g; using the last partial", op.label(), r)
    return float(np.real(verdict.value))


@dataclass(frozen=True)
class WLProbe:
    """Sup-tail curves of T and T* over the r-ladder"""

    verdict: str
    radii: tuple
    tail_curve: tuple
    adjoint_curve: tuple
    witness: np.ndarray = None
    notes: tuple = ()

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "radii": list(self.radii),
            "tail_curve": [_json_float(v) for v in self.tail_curve],
            "adjoint_curve": [_json_float(v) for v in self.adjoint_curve],
            "witness": _json_point(self.witness),
        }


def wl_z_radii(r_ladder=Sampling.WL_R_LADDER):
    """Base point radii reaching WL_Z_SCALE times the tail radii"""
    return tuple(sorted(set(r_ladder) | {Sampling.WL_Z_SCALE * r for r in r_ladder}))


def _sup_tail_curve(op, points, r_ladder, cfg, threads):
    """sup over points of the tail at each r, with the maximising point per r"""
    def tails(point):
        out = []
        for r in r_ladder:
            try:
                out.append(wl_tail(op, point, r, cfg))
            except QuadratureDiverged:
                out.append(math.inf)
        return out

    table = np.array(parallel_map(tails, list(points), threads), dtype=float)
    best = np.argmax(table, axis=0)
    return tuple(float(v) for v in table.max(axis=0)), points[best]


def _curve_decays(curve, radii):
    curve = np.asarray(curve, dtype=float)
    if not np.all(np.isfinite(curve)) or curve[0] <= 0:
        return False
    if np.any(np.diff(curve) > 1e-6 * curve[0]):
        return False
    if curve[-1] <= Verdicts.WL_TAIL_FRACTION * curve[0]:
        return True
    radii = np.asarray(radii, dtype=float)
    upper = (radii > 0) & (radii >= radii[len(radii) // 2]) & (curve > 0)
    if upper.sum() < 2:
        return False
    slope = np.polyfit(np.log(radii[upper]), np.log(curve[upper]), 1)[0]
    return slope <= Verdicts.WL_DECAY_SLOPE


def _curve_persists(curve):
    curve = np.asarray(curve, dtype=float)
    if not np.isfinite(curve[0]):
        return True
    return curve[-1] >= Verdicts.WL_PERSIST_FRACTION * curve[0]


def wl_probe(op, r_ladder=None, points=None, cfg=None, threads=1):
    """
    WL when the sup-tail curves of both T and T* decay, not_WL when either
    stays above WL_PERSIST_FRACTION of its r = 0 value, inconclusive otherwise.
    """
    r_ladder = tuple(Sampling.WL_R_LADDER if r_ladder is None else r_ladder)
    if any(r < 0 for r in r_ladder) or list(r_ladder) != sorted(r_ladder):
        raise ConfigError(f"r-ladder must be non-negative and increasing: {r_ladder}")
    points = base_points(op, wl_z_radii(r_ladder)) if points is None else as_points(points, op.n)

    curve, argmax = _sup_tail_curve(op, points, r_ladder, cfg, threads)
    adjoint_curve, adjoint_argmax = _sup_tail_curve(op.adjoint(), points, r_ladder, cfg, threads)

    notes = []
    if _curve_persists(curve) or _curve_persists(adjoint_curve):
        verdict = NOT_WL
        witness = argmax[-1] if _curve_persists(curve) else adjoint_argmax[-1]
    elif _curve_decays(curve, r_ladder) and _curve_decays(adjoint_curve, r_ladder):
        verdict, witness = WL, None
    else:
        verdict, witness = INCONCLUSIVE, None
        notes.append("weak-localization tails neither decay nor persist on the r-ladder")
    if not (np.all(np.isfinite(curve)) and np.all(np.isfinite(adjoint_curve))):
        notes.append("a weak-localization tail integral diverged")
    logger.debug("WL probe for %s: %s", op.label(), verdict)
    return WLProbe(verdict, r_ladder, curve, adjoint_curve, witness, tuple(notes))

# ============================================
# DECAY FITS
# ============================================

@dataclass(frozen=True)
class DecayFit:
    """Fitted decay of M(d) = max |<T k_z, k_w>| over |z - w| = d"""

    exponent: float                 # beta_hat or eps_hat
    constant: float
    residual: float
    verdict: str
    distances: tuple = field(repr=False, default=())
    log_maxima: tuple = field(repr=False, default=())
    holdout_excess: float = math.nan    # worst log M + beta log(1+d) - log C on held-out distances

    @property
    def passed(self):
        return self.verdict == PASS

    def to_dict(self):
        return {
            "exponent": _json_float(self.exponent),
            "constant": _json_float(self.constant),
            "residual": _json_float(self.residual),
            "verdict": self.verdict,
            "distances": list(self.distances),
            "log_maxima": [_json_float(v) for v in self.log_maxima],
            "holdout_excess": _json_float(self.holdout_excess),
        }


def decay_profile(op, distance_grid=None, direction_grid=None, points=None, cfg=None):
    """log M(d) over the distance grid"""
    distances = np.asarray(Sampling.DISTANCE_GRID if distance_grid is None else distance_grid, dtype=float)
    directions = ray_directions(op.n) if direction_grid is None else as_points(direction_grid, op.n)
    directions = directions / np.sqrt(norm2(directions))[:, None]
    points = base_points(op) if points is None else as_points(points, op.n)

    z = np.repeat(points, len(directions), axis=0)
    u = np.tile(directions, (len(points), 1))
    log_maxima = []
    for d in distances:
        values = op.pairing_values(z, z + d * u, cfg)
        log_maxima.append(float(np.max(values.log_mag)))
    return distances, np.array(log_maxima)


def _line_fit(x, y):
    """Least-squares slope and root-mean-square residual"""
    coeffs = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((np.polyval(coeffs, x) - y) ** 2)))
    return float(coeffs[0]), residual


def xz_decay_fit(op, distance_grid=None, direction_grid=None, points=None, cfg=None):
    """
    Polynomial decay: beta_hat is minus the slope of log M against log(1 + d)
    over every other distance of the upper half of the grid, and
    C = max M(d)(1 + d)^beta_hat over the distances used for the fit and
    the lower half. The remaining distances are held out: the bound
    M(d) <= C (1 + d)^-beta_hat must hold there within XZ_HOLDOUT_NATS.
    Pass iff that holds and beta_hat > 2n + XZ_MARGIN.
    """
    d, log_m = decay_profile(op, distance_grid, direction_grid, points, cfg)
    upper = np.arange(len(d) // 2, len(d))
    fit_idx, held_idx = upper[::2], upper[1::2]
    finite = fit_idx[np.isfinite(log_m[fit_idx])]
    if len(finite) < 2:
        return DecayFit(math.nan, math.nan, math.nan, FAIL, tuple(d), tuple(log_m))

    slope, residual = _line_fit(np.log1p(d[finite]), log_m[finite])
    beta = -slope
    bounded = np.setdiff1d(np.arange(len(d)), held_idx)
    log_c = float(np.max(log_m[bounded] + beta * np.log1p(d[bounded])))
    excess = float(np.max(log_m[held_idx] + beta * np.log1p(d[held_idx]) - log_c)) if len(held_idx) else -math.inf
    passed = (beta > 2 * op.n + Verdicts.XZ_MARGIN and math.isfinite(log_c)
              and excess <= Verdicts.XZ_HOLDOUT_NATS)
    return DecayFit(beta, _log_to_float(log_c), residual, PASS if passed else FAIL, tuple(d), tuple(log_m), excess)


def sl_gaussian_fit(op, distance_grid=None, direction_grid=None, points=None, cfg=None):
    """
    Gaussian decay: eps_hat is the smaller of minus the slopes of log M
    against d^2 over the upper half and the upper quarter of the distance
    grid; C = max M(d) e^{eps_hat d^2}. Pass iff eps_hat >= SL_MIN_EPS.
    """
    d, log_m = decay_profile(op, distance_grid, direction_grid, points, cfg)
    slopes = []
    residuals = []
    for start in (len(d) // 2, (3 * len(d)) // 4):
        window = slice(start, None)
        finite = np.isfinite(log_m[window])
        if finite.sum() < 2:
            continue
        slope, residual = _line_fit(d[window][finite] ** 2, log_m[window][finite])
        slopes.append(slope)
        residuals.append(residual)
    if not slopes:
        return DecayFit(math.nan, math.nan, math.nan, FAIL, tuple(d), tuple(log_m))

    eps = float(min(-s for s in slopes))
    log_c = float(np.max(log_m + eps * d ** 2))
    passed = eps >= Verdicts.SL_MIN_EPS and math.isfinite(log_c)
    return DecayFit(eps, _log_to_float(log_c), max(residuals), PASS if passed else FAIL, tuple(d), tuple(log_m))


def sl_p_window(eps):
    """The p-interval (2, 1/(1/2 - eps)) tied to Gaussian decay rate eps"""
    upper = math.inf if eps >= 0.5 else 1.0 / (0.5 - eps)
    return 2.0, upper

# ============================================
# REPORT
# ============================================

def _json_float(value):
    if value is None:
        return None
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _json_point(point):
    if point is None:
        return None
    return [[float(c.real), float(c.imag)] for c in np.atleast_1d(point)]


@dataclass(frozen=True)
class LocalizationReport:
    """All diagnostics of one operator"""

    operator: object
    p_results: tuple
    wl: WLProbe
    xz_fit: DecayFit
    sl_fit: DecayFit
    berezin_probe: object
    sl_p_check: dict = None
    notes: tuple = ()

    @property
    def wl_verdict(self):
        return self.wl.verdict if self.wl is not None else INCONCLUSIVE

    @property
    def strongly_localized(self):
        """Bounded p-supremum at every sampled p"""
        return bool(self.p_results) and all(r.bounded for r in self.p_results)

    @property
    def sufficiently_localized(self):
        """Gaussian decay fit passed and, when tested, its p-window gave a bounded supremum"""
        if self.sl_fit is None or not self.sl_fit.passed:
            return False
        return self.sl_p_check is None or bool(self.sl_p_check["consistent"])

    @property
    def xz_localized(self):
        return self.xz_fit is not None and self.xz_fit.passed

    @property
    def chain_consistent(self):
        """SL pass implies XZ pass, and XZ pass rules out not_WL"""
        sl_ok = self.sl_fit is None or not self.sl_fit.passed or (self.xz_fit is not None and self.xz_fit.passed)
        xz_ok = self.xz_fit is None or not self.xz_fit.passed or self.wl_verdict != NOT_WL
        return sl_ok and xz_ok

    def to_dict(self):
        op = self.operator
        return {
            "schema": SCHEMA_TAG,
            "operator": to_json(op),
            "family": op.family,
            "n": op.n,
            "param_hash": op.param_hash(),
            "p_results": [r.to_dict() for r in self.p_results],
            "wl": self.wl.to_dict() if self.wl is not None else None,
            "xz_fit": self.xz_fit.to_dict() if self.xz_fit is not None else None,
            "sl_fit": self.sl_fit.to_dict() if self.sl_fit is not None else None,
            "berezin_probe": None if self.berezin_probe is None else {
                "verdict": self.berezin_probe.verdict,
                "witness_ray": _json_point(self.berezin_probe.witness_ray),
            },
            "sl_p_check": self.sl_p_check,
            "verdicts": {
                "strongly_localized": self.strongly_localized,
                "sufficiently_localized": self.sufficiently_localized,
                "xz_sufficiently_localized": self.xz_localized,
                "weakly_localized": self.wl_verdict,
            },
            "chain_consistent": self.chain_consistent,
            "notes": list(self.notes),
        }

    def to_rows(self):
        """One row per grid point, columns as in REPORT_COLUMNS"""
        op = self.operator
        head = {"family": op.family, "n": op.n, "param_hash": op.param_hash()}
        rows = []

        def add(diagnostic, grid_value, result, classification):
            rows.append({**head, "diagnostic": diagnostic, "grid_value": grid_value,
                         "result": result, "classification": classification})

        for result in self.p_results:
            add("p_sup", result.p, result.estimate, result.classification)
        if self.wl is not None:
            for r, t, t_adj in zip(self.wl.radii, self.wl.tail_curve, self.wl.adjoint_curve):
                add("wl_tail", r, t, self.wl.verdict)
                add("wl_tail_adjoint", r, t_adj, self.wl.verdict)
        for name, fit in (("xz_decay", self.xz_fit), ("sl_decay", self.sl_fit)):
            if fit is None:
                continue
            for d, log_m in zip(fit.distances, fit.log_maxima):
                add(name, d, _log_to_float(log_m), fit.verdict)
        if self.berezin_probe is not None:
            peaks = np.max(self.berezin_probe.curves, axis=0)
            for radius, peak in zip(self.berezin_probe.radii, peaks):
                add("berezin", radius, float(peak), self.berezin_probe.verdict)
        return rows

    def to_frame(self):
        return pd.DataFrame(self.to_rows(), columns=REPORT_COLUMNS)


def _attempt(label, fn, notes):
    try:
        return fn()
    except LabError as exc:
        logger.warning("%s failed: %s", label, exc)
        notes.append(f"{label}: {exc}")
        return None


def build_report(op, cfg=None, p_grid=None, r_ladder=None, threads=1):
    """Run every diagnostic on op and check the inclusion chain"""
    cfg = cfg or QuadratureConfig()
    if isinstance(op, AffineComposition):
        op.require_bounded()
    p_grid = tuple(Sampling.P_GRID if p_grid is None else p_grid)
    notes = [W_INTEGRATION_NOTE]

    p_results = _attempt("p-localization", lambda: tuple(
        parallel_map(lambda p: p_localization_sup(op, p, cfg=cfg), p_grid, threads)), notes) or ()
    wl = _attempt("weak localization", lambda: wl_probe(op, r_ladder, cfg=cfg, threads=threads), notes)
    if wl is not None:
        notes.extend(wl.notes)
    xz = _attempt("XZ decay fit", lambda: xz_decay_fit(op, cfg=cfg), notes)
    sl = _attempt("Gaussian decay fit", lambda: sl_gaussian_fit(op, cfg=cfg), notes)
    berezin = _attempt("Berezin probe", lambda: berezin_vanish_probe(op, base_rays(op), cfg=cfg), notes)

    sl_p_check = None
    if sl is not None and sl.passed:
        lower, upper = sl_p_window(sl.exponent)
        inside = [r for r in p_results if lower < r.p < upper]
        if not inside:
            p_test = round(lower + 0.5 * (min(upper, 4.0) - lower), 10)
            probe = _attempt("p-window probe", lambda: p_localization_sup(op, p_test, cfg=cfg), notes)
            inside = [probe] if probe is not None else []
        consistent = any(r.bounded for r in inside)
        sl_p_check = {"window": [lower, _json_float(upper)], "p_tested": [r.p for r in inside],
                      "consistent": consistent}
        if not consistent:
            notes.append("Gaussian decay passed but no p in its window gave a bounded supremum")

    report = LocalizationReport(op, p_results, wl, xz, sl, berezin, sl_p_check, tuple(notes))
    if not report.chain_consistent:
        logger.warning("Inclusion chain violated for %s", op.label())
    return report
