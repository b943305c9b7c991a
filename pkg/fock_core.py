"""
Fock space basics: points of C^n, reproducing kernels, the unitary actions
U_z and pointwise norm bounds used as oracles
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from config import QuadratureConfig, Sampling, Verdicts
from exceptions import ConfigError, DimMismatch, NormDiverged, SpecDecodeError
from numerics import (
    MAX_DIM,
    LogComplex,
    as_points,
    gauss_weighted_integral,
    hermitian,
    norm2,
)

logger = logging.getLogger(__name__)

# ============================================
# POINTS AND PARAMETERS
# ============================================

@dataclass(frozen=True)
class CPoint:
    """A point of C^n, 1 <= n <= 4"""

    coords: tuple

    def __post_init__(self):
        coords = tuple(complex(c) for c in np.atleast_1d(np.asarray(self.coords, dtype=complex)))
        if not 1 <= len(coords) <= MAX_DIM:
            raise DimMismatch(f"dimension must be between 1 and {MAX_DIM}, got {len(coords)}")
        if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in coords):
            raise DimMismatch(f"point has non-finite coordinates: {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def n(self):
        return len(self.coords)

    def array(self):
        return np.array(self.coords, dtype=complex)

    @classmethod
    def from_pairs(cls, pairs):
        """[[re, im], ...] as used by the JSON encodings"""
        try:
            return cls(tuple(complex(float(re), float(im)) for re, im in pairs))
        except (TypeError, ValueError) as exc:
            raise SpecDecodeError(f"expected a list of [re, im] pairs, got {pairs!r}") from exc

    def to_pairs(self):
        return [[c.real, c.imag] for c in self.coords]

    @classmethod
    def parse(cls, text):
        """'re,im;re,im' command-line form"""
        try:
            pairs = [part.split(",") for part in text.strip().split(";") if part.strip()]
            return cls(tuple(complex(float(re), float(im)) for re, im in pairs))
        except ValueError as exc:
            raise SpecDecodeError(f"cannot parse point {text!r}; expected 're,im;re,im'") from exc

    def __str__(self):
        return ";".join(f"{c.real:g},{c.imag:g}" for c in self.coords)


@dataclass(frozen=True)
class FockParams:
    """Weight exponent alpha and integrability exponent p of F^p_alpha"""

    alpha: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not self.p > 0:
            raise ConfigError(f"p must be positive, got {self.p}")

# ============================================
# KERNELS
# ============================================

def _pair_points(z, zeta):
    z = as_points(z)
    zeta = as_points(zeta)
    if z.shape[1] != zeta.shape[1]:
        raise DimMismatch(f"points live in C^{z.shape[1]} and C^{zeta.shape[1]}")
    return z, zeta


def kernel(z, zeta):
    """K_z(zeta) = e^{<zeta, z>}; broadcasts over batches of z or zeta"""
    z, zeta = _pair_points(z, zeta)
    return LogComplex.from_exponent(hermitian(zeta, z))


def normalized_kernel(z, zeta):
    """k_z(zeta) = e^{<zeta, z> - |z|^2 / 2}"""
    z, zeta = _pair_points(z, zeta)
    return LogComplex.from_exponent(hermitian(zeta, z) - 0.5 * norm2(z))


def u_action(z, f, w):
    """(U_z f)(w) = f(z - w) k_z(w); f maps (N, n) arrays to LogComplex"""
    z, w = _pair_points(z, w)
    if z.shape[0] != 1:
        raise DimMismatch("u_action takes a single base point z")
    values = f(z - w)
    if not isinstance(values, LogComplex):
        values = LogComplex.from_complex(values)
    return values * normalized_kernel(z, w)


def inner_product(f, g, n, cfg=None):
    """<f, g> in H^2(C^n, dmu) by Gaussian-weighted quadrature"""
    log_scale = -n * math.log(math.pi)

    def integrand(points):
        product = f(points) * g(points).conjugate()
        return LogComplex(product.log_mag + log_scale, product.phase)

    return gauss_weighted_integral(integrand, n, -1.0, np.zeros(n, dtype=complex), cfg)

# ============================================
# FOCK NORMS AND POINTWISE BOUNDS
# ============================================

def fock_norm(f, n, params=None, cfg=None):
    """
    ||f|| in F^p_alpha: ((alpha p / 2 pi)^n int |f|^p e^{-alpha p |z|^2 / 2} dV)^{1/p}.

    Raises NormDiverged when the quadrature ladder classifies the integral
    as divergent.
    """
    params = params or FockParams()
    p, alpha = params.p, params.alpha
    log_scale = n * math.log(alpha * p / (2.0 * math.pi))

    def integrand(points):
        values = f(points)
        if not isinstance(values, LogComplex):
            values = LogComplex.from_complex(values)
        return LogComplex(p * values.log_mag + log_scale, np.zeros_like(values.log_mag))

    verdict = gauss_weighted_integral(integrand, n, -0.5 * alpha * p, np.zeros(n, dtype=complex), cfg)
    if verdict.divergent:
        raise NormDiverged(f"F^{p:g}_{alpha:g} norm integral diverges (ladder {verdict.ladder_values})")
    return math.exp(verdict.log_value / p)


@dataclass(frozen=True)
class PointwiseBoundReport:
    """Outcome of the pointwise estimate |f(z)| <= ||f|| e^{alpha |z|^2 / 2}"""

    passed: bool
    norm: float
    worst_log_margin: float         # max of log|f(z)| - log bound; <= 0 when passing
    worst_point: np.ndarray
    samples: int


def sample_grid(n, count=32, radius=3.0, seed=None):
    """Seeded complex Gaussian points scaled by radius; the seed defaults to Sampling.SEED at call time"""
    rng = np.random.default_rng(Sampling.SEED if seed is None else seed)
    return radius * (rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))) / math.sqrt(2.0)


def pointwise_bound_check(f, n, params=None, points=None, cfg=None):
    """Check the F^p_alpha pointwise estimate on a seeded grid"""
    params = params or FockParams()
    cfg = cfg or QuadratureConfig()
    norm = fock_norm(f, n, params, cfg)
    points = sample_grid(n) if points is None else as_points(points, n)

    values = f(points)
    if not isinstance(values, LogComplex):
        values = LogComplex.from_complex(values)
    bound = math.log(norm) + 0.5 * params.alpha * norm2(points)
    margins = np.asarray(values.log_mag, dtype=float) - bound
    worst = int(np.argmax(margins))
    slack = math.log1p(Verdicts.POINTWISE_SLACK)
    report = PointwiseBoundReport(
        passed=bool(margins[worst] <= slack),
        norm=norm,
        worst_log_margin=float(margins[worst]),
        worst_point=points[worst],
        samples=len(points),
    )
    if not report.passed:
        logger.warning("Pointwise bound violated at %s by %.3g nats", points[worst], margins[worst])
    return report
