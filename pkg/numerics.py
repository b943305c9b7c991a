"""
Numerical substrate: log-domain complex scalars, Gaussian-weighted and tail
quadrature on C^n, ray-sampled suprema and small complex SVDs
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg
from scipy.special import gammaln, logsumexp, roots_jacobi

from config import Quadrature, QuadratureConfig, Sampling, Verdicts
from exceptions import ConfigError, ConvergenceFailure, DimMismatch, NonFiniteSample

logger = logging.getLogger(__name__)

CONVERGED = "converged"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"
BOUNDED = "bounded"

MAX_DIM = 4

# ============================================
# LOG-DOMAIN COMPLEX
# ============================================

def _wrap_phase(phase):
    """Map angles into (-pi, pi]"""
    return np.pi - np.mod(np.pi - phase, 2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class LogComplex:
    """
    Complex value (scalar or array) stored as natural log-magnitude and phase.

    A log_mag of -inf encodes zero; its phase is normalised to 0.
    """

    log_mag: np.ndarray
    phase: np.ndarray = 0.0

    def __post_init__(self):
        log_mag = np.array(self.log_mag, dtype=float)
        phase = np.array(self.phase, dtype=float)
        if np.isnan(log_mag).any() or np.isnan(phase).any():
            raise NonFiniteSample("LogComplex built from NaN")
        log_mag, phase = np.broadcast_arrays(log_mag, phase)
        is_zero = np.isneginf(log_mag)
        if (~np.isfinite(phase) & ~is_zero).any():
            raise NonFiniteSample("LogComplex phase is not finite")
        phase = np.where(is_zero, 0.0, _wrap_phase(np.where(is_zero, 0.0, phase)))
        object.__setattr__(self, "log_mag", np.array(log_mag))
        object.__setattr__(self, "phase", np.array(phase))

    # ---- constructors ----

    @classmethod
    def from_complex(cls, value):
        value = np.asarray(value, dtype=complex)
        if np.isnan(value).any():
            raise NonFiniteSample("complex value is NaN")
        with np.errstate(divide="ignore"):
            log_mag = np.log(np.abs(value))
        return cls(log_mag, np.angle(value))

    @classmethod
    def from_exponent(cls, exponent):
        """e^{exponent} for a complex exponent"""
        exponent = np.asarray(exponent, dtype=complex)
        return cls(exponent.real, exponent.imag)

    @classmethod
    def zeros(cls, shape=()):
        return cls(np.full(shape, -np.inf), np.zeros(shape))

    @classmethod
    def ones(cls, shape=()):
        return cls(np.zeros(shape), np.zeros(shape))

    @classmethod
    def concatenate(cls, parts):
        return cls(
            np.concatenate([np.atleast_1d(p.log_mag) for p in parts]),
            np.concatenate([np.atleast_1d(p.phase) for p in parts]),
        )

    # ---- conversion ----

    def to_complex(self):
        return np.exp(self.log_mag) * np.exp(1j * self.phase)

    def magnitude(self):
        return np.exp(self.log_mag)

    def item(self):
        values = np.asarray(self.to_complex()).reshape(-1)
        if values.size != 1:
            raise ValueError(f"item() needs a single value, got shape {self.shape}")
        return complex(values[0])

    @property
    def shape(self):
        return self.log_mag.shape

    def __len__(self):
        return len(self.log_mag)

    def __getitem__(self, index):
        return LogComplex(self.log_mag[index], self.phase[index])

    def __repr__(self):
        if self.log_mag.ndim == 0:
            return f"LogComplex(exp({float(self.log_mag):.6g}) * e^(i {float(self.phase):.6g}))"
        return f"LogComplex(shape={self.shape})"

    # ---- arithmetic ----

    @staticmethod
    def _coerce(other):
        if isinstance(other, LogComplex):
            return other
        return LogComplex.from_complex(other)

    def __mul__(self, other):
        other = self._coerce(other)
        return LogComplex(self.log_mag + other.log_mag, self.phase + other.phase)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if np.isneginf(other.log_mag).any():
            raise ZeroDivisionError("division by a zero LogComplex")
        return LogComplex(self.log_mag - other.log_mag, self.phase - other.phase)

    def __pow__(self, exponent):
        """Real power on the principal branch"""
        exponent = float(exponent)
        if exponent == 0.0:
            return LogComplex.ones(self.shape)
        return LogComplex(self.log_mag * exponent, self.phase * exponent)

    def __add__(self, other):
        other = self._coerce(other)
        a_mag, a_ph, b_mag, b_ph = np.broadcast_arrays(self.log_mag, self.phase, other.log_mag, other.phase)
        return LogComplex(np.stack([a_mag, b_mag]), np.stack([a_ph, b_ph])).reduce_sum(axis=0)

    __radd__ = __add__

    def __neg__(self):
        return LogComplex(self.log_mag, self.phase + np.pi)

    def conjugate(self):
        return LogComplex(self.log_mag, -self.phase)

    def abs(self):
        return LogComplex(self.log_mag, np.zeros_like(self.phase))

    def reduce_sum(self, axis=None):
        """Sum in a fixed order with the largest magnitude factored out"""
        log_mag = self.log_mag
        phase = self.phase
        if axis is None:
            log_mag = log_mag.ravel()
            phase = phase.ravel()
            axis = 0
        if log_mag.shape[axis] == 0:
            shape = np.delete(np.array(log_mag.shape), axis)
            return LogComplex.zeros(tuple(shape))
        peak = np.max(log_mag, axis=axis, keepdims=True)
        safe_peak = np.where(np.isfinite(peak), peak, 0.0)
        with np.errstate(invalid="ignore"):
            scaled = np.exp(log_mag - safe_peak) * np.exp(1j * phase)
        total = np.sum(scaled, axis=axis)
        peak = np.squeeze(peak, axis=axis)
        safe_peak = np.squeeze(safe_peak, axis=axis)
        with np.errstate(divide="ignore"):
            out_log = np.log(np.abs(total)) + safe_peak
        out_log = np.where(np.isneginf(peak), -np.inf, out_log)
        out_phase = np.angle(total)
        if np.isposinf(peak).any():
            out_log = np.where(np.isposinf(peak), np.inf, out_log)
            out_phase = np.where(np.isposinf(peak), 0.0, out_phase)
        return LogComplex(out_log, np.nan_to_num(out_phase))


def log_abs_sum(log_values):
    """log of a sum of non-negative terms given their logs"""
    log_values = np.asarray(log_values, dtype=float)
    if log_values.size == 0 or np.all(np.isneginf(log_values)):
        return -np.inf
    return float(logsumexp(log_values))


def polynomial_exponential_bound_holds(beta, eps, x):
    """e^{-eps x} <= (beta/eps)^beta / (1+x)^beta, compared in logs"""
    if not beta > eps > 0 or x < 0:
        raise ConfigError(f"need beta > eps > 0 and x >= 0, got {beta}, {eps}, {x}")
    lhs = -eps * x
    rhs = beta * math.log(beta / eps) - beta * math.log1p(x)
    return lhs <= rhs + 1e-12 * max(1.0, abs(rhs))

# ============================================
# POINT HELPERS
# ============================================

def as_points(points, n=None):
    """Coerce a point or batch of points to a (N, n) complex array"""
    if hasattr(points, "coords"):
        points = points.coords
    arr = np.asarray(points, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if (n is None or arr.shape[0] == n) else arr.reshape(-1, 1)
    if n is not None and arr.shape[1] != n:
        raise DimMismatch(f"expected points in C^{n}, got shape {arr.shape}")
    if not 1 <= arr.shape[1] <= MAX_DIM:
        raise DimMismatch(f"dimension must be between 1 and {MAX_DIM}, got {arr.shape[1]}")
    return arr


def hermitian(a, b):
    """<a, b> = sum_j a_j conj(b_j) along the last axis"""
    return np.sum(np.asarray(a) * np.conj(np.asarray(b)), axis=-1)


def norm2(a):
    return np.sum(np.abs(np.asarray(a)) ** 2, axis=-1)


def _to_real(points):
    points = np.asarray(points, dtype=complex)
    return np.concatenate([points.real, points.imag], axis=-1)


def _to_complex(coords, n):
    return coords[..., :n] + 1j * coords[..., n:]


def _evaluate(f, points):
    values = f(points)
    if not isinstance(values, LogComplex):
        values = LogComplex.from_complex(values)
    if values.shape != (points.shape[0],):
        values = LogComplex(
            np.broadcast_to(values.log_mag, (points.shape[0],)),
            np.broadcast_to(values.phase, (points.shape[0],)),
        )
    return values

# ============================================
# QUADRATURE RULES
# ============================================

@lru_cache(maxsize=None)
def gauss_hermite(order):
    """Physicists' Hermite rule for weight e^{-x^2}: nodes and log-weights"""
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    return nodes, np.log(weights)


@lru_cache(maxsize=None)
def _legendre_reference(order):
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(a, b, order):
    """Gauss-Legendre nodes and weights on [a, b]"""
    knots, weights = _legendre_reference(order)
    return 0.5 * (b - a) * knots + 0.5 * (b + a), 0.5 * (b - a) * weights


SPHERE_ORDERS = {1: (1, 64), 2: (16, 32), 3: (6, 8), 4: (4, 6)}


@lru_cache(maxsize=None)
def sphere_rule(n):
    """
    Cubature on the unit sphere of C^n.

    Squared moduli are Dirichlet(1, ..., 1) distributed under surface measure;
    they are generated by stick breaking with Gauss-Jacobi rules for the
    Beta(1, k) factors, and every phase gets an equispaced rule.
    Returns points (M, n) and weights summing to the sphere area 2 pi^n / (n-1)!.
    """
    simplex_order, phase_order = SPHERE_ORDERS[n]
    thetas = 2.0 * np.pi * np.arange(phase_order) / phase_order

    rows = np.zeros((1, 0))
    mod_weights = np.ones(1)
    remaining = np.ones(1)
    for k in range(n - 1, 0, -1):
        # u ~ Beta(1, k), density k (1 - u)^(k - 1)
        x, w = roots_jacobi(simplex_order, k - 1, 0)
        u = 0.5 * (x + 1.0)
        w = w / w.sum()
        rows = np.vstack([np.column_stack([np.tile(row, (len(u), 1)), rest * u]) for row, rest in zip(rows, remaining)])
        mod_weights = np.concatenate([weight * w for weight in mod_weights])
        remaining = np.concatenate([rest * (1.0 - u) for rest in remaining])
    rows = np.column_stack([rows, remaining])
    radii = np.sqrt(np.clip(rows, 0.0, None))

    phase_grid = np.stack(np.meshgrid(*([thetas] * n), indexing="ij"), axis=-1).reshape(-1, n)
    points = (radii[:, None, :] * np.exp(1j * phase_grid[None, :, :])).reshape(-1, n)
    weights = np.repeat(mod_weights, len(phase_grid)) / len(phase_grid)
    area = 2.0 * np.pi ** n / math.factorial(n - 1)
    return points, weights * area


def annulus_integral(f, n, center, inner, outer, cfg):
    """Integral of f over {inner <= |w - center| <= outer} in polar coordinates"""
    if outer <= inner:
        return LogComplex.zeros()
    center = as_points(center, n)[0]
    rho, rho_w = gauss_legendre(inner, outer, cfg.legendre_order)
    sphere_pts, sphere_w = sphere_rule(n)
    log_sphere_w = np.log(sphere_w)
    log_radial = np.log(rho_w) + (2 * n - 1) * np.log(rho)

    partials = []
    per_chunk = max(1, cfg.chunk_size // len(sphere_pts))
    for start in range(0, len(rho), per_chunk):
        rr = rho[start:start + per_chunk]
        pts = (center[None, None, :] + rr[:, None, None] * sphere_pts[None, :, :]).reshape(-1, n)
        values = _evaluate(f, pts)
        log_w = (log_radial[start:start + per_chunk, None] + log_sphere_w[None, :]).ravel()
        partials.append(LogComplex(values.log_mag + log_w, values.phase).reduce_sum())
    return LogComplex.concatenate(partials).reduce_sum()


def ball_integral(f, n, center, radius, cfg):
    return annulus_integral(f, n, center, 0.0, radius, cfg)

# ============================================
# INTEGRAL VERDICTS
# ============================================

@dataclass(frozen=True)
class IntegralVerdict:
    """Value of a quadrature ladder with its convergence classification"""

    value: object                   # float, complex or inf when divergent
    classification: str
    ladder_values: tuple
    log_value: float
    method: str = "ladder"
    total: LogComplex = field(default=None, repr=False)

    @property
    def converged(self):
        return self.classification == CONVERGED

    @property
    def divergent(self):
        return self.classification == DIVERGENT


def _plain_value(total):
    log_mag = float(total.log_mag)
    if log_mag > 709.0:
        return math.inf
    z = total.item()
    if abs(z.imag) <= 1e-13 * abs(z):
        return float(z.real)
    return z


def _classify_ladder(partial_logs, increment_logs, cfg):
    """Converged, divergent or inconclusive from annulus increments, all in logs"""
    if any(np.isposinf(p) for p in partial_logs):
        return DIVERGENT
    last = increment_logs[-1]
    if last == -math.inf or last <= math.log(cfg.rel_tol) + partial_logs[-1]:
        return CONVERGED
    if len(increment_logs) >= 3:
        step = math.log(cfg.divergence_growth_factor)
        a, b, c = increment_logs[-3:]
        if np.isfinite(a) and b - a >= step and c - b >= step:
            return DIVERGENT
    return INCONCLUSIVE


def _run_ladder(g, n, center, radii, cfg):
    """Pieces of the ladder and the running totals after each piece"""
    pieces = [annulus_integral(g, n, center, a, b, cfg) for a, b in radii]
    cumulative = []
    running = LogComplex.zeros()
    for piece in pieces:
        running = running + piece
        cumulative.append(running)
    return pieces, cumulative


def _ladder_verdict(pieces, cumulative, cfg, value_total=None, method="ladder"):
    partial_logs = [float(c.log_mag) for c in cumulative]
    increment_logs = [float(p.log_mag) for p in (pieces[1:] or pieces)]
    partial_values = tuple(math.exp(p) if p < 709.0 else math.inf for p in partial_logs)
    classification = _classify_ladder(partial_logs, increment_logs, cfg)
    if classification == DIVERGENT:
        return IntegralVerdict(math.inf, DIVERGENT, partial_values, math.inf, method, None)
    total = value_total if value_total is not None else cumulative[-1]
    return IntegralVerdict(_plain_value(total), classification, partial_values,
                           float(total.log_mag), method, total)


def _finite_difference(objective, x, h):
    """Value, gradient and Hessian of objective at x from one batched stencil"""
    dim = len(x)
    eye = np.eye(dim) * h
    stencil = [x]
    for i in range(dim):
        stencil.extend([x + eye[i], x - eye[i]])
    pairs = [(i, j) for i in range(dim) for j in range(i + 1, dim)]
    for i, j in pairs:
        stencil.extend([x + eye[i] + eye[j], x + eye[i] - eye[j], x - eye[i] + eye[j], x - eye[i] - eye[j]])
    values = objective(np.array(stencil))
    f0 = values[0]
    grad = np.empty(dim)
    hess = np.empty((dim, dim))
    for i in range(dim):
        fp, fm = values[1 + 2 * i], values[2 + 2 * i]
        grad[i] = (fp - fm) / (2 * h)
        hess[i, i] = (fp - 2 * f0 + fm) / h ** 2
    offset = 1 + 2 * dim
    for k, (i, j) in enumerate(pairs):
        fpp, fpm, fmp, fmm = values[offset + 4 * k: offset + 4 * k + 4]
        hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4 * h ** 2)
    return f0, grad, hess


def _laplace_frame(f, n, c, center, cfg):
    """Peak of log|f| + c|w - center|^2 and the matrix mapping Hermite nodes onto it"""
    dim = 2 * n
    x0 = _to_real(center)

    def objective(xs):
        pts = _to_complex(xs, n)
        return _evaluate(f, pts).log_mag + c * np.sum((xs - x0) ** 2, axis=1)

    fallback = (x0, np.eye(dim) / math.sqrt(-c), -0.5 * dim * math.log(-c))
    h = Quadrature.HESSIAN_STEP

    def curvature(x):
        f0, grad, hess = _finite_difference(objective, x, h)
        if not (np.isfinite(f0) and np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
            return None
        try:
            return f0, grad, hess, np.linalg.cholesky(-0.5 * hess)
        except np.linalg.LinAlgError:
            return None

    x = x0.copy()
    for _ in range(Quadrature.NEWTON_STEPS):
        local = curvature(x)
        if local is None:
            return fallback
        f0, grad, hess, _ = local
        step = np.linalg.solve(hess, grad)
        if np.linalg.norm(step) < 1e-10:
            break
        candidate = x - step
        if objective(candidate[None, :])[0] < f0 - 1e-12:
            break
        x = candidate

    local = curvature(x)
    if local is None:
        return fallback
    chol = local[3]
    scale = linalg.solve_triangular(chol.T, np.eye(dim), lower=False)
    log_det = -float(np.sum(np.log(np.diag(chol))))
    return x, scale, log_det


def _hermite_sum(g, n, peak, scale, log_det, cfg):
    """Tensor Gauss-Hermite sum of g around peak with nodes mapped by scale"""
    dim = 2 * n
    cap = int(math.floor(cfg.max_nodes ** (1.0 / dim)))
    order = max(Quadrature.MIN_ORDER, min(cfg.hermite_order, cap))
    nodes, log_weights = gauss_hermite(order)
    total_points = order ** dim
    partials = []
    for start in range(0, total_points, cfg.chunk_size):
        flat = np.arange(start, min(start + cfg.chunk_size, total_points))
        index = np.unravel_index(flat, (order,) * dim)
        y = np.stack([nodes[i] for i in index], axis=1)
        log_w = np.sum(np.stack([log_weights[i] for i in index], axis=1), axis=1) + np.sum(y ** 2, axis=1)
        xs = peak[None, :] + y @ scale.T
        values = _evaluate(g, _to_complex(xs, n))
        partials.append(LogComplex(values.log_mag + log_w + log_det, values.phase).reduce_sum())
    return LogComplex.concatenate(partials).reduce_sum()


def gauss_weighted_integral(f, n, c, center, cfg=None):
    """
    Integral of f(w) e^{c |w - center|^2} over C^n.

    Parameters
    ----------
    f : callable
        Maps a (N, n) complex array to a LogComplex of shape (N,).
    n : int
        Complex dimension, 1 to 4.
    c : float
        Gaussian weight coefficient; c >= 0 relies on the ladder classifier.
    center : point
        Center of the Gaussian weight.
    cfg : QuadratureConfig

    Returns
    -------
    IntegralVerdict
        For c < 0 the value is a Laplace-adapted Gauss-Hermite sum; the
        radius ladder around the integrand peak decides the classification.
    """
    cfg = cfg or QuadratureConfig()
    if not cfg.radius_ladder:
        raise ConfigError("empty radius ladder")
    if not 1 <= n <= MAX_DIM:
        raise DimMismatch(f"dimension must be between 1 and {MAX_DIM}, got {n}")
    center = as_points(center, n)[0]

    def weighted(points):
        values = _evaluate(f, points)
        return LogComplex(values.log_mag + c * norm2(points - center), values.phase)

    if c < 0:
        peak, scale, log_det = _laplace_frame(f, n, c, center, cfg)
        ladder_center = _to_complex(peak, n)
    else:
        ladder_center = center

    ladder = cfg.radius_ladder
    radii = [(0.0, ladder[0])] + list(zip(ladder[:-1], ladder[1:]))
    pieces, cumulative = _run_ladder(weighted, n, ladder_center, radii, cfg)

    if c < 0:
        total = _hermite_sum(weighted, n, peak, scale, log_det, cfg)
        verdict = _ladder_verdict(pieces, cumulative, cfg, value_total=total, method="hermite")
    else:
        verdict = _ladder_verdict(pieces, cumulative, cfg)
    logger.debug("gauss_weighted_integral n=%d c=%.3g -> %s", n, c, verdict.classification)
    return verdict


def tail_integral(f, n, center, r, cfg=None):
    """Integral of f over {|w - center| >= r}; the ladder extends the outer radius"""
    cfg = cfg or QuadratureConfig()
    if r < 0:
        raise ConfigError(f"tail radius must be non-negative, got {r}")
    if not cfg.radius_ladder:
        raise ConfigError("empty radius ladder")
    center = as_points(center, n)[0]
    outer = [r + R for R in cfg.radius_ladder]
    radii = [(r, outer[0])] + list(zip(outer[:-1], outer[1:]))
    pieces, cumulative = _run_ladder(f, n, center, radii, cfg)
    return _ladder_verdict(pieces, cumulative, cfg)

# ============================================
# SUPREMA OVER RAYS
# ============================================

@dataclass(frozen=True)
class SupVerdict:
    """Ray-sampled supremum of a non-negative functional"""

    classification: str             # bounded, divergent or inconclusive
    estimate: float
    location: np.ndarray
    samples: tuple = field(repr=False, default=())   # (ray index, radius, log value)

    @property
    def bounded(self):
        return self.classification == BOUNDED


def ray_directions(n, count=None, seed=None, extra=None):
    """Unit directions in C^n: equispaced angles for n = 1, seeded vectors plus axes otherwise"""
    seed = Sampling.SEED if seed is None else seed
    if n == 1:
        count = count or Sampling.RAYS_1D
        angles = 2.0 * np.pi * np.arange(count) / count
        rays = np.exp(1j * angles).reshape(-1, 1)
    else:
        count = count or Sampling.RAYS_ND
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
        raw /= np.sqrt(norm2(raw))[:, None]
        axes = np.eye(n, dtype=complex)
        rays = np.vstack([axes, 1j * axes, raw])
    if extra is not None:
        extra = as_points(extra, n)
        extra = extra / np.sqrt(norm2(extra))[:, None]
        rays = np.vstack([rays, extra])
    return rays


def parallel_map(fn, items, threads=1):
    """Map preserving input order"""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _log_of(value):
    if isinstance(value, LogComplex):
        return float(value.log_mag)
    value = float(value)
    if math.isnan(value):
        raise NonFiniteSample("sampled functional returned NaN")
    if value < 0:
        raise NonFiniteSample(f"sampled functional must be non-negative, got {value}")
    if value == 0:
        return -math.inf
    return math.log(value)


def classify_sup_over_rays(q, n, rays=None, ladder=None, threads=1, include_origin=True, cfg=None):
    """
    Sample q along rays at the ladder radii and classify its supremum.

    Divergent when on some ray the last three radii show log q rising with
    increasing slope by at least log(growth) overall, or rising by log(growth)
    at each step, with growth = cfg.divergence_growth_factor. Bounded when
    the last window stays within a small slack of the earlier maximum.
    """
    cfg = cfg or QuadratureConfig()
    rays = ray_directions(n) if rays is None else as_points(rays, n)
    ladder = tuple(cfg.radius_ladder if ladder is None else ladder)
    if len(rays) == 0:
        raise ConfigError("no ray directions")
    growth = math.log(cfg.divergence_growth_factor)

    points = [(ray_index, radius) for ray_index in range(len(rays)) for radius in ladder]
    logs = parallel_map(lambda item: _log_of(q(rays[item[0]] * item[1])), points, threads)
    table = np.array(logs, dtype=float).reshape(len(rays), len(ladder))
    origin_log = _log_of(q(np.zeros(n, dtype=complex))) if include_origin else -math.inf

    samples = [(-1, 0.0, origin_log)] if include_origin else []
    samples += [(i, ladder[k], float(table[i, k])) for i in range(len(rays)) for k in range(len(ladder))]

    best = max(samples, key=lambda s: s[2])
    location = np.zeros(n, dtype=complex) if best[0] < 0 else rays[best[0]] * best[1]

    if np.isposinf(table).any():
        i, k = np.argwhere(np.isposinf(table))[0]
        return SupVerdict(DIVERGENT, math.inf, rays[i] * ladder[k], tuple(samples))

    if len(ladder) >= 3:
        radii = np.array(ladder[-3:])
        for i in range(len(rays)):
            l1, l2, l3 = table[i, -3:]
            if not np.isfinite(l1):
                continue
            d1, d2 = l2 - l1, l3 - l2
            s1 = d1 / (radii[1] - radii[0])
            s2 = d2 / (radii[2] - radii[1])
            superlinear = d1 > 0 and d2 > 0 and s2 > s1 and d1 + d2 >= growth
            geometric = d1 >= growth and d2 >= growth
            if superlinear or geometric:
                return SupVerdict(DIVERGENT, math.inf, rays[i] * ladder[-1], tuple(samples))

    window = 2 if len(ladder) > 2 else 1
    earlier = np.concatenate([[origin_log], table[:, :-window].ravel()])
    last = table[:, -window:]
    estimate = math.exp(best[2]) if best[2] < 700 else math.inf
    if np.max(last) <= np.max(earlier) + Verdicts.SUP_SLACK_NATS:
        return SupVerdict(BOUNDED, estimate, location, tuple(samples))
    return SupVerdict(INCONCLUSIVE, estimate, location, tuple(samples))

# ============================================
# SMALL COMPLEX SVD
# ============================================

def complex_svd_small(A):
    """A = V diag(sigma) W with V, W unitary and sigma non-increasing"""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.shape[0] != A.shape[1] or not 1 <= A.shape[0] <= MAX_DIM:
        raise DimMismatch(f"expected a square matrix of size <= {MAX_DIM}, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteSample("matrix has non-finite entries")
    try:
        V, sigma, W = linalg.svd(A)
    except linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD did not converge: {exc}") from exc
    return V, sigma, W


def log_factorial(k):
    return gammaln(np.asarray(k, dtype=float) + 1.0)
