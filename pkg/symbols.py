"""
Symbols of the convolution-type operators S_phi (closed forms, multipliers,
densities) and measure symbols of the Toeplitz operators T_nu, with the
Carleson, covariance and windowed-Fourier checks built on them
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import dawsn, erfi, gammaln

from config import EXPRESSION_CATALOG, PHI_CATALOG, Quadrature, QuadratureConfig, Sampling
from exceptions import DimMismatch, SpecDecodeError
from fock_core import CPoint, normalized_kernel, u_action
from numerics import (
    BOUNDED,
    DIVERGENT,
    LogComplex,
    as_points,
    ball_integral,
    classify_sup_over_rays,
    gauss_legendre,
    gauss_weighted_integral,
    hermitian,
    norm2,
    ray_directions,
)

logger = logging.getLogger(__name__)

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

SQRT_2PI = math.sqrt(2.0 * math.pi)

# ============================================
# EXPRESSION CATALOG
# ============================================

def _complex_to_json(value):
    value = complex(value)
    return [value.real, value.imag]


def _complex_from_json(pair, default=(1.0, 0.0)):
    if pair is None:
        pair = default
    try:
        re, im = pair
        return complex(float(re), float(im))
    except (TypeError, ValueError) as exc:
        raise SpecDecodeError(f"expected an [re, im] pair, got {pair!r}") from exc


def _bound_to_json(x):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


@dataclass(frozen=True)
class Term:
    """
    One catalog term of a real-line function:

    indicator    scale on [lower, upper)
    gaussian     scale e^{-(x - center)^2 / (2 width^2)} e^{i frequency x}
    rational     scale / (1 + x^2)
    exponential  scale e^{i frequency x}
    """

    kind: str
    scale: complex = 1.0
    lower: float = -math.inf
    upper: float = math.inf
    center: float = 0.0
    width: float = 1.0
    frequency: float = 0.0

    def __post_init__(self):
        if self.kind not in EXPRESSION_CATALOG:
            raise SpecDecodeError(f"unknown term kind {self.kind!r}; expected one of {sorted(EXPRESSION_CATALOG)}")
        object.__setattr__(self, "scale", complex(self.scale))
        for name in ("lower", "upper", "center", "width", "frequency"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.kind == "indicator" and not self.lower < self.upper:
            raise SpecDecodeError(f"indicator needs lower < upper, got [{self.lower}, {self.upper})")
        if self.kind == "gaussian" and not self.width > 0:
            raise SpecDecodeError(f"gaussian width must be positive, got {self.width}")

    # ---- constructors ----

    @classmethod
    def indicator(cls, lower, upper, scale=1.0):
        return cls("indicator", scale, lower=lower, upper=upper)

    @classmethod
    def gaussian(cls, center=0.0, width=1.0, scale=1.0, frequency=0.0):
        return cls("gaussian", scale, center=center, width=width, frequency=frequency)

    @classmethod
    def rational(cls, scale=1.0):
        return cls("rational", scale)

    @classmethod
    def exponential(cls, frequency=0.0, scale=1.0):
        return cls("exponential", scale, frequency=frequency)

    # ---- evaluation ----

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "indicator":
            return np.where((x >= self.lower) & (x < self.upper), self.scale, 0.0 + 0.0j)
        if self.kind == "gaussian":
            return self.scale * np.exp(-0.5 * ((x - self.center) / self.width) ** 2 + 1j * self.frequency * x)
        if self.kind == "rational":
            return self.scale / (1.0 + x ** 2) + 0.0j
        return self.scale * np.exp(1j * self.frequency * x)

    def breakpoints(self):
        if self.kind != "indicator":
            return []
        return [b for b in (self.lower, self.upper) if math.isfinite(b)]

    @property
    def compact(self):
        return self.kind == "indicator" and math.isfinite(self.lower) and math.isfinite(self.upper)

    def l1_norm(self):
        a = abs(self.scale)
        if self.kind == "indicator":
            return a * (self.upper - self.lower)
        if self.kind == "gaussian":
            return a * self.width * SQRT_2PI
        if self.kind == "rational":
            return a * math.pi
        return math.inf if a > 0 else 0.0

    # ---- symmetries ----

    def conjugate(self):
        """x -> conj(term(x))"""
        return Term(self.kind, self.scale.conjugate(), self.lower, self.upper,
                    self.center, self.width, -self.frequency)

    def reflected(self):
        """x -> conj(term(-x))"""
        return Term(self.kind, self.scale.conjugate(), -self.upper, -self.lower,
                    -self.center, self.width, self.frequency)

    def fourier(self):
        """(2 pi)^{-1/2} int term(s) e^{i s x} ds, for gaussian terms"""
        if self.kind != "gaussian":
            raise ValueError(f"no closed-form Fourier transform for {self.kind} terms")
        scale = self.scale * self.width * np.exp(1j * self.frequency * self.center)
        return Term.gaussian(-self.frequency, 1.0 / self.width, scale, self.center)

    # ---- closed-form symbols ----

    def multiplier_phi(self, z):
        """int term(x) e^{-(x - i z)^2 / 2} dx for gaussian and exponential terms"""
        z = np.asarray(z, dtype=complex)
        log_scale = complex(math.log(abs(self.scale)), np.angle(self.scale)) if self.scale else -np.inf
        if self.kind == "exponential":
            return LogComplex.from_exponent(log_scale + math.log(SQRT_2PI) - self.frequency * z
                                            - 0.5 * self.frequency ** 2)
        a = 0.5 + 0.5 / self.width ** 2
        b = self.center / self.width ** 2 + 1j * self.frequency + 1j * z
        exponent = (log_scale + 0.5 * math.log(math.pi / a) + b ** 2 / (4.0 * a)
                    - 0.5 * self.center ** 2 / self.width ** 2 + 0.5 * z ** 2)
        return LogComplex.from_exponent(exponent)

    def density_phi(self, z):
        """int term(s) e^{-s^2 / 2} e^{-s z} ds for gaussian terms"""
        z = np.asarray(z, dtype=complex)
        log_scale = complex(math.log(abs(self.scale)), np.angle(self.scale)) if self.scale else -np.inf
        a = 0.5 + 0.5 / self.width ** 2
        b = self.center / self.width ** 2 + 1j * self.frequency - z
        exponent = (log_scale + 0.5 * math.log(math.pi / a) + b ** 2 / (4.0 * a)
                    - 0.5 * self.center ** 2 / self.width ** 2)
        return LogComplex.from_exponent(exponent)

    # ---- encoding ----

    def to_json(self):
        data = {"kind": self.kind, "scale": _complex_to_json(self.scale)}
        if self.kind == "indicator":
            data.update(lower=_bound_to_json(self.lower), upper=_bound_to_json(self.upper))
        elif self.kind == "gaussian":
            data.update(center=self.center, width=self.width, frequency=self.frequency)
        elif self.kind == "exponential":
            data.update(frequency=self.frequency)
        return data

    @classmethod
    def from_json(cls, data):
        try:
            return cls(
                data["kind"],
                _complex_from_json(data.get("scale")),
                lower=float(data.get("lower", "-inf")),
                upper=float(data.get("upper", "inf")),
                center=float(data.get("center", 0.0)),
                width=float(data.get("width", 1.0)),
                frequency=float(data.get("frequency", 0.0)),
            )
        except KeyError as exc:
            raise SpecDecodeError(f"term is missing field {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise SpecDecodeError(f"malformed term {data!r}: {exc}") from exc


@dataclass(frozen=True)
class Expression:
    """A finite sum of catalog terms"""

    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape, dtype=complex)
        for term in self.terms:
            total = total + term.evaluate(x)
        return total

    def breakpoints(self):
        return sorted({b for term in self.terms for b in term.breakpoints()})

    def support(self):
        """(lower, upper) when every term is a bounded indicator, else None"""
        if not self.terms or not all(term.compact for term in self.terms):
            return None
        return min(t.lower for t in self.terms), max(t.upper for t in self.terms)

    def l1_norm(self):
        return sum(term.l1_norm() for term in self.terms)

    def sup_abs(self):
        return sum(abs(term.scale) for term in self.terms)

    def split(self, kinds):
        picked = Expression(t for t in self.terms if t.kind in kinds)
        rest = Expression(t for t in self.terms if t.kind not in kinds)
        return picked, rest

    def conjugate(self):
        return Expression(t.conjugate() for t in self.terms)

    def reflected(self):
        return Expression(t.reflected() for t in self.terms)

    def fourier(self):
        return Expression(t.fourier() for t in self.terms)

    def to_json(self):
        return [t.to_json() for t in self.terms]

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, list):
            raise SpecDecodeError(f"expression must be a list of terms, got {data!r}")
        return cls(Term.from_json(item) for item in data)


def hilbert_multiplier():
    """m(x) = -i sgn(x) / sqrt(2 pi)"""
    c = 1.0 / SQRT_2PI
    return Expression((Term.indicator(0.0, math.inf, -1j * c), Term.indicator(-math.inf, 0.0, 1j * c)))

# ============================================
# WINDOWED REAL-LINE QUADRATURE
# ============================================

def _panel_edges(half_width):
    count = int(round(2.0 * half_width / Quadrature.PANEL_WIDTH))
    return np.linspace(-half_width, half_width, count + 1)


def window_integral(integrand, shifts, breakpoints, half_width=Quadrature.WINDOW_HALF_WIDTH, chunk=1024):
    """
    int_{-W}^{W} integrand(y, rows) dy for every row, with composite
    Gauss-Legendre panels split at breakpoints + shifts[row].

    integrand receives y of shape (R, P, K) and the row slice it belongs to.
    """
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    base = _panel_edges(half_width)
    knots, weights = gauss_legendre(-1.0, 1.0, Quadrature.PANEL_ORDER)
    out = np.empty(len(shifts), dtype=complex)
    for start in range(0, len(shifts), chunk):
        rows = slice(start, min(start + chunk, len(shifts)))
        size = rows.stop - rows.start
        edges = np.broadcast_to(base, (size, len(base)))
        if breakpoints:
            moved = np.clip(np.asarray(breakpoints)[None, :] + shifts[rows, None], -half_width, half_width)
            edges = np.sort(np.concatenate([edges, moved], axis=1), axis=1)
        lo, hi = edges[:, :-1], edges[:, 1:]
        half = 0.5 * (hi - lo)[..., None]
        y = half * knots + 0.5 * (hi + lo)[..., None]
        out[rows] = np.sum(integrand(y, rows) * half * weights, axis=(1, 2))
    return out


def multiplier_to_phi(m, z):
    """
    phi(z) = int m(x) e^{-(x - i z)^2 / 2} dx on C.

    Gaussian and exponential terms are integrated exactly; the remaining terms
    use phi(s + it) = e^{s^2/2} int m(y - t) e^{-y^2/2} e^{i s y} dy on a window.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    closed, rest = m.split(("gaussian", "exponential"))
    total = LogComplex.zeros(z.shape)
    for term in closed.terms:
        total = total + term.multiplier_phi(z)
    if rest.terms:
        s, t = z.real, z.imag

        def integrand(y, rows):
            tt = t[rows, None, None]
            ss = s[rows, None, None]
            return rest.evaluate(y - tt) * np.exp(-0.5 * y ** 2 + 1j * ss * y)

        window = window_integral(integrand, t, rest.breakpoints())
        total = total + LogComplex.from_complex(window) * LogComplex(0.5 * s ** 2)
    return total


def density_to_phi(g, z):
    """phi(z) = int g(s) e^{-s^2 / 2} e^{-s z} ds on C"""
    z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    if not math.isfinite(g.l1_norm()):
        raise SpecDecodeError("density must be integrable; exponential terms are not")
    closed, rest = g.split(("gaussian",))
    total = LogComplex.zeros(z.shape)
    for term in closed.terms:
        total = total + term.density_phi(z)
    if not rest.terms:
        return total

    s, t = z.real, z.imag
    support = rest.support()
    if support is not None:
        lo, hi = support
        edges = np.unique(np.concatenate([np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / Quadrature.PANEL_WIDTH)) + 1)),
                                          rest.breakpoints()]))
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            x, w = gauss_legendre(a, b, Quadrature.PANEL_ORDER)
            nodes.append(x)
            weights.append(w)
        sigma = np.concatenate(nodes)
        weight = np.concatenate(weights)
        peak = np.maximum(-lo * s, -hi * s)
        values = rest.evaluate(sigma)[None, :] * np.exp(
            -0.5 * sigma[None, :] ** 2 - sigma[None, :] * z[:, None] - peak[:, None])
        direct = values @ weight
        return total + LogComplex.from_complex(direct) * LogComplex(peak)

    def integrand(u, rows):
        ss = s[rows, None, None]
        tt = t[rows, None, None]
        return rest.evaluate(u - ss) * np.exp(-0.5 * u ** 2 - 1j * u * tt)

    window = window_integral(integrand, s, rest.breakpoints())
    return total + LogComplex.from_complex(window) * LogComplex.from_exponent(0.5 * s ** 2 + 1j * s * t)

# ============================================
# CLOSED-FORM SYMBOLS
# ============================================

SINC_SERIES_RADIUS = 1e-2
ERF_SERIES_RADIUS = 3.0
ERF_SERIES_TERMS = 80


def sinc_series(z):
    z2 = np.asarray(z, dtype=complex) ** 2
    return 1.0 - z2 / 6.0 + z2 ** 2 / 120.0 - z2 ** 3 / 5040.0


def sinc_direct(z):
    z = np.asarray(z, dtype=complex)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.sin(z) / z


def sinc(z):
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < SINC_SERIES_RADIUS
    return np.where(small, sinc_series(z), sinc_direct(np.where(small, 1.0, z)))


def erf_antiderivative(z):
    """A(z) = int_0^z e^{u^2} du as LogComplex"""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    log_mag = np.full(z.shape, -np.inf)
    phase = np.zeros(z.shape)

    small = (np.abs(z) <= ERF_SERIES_RADIUS) & (z != 0)
    if small.any():
        zs = z[small]
        k = np.arange(ERF_SERIES_TERMS)[:, None]
        # z^{2k+1} / (k! (2k+1))
        exponent = (2 * k + 1) * np.log(zs)[None, :] - gammaln(k + 1.0) - np.log(2.0 * k + 1.0)
        series = LogComplex.from_exponent(exponent).reduce_sum(axis=0)
        log_mag[small], phase[small] = series.log_mag, series.phase

    large = np.abs(z) > ERF_SERIES_RADIUS
    real_side = large & (np.abs(z.real) >= np.abs(z.imag))
    if real_side.any():
        zr = z[real_side]
        value = LogComplex.from_exponent(zr ** 2) * LogComplex.from_complex(dawsn(zr))
        log_mag[real_side], phase[real_side] = value.log_mag, value.phase
    imag_side = large & ~real_side
    if imag_side.any():
        value = LogComplex.from_complex(0.5 * math.sqrt(math.pi) * erfi(z[imag_side]))
        log_mag[imag_side], phase[imag_side] = value.log_mag, value.phase
    return LogComplex(log_mag, phase)


def _closed_coordinate(name, zeta, a=0.0, beta=4):
    """Single-variable closed-form symbols as LogComplex"""
    zeta = np.asarray(zeta, dtype=complex)
    if name == "one":
        return LogComplex.ones(zeta.shape)
    if name == "exponential":
        return LogComplex.from_exponent(a * zeta)
    if name == "sinc_beta":
        return LogComplex.from_exponent(0.5 * zeta ** 2) * LogComplex.from_complex(sinc(zeta)) ** beta
    if name == "erf_antiderivative":
        return _reshape(erf_antiderivative(zeta.ravel()), zeta.shape)
    if name == "hilbert":
        value = erf_antiderivative((zeta / math.sqrt(2.0)).ravel())
        return _reshape(value, zeta.shape) * (2.0 / math.sqrt(math.pi))
    raise SpecDecodeError(f"unknown closed-form symbol {name!r}; expected one of {sorted(PHI_CATALOG)}")


def _reshape(value, shape):
    return LogComplex(value.log_mag.reshape(shape), value.phase.reshape(shape))

# ============================================
# PHI SPECS
# ============================================

class PhiSpec:
    """Symbol phi of a convolution-type operator S_phi"""

    kind = "phi"
    method = CLOSED_FORM
    supports_product = False

    def evaluate(self, points):
        """phi at a batch of points of C^n, shape (N, n) or (N,)"""
        raise NotImplementedError

    def reflected(self):
        """psi(z) = conj(phi(-conj z)), the symbol of the adjoint"""
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError

    def _single_variable(self, points):
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 2:
            if pts.shape[1] != 1:
                raise DimMismatch(f"{self.kind} symbols are defined on C only")
            pts = pts[:, 0]
        return np.atleast_1d(pts)


@dataclass(frozen=True)
class ClosedForm(PhiSpec):
    """Catalog symbol scale * prod_j f(zeta_j); reflect switches to conj(phi(-conj zeta))"""

    name: str
    scale: complex = 1.0
    a: complex = 0.0
    beta: int = 4
    reflect: bool = False

    method = CLOSED_FORM
    supports_product = True

    def __post_init__(self):
        if self.name not in PHI_CATALOG:
            raise SpecDecodeError(f"unknown closed-form symbol {self.name!r}; expected one of {sorted(PHI_CATALOG)}")
        if self.name == "sinc_beta" and (int(self.beta) != self.beta or self.beta < 3):
            raise SpecDecodeError(f"sinc_beta needs an integer beta >= 3, got {self.beta}")
        object.__setattr__(self, "scale", complex(self.scale))
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "beta", int(self.beta))

    @property
    def kind(self):
        return self.name

    def evaluate(self, points):
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[:, None]
        args = -np.conj(pts) if self.reflect else pts
        coords = _closed_coordinate(self.name, args, self.a, self.beta)
        value = LogComplex(np.sum(coords.log_mag, axis=1), np.sum(coords.phase, axis=1)) * self.scale
        return value.conjugate() if self.reflect else value

    def reflected(self):
        return ClosedForm(self.name, self.scale, self.a, self.beta, not self.reflect)

    def to_json(self):
        data = {"kind": "closed_form", "name": self.name, "scale": _complex_to_json(self.scale)}
        if self.name == "exponential":
            data["a"] = _complex_to_json(self.a)
        if self.name == "sinc_beta":
            data["beta"] = self.beta
        if self.reflect:
            data["reflected"] = True
        return data


@dataclass(frozen=True)
class FromMultiplier(PhiSpec):
    """phi built from a bounded Fourier multiplier m on R"""

    m: Expression

    kind = "multiplier"

    @property
    def method(self):
        _, rest = self.m.split(("gaussian", "exponential"))
        return QUADRATURE if rest.terms else CLOSED_FORM

    def evaluate(self, points):
        return multiplier_to_phi(self.m, self._single_variable(points))

    def reflected(self):
        return FromMultiplier(self.m.conjugate())

    def to_json(self):
        return {"kind": "multiplier", "terms": self.m.to_json()}


@dataclass(frozen=True)
class FromDensity(PhiSpec):
    """phi built from an integrable density g on R"""

    g: Expression

    kind = "density"

    def __post_init__(self):
        if not math.isfinite(self.g.l1_norm()):
            raise SpecDecodeError("density symbols need a finite L1 norm; exponential terms are not integrable")

    @property
    def method(self):
        _, rest = self.g.split(("gaussian",))
        return QUADRATURE if rest.terms else CLOSED_FORM

    @property
    def support_radius(self):
        support = self.g.support()
        return None if support is None else max(abs(support[0]), abs(support[1]))

    def evaluate(self, points):
        return density_to_phi(self.g, self._single_variable(points))

    def reflected(self):
        return FromDensity(self.g.reflected())

    def to_json(self):
        data = {"kind": "density", "terms": self.g.to_json()}
        if self.support_radius is not None:
            data["support_radius"] = self.support_radius
        return data


def phi_catalog_eval(name, z, **params):
    """Closed-form catalog symbol at the points z of C"""
    return ClosedForm(name, **params).evaluate(np.atleast_1d(np.asarray(z, dtype=complex)))


def phi_from_json(data):
    if not isinstance(data, dict):
        raise SpecDecodeError(f"phi spec must be an object, got {data!r}")
    kind = data.get("kind")
    if kind == "closed_form":
        return ClosedForm(
            data.get("name", "one"),
            _complex_from_json(data.get("scale")),
            _complex_from_json(data.get("a"), default=(0.0, 0.0)),
            data.get("beta", 4),
            bool(data.get("reflected", False)),
        )
    if kind == "multiplier":
        return FromMultiplier(Expression.from_json(data.get("terms")))
    if kind == "density":
        return FromDensity(Expression.from_json(data.get("terms")))
    raise SpecDecodeError(f"unknown phi kind {kind!r}; expected closed_form, multiplier or density")

# ============================================
# MEASURE SPECS
# ============================================

class MeasureSpec:
    """Measure symbol nu; the weight e^{-|zeta|^2} of the Toeplitz pairing is applied internally"""

    kind = "measure"
    method = CLOSED_FORM

    def pairing_values(self, z, w, cfg=None):
        """int k_z conj(k_w) e^{-|zeta|^2} dnu for broadcast (N, n) batches"""
        raise NotImplementedError

    def apply(self, f, x, cfg=None):
        """int e^{<x, zeta>} f(zeta) e^{-|zeta|^2} dnu(zeta) for a batch of x"""
        raise NotImplementedError

    def covariance_side(self, z, w, cfg=None):
        """int e^{<w, z - zeta> - |z - zeta|^2} dnu(zeta) for a batch of w"""
        raise NotImplementedError

    def log_ball_mass(self, z, r, cfg=None):
        raise NotImplementedError

    def conjugate(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class DiscreteMeasure(MeasureSpec):
    """Finite sum of weighted point masses"""

    points: np.ndarray
    weights: np.ndarray

    kind = "discrete"

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=complex))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=complex))
        if len(points) != len(weights):
            raise DimMismatch(f"{len(points)} points but {len(weights)} weights")
        if not np.all(np.isfinite(weights)):
            raise SpecDecodeError("discrete measure weights must be finite")
        as_points(points)
        keep = weights != 0
        object.__setattr__(self, "points", points[keep])
        object.__setattr__(self, "weights", weights[keep])

    @classmethod
    def from_masses(cls, masses):
        """[(CPoint, weight), ...]"""
        masses = list(masses)
        if not masses:
            raise SpecDecodeError("discrete measure needs at least one point")
        return cls(np.array([p.coords for p, _ in masses]), np.array([w for _, w in masses]))

    @property
    def n(self):
        return self.points.shape[1]

    def _log_weights(self):
        return np.log(self.weights.astype(complex))

    def pairing_values(self, z, w, cfg=None):
        zeta = self.points
        exponent = (np.conj(z) @ zeta.T + w @ np.conj(zeta).T
                    - 0.5 * (norm2(z) + norm2(w))[:, None]
                    - norm2(zeta)[None, :] + self._log_weights()[None, :])
        return LogComplex.from_exponent(exponent).reduce_sum(axis=1)

    def apply(self, f, x, cfg=None):
        x = as_points(x, self.n)
        values = f(self.points)
        exponent = x @ np.conj(self.points).T - norm2(self.points)[None, :] + self._log_weights()[None, :]
        terms = LogComplex.from_exponent(exponent) * LogComplex(values.log_mag[None, :], values.phase[None, :])
        return terms.reduce_sum(axis=1)

    def covariance_side(self, z, w, cfg=None):
        w = as_points(w, self.n)
        moved = as_points(z, self.n)[0][None, :] - self.points
        exponent = w @ np.conj(moved).T - norm2(moved)[None, :] + self._log_weights()[None, :]
        return LogComplex.from_exponent(exponent).reduce_sum(axis=1)

    def log_ball_mass(self, z, r, cfg=None):
        z = as_points(z, self.n)[0]
        inside = norm2(self.points - z[None, :]) <= r ** 2 * (1.0 + 1e-12)
        mass = float(np.sum(np.abs(self.weights[inside])))
        return math.log(mass) if mass > 0 else -math.inf

    def conjugate(self):
        return DiscreteMeasure(self.points, np.conj(self.weights))

    def to_json(self):
        return {
            "kind": "discrete",
            "points": [[[c.real, c.imag] for c in row] for row in self.points],
            "weights": [_complex_to_json(wt) for wt in self.weights],
        }


@dataclass(frozen=True, eq=False)
class LatticeMeasure(MeasureSpec):
    """Equal masses on spacing * (Z + iZ)^n, coordinates limited to |Re|, |Im| <= spacing * extent"""

    spacing: float = 1.0
    extent: int = 20
    weight: complex = 1.0
    dim: int = 1
    discrete: DiscreteMeasure = field(init=False, repr=False)

    kind = "lattice"

    def __post_init__(self):
        if not self.spacing > 0 or self.extent < 0:
            raise SpecDecodeError(f"lattice needs spacing > 0 and extent >= 0, got {self.spacing}, {self.extent}")
        if not 1 <= self.dim <= 2:
            raise DimMismatch(f"lattice measures support n = 1 or 2, got {self.dim}")
        ticks = self.spacing * np.arange(-self.extent, self.extent + 1)
        axes = np.meshgrid(*([ticks] * (2 * self.dim)), indexing="ij")
        flat = np.stack([a.ravel() for a in axes], axis=1)
        points = flat[:, :self.dim] + 1j * flat[:, self.dim:]
        weights = np.full(len(points), complex(self.weight))
        object.__setattr__(self, "discrete", DiscreteMeasure(points, weights))

    @property
    def n(self):
        return self.dim

    def pairing_values(self, z, w, cfg=None):
        return self.discrete.pairing_values(z, w, cfg)

    def apply(self, f, x, cfg=None):
        return self.discrete.apply(f, x, cfg)

    def covariance_side(self, z, w, cfg=None):
        return self.discrete.covariance_side(z, w, cfg)

    def log_ball_mass(self, z, r, cfg=None):
        return self.discrete.log_ball_mass(z, r, cfg)

    def conjugate(self):
        return LatticeMeasure(self.spacing, self.extent, complex(self.weight).conjugate(), self.dim)

    def to_json(self):
        return {"kind": "lattice", "spacing": self.spacing, "extent": self.extent,
                "weight": _complex_to_json(self.weight), "n": self.dim}


DENSITY_PROFILES = ("constant", "gaussian", "exp_modulus")


@dataclass(frozen=True, eq=False)
class DensityMeasure(MeasureSpec):
    """
    dnu = h dV with

    constant     h = scale
    gaussian     h = scale e^{-rate |zeta - center|^2}
    exp_modulus  h = scale e^{rate |zeta|}
    """

    profile: str = "constant"
    scale: complex = 1.0
    rate: float = 0.0
    center: CPoint = None
    dim: int = 1

    kind = "density"

    def __post_init__(self):
        if self.profile not in DENSITY_PROFILES:
            raise SpecDecodeError(f"unknown density profile {self.profile!r}; expected one of {DENSITY_PROFILES}")
        center = self.center if self.center is not None else CPoint((0j,) * self.dim)
        if center.n != self.dim:
            raise DimMismatch(f"density center lives in C^{center.n}, expected C^{self.dim}")
        if self.profile == "gaussian" and not self.rate > -1.0:
            raise SpecDecodeError(f"gaussian density needs rate > -1, got {self.rate}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "scale", complex(self.scale))

    @property
    def n(self):
        return self.dim

    @property
    def method(self):
        return QUADRATURE if self.profile == "exp_modulus" else CLOSED_FORM

    @property
    def growth(self):
        return {"constant": "bounded", "gaussian": "bounded" if self.rate >= 0 else "gaussian-growth",
                "exp_modulus": "exponential"}[self.profile]

    def density(self, zeta):
        zeta = as_points(zeta, self.n)
        if self.profile == "constant":
            return LogComplex.ones(len(zeta)) * self.scale
        if self.profile == "gaussian":
            return LogComplex(-self.rate * norm2(zeta - self.center.array()[None, :])) * self.scale
        return LogComplex(self.rate * np.sqrt(norm2(zeta))) * self.scale

    def _quadrature(self, f, center, cfg):
        return gauss_weighted_integral(lambda zeta: f(zeta) * self.density(zeta), self.n, -1.0, center, cfg)

    def pairing_values(self, z, w, cfg=None):
        n = self.n
        if self.profile == "constant":
            exponent = hermitian(w, z) - 0.5 * (norm2(z) + norm2(w)) + n * math.log(math.pi)
            return LogComplex.from_exponent(exponent) * self.scale
        if self.profile == "gaussian":
            kappa = self.rate
            c0 = self.center.array()[None, :]
            exponent = (hermitian(w + kappa * c0, z + kappa * c0) / (1.0 + kappa)
                        - 0.5 * (norm2(z) + norm2(w)) - kappa * norm2(c0)
                        + n * math.log(math.pi / (1.0 + kappa)))
            return LogComplex.from_exponent(exponent) * self.scale
        values = [self.quadrature_pairing(zz, ww, cfg).total for zz, ww in zip(z, w)]
        return LogComplex.concatenate(values)

    def quadrature_pairing(self, z, w, cfg=None):
        """Pairing integral by quadrature, for any profile"""
        z = as_points(z, self.n)[0]
        w = as_points(w, self.n)[0]

        # the e^{-|zeta|^2} weight of the measure comes from _quadrature
        def integrand(zeta):
            return LogComplex.from_exponent(hermitian(zeta, z[None, :]) + hermitian(w[None, :], zeta)
                                            - 0.5 * (norm2(z) + norm2(w)))

        return self._quadrature(integrand, np.zeros(self.n, dtype=complex), cfg)

    def apply(self, f, x, cfg=None):
        x = as_points(x, self.n)
        out = []
        for point in x:
            def integrand(zeta, point=point):
                return LogComplex.from_exponent(hermitian(point[None, :], zeta)) * f(zeta)
            out.append(self._quadrature(integrand, np.zeros(self.n, dtype=complex), cfg).total)
        return LogComplex.concatenate(out)

    def covariance_side(self, z, w, cfg=None):
        z = as_points(z, self.n)[0]
        w = as_points(w, self.n)
        out = []
        for point in w:
            def integrand(zeta, point=point):
                return LogComplex.from_exponent(hermitian(point[None, :], z[None, :] - zeta))
            out.append(self._quadrature(integrand, z, cfg).total)
        return LogComplex.concatenate(out)

    def log_ball_mass(self, z, r, cfg=None):
        n = self.n
        if self.profile == "constant":
            return math.log(abs(self.scale)) + n * math.log(math.pi) + 2 * n * math.log(r) - math.lgamma(n + 1)
        cfg = cfg or QuadratureConfig()
        mass = ball_integral(lambda zeta: self.density(zeta).abs(), n, z, r, cfg)
        return float(mass.log_mag)

    def conjugate(self):
        return DensityMeasure(self.profile, self.scale.conjugate(), self.rate, self.center, self.dim)

    def to_json(self):
        data = {"kind": "density", "profile": self.profile, "scale": _complex_to_json(self.scale), "n": self.dim}
        if self.profile != "constant":
            data["rate"] = self.rate
        if self.profile == "gaussian":
            data["center"] = self.center.to_pairs()
        return data


def measure_from_json(data):
    if not isinstance(data, dict):
        raise SpecDecodeError(f"measure spec must be an object, got {data!r}")
    kind = data.get("kind")
    try:
        if kind == "discrete":
            points = [[_complex_from_json(c) for c in row] for row in data["points"]]
            weights = [_complex_from_json(wt) for wt in data.get("weights", [[1.0, 0.0]] * len(points))]
            return DiscreteMeasure(np.array(points, dtype=complex), np.array(weights, dtype=complex))
        if kind == "lattice":
            return LatticeMeasure(float(data.get("spacing", 1.0)), int(data.get("extent", 20)),
                                  _complex_from_json(data.get("weight")), int(data.get("n", 1)))
        if kind == "density":
            center = CPoint.from_pairs(data["center"]) if "center" in data else None
            return DensityMeasure(data.get("profile", "constant"), _complex_from_json(data.get("scale")),
                                  float(data.get("rate", 0.0)), center, int(data.get("n", 1)))
    except KeyError as exc:
        raise SpecDecodeError(f"{kind} measure is missing field {exc}") from exc
    raise SpecDecodeError(f"unknown measure kind {kind!r}; expected discrete, lattice or density")

# ============================================
# MEASURE CHECKS
# ============================================

def ball_mass(measure, z, r, cfg=None):
    """|nu|(B(z, r))"""
    return math.exp(measure.log_ball_mass(z, r, cfg))


@dataclass(frozen=True)
class CarlesonVerdict:
    """Sampled sup of ball masses"""

    classification: str
    sup_estimate: float
    witness: np.ndarray = None


def carleson_check(measure, r=1.0, rays=None, ladder=None, cfg=None):
    """Whether sup_z |nu|(B(z, r)) stays bounded along sampled rays"""
    if not r > 0:
        raise ValueError(f"Carleson radius must be positive, got {r}")
    rays = ray_directions(measure.n, Sampling.RAYS_1D if measure.n == 1 else None) if rays is None else rays

    def q(point):
        return LogComplex(measure.log_ball_mass(point, r, cfg))

    sup = classify_sup_over_rays(q, measure.n, rays, ladder, cfg=cfg)
    if sup.classification == BOUNDED:
        return CarlesonVerdict(PASS, sup.estimate)
    if sup.classification == DIVERGENT:
        logger.info("Ball masses of %s grow along %s", measure.kind, sup.location)
        return CarlesonVerdict(FAIL, sup.estimate, sup.location)
    return CarlesonVerdict(INCONCLUSIVE, sup.estimate, sup.location)


@dataclass(frozen=True)
class CovarianceCheck:
    """Both sides of U_z T_nu U_z 1 = T_{nu o phi_z} 1 at sampled w"""

    max_abs_deviation: float
    max_rel_deviation: float
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)


def toeplitz_covariance_check(measure, z, w_samples, cfg=None):
    """
    Compare U_z T_nu U_z 1 with T applied to the image measure under zeta -> z - zeta.

    The left side goes through u_action with the kernel k_z = U_z 1.
    """
    z = as_points(z, measure.n)
    w = as_points(w_samples, measure.n)

    def transformed(x):
        return measure.apply(lambda zeta: normalized_kernel(z, zeta), x, cfg)

    lhs = u_action(z, transformed, w).to_complex()
    rhs = measure.covariance_side(z, w, cfg).to_complex()
    deviation = np.abs(lhs - rhs)
    scale = np.maximum(np.abs(rhs), np.finfo(float).tiny)
    return CovarianceCheck(float(np.max(deviation)), float(np.max(deviation / scale)), lhs, rhs)

# ============================================
# MULTIPLIER AND SINC CHECKS
# ============================================

def _quad_complex(fn, lower, upper, points):
    points = [p for p in points if lower < p < upper] or None
    re, _ = integrate.quad(lambda y: fn(y).real, lower, upper, points=points, limit=400, epsabs=1e-14, epsrel=1e-12)
    im, _ = integrate.quad(lambda y: fn(y).imag, lower, upper, points=points, limit=400, epsabs=1e-14, epsrel=1e-12)
    return complex(re, im)


@dataclass(frozen=True)
class WindowCheck:
    lhs: float
    rhs: float
    rel_err: float


def window_identity_check(m, z, w):
    """
    e^{-|z - w|^2 / 2} |phi(w - conj z)| against the windowed Fourier form
    e^{-t^2/2} |int m(xi - t - 2 Im z) e^{-xi^2/2} e^{i xi s} dxi|, s + it = w - z,
    the latter integrated independently with adaptive quadrature.
    """
    z = complex(z)
    w = complex(w)
    phi = multiplier_to_phi(m, w - z.conjugate())[0]
    lhs = math.exp(-0.5 * abs(z - w) ** 2 + float(phi.log_mag))

    s, t = (w - z).real, (w - z).imag
    shift = t + 2.0 * z.imag
    half = Quadrature.WINDOW_HALF_WIDTH
    inner = _quad_complex(lambda xi: complex(m.evaluate(np.array([xi - shift]))[0]) * np.exp(-0.5 * xi ** 2 + 1j * xi * s),
                          -half, half, [b + shift for b in m.breakpoints()])
    rhs = math.exp(-0.5 * t ** 2) * abs(inner)
    return WindowCheck(lhs, rhs, abs(lhs - rhs) / max(abs(rhs), np.finfo(float).tiny))


def l2_window_mass(m, z):
    """
    int |phi(w - conj z)|^2 e^{-|w - z|^2} dV(w) on C, through Plancherel in Re w:
    2 pi sqrt(pi/2) int |m(x)|^2 e^{-(x + 2 Im z)^2 / 2} dx.
    """
    y0 = complex(z).imag
    half = Quadrature.WINDOW_HALF_WIDTH

    def integrand(x, rows):
        return np.abs(m.evaluate(x - 2.0 * y0)) ** 2 * np.exp(-0.5 * x ** 2)

    # x measured from the Gaussian center -2 Im z
    value = window_integral(integrand, np.array([2.0 * y0]), m.breakpoints(), half)[0].real
    return 2.0 * math.pi * math.sqrt(0.5 * math.pi) * value


@dataclass(frozen=True)
class SincWitness:
    """Evidence that the sinc-power symbol satisfies the polynomial bound but no Gaussian one"""

    vi_constant: float
    vi_finite: bool
    s_points: tuple
    ratios: dict                    # eps -> log-ratios along s_k
    ratio_increasing: dict          # eps -> eventually increasing with large final growth


def _eventually_increasing(log_values, min_growth=math.log(1e3)):
    log_values = np.asarray(log_values, dtype=float)
    start = int(np.argmin(log_values))
    tail = log_values[start:]
    return bool(len(tail) > 1 and np.all(np.diff(tail) > 0) and tail[-1] - tail[0] >= min_growth)


def sinc_witness_checks(beta=4, eps_list=(0.05, 0.1, 0.2), half_width=12.0, steps=97, k_max=8):
    """
    Polynomial bound |phi(s + it)| <= C e^{s^2/2} / (1 + |s|)^beta on |s|, |t| <= half_width,
    and the ratios |phi(s_k)| e^{-(1/2 - eps) s_k^2} at s_k = (2k + 1) pi / 2.
    """
    phi = ClosedForm("sinc_beta", beta=beta)
    grid = np.linspace(-half_width, half_width, steps)
    s, t = np.meshgrid(grid, grid, indexing="ij")
    values = phi.evaluate((s + 1j * t).ravel())
    logs = values.log_mag - 0.5 * s.ravel() ** 2 + beta * np.log1p(np.abs(s.ravel()))
    finite = logs[np.isfinite(logs)]
    vi_log = float(np.max(finite)) if finite.size else -math.inf
    vi_finite = bool(np.all(~np.isposinf(logs)) and math.isfinite(vi_log))

    s_points = tuple((2 * k + 1) * math.pi / 2 for k in range(1, k_max + 1))
    at_points = phi.evaluate(np.array(s_points, dtype=complex)).log_mag
    ratios = {}
    increasing = {}
    for eps in eps_list:
        seq = at_points - (0.5 - eps) * np.array(s_points) ** 2
        ratios[eps] = tuple(float(v) for v in seq)
        increasing[eps] = _eventually_increasing(seq)
    return SincWitness(math.exp(vi_log) if vi_log < 700 else math.inf, vi_finite, s_points, ratios, increasing)


def convolution_pairing_quadrature(phi, z, w, cfg=None):
    """
    <S_phi k_z, k_w> straight from S_phi F(x) = int F(zeta) e^{<x, zeta>} phi(x - conj zeta) dmu(zeta),
    dmu = pi^{-1} e^{-|zeta|^2} dV, evaluated at x = w and scaled by e^{-|w|^2/2}
    """
    z = as_points(z, 1)[0]
    w = as_points(w, 1)[0]

    def integrand(zeta):
        exponent = (hermitian(zeta, z[None, :]) - 0.5 * norm2(z) + hermitian(w[None, :], zeta)
                    - 0.5 * norm2(w) - math.log(math.pi))
        return LogComplex.from_exponent(exponent) * phi.evaluate(w[None, :] - np.conj(zeta))

    verdict = gauss_weighted_integral(integrand, 1, -1.0, np.zeros(1, dtype=complex), cfg)
    return verdict.total
