"""
Operator families acting on the Fock space: kernel pairings <T k_z, k_w>,
Berezin transforms, the boundedness gate for composition symbols and the
closed-form p-localization exponents of the Gaussian families
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from config import FAMILIES, SCHEMA_TAG, Quadrature, Verdicts
from exceptions import DimMismatch, SpecDecodeError, UnboundedOperator
from fock_core import CPoint
from numerics import (
    BOUNDED,
    DIVERGENT,
    MAX_DIM,
    LogComplex,
    as_points,
    classify_sup_over_rays,
    complex_svd_small,
    hermitian,
    log_factorial,
    norm2,
    ray_directions,
)
import symbols

logger = logging.getLogger(__name__)

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"
SERIES = "series"

IN_LP = "in_Lp"
NOT_IN_LP = "not_in_Lp"
INCONCLUSIVE = "inconclusive"

VANISHES = "vanishes"
PERSISTS = "persists"

MACHINE_REL_ERR = 1e-15

# ============================================
# POINT AND MATRIX HELPERS
# ============================================

def _broadcast_pair(z, w, n):
    """Two batches of points broadcast to a common (N, n) shape"""
    z = as_points(z, n)
    w = as_points(w, n)
    if len(z) != len(w) and 1 not in (len(z), len(w)):
        raise DimMismatch(f"cannot pair {len(z)} base points with {len(w)} targets")
    size = max(len(z), len(w))
    return np.broadcast_to(z, (size, n)), np.broadcast_to(w, (size, n))


def _as_matrix(A):
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.ndim != 2 or A.shape[0] != A.shape[1] or not 1 <= A.shape[0] <= MAX_DIM:
        raise DimMismatch(f"expected a square matrix of size <= {MAX_DIM}, got shape {A.shape}")
    return A


def _complex_to_json(value):
    value = complex(value)
    return [value.real, value.imag]


def _complex_from_json(pair):
    try:
        re, im = pair
        return complex(float(re), float(im))
    except (TypeError, ValueError) as exc:
        raise SpecDecodeError(f"expected an [re, im] pair, got {pair!r}") from exc

# ============================================
# BOUNDEDNESS GATE
# ============================================

@dataclass(frozen=True)
class GateResult:
    """Outcome of the composition boundedness test"""

    bounded: bool
    norm: float
    unit_directions: np.ndarray = field(repr=False)     # right singular vectors with sigma = 1
    witness: np.ndarray = None
    reason: str = ""


def boundedness_gate(A, B):
    """
    Boundedness of f -> f(A z + B) on the Fock space.

    Requires ||A|| <= 1 and <A zeta, B> = 0 for every zeta with |A zeta| = |zeta|,
    i.e. on the span of the right singular vectors whose singular value is 1.
    """
    A = _as_matrix(A)
    B = as_points(B, A.shape[0])[0]
    _, sigma, Wh = complex_svd_small(A)
    right = Wh.conj()               # rows are right singular vectors
    band = Verdicts.UNIT_SIGMA_BAND

    if sigma[0] > 1.0 + 1e-12:
        return GateResult(False, float(sigma[0]), right[:0], right[0],
                          f"||A|| = {sigma[0]:.6g} exceeds 1")

    unit = right[np.abs(sigma - 1.0) <= band]
    scale = max(1.0, float(np.sqrt(norm2(B))))
    for zeta in unit:
        overlap = hermitian(A @ zeta, B)
        if abs(overlap) > band * scale:
            return GateResult(False, float(sigma[0]), unit, zeta,
                              f"<A zeta, B> = {overlap:.3g} on a unit singular direction")
    return GateResult(True, float(sigma[0]), unit)

# ============================================
# LACUNARY COEFFICIENTS
# ============================================

@dataclass(frozen=True)
class GammaSpec:
    """
    Bounded coefficients gamma_k of the lacunary diagonal operator.

    kind: constant (gamma_k = value), geometric (value * ratio^k),
    harmonic (value / (k + 1)) or explicit (values, then tail forever).
    """

    kind: str = "constant"
    value: complex = 1.0
    ratio: complex = 1.0
    values: tuple = ()
    tail: complex = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "geometric", "harmonic", "explicit"):
            raise SpecDecodeError(f"unknown gamma kind {self.kind!r}")
        object.__setattr__(self, "value", complex(self.value))
        object.__setattr__(self, "ratio", complex(self.ratio))
        object.__setattr__(self, "tail", complex(self.tail))
        object.__setattr__(self, "values", tuple(complex(v) for v in self.values))
        if self.kind == "geometric" and abs(self.ratio) > 1.0:
            raise SpecDecodeError(f"geometric gamma needs |ratio| <= 1, got {self.ratio}")

    def coefficient(self, k):
        if self.kind == "constant":
            return self.value
        if self.kind == "geometric":
            return self.value * self.ratio ** k
        if self.kind == "harmonic":
            return self.value / (k + 1)
        return self.values[k] if k < len(self.values) else self.tail

    def sup_abs(self):
        if self.kind == "explicit":
            return max([abs(v) for v in self.values] + [abs(self.tail)])
        return abs(self.value)

    def conjugate(self):
        return GammaSpec(self.kind, self.value.conjugate(), self.ratio.conjugate(),
                         tuple(v.conjugate() for v in self.values), self.tail.conjugate())

    def to_json(self):
        data = {"kind": self.kind}
        if self.kind == "explicit":
            data["values"] = [_complex_to_json(v) for v in self.values]
            data["tail"] = _complex_to_json(self.tail)
        else:
            data["value"] = _complex_to_json(self.value)
        if self.kind == "geometric":
            data["ratio"] = _complex_to_json(self.ratio)
        return data

    @classmethod
    def from_json(cls, data):
        kind = data.get("kind", "constant")
        if kind == "explicit":
            return cls(kind, values=tuple(_complex_from_json(v) for v in data.get("values", [])),
                       tail=_complex_from_json(data.get("tail", [0, 0])))
        return cls(kind, value=_complex_from_json(data.get("value", [1, 0])),
                   ratio=_complex_from_json(data.get("ratio", [1, 0])))


MAX_LACUNARY_INDEX = 62


def lacunary_log_terms(log_x, phase_x, gamma, tail_nats=Verdicts.SERIES_TAIL_NATS):
    """
    Terms gamma_k x^(2^k) / (2^k)! of the lacunary series, as arrays of
    log-magnitudes and phases of shape (K, N). Stops once every column has
    passed its peak and the next term sits tail_nats below the running max.
    """
    log_x = np.atleast_1d(np.asarray(log_x, dtype=float))
    phase_x = np.atleast_1d(np.asarray(phase_x, dtype=float))
    peak_log_x = float(np.max(log_x)) if log_x.size else -math.inf
    logs, phases = [], []
    running = np.full(log_x.shape, -np.inf)
    for k in range(MAX_LACUNARY_INDEX + 1):
        power = 2.0 ** k
        coefficient = gamma.coefficient(k)
        with np.errstate(invalid="ignore"):
            log_term = power * log_x - float(log_factorial(power)) + (
                math.log(abs(coefficient)) if coefficient != 0 else -math.inf)
        log_term = np.where(np.isneginf(log_x), -np.inf, log_term)
        logs.append(log_term)
        phases.append(np.mod(power * phase_x, 2.0 * np.pi) + np.angle(coefficient))
        running = np.maximum(running, log_term)
        past_peak = power > math.exp(min(peak_log_x, 700.0)) + 1.0
        if past_peak and np.all((log_term < running - tail_nats) | np.isneginf(running)):
            break
    else:
        logger.warning("Lacunary series hit the index cap %d", MAX_LACUNARY_INDEX)
    return np.array(logs), np.array(phases)


def lacunary_F(t, tail_nats=Verdicts.SERIES_TAIL_NATS):
    """F(t) = e^{-t} sum_m t^(2^m) / (2^m)!, summed in logs"""
    if t < 0:
        raise ValueError(f"lacunary_F needs t >= 0, got {t}")
    if t == 0:
        return 0.0
    logs, phases = lacunary_log_terms(math.log(t), 0.0, GammaSpec(), tail_nats)
    total = LogComplex(logs[:, 0] - t, phases[:, 0]).reduce_sum()
    return float(total.magnitude())

# ============================================
# GAUSSIAN PROFILES
# ============================================

@dataclass(frozen=True)
class GaussianProfile:
    """
    |<T k_z, k_w>| = G(z) e^{-|w - m(z)|^2 / 2} for a batch of base points z.

    log_gain and center have shapes (N,) and (N, n).
    """

    log_gain: np.ndarray
    center: np.ndarray
    z: np.ndarray

    def p_integral_log(self, p):
        """log of pi^{-n} int |<T k_z, k_w>|^p e^{(p/2 - 1)|z - w|^2} dV(w)"""
        return p * self.log_gain + 0.25 * p * (p - 2.0) * norm2(self.center - self.z)

    def offset2(self):
        return norm2(self.center - self.z)

# ============================================
# OPERATOR FAMILIES
# ============================================

class OperatorSpec:
    """Base of the operator catalog; concrete families are frozen dataclasses"""

    family = "operator"
    gaussian = False

    @property
    def n(self):
        raise NotImplementedError

    def pairing_values(self, z, w, cfg=None):
        """<T k_z, k_w> over broadcast batches of z and w"""
        raise NotImplementedError

    def berezin_values(self, z, cfg=None):
        return self.pairing_values(z, z, cfg)

    def profile(self, z):
        raise TypeError(f"{self.family} has no Gaussian pairing profile")

    def adjoint(self):
        raise NotImplementedError

    def pairing_method(self):
        return CLOSED_FORM

    def to_json(self):
        raise NotImplementedError

    def param_hash(self):
        return param_hash(self)

    def label(self):
        return self.family


@dataclass(frozen=True)
class Identity(OperatorSpec):
    dim: int = 1

    family = "identity"
    gaussian = True

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise DimMismatch(f"dimension must be between 1 and {MAX_DIM}, got {self.dim}")

    @property
    def n(self):
        return self.dim

    def pairing_values(self, z, w, cfg=None):
        z, w = _broadcast_pair(z, w, self.n)
        return LogComplex.from_exponent(hermitian(w, z) - 0.5 * (norm2(z) + norm2(w)))

    def profile(self, z):
        z = as_points(z, self.n)
        return GaussianProfile(np.zeros(len(z)), z.copy(), z)

    def adjoint(self):
        return self

    def to_json(self):
        return {"family": self.family, "n": self.dim}


@dataclass(frozen=True)
class Translation(OperatorSpec):
    """V_a f(z) = f(z - a) k_a(z)"""

    a: CPoint

    family = "translation"
    gaussian = True

    @property
    def n(self):
        return self.a.n

    def pairing_values(self, z, w, cfg=None):
        z, w = _broadcast_pair(z, w, self.n)
        a = self.a.array()[None, :]
        exponent = (hermitian(w - a, z) - 0.5 * norm2(z) + hermitian(w, a)
                    - 0.5 * norm2(a) - 0.5 * norm2(w))
        return LogComplex.from_exponent(exponent)

    def berezin_values(self, z, cfg=None):
        z = as_points(z, self.n)
        a = self.a.array()[None, :]
        return LogComplex.from_exponent(2j * hermitian(z, a).imag - 0.5 * norm2(a))

    def profile(self, z):
        z = as_points(z, self.n)
        return GaussianProfile(np.zeros(len(z)), z + self.a.array()[None, :], z)

    def adjoint(self):
        return Translation(CPoint(tuple(-c for c in self.a.coords)))

    def to_json(self):
        return {"family": self.family, "a": self.a.to_pairs()}


@dataclass(frozen=True, eq=False)
class AffineComposition(OperatorSpec):
    """C f(z) = f(A z + B); must pass the boundedness gate before use"""

    A: np.ndarray
    B: CPoint = None
    gate: GateResult = field(init=False, repr=False)

    family = "affine_composition"
    gaussian = True

    def __post_init__(self):
        A = _as_matrix(self.A)
        A.setflags(write=False)
        B = self.B if self.B is not None else CPoint((0j,) * A.shape[0])
        if not isinstance(B, CPoint):
            B = CPoint(tuple(np.atleast_1d(B)))
        if B.n != A.shape[0]:
            raise DimMismatch(f"A is {A.shape[0]}x{A.shape[0]} but B lives in C^{B.n}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "gate", boundedness_gate(A, B.array()))

    @classmethod
    def scalar(cls, a, b=0.0):
        return cls(np.array([[a]], dtype=complex), CPoint((b,)))

    @property
    def n(self):
        return self.A.shape[0]

    def require_bounded(self):
        if not self.gate.bounded:
            raise UnboundedOperator(f"composition symbol is unbounded: {self.gate.reason}",
                                    witness=self.gate.witness)

    def pairing_values(self, z, w, cfg=None):
        self.require_bounded()
        z, w = _broadcast_pair(z, w, self.n)
        image = w @ self.A.T + self.B.array()[None, :]
        return LogComplex.from_exponent(hermitian(image, z) - 0.5 * (norm2(z) + norm2(w)))

    def berezin_values(self, z, cfg=None):
        self.require_bounded()
        z = as_points(z, self.n)
        image = z @ self.A.T + self.B.array()[None, :]
        return LogComplex.from_exponent(hermitian(image, z) - norm2(z))

    def profile(self, z):
        self.require_bounded()
        z = as_points(z, self.n)
        center = z @ self.A.conj()          # rows of A^* z
        log_gain = 0.5 * norm2(center) + hermitian(self.B.array()[None, :], z).real - 0.5 * norm2(z)
        return GaussianProfile(log_gain, center, z)

    def adjoint_profile(self, z):
        self.require_bounded()
        z = as_points(z, self.n)
        center = z @ self.A.T + self.B.array()[None, :]
        return GaussianProfile(0.5 * norm2(center) - 0.5 * norm2(z), center, z)

    def adjoint(self):
        return AdjointOf(self)

    def to_json(self):
        return {
            "family": self.family,
            "A": [[_complex_to_json(x) for x in row] for row in self.A],
            "B": self.B.to_pairs(),
        }


@dataclass(frozen=True)
class Dilation(OperatorSpec):
    """T_r f(z) = f(-r z) on C, 0 <= r < 1"""

    r: float

    family = "dilation"
    gaussian = True

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise SpecDecodeError(f"dilation needs 0 <= r < 1, got {self.r}")

    @property
    def n(self):
        return 1

    def as_composition(self):
        return AffineComposition.scalar(-self.r, 0.0)

    def pairing_values(self, z, w, cfg=None):
        z, w = _broadcast_pair(z, w, 1)
        return LogComplex.from_exponent(-self.r * hermitian(w, z) - 0.5 * (norm2(z) + norm2(w)))

    def profile(self, z):
        z = as_points(z, 1)
        return GaussianProfile(0.5 * (self.r ** 2 - 1.0) * norm2(z), -self.r * z, z)

    def adjoint(self):
        return self

    def to_json(self):
        return {"family": self.family, "r": float(self.r)}


@dataclass(frozen=True)
class Lacunary(OperatorSpec):
    """T_gamma e_{2^k} = gamma_k e_{2^k}, zero on the other monomials; n = 1"""

    gamma: GammaSpec = field(default_factory=GammaSpec)

    family = "lacunary"

    @property
    def n(self):
        return 1

    def pairing_method(self):
        return SERIES

    def pairing_values(self, z, w, cfg=None):
        z, w = _broadcast_pair(z, w, 1)
        x = (np.conj(z) * w)[:, 0]
        with np.errstate(divide="ignore"):
            log_x = np.log(np.abs(x))
        logs, phases = lacunary_log_terms(log_x, np.angle(x), self.gamma)
        series = LogComplex(logs, phases).reduce_sum(axis=0)
        return series * LogComplex(-0.5 * (norm2(z) + norm2(w)))

    def adjoint(self):
        return Lacunary(self.gamma.conjugate())

    def to_json(self):
        return {"family": self.family, "gamma": self.gamma.to_json()}


@dataclass(frozen=True)
class ConvolutionSymbol(OperatorSpec):
    """S_phi with <S_phi k_z, k_w> = e^{<w, z> - (|z|^2 + |w|^2)/2} phi(w - conj z)"""

    phi: object
    dim: int = 1

    family = "convolution_symbol"

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise DimMismatch(f"dimension must be between 1 and {MAX_DIM}, got {self.dim}")
        if self.dim > 1 and not self.phi.supports_product:
            raise DimMismatch(f"{self.phi.kind} symbols are defined on C only")

    @property
    def n(self):
        return self.dim

    def pairing_method(self):
        return self.phi.method

    def pairing_values(self, z, w, cfg=None):
        z, w = _broadcast_pair(z, w, self.n)
        base = LogComplex.from_exponent(hermitian(w, z) - 0.5 * (norm2(z) + norm2(w)))
        return base * self.phi.evaluate(w - np.conj(z))

    def berezin_values(self, z, cfg=None):
        z = as_points(z, self.n)
        return self.phi.evaluate(2j * z.imag)

    def adjoint(self):
        return ConvolutionSymbol(self.phi.reflected(), self.dim)

    def to_json(self):
        return {"family": self.family, "n": self.dim, "phi": self.phi.to_json()}

    def label(self):
        return f"{self.family}:{self.phi.kind}"


@dataclass(frozen=True)
class ToeplitzMeasure(OperatorSpec):
    """T_nu with <T_nu k_z, k_w> = int k_z conj(k_w) e^{-|zeta|^2} dnu(zeta)"""

    measure: object

    family = "toeplitz_measure"

    @property
    def n(self):
        return self.measure.n

    def pairing_method(self):
        return self.measure.method

    def pairing_values(self, z, w, cfg=None):
        z, w = _broadcast_pair(z, w, self.n)
        return self.measure.pairing_values(z, w, cfg)

    def adjoint(self):
        return ToeplitzMeasure(self.measure.conjugate())

    def to_json(self):
        return {"family": self.family, "measure": self.measure.to_json()}

    def label(self):
        return f"{self.family}:{self.measure.kind}"


@dataclass(frozen=True)
class AdjointOf(OperatorSpec):
    """T^* with <T^* k_z, k_w> = conj <T k_w, k_z>"""

    base: OperatorSpec

    family = "adjoint"

    @property
    def n(self):
        return self.base.n

    @property
    def gaussian(self):
        return self.base.gaussian

    def pairing_method(self):
        return self.base.pairing_method()

    def pairing_values(self, z, w, cfg=None):
        return self.base.pairing_values(w, z, cfg).conjugate()

    def profile(self, z):
        if isinstance(self.base, AffineComposition):
            return self.base.adjoint_profile(z)
        return self.base.adjoint().profile(z)

    def adjoint(self):
        return self.base

    def to_json(self):
        return {"family": self.family, "base": self.base.to_json()}

    def label(self):
        return f"adjoint:{self.base.label()}"

# ============================================
# PAIRINGS AND BEREZIN TRANSFORMS
# ============================================

@dataclass(frozen=True)
class PairingValue:
    """One kernel pairing with the method that produced it"""

    value: LogComplex
    method: str
    est_rel_err: float

    @property
    def magnitude(self):
        return float(self.value.magnitude())

    def to_dict(self):
        z = self.value.item() if float(self.value.log_mag) < 709.0 else complex(math.inf)
        return {
            "re": z.real,
            "im": z.imag,
            "magnitude": self.magnitude,
            "log_magnitude": float(self.value.log_mag),
            "phase": float(self.value.phase),
            "method": self.method,
            "est_rel_err": self.est_rel_err,
        }


def _single(point, n):
    points = as_points(point, n)
    if len(points) != 1:
        raise DimMismatch("expected a single point")
    return points


def _estimated_error(op):
    method = op.pairing_method()
    if method == SERIES:
        return math.exp(-Verdicts.SERIES_TAIL_NATS)
    if method == QUADRATURE:
        return Quadrature.REL_TOL
    return MACHINE_REL_ERR


def pairing(op, z, w, cfg=None):
    """<T k_z, k_w> for one pair of points"""
    value = op.pairing_values(_single(z, op.n), _single(w, op.n), cfg)[0]
    return PairingValue(value, op.pairing_method(), _estimated_error(op))


def berezin(op, z, cfg=None):
    """Berezin transform <T k_z, k_z> at one point"""
    return op.berezin_values(_single(z, op.n), cfg)[0]


def apply_to_normalized_kernel(op, z, zeta, cfg=None):
    """(T k_z)(zeta), recovered from the pairing by the reproducing property"""
    zeta = as_points(zeta, op.n)
    return op.pairing_values(z, zeta, cfg) * LogComplex(0.5 * norm2(zeta))


def adjoint(op):
    return op.adjoint()


def gaussian_profile(op, z, adjoint=False):
    """Gaussian pairing profile of T (or T^*) at the base points z"""
    target = op.adjoint() if adjoint else op
    if not target.gaussian:
        raise TypeError(f"{op.family} has no Gaussian pairing profile")
    return target.profile(z)


@dataclass(frozen=True)
class BerezinProbe:
    """Ray samples of |T~| and the decay verdict"""

    verdict: str
    witness_ray: np.ndarray
    radii: tuple
    curves: np.ndarray = field(repr=False)      # (rays, radii) magnitudes


def berezin_vanish_probe(op, rays=None, ladder=None, cfg=None):
    """Whether |T~(z)| vanishes as |z| grows along sampled rays"""
    rays = ray_directions(op.n) if rays is None else as_points(rays, op.n)
    ladder = tuple(Quadrature.RADIUS_LADDER if ladder is None else ladder)
    floor = Verdicts.BEREZIN_FLOOR

    points = np.concatenate([rays * radius for radius in ladder])
    magnitudes = op.berezin_values(points, cfg).magnitude().reshape(len(ladder), len(rays)).T

    persistent = np.all(magnitudes[:, -2:] >= floor, axis=1) if len(ladder) > 1 else magnitudes[:, -1] >= floor
    if persistent.any():
        index = int(np.argmax(persistent))
        verdict = BerezinProbe(PERSISTS, rays[index], ladder, magnitudes)
    elif len(ladder) > 1 and np.all(magnitudes[:, -1] < floor) and np.all(magnitudes[:, -1] <= magnitudes[:, -2]):
        verdict = BerezinProbe(VANISHES, None, ladder, magnitudes)
    elif len(ladder) == 1 and np.all(magnitudes[:, -1] < floor):
        verdict = BerezinProbe(VANISHES, None, ladder, magnitudes)
    else:
        verdict = BerezinProbe(INCONCLUSIVE, None, ladder, magnitudes)
    logger.debug("Berezin probe for %s: %s", op.label(), verdict.verdict)
    return verdict

# ============================================
# CLOSED-FORM EXPONENTS
# ============================================

def dilation_plocalization_closed_form(r, p, z):
    """e^{-p(1+r)|z|^2 (1 - (1+r)p/4)}, the p-integral of T_r at z"""
    if not 0.0 <= r < 1.0 or not p > 0:
        raise ValueError(f"need 0 <= r < 1 and p > 0, got r={r}, p={p}")
    z2 = float(norm2(as_points(z, 1))[0])
    return math.exp(-p * (1.0 + r) * z2 * (1.0 - 0.25 * (1.0 + r) * p))


def composition_form_matrix(A, p):
    """M with E(z) = z^* M z + p Re<z, B> for f -> f(A z + B)"""
    A = _as_matrix(A)
    eye = np.eye(A.shape[0])
    return (p * (0.25 * p - 1.0) * eye
            - p * (0.5 * p - 1.0) * 0.5 * (A + A.conj().T)
            + 0.25 * p ** 2 * (A @ A.conj().T))


def composition_exponent_g(A, B, z, p):
    """
    Exponent E with pi^{-n} int |<C k_z, k_w>|^p e^{(p/2-1)|z-w|^2} dV(w) = e^E.

    E = Re<z, pB - p(p/2 - 1)A^* z> + (p^2/4)|A^* z|^2 + p(p/4 - 1)|z|^2.
    """
    A = _as_matrix(A)
    n = A.shape[0]
    B = as_points(B, n)[0]
    gate = boundedness_gate(A, B)
    if not gate.bounded:
        raise UnboundedOperator(f"composition symbol is unbounded: {gate.reason}", witness=gate.witness)
    z = as_points(z, n)
    adj = z @ A.conj()
    exponent = (hermitian(z, p * B[None, :] - p * (0.5 * p - 1.0) * adj).real
                + 0.25 * p ** 2 * norm2(adj) + p * (0.25 * p - 1.0) * norm2(z))
    return exponent if len(exponent) > 1 else float(exponent[0])


def trinomial(sigma, p):
    """(p - 4) - (2p - 4) sigma + p sigma^2 = (sigma - 1)(p sigma - p + 4)"""
    sigma = np.asarray(sigma, dtype=float)
    return (p - 4.0) - (2.0 * p - 4.0) * sigma + p * sigma ** 2


def unitary_fixed_space(W, tol=1e-10):
    """Orthonormal basis (columns) of {z : W z = z}"""
    W = _as_matrix(W)
    return linalg.null_space(W - np.eye(W.shape[0]), rcond=tol)


def berezin_form_min(A):
    """min over unit zeta of |zeta|^2 - Re<A zeta, zeta>"""
    A = _as_matrix(A)
    return float(1.0 - linalg.eigh(0.5 * (A + A.conj().T), eigvals_only=True)[-1])

# ============================================
# LOCALIZATION VERDICTS FOR COMPOSITIONS
# ============================================

@dataclass(frozen=True)
class FormCertificate:
    """Sign analysis of the exponent quadratic form"""

    verdict: str
    lambda_max: float
    witness: np.ndarray
    matrix: np.ndarray = field(repr=False)


def quadratic_form_certificate(A, B, p, band=1e-10):
    """
    Exact test: sup_z E(z) < inf iff M <= 0 and B is orthogonal to ker M.

    Returns inconclusive when the top eigenvalue sits inside the numerical
    band without being resolvable either way.
    """
    A = _as_matrix(A)
    B = as_points(B, A.shape[0])[0]
    M = composition_form_matrix(A, p)
    values, vectors = linalg.eigh(M)
    scale = max(1.0, float(np.max(np.abs(values))))
    top = float(values[-1])

    if top > band * scale:
        return FormCertificate(NOT_IN_LP, top, vectors[:, -1], M)
    if top < -band * scale:
        return FormCertificate(IN_LP, top, None, M)

    null = vectors[:, values >= -band * scale]
    overlap = np.abs(null.conj().T @ B)
    b_scale = max(1.0, float(np.sqrt(norm2(B))))
    if np.all(overlap <= band * b_scale):
        return FormCertificate(IN_LP, top, None, M)
    if np.max(overlap) > math.sqrt(band) * b_scale:
        witness = null[:, int(np.argmax(overlap))]
        return FormCertificate(NOT_IN_LP, top, witness, M)
    return FormCertificate(INCONCLUSIVE, top, None, M)


@dataclass(frozen=True)
class CompositionVerdict:
    """p-localization verdict for a composition operator with the rule that decided it"""

    verdict: str
    rule: str
    witness: np.ndarray = None
    details: dict = field(default_factory=dict)


def svd_localization_verdict(A, B, p):
    """
    Whether f -> f(A z + B) is p-localized, using in order: the one-variable
    threshold, the ||A|| < 1 rule, the singular value block tests, the exact
    quadratic form certificate and finally ray sampling of the exponent.
    """
    A = _as_matrix(A)
    n = A.shape[0]
    B = as_points(B, n)[0]
    gate = boundedness_gate(A, B)
    if not gate.bounded:
        raise UnboundedOperator(f"composition symbol is unbounded: {gate.reason}", witness=gate.witness)
    band = Verdicts.UNIT_SIGMA_BAND

    if n == 1:
        a = complex(A[0, 0])
        if abs(1.0 - a) <= band:
            return CompositionVerdict(IN_LP, "one-variable identity symbol")
        threshold = 4.0 * (1.0 - a.real) / abs(1.0 - a) ** 2
        details = {"threshold": threshold}
        if p < threshold - 1e-12:
            return CompositionVerdict(IN_LP, "one-variable threshold", details=details)
        if p > threshold + 1e-12:
            return CompositionVerdict(NOT_IN_LP, "one-variable threshold", np.ones(1, dtype=complex), details)
        verdict = IN_LP if abs(B[0]) <= band else NOT_IN_LP
        return CompositionVerdict(verdict, "one-variable threshold (boundary)", details=details)

    V, sigma, W = complex_svd_small(A)
    details = {"sigma": sigma.tolist()}
    if sigma[0] < 1.0 - band and 2.0 < p < 4.0 / (1.0 + sigma[0]):
        return CompositionVerdict(IN_LP, "norm below one", details=details)

    unit = np.flatnonzero(np.abs(sigma - 1.0) <= band)
    if len(unit) and p > 2.0:
        U = W @ V
        diag = U[unit, unit]
        moving = unit[diag.real < 1.0 - band]
        if len(moving):
            k = int(moving[0])
            witness = V[:, k]
            details["growth_rate"] = (0.5 * p ** 2 - p) * (1.0 - float(U[k, k].real))
            return CompositionVerdict(NOT_IN_LP, "unit block moves a singular direction", witness, details)
        rest = np.setdiff1d(np.arange(n), unit)
        if len(rest) == 0:
            return CompositionVerdict(IN_LP, "unitary symbol fixing every direction", details=details)
        if p < 4.0 and np.all(trinomial(sigma[rest], p) < 0) and np.allclose(U, np.eye(n), atol=1e-10):
            return CompositionVerdict(IN_LP, "trinomial signs", details=details)
        if np.max(sigma[rest]) < (4.0 - p) / p:
            return CompositionVerdict(IN_LP, "block form with small singular values", details=details)

    certificate = quadratic_form_certificate(A, B, p)
    details["lambda_max"] = certificate.lambda_max
    if certificate.verdict != INCONCLUSIVE:
        return CompositionVerdict(certificate.verdict, "quadratic form", certificate.witness, details)

    def exponent(point):
        return LogComplex(float(composition_exponent_g(A, B, point, p)))

    sup = classify_sup_over_rays(exponent, n)
    if sup.classification == BOUNDED:
        return CompositionVerdict(IN_LP, "ray sampling", details=details)
    if sup.classification == DIVERGENT:
        return CompositionVerdict(NOT_IN_LP, "ray sampling", sup.location, details)
    return CompositionVerdict(INCONCLUSIVE, "ray sampling", details=details)

# ============================================
# JSON ENCODING
# ============================================

def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def param_hash(op):
    """First 12 hex digits of the sha256 of the canonical operator JSON"""
    return hashlib.sha256(canonical_json(op.to_json()).encode("utf-8")).hexdigest()[:12]


def to_json(op):
    data = dict(op.to_json())
    data["schema"] = SCHEMA_TAG
    return data


def from_json(data):
    """Decode an OperatorSpec from a dict or a JSON string"""
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SpecDecodeError(f"operator spec is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SpecDecodeError(f"operator spec must be an object, got {type(data).__name__}")
    schema = data.get("schema", SCHEMA_TAG)
    if schema != SCHEMA_TAG:
        raise SpecDecodeError(f"unsupported schema {schema!r}; expected {SCHEMA_TAG!r}")
    family = data.get("family")

    try:
        if family == "identity":
            return Identity(int(data.get("n", 1)))
        if family == "translation":
            return Translation(CPoint.from_pairs(data["a"]))
        if family == "dilation":
            return Dilation(float(data["r"]))
        if family == "affine_composition":
            A = np.array([[_complex_from_json(x) for x in row] for row in data["A"]], dtype=complex)
            B = CPoint.from_pairs(data["B"]) if "B" in data else None
            return AffineComposition(A, B)
        if family == "lacunary":
            return Lacunary(GammaSpec.from_json(data.get("gamma", {})))
        if family == "convolution_symbol":
            return ConvolutionSymbol(symbols.phi_from_json(data["phi"]), int(data.get("n", 1)))
        if family == "toeplitz_measure":
            return ToeplitzMeasure(symbols.measure_from_json(data["measure"]))
        if family == "adjoint":
            return AdjointOf(from_json(data["base"]))
    except KeyError as exc:
        raise SpecDecodeError(f"{family} spec is missing field {exc}") from exc
    except DimMismatch as exc:
        raise SpecDecodeError(str(exc)) from exc
    raise SpecDecodeError(f"unknown operator family {family!r}; expected one of {sorted(FAMILIES)}")
