"""
Configuration file for the Fock space localization lab
Quadrature defaults, verdict margins, sampling grids and the experiment catalog
"""

import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path

from exceptions import ConfigError

# ============================================
# PROJECT PATHS
# ============================================

BASE_DIR = Path(__file__).parent
DATA_DIR = BASE_DIR / "data"
OUTPUT_DIR = BASE_DIR / "output"

# Create directories if they don't exist
DATA_DIR.mkdir(exist_ok=True)
OUTPUT_DIR.mkdir(exist_ok=True)

# ============================================
# FILE PATHS
# ============================================

HISTORY_FILE = DATA_DIR / "experiment_history.json"
SUMMARY_OUTPUT = OUTPUT_DIR / "summary.txt"

SCHEMA_TAG = "fock-lab/1"
HISTORY_ENTRIES = 200               # runs kept in the experiment ledger

# ============================================
# QUADRATURE DEFAULTS
# ============================================

class Quadrature:
    """Rule orders and ladders shared by every integral"""

    HERMITE_ORDER = 48              # nodes per real axis
    LEGENDRE_ORDER = 32             # radial nodes per annulus
    MIN_ORDER = 8
    RADIUS_LADDER = (4.0, 6.0, 8.0, 10.0, 12.0)
    REL_TOL = 1e-8
    GROWTH_FACTOR = 2.0             # divergence: increments grow at least this much per step
    MAX_NODES = 600_000             # cap on a tensor Hermite grid
    CHUNK_SIZE = 262_144            # points per callback evaluation

    # Real-line windows for multiplier and density integrals
    WINDOW_HALF_WIDTH = 12.0
    PANEL_WIDTH = 0.5
    PANEL_ORDER = 16

    # Peak search before the Hermite sum
    NEWTON_STEPS = 4
    HESSIAN_STEP = 1e-2


@dataclass(frozen=True)
class QuadratureConfig:
    """Rule orders, truncation ladder and tolerances for one run"""

    hermite_order: int = Quadrature.HERMITE_ORDER
    legendre_order: int = Quadrature.LEGENDRE_ORDER
    radius_ladder: tuple = Quadrature.RADIUS_LADDER
    rel_tol: float = Quadrature.REL_TOL
    divergence_growth_factor: float = Quadrature.GROWTH_FACTOR
    max_nodes: int = Quadrature.MAX_NODES
    chunk_size: int = Quadrature.CHUNK_SIZE
    threads: int = 1

    def __post_init__(self):
        ladder = tuple(float(r) for r in self.radius_ladder)
        object.__setattr__(self, "radius_ladder", ladder)

        if not ladder:
            raise ConfigError("radius_ladder must not be empty")
        if ladder[0] <= 0 or any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigError(f"radius_ladder must be positive and strictly increasing: {ladder}")
        if self.hermite_order < Quadrature.MIN_ORDER or self.legendre_order < Quadrature.MIN_ORDER:
            raise ConfigError(
                f"rule orders must be >= {Quadrature.MIN_ORDER} "
                f"(hermite={self.hermite_order}, legendre={self.legendre_order})"
            )
        if not self.rel_tol > 0:
            raise ConfigError(f"rel_tol must be positive, got {self.rel_tol}")
        if not self.divergence_growth_factor > 1:
            raise ConfigError("divergence_growth_factor must exceed 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def with_overrides(self, **overrides):
        """Validated copy with the non-None overrides applied"""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes)

    def to_dict(self):
        return {
            "hermite_order": self.hermite_order,
            "legendre_order": self.legendre_order,
            "radius_ladder": list(self.radius_ladder),
            "rel_tol": self.rel_tol,
            "divergence_growth_factor": self.divergence_growth_factor,
        }


def effective_threads(flag=None):
    """Thread count: explicit flag, then LAB_THREADS, then machine parallelism"""
    if flag is not None:
        return max(1, int(flag))
    env = os.environ.get("LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"LAB_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1

# ============================================
# SAMPLING GRIDS
# ============================================

class Sampling:
    """Grids used to approximate suprema over C^n"""

    SEED = 20240611
    RAYS_1D = 16                    # equally spaced angles for n = 1
    RAYS_ND = 32                    # seeded unit vectors for n >= 2
    WL_Z_SCALE = 2.0                # z-radii for tail suprema reach this multiple of the ladder
    WL_R_LADDER = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    DISTANCE_GRID = tuple(1.0 + 0.5 * k for k in range(23))   # 1.0 .. 12.0
    FIT_Z_RADII = (0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0)
    SYMBOL_Y_GRID = (-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0)   # Im z samples for S_phi
    P_GRID = (2.25, 2.5, 2.75, 3.0, 3.5, 4.0, 6.0, 8.0)
    P_STEP = 0.05

# ============================================
# VERDICT MARGINS
# ============================================

class Verdicts:
    """Margins that turn sampled evidence into verdicts"""

    XZ_MARGIN = 0.25                # beta_hat must exceed 2n + margin
    SL_MIN_EPS = 0.02               # minimum fitted Gaussian rate
    XZ_HOLDOUT_NATS = 1.0           # held-out distances may exceed the fitted bound by this much
    WL_TAIL_FRACTION = 1e-3         # final tail / initial tail
    WL_DECAY_SLOPE = -0.5           # log-log tail slope accepted as decay
    WL_PERSIST_FRACTION = 0.5       # tail stays above this share: not weakly localized
    BEREZIN_FLOOR = 1e-3
    UNIT_SIGMA_BAND = 1e-10
    NORM_BAND = 1e-12
    SUP_SLACK_NATS = 0.25           # growth tolerated inside the last window
    SERIES_TAIL_NATS = 60.0         # series truncation below the running max term
    POINTWISE_SLACK = 1e-9

# ============================================
# DISPLAY SETTINGS
# ============================================

class Display:
    """Display and formatting settings"""

    CONSOLE_WIDTH = 80
    VALUE_DECIMALS = 6
    EXPONENT_DECIMALS = 4
    CSV_FLOAT_FORMAT = "%.12g"
    FAILED_ROWS_SHOWN = 10

# ============================================
# CATALOGS
# ============================================

FAMILIES = {
    "identity": "the identity operator",
    "translation": "V_a f(z) = f(z - a) k_a(z)",
    "dilation": "T_r f(z) = f(-r z), n = 1",
    "affine_composition": "C f(z) = f(A z + B)",
    "lacunary": "T_gamma on the lacunary basis e_{2^m}, n = 1",
    "convolution_symbol": "S_phi, singular integral of convolution type, n = 1",
    "toeplitz_measure": "T_nu with a discrete or density measure symbol",
}

PHI_CATALOG = {
    "one": "phi = 1 (S_phi is the identity)",
    "exponential": "phi(z) = e^{a z}",
    "sinc_beta": "phi(z) = e^{z^2/2} (sin z / z)^beta",
    "erf_antiderivative": "A(z) = integral_0^z e^{u^2} du",
    "hilbert": "(2/sqrt(pi)) A(z/sqrt(2)), symbol of m = -i sgn(x)/sqrt(2 pi)",
}

EXPRESSION_CATALOG = {
    "indicator": "scale on [lower, upper] (infinite ends allowed for multipliers)",
    "gaussian": "scale e^{-(x-center)^2/(2 width^2)} e^{i frequency x}",
    "rational": "scale / (1 + x^2)",
    "exponential": "scale e^{i frequency x}",
}

EXPERIMENTS = {
    "eq31-crosscheck": {
        "anchor": "Lemma 3.2: p-integral identity: translated-kernel form equals the weighted pairing form",
        "rule": "left and right sides of the p-integral identity agree to rel err 1e-6",
    },
    "dilation-threshold": {
        "anchor": "Thm 4.2: dilation T_r is p-localized exactly for 2 < p <= 4/(1+r)",
        "rule": "bounded/divergent flip within one p-step of 4/(1+r); closed form matches quadrature to 1e-6",
    },
    "translation-strong": {
        "anchor": "Prop. 4.1: translations V_a are strongly localized",
        "rule": "p-integral finite and z-independent to rel err 1e-6",
    },
    "lacunary-berezin": {
        "anchor": "Prop. 6.1: lacunary diagonal operator: Berezin transform on the positive axis",
        "rule": "F(0)=0, F(1)=0.5672+-1e-4, peak envelope decreasing for k=4..10 and < 0.03 at k=10",
    },
    "composition-1d": {
        "anchor": "Prop. 7.5: one-variable composition z -> a z + b: p-localized iff p < 4(1 - Re a)/|1 - a|^2",
        "rule": "verdict flip within one p-step of the threshold; rotation is not WL and its Berezin transform vanishes",
    },
    "composition-svd": {
        "anchor": "Prop. 7.6, Prop. 7.12, Thm 7.13, Thm 7.15: composition in several variables: singular value conditions on A",
        "rule": "each singular value condition reproduces its verdict",
    },
    "unitary-case": {
        "anchor": "Cor. 7.9: unitary composition symbols: weakly localized only for the identity",
        "rule": "W = diag(1, i) not WL with tail >= 0.1 across the r-ladder; W = I passes",
    },
    "sphi-identity": {
        "anchor": "Eq. 8.3: S_phi pairing: e^{-|z-w|^2/2} |phi(w - conj z)|",
        "rule": "direct quadrature of the S_phi pairing matches the closed form to rel err 1e-6",
    },
    "sphi-window": {
        "anchor": "Lemma 8.7: S_phi pairing as a windowed Fourier transform of the multiplier",
        "rule": "windowed Fourier identity holds to rel err 1e-5",
    },
    "sphi-l2": {
        "anchor": "Thm 8.8: bounded S_phi operators are 2-localized",
        "rule": "L2 window mass finite; independent of Im z to 1e-4 for unimodular multipliers",
    },
    "sphi-wl": {
        "anchor": "Thm 9.2: S_phi with an integrable density is weakly localized",
        "rule": "WL verdict for T and T* for every L1 density; compact and Gaussian densities fall below 1e-3 by r = 8",
    },
    "strictness-sl-xzsl": {
        "anchor": "Thm 9.7, Cor. 9.8: sinc-power symbol: XZ-sufficiently localized but not sufficiently localized",
        "rule": "(vi)-bound finite, (v)-ratio eventually increasing, XZ pass and SL fail; "
                "compact densities on [-A, A] fit eps >= 1/2 - A - 0.02",
    },
    "strictness-xzsl-wl": {
        "anchor": "Cor. 9.5: heavy-tailed density: weakly localized but not XZ-sufficiently localized (numeric witness)",
        "rule": "g = (1+s^2)^-1: WL pass, real-axis decay slope -2 +- 0.15, XZ fail",
    },
    "toeplitz-measure": {
        "anchor": "Lemma 5.11, Thm 5.13: Toeplitz operators with Fock-Carleson measure symbols are p-localized for 2 < p < 4",
        "rule": "covariance deviations small; Carleson verdicts as expected; lattice p-sup bounded",
    },
    "lacunary-open-probe": {
        "anchor": "Sec. 6.2: open question: lacunary T_gamma with gamma -> 0",
        "rule": "exploratory, no pass rule",
    },
}

EXPERIMENT_ALIASES = {
    "plocal-crosscheck": "eq31-crosscheck",
}

# ============================================
# CATALOG VALIDATION
# ============================================

logger = logging.getLogger(__name__)
logger.debug("Configuration loaded: %d families, %d experiments", len(FAMILIES), len(EXPERIMENTS))

_missing_rules = [name for name, entry in EXPERIMENTS.items() if not entry.get("rule")]
if _missing_rules:
    logger.warning("Experiments without an acceptance rule: %s", _missing_rules)
