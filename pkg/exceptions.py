"""
Errors raised by the lab
"""


class LabError(Exception):
    """Base class for every lab error"""


class ConfigError(LabError):
    """Invalid quadrature or run configuration"""


class NonFiniteSample(LabError):
    """An integrand or sampled functional returned NaN"""


class ConvergenceFailure(LabError):
    """A linear algebra routine did not converge"""


class DimMismatch(LabError):
    """Points or matrices of incompatible dimension"""


class NormDiverged(LabError):
    """A Fock norm integral diverged"""


class UnboundedOperator(LabError):
    """A composition symbol failed the boundedness gate"""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class QuadratureDiverged(LabError):
    """A quadrature ladder classified its integral as divergent"""


class UnknownExperiment(LabError):
    """Experiment name not in the catalog"""


class SpecDecodeError(LabError):
    """Malformed operator, symbol or measure JSON"""
