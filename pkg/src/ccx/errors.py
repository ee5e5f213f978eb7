"""Exception types shared across the package."""


class CcxError(Exception):
    """Base class for all package-specific errors."""


class NonFiniteValue(CcxError):
    """A field or sample carries NaN/inf where finite values are required."""


class NonFiniteInput(CcxError):
    """Solver input contains non-finite entries."""


class ModuleTooSmall(CcxError):
    """Extension module M does not dominate the sample values."""


class SingleSample(CcxError):
    """An operation needing at least two sample nodes got one."""


class UnsortedInput(CcxError):
    """1D abscissae are not strictly increasing."""


class CollinearInput(CcxError):
    """All cloud points lie on one line; no triangulation exists."""


class DuplicatePoints(CcxError):
    """Two cloud points coincide within tolerance."""


class DegenerateLift(CcxError):
    """All lifted points are coplanar; upper and lower sheets coincide.

    Raised only on request; the interpolant construction treats this as a
    fast path, not a failure.
    """


class ThresholdUnsatisfied(CcxError):
    """Given lambda/module fall below the structural thresholds.

    Attributes
    ----------
    required_lam, required_m : float
        Minimal values that would satisfy every cell.
    """

    def __init__(self, message, required_lam=None, required_m=None):
        super().__init__(message)
        self.required_lam = required_lam
        self.required_m = required_m


class OutOfDomain(CcxError):
    """Evaluation point lies outside a prototype's stated domain."""


class RegimeUnsupported(CcxError):
    """Prototype parameters fall in a regime with no closed form."""


class NotAvailable(CcxError):
    """The requested closed form does not exist for this prototype."""


class ParamOutOfRange(CcxError):
    """Prototype parameter outside its admissible range."""


class EmptyLevelSet(CcxError):
    """A requested level is never crossed on the grid."""


class LambdaBelowThreshold(UserWarning):
    """lambda is below the level-set interpolation threshold (warning)."""


class AllDamaged(CcxError):
    """Inpainting damage mask covers every pixel."""


class ZeroDenominator(CcxError):
    """Relative error is undefined because the reference norm vanishes."""


class ConfigError(CcxError):
    """Run configuration is malformed or inconsistent."""
