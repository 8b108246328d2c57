"""Exception types raised across the package.

Every error is a subclass of :class:`RandadjustError`, so callers can catch
the whole family with one clause. Names mirror the failure they signal; none
carry extra state beyond the message.
"""


class RandadjustError(Exception):
    """Base class for all package errors."""


# --- covariate matrix construction ---

class NonFiniteInput(RandadjustError):
    """Input contains NaN or infinite entries."""


class AllColumnsConstant(RandadjustError):
    """Every centered covariate column is numerically zero."""


class InvalidQuantilePair(RandadjustError):
    """Trimming quantiles must satisfy 0 <= lower < upper <= 1."""


# --- shared numeric preconditions ---

class DimensionMismatch(RandadjustError):
    """Vector or matrix dimensions do not agree."""


class DegenerateArm(RandadjustError):
    """Both arms need at least two units for variance formulas."""


# --- randomization ---

class InvalidArmSizes(RandadjustError):
    """Treated-arm size must satisfy 1 <= n1 <= n - 1."""


class TooManySubsets(RandadjustError):
    """Exhaustive enumeration guard: C(n, m) exceeds the cap."""


# --- estimation ---

class EmptyArm(RandadjustError):
    """An arm has no observed units."""


class ArmTooSmall(RandadjustError):
    """Arm size below p + 2; the within-arm fit is not attempted."""


class ArmRankDeficient(RandadjustError):
    """The within-arm covariate matrix is singular to tolerance."""


class SingularSystem(RandadjustError):
    """The interacted regression system is rank deficient."""


# --- variance estimation ---

class LeverageAtOne(RandadjustError):
    """A within-arm leverage is at 1; HC2/HC3 rescaling undefined."""


class DegenerateDf(RandadjustError):
    """No residual degrees of freedom for the HC1 rescaling."""


class NegativeVariance(RandadjustError):
    """A variance estimate passed to interval construction is negative."""


# --- sampling moments and concentration checks ---

class InvalidSubsetSize(RandadjustError):
    """Subset size m must satisfy 1 <= m <= n."""


class RowColSumsNonzero(RandadjustError):
    """The quadratic-statistic variance bound needs zero row/column sums."""


class NotCentered(RandadjustError):
    """Vector population columns must sum to zero."""


class NotCenteredMatrices(RandadjustError):
    """Matrix population must be symmetric and sum to zero."""


# --- data generation ---

class DegenerateLeverages(RandadjustError):
    """Leverage scores are collinear with the design; the bias-maximizing
    residual direction is undefined."""


class ParseError(RandadjustError):
    """A data file could not be parsed."""


class MissingColumn(RandadjustError):
    """A named column is absent from the data file."""


class NonBinaryTreatment(RandadjustError):
    """The treatment column must take exactly the values 0 and 1."""


# --- harness configuration ---

class ConfigError(RandadjustError):
    """Experiment configuration is malformed or carries unknown keys."""
