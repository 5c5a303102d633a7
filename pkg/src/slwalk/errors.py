"""Exception types shared across the package."""


class SlwalkError(Exception):
    """Base class for all errors raised by slwalk."""


# -- linear algebra -----------------------------------------------------------

class SingularInput(SlwalkError):
    """Matrix is numerically singular (smallest singular value underflows)."""


class EigenFailure(SlwalkError):
    """Eigenvalue solver did not converge."""


class DimensionMismatch(SlwalkError):
    """Operands have incompatible dimensions."""


class BadExponent(SlwalkError):
    """Power k outside the valid range for the construction."""


class Overflow(SlwalkError):
    """A single factor falls outside the representable normalization range."""


# -- representations ----------------------------------------------------------

class EmptyParts(SlwalkError):
    """Direct sum over an empty list of parts."""


class SourceDimMismatch(SlwalkError):
    """Direct-sum parts do not share the same source dimension."""


class AmbiguousHighestWeight(SlwalkError):
    """No weight dominates all others (reducible representation)."""


class NotProximal(SlwalkError):
    """Operation requires a proximal representation."""


# -- linearization ------------------------------------------------------------

class ZeroPolynomial(SlwalkError):
    """Polynomial is identically zero."""


class ZeroVector(SlwalkError):
    """Base vector must be nonzero."""


class VanishesOnGroup(SlwalkError):
    """Entry polynomial vanishes identically on the group."""


class RankUnstable(SlwalkError):
    """Numerical rank of the translate span is not flat across cutoffs."""


class ZeroFunctional(SlwalkError):
    """Hyperplane functional must be nonzero."""


class PolynomialParseError(SlwalkError):
    """Malformed polynomial text."""


# -- walk engine --------------------------------------------------------------

class BadWeights(SlwalkError):
    """Measure weights are not positive or do not sum to one."""


class NonUnimodularAtom(SlwalkError):
    """Atom determinant is not 1 within tolerance."""


class BadEpsilon(SlwalkError):
    """Perturbation weight outside (0, 1)."""


class BudgetExceeded(SlwalkError):
    """Exact enumeration would exceed the word/state budget."""


class InexactAtoms(SlwalkError):
    """Exact arithmetic requested but the measure has no exact atoms."""


class PluginFailure(SlwalkError):
    """A statistics plugin raised; carries replica block and step."""

    def __init__(self, plugin, step, block, cause):
        super().__init__(f"plugin {plugin!r} failed at step {step}, replica block {block}: {cause}")
        self.plugin = plugin
        self.step = step
        self.block = block
        self.cause = cause


# -- experiments --------------------------------------------------------------

class TooFewPoints(SlwalkError):
    """Not enough sample points for the requested statistic."""


class UnknownPieces(SlwalkError):
    """Variety linearization has no recorded irreducible pieces."""


class WordBudgetExceeded(SlwalkError):
    """Free-group word enumeration exceeds the word budget."""


# -- cli ----------------------------------------------------------------------

class ConfigError(SlwalkError):
    """Invalid run configuration; message names the offending field."""


class IoError(SlwalkError):
    """Report emission failed."""
