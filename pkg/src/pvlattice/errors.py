"""Exception hierarchy shared by all pvlattice modules.

Three broad families map onto CLI exit codes: validation failures (bad
inputs, exit 2), numerical non-convergence (exit 3) and budget overruns
(exit 4).  ZeroHit / ZeroOnOrbit are findings rather than failures: they
certify that an evaluation ran into a zero of the mask, which is itself
evidence the caller usually wants to record.
"""


class PVLatticeError(Exception):
    """Base class for everything raised by this package."""


class ValidationError(PVLatticeError):
    """Inputs violate a documented precondition."""


class NumericalError(PVLatticeError):
    """An iterative numerical procedure failed to converge."""


class BudgetError(PVLatticeError):
    """A configurable work budget would be exceeded."""


# --- validation ---------------------------------------------------------

class NonMonic(ValidationError):
    pass


class ZeroConstantTerm(ValidationError):
    pass


class RationalRootFound(ValidationError):
    """The polynomial has a rational root, hence is reducible."""


class RootOrderingError(ValidationError):
    """No real root available to serve as the leading root."""


class ContextMismatch(ValidationError):
    pass


class NotPV(ValidationError):
    pass


class NotIntegral(ValidationError):
    """Element has a non-integer coordinate where an integral one is required."""


class InadmissibleWindow(ValidationError):
    pass


class NotUnitConstant(ValidationError):
    """Operation requires |constant term| = 1 (lattice-preserving inflation)."""


class TooFewPoints(ValidationError):
    pass


class AlphabetUnstable(ValidationError):
    """Gap alphabet changed under probe-length doubling; enlarge the probe."""


class OccurrenceInconsistent(ValidationError):
    """Different occurrences of a gap type inflate to different decompositions."""

    def __init__(self, message, decompositions=None):
        super().__init__(message)
        self.decompositions = decompositions or []


class SumRuleViolated(ValidationError):
    pass


class ZeroCoefficient(ValidationError):
    pass


class NonIncreasingTranslations(ValidationError):
    pass


class ZeroPolynomial(ValidationError):
    pass


class EmptyInterval(ValidationError):
    """No sample fell inside a projection interval and filling was disabled."""


class AllSamplesClipped(NumericalError):
    """Every quadrature sample sat on a zero of the integrand."""


# --- numerical ----------------------------------------------------------

class RootFindingDiverged(NumericalError):
    pass


class QuadratureNonconvergent(NumericalError):
    pass


# --- budget -------------------------------------------------------------

class WindowTooLarge(BudgetError):
    """Enumeration box exceeds the configured cell budget."""


class Overflow(BudgetError):
    """Substitution expansion exceeds the configured point budget."""


# --- findings -----------------------------------------------------------

class ZeroHit(PVLatticeError):
    """A mask factor vanished along a dilation orbit.

    ``exponent`` is the integer e with A(alpha * lambda**e) = 0 within
    tolerance; negative exponents come from the tail of the infinite
    product.
    """

    def __init__(self, message, exponent, modulus):
        super().__init__(message)
        self.exponent = exponent
        self.modulus = modulus


class ZeroOnOrbit(PVLatticeError):
    """The periodic toral orbit passes through a zero of the mask polynomial."""

    def __init__(self, message, state, step, modulus):
        super().__init__(message)
        self.state = state
        self.step = step
        self.modulus = modulus


def exit_code_for(exc) -> int:
    """Map an exception to the CLI exit-code contract."""
    if isinstance(exc, BudgetError):
        return 4
    if isinstance(exc, NumericalError):
        return 3
    if isinstance(exc, PVLatticeError):
        return 2
    return 1
