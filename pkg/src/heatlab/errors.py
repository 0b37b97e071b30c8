"""Exception and warning types shared across the package."""


class UntrustedWarning(UserWarning):
    """A grid result was computed but the truncation diagnostics exceed the trust threshold."""


class QuadratureError(RuntimeError):
    pass


class InsufficientData(ValueError):
    pass


class NonPositiveSample(ValueError):
    pass


class SubcriticalExponent(ValueError):
    """p <= p_F(n) = 1 + 2/n; small-data global theory does not apply."""


class PreconditionViolated(ValueError):
    pass


class DecayViolation(RuntimeError):
    """The solution left the small-data decay regime (blow-up guard tripped)."""


class TailUntrusted(RuntimeError):
    """The extrapolated tail of a time integral is too large a share of the total."""
