"""Exception types. The CLI maps these onto exit codes."""


class SpecError(ValueError):
    """Invalid input: malformed spec, inconsistent overlaps, bad angle."""


class InfeasibleSpecError(SpecError):
    """Overlaps and orthonormality cannot coexist for the requested spectrum."""


class BudgetError(SpecError):
    """Requested simulation would exceed the configured memory cap."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or violated a checked invariant."""


class NoMaximumFound(NumericalError):
    """Success curve has no interior local maximum up to ``q_max``."""

    def __init__(self, q, probability):
        self.q = q
        self.probability = probability
        super().__init__(
            f"no local maximum found up to q={q} (boundary probability {probability:.6g})"
        )
