"""Exception types shared across the package."""


class AssumptionViolation(Exception):
    """A standing assumption needed by the requested computation does not hold."""

    def __init__(self, assumption, detail=""):
        self.assumption = assumption
        msg = f"assumption violated: {assumption}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NoCertifiedSolution(Exception):
    """An oracle could not produce an equilibrium it can vouch for."""


class InnerSolveFailure(Exception):
    """The inner static-game solve stalled before reaching its tolerance."""
