"""Exception types raised across the package."""


class SpecError(ValueError):
    """A graph, lattice, packet or config specification violates an invariant."""


class DomainError(ValueError):
    """An argument lies outside the domain of a closed-form expression."""


class FamilyFitError(ValueError):
    """Reflection data are not consistent with any single family constant."""

    def __init__(self, message, max_residual):
        super().__init__(f"{message} (max residual {max_residual:.3e})")
        self.max_residual = max_residual


class IntegrationBlowUp(FloatingPointError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, step_index, max_abs):
        super().__init__(
            f"non-finite field after step {step_index} (max |phi| before failure {max_abs:.3e})"
        )
        self.step_index = step_index
        self.max_abs = max_abs


class ExperimentInvalid(RuntimeError):
    """A scattering run cannot produce a clean measurement."""
