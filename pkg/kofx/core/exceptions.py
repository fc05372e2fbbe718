"""Custom exception classes for the toolkit."""

from typing import Any, Dict, Union

INPUT_ERROR = 1
NUMERICAL_ERROR = 2


class KofxError(Exception):
    """Base exception for all toolkit errors."""

    def __init__(
        self,
        message: str,
        code: str = "KOFX_ERROR",
        exit_code: int = NUMERICAL_ERROR,
        details: Union[Dict[str, Any], None] = None,
    ) -> None:
        """Initialize exception with error details.

        Args:
            message: Human-readable error message
            code: Error code identifier
            exit_code: Process exit code used by the CLI
            details: Additional error details
        """
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details = details or {}


class ContractViolation(KofxError):
    """Raised when an operation receives inputs that break its preconditions."""

    def __init__(self, message: str, **kwargs: Any) -> None:
        """Initialize ContractViolation."""
        kwargs.setdefault("code", "CONTRACT_VIOLATION")
        kwargs.setdefault("exit_code", INPUT_ERROR)
        super().__init__(message, **kwargs)


class NonDiagonalizableError(KofxError):
    """Raised when the Koopman matrix is defective within tolerance."""

    def __init__(self, condition_number: float, **kwargs: Any) -> None:
        """Initialize NonDiagonalizableError.

        Args:
            condition_number: Condition number of the eigenvector matrix
            **kwargs: Additional arguments
        """
        message = (
            f"Koopman matrix is non-diagonalizable within tolerance "
            f"(eigenvector condition number {condition_number:.3e})"
        )
        kwargs.setdefault("code", "NON_DIAGONALIZABLE")
        kwargs.setdefault("details", {})
        kwargs["details"]["condition_number"] = condition_number
        super().__init__(message, **kwargs)


class FlowRangeError(KofxError):
    """Raised when exp(lambda*t) would overflow."""

    def __init__(self, exponent: float, **kwargs: Any) -> None:
        """Initialize FlowRangeError.

        Args:
            exponent: max |Re(lambda)| * t reached by the request
            **kwargs: Additional arguments
        """
        message = f"Flow exponent out of range: max |Re(lambda)|*t = {exponent:.3e}"
        kwargs.setdefault("code", "FLOW_RANGE")
        kwargs.setdefault("details", {})
        kwargs["details"]["max_exponent"] = exponent
        super().__init__(message, **kwargs)


class DomainViolationError(KofxError):
    """Raised when a point lies outside the basis domain."""

    def __init__(self, point: Any, **kwargs: Any) -> None:
        """Initialize DomainViolationError."""
        message = "Point lies outside the basis domain"
        kwargs.setdefault("code", "DOMAIN_VIOLATION")
        kwargs.setdefault("details", {})
        kwargs["details"]["point"] = [complex(v) for v in point]
        super().__init__(message, **kwargs)


class OrderCapError(KofxError):
    """Raised when a Gaussian moment exceeds the configured order cap."""

    def __init__(self, order: int, cap: int, **kwargs: Any) -> None:
        """Initialize OrderCapError."""
        message = f"Moment order {order} exceeds cap {cap}"
        kwargs.setdefault("code", "ORDER_CAP")
        kwargs.setdefault("details", {})
        kwargs["details"].update({"order": order, "cap": cap})
        super().__init__(message, **kwargs)


class UnsupportedOrderError(KofxError):
    """Raised when a central moment order outside {2, 3, 4} is requested."""

    def __init__(self, psi: int, **kwargs: Any) -> None:
        """Initialize UnsupportedOrderError."""
        kwargs.setdefault("code", "UNSUPPORTED_ORDER")
        kwargs.setdefault("exit_code", INPUT_ERROR)
        kwargs.setdefault("details", {})
        kwargs["details"]["psi"] = psi
        super().__init__(f"Unsupported moment order psi={psi}; expected 2, 3 or 4", **kwargs)


class ExpansionPointError(KofxError):
    """Raised when a measurement function cannot be expanded at a point."""

    def __init__(self, message: str, **kwargs: Any) -> None:
        """Initialize ExpansionPointError."""
        kwargs.setdefault("code", "EXPANSION_POINT")
        super().__init__(message, **kwargs)


class SingularInnovationError(KofxError):
    """Raised when the innovation covariance cannot be inverted."""

    def __init__(self, message: str = "Innovation covariance is singular", **kwargs: Any) -> None:
        """Initialize SingularInnovationError."""
        kwargs.setdefault("code", "SINGULAR_INNOVATION")
        super().__init__(message, **kwargs)


class ParameterError(KofxError):
    """Raised for invalid physical parameters."""

    def __init__(self, message: str, **kwargs: Any) -> None:
        """Initialize ParameterError."""
        kwargs.setdefault("code", "INVALID_PARAMETER")
        kwargs.setdefault("exit_code", INPUT_ERROR)
        super().__init__(message, **kwargs)


class InvalidRegimeError(KofxError):
    """Raised when the libration point linearization has no saddle-center structure."""

    def __init__(self, c2: float, **kwargs: Any) -> None:
        """Initialize InvalidRegimeError."""
        kwargs.setdefault("code", "INVALID_REGIME")
        kwargs.setdefault("details", {})
        kwargs["details"]["c2"] = c2
        super().__init__(f"9*c2^2 - 8*c2 < 0 for c2={c2:.6g}", **kwargs)


class SingularityError(KofxError):
    """Raised when the particle collides with a primary."""

    def __init__(self, distance: float, **kwargs: Any) -> None:
        """Initialize SingularityError."""
        kwargs.setdefault("code", "COLLISION")
        kwargs.setdefault("details", {})
        kwargs["details"]["distance"] = distance
        super().__init__(f"Collision with a primary (r = {distance:.3e})", **kwargs)


class StepUnderflowError(KofxError):
    """Raised when the adaptive integrator step falls below its floor."""

    def __init__(self, t: float, step: float, **kwargs: Any) -> None:
        """Initialize StepUnderflowError."""
        kwargs.setdefault("code", "STEP_UNDERFLOW")
        kwargs.setdefault("details", {})
        kwargs["details"].update({"t": t, "step": step})
        super().__init__(f"Step size underflow at t={t:.6g} (h={step:.3e}); problem may be stiff", **kwargs)


class FilterStepError(KofxError):
    """Raised when a filter step fails; carries the failing epoch."""

    def __init__(self, epoch: float, cause: KofxError, **kwargs: Any) -> None:
        """Initialize FilterStepError.

        Args:
            epoch: Epoch of the failing step
            cause: Underlying toolkit error
            **kwargs: Additional arguments
        """
        kwargs.setdefault("code", "FILTER_STEP")
        kwargs.setdefault("exit_code", cause.exit_code)
        kwargs.setdefault("details", {})
        kwargs["details"].update({"epoch": epoch, "cause": cause.code})
        super().__init__(f"Filter step failed at t={epoch:.6g}: {cause.message}", **kwargs)
        self.epoch = epoch
        self.cause = cause


class ScenarioError(KofxError):
    """Raised when a scenario cannot be resolved or validated."""

    def __init__(self, message: str, **kwargs: Any) -> None:
        """Initialize ScenarioError."""
        kwargs.setdefault("code", "INVALID_SCENARIO")
        kwargs.setdefault("exit_code", INPUT_ERROR)
        super().__init__(message, **kwargs)


class InputFileError(KofxError):
    """Raised when an input file is missing or malformed."""

    def __init__(self, path: str, reason: str, **kwargs: Any) -> None:
        """Initialize InputFileError."""
        kwargs.setdefault("code", "INPUT_FILE")
        kwargs.setdefault("exit_code", INPUT_ERROR)
        kwargs.setdefault("details", {})
        kwargs["details"]["path"] = path
        super().__init__(f"Cannot read {path}: {reason}", **kwargs)
