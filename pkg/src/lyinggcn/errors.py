"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration/parse problems exit 2,
numerical failures exit 3, property violations exit 4.
"""


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class ConfigurationError(ValueError):
    """A parameter or config value is outside its contract."""


class ContractError(RuntimeError):
    """A caller broke an API precondition that is not a plain shape issue."""


class EvaluationError(RuntimeError):
    """A quantity is undefined for the given input (e.g. homophily of an edgeless graph)."""


class NumericalError(RuntimeError):
    """An iterative numerical procedure failed to converge or lost validity."""


class IntegrationError(NumericalError):
    """An ODE integration produced a non-finite state."""


class ParseError(ValueError):
    """A file does not conform to its schema; message carries the JSON path."""


class ValidationError(ValueError):
    """Parsed data is schema-valid but semantically inconsistent."""


class PropertyViolation(RuntimeError):
    """An asserted mathematical property failed; signals an implementation bug."""
