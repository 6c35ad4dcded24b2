"""Exception types shared across the library."""


class ExtVecError(Exception):
    """Base class for all library errors."""


class ValidationError(ExtVecError, ValueError):
    """Input fails a structural requirement (shape, symmetry, finiteness)."""


class ContractViolation(ExtVecError):
    """Operation called outside its stated domain (frame mismatch, wrong kind)."""


class UnsupportedDimension(ValidationError):
    """Operation defined only for a specific base dimension or metric."""


class SchemaError(ExtVecError, ValueError):
    """Serialized payload does not match the documented schema."""


class ConfigError(ExtVecError):
    """Bad run configuration (CLI flags or config file)."""
