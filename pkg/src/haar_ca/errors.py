"""Exception hierarchy shared by every module of the package."""


class HaarCAError(Exception):
    """Base class for all package errors."""


class StructureError(HaarCAError, ValueError):
    """Operands belong to different groups or have the wrong shape."""


class DomainError(HaarCAError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(HaarCAError, ValueError):
    """A tuning parameter violates its admissible range."""


class PreconditionError(ParameterError):
    """A hypothesis of a verification routine does not hold."""


class ResourceError(HaarCAError, RuntimeError):
    """A configured enumeration or work cap would be exceeded."""


class ValidationError(HaarCAError, ValueError):
    """An input object fails its structural validation."""


class NotSubgroupError(ValidationError):
    pass


class NonSurjectiveError(ValidationError):
    pass


class NotIrreducibleError(ValidationError):
    pass


class CompatibilityError(ValidationError):
    pass
