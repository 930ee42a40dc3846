"""Exception hierarchy shared by the library and the CLI."""


class CompositeSurvivalError(Exception):
    """Base class for data and model errors (CLI exit code 1)."""


class SchemaError(CompositeSurvivalError):
    pass


class ParseError(CompositeSurvivalError):
    pass


class ValidationError(CompositeSurvivalError, ValueError):
    pass


class ModelFormatError(CompositeSurvivalError):
    """Malformed or truncated model file."""


class ModelVersionError(ModelFormatError):
    pass
