"""Exception types shared across the package."""


class EsamplerError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(EsamplerError):
    pass


class SingularityError(EsamplerError):
    """Two interacting charges at exactly the same position."""


class ForceAssemblyError(EsamplerError):
    pass


class IntegratorError(EsamplerError):
    pass


class MeshError(EsamplerError):
    pass


class TargetError(EsamplerError):
    pass


class MetricError(EsamplerError):
    pass


class SummaryError(EsamplerError):
    pass


class ConfigError(EsamplerError):
    pass
