"""Exception hierarchy shared by the linclt packages."""


class LincltError(ValueError):
    """Base class for every error raised by linclt."""


class PreconditionError(LincltError):
    """An operation was called with inputs outside its domain."""


class CertificationError(LincltError):
    """A truncation, tail or quadrature error could not be certified."""


class MissingCertificateError(LincltError):
    """The innovation model exposes no analytic structure for this quantity."""


class ReplicateError(LincltError):
    """A Monte Carlo replicate failed."""

    def __init__(self, index: int, cause: Exception) -> None:
        self.index = index
        self.cause = cause
        super().__init__(f"replicate {index} failed: {cause}")
