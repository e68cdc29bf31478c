"""
src/errors.py
=============
Exception types raised across the package. The CLI maps them to exit codes.
"""


class BeamCouplingError(Exception):
    """Base class for everything this package raises on purpose."""


class ModelInputError(BeamCouplingError):
    """Invalid model data: broken ids, bad parameters, out-of-range coordinates."""


class SingularCouplingError(BeamCouplingError):
    """Relative rotation between coupled cross-sections is too close to pi."""


class ProjectionError(BeamCouplingError):
    """Closest-point projection failed or is ill-posed."""


class ConvergenceError(BeamCouplingError):
    """Newton iteration or the linear solve failed."""
