"""
Tracking Errors
File: tracking/errors.py

Named exceptions raised by the tracking package.

Library code logs the problem with loguru and then raises one of these.
Command-line entry points catch TrackingError, log it, print a
machine-readable error line built from `code`, and exit nonzero.
"""

#####################################
# Base Class
#####################################


class TrackingError(Exception):
    """Base class for every error raised by the tracker."""

    code = "tracking_error"


#####################################
# Geometry and Rendering
#####################################


class BehindCameraError(TrackingError, ValueError):
    code = "behind_camera"


class MeshError(TrackingError, ValueError):
    code = "mesh_error"


class MeshFormatError(MeshError):
    code = "mesh_format"


class MeshNotFoundError(MeshError, FileNotFoundError):
    code = "mesh_not_found"


class EmptyMeshError(MeshError):
    code = "empty_mesh"


class EmptyMaskError(TrackingError, ValueError):
    code = "empty_mask"


class TooManyObjectsError(TrackingError, ValueError):
    code = "too_many_objects"


#####################################
# Models and Persistence
#####################################


class ViewpointModelError(TrackingError, RuntimeError):
    code = "viewpoint_model"


class ModelFormatError(TrackingError, ValueError):
    code = "model_format"


class ConfigError(TrackingError, ValueError):
    code = "config"


#####################################
# Probabilities and Optimization
#####################################


class DegenerateDistributionError(TrackingError, ArithmeticError):
    code = "degenerate_distribution"


class OracleDomainError(TrackingError, ValueError):
    code = "oracle_domain"


class HistogramStarvedError(TrackingError, RuntimeError):
    code = "histogram_starved"


class NoDataError(TrackingError, RuntimeError):
    code = "no_data"


class SolverError(TrackingError, ArithmeticError):
    code = "solver"


#####################################
# Sequences
#####################################


class SequenceError(TrackingError, RuntimeError):
    """Failure tied to one frame of a sequence (load, synthesis, tracking)."""

    code = "sequence"

    def __init__(self, message: str, frame_index: int | None = None) -> None:
        super().__init__(message)
        self.frame_index = frame_index

    def __str__(self) -> str:
        base = super().__str__()
        if self.frame_index is None:
            return base
        return f"frame {self.frame_index}: {base}"
