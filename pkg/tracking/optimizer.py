"""
Pose Optimizer
File: tracking/optimizer.py

Newton step on the joint log posterior of all correspondence lines.

Per line i with scaled distance d_s,i the chain rule gives

    g = sum_i  first_i  * J_i
    H = sum_i  second_i * J_i J_i^T,    J_i = d(d_s,i)/d(theta)

where (first, second) come from the line's distribution:
- global mode: Gaussian fit, first = -(d_s - mu) / var, second = -1 / var
- local mode: log-ratio of the two support probabilities bracketing d_s,
  weighted by step_size / var; the curvature stays -1 / var

The step solves (-H + diag(lambda_r I3, lambda_t I3)) theta = g with a
Cholesky factorization. The module is stateless; the tracker decides the
mode per iteration.
"""

#####################################
# Import Modules
#####################################

# import from Python Standard Library
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

# import from external packages
import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

# import from local modules
from tracking.corrline import CorrespondenceLines, DistributionBatch, PosteriorDistribution
from tracking.errors import BehindCameraError, NoDataError, SolverError
from tracking.geometry import Intrinsics, Pose, VariationVector, skew
from utils.utils_logger import logger

Mode = Literal["global", "local"]

#####################################
# Domain Types
#####################################


@dataclass(frozen=True)
class OptimizerConfig:
    lambda_r: float = 5000.0
    lambda_t: float = 500000.0
    step_size: float = 1.3
    mode: Mode = "global"

    def __post_init__(self) -> None:
        if self.lambda_r < 0.0 or self.lambda_t < 0.0:
            raise ValueError("regularization must be non-negative")
        if not self.step_size > 0.0:
            raise ValueError("step_size must be positive")
        if self.mode not in ("global", "local"):
            raise ValueError(f"mode must be 'global' or 'local', got {self.mode!r}")

    def with_overrides(self, overrides: dict | None) -> "OptimizerConfig":
        """Copy with lambda_r / lambda_t / step_size replaced where given."""
        if not overrides:
            return self
        allowed = {"lambda_r", "lambda_t", "step_size"}
        unknown = set(overrides) - allowed
        if unknown:
            raise ValueError(f"unsupported optimizer overrides: {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


@dataclass(frozen=True, eq=False)
class NormalEquations:
    gradient: np.ndarray = field(default_factory=lambda: np.zeros(6))
    hessian: np.ndarray = field(default_factory=lambda: np.zeros((6, 6)))
    n_lines: int = 0

    def __add__(self, other: "NormalEquations") -> "NormalEquations":
        return NormalEquations(
            gradient=self.gradient + other.gradient,
            hessian=self.hessian + other.hessian,
            n_lines=self.n_lines + other.n_lines,
        )


#####################################
# Jacobians
#####################################


def distance_jacobians(
    model_point: np.ndarray,
    pose: Pose,
    intrinsics: Intrinsics,
    normal: np.ndarray,
    major_component: float,
    scale: int,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Derivatives of one line's scaled distance.

    Returns:
        d_point (3,): d(d_s)/d(X_c)
        d_theta (3, 6): d(X_c)/d(theta) = R [-[X_m]x | I]
    """
    model_point = np.asarray(model_point, dtype=np.float64).reshape(3)
    x, y, z = pose.transform(model_point)
    if not z > 0.0:
        raise BehindCameraError(f"Jacobian needs a point in front of the camera (Z={z})")
    nx, ny = np.asarray(normal, dtype=np.float64).reshape(2)
    factor = major_component / scale / z**2
    d_point = factor * np.array(
        [nx * intrinsics.fx * z, ny * intrinsics.fy * z, -nx * intrinsics.fx * x - ny * intrinsics.fy * y]
    )
    d_theta = pose.rotation @ np.hstack([-skew(model_point), np.eye(3)])
    return d_point, d_theta


def distance_jacobians_batch(
    model_points: np.ndarray,
    pose: Pose,
    intrinsics: Intrinsics,
    normals: np.ndarray,
    major_components: np.ndarray,
    scale: int,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Rows d(d_s)/d(theta) for many lines.

    Returns:
        (rows (n, 6), valid (n,)); rows of points with Z <= 0 are zero.
    """
    model_points = np.asarray(model_points, dtype=np.float64).reshape(-1, 3)
    camera = pose.transform(model_points)
    z = camera[:, 2]
    valid = z > 0.0
    safe_z = np.where(valid, z, 1.0)
    factor = np.asarray(major_components) / scale / safe_z**2
    nx, ny = normals[:, 0], normals[:, 1]
    d_point = factor[:, None] * np.column_stack(
        [
            nx * intrinsics.fx * safe_z,
            ny * intrinsics.fy * safe_z,
            -nx * intrinsics.fx * camera[:, 0] - ny * intrinsics.fy * camera[:, 1],
        ]
    )
    # a^T R [-[X]x | I] = [X x a, a] with a = R^T d_point
    a = d_point @ pose.rotation
    rows = np.hstack([np.cross(model_points, a), a])
    rows[~valid] = 0.0
    return rows, valid


def scaled_distances(
    model_points: np.ndarray,
    pose: Pose,
    intrinsics: Intrinsics,
    lines: CorrespondenceLines,
) -> tuple[np.ndarray, np.ndarray]:
    """Current scaled contour distance of every line's model point, with a Z > 0 mask."""
    camera = pose.transform(model_points)
    z = camera[:, 2]
    valid = z > 0.0
    safe_z = np.where(valid, z, 1.0)
    u = camera[:, 0] / safe_z * intrinsics.fx + intrinsics.px
    v = camera[:, 1] / safe_z * intrinsics.fy + intrinsics.py
    along = lines.normals[:, 0] * (u - lines.centers[:, 0]) + lines.normals[:, 1] * (v - lines.centers[:, 1])
    d_s = (along - lines.offsets) * lines.major_components / lines.scale
    return np.where(valid, d_s, np.nan), valid


#####################################
# Per-Line Derivatives
#####################################


def line_derivatives_global(dist: PosteriorDistribution, d_s: float) -> tuple[float, float]:
    first = -(d_s - dist.mean) / dist.variance
    second = -1.0 / dist.variance
    return float(first), float(second)


def _bracket(support: np.ndarray, probabilities: np.ndarray, d_s: float) -> tuple[float, float] | None:
    index = int(np.searchsorted(support, d_s, side="right"))
    if index <= 0 or index >= support.shape[0]:
        return None
    p_low, p_high = float(probabilities[index - 1]), float(probabilities[index])
    if p_low <= 0.0 or p_high <= 0.0:
        return None
    return p_low, p_high


def line_derivatives_local(dist: PosteriorDistribution, d_s: float, step_size: float) -> tuple[float, float]:
    """Log-ratio of the bracketing support probabilities; falls back to the global pair."""
    bracket = _bracket(dist.support, dist.probabilities, d_s)
    if bracket is None:
        logger.debug(f"local derivatives: no bracket around d_s={d_s:.3f}, using global")
        return line_derivatives_global(dist, d_s)
    p_low, p_high = bracket
    return float(step_size / dist.variance * np.log(p_high / p_low)), float(-1.0 / dist.variance)


def line_derivatives_inverse_variance(dist: PosteriorDistribution, d_s: float, step_size: float) -> tuple[float, float]:
    """
    Energy form with inverse-variance weights and curvature 1/step_size.

    Multiplying both values by step_size reproduces line_derivatives_local.
    """
    bracket = _bracket(dist.support, dist.probabilities, d_s)
    if bracket is None:
        first, second = line_derivatives_global(dist, d_s)
        return first / step_size, second / step_size
    p_low, p_high = bracket
    weight = 1.0 / dist.variance
    return float(weight * np.log(p_high / p_low)), float(-weight / step_size)


def line_derivatives_batch(
    distributions: DistributionBatch, d_s: np.ndarray, mode: Mode, step_size: float
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised global/local derivatives for every line of a batch."""
    variances = distributions.variances
    first = -(d_s - distributions.means) / variances
    second = -1.0 / variances
    if mode == "global":
        return first, second

    support = distributions.support
    probabilities = distributions.probabilities
    k = support.shape[0]
    index = np.searchsorted(support, np.nan_to_num(d_s, nan=np.inf), side="right")
    low = np.clip(index - 1, 0, k - 1)
    high = np.clip(index, 0, k - 1)
    rows = np.arange(d_s.shape[0])
    p_low = probabilities[rows, low]
    p_high = probabilities[rows, high]
    bracketed = (index > 0) & (index < k) & (p_low > 0.0) & (p_high > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        local = step_size / variances * np.log(p_high / p_low)
    return np.where(bracketed, local, first), second


#####################################
# Normal Equations and Solve
#####################################


def accumulate_normal_equations(rows: np.ndarray, first: np.ndarray, second: np.ndarray) -> NormalEquations:
    rows = np.asarray(rows, dtype=np.float64).reshape(-1, 6)
    gradient = rows.T @ np.asarray(first, dtype=np.float64)
    hessian = (rows * np.asarray(second, dtype=np.float64)[:, None]).T @ rows
    return NormalEquations(gradient=gradient, hessian=0.5 * (hessian + hessian.T), n_lines=rows.shape[0])


def assemble(
    lines: CorrespondenceLines,
    distributions: DistributionBatch,
    pose: Pose,
    intrinsics: Intrinsics,
    mode: Mode,
    config: OptimizerConfig,
) -> NormalEquations:
    """Gradient and Hessian at theta = 0 summed over valid lines with valid distributions."""
    d_s, in_front = scaled_distances(lines.model_points, pose, intrinsics, lines)
    rows, _ = distance_jacobians_batch(
        lines.model_points, pose, intrinsics, lines.normals, lines.major_components, lines.scale
    )
    usable = lines.valid & distributions.valid & in_front
    if not np.any(usable):
        logger.debug("assemble: no usable lines")
        raise NoDataError("no data: every correspondence line is invalid")

    first, second = line_derivatives_batch(distributions, d_s, mode, config.step_size)
    return accumulate_normal_equations(rows[usable], first[usable], second[usable])


def solve_step(equations: NormalEquations, config: OptimizerConfig) -> VariationVector:
    """theta = (-H + diag(lambda_r I3, lambda_t I3))^-1 g."""
    regularization = np.diag([config.lambda_r] * 3 + [config.lambda_t] * 3)
    system = -equations.hessian + regularization
    if not (np.all(np.isfinite(system)) and np.all(np.isfinite(equations.gradient))):
        logger.error("solve_step: normal equations contain non-finite values")
        raise SolverError("normal equations contain non-finite values")
    try:
        factor = cho_factor(system)
        theta = cho_solve(factor, equations.gradient)
    except LinAlgError as exc:
        logger.error(f"solve_step: Cholesky factorization failed: {exc}")
        raise SolverError(f"regularized system is not positive definite: {exc}") from exc
    if not np.all(np.isfinite(theta)):
        raise SolverError("solution is not finite")
    return VariationVector.from_array(theta)
