"""
Region-Based Tracker
File: tracking/tracker.py

Per-frame pose refinement of one or more rigid objects.

A tracking step runs a fixed number of outer iterations, each with its own
segment scale (default 5, 2, 2, 1, 1, 1, 1). Every outer iteration:
1. optionally renders a bit-encoded occlusion mask of all objects,
2. picks the closest precomputed view of each object,
3. projects that view's contour points into correspondence lines and rejects
   lines that leave the image, are too short in continuous distance or are
   occluded at their center,
4. evaluates the contour-distance distribution of every line,
5. runs the inner Newton iterations (global, then local) on fixed lines.

After the last outer iteration the color histograms are blended with
statistics gathered at the final pose.
"""

#####################################
# Import Modules
#####################################

# import from Python Standard Library
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

# import from external packages
import numpy as np

# import from local modules
from tracking.corrline import (
    DEFAULT_HALF_LENGTH,
    DEFAULT_SUPPORT,
    CorrespondenceLines,
    StepFunctionParams,
    from_scaled,
    posterior_distributions,
    sample_segment_posteriors,
)
from tracking.errors import ConfigError, HistogramStarvedError, NoDataError, SolverError
from tracking.geometry import Intrinsics, Pose, project_points, update_pose
from tracking.histograms import (
    ColorHistograms,
    HistogramSamplingConfig,
    accumulate_from_pose,
    bin_indices,
    update,
)
from tracking.mesh_render import TriangleMesh, is_visible, render_occlusion_mask
from tracking.optimizer import OptimizerConfig, assemble, solve_step
from tracking.viewpoint_model import SparseViewpointModel, View, closest_view
from utils.utils_logger import logger

#####################################
# Configuration
#####################################

# flat JSON keys accepted by TrackerConfig.from_dict
CONFIG_KEYS = (
    "preset",
    "scales",
    "outer_iters",
    "inner_iters",
    "amplitude",
    "slope",
    "lambda_r",
    "lambda_t",
    "step_size",
    "min_continuous_dist_segments",
    "support",
    "use_occlusion_masks",
    "occlusion_downscale",
    "occlusion_radius",
    "half_length",
    "histogram_offset_px",
    "histogram_max_px",
    "learning_rate_fg",
    "learning_rate_bg",
    "n_valid_min",
)


@dataclass(frozen=True)
class TrackerConfig:
    scales: tuple[int, ...] = (5, 2, 2, 1, 1, 1, 1)
    outer_iters: int = 7
    inner_iters: int = 2
    step_params: StepFunctionParams = field(default_factory=StepFunctionParams)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    min_continuous_dist_segments: float = 6.0
    support: tuple[float, ...] = tuple(float(d) for d in DEFAULT_SUPPORT)
    use_occlusion_masks: bool = False
    occlusion_downscale: int = 4
    occlusion_radius: int = 4
    half_length: int = DEFAULT_HALF_LENGTH
    histogram_sampling: HistogramSamplingConfig = field(default_factory=HistogramSamplingConfig)
    learning_rate_fg: float = 0.2
    learning_rate_bg: float = 0.2
    n_valid_min: int = 20

    def __post_init__(self) -> None:
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        object.__setattr__(self, "support", tuple(float(d) for d in self.support))
        if len(self.scales) != self.outer_iters:
            raise ValueError(f"need one scale per outer iteration ({self.outer_iters}), got {len(self.scales)}")
        if any(s < 1 for s in self.scales):
            raise ValueError("all scales must be at least 1")
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be at least 1")
        if len(self.support) < 2 or any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise ValueError("support must hold at least two increasing values")
        if self.half_length < 1:
            raise ValueError("half_length must be at least 1")

    @classmethod
    def clutter(cls, **kwargs) -> "TrackerConfig":
        """Sharp steps with a large noise share, for heavily cluttered imagery."""
        return cls(step_params=StepFunctionParams(amplitude=0.36, slope=0.0), **kwargs)

    @classmethod
    def real_camera(cls, **kwargs) -> "TrackerConfig":
        """Smoother steps for real camera footage with blur and noise."""
        return cls(step_params=StepFunctionParams(amplitude=0.42, slope=0.5), **kwargs)

    def inner_modes(self) -> list[str]:
        return ["global"] + ["local"] * (self.inner_iters - 1)

    @classmethod
    def from_dict(cls, data: dict) -> "TrackerConfig":
        unknown = set(data) - set(CONFIG_KEYS)
        if unknown:
            logger.error(f"Unknown tracker config keys: {sorted(unknown)}")
            raise ConfigError(f"unknown tracker config keys: {sorted(unknown)}")
        preset = data.get("preset", "clutter")
        if preset not in ("clutter", "real_camera"):
            raise ConfigError(f"unknown preset {preset!r}")
        base = cls.clutter() if preset == "clutter" else cls.real_camera()
        try:
            scales = tuple(data.get("scales", base.scales))
            return cls(
                scales=scales,
                outer_iters=int(data.get("outer_iters", len(scales))),
                inner_iters=int(data.get("inner_iters", base.inner_iters)),
                step_params=StepFunctionParams(
                    amplitude=float(data.get("amplitude", base.step_params.amplitude)),
                    slope=float(data.get("slope", base.step_params.slope)),
                ),
                optimizer=OptimizerConfig(
                    lambda_r=float(data.get("lambda_r", base.optimizer.lambda_r)),
                    lambda_t=float(data.get("lambda_t", base.optimizer.lambda_t)),
                    step_size=float(data.get("step_size", base.optimizer.step_size)),
                ),
                min_continuous_dist_segments=float(
                    data.get("min_continuous_dist_segments", base.min_continuous_dist_segments)
                ),
                support=tuple(data.get("support", base.support)),
                use_occlusion_masks=bool(data.get("use_occlusion_masks", base.use_occlusion_masks)),
                occlusion_downscale=int(data.get("occlusion_downscale", base.occlusion_downscale)),
                occlusion_radius=int(data.get("occlusion_radius", base.occlusion_radius)),
                half_length=int(data.get("half_length", base.half_length)),
                histogram_sampling=HistogramSamplingConfig(
                    offset_px=int(data.get("histogram_offset_px", base.histogram_sampling.offset_px)),
                    max_px=int(data.get("histogram_max_px", base.histogram_sampling.max_px)),
                ),
                learning_rate_fg=float(data.get("learning_rate_fg", base.learning_rate_fg)),
                learning_rate_bg=float(data.get("learning_rate_bg", base.learning_rate_bg)),
                n_valid_min=int(data.get("n_valid_min", base.n_valid_min)),
            )
        except (TypeError, ValueError) as exc:
            logger.error(f"Invalid tracker config: {exc}")
            raise ConfigError(f"invalid tracker config: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "scales": list(self.scales),
            "outer_iters": self.outer_iters,
            "inner_iters": self.inner_iters,
            "amplitude": self.step_params.amplitude,
            "slope": self.step_params.slope,
            "lambda_r": self.optimizer.lambda_r,
            "lambda_t": self.optimizer.lambda_t,
            "step_size": self.optimizer.step_size,
            "min_continuous_dist_segments": self.min_continuous_dist_segments,
            "support": list(self.support),
            "use_occlusion_masks": self.use_occlusion_masks,
            "occlusion_downscale": self.occlusion_downscale,
            "occlusion_radius": self.occlusion_radius,
            "half_length": self.half_length,
            "histogram_offset_px": self.histogram_sampling.offset_px,
            "histogram_max_px": self.histogram_sampling.max_px,
            "learning_rate_fg": self.learning_rate_fg,
            "learning_rate_bg": self.learning_rate_bg,
            "n_valid_min": self.n_valid_min,
        }


#####################################
# Domain Types
#####################################


@dataclass
class TrackedObject:
    """Mutable tracking state of one object; never shared between tracker groups."""

    mesh: TriangleMesh
    model: SparseViewpointModel
    id: int = 0
    pose: Pose = field(default_factory=Pose.identity)
    histograms: ColorHistograms = field(default_factory=ColorHistograms)
    overrides: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.mesh.name

    def optimizer_config(self, config: TrackerConfig) -> OptimizerConfig:
        return config.optimizer.with_overrides(self.overrides)


@dataclass(frozen=True, eq=False)
class Frame:
    """An RGB image together with its per-pixel histogram bins."""

    image: np.ndarray
    flat_bins: np.ndarray

    @classmethod
    def from_image(cls, image: np.ndarray) -> "Frame":
        image = np.asarray(image)
        if image.ndim != 3 or image.shape[2] != 3:
            raise ValueError(f"expected an (H, W, 3) RGB image, got shape {image.shape}")
        return cls(image=image, flat_bins=bin_indices(image))

    @classmethod
    def ensure(cls, image_or_frame) -> "Frame":
        return image_or_frame if isinstance(image_or_frame, Frame) else cls.from_image(image_or_frame)

    @property
    def height(self) -> int:
        return int(self.image.shape[0])

    @property
    def width(self) -> int:
        return int(self.image.shape[1])


@dataclass
class TrackStepResult:
    object_id: int
    pose: Pose
    scales: list[int] = field(default_factory=list)
    valid_lines: list[int] = field(default_factory=list)
    mean_contour_distance_px: list[float] = field(default_factory=list)
    no_data: list[bool] = field(default_factory=list)
    histogram_updated: bool = False
    step_ms: float = 0.0

    def to_dict(self) -> dict:
        data = asdict(self)
        data["pose"] = self.pose.as_matrix().tolist()
        return data


#####################################
# Correspondence Lines
#####################################


def line_geometry(
    obj: TrackedObject,
    view: View,
    intrinsics: Intrinsics,
    config: TrackerConfig,
    scale: int,
    occlusion: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Projected centers, unit image normals, depths and a validity mask.

    Validity here covers everything but the image bounds: point in front of
    the camera, a usable projected normal, both continuous distances at least
    `min_continuous_dist_segments` segments long and visibility in the
    occlusion mask.
    """
    camera = obj.pose.transform(view.points)
    centers, in_front = project_points(intrinsics, camera)
    normals = (view.normals @ obj.pose.rotation.T)[:, :2]
    lengths = np.linalg.norm(normals, axis=1)
    usable_normal = lengths > 1e-9
    normals = np.where(usable_normal[:, None], normals / np.where(usable_normal, lengths, 1.0)[:, None], [1.0, 0.0])
    centers = np.nan_to_num(centers, nan=0.0)

    depths = np.where(in_front, camera[:, 2], 1.0)
    major = np.maximum(np.abs(normals[:, 0]), np.abs(normals[:, 1]))
    shortest_m = np.minimum(view.fg_dist, view.bg_dist)
    shortest_segments = shortest_m * intrinsics.focal_mean / depths * major / scale
    valid = in_front & usable_normal & (shortest_segments >= config.min_continuous_dist_segments)
    if occlusion is not None:
        valid &= is_visible(occlusion, config.occlusion_downscale, centers, obj.id)
    return centers, normals, depths, valid


def define_lines(
    obj: TrackedObject,
    likelihood_images: tuple[np.ndarray, np.ndarray],
    view: View,
    intrinsics: Intrinsics,
    config: TrackerConfig,
    scale: int,
    occlusion: np.ndarray | None = None,
) -> CorrespondenceLines:
    """Correspondence lines of one view at the object's current pose."""
    centers, normals, depths, valid = line_geometry(obj, view, intrinsics, config, scale, occlusion)
    likelihood_fg, likelihood_bg = likelihood_images
    segment_fg, inside, major, delta_r = sample_segment_posteriors(
        likelihood_fg, likelihood_bg, centers, normals, scale, config.half_length
    )
    valid &= inside
    n_valid = int(np.count_nonzero(valid))
    if n_valid < config.n_valid_min:
        logger.warning(f"'{obj.name}': only {n_valid} valid correspondence lines at scale {scale}")
    return CorrespondenceLines(
        centers=centers,
        normals=normals,
        major_components=major,
        offsets=delta_r,
        scale=scale,
        segment_fg_posteriors=segment_fg,
        model_points=np.asarray(view.points, dtype=np.float64),
        depths=depths,
        valid=valid,
    )


def _likelihood_images(histograms: ColorHistograms, frame: Frame) -> tuple[np.ndarray, np.ndarray]:
    return histograms.fg.reshape(-1)[frame.flat_bins], histograms.bg.reshape(-1)[frame.flat_bins]


#####################################
# Initialization and Tracking
#####################################


def initialize(
    obj: TrackedObject,
    image,
    initial_pose: Pose,
    intrinsics: Intrinsics,
    config: TrackerConfig | None = None,
) -> None:
    """Set the pose and build fresh histograms from this image (no blending)."""
    config = config or TrackerConfig()
    if not initial_pose.is_valid(tol=1e-6):
        raise ValueError("initial pose is not a valid rigid transform")
    frame = Frame.ensure(image)
    view = obj.model.view(closest_view(obj.model, initial_pose))
    posed = replace(obj, pose=initial_pose)
    _, _, _, line_mask = line_geometry(posed, view, intrinsics, config, config.scales[-1])
    observed = accumulate_from_pose(
        frame.flat_bins, view, initial_pose, intrinsics, config.histogram_sampling, line_mask
    )
    fresh = ColorHistograms(learning_rate_fg=config.learning_rate_fg, learning_rate_bg=config.learning_rate_bg)
    obj.histograms = update(fresh, observed)
    obj.pose = initial_pose
    logger.info(f"Initialized '{obj.name}' (id {obj.id}) with {observed.fg_pixels}/{observed.bg_pixels} fg/bg pixels")


def _occlusion_scene(
    objects: Sequence[TrackedObject], static_occluders: Sequence[tuple[TriangleMesh, Pose]]
) -> tuple[list[tuple[TriangleMesh, Pose]], list[int]]:
    scene = [(obj.mesh, obj.pose) for obj in objects]
    ids = [obj.id for obj in objects]
    free = (i for i in range(64) if i not in set(ids))
    for mesh, pose in static_occluders:
        scene.append((mesh, pose))
        ids.append(next(free))
    return scene, ids


def track_step(
    objects: Sequence[TrackedObject],
    image,
    intrinsics: Intrinsics,
    config: TrackerConfig | None = None,
    static_occluders: Sequence[tuple[TriangleMesh, Pose]] = (),
) -> list[TrackStepResult]:
    """Refine every object's pose on one frame, then adapt its histograms."""
    config = config or TrackerConfig()
    started = time.perf_counter()
    frame = Frame.ensure(image)
    ids = [obj.id for obj in objects]
    if len(set(ids)) != len(ids):
        raise ValueError(f"object ids must be unique, got {ids}")
    if not all(obj.histograms.initialized for obj in objects):
        raise ValueError("every object must be initialized before tracking")

    support = np.asarray(config.support)
    likelihood_images = {obj.id: _likelihood_images(obj.histograms, frame) for obj in objects}
    results = {obj.id: TrackStepResult(object_id=obj.id, pose=obj.pose) for obj in objects}
    masking = config.use_occlusion_masks and len(objects) + len(static_occluders) > 1
    occlusion = None

    for outer, scale in enumerate(config.scales):
        if masking:
            scene, scene_ids = _occlusion_scene(objects, static_occluders)
            occlusion = render_occlusion_mask(
                scene, intrinsics, config.occlusion_downscale, config.occlusion_radius, scene_ids
            )
        for obj in objects:
            result = results[obj.id]
            optimizer = obj.optimizer_config(config)
            view = obj.model.view(closest_view(obj.model, obj.pose))
            lines = define_lines(obj, likelihood_images[obj.id], view, intrinsics, config, scale, occlusion)
            distributions = posterior_distributions(lines.segment_fg_posteriors, config.step_params, support)

            usable = lines.valid & distributions.valid
            result.scales.append(scale)
            result.valid_lines.append(int(np.count_nonzero(usable)))
            if np.any(usable):
                distance_px = from_scaled(
                    distributions.means[usable], lines.offsets[usable], lines.major_components[usable], scale
                )
                result.mean_contour_distance_px.append(float(np.mean(np.abs(distance_px))))
            else:
                result.mean_contour_distance_px.append(float("nan"))

            failed = False
            outer_start = obj.pose
            for mode in config.inner_modes():
                try:
                    equations = assemble(lines, distributions, obj.pose, intrinsics, mode, optimizer)
                    theta = solve_step(equations, optimizer)
                except NoDataError:
                    logger.warning(f"'{obj.name}': no data in outer iteration {outer}, pose kept")
                    failed = True
                except SolverError as exc:
                    logger.warning(f"'{obj.name}': solver failed in outer iteration {outer}: {exc}")
                    failed = True
                if failed:
                    # a partial inner update does not survive a failed iteration
                    obj.pose = outer_start
                    break
                obj.pose = update_pose(obj.pose, theta)
            result.no_data.append(failed)
            logger.debug(
                f"'{obj.name}' outer {outer}: scale {scale}, {result.valid_lines[-1]} lines, "
                f"|d| {result.mean_contour_distance_px[-1]:.3f} px"
            )

    for obj in objects:
        result = results[obj.id]
        view = obj.model.view(closest_view(obj.model, obj.pose))
        _, _, _, line_mask = line_geometry(obj, view, intrinsics, config, config.scales[-1], occlusion)
        try:
            observed = accumulate_from_pose(
                frame.flat_bins, view, obj.pose, intrinsics, config.histogram_sampling, line_mask
            )
            obj.histograms = update(obj.histograms, observed)
            result.histogram_updated = True
        except HistogramStarvedError as exc:
            logger.warning(f"'{obj.name}': keeping previous histograms ({exc})")
        result.pose = obj.pose

    elapsed_ms = (time.perf_counter() - started) * 1000.0
    for result in results.values():
        result.step_ms = elapsed_ms
    return [results[obj.id] for obj in objects]
