"""
sequence_producer.py

Produce seeded synthetic tracking sequences.

A sequence directory holds:
- frames/000000.png ...   8-bit RGB frames
- poses.csv               ground-truth model-to-camera poses
- intrinsics.json         pinhole camera
- occluder_poses.csv, occluder.obj  (occlusion variant only)

Each frame renders the object with per-face colors over a procedural
clutter background. Variants:
- regular
- dynamic_light  global brightness gain changing over time
- noisy          additive Gaussian pixel noise
- occlusion      a second object moving in front of the tracked one

Everything is drawn from one numpy Generator, so a seed reproduces the
frames bit for bit.

Environment variables are in utils/utils_config module.
"""

#####################################
# Import Modules
#####################################

# stdlib
import pathlib
from dataclasses import dataclass
from typing import Iterator

# external
import cv2
import numpy as np

# local
import utils.utils_config as config
from tracking.errors import ConfigError, SequenceError
from tracking.geometry import Intrinsics, Pose, exp_map
from tracking.mesh_render import TriangleMesh, make_box_mesh, make_sphere_mesh, render_labels, save_mesh
from utils.utils_io import FrameSequence, write_intrinsics, write_pose_csv, write_rgb
from utils.utils_logger import logger

#####################################
# Constants
#####################################

VARIANTS = ("regular", "dynamic_light", "noisy", "occlusion")
DEFAULT_INTRINSICS = Intrinsics(fx=600.0, fy=600.0, px=319.5, py=239.5, width=640, height=480)

#####################################
# Trajectories
#####################################


@dataclass(frozen=True)
class TrajectorySpec:
    kind: str = "random_walk"  # random_walk | orbit
    n_frames: int = 200
    distance: float = 0.5
    max_translation_m: float = 0.008
    max_rotation_deg: float = 2.5

    def __post_init__(self) -> None:
        if self.kind not in ("random_walk", "orbit"):
            logger.error(f"Unknown trajectory kind {self.kind!r}")
            raise ConfigError(f"unknown trajectory kind {self.kind!r}")
        if self.n_frames < 1:
            logger.error(f"Trajectory needs at least one frame, got {self.n_frames}")
            raise ConfigError(f"n_frames must be at least 1, got {self.n_frames}")


def start_pose(distance: float) -> Pose:
    """Slightly oblique view of the model origin from `distance` meters."""
    return Pose(exp_map(np.array([0.5, -0.4, 0.2])), np.array([0.0, 0.0, distance]))


def random_walk_trajectory(spec: TrajectorySpec, rng: np.random.Generator) -> list[Pose]:
    """
    Bounded random motion: each step rotates the object about its own origin by
    at most `max_rotation_deg` and moves it by at most `max_translation_m`,
    with a pull back toward the start position.
    """
    start = start_pose(spec.distance)
    poses = [start]
    max_angle = np.deg2rad(spec.max_rotation_deg)
    for _ in range(spec.n_frames - 1):
        previous = poses[-1]
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        rotation = exp_map(axis * rng.uniform(0.0, max_angle)) @ previous.rotation

        step = rng.normal(size=3) * spec.max_translation_m * 0.5
        step += 0.1 * (start.translation - previous.translation)
        length = np.linalg.norm(step)
        if length > spec.max_translation_m:
            step *= spec.max_translation_m / length
        poses.append(Pose(rotation, previous.translation + step))
    return poses


def orbit_trajectory(spec: TrajectorySpec, axis=(0.0, 1.0, 0.0)) -> list[Pose]:
    """Constant rotation about a model axis; the camera distance stays fixed."""
    start = start_pose(spec.distance)
    axis = np.asarray(axis, dtype=np.float64) / np.linalg.norm(axis)
    step = np.deg2rad(spec.max_rotation_deg)
    return [Pose(start.rotation @ exp_map(axis * step * k), start.translation) for k in range(spec.n_frames)]


def make_trajectory(spec: TrajectorySpec, rng: np.random.Generator) -> list[Pose]:
    if spec.kind == "orbit":
        return orbit_trajectory(spec)
    return random_walk_trajectory(spec, rng)


def occluder_trajectory(object_poses: list[Pose], amplitude: float = 0.06, period: int = 80) -> list[Pose]:
    """An occluder sweeping sideways in front of the object, at 70% of its depth."""
    poses = []
    for k, pose in enumerate(object_poses):
        x, y, z = pose.translation
        offset = amplitude * np.sin(2.0 * np.pi * k / period)
        poses.append(Pose(np.eye(3), np.array([x + offset, y, 0.7 * z])))
    return poses


#####################################
# Images
#####################################


def clutter_background(width: int, height: int, rng: np.random.Generator, n_shapes: int = 150) -> np.ndarray:
    """Color blobs plus random rectangles, circles and lines; RGB uint8."""
    coarse = rng.integers(0, 256, size=(height // 16 + 2, width // 16 + 2, 3)).astype(np.uint8)
    image = cv2.resize(coarse, (width, height), interpolation=cv2.INTER_LINEAR)
    for _ in range(n_shapes):
        color = tuple(int(c) for c in rng.integers(0, 256, size=3))
        kind = int(rng.integers(0, 3))
        x0, x1 = (int(v) for v in rng.integers(0, width, size=2))
        y0, y1 = (int(v) for v in rng.integers(0, height, size=2))
        if kind == 0:
            cv2.rectangle(image, (x0, y0), (x1, y1), color, thickness=-1)
        elif kind == 1:
            radius = int(rng.integers(4, max(5, min(width, height) // 8)))
            cv2.circle(image, (x0, y0), radius, color, thickness=-1)
        else:
            cv2.line(image, (x0, y0), (x1, y1), color, thickness=int(rng.integers(1, 6)))
    return cv2.GaussianBlur(image, (3, 3), 0)


def face_colors(
    mesh: TriangleMesh, rng: np.random.Generator, base_color=(40, 90, 210), spread: int = 25
) -> np.ndarray:
    """One RGB color per triangle scattered around `base_color`; spread=0 gives a flat color."""
    base = np.asarray(base_color, dtype=np.int64)
    jitter = rng.integers(-spread, spread + 1, size=(mesh.triangles.shape[0], 3)) if spread else 0
    return np.clip(base + jitter, 0, 255).astype(np.uint8)


def render_frame(
    background: np.ndarray,
    scene: list[tuple[TriangleMesh, Pose]],
    colors: list[np.ndarray],
    intrinsics: Intrinsics,
    supersample: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Paint every posed mesh with its per-triangle colors; returns (image, object_id buffer).

    With supersample > 1 the scene is painted at that many times the
    resolution and box-filtered down, so silhouette pixels mix object and
    background colors by coverage. The object_id buffer stays point sampled.
    """
    if supersample < 1:
        raise ValueError(f"supersample must be at least 1, got {supersample}")
    if supersample > 1:
        fine = intrinsics.upscaled(supersample)
        enlarged = cv2.resize(background, (fine.width, fine.height), interpolation=cv2.INTER_NEAREST)
        painted, _ = render_frame(enlarged, scene, colors, fine)
        image = cv2.resize(painted, (intrinsics.width, intrinsics.height), interpolation=cv2.INTER_AREA)
        return image, render_labels(scene, intrinsics).object_id

    buffers = render_labels(scene, intrinsics)
    image = background.copy()
    for index, palette in enumerate(colors):
        hit = buffers.object_id == index
        image[hit] = palette[buffers.triangle_id[hit]]
    return image, buffers.object_id


def apply_variant(image: np.ndarray, variant: str, frame_index: int, rng: np.random.Generator) -> np.ndarray:
    if variant == "dynamic_light":
        gain = 1.0 + 0.35 * np.sin(2.0 * np.pi * frame_index / 60.0)
        return np.clip(image.astype(np.float64) * gain, 0, 255).astype(np.uint8)
    if variant == "noisy":
        noise = rng.normal(0.0, 12.0, size=image.shape)
        return np.clip(image.astype(np.float64) + noise, 0, 255).astype(np.uint8)
    return image


#####################################
# Frame Generator
#####################################


def generate_frames(
    mesh: TriangleMesh,
    poses: list[Pose],
    background: np.ndarray,
    intrinsics: Intrinsics,
    rng: np.random.Generator,
    variant: str = "regular",
    colors: np.ndarray | None = None,
    occluder: tuple[TriangleMesh, list[Pose]] | None = None,
    supersample: int = 1,
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (frame index, RGB image); raises SequenceError if the object leaves the image."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    colors = face_colors(mesh, rng) if colors is None else colors
    occluder_colors = None
    if occluder is not None:
        occluder_colors = face_colors(occluder[0], rng, base_color=(200, 200, 60))

    for k, pose in enumerate(poses):
        scene = [(mesh, pose)]
        palettes = [colors]
        if occluder is not None:
            scene.append((occluder[0], occluder[1][k]))
            palettes.append(occluder_colors)
        image, _ = render_frame(background, scene, palettes, intrinsics, supersample)

        # the object's full silhouette must be inside the image
        silhouette = render_labels([(mesh, pose)], intrinsics).object_id == 0
        border = np.concatenate([silhouette[0], silhouette[-1], silhouette[:, 0], silhouette[:, -1]])
        if not silhouette.any() or border.any():
            logger.error(f"Object leaves the image at frame {k}")
            raise SequenceError("object leaves the image", frame_index=k)
        yield k, apply_variant(image, variant, k, rng)


def generate_synthetic_sequence(
    mesh: TriangleMesh,
    trajectory: TrajectorySpec | list[Pose],
    out_dir: pathlib.Path | str,
    intrinsics: Intrinsics = DEFAULT_INTRINSICS,
    background: np.ndarray | None = None,
    seed: int = 0,
    variant: str = "regular",
    colors: np.ndarray | None = None,
    supersample: int = 1,
) -> FrameSequence:
    """Render and write a sequence; identical arguments give identical files."""
    out_dir = pathlib.Path(out_dir)
    rng = np.random.default_rng(seed)
    poses = make_trajectory(trajectory, rng) if isinstance(trajectory, TrajectorySpec) else list(trajectory)
    if background is None:
        background = clutter_background(intrinsics.width, intrinsics.height, rng)
    if background.shape[:2] != (intrinsics.height, intrinsics.width):
        background = cv2.resize(background, (intrinsics.width, intrinsics.height), interpolation=cv2.INTER_AREA)

    occluder = None
    if variant == "occlusion":
        occluder_mesh = make_sphere_mesh(0.35 * mesh.diameter / 2.0, subdivisions=2, name="occluder")
        occluder = (occluder_mesh, occluder_trajectory(poses, amplitude=0.6 * mesh.diameter))

    frames_dir = out_dir / "frames"
    frame_paths = []
    frames = generate_frames(mesh, poses, background, intrinsics, rng, variant, colors, occluder, supersample)
    for k, image in frames:
        frame_paths.append(write_rgb(image, frames_dir / f"{k:06d}.png"))

    write_pose_csv(poses, out_dir / "poses.csv")
    write_intrinsics(intrinsics, out_dir / "intrinsics.json")
    occluder_poses: list[Pose] = []
    occluder_mesh_path = None
    if occluder is not None:
        occluder_poses = occluder[1]
        write_pose_csv(occluder_poses, out_dir / "occluder_poses.csv")
        occluder_mesh_path = save_mesh(occluder[0], out_dir / "occluder.obj")

    logger.info(f"Wrote {len(frame_paths)} frames of '{mesh.name}' ({variant}) to {out_dir}")
    return FrameSequence(
        name=out_dir.name,
        frame_paths=frame_paths,
        gt_poses=poses,
        intrinsics=intrinsics,
        occluder_poses=occluder_poses,
        occluder_mesh_path=occluder_mesh_path,
    )


#####################################
# Main
#####################################


def main() -> None:
    """Write one short demo sequence of a 6 cm cube under the results folder."""
    logger.info("Starting synthetic sequence producer.")
    seed = config.get_rng_seed_as_int()
    out_dir = config.get_results_path() / "synthetic" / "cube_regular"
    mesh = make_box_mesh((0.06, 0.06, 0.06), name="cube")
    generate_synthetic_sequence(mesh, TrajectorySpec(n_frames=50), out_dir, seed=seed)
    logger.info("Synthetic sequence producer finished.")


#####################################
# Conditional Execution
#####################################

if __name__ == "__main__":
    main()
