"""
Color Histograms
File: tracking/histograms.py

Foreground / background RGB statistics for pixel-wise posteriors.

- 32 equidistant bins per channel (value // 8), 32768 bins in total.
- Histograms are stored normalized; an empty histogram is all zeros.
- Observations are gathered along projected contour normals: after an
  offset, up to max_px pixels inward (foreground) and outward (background),
  never past the stored continuous distances.
- The first update adopts the observation; later updates blend it in
  with the learning rates.
"""

#####################################
# Import Modules
#####################################

# import from Python Standard Library
from __future__ import annotations

import pathlib
from dataclasses import dataclass, field, replace

# import from external packages
import numpy as np

# import from local modules
from tracking.errors import HistogramStarvedError, ModelFormatError
from tracking.geometry import Intrinsics, Pose, project_points
from tracking.viewpoint_model import View
from utils.utils_logger import logger

#####################################
# Constants
#####################################

BINS_PER_CHANNEL = 32
BIN_SHIFT = 3  # 256 / 32 = 8 values per bin
N_BINS = BINS_PER_CHANNEL**3
MAGIC = b"CHS1"
HEADER_DTYPE = np.dtype(
    [("magic", "S4"), ("bins", "<u4"), ("learning_rate_fg", "<f4"), ("learning_rate_bg", "<f4")]
)

#####################################
# Domain Types
#####################################


def _empty() -> np.ndarray:
    return np.zeros((BINS_PER_CHANNEL,) * 3)


@dataclass(frozen=True, eq=False)
class ColorHistograms:
    fg: np.ndarray = field(default_factory=_empty)
    bg: np.ndarray = field(default_factory=_empty)
    learning_rate_fg: float = 0.2
    learning_rate_bg: float = 0.2
    initialized: bool = False

    def __post_init__(self) -> None:
        for name in ("fg", "bg"):
            value = np.asarray(getattr(self, name), dtype=np.float64).reshape((BINS_PER_CHANNEL,) * 3)
            if np.any(value < 0.0):
                raise ValueError(f"{name} histogram has negative bins")
            object.__setattr__(self, name, value)
        for rate in (self.learning_rate_fg, self.learning_rate_bg):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"learning rate must be in [0, 1], got {rate}")


@dataclass(frozen=True)
class HistogramSamplingConfig:
    offset_px: int = 1
    max_px: int = 18


@dataclass(frozen=True, eq=False)
class ObservedHistograms:
    fg: np.ndarray
    bg: np.ndarray
    fg_pixels: int
    bg_pixels: int


#####################################
# Binning and Lookup
#####################################


def bin_of(color) -> tuple[int, int, int]:
    """Bin index triple of an 8-bit RGB color."""
    r, g, b = (int(c) >> BIN_SHIFT for c in color)
    return r, g, b


def bin_indices(image: np.ndarray) -> np.ndarray:
    """Flat bin index of every pixel of an (H, W, 3) uint8 RGB image."""
    shifted = np.asarray(image, dtype=np.uint8) >> BIN_SHIFT
    shifted = shifted.astype(np.int32)
    return (shifted[..., 0] * BINS_PER_CHANNEL + shifted[..., 1]) * BINS_PER_CHANNEL + shifted[..., 2]


def likelihoods(histograms: ColorHistograms, flat_bins: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return p(y|m_f), p(y|m_b) for an array of flat bin indices."""
    return histograms.fg.reshape(-1)[flat_bins], histograms.bg.reshape(-1)[flat_bins]


#####################################
# Observation
#####################################


def _normalized(counts: np.ndarray) -> np.ndarray:
    return (counts / counts.sum()).reshape((BINS_PER_CHANNEL,) * 3)


def accumulate_from_pose(
    image: np.ndarray,
    view: View,
    pose: Pose,
    intrinsics: Intrinsics,
    config: HistogramSamplingConfig | None = None,
    line_mask: np.ndarray | None = None,
) -> ObservedHistograms:
    """
    Gather fg/bg color statistics along the projected normals of one view.

    `image` is an (H, W, 3) RGB image or its precomputed flat bin indices.

    Pixel k (k = offset .. offset + max_px - 1) along -n goes to the foreground
    and along +n to the background, as long as k stays inside the continuous
    distance of that side.
    """
    config = config or HistogramSamplingConfig()
    flat = image if np.ndim(image) == 2 else bin_indices(image)
    height, width = flat.shape

    camera_points = pose.transform(view.points)
    centers, in_front = project_points(intrinsics, camera_points)
    normals_2d = (view.normals @ pose.rotation.T)[:, :2]
    lengths = np.linalg.norm(normals_2d, axis=1)
    usable = in_front & (lengths > 1e-9)
    if line_mask is not None:
        usable &= np.asarray(line_mask, dtype=bool)
    normals_2d = normals_2d / np.where(lengths > 1e-9, lengths, 1.0)[:, None]

    depth = np.where(in_front, camera_points[:, 2], 1.0)
    fg_reach = view.fg_dist * intrinsics.focal_mean / depth
    bg_reach = view.bg_dist * intrinsics.focal_mean / depth

    steps = np.arange(config.offset_px, config.offset_px + config.max_px, dtype=np.float64)
    fg_counts = np.zeros(N_BINS)
    bg_counts = np.zeros(N_BINS)
    totals = []
    for sign, reach, counts in ((-1.0, fg_reach, fg_counts), (1.0, bg_reach, bg_counts)):
        if sign < 0:
            within = steps[None, :] < reach[:, None]
        else:
            within = steps[None, :] <= reach[:, None]
        positions = centers[:, None, :] + sign * steps[None, :, None] * normals_2d[:, None, :]
        cols = np.rint(np.nan_to_num(positions[..., 0], nan=-1.0)).astype(np.int64)
        rows = np.rint(np.nan_to_num(positions[..., 1], nan=-1.0)).astype(np.int64)
        keep = within & usable[:, None] & (cols >= 0) & (rows >= 0) & (cols < width) & (rows < height)
        np.add.at(counts, flat[rows[keep], cols[keep]], 1.0)
        totals.append(int(keep.sum()))

    if totals[0] == 0 or totals[1] == 0:
        logger.warning(f"Histogram sampling collected fg={totals[0]} bg={totals[1]} pixels")
        raise HistogramStarvedError(f"histogram starved: fg={totals[0]} bg={totals[1]} pixels collected")

    logger.debug(f"Histogram sampling: fg={totals[0]} bg={totals[1]} pixels")
    return ObservedHistograms(
        fg=_normalized(fg_counts), bg=_normalized(bg_counts), fg_pixels=totals[0], bg_pixels=totals[1]
    )


def update(current: ColorHistograms, observed: ObservedHistograms) -> ColorHistograms:
    """Blend observed histograms in; the very first call adopts them unblended."""
    if not current.initialized:
        return replace(current, fg=observed.fg.copy(), bg=observed.bg.copy(), initialized=True)
    alpha_f, alpha_b = current.learning_rate_fg, current.learning_rate_bg
    return replace(
        current,
        fg=alpha_f * observed.fg + (1.0 - alpha_f) * current.fg,
        bg=alpha_b * observed.bg + (1.0 - alpha_b) * current.bg,
    )


#####################################
# Persistence
#####################################


def save_histograms(histograms: ColorHistograms, path: pathlib.Path | str) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["bins"] = BINS_PER_CHANNEL
    header["learning_rate_fg"] = histograms.learning_rate_fg
    header["learning_rate_bg"] = histograms.learning_rate_bg
    with path.open("wb") as f:
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(histograms.fg, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(histograms.bg, dtype="<f8").tobytes())
    return path


def load_histograms(path: pathlib.Path | str) -> ColorHistograms:
    path = pathlib.Path(path)
    data = path.read_bytes()
    expected = HEADER_DTYPE.itemsize + 2 * 8 * N_BINS
    if len(data) != expected:
        raise ModelFormatError(f"{path} holds {len(data)} bytes, expected {expected}")
    header = np.frombuffer(data[: HEADER_DTYPE.itemsize], dtype=HEADER_DTYPE)[0]
    if bytes(header["magic"]) != MAGIC or int(header["bins"]) != BINS_PER_CHANNEL:
        raise ModelFormatError(f"{path} is not a {BINS_PER_CHANNEL}-bin histogram file")
    fg = np.frombuffer(data, dtype="<f8", count=N_BINS, offset=HEADER_DTYPE.itemsize)
    bg = np.frombuffer(data, dtype="<f8", count=N_BINS, offset=HEADER_DTYPE.itemsize + 8 * N_BINS)
    return ColorHistograms(
        fg=fg.copy(),
        bg=bg.copy(),
        learning_rate_fg=float(header["learning_rate_fg"]),
        learning_rate_bg=float(header["learning_rate_bg"]),
        initialized=bool(fg.sum() > 0.0 and bg.sum() > 0.0),
    )
