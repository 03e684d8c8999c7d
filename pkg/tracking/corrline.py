"""
Correspondence Lines
File: tracking/corrline.py

Probabilistic contour search along fixed lines in the image.

A correspondence line has a center c and unit normal n. Pixels along it are
grouped into segments of s pixels measured along the dominant normal axis;
the scaled coordinate of a line coordinate r is

    r_s = (r - delta_r) * n_bar / s,   n_bar = max(|n_x|, |n_y|)

with delta_r chosen per line so that segment centers land on integer r_s
while the sampled pixel positions stay on pixel centers. For every segment
the color histograms give a foreground posterior; the smoothed step
functions turn those into a discrete distribution over the scaled contour
distance d_s on a half-integer support.

Also here: closed-form checks for the Gaussian and Laplace limits, the
log-derivative of the continuous posterior, and the three-model (noise)
formulation, all used as test oracles.
"""

#####################################
# Import Modules
#####################################

# import from Python Standard Library
from __future__ import annotations

import pathlib
from dataclasses import dataclass
from typing import Literal

# import from external packages
import numpy as np
import pandas as pd
from scipy import integrate

# import from local modules
from tracking.errors import DegenerateDistributionError, OracleDomainError
from tracking.histograms import ColorHistograms, bin_indices, likelihoods
from utils.utils_logger import logger

#####################################
# Constants
#####################################

TABLE_REACH = 3.5  # step table covers x in {-3.5, ..., 3.5}
DEFAULT_SUPPORT = np.arange(-5.5, 6.0, 1.0)
VARIANCE_FLOOR = 0.01
DEFAULT_HALF_LENGTH = 9  # segments on each side of the center

Side = Literal["foreground", "background"]

#####################################
# Domain Types
#####################################


@dataclass(frozen=True)
class StepFunctionParams:
    """Amplitude α_h in (0, 0.5] and slope s_h >= 0 of the smoothed step functions."""

    amplitude: float = 0.36
    slope: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.amplitude <= 0.5:
            raise ValueError(f"amplitude must be in (0, 0.5], got {self.amplitude}")
        if not self.slope >= 0.0:
            raise ValueError(f"slope must be non-negative, got {self.slope}")


@dataclass(frozen=True, eq=False)
class CorrespondenceLine:
    center: np.ndarray  # pixels
    normal: np.ndarray  # unit
    major_component: float
    offset: float  # delta_r, pixels along the line
    scale: int
    segment_fg_posteriors: np.ndarray  # one per scaled coordinate r_s
    model_point: np.ndarray  # model frame, meters
    depth_at_center: float

    def __post_init__(self) -> None:
        if self.scale < 1:
            raise ValueError("scale must be at least 1")
        posteriors = np.asarray(self.segment_fg_posteriors, dtype=np.float64)
        if np.any((posteriors < 0.0) | (posteriors > 1.0)):
            raise ValueError("segment posteriors must lie in [0, 1]")
        object.__setattr__(self, "segment_fg_posteriors", posteriors)

    @property
    def segment_bg_posteriors(self) -> np.ndarray:
        return 1.0 - self.segment_fg_posteriors

    def segment_coordinates(self) -> np.ndarray:
        return segment_coordinates(self.segment_fg_posteriors.shape[0])


@dataclass(frozen=True, eq=False)
class PosteriorDistribution:
    support: np.ndarray
    probabilities: np.ndarray
    mean: float
    variance: float

    def probability_at(self, d_s: float) -> float:
        index = np.flatnonzero(np.isclose(self.support, d_s))
        return float(self.probabilities[index[0]]) if index.size else 0.0


@dataclass(frozen=True, eq=False)
class CorrespondenceLines:
    """Struct-of-arrays form of many lines sharing one scale; used per outer iteration."""

    centers: np.ndarray  # (n, 2)
    normals: np.ndarray  # (n, 2)
    major_components: np.ndarray  # (n,)
    offsets: np.ndarray  # (n,) delta_r
    scale: int
    segment_fg_posteriors: np.ndarray  # (n, n_segments)
    model_points: np.ndarray  # (n, 3)
    depths: np.ndarray  # (n,)
    valid: np.ndarray  # (n,) bool

    def __len__(self) -> int:
        return int(self.centers.shape[0])

    @property
    def n_valid(self) -> int:
        return int(np.count_nonzero(self.valid))

    def segment_coordinates(self) -> np.ndarray:
        return segment_coordinates(self.segment_fg_posteriors.shape[1])

    def line(self, index: int) -> CorrespondenceLine:
        return CorrespondenceLine(
            center=self.centers[index],
            normal=self.normals[index],
            major_component=float(self.major_components[index]),
            offset=float(self.offsets[index]),
            scale=self.scale,
            segment_fg_posteriors=self.segment_fg_posteriors[index],
            model_point=self.model_points[index],
            depth_at_center=float(self.depths[index]),
        )

    def subset(self, mask: np.ndarray) -> "CorrespondenceLines":
        mask = np.asarray(mask, dtype=bool)
        return CorrespondenceLines(
            centers=self.centers[mask],
            normals=self.normals[mask],
            major_components=self.major_components[mask],
            offsets=self.offsets[mask],
            scale=self.scale,
            segment_fg_posteriors=self.segment_fg_posteriors[mask],
            model_points=self.model_points[mask],
            depths=self.depths[mask],
            valid=self.valid[mask],
        )

    @classmethod
    def from_lines(cls, lines: list[CorrespondenceLine]) -> "CorrespondenceLines":
        if not lines:
            raise ValueError("at least one line is required")
        scales = {line.scale for line in lines}
        if len(scales) != 1:
            raise ValueError(f"lines must share one scale, got {sorted(scales)}")
        return cls(
            centers=np.array([line.center for line in lines], dtype=np.float64),
            normals=np.array([line.normal for line in lines], dtype=np.float64),
            major_components=np.array([line.major_component for line in lines]),
            offsets=np.array([line.offset for line in lines]),
            scale=scales.pop(),
            segment_fg_posteriors=np.array([line.segment_fg_posteriors for line in lines]),
            model_points=np.array([line.model_point for line in lines], dtype=np.float64),
            depths=np.array([line.depth_at_center for line in lines]),
            valid=np.ones(len(lines), dtype=bool),
        )


@dataclass(frozen=True, eq=False)
class DistributionBatch:
    """Distributions of many lines; rows with valid=False are all zero."""

    support: np.ndarray  # (k,)
    probabilities: np.ndarray  # (n, k)
    means: np.ndarray  # (n,)
    variances: np.ndarray  # (n,)
    valid: np.ndarray  # (n,) bool

    def __len__(self) -> int:
        return int(self.means.shape[0])

    def distribution(self, index: int) -> PosteriorDistribution:
        return PosteriorDistribution(
            support=self.support,
            probabilities=self.probabilities[index],
            mean=float(self.means[index]),
            variance=float(self.variances[index]),
        )


#####################################
# Step Functions
#####################################


def smoothed_step(x, params: StepFunctionParams, which: Side = "foreground"):
    """h_f(x) = 0.5 - α tanh(x / 2 s_h); h_b mirrors it. s_h = 0 is the sign step."""
    x = np.asarray(x, dtype=np.float64)
    if params.slope == 0.0:
        shape = np.sign(x)
    else:
        shape = np.tanh(x / (2.0 * params.slope))
    value = 0.5 - params.amplitude * shape if which == "foreground" else 0.5 + params.amplitude * shape
    return float(value) if value.ndim == 0 else value


def step_table(params: StepFunctionParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The 8 tabulated values (x, h_f, h_b) on x = -3.5 .. 3.5."""
    x = np.arange(-TABLE_REACH, TABLE_REACH + 0.5, 1.0)
    h_f = smoothed_step(x, params, "foreground")
    return x, h_f, 1.0 - h_f


def step_lookup(x, params: StepFunctionParams, which: Side = "foreground") -> np.ndarray:
    """Step values with the tails beyond the table clamped to 0.5 ∓ α_h."""
    x = np.asarray(x, dtype=np.float64)
    inside = smoothed_step(np.clip(x, -TABLE_REACH, TABLE_REACH), params, which)
    sign = 1.0 if which == "background" else -1.0
    asymptote = 0.5 + sign * params.amplitude * np.sign(x)
    return np.where(np.abs(x) <= TABLE_REACH, inside, asymptote)


#####################################
# Scale Space
#####################################


def segment_coordinates(n_segments: int) -> np.ndarray:
    """Integer scaled coordinates r_s of a line with n_segments segments."""
    return np.arange(n_segments, dtype=np.float64) - (n_segments // 2)


def line_offsets(centers: np.ndarray, normals: np.ndarray, scale: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Major normal component n_bar and offset delta_r per line.

    Along the dominant axis the segment center for r_s = 0 must hit a pixel
    center (odd s) or a pixel edge (even s); delta_r is the shortest move
    along the line that achieves it.
    """
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    normals = np.asarray(normals, dtype=np.float64).reshape(-1, 2)
    use_x = np.abs(normals[:, 0]) >= np.abs(normals[:, 1])
    major = np.where(use_x, np.abs(normals[:, 0]), np.abs(normals[:, 1]))
    c_major = np.where(use_x, centers[:, 0], centers[:, 1])
    n_major = np.where(use_x, normals[:, 0], normals[:, 1])
    if scale % 2 == 1:
        target = np.rint(c_major)
    else:
        target = np.floor(c_major) + 0.5
    return major, (target - c_major) / n_major


def to_scaled(r, delta_r, major, scale: int):
    return (np.asarray(r) - delta_r) * major / scale


def from_scaled(r_s, delta_r, major, scale: int):
    return np.asarray(r_s) * scale / major + delta_r


def line_pixel_coordinates(
    centers: np.ndarray, normals: np.ndarray, scale: int, half_length: int = DEFAULT_HALF_LENGTH
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Pixel positions sampled by each line.

    Returns:
        cols, rows: (n, 2 * half_length + 1, scale) integer pixel indices
        major, delta_r: per-line scale-space parameters
    """
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    normals = np.asarray(normals, dtype=np.float64).reshape(-1, 2)
    major, delta_r = line_offsets(centers, normals, scale)
    coords = segment_coordinates(2 * half_length + 1)
    within = np.arange(scale, dtype=np.float64) - (scale - 1) / 2.0
    steps = coords[:, None] * scale + within[None, :]
    r = delta_r[:, None, None] + steps[None, :, :] / major[:, None, None]
    cols = np.rint(centers[:, 0, None, None] + r * normals[:, 0, None, None]).astype(np.int64)
    rows = np.rint(centers[:, 1, None, None] + r * normals[:, 1, None, None]).astype(np.int64)
    return cols, rows, major, delta_r


def sample_line(
    image: np.ndarray,
    center: np.ndarray,
    normal: np.ndarray,
    scale: int,
    half_length: int = DEFAULT_HALF_LENGTH,
) -> tuple[np.ndarray, bool]:
    """
    Colors of the s closest pixels for every segment of one line.

    Returns:
        (colors (2 * half_length + 1, scale, 3), valid). A line that leaves the
        image is flagged invalid and its colors are undefined (zeros).
    """
    if half_length < 1:
        raise ValueError("half_length must be at least 1")
    cols, rows, _, _ = line_pixel_coordinates(center, normal, scale, half_length)
    cols, rows = cols[0], rows[0]
    height, width = image.shape[:2]
    valid = bool(np.all((cols >= 0) & (rows >= 0) & (cols < width) & (rows < height)))
    if not valid:
        return np.zeros(cols.shape + (3,), dtype=np.uint8), False
    return image[rows, cols], True


def sample_segment_posteriors(
    likelihood_fg: np.ndarray,
    likelihood_bg: np.ndarray,
    centers: np.ndarray,
    normals: np.ndarray,
    scale: int,
    half_length: int = DEFAULT_HALF_LENGTH,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Segment foreground posteriors of many lines from per-pixel likelihood images.

    Returns:
        segment_fg (n, 2 * half_length + 1), inside (n,), major (n,), delta_r (n,).
        Lines leaving the image get inside=False and neutral posteriors 0.5.
    """
    cols, rows, major, delta_r = line_pixel_coordinates(centers, normals, scale, half_length)
    height, width = likelihood_fg.shape
    in_bounds = (cols >= 0) & (rows >= 0) & (cols < width) & (rows < height)
    inside = in_bounds.reshape(in_bounds.shape[0], -1).all(axis=1)
    cols = np.where(in_bounds, cols, 0)
    rows = np.where(in_bounds, rows, 0)
    segment_fg = segment_posteriors_from_likelihoods(likelihood_fg[rows, cols], likelihood_bg[rows, cols])
    segment_fg[~inside] = 0.5
    return segment_fg, inside, major, delta_r


#####################################
# Pixel and Segment Posteriors
#####################################


def segment_posteriors_from_likelihoods(likelihood_fg: np.ndarray, likelihood_bg: np.ndarray) -> np.ndarray:
    """Foreground posterior of segments from per-pixel likelihoods (last axis = pixels)."""
    product_fg = np.prod(likelihood_fg, axis=-1)
    product_bg = np.prod(likelihood_bg, axis=-1)
    total = product_fg + product_bg
    return np.where(total > 0.0, product_fg / np.where(total > 0.0, total, 1.0), 0.5)


def pixel_posterior(color, histograms: ColorHistograms) -> tuple[float, float]:
    """(p_f, p_b) of one RGB color; (0.5, 0.5) when neither histogram knows it."""
    flat = bin_indices(np.asarray(color, dtype=np.uint8).reshape(1, 1, 3))
    likelihood_fg, likelihood_bg = likelihoods(histograms, flat)
    p_f = float(segment_posteriors_from_likelihoods(likelihood_fg, likelihood_bg)[0])
    return p_f, 1.0 - p_f


def segment_posterior(colors, histograms: ColorHistograms) -> tuple[float, float]:
    colors = np.asarray(colors, dtype=np.uint8).reshape(1, -1, 3)
    if colors.shape[1] < 1:
        raise ValueError("a segment needs at least one pixel")
    likelihood_fg, likelihood_bg = likelihoods(histograms, bin_indices(colors))
    p_f = float(segment_posteriors_from_likelihoods(likelihood_fg, likelihood_bg)[0])
    return p_f, 1.0 - p_f


#####################################
# Posterior Distributions
#####################################


def posterior_distributions(
    segment_fg: np.ndarray,
    params: StepFunctionParams,
    support: np.ndarray = DEFAULT_SUPPORT,
    coordinates: np.ndarray | None = None,
) -> DistributionBatch:
    """
    Discrete contour-distance distributions of many lines at once.

    The product over segments is accumulated in log space. Lines whose
    product vanishes on the whole support come back with valid=False.
    """
    segment_fg = np.atleast_2d(np.asarray(segment_fg, dtype=np.float64))
    support = np.asarray(support, dtype=np.float64)
    if coordinates is None:
        coordinates = segment_coordinates(segment_fg.shape[1])

    x = coordinates[:, None] - support[None, :]
    h_f = step_lookup(x, params, "foreground")
    h_b = 1.0 - h_f
    factors = h_f[None] * segment_fg[:, :, None] + h_b[None] * (1.0 - segment_fg)[:, :, None]
    with np.errstate(divide="ignore"):
        log_products = np.log(factors).sum(axis=1)

    peak = log_products.max(axis=1)
    valid = np.isfinite(peak)
    shifted = np.exp(log_products - np.where(valid, peak, 0.0)[:, None])
    shifted[~valid] = 0.0
    totals = shifted.sum(axis=1)
    probabilities = shifted / np.where(valid, totals, 1.0)[:, None]

    means = probabilities @ support
    variances = np.einsum("nk,nk->n", probabilities, (support[None, :] - means[:, None]) ** 2)
    variances = np.maximum(variances, VARIANCE_FLOOR)
    return DistributionBatch(
        support=support, probabilities=probabilities, means=means, variances=variances, valid=valid
    )


def posterior_distribution(
    line: CorrespondenceLine, params: StepFunctionParams, support: np.ndarray = DEFAULT_SUPPORT
) -> PosteriorDistribution:
    batch = posterior_distributions(
        line.segment_fg_posteriors[None, :], params, support, coordinates=line.segment_coordinates()
    )
    if not batch.valid[0]:
        logger.debug("posterior_distribution: every support point has zero probability")
        raise DegenerateDistributionError("degenerate distribution: all products are zero")
    return batch.distribution(0)


def posterior_term(p_f, r, d, params: StepFunctionParams):
    """Integrand h_f(r - d) p_f + h_b(r - d) p_b with the exact (untabulated) steps."""
    p_f = np.asarray(p_f, dtype=np.float64)
    x = np.asarray(r, dtype=np.float64) - d
    return smoothed_step(x, params, "foreground") * p_f + smoothed_step(x, params, "background") * (1.0 - p_f)


def dump_line_csv(line: CorrespondenceLine, distribution: PosteriorDistribution, path: pathlib.Path | str) -> pathlib.Path:
    """Write segment posteriors (kind=segment) and the distribution (kind=support) for plotting."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    segments = pd.DataFrame(
        {
            "kind": "segment",
            "coordinate": line.segment_coordinates(),
            "p_fg": line.segment_fg_posteriors,
            "p_bg": line.segment_bg_posteriors,
            "probability": np.nan,
        }
    )
    supports = pd.DataFrame(
        {
            "kind": "support",
            "coordinate": distribution.support,
            "p_fg": np.nan,
            "p_bg": np.nan,
            "probability": distribution.probabilities,
        }
    )
    pd.concat([segments, supports], ignore_index=True).to_csv(path, index=False)
    return path


#####################################
# Analytic Oracles
#####################################


def oracle_log_derivative(d, params: StepFunctionParams):
    """Closed-form derivative -2 atanh(2 α tanh(d / 2 s_h)) of the continuous log posterior."""
    if params.slope <= 0.0:
        raise OracleDomainError("log-derivative oracle needs a positive slope")
    argument = 2.0 * params.amplitude * np.tanh(np.asarray(d, dtype=np.float64) / (2.0 * params.slope))
    if np.any(np.abs(argument) >= 1.0):
        raise OracleDomainError("atanh argument reached 1; use a smaller distance or amplitude")
    value = -2.0 * np.arctanh(argument)
    return float(value) if value.ndim == 0 else value


def oracle_laplace_scale(amplitude: float) -> float:
    """Scale b = 1 / (2 atanh(2 α_h)) of the sharp-step posterior."""
    if not 0.0 < amplitude < 0.5:
        raise OracleDomainError(f"Laplace scale needs 0 < amplitude < 0.5, got {amplitude}")
    return float(1.0 / (2.0 * np.arctanh(2.0 * amplitude)))


def oracle_gaussian(d, mean: float, slope: float) -> np.ndarray:
    """Normal density with variance s_h (limit α_h = 0.5)."""
    d = np.asarray(d, dtype=np.float64)
    return np.exp(-((d - mean) ** 2) / (2.0 * slope)) / np.sqrt(2.0 * np.pi * slope)


def oracle_laplace(d, mean: float, scale_b: float) -> np.ndarray:
    """Laplace density with scale b (limit s_h = 0)."""
    d = np.asarray(d, dtype=np.float64)
    return np.exp(-np.abs(d - mean) / scale_b) / (2.0 * scale_b)


def _log_step(x: float, params: StepFunctionParams, which: Side) -> float:
    # log(0.5 ∓ α tanh(u)) written as a ratio of exponentials; finite for α = 0.5
    u = x / (2.0 * params.slope)
    if which == "background":
        u = -u
    with np.errstate(divide="ignore"):
        low = np.log(0.5 - params.amplitude)
    high = np.log(0.5 + params.amplitude)
    return float(np.logaddexp(low + u, high - u) - np.logaddexp(u, -u))


def continuous_log_posterior(d: float, params: StepFunctionParams, half_length: float = 50.0) -> float:
    """
    Log posterior of a contour at 0 on a continuous line [-L, L].

    Foreground fills r < 0 and background r > 0; both integrals are
    evaluated numerically.
    """
    if params.slope <= 0.0:
        raise OracleDomainError("continuous posterior oracle needs a positive slope")
    breakpoints = [d] if -half_length < d < half_length else None
    fg_part, _ = integrate.quad(
        lambda r: _log_step(r - d, params, "foreground"),
        -half_length,
        0.0,
        points=[p for p in (breakpoints or []) if p < 0.0] or None,
        limit=200,
        epsabs=1e-12,
        epsrel=1e-12,
    )
    bg_part, _ = integrate.quad(
        lambda r: _log_step(r - d, params, "background"),
        0.0,
        half_length,
        points=[p for p in (breakpoints or []) if p > 0.0] or None,
        limit=200,
        epsabs=1e-12,
        epsrel=1e-12,
    )
    return fg_part + bg_part


def oracle_extended_model(likelihood_fg, likelihood_bg, d: float, r, params: StepFunctionParams) -> float:
    """
    Three-model (foreground, background, noise) line probability.

    Priors p(m_f) = p(m_b) = α_h and p(m_n) = 1 - 2 α_h; the noise model has
    color likelihood (p(y|m_f) + p(y|m_b)) / 2 and line likelihood 1/2; the
    foreground/background line likelihoods are the steps with α = 0.5.
    Returns the product over all given pixels.
    """
    likelihood_fg = np.atleast_1d(np.asarray(likelihood_fg, dtype=np.float64))
    likelihood_bg = np.atleast_1d(np.asarray(likelihood_bg, dtype=np.float64))
    alpha = params.amplitude
    noise_prior = 1.0 - 2.0 * alpha
    likelihood_noise = 0.5 * (likelihood_fg + likelihood_bg)
    evidence = alpha * likelihood_fg + alpha * likelihood_bg + noise_prior * likelihood_noise
    empty = evidence <= 0.0
    safe = np.where(empty, 1.0, evidence)
    post_f = np.where(empty, alpha, alpha * likelihood_fg / safe)
    post_b = np.where(empty, alpha, alpha * likelihood_bg / safe)
    post_n = np.where(empty, noise_prior, noise_prior * likelihood_noise / safe)

    sharp = StepFunctionParams(amplitude=0.5, slope=params.slope)
    x = np.atleast_1d(np.asarray(r, dtype=np.float64)) - d
    terms = (
        smoothed_step(x, sharp, "foreground") * post_f
        + smoothed_step(x, sharp, "background") * post_b
        + 0.5 * post_n
    )
    return float(np.prod(terms))
