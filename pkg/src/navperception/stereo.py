"""Window-based stereo matching and triangulation.

The left image is the base; a left-image pixel at column ``j`` is matched
against the right image at column ``j - d``. Depth follows ``Z = f T / d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .media_io import CameraRig

__all__ = [
    "NO_OBSTACLE_MM",
    "MatchParams",
    "NavRegion",
    "compute_disparity",
    "disparity_to_depth",
    "disparity_to_pgm",
    "nearest_obstacle_distance",
    "ncc_score",
    "project_point",
    "rgb_to_gray",
    "sad_score",
]

NO_OBSTACLE_MM = 5000.0


def project_point(rig: CameraRig, point) -> tuple[float, float]:
    """Pinhole projection of a camera-frame point (mm) to pixel coordinates."""
    X, Y, Z = (float(v) for v in point)
    if Z <= 0:
        raise ValueError(f"point must lie in front of the camera, got Z={Z}")
    x0, y0 = rig.principal
    return rig.focal_px * X / Z + x0, rig.focal_px * Y / Z + y0


def rgb_to_gray(image: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma, rounded to uint8."""
    rgb = np.asarray(image, dtype=np.float64)
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.floor(gray + 0.5), 0, 255).astype(np.uint8)


def _windows(base, cand, center, d, half):
    i, j = center
    h, w = base.shape
    if (i - half < 0 or i + half >= h or j - half < 0 or j + half >= w
            or j - d - half < 0 or j - d + half >= w):
        raise IndexError(f"window at {(i, j)} with d={d} leaves the image")
    a = np.asarray(base[i - half:i + half + 1, j - half:j + half + 1], dtype=np.float64)
    b = np.asarray(cand[i - half:i + half + 1, j - d - half:j - d + half + 1],
                   dtype=np.float64)
    return a, b


def ncc_score(base, cand, center, d: int, window_half: int = 4) -> float:
    """Normalised cross correlation of the base window at ``center`` and the
    candidate window shifted ``d`` columns to the left. Zero windows score 0."""
    a, b = _windows(base, cand, center, d, window_half)
    denom = np.sqrt(np.sum(a * a) * np.sum(b * b))
    if denom == 0:
        return 0.0
    return float(np.sum(a * b) / denom)


def sad_score(base, cand, center, d: int, window_half: int = 4) -> float:
    a, b = _windows(base, cand, center, d, window_half)
    return float(np.sum(np.abs(a - b)))


@dataclass(frozen=True)
class MatchParams:
    window_half: int = 4
    d_min: int = 0
    d_max: int = 25
    metric: str = "ncc"
    median: int = 5

    def __post_init__(self):
        if self.window_half < 1:
            raise ValueError("window_half must be >= 1")
        if not 0 <= self.d_min <= self.d_max:
            raise ValueError("need 0 <= d_min <= d_max")
        if self.metric not in ("ncc", "sad"):
            raise ValueError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True)
class NavRegion:
    """Trapezoid in front of the vehicle where disparity is evaluated.

    Row ``row0 + k`` spans columns ``col0 - k*widen .. col1 + k*widen``.
    """

    row0: int = 120
    row1: int = 210
    col0: int = 100
    col1: int = 200
    widen: int = 1

    def mask(self, height: int, width: int, window_half: int = 0) -> np.ndarray:
        out = np.zeros((height, width), dtype=bool)
        lo_row = max(self.row0, window_half)
        hi_row = min(self.row1, height - 1 - window_half)
        for row in range(lo_row, hi_row + 1):
            k = row - self.row0
            lo = max(self.col0 - k * self.widen, window_half)
            hi = min(self.col1 + k * self.widen, width - 1 - window_half)
            if lo <= hi:
                out[row, lo:hi + 1] = True
        return out


def _box_sum(x: np.ndarray, half: int) -> np.ndarray:
    # sums over every full (2h+1)^2 window; output indexed by window centre
    # offset by `half` in both axes
    k = 2 * half + 1
    rows = sliding_window_view(x, k, axis=0).sum(axis=-1)
    return sliding_window_view(rows, k, axis=1).sum(axis=-1)


def _cost_volume(left, right, params):
    """Score of every pixel for every disparity; -inf/+inf where not admissible."""
    height, width = left.shape
    half = params.window_half
    ncc = params.metric == "ncc"
    fill = -np.inf if ncc else np.inf
    n_d = params.d_max - params.d_min + 1
    volume = np.full((n_d, height, width), fill)
    if ncc:
        left_energy = _box_sum(left * left, half)
        right_energy = _box_sum(right * right, half)
    for k, d in enumerate(range(params.d_min, params.d_max + 1)):
        if width - d < 2 * half + 1:
            continue
        base = left[:, d:]
        cand = right[:, :width - d]
        if ncc:
            num = _box_sum(base * cand, half)
            denom = np.sqrt(left_energy[:, d:] * right_energy[:, :width - d - 2 * half])
            score = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
        else:
            score = _box_sum(np.abs(base - cand), half)
        # centre columns d+half .. width-1-half in left coordinates
        volume[k, half:height - half, d + half:width - half] = score
    return volume


def compute_disparity(left: np.ndarray, right: np.ndarray, mask: np.ndarray,
                      region: NavRegion | None = None,
                      params: MatchParams | None = None) -> np.ndarray:
    """Integer disparity map over the obstacle pixels of the navigation region.

    ``left`` and ``right`` are rectified gray images (integer or float).
    Pixels outside the region, off the mask, or without a full matching
    window stay 0. Equal scores resolve to the smallest disparity.
    """
    region = region or NavRegion()
    params = params or MatchParams()
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape or left.ndim != 2:
        raise ValueError(f"image shapes differ or are not 2-D: {left.shape} vs {right.shape}")
    if np.shape(mask) != left.shape:
        raise ValueError(f"mask shape {np.shape(mask)} does not match images {left.shape}")
    height, width = left.shape
    half = params.window_half

    evaluate = region.mask(height, width, half) & (np.asarray(mask) != 0)
    # need at least d_min admissible: j - d_min - half >= 0
    cols = np.arange(width)[None, :]
    evaluate &= cols - half >= params.d_min
    disparity = np.zeros((height, width), dtype=np.int64)
    if not evaluate.any():
        return disparity

    volume = _cost_volume(left, right, params)
    if params.metric == "ncc":
        best = np.argmax(volume, axis=0)
    else:
        best = np.argmin(volume, axis=0)
    disparity[evaluate] = best[evaluate] + params.d_min
    if params.median > 1:
        disparity = ndimage.median_filter(disparity, size=params.median,
                                          mode="constant", cval=0)
    disparity[~evaluate] = 0
    return disparity


def disparity_to_depth(d, rig: CameraRig):
    """Depth in mm for a disparity in pixels."""
    d_arr = np.asarray(d, dtype=np.float64)
    if np.any(d_arr <= 0):
        raise ValueError("disparity 0 means infinite depth")
    depth = rig.focal_px * rig.baseline_mm / d_arr
    return float(depth) if depth.ndim == 0 else depth


def nearest_obstacle_distance(disparity: np.ndarray, rig: CameraRig,
                              support_threshold: float | None = None,
                              d_max: int = 25,
                              no_obstacle: float = NO_OBSTACLE_MM) -> float:
    """Depth of the largest disparity supported by more than
    ``support_threshold`` pixels (default ``3 * d_max``).

    Returns ``no_obstacle`` when no disparity has enough support.
    """
    if support_threshold is None:
        support_threshold = 3 * d_max
    values = np.asarray(disparity).ravel()
    values = values[(values >= 1) & (values <= d_max)].astype(np.int64)
    counts = np.bincount(values, minlength=d_max + 1)
    for d in range(d_max, 0, -1):
        if counts[d] > support_threshold:
            return disparity_to_depth(d, rig)
    return float(no_obstacle)


def disparity_to_pgm(disparity: np.ndarray, d_max: int = 25) -> np.ndarray:
    """Scale a disparity map to 0..255 for display (brighter is nearer)."""
    scaled = np.asarray(disparity, dtype=np.float64) * 255.0 / d_max
    return np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)
