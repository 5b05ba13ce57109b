"""Appearance-based obstacle detection from a single colour frame.

Pixels whose hue or value falls into a sparsely populated bin of the
reference-area histograms are labelled obstacles. Pipeline::

    gaussian5x5 -> rgb_to_hsv -> build_reference_histograms
                -> classify_pixels -> median_filter(9)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "BIN_EDGES",
    "HUE_INVALID",
    "DetectConfig",
    "HistogramPair",
    "RegionSpec",
    "bin_index",
    "build_reference_histograms",
    "classify_pixels",
    "detect_obstacles",
    "gaussian5x5",
    "median_filter",
    "rgb_to_hsv",
]

HUE_INVALID = 2.0
BIN_EDGES = np.array([0.0, 0.2001, 0.4001, 0.6001, 0.8001])
MIN_VALUE = 0.05
MIN_SATURATION = 0.1

_BINOMIAL = np.array([1, 4, 6, 4, 1], dtype=np.int64)


def gaussian5x5(image: np.ndarray) -> np.ndarray:
    """Blur each channel with the 5x5 binomial kernel.

    Borders replicate the edge pixel. Integer arithmetic throughout; the
    result is rounded half up.
    """
    image = np.asarray(image)
    if image.ndim not in (2, 3) or image.shape[0] < 5 or image.shape[1] < 5:
        raise ValueError(f"image must be at least 5x5, got shape {image.shape}")
    pad = [(2, 2), (2, 2)] + [(0, 0)] * (image.ndim - 2)
    padded = np.pad(image.astype(np.int64), pad, mode="edge")
    h, w = image.shape[:2]
    rows = sum(k * padded[i:i + h] for i, k in enumerate(_BINOMIAL))
    total = sum(k * rows[:, i:i + w] for i, k in enumerate(_BINOMIAL))
    return ((total + 128) // 256).astype(np.uint8)


def rgb_to_hsv(image: np.ndarray) -> np.ndarray:
    """Hexcone HSV with every component in [0, 1].

    Hue is replaced by ``HUE_INVALID`` where value <= 0.05 or saturation
    <= 0.1; gray pixels therefore always carry the sentinel.
    """
    rgb = np.asarray(image, dtype=np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    vmax = rgb.max(axis=-1)
    vmin = rgb.min(axis=-1)
    delta = vmax - vmin
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(vmax > 0, delta / vmax, 0.0)
        safe = np.where(delta > 0, delta, 1.0)
        h = np.select(
            [vmax == r, vmax == g],
            [(g - b) / safe, 2.0 + (b - r) / safe],
            4.0 + (r - g) / safe,
        )
    h = (h / 6.0) % 1.0
    h = np.where(delta > 0, h, 0.0)
    invalid = (vmax <= MIN_VALUE) | (s <= MIN_SATURATION)
    h = np.where(invalid, HUE_INVALID, h)
    return np.stack([h, s, vmax], axis=-1)


def bin_index(x):
    """Histogram bin (1..5) of a hue or value in [0, 1].

    Accepts scalars or arrays. 1.0 lands in the top bin.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
        raise ValueError("bin_index expects values in [0, 1]")
    idx = np.searchsorted(BIN_EDGES, x, side="right")
    return int(idx) if idx.ndim == 0 else idx


@dataclass(frozen=True)
class RegionSpec:
    """Reference area of the frame assumed to show ground.

    ``rectangle`` covers rows ``row0..row1`` and columns ``col0..col1``
    (inclusive). ``trapezoid`` spans ``col0..col1`` at ``row0`` and widens
    by ``widen`` columns per side on every row below, down to ``row1``.
    """

    kind: str = "rectangle"
    row0: int = 180
    row1: int = 239
    col0: int = 20
    col1: int = 299
    widen: int = 1

    def __post_init__(self):
        if self.kind not in ("rectangle", "trapezoid"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.row1 < self.row0 or self.col1 < self.col0:
            raise ValueError("region is empty")

    @classmethod
    def parse(cls, text: str) -> "RegionSpec":
        """Parse ``rect:r0,r1,c0,c1`` or ``trap:r0,r1,c0,c1[,widen]``."""
        kind, _, rest = text.partition(":")
        kinds = {"rect": "rectangle", "rectangle": "rectangle",
                 "trap": "trapezoid", "trapezoid": "trapezoid"}
        if kind not in kinds or not rest:
            raise ValueError(f"cannot parse region {text!r}")
        numbers = [int(v) for v in rest.split(",")]
        if len(numbers) not in (4, 5):
            raise ValueError(f"cannot parse region {text!r}")
        return cls(kinds[kind], *numbers)

    def __str__(self):
        prefix = "rect" if self.kind == "rectangle" else "trap"
        numbers = [self.row0, self.row1, self.col0, self.col1]
        if self.kind == "trapezoid":
            numbers.append(self.widen)
        return prefix + ":" + ",".join(map(str, numbers))

    def mask(self, height: int, width: int) -> np.ndarray:
        grow = self.widen * (self.row1 - self.row0) if self.kind == "trapezoid" else 0
        if (self.row0 < 0 or self.row1 >= height
                or self.col0 - grow < 0 or self.col1 + grow >= width):
            raise ValueError(f"region {self} outside {width}x{height} image")
        out = np.zeros((height, width), dtype=bool)
        for k, row in enumerate(range(self.row0, self.row1 + 1)):
            grow = self.widen * k if self.kind == "trapezoid" else 0
            out[row, self.col0 - grow:self.col1 + grow + 1] = True
        return out


@dataclass(frozen=True)
class HistogramPair:
    hue_bins: np.ndarray
    val_bins: np.ndarray
    hue_threshold: float
    val_threshold: float


def _smooth(counts: np.ndarray) -> np.ndarray:
    # centred 3-tap mean; edge bins average the neighbours they have
    padded = np.concatenate([[0.0], counts, [0.0]])
    sums = padded[:-2] + padded[1:-1] + padded[2:]
    taps = np.full(counts.size, 3.0)
    taps[0] = taps[-1] = 2.0
    return sums / taps


def build_reference_histograms(hsv: np.ndarray, region: RegionSpec,
                               threshold_divisor: float = 50.0) -> HistogramPair:
    """Smoothed hue and value histograms of the reference area.

    The value histogram counts every region pixel, the hue histogram only
    those with a valid hue. Each threshold is its own histogram's maximum
    divided by ``threshold_divisor``.
    """
    inside = region.mask(*hsv.shape[:2])
    if not inside.any():
        raise ValueError("reference region is empty")
    hue = hsv[..., 0][inside]
    val = hsv[..., 2][inside]
    hue = hue[hue != HUE_INVALID]
    hue_counts = np.bincount(bin_index(hue) - 1, minlength=5).astype(np.float64)
    val_counts = np.bincount(bin_index(val) - 1, minlength=5).astype(np.float64)
    hue_bins = _smooth(hue_counts)
    val_bins = _smooth(val_counts)
    return HistogramPair(
        hue_bins=hue_bins,
        val_bins=val_bins,
        hue_threshold=hue_bins.max() / threshold_divisor,
        val_threshold=val_bins.max() / threshold_divisor,
    )


def classify_pixels(hsv: np.ndarray, hist: HistogramPair) -> np.ndarray:
    """Label each pixel 1 (obstacle) or 0 (ground).

    A pixel is an obstacle when its value bin count is below the value
    threshold, or when its hue is valid and its hue bin count is below the
    hue threshold. Comparisons are strict.
    """
    hue = hsv[..., 0]
    val = hsv[..., 2]
    valid = hue != HUE_INVALID
    val_count = hist.val_bins[bin_index(val) - 1]
    hue_count = hist.hue_bins[bin_index(np.where(valid, hue, 0.0)) - 1]
    obstacle = (val_count < hist.val_threshold) | (valid & (hue_count < hist.hue_threshold))
    return obstacle.astype(np.uint8)


def median_filter(mask: np.ndarray, k: int = 9) -> np.ndarray:
    """Majority vote over a k x k window with zero padding (k odd)."""
    if k < 1 or k % 2 == 0:
        raise ValueError(f"median window must be odd and positive, got {k}")
    if k == 1:
        return np.asarray(mask, dtype=np.uint8).copy()
    half = k // 2
    padded = np.pad(np.asarray(mask, dtype=np.int32), half)
    counts = sliding_window_view(padded, k, axis=0).sum(axis=-1)
    counts = sliding_window_view(counts, k, axis=1).sum(axis=-1)
    return (2 * counts > k * k).astype(np.uint8)


@dataclass(frozen=True)
class DetectConfig:
    median_window: int = 9
    threshold_divisor: float = 50.0
    region: RegionSpec = field(default_factory=RegionSpec)


def detect_obstacles(image: np.ndarray, region: RegionSpec | None = None,
                     config: DetectConfig | None = None) -> np.ndarray:
    """Obstacle mask (uint8, 1 = obstacle) for an RGB frame."""
    config = config or DetectConfig()
    region = region or config.region
    hsv = rgb_to_hsv(gaussian5x5(image))
    hist = build_reference_histograms(hsv, region, config.threshold_divisor)
    return median_filter(classify_pixels(hsv, hist), config.median_window)


def mask_to_pgm(mask: np.ndarray) -> np.ndarray:
    """Gray raster for a mask: 0 -> 0, 1 -> 255."""
    return (np.asarray(mask, dtype=np.uint8) * 255).astype(np.uint8)
