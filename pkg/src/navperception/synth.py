"""Synthetic inputs with known ground truth.

``render_stereo_scene`` builds a rectified stereo pair from fronto-parallel
textured patches placed at known depths: every patch is shifted left in the
right image by ``round(f T / Z)`` columns, the floor stays put. Truth is
exact by construction.

``synth_word`` makes a deterministic multi-tone "utterance" for each word
of the command vocabulary: three gliding formant-like tones under a
strictly positive amplitude envelope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .media_io import AudioSignal, CameraRig
from .speech_features import FrontEndConfig
from .stereo import project_point

__all__ = [
    "VOCABULARY",
    "Obstacle",
    "SceneSpec",
    "StereoScene",
    "render_stereo_scene",
    "synth_word",
]

VOCABULARY = ("front", "back", "right", "left", "reverse", "stop")

# (start Hz, end Hz) per tone
_FORMANTS = {
    "front": ((300, 700), (1200, 1800), (2500, 2500)),
    "back": ((700, 400), (1100, 900), (2400, 2400)),
    "right": ((500, 500), (1500, 2200), (3000, 3000)),
    "left": ((400, 600), (2000, 1400), (2700, 2700)),
    "reverse": ((350, 750), (900, 1600), (3200, 3200)),
    "stop": ((600, 300), (1700, 1700), (2300, 2800)),
}
_TONE_LEVELS = (1.0, 0.6, 0.3)
WORD_SECONDS = 1.5


def synth_word(label: str, seed: int = 0,
               config: FrontEndConfig = FrontEndConfig()) -> AudioSignal:
    """1.5 s synthetic utterance of ``label``; the seed sets tone phases."""
    if label not in _FORMANTS:
        raise ValueError(f"unknown word {label!r}; vocabulary is {', '.join(VOCABULARY)}")
    fs = config.sample_rate
    n = int(round(WORD_SECONDS * fs))
    t = np.arange(n) / fs
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0, 2 * np.pi, size=3)
    signal = np.zeros(n)
    for (f0, f1), level, phase in zip(_FORMANTS[label], _TONE_LEVELS, phases):
        freq = f0 + (f1 - f0) * t / WORD_SECONDS
        signal += level * np.sin(2 * np.pi * np.cumsum(freq) / fs + phase)
    envelope = 0.3 + 0.7 * np.sin(np.pi * t / WORD_SECONDS) ** 2
    signal *= 0.45 * envelope  # peak below 0.86
    return AudioSignal(fs, signal)


@dataclass(frozen=True)
class Obstacle:
    """Fronto-parallel patch; ``top``/``left`` are left-image pixel coordinates."""

    color: tuple[int, int, int]
    top: int
    left: int
    height: int
    width: int
    depth_mm: float
    texture: float = 0.15

    @classmethod
    def from_metric(cls, rig: CameraRig, color, x_mm: float, y_mm: float,
                    width_mm: float, height_mm: float, depth_mm: float,
                    texture: float = 0.15) -> "Obstacle":
        """Patch whose top-left corner sits at camera-frame ``(x_mm, y_mm)``."""
        x0, y0 = project_point(rig, (x_mm, y_mm, depth_mm))
        x1, y1 = project_point(rig, (x_mm + width_mm, y_mm + height_mm, depth_mm))
        top, left = int(round(y0)), int(round(x0))
        return cls(tuple(color), top, left, max(1, int(round(y1)) - top),
                   max(1, int(round(x1)) - left), depth_mm, texture)


@dataclass(frozen=True)
class SceneSpec:
    rig: CameraRig
    width: int = 320
    height: int = 240
    floor_color: tuple[int, int, int] = (60, 60, 60)
    floor_texture: float = 0.1
    obstacles: tuple[Obstacle, ...] = ()
    seed: int = 0
    d_max: int = 25

    def disparity_of(self, depth_mm: float) -> int:
        if depth_mm <= 0:
            raise ValueError("obstacle depth must be positive")
        return int(round(self.rig.focal_px * self.rig.baseline_mm / depth_mm))


@dataclass(frozen=True)
class StereoScene:
    left: np.ndarray
    right: np.ndarray
    depth: np.ndarray       # mm, inf on the floor
    disparity: np.ndarray   # pixels, 0 on the floor

    @property
    def obstacle_mask(self) -> np.ndarray:
        return np.isfinite(self.depth).astype(np.uint8)


def _shade(color, texture_amp, noise):
    base = np.asarray(color, dtype=np.float64)
    scale = 1.0 + texture_amp * noise
    return np.clip(np.floor(base * scale[..., None] + 0.5), 0, 255).astype(np.uint8)


def render_stereo_scene(spec: SceneSpec) -> StereoScene:
    rng = np.random.default_rng(spec.seed)
    h, w = spec.height, spec.width
    floor = _shade(spec.floor_color, spec.floor_texture, rng.uniform(-1, 1, (h, w)))
    left = floor.copy()
    right = floor.copy()
    depth = np.full((h, w), np.inf)
    disparity = np.zeros((h, w), dtype=np.int64)

    # far to near so nearer patches overwrite
    for ob in sorted(spec.obstacles, key=lambda o: -o.depth_mm):
        d = spec.disparity_of(ob.depth_mm)
        if d > spec.d_max:
            raise ValueError(
                f"obstacle at {ob.depth_mm} mm has disparity {d} > d_max {spec.d_max}"
            )
        rows = slice(max(ob.top, 0), min(ob.top + ob.height, h))
        c0, c1 = max(ob.left, 0), min(ob.left + ob.width, w)
        if rows.start >= rows.stop or c0 >= c1:
            raise ValueError(f"obstacle {ob} lies outside the image")
        patch = _shade(ob.color, ob.texture,
                       rng.uniform(-1, 1, (rows.stop - rows.start, c1 - c0)))
        left[rows, c0:c1] = patch
        depth[rows, c0:c1] = ob.depth_mm
        disparity[rows, c0:c1] = d
        r0 = c0 - d
        keep = slice(max(0, -r0), c1 - c0)
        right[rows, max(r0, 0):c1 - d] = patch[:, keep]
    return StereoScene(left, right, depth, disparity)
