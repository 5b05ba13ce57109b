"""Readers and writers for the on-disk artifacts.

Rasters are binary Netpbm (P6 colour, P5 gray, maxval 255), audio is
16-bit mono PCM WAV, camera calibration is a ``key = value`` text file and
word templates are a small text matrix format::

    MELMAT <channels> <frames>
    <frames floats>          # one line per channel

Images are plain numpy arrays: ``(H, W, 3)`` uint8 for colour and
``(H, W)`` uint8 for gray.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "AudioSignal",
    "CameraRig",
    "FormatError",
    "TemplateLibrary",
    "read_calibration",
    "read_pgm",
    "read_ppm",
    "read_template",
    "read_template_library",
    "read_raw_samples",
    "read_wav",
    "write_calibration",
    "write_pgm",
    "write_ppm",
    "write_raw_samples",
    "write_template",
    "write_template_library",
]


class FormatError(ValueError):
    """Raised when an input file does not follow its expected layout."""


@dataclass(frozen=True)
class AudioSignal:
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and (samples.min() < -1.0 or samples.max() >= 1.0):
            raise ValueError("samples must lie in [-1, 1)")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class CameraRig:
    """Rectified stereo rig.

    ``focal_px`` is the focal length in pixels, ``baseline_mm`` the
    distance between the two optical centres. Distortion coefficients are
    carried along but never applied.
    """

    focal_px: float
    baseline_mm: float
    principal: tuple[float, float] = (160.0, 120.0)
    distortion: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.focal_px > 0:
            raise ValueError("focal length must be positive")
        if not self.baseline_mm > 0:
            raise ValueError("baseline must be positive")


@dataclass
class TemplateLibrary:
    """Ordered collection of ``(label, features)`` word prototypes."""

    entries: list[tuple[str, np.ndarray]] = field(default_factory=list)

    def __post_init__(self):
        entries = list(self.entries)
        self.entries = []
        for label, features in entries:
            self.add(label, features)

    def add(self, label: str, features: np.ndarray) -> None:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError("template features must be a channels x frames matrix")
        if label in self.labels:
            raise ValueError(f"duplicate template label {label!r}")
        if self.entries and features.shape[0] != self.channels:
            raise ValueError(
                f"template {label!r} has {features.shape[0]} channels, "
                f"library has {self.channels}"
            )
        self.entries.append((label, features))

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]

    @property
    def channels(self) -> int | None:
        return self.entries[0][1].shape[0] if self.entries else None

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


# -- Netpbm -----------------------------------------------------------------

def _read_netpbm(path, magic: bytes, channels: int) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:2] != magic:
        raise FormatError(
            f"{path}: wrong magic {data[:2]!r} at byte 0, expected {magic!r}"
        )
    # header: magic, width, height, maxval separated by whitespace, comments allowed
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: malformed header at byte {start}")
        fields.append((int(data[start:pos]), start))
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError(f"{path}: malformed header at byte {pos}")
    pos += 1  # single whitespace byte before the raster
    (width, w_at), (height, h_at), (maxval, m_at) = fields
    if width < 1:
        raise FormatError(f"{path}: width must be >= 1 (byte {w_at})")
    if height < 1:
        raise FormatError(f"{path}: height must be >= 1 (byte {h_at})")
    if maxval != 255:
        raise FormatError(f"{path}: maxval {maxval} at byte {m_at}, only 255 supported")
    expected = width * height * channels
    actual = len(data) - pos
    if actual < expected:
        raise FormatError(
            f"{path}: truncated payload at byte {pos}: "
            f"expected {expected} bytes, got {actual}"
        )
    if actual > expected:
        raise FormatError(
            f"{path}: {actual - expected} trailing bytes after payload at byte {pos + expected}"
        )
    raster = np.frombuffer(data, dtype=np.uint8, count=expected, offset=pos)
    shape = (height, width, channels) if channels > 1 else (height, width)
    return raster.reshape(shape).copy()


def _write_netpbm(path, image: np.ndarray, magic: bytes) -> None:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        if image.size and (image.min() < 0 or image.max() > 255):
            raise ValueError("pixel values must lie in [0, 255]")
        if not np.array_equal(image, np.round(image)):
            raise ValueError("pixel values must be integers")
        image = image.astype(np.uint8)
    height, width = image.shape[:2]
    header = b"%s\n%d %d\n255\n" % (magic, width, height)
    Path(path).write_bytes(header + np.ascontiguousarray(image).tobytes())


def read_ppm(path) -> np.ndarray:
    """Read a binary P6 file into an ``(H, W, 3)`` uint8 array."""
    return _read_netpbm(path, b"P6", 3)


def write_ppm(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("colour image must have shape (H, W, 3)")
    _write_netpbm(path, image, b"P6")


def read_pgm(path) -> np.ndarray:
    """Read a binary P5 file into an ``(H, W)`` uint8 array."""
    return _read_netpbm(path, b"P5", 1)


def write_pgm(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("gray image must have shape (H, W)")
    _write_netpbm(path, image, b"P5")


# -- audio ------------------------------------------------------------------

def read_wav(path) -> AudioSignal:
    """Decode a 16-bit mono PCM WAV file; samples are scaled by 1/32768."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise FormatError(f"{path}: fmt chunk too short at byte {pos}")
            fmt = struct.unpack_from("<HHIIHH", body)
        elif chunk_id == b"data":
            if len(body) < size:
                raise FormatError(
                    f"{path}: truncated data chunk: expected {size} bytes, got {len(body)}"
                )
            payload = body
        pos += 8 + size + (size & 1)
    if fmt is None:
        raise FormatError(f"{path}: missing fmt chunk")
    if payload is None:
        raise FormatError(f"{path}: missing data chunk")
    format_code, n_channels, sample_rate, _, _, bits = fmt
    if format_code != 1:
        raise FormatError(f"{path}: PCM required, format code is {format_code}")
    if n_channels != 1:
        raise FormatError(f"{path}: mono required, file has {n_channels} channels")
    if bits != 16:
        raise FormatError(f"{path}: 16-bit samples required, file has {bits}")
    if len(payload) % 2:
        raise FormatError(f"{path}: odd data chunk length {len(payload)}")
    raw = np.frombuffer(payload, dtype="<i2")
    return AudioSignal(sample_rate, raw.astype(np.float64) / 32768.0)


def read_raw_samples(path, sample_rate: int = 8000) -> AudioSignal:
    """Read a text file holding one sample per line."""
    values = np.loadtxt(path, dtype=np.float64, ndmin=1)
    return AudioSignal(sample_rate, values)


def write_raw_samples(path, signal: AudioSignal) -> None:
    with open(path, "w") as fh:
        for value in signal.samples:
            fh.write(f"{float(value)!r}\n")


# -- calibration ------------------------------------------------------------

_REQUIRED_CALIBRATION = ("focal_px", "baseline_mm", "cx", "cy")
_OPTIONAL_CALIBRATION = ("k1", "k2", "p1", "p2")


def read_calibration(path) -> CameraRig:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                values[key] = float(value)
            except ValueError:
                raise FormatError(
                    f"{path}:{lineno}: value for {key!r} is not numeric: {value!r}"
                ) from None
    missing = [key for key in _REQUIRED_CALIBRATION if key not in values]
    if missing:
        raise FormatError(f"{path}: missing required key(s) {', '.join(missing)}")
    try:
        return CameraRig(
            focal_px=values["focal_px"],
            baseline_mm=values["baseline_mm"],
            principal=(values["cx"], values["cy"]),
            distortion=tuple(values.get(key, 0.0) for key in _OPTIONAL_CALIBRATION),
        )
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_calibration(path, rig: CameraRig) -> None:
    lines = [
        f"focal_px = {rig.focal_px!r}",
        f"baseline_mm = {rig.baseline_mm!r}",
        f"cx = {rig.principal[0]!r}",
        f"cy = {rig.principal[1]!r}",
    ]
    lines += [f"{k} = {v!r}" for k, v in zip(_OPTIONAL_CALIBRATION, rig.distortion)]
    Path(path).write_text("\n".join(lines) + "\n")


# -- templates --------------------------------------------------------------

def read_template(path) -> np.ndarray:
    with open(path) as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise FormatError(f"{path}: empty template file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "MELMAT":
        raise FormatError(f"{path}: header must be 'MELMAT <channels> <frames>'")
    try:
        channels, frames = int(header[1]), int(header[2])
    except ValueError:
        raise FormatError(f"{path}: non-integer dimensions in header") from None
    body = lines[1:]
    if len(body) != channels:
        raise FormatError(
            f"{path}: header declares {channels} channels, body has {len(body)} rows"
        )
    matrix = np.empty((channels, frames), dtype=np.float64)
    for row, line in enumerate(body):
        values = line.split()
        if len(values) != frames:
            raise FormatError(
                f"{path}: row {row} has {len(values)} values, header declares {frames} frames"
            )
        matrix[row] = [float(v) for v in values]
    return matrix


def write_template(path, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError("template must be a channels x frames matrix")
    lines = [f"MELMAT {matrix.shape[0]} {matrix.shape[1]}"]
    # repr() gives the shortest string that round-trips exactly
    lines += [" ".join(repr(float(v)) for v in row) for row in matrix]
    Path(path).write_text("\n".join(lines) + "\n")


TEMPLATE_SUFFIX = ".mel"
LIBRARY_INDEX = "labels.txt"


def write_template_library(directory, library: TemplateLibrary) -> None:
    """Write one ``<label>.mel`` per entry plus a ``labels.txt`` order file."""
    os.makedirs(directory, exist_ok=True)
    for label, features in library:
        write_template(Path(directory) / f"{label}{TEMPLATE_SUFFIX}", features)
    (Path(directory) / LIBRARY_INDEX).write_text("\n".join(library.labels) + "\n")


def read_template_library(directory) -> TemplateLibrary:
    """Load a template directory.

    Entry order follows ``labels.txt`` when present, otherwise the sorted
    file names; order matters because classification ties go to the
    earlier entry.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FormatError(f"{directory}: template directory does not exist")
    index = directory / LIBRARY_INDEX
    if index.exists():
        labels = [line.strip() for line in index.read_text().splitlines() if line.strip()]
    else:
        labels = sorted(p.stem for p in directory.glob(f"*{TEMPLATE_SUFFIX}"))
    library = TemplateLibrary()
    for label in labels:
        library.add(label, read_template(directory / f"{label}{TEMPLATE_SUFFIX}"))
    return library
