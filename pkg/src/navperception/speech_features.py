"""Acoustic front end: framing, power spectra, mel filterbank, cepstra.

The recogniser's default features are log mel energies normalised by the
frame energy (``mel_spectrogram``); MFCCs are available through ``mfcc``
and ``FrontEndConfig(features="mfcc")``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .media_io import AudioSignal

__all__ = [
    "FrontEndConfig",
    "PowerSpectrumFrames",
    "cepstral_smooth",
    "cepstrum",
    "cosine_cepstrum",
    "extract_features",
    "frame_count",
    "frame_energy",
    "frame_power_spectrum",
    "freq_of_mel",
    "hamming",
    "mel_energies",
    "mel_filter_matrix",
    "mel_of_freq",
    "mel_spectrogram",
    "mfcc",
    "pre_emphasis",
]


@dataclass(frozen=True)
class FrontEndConfig:
    sample_rate: int = 8000
    fft_len: int = 256
    frame_shift: int = 80
    mel_channels: int = 22
    log_floor: float = 1e-4
    preemphasis: bool = False
    preemphasis_coeff: float = 0.97
    mfcc_count: int = 13
    features: str = "logmel"

    def __post_init__(self):
        n = self.fft_len
        if n < 2 or n & (n - 1):
            raise ValueError(f"fft_len must be a power of two, got {n}")
        if self.frame_shift < 1:
            raise ValueError("frame_shift must be >= 1")
        if self.mel_channels < 2:
            raise ValueError("need at least 2 mel channels")
        if not self.log_floor > 0:
            raise ValueError("log_floor must be positive")
        if not 1 <= self.mfcc_count <= self.mel_channels:
            raise ValueError("mfcc_count must be in 1..mel_channels")
        if self.features not in ("logmel", "mfcc"):
            raise ValueError(f"unknown feature type {self.features!r}")


@dataclass(frozen=True)
class PowerSpectrumFrames:
    power: np.ndarray   # frames x N/2
    energy: np.ndarray  # frames


def _samples(signal) -> np.ndarray:
    if isinstance(signal, AudioSignal):
        return signal.samples
    return np.asarray(signal, dtype=np.float64)


def _check_rate(signal, config):
    if isinstance(signal, AudioSignal) and signal.sample_rate != config.sample_rate:
        raise ValueError(
            f"signal sampled at {signal.sample_rate} Hz, front end configured "
            f"for {config.sample_rate} Hz"
        )


def pre_emphasis(signal, coeff: float = 0.97) -> np.ndarray:
    s = _samples(signal)
    out = s.copy()
    out[1:] = s[1:] - coeff * s[:-1]
    return out


def hamming(n: int) -> np.ndarray:
    return 0.54 - 0.46 * np.cos(2 * np.pi * np.arange(n) / (n - 1))


def frame_count(length: int, fft_len: int, shift: int) -> int:
    if length < fft_len:
        return 0
    return (length - fft_len) // shift + 1


def frame_energy(frame) -> float:
    frame = np.asarray(frame, dtype=np.float64)
    return float(np.sum(frame * frame))


def frame_power_spectrum(signal, config: FrontEndConfig = FrontEndConfig()
                         ) -> PowerSpectrumFrames:
    """Hamming-windowed short-term power spectra, lower N/2 bins per frame.

    The per-frame energy is the row sum of the power spectrum.
    """
    _check_rate(signal, config)
    s = _samples(signal)
    if config.preemphasis:
        s = pre_emphasis(s, config.preemphasis_coeff)
    n = config.fft_len
    count = frame_count(s.size, n, config.frame_shift)
    if count == 0:
        raise ValueError(f"signal of {s.size} samples is shorter than one frame ({n})")
    starts = np.arange(count) * config.frame_shift
    frames = s[starts[:, None] + np.arange(n)[None, :]] * hamming(n)
    spectrum = np.fft.fft(frames, axis=1)[:, :n // 2]
    power = spectrum.real ** 2 + spectrum.imag ** 2
    return PowerSpectrumFrames(power=power, energy=power.sum(axis=1))


def mel_of_freq(f):
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    m = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(m) if m.ndim == 0 else m


def freq_of_mel(m):
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise ValueError("mel value must be non-negative")
    f = 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    return float(f) if f.ndim == 0 else f


def mel_filter_matrix(config: FrontEndConfig = FrontEndConfig(),
                      normalize: bool = True) -> np.ndarray:
    """K x N/2 matrix of triangular filters equally spaced on the mel scale.

    Filter ``c`` peaks at the DFT index of its centre frequency and ramps
    down to the neighbouring centres (index 1 below the first, N/2 above
    the last). Indices are 1-based; column ``i - 1`` holds index ``i``.
    Rows are normalised to unit sum unless ``normalize`` is false.
    """
    k = config.mel_channels
    n_max = config.fft_len // 2
    df = config.sample_rate / config.fft_len
    mel_step = mel_of_freq(config.sample_rate / 2) / (k + 1)
    centres_hz = freq_of_mel(np.arange(1, k + 1) * mel_step)
    centre = np.floor(centres_hz / df + 0.5).astype(int)
    start = np.concatenate([[1], centre[:-1]])
    stop = np.concatenate([centre[1:], [n_max]])
    if np.any(centre <= start) or np.any(stop <= centre) or centre[-1] > n_max:
        raise ValueError(
            f"{k} mel channels do not fit in {n_max} DFT bins: adjacent centres collapse"
        )
    weights = np.zeros((k, n_max))
    for c in range(k):
        rise = np.arange(start[c], centre[c] + 1)
        weights[c, rise - 1] = (rise - start[c]) / (centre[c] - start[c])
        fall = np.arange(centre[c], stop[c] + 1)
        weights[c, fall - 1] = 1.0 - (fall - centre[c]) / (stop[c] - centre[c])
    if normalize:
        weights /= weights.sum(axis=1, keepdims=True)
    return weights


def mel_energies(signal, config: FrontEndConfig = FrontEndConfig()) -> np.ndarray:
    """Mel-filtered power divided by frame energy (channels x frames), before the log.

    Frame energy is floored at ``config.log_floor`` so silent frames give 0.
    """
    spec = frame_power_spectrum(signal, config)
    mel = mel_filter_matrix(config) @ spec.power.T
    return mel / np.maximum(spec.energy, config.log_floor)


def mel_spectrogram(signal, config: FrontEndConfig = FrontEndConfig()) -> np.ndarray:
    """Log mel matrix, ``log(max(x, eps))`` of the energy-normalised mel power."""
    return np.log(np.maximum(mel_energies(signal, config), config.log_floor))


def mfcc(mel_power: np.ndarray, config: FrontEndConfig = FrontEndConfig(),
         count: int | None = None) -> np.ndarray:
    """Cosine transform of log mel energies, coefficients 0..Q-1 per frame.

    ``mel_power`` is the pre-log K x frames matrix (see ``mel_energies``).
    """
    count = config.mfcc_count if count is None else count
    g = np.atleast_2d(np.asarray(mel_power, dtype=np.float64))
    k = g.shape[0]
    if not 1 <= count <= k:
        raise ValueError(f"coefficient count must be in 1..{k}")
    log_g = np.log(np.maximum(g, config.log_floor))
    q = np.arange(count)[:, None]
    basis = np.cos(np.pi * q * (2 * np.arange(k)[None, :] + 1) / (2 * k))
    return basis @ log_g


def extract_features(signal, config: FrontEndConfig = FrontEndConfig()) -> np.ndarray:
    """Feature matrix used for templates and recognition."""
    if config.features == "mfcc":
        return mfcc(mel_energies(signal, config), config)
    return mel_spectrogram(signal, config)


def _check_even(x: np.ndarray):
    mirrored = np.roll(x[::-1], 1)  # x[(N - n) % N]
    scale = max(1.0, float(np.max(np.abs(x))))
    if np.max(np.abs(x - mirrored)) > 1e-9 * scale:
        raise ValueError("log power spectrum must be symmetric: x[n] == x[N-n]")


def cepstrum(log_power: np.ndarray) -> np.ndarray:
    """Real cepstrum: inverse DFT of a full-length, even log power spectrum."""
    x = np.asarray(log_power, dtype=np.float64)
    _check_even(x)
    c = np.fft.ifft(x)
    if np.max(np.abs(c.imag)) > 1e-9 * max(1.0, float(np.max(np.abs(x)))):
        raise ValueError("cepstrum has a non-negligible imaginary part")
    return c.real


def cepstral_smooth(log_power: np.ndarray, keep: int) -> np.ndarray:
    """Low-pass lifter: keep cepstral indices below ``keep`` (and their
    mirror images), transform back."""
    x = np.asarray(log_power, dtype=np.float64)
    n = x.size
    if not 1 <= keep <= n:
        raise ValueError(f"keep must be in 1..{n}, got {keep}")
    c = cepstrum(x)
    c[keep:n - keep + 1] = 0.0
    return np.fft.fft(c).real


def cosine_cepstrum(half_log_power: np.ndarray) -> np.ndarray:
    """Cosine-transform cepstrum of the lower half ``log|V(n)|^2``, n < N/2.

    Returns indices 0..N/2. Scaled with sqrt(2/N) at index 0 and sqrt(4/N)
    elsewhere, so magnitudes differ from ``cepstrum``.
    """
    x = np.asarray(half_log_power, dtype=np.float64)
    half = x.size
    n = 2 * half
    d = np.arange(half + 1)[:, None]
    basis = np.cos(np.pi * d * (2 * np.arange(half)[None, :] + 1) / n)
    out = np.sqrt(4.0 / n) * (basis @ x)
    out[0] = np.sqrt(2.0 / n) * x.sum()
    return out
