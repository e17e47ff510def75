"""WAV ingestion and synthetic signal helpers.

Reads RIFF/WAVE PCM (16-bit int or 32-bit float), downmixes multichannel
input by channel averaging, and normalizes to [-1, 1]. No resampling is
performed; the clip keeps the file's sample rate.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .types import AudioClip


class AudioFormatError(Exception):
    """Unreadable or unsupported WAV content."""


_SCALE = {
    np.dtype(np.int16): 32768.0,
    np.dtype(np.int32): 2147483648.0,
}


def load_clip(path: str | Path, clip_id: str | None = None) -> AudioClip:
    """Load a WAV file as a mono, normalized AudioClip.

    Args:
        path: WAV file path (PCM16, PCM32, or float32).
        clip_id: Identifier for the clip; defaults to the file stem.

    Raises:
        AudioFormatError: unreadable file, unsupported encoding, or
            zero-length audio.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(str(path))
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise AudioFormatError(f"cannot read {path}: {exc}") from exc

    if data.size == 0:
        raise AudioFormatError(f"{path}: zero-length audio")

    if data.dtype in _SCALE:
        samples = data.astype(np.float64) / _SCALE[data.dtype]
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioFormatError(f"{path}: unsupported sample encoding {data.dtype}")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    elif samples.ndim != 1:
        raise AudioFormatError(f"{path}: unexpected array shape {samples.shape}")

    # Float files may slightly exceed full scale; clip instead of rejecting.
    samples = np.clip(samples, -1.0, 1.0)
    return AudioClip(clip_id=clip_id or path.stem, sample_rate=int(rate), samples=samples)


def write_wav(path: str | Path, clip: AudioClip, encoding: str = "float32") -> None:
    """Write a clip back to disk, mostly for fixtures and demos."""
    if encoding == "float32":
        data = clip.samples.astype(np.float32)
    elif encoding == "int16":
        data = np.round(clip.samples * 32767.0).astype(np.int16)
    else:
        raise ValueError(f"unsupported encoding {encoding!r}")
    wavfile.write(str(path), clip.sample_rate, data)


def silence(duration_s: float, sample_rate: int = 32000, clip_id: str = "silence") -> AudioClip:
    n = int(round(duration_s * sample_rate))
    return AudioClip(clip_id, sample_rate, np.zeros(n))


def white_noise(
    duration_s: float,
    sample_rate: int = 32000,
    rms: float = 0.1,
    seed: int = 0,
    clip_id: str = "noise",
) -> AudioClip:
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    x = rng.standard_normal(n)
    x *= rms / max(np.sqrt(np.mean(x**2)), 1e-12)
    return AudioClip(clip_id, sample_rate, np.clip(x, -1.0, 1.0))


def two_tone_siren(
    duration_s: float,
    sample_rate: int = 32000,
    low_hz: float = 800.0,
    high_hz: float = 1100.0,
    alternation_hz: float = 2.0,
    amplitude: float = 0.5,
    clip_id: str = "siren",
) -> AudioClip:
    """Synthetic two-tone (hi-lo) siren alternating between two pitches."""
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    use_high = (np.floor(t * alternation_hz * 2).astype(int) % 2) == 1
    freq = np.where(use_high, high_hz, low_hz)
    phase = 2 * np.pi * np.cumsum(freq) / sample_rate
    return AudioClip(clip_id, sample_rate, amplitude * np.sin(phase))
