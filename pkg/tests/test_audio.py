import numpy as np
import pytest
from scipy.io import wavfile

from sirendet.audio import (
    AudioFormatError,
    load_clip,
    silence,
    two_tone_siren,
    white_noise,
    write_wav,
)
from sirendet.types import AudioClip


def test_ten_second_mono_clip(tmp_path):
    clip = silence(10.0, 32000)
    path = tmp_path / "ten.wav"
    write_wav(path, clip)
    loaded = load_clip(path)
    assert len(loaded) == 320000
    assert loaded.duration_s == 10.0
    assert loaded.sample_rate == 32000
    assert loaded.clip_id == "ten"


def test_stereo_opposite_channels_average_to_zero(tmp_path):
    left = np.full(1000, 0.5, dtype=np.float32)
    right = np.full(1000, -0.5, dtype=np.float32)
    path = tmp_path / "st.wav"
    wavfile.write(str(path), 32000, np.stack([left, right], axis=1))
    clip = load_clip(path)
    assert np.all(clip.samples == 0.0)


def test_min_frame_duration_matches_310ms(tmp_path):
    path = tmp_path / "min.wav"
    write_wav(path, AudioClip("min", 32000, np.zeros(9919)))
    clip = load_clip(path)
    assert len(clip) == 9919
    assert clip.duration_s == pytest.approx(0.30997, abs=5e-6)


def test_pcm16_scaling(tmp_path):
    data = np.array([0, 16384, -16384, 32767, -32768], dtype=np.int16)
    path = tmp_path / "pcm.wav"
    wavfile.write(str(path), 32000, data)
    clip = load_clip(path)
    assert clip.samples == pytest.approx(data / 32768.0)


def test_unreadable_file_raises(tmp_path):
    path = tmp_path / "bad.wav"
    path.write_bytes(b"this is not RIFF")
    with pytest.raises(AudioFormatError):
        load_clip(path)


def test_unsupported_encoding_raises(tmp_path):
    path = tmp_path / "u8.wav"
    wavfile.write(str(path), 32000, np.zeros(100, dtype=np.uint8))
    with pytest.raises(AudioFormatError, match="unsupported"):
        load_clip(path)


def test_zero_length_raises(tmp_path):
    path = tmp_path / "empty.wav"
    wavfile.write(str(path), 32000, np.zeros(0, dtype=np.int16))
    with pytest.raises(AudioFormatError, match="zero-length"):
        load_clip(path)


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_clip(tmp_path / "nope.wav")


def test_round_trip_float32(tmp_path):
    clip = white_noise(0.25, 32000, rms=0.1, seed=7)
    path = tmp_path / "rt.wav"
    write_wav(path, clip)
    loaded = load_clip(path)
    assert loaded.samples == pytest.approx(clip.samples, abs=1e-6)


def test_synthetic_siren_shape():
    clip = two_tone_siren(1.0, 32000)
    assert len(clip) == 32000
    assert np.max(np.abs(clip.samples)) <= 0.5 + 1e-9


def test_clip_invariants():
    with pytest.raises(ValueError):
        AudioClip("x", 0, np.zeros(10))
    with pytest.raises(ValueError):
        AudioClip("x", 32000, np.array([0.0, np.nan]))
    with pytest.raises(ValueError):
        AudioClip("x", 32000, np.zeros(0))
