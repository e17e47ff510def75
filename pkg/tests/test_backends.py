import math
import random

import numpy as np
import pytest

from sirendet.audio import two_tone_siren, white_noise
from sirendet.backends import (
    BackendContractViolation,
    FixedMinBackend,
    FrameTooShort,
    HeuristicSirenBackend,
    ScriptedBackend,
    find_min_input_size,
)


class TestScriptedBackend:
    def test_lookup_at_frame_end_time(self):
        backend = ScriptedBackend([(2.0, 0.9), (None, 0.1)])
        backend._samples_seen = 16000  # stream at 0.5 s
        frame = np.zeros(9919)  # ends at 0.81 s
        assert backend.infer(frame) == 0.9

    def test_schedule_boundary_crossing(self):
        backend = ScriptedBackend([(1.0, 0.9), (None, 0.1)])
        frame = np.zeros(16000)  # 0.5 s
        assert backend.infer(frame) == 0.9  # ends at 0.5
        assert backend.infer(frame) == 0.1  # ends at 1.0, not < 1.0

    def test_reset_replays_identically(self):
        backend = ScriptedBackend([(0.5, 0.8), (1.0, 0.3), (None, 0.6)])
        frames = [np.zeros(9919) for _ in range(5)]
        first = [backend.infer(f) for f in frames]
        backend.reset()
        second = [backend.infer(f) for f in frames]
        assert first == second

    def test_schedule_validation(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            ScriptedBackend([(2.0, 0.5), (1.0, 0.5)])
        with pytest.raises(ValueError, match="out of"):
            ScriptedBackend([(1.0, 1.5)])
        with pytest.raises(ValueError, match="empty"):
            ScriptedBackend([])

    def test_constant_and_file(self, tmp_path):
        backend = ScriptedBackend.constant(0.7)
        assert backend.infer(np.zeros(100)) == 0.7
        path = tmp_path / "sched.json"
        path.write_text('[[2.0, 0.9], [null, 0.1]]')
        loaded = ScriptedBackend.from_file(path)
        assert loaded.probability_at(1.0) == 0.9
        assert loaded.probability_at(3.0) == 0.1


class TestHeuristicBackend:
    def test_silence_scores_near_zero(self):
        backend = HeuristicSirenBackend()
        assert backend.infer(np.zeros(9919)) <= 0.05

    def test_siren_beats_matched_rms_noise(self):
        backend = HeuristicSirenBackend()
        # Low amplitude keeps the scaled noise inside full scale (no clipping),
        # so the two signals really do carry equal RMS.
        siren = two_tone_siren(1.0, 32000, amplitude=0.2).samples
        rms = math.sqrt(float(np.mean(siren**2)))
        noise = white_noise(1.0, 32000, rms=rms, seed=3).samples
        assert math.isclose(
            rms, math.sqrt(float(np.mean(noise**2))), rel_tol=1e-4
        )
        assert backend.infer(siren) > backend.infer(noise)

    def test_deterministic_and_bounded(self):
        backend = HeuristicSirenBackend()
        frame = white_noise(0.5, 32000, seed=5).samples
        a, b = backend.infer(frame), backend.infer(frame)
        assert a == b
        assert 0.0 <= a <= 1.0

    def test_steady_tone_scores_low(self):
        # No pitch modulation: the temporal-variance factor kills the score.
        t = np.arange(32000) / 32000
        tone = 0.5 * np.sin(2 * np.pi * 800 * t)
        backend = HeuristicSirenBackend()
        assert backend.infer(tone) < 0.5

    def test_frame_too_short(self):
        backend = HeuristicSirenBackend()
        with pytest.raises(FrameTooShort):
            backend.infer(np.zeros(backend.min_input_samples - 1))


class TestFindMinInputSize:
    def test_hidden_minimum_9919(self):
        backend = FixedMinBackend(9919)
        assert find_min_input_size(backend, 1, 320000) == 9919
        assert backend.calls <= 20

    def test_accepts_everything(self):
        backend = FixedMinBackend(1)
        assert find_min_input_size(backend, 1, 320000) == 1

    def test_minimum_at_upper_bound(self):
        backend = FixedMinBackend(1000)
        assert find_min_input_size(backend, 1, 1000) == 1000

    def test_randomized_recovery_within_probe_budget(self):
        rng = random.Random(2024)
        budget = math.ceil(math.log2(10**6))
        for _ in range(200):
            m = rng.randint(1, 10**6)
            backend = FixedMinBackend(m)
            assert find_min_input_size(backend, 1, 10**6) == m
            assert backend.calls <= budget

    def test_verify_mode_passes_on_monotone_backend(self):
        backend = FixedMinBackend(9919)
        assert find_min_input_size(backend, 1, 320000, verify=True) == 9919
        assert backend.calls <= math.ceil(math.log2(320000 - 1)) + 2

    def test_verify_mode_detects_non_monotone_backend(self):
        # Accepts only a band of lengths: the search walks above the band and
        # converges on a value that itself rejects, which verify() catches.
        class BandBackend(FixedMinBackend):
            def infer(self, frame):
                self.calls += 1
                if not 10 <= len(frame) <= 1000:
                    raise FrameTooShort("outside accepted band")
                return 0.5

        with pytest.raises(BackendContractViolation):
            find_min_input_size(BandBackend(1), 1, 2**16, verify=True)

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            find_min_input_size(FixedMinBackend(5), 10, 2)
