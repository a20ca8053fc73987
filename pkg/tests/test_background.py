import numpy as np
import pytest

from peoplecount.background import (BackgroundModel, ForegroundParams,
                                    NotReadyError, concentration_gate,
                                    mode_of, update_pixel)
from peoplecount.frames import QuantizedFrame


class NaiveModel:
    """Pure-python reference: rebuilt histograms and replayed updates."""

    def __init__(self, h, w, lambda_c, eta, tau):
        self.h, self.w = h, w
        self.lam = lambda_c ** 3
        self.eta = eta
        self.gate = concentration_gate(tau, eta)
        self.ring = []
        self.bg = None

    def ingest(self, codes):
        self.ring.append(np.array(codes))
        if len(self.ring) > self.eta:
            self.ring.pop(0)
        if self.bg is None:
            if len(self.ring) == self.eta:
                self.bg = [[self._mode(i, j) for j in range(self.w)]
                           for i in range(self.h)]
        else:
            for i in range(self.h):
                for j in range(self.w):
                    counts = self._counts(i, j)
                    if max(counts) >= self.gate:
                        self.bg[i][j] = counts.index(max(counts))

    def _counts(self, i, j):
        counts = [0] * self.lam
        for frame in self.ring:
            counts[frame[i, j]] += 1
        return counts

    def _mode(self, i, j):
        counts = self._counts(i, j)
        return counts.index(max(counts))

    def hist_array(self):
        return np.array([[self._counts(i, j) for j in range(self.w)]
                         for i in range(self.h)])


def random_stream(rng, h, w, lambda_c, n):
    return [rng.integers(0, lambda_c ** 3, size=(h, w)).astype(np.uint16)
            for _ in range(n)]


class TestIncrementalVsBatch:
    def test_randomized_streams(self):
        rng = np.random.default_rng(42)
        for trial in range(40):
            lambda_c = int(rng.integers(2, 5))
            eta = int(rng.integers(5, 21))
            tau = (0.6, 0.8, 1.0)[trial % 3]
            stream = random_stream(rng, 8, 8, lambda_c, eta + int(rng.integers(3, 10)))
            model = BackgroundModel(8, 8, lambda_c=lambda_c, eta=eta, tau=tau)
            oracle = NaiveModel(8, 8, lambda_c, eta, tau)
            for codes in stream:
                model.ingest(QuantizedFrame(codes, lambda_c=lambda_c))
                oracle.ingest(codes)
                assert np.array_equal(model.hist, oracle.hist_array())
                if oracle.bg is None:
                    assert model.background is None
                else:
                    assert np.array_equal(model.background, np.array(oracle.bg))

    def test_histogram_mass_conserved_after_fill(self):
        rng = np.random.default_rng(0)
        model = BackgroundModel(4, 4, lambda_c=2, eta=6, tau=0.8)
        for codes in random_stream(rng, 4, 4, 2, 20):
            model.ingest(QuantizedFrame(codes, lambda_c=2))
            expected = min(model.frames_ingested, 6)
            assert (model.hist.sum(axis=2) == expected).all()


class TestIngest:
    def test_identical_frames_yield_that_background(self):
        rng = np.random.default_rng(1)
        codes = rng.integers(0, 64, size=(6, 6)).astype(np.uint16)
        model = BackgroundModel(6, 6, eta=100)
        for _ in range(100):
            model.ingest(QuantizedFrame(codes))
        assert np.array_equal(model.background, codes)

    def test_single_deviating_frame_does_not_flip_background(self):
        codes = np.full((4, 4), 5, dtype=np.uint16)
        model = BackgroundModel(4, 4, eta=100, tau=0.8)
        for _ in range(100):
            model.ingest(QuantizedFrame(codes))
        changed = codes.copy()
        changed[2, 2] = 9
        model.ingest(QuantizedFrame(changed))
        assert model.background[2, 2] == 5  # count 1 < gate 80

    def test_dim_mismatch(self):
        model = BackgroundModel(4, 4)
        with pytest.raises(ValueError):
            model.ingest(QuantizedFrame(np.zeros((4, 5), dtype=np.uint16)))

    def test_standstill_code_never_wins_below_gate(self):
        # A code that occupies under tau*eta of the ring must not take
        # over an initialized background pixel.
        model = BackgroundModel(1, 1, lambda_c=2, eta=10, tau=0.8)
        base = np.array([[0]], dtype=np.uint16)
        intruder = np.array([[3]], dtype=np.uint16)
        for _ in range(10):
            model.ingest(QuantizedFrame(base, lambda_c=2))
        for _ in range(7):  # 7 < gate 8
            model.ingest(QuantizedFrame(intruder, lambda_c=2))
            if model.hist[0, 0, 3] < concentration_gate(0.8, 10):
                assert model.background[0, 0] == 0

    def test_takeover_at_gate(self):
        model = BackgroundModel(1, 1, lambda_c=2, eta=10, tau=0.8)
        for _ in range(10):
            model.ingest(QuantizedFrame(np.array([[0]], dtype=np.uint16), lambda_c=2))
        for _ in range(8):
            model.ingest(QuantizedFrame(np.array([[3]], dtype=np.uint16), lambda_c=2))
        assert model.background[0, 0] == 3


class TestModeAndUpdate:
    def test_mode_simple(self):
        counts = np.zeros(64, dtype=int)
        counts[0], counts[1], counts[2] = 5, 90, 5
        assert mode_of(counts) == 1

    def test_mode_tie_breaks_low(self):
        counts = np.zeros(64, dtype=int)
        counts[0] = counts[7] = 50
        assert mode_of(counts) == 0

    def test_mode_empty(self):
        with pytest.raises(ValueError):
            mode_of(np.zeros(8, dtype=int))

    def test_mode_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            counts = rng.integers(0, 50, size=27)
            if counts.sum() == 0:
                continue
            best = max(range(27), key=lambda l: (counts[l], -l))
            assert mode_of(counts) == best

    def test_update_adopts_at_boundary(self):
        counts = np.zeros(64, dtype=int)
        counts[9] = 80
        counts[3] = 20
        assert update_pixel(counts, prev_code=3, tau=0.8, eta=100) == 9

    def test_update_retains_below_boundary(self):
        counts = np.zeros(64, dtype=int)
        counts[9] = 79
        counts[3] = 21
        assert update_pixel(counts, prev_code=3, tau=0.8, eta=100) == 3

    def test_gate_is_exact_integer(self):
        assert concentration_gate(0.8, 100) == 80
        assert concentration_gate(0.6, 7) == 5
        assert concentration_gate(1.0, 10) == 10

    def test_furniture_move_flips_after_gate_count(self):
        # Object appears and stays: the pixel flips exactly when the new
        # code's ring occupancy reaches the gate.
        eta, tau = 20, 0.8
        gate = concentration_gate(tau, eta)
        model = BackgroundModel(1, 1, lambda_c=2, eta=eta, tau=tau)
        for _ in range(eta):
            model.ingest(QuantizedFrame(np.array([[1]], dtype=np.uint16), lambda_c=2))
        new = QuantizedFrame(np.array([[6]], dtype=np.uint16), lambda_c=2)
        for k in range(1, eta + 1):
            model.ingest(new)
            expected = 6 if k >= gate else 1
            assert model.background[0, 0] == expected


class TestForeground:
    def test_background_frame_gives_empty_mask(self):
        rng = np.random.default_rng(2)
        codes = rng.integers(0, 64, size=(5, 5)).astype(np.uint16)
        model = BackgroundModel(5, 5, eta=3)
        for _ in range(3):
            model.ingest(QuantizedFrame(codes))
        p = model.foreground(QuantizedFrame(codes))
        assert (p.bits == 0).all()

    def test_full_contrast_detected(self):
        model = BackgroundModel(1, 1, eta=2)
        zero = QuantizedFrame(np.array([[0]], dtype=np.uint16))
        model.ingest(zero)
        model.ingest(zero)
        p = model.foreground(QuantizedFrame(np.array([[63]], dtype=np.uint16)))
        assert p.bits[0, 0] == 1  # gray diff 1.0 > 0.1

    def test_not_ready(self):
        model = BackgroundModel(2, 2, eta=5)
        model.ingest(QuantizedFrame(np.zeros((2, 2), dtype=np.uint16)))
        with pytest.raises(NotReadyError):
            model.foreground(QuantizedFrame(np.zeros((2, 2), dtype=np.uint16)))

    def test_deterministic_and_binary(self):
        rng = np.random.default_rng(9)
        model = BackgroundModel(6, 6, eta=4)
        for codes in (rng.integers(0, 64, size=(6, 6)).astype(np.uint16)
                      for _ in range(4)):
            model.ingest(QuantizedFrame(codes))
        q = QuantizedFrame(rng.integers(0, 64, size=(6, 6)).astype(np.uint16))
        p1 = model.foreground(q)
        p2 = model.foreground(q)
        assert np.array_equal(p1.bits, p2.bits)
        assert set(np.unique(p1.bits)) <= {0, 1}

    def test_beta_validation(self):
        with pytest.raises(ValueError):
            ForegroundParams(beta=0.0)


class TestSnapshot:
    def test_uninitialized(self):
        model = BackgroundModel(2, 2, eta=5)
        bg, ready = model.snapshot()
        assert bg is None and not ready

    def test_value_copy(self):
        codes = np.full((2, 2), 3, dtype=np.uint16)
        model = BackgroundModel(2, 2, eta=2, tau=1.0)
        model.ingest(QuantizedFrame(codes))
        model.ingest(QuantizedFrame(codes))
        bg, ready = model.snapshot()
        assert ready and np.array_equal(bg, codes)
        other = np.full((2, 2), 9, dtype=np.uint16)
        for _ in range(4):
            model.ingest(QuantizedFrame(other))
        assert np.array_equal(bg, codes)  # snapshot unaffected
