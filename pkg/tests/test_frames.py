import numpy as np
import pytest

from peoplecount import frames as fp
from peoplecount.frames import (FrameError, PChannel, RawFrame, RGBPFrame,
                                SequenceWindower, assemble_rgbp,
                                dequantize_code, quantize, resample)


def bilinear_reference(src, width, height):
    """Loop-based double-precision bilinear resampler (oracle)."""
    src = src.astype(np.float64)
    sh, sw = src.shape[:2]
    out = np.empty((height, width, 3))
    for oy in range(height):
        for ox in range(width):
            x = (ox + 0.5) * sw / width - 0.5
            y = (oy + 0.5) * sh / height - 0.5
            x0 = min(max(int(np.floor(x)), 0), sw - 1)
            y0 = min(max(int(np.floor(y)), 0), sh - 1)
            x1 = min(x0 + 1, sw - 1)
            y1 = min(y0 + 1, sh - 1)
            fx = min(max(x - x0, 0.0), 1.0)
            fy = min(max(y - y0, 0.0), 1.0)
            top = src[y0, x0] * (1 - fx) + src[y0, x1] * fx
            bot = src[y1, x0] * (1 - fx) + src[y1, x1] * fx
            out[oy, ox] = top * (1 - fy) + bot * fy
    return out


class TestResample:
    def test_identity_is_byte_identical(self):
        rng = np.random.default_rng(0)
        frame = RawFrame(rng.integers(0, 256, (225, 400, 3), dtype=np.uint8))
        out = resample(frame)
        assert out.pixels is frame.pixels

    def test_constant_field_stays_constant(self):
        frame = RawFrame(np.full((450, 800, 3), 137, dtype=np.uint8))
        out = resample(frame)
        assert out.width == 400 and out.height == 225
        assert (out.pixels == 137).all()

    def test_checkerboard_matches_reference(self):
        ys, xs = np.indices((720, 1280))
        board = (((ys // 16) + (xs // 16)) % 2 * 255).astype(np.uint8)
        pixels = np.stack([board] * 3, axis=-1)
        out = resample(RawFrame(pixels))
        ref = bilinear_reference(pixels, 400, 225)
        assert np.abs(out.pixels.astype(np.float64) - ref).max() <= 1.0

    def test_small_random_matches_reference(self):
        rng = np.random.default_rng(3)
        pixels = rng.integers(0, 256, (37, 61, 3), dtype=np.uint8)
        out = resample(RawFrame(pixels), width=24, height=16)
        ref = bilinear_reference(pixels, 24, 16)
        assert np.abs(out.pixels.astype(np.float64) - ref).max() <= 1.0

    def test_zero_sized_input_rejected(self):
        with pytest.raises(FrameError):
            RawFrame(np.zeros((0, 10, 3), dtype=np.uint8))


class TestQuantize:
    def test_black_is_code_zero(self):
        frame = RawFrame(np.zeros((2, 2, 3), dtype=np.uint8))
        assert (quantize(frame, 4).codes == 0).all()

    def test_white_is_top_code(self):
        frame = RawFrame(np.full((2, 2, 3), 255, dtype=np.uint8))
        assert (quantize(frame, 4).codes == 63).all()

    def test_mixed_pixel(self):
        px = np.array([[[128, 64, 200]]], dtype=np.uint8)
        # bins (2, 1, 3) -> 2*16 + 1*4 + 3
        assert quantize(RawFrame(px), 4).codes[0, 0] == 39

    def test_lambda_c_bounds(self):
        frame = RawFrame(np.zeros((1, 1, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            quantize(frame, 1)
        with pytest.raises(ValueError):
            quantize(frame, 17)

    def test_quantize_dequantize_idempotent(self):
        rng = np.random.default_rng(1)
        for lambda_c in (2, 4, 7):
            frame = RawFrame(rng.integers(0, 256, (8, 8, 3), dtype=np.uint8))
            q1 = quantize(frame, lambda_c)
            redone = np.clip(np.rint(dequantize_code(q1.codes, lambda_c) * 255),
                             0, 255).astype(np.uint8)
            q2 = quantize(RawFrame(redone), lambda_c)
            assert np.array_equal(q1.codes, q2.codes)


class TestDequantize:
    def test_extremes(self):
        assert np.allclose(dequantize_code(0, 4), [0, 0, 0])
        assert np.allclose(dequantize_code(63, 4), [1, 1, 1])

    def test_mixed(self):
        assert np.allclose(dequantize_code(39, 4), [2 / 3, 1 / 3, 1])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            dequantize_code(64, 4)


class TestAssemble:
    def test_empty_foreground(self):
        rgb = RawFrame(np.full((4, 6, 3), 9, dtype=np.uint8), timestamp_ms=5, index=3)
        rgbp = assemble_rgbp(rgb, PChannel(np.zeros((4, 6), dtype=np.uint8)))
        assert (rgbp.p.bits == 0).all()
        assert rgbp.timestamp_ms == 5 and rgbp.index == 3

    def test_dim_mismatch(self):
        rgb = RawFrame(np.zeros((4, 6, 3), dtype=np.uint8))
        with pytest.raises(FrameError):
            assemble_rgbp(rgb, PChannel(np.zeros((4, 5), dtype=np.uint8)))

    def test_p_channel_must_be_binary(self):
        with pytest.raises(FrameError):
            PChannel(np.full((2, 2), 2, dtype=np.uint8))


def _rgbp(index):
    return RGBPFrame(np.zeros((4, 6, 3), dtype=np.uint8),
                     PChannel(np.zeros((4, 6), dtype=np.uint8)), index=index)


class TestWindower:
    def test_first_sequence_ends_at_expected_index(self):
        w = SequenceWindower(seq_len=9, stride=5)
        emitted = []
        for i in range(60):
            seq = w.push(_rgbp(i))
            if seq is not None:
                emitted.append(seq.frames[-1].index)
        assert emitted[0] == 40  # 5 * (9 - 1)

    def test_singletons_with_unit_window(self):
        w = SequenceWindower(seq_len=1, stride=1)
        for i in range(5):
            seq = w.push(_rgbp(i))
            assert seq is not None and len(seq) == 1

    def test_50_frames_two_sequences(self):
        w = SequenceWindower(seq_len=9, stride=5)
        ends = [s.frames[-1].index for s in
                (w.push(_rgbp(i)) for i in range(50)) if s is not None]
        assert ends == [40, 45]

    @pytest.mark.parametrize("n,seq_len,stride", [
        (1, 1, 1), (50, 9, 5), (23, 4, 3), (100, 7, 2), (6, 9, 5),
    ])
    def test_output_count_formula(self, n, seq_len, stride):
        w = SequenceWindower(seq_len=seq_len, stride=stride)
        count = sum(1 for i in range(n) if w.push(_rgbp(i)) is not None)
        assert count == max(0, (n - 1) // stride - seq_len + 2)

    def test_sequences_are_ordered_and_spaced(self):
        w = SequenceWindower(seq_len=3, stride=4)
        for i in range(30):
            seq = w.push(_rgbp(i))
            if seq is not None:
                idx = [f.index for f in seq.frames]
                assert idx == sorted(idx)
                assert all(b - a == 4 for a, b in zip(idx, idx[1:]))
