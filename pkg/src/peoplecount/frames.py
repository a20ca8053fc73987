"""Frame preprocessing: resampling, color quantization and RGBP assembly.

Raw camera frames are resampled to the fixed network resolution
(400x225), quantized to a small per-channel palette for the background
model, and finally merged with a binary people mask into 4-channel RGBP
frames. A sliding windower groups RGBP frames into fixed-stride
sequences for the recurrent model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

TARGET_WIDTH = 400
TARGET_HEIGHT = 225
DEFAULT_LAMBDA_C = 4
DEFAULT_STRIDE = 5


class FrameError(ValueError):
    """Raised for malformed frames or mismatched dimensions."""


@dataclass(frozen=True)
class RawFrame:
    """A raw RGB frame as captured from the camera."""

    pixels: np.ndarray  # (height, width, 3) uint8
    timestamp_ms: int = 0
    index: int = 0

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise FrameError(f"expected (h, w, 3) pixel array, got shape {px.shape}")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class QuantizedFrame:
    """Per-pixel color codes in {0..lambda_c**3 - 1}."""

    codes: np.ndarray  # (height, width) uint16
    lambda_c: int = DEFAULT_LAMBDA_C

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.uint16)
        object.__setattr__(self, "codes", codes)
        if codes.ndim != 2:
            raise FrameError(f"expected 2-d code array, got shape {codes.shape}")
        if codes.size and int(codes.max()) >= self.lam:
            raise FrameError("code out of range for lambda_c=%d" % self.lambda_c)

    @property
    def lam(self) -> int:
        return self.lambda_c ** 3

    @property
    def height(self) -> int:
        return self.codes.shape[0]

    @property
    def width(self) -> int:
        return self.codes.shape[1]


@dataclass(frozen=True)
class PChannel:
    """Binary people/foreground mask."""

    bits: np.ndarray  # (height, width) uint8, values in {0, 1}

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 2:
            raise FrameError(f"expected 2-d bit array, got shape {bits.shape}")
        if bits.size and int(bits.max()) > 1:
            raise FrameError("P channel must be strictly binary")
        object.__setattr__(self, "bits", bits)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class RGBPFrame:
    """Resampled RGB paired with its binary people mask."""

    rgb: np.ndarray  # (height, width, 3) uint8
    p: PChannel
    timestamp_ms: int = 0
    index: int = 0

    def __post_init__(self):
        rgb = np.asarray(self.rgb, dtype=np.uint8)
        object.__setattr__(self, "rgb", rgb)
        if rgb.shape[:2] != self.p.bits.shape:
            raise FrameError(
                f"rgb {rgb.shape[:2]} and P {self.p.bits.shape} dims differ"
            )

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    def to_tensor(self) -> np.ndarray:
        """Normalized (height, width, 4) float32 tensor, RGB in [0,1], P in {0,1}."""
        out = np.empty(self.rgb.shape[:2] + (4,), dtype=np.float32)
        out[..., :3] = self.rgb.astype(np.float32) / 255.0
        out[..., 3] = self.p.bits
        return out


@dataclass(frozen=True)
class RGBPSequence:
    """Exactly T temporally ordered RGBP frames, stride frames apart."""

    frames: tuple
    stride: int = DEFAULT_STRIDE
    label: Optional["object"] = None  # PeopleLabel, kept loose to avoid a cycle

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not frames:
            raise FrameError("sequence must contain at least one frame")
        for a, b in zip(frames, frames[1:]):
            if b.index - a.index != self.stride:
                raise FrameError(
                    f"kept-frame indices {a.index}->{b.index} not {self.stride} apart"
                )

    def __len__(self) -> int:
        return len(self.frames)

    def to_tensor(self) -> np.ndarray:
        """Stacked (T, height, width, 4) float32 tensor."""
        return np.stack([f.to_tensor() for f in self.frames])


def resample(frame: RawFrame, width: int = TARGET_WIDTH, height: int = TARGET_HEIGHT) -> RawFrame:
    """Bilinearly resample a frame to the target resolution.

    Uses half-pixel sample centers with edge clamping, so a constant
    image stays constant and the identity size is a no-op copy.
    """
    if frame.width == width and frame.height == height:
        return frame
    src = frame.pixels.astype(np.float64)
    sh, sw = src.shape[:2]

    xs = (np.arange(width) + 0.5) * (sw / width) - 0.5
    ys = (np.arange(height) + 0.5) * (sh / height) - 0.5
    x0 = np.clip(np.floor(xs), 0, sw - 1).astype(np.intp)
    y0 = np.clip(np.floor(ys), 0, sh - 1).astype(np.intp)
    x1 = np.minimum(x0 + 1, sw - 1)
    y1 = np.minimum(y0 + 1, sh - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)

    top = src[y0][:, x0] * (1 - fx)[None, :, None] + src[y0][:, x1] * fx[None, :, None]
    bot = src[y1][:, x0] * (1 - fx)[None, :, None] + src[y1][:, x1] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return RawFrame(out, timestamp_ms=frame.timestamp_ms, index=frame.index)


def quantize(frame: RawFrame, lambda_c: int = DEFAULT_LAMBDA_C) -> QuantizedFrame:
    """Quantize an RGB frame to lambda_c levels per channel.

    Per-channel bin is floor(v * lambda_c / 256); the three bins pack into
    a single code r*lambda_c**2 + g*lambda_c + b.
    """
    if not 2 <= lambda_c <= 16:
        raise ValueError(f"lambda_c must be in 2..16, got {lambda_c}")
    bins = (frame.pixels.astype(np.uint32) * lambda_c) >> 8
    codes = bins[..., 0] * lambda_c * lambda_c + bins[..., 1] * lambda_c + bins[..., 2]
    return QuantizedFrame(codes.astype(np.uint16), lambda_c=lambda_c)


def dequantize_code(code, lambda_c: int = DEFAULT_LAMBDA_C):
    """Map a code (or array of codes) back to normalized RGB in [0,1]^3.

    Each channel becomes bin / (lambda_c - 1). Accepts scalars or numpy
    arrays; returns a float64 array with a trailing axis of size 3.
    """
    code = np.asarray(code, dtype=np.int64)
    lam = lambda_c ** 3
    if code.size and (code.min() < 0 or code.max() >= lam):
        raise ValueError(f"code out of range [0, {lam})")
    r = code // (lambda_c * lambda_c)
    g = (code // lambda_c) % lambda_c
    b = code % lambda_c
    return np.stack([r, g, b], axis=-1).astype(np.float64) / (lambda_c - 1)


def assemble_rgbp(rgb: RawFrame, p: PChannel) -> RGBPFrame:
    """Pair a resampled RGB frame with its people mask."""
    if (rgb.height, rgb.width) != (p.height, p.width):
        raise FrameError(
            f"rgb {rgb.height}x{rgb.width} and P {p.height}x{p.width} dims differ"
        )
    return RGBPFrame(rgb.pixels, p, timestamp_ms=rgb.timestamp_ms, index=rgb.index)


class SequenceWindower:
    """Accumulates kept RGBP frames into fixed-length sliding sequences.

    Raw frame indices 0, stride, 2*stride, ... are kept; once T kept
    frames have arrived, every further kept frame emits the sequence of
    the last T kept frames. Single-owner state, not thread safe.
    """

    def __init__(self, seq_len: int, stride: int = DEFAULT_STRIDE):
        if seq_len < 1:
            raise ValueError("seq_len must be >= 1")
        if stride < 1:
            raise ValueError("stride must be >= 1")
        self.seq_len = seq_len
        self.stride = stride
        self._kept: list = []

    def push(self, frame: RGBPFrame) -> Optional[RGBPSequence]:
        """Offer a frame; returns a full sequence or None if not ready.

        Frames whose index is not a multiple of the stride are ignored.
        """
        if frame.index % self.stride != 0:
            return None
        if self._kept and frame.index <= self._kept[-1].index:
            raise FrameError("frame index must be strictly increasing")
        self._kept.append(frame)
        if len(self._kept) > self.seq_len:
            self._kept.pop(0)
        if len(self._kept) == self.seq_len:
            return RGBPSequence(tuple(self._kept), stride=self.stride)
        return None

    def reset(self):
        self._kept.clear()
