"""Streaming per-pixel histogram background model and foreground extraction.

A ring buffer of the last eta quantized frames backs one histogram per
pixel. Once the buffer fills, the background is the per-pixel mode;
afterwards a pixel only changes when a single histogram bin holds at
least tau*eta of the buffered samples, which keeps standstill people out
of the background. The foreground mask thresholds the grayscale of the
absolute color difference between a frame and the background.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import PChannel, QuantizedFrame

DEFAULT_ETA = 100
DEFAULT_TAU = 0.8
DEFAULT_BETA = 0.1

# ITU-R 601 luma weights, applied to normalized channel differences.
GRAY_WEIGHTS = (0.299, 0.587, 0.114)


class NotReadyError(RuntimeError):
    """Background requested before the ring buffer has filled."""


@dataclass(frozen=True)
class ForegroundParams:
    beta: float = DEFAULT_BETA
    gray_weights: tuple = GRAY_WEIGHTS

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")


def concentration_gate(tau: float, eta: int) -> int:
    """Smallest integer count satisfying count >= tau*eta.

    Computed once in integer space so that e.g. tau=0.8, eta=100 yields
    exactly 80 despite binary-float representation of tau.
    """
    return math.ceil(tau * eta - 1e-9)


def mode_of(counts: np.ndarray) -> int:
    """Most frequent code in one pixel histogram; ties go to the lowest code."""
    counts = np.asarray(counts)
    if counts.sum() <= 0:
        raise ValueError("histogram is empty")
    return int(np.argmax(counts))


def update_pixel(counts: np.ndarray, prev_code: int, tau: float, eta: int) -> int:
    """Cautious background update for one pixel.

    Adopts the histogram mode only when its top bin holds at least
    tau*eta samples; otherwise the previous background code survives.
    """
    counts = np.asarray(counts)
    if int(counts.max()) >= concentration_gate(tau, eta):
        return mode_of(counts)
    return prev_code


class BackgroundModel:
    """Single-owner streaming background model over quantized frames."""

    def __init__(self, height: int, width: int, lambda_c: int = 4,
                 eta: int = DEFAULT_ETA, tau: float = DEFAULT_TAU):
        if eta < 1:
            raise ValueError("eta must be >= 1")
        if not 0.0 < tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        self.height = height
        self.width = width
        self.lambda_c = lambda_c
        self.lam = lambda_c ** 3
        self.eta = eta
        self.tau = tau
        self._gate = concentration_gate(tau, eta)
        self.ring = np.zeros((eta, height, width), dtype=np.uint16)
        self.hist = np.zeros((height, width, self.lam), dtype=np.int32)
        self.background: np.ndarray | None = None  # (h, w) codes
        self.frames_ingested = 0
        self._rows, self._cols = np.indices((height, width), sparse=True)

    @property
    def initialized(self) -> bool:
        return self.background is not None

    def ingest(self, q: QuantizedFrame) -> None:
        """Add one quantized frame, evicting the oldest when the ring is full."""
        if (q.height, q.width) != (self.height, self.width):
            raise ValueError(
                f"frame {q.height}x{q.width} does not match model "
                f"{self.height}x{self.width}"
            )
        if q.lambda_c != self.lambda_c:
            raise ValueError("frame lambda_c does not match model")
        slot = self.frames_ingested % self.eta
        if self.frames_ingested >= self.eta:
            old = self.ring[slot]
            self.hist[self._rows, self._cols, old.astype(np.intp)] -= 1
        codes = q.codes
        self.ring[slot] = codes
        self.hist[self._rows, self._cols, codes.astype(np.intp)] += 1
        self.frames_ingested += 1

        if self.frames_ingested == self.eta:
            self.background = np.argmax(self.hist, axis=2).astype(np.uint16)
        elif self.frames_ingested > self.eta:
            max_counts = self.hist.max(axis=2)
            confident = max_counts >= self._gate
            modes = np.argmax(self.hist, axis=2).astype(np.uint16)
            self.background = np.where(confident, modes, self.background)

    def foreground(self, q: QuantizedFrame, params: ForegroundParams = ForegroundParams()) -> PChannel:
        """Binary people mask: 1 where the frame departs from the background."""
        if not self.initialized:
            raise NotReadyError("background not initialized; keep ingesting frames")
        if (q.height, q.width) != (self.height, self.width):
            raise ValueError("frame dims do not match model")
        diff = _channel_diff(q.codes, self.background, self.lambda_c)
        w = np.asarray(params.gray_weights)
        gray = diff @ w
        return PChannel((gray > params.beta).astype(np.uint8))

    def snapshot(self):
        """Consistent value copy of (background, initialized flag)."""
        bg = None if self.background is None else self.background.copy()
        return bg, self.initialized


def _channel_diff(codes_a: np.ndarray, codes_b: np.ndarray, lambda_c: int) -> np.ndarray:
    """Per-channel |a - b| in normalized dequantized [0,1] space."""
    a = np.asarray(codes_a, dtype=np.int64)
    b = np.asarray(codes_b, dtype=np.int64)
    lc = lambda_c
    out = np.empty(a.shape + (3,), dtype=np.float64)
    out[..., 0] = np.abs(a // (lc * lc) - b // (lc * lc))
    out[..., 1] = np.abs((a // lc) % lc - (b // lc) % lc)
    out[..., 2] = np.abs(a % lc - b % lc)
    out /= lc - 1
    return out
