"""Real-time prediction pipeline.

Feeds raw frames through resampling and quantization, samples the
background model at a fixed wall-clock cadence (default 1 fps), builds
RGBP windows from every stride-th frame, and keeps a rolling count
prediction. Per-frame conv features are cached so each new prediction
only pays for one frame of convolution plus the recurrent stack.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import frames as fp
from .background import BackgroundModel, ForegroundParams
from .lrcn import LRCNModel
from .metrics import round_count


@dataclass(frozen=True)
class PredictionEvent:
    timestamp_ms: int
    count: int
    raw_output: float

    def as_line(self) -> str:
        return f"{self.timestamp_ms},{self.count},{self.raw_output:.6f}"


class PipelineState:
    """Single-writer streaming state; `latest` is safe for readers."""

    def __init__(self, model: LRCNModel,
                 eta: int = 100, tau: float = 0.8, beta: float = 0.1,
                 lambda_c: int = 4, stride: int = fp.DEFAULT_STRIDE,
                 bg_interval_ms: int = 1000):
        cfg = model.config
        self.model = model
        self.stride = stride
        self.bg_interval_ms = bg_interval_ms
        self.fg_params = ForegroundParams(beta=beta)
        self.lambda_c = lambda_c
        self.width = cfg.input_width
        self.height = cfg.input_height
        self.bg = BackgroundModel(self.height, self.width, lambda_c=lambda_c,
                                  eta=eta, tau=tau)
        self._next_bg_ms: Optional[int] = None
        self._last_ts: Optional[int] = None
        self._features: deque = deque(maxlen=cfg.seq_len)
        self._latest: Optional[PredictionEvent] = None
        self.events: list = []

    def ingest_frame(self, raw: fp.RawFrame) -> Optional[PredictionEvent]:
        """Process one raw frame; returns a prediction event when emitted."""
        if self._last_ts is not None and raw.timestamp_ms < self._last_ts:
            raise ValueError(
                f"out-of-order timestamp {raw.timestamp_ms} < {self._last_ts}"
            )
        self._last_ts = raw.timestamp_ms

        resized = fp.resample(raw, self.width, self.height)
        quantized = None
        if self._next_bg_ms is None:
            self._next_bg_ms = raw.timestamp_ms
        if raw.timestamp_ms >= self._next_bg_ms:
            quantized = fp.quantize(resized, self.lambda_c)
            self.bg.ingest(quantized)
            while self._next_bg_ms <= raw.timestamp_ms:
                self._next_bg_ms += self.bg_interval_ms

        if raw.index % self.stride != 0 or not self.bg.initialized:
            return None
        if quantized is None:
            quantized = fp.quantize(resized, self.lambda_c)
        p = self.bg.foreground(quantized, self.fg_params)
        rgbp = fp.assemble_rgbp(resized, p)
        feats = self.model.conv_features(rgbp.to_tensor()[None])[0]
        self._features.append(feats)
        if len(self._features) < self.model.config.seq_len:
            return None
        stacked = np.stack(self._features)[None]
        y = float(self.model.recurrent_forward(stacked)[0])
        event = PredictionEvent(raw.timestamp_ms, round_count(y), y)
        self._latest = event
        self.events.append(event)
        return event

    def latest(self):
        """(count, timestamp_ms, ready) of the most recent prediction."""
        if self._latest is None:
            return (0, 0, False)
        return (self._latest.count, self._latest.timestamp_ms, True)

    def write_event_log(self, path) -> None:
        with open(path, "w") as fh:
            for e in self.events:
                fh.write(e.as_line() + "\n")
