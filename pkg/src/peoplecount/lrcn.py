"""Recurrent convolutional people-count regressor.

Each frame of a T-frame RGBP sequence passes through C conv(ReLU) +
2x2 max-pool blocks (valid padding), is flattened, and feeds a stack of
LSTM layers step by step; a single linear neuron reads the last time
step of the last LSTM layer (many-to-one). Forward and backward passes
are implemented directly on numpy so gradients can be verified against
finite differences and training stays dependency-free.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

MAGIC = b"LRCN"
FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Invalid architecture hyper-parameters."""


@dataclass(frozen=True)
class LRCNConfig:
    """Architecture hyper-parameters."""

    conv_layers: int = 3
    filters: int = 8
    kernel: int = 5
    lstm_units: tuple = (250,)
    seq_len: int = 9
    input_width: int = 400
    input_height: int = 225
    in_channels: int = 4
    dropout: float = 0.3
    conv_frozen: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lstm_units", tuple(int(u) for u in self.lstm_units))
        if self.conv_layers < 1 or self.filters < 1 or self.seq_len < 1:
            raise ConfigError("conv_layers, filters and seq_len must be >= 1")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ConfigError("kernel must be odd and >= 1")
        if not self.lstm_units or any(u < 1 for u in self.lstm_units):
            raise ConfigError("every LSTM layer needs >= 1 units")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")

    @property
    def lstm_layers(self) -> int:
        return len(self.lstm_units)

    def to_json(self) -> str:
        return json.dumps({
            "conv_layers": self.conv_layers,
            "filters": self.filters,
            "kernel": self.kernel,
            "lstm_units": list(self.lstm_units),
            "seq_len": self.seq_len,
            "input_width": self.input_width,
            "input_height": self.input_height,
            "in_channels": self.in_channels,
            "dropout": self.dropout,
            "conv_frozen": self.conv_frozen,
        })

    @classmethod
    def from_json(cls, text: str) -> "LRCNConfig":
        d = json.loads(text)
        d["lstm_units"] = tuple(d["lstm_units"])
        return cls(**d)


@dataclass(frozen=True)
class FeatureShape:
    """Spatial dims after each conv/pool stage plus the flattened length."""

    stages: tuple  # ((h, w) after each pool)
    flat_len: int


def feature_shape(config: LRCNConfig) -> FeatureShape:
    """Valid convolution shrinks each dim by K-1; pooling floors a halving."""
    h, w = config.input_height, config.input_width
    stages = []
    for _ in range(config.conv_layers):
        h -= config.kernel - 1
        w -= config.kernel - 1
        if h < 1 or w < 1:
            raise ConfigError("spatial dims collapse below 1 in a conv layer")
        h //= 2
        w //= 2
        if h < 1 or w < 1:
            raise ConfigError("spatial dims collapse below 1 in a pooling layer")
        stages.append((h, w))
    return FeatureShape(tuple(stages), h * w * config.filters)


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class LRCNModel:
    """Weights plus per-group trainable mask for the regressor."""

    def __init__(self, config: LRCNConfig, params: dict, trainable: dict):
        self.config = config
        self.params = params
        self.trainable = trainable
        self.feature = feature_shape(config)

    # -- construction ------------------------------------------------

    @classmethod
    def build(cls, config: LRCNConfig, seed: int = 0, dtype=np.float32) -> "LRCNModel":
        """Allocate and initialize all parameters.

        Fan-based uniform init for weight matrices; biases zero except the
        LSTM forget gate, which starts at 1.0.
        """
        shape = feature_shape(config)
        rng = np.random.default_rng(seed)
        K, F = config.kernel, config.filters
        params: dict = {}
        trainable: dict = {}

        ch_in = config.in_channels
        for c in range(config.conv_layers):
            fan_in = ch_in * K * K
            fan_out = F * K * K
            params[f"conv{c}_w"] = _glorot(rng, (F, ch_in, K, K), fan_in, fan_out, dtype)
            params[f"conv{c}_b"] = np.zeros(F, dtype=dtype)
            trainable[f"conv{c}_w"] = not config.conv_frozen
            trainable[f"conv{c}_b"] = not config.conv_frozen
            ch_in = F

        d_in = shape.flat_len
        for l, units in enumerate(config.lstm_units):
            params[f"lstm{l}_wx"] = _glorot(rng, (4 * units, d_in), d_in, 4 * units, dtype)
            params[f"lstm{l}_wh"] = _glorot(rng, (4 * units, units), units, 4 * units, dtype)
            b = np.zeros(4 * units, dtype=dtype)
            b[units:2 * units] = 1.0  # forget gate bias
            params[f"lstm{l}_b"] = b
            trainable[f"lstm{l}_wx"] = True
            trainable[f"lstm{l}_wh"] = True
            trainable[f"lstm{l}_b"] = True
            d_in = units

        params["out_w"] = _glorot(rng, (d_in,), d_in, 1, dtype)
        params["out_b"] = np.zeros(1, dtype=dtype)
        trainable["out_w"] = True
        trainable["out_b"] = True
        return cls(config, params, trainable)

    def copy(self) -> "LRCNModel":
        return LRCNModel(
            self.config,
            {k: v.copy() for k, v in self.params.items()},
            dict(self.trainable),
        )

    def astype(self, dtype) -> "LRCNModel":
        return LRCNModel(
            self.config,
            {k: v.astype(dtype) for k, v in self.params.items()},
            dict(self.trainable),
        )

    @property
    def dtype(self):
        return self.params["out_w"].dtype

    # -- bookkeeping --------------------------------------------------

    def conv_param_names(self):
        return [n for n in self.params if n.startswith("conv")]

    def count_trainable_params(self) -> int:
        return sum(v.size for n, v in self.params.items() if self.trainable[n])

    def transfer_conv_weights(self, source_conv_weights: dict) -> None:
        """Copy pretrained conv weights in place and freeze them."""
        for name in self.conv_param_names():
            src = source_conv_weights[name]
            if src.shape != self.params[name].shape:
                raise ConfigError(
                    f"{name}: source shape {src.shape} != target {self.params[name].shape}"
                )
            self.params[name] = np.array(src, dtype=self.dtype)
            self.trainable[name] = False

    def set_fine_tune(self) -> None:
        """Unfreeze every parameter group; weights are untouched."""
        for name in self.trainable:
            self.trainable[name] = True

    # -- forward ------------------------------------------------------

    def conv_features(self, frames: np.ndarray, cache: Optional[list] = None) -> np.ndarray:
        """Conv/pool feature extraction for a batch of frames.

        frames: (N, H, W, C) in [0,1]. Returns (N, flat_len). When `cache`
        is a list, per-layer intermediates are appended for backward.
        """
        cfg = self.config
        K = cfg.kernel
        a = np.ascontiguousarray(frames.transpose(0, 3, 1, 2)).astype(self.dtype, copy=False)
        for c in range(cfg.conv_layers):
            w = self.params[f"conv{c}_w"]
            b = self.params[f"conv{c}_b"]
            N, ch, H, W = a.shape
            Ho, Wo = H - K + 1, W - K + 1
            patches = sliding_window_view(a, (K, K), axis=(2, 3))  # (N,ch,Ho,Wo,K,K)
            pm = patches.transpose(0, 2, 3, 1, 4, 5).reshape(N * Ho * Wo, ch * K * K)
            z = pm @ w.reshape(w.shape[0], -1).T
            z += b
            relu_mask = z > 0
            z *= relu_mask
            act = z.reshape(N, Ho, Wo, w.shape[0]).transpose(0, 3, 1, 2)
            Hp, Wp = Ho // 2, Wo // 2
            win = act[:, :, :Hp * 2, :Wp * 2].reshape(N, w.shape[0], Hp, 2, Wp, 2)
            win = win.transpose(0, 1, 2, 4, 3, 5).reshape(N, w.shape[0], Hp, Wp, 4)
            idx = np.argmax(win, axis=4)
            pooled = np.take_along_axis(win, idx[..., None], axis=4)[..., 0]
            if cache is not None:
                cache.append({
                    "input": a, "relu_mask": relu_mask.reshape(N, Ho, Wo, w.shape[0]),
                    "pool_idx": idx, "shape": (N, ch, H, W, Ho, Wo, Hp, Wp),
                })
            a = np.ascontiguousarray(pooled)
        return a.reshape(a.shape[0], -1)

    def recurrent_forward(self, feats: np.ndarray, train: bool = False,
                          rng: Optional[np.random.Generator] = None,
                          cache: Optional[dict] = None) -> np.ndarray:
        """LSTM stack + linear readout over per-frame features.

        feats: (B, T, flat_len). Returns (B,) raw count estimates.
        """
        cfg = self.config
        B, T, _ = feats.shape
        x = feats
        layer_caches = []
        for l, U in enumerate(cfg.lstm_units):
            wx = self.params[f"lstm{l}_wx"]
            wh = self.params[f"lstm{l}_wh"]
            b = self.params[f"lstm{l}_b"]
            h = np.zeros((B, U), dtype=self.dtype)
            c = np.zeros((B, U), dtype=self.dtype)
            hs = np.empty((B, T, U), dtype=self.dtype)
            steps = []
            # Precompute the input projection for all steps in one matmul.
            zx = x.reshape(B * T, -1) @ wx.T
            zx = zx.reshape(B, T, 4 * U)
            for t in range(T):
                z = zx[:, t, :] + h @ wh.T + b
                i = _sigmoid(z[:, :U])
                f = _sigmoid(z[:, U:2 * U])
                g = np.tanh(z[:, 2 * U:3 * U])
                o = _sigmoid(z[:, 3 * U:])
                c_prev = c
                c = f * c_prev + i * g
                tc = np.tanh(c)
                h_prev = h
                h = o * tc
                hs[:, t, :] = h
                if cache is not None:
                    steps.append((i, f, g, o, c_prev, tc, h_prev))
            out = hs
            mask = None
            if train and cfg.dropout > 0.0:
                if rng is None:
                    rng = np.random.default_rng()
                keep = 1.0 - cfg.dropout
                mask = (rng.random(out.shape) < keep).astype(self.dtype) / keep
                out = out * mask
            if cache is not None:
                layer_caches.append({"x": x, "steps": steps, "mask": mask, "hs": hs})
            x = out
        y = x[:, -1, :] @ self.params["out_w"] + self.params["out_b"][0]
        if cache is not None:
            cache["layers"] = layer_caches
            cache["last_h"] = x[:, -1, :]
            cache["B"], cache["T"] = B, T
        return y

    def forward(self, seq: np.ndarray, train: bool = False,
                rng: Optional[np.random.Generator] = None,
                cache: Optional[dict] = None) -> np.ndarray:
        """Full forward pass.

        seq: (T, H, W, 4) or batched (B, T, H, W, 4), channels already
        normalized to [0,1]. Returns a scalar for a single sequence or a
        (B,) vector for a batch. Eval mode (train=False) is deterministic.
        """
        single = seq.ndim == 4
        x = seq[None] if single else seq
        cfg = self.config
        B, T = x.shape[0], x.shape[1]
        if T != cfg.seq_len:
            raise ConfigError(f"sequence length {T} != configured {cfg.seq_len}")
        if x.shape[2:] != (cfg.input_height, cfg.input_width, cfg.in_channels):
            raise ConfigError(f"frame shape {x.shape[2:]} does not match config")
        conv_cache = [] if cache is not None else None
        feats = self.conv_features(x.reshape(B * T, *x.shape[2:]), cache=conv_cache)
        feats = feats.reshape(B, T, -1)
        y = self.recurrent_forward(feats, train=train, rng=rng, cache=cache)
        if cache is not None:
            cache["conv"] = conv_cache
            cache["feat_dim"] = feats.shape[-1]
        return float(y[0]) if single else y

    def predict_count(self, seq: np.ndarray) -> int:
        """Rounded (half away from zero), non-negative count."""
        y = self.forward(seq)
        return max(0, int(np.floor(y + 0.5)) if y >= 0 else -int(np.floor(-y + 0.5)))

    # -- backward -----------------------------------------------------

    def backward(self, cache: dict, dy: np.ndarray) -> dict:
        """Gradients of sum(dy * y) with respect to every parameter.

        `cache` must come from a forward() call with cache={}. Returns a
        dict keyed like params. Gradients are computed for all groups;
        the optimizer applies the trainable mask.
        """
        cfg = self.config
        B, T = cache["B"], cache["T"]
        dy = np.asarray(dy, dtype=self.dtype).reshape(B)
        grads = {n: np.zeros_like(v) for n, v in self.params.items()}

        grads["out_w"] += cache["last_h"].T @ dy
        grads["out_b"][0] += dy.sum()
        dlast = dy[:, None] * self.params["out_w"][None, :]

        # Top layer receives gradient only at the final step.
        U_top = cfg.lstm_units[-1]
        dout = np.zeros((B, T, U_top), dtype=self.dtype)
        dout[:, -1, :] = dlast
        for l in range(cfg.lstm_layers - 1, -1, -1):
            lc = cache["layers"][l]
            if lc["mask"] is not None:
                dout = dout * lc["mask"]
            dout = self._lstm_backward(l, lc, dout, grads)

        dfeats = dout.reshape(B * T, -1)
        self._conv_backward(cache["conv"], dfeats, grads)
        return grads

    def _lstm_backward(self, l: int, lc: dict, dout: np.ndarray, grads: dict) -> np.ndarray:
        U = self.config.lstm_units[l]
        wx = self.params[f"lstm{l}_wx"]
        wh = self.params[f"lstm{l}_wh"]
        x = lc["x"]
        B, T, D = x.shape
        dzs = np.empty((B, T, 4 * U), dtype=self.dtype)
        dh_carry = np.zeros((B, U), dtype=self.dtype)
        dc_carry = np.zeros((B, U), dtype=self.dtype)
        for t in range(T - 1, -1, -1):
            i, f, g, o, c_prev, tc, h_prev = lc["steps"][t]
            dh = dout[:, t, :] + dh_carry
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_carry
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_carry = dc * f
            dz = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ], axis=1)
            dzs[:, t, :] = dz
            grads[f"lstm{l}_wh"] += dz.T @ h_prev
            dh_carry = dz @ wh
        dz_flat = dzs.reshape(B * T, 4 * U)
        grads[f"lstm{l}_wx"] += dz_flat.T @ x.reshape(B * T, D)
        grads[f"lstm{l}_b"] += dz_flat.sum(axis=0)
        return (dz_flat @ wx).reshape(B, T, D)

    def _conv_backward(self, conv_cache: list, dflat: np.ndarray, grads: dict) -> None:
        cfg = self.config
        K = cfg.kernel
        N = dflat.shape[0]
        last = conv_cache[-1]["shape"]
        da = dflat.reshape(N, cfg.filters, last[6], last[7])
        for c in range(cfg.conv_layers - 1, -1, -1):
            lc = conv_cache[c]
            N, ch, H, W, Ho, Wo, Hp, Wp = lc["shape"]
            F = cfg.filters
            # Un-pool: route gradient to the argmax position of each window.
            dwin = np.zeros((N, F, Hp, Wp, 4), dtype=self.dtype)
            np.put_along_axis(dwin, lc["pool_idx"][..., None], da[..., None], axis=4)
            dact = np.zeros((N, F, Ho, Wo), dtype=self.dtype)
            dwin = dwin.reshape(N, F, Hp, Wp, 2, 2).transpose(0, 1, 2, 4, 3, 5)
            dact[:, :, :Hp * 2, :Wp * 2] = dwin.reshape(N, F, Hp * 2, Wp * 2)
            # ReLU gate, then conv weight/input gradients via the patch matrix.
            dz = dact.transpose(0, 2, 3, 1) * lc["relu_mask"]
            dz_mat = dz.reshape(N * Ho * Wo, F)
            a = lc["input"]
            patches = sliding_window_view(a, (K, K), axis=(2, 3))
            pm = patches.transpose(0, 2, 3, 1, 4, 5).reshape(N * Ho * Wo, ch * K * K)
            grads[f"conv{c}_w"] += (dz_mat.T @ pm).reshape(F, ch, K, K)
            grads[f"conv{c}_b"] += dz_mat.sum(axis=0)
            if c > 0:
                w = self.params[f"conv{c}_w"]
                dpm = dz_mat @ w.reshape(F, -1)
                dpm = dpm.reshape(N, Ho, Wo, ch, K, K)
                da_in = np.zeros((N, ch, H, W), dtype=self.dtype)
                for ki in range(K):
                    for kj in range(K):
                        da_in[:, :, ki:ki + Ho, kj:kj + Wo] += dpm[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
                da = da_in

    # -- serialization ------------------------------------------------

    def save(self, path) -> None:
        """Self-describing binary checkpoint (little-endian throughout)."""
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<B", FORMAT_VERSION))
        cfg_bytes = self.config.to_json().encode()
        buf.write(struct.pack("<I", len(cfg_bytes)))
        buf.write(cfg_bytes)
        buf.write(struct.pack("<I", len(self.params)))
        for name in sorted(self.params):
            arr = np.ascontiguousarray(self.params[name], dtype="<f4")
            nb = name.encode()
            buf.write(struct.pack("<H", len(nb)))
            buf.write(nb)
            buf.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                buf.write(struct.pack("<I", d))
            buf.write(struct.pack("<B", 1 if self.trainable[name] else 0))
            buf.write(arr.tobytes())
        with open(path, "wb") as fh:
            fh.write(buf.getvalue())

    @classmethod
    def load(cls, path, dtype=np.float32) -> "LRCNModel":
        with open(path, "rb") as fh:
            data = fh.read()
        off = 0

        def take(n):
            nonlocal off
            chunk = data[off:off + n]
            if len(chunk) != n:
                raise ValueError("truncated checkpoint")
            off += n
            return chunk

        if take(4) != MAGIC:
            raise ValueError("bad checkpoint magic")
        version = struct.unpack("<B", take(1))[0]
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (cfg_len,) = struct.unpack("<I", take(4))
        config = LRCNConfig.from_json(take(cfg_len).decode())
        (n_params,) = struct.unpack("<I", take(4))
        params, trainable = {}, {}
        for _ in range(n_params):
            (name_len,) = struct.unpack("<H", take(2))
            name = take(name_len).decode()
            (ndim,) = struct.unpack("<B", take(1))
            shape = tuple(struct.unpack("<I", take(4))[0] for _ in range(ndim))
            (flag,) = struct.unpack("<B", take(1))
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(take(count * 4), dtype="<f4").reshape(shape)
            params[name] = arr.astype(dtype)
            trainable[name] = bool(flag)
        return cls(config, params, trainable)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
