"""Supervised training of the count regressor.

Stratified splitting, MAE loss with Adam updates on the trainable
parameter groups, early stopping on a small validation holdout, and the
three training strategies: from scratch, transfer (frozen conv), and
fine-tuning at a reduced learning rate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lrcn import LRCNConfig, LRCNModel
from .metrics import EvalReport, evaluate


class LabelError(ValueError):
    """Missing or inconsistent labels."""


@dataclass(frozen=True)
class PeopleLabel:
    total_count: int
    customer_count: Optional[int] = None

    def __post_init__(self):
        if self.total_count < 0:
            raise LabelError("total_count must be non-negative")
        if self.customer_count is not None:
            if self.customer_count < 0:
                raise LabelError("customer_count must be non-negative")
            if self.customer_count > self.total_count:
                raise LabelError("customer_count cannot exceed total_count")


@dataclass
class LabeledSequence:
    """A training sample: normalized (T, H, W, 4) tensor plus its label."""

    x: np.ndarray
    label: PeopleLabel

    def tensor(self) -> np.ndarray:
        return self.x

    def target(self, label_mode: str = "all_people") -> int:
        if label_mode == "all_people":
            return self.label.total_count
        if label_mode == "customers_only":
            if self.label.customer_count is None:
                raise LabelError("sample lacks a customer count")
            return self.label.customer_count
        raise ValueError(f"unknown label mode {label_mode!r}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 100
    patience: int = 10
    split_fraction: float = 0.70
    val_fraction: float = 0.10
    strategy: str = "scratch"  # scratch | transfer | fine_tune
    label_mode: str = "all_people"  # all_people | customers_only
    seed: int = 0
    stop_at_train_loss: Optional[float] = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must be in (0, 1)")


@dataclass
class TrainReport:
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    stopped_epoch: int = 0
    trainable_params: int = 0
    eval_report: Optional[EvalReport] = None
    wall_time_s: float = 0.0

    def write(self, path) -> None:
        """One epoch per line: epoch, train_loss, val_loss."""
        with open(path, "w") as fh:
            fh.write("epoch,train_loss,val_loss\n")
            for e, (tr, va) in enumerate(zip(self.train_losses, self.val_losses), 1):
                fh.write(f"{e},{tr:.6f},{va:.6f}\n")


def stratified_split(samples, fraction: float, seed: int, key=None):
    """Per-count-value split into (train, test), deterministic in the seed.

    Each stratum contributes round(fraction * n) samples to the train
    side.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("empty input")
    if key is None:
        key = lambda s: s.label.total_count
    strata: dict = {}
    for s in samples:
        strata.setdefault(key(s), []).append(s)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for value in sorted(strata):
        group = strata[value]
        order = rng.permutation(len(group))
        n_train = int(np.floor(fraction * len(group) + 0.5))
        for rank, idx in enumerate(order):
            (train if rank < n_train else test).append(group[idx])
    return train, test


def mae_loss(predictions, targets) -> float:
    """Mean absolute error over raw predictions."""
    y = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if y.shape != t.shape or y.size == 0:
        raise ValueError("predictions and targets must be equal non-empty lengths")
    return float(np.mean(np.abs(y - t)))


class Adam:
    """Adaptive moment optimizer over the model's trainable groups."""

    def __init__(self, model: LRCNModel, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.model = model
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {n: np.zeros_like(v) for n, v in model.params.items() if model.trainable[n]}
        self.v = {n: np.zeros_like(v) for n, v in model.params.items() if model.trainable[n]}

    def step(self, grads: dict) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name in self.m:
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / b1t
            v_hat = self.v[name] / b2t
            self.model.params[name] -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(self.model.params[name].dtype)


def train(model: LRCNModel, dataset, config: TrainConfig):
    """Minimize MAE over the dataset; returns (model, TrainReport).

    A val_fraction holdout of the provided data drives early stopping;
    the rest is the optimization set. The model is updated in place and
    also returned.
    """
    samples = list(dataset)
    if not samples:
        raise ValueError("empty dataset")
    targets_all = [s.target(config.label_mode) for s in samples]

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(samples))
    n_val = min(len(samples) - 1, max(1, int(round(config.val_fraction * len(samples)))))
    val_idx = order[:n_val]
    fit_idx = order[n_val:]

    opt = Adam(model, config.learning_rate)
    report = TrainReport(trainable_params=model.count_trainable_params())
    best_val = np.inf
    stall = 0
    t0 = time.perf_counter()

    for epoch in range(1, config.max_epochs + 1):
        rng.shuffle(fit_idx)
        epoch_abs_err = 0.0
        for start in range(0, len(fit_idx), config.batch_size):
            batch = fit_idx[start:start + config.batch_size]
            x = np.stack([samples[i].x for i in batch])
            t = np.array([targets_all[i] for i in batch], dtype=np.float64)
            cache = {}
            y = model.forward(x, train=True, rng=rng, cache=cache)
            resid = y - t
            epoch_abs_err += float(np.abs(resid).sum())
            dy = np.sign(resid) / len(batch)  # d/dy of mean |y - t|; 0 at 0
            grads = model.backward(cache, dy)
            opt.step(grads)
        train_loss = epoch_abs_err / len(fit_idx)

        val_preds = _predict_raw(model, [samples[i] for i in val_idx])
        val_loss = mae_loss(val_preds, [targets_all[i] for i in val_idx])
        report.train_losses.append(train_loss)
        report.val_losses.append(val_loss)
        report.stopped_epoch = epoch

        if config.stop_at_train_loss is not None and train_loss <= config.stop_at_train_loss:
            break
        if val_loss < best_val - 1e-12:
            best_val = val_loss
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                break

    report.wall_time_s = time.perf_counter() - t0
    return model, report


def _predict_raw(model: LRCNModel, samples) -> list:
    preds = []
    batch = 16
    for start in range(0, len(samples), batch):
        x = np.stack([s.x for s in samples[start:start + batch]])
        preds.extend(model.forward(x).tolist())
    return preds


def run_strategy(strategy: str, dataset, arch: LRCNConfig, config: TrainConfig,
                 base_conv_weights: Optional[dict] = None,
                 test_set=None, seed: int = 0):
    """Run one of the three training strategies; returns (model, TrainReport).

    transfer copies and freezes pretrained conv weights; fine_tune first
    trains in the transfer regime, then unfreezes everything and
    continues at a tenth of the learning rate.
    """
    if strategy not in ("scratch", "transfer", "fine_tune"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy in ("transfer", "fine_tune") and base_conv_weights is None:
        raise ValueError(f"{strategy} strategy requires base conv weights")

    model = LRCNModel.build(arch, seed=seed)
    if strategy == "scratch":
        model, report = train(model, dataset, config)
    else:
        model.transfer_conv_weights(base_conv_weights)
        model, report = train(model, dataset, config)
        if strategy == "fine_tune":
            model.set_fine_tune()
            ft_config = TrainConfig(
                learning_rate=config.learning_rate / 10.0,
                batch_size=config.batch_size,
                max_epochs=config.max_epochs,
                patience=config.patience,
                split_fraction=config.split_fraction,
                val_fraction=config.val_fraction,
                strategy="fine_tune",
                label_mode=config.label_mode,
                seed=config.seed,
                stop_at_train_loss=config.stop_at_train_loss,
            )
            model, report = train(model, dataset, ft_config)
    report.trainable_params = model.count_trainable_params()
    if test_set:
        report.eval_report = evaluate(model, test_set, label_mode=config.label_mode)
    return model, report
