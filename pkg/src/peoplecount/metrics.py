"""Evaluation measures: mean relative error, MAE and absolute-error histogram.

Relative error and the error histogram are computed on rounded, clamped
predictions; MAE is computed on the raw network outputs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EvalReport:
    relative_error_pct: float
    mae: float
    abs_error_hist: dict  # absolute error -> relative frequency
    n: int


def round_count(y: float) -> int:
    """Round half away from zero, clamped at 0."""
    r = int(np.floor(y + 0.5)) if y >= 0 else -int(np.floor(-y + 0.5))
    return max(0, r)


def relative_error_E(targets, predictions) -> float:
    """Mean relative count error as a percentage.

    Each term is |t - round(y)| / t, with the denominator replaced by 1
    when t == 0.
    """
    targets = list(targets)
    predictions = list(predictions)
    if not targets:
        raise ValueError("empty input")
    if len(targets) != len(predictions):
        raise ValueError("targets and predictions differ in length")
    total = 0.0
    for t, y in zip(targets, predictions):
        denom = t if t > 0 else 1
        total += abs(t - round_count(y)) / denom
    return 100.0 * total / len(targets)


def abs_error_hist(targets, predictions) -> dict:
    """Relative frequency of each integer absolute error after rounding."""
    targets = list(targets)
    predictions = list(predictions)
    if not targets:
        raise ValueError("empty input")
    if len(targets) != len(predictions):
        raise ValueError("targets and predictions differ in length")
    counts: dict = {}
    for t, y in zip(targets, predictions):
        err = abs(t - round_count(y))
        counts[err] = counts.get(err, 0) + 1
    n = len(targets)
    return {err: c / n for err, c in sorted(counts.items())}


def mae(targets, predictions) -> float:
    """Mean absolute error on raw (unrounded) predictions."""
    t = np.asarray(list(targets), dtype=np.float64)
    y = np.asarray(list(predictions), dtype=np.float64)
    if t.size == 0:
        raise ValueError("empty input")
    if t.shape != y.shape:
        raise ValueError("targets and predictions differ in length")
    return float(np.mean(np.abs(t - y)))


def evaluate(model, test_set, label_mode: str = "all_people") -> EvalReport:
    """Run the model over a labeled test set and compute all measures.

    test_set: iterable of objects with .tensor() -> (T,H,W,4) and .target(mode).
    """
    targets, raw = [], []
    for sample in test_set:
        targets.append(sample.target(label_mode))
        raw.append(model.forward(sample.tensor()))
    if not targets:
        raise ValueError("empty test set")
    return EvalReport(
        relative_error_pct=relative_error_E(targets, raw),
        mae=mae(targets, raw),
        abs_error_hist=abs_error_hist(targets, raw),
        n=len(targets),
    )


def write_report(report: EvalReport, json_path, csv_path=None) -> None:
    """Persist a report as JSON plus an optional plot-ready histogram CSV."""
    with open(json_path, "w") as fh:
        json.dump({
            "relative_error_pct": report.relative_error_pct,
            "mae": report.mae,
            "abs_error_hist": {str(k): v for k, v in report.abs_error_hist.items()},
            "n": report.n,
        }, fh, indent=2)
        fh.write("\n")
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["abs_error", "frequency"])
            for err, freq in report.abs_error_hist.items():
                writer.writerow([err, freq])
