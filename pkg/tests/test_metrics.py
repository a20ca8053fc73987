import json

import numpy as np
import pytest

from peoplecount.metrics import (EvalReport, abs_error_hist, evaluate, mae,
                                 relative_error_E, round_count, write_report)


class TestRelativeError:
    def test_rounding_absorbs_small_error(self):
        assert relative_error_E([2], [2.4]) == 0.0

    def test_zero_target_unit_denominator(self):
        assert relative_error_E([0], [1.2]) == pytest.approx(100.0)

    def test_mixed(self):
        assert relative_error_E([4, 10], [2.6, 10.0]) == pytest.approx(12.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            relative_error_E([], [])

    def test_zero_iff_all_rounded_match(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            t = rng.integers(0, 10, size=8)
            y = t + rng.uniform(-0.49, 0.49, size=8)
            assert relative_error_E(t, y) == 0.0

    def test_permutation_invariant(self):
        t = [3, 0, 7, 2]
        y = [2.9, 1.0, 6.1, 2.2]
        perm = [2, 0, 3, 1]
        assert relative_error_E(t, y) == pytest.approx(
            relative_error_E([t[i] for i in perm], [y[i] for i in perm]))


class TestAbsErrorHist:
    def test_perfect(self):
        assert abs_error_hist([1, 2], [1.1, 2.0]) == {0: 1.0}

    def test_mixed(self):
        hist = abs_error_hist([3, 3, 3, 3], [3, 3, 4, 1])
        assert hist == {0: 0.5, 1: 0.25, 2: 0.25}

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        t = rng.integers(0, 15, size=200)
        y = rng.uniform(-1, 16, size=200)
        hist = abs_error_hist(t, y)
        tally = {}
        for ti, yi in zip(t, y):
            e = abs(int(ti) - round_count(yi))
            tally[e] = tally.get(e, 0) + 1
        assert hist == {e: c / 200 for e, c in tally.items()}

    def test_frequencies_sum_to_one(self):
        rng = np.random.default_rng(2)
        hist = abs_error_hist(rng.integers(0, 9, 100), rng.uniform(0, 9, 100))
        assert sum(hist.values()) == pytest.approx(1.0, abs=1e-9)


class TestMae:
    def test_exact(self):
        assert mae([2], [1.5]) == 0.5

    def test_zero(self):
        assert mae([1, 2, 3], [1, 2, 3]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mae([1], [1, 2])


class _ConstModel:
    def __init__(self, value):
        self.value = value

    def forward(self, x):
        return self.value


class _Sample:
    def __init__(self, target):
        self._target = target

    def tensor(self):
        return np.zeros((1,))

    def target(self, mode):
        return self._target


class TestEvaluate:
    def test_constant_model_on_matching_target(self):
        report = evaluate(_ConstModel(3.0), [_Sample(3)])
        assert report.relative_error_pct == 0.0
        assert report.mae == 0.0
        assert report.abs_error_hist == {0: 1.0}

    def test_empty_test_set(self):
        with pytest.raises(ValueError):
            evaluate(_ConstModel(1.0), [])

    def test_report_matches_hand_computation(self):
        samples = [_Sample(t) for t in (2, 4, 0)]
        report = evaluate(_ConstModel(2.2), samples)
        # rounded prediction 2: errors |2-2|/2, |4-2|/4, |0-2|/1
        assert report.relative_error_pct == pytest.approx(100 * (0 + 0.5 + 2) / 3)
        assert report.mae == pytest.approx((0.2 + 1.8 + 2.2) / 3)
        assert report.abs_error_hist == {0: 1 / 3, 2: 2 / 3}

    def test_write_report(self, tmp_path):
        report = EvalReport(5.0, 0.25, {0: 0.75, 1: 0.25}, 4)
        jp, cp = tmp_path / "eval.json", tmp_path / "eval.csv"
        write_report(report, jp, cp)
        data = json.loads(jp.read_text())
        assert data["mae"] == 0.25
        assert cp.read_text().splitlines()[0] == "abs_error,frequency"
