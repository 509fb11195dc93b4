import numpy as np
import pytest

from _oracles import brute_force_window, random_spec
from sedx.exceptions import ConfigurationError, WindowRangeError
from sedx.windowing import (
    SeasonalSpec,
    TimeSeries,
    WindowBatch,
    assemble_window,
    build_batch,
    encoder_indices,
    enumerate_windows,
    feasible_range,
    holdout_split,
    region_window_count,
    split_train_validation_test,
)


def _indexed_series(T, m=1):
    """y(tau) = tau and x_j(tau) = 100 * (j + 1) + tau, so values reveal indices."""
    y = np.arange(T, dtype=float)
    x = np.column_stack([100.0 * (j + 1) + np.arange(T) for j in range(m)]) if m else None
    return TimeSeries("s", y, x)


class TestSeasonalSpec:
    def test_horizon_and_history(self):
        spec = SeasonalSpec(2, 4, 1, (1,), 1)
        assert spec.horizon == 2
        assert spec.min_history == 5

    @pytest.mark.parametrize("kwargs", [
        dict(p=0, S=4, P=0, Q=(), K=0),
        dict(p=2, S=4, P=1, Q=(), K=0),
        dict(p=2, S=4, P=1, Q=(0,), K=0),
        dict(p=2, S=4, P=1, Q=(1,), K=4),
        dict(p=2, S=4, P=-1, Q=(), K=0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            SeasonalSpec(**kwargs)

    def test_without_seasonality(self):
        spec = SeasonalSpec(3, 12, 2, (2, 3), 5).without_seasonality()
        assert (spec.P, spec.Q, spec.p, spec.K) == (0, (), 3, 5)


class TestAssembleWindow:
    def test_worked_example_length_11(self):
        ts = _indexed_series(11)
        spec = SeasonalSpec(2, 4, 1, (1,), 1)
        w = assemble_window(ts, spec, 9)
        np.testing.assert_array_equal(w.encoder_inputs[0][:, 1], [7, 8])
        np.testing.assert_array_equal(w.encoder_inputs[1][:, 1], [4])
        np.testing.assert_array_equal(w.decoder_inputs, [[109, 105, 5], [110, 106, 6]])
        np.testing.assert_array_equal(w.targets, [9, 10])

    def test_worked_example_short_period(self):
        ts = _indexed_series(6)
        spec = SeasonalSpec(1, 2, 1, (1,), 0)
        w = assemble_window(ts, spec, 3)
        np.testing.assert_array_equal(w.encoder_inputs[0], [[102, 2]])
        np.testing.assert_array_equal(w.encoder_inputs[1], [[100, 0]])
        np.testing.assert_array_equal(w.decoder_inputs, [[103, 101, 1]])
        np.testing.assert_array_equal(w.targets, [3])

    def test_no_exogenous(self):
        ts = _indexed_series(40, m=0)
        spec = SeasonalSpec(2, 6, 3, (1, 2, 1), 2)
        w = assemble_window(ts, spec, 30)
        assert w.decoder_inputs.shape == (3, 3)
        for k in range(3):
            np.testing.assert_array_equal(w.decoder_inputs[k], [30 + k - 6, 30 + k - 12, 30 + k - 18])

    @pytest.mark.parametrize("seed", range(50))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        p, S, P, Q, K = random_spec(rng)
        spec = SeasonalSpec(p, S, P, Q, K)
        m = int(rng.integers(0, 3))
        T = spec.min_history + K + int(rng.integers(1, 10))
        y = rng.standard_normal(T)
        x = rng.standard_normal((T, m))
        ts = TimeSeries("r", y, x)
        t = int(rng.integers(spec.min_history, T - K))
        w = assemble_window(ts, spec, t)
        enc, dec, tgt = brute_force_window(y, x if m else None, p, S, P, Q, K, t)
        for a, b in zip(w.encoder_inputs, enc):
            np.testing.assert_array_equal(a, np.array(b).reshape(a.shape))
        np.testing.assert_array_equal(w.decoder_inputs, np.array(dec).reshape(w.decoder_inputs.shape))
        np.testing.assert_array_equal(w.targets, tgt)

    def test_insufficient_history(self):
        spec = SeasonalSpec(2, 4, 1, (1,), 1)
        with pytest.raises(WindowRangeError) as exc:
            assemble_window(_indexed_series(11), spec, 4)
        assert exc.value.bound == "history"

    def test_horizon_past_end(self):
        spec = SeasonalSpec(2, 4, 1, (1,), 1)
        with pytest.raises(WindowRangeError) as exc:
            assemble_window(_indexed_series(11), spec, 10)
        assert exc.value.bound == "horizon"

    def test_encoder_indices(self):
        spec = SeasonalSpec(3, 12, 2, (2, 4), 0)
        idx = encoder_indices(spec, 50)
        assert [list(i) for i in idx] == [[47, 48, 49], [36, 37], [22, 23, 24, 25]]


class TestEnumerate:
    def test_worked_example_count(self):
        spec = SeasonalSpec(2, 4, 1, (1,), 1)
        wins = enumerate_windows(_indexed_series(11), spec)
        assert [w.anchor_t for w in wins] == [5, 6, 7, 8, 9]

    def test_too_short_is_empty(self):
        spec = SeasonalSpec(2, 4, 1, (1,), 1)
        assert enumerate_windows(_indexed_series(6), spec) == []
        assert len(feasible_range(spec, 6)) == 0

    def test_batch_matches_single_windows(self):
        rng = np.random.default_rng(0)
        ts = TimeSeries("a", rng.standard_normal(60), rng.standard_normal((60, 2)))
        spec = SeasonalSpec(3, 7, 2, (2, 3), 4)
        anchors = list(feasible_range(spec, 60))
        batch = build_batch(ts, spec, anchors)
        for i, t in enumerate(anchors):
            w = assemble_window(ts, spec, t)
            ex = batch.example(i)
            for a, b in zip(ex.encoder_inputs, w.encoder_inputs):
                np.testing.assert_array_equal(a, b)
            np.testing.assert_array_equal(ex.decoder_inputs, w.decoder_inputs)

    def test_concatenate_and_take(self):
        rng = np.random.default_rng(1)
        spec = SeasonalSpec(2, 4, 1, (2,), 1)
        a = build_batch(TimeSeries("a", rng.standard_normal(20)), spec, range(6, 10))
        b = build_batch(TimeSeries("b", rng.standard_normal(20)), spec, range(6, 8))
        both = WindowBatch.concatenate([a, b])
        assert len(both) == 6
        assert both.series_ids == ["a"] * 4 + ["b"] * 2
        sub = both.take([4, 0])
        np.testing.assert_array_equal(sub.targets[0], b.targets[0])
        np.testing.assert_array_equal(sub.targets[1], a.targets[0])


class TestSplits:
    def test_ten_anchor_example(self):
        spec = SeasonalSpec(1, 2, 0, (), 0)
        # feasible anchors 1..10 for a series of 11 points
        split = split_train_validation_test(11, spec, test_len=4, val_len=2)
        assert list(split.train) == [1, 2, 3, 4]
        assert list(split.validation) == [5, 6]
        assert list(split.test) == [7, 8, 9, 10]

    def test_all_anchors_to_test_is_error(self):
        spec = SeasonalSpec(1, 2, 0, (), 0)
        with pytest.raises(ConfigurationError):
            split_train_validation_test(11, spec, test_len=10, val_len=0)

    @pytest.mark.parametrize("K", [1, 3, 5])
    def test_no_target_leakage(self, K):
        spec = SeasonalSpec(2, 6, 1, (2,), K)
        split = split_train_validation_test(80, spec, test_len=7, val_len=5)
        last_train_target = split.train[-1] + K
        last_val_target = split.validation[-1] + K
        assert last_train_target < split.validation[0]
        assert last_val_target < split.test[0]
        assert split.test[-1] + K == 79

    def test_region_counts(self):
        assert region_window_count(33, SeasonalSpec(2, 30, 0, (), 27)) == 6
        assert region_window_count(15, SeasonalSpec(2, 12, 0, (), 9)) == 6
        assert region_window_count(5, SeasonalSpec(2, 12, 0, (), 9)) == 0

    def test_holdout_split_in_points(self):
        spec = SeasonalSpec(2, 12, 1, (2,), 3)
        split = holdout_split(200, spec, test_points=20, val_points=10)
        assert list(split.test) == list(range(180, 197))
        assert split.validation[-1] + 3 < 180
        assert len(split.validation) == 7
