import numpy as np
import pytest

from sedx.estimators import CopyPreviousForecaster
from sedx.evaluation import evaluate_series, holdout_anchors, per_sequence_means
from sedx.exceptions import ConfigurationError
from sedx.windowing import SeasonalSpec, TimeSeries


@pytest.mark.parametrize("test_points,width,expected", [(33, 28, 6), (15, 10, 6), (10, 10, 1), (24, 1, 24)])
def test_window_counts(test_points, width, expected):
    spec = SeasonalSpec(2, max(width + 1, 3), 0, (), width - 1)
    anchors = holdout_anchors(400, spec, test_points)
    assert len(anchors) == expected
    assert anchors[0] == 400 - test_points
    assert anchors[-1] + spec.K == 399


def test_region_shorter_than_horizon():
    with pytest.raises(ConfigurationError):
        holdout_anchors(100, SeasonalSpec(2, 12, 0, (), 9), 8)


def test_copy_previous_evaluation_by_hand():
    y = np.array([1.0, 2.0, 4.0, 7.0, 11.0, 10.0, 12.0, 15.0])
    spec = SeasonalSpec(1, 3, 0, (), 1)
    res = evaluate_series(CopyPreviousForecaster(1), TimeSeries("a", y), spec, test_points=3)
    # reference y[:5] has lag-2 differences 3, 5, 7 -> scale 5
    assert [r.window_anchor for r in res] == [5, 6]
    assert res[0].mase == pytest.approx(((1.0 + 1.0) / 2) / 5.0)
    assert res[1].mase == pytest.approx(((2.0 + 5.0) / 2) / 5.0)
    assert res[0].mape == pytest.approx(50 * (1 / 10 + 1 / 12))


def test_zero_actual_gives_nan_mape():
    y = np.array([1.0, 2.0, 4.0, 7.0, 11.0, 0.0, 12.0])
    spec = SeasonalSpec(1, 3, 0, (), 0)
    res = evaluate_series(CopyPreviousForecaster(0), TimeSeries("a", y), spec, test_points=2)
    assert np.isnan(res[0].mape) and np.isfinite(res[1].mape)
    means = per_sequence_means(res)["a"]
    assert means["windows"] == 2 and means["mape_windows"] == 1
    assert means["mape"] == pytest.approx(res[1].mape)
