import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from sedx.scaling import ScaleParams, SequenceMinMaxScaler, apply_scale, fit_scale, scale, unscale
from sedx.windowing import TimeSeries


def test_hand_case():
    scaled, params = scale(TimeSeries("a", np.array([2.0, 4.0, 6.0])))
    np.testing.assert_array_equal(scaled.y, [0.0, 0.5, 1.0])
    assert params.min[0] == 2.0 and params.max[0] == 6.0


def test_constant_channel():
    scaled, params = scale(TimeSeries("a", np.array([5.0, 5.0])))
    np.testing.assert_array_equal(scaled.y, [0.0, 0.0])
    np.testing.assert_array_equal(unscale([0.0, 0.0], params), [5.0, 5.0])


def test_channels_scaled_independently():
    ts = TimeSeries("a", np.array([0.0, 10.0]), np.array([[-1.0, 3.0], [1.0, 3.0]]))
    scaled, _ = scale(ts)
    np.testing.assert_array_equal(scaled.x, [[0.0, 0.0], [1.0, 0.0]])


def test_params_from_head_applied_to_whole_series():
    ts = TimeSeries("a", np.array([0.0, 2.0, 4.0, 8.0]))
    params = fit_scale(ts.head(3))
    np.testing.assert_array_equal(apply_scale(ts, params).y, [0.0, 0.5, 1.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=40))
def test_round_trip(values):
    y = np.array(values)
    scaled, params = scale(TimeSeries("a", y))
    assert np.all((scaled.y >= 0) & (scaled.y <= 1))
    np.testing.assert_allclose(unscale(scaled.y, params), y, rtol=1e-9, atol=1e-6)


def test_serialisation():
    params = ScaleParams([1.0, -2.0], [3.0, 5.0])
    again = ScaleParams.from_dict(params.to_dict())
    np.testing.assert_array_equal(again.min, params.min)
    np.testing.assert_array_equal(again.max, params.max)
    with pytest.raises(ValueError):
        ScaleParams([2.0], [1.0])


def test_sklearn_transformer():
    v = np.array([[1.0, 10.0], [3.0, 10.0], [2.0, 10.0]])
    sc = SequenceMinMaxScaler().fit(v)
    np.testing.assert_array_equal(sc.transform(v), [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]])
    np.testing.assert_array_equal(sc.inverse_transform(sc.transform(v))[:, 0], v[:, 0])
    assert sc.n_features_in_ == 2
    assert clone(sc).get_params() == {}
