import json

import numpy as np
import pytest

from sedx import fileio
from sedx.estimators import BEDXForecaster, CopyPreviousForecaster, SARXForecaster, SEDXForecaster
from sedx.exceptions import ConfigurationError, ParseError
from sedx.grouping import GroupingConfig, model_recursive
from sedx.windowing import TimeSeries


def _write(tmp_path, text):
    path = tmp_path / "c.csv"
    path.write_text(text)
    return path


class TestCorpus:
    def test_two_series(self, tmp_path):
        path = _write(tmp_path, "series_id,t,y,x1\na,0,1.0,0.5\na,1,2.0,0.6\nb,0,3.0,0.7\nb,1,4.0,0.8\nb,2,5.0,0.9\n")
        corpus = fileio.load_corpus(path)
        assert [ts.id for ts in corpus] == ["a", "b"]
        np.testing.assert_array_equal(corpus[1].y, [3.0, 4.0, 5.0])
        np.testing.assert_array_equal(corpus[0].x[:, 0], [0.5, 0.6])

    def test_no_exogenous(self, tmp_path):
        corpus = fileio.load_corpus(_write(tmp_path, "series_id,t,y\na,0,1\na,1,2\n"))
        assert corpus[0].n_exog == 0 and corpus[0].x.shape == (2, 0)

    def test_gap_names_row(self, tmp_path):
        with pytest.raises(ParseError) as exc:
            fileio.load_corpus(_write(tmp_path, "series_id,t,y\na,0,1\na,1,2\na,3,4\n"))
        assert exc.value.row == 4 and "row 4" in str(exc.value)

    @pytest.mark.parametrize("text,row", [
        ("id,t,y\na,0,1\n", 1),
        ("series_id,t,y\na,0,1,2\n", 2),
        ("series_id,t,y\na,0,\n", 2),
        ("series_id,t,y\na,0,1\na,1,abc\n", 3),
        ("series_id,t,y\na,0,nan\n", 2),
        ("series_id,t,y\na,0,1\nb,0,1\na,1,1\n", 4),
        ("", 1),
        ("series_id,t,y\n", 2),
    ])
    def test_malformed(self, tmp_path, text, row):
        with pytest.raises(ParseError) as exc:
            fileio.load_corpus(_write(tmp_path, text))
        assert exc.value.row == row

    def test_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        corpus = [TimeSeries(f"s{i}", rng.standard_normal(17), rng.standard_normal((17, 2))) for i in range(3)]
        fileio.write_corpus(corpus, tmp_path / "out.csv")
        back = fileio.load_corpus(tmp_path / "out.csv")
        for a, b in zip(corpus, back):
            assert a.id == b.id
            np.testing.assert_array_equal(a.y, b.y)
            np.testing.assert_array_equal(a.x, b.x)


class TestRanking:
    CORPUS = [TimeSeries("a", np.array([0.0, 3.0])), TimeSeries("b", np.array([0.0, 1.0])),
              TimeSeries("c", np.array([0.0, 2.0]))]

    def test_top_third(self):
        assert [ts.id for ts in fileio.rank_by_total_variation(self.CORPUS, 1 / 3)] == ["a"]

    def test_all_and_none(self):
        assert [ts.id for ts in fileio.rank_by_total_variation(self.CORPUS, 1.0)] == ["a", "c", "b"]
        assert fileio.rank_by_total_variation(self.CORPUS, 0.0) == []

    def test_ties_by_id(self):
        corpus = [TimeSeries("z", np.array([0.0, 1.0])), TimeSeries("y", np.array([1.0, 0.0]))]
        assert [ts.id for ts in fileio.rank_by_total_variation(corpus, 1.0)] == ["y", "z"]

    def test_bad_fraction(self):
        with pytest.raises(ConfigurationError):
            fileio.rank_by_total_variation(self.CORPUS, 1.5)


class TestConfig:
    def test_defaults(self):
        rc = fileio.RunConfig.from_dict({})
        assert rc.spec.S == 12 and rc.model["kind"] == "sedx"
        assert fileio.RunConfig.from_dict(rc.to_dict()).to_dict() == rc.to_dict()

    @pytest.mark.parametrize("raw", [
        {"format_version": 2},
        {"extra": {}},
        {"model": {"hiden": 3}},
        {"model": {"kind": "lstm"}},
        {"spec": {"p": 2, "S": 12, "P": 1, "Q": [2], "K": 12}},
        {"spec": {"K": 5}, "eval": {"test_len": 3}},
        {"eval": {"metric": "rmse"}},
    ])
    def test_rejected(self, raw):
        with pytest.raises(ConfigurationError):
            fileio.RunConfig.from_dict(raw)

    def test_load_and_seed_override(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"train": {"seed": 3}, "model": {"kind": "bedx"}}))
        rc = fileio.load_config(path)
        assert rc.train["seed"] == 3
        assert rc.with_seed(11).train["seed"] == 11 and rc.with_seed(11).synthesis["seed"] == 11
        assert isinstance(rc.make_estimator(), BEDXForecaster)
        path.write_text("{not json")
        with pytest.raises(ConfigurationError):
            fileio.load_config(path)

    def test_estimator_kinds(self):
        for kind, cls in fileio.MODEL_KINDS.items():
            assert type(fileio.RunConfig.from_dict({"model": {"kind": kind}}).make_estimator()) is cls


class TestSynthesis:
    def test_reproducible_and_shaped(self):
        rc = fileio.RunConfig.from_dict({"synthesis": {"n_series": 3, "length": 200, "scale_range": [1, 4],
                                                       "offset_range": [-2, 2]}})
        a, b = fileio.synthesize_corpus(rc), fileio.synthesize_corpus(rc)
        assert [ts.id for ts in a] == ["s000", "s001", "s002"]
        for u, v in zip(a, b):
            np.testing.assert_array_equal(u.y, v.y)
            assert u.y.shape == (200,) and u.x.shape == (200, 1)
        assert not np.array_equal(a[0].y, a[1].y)
        c = fileio.synthesize_corpus(rc.with_seed(5))
        assert not np.array_equal(a[0].y, c[0].y)


def _series(seed=0, T=80):
    rng = np.random.default_rng(seed)
    t = np.arange(T)
    x = rng.standard_normal((T, 1))
    return TimeSeries(f"q{seed}", 3 + np.sin(2 * np.pi * t / 6) + 0.3 * x[:, 0] + 0.1 * rng.standard_normal(T), x)


def _fitted_models():
    ts = _series()
    return {
        "sedx": SEDXForecaster(2, 6, 1, (2,), 1, hidden=3, epochs=2, val_len=10).fit(ts),
        "bedx": BEDXForecaster(2, 6, 1, hidden=3, epochs=2, val_len=10).fit(ts),
        "sarx": SARXForecaster(2, 6, 1, (2,), 1).fit(ts),
        "copy_previous": CopyPreviousForecaster(1).fit(ts),
    }


class TestModelFiles:
    @pytest.mark.parametrize("kind", sorted(fileio.MODEL_KINDS))
    def test_round_trip_bit_exact(self, tmp_path, kind):
        model = _fitted_models()[kind]
        rc = fileio.RunConfig.from_dict({"model": {"kind": kind}})
        fileio.save_model(model, tmp_path / "m.npz", rc)
        back, rc_back = fileio.load_model(tmp_path / "m.npz")
        assert type(back) is type(model)
        assert back.get_params() == model.get_params()
        assert rc_back.to_dict() == rc.to_dict()
        ts = _series()
        anchors = [60, 65, 70]
        np.testing.assert_array_equal(back.predict_windows(ts, anchors), model.predict_windows(ts, anchors))
        other = _series(seed=3)
        np.testing.assert_array_equal(back.predict_windows(other, anchors), model.predict_windows(other, anchors))

    def test_wrong_format(self, tmp_path):
        np.savez(tmp_path / "x.npz", __meta__=np.array(json.dumps({"format": "other"})))
        with pytest.raises(ConfigurationError):
            fileio.load_model(tmp_path / "x.npz")

    def test_registry_round_trip(self, tmp_path):
        corpus = [_series(i) for i in range(3)]
        corpus.append(TimeSeries("flat", np.full(80, 2.0), np.zeros((80, 1))))
        est = SEDXForecaster(2, 6, 1, (2,), 1, hidden=2, epochs=1, val_len=10)
        reg = model_recursive(corpus, est, GroupingConfig(E_th=0.8, max_rounds=2))
        fileio.save_registry(reg, tmp_path / "r.npz")
        back, rc = fileio.load_registry(tmp_path / "r.npz")
        assert rc is None
        assert [(e.kind, e.round, e.covered_ids) for e in back.entries] == \
               [(e.kind, e.round, e.covered_ids) for e in reg.entries]
        for ts in corpus:
            np.testing.assert_array_equal(back.predict_windows(ts, [66, 70]), reg.predict_windows(ts, [66, 70]))
        with pytest.raises(ConfigurationError):
            fileio.load_model(tmp_path / "r.npz")


class TestResults:
    def test_round_trip(self, tmp_path):
        rows = [("a", 10, 0.5, 12.25), ("b", 11, 1.0, float("nan"))]
        fileio.write_results(rows, tmp_path / "r.csv")
        back = fileio.read_results(tmp_path / "r.csv")
        assert back[0] == ("a", 10, 0.5, 12.25)
        assert np.isnan(back[1][3])

    def test_bad_header(self, tmp_path):
        (tmp_path / "r.csv").write_text("a,b\n")
        with pytest.raises(ParseError):
            fileio.read_results(tmp_path / "r.csv")

    def test_key_values(self, tmp_path):
        assert fileio.write_key_values([("a", 1), ("b", "x")], tmp_path / "kv") == "a=1\nb=x\n"
