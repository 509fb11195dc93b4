"""Corpus CSV, run configuration, result tables and model persistence.

Corpus files have the header ``series_id,t,y,x1,...,xm``: one row per time
step, each series' rows contiguous with consecutive integer ``t``.

Run configurations are JSON documents (``format_version`` 1)::

    {
      "format_version": 1,
      "spec": {"p": 2, "S": 12, "P": 1, "Q": [2], "K": 10},
      "model": {"kind": "sedx", "hidden": 17, "layers": 1,
                "feed_context": true, "include_encoder0_context": true},
      "train": {"batch_size": 64, "learning_rate": 0.002, "epochs": 40, "seed": 0},
      "eval": {"test_len": 100, "val_len": 100, "metric": "mase"},
      "grouping": {"E_th": 0.3, "max_rounds": 10, "fallback": "sarx"},
      "synthesis": {"psi": [0.5, -0.2], "Psi": [0.8], "exog_coef": 0.5,
                    "sigma": 0.05, "length": 1500, "n_series": 1}
    }

Every block and key is optional; missing values take the defaults below.
``eval.test_len`` and ``eval.val_len`` count time points of the terminal
test and validation regions.

Model and registry files are ``.npz`` archives: parameter tensors stored
under their names plus a JSON ``__meta__`` record (format, version, run
configuration echo, estimator parameters, scaling, training fingerprint).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import NoiseSpec, SarxCoeffs, expand_multiplicative, n_lag_slots, synthesize_sarx
from .estimators import BEDXForecaster, CopyPreviousForecaster, SARXForecaster, SEDXForecaster
from .exceptions import ConfigurationError, ParseError
from .grouping import ModelRegistry, RegistryEntry
from .metrics import total_variation
from .network import SedxParams
from .scaling import ScaleParams
from .training import TrainReport
from .windowing import SeasonalSpec, TimeSeries

FORMAT_VERSION = 1
MODEL_KINDS = {"sedx": SEDXForecaster, "bedx": BEDXForecaster, "sarx": SARXForecaster,
               "copy_previous": CopyPreviousForecaster}

DEFAULTS = {
    "spec": {"p": 2, "S": 12, "P": 1, "Q": [2], "K": 0},
    "model": {"kind": "sedx", "hidden": 7, "layers": 1, "feed_context": True, "include_encoder0_context": True},
    "train": {"batch_size": 64, "learning_rate": 0.002, "epochs": 40, "seed": 0, "shuffle": True,
              "deterministic": True},
    "eval": {"test_len": 24, "val_len": 24, "metric": "mase", "mase_lag": None, "per_step_lag": False},
    "grouping": {"E_th": 0.3, "max_rounds": 10, "fallback": "sarx", "metric": "mase"},
    "synthesis": {"psi": [0.5, -0.2], "Psi": [0.8], "n_exog": 1, "exog_coef": 0.5, "exog_smoothing": 5, "sigma": 0.05,
                  "length": 1500, "n_series": 1, "scale_range": [1.0, 1.0], "offset_range": [0.0, 0.0],
                  "seed": 0},
}


# ---------------------------------------------------------------- corpus

def load_corpus(path) -> list[TimeSeries]:
    """Parse and validate a corpus CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", row=1) from None
        if header[:3] != ["series_id", "t", "y"]:
            raise ParseError(f"header must start with series_id,t,y; got {','.join(header)}", row=1)
        width = len(header)
        series: dict[str, tuple[list, list]] = {}
        order: list[str] = []
        last_id, last_t = None, None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} cells, found {len(row)}", row=lineno)
            if any(c.strip() == "" for c in row):
                raise ParseError("missing cell", row=lineno)
            sid = row[0].strip()
            try:
                t = int(row[1])
                vals = [float(c) for c in row[2:]]
            except ValueError as exc:
                raise ParseError(f"non-numeric cell ({exc})", row=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite value", row=lineno)
            if sid != last_id:
                if sid in series:
                    raise ParseError(f"rows of series {sid!r} are not contiguous", row=lineno)
                series[sid] = ([], [])
                order.append(sid)
            elif t != last_t + 1:
                raise ParseError(f"t jumps from {last_t} to {t} in series {sid!r} (t must be contiguous)", row=lineno)
            series[sid][0].append(vals[0])
            series[sid][1].append(vals[1:])
            last_id, last_t = sid, t
    if not order:
        raise ParseError("no data rows", row=2)
    m = width - 3
    return [TimeSeries(sid, np.array(series[sid][0]), np.array(series[sid][1], dtype=float).reshape(len(series[sid][0]), m))
            for sid in order]


def write_corpus(corpus, path) -> None:
    corpus = list(corpus)
    m = corpus[0].n_exog if corpus else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["series_id", "t", "y"] + [f"x{j + 1}" for j in range(m)])
        for ts in corpus:
            for t in range(len(ts)):
                w.writerow([ts.id, t, repr(float(ts.y[t]))] + [repr(float(v)) for v in ts.x[t]])


def rank_by_total_variation(corpus, top_fraction: float) -> list[TimeSeries]:
    """Keep the ``top_fraction`` of sequences with the largest total variation
    (descending; ties by series id)."""
    if not 0.0 <= top_fraction <= 1.0:
        raise ConfigurationError("top_fraction must lie in [0, 1]")
    corpus = list(corpus)
    ranked = sorted(corpus, key=lambda ts: (-total_variation(ts.y), ts.id))
    n = int(round(top_fraction * len(corpus)))
    return ranked[:n]


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    spec: SeasonalSpec
    model: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)
    grouping: dict = field(default_factory=dict)
    synthesis: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw or {})
        version = raw.pop("format_version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise ConfigurationError(f"unsupported config format_version {version}")
        unknown = set(raw) - set(DEFAULTS)
        if unknown:
            raise ConfigurationError(f"unknown config blocks: {', '.join(sorted(unknown))}")
        merged = {}
        for block, defaults in DEFAULTS.items():
            given = raw.get(block) or {}
            extra = set(given) - set(defaults)
            if extra:
                raise ConfigurationError(f"unknown keys in {block!r}: {', '.join(sorted(extra))}")
            merged[block] = {**defaults, **given}
        spec = SeasonalSpec(**merged.pop("spec"))
        cfg = cls(spec, **merged)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.model["kind"] not in MODEL_KINDS:
            raise ConfigurationError(f"unknown model kind {self.model['kind']!r}")
        if self.eval["test_len"] < self.spec.horizon:
            raise ConfigurationError(f"eval.test_len={self.eval['test_len']} shorter than the horizon K+1")
        if self.eval["metric"] not in ("mase", "mape"):
            raise ConfigurationError("eval.metric must be mase or mape")

    def to_dict(self) -> dict:
        return {"format_version": FORMAT_VERSION, "spec": self.spec.to_dict(), "model": dict(self.model),
                "train": dict(self.train), "eval": dict(self.eval), "grouping": dict(self.grouping),
                "synthesis": dict(self.synthesis)}

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        d = self.to_dict()
        d["train"]["seed"] = seed
        d["synthesis"]["seed"] = seed
        return RunConfig.from_dict(d)

    def make_estimator(self):
        s, m, t = self.spec, self.model, self.train
        kind = m["kind"]
        if kind == "sedx":
            return SEDXForecaster(s.p, s.S, s.P, tuple(s.Q), s.K, m["hidden"], m["layers"], m["feed_context"],
                                  m["include_encoder0_context"], t["batch_size"], t["learning_rate"], t["epochs"],
                                  self.eval["val_len"], t["seed"], t["shuffle"], t["deterministic"])
        if kind == "bedx":
            return BEDXForecaster(s.p, s.S, s.K, m["hidden"], m["layers"], m["feed_context"], t["batch_size"],
                                  t["learning_rate"], t["epochs"], self.eval["val_len"], t["seed"], t["shuffle"],
                                  t["deterministic"])
        if kind == "sarx":
            return SARXForecaster(s.p, s.S, s.P, tuple(s.Q), s.K)
        return CopyPreviousForecaster(s.K)


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return RunConfig.from_dict(raw)


def synthesize_corpus(rc: RunConfig) -> list[TimeSeries]:
    """Draw ``n_series`` sequences from the multiplicative SARX process of
    the ``synthesis`` block.

    The exogenous input is Gaussian noise smoothed by an ``exog_smoothing``
    point moving average and enters through ``exog_coef * x(t)``. Each series
    is then mapped to ``scale * y + offset`` with scale and offset drawn
    uniformly from their ranges.
    """
    syn, spec = rc.synthesis, rc.spec
    base = expand_multiplicative(syn["psi"], syn["Psi"], spec)
    m = int(syn["n_exog"])
    c = None
    if m:
        c = np.zeros((n_lag_slots(spec) + 1, m))
        c[0, :] = syn["exog_coef"]
    coeffs = SarxCoeffs(base.a, base.b, c, 0.0)
    width = max(int(syn["exog_smoothing"]), 1)

    def exog(rng, n, cols):
        raw = rng.standard_normal((n + width - 1, cols))
        kernel = np.ones(width) / width
        return np.column_stack([np.convolve(raw[:, j], kernel, "valid") for j in range(cols)])

    out = []
    children = np.random.SeedSequence(syn["seed"]).spawn(int(syn["n_series"]))
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        ts = synthesize_sarx(coeffs, spec, NoiseSpec(syn["sigma"]), int(syn["length"]), exog, n_exog=m,
                             seed=rng, series_id=f"s{i:03d}")
        scale = rng.uniform(*syn["scale_range"])
        offset = rng.uniform(*syn["offset_range"])
        out.append(TimeSeries(ts.id, scale * ts.y + offset, ts.x))
    return out


# ---------------------------------------------------------------- results

RESULT_HEADER = ["series_id", "window_anchor", "mase", "mape"]


def write_results(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_HEADER)
        for r in rows:
            sid, anchor, mase, mape = r.row() if hasattr(r, "row") else r
            w.writerow([sid, int(anchor), f"{mase:.12g}", f"{mape:.12g}"])


def read_results(path) -> list[tuple[str, int, float, float]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULT_HEADER:
            raise ParseError(f"result file must have header {','.join(RESULT_HEADER)}", row=1)
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append((row[0], int(row[1]), float(row[2]), float(row[3])))
            except (ValueError, IndexError):
                raise ParseError("malformed result row", row=lineno) from None
    return out


def write_key_values(pairs, path=None) -> str:
    text = "".join(f"{k}={v}\n" for k, v in pairs)
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------- models

def _kind_of(model) -> str:
    for kind, cls in MODEL_KINDS.items():
        if type(model) is cls:
            return kind
    raise ConfigurationError(f"cannot persist {type(model).__name__}")


def _json_params(model) -> dict:
    params = model.get_params()
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()}


def _model_payload(model, prefix: str = "") -> tuple[dict, dict]:
    kind = _kind_of(model)
    meta = {"kind": kind, "estimator_params": _json_params(model)}
    arrays = {}
    if kind in ("sedx", "bedx"):
        meta["network"] = model.params_.config()
        meta["n_exog"] = model.n_exog_
        meta["series_ids"] = list(model.series_ids_)
        meta["scale_params"] = {sid: sp.to_dict() for sid, sp in model.scale_params_.items()}
        meta["validation_errors"] = model.validation_errors_
        meta["fingerprint"] = {"seed": model.seed, **model.report_.history()}
        for name, arr in model.params_.named_arrays():
            arrays[f"{prefix}param/{name}"] = arr
    elif kind == "sarx":
        c = model.coeffs_
        meta["n_exog"] = model.n_exog_
        meta["sarx"] = {"b_sizes": [int(r.size) for r in c.b], "residual_variance": c.residual_variance}
        arrays[f"{prefix}sarx/intercept"] = np.array([c.intercept])
        arrays[f"{prefix}sarx/a"] = c.a
        for i, row in enumerate(c.b):
            arrays[f"{prefix}sarx/b{i}"] = row
        if c.c is not None:
            arrays[f"{prefix}sarx/c"] = np.asarray(c.c)
    return meta, arrays


def _model_from_payload(meta: dict, arrays, prefix: str = ""):
    cls = MODEL_KINDS[meta["kind"]]
    model = cls(**{k: (tuple(v) if k == "Q" else v) for k, v in meta["estimator_params"].items()})
    if meta["kind"] in ("sedx", "bedx"):
        params = SedxParams.from_config(meta["network"])
        params.load_arrays({name: arrays[f"{prefix}param/{name}"] for name, _ in params.named_arrays()})
        model.params_ = params
        model.n_exog_ = meta["n_exog"]
        model.series_ids_ = meta["series_ids"]
        model.scale_params_ = {sid: ScaleParams.from_dict(d) for sid, d in meta["scale_params"].items()}
        model.validation_errors_ = meta.get("validation_errors", {})
        fp = meta.get("fingerprint", {})
        model.report_ = TrainReport(fp.get("train_loss", []), fp.get("val_mase", []), fp.get("val_mape", []),
                                    0.0, fp.get("best_epoch", -1), fp.get("epochs_completed", 0))
    elif meta["kind"] == "sarx":
        b = [arrays[f"{prefix}sarx/b{i}"] for i in range(len(meta["sarx"]["b_sizes"]))]
        c = arrays[f"{prefix}sarx/c"] if f"{prefix}sarx/c" in arrays else None
        model.coeffs_ = SarxCoeffs(arrays[f"{prefix}sarx/a"], b, c, float(arrays[f"{prefix}sarx/intercept"][0]),
                                   meta["sarx"]["residual_variance"])
        model.n_exog_ = meta["n_exog"]
    else:
        model.fitted_ = True
    return model


def _write_npz(path, meta: dict, arrays: dict) -> None:
    payload = dict(arrays)
    payload["__meta__"] = np.array(json.dumps(meta, sort_keys=True, allow_nan=True))
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def _read_npz(path, expected_format: str):
    with np.load(path, allow_pickle=False) as data:
        arrays = {k: data[k] for k in data.files}
    meta = json.loads(str(arrays.pop("__meta__")))
    if meta.get("format") != expected_format:
        raise ConfigurationError(f"{path} is not a {expected_format} file")
    if meta.get("format_version") != FORMAT_VERSION:
        raise ConfigurationError(f"{path}: unsupported format_version {meta.get('format_version')}")
    return meta, arrays


def save_model(model, path, run_config: RunConfig | None = None) -> None:
    meta, arrays = _model_payload(model)
    meta.update({"format": "sedx-model", "format_version": FORMAT_VERSION,
                 "run_config": None if run_config is None else run_config.to_dict()})
    _write_npz(path, meta, arrays)


def load_model(path):
    """Returns ``(model, run_config or None)``."""
    meta, arrays = _read_npz(path, "sedx-model")
    rc = meta.get("run_config")
    return _model_from_payload(meta, arrays), (None if rc is None else RunConfig.from_dict(rc))


def save_registry(registry: ModelRegistry, path, run_config: RunConfig | None = None) -> None:
    meta = {"format": "sedx-registry", "format_version": FORMAT_VERSION,
            "run_config": None if run_config is None else run_config.to_dict(),
            "scale_params": {sid: sp.to_dict() for sid, sp in registry.scale_params.items()},
            "entries": []}
    arrays = {}
    for i, e in enumerate(registry.entries):
        m_meta, m_arrays = _model_payload(e.model, prefix=f"entry{i}/")
        meta["entries"].append({"model": m_meta, "covered_ids": sorted(e.covered_ids), "round": e.round,
                                "kind": e.kind, "errors": e.errors})
        arrays.update(m_arrays)
    _write_npz(path, meta, arrays)


def load_registry(path):
    meta, arrays = _read_npz(path, "sedx-registry")
    reg = ModelRegistry(scale_params={sid: ScaleParams.from_dict(d) for sid, d in meta["scale_params"].items()})
    for i, e in enumerate(meta["entries"]):
        model = _model_from_payload(e["model"], arrays, prefix=f"entry{i}/")
        reg.entries.append(RegistryEntry(model, frozenset(e["covered_ids"]), e["round"], e["kind"], e["errors"]))
    rc = meta.get("run_config")
    return reg, (None if rc is None else RunConfig.from_dict(rc))
