"""Command-line entry point: ``sedx <command> [options]``.

Commands
--------
analyze   ACF / PACF table and total-variation summary per series
synth     write a synthetic corpus drawn from the configured SARX process
train     fit one model (or, with ``--grouped``, a background-model registry)
predict   forecast windows with a saved model or registry
evaluate  score a model on the terminal test region, or compare two result files
group     build a background-model registry

Tables are CSV with a header, summaries are ``key=value`` lines, and the
human-readable log goes to stderr. Validation failures exit with status 1,
usage errors with status 2.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from . import fileio
from .baselines import acf, pacf
from .estimators import CopyPreviousForecaster, SARXForecaster, SEDXForecaster
from .evaluation import evaluate_series, holdout_anchors, per_sequence_means
from .exceptions import SedxError
from .grouping import GroupingConfig, model_recursive
from .metrics import summarize, total_variation, welch_t

logger = logging.getLogger("sedx")


def _common(p: argparse.ArgumentParser, corpus=True):
    p.add_argument("--config", help="run configuration (JSON); defaults are used when omitted")
    p.add_argument("--seed", type=int, help="override train.seed and synthesis.seed")
    if corpus:
        p.add_argument("--corpus", required=True, help="corpus CSV: series_id,t,y,x1..xm")
        p.add_argument("--series", action="append", help="restrict to this series id (repeatable)")
        p.add_argument("--top-fraction", type=float, help="keep only the highest total-variation fraction")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sedx", description="Seasonal encoder-decoder forecasting toolkit")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="ACF/PACF/total-variation report")
    _common(p)
    p.add_argument("--max-lag", type=int, help="default: 2*S + p")
    p.add_argument("--out", required=True, help="CSV: series_id,lag,acf,pacf")
    p.add_argument("--summary", help="key=value summary file (also printed)")

    p = sub.add_parser("synth", help="synthetic SARX corpus")
    _common(p, corpus=False)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="fit a model on everything before the test region")
    _common(p)
    p.add_argument("--grouped", action="store_true", help="build a background-model registry instead")
    p.add_argument("--out", required=True, help="model (or registry) .npz file")

    p = sub.add_parser("predict", help="forecast with a saved model or registry")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--anchor", type=int, action="append",
                   help="first forecast index (repeatable); default: every test window")
    p.add_argument("--out", required=True, help="CSV: series_id,anchor,step,prediction")

    p = sub.add_parser("evaluate", help="score on the test region or compare result files")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--corpus")
    p.add_argument("--series", action="append")
    p.add_argument("--top-fraction", type=float)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="saved model or registry")
    src.add_argument("--method", choices=["copy_previous", "sarx"], help="baseline fitted on the fly")
    src.add_argument("--compare", nargs=2, metavar=("CANDIDATE", "BASELINE"), help="two result CSVs")
    p.add_argument("--names", nargs=2, default=["candidate", "baseline"], metavar=("CANDIDATE", "BASELINE"))
    p.add_argument("--out", required=True, help="result CSV, or the summary file with --compare")
    p.add_argument("--summary", help="key=value summary file (also printed)")

    p = sub.add_parser("group", help="background-model registry over a corpus")
    _common(p)
    p.add_argument("--out", required=True)
    return ap


# ---------------------------------------------------------------- helpers

def _config(args, fallback=None) -> fileio.RunConfig:
    if getattr(args, "config", None):
        rc = fileio.load_config(args.config)
    elif fallback is not None:
        rc = fallback
    else:
        rc = fileio.RunConfig.from_dict({})
    return rc.with_seed(getattr(args, "seed", None))


def _corpus(args):
    corpus = fileio.load_corpus(args.corpus)
    if args.series:
        known = {ts.id for ts in corpus}
        missing = [s for s in args.series if s not in known]
        if missing:
            raise SedxError(f"unknown series: {', '.join(missing)}")
        corpus = [ts for ts in corpus if ts.id in set(args.series)]
    if args.top_fraction is not None:
        corpus = fileio.rank_by_total_variation(corpus, args.top_fraction)
    for ts in corpus:
        logger.info("series %s: %d points, %d exogenous", ts.id, len(ts), ts.n_exog)
    return corpus


def _training_part(corpus, rc):
    test_len = rc.eval["test_len"]
    out = []
    for ts in corpus:
        if len(ts) <= test_len:
            raise SedxError(f"series {ts.id!r} ({len(ts)} points) is not longer than eval.test_len={test_len}")
        out.append(ts.head(len(ts) - test_len))
    return out


def _emit(pairs, path=None):
    text = fileio.write_key_values(pairs, path)
    sys.stdout.write(text)


def _load_any(path):
    """A saved model or registry, plus its stored run configuration."""
    try:
        return fileio.load_model(path)
    except SedxError:
        return fileio.load_registry(path)


def _group(corpus, rc):
    est = rc.make_estimator()
    if not isinstance(est, SEDXForecaster):
        raise SedxError("grouping needs an encoder-decoder model kind (sedx or bedx)")
    g = rc.grouping
    return model_recursive(corpus, est, GroupingConfig(g["E_th"], g["metric"], g["max_rounds"], g["fallback"]))


# ---------------------------------------------------------------- commands

def cmd_analyze(args) -> int:
    rc = _config(args)
    corpus = _corpus(args)
    spec = rc.spec
    max_lag = args.max_lag or 2 * spec.S + spec.p
    ranked = fileio.rank_by_total_variation(corpus, 1.0)
    rank = {ts.id: i + 1 for i, ts in enumerate(ranked)}
    pairs = [("n_series", len(corpus))]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["series_id", "lag", "acf", "pacf"])
        for ts in corpus:
            lags = min(max_lag, len(ts) - 1)
            r, phi = acf(ts.y, lags), pacf(ts.y, lags)
            for k in range(1, lags + 1):
                w.writerow([ts.id, k, f"{r[k]:.12g}", f"{phi[k]:.12g}"])
            strongest = 1 + int(np.argmax(np.abs(phi[1:]))) if lags else 0
            pairs += [(f"{ts.id}.length", len(ts)), (f"{ts.id}.total_variation", f"{total_variation(ts.y):.12g}"),
                      (f"{ts.id}.tv_rank", rank[ts.id]), (f"{ts.id}.strongest_pacf_lag", strongest)]
    _emit(pairs, args.summary)
    return 0


def cmd_synth(args) -> int:
    rc = _config(args)
    corpus = fileio.synthesize_corpus(rc)
    fileio.write_corpus(corpus, args.out)
    logger.info("wrote %d series of %d points to %s", len(corpus), rc.synthesis["length"], args.out)
    return 0


def cmd_train(args) -> int:
    rc = _config(args)
    corpus = _training_part(_corpus(args), rc)
    if args.grouped:
        return _write_registry(corpus, rc, args.out)
    model = rc.make_estimator()
    if isinstance(model, SARXForecaster) and len(corpus) != 1:
        raise SedxError("the sarx model kind fits one series; select it with --series")
    model.fit(corpus if len(corpus) > 1 else corpus[0])
    fileio.save_model(model, args.out, rc)
    pairs = [("kind", rc.model["kind"]), ("n_series", len(corpus))]
    if isinstance(model, SEDXForecaster):
        rep = model.report_
        pairs += [("n_windows", model.n_windows_), ("epochs_completed", rep.epochs_completed),
                  ("best_epoch", rep.best_epoch), ("final_train_loss", f"{rep.train_loss[-1]:.12g}")]
    _emit(pairs)
    return 0


def _write_registry(corpus, rc, out) -> int:
    reg = _group(corpus, rc)
    reg.check_partition([ts.id for ts in corpus])
    fileio.save_registry(reg, out, rc)
    pairs = [("n_series", len(corpus)), ("n_entries", len(reg.entries)), ("n_background", reg.n_background)]
    for i, e in enumerate(reg.entries):
        pairs += [(f"entry{i}.kind", e.kind), (f"entry{i}.round", e.round),
                  (f"entry{i}.series", ";".join(sorted(e.covered_ids)))]
    _emit(pairs)
    return 0


def cmd_group(args) -> int:
    rc = _config(args)
    return _write_registry(_training_part(_corpus(args), rc), rc, args.out)


def cmd_predict(args) -> int:
    model, stored = _load_any(args.model)
    rc = _config(args, stored)
    corpus = _corpus(args)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["series_id", "anchor", "step", "prediction"])
        for ts in corpus:
            anchors = args.anchor or list(holdout_anchors(len(ts), rc.spec, rc.eval["test_len"]))
            if max(anchors) + rc.spec.K < len(ts):
                preds = model.predict_windows(ts, anchors)
            else:
                preds = [_predict_at(model, ts, t) for t in anchors]
            for t, row in zip(anchors, preds):
                for k, v in enumerate(row):
                    w.writerow([ts.id, t, k, repr(float(v))])
    return 0


def _predict_at(model, ts, t):
    if hasattr(model, "entry_for"):
        model = model.entry_for(ts.id).model
    return model.predict_at(ts, t)


def cmd_evaluate(args) -> int:
    if args.compare:
        return _compare(args)
    if not args.corpus:
        raise SedxError("--corpus is required unless --compare is given")
    stored = None
    if args.model:
        model, stored = _load_any(args.model)
    rc = _config(args, stored)
    spec, ev = rc.spec, rc.eval
    corpus = _corpus(args)
    results = []
    for ts in corpus:
        if args.model:
            forecaster = model
        elif args.method == "sarx":
            forecaster = SARXForecaster(spec.p, spec.S, spec.P, tuple(spec.Q), spec.K).fit(
                ts.head(len(ts) - ev["test_len"]))
        else:
            forecaster = CopyPreviousForecaster(spec.K).fit(ts)
        results += evaluate_series(forecaster, ts, spec, ev["test_len"], ev["mase_lag"], ev["per_step_lag"])
    fileio.write_results(results, args.out)
    name = args.method or "model"
    per_seq = per_sequence_means(results)
    pairs = [("n_series", len(per_seq)), ("n_windows", len(results))]
    pairs += [tuple(line.split("=", 1)) for line in summarize({name: per_seq}).lines()]
    _emit(pairs, args.summary)
    return 0


def _per_sequence(rows):
    by_id: dict[str, dict[str, list]] = {}
    for sid, _, m_ase, m_ape in rows:
        d = by_id.setdefault(sid, {"mase": [], "mape": []})
        d["mase"].append(m_ase)
        if np.isfinite(m_ape):
            d["mape"].append(m_ape)
    return {sid: {k: float(np.mean(v)) for k, v in d.items() if v} for sid, d in by_id.items()}


def _compare(args) -> int:
    cand_rows = fileio.read_results(args.compare[0])
    base_rows = fileio.read_results(args.compare[1])
    cname, bname = args.names
    if cname == bname:
        raise SedxError("--names must differ")
    summary = summarize({cname: _per_sequence(cand_rows), bname: _per_sequence(base_rows)}, candidate=cname)
    pairs = [(f"{cname}.n_windows", len(cand_rows)), (f"{bname}.n_windows", len(base_rows))]
    pairs += [tuple(line.split("=", 1)) for line in summary.lines()]
    for j, metric in ((2, "mase"), (3, "mape")):
        a = [r[j] for r in cand_rows if np.isfinite(r[j])]
        b = [r[j] for r in base_rows if np.isfinite(r[j])]
        if len(a) < 2 or len(b) < 2:
            continue
        res = welch_t(a, b)
        pairs += [(f"welch.{metric}.t", f"{res.t:.12g}"), (f"welch.{metric}.dof", f"{res.dof:.12g}"),
                  (f"welch.{metric}.p", f"{res.p_two_sided:.12g}")]
    _emit(pairs, args.out)
    if args.summary:
        fileio.write_key_values(pairs, args.summary)
    return 0


COMMANDS = {"analyze": cmd_analyze, "synth": cmd_synth, "train": cmd_train, "predict": cmd_predict,
            "evaluate": cmd_evaluate, "group": cmd_group}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (SedxError, ValueError, OSError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
