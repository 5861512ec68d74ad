"""Command-line driver.

Subcommands: gen, train, evaluate, report, casestudy, forecast, adjudicate,
validate-chain.  Every command is a deterministic function of (config,
seed, prior artifacts on disk); outputs land under the configured directory
together with a manifest listing inputs, seeds, and output hashes.

Exit codes: 0 success, 1 validation/data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

from . import models as _models
from .casestudy import CASE_STUDY_NAMES, run_case_study, scenario_for
from .evaluation import classification_report, render_report, report_rows_csv
from .figures import emit_figures
from .forecast import (DemandSeries, StabilizationConfig, fit_demand,
                       forecast_report, price_stabilization_experiment,
                       synthetic_daily_series, write_forecast_csv,
                       write_series_csv)
from .ledger import LedgerError, load_ledger
from .pipeline import (fit_preprocessor, preprocessor_from_json,
                       preprocessor_to_json, stratified_split)
from .runconfig import RunConfig, config_digest, load_run_config
from .sentinel import SentinelPolicy
from .simgen import export_csv, export_truth, load_dataset_csv, run_scenario

USAGE_ERROR = 2
VALIDATION_ERROR = 1

MODEL_CLASS_NAMES = ["Failed", "Pending", "Success"]


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: RunConfig,
                    inputs: list[Path], outputs: list[Path]) -> None:
    manifest = {
        "command": command,
        "seed": config.seed,
        "config_digest": config_digest(config),
        "inputs": {str(p): _sha256(p) for p in sorted(inputs)},
        "outputs": {str(p): _sha256(p) for p in sorted(outputs)},
    }
    path = out_dir / f"manifest_{command.replace('-', '_')}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise CliError(f"{hint} not found: {path}", USAGE_ERROR)
    return path


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands -------------------------------------------------------------


def cmd_gen(config: RunConfig, args) -> int:
    out = _out_dir(config)
    result = run_scenario(config.scenario)
    validation = result.ledger.validate_chain()
    if not validation:
        print(f"generated chain failed validation at height "
              f"{validation.first_bad_height}: {validation.reason}")
        return VALIDATION_ERROR
    export_csv(result.rows, out / "dataset.csv")
    export_truth(result.truth, result.rows, out / "truth.csv")
    result.ledger.save_chain(out / "chain.jsonl")
    result.ledger.save_events(out / "events.jsonl")
    result.ledger.save_state(out / "runstate.json")
    (out / "scenario.json").write_text(
        json.dumps(config.scenario.to_json(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    outputs = [out / n for n in ("dataset.csv", "truth.csv", "chain.jsonl",
                                 "events.jsonl", "runstate.json", "scenario.json")]
    _write_manifest(out, "gen", config, [], outputs)
    print(f"generated {len(result.rows)} records, "
          f"{len(result.ledger.chain)} blocks -> {out}")
    return 0


def _prepare_training(config: RunConfig, out: Path):
    dataset = _require(out / "dataset.csv", "dataset (run `gridledger gen` first)")
    rows = load_dataset_csv(dataset)
    labels_all = [row["transaction_status"] for row in rows]
    train_idx, test_idx = stratified_split(labels_all, config.test_fraction,
                                           config.derived_seed("split"))
    train_rows = [rows[i] for i in train_idx]
    test_rows = [rows[i] for i in test_idx]
    pre = fit_preprocessor(train_rows)
    X_train = pre.transform(train_rows).X
    X_test = pre.transform(test_rows).X
    y_train = pre.encode_labels(train_rows)
    y_test = pre.encode_labels(test_rows)
    return dataset, pre, X_train, y_train, X_test, y_test


def cmd_train(config: RunConfig, args) -> int:
    out = _out_dir(config)
    dataset, pre, X_train, y_train, _, _ = _prepare_training(config, out)
    kind = args.model
    model = _models.train(X_train, y_train, config.train_config(kind))
    artifact_path = out / f"model_{kind}.json"
    _models.save_artifact(artifact_path, model, config.train_config(kind),
                          pre.manifest)
    pre_path = out / "preprocessor.json"
    pre_path.write_text(json.dumps(preprocessor_to_json(pre), sort_keys=True),
                        encoding="utf-8")
    _write_manifest(out, f"train-{kind}", config, [dataset],
                    [artifact_path, pre_path])
    print(f"trained {kind} on {X_train.shape[0]} rows -> {artifact_path}")
    return 0


def cmd_evaluate(config: RunConfig, args) -> int:
    out = _out_dir(config)
    kind = args.model
    artifact_path = _require(out / f"model_{kind}.json",
                             f"model artifact for {kind}")
    pre_path = _require(out / "preprocessor.json", "fitted preprocessor")
    pre = preprocessor_from_json(json.loads(pre_path.read_text(encoding="utf-8")))
    artifact = _models.load_artifact(artifact_path, pre.manifest)
    dataset, _, _, _, X_test, y_test = _prepare_training(config, out)
    pred = _models.predict(artifact.model, X_test)
    report = classification_report(y_test, pred, pre.label_vocab)
    text = render_report(report)
    (out / f"report_{kind}.txt").write_text(text, encoding="utf-8")
    with open(out / f"report_{kind}.csv", "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(report_rows_csv(report))
    print(text)
    print(f"{kind} accuracy: {report.accuracy:.4f}")
    _write_manifest(out, f"evaluate-{kind}", config,
                    [dataset, artifact_path, pre_path],
                    [out / f"report_{kind}.txt", out / f"report_{kind}.csv"])
    return 0


def replicate_paper_tables(config: RunConfig, out: Path) -> dict[str, float]:
    """Full pipeline on the status target with all three default models;
    writes the per-model reports and the accuracy comparison CSV."""
    dataset, pre, X_train, y_train, X_test, y_test = _prepare_training(config, out)
    accuracies: dict[str, float] = {}
    outputs = []
    for kind in ("logreg", "forest", "gbt"):
        model = _models.train(X_train, y_train, config.train_config(kind))
        pred = _models.predict(model, X_test)
        report = classification_report(y_test, pred, pre.label_vocab)
        accuracies[kind] = report.accuracy
        (out / f"report_{kind}.txt").write_text(render_report(report),
                                                encoding="utf-8")
        with open(out / f"report_{kind}.csv", "w", newline="",
                  encoding="utf-8") as fh:
            csv.writer(fh).writerows(report_rows_csv(report))
        outputs += [out / f"report_{kind}.txt", out / f"report_{kind}.csv"]
    with open(out / "model_comparison.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "accuracy"])
        for kind, acc in accuracies.items():
            writer.writerow([kind, f"{acc:.4f}"])
    outputs.append(out / "model_comparison.csv")
    _write_manifest(out, "report", config, [dataset], outputs)
    return accuracies


def cmd_report(config: RunConfig, args) -> int:
    out = _out_dir(config)
    dataset = _require(out / "dataset.csv", "dataset (run `gridledger gen` first)")
    figures = emit_figures(dataset, out / "figures")
    accuracies = replicate_paper_tables(config, out)
    for kind, acc in accuracies.items():
        print(f"{kind}: accuracy {acc:.4f}")
    print(f"figures written: {', '.join(sorted(figures))} -> {out / 'figures'}")
    return 0


def cmd_casestudy(config: RunConfig, args) -> int:
    out = _out_dir(config)
    seed = config.derived_seed("casestudy")
    scenario_config, _ = scenario_for(args.scenario, seed)
    policy = SentinelPolicy(
        threshold=config.sentinel_threshold,
        window_seconds=config.sentinel_window_seconds,
        sybil_k=config.sybil_k,
        sybil_gap_seconds=config.sybil_gap_seconds,
        off_peak_hours=frozenset(scenario_config.off_peak_hours()))
    report = run_case_study(args.scenario, seed, policy)
    doc = {
        "name": report.name, "seed": report.seed,
        "model_kind": report.model_kind, "threshold": report.threshold,
        "n_rows": report.n_rows, "n_fraud": report.n_fraud,
        "n_test": report.n_test, "n_test_fraud": report.n_test_fraud,
        "precision": report.precision, "recall": report.recall,
        "f1": report.f1, "roc_auc": report.roc_auc,
        "n_alerts": len(report.alerts), "n_rejected": report.n_rejected,
        "sybil_clusters": report.sybil_clusters, "notes": report.notes,
    }
    report_path = out / f"casestudy_{report.name}.json"
    report_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")
    alerts_path = out / f"alerts_{report.name}.jsonl"
    with open(alerts_path, "w", encoding="utf-8") as fh:
        for alert in report.alerts:
            fh.write(json.dumps({
                "transaction_id": alert.transaction_id,
                "score": round(alert.score, 6),
                "state": alert.state,
                "triggered_features": {k: round(v, 6) for k, v in
                                       alert.triggered_features.items()},
            }, sort_keys=True) + "\n")
    _write_manifest(out, f"casestudy-{report.name}", config, [],
                    [report_path, alerts_path])
    print("\n".join(report.summary_lines()))
    return 0


def cmd_forecast(config: RunConfig, args) -> int:
    out = _out_dir(config)
    seed = config.derived_seed("forecast")
    series = synthetic_daily_series(config.forecast_days, seed,
                                    config.forecast_noise)
    split = (config.forecast_days - 7) * 24
    history = DemandSeries(series.start_ts, series.demand[:split])
    tail = DemandSeries(series.start_ts + split * 3600, series.demand[split:])
    model = fit_demand(history, "SeasonalNaive")
    report = forecast_report(model, tail)
    write_series_csv(series, out / "demand_series.csv")
    write_forecast_csv(report, tail, out / "forecast_report.csv")

    stab = price_stabilization_experiment(
        StabilizationConfig(days=config.stabilization_days,
                            informed_weight=config.informed_weight),
        seed=seed)
    stab_doc = {
        "baseline_sigma": round(stab.baseline_sigma, 6),
        "informed_sigma": round(stab.informed_sigma, 6),
        "reduction_pct": round(stab.reduction_pct, 3),
        "n_settlements_baseline": stab.n_settlements_baseline,
        "n_settlements_informed": stab.n_settlements_informed,
    }
    (out / "stabilization.json").write_text(
        json.dumps(stab_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_manifest(out, "forecast", config, [],
                    [out / "demand_series.csv", out / "forecast_report.csv",
                     out / "stabilization.json"])
    print(f"seasonal-naive MAPE: {report.mape:.3f}% over {report.horizon} hours")
    print(f"price stabilization: baseline sigma {stab.baseline_sigma:.3f}, "
          f"informed sigma {stab.informed_sigma:.3f} "
          f"({stab.reduction_pct:.1f}% reduction)")
    return 0


def cmd_adjudicate(config: RunConfig, args) -> int:
    out = _out_dir(config)
    state_path = _require(out / "runstate.json", "ledger run state")
    chain_path = _require(out / "chain.jsonl", "chain file")
    events_path = _require(out / "events.jsonl", "event log")
    ledger = load_ledger(state_path, chain_path, events_path)
    decided_at = max((b.timestamp for b in ledger.chain), default=0) + 1
    try:
        if args.decision == "release":
            ledger.release(args.tx_id, at=decided_at)
        else:
            ledger.reject(args.tx_id, at=decided_at)
    except LedgerError as exc:
        print(f"adjudication failed for {args.tx_id}: "
              f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return VALIDATION_ERROR
    ledger.finalize()
    ledger.save_chain(chain_path)
    ledger.save_events(events_path)
    ledger.save_state(state_path)
    adj_path = out / "adjudications.jsonl"
    with open(adj_path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "transaction_id": args.tx_id,
            "decision": "Release" if args.decision == "release" else "Reject",
            "decided_at": decided_at,
        }, sort_keys=True) + "\n")
    print(f"{args.tx_id}: {args.decision}d")
    return 0


def cmd_validate_chain(config: RunConfig, args) -> int:
    out = Path(config.out_dir)
    state_path = _require(out / "runstate.json", "ledger run state")
    chain_path = _require(out / "chain.jsonl", "chain file")
    ledger = load_ledger(state_path, chain_path)
    result = ledger.validate_chain()
    if result:
        print(f"chain OK: {len(ledger.chain)} blocks, "
              f"{sum(len(b.transactions) for b in ledger.chain)} transactions")
        return 0
    print(f"chain INVALID at height {result.first_bad_height}: {result.reason}")
    return VALIDATION_ERROR


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridledger",
        description="Deterministic P2P energy-market simulator with a "
                    "proof-of-authority ledger and fraud sentinel")
    parser.add_argument("--config", help="path to a run-config JSON file")
    parser.add_argument("--seed", type=int, help="global seed (derives all "
                        "module seeds by fixed offsets)")
    parser.add_argument("--out", help="output directory "
                        "(default $GRIDLEDGER_OUT or ./out)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen", help="generate dataset, chain, and event log")
    for name in ("train", "evaluate"):
        p = sub.add_parser(name, help=f"{name} one model on the status target")
        p.add_argument("--model", choices=("logreg", "forest", "gbt"),
                       required=True)
    sub.add_parser("report", help="emit figure aggregates and the three "
                   "model reports with the accuracy comparison")
    p = sub.add_parser("casestudy", help="run a fraud-detection case study")
    p.add_argument("--scenario", choices=CASE_STUDY_NAMES, required=True)
    sub.add_parser("forecast", help="demand forecasting and the price "
                   "stabilization experiment")
    p = sub.add_parser("adjudicate", help="release or reject a held transaction")
    p.add_argument("tx_id")
    p.add_argument("--decision", choices=("release", "reject"), required=True)
    sub.add_parser("validate-chain", help="verify chain integrity and replay")
    return parser


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "casestudy": cmd_casestudy,
    "forecast": cmd_forecast,
    "adjudicate": cmd_adjudicate,
    "validate-chain": cmd_validate_chain,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = args.out or os.environ.get("GRIDLEDGER_OUT") or "out"
    try:
        config = load_run_config(args.config, args.seed, out_dir)
    except (OSError, ValueError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        return COMMANDS[args.command](config, args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
