"""Command-line entry point.

Subcommands mirror the pipeline stages so each step can run standalone:

    ingest     CSV -> canonical dataset JSON
    train      fit lr / nn / diffnet on a canonical dataset
    selective  compute selective labels from two fitted models
    evaluate   metrics report for one model on one dataset
    explain    global importances, one-sample explanation, or patterns
    bounds     concentration-bound table
    synth      draw a synthetic dataset from a named scenario
    pipeline   run everything from a JSON config

Exit codes: 0 success, 2 bad arguments, then one code per failing stage
(10 ingest, 11 train, 12 selective, 13 evaluate, 14 explain, 15 bounds,
16 synth).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bounds import bounds_table, epsilon_for_confidence, train_bound, train_test_bound
from .data import (
    FeatureSpec,
    ScalerParams,
    load_dataset,
    load_generic,
    load_gmsc,
    load_taiwan,
    save_dataset,
)
from .explain import (
    curve_csv,
    global_importance,
    local_explanation,
    logit_shape,
    pattern_report,
)
from .metrics import evaluation_report
from .models import load_model, predict, save_model
from .pipeline import PipelineError, RunConfig, run_pipeline
from .selective import SelectiveLabels, make_selective_labels
from .synth import Scenario, make_scenario, sample
from .training import TrainConfig, train

STAGE_EXIT_CODES = {
    "ingest": 10,
    "train": 11,
    "selective": 12,
    "evaluate": 13,
    "explain": 14,
    "bounds": 15,
    "synth": 16,
}


def _fail(stage: str, message: str) -> int:
    print(f"error [{stage}]: {message}", file=sys.stderr)
    return STAGE_EXIT_CODES.get(stage, 1)


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_ingest(args) -> int:
    try:
        if args.dataset == "taiwan":
            ds = load_taiwan(args.input, header=not args.no_header)
        elif args.dataset == "gmsc":
            ds = load_gmsc(args.input, header=not args.no_header)
        else:
            schema = None
            if args.schema:
                with open(args.schema, encoding="utf-8") as fh:
                    schema = tuple(FeatureSpec.from_dict(d)
                                   for d in json.load(fh))
            ds = load_generic(args.input, schema=schema,
                              header=not args.no_header)
        save_dataset(ds, args.out)
    except (OSError, ValueError) as exc:
        return _fail("ingest", str(exc))
    print(f"ingested {ds.provenance}: n={ds.n} p={ds.p} "
          f"default_share={ds.default_share():.4f} -> {args.out}")
    return 0


_MODEL_KIND = {"lr": "logistic", "nn": "mlp2", "diffnet": "mlp5"}


def cmd_train(args) -> int:
    try:
        ds = load_dataset(args.data)
        labels = None
        if args.labels:
            labels = SelectiveLabels.load(args.labels).z
        cfg = TrainConfig(seed=args.seed, max_epochs=args.epochs)
        model, trace = train(_MODEL_KIND[args.model], ds, cfg, labels=labels)
        scaler = None
        if args.scaler:
            with open(args.scaler, encoding="utf-8") as fh:
                scaler = ScalerParams.from_dict(json.load(fh))
        save_model(model, args.out, scaler=scaler,
                   schema_fingerprint=ds.schema_fingerprint(),
                   training_meta={"seed": cfg.seed, **trace.summary()})
        if args.trace:
            Path(args.trace).write_text(trace.to_csv(), encoding="utf-8")
    except (OSError, ValueError) as exc:
        return _fail("train", str(exc))
    print(f"trained {args.model}: epochs={trace.epochs_run} "
          f"final_loss={trace.losses[-1]:.6f} -> {args.out}")
    return 0


def cmd_selective(args) -> int:
    try:
        ds = load_dataset(args.data)
        lr, _ = load_model(args.lr)
        nn, _ = load_model(args.nn)
        labels = make_selective_labels(nn, lr, ds, tau=args.tau,
                                       variant=args.variant)
        labels.save(args.out)
    except (OSError, ValueError) as exc:
        return _fail("selective", str(exc))
    print(f"selective labels ({args.variant}): "
          f"rejected {labels.rejected_indices().size} of {labels.n} "
          f"(rate {labels.rejection_rate():.4f}) -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    try:
        ds = load_dataset(args.data)
        model, _ = load_model(args.model)
        report = evaluation_report(model, ds, tau=args.tau)
        if args.reject:
            diffnet, _ = load_model(args.reject)
            G = predict(diffnet.forward(ds.features), args.tau)
            rejected = np.flatnonzero(G == 0)
            report["rejection_rate"] = float(rejected.size) / ds.n
            if rejected.size:
                preds = predict(model.forward(ds.features[rejected]), args.tau)
                report["rejected_set_error"] = float(
                    np.mean(preds != ds.labels[rejected]))
            else:
                report["rejected_set_error"] = None
        _write_json(args.report, report)
    except (OSError, ValueError) as exc:
        return _fail("evaluate", str(exc))
    print(f"evaluated: error={report['classification_error']:.4f} "
          f"auc={report['auc']} -> {args.report}")
    return 0


def cmd_explain(args) -> int:
    try:
        ds = load_dataset(args.data)
        model, _ = load_model(args.model)
        if args.global_:
            gi = global_importance(model, ds, model_tag=args.model)
            _write_json(args.out, gi.to_dict([s.name for s in ds.schema]))
        elif args.local_sample is not None:
            le = local_explanation(model, ds, args.local_sample)
            _write_json(args.out, le.to_dict())
        elif args.patterns:
            if not args.lr or not args.nn:
                raise ValueError("--patterns requires --lr and --nn model files")
            lr, _ = load_model(args.lr)
            nn, _ = load_model(args.nn)
            pr = pattern_report(model, nn, lr, ds, tau=args.tau,
                                dominance_threshold=args.threshold,
                                tau_g=args.tau)
            _write_json(args.out, pr.to_dict())
        else:  # logit curve
            j = next((i for i, s in enumerate(ds.schema)
                      if s.name == args.logit_feature), None)
            if j is None:
                raise ValueError(f"unknown feature {args.logit_feature!r}")
            curve = logit_shape(model, ds, j, args.grid)
            Path(args.out).write_text(curve_csv(curve), encoding="utf-8")
    except (OSError, ValueError, IndexError) as exc:
        return _fail("explain", str(exc))
    print(f"explanation written -> {args.out}")
    return 0


def cmd_bounds(args) -> int:
    try:
        if args.delta is not None:
            eps = epsilon_for_confidence(args.n, args.delta)
            result = {"n": args.n, "delta": args.delta, "epsilon": eps,
                      "bound_at_epsilon": train_bound(args.n, eps)}
            rows = [result]
        else:
            eps1 = args.epsilon[0]
            if args.n_test is not None:
                eps2 = args.epsilon[1] if len(args.epsilon) > 1 else eps1
                result = {"n_train": args.n, "n_test": args.n_test,
                          "epsilon_1": eps1, "epsilon_2": eps2,
                          "bound": train_test_bound(args.n, args.n_test,
                                                    eps1, eps2)}
                rows = [result]
            else:
                rows = bounds_table(args.n, args.epsilon)
                result = {"rows": rows}
        if args.json:
            print(json.dumps(result, indent=1, sort_keys=True))
        else:
            for row in rows:
                print("  ".join(f"{k}={v}" for k, v in row.items()))
    except ValueError as exc:
        return _fail("bounds", str(exc))
    return 0


def cmd_synth(args) -> int:
    try:
        if args.scenario_file:
            scenario = Scenario.load(args.scenario_file)
        else:
            scenario = make_scenario(args.scenario)
        ds, p = sample(scenario, args.n, args.seed)
        save_dataset(ds, args.out)
        if args.probs:
            Path(args.probs).write_text(
                "p_true\n" + "".join(f"{v!r}\n" for v in p), encoding="utf-8")
    except (OSError, ValueError) as exc:
        return _fail("synth", str(exc))
    print(f"sampled {scenario.name}: n={ds.n} "
          f"default_share={ds.default_share():.4f} -> {args.out}")
    return 0


def cmd_pipeline(args) -> int:
    try:
        config = RunConfig.load(args.config)
        if args.out_dir:
            config.out_dir = args.out_dir
        if args.split_seed is not None:
            config.split_seed = args.split_seed
        manifest = run_pipeline(config)
    except PipelineError as exc:
        print(f"error [{exc.stage}]: {exc.cause}", file=sys.stderr)
        return STAGE_EXIT_CODES.get(exc.stage, 1)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2
    print(f"pipeline complete: {len(manifest['files'])} artifacts in "
          f"{config.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selcredit",
        description="Two-stage selective credit default prediction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="CSV to canonical dataset JSON")
    p.add_argument("--dataset", choices=("taiwan", "gmsc", "generic"),
                   required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--schema", help="feature spec JSON for generic CSVs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="fit a model on a canonical dataset")
    p.add_argument("--model", choices=("lr", "nn", "diffnet"), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--labels", help="selective labels JSON (diffnet)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--scaler", help="scaler JSON to embed in the model file")
    p.add_argument("--trace", help="write the per-epoch loss CSV here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("selective", help="selective labels from two models")
    p.add_argument("--lr", required=True)
    p.add_argument("--nn", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--variant", choices=("ideal", "practical"),
                   default="practical")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_selective)

    p = sub.add_parser("evaluate", help="metrics report for one model")
    p.add_argument("--model", required=True)
    p.add_argument("--reject", help="Difference Net model JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("explain", help="explanation artifacts")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--global", dest="global_", action="store_true")
    mode.add_argument("--local-sample", type=int)
    mode.add_argument("--patterns", action="store_true")
    mode.add_argument("--logit-feature")
    p.add_argument("--lr", help="logistic model JSON (patterns)")
    p.add_argument("--nn", help="network model JSON (patterns)")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--threshold", type=float, default=0.5,
                   help="dominance threshold for pattern flags")
    p.add_argument("--grid", type=float, nargs="+",
                   default=[0, 1, 2, 3, 4, 5])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("bounds", help="concentration bound table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--n-test", type=int)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--epsilon", type=float, nargs="+")
    mode.add_argument("--delta", type=float)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("synth", help="sample a synthetic scenario")
    p.add_argument("--scenario",
                   choices=("linear", "diminishing_marginal", "bump"),
                   default="linear")
    p.add_argument("--scenario-file", help="scenario JSON overriding --scenario")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--probs", help="also write per-sample true p(x) CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pipeline", help="run every stage from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", help="override the config's output directory")
    p.add_argument("--split-seed", type=int, help="override the split seed")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
