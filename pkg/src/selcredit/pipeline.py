"""End-to-end run: ingest -> split -> standardize -> stage-one models ->
selective labels -> Difference Net -> evaluation -> explanations -> bounds.

Every emitted file is listed in a manifest with its content digest, and all
randomness flows from the seeds in the config, so re-running a config
reproduces each artifact byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import epsilon_for_confidence, train_bound, train_test_bound
from .data import Dataset, load_generic, load_gmsc, load_taiwan, save_dataset, split, standardize
from .explain import (
    bars_svg,
    curve_csv,
    curve_svg,
    global_importance,
    logit_shape,
    pattern_report,
    scatter_svg,
)
from .metrics import evaluation_report, rejected_set_errors, roc_auc
from .models import fingerprint, predict, save_model
from .selective import make_selective_labels, rejection_summary, train_difference_net
from .synth import Scenario, make_scenario, sample
from .training import TrainConfig, train

REPORT_SCHEMA = "selcredit-report/1"

PIPELINE_STAGES = ("ingest", "split", "train", "selective", "evaluate",
                   "explain", "bounds")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _train_config(doc: dict | None) -> TrainConfig:
    doc = dict(doc or {})
    allowed = {"max_epochs", "gradient_tolerance", "seed", "init_scale",
               "armijo_c", "backtrack_factor", "max_backtracks"}
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown training options {sorted(unknown)}")
    return TrainConfig(**doc)


@dataclass
class RunConfig:
    """One experiment: dataset choice, split, per-stage training, reports."""

    dataset: dict
    out_dir: str
    split_fraction: float = 0.75
    split_seed: int = 0
    tau: float = 0.5
    variant: str = "practical"
    train_lr: dict = field(default_factory=dict)
    train_nn: dict = field(default_factory=dict)
    train_diffnet: dict = field(default_factory=dict)
    explain: dict = field(default_factory=dict)
    bounds_delta: float = 0.05
    formats: tuple[str, ...] = ("json", "csv")

    @staticmethod
    def from_dict(doc: dict) -> "RunConfig":
        split_doc = doc.get("split", {})
        train_doc = doc.get("train", {})
        return RunConfig(
            dataset=doc["dataset"],
            out_dir=doc["out_dir"],
            split_fraction=split_doc.get("fraction", 0.75),
            split_seed=split_doc.get("seed", 0),
            tau=doc.get("tau", 0.5),
            variant=doc.get("variant", "practical"),
            train_lr=train_doc.get("lr", {}),
            train_nn=train_doc.get("nn", {}),
            train_diffnet=train_doc.get("diffnet", {}),
            explain=doc.get("explain", {}),
            bounds_delta=doc.get("bounds", {}).get("delta", 0.05),
            formats=tuple(doc.get("formats", ["json", "csv"])),
        )

    @staticmethod
    def load(path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return RunConfig.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        # out_dir is deliberately omitted: the digest and the manifest record
        # identify the experiment, not where its artifacts landed
        return {
            "dataset": self.dataset,
            "split": {"fraction": self.split_fraction, "seed": self.split_seed},
            "tau": self.tau,
            "variant": self.variant,
            "train": {"lr": self.train_lr, "nn": self.train_nn,
                      "diffnet": self.train_diffnet},
            "explain": self.explain,
            "bounds": {"delta": self.bounds_delta},
            "formats": list(self.formats),
        }


def ingest_dataset(doc: dict) -> Dataset:
    kind = doc.get("kind")
    header = doc.get("header", True)
    if kind == "taiwan":
        return load_taiwan(doc["path"], header=header)
    if kind == "gmsc":
        return load_gmsc(doc["path"], header=header)
    if kind == "generic":
        return load_generic(doc["path"], header=header)
    if kind == "synthetic":
        if "scenario" in doc:
            scenario = Scenario.from_dict(doc["scenario"])
        else:
            scenario = make_scenario(doc["scenario_name"])
        dataset, _ = sample(scenario, int(doc["n"]), int(doc.get("seed", 0)))
        return dataset
    raise ValueError(f"unknown dataset kind {kind!r}")


class _Emitter:
    """Writes run artifacts and records their digests for the manifest."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: dict[str, str] = {}

    def write_text(self, name: str, text: str):
        path = self.out_dir / name
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def write_json(self, name: str, obj):
        self.write_text(name, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def run_pipeline(config: RunConfig) -> dict:
    """Execute every stage, emit artifacts, and return the manifest."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit = _Emitter(out_dir)
    manifest = {
        "config": config.to_dict(),
        "config_digest": fingerprint(config.to_dict()),
        "versions": {"selcredit": __version__, "numpy": np.__version__},
        "status": "incomplete",
        "stages_completed": [],
        "files": emit.files,
    }

    def checkpoint(stage):
        manifest["stages_completed"].append(stage)
        emit.write_json("manifest.json", manifest)
        emit.files.pop("manifest.json", None)  # the manifest lists the others

    try:
        stage = "ingest"
        full = ingest_dataset(config.dataset)

        stage = "split"
        train_raw, test_raw = split(full, config.split_fraction, config.split_seed)
        train_std, (test_std,), scaler = standardize(train_raw, (test_raw,))
        save_dataset(train_std, out_dir / "dataset_train.json")
        save_dataset(test_std, out_dir / "dataset_test.json")
        for name in ("dataset_train.json", "dataset_test.json"):
            emit.files[name] = hashlib.sha256(
                (out_dir / name).read_bytes()).hexdigest()
        emit.write_json("scaler.json", scaler.to_dict())
        checkpoint("split")

        stage = "train"
        fp = train_std.schema_fingerprint()
        models = {}
        for tag, kind, cfg_doc in (("lr", "logistic", config.train_lr),
                                   ("nn", "mlp2", config.train_nn)):
            cfg = _train_config(cfg_doc)
            model, trace = train(kind, train_std, cfg)
            models[tag] = model
            save_model(model, out_dir / f"{tag}.json", scaler=scaler,
                       schema_fingerprint=fp,
                       training_meta={"seed": cfg.seed,
                                      "epochs": trace.epochs_run,
                                      "final_loss": trace.losses[-1],
                                      **trace.summary()})
            emit.files[f"{tag}.json"] = hashlib.sha256(
                (out_dir / f"{tag}.json").read_bytes()).hexdigest()
            if "csv" in config.formats:
                emit.write_text(f"{tag}_trace.csv", trace.to_csv())
        checkpoint("train")

        stage = "selective"
        labels = make_selective_labels(models["nn"], models["lr"], train_std,
                                       tau=config.tau, variant=config.variant)
        emit.write_json("selective_labels.json", labels.to_dict())
        dn_cfg = _train_config(config.train_diffnet)
        diffnet, dn_trace = train_difference_net(train_std, labels, dn_cfg)
        models["diffnet"] = diffnet
        save_model(diffnet, out_dir / "diffnet.json", scaler=scaler,
                   schema_fingerprint=fp,
                   training_meta={"seed": dn_cfg.seed,
                                  "epochs": dn_trace.epochs_run,
                                  "final_loss": dn_trace.losses[-1],
                                  **dn_trace.summary()})
        emit.files["diffnet.json"] = hashlib.sha256(
            (out_dir / "diffnet.json").read_bytes()).hexdigest()
        if "csv" in config.formats:
            emit.write_text("diffnet_trace.csv", dn_trace.to_csv())
        checkpoint("selective")

        stage = "evaluate"
        report = {
            "schema": REPORT_SCHEMA,
            "tau": config.tau,
            "variant": config.variant,
            "n_train": train_std.n,
            "n_test": test_std.n,
            "models": {},
        }
        for tag in ("lr", "nn"):
            report["models"][tag] = evaluation_report(models[tag], test_std,
                                                      tau=config.tau)
        # Difference Net quality: its thresholded output against the selective
        # labels recomputed on the test set
        test_labels = make_selective_labels(models["nn"], models["lr"],
                                            test_std, tau=config.tau,
                                            variant=config.variant)
        G = predict(diffnet.forward(test_std.features), config.tau)
        report["models"]["diffnet"] = {
            "n": test_std.n,
            "classification_error": float(np.mean(G != test_labels.z)),
        }
        summary = rejection_summary(diffnet, test_std, config.tau,
                                    nn=models["nn"], lr=models["lr"],
                                    tau=config.tau)
        lr_err, nn_err = rejected_set_errors(summary.rejected_index_set,
                                             models["nn"], models["lr"],
                                             test_std, tau=config.tau)
        report["rejection"] = {
            "train_rate_selective_labels": labels.rejection_rate(),
            "test_rate_predicted": summary.rejection_rate,
            "rejected_count": int(summary.rejected_index_set.size),
            "direction_breakdown": summary.direction_breakdown(),
            "rejected_set_error_lr": lr_err,
            "rejected_set_error_nn": nn_err,
        }
        emit.write_json("report.json", report)
        if "csv" in config.formats:
            emit.write_text("rejected_indices.csv", summary.indices_csv())
            for tag in ("lr", "nn"):
                curve = roc_auc(models[tag].forward(test_std.features),
                                test_std.labels)
                emit.write_text(f"roc_{tag}.csv", curve.to_csv())
                if "svg" in config.formats:
                    emit.write_text(f"roc_{tag}.svg", curve.to_svg())
        checkpoint("evaluate")

        stage = "explain"
        explain_cfg = config.explain
        if explain_cfg.get("global", True):
            for tag in ("nn", "diffnet"):
                try:
                    gi = global_importance(models[tag], train_std, model_tag=tag)
                except ValueError:
                    continue  # constant (degenerate) model
                names = [s.name for s in train_std.schema]
                emit.write_json(f"global_importance_{tag}.json",
                                gi.to_dict(names))
                if "svg" in config.formats:
                    emit.write_text(f"global_importance_{tag}.svg",
                                    bars_svg(gi.lambdas, names,
                                             caption=f"gradient importance: {tag}"))
        if explain_cfg.get("patterns", True):
            pr = pattern_report(diffnet, models["nn"], models["lr"], test_std,
                                tau=config.tau,
                                dominance_threshold=explain_cfg.get(
                                    "dominance_threshold", 0.5),
                                tau_g=config.tau)
            emit.write_json("pattern_report.json", pr.to_dict())
            for name in pr.scatter:
                if "csv" in config.formats:
                    emit.write_text(f"scatter_{name}.csv", pr.scatter_csv(name))
                if "svg" in config.formats:
                    emit.write_text(f"scatter_{name}.svg",
                                    scatter_svg(pr.scatter[name],
                                                caption=f"lr output vs {name}"))
        for feat in explain_cfg.get("logit_features", []):
            j = next((i for i, s in enumerate(test_std.schema)
                      if s.name == feat), None)
            if j is None:
                raise ValueError(f"unknown logit_shape feature {feat!r}")
            grid = explain_cfg.get("logit_grid", [0, 1, 2, 3, 4, 5])
            curve = logit_shape(models["nn"], test_std, j, grid)
            if "csv" in config.formats:
                emit.write_text(f"logit_curve_{feat}.csv", curve_csv(curve))
            if "svg" in config.formats:
                emit.write_text(f"logit_curve_{feat}.svg",
                                curve_svg(curve, caption=f"mean logit vs {feat}"))
        checkpoint("explain")

        stage = "bounds"
        eps = epsilon_for_confidence(train_std.n, config.bounds_delta)
        emit.write_json("bounds.json", {
            "n_train": train_std.n,
            "n_test": test_std.n,
            "delta": config.bounds_delta,
            "epsilon_at_delta": eps,
            "train_bound_check": train_bound(train_std.n, eps),
            "train_test_bound_at_epsilon": train_test_bound(
                train_std.n, test_std.n, eps, eps),
        })
        manifest["status"] = "complete"
        checkpoint("bounds")
    except Exception as exc:  # noqa: BLE001 - re-tagged with the stage name
        manifest["status"] = "incomplete"
        manifest["failed_stage"] = stage
        emit.write_json("manifest.json", manifest)
        emit.files.pop("manifest.json", None)
        raise PipelineError(stage, exc) from exc
    return manifest
