#!/usr/bin/env python3
"""Run the two-stage pipeline on the public credit datasets over several
split seeds and print a summary against the published reference numbers.

Expects the dataset CSVs under --data-dir (see README for sources). Writes
per-seed artifacts under --out-dir/<dataset>/seed<k>/.
"""

import argparse
import json
import statistics
from pathlib import Path

from selcredit.pipeline import RunConfig, run_pipeline

REFERENCE = {
    "taiwan": {"lr_error": 0.182, "nn_error": 0.177, "lr_auc": 0.711,
               "nn_auc": 0.731, "rejected_share": 0.023},
    "gmsc": {"lr_error": 0.071, "nn_error": 0.068, "lr_auc": 0.694,
             "nn_auc": 0.816, "rejected_share": 0.014},
}

FILES = {
    "taiwan": ("default of credit card clients.csv", "UCI_Credit_Card.csv",
               "taiwan.csv"),
    "gmsc": ("cs-training.csv", "gmsc.csv"),
}


def find_file(data_dir: Path, dataset: str) -> Path | None:
    for name in FILES[dataset]:
        if (data_dir / name).exists():
            return data_dir / name
    return None


def run_dataset(dataset: str, path: Path, out_dir: Path, seeds, epochs: int):
    rows = []
    for seed in seeds:
        config = RunConfig.from_dict({
            "dataset": {"kind": dataset, "path": str(path)},
            "split": {"fraction": 0.75, "seed": seed},
            "train": {"lr": {"seed": 0, "max_epochs": epochs},
                      "nn": {"seed": 0, "max_epochs": epochs},
                      "diffnet": {"seed": 0, "max_epochs": epochs}},
            "explain": {"global": True, "patterns": True},
            "out_dir": str(out_dir / dataset / f"seed{seed}"),
            "formats": ["json", "csv", "svg"],
        })
        run_pipeline(config)
        report = json.loads(
            (Path(config.out_dir) / "report.json").read_text())
        rows.append({
            "seed": seed,
            "lr_error": report["models"]["lr"]["classification_error"],
            "nn_error": report["models"]["nn"]["classification_error"],
            "lr_auc": report["models"]["lr"]["auc"],
            "nn_auc": report["models"]["nn"]["auc"],
            "lr_recall": report["models"]["lr"]["recall"],
            "nn_recall": report["models"]["nn"]["recall"],
            "diffnet_error": report["models"]["diffnet"]["classification_error"],
            "rejected_share": report["rejection"]["test_rate_predicted"],
            "rejected_lr_error": report["rejection"]["rejected_set_error_lr"],
            "rejected_nn_error": report["rejection"]["rejected_set_error_nn"],
        })
        print(f"  seed {seed}: " + "  ".join(
            f"{k}={v:.4f}" for k, v in rows[-1].items()
            if k != "seed" and v is not None))
    print(f"\n{dataset} medians over {len(seeds)} split seeds "
          "(reference in parentheses):")
    ref = REFERENCE[dataset]
    for key in rows[0]:
        if key == "seed":
            continue
        values = [r[key] for r in rows if r[key] is not None]
        if not values:
            continue
        med = statistics.median(values)
        suffix = f"  (ref {ref[key]:.3f})" if key in ref else ""
        print(f"  {key:20s} {med:.4f}{suffix}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-dir", type=Path, default=Path("data"))
    ap.add_argument("--out-dir", type=Path, default=Path("runs"))
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--epochs", type=int, default=500)
    ap.add_argument("--datasets", nargs="+", choices=("taiwan", "gmsc"),
                    default=["taiwan", "gmsc"])
    args = ap.parse_args()
    for dataset in args.datasets:
        path = find_file(args.data_dir, dataset)
        if path is None:
            print(f"{dataset}: no dataset file under {args.data_dir} "
                  f"(looked for {', '.join(FILES[dataset])}); skipping")
            continue
        print(f"\n=== {dataset} ({path}) ===")
        run_dataset(dataset, path, args.out_dir, args.seeds, args.epochs)


if __name__ == "__main__":
    main()
