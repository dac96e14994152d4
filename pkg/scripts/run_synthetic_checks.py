#!/usr/bin/env python3
"""Synthetic ground-truth checks that need no external data.

1. Well-specified regime: a fitted logistic model recovers the Bayes rule.
2. The closed-form acceptance target: a Difference Net trained on ideal
   labels in the bump scenario tracks 1 - |f - f_tilde|.
3. Concentration coverage: the empirical rejection rate stays inside the
   Hoeffding envelope.
"""

import argparse

import numpy as np

from selcredit.bounds import train_bound
from selcredit.data import standardize
from selcredit.models import LogisticModel, predict
from selcredit.selective import selective_labels_from_predictions, train_difference_net
from selcredit.synth import (
    BayesSurrogate,
    bump_scenario,
    coverage_experiment,
    linear_scenario,
    sample,
    true_rejection_rate,
)
from selcredit.training import TrainConfig, train


def bayes_agreement(n=100_000, seed=0):
    scenario = linear_scenario()
    ds, _ = sample(scenario, n, seed)
    ds_std, _, scaler = standardize(ds)
    model, _ = train("logistic", ds_std, TrainConfig(max_epochs=300, seed=0))
    fresh, p_fresh = sample(scenario, 50_000, seed + 1)
    fitted = predict(model.forward(scaler.apply(fresh).features), 0.5)
    bayes = (p_fresh >= 0.5).astype(int)
    rate = float(np.mean(fitted != bayes))
    print(f"[linear] disagreement with the Bayes rule: {rate:.4%}")


def acceptance_target_check(n=100_000, seed=11):
    scenario = bump_scenario()
    train_ds, p_train = sample(scenario, n, seed)
    train_std, _, scaler = standardize(train_ds)
    lr, _ = train("logistic", train_std, TrainConfig(max_epochs=500, seed=0))
    F = predict(p_train, 0.5)
    Ft = predict(lr.forward(train_std.features), 0.5)
    labels = selective_labels_from_predictions(F, Ft, train_ds.labels, "ideal")
    diffnet, _ = train_difference_net(
        train_std, labels,
        TrainConfig(max_epochs=1200, seed=1, init_scale=1.0))
    held, p_held = sample(scenario, 10_000, seed + 1000)
    held_std = scaler.apply(held)
    g_hat = diffnet.forward(held_std.features)
    target = 1.0 - np.abs(p_held - lr.forward(held_std.features))
    mae = float(np.mean(np.abs(g_hat - target)))
    print(f"[bump] ideal-label rejection rate {labels.rejection_rate():.4f}; "
          f"Difference Net vs 1-|f-f_tilde|: MAE={mae:.4f}")


def coverage(n=2000, epsilon=0.02, trials=500, seed=31):
    scenario = bump_scenario()
    nn = BayesSurrogate(scenario)
    lr = LogisticModel(np.array([18.0, 0.0]), bias=-18.0 * 0.62)
    gamma, se = true_rejection_rate(scenario, nn, lr, seed=seed)
    result = coverage_experiment(scenario, n=n, epsilon=epsilon,
                                 trials=trials, seed=seed, nn=nn, lr=lr)
    print(f"[coverage] gamma={gamma:.4f} (+-{se:.5f}); "
          f"violations {result.violations}/{trials} "
          f"vs bound {train_bound(n, epsilon):.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--skip-target-check", action="store_true",
                    help="skip the slowest check (Difference Net training)")
    args = ap.parse_args()
    bayes_agreement()
    coverage()
    if not args.skip_target_check:
        acceptance_target_check()


if __name__ == "__main__":
    main()
