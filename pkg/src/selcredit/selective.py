"""Second learning stage: selective labels and the Difference Net.

A sample is rejected (z = 0) when the linear model cannot be trusted there.
Two labeling rules are supported. The ideal rule rejects wherever the net
and the logistic model disagree; the practical rule additionally requires
the realized outcome to side with the net, which restricts attention to the
region where the net is actually the better model. The Difference Net, a
five-unit network, learns these labels; its thresholded output G(x) = 0
marks the predicted rejections.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .models import DEFAULT_TAU, MlpModel, Model, predict
from .training import TrainConfig, TrainTrace, train

VARIANTS = ("ideal", "practical")


@dataclass(frozen=True)
class SelectiveLabels:
    z: np.ndarray  # (n,) in {0,1}; 0 = rejected
    variant: str

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.int64)
        if not np.all((z == 0) | (z == 1)):
            raise ValueError("selective labels must be 0 or 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    def rejected_indices(self) -> np.ndarray:
        return np.flatnonzero(self.z == 0)

    def rejection_rate(self) -> float:
        return float(np.mean(self.z == 0))

    def to_dict(self) -> dict:
        return {"variant": self.variant, "z": self.z.tolist()}

    @staticmethod
    def from_dict(doc: dict) -> "SelectiveLabels":
        return SelectiveLabels(np.array(doc["z"], dtype=np.int64), doc["variant"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "SelectiveLabels":
        with open(path, encoding="utf-8") as fh:
            return SelectiveLabels.from_dict(json.load(fh))


def selective_labels_from_predictions(nn_pred, lr_pred, y, variant: str) \
        -> SelectiveLabels:
    """Label rule applied to precomputed thresholded predictions.

    practical: z = 0 iff nn_pred != lr_pred and y == nn_pred.
    ideal:     z = 0 iff nn_pred != lr_pred.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    F = np.asarray(nn_pred, dtype=np.int64)
    Ft = np.asarray(lr_pred, dtype=np.int64)
    if F.shape != Ft.shape:
        raise ValueError("prediction vectors must have equal length")
    disagree = F != Ft
    if variant == "ideal":
        rejected = disagree
    else:
        yy = np.asarray(y, dtype=np.int64)
        if yy.shape != F.shape:
            raise ValueError("labels must match prediction length")
        rejected = disagree & (yy == F)
    return SelectiveLabels((~rejected).astype(np.int64), variant)


def make_selective_labels(nn: Model, lr: Model, dataset: Dataset,
                          tau=DEFAULT_TAU, variant: str = "practical") \
        -> SelectiveLabels:
    if nn.n_features != dataset.p or lr.n_features != dataset.p:
        raise ValueError("model and dataset widths differ")
    F = predict(nn.forward(dataset.features), tau)
    Ft = predict(lr.forward(dataset.features), tau)
    return selective_labels_from_predictions(F, Ft, dataset.labels, variant)


def train_difference_net(dataset: Dataset, labels: SelectiveLabels,
                         config: TrainConfig = TrainConfig()) \
        -> tuple[MlpModel, TrainTrace]:
    """Fit the five-unit net on selective labels.

    All-accept labels produce a flagged constant model whose prediction is 1
    everywhere (nothing rejected).
    """
    if labels.n != dataset.n:
        raise ValueError("selective labels length must match dataset size")
    model, trace = train("mlp5", dataset, config, labels=labels.z)
    return model, trace


def acceptance_oracle(f_value: float, lr_value: float) -> float:
    """Closed-form acceptance target for ideal labels: 1 - |f - f_tilde|."""
    f = np.asarray(f_value, dtype=float)
    g = np.asarray(lr_value, dtype=float)
    if np.any((f < 0) | (f > 1)) or np.any((g < 0) | (g > 1)):
        raise ValueError("oracle inputs must lie in [0,1]")
    out = 1.0 - np.abs(f - g)
    return float(out) if out.ndim == 0 else out


def practical_acceptance_oracle(p_true: float, F: int, F_tilde: int) -> float:
    """Exact P(z = 1 | x) under the practical rule and Bernoulli(p_true) outcomes.

    Agreement keeps the sample with certainty; under disagreement the sample
    survives only when the outcome contradicts the net's prediction.
    """
    p = np.asarray(p_true, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p_true must lie in [0,1]")
    F = np.asarray(F, dtype=np.int64)
    Ft = np.asarray(F_tilde, dtype=np.int64)
    prob_match_nn = np.where(F == 1, p, 1.0 - p)
    out = np.where(F == Ft, 1.0, 1.0 - prob_match_nn)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RejectionSummary:
    rejection_rate: float
    rejected_index_set: np.ndarray
    n: int
    # among rejected: how the two stage-one models split
    nn_default_lr_non_default: int | None = None
    nn_non_default_lr_default: int | None = None

    def __post_init__(self):
        idx = np.asarray(self.rejected_index_set, dtype=np.int64)
        idx.flags.writeable = False
        object.__setattr__(self, "rejected_index_set", idx)

    def direction_breakdown(self) -> dict | None:
        if self.nn_default_lr_non_default is None:
            return None
        return {"nn_default_lr_non_default": self.nn_default_lr_non_default,
                "nn_non_default_lr_default": self.nn_non_default_lr_default}

    def to_dict(self) -> dict:
        return {
            "rejection_rate": self.rejection_rate,
            "n": self.n,
            "rejected_indices": self.rejected_index_set.tolist(),
            "direction_breakdown": self.direction_breakdown(),
        }

    def indices_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index\n")
        for i in self.rejected_index_set:
            buf.write(f"{int(i)}\n")
        return buf.getvalue()


def rejection_summary(diffnet: MlpModel, dataset: Dataset, tau_g=DEFAULT_TAU,
                      nn: Model | None = None, lr: Model | None = None,
                      tau=DEFAULT_TAU) -> RejectionSummary:
    """Predicted rejections G(x) = 0 on a dataset, with the disagreement
    direction split when the stage-one models are supplied."""
    if diffnet.n_features != dataset.p:
        raise ValueError("model and dataset widths differ")
    G = predict(diffnet.forward(dataset.features), tau_g)
    rejected = np.flatnonzero(G == 0)
    nn_d = nn_nd = None
    if nn is not None and lr is not None:
        Xr = dataset.features[rejected] if rejected.size else \
            dataset.features[:0]
        F = predict(nn.forward(Xr), tau) if rejected.size else np.array([], dtype=np.int64)
        Ft = predict(lr.forward(Xr), tau) if rejected.size else np.array([], dtype=np.int64)
        nn_d = int(np.sum((F == 1) & (Ft == 0)))
        nn_nd = int(np.sum((F == 0) & (Ft == 1)))
    return RejectionSummary(
        rejection_rate=float(rejected.size) / dataset.n,
        rejected_index_set=rejected,
        n=dataset.n,
        nn_default_lr_non_default=nn_d,
        nn_non_default_lr_default=nn_nd,
    )
