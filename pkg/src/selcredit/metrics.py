"""Evaluation quantities: error rate, confusion matrix, recall, ROC/AUC,
and conditional errors on the rejected subset. Default (label 1) is the
positive class throughout.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .models import DEFAULT_TAU, Model, predict


def _as_binary(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError(f"{name} must contain only 0 and 1")
    return a.astype(np.int64)


def classification_error(predictions, labels) -> float:
    """Fraction of mismatched predictions."""
    pred = _as_binary(predictions, "predictions")
    y = _as_binary(labels, "labels")
    if pred.shape != y.shape:
        raise ValueError("predictions and labels must have equal length")
    if pred.size == 0:
        raise ValueError("empty input")
    return float(np.mean(pred != y))


@dataclass(frozen=True)
class ConfusionMatrix:
    true_positive: int
    false_negative: int
    false_positive: int
    true_negative: int

    @property
    def total(self) -> int:
        return (self.true_positive + self.false_negative
                + self.false_positive + self.true_negative)

    def to_dict(self) -> dict:
        return {"tp": self.true_positive, "fn": self.false_negative,
                "fp": self.false_positive, "tn": self.true_negative}


def confusion(predictions, labels) -> ConfusionMatrix:
    pred = _as_binary(predictions, "predictions")
    y = _as_binary(labels, "labels")
    if pred.shape != y.shape:
        raise ValueError("predictions and labels must have equal length")
    return ConfusionMatrix(
        true_positive=int(np.sum((y == 1) & (pred == 1))),
        false_negative=int(np.sum((y == 1) & (pred == 0))),
        false_positive=int(np.sum((y == 0) & (pred == 1))),
        true_negative=int(np.sum((y == 0) & (pred == 0))),
    )


def recall(matrix: ConfusionMatrix) -> float | None:
    """TP / (TP + FN); None when there are no actual positives."""
    denom = matrix.true_positive + matrix.false_negative
    if denom == 0:
        return None
    return matrix.true_positive / denom


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]  # (fpr, tpr), sorted by fpr
    auc: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("fpr,tpr\n")
        for fpr, tpr in self.points:
            buf.write(f"{fpr!r},{tpr!r}\n")
        return buf.getvalue()

    def to_svg(self, width: int = 320, height: int = 320) -> str:
        """Minimal standalone SVG polyline of the curve plus the diagonal."""
        pad = 24
        w, h = width - 2 * pad, height - 2 * pad

        def sx(x):
            return pad + x * w

        def sy(y):
            return pad + (1.0 - y) * h

        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in self.points)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">\n'
            f'<rect x="{pad}" y="{pad}" width="{w}" height="{h}" '
            f'fill="none" stroke="#999"/>\n'
            f'<line x1="{sx(0):.2f}" y1="{sy(0):.2f}" x2="{sx(1):.2f}" '
            f'y2="{sy(1):.2f}" stroke="#ccc" stroke-dasharray="4 3"/>\n'
            f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" '
            f'stroke-width="1.5"/>\n'
            f'<text x="{pad}" y="{height - 4}" font-size="11">'
            f"AUC = {self.auc:.4f}</text>\n</svg>\n"
        )


def roc_auc(scores, labels) -> RocCurve:
    """ROC curve over the distinct score thresholds, AUC by the trapezoid rule.

    Tied scores share one curve point, which makes the trapezoid area equal
    the Mann-Whitney statistic with ties counted one half.
    """
    s = np.asarray(scores, dtype=float)
    y = _as_binary(labels, "labels")
    if s.shape != y.shape:
        raise ValueError("scores and labels must have equal length")
    P = int(np.sum(y == 1))
    N = int(np.sum(y == 0))
    if P == 0 or N == 0:
        raise ValueError("roc_auc requires both classes present")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    # group ties: one point after each distinct score block
    boundaries = np.flatnonzero(np.diff(s_sorted)) + 1
    blocks = np.concatenate([boundaries, [s.size]])
    tp_cum = np.cumsum(y_sorted == 1)
    fp_cum = np.cumsum(y_sorted == 0)
    tps = np.concatenate([[0], tp_cum[blocks - 1]])
    fps = np.concatenate([[0], fp_cum[blocks - 1]])
    # integer accumulation keeps the trapezoid sum exact
    area2 = np.sum((fps[1:] - fps[:-1]) * (tps[1:] + tps[:-1]))
    auc = float(area2) / (2.0 * P * N)
    points = tuple((float(fp) / N, float(tp) / P) for fp, tp in zip(fps, tps))
    return RocCurve(points=points, auc=auc)


def rejected_set_errors(rejected_indices, nn: Model, lr: Model,
                        dataset, tau=DEFAULT_TAU):
    """Per-model classification error restricted to the rejected subset.

    Returns (lr_error, nn_error), or (None, None) for an empty subset.
    """
    idx = np.asarray(rejected_indices, dtype=np.int64)
    if idx.size == 0:
        return None, None
    X = dataset.features[idx]
    y = dataset.labels[idx]
    lr_pred = predict(lr.forward(X), tau)
    nn_pred = predict(nn.forward(X), tau)
    return classification_error(lr_pred, y), classification_error(nn_pred, y)


def evaluation_report(model: Model, dataset, tau=DEFAULT_TAU) -> dict:
    """Error, confusion, recall, and ROC/AUC of one model on one dataset."""
    probs = model.forward(dataset.features)
    preds = predict(probs, tau)
    matrix = confusion(preds, dataset.labels)
    rec = recall(matrix)
    curve = roc_auc(probs, dataset.labels) \
        if 0 < dataset.labels.sum() < dataset.n else None
    return {
        "n": dataset.n,
        "classification_error": classification_error(preds, dataset.labels),
        "confusion": matrix.to_dict(),
        "recall": rec,
        "auc": None if curve is None else curve.auc,
        "roc_points": None if curve is None else [list(pt) for pt in curve.points],
    }
