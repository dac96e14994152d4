"""Explanation machinery: global sensitivity ranking, local gradient and
categorical-step importances, rejected-set pattern mining, and the
partial-dependence-style logit curves that expose diminishing marginal
effects.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeatureSpec, ORDINAL
from .models import DEFAULT_TAU, Model, predict
from .selective import rejection_summary
from .training import PROB_CLAMP

LAMBDA_TOTAL = 100.0


@dataclass(frozen=True)
class GlobalImportance:
    """Per-feature shares of the model's gradient energy, summing to 100."""

    lambdas: np.ndarray
    model_tag: str

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        lam.flags.writeable = False
        object.__setattr__(self, "lambdas", lam)

    def ranking(self) -> list[int]:
        """Feature indices from most to least important."""
        return list(np.argsort(-self.lambdas, kind="stable"))

    def to_dict(self, names=None) -> dict:
        doc = {"model": self.model_tag, "lambdas": self.lambdas.tolist()}
        if names is not None:
            doc["features"] = list(names)
        return doc


def global_importance(model: Model, dataset: Dataset,
                      model_tag: str = "model") -> GlobalImportance:
    """Root-mean-square input gradient per feature, normalized to sum 100.

    Squaring before averaging keeps opposite-signed local effects from
    cancelling. Computed over the training set the model was fitted on.
    """
    if model.n_features != dataset.p:
        raise ValueError("model and dataset widths differ")
    G = model.input_gradient(dataset.features)
    rms = np.sqrt(np.mean(G * G, axis=0))
    total = rms.sum()
    if total == 0.0:
        raise ValueError("importance undefined: model output is constant")
    return GlobalImportance(LAMBDA_TOTAL * rms / total, model_tag)


def local_gradient_importance(model: Model, x) -> np.ndarray:
    """First-order Taylor weights at one point: the input gradient itself."""
    return model.input_gradient(x)


def categorical_perturbation(model: Model, x, feature_index: int,
                             direction: int,
                             schema: tuple[FeatureSpec, ...]) -> float | None:
    """Output change from stepping one ordinal feature by +/-1.

    Returns None when the step would leave the feature's valid range.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    spec = schema[feature_index]
    if spec.kind != ORDINAL:
        raise ValueError(f"feature {spec.name!r} is not ordinal_categorical")
    x = np.asarray(x, dtype=float)
    stepped = x[feature_index] + direction
    lo, hi = spec.valid_range
    if stepped < lo or stepped > hi:
        return None
    x2 = x.copy()
    x2[feature_index] = stepped
    return float(model.forward(x2)) - float(model.forward(x))


@dataclass(frozen=True)
class LocalExplanation:
    sample_index: int
    gradient_importances: np.ndarray
    # feature name -> {"+1": delta-or-None, "-1": delta-or-None}
    categorical_deltas: dict

    def to_dict(self) -> dict:
        return {
            "sample_index": self.sample_index,
            "gradient_importances": self.gradient_importances.tolist(),
            "categorical_deltas": self.categorical_deltas,
        }


def local_explanation(model: Model, dataset: Dataset,
                      sample_index: int) -> LocalExplanation:
    """Gradient importances plus both in-range categorical steps for one sample."""
    x = dataset.features[sample_index]
    grads = np.asarray(model.input_gradient(x), dtype=float)
    deltas = {}
    for j in dataset.categorical_indices():
        spec = dataset.schema[j]
        deltas[spec.name] = {
            "+1": categorical_perturbation(model, x, j, +1, dataset.schema),
            "-1": categorical_perturbation(model, x, j, -1, dataset.schema),
        }
    return LocalExplanation(sample_index=int(sample_index),
                            gradient_importances=grads,
                            categorical_deltas=deltas)


@dataclass(frozen=True)
class PatternReport:
    """Value shares of the categorical features inside the rejected set."""

    n_rejected: int
    # feature name -> {value (int) -> share of rejected samples}
    shares: dict
    # (feature name, value, share) with share >= the dominance threshold
    flagged: tuple
    # feature name -> list of (lr_output, feature value), one per rejected sample
    scatter: dict
    dominance_threshold: float

    @property
    def empty(self) -> bool:
        return self.n_rejected == 0

    def to_dict(self) -> dict:
        return {
            "n_rejected": self.n_rejected,
            "empty": self.empty,
            "dominance_threshold": self.dominance_threshold,
            "shares": {name: {str(v): s for v, s in vals.items()}
                       for name, vals in self.shares.items()},
            "flagged": [list(item) for item in self.flagged],
            "scatter": {name: [list(row) for row in rows]
                        for name, rows in self.scatter.items()},
        }

    def scatter_csv(self, feature_name: str) -> str:
        buf = io.StringIO()
        buf.write("lr_output,value\n")
        for lr_out, value in self.scatter.get(feature_name, []):
            buf.write(f"{lr_out!r},{value!r}\n")
        return buf.getvalue()


def pattern_report(diffnet, nn: Model, lr: Model, dataset: Dataset,
                   tau=DEFAULT_TAU, dominance_threshold: float = 0.5,
                   tau_g=DEFAULT_TAU) -> PatternReport:
    """Recurring categorical values among the predicted-rejected samples.

    Scatter pairs (logistic output, feature value) are emitted for every
    flagged feature. An empty rejected set yields an explicitly empty report.
    """
    summary = rejection_summary(diffnet, dataset, tau_g, nn=nn, lr=lr, tau=tau)
    idx = summary.rejected_index_set
    if idx.size == 0:
        return PatternReport(n_rejected=0, shares={}, flagged=(), scatter={},
                             dominance_threshold=dominance_threshold)
    Xr = dataset.features[idx]
    lr_out = lr.forward(Xr)
    shares: dict = {}
    flagged = []
    scatter: dict = {}
    for j in dataset.categorical_indices():
        name = dataset.schema[j].name
        col = Xr[:, j].astype(np.int64)
        values, counts = np.unique(col, return_counts=True)
        feature_shares = {int(v): float(c) / idx.size
                          for v, c in zip(values, counts)}
        shares[name] = feature_shares
        for v, s in feature_shares.items():
            if s >= dominance_threshold:
                flagged.append((name, v, s))
    for name, _, _ in flagged:
        j = next(i for i, sp in enumerate(dataset.schema) if sp.name == name)
        scatter[name] = [(float(o), float(v)) for o, v in zip(lr_out, Xr[:, j])]
    return PatternReport(n_rejected=int(idx.size), shares=shares,
                         flagged=tuple(flagged), scatter=scatter,
                         dominance_threshold=dominance_threshold)


def logit_shape(model: Model, dataset: Dataset, feature_index: int,
                grid) -> list[tuple[float, float]]:
    """Mean log-odds of the model as one ordinal feature sweeps a value grid.

    Other features stay at their observed values, so the curve is a
    partial-dependence sweep on the logit scale. An affine curve means the
    feature acts linearly; shrinking increments expose saturation.
    """
    spec = dataset.schema[feature_index]
    if spec.kind != ORDINAL:
        raise ValueError(f"feature {spec.name!r} is not ordinal_categorical")
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("empty grid")
    lo, hi = spec.valid_range
    for v in grid:
        if v < lo or v > hi:
            raise ValueError(f"grid value {v} outside [{lo}, {hi}]")
    X = dataset.features.copy()
    curve = []
    for v in grid:
        X[:, feature_index] = v
        f = np.clip(model.forward(X), PROB_CLAMP, 1.0 - PROB_CLAMP)
        curve.append((v, float(np.mean(np.log(f / (1.0 - f))))))
    return curve


def curve_csv(curve) -> str:
    buf = io.StringIO()
    buf.write("value,mean_logit\n")
    for v, m in curve:
        buf.write(f"{v!r},{m!r}\n")
    return buf.getvalue()


# --- minimal SVG renderers ---------------------------------------------------


def _svg_frame(width, height, pad, body, caption=""):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" '
        f'height="{height - 2 * pad}" fill="none" stroke="#999"/>\n'
        f"{body}"
        f'<text x="{pad}" y="{height - 4}" font-size="11">{caption}</text>\n'
        "</svg>\n"
    )


def _scale(values, lo_px, hi_px):
    vmin, vmax = min(values), max(values)
    span = vmax - vmin or 1.0
    return lambda v: lo_px + (v - vmin) / span * (hi_px - lo_px)


def scatter_svg(rows, caption="", width=320, height=320) -> str:
    """Scatter of (x, y) pairs, e.g. logistic output vs a feature value."""
    pad = 24
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    fx = _scale(xs, pad, width - pad)
    fy = _scale(ys, height - pad, pad)
    body = "".join(
        f'<circle cx="{fx(x):.2f}" cy="{fy(y):.2f}" r="2.2" '
        f'fill="#1f4e9c" fill-opacity="0.6"/>\n' for x, y in rows)
    return _svg_frame(width, height, pad, body, caption)


def curve_svg(curve, caption="", width=320, height=320) -> str:
    pad = 24
    xs = [v for v, _ in curve]
    ys = [m for _, m in curve]
    fx = _scale(xs, pad, width - pad)
    fy = _scale(ys, height - pad, pad)
    pts = " ".join(f"{fx(v):.2f},{fy(m):.2f}" for v, m in curve)
    body = (f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" '
            f'stroke-width="1.5"/>\n')
    return _svg_frame(width, height, pad, body, caption)


def bars_svg(lambdas, names=None, caption="", width=420, height=260) -> str:
    """Bar chart of the global importance shares."""
    pad = 24
    lam = list(lambdas)
    n = len(lam)
    names = names or [f"x{j + 1}" for j in range(n)]
    top = max(lam) or 1.0
    bw = (width - 2 * pad) / n
    body = ""
    for j, value in enumerate(lam):
        h = (value / top) * (height - 2 * pad)
        x0 = pad + j * bw
        y0 = height - pad - h
        body += (f'<rect x="{x0 + 1:.2f}" y="{y0:.2f}" width="{bw - 2:.2f}" '
                 f'height="{h:.2f}" fill="#1f4e9c"/>\n')
        body += (f'<text x="{x0 + bw / 2:.2f}" y="{height - pad + 11}" '
                 f'font-size="8" text-anchor="middle">{names[j]}</text>\n')
    return _svg_frame(width, height, pad, body, caption)
