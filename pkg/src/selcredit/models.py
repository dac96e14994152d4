"""Predictors: logistic regression, one-hidden-layer net, and the Difference Net.

All three share the same standardized feature vector. The logistic model is
the transparent baseline; the two-unit net approximates the default
probability; the five-unit net (same class, more units) learns where the two
disagree. Forward passes, thresholded predictions, and analytic input
gradients live here. Fitting lives in ``training``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

DEFAULT_TAU = 0.5

MODEL_FILE_VERSION = "selcredit-model/1"


@dataclass(frozen=True)
class Threshold:
    """Decision cutoff on a probability. Ties (prob == tau) classify as default."""

    tau: float = DEFAULT_TAU

    def __post_init__(self):
        if not (0.0 < self.tau < 1.0):
            raise ValueError(f"tau must be in (0,1), got {self.tau}")


def _tau_value(tau) -> float:
    t = tau.tau if isinstance(tau, Threshold) else float(tau)
    if not (0.0 < t < 1.0):
        raise ValueError(f"tau must be in (0,1), got {t}")
    return t


def raw_sigmoid(z):
    """Numerically stable logistic function; saturates to exactly 0 or 1."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(z):
    """Logistic function clipped to the open interval (0,1), the model contract."""
    return np.clip(raw_sigmoid(z), np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))


def _check_input(x, p: int):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != p:
            raise ValueError(f"input has {x.shape[0]} features, model expects {p}")
    elif x.ndim == 2:
        if x.shape[1] != p:
            raise ValueError(f"input has {x.shape[1]} features, model expects {p}")
    else:
        raise ValueError(f"input must be a vector or matrix, got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    return x


@dataclass(frozen=True)
class LogisticModel:
    """Linear-logit probability model: sigmoid(bias + coefficients . x)."""

    coefficients: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d array")
        if not np.all(np.isfinite(c)) or not np.isfinite(self.bias):
            raise ValueError("model parameters must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def n_features(self) -> int:
        return self.coefficients.shape[0]

    def logits(self, x):
        x = _check_input(x, self.n_features)
        return x @ self.coefficients + self.bias

    def forward(self, x):
        return sigmoid(self.logits(x))

    def input_gradient(self, x):
        """d forward / d x, one row per sample for matrix input."""
        x = _check_input(x, self.n_features)
        s = self.forward(x)
        slope = s * (1.0 - s)
        if x.ndim == 1:
            return slope * self.coefficients
        return slope[:, None] * self.coefficients[None, :]


@dataclass(frozen=True)
class MlpModel:
    """One hidden layer, logistic activations on both layers.

    Two hidden units for the default-probability net, five for the
    Difference Net; the class itself is agnostic.
    """

    hidden_weights: np.ndarray  # (h, p)
    hidden_biases: np.ndarray  # (h,)
    output_weights: np.ndarray  # (h,)
    output_bias: float = 0.0

    def __post_init__(self):
        W = np.asarray(self.hidden_weights, dtype=float)
        bh = np.asarray(self.hidden_biases, dtype=float)
        v = np.asarray(self.output_weights, dtype=float)
        if W.ndim != 2:
            raise ValueError("hidden_weights must be a (h, p) matrix")
        h, p = W.shape
        if h == 0 or p == 0:
            raise ValueError("hidden_weights must be non-empty")
        if bh.shape != (h,) or v.shape != (h,):
            raise ValueError("hidden_biases and output_weights must have length h")
        for a in (W, bh, v):
            if not np.all(np.isfinite(a)):
                raise ValueError("model parameters must be finite")
            a.flags.writeable = False
        if not np.isfinite(self.output_bias):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "hidden_weights", W)
        object.__setattr__(self, "hidden_biases", bh)
        object.__setattr__(self, "output_weights", v)
        object.__setattr__(self, "output_bias", float(self.output_bias))

    @property
    def hidden_units(self) -> int:
        return self.hidden_weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.hidden_weights.shape[1]

    def hidden_activations(self, x):
        x = _check_input(x, self.n_features)
        return sigmoid(x @ self.hidden_weights.T + self.hidden_biases)

    def logits(self, x):
        a = self.hidden_activations(x)
        return a @ self.output_weights + self.output_bias

    def forward(self, x):
        return sigmoid(self.logits(x))

    def input_gradient(self, x):
        """Chain-rule gradient through both logistic layers."""
        x = _check_input(x, self.n_features)
        a = self.hidden_activations(x)
        s = sigmoid(a @ self.output_weights + self.output_bias)
        inner = (self.output_weights * a * (1.0 - a)) @ self.hidden_weights
        if x.ndim == 1:
            return s * (1.0 - s) * inner
        return (s * (1.0 - s))[:, None] * inner


Model = LogisticModel | MlpModel


def forward(model: Model, x):
    """Probability of default in (0,1) for a sample or a matrix of samples."""
    return model.forward(x)


def predict(probability, tau=DEFAULT_TAU):
    """Threshold rule: 1 (default) iff probability >= tau."""
    t = _tau_value(tau)
    prob = np.asarray(probability, dtype=float)
    if np.any(prob < 0.0) or np.any(prob > 1.0):
        raise ValueError("probability must lie in [0,1]")
    out = (prob >= t).astype(np.int64)
    return out if prob.ndim else int(out)


def predict_model(model: Model, x, tau=DEFAULT_TAU):
    return predict(model.forward(x), tau)


def input_gradient(model: Model, x):
    return model.input_gradient(x)


def _constant_logit_for_share(share: float) -> float:
    clamped = min(max(share, 1e-12), 1.0 - 1e-12)
    return float(np.log(clamped / (1.0 - clamped)))


def constant_model(kind: str, n_features: int, share: float) -> Model:
    """Degenerate model that outputs sigmoid(logit(share)) everywhere.

    Returned by training when the labels contain a single class.
    """
    z = _constant_logit_for_share(share)
    if kind == "logistic":
        return LogisticModel(np.zeros(n_features), bias=z)
    h = {"mlp2": 2, "mlp5": 5}[kind]
    return MlpModel(
        hidden_weights=np.zeros((h, n_features)),
        hidden_biases=np.zeros(h),
        output_weights=np.zeros(h),
        output_bias=z,
    )


# --- serialization ---------------------------------------------------------


def model_kind(model: Model) -> str:
    if isinstance(model, LogisticModel):
        return "logistic"
    return f"mlp{model.hidden_units}"


def model_to_dict(model: Model, scaler=None, schema_fingerprint: str | None = None,
                  training_meta: dict | None = None) -> dict:
    doc = {
        "format": MODEL_FILE_VERSION,
        "model_kind": model_kind(model),
        "scaler": None if scaler is None else scaler.to_dict(),
        "schema_fingerprint": schema_fingerprint,
        "training": training_meta or {},
    }
    if isinstance(model, LogisticModel):
        doc["dimensions"] = {"p": model.n_features}
        doc["weights"] = model.coefficients.tolist()
        doc["bias"] = model.bias
    else:
        doc["dimensions"] = {"p": model.n_features, "h": model.hidden_units}
        doc["hidden_weights"] = model.hidden_weights.reshape(-1).tolist()  # row-major
        doc["hidden_biases"] = model.hidden_biases.tolist()
        doc["output_weights"] = model.output_weights.tolist()
        doc["output_bias"] = model.output_bias
    return doc


def model_from_dict(doc: dict) -> Model:
    kind = doc["model_kind"]
    if kind == "logistic":
        return LogisticModel(np.array(doc["weights"], dtype=float), bias=doc["bias"])
    h = doc["dimensions"]["h"]
    p = doc["dimensions"]["p"]
    return MlpModel(
        hidden_weights=np.array(doc["hidden_weights"], dtype=float).reshape(h, p),
        hidden_biases=np.array(doc["hidden_biases"], dtype=float),
        output_weights=np.array(doc["output_weights"], dtype=float),
        output_bias=doc["output_bias"],
    )


def save_model(model: Model, path, scaler=None, schema_fingerprint=None,
               training_meta=None):
    doc = model_to_dict(model, scaler=scaler, schema_fingerprint=schema_fingerprint,
                        training_meta=training_meta)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """Returns (model, doc); doc keeps scaler/fingerprint/training metadata."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return model_from_dict(doc), doc


def fingerprint(obj) -> str:
    """Stable sha256 of a JSON-serializable object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
