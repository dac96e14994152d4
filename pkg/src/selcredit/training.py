"""Model fitting: full-batch nonlinear conjugate gradient on cross-entropy.

One "epoch" is one CG iteration (one line search). The direction update is
Polak-Ribiere with the beta clamped at zero, which falls back to steepest
descent whenever the conjugacy estimate turns negative; if the resulting
direction is still not a descent direction the iteration restarts from the
negative gradient. The line search is Armijo backtracking. Logistic
regression is fitted by the same machinery as the zero-hidden-layer special
case, so both model classes share one optimizer path.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .models import LogisticModel, MlpModel, Model, constant_model, sigmoid

MODEL_KINDS = ("logistic", "mlp2", "mlp5")
_HIDDEN = {"mlp2": 2, "mlp5": 5}

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 500
    gradient_tolerance: float = 1e-8
    seed: int = 0
    init_scale: float = 0.1
    cg_variant: str = "polak_ribiere_plus"
    line_search: str = "backtracking_armijo"
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be > 0")
        if self.cg_variant != "polak_ribiere_plus":
            raise ValueError(f"unsupported cg_variant {self.cg_variant!r}")
        if self.line_search != "backtracking_armijo":
            raise ValueError(f"unsupported line_search {self.line_search!r}")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ValueError("backtrack_factor must be in (0,1)")
        if not (0.0 < self.armijo_c < 1.0):
            raise ValueError("armijo_c must be in (0,1)")


@dataclass
class TrainTrace:
    losses: list[float] = field(default_factory=list)
    gradient_norms: list[float] = field(default_factory=list)
    # slope of the loss along each accepted search direction; all negative
    directional_derivatives: list[float] = field(default_factory=list)
    epochs_run: int = 0
    final_gradient_norm: float = float("nan")
    line_search_failures: list[int] = field(default_factory=list)
    restarts: int = 0
    degenerate: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("epoch,loss,gradient_norm\n")
        for i, (loss, gn) in enumerate(zip(self.losses, self.gradient_norms)):
            buf.write(f"{i},{loss!r},{gn!r}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "epochs_run": self.epochs_run,
            "final_loss": self.losses[-1] if self.losses else None,
            "final_gradient_norm": self.final_gradient_norm,
            "line_search_failures": len(self.line_search_failures),
            "restarts": self.restarts,
            "degenerate": self.degenerate,
        }


def _clamp_probs(p):
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def cross_entropy_loss(model: Model, dataset: Dataset) -> float:
    """Mean negative log-likelihood with probabilities clamped away from {0,1}."""
    p = _clamp_probs(model.forward(dataset.features))
    y = dataset.labels
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1.0 - p)))


# --- parameter vector packing ------------------------------------------------


def _pack(model: Model) -> np.ndarray:
    if isinstance(model, LogisticModel):
        return np.concatenate([model.coefficients, [model.bias]])
    return np.concatenate([model.hidden_weights.reshape(-1), model.hidden_biases,
                           model.output_weights, [model.output_bias]])


def _unpack(theta: np.ndarray, kind: str, p: int) -> Model:
    if kind == "logistic":
        return LogisticModel(theta[:p].copy(), bias=float(theta[p]))
    h = _HIDDEN[kind]
    W = theta[:h * p].reshape(h, p).copy()
    bh = theta[h * p:h * p + h].copy()
    v = theta[h * p + h:h * p + 2 * h].copy()
    return MlpModel(W, bh, v, output_bias=float(theta[-1]))


def _loss_and_grad(theta: np.ndarray, kind: str, X: np.ndarray, y: np.ndarray,
                   want_grad: bool = True):
    """Cross-entropy value and its gradient in packed parameter space.

    Backpropagation written out for the two logistic layers; the clamped
    probabilities feed the log terms only, the gradient uses the exact
    residual (p - y)/n which matches the clamped loss to first order.
    """
    n, p = X.shape
    if kind == "logistic":
        z = X @ theta[:p] + theta[p]
        s = sigmoid(z)
        loss = float(-np.mean(y * np.log(_clamp_probs(s))
                              + (1 - y) * np.log(_clamp_probs(1.0 - s))))
        if not want_grad:
            return loss, None
        e = (s - y) / n
        return loss, np.concatenate([X.T @ e, [e.sum()]])
    h = _HIDDEN[kind]
    W = theta[:h * p].reshape(h, p)
    bh = theta[h * p:h * p + h]
    v = theta[h * p + h:h * p + 2 * h]
    b_out = theta[-1]
    A = sigmoid(X @ W.T + bh)
    s = sigmoid(A @ v + b_out)
    loss = float(-np.mean(y * np.log(_clamp_probs(s))
                          + (1 - y) * np.log(_clamp_probs(1.0 - s))))
    if not want_grad:
        return loss, None
    e = (s - y) / n
    grad_v = A.T @ e
    grad_bout = e.sum()
    dA = np.outer(e, v) * A * (1.0 - A)
    grad_W = dA.T @ X
    grad_bh = dA.sum(axis=0)
    return loss, np.concatenate([grad_W.reshape(-1), grad_bh, grad_v, [grad_bout]])


def parameter_gradient(model: Model, dataset: Dataset) -> np.ndarray:
    """Analytic gradient of cross_entropy_loss w.r.t. the packed parameters."""
    kind = "logistic" if isinstance(model, LogisticModel) else f"mlp{model.hidden_units}"
    if kind not in MODEL_KINDS:
        raise ValueError(f"unsupported architecture {kind}")
    if model.n_features != dataset.p:
        raise ValueError("model and dataset widths differ")
    _, g = _loss_and_grad(_pack(model), kind, dataset.features, dataset.labels)
    return g


# --- conjugate gradient ------------------------------------------------------


def _minimize_cg(fun_grad, theta0: np.ndarray, config: TrainConfig):
    """Polak-Ribiere+ CG with Armijo backtracking; returns (theta, TrainTrace).

    ``fun_grad(theta, want_grad)`` must return (loss, grad-or-None); the
    backtracking probes only need the loss.
    """
    theta = theta0.copy()
    f, g = fun_grad(theta, True)
    d = -g
    trace = TrainTrace()
    trace.losses.append(f)
    trace.gradient_norms.append(float(np.linalg.norm(g)))
    step = 1.0
    for epoch in range(config.max_epochs):
        gnorm = float(np.linalg.norm(g))
        if gnorm < config.gradient_tolerance:
            break
        slope = float(g @ d)
        if slope >= 0.0:  # conjugate direction lost descent; restart
            d = -g
            slope = -float(g @ g)
            trace.restarts += 1
        trace.directional_derivatives.append(slope)
        # Armijo backtracking from an adaptive trial step
        t = min(max(2.0 * step, 1e-12), 1e6)
        accepted = False
        for _ in range(config.max_backtracks):
            f_new, _ = fun_grad(theta + t * d, False)
            if np.isfinite(f_new) and f_new <= f + config.armijo_c * t * slope:
                accepted = True
                break
            t *= config.backtrack_factor
        if not accepted:
            trace.line_search_failures.append(epoch)
            break
        step = t
        theta = theta + t * d
        f_new, g_new = fun_grad(theta, True)
        denom = float(g @ g)
        beta = max(0.0, float(g_new @ (g_new - g)) / denom) if denom > 0 else 0.0
        if beta == 0.0:
            trace.restarts += 1
        d = -g_new + beta * d
        f, g = f_new, g_new
        trace.losses.append(f)
        trace.gradient_norms.append(float(np.linalg.norm(g)))
        trace.epochs_run = epoch + 1
    trace.final_gradient_norm = float(np.linalg.norm(g))
    return theta, trace


def _init_theta(kind: str, p: int, config: TrainConfig) -> np.ndarray:
    """Weights uniform in [-init_scale, init_scale], biases zero."""
    rng = np.random.default_rng(config.seed)
    if kind == "logistic":
        theta = np.zeros(p + 1)
        theta[:p] = rng.uniform(-config.init_scale, config.init_scale, size=p)
        return theta
    h = _HIDDEN[kind]
    theta = np.zeros(h * p + 2 * h + 1)
    theta[:h * p] = rng.uniform(-config.init_scale, config.init_scale, size=h * p)
    theta[h * p + h:h * p + 2 * h] = rng.uniform(-config.init_scale,
                                                 config.init_scale, size=h)
    return theta


def train(model_kind: str, dataset: Dataset,
          config: TrainConfig = TrainConfig(),
          labels: np.ndarray | None = None) -> tuple[Model, TrainTrace]:
    """Fit a model of the requested architecture on the dataset.

    ``labels`` overrides the dataset's own labels (used when fitting the
    Difference Net on selective labels). A single-class label vector yields a
    flagged constant model instead of an exception.
    """
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"model_kind must be one of {MODEL_KINDS}")
    y = dataset.labels if labels is None else np.asarray(labels, dtype=np.int64)
    if y.shape != (dataset.n,):
        raise ValueError("labels length must match dataset size")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary")
    share = float(y.mean())
    if share in (0.0, 1.0):
        warnings.warn("single-class labels: returning a constant model",
                      stacklevel=2)
        trace = TrainTrace(degenerate=True)
        model = constant_model(model_kind, dataset.p, share)
        loss = cross_entropy_loss(model,
                                  Dataset(dataset.features, y, dataset.schema,
                                          dataset.provenance))
        trace.losses.append(loss)
        trace.gradient_norms.append(0.0)
        trace.final_gradient_norm = 0.0
        return model, trace
    X = dataset.features
    theta0 = _init_theta(model_kind, dataset.p, config)
    theta, trace = _minimize_cg(
        lambda th, wg: _loss_and_grad(th, model_kind, X, y, wg), theta0, config)
    return _unpack(theta, model_kind, dataset.p), trace
