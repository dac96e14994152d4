"""Synthetic populations with a known default probability p(x).

Every scenario exposes its exact p(x), so fitted models can be checked
against brute-force ground truth: Bayes predictions, closed-form acceptance
targets, the population rejection rate, and empirical coverage of the
concentration bounds.

Scenarios:
  linear                logit p is affine in x (the well-specified regime)
  diminishing_marginal  the effect of x1 saturates at a knee, the
                        nonlinearity a linear logit cannot express
  bump                  affine logit plus a localized high-risk pocket,
                        giving a known disagreement region
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .bounds import train_bound
from .data import CONTINUOUS, Dataset, FeatureSpec
from .models import DEFAULT_TAU, Model, predict, raw_sigmoid

SCENARIO_NAMES = ("linear", "diminishing_marginal", "bump")


@dataclass(frozen=True)
class Scenario:
    """Sampling box (uniform density) plus the parameters of p(x)."""

    name: str
    box: tuple[tuple[float, float], ...]
    coefficients: tuple[float, ...] = ()
    intercept: float = 0.0
    saturation: float | None = None  # knee of the diminishing-marginal logit
    bump_low: tuple[float, float] | None = None
    bump_high: tuple[float, float] | None = None
    bump_height: float = 0.0
    bump_steepness: float = 80.0
    seed: int = 0

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.name!r}")
        for lo, hi in self.box:
            if not (lo < hi):
                raise ValueError("sampling box sides must have lo < hi")
        if self.name in ("linear", "diminishing_marginal") and \
                len(self.coefficients) != len(self.box):
            raise ValueError("one coefficient per dimension required")
        if self.name == "diminishing_marginal" and self.saturation is None:
            raise ValueError("diminishing_marginal requires a saturation knee")
        if self.name == "bump":
            if len(self.box) != 2:
                raise ValueError("bump scenario is two-dimensional")
            if self.bump_low is None or self.bump_high is None:
                raise ValueError("bump scenario requires bump_low/bump_high")

    @property
    def dimension(self) -> int:
        return len(self.box)

    def logit(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.name == "linear":
            return X @ np.asarray(self.coefficients) + self.intercept
        if self.name == "diminishing_marginal":
            c = np.asarray(self.coefficients)
            Xeff = X.copy()
            Xeff[:, 0] = np.minimum(Xeff[:, 0], self.saturation)
            return Xeff @ c + self.intercept
        # bump: affine trend in x1 plus a soft box of extra risk
        base = X @ np.asarray(self.coefficients) + self.intercept \
            if self.coefficients else np.zeros(X.shape[0])
        s = self.bump_steepness
        lo = np.asarray(self.bump_low)
        hi = np.asarray(self.bump_high)
        profile = np.ones(X.shape[0])
        for j in range(2):
            profile = profile * raw_sigmoid(s * (X[:, j] - lo[j]))
            profile = profile * raw_sigmoid(s * (hi[j] - X[:, j]))
        return base + self.bump_height * profile

    def true_probability(self, X: np.ndarray) -> np.ndarray:
        """Exact p(x); may reach 0 or 1 for saturating parameters."""
        return raw_sigmoid(self.logit(X))

    def schema(self) -> tuple[FeatureSpec, ...]:
        return tuple(
            FeatureSpec(f"x{j + 1}", CONTINUOUS, (lo, hi), j)
            for j, (lo, hi) in enumerate(self.box))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "box": [list(side) for side in self.box],
            "coefficients": list(self.coefficients),
            "intercept": self.intercept,
            "saturation": self.saturation,
            "bump_low": None if self.bump_low is None else list(self.bump_low),
            "bump_high": None if self.bump_high is None else list(self.bump_high),
            "bump_height": self.bump_height,
            "bump_steepness": self.bump_steepness,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(doc: dict) -> "Scenario":
        return Scenario(
            name=doc["name"],
            box=tuple(tuple(side) for side in doc["box"]),
            coefficients=tuple(doc.get("coefficients") or ()),
            intercept=doc.get("intercept", 0.0),
            saturation=doc.get("saturation"),
            bump_low=None if doc.get("bump_low") is None else tuple(doc["bump_low"]),
            bump_high=None if doc.get("bump_high") is None else tuple(doc["bump_high"]),
            bump_height=doc.get("bump_height", 0.0),
            bump_steepness=doc.get("bump_steepness", 80.0),
            seed=doc.get("seed", 0),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            return Scenario.from_dict(json.load(fh))


def linear_scenario(coefficients=(1.2, -0.8), intercept=0.3,
                    box=((-3.0, 3.0), (-3.0, 3.0)), seed=0) -> Scenario:
    return Scenario("linear", tuple(tuple(s) for s in box),
                    coefficients=tuple(coefficients), intercept=intercept,
                    seed=seed)


def diminishing_marginal_scenario(slope=1.6, saturation=2.0, other=0.9,
                                  intercept=-2.4,
                                  box=((0.0, 6.0), (-3.0, 3.0)),
                                  seed=0) -> Scenario:
    """logit p = slope * min(x1, saturation) + other * x2 + intercept."""
    return Scenario("diminishing_marginal", tuple(tuple(s) for s in box),
                    coefficients=(slope, other), intercept=intercept,
                    saturation=saturation, seed=seed)


def bump_scenario(base_slope=18.0, boundary=0.62,
                  bump_low=(0.30, 0.44), bump_high=(0.42, 0.56),
                  bump_height=26.0, bump_steepness=260.0, seed=0) -> Scenario:
    """Affine trend crossing at ``boundary`` plus a saturated high-risk box
    on the low-risk side; the box is the designed disagreement region.

    The box sits close to the boundary and is centered in x2 so a fitted
    linear logit stays near the true trend, keeping the disagreement region
    essentially the box itself.
    """
    return Scenario("bump", ((0.0, 1.0), (0.0, 1.0)),
                    coefficients=(base_slope, 0.0),
                    intercept=-base_slope * boundary,
                    bump_low=tuple(bump_low), bump_high=tuple(bump_high),
                    bump_height=bump_height, bump_steepness=bump_steepness,
                    seed=seed)


def make_scenario(name: str, seed: int = 0) -> Scenario:
    factory = {"linear": linear_scenario,
               "diminishing_marginal": diminishing_marginal_scenario,
               "bump": bump_scenario}
    if name not in factory:
        raise ValueError(f"unknown scenario {name!r}")
    return factory[name](seed=seed)


class BayesSurrogate:
    """Model-shaped view of a scenario's exact p(x).

    Stands in for a perfectly trained network wherever only forward
    evaluation is needed.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    @property
    def n_features(self) -> int:
        return self.scenario.dimension

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        p = self.scenario.true_probability(np.atleast_2d(x))
        return float(p[0]) if x.ndim == 1 else p


def sample(scenario: Scenario, n: int, seed: int) -> tuple[Dataset, np.ndarray]:
    """Draw n points from the uniform box, labels Bernoulli(p(x)).

    Returns the dataset together with the exact per-sample p(x).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    lo = np.array([side[0] for side in scenario.box])
    hi = np.array([side[1] for side in scenario.box])
    X = rng.uniform(lo, hi, size=(n, scenario.dimension))
    p = scenario.true_probability(X)
    y = (rng.random(n) < p).astype(np.int64)
    return Dataset(X, y, scenario.schema(), provenance="synthetic"), p


def _rejection_conditional(scenario: Scenario, nn: Model | BayesSurrogate,
                           lr: Model, X: np.ndarray, tau) -> np.ndarray:
    """P(rejected | x) per point: the outcome must side with the net where
    the two models disagree, i.e. 1{F != Ftilde} * P(y = F | x)."""
    p = scenario.true_probability(X)
    F = predict(np.clip(nn.forward(X), 0.0, 1.0), tau)
    Ft = predict(np.clip(lr.forward(X), 0.0, 1.0), tau)
    match_nn = np.where(F == 1, p, 1.0 - p)
    return np.where(F != Ft, match_nn, 0.0)


def true_rejection_rate(scenario: Scenario, nn: Model | BayesSurrogate,
                        lr: Model, tau=DEFAULT_TAU, mc_samples: int = 200_000,
                        seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo estimate of the population rejection rate, with its
    standard error.

    The integrand is the conditional rejection probability, so the only
    noise is from the x draws. Fewer than 1000 draws are refused as
    meaningless.
    """
    if mc_samples < 1000:
        raise ValueError("mc_samples must be >= 1000")
    rng = np.random.default_rng(seed)
    lo = np.array([side[0] for side in scenario.box])
    hi = np.array([side[1] for side in scenario.box])
    X = rng.uniform(lo, hi, size=(mc_samples, scenario.dimension))
    q = _rejection_conditional(scenario, nn, lr, X, tau)
    gamma = float(q.mean())
    se = float(q.std(ddof=1) / math.sqrt(mc_samples))
    return gamma, se


@dataclass
class CoverageResult:
    n: int
    epsilon: float
    trials: int
    gamma: float
    gamma_se: float
    violations: int
    bound: float

    @property
    def frequency(self) -> float:
        return self.violations / self.trials

    def binomial_se(self) -> float:
        b = min(self.bound, 1.0)
        return math.sqrt(b * (1.0 - b) / self.trials)

    def to_dict(self) -> dict:
        return {"n": self.n, "epsilon": self.epsilon, "trials": self.trials,
                "gamma": self.gamma, "gamma_se": self.gamma_se,
                "violations": self.violations, "frequency": self.frequency,
                "bound": self.bound}


def coverage_experiment(scenario: Scenario, n: int, epsilon: float,
                        trials: int, seed: int, nn: Model | BayesSurrogate,
                        lr: Model, tau=DEFAULT_TAU,
                        gamma_mc_samples: int = 400_000) -> CoverageResult:
    """Empirical check of the training-set concentration bound.

    Each trial draws a fresh n-sample training set from the scenario, forms
    the empirical rejection rate from the realized labels, and counts a
    violation when it strays from the population rate by at least epsilon.
    """
    if trials < 200:
        raise ValueError("trials must be >= 200")
    if n < 1:
        raise ValueError("n must be >= 1")
    gamma, gamma_se = true_rejection_rate(scenario, nn, lr, tau,
                                          mc_samples=gamma_mc_samples,
                                          seed=seed + 999_331)
    lo = np.array([side[0] for side in scenario.box])
    hi = np.array([side[1] for side in scenario.box])
    children = np.random.SeedSequence(seed).spawn(trials)
    violations = 0
    for child in children:
        rng = np.random.default_rng(child)
        X = rng.uniform(lo, hi, size=(n, scenario.dimension))
        p = scenario.true_probability(X)
        y = (rng.random(n) < p).astype(np.int64)
        F = predict(np.clip(nn.forward(X), 0.0, 1.0), tau)
        Ft = predict(np.clip(lr.forward(X), 0.0, 1.0), tau)
        rejected = (F != Ft) & (y == F)
        gamma_x = float(rejected.mean())
        if abs(gamma_x - gamma) >= epsilon:
            violations += 1
    return CoverageResult(n=n, epsilon=epsilon, trials=trials, gamma=gamma,
                          gamma_se=gamma_se, violations=violations,
                          bound=train_bound(n, epsilon))
