import numpy as np
import pytest

from selcredit.data import CONTINUOUS, Dataset, FeatureSpec
from selcredit.models import LogisticModel, MlpModel
from selcredit.training import (
    TrainConfig,
    cross_entropy_loss,
    parameter_gradient,
    train,
)
from tests.test_models import random_mlp


def make_dataset(X, y):
    schema = tuple(FeatureSpec(f"x{j + 1}", CONTINUOUS, (-np.inf, np.inf), j)
                   for j in range(X.shape[1]))
    return Dataset(np.asarray(X, float), np.asarray(y), schema, "generic")


def fd_parameter_gradient(model, dataset, h=1e-5):
    """Finite-difference oracle built purely on the public model surface."""
    def rebuild_logistic(coeffs, bias):
        return LogisticModel(coeffs, bias)

    def rebuild_mlp(W, bh, v, bo):
        return MlpModel(W, bh, v, bo)

    grads = []
    if isinstance(model, LogisticModel):
        params = [("c", i) for i in range(model.n_features)] + [("b", None)]
        for kind, i in params:
            def loss_at(delta, kind=kind, i=i):
                c = model.coefficients.copy()
                b = model.bias
                if kind == "c":
                    c[i] += delta
                else:
                    b += delta
                return cross_entropy_loss(rebuild_logistic(c, b), dataset)
            grads.append((loss_at(h) - loss_at(-h)) / (2 * h))
        return np.array(grads)
    hshape = model.hidden_weights.shape
    layout = ([("W", idx) for idx in np.ndindex(hshape)]
              + [("bh", i) for i in range(hshape[0])]
              + [("v", i) for i in range(hshape[0])]
              + [("bo", None)])
    for kind, idx in layout:
        def loss_at(delta, kind=kind, idx=idx):
            W = model.hidden_weights.copy()
            bh = model.hidden_biases.copy()
            v = model.output_weights.copy()
            bo = model.output_bias
            if kind == "W":
                W[idx] += delta
            elif kind == "bh":
                bh[idx] += delta
            elif kind == "v":
                v[idx] += delta
            else:
                bo += delta
            return cross_entropy_loss(rebuild_mlp(W, bh, v, bo), dataset)
        grads.append((loss_at(h) - loss_at(-h)) / (2 * h))
    return np.array(grads)


class TestCrossEntropy:
    def test_coin_flip_entropy(self):
        ds = make_dataset(np.zeros((8, 2)), [0, 1] * 4)
        m = LogisticModel(np.zeros(2), bias=0.0)
        assert cross_entropy_loss(m, ds) == pytest.approx(np.log(2.0), abs=1e-12)

    def test_hand_arithmetic(self):
        # y=[1,0], f=[0.9,0.2] -> -(ln 0.9 + ln 0.8)/2
        x = np.log(np.array([[9.0], [0.25]]))  # sigmoid(ln 9)=0.9, sigmoid(ln .25)=0.2
        ds = make_dataset(x, [1, 0])
        m = LogisticModel(np.array([1.0]), bias=0.0)
        expected = -(np.log(0.9) + np.log(0.8)) / 2.0
        assert cross_entropy_loss(m, ds) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.1643, abs=1e-4)

    def test_perfect_confident_fit_is_near_zero(self):
        ds = make_dataset(np.array([[1.0], [-1.0]]), [1, 0])
        m = LogisticModel(np.array([1e4]), bias=0.0)
        assert cross_entropy_loss(m, ds) < 1e-9

    def test_dimension_mismatch(self):
        ds = make_dataset(np.zeros((3, 2)), [0, 1, 0])
        with pytest.raises(ValueError):
            cross_entropy_loss(LogisticModel(np.zeros(3)), ds)


class TestParameterGradient:
    def test_zero_model_balanced_labels_zero_bias_gradient(self):
        X = np.array([[1.0, 2.0], [-1.0, -2.0], [0.5, 0.0], [-0.5, 0.0]])
        ds = make_dataset(X, [1, 0, 1, 0])
        g = parameter_gradient(LogisticModel(np.zeros(2), bias=0.0), ds)
        assert g[-1] == pytest.approx(0.0, abs=1e-15)

    def test_matches_finite_differences_logistic(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            X = rng.normal(size=(20, 3))
            y = rng.integers(0, 2, size=20)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            ds = make_dataset(X, y)
            m = LogisticModel(rng.normal(size=3), float(rng.normal()))
            np.testing.assert_allclose(parameter_gradient(m, ds),
                                       fd_parameter_gradient(m, ds),
                                       rtol=1e-4, atol=1e-10)

    def test_matches_finite_differences_mlp(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            X = rng.normal(size=(20, 4))
            y = rng.integers(0, 2, size=20)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            ds = make_dataset(X, y)
            m = random_mlp(rng, p=4)
            np.testing.assert_allclose(parameter_gradient(m, ds),
                                       fd_parameter_gradient(m, ds),
                                       rtol=1e-4, atol=1e-10)

    def test_duplicating_samples_leaves_mean_gradient_unchanged(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(15, 3))
        y = rng.integers(0, 2, size=15)
        ds = make_dataset(X, y)
        ds2 = make_dataset(np.vstack([X, X]), np.concatenate([y, y]))
        m = random_mlp(rng, p=3)
        np.testing.assert_allclose(parameter_gradient(m, ds),
                                   parameter_gradient(m, ds2), rtol=1e-12)


class TestTrain:
    def test_separable_reaches_zero_error(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(120, 2))
        y = (X @ np.array([1.0, 0.5]) > 0).astype(int)
        ds = make_dataset(X, y)
        model, trace = train("logistic", ds, TrainConfig(max_epochs=300, seed=1))
        pred = (model.forward(X) >= 0.5).astype(int)
        assert np.mean(pred != y) == 0.0
        assert trace.losses[-1] <= trace.losses[0]

    def test_xor_separates_mlp_but_not_logistic(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1, 1, 0])
        # brute-force oracle: no hyperplane over a parameter grid separates XOR
        grid = np.linspace(-3, 3, 13)
        for w1 in grid:
            for w2 in grid:
                for b in grid:
                    pred = (X @ np.array([w1, w2]) + b >= 0).astype(int)
                    assert np.any(pred != y)
        ds = make_dataset(X, y)
        logistic, _ = train("logistic", ds, TrainConfig(max_epochs=500, seed=3))
        lr_pred = (logistic.forward(X) >= 0.5).astype(int)
        assert np.mean(lr_pred != y) >= 0.25
        mlp, _ = train("mlp2", ds, TrainConfig(max_epochs=500, seed=3))
        mlp_pred = (mlp.forward(X) >= 0.5).astype(int)
        assert np.mean(mlp_pred != y) == 0.0

    def test_deterministic_bit_identical(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 2, size=60)
        ds = make_dataset(X, y)
        cfg = TrainConfig(max_epochs=80, seed=11)
        m1, t1 = train("mlp2", ds, cfg)
        m2, t2 = train("mlp2", ds, cfg)
        np.testing.assert_array_equal(m1.hidden_weights, m2.hidden_weights)
        np.testing.assert_array_equal(m1.output_weights, m2.output_weights)
        assert m1.output_bias == m2.output_bias
        assert t1.losses == t2.losses

    def test_loss_never_increases(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(80, 3))
        y = (X[:, 0] + rng.normal(scale=0.8, size=80) > 0).astype(int)
        ds = make_dataset(X, y)
        for kind in ("logistic", "mlp2", "mlp5"):
            _, trace = train(kind, ds, TrainConfig(max_epochs=60, seed=1))
            losses = np.array(trace.losses)
            assert np.all(np.diff(losses) <= 1e-15)

    def test_descent_directions_always_negative(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(50, 2))
        y = rng.integers(0, 2, size=50)
        ds = make_dataset(X, y)
        _, trace = train("mlp2", ds, TrainConfig(max_epochs=120, seed=5))
        assert trace.directional_derivatives
        assert all(s < 0 for s in trace.directional_derivatives)

    def test_single_class_returns_flagged_constant(self):
        ds = make_dataset(np.random.default_rng(1).normal(size=(10, 2)),
                          np.ones(10, dtype=int))
        with pytest.warns(UserWarning):
            model, trace = train("logistic", ds, TrainConfig(seed=0))
        assert trace.degenerate
        assert np.all(model.forward(ds.features) > 0.5)

    def test_trace_csv_round_trip(self):
        ds = make_dataset(np.random.default_rng(3).normal(size=(30, 2)),
                          np.random.default_rng(3).integers(0, 2, size=30))
        _, trace = train("logistic", ds, TrainConfig(max_epochs=20, seed=0))
        csv = trace.to_csv()
        lines = csv.strip().splitlines()
        assert lines[0] == "epoch,loss,gradient_norm"
        assert len(lines) == len(trace.losses) + 1
        assert float(lines[1].split(",")[1]) == trace.losses[0]

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            TrainConfig(max_epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(cg_variant="fletcher_reeves")
