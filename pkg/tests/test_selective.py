import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selcredit.data import CONTINUOUS, Dataset, FeatureSpec
from selcredit.models import LogisticModel, MlpModel, predict
from selcredit.selective import (
    SelectiveLabels,
    acceptance_oracle,
    make_selective_labels,
    practical_acceptance_oracle,
    rejection_summary,
    selective_labels_from_predictions,
    train_difference_net,
)
from selcredit.training import TrainConfig


def make_dataset(X, y):
    X = np.asarray(X, dtype=float)
    schema = tuple(FeatureSpec(f"x{j + 1}", CONTINUOUS, (-np.inf, np.inf), j)
                   for j in range(X.shape[1]))
    return Dataset(X, np.asarray(y), schema)


class TestLabelRules:
    def test_disagree_and_nn_right_rejects(self):
        labels = selective_labels_from_predictions([1], [0], [1], "practical")
        assert labels.z.tolist() == [0]

    def test_disagree_but_nn_wrong(self):
        practical = selective_labels_from_predictions([1], [0], [0], "practical")
        ideal = selective_labels_from_predictions([1], [0], [0], "ideal")
        assert practical.z.tolist() == [1]
        assert ideal.z.tolist() == [0]

    def test_agreement_always_accepts(self):
        for y in (0, 1):
            for f in (0, 1):
                for variant in ("ideal", "practical"):
                    labels = selective_labels_from_predictions(
                        [f], [f], [y], variant)
                    assert labels.z.tolist() == [1]

    def test_identical_models_accept_everything(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(50, 2))
        ds = make_dataset(X, rng.integers(0, 2, 50))
        m = LogisticModel(np.array([1.0, -0.5]), 0.2)
        labels = make_selective_labels(m, m, ds)
        assert np.all(labels.z == 1)

    @given(st.integers(0, 2 ** 31 - 1), st.integers(2, 50))
    @settings(max_examples=60, deadline=None)
    def test_ideal_rejects_superset_of_practical(self, seed, n):
        rng = np.random.default_rng(seed)
        F = rng.integers(0, 2, n)
        Ft = rng.integers(0, 2, n)
        y = rng.integers(0, 2, n)
        ideal = selective_labels_from_predictions(F, Ft, y, "ideal")
        practical = selective_labels_from_predictions(F, Ft, y, "practical")
        assert set(practical.rejected_indices()) <= set(ideal.rejected_indices())

    def test_label_consistency_recompute(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(80, 3))
        ds = make_dataset(X, rng.integers(0, 2, 80))
        nn = MlpModel(rng.normal(size=(2, 3)), rng.normal(size=2),
                      rng.normal(size=2), 0.1)
        lr = LogisticModel(rng.normal(size=3), -0.1)
        first = make_selective_labels(nn, lr, ds, variant="practical")
        F = predict(nn.forward(X), 0.5)
        Ft = predict(lr.forward(X), 0.5)
        again = selective_labels_from_predictions(F, Ft, ds.labels, "practical")
        np.testing.assert_array_equal(first.z, again.z)

    def test_variant_validation(self):
        with pytest.raises(ValueError):
            selective_labels_from_predictions([1], [1], [1], "strict")

    def test_json_round_trip(self, tmp_path):
        labels = SelectiveLabels(np.array([1, 0, 1]), "practical")
        path = tmp_path / "z.json"
        labels.save(path)
        again = SelectiveLabels.load(path)
        np.testing.assert_array_equal(again.z, labels.z)
        assert again.variant == "practical"


class TestOracles:
    def test_identical_outputs(self):
        assert acceptance_oracle(0.9, 0.9) == 1.0

    def test_maximal_disagreement(self):
        assert acceptance_oracle(1.0, 0.0) == 0.0

    def test_direct_arithmetic(self):
        assert acceptance_oracle(0.8, 0.3) == pytest.approx(0.5, abs=1e-15)

    def test_domain_check(self):
        with pytest.raises(ValueError):
            acceptance_oracle(1.2, 0.5)

    def test_practical_agreement_is_one(self):
        for p in (0.0, 0.3, 1.0):
            assert practical_acceptance_oracle(p, 1, 1) == 1.0
            assert practical_acceptance_oracle(p, 0, 0) == 1.0

    def test_practical_disagreement_value(self):
        assert practical_acceptance_oracle(0.7, 1, 0) == pytest.approx(0.3)
        assert practical_acceptance_oracle(0.0, 0, 1) == pytest.approx(0.0)

    def test_practical_matches_monte_carlo(self):
        """Frequency oracle: simulate the labeling rule on Bernoulli draws."""
        rng = np.random.default_rng(7)
        n = 200_000
        for p, F, Ft in [(0.7, 1, 0), (0.2, 0, 1), (0.5, 1, 0)]:
            y = (rng.random(n) < p).astype(int)
            z = np.where((F != Ft) & (y == F), 0, 1)
            se = np.sqrt(p * (1 - p) / n)
            assert np.mean(z) == pytest.approx(
                practical_acceptance_oracle(p, F, Ft), abs=4 * se + 1e-4)


class TestDifferenceNet:
    def test_all_accept_labels_give_constant_model(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(30, 2))
        ds = make_dataset(X, rng.integers(0, 2, 30))
        labels = SelectiveLabels(np.ones(30, dtype=int), "practical")
        with pytest.warns(UserWarning):
            model, trace = train_difference_net(ds, labels, TrainConfig(seed=0))
        assert trace.degenerate
        assert np.all(predict(model.forward(X), 0.5) == 1)

    def test_learns_simple_region(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(-1, 1, size=(4000, 2))
        ds = make_dataset(X, np.zeros(4000, dtype=int))
        z = (X[:, 0] < 0.0).astype(int)  # reject right half-plane
        labels = SelectiveLabels(z, "ideal")
        model, _ = train_difference_net(ds, labels,
                                        TrainConfig(max_epochs=300, seed=1))
        G = predict(model.forward(X), 0.5)
        assert np.mean(G == z) > 0.97

    def test_length_mismatch(self):
        ds = make_dataset(np.zeros((4, 1)), [0, 1, 0, 1])
        labels = SelectiveLabels(np.ones(3, dtype=int), "ideal")
        with pytest.raises(ValueError):
            train_difference_net(ds, labels)


class TestRejectionSummary:
    def constant_accept_net(self, p=2):
        return MlpModel(np.zeros((5, p)), np.zeros(5), np.zeros(5), 30.0)

    def marker_reject_net(self, p=2):
        """G(x) = 0 exactly when feature 0 is near 1."""
        W = np.zeros((5, p))
        W[0, 0] = -50.0
        bh = np.array([25.0, 0, 0, 0, 0])
        v = np.array([50.0, 0, 0, 0, 0])
        return MlpModel(W, bh, v, -25.0)

    def test_constant_accept_empty(self):
        rng = np.random.default_rng(4)
        ds = make_dataset(rng.normal(size=(20, 2)), rng.integers(0, 2, 20))
        summary = rejection_summary(self.constant_accept_net(), ds)
        assert summary.rejection_rate == 0.0
        assert summary.rejected_index_set.size == 0

    def test_rate_is_exact_fraction(self):
        X = np.zeros((10, 2))
        X[[2, 5, 7], 0] = 1.0
        ds = make_dataset(X, np.zeros(10, dtype=int))
        summary = rejection_summary(self.marker_reject_net(), ds)
        assert summary.rejected_index_set.tolist() == [2, 5, 7]
        assert summary.rejection_rate == pytest.approx(0.3)

    def test_direction_breakdown(self):
        X = np.zeros((6, 2))
        X[:3, 0] = 1.0  # rejected
        X[:, 1] = np.array([5.0, 5.0, -5.0, 5.0, 5.0, 5.0])
        ds = make_dataset(X, np.zeros(6, dtype=int))
        nn = LogisticModel(np.array([0.0, 1.0]))  # default iff x2 > 0
        lr = LogisticModel(np.array([0.0, -1.0]))  # the opposite
        summary = rejection_summary(self.marker_reject_net(), ds, nn=nn, lr=lr)
        breakdown = summary.direction_breakdown()
        assert breakdown == {"nn_default_lr_non_default": 2,
                             "nn_non_default_lr_default": 1}

    def test_indices_csv(self):
        X = np.zeros((4, 2))
        X[1, 0] = 1.0
        ds = make_dataset(X, np.zeros(4, dtype=int))
        summary = rejection_summary(self.marker_reject_net(), ds)
        assert summary.indices_csv() == "index\n1\n"
