import math

import numpy as np
import pytest

from conftest import make_model, make_split
from oatest.data import SplitConfig, build_dataset
from oatest.errors import TrainingError
from oatest.metrics import metric_auc
from oatest.mirt import (
    MirtModel,
    PretrainConfig,
    UpdateConfig,
    bce_grad,
    bce_loss,
    fisher_matrix,
    fisher_scalar,
    init_theta0,
    predict,
    predict_proba,
    pretrain,
    virtual_update,
)


class TestPredict:
    def test_zero_ability_gives_half(self, rng):
        m = make_model(rng.normal(size=(5, 3)))
        assert predict(m, np.zeros(3), 2) == 0.5

    def test_known_value(self):
        m = make_model(np.ones((1, 4)))
        expected = 1.0 / (1.0 + math.exp(-4.0))
        assert predict(m, np.ones(4), 0) == pytest.approx(expected, abs=1e-12)
        assert round(expected, 5) == 0.98201

    def test_symmetry(self, rng):
        a = rng.normal(size=(1, 6))
        m = make_model(np.vstack([a, -a]))
        theta = rng.normal(size=6)
        assert predict(m, theta, 0) + predict(m, theta, 1) == pytest.approx(1.0, abs=1e-15)

    def test_clipped(self):
        m = make_model(np.full((1, 2), 100.0))
        assert predict(m, np.ones(2), 0) == 1 - 1e-6

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            predict(make_model(np.ones((2, 2))), np.zeros(2), 2)

    def test_monotone_in_logit(self):
        m = make_model(np.array([[1.0]]))
        ps = [predict(m, np.array([z]), 0) for z in np.linspace(-10, 10, 101)]
        assert all(b > a for a, b in zip(ps, ps[1:]))


class TestFisher:
    def test_at_half_probability(self):
        m = make_model(np.array([[0.6, 0.8]]))
        assert fisher_scalar(m, np.array([0.8, -0.6]), 0) == pytest.approx(0.25, rel=1e-15)

    def test_zero_item(self):
        assert fisher_scalar(make_model(np.zeros((1, 3))), np.ones(3), 0) == 0.0

    def test_frobenius_identity(self, rng):
        # E over r in {0, 1} of score score^T, score = (r - p) alpha
        alpha = rng.normal(size=(20, 8))
        m = make_model(alpha)
        for j in range(20):
            theta = rng.normal(size=8)
            p = 1.0 / (1.0 + math.exp(-float(theta @ alpha[j])))
            mat = sum(prob * np.outer((r - p) * alpha[j], (r - p) * alpha[j]) for r, prob in ((1, p), (0, 1 - p)))
            oracle = math.sqrt(sum(x * x for x in mat.ravel()))
            assert fisher_scalar(m, theta, j) == pytest.approx(oracle, rel=1e-9)
            np.testing.assert_allclose(fisher_matrix(m, theta, j), mat, rtol=1e-9, atol=1e-15)


class TestGradient:
    def test_matches_central_differences(self, rng):
        h = 1e-5
        for _ in range(100):
            theta = rng.normal(size=8)
            alpha = rng.normal(size=(1, 8))
            r = [int(rng.integers(2))]
            g = bce_grad(theta, alpha, r, reduction="sum")
            fd = np.empty(8)
            for k in range(8):
                e = np.zeros(8)
                e[k] = h
                fd[k] = (bce_loss(theta + e, alpha, r, reduction="sum") - bce_loss(theta - e, alpha, r, reduction="sum")) / (2 * h)
            assert np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12) < 1e-4

    def test_mean_is_scaled_sum(self, rng):
        theta, alpha, r = rng.normal(size=3), rng.normal(size=(7, 3)), rng.integers(0, 2, 7)
        np.testing.assert_allclose(bce_grad(theta, alpha, r, reduction="mean") * 7, bce_grad(theta, alpha, r, reduction="sum"))


class TestVirtualUpdate:
    def test_pure(self, model):
        theta0 = model.theta[5].copy()
        before = (model.theta.tobytes(), model.alpha.tobytes())
        virtual_update(model, theta0, [(1, 1), (2, 0)])
        assert (model.theta.tobytes(), model.alpha.tobytes()) == before
        assert np.array_equal(theta0, model.theta[5])

    def test_vanishing_step_keeps_theta(self, rng):
        m = make_model(rng.normal(size=(5, 3)))
        theta0 = rng.normal(size=3)
        out = virtual_update(m, theta0, [(0, 1), (3, 0)], UpdateConfig(learning_rate=1e-12))
        np.testing.assert_allclose(out, theta0, atol=1e-9)

    def test_correct_answer_raises_logit(self, rng):
        alpha = rng.normal(size=(4, 3))
        m = make_model(alpha)
        theta0 = rng.normal(size=3)
        out = virtual_update(m, theta0, [(2, 1)])
        assert out @ alpha[2] > theta0 @ alpha[2]

    def test_loss_decreases(self, rng):
        alpha = rng.normal(size=(10, 8))
        m = make_model(alpha)
        theta0 = rng.normal(size=8)
        r = rng.integers(0, 2, 10)
        config = UpdateConfig()
        assert config.epochs_for(10) == 16
        out = virtual_update(m, theta0, list(zip(range(10), r)), config)
        assert bce_loss(out, alpha, r) < bce_loss(theta0, alpha, r)

    def test_needs_responses(self, model):
        with pytest.raises(ValueError):
            virtual_update(model, model.theta_prior, [])

    @pytest.mark.parametrize("kwargs", [{"learning_rate": 0}, {"learning_rate": 1.5},
                                        {"epochs": 0}, {"probability_clip": 0.05}])
    def test_config_invariants(self, kwargs):
        with pytest.raises(ValueError):
            UpdateConfig(**kwargs)


class TestInitTheta0:
    def test_empty_train_gives_prior(self, model):
        sp = make_split(0, [1, 2], [1, 0], [3], [1])
        assert np.array_equal(init_theta0(model, sp), model.theta_prior)

    def test_direction_of_evidence(self, model):
        qs = [0, 1, 2, 3, 4]
        up = init_theta0(model, make_split(0, [9], [1], [8], [1], qs, [1] * 5))
        down = init_theta0(model, make_split(0, [9], [1], [8], [1], qs, [0] * 5))
        for q in qs:
            assert up @ model.alpha[q] > down @ model.alpha[q]

    def test_moves_toward_true_ability(self, dataset, truth):
        # item vectors in the generating basis so cosines against the truth are meaningful
        pre = np.array(dataset.pretrain_students)
        oracle = MirtModel(truth.theta, truth.alpha, truth.theta[pre].mean(axis=0))

        def cos(a, b):
            return a @ b / (np.linalg.norm(a) * np.linalg.norm(b))

        for s, sp in list(dataset.splits.items())[:20]:
            assert len(sp.train_q) == 30
            theta0 = init_theta0(oracle, sp)
            assert cos(theta0, truth.theta[s]) > cos(oracle.theta_prior, truth.theta[s])


class TestPretrain:
    def test_deterministic(self, dataset, model):
        again = pretrain(dataset, seed=0)
        assert again.theta.tobytes() == model.theta.tobytes()
        assert again.alpha.tobytes() == model.alpha.tobytes()

    def test_loss_non_increasing(self, model):
        h = np.array(model.history)
        assert len(h) == PretrainConfig().epochs
        assert np.all(np.diff(h) <= 1e-3)

    def test_held_out_auc(self, dataset, model):
        probs, labels = [], []
        for s, sp in dataset.splits.items():
            probs.append(predict_proba(model, model.theta[s], sp.test_q))
            labels.append(sp.test_r)
        auc = metric_auc(np.concatenate(probs), np.concatenate(labels))
        assert auc > 0.70
        assert auc == pytest.approx(0.7796, abs=1e-4)

    def test_all_correct_data(self):
        rows = [(s, q) for s in range(10) for q in range(60)]
        s, q = zip(*rows)
        ds = build_dataset(s, q, [1] * len(rows), np.ones((60, 1)), SplitConfig(max_length=5))
        m = pretrain(ds, seed=1)
        st, qt, _ = ds.pretrain_log()
        probs = np.array([predict(m, m.theta[a], b) for a, b in zip(st, qt)])
        assert (probs > 0.5).all()

    def test_divergence_is_reported(self, dataset):
        with pytest.raises(TrainingError):
            pretrain(dataset, PretrainConfig(learning_rate=1e300, epochs=3), seed=0)

    def test_checkpoint_round_trip(self, tmp_path, model):
        path = tmp_path / "model.json"
        model.save(path)
        again = MirtModel.load(path)
        assert again.theta.tobytes() == model.theta.tobytes()
        assert again.alpha.tobytes() == model.alpha.tobytes()
        assert again.theta_prior.tobytes() == model.theta_prior.tobytes()
        assert again.config == model.config and again.seed == model.seed
