import numpy as np
import pytest

from metasel.data import Dataset, generate_p2, scale_minmax
from metasel.engine import oracle_accuracy
from metasel.pool import ClassifierPool, Perceptron, bagging, train_perceptron


def separable_toy():
    feats = np.array([[0.0, 0.0], [0.0, 1.0], [3.0, 3.0], [3.0, 4.0]])
    labels = np.array([0, 0, 1, 1])
    return Dataset(feats, labels, 2)


def p2_scaled(n, seed):
    ds = generate_p2(n, seed)
    scaled, params = scale_minmax(ds)
    return scaled, params


class TestTrainPerceptron:
    def test_separable_training_accuracy(self):
        ds = separable_toy()
        clf = train_perceptron(ds, epochs=100, lr=0.1, seed=0)
        labels, _ = clf.predict_batch(ds.features)
        assert (labels == ds.labels).all()

    def test_p2_single_member_is_weak(self):
        train, params = p2_scaled(500, 21)
        test = generate_p2(2000, 22)
        clf = train_perceptron(train, seed=2)
        labels, _ = clf.predict_batch(params.apply(test.features))
        acc = (labels == test.labels).mean()
        assert 0.45 <= acc <= 0.60

    def test_zero_epochs_still_predicts_valid_labels(self):
        ds = separable_toy()
        clf = train_perceptron(ds, epochs=0, seed=5)
        labels, supports = clf.predict_batch(np.random.default_rng(0).normal(size=(50, 2)))
        assert set(np.unique(labels)) <= {0, 1}
        assert np.allclose(supports.sum(axis=1), 1.0, atol=1e-9)

    def test_deterministic_given_seed(self):
        ds = separable_toy()
        a = train_perceptron(ds, seed=3)
        b = train_perceptron(ds, seed=3)
        assert np.array_equal(a.weights, b.weights)


class TestPredict:
    def test_on_hyperplane_supports_are_half(self):
        W = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])  # boundary x = 0
        clf = Perceptron(W, dist_scale=1.0, trained=True)
        label, supports = clf.predict([0.0, 5.0])
        assert np.allclose(supports, [0.5, 0.5])
        assert label == 0  # tie goes to the lower index

    def test_supports_sum_to_one(self):
        rng = np.random.default_rng(1)
        clf = train_perceptron(separable_toy(), seed=1)
        _, supports = clf.predict_batch(rng.normal(size=(10_000, 2)))
        assert np.abs(supports.sum(axis=1) - 1.0).max() < 1e-9

    def test_argmax_matches_crisp_sign_rule(self):
        rng = np.random.default_rng(2)
        clf = train_perceptron(separable_toy(), seed=7)
        X = rng.normal(size=(10_000, 2))
        labels, supports = clf.predict_batch(X)
        scores = clf.scores(X)
        assert np.array_equal(labels, supports.argmax(axis=1))
        crisp = (scores[:, 1] > scores[:, 0]).astype(int)  # argmax, ties -> 0
        assert np.array_equal(labels, crisp)

    def test_multiclass_softmax_supports(self):
        rng = np.random.default_rng(3)
        feats = np.vstack([rng.normal(c, 0.3, size=(20, 2)) for c in range(3)])
        labels = np.repeat(np.arange(3), 20)
        clf = train_perceptron(Dataset(feats, labels, 3), epochs=100, lr=0.1, seed=0)
        pred, supports = clf.predict_batch(feats)
        assert supports.shape == (60, 3)
        assert np.abs(supports.sum(axis=1) - 1.0).max() < 1e-9
        assert np.array_equal(pred, supports.argmax(axis=1))
        assert (pred == labels).mean() > 0.9

    def test_dimension_mismatch(self):
        clf = train_perceptron(separable_toy(), seed=0)
        with pytest.raises(ValueError, match="features"):
            clf.predict([1.0, 2.0, 3.0])


class TestBagging:
    def test_p2_pool_oracle(self):
        train, params = p2_scaled(500, 31)
        test = generate_p2(2000, 32)
        pool = bagging(train, 5, seed=40)
        scaled_test = Dataset(params.apply(test.features), test.labels, 2)
        assert oracle_accuracy(pool, scaled_test) >= 0.99
        # five genuinely different boundaries
        planes = {tuple(np.round(m.weights[0] - m.weights[1], 6)) for m in pool.members}
        assert len(planes) == 5

    def test_degenerate_bagging_equals_plain_training(self):
        ds = separable_toy()
        pool = bagging(ds, 1, bootstrap_frac=1.0, seed=9)
        direct = train_perceptron(ds, seed=9)
        assert np.array_equal(pool.members[0].weights, direct.weights)

    def test_seeds_differ(self):
        ds, _ = p2_scaled(200, 5)
        a = bagging(ds, 2, seed=1)
        b = bagging(ds, 2, seed=2)
        assert not np.array_equal(a.members[0].weights, b.members[0].weights)

    def test_members_share_shape(self):
        ds, _ = p2_scaled(100, 6)
        pool = bagging(ds, 4, seed=3)
        assert pool.class_count == 2 and pool.feature_count == 2

    def test_label_always_argmax_of_supports(self):
        ds, _ = p2_scaled(150, 7)
        pool = bagging(ds, 5, seed=11)
        X = np.random.default_rng(0).uniform(0, 1, size=(500, 2))
        labels, supports = pool.predict_batch(X)
        assert np.array_equal(labels, supports.argmax(axis=2))

    def test_oracle_monotone_in_pool_size(self):
        train, params = p2_scaled(400, 8)
        test = generate_p2(1000, 9)
        scaled_test = Dataset(params.apply(test.features), test.labels, 2)
        pool = bagging(train, 8, seed=13)
        accs = [oracle_accuracy(ClassifierPool(pool.members[:m]), scaled_test)
                for m in range(1, 9)]
        assert all(a <= b + 1e-12 for a, b in zip(accs, accs[1:]))

    def test_pool_size_validated(self):
        ds, _ = p2_scaled(100, 10)
        with pytest.raises(ValueError):
            bagging(ds, 0, seed=0)

    def test_bootstrap_missing_class_retries_then_errors(self):
        feats = np.arange(10.0).reshape(5, 2)
        ds = Dataset(feats, np.array([0, 0, 0, 0, 1]), 2)
        # seed 0's first draw misses class 1; with no retries that is fatal
        with pytest.raises(ValueError, match="missing a class"):
            bagging(ds, 1, bootstrap_frac=0.4, seed=0, max_retries=0)
        # with retries allowed the same seed eventually finds a valid draw
        pool = bagging(ds, 1, bootstrap_frac=0.4, seed=0, max_retries=10)
        assert len(pool) == 1

    def test_mismatched_members_rejected(self):
        ds, _ = p2_scaled(100, 12)
        a = train_perceptron(ds, seed=1)
        b = train_perceptron(Dataset(np.random.default_rng(0).normal(size=(20, 3)),
                                     np.array([0, 1] * 10), 2), seed=2)
        with pytest.raises(ValueError, match="disagree"):
            ClassifierPool([a, b])
