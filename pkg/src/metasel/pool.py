"""Linear perceptron base classifiers and bootstrap-aggregated pool generation.

Each perceptron keeps one weight row per class (bias included). Training is
the classic error-driven update; the initial weights describe a random
hyperplane anchored at a random training point, which keeps pool members
spread out when training data is not separable.

Class supports are calibrated so that downstream probabilistic criteria get a
normalized support vector: for two classes, a logistic squash of the signed
perpendicular distance to the decision boundary (scaled by the largest
training margin); for more classes, a softmax over the linear scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset

__all__ = ["Perceptron", "ClassifierPool", "train_perceptron", "bagging"]

SUPPORT_GAIN = 4.0  # logistic steepness for binary support calibration


def _with_bias(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X, np.ones((len(X), 1))])


@dataclass
class Perceptron:
    """One-vs-all linear classifier with an (L, d+1) weight matrix."""

    weights: np.ndarray
    dist_scale: float = 1.0
    trained: bool = False

    @property
    def class_count(self):
        return self.weights.shape[0]

    @property
    def feature_count(self):
        return self.weights.shape[1] - 1

    def scores(self, X) -> np.ndarray:
        Xb = _with_bias(X)
        if Xb.shape[1] != self.weights.shape[1]:
            raise ValueError(
                f"expected {self.feature_count} features, got {Xb.shape[1] - 1}"
            )
        return Xb @ self.weights.T

    def boundary_distance(self, X) -> np.ndarray:
        """Signed perpendicular distance to the decision boundary.

        Two classes: distance to the single separating hyperplane, positive on
        the class-0 side. More classes: margin between the top two scores,
        normalized by the corresponding weight-difference norm (non-negative).
        """
        s = self.scores(X)
        if self.class_count == 2:
            u = self.weights[0] - self.weights[1]
            norm = max(float(np.linalg.norm(u[:-1])), 1e-300)
            return (s[:, 0] - s[:, 1]) / norm
        order = np.argsort(-s, axis=1, kind="stable")
        top, second = order[:, 0], order[:, 1]
        diff = self.weights[top, :-1] - self.weights[second, :-1]
        norms = np.maximum(np.linalg.norm(diff, axis=1), 1e-300)
        return (np.take_along_axis(s, top[:, None], 1)[:, 0]
                - np.take_along_axis(s, second[:, None], 1)[:, 0]) / norms

    def predict_batch(self, X):
        """Crisp labels and support vectors for a batch of samples.

        The predicted label is always the argmax of the supports.
        """
        s = self.scores(X)
        if self.class_count == 2:
            m = self.boundary_distance(X)
            s0 = 1.0 / (1.0 + np.exp(-SUPPORT_GAIN * m / self.dist_scale))
            supports = np.stack([s0, 1.0 - s0], axis=1)
        else:
            z = s - s.max(axis=1, keepdims=True)
            e = np.exp(z)
            supports = e / e.sum(axis=1, keepdims=True)
        return supports.argmax(axis=1), supports

    def predict(self, x):
        """Label and support vector for a single sample."""
        labels, supports = self.predict_batch(np.atleast_2d(x))
        return int(labels[0]), supports[0]


@dataclass
class ClassifierPool:
    """Ordered collection of trained perceptrons sharing d and L."""

    members: list = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise ValueError("pool must contain at least one classifier")
        d = self.members[0].feature_count
        L = self.members[0].class_count
        if any(m.feature_count != d or m.class_count != L for m in self.members):
            raise ValueError("pool members disagree on feature or class count")

    def __len__(self):
        return len(self.members)

    @property
    def class_count(self):
        return self.members[0].class_count

    @property
    def feature_count(self):
        return self.members[0].feature_count

    def predict_batch(self, X):
        """Labels (M, N) and supports (M, N, L) for all members."""
        labels, supports = [], []
        for m in self.members:
            lab, sup = m.predict_batch(X)
            labels.append(lab)
            supports.append(sup)
        return np.stack(labels), np.stack(supports)

    def boundary_distances(self, X):
        return np.stack([m.boundary_distance(X) for m in self.members])


def train_perceptron(ds: Dataset, epochs: int = 50, lr: float = 0.01, seed: int = 0) -> Perceptron:
    """Train a (multi-class) perceptron with seeded shuffling.

    Initial weights place a random hyperplane through a random training
    sample; each epoch visits the data in a fresh seeded order and applies the
    standard update on misclassified samples (add to the true row, subtract
    from the predicted row). Non-separable data simply yields imperfect
    weights. With ``epochs=0`` the random initial weights are returned as-is.
    """
    rng = np.random.default_rng(seed)
    X, y, L = ds.features, ds.labels, ds.class_count
    d = X.shape[1]
    direction = rng.normal(0.0, 1.0, size=(L, d))
    anchor = X[rng.integers(0, len(X))]
    W = np.hstack([direction, -(direction @ anchor)[:, None]])
    Xb = _with_bias(X)
    for _ in range(epochs):
        for i in rng.permutation(len(Xb)):
            pred = int(np.argmax(W @ Xb[i]))
            if pred != y[i]:
                W[y[i]] += lr * Xb[i]
                W[pred] -= lr * Xb[i]
    clf = Perceptron(W, trained=True)
    margins = np.abs(clf.boundary_distance(X))
    clf.dist_scale = float(max(margins.max(), 1e-12))
    return clf


def bagging(ds: Dataset, m: int, bootstrap_frac: float = 0.5, seed: int = 0,
            epochs: int = 50, lr: float = 0.01, max_retries: int = 10) -> ClassifierPool:
    """Generate a pool of ``m`` perceptrons on bootstrap replicates.

    Member ``i`` trains on a with-replacement sample of
    ``ceil(bootstrap_frac * N)`` rows with training seed ``seed + i``, so
    parallel and serial generation would produce identical pools. A bootstrap
    missing a class entirely is redrawn up to ``max_retries`` times.
    ``bootstrap_frac >= 1.0`` disables resampling: each member trains on the
    full data (member 0 then matches ``train_perceptron(ds, ..., seed)``).
    """
    if m < 1:
        raise ValueError("pool size must be >= 1")
    n = len(ds)
    members = []
    for i in range(m):
        if bootstrap_frac >= 1.0:
            sub = ds
        else:
            size = int(np.ceil(bootstrap_frac * n))
            boot_rng = np.random.default_rng([seed, 9157, i])
            for attempt in range(max_retries + 1):
                idx = boot_rng.integers(0, n, size=size)
                if len(np.unique(ds.labels[idx])) == ds.class_count:
                    break
            else:
                raise ValueError(
                    f"bootstrap for member {i} kept missing a class after {max_retries} retries"
                )
            sub = ds.subset(idx)
        members.append(train_perceptron(sub, epochs=epochs, lr=lr, seed=seed + i))
    return ClassifierPool(members)
