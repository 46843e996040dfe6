"""Extraction of the fifteen competence criteria for (sample, classifier)
pairs into a fixed-layout vector.

Layout (D = K*8 + Kp + 6 scalars per pair)::

    [ hard(K) | prob(K) | overall | cond | conf | amb
      | log(K) | prc(K) | md(K) | ent(K) | exp(K) | kl(K)
      | op(Kp) | rank | rank_op ]

Per-neighbor criteria depend only on (classifier, reference row), so they are
precomputed once per reference set as (M, N) tables; extraction then reduces
to gathers along neighbor indices. Supports are clamped to
[1e-12, 1 - 1e-10] inside logarithm and ratio expressions, keeping the
analytic identities (zero entropy for one-hot supports, zero divergence for
uniform ones) accurate to well below 1e-9.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .pool import ClassifierPool
from .regions import (RegionOfCompetence, ProfileNeighborhood,
                      nearest_neighbors)

__all__ = [
    "FeatureLayout",
    "MetaFeatureVector",
    "MetaDataset",
    "MetaFeatureExtractor",
    "apply_mask",
    "rrc_competence",
    "meta_dataset_to_csv",
]

SUPPORT_FLOOR = 1e-12
SUPPORT_CEIL = 1.0 - 1e-10

SET_NAMES = ("hard", "prob", "overall", "cond", "conf", "amb",
             "log", "prc", "md", "ent", "exp", "kl", "op", "rank", "rank_op")


class FeatureLayout:
    """Fixed ordering of the fifteen criterion families for given (K, Kp)."""

    def __init__(self, k: int, kp: int):
        if k < 1 or kp < 1:
            raise ValueError("K and Kp must be >= 1")
        self.k = k
        self.kp = kp
        widths = {"hard": k, "prob": k, "overall": 1, "cond": 1, "conf": 1,
                  "amb": 1, "log": k, "prc": k, "md": k, "ent": k, "exp": k,
                  "kl": k, "op": kp, "rank": 1, "rank_op": 1}
        self.segments = []
        start = 0
        for name in SET_NAMES:
            self.segments.append((name, start, widths[name]))
            start += widths[name]
        self.size = start

    @property
    def set_count(self):
        return len(self.segments)

    def slice_of(self, name: str) -> slice:
        for seg, start, width in self.segments:
            if seg == name:
                return slice(start, start + width)
        raise KeyError(name)

    def set_of(self, bit: int) -> str:
        """Criterion family owning feature index ``bit``."""
        for seg, start, width in self.segments:
            if start <= bit < start + width:
                return seg
        raise IndexError(bit)

    def column_names(self):
        names = []
        for seg, _, width in self.segments:
            if width == 1:
                names.append(seg)
            else:
                names.extend(f"{seg}_{j}" for j in range(width))
        return names


@dataclass
class MetaFeatureVector:
    """Criterion values for one (sample, classifier) pair plus the competent
    (1) / incompetent (0) meta-label when the sample's true class is known."""

    values: np.ndarray
    meta_label: int | None
    classifier_index: int
    sample_id: int


@dataclass
class MetaDataset:
    """Stacked meta-feature rows, sample-major then classifier-minor."""

    rows: np.ndarray          # (R, D)
    labels: np.ndarray        # (R,) in {0, 1}
    sample_ids: np.ndarray    # (R,)
    classifier_ids: np.ndarray  # (R,)
    layout: FeatureLayout

    def __len__(self):
        return len(self.rows)


def apply_mask(values, mask):
    """Keep the entries of ``values`` whose mask bit is set, preserving order.

    Works on a single vector or a row matrix. An all-zero mask is an error.
    """
    mask = np.asarray(mask, dtype=bool)
    values = np.asarray(values)
    if values.shape[-1] != len(mask):
        raise ValueError(f"mask length {len(mask)} does not match vector length {values.shape[-1]}")
    if not mask.any():
        raise ValueError("mask selects no features")
    return values[..., mask]


def rrc_competence(supports, correct_class: int, samples: int = 1000, seed: int = 0,
                   concentration: float = 10.0) -> float:
    """Probability that a randomized classifier whose class supports fluctuate
    around ``supports`` ranks the correct class first.

    Estimated by Monte Carlo: per class a Beta draw with mean equal to the
    support and a fixed concentration, renormalized; the estimate is the
    fraction of draws whose argmax hits ``correct_class``. Deterministic given
    the seed.
    """
    supports = np.asarray(supports, dtype=float)
    rng = np.random.default_rng(seed)
    s = np.clip(supports, 1e-6, 1.0 - 1e-6)
    a = s * concentration
    b = (1.0 - s) * concentration
    draws = rng.beta(np.broadcast_to(a, (samples, len(s))),
                     np.broadcast_to(b, (samples, len(s))))
    return float((draws.argmax(axis=1) == correct_class).mean())


def _rrc_table(supports, true_labels, samples, seed, concentration=10.0):
    # supports: (N, L); one MC estimate per reference row, shared rng stream
    rng = np.random.default_rng(seed)
    n, L = supports.shape
    s = np.clip(supports, 1e-6, 1.0 - 1e-6)
    a = s * concentration
    b = (1.0 - s) * concentration
    draws = rng.beta(np.broadcast_to(a, (samples, n, L)),
                     np.broadcast_to(b, (samples, n, L)))
    return (draws.argmax(axis=2) == true_labels[None, :]).mean(axis=0)


class MetaFeatureExtractor:
    """Computes meta-feature vectors against a fixed reference set.

    Builds the per-(classifier, reference-row) criterion tables once; the
    min-max bounds for the confidence criterion are taken over the signed
    boundary distances of all reference samples.
    """

    def __init__(self, pool: ClassifierPool, dsel: Dataset, k: int = 7, kp: int = 5,
                 rrc_samples: int = 1000, rrc_seed: int = 0):
        if k > len(dsel) or kp > len(dsel):
            raise ValueError("K and Kp cannot exceed the reference set size")
        self.pool = pool
        self.dsel = dsel
        self.layout = FeatureLayout(k, kp)
        self.rrc_samples = rrc_samples
        self.rrc_seed = rrc_seed

        M, L = len(pool), pool.class_count
        labels, supports = pool.predict_batch(dsel.features)
        self.dsel_pred_labels = labels                    # (M, N)
        self.dsel_supports = supports                     # (M, N, L)
        self.dsel_correct = labels == dsel.labels[None, :]
        self.dsel_profiles = np.transpose(supports, (1, 0, 2)).reshape(len(dsel), -1)

        clipped = np.clip(supports, SUPPORT_FLOOR, SUPPORT_CEIL)
        self._clipped = clipped
        true_idx = dsel.labels[None, :, None]
        slk = np.take_along_axis(clipped, np.broadcast_to(true_idx, (M, len(dsel), 1)), axis=2)[:, :, 0]
        self.t_prob = slk
        self.t_log = 2.0 * slk ** (np.log(2.0) / np.log(L)) - 1.0
        self.t_ent = -(clipped * np.log(clipped)).sum(axis=2)
        only_true = np.zeros_like(clipped, dtype=bool)
        np.put_along_axis(only_true, np.broadcast_to(true_idx, (M, len(dsel), 1)), True, axis=2)
        self.t_md = np.where(only_true, np.inf, clipped).min(axis=2) - slk
        slk_safe = np.minimum(slk, SUPPORT_CEIL)
        self.t_exp = 1.0 - 2.0 ** (-((L - 1) * slk_safe / (1.0 - slk_safe)))
        self.t_kl = (clipped * np.log(clipped * L)).sum(axis=2)
        self.t_prc = np.stack([
            _rrc_table(supports[i], dsel.labels, rrc_samples, [rrc_seed, i])
            for i in range(M)
        ])

        dists = pool.boundary_distances(dsel.features)    # (M, N)
        self.conf_min = dists.min(axis=1)
        self.conf_max = dists.max(axis=1)

    # -- single-pair extraction (the contract surface) ---------------------

    def extract_one(self, classifier_index: int, x, region: RegionOfCompetence,
                    profile_nbh: ProfileNeighborhood, true_label: int | None = None,
                    sample_id: int = -1, exclude: int | None = None) -> MetaFeatureVector:
        """Meta-feature vector of one (classifier, sample) pair given its
        region of competence and profile neighborhood."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        feats, metas, _ = self._extract(
            x, None if true_label is None else np.array([true_label]),
            np.asarray([region.indices]), np.asarray([profile_nbh.indices]),
            None if exclude is None else np.array([exclude]))
        label = None if true_label is None else int(metas[0, classifier_index])
        return MetaFeatureVector(feats[0, classifier_index], label,
                                 classifier_index, sample_id)

    # -- batch extraction ---------------------------------------------------

    def extract_batch(self, X, y=None, self_indices=None):
        """Vectorized extraction for a batch of queries.

        Returns ``(features, meta_labels, pred_labels)`` with shapes
        (Nq, M, D), (Nq, M) and (M, Nq). ``self_indices`` gives, per query,
        its own row in the reference set to exclude from every neighborhood
        (used when the queries are reference samples themselves).
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        k, kp = self.layout.k, self.layout.kp
        theta, _ = nearest_neighbors(X, self.dsel.features, k, exclude=self_indices)
        _, q_supports = self.pool.predict_batch(X)
        profiles = np.transpose(q_supports, (1, 0, 2)).reshape(len(X), -1)
        phi, _ = nearest_neighbors(profiles, self.dsel_profiles, kp, exclude=self_indices)
        return self._extract(X, y, theta, phi, self_indices)

    def build_meta_dataset(self, X, y, self_indices=None, sample_ids=None) -> MetaDataset:
        """All (sample, classifier) rows for labeled queries, sample-major."""
        feats, metas, _ = self.extract_batch(X, y, self_indices=self_indices)
        nq, M, D = feats.shape
        if sample_ids is None:
            sample_ids = np.arange(nq)
        return MetaDataset(
            rows=feats.reshape(-1, D),
            labels=metas.reshape(-1),
            sample_ids=np.repeat(np.asarray(sample_ids, dtype=int), M),
            classifier_ids=np.tile(np.arange(M), nq),
            layout=self.layout,
        )

    # -- internals -----------------------------------------------------------

    def _extract(self, X, y, theta, phi, self_indices):
        pool, dsel = self.pool, self.dsel
        M, L = len(pool), pool.class_count
        k, kp = self.layout.k, self.layout.kp
        nq = len(X)
        if theta.shape[1] != k or phi.shape[1] != kp:
            raise ValueError("neighborhood sizes do not match the extractor's K/Kp")
        if self_indices is not None and (np.asarray(self_indices) < 0).any():
            raise ValueError("self_indices must name a reference row for every query")

        pred_labels, q_supports = pool.predict_batch(X)       # (M, Nq), (M, Nq, L)
        q_dists = pool.boundary_distances(X)                  # (M, Nq)

        # full reference ordering for the rank criterion
        d2 = ((X[:, None, :] - dsel.features[None, :, :]) ** 2).sum(axis=2)
        if self_indices is not None:
            rows = np.flatnonzero(np.asarray(self_indices) >= 0)
            d2[rows, np.asarray(self_indices)[rows]] = np.inf
        full_order = np.argsort(d2, axis=1, kind="stable")
        scan = full_order if self_indices is None else full_order[:, :-1]

        feats = np.zeros((nq, M, self.layout.size))
        metas = np.zeros((nq, M), dtype=int)
        neighbor_labels = dsel.labels[theta]                  # (Nq, K)

        for i in range(M):
            hard = self.dsel_correct[i][theta].astype(float)
            prob = self.t_prob[i][theta]
            overall = hard.mean(axis=1)

            # conditional accuracy w.r.t. the class this member assigns to x
            assigned = pred_labels[i]                         # (Nq,)
            sup_assigned = np.take_along_axis(
                self._clipped[i][theta],
                np.broadcast_to(assigned[:, None, None], (nq, k, 1)), axis=2)[:, :, 0]
            same_class = neighbor_labels == assigned[:, None]
            num = (sup_assigned * same_class).sum(axis=1)
            den = sup_assigned.sum(axis=1)
            cond = np.divide(num, den, out=np.zeros_like(num), where=den > 0)

            span = self.conf_max[i] - self.conf_min[i]
            if span > 0:
                conf = np.clip((q_dists[i] - self.conf_min[i]) / span, 0.0, 1.0)
            else:
                conf = np.full(nq, 0.5)

            s_sorted = np.sort(q_supports[i], axis=1)
            amb = s_sorted[:, -1] - s_sorted[:, -2]

            op = self.dsel_correct[i][phi].astype(float)

            corr_scan = self.dsel_correct[i][scan]
            rank = np.where(corr_scan.all(axis=1), corr_scan.shape[1],
                            (~corr_scan).argmax(axis=1)).astype(float)
            corr_phi = self.dsel_correct[i][phi]
            rank_op = np.where(corr_phi.all(axis=1), kp,
                               (~corr_phi).argmax(axis=1)).astype(float)

            feats[:, i, :] = np.hstack([
                hard, prob, overall[:, None], cond[:, None], conf[:, None],
                amb[:, None], self.t_log[i][theta], self.t_prc[i][theta],
                self.t_md[i][theta], self.t_ent[i][theta], self.t_exp[i][theta],
                self.t_kl[i][theta], op, rank[:, None], rank_op[:, None],
            ])
            if y is not None:
                metas[:, i] = (pred_labels[i] == np.asarray(y)).astype(int)

        return feats, (metas if y is not None else None), pred_labels


def meta_dataset_to_csv(md: MetaDataset, path):
    """Write a meta-dataset as CSV: one column per meta-feature plus
    meta_label, classifier_index and sample_id."""
    header = md.layout.column_names() + ["meta_label", "classifier_index", "sample_id"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in range(len(md)):
            cells = [format(v, ".10g") for v in md.rows[r]]
            cells += [str(int(md.labels[r])), str(int(md.classifier_ids[r])),
                      str(int(md.sample_ids[r]))]
            fh.write(",".join(cells) + "\n")
