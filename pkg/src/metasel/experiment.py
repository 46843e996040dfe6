"""End-to-end experiment orchestration: replicated train/evaluate cycles,
model persistence, and CSV report emission (accuracy tables, average ranks,
win-tie-loss counts, meta-feature selection frequencies).

Every replication is a pure function of the configuration seed: data splits,
pool generation, meta-dataset halving and the swarm search all derive their
randomness from (seed, replication, stage) tuples.
"""

from __future__ import annotations

import dataclasses
import json
import pickle
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine
from .bpso import BpsoConfig, optimize
from .data import (Dataset, SplitSpec, generate_p2, load_csv, scale_minmax,
                   split_holdout)
from .engine import DesModel, classify_batch, oracle_accuracy
from .metaclassifier import MetaTrainConfig, train_meta
from .metafeatures import FeatureLayout, MetaDataset, MetaFeatureExtractor, apply_mask
from .pool import bagging

__all__ = [
    "PoolConfig",
    "DataSource",
    "ExperimentConfig",
    "RunReport",
    "FrequencyReport",
    "train_des",
    "run_experiment",
    "save_model",
    "load_model",
    "frequency_report",
    "frequency_band",
    "write_report_csvs",
    "ModelFormatError",
    "FRAMEWORK_METHOD",
    "ALL_METHODS",
]

FRAMEWORK_METHOD = "meta_des_oracle"
ALL_METHODS = (FRAMEWORK_METHOD, "ola", "lca", "knora_e", "knora_u",
               "single_best", "static_selection", "majority_vote", "oracle")

MODEL_FORMAT = "metasel.desmodel"
MODEL_VERSION = 1


class ModelFormatError(RuntimeError):
    pass


@dataclass
class PoolConfig:
    size: int = 100
    bootstrap_frac: float = 0.5
    epochs: int = 50
    lr: float = 0.01


@dataclass
class DataSource:
    """Either a synthetic generator spec or a CSV file plus holdout split."""

    kind: str = "p2"                                   # "p2" | "csv"
    p2_sizes: tuple = (500, 500, 500, 2000)            # train, meta, dsel, test
    path: str | None = None
    label_column: int = -1
    split: SplitSpec = field(default_factory=SplitSpec)


@dataclass
class ExperimentConfig:
    source: DataSource = field(default_factory=DataSource)
    pool: PoolConfig = field(default_factory=PoolConfig)
    k: int = 7
    kp: int = 5
    consensus_threshold: float = 0.7
    selection_threshold: float = 0.5
    bpso: BpsoConfig = field(default_factory=BpsoConfig)
    meta: MetaTrainConfig = field(default_factory=MetaTrainConfig)
    replications: int = 20
    methods: tuple = ALL_METHODS
    reference_method: str = FRAMEWORK_METHOD
    rrc_samples: int = 1000
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, default=list)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        cfg = cls()
        src = raw.get("source", {})
        cfg.source = DataSource(
            kind=src.get("kind", "p2"),
            p2_sizes=tuple(src.get("p2_sizes", (500, 500, 500, 2000))),
            path=src.get("path"),
            label_column=src.get("label_column", -1),
            split=SplitSpec(**src.get("split", {})),
        )
        cfg.pool = PoolConfig(**raw.get("pool", {}))
        cfg.bpso = BpsoConfig(**raw.get("bpso", {}))
        cfg.meta = MetaTrainConfig(**raw.get("meta", {}))
        for name in ("k", "kp", "consensus_threshold", "selection_threshold",
                     "replications", "reference_method", "rrc_samples", "seed"):
            if name in raw:
                setattr(cfg, name, raw[name])
        if "methods" in raw:
            cfg.methods = tuple(raw["methods"])
        return cfg


def _derive_int(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _split_meta_samples(meta_ds: MetaDataset, n_samples: int, members: int, rng):
    """Sample-level 50/50 halving: all rows of one sample stay together."""
    perm = rng.permutation(n_samples)
    half = n_samples // 2
    first, second = perm[:half], perm[half:]
    row_idx = lambda samples: (np.asarray(samples)[:, None] * members
                               + np.arange(members)[None, :]).reshape(-1)
    return row_idx(first), row_idx(second)


def train_des(train: Dataset, meta_train: Dataset, dsel: Dataset,
              config: ExperimentConfig, base_seed_parts=(0,)):
    """Train one complete selection model.

    Pipeline: fit scaling on the train split; bag the pool; build meta-data
    for the consensus-filtered meta-training and reference samples; search for
    the meta-feature mask with global validation; train the final selector on
    the full masked meta-training data.

    Returns (model, archive, info) where ``info`` carries the meta-dataset and
    bookkeeping counters.
    """
    parts = tuple(base_seed_parts)
    train_scaled, scale = scale_minmax(train)
    meta_scaled = scale.apply_dataset(meta_train)
    dsel_scaled = scale.apply_dataset(dsel)

    pool = bagging(train_scaled, config.pool.size,
                   bootstrap_frac=config.pool.bootstrap_frac,
                   seed=_derive_int(*parts, 20),
                   epochs=config.pool.epochs, lr=config.pool.lr)

    rrc_seed = _derive_int(*parts, 50)
    extractor = MetaFeatureExtractor(pool, dsel_scaled, k=config.k, kp=config.kp,
                                     rrc_samples=config.rrc_samples, rrc_seed=rrc_seed)

    # consensus-based sample selection on both meta-data sources
    meta_pool_labels, _ = pool.predict_batch(meta_scaled.features)
    keep_meta = engine.consensus_keep(meta_pool_labels, meta_scaled.labels,
                                      config.consensus_threshold)
    if not keep_meta.any():
        warnings.warn("consensus filter removed every meta-training sample; "
                      "keeping all of them", RuntimeWarning)
        keep_meta[:] = True
    keep_dsel = engine.consensus_keep(extractor.dsel_pred_labels, dsel_scaled.labels,
                                      config.consensus_threshold)
    if not keep_dsel.any():
        keep_dsel[:] = True

    meta_idx = np.flatnonzero(keep_meta)
    meta_data = extractor.build_meta_dataset(
        meta_scaled.features[meta_idx], meta_scaled.labels[meta_idx],
        sample_ids=meta_idx)
    dsel_idx = np.flatnonzero(keep_dsel)
    val_data = extractor.build_meta_dataset(
        dsel_scaled.features[dsel_idx], dsel_scaled.labels[dsel_idx],
        self_indices=dsel_idx, sample_ids=dsel_idx)

    M = len(pool)
    if len(meta_idx) >= 2:
        halve_rng = np.random.default_rng([*parts, 30])
        rows_t, rows_o = _split_meta_samples(meta_data, len(meta_idx), M, halve_rng)
        bpso_cfg = dataclasses.replace(config.bpso, seed=_derive_int(*parts, 40))
        archive = optimize(meta_data.rows[rows_t], meta_data.labels[rows_t],
                           meta_data.rows[rows_o], meta_data.labels[rows_o],
                           val_data.rows, val_data.labels,
                           bpso_cfg, config.meta, collect_trace=True)
        mask = archive.mask
    else:
        warnings.warn("too few meta-training samples for mask search; "
                      "using the full meta-feature vector", RuntimeWarning)
        from .bpso import Archive
        mask = np.ones(extractor.layout.size, dtype=bool)
        archive = Archive(mask=mask, validation_fitness=np.inf)

    meta_model = train_meta(apply_mask(meta_data.rows, mask), meta_data.labels,
                            config.meta)
    model = DesModel(pool=pool, meta=meta_model, mask=mask, scale=scale,
                     dsel=dsel_scaled, k=config.k, kp=config.kp,
                     consensus_threshold=config.consensus_threshold,
                     selection_threshold=config.selection_threshold,
                     rrc_samples=config.rrc_samples, rrc_seed=rrc_seed)
    model._extractor = extractor
    info = {
        "meta_dataset": meta_data,
        "validation_dataset": val_data,
        "kept_meta_samples": int(keep_meta.sum()),
        "kept_dsel_samples": int(keep_dsel.sum()),
    }
    return model, archive, info


def _load_splits(config: ExperimentConfig, replication: int):
    src = config.source
    parts = (config.seed, replication)
    if src.kind == "p2":
        n_train, n_meta, n_dsel, n_test = src.p2_sizes
        return (generate_p2(n_train, [*parts, 11]),
                generate_p2(n_meta, [*parts, 12]),
                generate_p2(n_dsel, [*parts, 13]),
                generate_p2(n_test, [*parts, 14]))
    if src.kind == "csv":
        ds = load_csv(src.path, src.label_column)
        spec = dataclasses.replace(src.split, seed=_derive_int(*parts, 10))
        return split_holdout(ds, spec)
    raise ValueError(f"unknown data source kind {src.kind!r}")


def evaluate_methods(model: DesModel, test: Dataset, methods, k: int):
    """Accuracy of each requested method on the raw test split."""
    X = model.prepare(test.features)
    test_scaled = Dataset(X, test.labels, test.class_count)
    accuracies = {}
    for method in methods:
        if method == FRAMEWORK_METHOD:
            pred, _ = classify_batch(model, test.features)
            accuracies[method] = float((pred == test.labels).mean())
        elif method == "oracle":
            accuracies[method] = oracle_accuracy(model.pool, test_scaled)
        else:
            pred, _ = engine.baseline_predict_batch(method, model.pool, model.dsel,
                                                    X, k=k)
            accuracies[method] = float((pred == test.labels).mean())
    return accuracies


@dataclass
class FrequencyReport:
    per_bit: np.ndarray
    per_bit_band: list
    per_set: dict
    per_set_band: dict
    layout: FeatureLayout


def frequency_band(freq: float) -> str:
    """Band label with inclusive lower boundaries at 25/50/75 percent."""
    if freq >= 0.75:
        return "black"
    if freq >= 0.5:
        return "dark_grey"
    if freq >= 0.25:
        return "light_grey"
    return "white"


def frequency_report(masks, layout: FeatureLayout) -> FrequencyReport:
    """Selection frequency of each meta-feature (and each criterion family)
    over a set of replication masks."""
    masks = np.atleast_2d(np.asarray(masks, dtype=bool))
    if masks.shape[1] != layout.size:
        raise ValueError("mask width does not match the layout")
    per_bit = masks.mean(axis=0)
    per_set = {}
    for name, start, width in layout.segments:
        per_set[name] = float(per_bit[start:start + width].mean())
    return FrequencyReport(
        per_bit=per_bit,
        per_bit_band=[frequency_band(f) for f in per_bit],
        per_set=per_set,
        per_set_band={k: frequency_band(v) for k, v in per_set.items()},
        layout=layout,
    )


def _mean_ranks(acc_matrix):
    """Average rank per column; rank 1 is the best accuracy, ties share the
    mean of the ranks they straddle."""
    R, n = acc_matrix.shape
    ranks = np.zeros_like(acc_matrix, dtype=float)
    for r in range(R):
        row = acc_matrix[r]
        order = np.argsort(-row, kind="stable")
        pos = 0
        while pos < n:
            tied = [order[pos]]
            while pos + len(tied) < n and row[order[pos + len(tied)]] == row[tied[0]]:
                tied.append(order[pos + len(tied)])
            mean_rank = np.mean(np.arange(pos + 1, pos + len(tied) + 1))
            for j in tied:
                ranks[r, j] = mean_rank
            pos += len(tied)
    return ranks.mean(axis=0), ranks


@dataclass
class RunReport:
    methods: tuple
    accuracies: np.ndarray          # (replications, methods)
    masks: np.ndarray               # (replications, D)
    layout: FeatureLayout
    mean: dict
    std: dict
    avg_rank: dict                  # oracle excluded
    win_tie_loss: dict              # reference vs each other ranked method
    frequencies: FrequencyReport
    reference_method: str
    traces: list                    # per replication: list of trace tuples


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Run the full replicated protocol and aggregate a report.

    Per replication: split (or generate) the data, train a model (pool,
    meta-data with consensus filtering, mask search, final selector), then
    score every requested method on the test split. Deterministic given the
    configuration.
    """
    if config.replications < 1:
        raise ValueError("need at least one replication")
    methods = tuple(config.methods)
    acc = np.zeros((config.replications, len(methods)))
    masks = []
    traces = []
    for r in range(config.replications):
        train, meta_train, dsel, test = _load_splits(config, r)
        model, archive, _ = train_des(train, meta_train, dsel, config,
                                      base_seed_parts=(config.seed, r))
        result = evaluate_methods(model, test, methods, config.k)
        for j, m in enumerate(methods):
            acc[r, j] = result[m]
        masks.append(model.mask)
        traces.append(archive.trace)
    masks = np.array(masks, dtype=bool)

    ranked = [m for m in methods if m != "oracle"]
    ranked_idx = [methods.index(m) for m in ranked]
    avg_rank_vals, _ = _mean_ranks(acc[:, ranked_idx])
    avg_rank = dict(zip(ranked, avg_rank_vals))

    ref = config.reference_method
    wtl = {}
    if ref in methods:
        ref_col = acc[:, methods.index(ref)]
        for m in ranked:
            if m == ref:
                continue
            col = acc[:, methods.index(m)]
            wtl[m] = (int((ref_col > col).sum()), int((ref_col == col).sum()),
                      int((ref_col < col).sum()))

    freq = frequency_report(masks, FeatureLayout(config.k, config.kp))
    return RunReport(
        methods=methods,
        accuracies=acc,
        masks=masks,
        layout=freq.layout,
        mean={m: float(acc[:, j].mean()) for j, m in enumerate(methods)},
        std={m: float(acc[:, j].std()) for j, m in enumerate(methods)},
        avg_rank=avg_rank,
        win_tie_loss=wtl,
        frequencies=freq,
        reference_method=ref,
        traces=traces,
    )


# -- persistence -------------------------------------------------------------

def save_model(model: DesModel, path):
    """Write a versioned single-file model bundle."""
    payload = dataclasses.replace(model, _extractor=None)
    blob = {"format": MODEL_FORMAT, "version": MODEL_VERSION, "model": payload}
    with open(path, "wb") as fh:
        pickle.dump(blob, fh, protocol=pickle.HIGHEST_PROTOCOL)


def load_model(path) -> DesModel:
    """Read a model bundle; corruption and version mismatches raise
    ModelFormatError without producing a partial model."""
    try:
        with open(path, "rb") as fh:
            blob = pickle.load(fh)
    except (pickle.UnpicklingError, EOFError, AttributeError, ImportError,
            IndexError, ValueError) as exc:
        raise ModelFormatError(f"{path}: not a readable model file ({exc})") from exc
    if not isinstance(blob, dict) or blob.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: not a {MODEL_FORMAT} file")
    if blob.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"{path}: model version {blob.get('version')} is incompatible "
            f"with supported version {MODEL_VERSION}")
    return blob["model"]


# -- CSV emission ------------------------------------------------------------

def _fmt(v) -> str:
    return format(float(v), ".10g")


def write_report_csvs(report: RunReport, out_dir):
    """Emit accuracy.csv, summary.csv, masks.csv, the two frequency tables and
    the optimization trace. Output is byte-stable for identical reports."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "accuracy.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("replication,method,accuracy\n")
        for r in range(report.accuracies.shape[0]):
            for j, m in enumerate(report.methods):
                fh.write(f"{r},{m},{_fmt(report.accuracies[r, j])}\n")

    with open(out / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("method,mean_accuracy,std_accuracy,avg_rank,win,tie,loss\n")
        for m in report.methods:
            rank = _fmt(report.avg_rank[m]) if m in report.avg_rank else ""
            wtl = report.win_tie_loss.get(m)
            w, t, l = (str(x) for x in wtl) if wtl else ("", "", "")
            fh.write(f"{m},{_fmt(report.mean[m])},{_fmt(report.std[m])},{rank},{w},{t},{l}\n")

    with open(out / "masks.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("replication," + ",".join(report.layout.column_names()) + "\n")
        for r in range(report.masks.shape[0]):
            fh.write(str(r) + "," + ",".join(str(int(b)) for b in report.masks[r]) + "\n")

    freq = report.frequencies
    with open(out / "meta_feature_frequency.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("bit,name,set,frequency,band\n")
        names = report.layout.column_names()
        for b, f in enumerate(freq.per_bit):
            fh.write(f"{b},{names[b]},{report.layout.set_of(b)},{_fmt(f)},{freq.per_bit_band[b]}\n")
    with open(out / "meta_feature_set_frequency.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("set,frequency,band\n")
        for name, f in freq.per_set.items():
            fh.write(f"{name},{_fmt(f)},{freq.per_set_band[name]}\n")

    with open(out / "trace.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("replication,run,generation,gbest_fitness,archive_validation_fitness,"
                 "mean_swarm_fitness\n")
        for r, trace in enumerate(report.traces):
            for run, gen, gbest, arch, meanf in trace:
                fh.write(f"{r},{run},{gen},{_fmt(gbest)},{_fmt(arch)},{_fmt(meanf)}\n")
