"""Command-line entry points.

Subcommands:
  gen-p2       write a synthetic two-class dataset as CSV
  train        train a selection model from a config file and save it
  classify     label a CSV with a saved model, writing a prediction table
  benchmark    run the replicated experiment protocol and emit CSV reports
  freq-report  aggregate meta-feature selection frequencies from masks.csv

All commands exit 0 on success and nonzero with a diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiment
from .data import generate_p2, load_csv
from .engine import classify_batch
from .metafeatures import FeatureLayout, meta_dataset_to_csv


def _load_config(args) -> experiment.ExperimentConfig:
    if args.config:
        config = experiment.ExperimentConfig.from_json(Path(args.config).read_text())
    else:
        config = experiment.ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "methods", None):
        config.methods = tuple(args.methods.split(","))
    return config


def _cmd_gen_p2(args) -> int:
    ds = generate_p2(args.n, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,y,label\n")
        for row, lab in zip(ds.features, ds.labels):
            fh.write(f"{row[0]:.10g},{row[1]:.10g},{int(lab)}\n")
    print(f"wrote {len(ds)} samples to {args.out}")
    return 0


def _cmd_train(args) -> int:
    config = _load_config(args)
    train, meta_train, dsel, _ = experiment._load_splits(config, 0)
    model, archive, info = experiment.train_des(train, meta_train, dsel, config,
                                                base_seed_parts=(config.seed, 0))
    experiment.save_model(model, args.out)
    print(f"saved model to {args.out} "
          f"(selected {int(model.mask.sum())}/{model.mask.size} meta-features, "
          f"validation fitness {archive.validation_fitness:.6g})")
    if args.export_meta:
        meta_dataset_to_csv(info["meta_dataset"], args.export_meta)
        print(f"wrote meta-training data to {args.export_meta}")
    return 0


def _cmd_classify(args) -> int:
    model = experiment.load_model(args.model)
    if args.label_column is not None:
        ds = load_csv(args.data, args.label_column)
        X, truth = ds.features, ds.labels
    else:
        X, truth = load_csv_features(args.data), None
    preds, diags = classify_batch(model, X)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("sample_id,true_label,predicted_label,method,fallback,selected_count\n")
        for j, p in enumerate(preds):
            true = "" if truth is None else str(int(truth[j]))
            fh.write(f"{j},{true},{int(p)},{experiment.FRAMEWORK_METHOD},"
                     f"{int(diags[j].fallback)},{len(diags[j].selected)}\n")
    if truth is not None:
        acc = float((preds == truth).mean())
        print(f"accuracy {acc:.4f} on {len(preds)} samples -> {args.out}")
    else:
        print(f"classified {len(preds)} samples -> {args.out}")
    return 0


def load_csv_features(path) -> np.ndarray:
    """Feature-only CSV (no label column), optional header row."""
    import csv as _csv
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in _csv.reader(fh) if r]
    start = 0
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        start = 1
    return np.array([[float(c) for c in row] for row in rows[start:]])


def _cmd_benchmark(args) -> int:
    config = _load_config(args)
    report = experiment.run_experiment(config)
    experiment.write_report_csvs(report, args.out_dir)
    print(f"report written to {args.out_dir}")
    width = max(len(m) for m in report.methods)
    for m in report.methods:
        rank = report.avg_rank.get(m)
        rank_s = f"  avg rank {rank:.2f}" if rank is not None else ""
        print(f"  {m:<{width}}  {report.mean[m]:.4f} +/- {report.std[m]:.4f}{rank_s}")
    return 0


def _cmd_freq_report(args) -> int:
    lines = Path(args.masks).read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    bits = np.array([[int(v) for v in line.split(",")[1:]] for line in lines[1:]],
                    dtype=bool)
    d = bits.shape[1]
    layout = None
    if args.k and args.kp:
        layout = FeatureLayout(args.k, args.kp)
    else:
        # recover (K, Kp) from D = 8K + Kp + 6 by scanning plausible K
        for k in range(1, d):
            kp = d - 8 * k - 6
            if kp >= 1 and FeatureLayout(k, kp).column_names() == header[1:]:
                layout = FeatureLayout(k, kp)
                break
    if layout is None or layout.size != d:
        raise SystemExit("cannot infer (K, Kp) from masks file; pass --k/--kp")
    freq = experiment.frequency_report(bits, layout)
    out = Path(args.out)
    names = layout.column_names()
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("bit,name,set,frequency,band\n")
        for b, f in enumerate(freq.per_bit):
            fh.write(f"{b},{names[b]},{layout.set_of(b)},{f:.10g},{freq.per_bit_band[b]}\n")
    print(f"wrote {out}")
    for name in freq.per_set:
        print(f"  {name:<10} {freq.per_set[name]:.3f}  {freq.per_set_band[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metasel",
                                     description="dynamic ensemble selection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-p2", help="generate the synthetic two-class dataset")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_p2)

    p = sub.add_parser("train", help="train a selection model")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--export-meta", help="also write the meta-training CSV here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", help="classify a CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", type=int, default=None,
                   help="label column index (include to report accuracy)")
    p.add_argument("--out", required=True, help="prediction CSV to write")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("benchmark", help="run the replicated experiment protocol")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--methods", help="comma-separated method list")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("freq-report", help="selection frequencies from masks.csv")
    p.add_argument("--masks", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--kp", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_freq_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
