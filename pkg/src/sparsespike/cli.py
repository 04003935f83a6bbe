"""Command-line harness: train, eval, compare, inspect-mask.

Runs are batch jobs driven entirely by a flat config (file plus flag
overrides): build the sparse topology, initialize weights, then per epoch
train all batches, evolve the topology, and evaluate.  Every artifact
(CSV logs, checkpoint, summary, figures) lands in the output directory and
is byte-reproducible from the config and seeds.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import figures
from .config import RunConfig, load_config
from .data import LabeledDataset, bernoulli_encode, load_idx
from .errors import (CheckpointError, ConfigError, DataFormatError,
                     PercolationError, SparseSpikeError)
from .evolution import EvolutionReport, evolve_epoch, prune_schedule
from .masks import SparseLayer, SparseMask
from .metrics import MetricsAccumulator
from .network import (SnnNetwork, forward, load_network, save_network,
                      train_step)
from .neuron import SurrogateSpec
from .topology import balanced_random_mask, correlation_mask, phi_matrix
from .weightinit import (WeightInitParams, init_layer_weights, kaiming_init,
                         temporal_sparsity)

TRAIN_CSV_HEADER = ("epoch,loss,accuracy,sparsity,node_sparsity,"
                    "spikes,sops,energy_joules")


def _resolve_widths(cfg: RunConfig, n_features: int) -> list:
    widths = cfg.hidden_widths()
    if not widths:
        widths = [cfg.beta * n_features] * cfg.hidden_layers
    if cfg.topology_init == "correlation" and widths[0] % n_features != 0:
        raise ConfigError(
            f"first hidden width {widths[0]} must be a multiple of the input "
            f"width {n_features} for correlation-based initialization")
    return widths


def build_network(cfg: RunConfig, train_spikes, n_features: int,
                  n_classes: int):
    """Stages 1 and 2: masks, then weights; returns (net, init params)."""
    widths = _resolve_widths(cfg, n_features)
    ss = np.random.SeedSequence(cfg.seed_init)
    seeds = ss.spawn(2 * (len(widths) + 1))

    masks = []
    if cfg.topology_init == "correlation":
        sub = train_spikes[:, :min(cfg.phi_samples, train_spikes.shape[1])]
        corr = phi_matrix(sub, cfg.correlation)
        masks.append(correlation_mask(corr, widths[0] // n_features, cfg.sparsity))
    else:
        masks.append(balanced_random_mask(widths[0], n_features, cfg.sparsity,
                                          seeds[0]))
    for l in range(1, len(widths)):
        masks.append(balanced_random_mask(widths[l], widths[l - 1], cfg.sparsity,
                                          seeds[l]))
    masks.append(SparseMask.full(n_classes, widths[-1]))

    layers = [SparseLayer(mask, np.zeros(mask.shape), cfg.threshold, cfg.decay,
                          is_output_layer=(i == len(masks) - 1))
              for i, mask in enumerate(masks)]

    st = temporal_sparsity(train_spikes)
    fan_in = [n_features] + widths
    layer_sparsity = [cfg.sparsity] * len(widths) + [0.0]
    params = WeightInitParams(st, layer_sparsity, fan_in, cfg.threshold)

    weight_seeds = seeds[len(widths) + 1:]
    for l, layer in enumerate(layers):
        if cfg.weight_init == "spike-aware":
            init_layer_weights(layer, l + 1, params, weight_seeds[l])
        else:
            kaiming_init(layer, weight_seeds[l])

    betas = [max(1, w // n_features) for w in widths]
    return SnnNetwork(layers, cfg.time_steps, betas), params


def _check_percolation(net: SnnNetwork) -> None:
    for layer in net.layers[:-1]:
        if layer.mask.n_links == 0 or not layer.row_active.any():
            raise PercolationError("percolated network: no trainable path")


def evaluate_with_metrics(net: SnnNetwork, spikes, labels, pj_per_sop: float,
                          chunk: int = 256):
    """One chunked pass producing both accuracy and the energy report."""
    labels = np.asarray(labels, dtype=np.int64)
    n = spikes.shape[1]
    if n == 0:
        raise DataFormatError("evaluation dataset is empty")
    acc_sum = 0
    meter = MetricsAccumulator(net)
    for start in range(0, n, chunk):
        part = spikes[:, start:start + chunk]
        logits, trace = forward(net, part, record_potentials=False)
        acc_sum += int((logits.argmax(axis=1) == labels[start:start + chunk]).sum())
        meter.add_trace(trace)
    return acc_sum / n, meter.report(pj_per_sop)


def _load_split(images_path, labels_path, limit: int) -> LabeledDataset:
    ds = load_idx(images_path, labels_path)
    if limit and limit < ds.n_samples:
        ds = ds.subset(limit)
    return ds


def run_train(cfg: RunConfig) -> dict:
    """Full training run; returns the summary record it also writes to disk."""
    cfg.validate()
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    train = _load_split(cfg.train_images, cfg.train_labels, cfg.train_limit)
    test = _load_split(cfg.test_images, cfg.test_labels, cfg.test_limit)
    if train.n_features != test.n_features:
        raise DataFormatError(
            f"train features {train.n_features} != test features {test.n_features}")
    n_classes = max(train.n_classes, test.n_classes)

    train_spikes = bernoulli_encode(train, cfg.time_steps, cfg.seed_encode)
    test_spikes = bernoulli_encode(test, cfg.time_steps, cfg.seed_encode + 1)

    try:
        net, params = build_network(cfg, train_spikes, train.n_features, n_classes)
    except ValueError as exc:
        # config values that only turn out infeasible against this dataset
        raise ConfigError(str(exc)) from exc
    _check_percolation(net)

    spec = SurrogateSpec(cfg.surrogate, cfg.effective_surrogate_width())
    # entropy tuple keeps the shuffle stream disjoint from the init streams
    shuffle_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed_init, 1)))
    evolve_rng = np.random.default_rng(cfg.seed_evolve)

    (out_dir / "config.txt").write_text(cfg.to_text())
    train_csv = [TRAIN_CSV_HEADER]
    evo_csv = [EvolutionReport.CSV_HEADER]
    summary = {}

    for epoch in range(cfg.epochs):
        perm = shuffle_rng.permutation(train.n_samples)
        losses = []
        for start in range(0, train.n_samples, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            batch = (train_spikes[:, idx], train.labels[idx])
            losses.append(train_step(net, batch, cfg.lr, spec))
        loss = float(np.mean(losses))

        if cfg.evolve:
            rate = prune_schedule(cfg.prune_rate, epoch, cfg.epochs)
            report = evolve_epoch(net, rate, evolve_rng, params, cfg.removal_mode)
            evo_csv.extend(report.csv_rows(epoch))
            _check_percolation(net)

        accuracy, energy_report = evaluate_with_metrics(
            net, test_spikes, test.labels, cfg.pj_per_sop)
        train_csv.append(
            f"{epoch},{loss:.10g},{accuracy:.10g},"
            f"{energy_report.link_sparsity:.10g},"
            f"{energy_report.node_sparsity:.10g},{energy_report.spike_count},"
            f"{energy_report.sops},{energy_report.energy_joules:.10g}")
        summary = {
            "epoch": epoch,
            "loss": loss,
            "accuracy": accuracy,
            "link_sparsity": energy_report.link_sparsity,
            "node_sparsity": energy_report.node_sparsity,
            "spike_count": energy_report.spike_count,
            "sops": energy_report.sops,
            "energy_joules": energy_report.energy_joules,
        }

    (out_dir / "training.csv").write_text("\n".join(train_csv) + "\n")
    (out_dir / "evolution.csv").write_text("\n".join(evo_csv) + "\n")
    checkpoint = out_dir / "checkpoint.bin"
    save_network(net, checkpoint)
    summary["checkpoint"] = str(checkpoint)
    summary["test_encode_seed"] = cfg.seed_encode + 1
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if cfg.figures:
        figures.training_curves(out_dir / "training.csv",
                                out_dir / "training_curves.png")
    return summary


def run_eval(checkpoint, images_path, labels_path, encode_seed: int,
             limit: int = 0, pj_per_sop: float = 1.5):
    """Load a checkpoint, evaluate a dataset, and return (accuracy, report)."""
    net = load_network(checkpoint)
    ds = _load_split(images_path, labels_path, limit)
    if ds.n_features != net.n_inputs:
        raise ConfigError(
            f"dataset has {ds.n_features} features but the checkpoint expects "
            f"{net.n_inputs}")
    spikes = bernoulli_encode(ds, net.T, encode_seed)
    return evaluate_with_metrics(net, spikes, ds.labels, pj_per_sop)


def _safe_ratio(a: float, b: float) -> float:
    if a == b:
        return 1.0
    if b == 0:
        return float("inf")
    return a / b


def run_compare(checkpoint_a, checkpoint_b, images_path, labels_path,
                encode_seed: int, limit: int = 0, pj_per_sop: float = 1.5,
                out_csv=None, figure_path=None):
    """Side-by-side accuracy/activity/energy of two checkpoints on one dataset."""
    net_a = load_network(checkpoint_a)
    net_b = load_network(checkpoint_b)
    if net_a.n_inputs != net_b.n_inputs or net_a.n_classes != net_b.n_classes:
        raise ConfigError(
            f"incompatible architectures: {net_a.n_inputs}->{net_a.n_classes} vs "
            f"{net_b.n_inputs}->{net_b.n_classes}")
    acc_a, rep_a = run_eval(checkpoint_a, images_path, labels_path, encode_seed,
                            limit, pj_per_sop)
    acc_b, rep_b = run_eval(checkpoint_b, images_path, labels_path, encode_seed,
                            limit, pj_per_sop)
    rows = [
        ("accuracy", acc_a, acc_b),
        ("link_sparsity", rep_a.link_sparsity, rep_b.link_sparsity),
        ("node_sparsity", rep_a.node_sparsity, rep_b.node_sparsity),
        ("spike_count", rep_a.spike_count, rep_b.spike_count),
        ("sops", rep_a.sops, rep_b.sops),
        ("energy_joules", rep_a.energy_joules, rep_b.energy_joules),
    ]
    table = [(name, a, b, _safe_ratio(a, b)) for name, a, b in rows]
    if out_csv is not None:
        lines = ["metric,a,b,ratio_a_over_b"]
        lines += [f"{n},{a:.10g},{b:.10g},{r:.10g}" for n, a, b, r in table]
        Path(out_csv).write_text("\n".join(lines) + "\n")
    if figure_path is not None:
        figures.comparison_bars(table, figure_path)
    return table


def format_compare_table(table) -> str:
    lines = [f"{'metric':<16}{'a':>16}{'b':>16}{'a/b':>12}"]
    for name, a, b, r in table:
        lines.append(f"{name:<16}{a:>16.6g}{b:>16.6g}{r:>12.4g}")
    return "\n".join(lines)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f.name, default=None, metavar="V")


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    from .config import _coerce
    for f in fields(RunConfig):
        raw = getattr(args, f.name, None)
        if raw is not None:
            setattr(cfg, f.name, _coerce(f.name, str(raw)))
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparsespike",
                     description="Dynamic sparse training for spiking networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the full training pipeline")
    _add_config_flags(p_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p_eval.add_argument("checkpoint")
    p_eval.add_argument("--images", required=True)
    p_eval.add_argument("--labels", required=True)
    p_eval.add_argument("--encode-seed", type=int, default=2)
    p_eval.add_argument("--limit", type=int, default=0)
    p_eval.add_argument("--pj-per-sop", type=float, default=1.5)

    p_cmp = sub.add_parser("compare", help="compare two checkpoints on a dataset")
    p_cmp.add_argument("checkpoint_a")
    p_cmp.add_argument("checkpoint_b")
    p_cmp.add_argument("--images", required=True)
    p_cmp.add_argument("--labels", required=True)
    p_cmp.add_argument("--encode-seed", type=int, default=2)
    p_cmp.add_argument("--limit", type=int, default=0)
    p_cmp.add_argument("--pj-per-sop", type=float, default=1.5)
    p_cmp.add_argument("--out-csv", default=None)
    p_cmp.add_argument("--figure", default=None)

    p_insp = sub.add_parser("inspect-mask", help="dump a layer's edge list")
    p_insp.add_argument("checkpoint")
    p_insp.add_argument("--layer", type=int, default=0)
    p_insp.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "train":
            cfg = load_config(args.config) if args.config else RunConfig()
            cfg = _apply_overrides(cfg, args)
            summary = run_train(cfg)
            print(json.dumps(summary, indent=2, sort_keys=True))
        elif args.command == "eval":
            accuracy, report = run_eval(args.checkpoint, args.images, args.labels,
                                        args.encode_seed, args.limit,
                                        args.pj_per_sop)
            print(f"accuracy={accuracy:.10g}")
            print(report.to_text())
        elif args.command == "compare":
            table = run_compare(args.checkpoint_a, args.checkpoint_b, args.images,
                                args.labels, args.encode_seed, args.limit,
                                args.pj_per_sop, args.out_csv, args.figure)
            print(format_compare_table(table))
        elif args.command == "inspect-mask":
            net = load_network(args.checkpoint)
            if not 0 <= args.layer < len(net.layers):
                raise ConfigError(
                    f"layer {args.layer} outside 0..{len(net.layers) - 1}")
            if args.out:
                with open(args.out, "w") as f:
                    net.layers[args.layer].mask.write_edge_list(f)
            else:
                net.layers[args.layer].mask.write_edge_list(sys.stdout)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (PercolationError, CheckpointError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    except SparseSpikeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
