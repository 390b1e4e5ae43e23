"""Experiment harness: train, sweep, and report from one config file.

All commands read a flat ``key = value`` config file (same format as
the cost config) plus flag overrides, and write deterministic CSV
reports; every row is reproducible from (config, seed) alone.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from . import dataset as ds_mod
from . import fog
from .costmodel import CostParams, load_cost_params, read_kv_file
from .forest import Budget, FieldOfGroves, budget_rf_train, gc_train, load_field, save_field, split_forest
from .simarch import SimConfig, simulate

__all__ = ["main", "ExperimentConfig"]

FOG_MAX_THRESH = 1.0 - 1e-9  # "threshold at maximum": all groves consulted
# FoG_opt = smallest threshold within this many accuracy points of FoG_max
OPT_ACCURACY_SLACK = 0.5
DEFAULT_THRESH_GRID = [round(0.05 * i, 2) for i in range(1, 20)]


@dataclass
class ExperimentConfig:
    dataset: str = ""
    name: str = ""
    label_column: int = -1
    has_header: bool = False
    normalize: bool = True
    train_fraction: float = 0.6
    validation_fraction: float = 0.3
    test_fraction: float = 0.1
    seed: int = 0
    n: int = 16
    k: int = 2
    max_depth: int = 12
    min_leaf: int = 1
    features_per_tree: int | None = None
    thresh: list[float] = dataclass_field(default_factory=lambda: [0.5])
    max_hops: int | None = None
    parallelism: int = 1
    queue_capacity_bytes: int = 6144
    cost_config: str | None = None
    out: str = "out"
    topologies: list[tuple[int, int]] = dataclass_field(default_factory=list)
    model: str | None = None
    budget_metric: str | None = None
    budget_limit: float | None = None

    @property
    def cost_params(self) -> CostParams:
        return load_cost_params(self.cost_config) if self.cost_config else CostParams()


def _parse_bool(value: str) -> bool:
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    if value.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _parse_topologies(value: str) -> list[tuple[int, int]]:
    pairs = []
    for item in value.split(","):
        groves, _, trees = item.strip().partition("x")
        pairs.append((int(groves), int(trees)))
    return pairs


def load_experiment_config(path: str | None, overrides: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path:
        for key, value in read_kv_file(path).items():
            if key in ("dataset", "name", "out", "cost_config", "model"):
                setattr(cfg, key, value)
            elif key in ("has_header", "normalize"):
                setattr(cfg, key, _parse_bool(value))
            elif key in ("train_fraction", "validation_fraction", "test_fraction", "budget_limit"):
                setattr(cfg, key, float(value))
            elif key in ("label_column", "seed", "n", "k", "max_depth", "min_leaf",
                         "features_per_tree", "max_hops", "parallelism",
                         "queue_capacity_bytes"):
                setattr(cfg, key, int(value))
            elif key == "thresh":
                cfg.thresh = [float(v) for v in value.split(",")]
            elif key == "topologies":
                cfg.topologies = _parse_topologies(value)
            elif key == "budget_metric":
                cfg.budget_metric = value
            else:
                raise ValueError(f"unknown config key {key!r} in {path}")
    for key in ("dataset", "n", "k", "max_hops", "seed", "cost_config", "out"):
        value = getattr(overrides, key.replace("-", "_"), None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(overrides, "thresh", None) is not None:
        cfg.thresh = [float(v) for v in overrides.thresh.split(",")]
    if not cfg.dataset:
        raise ValueError("no dataset configured (config key 'dataset' or --dataset)")
    if not cfg.name:
        cfg.name = Path(cfg.dataset).stem
    return cfg


def prepare_data(cfg: ExperimentConfig):
    """Load, split, and (optionally) normalize with train-fitted statistics."""
    full = ds_mod.load_csv(cfg.dataset, label_column=cfg.label_column,
                           has_header=cfg.has_header, name=cfg.name)
    spec = ds_mod.SplitSpec(cfg.train_fraction, cfg.validation_fraction,
                            cfg.test_fraction, seed=cfg.seed)
    train, validation, test = ds_mod.split(full, spec)
    if cfg.normalize:
        train, scaler = ds_mod.minmax_normalize(train)
        validation, _ = ds_mod.minmax_normalize(validation, scaler)
        test, _ = ds_mod.minmax_normalize(test, scaler)
    return train, validation, test


def _train_field(cfg: ExperimentConfig, train, validation) -> FieldOfGroves:
    if cfg.budget_metric is not None:
        if cfg.budget_limit is None:
            raise ValueError("budget_metric set but budget_limit missing")
        rf = budget_rf_train(train, validation, Budget(cfg.budget_metric, cfg.budget_limit),
                             cfg.cost_params, n_max=cfg.n, max_depth=cfg.max_depth,
                             min_leaf=cfg.min_leaf, features_per_tree=cfg.features_per_tree,
                             seed=cfg.seed)
        return split_forest(rf, cfg.k)
    return gc_train(cfg.n, cfg.k, train, max_depth=cfg.max_depth, min_leaf=cfg.min_leaf,
                    features_per_tree=cfg.features_per_tree, seed=cfg.seed)


def _sim_config(cfg: ExperimentConfig, field: FieldOfGroves, thresh: float) -> SimConfig:
    return SimConfig(
        n_groves=field.n_groves_,
        trees_per_grove=field.grove_size,
        thresh=thresh,
        max_hops=cfg.max_hops,
        seed=cfg.seed,
        queue_capacity_bytes=cfg.queue_capacity_bytes,
        parallelism=cfg.parallelism,
    )


def _fmt(value) -> str:
    return f"{value:.12g}" if isinstance(value, float) else str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _sweep_row(cfg: ExperimentConfig, field: FieldOfGroves, test, thresh: float) -> list:
    stats = simulate(test.features, field, _sim_config(cfg, field, thresh), cfg.cost_params)
    correct = sum(1 for r, y in zip(stats.records, test.labels) if r.label == int(y))
    hops = float(np.mean([r.hops for r in stats.records]))
    return [
        test.name.split("[")[0], field.n_groves_, field.grove_size, thresh,
        correct / len(stats.records), hops, stats.mean_energy_j,
        stats.mean_latency_cycles, stats.edp_js,
    ]


SWEEP_HEADER = ["dataset", "n_groves", "trees_per_grove", "threshold",
                "accuracy", "avg_hops", "energy_J", "latency_cycles", "edp"]


def cmd_train(cfg: ExperimentConfig) -> None:
    train, validation, test = prepare_data(cfg)
    field = _train_field(cfg, train, validation)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    save_field(field, out / "field.model")

    results = field.evaluate(validation.features,
                             fog.EvalConfig(thresh=cfg.thresh[0], max_hops=cfg.max_hops,
                                            seed=cfg.seed))
    soft_acc = float(np.mean(field.forest_.predict_soft(validation.features).argmax(axis=1)
                             == validation.labels))
    maj_acc = float(np.mean(field.forest_.predict_majority(validation.features)
                            == validation.labels))
    report = [
        f"dataset {cfg.name}",
        f"n_trees {len(field.forest_.estimators_)}",
        f"n_groves {field.n_groves_}",
        f"trees_per_grove {field.grove_size}",
        f"normalized {str(cfg.normalize).lower()}",
        f"validation_accuracy_soft {_fmt(soft_acc)}",
        f"validation_accuracy_majority {_fmt(maj_acc)}",
        f"validation_accuracy_fog_thresh_{_fmt(cfg.thresh[0])} "
        f"{_fmt(fog.accuracy(results, validation.labels))}",
        f"validation_avg_hops {_fmt(fog.avg_hops(results))}",
    ]
    (out / "training_report.txt").write_text("\n".join(report) + "\n", encoding="utf-8")
    print(f"wrote {out / 'field.model'}")


def _field_for_eval(cfg: ExperimentConfig, train, validation) -> FieldOfGroves:
    if cfg.model:
        return load_field(cfg.model)
    return _train_field(cfg, train, validation)


def cmd_sweep_topology(cfg: ExperimentConfig) -> None:
    if not cfg.topologies:
        raise ValueError("sweep-topology needs a 'topologies' list, e.g. 8x2,4x4")
    train, validation, test = prepare_data(cfg)
    rows = []
    for n_groves, trees_per_grove in cfg.topologies:
        sub = ExperimentConfig(**{**cfg.__dict__, "n": n_groves * trees_per_grove,
                                  "k": trees_per_grove})
        field = _train_field(sub, train, validation)
        for thresh in cfg.thresh:
            rows.append(_sweep_row(cfg, field, test, thresh))
    _write_csv(Path(cfg.out) / "sweep_topology.csv", SWEEP_HEADER, rows)
    print(f"wrote {Path(cfg.out) / 'sweep_topology.csv'}")


def cmd_sweep_threshold(cfg: ExperimentConfig) -> None:
    train, validation, test = prepare_data(cfg)
    field = _field_for_eval(cfg, train, validation)
    # identical start-grove assignments across rows: starts derive from
    # (seed, input id) only, never from the threshold
    rows = [_sweep_row(cfg, field, test, thresh) for thresh in sorted(cfg.thresh)]
    _write_csv(Path(cfg.out) / "sweep_threshold.csv", SWEEP_HEADER, rows)
    print(f"wrote {Path(cfg.out) / 'sweep_threshold.csv'}")


def cmd_report(cfg: ExperimentConfig) -> None:
    train, validation, test = prepare_data(cfg)
    field = _field_for_eval(cfg, train, validation)
    rf = field.forest_
    cost = cfg.cost_params

    # conventional forest = single grove holding every tree, one hop
    single = split_forest(rf, len(rf.estimators_))
    rf_sim = simulate(test.features, single,
                      SimConfig(n_groves=1, trees_per_grove=len(rf.estimators_),
                                thresh=0.5, max_hops=1, seed=cfg.seed,
                                queue_capacity_bytes=cfg.queue_capacity_bytes,
                                parallelism=cfg.parallelism),
                      cost)
    rf_soft_acc = float(np.mean(rf.predict_soft(test.features).argmax(axis=1) == test.labels))
    rf_maj_acc = float(np.mean(rf.predict_majority(test.features) == test.labels))

    def fog_point(thresh: float):
        stats = simulate(test.features, field, _sim_config(cfg, field, thresh), cost)
        acc = sum(1 for r, y in zip(stats.records, test.labels)
                  if r.label == int(y)) / len(stats.records)
        return acc, stats.mean_energy_j

    max_acc, max_energy = fog_point(FOG_MAX_THRESH)
    opt_thresh, opt_acc, opt_energy = FOG_MAX_THRESH, max_acc, max_energy
    for thresh in sorted(DEFAULT_THRESH_GRID):
        acc, energy = fog_point(thresh)
        if acc >= max_acc - OPT_ACCURACY_SLACK / 100.0:
            opt_thresh, opt_acc, opt_energy = thresh, acc, energy
            break

    rows = [
        ["RF_soft", "", rf_soft_acc, rf_sim.mean_energy_j],
        ["RF_majority", "", rf_maj_acc, rf_sim.mean_energy_j],
        ["FoG_max", FOG_MAX_THRESH, max_acc, max_energy],
        ["FoG_opt", opt_thresh, opt_acc, opt_energy],
    ]
    _write_csv(Path(cfg.out) / "report.csv",
               ["variant", "threshold", "accuracy", "energy_J"], rows)
    print(f"wrote {Path(cfg.out) / 'report.csv'}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fogrf",
                                     description="Grove-chained random forest experiments")
    parser.add_argument("--config", help="key = value experiment config file")
    parser.add_argument("--dataset")
    parser.add_argument("--n", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--thresh", help="comma-separated threshold list")
    parser.add_argument("--max-hops", dest="max_hops", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--cost-config", dest="cost_config")
    parser.add_argument("--out")
    parser.add_argument("command",
                        choices=["train", "sweep-topology", "sweep-threshold", "report"])
    args = parser.parse_args(argv)

    handlers = {
        "train": cmd_train,
        "sweep-topology": cmd_sweep_topology,
        "sweep-threshold": cmd_sweep_threshold,
        "report": cmd_report,
    }
    try:
        cfg = load_experiment_config(args.config, args)
        handlers[args.command](cfg)
    except Exception as exc:
        print(f"fogrf: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
