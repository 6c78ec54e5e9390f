"""Command-line front end: train, attack, baseline, report.

Every run is a pure function of config + seed; outputs are byte-identical
across reruns. Wall-clock timestamps go only to the ``run.log`` sidecar.
``SEA_NUM_THREADS`` caps the dense-kernel thread pools and must therefore be
applied before the numeric stack loads, which is why the heavy imports below
happen inside ``main``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone


def _apply_thread_env() -> None:
    threads = os.environ.get("SEA_NUM_THREADS")
    if not threads:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, threads)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sea",
        description="Spectral edge-vulnerability scoring and reweighting attacks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--arch", choices=["GCN", "GAT", "GraphSAGE"])
    common.add_argument("--out", help="output directory")

    attackish = argparse.ArgumentParser(add_help=False)
    attackish.add_argument("--k", type=int)
    attackish.add_argument("--s", type=int)
    attackish.add_argument("--fraction", type=float)
    attackish.add_argument("--multiplier", type=float)
    attackish.add_argument("--mode", choices=["evasion", "poisoning"])

    sub.add_parser("train", parents=[common])
    p_attack = sub.add_parser("attack", parents=[common, attackish])
    p_attack.add_argument(
        "--train",
        action="store_true",
        help="train in-process instead of loading a checkpoint",
    )
    p_base = sub.add_parser("baseline", parents=[common, attackish])
    p_base.add_argument("--trials", type=int)
    sub.add_parser("report", parents=[common, attackish])
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    keys = ("seed", "arch", "out", "k", "s", "fraction", "multiplier", "mode", "trials")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _log_line(out_dir: str, argv: list[str]) -> None:
    stamp = datetime.now(timezone.utc).isoformat()
    with open(os.path.join(out_dir, "run.log"), "a", encoding="utf-8") as fh:
        fh.write(f"{stamp} sea {' '.join(argv)}\n")


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_split_dataset(cfg):
    from .data import load_cora, make_split

    data = load_cora(cfg.content_path, cfg.cites_path)
    masks = make_split(
        data.n, data.labels, cfg.split, cfg.seed, cfg.train_frac, cfg.val_frac
    )
    return data.with_masks(*masks)


def _train_cfg(cfg):
    from .training import TrainConfig

    return TrainConfig(
        epochs=cfg.epochs,
        learning_rate=cfg.learning_rate,
        weight_decay=cfg.weight_decay,
        seed=cfg.seed,
        dropout=cfg.dropout,
    )


def _checkpoint_path(cfg) -> str:
    return os.path.join(cfg.out, f"checkpoint_{cfg.arch}.npz")


def cmd_train(cfg, argv) -> int:
    from .models import create_model, evaluate, save_checkpoint
    from .training import train

    data = _load_split_dataset(cfg)
    model = create_model(
        cfg.arch, data.num_features, data.num_classes, cfg.seed, cfg.dropout
    )
    model, trace = train(model, data, _train_cfg(cfg))
    save_checkpoint(model, _checkpoint_path(cfg))
    trace_path = os.path.join(cfg.out, f"trace_{cfg.arch}.csv")
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss,train_accuracy,val_accuracy\n")
        for row in trace:
            fh.write(
                f"{row['epoch']},{row['loss']:.9f},"
                f"{row['train_accuracy']:.9f},{row['val_accuracy']:.9f}\n"
            )
    metrics = {
        "dataset": cfg.dataset_name,
        "arch": cfg.arch,
        "seed": cfg.seed,
        "split": cfg.split,
        "original_accuracy": evaluate(model, data, data.test_mask),
        "val_accuracy": trace[-1]["val_accuracy"],
        "final_loss": trace[-1]["loss"],
    }
    _write_json(metrics, os.path.join(cfg.out, f"metrics_{cfg.arch}.json"))
    print(
        f"trained {cfg.arch}: test accuracy "
        f"{metrics['original_accuracy']:.4f} -> {cfg.out}"
    )
    return 0


def cmd_attack(cfg, argv, train_in_process: bool) -> int:
    from .attack import run_sea
    from .errors import ConfigError
    from .models import load_checkpoint
    from .spectral import write_scores_csv

    data = _load_split_dataset(cfg)
    pretrained = None
    if not train_in_process:
        path = _checkpoint_path(cfg)
        if not os.path.isfile(path):
            raise ConfigError(
                f"no checkpoint at {path}; run `sea train` first or pass --train"
            )
        pretrained = load_checkpoint(path)
    details: dict = {}
    report = run_sea(
        data,
        cfg.arch,
        _train_cfg(cfg),
        k=cfg.k,
        s=cfg.s,
        fraction=cfg.fraction,
        mode=cfg.mode,
        multiplier=cfg.multiplier,
        embed_layer=cfg.embed_layer,
        metric=cfg.metric,
        pretrained=pretrained,
        details=details,
    )
    payload = report.to_json_dict()
    payload["dataset"] = cfg.dataset_name
    _write_json(payload, os.path.join(cfg.out, f"sea_{cfg.arch}_{cfg.mode}.json"))
    write_scores_csv(
        os.path.join(cfg.out, f"scores_{cfg.arch}_{cfg.mode}.csv"),
        details["scores"],
    )
    print(
        f"sea attack on {cfg.arch} ({cfg.mode}): accuracy "
        f"{report.original_accuracy:.4f} -> {report.attacked_accuracy:.4f} "
        f"({report.degradation_pp:+.2f} pp, {report.edge_count_attacked} edges)"
    )
    return 0


def cmd_baseline(cfg, argv) -> int:
    from .attack import run_random_baseline

    data = _load_split_dataset(cfg)
    reports, summary = run_random_baseline(
        data,
        cfg.arch,
        _train_cfg(cfg),
        fraction=cfg.fraction,
        trials=cfg.trials,
        mode=cfg.mode,
        multiplier=cfg.multiplier,
    )
    for report in reports:
        payload = report.to_json_dict()
        payload["dataset"] = cfg.dataset_name
        _write_json(
            payload,
            os.path.join(
                cfg.out,
                f"random_{cfg.arch}_{cfg.mode}_trial{report.trial_index}.json",
            ),
        )
    payload = summary.to_json_dict()
    payload["dataset"] = cfg.dataset_name
    _write_json(
        payload, os.path.join(cfg.out, f"random_{cfg.arch}_{cfg.mode}_mean.json")
    )
    print(
        f"random baseline on {cfg.arch} ({cfg.mode}, {cfg.trials} trials): "
        f"mean degradation {summary.degradation_pp:+.2f} pp"
    )
    return 0


def _report_from_json(payload: dict):
    from .attack import AttackReport

    return AttackReport(
        arch=payload["arch"],
        seed=payload["seed"],
        original_accuracy=payload["original_accuracy"],
        attacked_accuracy=payload["attacked_accuracy"],
        degradation_pp=payload["degradation_pp"],
        budget_fraction=payload["fraction"],
        mode=payload["mode"],
        edge_count_attacked=payload["edges_attacked"],
        multiplier=payload["multiplier"],
        dataset=payload.get("dataset", ""),
        trials=payload.get("trials"),
    )


def cmd_report(cfg, argv) -> int:
    from .attack import compare, write_comparison_csv, write_plot_csv
    from .errors import MissingRuns

    rows = []
    for arch in ("GCN", "GAT", "GraphSAGE"):
        sea_path = os.path.join(cfg.out, f"sea_{arch}_{cfg.mode}.json")
        mean_path = os.path.join(cfg.out, f"random_{arch}_{cfg.mode}_mean.json")
        if not (os.path.isfile(sea_path) and os.path.isfile(mean_path)):
            print(f"warning: no complete {arch} run in {cfg.out}", file=sys.stderr)
            continue
        with open(sea_path, "r", encoding="utf-8") as fh:
            sea_report = _report_from_json(json.load(fh))
        with open(mean_path, "r", encoding="utf-8") as fh:
            mean_report = _report_from_json(json.load(fh))
        rows.append(compare(sea_report, mean_report))
    if not rows:
        raise MissingRuns(f"no complete sea+baseline run pairs in {cfg.out}")
    write_comparison_csv(rows, os.path.join(cfg.out, f"comparison_{cfg.mode}.csv"))
    write_plot_csv(rows, os.path.join(cfg.out, f"plot_{cfg.mode}.csv"))
    for row in rows:
        print(
            f"{row.arch}: original {row.original_pct:.2f}%, "
            f"sea {row.sea_drop_pp:+.2f} pp, random {row.random_drop_pp:+.2f} pp"
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    _apply_thread_env()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = _build_parser().parse_args(argv)

    from .config import load_config
    from .errors import ConfigError, ConfigMismatch, SeaError

    try:
        cfg = load_config(args.config, _overrides(args))
        cfg.validate(require_data=args.command != "report")
        os.makedirs(cfg.out, exist_ok=True)
        _log_line(cfg.out, argv)
        if args.command == "train":
            return cmd_train(cfg, argv)
        if args.command == "attack":
            return cmd_attack(cfg, argv, args.train)
        if args.command == "baseline":
            return cmd_baseline(cfg, argv)
        return cmd_report(cfg, argv)
    except (ConfigError, ConfigMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SeaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
