"""Command-line entry points: simulate, sweep, pretrain-cnn, grad-check, and
emit-plots. Exit codes: 0 success, 2 configuration error, 3 runtime failure."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import ConfigError
from .config import load_config
from .engine import build_learners, generate_scene_dataset, run_experiment, run_sweep
from .nn import GruRegressor, LstmClassifier, MlpNet, SceneCnn, cross_entropy, grad_check, mse
from .predictors import LosClassifier


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None,
                        help="YAML config; omit for all defaults")


def _load(args) -> tuple:
    cfg, defaulted = load_config(args.config)
    if defaulted:
        print(f"defaults applied for {len(defaulted)} key(s):")
        for key in defaulted:
            print(f"  {key}")
    return cfg, defaulted


def _cmd_simulate(args) -> int:
    cfg, _ = _load(args)
    run = cfg.run
    if args.seed is not None:
        run = replace(run, seed=args.seed)
    if args.mode is not None:
        run = replace(run, ris_mode=args.mode)
    if args.predictors is not None:
        run = replace(run, predictor_mode=args.predictors)
    if args.viewpoint is not None:
        run = replace(run, viewpoint_mode=args.viewpoint)
    out_dir = args.out or run.out_dir or "runs/simulate"
    cfg = replace(cfg, run=replace(run, out_dir=str(out_dir)))
    paths = run_experiment(cfg, out_dir)
    print(f"wrote {paths['metrics_csv']}")
    print(Path(paths["summary"]).read_text().strip())
    return 0


def _cmd_sweep(args) -> int:
    cfg, _ = _load(args)
    values = [int(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs at least one value")
    seeds = ([int(s) for s in args.seeds.split(",") if s.strip()]
             if args.seeds else None)
    out_dir = args.out or f"runs/sweep_{args.axis}"
    agg = run_sweep(cfg, args.axis, values, out_dir, seeds=seeds,
                    workers=args.workers)
    print(f"wrote {agg}")
    return 0


def _cmd_pretrain_cnn(args) -> int:
    cfg, _ = _load(args)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.run.seed, 1000]))
    images, labels = generate_scene_dataset(cfg, args.scenes, rng)
    image_hw = int(round(cfg.room.width / cfg.room.grid_m)) + 1
    classifier = LosClassifier(image_hw, cfg.cnn.filters, cfg.cnn.fc_units,
                               cfg.cnn.learning_rate, rng)
    losses = classifier.train(images, labels, cfg.cnn.pretrain_epochs,
                              cfg.cnn.minibatch, rng)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    classifier.save(args.out)
    acc = float(np.mean(classifier.classify(images) == labels.astype(bool)))
    print(f"trained on {len(labels)} samples; final loss {losses[-1]:.4f}; "
          f"train accuracy {acc:.3f}")
    print(f"wrote {args.out}")
    return 0


def _cmd_grad_check(args) -> int:
    rng = np.random.default_rng(7)
    reports = {}

    net = MlpNet([6, 16, 4], rng)
    x = rng.normal(size=(5, 6))
    t = rng.normal(size=(5, 4))

    def mlp_loss():
        net.tree.zero_grads()
        loss, dy = mse(net.forward(x), t)
        net.backward(dy)
        return loss

    reports["dense"] = grad_check(mlp_loss, net.tree)

    cnn = SceneCnn(7, 3, 4, 8, 2, rng)
    imgs = rng.uniform(size=(3, 7, 7, 3))
    labels = np.array([0, 1, 1])

    def cnn_loss():
        cnn.tree.zero_grads()
        loss, dp = cross_entropy(cnn.forward(imgs), labels)
        cnn.backward(dp)
        return loss

    reports["conv+pool+dense"] = grad_check(cnn_loss, cnn.tree,
                                            max_entries_per_param=60, rng=rng)

    gru = GruRegressor(2, 6, rng)
    xs = rng.normal(size=(4, 5, 2))
    tt = rng.normal(size=(4, 1))

    def gru_loss():
        gru.tree.zero_grads()
        loss, dy = mse(gru.forward(xs), tt)
        gru.backward(dy)
        return loss

    reports["gru"] = grad_check(gru_loss, gru.tree)

    lstm = LstmClassifier(2, 6, 4, rng)
    lab = np.array([0, 1, 2, 3])

    def lstm_loss():
        lstm.tree.zero_grads()
        loss, dp = cross_entropy(lstm.forward(xs), lab)
        lstm.backward(dp)
        return loss

    reports["lstm"] = grad_check(lstm_loss, lstm.tree)

    ok = True
    for name, report in reports.items():
        status = "PASS" if report.passed else "FAIL"
        print(f"{status} {name}: max relative error {report.max_rel_error:.3e} "
              f"over {report.n_checked} entries (tol {report.tol:.0e})")
        ok = ok and report.passed
    return 0 if ok else 3


def _cmd_emit_plots(args) -> int:
    from .plots import emit_plots
    written = emit_plots(args.in_dir, args.out)
    for path in written:
        print(f"wrote {path}")
    if not written:
        print("no metrics.csv or aggregate.csv found under the input directory")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thzvr",
        description="Indoor RIS-assisted THz VR network simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the configured episodes")
    _add_config_arg(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", choices=["cdrl", "exhaustive", "random"], default=None)
    p.add_argument("--predictors", choices=["genie", "learned"], default=None)
    p.add_argument("--viewpoint", choices=["centralized", "fedavg"], default=None)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="vary one axis and aggregate")
    _add_config_arg(p)
    p.add_argument("--axis", choices=["users", "ris-elements"], required=True)
    p.add_argument("--values", type=str, required=True,
                   help="comma-separated integers")
    p.add_argument("--seeds", type=str, default=None,
                   help="comma-separated seeds (default: run.seed)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("pretrain-cnn", help="train the blockage classifier")
    _add_config_arg(p)
    p.add_argument("--scenes", type=int, required=True)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=_cmd_pretrain_cnn)

    p = sub.add_parser("grad-check", help="finite-difference gradient checks")
    p.set_defaults(func=_cmd_grad_check)

    p = sub.add_parser("emit-plots", help="render charts from run outputs")
    p.add_argument("--in", dest="in_dir", type=str, required=True)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_emit_plots)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
