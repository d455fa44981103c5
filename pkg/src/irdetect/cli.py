"""Command-line entry point.

Subcommands: gen-data, train, infer, eval. Settings resolve in order:
profile preset, then --config file keys, then explicit flags. Exit codes:
0 success, 1 usage or configuration error, 2 runtime failure.
"""

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import detection, evaluation
from .config import PROFILES, RunConfig, apply_profile, format_config, parse_config
from .data import (derive_seed, generate_ir_mnist, load_dataset, load_mnist_idx,
                   split_validation, synthetic_digit_bank, write_ir_mnist)
from .data.imageio import save_gray, save_mask
from .errors import ConfigurationError, DataLoadError, TrainingDivergedError
from .models import (ArchConfig, detector_spec_from_channels, load_checkpoint,
                     region_map, score_grid)
from .models.inpainter import inpaint
from .training import TrainConfig, fit


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value settings file")
    common.add_argument("--seed", type=int, help="run seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--profile", choices=PROFILES, help="preset bundle")

    parser = _Parser(prog="irdetect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", parents=[common],
                       help="generate the digit-tile benchmark")
    g.add_argument("--train", dest="n_train", type=int)
    g.add_argument("--test", dest="n_test", type=int)
    g.add_argument("--grid", dest="grid_side", type=int)
    g.add_argument("--exclude", dest="excluded_digit", type=int)
    g.add_argument("--irregular-rate", dest="irregular_rate_test", type=float)
    g.add_argument("--normal-rate", dest="normal_rate_test", type=float)
    g.add_argument("--mnist-idx", dest="mnist_idx", help="directory with IDX files")

    t = sub.add_parser("train", parents=[common], help="train the pair")
    t.add_argument("--data", required=True)
    t.add_argument("--layout", choices=("ir_mnist", "frame_directory"))
    t.add_argument("--steps", dest="max_steps", type=int)
    t.add_argument("--batch-size", dest="batch_size", type=int)
    t.add_argument("--learning-rate", dest="learning_rate", type=float)
    t.add_argument("--gamma", type=float)
    t.add_argument("--loss-form", dest="loss_form", choices=("literal", "per_cell_bce"))

    i = sub.add_parser("infer", parents=[common], help="write masks and scores")
    i.add_argument("--data", required=True)
    i.add_argument("--checkpoints", required=True, help="directory with *_best.ckpt")
    i.add_argument("--layout", choices=("ir_mnist", "frame_directory"))
    i.add_argument("--split", choices=("train", "test"))
    i.add_argument("--alpha", type=float)
    i.add_argument("--zeta", type=float)

    e = sub.add_parser("eval", parents=[common], help="ROC metrics at a protocol level")
    e.add_argument("--data", required=True)
    e.add_argument("--checkpoints", required=True, help="directory with *_best.ckpt")
    e.add_argument("--layout", choices=("ir_mnist", "frame_directory"))
    e.add_argument("--split", choices=("train", "test"))
    e.add_argument("--level", choices=evaluation.LEVELS)
    return parser


# argparse dest -> RunConfig field, applied when the flag was given
_FLAG_FIELDS = ("seed", "n_train", "n_test", "grid_side", "excluded_digit",
                "irregular_rate_test", "normal_rate_test", "mnist_idx", "layout",
                "max_steps", "batch_size", "learning_rate", "gamma", "loss_form",
                "split", "alpha", "zeta", "level")


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "profile", None):
        cfg = apply_profile(cfg, args.profile)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigurationError(f"config file {path} does not exist")
        cfg = parse_config(path.read_text(), base=cfg, where=str(path))
    overrides = {}
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return replace(cfg, **overrides)


def _need_out(args):
    if not args.out:
        raise ConfigurationError("--out is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(out: Path, cfg: RunConfig):
    (out / "config.txt").write_text(format_config(cfg))


def cmd_gen_data(args, cfg: RunConfig):
    out = _need_out(args)
    if cfg.mnist_idx:
        bank = load_mnist_idx(cfg.mnist_idx)
    else:
        bank = synthetic_digit_bank(cfg.digits_per_class, derive_seed(cfg.seed, "digits"))
    train, test = generate_ir_mnist(
        bank, cfg.n_train, cfg.n_test, grid_side=cfg.grid_side,
        excluded_digit=cfg.excluded_digit, irregular_rate_test=cfg.irregular_rate_test,
        seed=derive_seed(cfg.seed, "compose"), normal_rate_test=cfg.normal_rate_test)
    write_ir_mnist(train, test, out)
    _echo_config(out, cfg)
    n_irregular = int(test.frame_labels.sum())
    print(f"wrote {len(train)} train and {len(test)} test images "
          f"({n_irregular} irregular) to {out}")
    return 0


def _arch_for(cfg: RunConfig, input_size) -> ArchConfig:
    spec = detector_spec_from_channels(cfg.detector_channels)
    arch = ArchConfig(tuple(input_size), tuple(cfg.inpainter_widths), spec)
    region_map(spec, input_size)  # fail fast when sizes do not divide
    return arch


def cmd_train(args, cfg: RunConfig):
    out = _need_out(args)
    dataset = load_dataset(args.data, cfg.layout, split="train")
    train, validation = split_validation(dataset, cfg.val_fraction,
                                         derive_seed(cfg.seed, "val-split"))
    arch = _arch_for(cfg, dataset.input_size)
    tc = TrainConfig(learning_rate=cfg.learning_rate, momentum=cfg.momentum,
                     batch_size=cfg.batch_size, gamma=cfg.gamma, sigma=cfg.sigma,
                     max_steps=cfg.max_steps, eval_interval=cfg.eval_interval,
                     seed=cfg.seed, loss_form=cfg.loss_form,
                     recon_weight=cfg.recon_weight, device=cfg.device)
    result = fit(train, validation, tc, arch, out_dir=out, log=print)
    _echo_config(out, cfg)
    if result.history:
        print(f"finished {cfg.max_steps} steps; best detector at step "
              f"{result.best_detector_step} (gap={result.best_gap:.6f}), best inpainter "
              f"at step {result.best_inpainter_step} (recon={result.best_recon:.6f})")
    else:
        print(f"finished {cfg.max_steps} steps before the first evaluation; "
              f"checkpoints hold the initial parameters")
    return 0


def _load_pair(ckpt_dir):
    ckpt_dir = Path(ckpt_dir)
    inpainter_ckpt = load_checkpoint(ckpt_dir / "inpainter_best.ckpt")
    detector_ckpt = load_checkpoint(ckpt_dir / "detector_best.ckpt")
    if inpainter_ckpt.inpainter is None:
        raise DataLoadError(f"{ckpt_dir / 'inpainter_best.ckpt'} holds no inpainter")
    if detector_ckpt.detector is None:
        raise DataLoadError(f"{ckpt_dir / 'detector_best.ckpt'} holds no detector")
    return inpainter_ckpt.inpainter, detector_ckpt.detector, inpainter_ckpt.arch


def cmd_infer(args, cfg: RunConfig):
    out = _need_out(args)
    inpainter, detector, arch = _load_pair(args.checkpoints)
    dataset = load_dataset(args.data, cfg.layout, split=cfg.split)
    if tuple(dataset.input_size) != tuple(arch.input_size):
        raise ConfigurationError(
            f"dataset frames are {dataset.input_size}, checkpoint expects "
            f"{tuple(arch.input_size)}")
    thresholds = detection.Thresholds(cfg.alpha, cfg.zeta)
    grid = region_map(detector.layer_spec, dataset.input_size)
    with open(out / "scores.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["frame_index", "frame_score"])
        for i in range(len(dataset)):
            x = dataset.input(i)
            resid = detection.residual_map(x, inpaint(inpainter, x))
            scores = score_grid(detector, x)
            mask = detection.fuse_maps(resid, scores, grid, thresholds)
            save_mask(out / f"mask_{i}.png", mask.pixels)
            save_gray(out / f"residual_{i}.png", resid)
            save_gray(out / f"scores_{i}.png",
                      np.kron(scores, np.ones((grid.block_h, grid.block_w))))
            writer.writerow([i, f"{detection.frame_score_maps(resid, scores, grid):.6f}"])
    _echo_config(out, cfg)
    print(f"wrote masks and scores for {len(dataset)} frames to {out}")
    return 0


def cmd_eval(args, cfg: RunConfig):
    out = _need_out(args)
    inpainter, detector, arch = _load_pair(args.checkpoints)
    dataset = load_dataset(args.data, cfg.layout, split=cfg.split)
    if tuple(dataset.input_size) != tuple(arch.input_size):
        raise ConfigurationError(
            f"dataset frames are {dataset.input_size}, checkpoint expects "
            f"{tuple(arch.input_size)}")
    sweep = evaluation.default_sweep(cfg.alpha_max, cfg.sweep_path_points,
                                     cfg.sweep_grid_points)
    curve = evaluation.roc(dataset, inpainter, detector, level=cfg.level, sweep=sweep)
    evaluation.write_metrics(out / "metrics.txt", curve)
    evaluation.write_roc_csv(out / "roc.csv", curve)
    evaluation.plot_roc(out / "roc.png", curve)
    _echo_config(out, cfg)
    print(f"level={curve.level} eer={curve.eer:.6f} auc={curve.auc:.6f} "
          f"sweep_points={curve.n_sweep}")
    return 0


_COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train,
             "infer": cmd_infer, "eval": cmd_eval}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return _COMMANDS[args.command](args, cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (DataLoadError, TrainingDivergedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
