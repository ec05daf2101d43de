"""Command-line entry points: synth | train | ablate | eval | oracle-check |
report.

Exit codes: 0 success, 1 validation or usage error, 2 numerical abort.
Output root defaults to $NOISYLAB_OUT_ROOT or ./runs.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .backend import BACKEND
from .config import VARIANTS, load_config, parse_set_args
from .errors import NumericalError

NOISE_ALIASES = {
    "sym": "symmetric",
    "symmetric": "symmetric",
    "asym": "asymmetric",
    "asymmetric": "asymmetric",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def out_root() -> str:
    return os.environ.get("NOISYLAB_OUT_ROOT", "runs")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="YAML config file")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )


def _resolve_config(args, extra: dict | None = None):
    overrides = parse_set_args(args.overrides)
    overrides.update({k: v for k, v in (extra or {}).items() if v is not None})
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="noisylab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"noisylab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_synth = sub.add_parser("synth", help="generate and corrupt a dataset")
    _add_config_args(p_synth)
    p_synth.add_argument("--out", required=True, help="output stem (writes stem.train.npz / stem.test.npz)")
    p_synth.add_argument("--classes", type=int, default=None, help="total classes incl. OOD")
    p_synth.add_argument("--ood-fraction", type=float, default=None)
    p_synth.add_argument("--noise", choices=sorted(NOISE_ALIASES), default=None)
    p_synth.add_argument("--rate", type=float, default=None, help="closed noise rate")
    p_synth.add_argument("--seed", type=int, default=None)

    p_train = sub.add_parser("train", help="run one training configuration")
    _add_config_args(p_train)
    p_train.add_argument("--variant", choices=VARIANTS, default=None)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--out", default=None, help="run output directory")

    p_abl = sub.add_parser("ablate", help="run the variant grid over shared seeds")
    _add_config_args(p_abl)
    p_abl.add_argument(
        "--variants",
        default="full,standard,no-rss,no-mgm,no-both,no-ssl,no-mv,no-mp",
        help="comma-separated variant list",
    )
    p_abl.add_argument("--seeds", default="0,1,2", help="comma-separated seed list")
    p_abl.add_argument("--out", default=None, help="output root for the grid")

    p_eval = sub.add_parser("eval", help="recompute metrics from a finished run")
    p_eval.add_argument("--run", required=True, help="run directory with checkpoint + manifest")
    p_eval.add_argument("--out", default=None, help="where to write eval.json (default: inside the run dir)")

    p_oracle = sub.add_parser("oracle-check", help="diff the partition pipeline against the brute-force oracle")
    p_oracle.add_argument("--n", type=int, default=200, help="samples per seed")
    p_oracle.add_argument("--seeds", type=int, default=5, help="number of seeds")
    p_oracle.add_argument("--classes", type=int, default=8)

    p_rep = sub.add_parser("report", help="summarize completed runs into a table")
    p_rep.add_argument("runs", nargs="+", help="run directories")
    p_rep.add_argument("--out", default=None, help="output stem (default: report in cwd)")

    return parser


def cmd_synth(args) -> int:
    from .data import save_dataset
    from .presets import make_dataset

    extra = {
        "total_classes": args.classes,
        "open_fraction": args.ood_fraction,
        "noise_kind": NOISE_ALIASES[args.noise] if args.noise else None,
        "closed_rate": args.rate,
        "seed": args.seed,
    }
    cfg = _resolve_config(args, extra)
    train, test = make_dataset(cfg)
    save_dataset(f"{args.out}.train.npz", train)
    save_dataset(f"{args.out}.test.npz", test)
    counts = train.status_counts()
    noisy = counts["closed"] + counts["open"]
    print(
        f"wrote {args.out}.train.npz ({len(train)} samples, "
        f"{train.num_classes} known classes) and {args.out}.test.npz "
        f"({len(test)} samples)"
    )
    print(
        f"status: clean={counts['clean']} closed={counts['closed']} "
        f"open={counts['open']} (empirical noise rate {noisy / len(train):.4f})"
    )
    return 0


def _load_or_make(cfg):
    from .data import load_dataset
    from .presets import make_dataset

    if cfg.dataset_stem:
        return (
            load_dataset(f"{cfg.dataset_stem}.train.npz"),
            load_dataset(f"{cfg.dataset_stem}.test.npz"),
        )
    return make_dataset(cfg)


def cmd_train(args) -> int:
    from .trainer import execute_run

    cfg = _resolve_config(args, {"variant": args.variant, "seed": args.seed})
    train, test = _load_or_make(cfg)
    out_dir = args.out or os.path.join(out_root(), f"{cfg.variant}-s{cfg.seed}")
    result = execute_run(cfg, train, test, out_dir, args.config)
    print(
        f"[{cfg.variant} seed={cfg.seed}] last-10 mean test acc "
        f"{result.score:.4f} ({result.wall_clock:.1f}s) -> {out_dir}"
    )
    return 0


def cmd_ablate(args) -> int:
    from .report import emit_report
    from .trainer import execute_run

    variants = [v.strip().lower() for v in args.variants.split(",") if v.strip()]
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    for v in variants:
        if v not in VARIANTS:
            raise ValueError(f"unknown variant {v!r} (choose from {VARIANTS})")
    if not variants or not seeds:
        raise ValueError("need at least one variant and one seed")
    root = args.out or os.path.join(out_root(), "ablation")
    run_dirs = []
    for variant in variants:
        for seed in seeds:
            cfg = _resolve_config(args, {"variant": variant, "seed": seed})
            train, test = _load_or_make(cfg)
            out_dir = os.path.join(root, f"{variant}-s{seed}")
            result = execute_run(cfg, train, test, out_dir, args.config)
            run_dirs.append(out_dir)
            print(
                f"[{variant} seed={seed}] last-10 mean test acc {result.score:.4f}"
            )
    rows = emit_report(run_dirs, os.path.join(root, "report"))
    print(f"wrote {os.path.join(root, 'report')}.csv / .md ({len(rows)} rows)")
    return 0


def cmd_eval(args) -> int:
    import json

    from .augment import Augmenter, AugmentPolicy, predict_two_views
    from .config import RunConfig
    from .ioutils import write_json
    from .margins import MarginConfig
    from .model import accuracy, load_checkpoint
    from .selection import SelectionThresholds
    from .trainer import partition_batch, selection_quality

    manifest_path = os.path.join(args.run, "manifest.json")
    ckpt_path = os.path.join(args.run, "checkpoint.npz")
    for path in (manifest_path, ckpt_path):
        if not os.path.isfile(path):
            raise ValueError(f"missing run artifact: {path}")
    with open(manifest_path) as fh:
        cfg = RunConfig(**json.load(fh)["config"])
    params, _, _ = load_checkpoint(ckpt_path)
    train, test = _load_or_make(cfg)

    policy = AugmentPolicy(
        weak_sigma=cfg.weak_sigma, strong_sigma=cfg.strong_sigma,
        dropout_fraction=cfg.dropout_fraction, seed=cfg.seed,
    )
    augmenter = Augmenter(policy, len(train), train.dim)
    # fresh view draw one epoch past training, purely for partition readout
    pair = predict_two_views(
        params, augmenter, train.features, np.arange(len(train)), cfg.t_max
    )
    part = partition_batch(
        pair, train.labels,
        SelectionThresholds(cfg.tau_s, cfg.tau_h),
        MarginConfig(cfg.tau_p, cfg.margin_scale, cfg.margin_reference),
        cfg.variant, cfg.stat_view, cfg.t_max,
    )
    quality = selection_quality(part, train.status)
    payload = {
        "test_acc": accuracy(params, test.features, test.labels),
        "partition_counts": {
            "clean": len(part.clean),
            "id_high": len(part.id_high),
            "id_rest": len(part.id_rest),
            "ood": len(part.ood),
        },
        "selection_quality": quality,
    }
    out_path = args.out or os.path.join(args.run, "eval.json")
    write_json(out_path, payload)
    print(f"test acc {payload['test_acc']:.4f}; wrote {out_path}")
    return 0


def cmd_oracle_check(args) -> int:
    from . import oracle
    from .augment import PredictionPair
    from .backend import kernels as K
    from .margins import MarginConfig
    from .selection import SelectionThresholds
    from .trainer import partition_batch

    if args.n < 1 or args.seeds < 1 or args.classes < 2:
        raise ValueError("need --n >= 1, --seeds >= 1, --classes >= 2")
    names = {0: "clean", 1: "id-high", 2: "id-rest", 3: "ood"}
    mismatches = 0
    total = 0
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        scale = rng.uniform(0.5, 6.0)
        zw = rng.normal(scale=scale, size=(args.n, args.classes))
        zs = zw + rng.normal(scale=rng.uniform(0.05, 2.0), size=zw.shape)
        pw, ps = K.softmax(zw), K.softmax(zs)
        labels = rng.integers(0, args.classes, size=args.n)
        pair = PredictionPair(zw, zs, pw, ps)
        part = partition_batch(
            pair, labels, SelectionThresholds(), MarginConfig(), "full"
        )
        got = np.full(args.n, -1)
        for code, attr in ((0, "clean"), (1, "id_high"), (2, "id_rest"), (3, "ood")):
            got[getattr(part, attr)] = code
        expected = oracle.assign_sets(pw, ps, labels)
        for i in range(args.n):
            total += 1
            if names[int(got[i])] != expected[i]:
                mismatches += 1
    print(f"{mismatches} mismatches over {total} samples ({args.seeds} seeds)")
    return 0 if mismatches == 0 else 1


def cmd_report(args) -> int:
    from .report import emit_report

    stem = args.out or "report"
    rows = emit_report(args.runs, stem)
    print(f"wrote {stem}.csv / {stem}.md ({len(rows)} rows)")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "ablate": cmd_ablate,
    "eval": cmd_eval,
    "oracle-check": cmd_oracle_check,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return code
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
