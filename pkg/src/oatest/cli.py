"""Command line entry point: ``oatest {run,sweep-tau,synth,pretrain}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config, synth_spec_from_dict
from .data import synthesize_dataset, write_interactions, write_qmatrix
from .errors import ConfigError, DataError, OatError
from .harness import prepare, run_experiment, run_tau_sweep

EXIT_CONFIG = 2
EXIT_DATA = 3


def _config(args, out_is_dir=True):
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if out_is_dir and getattr(args, "out", None) is not None:
        overrides["output_dir"] = args.out
    return replace(config, **overrides) if overrides else config


def cmd_run(args):
    report = run_experiment(_config(args))
    for agg in report.aggregates:
        auc = "n/a" if agg["mean_auc"] is None else f"{agg['mean_auc']:.4f}"
        print(f"{agg['selector']:>14}  L={agg['length']:<3} ACC={agg['mean_acc']:.4f}  AUC={auc}")


def cmd_sweep(args):
    config = _config(args)
    for tau, report in zip(config.tau_values, run_tau_sweep(config)):
        for agg in report.aggregates:
            print(f"tau={tau:<5} L={agg['length']:<3} ACC={agg['mean_acc']:.4f}")


def cmd_synth(args):
    try:
        with open(args.spec, encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such spec file: {args.spec}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.spec}: invalid JSON ({exc})") from None
    seed = payload.pop("seed", 13)
    if args.seed is not None:
        seed = args.seed
    dataset, truth = synthesize_dataset(synth_spec_from_dict(payload), seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_interactions(out / "interactions.csv", dataset)
    write_qmatrix(out / "qmatrix.csv", dataset.q_matrix)
    with open(out / "ground_truth.json", "w", encoding="utf-8") as fh:
        json.dump({"seed": seed, "theta": truth.theta.tolist(), "alpha": truth.alpha.tolist()}, fh)
    print(f"wrote {len(dataset.student_ids)} interactions to {out}")


def cmd_pretrain(args):
    config = _config(args, out_is_dir=False)
    ws = prepare(replace(config, model=None))
    ws.model.save(args.out)
    print(f"saved checkpoint to {args.out} (final loss {ws.model.history[-1]:.4f})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oatest", description="One-shot adaptive test assembly")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help=None):
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--workers", type=int, help="worker processes")
        if out_help:
            p.add_argument("--out", help=out_help)

    common(sub.add_parser("run", help="run one experiment"), "output directory")
    common(sub.add_parser("sweep-tau", help="sweep the diversity threshold"), "output directory")
    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p = sub.add_parser("pretrain", help="fit and save a MIRT checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    return parser


COMMANDS = {"run": cmd_run, "sweep-tau": cmd_sweep, "synth": cmd_synth, "pretrain": cmd_pretrain}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
