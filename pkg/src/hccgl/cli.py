"""Command-line entry point: ``python -m hccgl <subcommand> ...``.

Settings are resolved in three layers: the preset (``desk`` or ``full``), then
an optional YAML ``--config`` file, then explicit flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import nces
from .experiments import CASES, PRESETS, CaseConfig, emit_artifacts, run_bench, run_case
from .harness import write_history


def _add_run_flags(p: argparse.ArgumentParser, case_default: str | None) -> None:
    if case_default is None:
        p.add_argument("case", choices=CASES)
    p.add_argument("--config", help="YAML file with CaseConfig keys (see README)")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--seed", type=int)
    p.add_argument("--population", type=int, help="samples per generation (even)")
    p.add_argument("--generations", type=int)
    p.add_argument("--eta", type=float, help="guidance gain; 0 gives pure PN")
    p.add_argument("--workers", type=int, help="rollout threads")
    p.add_argument("--checkpoint", help="resume from this checkpoint if it exists")
    p.add_argument("--out-dir")
    p.add_argument("--skip-training", action="store_true", default=None)
    p.add_argument("--episodes", type=int, help="Monte-Carlo evaluation episodes")
    p.add_argument("--missiles", type=int, dest="n_missiles", help="use only the first N missiles (cases 1-2)")


def _resolve(args, case: str) -> CaseConfig:
    cfg = CaseConfig.from_yaml(args.config) if args.config else CaseConfig(case=case)
    return cfg.merged(
        case=case,
        preset=args.preset,
        seed=args.seed,
        eta=args.eta,
        checkpoint=args.checkpoint,
        out_dir=args.out_dir,
        skip_training=args.skip_training,
        episodes=args.episodes,
        n_missiles=args.n_missiles,
        train={"population": args.population, "generations": args.generations, "workers": args.workers},
    )


def _cmd_run(args, case: str) -> int:
    cfg = _resolve(args, case)
    outcome = run_case(cfg)
    paths = emit_artifacts(outcome, cfg.out_dir)
    print(outcome.table.format())
    print(f"artifacts written to {Path(cfg.out_dir).resolve()} ({', '.join(sorted(paths))})")
    return 0


def _cmd_train(args) -> int:
    cfg = _resolve(args, args.case)
    if cfg.skip_training:
        print("--skip-training makes 'train' a no-op", file=sys.stderr)
        return 2
    outcome = run_case(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_history(out / "history.csv", outcome.training.history, outcome.scenario.n)
    nces.save_checkpoint(out / "checkpoint.json", outcome.ecosystem)
    mf = outcome.training.mean_fitness()
    print(f"trained {len(mf)} generations; mean fitness {mf[0]:.1f} -> {mf[-1]:.1f}" if len(mf) else "no generations run")
    print(f"checkpoint: {(out / 'checkpoint.json').resolve()}")
    return 0


def _cmd_bench(args) -> int:
    _, summary = run_bench(args.trials, args.population, args.sigma, args.seed, args.out_dir)
    print(json.dumps({**summary.__dict__, "passed": summary.passed}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hccgl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a case and write history + checkpoint")
    _add_run_flags(p, None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("run-case", help="train (or load) and evaluate a case, writing all artifacts")
    _add_run_flags(p, None)
    p.set_defaults(func=lambda a: _cmd_run(a, a.case))

    p = sub.add_parser("monte-carlo", help="case 3: randomised launch points over many episodes")
    _add_run_flags(p, "case3-mc")
    p.set_defaults(func=lambda a: _cmd_run(a, "case3-mc"))

    p = sub.add_parser("bench-gradient", help="plain vs rescaled estimator on the eggholder testbed")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--population", type=int, default=140)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
