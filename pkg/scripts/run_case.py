"""Train (or load) one engagement case and write its artifacts.

    python scripts/run_case.py configs/desk_case1.yaml --seed 3
"""

import argparse
import sys

from hccgl.experiments import CaseConfig, emit_artifacts, run_case


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", help="YAML file with CaseConfig keys")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out-dir")
    args = ap.parse_args()
    cfg = CaseConfig.from_yaml(args.config).merged(seed=args.seed, out_dir=args.out_dir)
    outcome = run_case(cfg)
    emit_artifacts(outcome, cfg.out_dir)
    print(outcome.table.format())
    return 0


if __name__ == "__main__":
    sys.exit(main())
