"""Run case 1 over several seeds on the desk preset and report the worst missile per seed.

    python scripts/seed_sweep.py --seeds 0 1 2 3 4 --out-dir runs/sweep
"""

import argparse
import json
from pathlib import Path

import numpy as np

from hccgl.experiments import METRICS, CaseConfig, emit_artifacts, run_case


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--case", default="case1", choices=("case1", "case2"))
    ap.add_argument("--generations", type=int)
    ap.add_argument("--out-dir", default="runs/sweep")
    args = ap.parse_args()

    rows = []
    for seed in args.seeds:
        cfg = CaseConfig(case=args.case, seed=seed, out_dir=str(Path(args.out_dir) / f"seed{seed}"),
                         train={"generations": args.generations} if args.generations else {})
        outcome = run_case(cfg)
        emit_artifacts(outcome, cfg.out_dir)
        worst = np.abs(outcome.table.values).max(axis=0)
        rows.append({"seed": seed, **{k: float(v) for k, v in zip(METRICS, worst)}})
        print(json.dumps(rows[-1]))
    for key in rows[0]:
        if key != "seed":
            print(f"{key}: median over seeds {np.median([r[key] for r in rows]):.4g}")


if __name__ == "__main__":
    main()
