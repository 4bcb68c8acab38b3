"""Compare the plain and neighbour-rescaled gradient estimators on the
eggholder testbed and write per-trial results.

    python scripts/bench_gradient.py --trials 200 --out-dir runs/bench
"""

import argparse

from hccgl.experiments import run_bench


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--population", type=int, default=140)
    ap.add_argument("--sigma", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="runs/bench")
    args = ap.parse_args()
    _, s = run_bench(args.trials, args.population, args.sigma, args.seed, args.out_dir)
    print(f"rescaled wins {s.win_fraction:.1%} of {s.trials} trials; "
          f"median rel. error {s.median_error_rescaled:.4f} (rescaled) vs {s.median_error_plain:.4f} (plain)")


if __name__ == "__main__":
    main()
