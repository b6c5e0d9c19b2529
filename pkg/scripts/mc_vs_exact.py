"""Compare Metropolis estimates of U with exact values on small regions."""
import argparse
from fractions import Fraction

from mdlab.lattice import make_region, parse_vertices
from mdlab.matchings import correlation
from mdlab.montecarlo import ChainParams, estimate_correlation

CASES = [
    ("path:3", "(0)", "(2)"),
    ("grid:2x2", "(0,0)", "(1,1)"),
    ("grid:3x3", "(0,0)", "(2,2)"),
    ("grid:2x5", "(0,0)", "(1,4)"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rho", type=float, default=1.0)
    ap.add_argument("--sweeps", type=int, default=50000)
    ap.add_argument("--chains", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    params = ChainParams(args.sweeps, burn_in=args.sweeps // 100, chains=args.chains, seed=args.seed)
    print(f"{'region':>10} {'exact':>12} {'mc':>12} {'stderr':>10} {'z':>6}")
    for desc, a, b in CASES:
        r = make_region(desc)
        A, B = parse_vertices(a), parse_vertices(b)
        exact = float(correlation(r, A, B, Fraction(args.rho)).value)
        est = estimate_correlation(r, A, B, args.rho, params, workers=args.workers)
        z = (est.value - exact) / est.abs_error if est.abs_error else float("nan")
        print(f"{desc:>10} {exact:>12.6f} {est.value:>12.6f} {est.abs_error:>10.2e} {z:>6.2f}")


if __name__ == "__main__":
    main()
