"""Signed truncated correlation of the endpoints of path:n over a range of rho.

The rigorous estimate only controls |U|; this prints the sign to show that the
endpoint correlation on a path is negative (monomers repel through the chain).
"""
import argparse
import math
from fractions import Fraction

from mdlab.cluster import rigorous_bound
from mdlab.lattice import make_region
from mdlab.matchings import correlation


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--rho", default="1,2,4,8,16")
    args = ap.parse_args()

    r = make_region(f"path:{args.n}")
    A, B = [(0,)], [(args.n - 1,)]
    print(f"{'rho':>6} {'U (exact)':>22} {'float':>14} {'e^(-2d+1)':>12}")
    for rho in (Fraction(x) for x in args.rho.split(",")):
        u = correlation(r, A, B, rho).value
        bound = math.exp(-2 * (args.n - 1) + 1)
        print(f"{str(rho):>6} {str(u):>22} {float(u):>14.6e} {bound:>12.4e}")
    print("\nfinal bound at rho=8:", rigorous_bound(1, 1, args.n - 1, 8).final)


if __name__ == "__main__":
    main()
