"""Empirical vs limiting weighted-l1 Laplacian on the circle, at two
sample sizes (companion of the verify-circle command)."""

import argparse

from normlap.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/circle_verification")
    ap.add_argument("--seed", type=int, default=2020)
    args = ap.parse_args()
    for n in (4000, 40000):
        main(
            [
                "verify-circle",
                "--out",
                f"{args.out}/n_{n}",
                "--n",
                str(n),
                "--w1",
                "1.0",
                "--w2",
                "1.5",
                "--seed",
                str(args.seed),
            ]
        )
