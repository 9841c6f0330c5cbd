"""Smallest-magnitude eigenfunctions of the circle operator for a sweep of
weighted-l1 weights (w2 = 1, w1 in {1.001, 2, 4, 8})."""

import argparse

from normlap.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/eigenfunctions")
    ap.add_argument("--n-grid", type=int, default=100000)
    ap.add_argument("--k", type=int, default=5)
    args = ap.parse_args()
    for w1 in (1.001, 2.0, 4.0, 8.0):
        main(
            [
                "eigenfunctions",
                "--out",
                f"{args.out}/w1_{w1}",
                "--n-grid",
                str(args.n_grid),
                "--w1",
                str(w1),
                "--w2",
                "1",
                "--k",
                str(args.k),
            ]
        )
