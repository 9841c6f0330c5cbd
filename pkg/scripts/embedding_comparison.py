"""Euclidean vs WEMD Laplacian eigenmaps of the synthetic rotor family
across sample sizes, on clean and noisy data (2-d embeddings colored by
the ground-truth angle, circular score per run)."""

import argparse
import json
from pathlib import Path

from normlap.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/embeddings")
    ap.add_argument("--sizes", default="25,50,100,200,400")
    ap.add_argument("--seed", type=int, default=2020)
    args = ap.parse_args()

    scores = {}
    for n in (int(s) for s in args.sizes.split(",")):
        for tag, noise in (("clean", "0.0"), ("noisy", "0.1")):
            data = f"{args.out}/data_{tag}_n{n}"
            main(["gen-data", "--out", data, "--n", str(n), "--noise-std", noise,
                  "--seed", str(args.seed)])
            for norm in ("euclidean", "wemd"):
                out = f"{args.out}/{norm}_{tag}_n{n}"
                main(["embed", "--out", out, "--dataset", data, "--norm", norm])
                score = json.loads(Path(out, "score.json").read_text())["circular_score"]
                scores[(norm, tag, n)] = score
                print(f"{norm:10s} {tag:6s} n={n:4d}  circular score {score:.4f}")
    with open(f"{args.out}/scores.json", "w") as fh:
        json.dump({f"{k[0]}_{k[1]}_n{k[2]}": v for k, v in scores.items()}, fh, indent=2)
