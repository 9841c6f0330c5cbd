"""Runtime of dense vs sparsified pairwise WEMD (and pairwise l2) across
sample sizes, plus a thresholded-vs-dense embedding comparison."""

import argparse
import json
from pathlib import Path

from normlap.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/sparsity")
    ap.add_argument("--sizes", default="25,50,100,200,400,800")
    ap.add_argument("--seed", type=int, default=2020)
    args = ap.parse_args()

    main(["bench", "--out", f"{args.out}/bench", "--sizes", args.sizes,
          "--seed", str(args.seed)])

    data = f"{args.out}/data_n100"
    main(["gen-data", "--out", data, "--n", "100", "--noise-std", "0.0",
          "--seed", str(args.seed)])
    for tag, extra in (("dense", []), ("sparse", ["--threshold-fraction", "0.9"])):
        out = f"{args.out}/embed_{tag}"
        main(["embed", "--out", out, "--dataset", data, "--norm", "wemd"] + extra)
        score = json.loads(Path(out, "score.json").read_text())["circular_score"]
        print(f"wemd {tag:6s} embedding circular score: {score:.4f}")
