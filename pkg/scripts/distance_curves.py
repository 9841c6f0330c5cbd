"""WEMD vs l2 distance as a function of the rotor rotation angle, for the
clean and noisy default configurations."""

import argparse

from normlap.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/distance_profiles")
    args = ap.parse_args()
    main(["distance-profile", "--out", f"{args.out}/clean", "--noise-std", "0.0"])
    main(["distance-profile", "--out", f"{args.out}/noisy", "--noise-std", "0.1"])
