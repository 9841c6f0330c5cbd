"""Command-line frontend: reproduces the experiments at desk scale and
writes CSV + SVG artifacts plus machine-readable reports.

Subcommands: verify-circle, eigenfunctions, embed, gen-data,
distance-profile, bench.  Every command takes --out DIR, --seed N and
--config FILE (a JSON dict of parameter defaults; explicit flags win) and
echoes its resolved parameters to out/config.json.  Exit code is 0 iff all
requested outputs were written.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    RotorConfig,
    make_dataset,
    read_dataset,
    render_rotor_volume,
    sample_circle,
    write_dataset,
)
from .fd_eigen import circle_weighted_l1_operator, residuals, smallest_magnitude_eigs
from .laplacian import (
    DistanceMatrix,
    apply_pointcloud_laplacian,
    gaussian_affinity,
    graph_laplacian,
    pairwise_distances,
    scaling_schedule,
)
from .limit_op import circle_limit_operator
from .norms import euclidean, weighted_l1, wemd_composite
from .spectral import circular_score, embed, export_embedding_csv
from .svgplot import line_plot, scatter_plot
from .wavelets import (
    dataset_threshold,
    hard_threshold,
    pairwise_sparse_l1,
    wemd_coeffs,
)
from .dataset import center_volumes

DEFAULT_SEED = 2020
BENCH_SIZES = (25, 50, 100, 200, 400, 800)


def trig_poly(theta):
    return np.sin(theta) + np.cos(2 * theta) + np.cos(5 * theta)


def trig_poly_prime(theta):
    return np.cos(theta) - 2 * np.sin(2 * theta) - 5 * np.sin(5 * theta)


def trig_poly_second(theta):
    return -np.sin(theta) - 4 * np.cos(2 * theta) - 25 * np.cos(5 * theta)


def _write_csv(path, header, columns):
    columns = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _echo_config(outdir: Path, command: str, params: dict) -> Path:
    path = outdir / "config.json"
    with open(path, "w") as fh:
        json.dump({"command": command, "version": __version__, **params}, fh, indent=2, default=str)
    return path


def _resolve(args, defaults: dict) -> dict:
    """File config overrides defaults; explicit flags override the file."""
    params = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        params.update({k: v for k, v in file_cfg.items() if k in defaults})
    for key in defaults:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            params[key] = val
    if params.get("seed") is None:
        params["seed"] = DEFAULT_SEED
    return params


def _rotor_config(params: dict, noise_std: float | None = None, seed: int | None = None):
    base = RotorConfig().to_dict()
    base.update(params.get("rotor") or {})
    if noise_std is not None:
        base["noise_std"] = noise_std
    if seed is not None:
        base["seed"] = seed
    return RotorConfig.from_dict(base)


def _circular_axis_mask(grid: np.ndarray, band_deg: float) -> np.ndarray:
    """True where the angle is farther than band_deg from every multiple
    of pi/2."""
    rel = np.mod(grid, np.pi / 2)
    dist = np.minimum(rel, np.pi / 2 - rel)
    return dist >= np.deg2rad(band_deg)


def empirical_circle_curve(n, w, alpha, grid, seed):
    """Scaled empirical Laplacian of the trig test function on a theta grid,
    for n uniform circle samples under the weighted l1 norm."""
    points = sample_circle(n, seed)
    fvals = trig_poly(np.arctan2(points[:, 1], points[:, 0]))
    sched = scaling_schedule(n, d=1, alpha=alpha)
    norm = weighted_l1(w)
    scale = sched.rescale_factor(2 * np.pi)
    values = np.array(
        [
            scale
            * apply_pointcloud_laplacian(
                points,
                fvals,
                np.array([np.cos(t), np.sin(t)]),
                float(trig_poly(t)),
                norm,
                sched.sigma_n,
            )
            for t in grid
        ]
    )
    return values, sched


def cmd_verify_circle(args) -> list[Path]:
    params = _resolve(
        args,
        dict(n=40000, w1=1.0, w2=1.5, alpha=1.0, grid_points=200, band_deg=5.0, seed=None),
    )
    if params["n"] < 100:
        raise SystemExit("verify-circle needs n >= 100")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    w = (params["w1"], params["w2"])
    grid = np.linspace(0.0, 2 * np.pi, int(params["grid_points"]), endpoint=False)

    empirical, sched = empirical_circle_curve(
        int(params["n"]), w, params["alpha"], grid, int(params["seed"])
    )
    theoretical = np.array(
        [
            circle_limit_operator(t, w, float(trig_poly_prime(t)), float(trig_poly_second(t)))
            for t in grid
        ]
    )
    mask = _circular_axis_mask(grid, params["band_deg"])
    resid = empirical[mask] - theoretical[mask]
    # RMS error relative to the peak magnitude of the limiting curve.  The
    # plain l2-ratio is also reported; at this sampling schedule it is
    # dominated by kernel smearing of the first-order-coefficient jumps
    # within ~sigma_n of the axes, which the fixed exclusion band does not
    # cover.
    rms_rel = float(np.sqrt((resid**2).mean()) / np.abs(theoretical[mask]).max())
    rel_l2 = float(np.linalg.norm(resid) / np.linalg.norm(theoretical[mask]))

    paths = [_echo_config(out, "verify-circle", params)]
    _write_csv(out / "empirical.csv", ["theta", "value"], [grid, empirical])
    _write_csv(out / "theoretical.csv", ["theta", "value"], [grid, theoretical])
    paths += [out / "empirical.csv", out / "theoretical.csv"]
    line_plot(
        out / "overlay.svg",
        [(grid, empirical, "empirical"), (grid, theoretical, "theoretical")],
        title=f"Scaled point-cloud Laplacian vs limit, n={params['n']}, w=({w[0]},{w[1]})",
        xlabel="theta",
        ylabel="operator value",
    )
    paths.append(out / "overlay.svg")
    report = {
        "n": int(params["n"]),
        "w1": w[0],
        "w2": w[1],
        "alpha": params["alpha"],
        "seed": int(params["seed"]),
        "sigma_n": sched.sigma_n,
        "c_n": sched.c_n,
        "rescale_factor": sched.rescale_factor(2 * np.pi),
        "grid_points": int(params["grid_points"]),
        "excluded_band_deg": params["band_deg"],
        "rms_relative_error": rms_rel,
        "relative_l2_error": rel_l2,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    paths.append(out / "report.json")
    return paths


def cmd_eigenfunctions(args) -> list[Path]:
    params = _resolve(args, dict(n_grid=100000, w1=1.0, w2=1.0, k=5, shift=1.0, seed=None))
    if params["n_grid"] < 1000:
        raise SystemExit("eigenfunctions needs n_grid >= 1000")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    op = circle_weighted_l1_operator(params["w1"], params["w2"], int(params["n_grid"]))
    vals, vecs = smallest_magnitude_eigs(op, int(params["k"]), shift=params["shift"])
    res = residuals(op, vals, vecs)

    paths = [_echo_config(out, "eigenfunctions", params)]
    header = ["theta"] + [f"phi_{j + 1}" for j in range(vecs.shape[1])]
    _write_csv(out / "eigenfunctions.csv", header, [op.grid] + [vecs[:, j] for j in range(vecs.shape[1])])
    paths.append(out / "eigenfunctions.csv")
    with open(out / "eigenvalues.json", "w") as fh:
        json.dump(
            {
                "eigenvalues": vals.tolist(),
                "shift": params["shift"],
                "residuals": res.tolist(),
                "operator_inf_norm": op.inf_norm(),
                "n_grid": int(params["n_grid"]),
                "w1": params["w1"],
                "w2": params["w2"],
            },
            fh,
            indent=2,
        )
    paths.append(out / "eigenvalues.json")
    stride = max(1, op.n // 2000)
    line_plot(
        out / "plot.svg",
        [
            (op.grid[::stride], vecs[::stride, j], f"phi_{j + 1} ({vals[j]:.5g})")
            for j in range(vecs.shape[1])
        ],
        title=f"Smallest-magnitude eigenfunctions, w=({params['w1']},{params['w2']})",
        xlabel="theta",
        ylabel="eigenfunction",
    )
    paths.append(out / "plot.svg")
    return paths


def wemd_embedding_distances(volumes, levels=None, wavelet="sym3", threshold_fraction=None):
    """Pairwise WEMD distance matrix; with a threshold fraction the volumes
    are mean-centered, coefficients sparsified, and the sparse path used."""
    if threshold_fraction is None:
        coeffs = [wemd_coeffs(v, wavelet=wavelet, levels=levels) for v in volumes]
        vectors = np.array([c.flatten() for c in coeffs])
        return pairwise_distances(vectors, wemd_composite()), None
    centered = center_volumes(volumes)
    coeffs = [wemd_coeffs(v, wavelet=wavelet, levels=levels) for v in centered]
    t = dataset_threshold(coeffs, threshold_fraction)
    sparse = [hard_threshold(c, t) for c in coeffs]
    dim = coeffs[0].flatten().size
    D = pairwise_sparse_l1(sparse, dim)
    return DistanceMatrix(values=D, norm_id="wemd_composite"), t


def cmd_embed(args) -> list[Path]:
    params = _resolve(
        args,
        dict(
            dataset=None,
            norm="wemd",
            sigma=None,
            sigma_factor=0.5,
            m=2,
            threshold_fraction=None,
            wavelet="sym3",
            levels=None,
            seed=None,
        ),
    )
    if not params["dataset"]:
        raise SystemExit("embed needs --dataset DIR (a gen-data output directory)")
    if params["norm"] not in ("euclidean", "wemd"):
        raise SystemExit("--norm must be euclidean or wemd")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    volumes, angles, manifest = read_dataset(params["dataset"])

    threshold_value = None
    if params["norm"] == "wemd":
        dm, threshold_value = wemd_embedding_distances(
            volumes,
            levels=params["levels"],
            wavelet=params["wavelet"],
            threshold_fraction=params["threshold_fraction"],
        )
    else:
        vectors = np.array([v.voxels.ravel() for v in volumes])
        dm = pairwise_distances(vectors, euclidean())

    offdiag = dm.values[np.triu_indices(dm.n, k=1)]
    sigma = params["sigma"] if params["sigma"] else params["sigma_factor"] * float(np.median(offdiag))
    W = gaussian_affinity(dm, sigma)
    L = graph_laplacian(W, sigma=sigma)
    embedding = embed(L, int(params["m"]))
    score = circular_score(embedding, np.deg2rad(angles)) if embedding.m == 2 else None

    paths = [_echo_config(out, "embed", params)]
    export_embedding_csv(out / "embedding.csv", embedding, true_angles=angles)
    paths.append(out / "embedding.csv")
    with open(out / "score.json", "w") as fh:
        json.dump(
            {
                "circular_score": score,
                "sigma": sigma,
                "norm": params["norm"],
                "n": dm.n,
                "m": int(params["m"]),
                "threshold_fraction": params["threshold_fraction"],
                "threshold_value": threshold_value,
                "disconnected": embedding.disconnected,
                "eigenvalues": embedding.eigenvalues.tolist(),
                "dataset_centered": manifest.get("centered", False),
            },
            fh,
            indent=2,
        )
    paths.append(out / "score.json")
    scatter_plot(
        out / "scatter.svg",
        embedding.coords[:, 0],
        embedding.coords[:, 1],
        color_phase=angles,
        title=f"{params['norm']} embedding, n={dm.n} (hue = true angle)",
        xlabel="phi_1",
        ylabel="phi_2",
    )
    paths.append(out / "scatter.svg")
    return paths


def cmd_gen_data(args) -> list[Path]:
    params = _resolve(
        args, dict(n=100, noise_std=None, center=False, rotor=None, seed=None)
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _rotor_config(params, noise_std=params["noise_std"], seed=int(params["seed"]))
    volumes, angles = make_dataset(int(params["n"]), config, center=bool(params["center"]))
    write_dataset(out, volumes, angles, config, centered=bool(params["center"]))
    params["rotor"] = config.to_dict()
    paths = [_echo_config(out, "gen-data", params)]
    paths += [out / "manifest.json"] + [out / ("vol_%05d.f32" % i) for i in range(len(volumes))]
    return paths


def distance_profile(config: RotorConfig, step_deg: float = 2.0, max_deg: float = 180.0):
    """WEMD and l2 distances between the volume at angle 0 and rotated
    copies, over offsets 0..max_deg.

    The reference volume draws its noise from a shifted seed so that the
    offset-zero pair differs by independent noise (the per-angle noise
    seeding would otherwise make it an exact duplicate).
    """
    import dataclasses

    from .wavelets import wemd_vector

    offsets = np.arange(0.0, max_deg + 0.5 * step_deg, step_deg)
    ref = render_rotor_volume(0.0, dataclasses.replace(config, seed=config.seed + 1))
    ref_vec = wemd_vector(ref)
    wemd = np.empty_like(offsets)
    l2 = np.empty_like(offsets)
    for i, delta in enumerate(offsets):
        vol = render_rotor_volume(float(delta), config)
        wemd[i] = np.abs(wemd_vector(vol) - ref_vec).sum()
        l2[i] = np.linalg.norm(vol.voxels - ref.voxels)
    return offsets, wemd, l2


def cmd_distance_profile(args) -> list[Path]:
    params = _resolve(args, dict(noise_std=0.0, step_deg=2.0, rotor=None, seed=None))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _rotor_config(params, noise_std=params["noise_std"], seed=int(params["seed"]))
    offsets, wemd, l2 = distance_profile(config, step_deg=params["step_deg"])
    scale = (wemd.max() / l2.max()) if l2.max() > 0 else 1.0
    paths = [_echo_config(out, "distance-profile", params)]
    _write_csv(
        out / "profile.csv",
        ["offset_deg", "wemd", "l2", "l2_scaled"],
        [offsets, wemd, l2, l2 * scale],
    )
    paths.append(out / "profile.csv")
    line_plot(
        out / "profile.svg",
        [(offsets, wemd, "WEMD"), (offsets, l2 * scale, "l2 (scaled)")],
        title=f"Distance vs rotation offset (noise_std={config.noise_std})",
        xlabel="offset (degrees)",
        ylabel="distance",
    )
    paths.append(out / "profile.svg")
    return paths


def run_bench(sizes, rotor_overrides=None, seed=DEFAULT_SEED, threshold_fraction=0.9):
    """Timings per sample size: DWT stage, dense pairwise WEMD, pairwise
    l2, and the sparse pairwise WEMD stage on clean and noisy data.

    The sparsification threshold is computed once on a size-25 dataset
    (mean-centered), separately for clean and noisy data, then applied to
    every size.
    """
    rows = []
    thresholds = {}
    params = {"rotor": rotor_overrides}
    for noise, tag in ((0.0, "clean"), (0.1, "noisy")):
        config = _rotor_config(params, noise_std=noise, seed=seed)
        vols25 = center_volumes(make_dataset(25, config)[0])
        coeffs25 = [wemd_coeffs(v) for v in vols25]
        thresholds[tag] = dataset_threshold(coeffs25, threshold_fraction)

    for n in sizes:
        row = {"n": n}
        clean_cfg = _rotor_config(params, noise_std=0.0, seed=seed)
        noisy_cfg = _rotor_config(params, noise_std=0.1, seed=seed)
        clean, _ = make_dataset(n, clean_cfg)
        noisy, _ = make_dataset(n, noisy_cfg)

        t0 = time.perf_counter()
        weighted_clean = [wemd_coeffs(v) for v in clean]
        row["dwt_seconds"] = time.perf_counter() - t0

        vectors = np.array([c.flatten() for c in weighted_clean])
        t0 = time.perf_counter()
        pairwise_distances(vectors, wemd_composite())
        row["wemd_dense_seconds"] = time.perf_counter() - t0

        flat = np.array([v.voxels.ravel() for v in clean])
        t0 = time.perf_counter()
        pairwise_distances(flat, euclidean())
        row["l2_seconds"] = time.perf_counter() - t0

        for tag, vols in (("clean", clean), ("noisy", noisy)):
            centered = center_volumes(vols)
            weighted = [wemd_coeffs(v) for v in centered]
            sparse = [hard_threshold(c, thresholds[tag]) for c in weighted]
            dim = weighted[0].flatten().size
            t0 = time.perf_counter()
            pairwise_sparse_l1(sparse, dim)
            row[f"wemd_sparse_{tag}_seconds"] = time.perf_counter() - t0
            row[f"nnz_fraction_{tag}"] = float(np.mean([s.nnz for s in sparse])) / dim
        rows.append(row)
    return rows, thresholds


def cmd_bench(args) -> list[Path]:
    params = _resolve(
        args, dict(sizes="25,50,100,200", threshold_fraction=0.9, rotor=None, seed=None)
    )
    sizes = [int(s) for s in str(params["sizes"]).split(",") if s]
    bad = [s for s in sizes if s not in BENCH_SIZES]
    if bad:
        raise SystemExit(f"sizes must be a subset of {BENCH_SIZES}, got {bad}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, thresholds = run_bench(
        sizes,
        rotor_overrides=params.get("rotor"),
        seed=int(params["seed"]),
        threshold_fraction=params["threshold_fraction"],
    )
    paths = [_echo_config(out, "bench", {**params, "thresholds": thresholds})]
    header = list(rows[0].keys())
    with open(out / "timings.csv", "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{row[k]:.17g}" for k in header) + "\n")
    paths.append(out / "timings.csv")
    return paths


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="normlap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, flags):
        p = sub.add_parser(name)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="JSON parameter file; flags override")
        for flag, kw in flags:
            p.add_argument(flag, **kw)
        p.set_defaults(func=fn)

    add(
        "verify-circle",
        cmd_verify_circle,
        [
            ("--n", dict(type=int, default=None)),
            ("--w1", dict(type=float, default=None)),
            ("--w2", dict(type=float, default=None)),
            ("--alpha", dict(type=float, default=None)),
            ("--grid-points", dict(type=int, default=None, dest="grid_points")),
            ("--band-deg", dict(type=float, default=None, dest="band_deg")),
        ],
    )
    add(
        "eigenfunctions",
        cmd_eigenfunctions,
        [
            ("--n-grid", dict(type=int, default=None, dest="n_grid")),
            ("--w1", dict(type=float, default=None)),
            ("--w2", dict(type=float, default=None)),
            ("--k", dict(type=int, default=None)),
            ("--shift", dict(type=float, default=None)),
        ],
    )
    add(
        "embed",
        cmd_embed,
        [
            ("--dataset", dict(default=None, help="gen-data output directory")),
            ("--norm", dict(default=None, choices=["euclidean", "wemd"])),
            ("--sigma", dict(type=float, default=None)),
            ("--sigma-factor", dict(type=float, default=None, dest="sigma_factor")),
            ("--m", dict(type=int, default=None)),
            ("--threshold-fraction", dict(type=float, default=None, dest="threshold_fraction")),
            ("--wavelet", dict(default=None, choices=["haar", "sym3"])),
            ("--levels", dict(type=int, default=None)),
        ],
    )
    add(
        "gen-data",
        cmd_gen_data,
        [
            ("--n", dict(type=int, default=None)),
            ("--noise-std", dict(type=float, default=None, dest="noise_std")),
            ("--center", dict(action="store_true", default=None)),
        ],
    )
    add(
        "distance-profile",
        cmd_distance_profile,
        [
            ("--noise-std", dict(type=float, default=None, dest="noise_std")),
            ("--step-deg", dict(type=float, default=None, dest="step_deg")),
        ],
    )
    add(
        "bench",
        cmd_bench,
        [
            ("--sizes", dict(default=None, help="comma list, subset of 25,50,100,200,400,800")),
            ("--threshold-fraction", dict(type=float, default=None, dest="threshold_fraction")),
        ],
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    written = args.func(args)
    missing = [str(p) for p in written if not Path(p).exists()]
    if missing:
        print(f"missing outputs: {missing}", file=sys.stderr)
        return 1
    for p in written:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
