"""Synthetic data: uniform circle samples and a rotating-blob volume family.

The volume family mimics a molecular stepper motor: a payload of Gaussian
blobs rotates about the grid's central z-axis while a second payload stays
fixed, and rotation angles are drawn from a three-state mixture (uniform
background plus tight clusters at 0, 120 and 240 degrees).

The default rotor geometry is chosen so that the qualitative distance
contrast holds at desk scale: the far blob dominates the transport cost, so
the wavelet EMD grows monotonically with the rotation angle, while the two
blobs sharing the inner orbit re-overlap at a 120-degree offset, which
makes the plain l2 distance non-monotonic.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .wavelets import Volume, read_volume, write_volume

MIXTURE_WEIGHTS = (0.4, 0.2, 0.2, 0.2)
MIXTURE_CENTERS_DEG = (0.0, 120.0, 240.0)
MIXTURE_STD_DEG = 1.0


def _cyl(radius: float, angle_deg: float, z: float) -> tuple[float, float, float]:
    a = math.radians(angle_deg)
    return (radius * math.cos(a), radius * math.sin(a), z)


DEFAULT_DIMS = (32, 32, 32)
DEFAULT_ROTOR = (_cyl(3.0, 0.0, -4.0), _cyl(3.0, 120.0, -4.0), _cyl(10.5, 40.0, 4.0))
DEFAULT_STATIC = ((0.0, 0.0, 10.0), _cyl(6.0, 200.0, 8.0))


@dataclass(frozen=True, eq=False)
class RotorConfig:
    """Geometry and noise of the synthetic rotor family.

    Blob centers are in voxel units relative to the grid center; rotor
    blobs rotate about the central z-axis, static blobs do not.  The rotor
    must have no rotational self-symmetry (within one degree), otherwise
    angle recovery is ill-posed.
    """

    dims: tuple[int, int, int] = DEFAULT_DIMS
    blob_centers: tuple = DEFAULT_ROTOR
    blob_sigma: float = 1.5
    static_centers: tuple = DEFAULT_STATIC
    noise_std: float = 0.1
    seed: int = 2020

    def __post_init__(self):
        if min(self.dims) < 8:
            raise ValueError("dims must be at least 8 per axis")
        if len(self.blob_centers) == 0:
            raise ValueError("need at least one rotor blob")
        if self.blob_sigma <= 0:
            raise ValueError("blob_sigma must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(
            self, "blob_centers", tuple(tuple(float(c) for c in b) for b in self.blob_centers)
        )
        object.__setattr__(
            self, "static_centers", tuple(tuple(float(c) for c in b) for b in self.static_centers)
        )
        delta = _symmetry_angle(np.array(self.blob_centers))
        if delta is not None:
            raise ValueError(f"rotor payload has a rotational self-symmetry at {delta} degrees")

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "blob_centers": [list(b) for b in self.blob_centers],
            "blob_sigma": self.blob_sigma,
            "static_centers": [list(b) for b in self.static_centers],
            "noise_std": self.noise_std,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RotorConfig":
        return cls(
            dims=tuple(d["dims"]),
            blob_centers=tuple(tuple(b) for b in d["blob_centers"]),
            blob_sigma=float(d["blob_sigma"]),
            static_centers=tuple(tuple(b) for b in d["static_centers"]),
            noise_std=float(d["noise_std"]),
            seed=int(d["seed"]),
        )


def _symmetry_angle(centers: np.ndarray, tol: float = 0.25):
    """Smallest nontrivial rotation (1-degree grid) mapping the rotor blob
    set onto itself, or None if the payload is asymmetric.  A rotation only
    counts as a symmetry when the set matches although the blobs actually
    moved (near-identity wiggles of an asymmetric set are not symmetries)."""
    radii = np.hypot(centers[:, 0], centers[:, 1])
    if radii.max() < 1.0:
        return 0  # purely axial payload: every rotation fixes it
    for deg in range(1, 360):
        rot = _rotate_z(centers, float(deg))
        match = np.linalg.norm(rot[:, None, :] - centers[None, :, :], axis=2).min(axis=1).max()
        moved = np.linalg.norm(rot - centers, axis=1).max()
        if match < tol and moved > 4 * tol:
            return deg
    return None


def _rotate_z(centers: np.ndarray, angle_deg: float) -> np.ndarray:
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    out = centers.copy()
    out[:, 0] = c * centers[:, 0] - s * centers[:, 1]
    out[:, 1] = s * centers[:, 0] + c * centers[:, 1]
    return out


def sample_angles(n: int, seed: int) -> np.ndarray:
    """i.i.d. rotation angles in degrees from the mixture
    0.4 U[0,360) + 0.2 N(0,1) + 0.2 N(120,1) + 0.2 N(240,1), wrapped."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    comp = rng.choice(4, size=n, p=MIXTURE_WEIGHTS)
    u = rng.uniform(0.0, 360.0, size=n)
    z = rng.normal(0.0, MIXTURE_STD_DEG, size=n)
    angles = np.where(comp == 0, u, 0.0)
    for k, mu in enumerate(MIXTURE_CENTERS_DEG, start=1):
        angles = np.where(comp == k, (mu + z) % 360.0, angles)
    return angles


def _angle_noise_seed(config: RotorConfig, angle_deg: float) -> np.random.SeedSequence:
    bits = int(np.float64(angle_deg).view(np.uint64))
    return np.random.SeedSequence(entropy=(int(config.seed) & (2**64 - 1), bits))


def _add_blob(vox: np.ndarray, center, sigma: float, axes) -> None:
    gs = [np.exp(-((ax - c) ** 2) / (2 * sigma**2)) for ax, c in zip(axes, center)]
    vox += np.einsum("i,j,k->ijk", gs[0], gs[1], gs[2])


def render_rotor_volume(angle_deg: float, config: RotorConfig) -> Volume:
    """Sum of Gaussian blobs (rotor payload rotated about the central
    z-axis) plus optional i.i.d. Gaussian noise with standard deviation
    ``noise_std`` times the max clean voxel value, seeded per (angle, seed)."""
    dims = config.dims
    grid_center = np.array([(d - 1) / 2.0 for d in dims])
    axes = [np.arange(d, dtype=float) for d in dims]
    vox = np.zeros(dims)

    rotor = _rotate_z(np.array(config.blob_centers, dtype=float), angle_deg) + grid_center
    statics = np.array(config.static_centers, dtype=float).reshape(-1, 3) + grid_center
    margin = 3 * config.blob_sigma
    for c in np.vstack([rotor, statics]) if statics.size else rotor:
        if np.any(c < -margin) or np.any(c > np.array(dims) - 1 + margin):
            warnings.warn(f"blob at {c} falls outside the grid by more than 3 sigma")
        _add_blob(vox, c, config.blob_sigma, axes)

    if config.noise_std > 0:
        rng = np.random.default_rng(_angle_noise_seed(config, angle_deg))
        vox = vox + rng.standard_normal(dims) * (config.noise_std * vox.max())
    return Volume(voxels=vox)


def make_dataset(n: int, config: RotorConfig, center: bool = False):
    """Render n volumes at mixture-sampled angles.  With ``center`` the
    dataset mean volume is subtracted from every volume, which leaves all
    pairwise distances of differences unchanged but sparsifies wavelet
    coefficients."""
    if n < 2:
        raise ValueError("need n >= 2")
    angles = sample_angles(n, config.seed)
    volumes = [render_rotor_volume(a, config) for a in angles]
    if center:
        mean = np.mean([v.voxels for v in volumes], axis=0)
        volumes = [Volume(voxels=v.voxels - mean, voxel_size=v.voxel_size) for v in volumes]
    return volumes, angles


def center_volumes(volumes) -> list[Volume]:
    mean = np.mean([v.voxels for v in volumes], axis=0)
    return [Volume(voxels=v.voxels - mean, voxel_size=v.voxel_size) for v in volumes]


def sample_circle(n: int, seed: int) -> np.ndarray:
    """n i.i.d. uniform samples on the unit circle, as an n x 2 array."""
    if n < 1:
        raise ValueError("n must be >= 1")
    theta = np.random.default_rng(seed).uniform(0.0, 2 * np.pi, size=n)
    return np.column_stack([np.cos(theta), np.sin(theta)])


MANIFEST_NAME = "manifest.json"
VOLUME_PATTERN = "vol_%05d.f32"


def write_dataset(directory, volumes, angles, config: RotorConfig, centered: bool = False) -> None:
    """Directory layout: manifest.json plus one binary volume per sample."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": "normlap-dataset-v1",
        "n": len(volumes),
        "angles_deg": [float(a) for a in angles],
        "centered": centered,
        "config": config.to_dict(),
    }
    with open(directory / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2)
    for i, vol in enumerate(volumes):
        write_volume(directory / (VOLUME_PATTERN % i), vol)


def read_dataset(directory):
    """Returns (volumes, angles_deg, manifest dict)."""
    directory = Path(directory)
    with open(directory / MANIFEST_NAME) as fh:
        manifest = json.load(fh)
    volumes = []
    for i in range(manifest["n"]):
        path = directory / (VOLUME_PATTERN % i)
        if not path.exists():
            raise FileNotFoundError(f"missing volume file {path}")
        volumes.append(read_volume(path))
    return volumes, np.array(manifest["angles_deg"]), manifest
