"""Periodized 3-D wavelet machinery for approximate Earthmover's distances.

The transform is a separable multilevel DWT with circular boundary handling,
built from orthonormal filter banks embedded below as constants.  Analysis
along one axis of length ``n`` (even) applies the orthogonal matrix whose
rows are the periodized low/high-pass filters shifted by two, so synthesis
is the transpose and reconstruction is exact to rounding.

Distances: weighting each coefficient at scale ``s`` by ``2**(-2.5*s)`` and
taking l1 differences approximates the Earthmover's distance between
volumes (Shirdhonkar-Jacobs style).  Hard thresholding the weighted
coefficients gives sparse vectors whose l1 distance is linear in the
number of nonzeros.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

# Orthonormal scaling filters, sum = sqrt(2).  sym3 coincides with the
# 6-tap Daubechies-3 filter; haar is the 2-tap baseline.
HAAR_LO = (0.7071067811865476, 0.7071067811865476)
SYM3_LO = (
    0.33267055295008263,
    0.8068915093110925,
    0.45987750211849154,
    -0.13501102001025458,
    -0.08544127388202666,
    0.03522629188570953,
)
FILTERS = {"haar": HAAR_LO, "sym3": SYM3_LO}

DETAIL_TAGS = ("LLH", "LHL", "LHH", "HLL", "HLH", "HHL", "HHH")
APPROX_TAG = "LLL"

# Default decay exponent for the EMD weighting (2**(-5s/2) in 3-D).
WEMD_EXPONENT = 2.5


def _highpass(lo: tuple[float, ...]) -> tuple[float, ...]:
    L = len(lo)
    return tuple((-1.0) ** k * lo[L - 1 - k] for k in range(L))


@lru_cache(maxsize=None)
def _analysis_matrix(n: int, wavelet: str) -> np.ndarray:
    """Orthogonal one-axis analysis matrix: rows = periodized filter shifts."""
    lo = FILTERS[wavelet]
    hi = _highpass(lo)
    W = np.zeros((n, n))
    half = n // 2
    for k in range(half):
        for m, c in enumerate(lo):
            W[k, (2 * k + m) % n] += c
        for m, c in enumerate(hi):
            W[half + k, (2 * k + m) % n] += c
    W.setflags(write=False)
    return W


@dataclass(frozen=True, eq=False)
class Volume:
    """3-D density grid.  ``voxels`` has shape (nx, ny, nz), x slowest."""

    voxels: np.ndarray
    voxel_size: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.voxels, dtype=float)
        if v.ndim != 3:
            raise ValueError(f"volume must be 3-d, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("volume has non-finite voxels")
        if self.voxel_size <= 0:
            raise ValueError("voxel_size must be positive")
        object.__setattr__(self, "voxels", v)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.voxels.shape


def write_volume(path, volume: Volume) -> None:
    """Write the binary volume format: one compact JSON header line (<= 64
    bytes) followed by little-endian float32 voxels in C order."""
    nx, ny, nz = volume.dims
    header = json.dumps(
        {"nx": nx, "ny": ny, "nz": nz, "voxel_size": volume.voxel_size, "dtype": "f32"},
        separators=(",", ":"),
    )
    line = header.encode("ascii") + b"\n"
    if len(line) > 65:
        raise ValueError(f"volume header exceeds 64 bytes: {header!r}")
    with open(path, "wb") as fh:
        fh.write(line)
        fh.write(np.ascontiguousarray(volume.voxels, dtype="<f4").tobytes())


def read_volume(path) -> Volume:
    with open(path, "rb") as fh:
        line = fh.readline(65)
        if not line.endswith(b"\n"):
            raise ValueError("missing or overlong volume header line")
        meta = json.loads(line.decode("ascii"))
        if meta.get("dtype") != "f32":
            raise ValueError(f"unsupported dtype {meta.get('dtype')!r}")
        dims = (meta["nx"], meta["ny"], meta["nz"])
        count = dims[0] * dims[1] * dims[2]
        raw = fh.read(4 * count)
    if len(raw) != 4 * count:
        raise ValueError("truncated voxel payload")
    voxels = np.frombuffer(raw, dtype="<f4").astype(float).reshape(dims)
    return Volume(voxels=voxels, voxel_size=float(meta["voxel_size"]))


@dataclass(frozen=True, eq=False)
class WaveletCoeffs:
    """Multilevel 3-D wavelet coefficients.

    ``details[i]`` holds the seven subbands produced at decomposition step
    ``i + 1`` (step 1 is the finest), each a 3-d array; ``approx`` is the
    coarsest LLL band.  ``scale_origin`` fixes where the scale index s = 0
    sits once weights are applied: "coarsest" (default; approx and the
    final detail step share s = 0, the finest step has s = levels - 1) or
    "finest" (first step s = 0, approx s = levels).
    """

    wavelet: str
    levels: int
    source_dims: tuple[int, int, int]
    padded_dims: tuple[int, int, int]
    voxel_size: float
    approx: np.ndarray
    details: tuple[dict, ...]
    weighted: bool = False
    scale_exponent: float = WEMD_EXPONENT
    scale_origin: str = "coarsest"

    def scale_index(self, band: str, step: int | None = None) -> int:
        """Scale index s of a band: ``band`` is a detail tag with ``step`` in
        1..levels (1 = finest), or the approx tag."""
        if band == APPROX_TAG:
            return 0 if self.scale_origin == "coarsest" else self.levels
        if step is None or not 1 <= step <= self.levels:
            raise ValueError("detail bands need a step in 1..levels")
        return self.levels - step if self.scale_origin == "coarsest" else step - 1

    def bands(self):
        """Yield (tag, step, scale_index, array); approx first, then detail
        steps from coarsest to finest in fixed tag order."""
        yield APPROX_TAG, None, self.scale_index(APPROX_TAG), self.approx
        for step in range(self.levels, 0, -1):
            for tag in DETAIL_TAGS:
                yield tag, step, self.scale_index(tag, step), self.details[step - 1][tag]

    def flatten(self) -> np.ndarray:
        return np.concatenate([arr.ravel() for _, _, _, arr in self.bands()])

    @property
    def n_coeffs(self) -> int:
        nx, ny, nz = self.padded_dims
        return nx * ny * nz

    def metadata_key(self) -> tuple:
        return (
            self.wavelet,
            self.levels,
            self.padded_dims,
            self.weighted,
            self.scale_exponent,
            self.scale_origin,
        )


def max_levels(dims) -> int:
    return int(np.floor(np.log2(min(dims))))


def _transform_axes(a: np.ndarray, wavelet: str, inverse: bool) -> np.ndarray:
    for axis in range(3):
        W = _analysis_matrix(a.shape[axis], wavelet)
        M = W.T if inverse else W
        a = np.moveaxis(np.tensordot(M, np.moveaxis(a, axis, 0), axes=(1, 0)), 0, axis)
    return a


def _split_octants(a: np.ndarray):
    hx, hy, hz = (s // 2 for s in a.shape)
    blocks = {}
    for tag in (APPROX_TAG,) + DETAIL_TAGS:
        sl = tuple(
            slice(0, h) if c == "L" else slice(h, 2 * h)
            for c, h in zip(tag, (hx, hy, hz))
        )
        blocks[tag] = a[sl].copy()
    return blocks


def dwt3(volume: Volume, wavelet: str = "sym3", levels: int = 1) -> WaveletCoeffs:
    """Separable multilevel periodized 3-D DWT.

    Dims not divisible by ``2**levels`` are zero-padded up to the next
    multiple (recorded in ``padded_dims``).  Linear in the input.
    """
    if wavelet not in FILTERS:
        raise ValueError(f"unknown wavelet {wavelet!r}; choose from {sorted(FILTERS)}")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    dims = volume.dims
    feasible = max_levels(dims)
    if levels > feasible:
        raise ValueError(
            f"levels={levels} too deep for dims {dims}; max feasible levels is {feasible}"
        )
    block = 2**levels
    padded = tuple(-(-d // block) * block for d in dims)
    a = np.zeros(padded)
    a[: dims[0], : dims[1], : dims[2]] = volume.voxels

    details: list[dict] = []
    for _ in range(levels):
        blocks = _split_octants(_transform_axes(a, wavelet, inverse=False))
        details.append({tag: blocks[tag] for tag in DETAIL_TAGS})
        a = blocks[APPROX_TAG]
    return WaveletCoeffs(
        wavelet=wavelet,
        levels=levels,
        source_dims=dims,
        padded_dims=padded,
        voxel_size=volume.voxel_size,
        approx=a,
        details=tuple(details),
    )


def idwt3(coeffs: WaveletCoeffs) -> Volume:
    """Inverse of :func:`dwt3`; exact up to floating rounding."""
    if coeffs.weighted:
        raise ValueError("cannot invert weighted coefficients")
    a = coeffs.approx
    for step in range(coeffs.levels, 0, -1):
        bands = coeffs.details[step - 1]
        full = np.empty(tuple(2 * s for s in a.shape))
        hx, hy, hz = a.shape
        for tag in (APPROX_TAG,) + DETAIL_TAGS:
            sl = tuple(
                slice(0, h) if c == "L" else slice(h, 2 * h)
                for c, h in zip(tag, (hx, hy, hz))
            )
            full[sl] = a if tag == APPROX_TAG else bands[tag]
        a = _transform_axes(full, coeffs.wavelet, inverse=True)
    nx, ny, nz = coeffs.source_dims
    return Volume(voxels=a[:nx, :ny, :nz], voxel_size=coeffs.voxel_size)


def wemd_weight(
    coeffs: WaveletCoeffs,
    scale_exponent: float = WEMD_EXPONENT,
    scale_origin: str = "coarsest",
) -> WaveletCoeffs:
    """Multiply every entry at scale index s by ``2**(-scale_exponent*s)``.

    With the default "coarsest" origin the coarse bands keep weight ~1 and
    fine-scale differences are damped, so the weighted l1 distance behaves
    like a transport cost (a one-voxel shift is cheap, a far shift is not).
    The "finest" origin flips the indexing for experimentation.
    """
    if coeffs.weighted:
        raise ValueError("coefficients are already weighted")
    if scale_origin not in ("coarsest", "finest"):
        raise ValueError("scale_origin must be 'coarsest' or 'finest'")
    tagged = replace(coeffs, scale_exponent=scale_exponent, scale_origin=scale_origin)
    approx = coeffs.approx * 2.0 ** (-scale_exponent * tagged.scale_index(APPROX_TAG))
    details = tuple(
        {
            tag: coeffs.details[step - 1][tag]
            * 2.0 ** (-scale_exponent * tagged.scale_index(tag, step))
            for tag in DETAIL_TAGS
        }
        for step in range(1, coeffs.levels + 1)
    )
    return replace(tagged, approx=approx, details=details, weighted=True)


@dataclass(frozen=True, eq=False)
class SparseCoeffs:
    """Nonzero wavelet coefficients as (flat index, value) pairs, indices
    sorted ascending in the canonical flattening order of WaveletCoeffs."""

    indices: np.ndarray
    values: np.ndarray
    meta: tuple

    @property
    def nnz(self) -> int:
        return self.indices.size

    def l1_mass(self) -> float:
        return float(np.abs(self.values).sum())


def hard_threshold(coeffs: WaveletCoeffs, t: float) -> SparseCoeffs:
    """Drop entries with ``|value| <= t``, keep the rest unchanged."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    flat = coeffs.flatten()
    keep = np.abs(flat) > t
    idx = np.flatnonzero(keep)
    return SparseCoeffs(indices=idx, values=flat[idx], meta=coeffs.metadata_key())


def _largest_threshold(mags: np.ndarray, mass_fraction: float) -> float:
    mags = np.sort(mags)[::-1]
    total = mags.sum()
    if total == 0:
        return 0.0
    k = int(np.searchsorted(np.cumsum(mags), mass_fraction * total)) + 1
    cut = mags[k - 1]
    below = mags[mags < cut]
    return float(below[0]) if below.size else 0.0


def select_threshold(coeffs: WaveletCoeffs, mass_fraction: float) -> float:
    """Largest cut ``t`` (computed by sorting magnitudes and accumulating)
    such that hard-thresholding at ``t`` retains at least ``mass_fraction``
    of the weighted l1 mass."""
    if not coeffs.weighted:
        raise ValueError("select_threshold expects weighted coefficients")
    if not 0 < mass_fraction <= 1:
        raise ValueError("mass_fraction must lie in (0, 1]")
    flat = coeffs.flatten()
    if flat.size == 0:
        raise ValueError("empty coefficients")
    return _largest_threshold(np.abs(flat), mass_fraction)


def dataset_threshold(coeff_list, mass_fraction: float) -> float:
    """Single threshold retaining ``mass_fraction`` of the pooled weighted
    l1 mass of a whole coefficient set (pooling all entries)."""
    if not coeff_list:
        raise ValueError("empty coefficient list")
    for c in coeff_list:
        if not c.weighted:
            raise ValueError("dataset_threshold expects weighted coefficients")
    pooled = np.concatenate([np.abs(c.flatten()) for c in coeff_list])
    return _largest_threshold(pooled, mass_fraction)


def sparse_l1_distance(a: SparseCoeffs, b: SparseCoeffs) -> float:
    """l1 distance over the union of supports; linear in nnz(a) + nnz(b)."""
    if a.meta != b.meta:
        raise ValueError("coefficient metadata mismatch")
    common, ia, ib = np.intersect1d(a.indices, b.indices, assume_unique=True, return_indices=True)
    d = float(np.abs(a.values[ia] - b.values[ib]).sum())
    mask_a = np.ones(a.nnz, dtype=bool)
    mask_a[ia] = False
    mask_b = np.ones(b.nnz, dtype=bool)
    mask_b[ib] = False
    return d + float(np.abs(a.values[mask_a]).sum()) + float(np.abs(b.values[mask_b]).sum())


def pairwise_sparse_l1(items: list[SparseCoeffs], dim: int) -> np.ndarray:
    """All-pairs sparse l1 distances, one dense scratch row at a time."""
    n = len(items)
    for it in items[1:]:
        if it.meta != items[0].meta:
            raise ValueError("coefficient metadata mismatch")
    ptr = np.zeros(n + 1, dtype=np.int64)
    for j, it in enumerate(items):
        ptr[j + 1] = ptr[j] + it.nnz
    cat_idx = np.concatenate([it.indices for it in items]) if n else np.empty(0, np.int64)
    cat_val = np.concatenate([it.values for it in items]) if n else np.empty(0)
    masses = np.array([it.l1_mass() for it in items])

    D = np.zeros((n, n))
    x = np.zeros(dim)
    nonempty = ptr[:-1] < ptr[1:]
    starts = ptr[:-1][nonempty]
    for i in range(n):
        x[items[i].indices] = items[i].values
        sums = np.zeros(n)
        if starts.size:
            contrib = np.abs(x[cat_idx] - cat_val) - np.abs(x[cat_idx])
            sums[nonempty] = np.add.reduceat(contrib, starts)
        D[i] = sums + masses[i]
        D[i, i] = 0.0
        x[items[i].indices] = 0.0
    return 0.5 * (D + D.T)


def wemd_coeffs(
    volume: Volume,
    wavelet: str = "sym3",
    levels: int | None = None,
    scale_exponent: float = WEMD_EXPONENT,
    scale_origin: str = "coarsest",
    extra_levels: int = 1,
) -> WaveletCoeffs:
    """Weighted coefficients of a volume for Earthmover-style distances.

    The volume is first embedded (at the origin corner) in a grid whose
    axes are the next power of two enlarged by ``extra_levels`` doublings.
    The zero margin gives the transform scales coarser than the object,
    whose coefficients track low-order moments of the mass; without them
    (``extra_levels=0``) transport distances beyond the coarsest cell size
    saturate and the EMD approximation degrades.
    """
    if extra_levels < 0:
        raise ValueError("extra_levels must be nonnegative")
    dims = volume.dims
    padded = tuple(2 ** (int(np.ceil(np.log2(d))) + extra_levels) for d in dims)
    if padded != dims:
        vox = np.zeros(padded)
        vox[: dims[0], : dims[1], : dims[2]] = volume.voxels
        volume = Volume(voxels=vox, voxel_size=volume.voxel_size)
    if levels is None:
        levels = max_levels(volume.dims)
    return wemd_weight(
        dwt3(volume, wavelet, levels), scale_exponent=scale_exponent, scale_origin=scale_origin
    )


def wemd_vector(volume: Volume, **kwargs) -> np.ndarray:
    """Weighted coefficient vector whose pairwise l1 distances approximate
    the Earthmover's distance between volumes."""
    return wemd_coeffs(volume, **kwargs).flatten()


def wemd_distance(a: Volume, b: Volume, **kwargs) -> float:
    return float(np.abs(wemd_vector(a, **kwargs) - wemd_vector(b, **kwargs)).sum())
