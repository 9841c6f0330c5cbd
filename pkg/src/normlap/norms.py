"""Norms on R^D and their unit balls.

Three concrete norms are supported: the Euclidean norm, a weighted l1 norm
with strictly positive per-coordinate weights, and the composite norm used
for wavelet-EMD distances (a plain l1 norm evaluated on coefficient vectors
that have already been scale-weighted; see :mod:`normlap.wavelets`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EUCLIDEAN = "euclidean"
WEIGHTED_L1 = "weighted_l1"
WEMD_COMPOSITE = "wemd_composite"

# A coordinate counts as lying on the kink set of a weighted-l1 norm when
# its magnitude is below this fraction of the sup-norm of the vector.
KINK_RTOL = 1e-12

# Default absolute tolerance on the norm value for unit-ball membership.
MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class NormSpec:
    """Immutable description of a norm on R^D.

    ``weights`` is only set for ``weighted_l1``.  ``dim`` fixes the ambient
    dimension where the norm pins it down (weighted l1); ``None`` means any
    dimension is accepted.  ``scale_exponent`` records the wavelet-EMD decay
    exponent for ``wemd_composite`` (the weighting itself is applied to
    coefficient vectors upstream, so evaluation here is plain l1).
    """

    kind: str
    weights: np.ndarray | None = None
    dim: int | None = None
    scale_exponent: float = 2.5
    differentiability: str = field(default="smooth_away_from_kinks")

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, WEIGHTED_L1, WEMD_COMPOSITE):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == WEIGHTED_L1:
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != 1 or w.size == 0:
                raise ValueError("weighted_l1 needs a 1-d weight vector")
            if not np.all(w > 0):
                raise ValueError("weighted_l1 weights must be strictly positive")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)
            object.__setattr__(self, "dim", w.size)
        if self.kind == EUCLIDEAN:
            object.__setattr__(self, "differentiability", "everywhere_smooth")

    @property
    def id(self) -> str:
        return self.kind


def euclidean(dim: int | None = None) -> NormSpec:
    return NormSpec(EUCLIDEAN, dim=dim)


def weighted_l1(weights) -> NormSpec:
    return NormSpec(WEIGHTED_L1, weights=np.asarray(weights, dtype=float))


def wemd_composite(scale_exponent: float = 2.5) -> NormSpec:
    return NormSpec(WEMD_COMPOSITE, scale_exponent=scale_exponent)


def _check_vector(norm: NormSpec, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if norm.dim is not None and v.size != norm.dim:
        raise ValueError(f"dimension mismatch: norm is on R^{norm.dim}, vector has length {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def norm_eval(norm: NormSpec, v) -> float:
    """Evaluate ||v|| for the given norm."""
    v = _check_vector(norm, v)
    if norm.kind == EUCLIDEAN:
        return float(np.linalg.norm(v))
    if norm.kind == WEIGHTED_L1:
        return float(norm.weights @ np.abs(v))
    return float(np.abs(v).sum())


def norm_grad(norm: NormSpec, v) -> np.ndarray:
    """Gradient of the norm function at ``v``.

    Homogeneous of degree zero, and satisfies the Euler identity
    ``<grad(v), v> = ||v||``.  Raises where the norm is not differentiable:
    at the origin for every norm, and on the kink set (a coordinate within
    ``KINK_RTOL * max|v_i|`` of zero) for the l1-type norms.
    """
    v = _check_vector(norm, v)
    if not np.any(v):
        raise ValueError("nondifferentiable at origin")
    if norm.kind == EUCLIDEAN:
        return v / np.linalg.norm(v)
    if np.min(np.abs(v)) < KINK_RTOL * np.max(np.abs(v)):
        raise ValueError("on kink set: some coordinate is (numerically) zero")
    w = norm.weights if norm.kind == WEIGHTED_L1 else np.ones_like(v)
    return w * np.sign(v)


def unit_ball_contains(norm: NormSpec, v, tol: float = MEMBERSHIP_TOL) -> bool:
    """True iff ``v`` lies in the norm's unit ball, up to ``tol`` on the value."""
    return norm_eval(norm, v) <= 1.0 + tol
