"""Periodic finite-difference eigensolver for second-order operators on the
circle, of the form  a(theta) d/dtheta + b(theta) d^2/dtheta^2.

The first derivative is discretized by the symmetric difference
(f_{k+1} - f_{k-1}) / (2 dtheta) and the second by the standard three-point
stencil, with cyclic indices on the grid theta_k = 2 pi k / n.  Eigenpairs
of smallest magnitude are extracted by ARPACK in shift-invert mode; the
shift defaults to 1.0, which is safely outside the (nonpositive) spectrum,
whereas a zero shift would try to invert a singular matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg

from .limit_op import circle_first_order_coefficient, circle_second_order_coefficient

DEFAULT_SHIFT = 1.0
_ARPACK_SEED = 20200527


@dataclass(frozen=True, eq=False)
class FDOperator:
    """Sparse cyclic-banded discretization on n grid points."""

    matrix: sp.csr_array
    grid: np.ndarray
    coeff_meta: tuple | None = None

    @property
    def n(self) -> int:
        return self.grid.size

    @property
    def dtheta(self) -> float:
        return 2 * np.pi / self.n

    def inf_norm(self) -> float:
        return float(abs(self.matrix).sum(axis=1).max())


def assemble_fd_operator(
    first_coeff: Callable[[float], float],
    second_coeff: Callable[[float], float],
    n: int,
    coeff_meta: tuple | None = None,
) -> FDOperator:
    """Row k encodes a(theta_k) * symmetric difference plus b(theta_k) *
    second difference, indices cyclic."""
    if n < 4:
        raise ValueError("need at least 4 grid points")
    grid = 2 * np.pi * np.arange(n) / n
    dtheta = 2 * np.pi / n
    a = np.array([float(first_coeff(t)) for t in grid])
    b = np.array([float(second_coeff(t)) for t in grid])

    diag = -2.0 * b / dtheta**2
    upper = b / dtheta**2 + a / (2 * dtheta)
    lower = b / dtheta**2 - a / (2 * dtheta)

    k = np.arange(n)
    rows = np.concatenate([k, k, k])
    cols = np.concatenate([k, (k + 1) % n, (k - 1) % n])
    data = np.concatenate([diag, upper, lower])
    matrix = sp.csr_array(sp.coo_array((data, (rows, cols)), shape=(n, n)))
    return FDOperator(matrix=matrix, grid=grid, coeff_meta=coeff_meta)


def circle_weighted_l1_operator(w1: float, w2: float, n: int) -> FDOperator:
    """Discretization of the limiting circle operator for weights (w1, w2);
    the sign convention sign(0) = 0 applies at grid points on the axes."""
    return assemble_fd_operator(
        lambda t: circle_first_order_coefficient(t, (w1, w2)),
        lambda t: circle_second_order_coefficient(t, (w1, w2)),
        n,
        coeff_meta=(w1, w2),
    )


def smallest_magnitude_eigs(op: FDOperator, k: int, shift: float = DEFAULT_SHIFT):
    """k eigenpairs of the operator nearest zero in magnitude.

    Uses shift-inverted Arnoldi on (A - shift I)^{-1} with a sparse LU
    factorization. Eigenfunctions are returned with unit l2 norm and the
    leading-entry-positive sign convention, ordered by |eigenvalue|.
    """
    if k < 1 or k >= op.n - 1:
        raise ValueError(f"k must be in 1..{op.n - 2}")
    v0 = np.random.default_rng(_ARPACK_SEED).standard_normal(op.n)
    try:
        vals, vecs = sp.linalg.eigs(
            op.matrix.astype(float), k=k, sigma=shift, which="LM", v0=v0, tol=0
        )
    except sp.linalg.ArpackNoConvergence as exc:
        raise RuntimeError(
            f"shift-invert Arnoldi did not converge (k={k}, shift={shift}): {exc}"
        ) from exc
    except RuntimeError as exc:
        raise RuntimeError(
            f"shifted matrix could not be factorized (shift={shift} may be an "
            f"eigenvalue; try a different shift): {exc}"
        ) from exc
    imag_scale = np.abs(vals.imag).max()
    if imag_scale > 1e-8 * max(1.0, np.abs(vals.real).max()):
        raise RuntimeError(f"complex eigenvalues returned (max imag {imag_scale:.3g})")
    vals = vals.real
    vecs = vecs.real
    order = np.argsort(np.abs(vals), kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    for j in range(vecs.shape[1]):
        lead = np.argmax(np.abs(vecs[:, j]))
        if vecs[lead, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vals, vecs


def residuals(op: FDOperator, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """||A phi - lambda phi||_2 per eigenpair."""
    R = op.matrix @ vecs - vecs * vals[None, :]
    return np.linalg.norm(R, axis=0)


def cyclic_sign_changes(values: np.ndarray, rtol: float = 1e-8) -> int:
    """Number of sign changes around the cycle, ignoring entries within
    ``rtol`` of zero relative to the max magnitude.  Always even for a
    closed loop."""
    v = np.asarray(values, dtype=float)
    keep = np.abs(v) > rtol * np.abs(v).max()
    s = np.sign(v[keep])
    if s.size < 2:
        return 0
    return int((s != np.roll(s, -1)).sum())
