"""Batched solution of the three-point Numerov systems along grid lines.

For a direction ``k`` the auxiliary field ``z`` (a fourth-order approximation
of the second derivative of ``v`` along ``k``) satisfies, on every grid line,

    (z_{j-1} + 10 z_j + z_{j+1}) / 12 = D2_k v_j + b_j,

a constant-coefficient, strictly diagonally dominant tridiagonal system:
Thomas elimination needs no pivoting and its factors are shared by all
lines.  Lines are independent, so the batch is solved line-parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridField, TensorMesh
from .kernels import TWELFTH, numerov_coefficients, numerov_solve_lines


@dataclass
class NumerovLineSystem:
    """One line's system: interior right-hand side plus Dirichlet end values."""

    rhs: np.ndarray
    left_bc: float = 0.0
    right_bc: float = 0.0

    @property
    def interior_size(self) -> int:
        return len(self.rhs)


def solve_numerov_line(sys: NumerovLineSystem) -> np.ndarray:
    """Solve one (1, 10, 1)/12 tridiagonal line system.

    End-value contributions are folded into the first/last right-hand side
    entries; returns the interior unknowns.
    """
    J = sys.interior_size
    if J < 1:
        raise ValueError("empty line system")
    cprime, inv_denom = numerov_coefficients(J)
    d = np.asarray(sys.rhs, dtype=np.float64).copy()
    d[0] -= TWELFTH * sys.left_bc
    d[-1] -= TWELFTH * sys.right_bc
    x = np.empty(J)
    prev = d[0] * inv_denom[0]
    x[0] = prev
    for j in range(1, J):
        prev = (d[j] - TWELFTH * prev) * inv_denom[j]
        x[j] = prev
    for j in range(J - 2, -1, -1):
        x[j] = x[j] - cprime[j] * x[j + 1]
    return x


def fill_boundary(out: np.ndarray, mesh: TensorMesh, fn, t: float,
                  scale: float = 1.0, last_axis: int | None = None) -> None:
    """Write ``scale * fn(*coords, t)`` onto every boundary face of ``out``.

    Faces are visited axis by axis; when ``last_axis`` is given its two
    faces are written last, so they own the shared edge/corner nodes.
    """
    n = mesh.ndim
    order = [ax for ax in range(n) if ax != last_axis]
    if last_axis is not None:
        order.append(last_axis)
    base = list(mesh.node_coords())
    for ax in order:
        for side, x_face in ((0, mesh.axes[ax].origin),
                             (-1, mesh.axes[ax].origin + mesh.axes[ax].extent)):
            coords = list(base)
            coords[ax] = np.full((1,) * n, x_face)
            vals = np.asarray(fn(*coords, t), dtype=np.float64)
            face_shape = tuple(1 if k == ax else s for k, s in enumerate(mesh.shape))
            vals = np.broadcast_to(vals, face_shape)
            idx = tuple(side if k == ax else slice(None) for k in range(n))
            if scale != 1.0:
                out[idx] = vals.reshape(out[idx].shape) * scale
            else:
                out[idx] = vals.reshape(out[idx].shape)


def solve_direction_into(out: np.ndarray, values: np.ndarray, mesh: TensorMesh,
                         axis: int, coeff: float, gk, t: float,
                         b: np.ndarray | None = None) -> None:
    """In-place core of :func:`solve_direction` on raw arrays.

    ``gk`` evaluates ``coeff**2`` times the boundary values of the unknown
    (vectorized over face coordinates plus time); the division by
    ``coeff**2`` happens here, in one place.
    """
    if coeff == 0.0:
        raise ValueError("zero direction coefficient")
    fill_boundary(out, mesh, gk, t, scale=1.0 / coeff ** 2, last_axis=axis)
    numerov_solve_lines(values, out, b, axis, mesh)


def solve_direction(v: GridField, axis: int, coeff: float, gk, t: float = 0.0,
                    b: GridField | None = None) -> GridField:
    """Second-derivative auxiliary field of ``v`` along ``axis``.

    Interior nodes come from the Numerov line solves; boundary nodes are
    filled from ``gk`` directly (the faces of ``axis`` own shared edges).
    """
    if not 0 <= axis < v.mesh.ndim:
        raise ValueError(f"axis {axis} out of range")
    out = np.zeros_like(v.values)
    solve_direction_into(out, v.values, v.mesh, axis, coeff, gk, t,
                         None if b is None else b.values)
    return GridField(v.mesh, out)


@dataclass
class AuxFieldSet:
    """Weighted sum of the per-direction auxiliary fields, optionally with
    the individual fields kept (diagnostic "full" mode)."""

    weighted_sum: GridField
    per_direction: list[GridField] | None = None

    @property
    def mode(self) -> str:
        return "sum" if self.per_direction is None else "full"


def compact_laplacian_into(out: np.ndarray, scratch: np.ndarray,
                           values: np.ndarray, mesh: TensorMesh, coeffs, gks,
                           t: float, b_list=None) -> None:
    """Accumulate ``sum_k a_k^2 z_k`` into ``out`` using one scratch field.

    Directions accumulate in fixed order k = 0..n-1, so the result does not
    depend on the worker count.
    """
    for k in range(mesh.ndim):
        bk = None if b_list is None else b_list[k]
        solve_direction_into(scratch, values, mesh, k, coeffs[k], gks[k], t, bk)
        if k == 0:
            np.multiply(scratch, coeffs[0] ** 2, out=out)
        else:
            out += coeffs[k] ** 2 * scratch


def compact_laplacian(v: GridField, coeffs, gks, t: float = 0.0, b_list=None,
                      mode: str = "sum") -> AuxFieldSet:
    """Fourth-order discrete Laplacian data of ``v``: the weighted sum of the
    per-direction Numerov second derivatives (memory-lean default), or the
    full per-direction set when ``mode="full"``."""
    mesh = v.mesh
    if len(coeffs) != mesh.ndim:
        raise ValueError(f"need {mesh.ndim} coefficients")
    if mode not in ("sum", "full"):
        raise ValueError("mode must be 'sum' or 'full'")
    if mode == "full":
        fields = []
        for k in range(mesh.ndim):
            bk = None if b_list is None else b_list[k]
            fields.append(solve_direction(v, k, coeffs[k], gks[k], t, bk))
        total = np.zeros_like(v.values)
        for k, z in enumerate(fields):
            if k == 0:
                np.multiply(z.values, coeffs[0] ** 2, out=total)
            else:
                total += coeffs[k] ** 2 * z.values
        return AuxFieldSet(GridField(mesh, total), fields)
    out = np.zeros_like(v.values)
    scratch = np.zeros_like(v.values)
    compact_laplacian_into(out, scratch, v.values, mesh, coeffs, gks, t,
                           b_list)
    return AuxFieldSet(GridField(mesh, out))
