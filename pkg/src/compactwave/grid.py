"""Uniform tensor-product meshes, grid fields, difference operators, norms.

Geometry convention: each spatial axis ``k`` carries nodes
``x_i = origin + i * step`` for ``0 <= i <= intervals``; a node is a
*boundary* node if any of its indices is 0 or ``intervals`` on its axis,
otherwise it is *interior*.  Discrete norms sum over interior nodes only.

All reductions accumulate per grid line and combine lines in a fixed order,
so norm values are reproducible bit for bit regardless of worker count.

(An analogous three-point average can be formed in the time direction; the
steppers never need it, so no operation for it exists here.)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .kernels import numerov_coefficients


@dataclass(frozen=True)
class AxisMesh:
    """One uniform spatial axis: ``intervals`` cells over ``extent``."""

    extent: float
    intervals: int
    origin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "extent", float(self.extent))
        object.__setattr__(self, "intervals", int(self.intervals))
        object.__setattr__(self, "origin", float(self.origin))
        if self.extent <= 0.0:
            raise ValueError("axis extent must be positive")
        if self.intervals < 2:
            raise ValueError("axis needs at least 2 intervals")

    @property
    def step(self) -> float:
        return self.extent / self.intervals

    @property
    def n_nodes(self) -> int:
        return self.intervals + 1

    def nodes(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.n_nodes)


@dataclass(frozen=True)
class TensorMesh:
    """Product of spatial axes plus a uniform time mesh of ``time_steps``."""

    axes: tuple[AxisMesh, ...]
    time_extent: float
    time_steps: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "time_extent", float(self.time_extent))
        object.__setattr__(self, "time_steps", int(self.time_steps))
        if not self.axes:
            raise ValueError("need at least one spatial axis")
        if self.time_extent <= 0.0:
            raise ValueError("time extent must be positive")
        if self.time_steps < 2:
            raise ValueError("need at least 2 time steps")

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n_nodes for ax in self.axes)

    @property
    def steps(self) -> tuple[float, ...]:
        return tuple(ax.step for ax in self.axes)

    @property
    def time_step(self) -> float:
        return self.time_extent / self.time_steps

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.steps))

    def times(self) -> np.ndarray:
        return self.time_step * np.arange(self.time_steps + 1)

    def node_coords(self) -> tuple[np.ndarray, ...]:
        """Open (broadcastable) coordinate grids, one per axis."""
        return tuple(
            ax.nodes().reshape((1,) * k + (-1,) + (1,) * (self.ndim - k - 1))
            for k, ax in enumerate(self.axes)
        )

    def interior(self) -> tuple[slice, ...]:
        return tuple(slice(1, -1) for _ in range(self.ndim))

    def boundary_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        mask[self.interior()] = False
        return mask

    # --- cached helpers for the line kernels -----------------------------

    def line_starts(self, axis: int) -> tuple[np.ndarray, int]:
        """Flat offsets of every interior line of ``axis``, plus its stride.

        A line is "interior" when all transverse indices are interior; its
        start node sits on the ``axis`` = 0 face.
        """
        key = ("starts", axis)
        if key not in self._cache:
            shape = self.shape
            strides = np.empty(self.ndim, dtype=np.int64)
            acc = 1
            for k in range(self.ndim - 1, -1, -1):
                strides[k] = acc
                acc *= shape[k]
            ranges = [
                np.arange(1, shape[k] - 1, dtype=np.int64) * strides[k]
                for k in range(self.ndim) if k != axis
            ]
            starts = np.zeros(1, dtype=np.int64)
            for r in ranges:
                starts = (starts[:, None] + r[None, :]).reshape(-1)
            self._cache[key] = (starts, int(strides[axis]))
        return self._cache[key]

    def numerov_factors(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        key = ("numerov", axis)
        if key not in self._cache:
            self._cache[key] = numerov_coefficients(self.axes[axis].intervals - 1)
        return self._cache[key]


def make_mesh(extents, intervals, time_extent, time_steps, origins=None) -> TensorMesh:
    extents = tuple(np.atleast_1d(extents).astype(float))
    if np.isscalar(intervals) or np.ndim(intervals) == 0:
        intervals = (int(intervals),) * len(extents)
    if origins is None:
        origins = (0.0,) * len(extents)
    axes = tuple(AxisMesh(X, int(N), float(o))
                 for X, N, o in zip(extents, intervals, origins))
    return TensorMesh(axes, float(time_extent), int(time_steps))


# ---------------------------------------------------------------------------
# Grid fields
# ---------------------------------------------------------------------------


@dataclass
class GridField:
    """Scalar nodal values on the spatial part of a :class:`TensorMesh`."""

    mesh: TensorMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.mesh.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match mesh {self.mesh.shape}")

    @classmethod
    def zeros(cls, mesh: TensorMesh) -> "GridField":
        return cls(mesh, np.zeros(mesh.shape))

    @classmethod
    def sample(cls, mesh: TensorMesh, fn: Callable, t: float | None = None) -> "GridField":
        """Evaluate ``fn`` on the node coordinates (vectorized, broadcast)."""
        coords = mesh.node_coords()
        vals = fn(*coords) if t is None else fn(*coords, t)
        return cls(mesh, np.broadcast_to(np.asarray(vals, dtype=np.float64),
                                         mesh.shape).copy())

    def copy(self) -> "GridField":
        return GridField(self.mesh, self.values.copy())

    def interior(self) -> np.ndarray:
        return self.values[self.mesh.interior()]


def _check_axis(mesh: TensorMesh, axis: int) -> None:
    if not 0 <= axis < mesh.ndim:
        raise ValueError(f"axis {axis} out of range for {mesh.ndim}-d mesh")


# ---------------------------------------------------------------------------
# Difference operators
# ---------------------------------------------------------------------------


def second_difference(w: GridField, axis: int) -> GridField:
    """Three-point second difference along ``axis``, scaled by 1/h^2.

    Values at nodes that are boundary nodes *of this axis* are set to 0 and
    carry no meaning; transverse boundary nodes are processed normally so
    that operators compose on full fields.
    """
    _check_axis(w.mesh, axis)
    v = w.values
    h2 = w.mesh.axes[axis].step ** 2
    out = np.zeros_like(v)
    mid = tuple(slice(1, -1) if k == axis else slice(None) for k in range(v.ndim))
    lo = tuple(slice(0, -2) if k == axis else slice(None) for k in range(v.ndim))
    hi = tuple(slice(2, None) if k == axis else slice(None) for k in range(v.ndim))
    out[mid] = (v[lo] - 2.0 * v[mid] + v[hi]) / h2
    return GridField(w.mesh, out)


def numerov_average(w: GridField, axis: int) -> GridField:
    """(1, 10, 1)/12 average along ``axis``; zero on the axis boundary."""
    _check_axis(w.mesh, axis)
    v = w.values
    out = np.zeros_like(v)
    mid = tuple(slice(1, -1) if k == axis else slice(None) for k in range(v.ndim))
    lo = tuple(slice(0, -2) if k == axis else slice(None) for k in range(v.ndim))
    hi = tuple(slice(2, None) if k == axis else slice(None) for k in range(v.ndim))
    out[mid] = (v[lo] + 10.0 * v[mid] + v[hi]) / 12.0
    return GridField(w.mesh, out)


def laplacian(w: GridField, coeffs: Sequence[float]) -> GridField:
    """Weighted sum of per-axis second differences, sum_k a_k^2 D2_k.

    Defined on nodes interior in every direction; zero elsewhere.
    """
    mesh = w.mesh
    if len(coeffs) != mesh.ndim:
        raise ValueError(f"need {mesh.ndim} coefficients, got {len(coeffs)}")
    v = w.values
    n = mesh.ndim
    core = mesh.interior()
    out = np.zeros_like(v)
    acc = None
    for k in range(n):
        lo = tuple(slice(0, -2) if ax == k else slice(1, -1) for ax in range(n))
        hi = tuple(slice(2, None) if ax == k else slice(1, -1) for ax in range(n))
        term = (v[lo] - 2.0 * v[core] + v[hi]) * (coeffs[k] ** 2 / mesh.axes[k].step ** 2)
        acc = term if acc is None else acc + term
    out[core] = acc
    return GridField(mesh, out)


# ---------------------------------------------------------------------------
# Norms (interior-node summation, fixed accumulation order)
# ---------------------------------------------------------------------------


def _fixed_order_sum(arr: np.ndarray) -> float:
    # per-line accumulation along the last axis, then a fixed-order combine
    if arr.ndim == 0:
        return float(arr)
    lines = np.sum(arr, axis=-1)
    while lines.ndim > 0:
        lines = np.sum(lines, axis=-1)
    return float(lines)


def inner_l2(v: GridField, w: GridField) -> float:
    """Cell-volume-weighted inner product over interior nodes."""
    if v.mesh is not w.mesh and v.mesh != w.mesh:
        raise ValueError("fields live on different meshes")
    prod = v.interior() * w.interior()
    return v.mesh.cell_volume * _fixed_order_sum(prod)


def norm_l2(w: GridField) -> float:
    return float(np.sqrt(inner_l2(w, w)))


def seminorm_h1(w: GridField, coeffs: Sequence[float]) -> float:
    """Discrete H^1 seminorm: backward differences, weighted by a_k^2.

    The differenced direction sums over all of its difference positions
    (1 <= i <= N_k); the other directions sum over interior nodes only.
    Equals ``sqrt((-laplacian(w), w))`` for fields vanishing on the boundary.
    """
    mesh = w.mesh
    if len(coeffs) != mesh.ndim:
        raise ValueError(f"need {mesh.ndim} coefficients, got {len(coeffs)}")
    vol = mesh.cell_volume
    total = 0.0
    n = mesh.ndim
    for k in range(n):
        d = np.diff(w.values, axis=k) / mesh.axes[k].step
        sel = tuple(slice(None) if ax == k else slice(1, -1) for ax in range(n))
        total += coeffs[k] ** 2 * vol * _fixed_order_sum(d[sel] ** 2)
    return float(np.sqrt(total))


def norm_energy(v_prev: GridField, v_cur: GridField, h_t: float,
                coeffs: Sequence[float]) -> float:
    """Energy norm of a two-level pair: the L^2 norm of the backward time
    difference combined with the coefficient-weighted H^1 seminorm of the
    current level,

        ( ||(cur - prev)/h_t||^2 + |cur|_{H^1,a}^2 )^{1/2}.
    """
    if h_t <= 0.0:
        raise ValueError("time step must be positive")
    if v_prev.mesh is not v_cur.mesh and v_prev.mesh != v_cur.mesh:
        raise ValueError("fields live on different meshes")
    dt = GridField(v_cur.mesh, (v_cur.values - v_prev.values) / h_t)
    return float(np.sqrt(inner_l2(dt, dt)
                         + seminorm_h1(v_cur, coeffs) ** 2))
