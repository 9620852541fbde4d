"""Hot numerical kernels: batched Numerov line solves and fused step updates.

Each kernel has a numba ``@njit(parallel=True)`` implementation and a pure
numpy one; :mod:`compactwave.backends` picks the path.  Both paths perform
the same floating-point operations in the same order, so they agree bit for
bit, and the parallel kernels write disjoint output slices only (no shared
reductions), so results do not depend on the worker count.
"""

from __future__ import annotations

import numpy as np

from .backends import USE_NUMBA

TWELFTH = 1.0 / 12.0

if USE_NUMBA:
    from numba import njit, prange
else:  # pragma: no cover - exercised when COMPACTWAVE_BACKEND=numpy

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        return deco

    prange = range


def numerov_coefficients(n_unknowns: int) -> tuple[np.ndarray, np.ndarray]:
    """Precompute Thomas elimination factors for the (1, 10, 1)/12 matrix.

    The matrix is the same for every grid line of a direction, so the
    forward-elimination factors are shared across the whole batch.
    Returns ``(cprime, inv_denom)`` of length ``n_unknowns``.
    """
    if n_unknowns < 1:
        raise ValueError("Numerov line needs at least one interior unknown")
    diag = 10.0 * TWELFTH
    cprime = np.empty(n_unknowns)
    inv_denom = np.empty(n_unknowns)
    denom = diag
    inv_denom[0] = 1.0 / denom
    cprime[0] = TWELFTH * inv_denom[0]
    for j in range(1, n_unknowns):
        denom = diag - TWELFTH * cprime[j - 1]
        inv_denom[j] = 1.0 / denom
        cprime[j] = TWELFTH * inv_denom[j]
    return cprime, inv_denom


# ---------------------------------------------------------------------------
# Batched Numerov solve along grid lines
# ---------------------------------------------------------------------------
#
# For every line: solve (1/12, 10/12, 1/12) tridiagonal systems
#     s_N x_j = (v_{j-1} - 2 v_j + v_{j+1}) / h^2 + b_j,   j = 1 .. npts-2,
# with x_0, x_{npts-1} already stored in ``out`` (Dirichlet end values that
# get folded into the first/last right-hand sides).


@njit(parallel=True, cache=True)
def _numerov_lines_numba(v, out, b, has_b, starts, stride, npts, inv_h2,
                         cprime, inv_denom):
    J = npts - 2
    tw = TWELFTH
    for L in prange(starts.size):
        s = starts[L]
        i_last = s + (npts - 1) * stride
        # forward sweep; d' overwrites out along the line
        i = s + stride
        d = (v[s] - 2.0 * v[i] + v[i + stride]) * inv_h2
        if has_b:
            d = d + b[i]
        d = d - tw * out[s]
        if J == 1:
            d = d - tw * out[i_last]
        prev = d * inv_denom[0]
        out[i] = prev
        for j in range(2, J + 1):
            i = s + j * stride
            d = (v[i - stride] - 2.0 * v[i] + v[i + stride]) * inv_h2
            if has_b:
                d = d + b[i]
            if j == J:
                d = d - tw * out[i_last]
            prev = (d - tw * prev) * inv_denom[j - 1]
            out[i] = prev
        # backward substitution
        acc = prev
        for j in range(J - 1, 0, -1):
            i = s + j * stride
            acc = out[i] - cprime[j - 1] * acc
            out[i] = acc


def _numerov_lines_numpy(values, out, b, axis, inv_h2, cprime, inv_denom,
                         interior_other):
    vv = np.moveaxis(values, axis, -1)[interior_other]
    oo = np.moveaxis(out, axis, -1)[interior_other]
    J = vv.shape[-1] - 2
    tw = TWELFTH
    d = (vv[..., 0:-2] - 2.0 * vv[..., 1:-1] + vv[..., 2:]) * inv_h2
    if b is not None:
        bb = np.moveaxis(b, axis, -1)[interior_other]
        d = d + bb[..., 1:-1]
    d[..., 0] = d[..., 0] - tw * oo[..., 0]
    d[..., J - 1] = d[..., J - 1] - tw * oo[..., -1]
    oo[..., 1] = d[..., 0] * inv_denom[0]
    for j in range(2, J + 1):
        oo[..., j] = (d[..., j - 1] - tw * oo[..., j - 1]) * inv_denom[j - 1]
    for j in range(J - 1, 0, -1):
        oo[..., j] = oo[..., j] - cprime[j - 1] * oo[..., j + 1]


def numerov_solve_lines(values, out, b, axis, mesh) -> None:
    """Solve the Numerov systems along every interior line of ``axis``.

    ``out`` must already hold the end values of the unknown on the domain
    boundary; interior entries are overwritten in place.  ``b`` is an
    optional extra right-hand-side field (same shape), read at interior
    nodes only.
    """
    npts = values.shape[axis]
    cprime, inv_denom = mesh.numerov_factors(axis)
    inv_h2 = 1.0 / mesh.axes[axis].step ** 2
    if USE_NUMBA:
        starts, stride = mesh.line_starts(axis)
        has_b = b is not None
        bflat = b.reshape(-1) if has_b else _DUMMY
        _numerov_lines_numba(values.reshape(-1), out.reshape(-1), bflat,
                             has_b, starts, stride, npts, inv_h2,
                             cprime, inv_denom)
    else:
        interior_other = tuple(slice(1, -1) for _ in range(values.ndim - 1))
        _numerov_lines_numpy(values, out, b, axis, inv_h2, cprime, inv_denom,
                             interior_other)


_DUMMY = np.zeros(1)


# ---------------------------------------------------------------------------
# Fused three-level updates (compact and classical explicit schemes)
# ---------------------------------------------------------------------------
#
# compact:   out = 2 v_cur - v_prev + ht^2 phi
#                  + (ht^4/12) / rho * (sum_k w_k D2_k phi + d2t_f)
# explicit:  out = 2 v_cur - v_prev + ht^2 / rho * (sum_k w_k D2_k v + f)
#
# where D2_k is the plain second difference and w_k = a_k^2 / h_k^2.
# Interior nodes only; boundary values are written by the caller.


@njit(parallel=True, cache=True)
def _compact_update_3d_numba(vp, vc, phi, inv_rho, ltf, has_ltf, out,
                             ht2, c4, w0, w1, w2):
    n0, n1, n2 = vc.shape
    for i in prange(1, n0 - 1):
        for j in range(1, n1 - 1):
            for k in range(1, n2 - 1):
                lap = (phi[i - 1, j, k] - 2.0 * phi[i, j, k]
                       + phi[i + 1, j, k]) * w0
                lap += (phi[i, j - 1, k] - 2.0 * phi[i, j, k]
                        + phi[i, j + 1, k]) * w1
                lap += (phi[i, j, k - 1] - 2.0 * phi[i, j, k]
                        + phi[i, j, k + 1]) * w2
                if has_ltf:
                    lap = lap + ltf[i, j, k]
                out[i, j, k] = (2.0 * vc[i, j, k] - vp[i, j, k]
                                + ht2 * phi[i, j, k]
                                + c4 * inv_rho[i, j, k] * lap)


@njit(parallel=True, cache=True)
def _compact_update_2d_numba(vp, vc, phi, inv_rho, ltf, has_ltf, out,
                             ht2, c4, w0, w1):
    n0, n1 = vc.shape
    for i in prange(1, n0 - 1):
        for j in range(1, n1 - 1):
            lap = (phi[i - 1, j] - 2.0 * phi[i, j] + phi[i + 1, j]) * w0
            lap += (phi[i, j - 1] - 2.0 * phi[i, j] + phi[i, j + 1]) * w1
            if has_ltf:
                lap = lap + ltf[i, j]
            out[i, j] = (2.0 * vc[i, j] - vp[i, j] + ht2 * phi[i, j]
                         + c4 * inv_rho[i, j] * lap)


@njit(parallel=True, cache=True)
def _compact_update_1d_numba(vp, vc, phi, inv_rho, ltf, has_ltf, out,
                             ht2, c4, w0):
    n0 = vc.shape[0]
    for i in prange(1, n0 - 1):
        lap = (phi[i - 1] - 2.0 * phi[i] + phi[i + 1]) * w0
        if has_ltf:
            lap = lap + ltf[i]
        out[i] = (2.0 * vc[i] - vp[i] + ht2 * phi[i]
                  + c4 * inv_rho[i] * lap)


def _weighted_lap_numpy(field, weights):
    """sum_k w_k * second difference of ``field``, on the full interior."""
    n = field.ndim
    core = tuple(slice(1, -1) for _ in range(n))
    lap = None
    for k in range(n):
        lo = tuple(slice(0, -2) if ax == k else slice(1, -1) for ax in range(n))
        hi = tuple(slice(2, None) if ax == k else slice(1, -1) for ax in range(n))
        term = (field[lo] - 2.0 * field[core] + field[hi]) * weights[k]
        lap = term if lap is None else lap + term
    return lap


def compact_update(vp, vc, phi, inv_rho, ltf, out, ht2, c4, weights) -> None:
    n = vc.ndim
    has_ltf = ltf is not None
    if USE_NUMBA and n <= 3:
        lt = ltf if has_ltf else _DUMMY.reshape((1,) * n)
        if n == 3:
            _compact_update_3d_numba(vp, vc, phi, inv_rho, lt, has_ltf, out,
                                     ht2, c4, *weights)
        elif n == 2:
            _compact_update_2d_numba(vp, vc, phi, inv_rho, lt, has_ltf, out,
                                     ht2, c4, *weights)
        else:
            _compact_update_1d_numba(vp, vc, phi, inv_rho, lt, has_ltf, out,
                                     ht2, c4, *weights)
        return
    core = tuple(slice(1, -1) for _ in range(n))
    lap = _weighted_lap_numpy(phi, weights)
    if has_ltf:
        lap = lap + ltf[core]
    out[core] = (2.0 * vc[core] - vp[core] + ht2 * phi[core]
                 + c4 * inv_rho[core] * lap)


@njit(parallel=True, cache=True)
def _explicit_update_3d_numba(vp, vc, inv_rho, f, has_f, out, ht2, w0, w1, w2):
    n0, n1, n2 = vc.shape
    for i in prange(1, n0 - 1):
        for j in range(1, n1 - 1):
            for k in range(1, n2 - 1):
                lap = (vc[i - 1, j, k] - 2.0 * vc[i, j, k]
                       + vc[i + 1, j, k]) * w0
                lap += (vc[i, j - 1, k] - 2.0 * vc[i, j, k]
                        + vc[i, j + 1, k]) * w1
                lap += (vc[i, j, k - 1] - 2.0 * vc[i, j, k]
                        + vc[i, j, k + 1]) * w2
                if has_f:
                    lap = lap + f[i, j, k]
                out[i, j, k] = (2.0 * vc[i, j, k] - vp[i, j, k]
                                + ht2 * inv_rho[i, j, k] * lap)


@njit(parallel=True, cache=True)
def _explicit_update_2d_numba(vp, vc, inv_rho, f, has_f, out, ht2, w0, w1):
    n0, n1 = vc.shape
    for i in prange(1, n0 - 1):
        for j in range(1, n1 - 1):
            lap = (vc[i - 1, j] - 2.0 * vc[i, j] + vc[i + 1, j]) * w0
            lap += (vc[i, j - 1] - 2.0 * vc[i, j] + vc[i, j + 1]) * w1
            if has_f:
                lap = lap + f[i, j]
            out[i, j] = (2.0 * vc[i, j] - vp[i, j]
                         + ht2 * inv_rho[i, j] * lap)


@njit(parallel=True, cache=True)
def _explicit_update_1d_numba(vp, vc, inv_rho, f, has_f, out, ht2, w0):
    n0 = vc.shape[0]
    for i in prange(1, n0 - 1):
        lap = (vc[i - 1] - 2.0 * vc[i] + vc[i + 1]) * w0
        if has_f:
            lap = lap + f[i]
        out[i] = (2.0 * vc[i] - vp[i] + ht2 * inv_rho[i] * lap)


def explicit_update(vp, vc, inv_rho, f, out, ht2, weights) -> None:
    n = vc.ndim
    has_f = f is not None
    if USE_NUMBA and n <= 3:
        ff = f if has_f else _DUMMY.reshape((1,) * n)
        if n == 3:
            _explicit_update_3d_numba(vp, vc, inv_rho, ff, has_f, out, ht2,
                                      *weights)
        elif n == 2:
            _explicit_update_2d_numba(vp, vc, inv_rho, ff, has_f, out, ht2,
                                      *weights)
        else:
            _explicit_update_1d_numba(vp, vc, inv_rho, ff, has_f, out, ht2,
                                      *weights)
        return
    core = tuple(slice(1, -1) for _ in range(n))
    lap = _weighted_lap_numpy(vc, weights)
    if has_f:
        lap = lap + f[core]
    out[core] = 2.0 * vc[core] - vp[core] + ht2 * inv_rho[core] * lap
