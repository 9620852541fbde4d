"""Classical explicit second-order leapfrog scheme, used as the comparison
baseline.  Shares meshes, fields, problem data and the run loop with the
compact stepper so that error comparisons differ only in the stepper."""

from __future__ import annotations

import numpy as np

from .compact import Medium, RunContext, SchemeState, TensorMesh, WaveProblem
from .grid import GridField, laplacian
from .kernels import explicit_update
from .numerov import fill_boundary


def explicit_first_levels(ctx: RunContext, v0: np.ndarray, v1: np.ndarray,
                          rho_weighted_u1: bool = False) -> np.ndarray:
    """Taylor-type first step of the leapfrog scheme, into ``v1``.

    By default the initial-velocity term enters unweighted, exactly as the
    scheme is classically written; ``rho_weighted_u1`` multiplies it by the
    density instead (the two agree whenever the density is 1).
    """
    mesh = ctx.mesh
    ht = ctx.ht
    core = mesh.interior()
    rhs = 0.5 * ht * laplacian(GridField(mesh, v0), ctx.medium.a).values[core]
    u1 = GridField.sample(mesh, ctx.data.u1).values[core]
    rhs += ctx.medium.rho.values[core] * u1 if rho_weighted_u1 else u1
    if ctx.f_mode != "none":
        rhs += 0.5 * ht * ctx.sample_f(0.0)[core]
    v1[core] = v0[core] + ht * ctx.inv_rho[core] * rhs
    fill_boundary(v1, mesh, ctx.data.g, ht)
    return v1


def explicit_advance(ctx: RunContext, v_prev: np.ndarray, v_cur: np.ndarray,
                     m: int, out: np.ndarray) -> np.ndarray:
    """One leapfrog level: plain second differences in space and time."""
    t_m = m * ctx.ht
    f_cur = ctx.sample_f(t_m, out=ctx.work) if ctx.f_mode != "none" else None
    explicit_update(v_prev, v_cur, ctx.inv_rho, f_cur, out,
                    ctx.ht ** 2, ctx.weights)
    fill_boundary(out, ctx.mesh, ctx.data.g, t_m + ctx.ht)
    return out


def explicit_first_step(state0: SchemeState, data: WaveProblem,
                        medium: Medium, mesh: TensorMesh,
                        rho_weighted_u1: bool = False) -> SchemeState:
    if state0.level != 0:
        raise ValueError("first step starts from level 0")
    ctx = RunContext(data, medium, mesh)
    v1 = np.empty(mesh.shape)
    explicit_first_levels(ctx, state0.v_cur.values, v1, rho_weighted_u1)
    return SchemeState(level=1, v_cur=GridField(mesh, v1), v_prev=state0.v_cur)


def explicit_step(state: SchemeState, data: WaveProblem, medium: Medium,
                  mesh: TensorMesh) -> SchemeState:
    if state.level < 1 or state.v_prev is None:
        raise ValueError("explicit step needs two consecutive levels")
    ctx = RunContext(data, medium, mesh)
    out = np.empty(mesh.shape)
    explicit_advance(ctx, state.v_prev.values, state.v_cur.values,
                     state.level, out)
    return SchemeState(level=state.level + 1, v_cur=GridField(mesh, out),
                       v_prev=state.v_cur)
