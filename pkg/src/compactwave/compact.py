"""Three-level semi-explicit fourth-order compact stepper for the acoustic
wave equation  rho(x) u_tt - sum_k a_k^2 u_xkxk = f  with Dirichlet data.

Each step first solves the independent per-direction Numerov line systems
for the auxiliary second-derivative fields (stored only through their
weighted sum), then advances the solution by an explicit pointwise update;
no global implicit solve is involved.  The first time level is produced by
a dedicated two-level step of the same structure that needs no derivatives
of the initial data.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .backends import set_workers
from .grid import GridField, TensorMesh, laplacian
from .kernels import compact_update
from .numerov import compact_laplacian_into, fill_boundary

FIRST_STEP_VARIANTS = ("two-level", "three-level")


@dataclass
class Medium:
    """Density field (inverse squared sound speed scale) and axis speeds."""

    rho: GridField
    rho_min: float
    rho_max: float
    a: tuple[float, ...]

    def __post_init__(self):
        self.a = tuple(float(x) for x in self.a)
        if len(self.a) != self.rho.mesh.ndim:
            raise ValueError("one speed coefficient per axis required")
        if any(ak <= 0.0 for ak in self.a):
            raise ValueError("speed coefficients must be positive")
        vals = self.rho.values
        if not (0.0 < self.rho_min <= self.rho_max):
            raise ValueError("need 0 < rho_min <= rho_max")
        if vals.min() < self.rho_min - 1e-14 or vals.max() > self.rho_max + 1e-14:
            raise ValueError("density field leaves its declared bounds")

    @classmethod
    def from_function(cls, mesh: TensorMesh, fn: Callable, a: Sequence[float],
                      rho_min: float | None = None,
                      rho_max: float | None = None) -> "Medium":
        rho = GridField.sample(mesh, fn)
        lo = float(rho.values.min()) if rho_min is None else rho_min
        hi = float(rho.values.max()) if rho_max is None else rho_max
        return cls(rho, lo, hi, tuple(a))

    @classmethod
    def constant(cls, mesh: TensorMesh, value: float, a: Sequence[float]) -> "Medium":
        return cls.from_function(mesh, lambda *x: np.full((1,) * mesh.ndim, value), a)


class SeparableSource:
    """Source of the form  f(x, t) = spatial(x) * temporal(t).

    Callable like a plain space-time evaluator; the steppers recognize the
    type and sample the spatial factor only once per run.
    """

    def __init__(self, spatial: Callable, temporal: Callable):
        self.spatial = spatial
        self.temporal = temporal

    def __call__(self, *args):
        *coords, t = args
        return self.spatial(*coords) * self.temporal(t)


@dataclass
class WaveProblem:
    """Problem data as vectorized evaluators.

    ``u0``/``u1`` take node coordinate arrays; ``g``, ``f`` and each entry
    of ``gk`` additionally take the time.  ``gk[k]`` must return
    ``a_k^2`` times the boundary values of the second-derivative auxiliary
    field (its different closed forms on the faces of axis ``k`` versus the
    other faces are the caller's responsibility; the face fill gives the
    axis-``k`` faces precedence at shared edges).
    """

    u0: Callable
    u1: Callable
    g: Callable
    gk: tuple[Callable, ...]
    f: Callable | None = None

    def check_initial_boundary_compat(self, mesh: TensorMesh,
                                      tol: float = 1e-12) -> float:
        """Max mismatch between u0 and g(.,0) on the boundary nodes."""
        a = GridField.sample(mesh, self.u0).values
        b = np.zeros_like(a)
        fill_boundary(b, mesh, self.g, 0.0)
        mask = mesh.boundary_mask()
        gap = float(np.max(np.abs(a[mask] - b[mask]))) if mask.any() else 0.0
        if gap > tol:
            raise ValueError(
                f"u0 and g disagree on the boundary at t=0 (max gap {gap:.3e})")
        return gap


@dataclass
class SchemeState:
    """Two consecutive time levels; enough to advance the scheme."""

    level: int
    v_cur: GridField
    v_prev: GridField | None = None
    aux_sum: GridField | None = None


@dataclass(frozen=True)
class StabilityReport:
    """Mesh-ratio diagnostics.

    ``cfl_number`` is ``h_t^2 sum_k a_k^2/h_k^2`` divided by the density
    lower bound; ``courant_ratio`` is its square root.  The scheme runs
    stably up to ``courant_ratio < 1`` (the practical gate used by
    ``satisfied``), while the conservative theoretical bound demands
    ``cfl_number < 2/3``; ``margin_eps``/``margin_eps0`` are the largest
    margins for the two theoretical conditions (``margin_eps0`` is 0 when
    the conservative bound cannot be met).
    """

    cfl_number: float
    courant_ratio: float
    margin_eps: float
    margin_eps0: float
    satisfied: bool
    sufficient_satisfied: bool

    def as_dict(self) -> dict:
        return {
            "cfl_number": self.cfl_number,
            "courant_ratio": self.courant_ratio,
            "margin_eps": self.margin_eps,
            "margin_eps0": self.margin_eps0,
            "satisfied": self.satisfied,
            "sufficient_satisfied": self.sufficient_satisfied,
        }


def check_stability(mesh: TensorMesh, medium: Medium,
                    eps: float | None = None,
                    eps0: float | None = None) -> StabilityReport:
    """Evaluate the mesh-ratio stability conditions.

    With ``eps``/``eps0`` given (each in (0,1)), the sufficient verdict uses
    exactly those margins; otherwise the largest admissible margins are
    reported.
    """
    ht = mesh.time_step
    ratio = sum(ak ** 2 / ax.step ** 2 for ak, ax in zip(medium.a, mesh.axes))
    cfl = ht ** 2 * ratio / medium.rho_min
    max_eps = 1.0 - cfl / 3.0
    max_eps0 = math.sqrt(max(0.0, 1.0 - 1.5 * cfl))
    if eps is not None and not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if eps0 is not None and not 0.0 < eps0 < 1.0:
        raise ValueError("eps0 must lie in (0, 1)")
    use_eps = max_eps if eps is None else eps
    use_eps0 = max_eps0 if eps0 is None else eps0
    bound = min(3.0 * (1.0 - use_eps), (2.0 / 3.0) * (1.0 - use_eps0 ** 2))
    sufficient = (cfl <= bound) and max_eps > 0.0 and max_eps0 > 0.0
    return StabilityReport(
        cfl_number=cfl,
        courant_ratio=math.sqrt(cfl),
        margin_eps=max_eps,
        margin_eps0=max_eps0,
        satisfied=cfl < 1.0,
        sufficient_satisfied=sufficient,
    )


# ---------------------------------------------------------------------------
# Stepping context: precomputed data plus reusable work buffers
# ---------------------------------------------------------------------------


class RunContext:
    """Caches per-run quantities so steps allocate nothing.

    Holds the reciprocal density, the stencil weights ``a_k^2/h_k^2``,
    scratch fields for the auxiliary sum, and the sampled spatial factor of
    a :class:`SeparableSource` when the problem has one.
    """

    def __init__(self, data: WaveProblem, medium: Medium, mesh: TensorMesh):
        self.data = data
        self.medium = medium
        self.mesh = mesh
        self.ht = mesh.time_step
        self.inv_rho = 1.0 / medium.rho.values
        self.weights = tuple(ak ** 2 / ax.step ** 2
                             for ak, ax in zip(medium.a, mesh.axes))
        self.aux = np.zeros(mesh.shape)
        self.scratch = np.empty(mesh.shape)
        self.phi = np.empty(mesh.shape)
        self.work = np.empty(mesh.shape)
        f = data.f
        if f is None:
            self.f_mode = "none"
        elif isinstance(f, SeparableSource):
            self.f_mode = "separable"
            self.f_spatial = GridField.sample(mesh, f.spatial).values
            self.psi = f.temporal
        else:
            self.f_mode = "general"
            self.f_slices = [np.empty(mesh.shape) for _ in range(3)]
            self.f_levels = [None, None, None]  # time stamps of the slices

    # -- source sampling ---------------------------------------------------

    def sample_f(self, t: float, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty(self.mesh.shape)
        if self.f_mode == "separable":
            np.multiply(self.f_spatial, float(self.psi(t)), out=out)
        else:
            vals = np.asarray(self.data.f(*self.mesh.node_coords(), t),
                              dtype=np.float64)
            out[...] = vals
        return out

    def f_triple(self, m: int) -> None:
        """Refresh ``f_slices`` to levels m-1, m, m+1, reusing prior work."""
        slots = self.f_slices
        levels = self.f_levels
        if levels[1] == m - 1 and levels[2] == m:
            slots[0], slots[1], slots[2] = slots[1], slots[2], slots[0]
            levels[0], levels[1], levels[2] = m - 1, m, None
        for i, lev in enumerate((m - 1, m, m + 1)):
            if levels[i] != lev:
                self.sample_f(lev * self.ht, out=slots[i])
                levels[i] = lev

    def aux_sum(self, v: np.ndarray, t: float) -> np.ndarray:
        """Weighted sum of the per-direction Numerov derivatives of ``v``."""
        compact_laplacian_into(self.aux, self.scratch, v, self.mesh,
                               self.medium.a, self.data.gk, t)
        return self.aux


def _first_levels(ctx: RunContext, v0: np.ndarray, v1: np.ndarray,
                  variant: str) -> np.ndarray:
    """Compute level 1 into ``v1`` from the sampled initial level ``v0``."""
    if variant not in FIRST_STEP_VARIANTS:
        raise ValueError(f"unknown first-step variant {variant!r}")
    mesh, medium, data = ctx.mesh, ctx.medium, ctx.data
    ht = ctx.ht
    core = mesh.interior()

    aux0 = ctx.aux_sum(v0, 0.0)

    u1 = GridField.sample(mesh, data.u1)
    u1_star = medium.rho.values[core] * u1.values[core] \
        + (ht ** 2 / 6.0) * laplacian(u1, medium.a).values[core]

    if ctx.f_mode != "none":
        f0 = ctx.sample_f(0.0)
        if variant == "two-level":
            f_avg = f0 / 3.0 + (2.0 / 3.0) * ctx.sample_f(0.5 * ht)
        else:
            f_avg = (7.0 / 12.0) * f0 + 0.5 * ctx.sample_f(ht) \
                - (1.0 / 12.0) * ctx.sample_f(2.0 * ht)
        phi0 = (aux0 + f0) * ctx.inv_rho
        braces = aux0[core] + f_avg[core]
    else:
        phi0 = aux0 * ctx.inv_rho
        braces = aux0[core].copy()
    braces += (ht ** 2 / 12.0) * laplacian(GridField(mesh, phi0),
                                           medium.a).values[core]

    v1[core] = v0[core] + ht * ctx.inv_rho[core] * (0.5 * ht * braces + u1_star)
    fill_boundary(v1, mesh, data.g, ht)
    return v1


def _advance(ctx: RunContext, v_prev: np.ndarray, v_cur: np.ndarray,
             m: int, out: np.ndarray) -> np.ndarray:
    """Compute level m+1 into ``out`` from levels m-1, m."""
    mesh = ctx.mesh
    ht = ctx.ht
    t_m = m * ht
    aux = ctx.aux_sum(v_cur, t_m)
    phi = ctx.phi
    ltf = None
    if ctx.f_mode == "separable":
        psi_m = float(ctx.psi(t_m))
        np.multiply(ctx.f_spatial, psi_m, out=ctx.work)
        np.add(aux, ctx.work, out=phi)
        phi *= ctx.inv_rho
        dd_psi = (float(ctx.psi(t_m + ht)) - 2.0 * psi_m
                  + float(ctx.psi(t_m - ht))) / ht ** 2
        if dd_psi != 0.0:
            np.multiply(ctx.f_spatial, dd_psi, out=ctx.work)
            ltf = ctx.work
    elif ctx.f_mode == "general":
        ctx.f_triple(m)
        f_prev, f_cur, f_next = ctx.f_slices
        np.add(aux, f_cur, out=phi)
        phi *= ctx.inv_rho
        ltf = ctx.work
        np.add(f_next, f_prev, out=ltf)
        ltf -= f_cur
        ltf -= f_cur
        ltf /= ht ** 2
    else:
        np.multiply(aux, ctx.inv_rho, out=phi)
    compact_update(v_prev, v_cur, phi, ctx.inv_rho, ltf, out,
                   ht ** 2, ht ** 4 / 12.0, ctx.weights)
    fill_boundary(out, mesh, ctx.data.g, t_m + ht)
    return out


# ---------------------------------------------------------------------------
# Public single-step API
# ---------------------------------------------------------------------------


def first_step(state0: SchemeState, data: WaveProblem, medium: Medium,
               mesh: TensorMesh, variant: str = "two-level") -> SchemeState:
    """Advance from the initial level to level 1.

    The source average over the first interval uses either the half-step
    value (``two-level``, the default) or the (7, 6, -1)/12 combination of
    the first three levels (``three-level``).
    """
    if state0.level != 0:
        raise ValueError("first step starts from level 0")
    ctx = RunContext(data, medium, mesh)
    v1 = np.empty(mesh.shape)
    _first_levels(ctx, state0.v_cur.values, v1, variant)
    return SchemeState(level=1, v_cur=GridField(mesh, v1),
                       v_prev=state0.v_cur,
                       aux_sum=GridField(mesh, ctx.aux.copy()))


def main_step(state: SchemeState, data: WaveProblem, medium: Medium,
              mesh: TensorMesh) -> SchemeState:
    """Advance one interior time level (level m >= 1 to m+1)."""
    if state.level < 1 or state.v_prev is None:
        raise ValueError("main step needs two consecutive levels")
    ctx = RunContext(data, medium, mesh)
    out = np.empty(mesh.shape)
    _advance(ctx, state.v_prev.values, state.v_cur.values, state.level, out)
    return SchemeState(level=state.level + 1, v_cur=GridField(mesh, out),
                       v_prev=state.v_cur,
                       aux_sum=GridField(mesh, ctx.aux.copy()))


# ---------------------------------------------------------------------------
# Run loop
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    state: SchemeState
    stability: StabilityReport
    scheme: str
    first_step_variant: str
    workers: int
    step_seconds: float
    observer_seconds: float = 0.0
    observations: dict = field(default_factory=dict)


def run(data: WaveProblem, medium: Medium, mesh: TensorMesh,
        scheme: str = "compact", first_step_variant: str = "two-level",
        observers: Iterable[Callable] = (), workers: int | None = None,
        check_compat: bool = True,
        explicit_first_step_rho_weight: bool = False) -> RunResult:
    """Drive a full simulation: one first step plus M-1 main steps.

    Observers are called as ``obs(level, t, state)`` after every published
    level (including level 0); the state they receive is read-only and its
    buffers are recycled afterwards, so they must copy anything they keep.
    Stepping wall time excludes observer time.
    """
    if scheme not in ("compact", "explicit"):
        raise ValueError(f"unknown scheme {scheme!r}")
    from . import explicit as _explicit

    n_workers = set_workers(workers)
    report = check_stability(mesh, medium)
    if not report.satisfied:
        warnings.warn(
            f"mesh ratio {report.courant_ratio:.3f} >= 1: stepping is "
            "expected to be unstable", RuntimeWarning, stacklevel=2)
    if check_compat:
        data.check_initial_boundary_compat(mesh)

    observers = tuple(observers)
    obs_seconds = 0.0

    def _notify(level: int, v_cur: np.ndarray, v_prev: np.ndarray | None) -> None:
        nonlocal obs_seconds
        if not observers:
            return
        t0 = time.perf_counter()
        state = SchemeState(
            level=level, v_cur=GridField(mesh, v_cur),
            v_prev=None if v_prev is None else GridField(mesh, v_prev))
        v_cur.flags.writeable = False
        try:
            for obs in observers:
                obs(level, level * mesh.time_step, state)
        finally:
            v_cur.flags.writeable = True
            obs_seconds += time.perf_counter() - t0

    t_start = time.perf_counter()
    ctx = RunContext(data, medium, mesh)
    v_prev = GridField.sample(mesh, data.u0).values
    v_cur = np.empty(mesh.shape)
    v_next = np.empty(mesh.shape)
    _notify(0, v_prev, None)
    if scheme == "compact":
        _first_levels(ctx, v_prev, v_cur, first_step_variant)
        advance = lambda m: _advance(ctx, v_prev, v_cur, m, v_next)  # noqa: E731
    else:
        _explicit.explicit_first_levels(
            ctx, v_prev, v_cur, rho_weighted_u1=explicit_first_step_rho_weight)
        advance = lambda m: _explicit.explicit_advance(  # noqa: E731
            ctx, v_prev, v_cur, m, v_next)
    _notify(1, v_cur, v_prev)
    for m in range(1, mesh.time_steps):
        advance(m)
        v_prev, v_cur, v_next = v_cur, v_next, v_prev
        _notify(m + 1, v_cur, v_prev)
    seconds = time.perf_counter() - t_start - obs_seconds
    state = SchemeState(level=mesh.time_steps, v_cur=GridField(mesh, v_cur),
                        v_prev=GridField(mesh, v_prev))
    return RunResult(state=state, stability=report, scheme=scheme,
                     first_step_variant=first_step_variant, workers=n_workers,
                     step_seconds=seconds, observer_seconds=obs_seconds)
