"""Exact solutions and scenario definitions for the verification studies.

Three families:

* a smooth travelling plane wave on the unit cube, with constant or
  variable density (the forcing for variable density is derived from the
  equation residual, since the wave itself is density-independent);
* spherically symmetric fields with piecewise-polynomial radial data on a
  centred cube, whose exact solution is the odd-extension d'Alembert
  representation; the arising integrals of piecewise polynomials are
  evaluated in closed form;
* a three-layer medium excited by a space-smoothed oscillatory source pulse
  (no closed-form solution; verified by self-convergence).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .compact import Medium, SeparableSource, WaveProblem
from .grid import GridField, TensorMesh, make_mesh

# ---------------------------------------------------------------------------
# Radial profiles with finite support
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    """Piecewise-polynomial radial bump supported on [0, r0].

    ``kind`` is one of ``step`` (indicator of the ball), ``ramp`` (linear
    decay to the support radius) or ``bump`` (quartic, one vanishing
    derivative at both ends).  ``smoothness_order`` is the fractional
    smoothness scale governing convergence rates of schemes fed with the
    profile.
    """

    kind: str
    r0: float

    _POLYS = {
        # coefficients of w(s) on [0, r0] in powers of s/r0
        "step": (1.0,),
        "ramp": (1.0, -1.0),
        "bump": (0.0, 0.0, 1.0, -2.0, 1.0),
    }
    _ORDERS = {"step": 0.5, "ramp": 1.5, "bump": 2.5}

    def __post_init__(self):
        if self.kind not in self._POLYS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.r0 <= 0.0:
            raise ValueError("support radius must be positive")

    @property
    def smoothness_order(self) -> float:
        return self._ORDERS[self.kind]

    def poly(self) -> Polynomial:
        """w as a polynomial in s, valid on [0, r0]."""
        c = np.array(self._POLYS[self.kind], dtype=float)
        scale = self.r0 ** -np.arange(len(c))
        return Polynomial(c * scale)

    def __call__(self, s):
        """Profile values; ``s`` is a radius (array), clipped outside.

        Evaluated in factored form so the endpoint zeros are exact.
        """
        s = np.asarray(s, dtype=float)
        if self.kind == "step":
            return np.where(s < self.r0, 1.0, 0.0)
        if self.kind == "ramp":
            return np.where(s <= self.r0, (self.r0 - s) / self.r0, 0.0)
        q = s / self.r0
        return np.where(s <= self.r0, (q * (1.0 - q)) ** 2, 0.0)


class RadialWaveSolution:
    """Closed-form spherically symmetric solution of the constant-speed wave
    equation with finite-support radial data.

    Obtained by odd reflection of ``r*u`` onto the whole line and the 1D
    travelling-wave representation; the moment integrals of the data are
    piecewise polynomials, integrated here in closed form.  Near the centre
    the formula's removable 0/0 is replaced by its analytic limit.
    """

    CENTER_CUTOFF = 1e-6  # in units of r0

    def __init__(self, speed: float,
                 u0: RadialProfile | None = None,
                 u1: RadialProfile | None = None,
                 f: RadialProfile | None = None):
        if speed <= 0.0:
            raise ValueError("speed must be positive")
        self.speed = speed
        self.u0 = u0
        self.u1 = u1
        self.f = f
        radii = [p.r0 for p in (u0, u1, f) if p is not None]
        if not radii:
            raise ValueError("no data given")
        self.r0 = max(radii)
        if u0 is not None:
            # odd moment q*w(|q|) and its derivative
            self._p0 = u0.poly() * Polynomial([0.0, 1.0])
            self._dp0 = self._p0.deriv()
        if u1 is not None:
            self._f1 = (u1.poly() * Polynomial([0.0, 1.0])).integ()
            self._f1_end = float(self._f1(u1.r0))
        if f is not None:
            self._ff = (f.poly() * Polynomial([0.0, 1.0])).integ()
            self._ff_end = float(self._ff(f.r0))
            self._hf = self._ff.integ()
            self._hf_end = float(self._hf(f.r0))

    # -- signed piecewise evaluations --------------------------------------

    def _odd_moment(self, q, prof, poly):
        s = np.abs(q)
        return np.where(s <= prof.r0, np.sign(q) * poly(s), 0.0)

    def _even_first_integral(self, q, prof, poly, end):
        s = np.abs(q)
        return np.where(s <= prof.r0, poly(s), end)

    def _odd_second_integral(self, q):
        s = np.abs(q)
        prof = self.f
        tail = self._hf_end + self._ff_end * (s - prof.r0)
        return np.sign(q) * np.where(s <= prof.r0, self._hf(s), tail)

    # -- the solution -------------------------------------------------------

    def __call__(self, r, t):
        r = np.asarray(r, dtype=float)
        t = float(t)
        a = self.speed
        at = a * t
        out = np.zeros(np.broadcast_shapes(r.shape, ()), dtype=float)
        near = r < self.CENTER_CUTOFF * self.r0
        far = ~near
        rf = np.where(far, r, 1.0)  # avoid 0-division; masked out below

        if self.u0 is not None:
            term = (self._odd_moment(rf - at, self.u0, self._p0)
                    + self._odd_moment(rf + at, self.u0, self._p0)) / (2.0 * rf)
            lim = self._dp0(at) if at <= self.u0.r0 else 0.0
            out += np.where(far, term, lim)
        if self.u1 is not None:
            term = (self._even_first_integral(rf + at, self.u1, self._f1, self._f1_end)
                    - self._even_first_integral(rf - at, self.u1, self._f1, self._f1_end)
                    ) / (2.0 * a * rf)
            lim = t * float(self.u1(np.asarray(at)))
            out += np.where(far, term, lim)
        if self.f is not None:
            term = (self._odd_second_integral(rf + at)
                    + self._odd_second_integral(rf - at)
                    - 2.0 * self._odd_second_integral(rf)) / (2.0 * a ** 2 * rf)
            # outside the influence cone the three tail terms cancel only up
            # to round-off; make the zero exact there
            term = np.where(rf - at >= self.f.r0, 0.0, term)
            lim = self._even_first_integral(np.asarray(at), self.f, self._ff,
                                            self._ff_end) / a ** 2
            out += np.where(far, term, lim)
        return out


# ---------------------------------------------------------------------------
# Travelling plane wave (smooth)
# ---------------------------------------------------------------------------


def travelling_wave(x, y, z, t):
    """Smooth plane wave moving along the cube diagonal at unit total speed."""
    return np.cos(t - x - y - z)


def travelling_wave_density(x, y, z):
    return (1.0 + np.sin(2 * np.pi * x) ** 2 * np.sin(2 * np.pi * y) ** 2
            * np.sin(2 * np.pi * z) ** 2)


def travelling_wave_forcing(x, y, z, t):
    """Forcing that makes the plane wave solve the variable-density equation.

    The wave satisfies the unit-density equation exactly, so the residual
    against density ``rho`` is ``(rho - 1) u_tt = (1 - rho) u``-cosine.
    """
    return (1.0 - travelling_wave_density(x, y, z)) * np.cos(t - x - y - z)


# ---------------------------------------------------------------------------
# Layered medium and the oscillatory smoothed point source
# ---------------------------------------------------------------------------

LAYER_BOUNDS = (1.0, 2.0)
LAYER_DENSITIES = (4.0 / 9.0, 1.0, 1.0 / 9.0)


def layered_density(x):
    """Piecewise-constant density of the three-layer medium.

    Layers own their left endpoint: x in [0,1) -> 4/9, [1,2) -> 1, [2,3] -> 1/9,
    which gives sound speeds 1.5, 1 and 3 for unit axis coefficients.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 3.0):
        raise ValueError("layered medium is defined on [0, 3]")
    return np.where(x < LAYER_BOUNDS[0], LAYER_DENSITIES[0],
                    np.where(x < LAYER_BOUNDS[1], LAYER_DENSITIES[1],
                             LAYER_DENSITIES[2]))


def ricker_time_signature(t):
    """Oscillatory, rapidly decaying source time signature."""
    t = np.asarray(t, dtype=float)
    return np.sin(50.0 * t) * np.exp(-200.0 * t ** 2)


def ricker_space_bump(gamma: float, center, normalized: bool = False) -> Callable:
    """Gaussian spatial smoothing bump of width ``1/sqrt(gamma)``.

    The default amplitude ``(pi/gamma)^{3/2}`` follows the source as
    printed; ``normalized=True`` switches to ``(gamma/pi)^{3/2}`` so that
    the bump integrates to 1 over space (see
    :func:`ricker_space_integral` for the measured integral of either
    variant).
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    amp = (gamma / np.pi) ** 1.5 if normalized else (np.pi / gamma) ** 1.5
    cx = tuple(float(c) for c in center)

    def phi(*coords):
        r2 = sum((q - c) ** 2 for q, c in zip(coords, cx))
        return amp * np.exp(-gamma * r2)

    return phi


def ricker_source(gamma: float, center, normalized: bool = False) -> SeparableSource:
    return SeparableSource(ricker_space_bump(gamma, center, normalized),
                           ricker_time_signature)


def ricker_space_integral(gamma: float, normalized: bool = False,
                          n_points: int = 200001) -> float:
    """Measured space integral of the bump (radial trapezoid quadrature)."""
    amp = (gamma / np.pi) ** 1.5 if normalized else (np.pi / gamma) ** 1.5
    r_max = 12.0 / np.sqrt(gamma)
    r = np.linspace(0.0, r_max, n_points)
    integrand = 4.0 * np.pi * r ** 2 * amp * np.exp(-gamma * r ** 2)
    return float(np.trapezoid(integrand, r))


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def _zeros(*coords):
    return np.zeros((1,) * len(coords))


def _zeros_t(*args):
    return np.zeros((1,) * (len(args) - 1))


@dataclass(frozen=True)
class Scenario:
    """A named, fully parameterized verification problem."""

    name: str
    description: str
    extent: float
    origin: float
    default_time: float
    a: tuple[float, float, float]
    ladder: tuple[tuple[int, int], ...]
    refine_q: Fraction
    lambda_order: float | None  # data smoothness order; None means smooth
    has_exact: bool
    _make: Callable = None
    _exact: Callable = None

    @property
    def ndim(self) -> int:
        return 3

    def mesh(self, N: int, M: int, T: float | None = None) -> TensorMesh:
        T = self.default_time if T is None else T
        return make_mesh([self.extent] * 3, N, T, M, origins=[self.origin] * 3)

    def build(self, N: int, M: int, T: float | None = None,
              **options) -> tuple[TensorMesh, Medium, WaveProblem]:
        mesh = self.mesh(N, M, T)
        medium, problem = self._make(mesh, **options)
        return mesh, medium, problem

    def exact_sampler(self, mesh: TensorMesh) -> Callable[[float], GridField]:
        """Returns ``t -> GridField`` of the exact solution on ``mesh``."""
        if not self.has_exact:
            raise ValueError(f"scenario {self.name!r} has no exact solution")
        return self._exact(mesh)

    def to_config(self) -> dict:
        N, M = self.ladder[0]
        return {
            "scenario": self.name,
            "N": N,
            "M": M,
            "T": self.default_time,
            "scheme": "compact",
            "first_step": "two-level",
        }


_SQ3 = float(np.sqrt(1.0 / 3.0))
_EX12_LADDER = ((81, 27), (135, 45), (225, 75), (375, 125))


def _make_travelling(variable_rho: bool):
    def make(mesh, **_):
        a = (_SQ3, _SQ3, _SQ3)
        if variable_rho:
            medium = Medium.from_function(mesh, travelling_wave_density, a,
                                          rho_min=1.0, rho_max=2.0)
            f = travelling_wave_forcing
        else:
            medium = Medium.constant(mesh, 1.0, a)
            f = None

        def gk(x, y, z, t):
            # exact second derivative times a_k^2, valid on every face
            return (-1.0 / 3.0) * np.cos(t - x - y - z)

        problem = WaveProblem(
            u0=lambda x, y, z: np.cos(-x - y - z),
            u1=lambda x, y, z: -np.sin(-x - y - z),
            g=travelling_wave,
            gk=(gk, gk, gk),
            f=f,
        )
        return medium, problem

    return make


def _exact_travelling(mesh):
    coords = mesh.node_coords()

    def at(t: float) -> GridField:
        return GridField(mesh, np.broadcast_to(
            travelling_wave(*coords, t), mesh.shape).copy())

    return at


def _make_radial(slot: str, kind: str, r0: float = 0.2):
    profile = RadialProfile(kind, r0)

    def radial_eval(x, y, z):
        r = np.sqrt(x ** 2 + y ** 2 + z ** 2)
        return profile(r)

    def make(mesh, **_):
        a = (_SQ3, _SQ3, _SQ3)
        medium = Medium.constant(mesh, 1.0, a)
        u0 = radial_eval if slot == "u0" else _zeros
        u1 = radial_eval if slot == "u1" else _zeros
        f = None
        if slot == "f":
            f = SeparableSource(radial_eval, lambda t: 1.0)
        # data vanish near the boundary, so all boundary values are zero
        problem = WaveProblem(u0=u0, u1=u1, g=_zeros_t,
                              gk=(_zeros_t,) * 3, f=f)
        return medium, problem

    return make


def _exact_radial(slot: str, kind: str, r0: float = 0.2):
    profile = RadialProfile(kind, r0)
    sol = RadialWaveSolution(_SQ3, **{slot: profile})

    def sampler(mesh):
        coords = mesh.node_coords()
        r = np.sqrt(sum(np.broadcast_to(c, mesh.shape) ** 2 for c in coords))

        def at(t: float) -> GridField:
            return GridField(mesh, sol(r, t))

        return at

    return sampler


RICKER_GAMMA = 1.0e4
RICKER_CENTER = (1.5, 1.5, 1.5)


def _make_layered(mesh, ricker_normalized: bool = False, **_):
    a = (1.0, 1.0, 1.0)
    medium = Medium.from_function(
        mesh, lambda x, y, z: layered_density(x) + 0.0 * (y + z), a,
        rho_min=min(LAYER_DENSITIES), rho_max=max(LAYER_DENSITIES))
    f = ricker_source(RICKER_GAMMA, RICKER_CENTER, ricker_normalized)

    # homogeneous Dirichlet data: the auxiliary boundary value is minus the
    # source on the faces of the solved direction and zero on the others
    def make_gk(axis):
        def fn(x, y, z, t):
            c = (x, y, z)[axis]
            own = (c == 0.0) | (c == 3.0)
            return np.where(own, -f(x, y, z, t), 0.0)

        return fn

    problem = WaveProblem(u0=_zeros, u1=_zeros, g=_zeros_t,
                          gk=tuple(make_gk(k) for k in range(3)), f=f)
    return medium, problem


def scenario_catalog() -> dict[str, Scenario]:
    """All named verification scenarios, keyed by name."""
    scenarios = [
        Scenario(
            name="travelling-wave",
            description="smooth diagonal plane wave, unit density",
            extent=1.0, origin=0.0, default_time=0.3,
            a=(_SQ3,) * 3, ladder=_EX12_LADDER, refine_q=Fraction(5, 3),
            lambda_order=None, has_exact=True,
            _make=_make_travelling(False), _exact=_exact_travelling,
        ),
        Scenario(
            name="travelling-wave-varrho",
            description="smooth diagonal plane wave, oscillatory density",
            extent=1.0, origin=0.0, default_time=0.3,
            a=(_SQ3,) * 3, ladder=_EX12_LADDER, refine_q=Fraction(5, 3),
            lambda_order=None, has_exact=True,
            _make=_make_travelling(True), _exact=_exact_travelling,
        ),
    ]
    radial_cases = [
        ("radial-u0-ramp", "u0", "ramp", "displacement ramp bump"),
        ("radial-u0-bump", "u0", "bump", "displacement quartic bump"),
        ("radial-u1-step", "u1", "step", "velocity step bump"),
        ("radial-u1-ramp", "u1", "ramp", "velocity ramp bump"),
        ("radial-f-step", "f", "step", "forcing step bump"),
        ("radial-f-ramp", "f", "ramp", "forcing ramp bump"),
    ]
    slot_shift = {"u0": 0.0, "u1": 1.0, "f": 2.0}
    for name, slot, kind, desc in radial_cases:
        prof = RadialProfile(kind, 0.2)
        scenarios.append(Scenario(
            name=name,
            description=f"spherical pulse from a {desc} (nonsmooth data)",
            extent=1.0, origin=-0.5, default_time=0.3,
            a=(_SQ3,) * 3, ladder=_EX12_LADDER, refine_q=Fraction(5, 3),
            lambda_order=prof.smoothness_order + slot_shift[slot],
            has_exact=True,
            _make=_make_radial(slot, kind), _exact=_exact_radial(slot, kind),
        ))
    scenarios.append(Scenario(
        name="layered-ricker",
        description="three-layer medium excited by a smoothed oscillatory pulse",
        extent=3.0, origin=0.0, default_time=0.8,
        a=(1.0, 1.0, 1.0),
        ladder=((100, 140), (200, 280), (400, 560)), refine_q=Fraction(2),
        lambda_order=None, has_exact=False,
        _make=_make_layered, _exact=None,
    ))
    return {s.name: s for s in scenarios}


def get_scenario(name: str) -> Scenario:
    cat = scenario_catalog()
    if name not in cat:
        known = ", ".join(sorted(cat))
        raise KeyError(f"unknown scenario {name!r}; known: {known}")
    return cat[name]
