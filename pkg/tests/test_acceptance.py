"""Acceptance suite: every criterion runs at its stated tolerance and prints
one PASS/FAIL line.  Reference error values and rates are pinned for the
tabulated mesh sizes; heavy runs are shared across criteria via a cache.

Two checks are expected to fail against their pinned references; the
analysis lives in the repository notes, and the checks are kept faithful
rather than loosened:

* the step-forcing spot check (no reference row for that case is
  reproducible from the stated data, while the same machinery reproduces
  every other case to print precision);
* the layered-medium slice agreement at N=100 vs 200 (the source bump is
  narrower than a cell at both resolutions, so its discrete mass differs
  between the grids by design of the sampling).
"""

import hashlib
from fractions import Fraction

import numpy as np
import pytest

from compactwave.backends import max_workers, set_workers
from compactwave.compact import (Medium, WaveProblem, check_stability, run)
from compactwave.grid import GridField, make_mesh, norm_l2
from compactwave.harness import (ErrorSeriesObserver, SnapshotObserver,
                                 convergence_study, measure_errors,
                                 runge_rate, theoretical_rate,
                                 write_timeseries_csv)
from compactwave.numerov import solve_direction
from compactwave.oracles import (RadialProfile, RadialWaveSolution,
                                 get_scenario)
from dense_reference import (dense_interior_laplacian,
                             dense_interior_numerov_laplacian,
                             numerov_average_matrix,
                             second_difference_matrix)
from test_oracles import CASES, quadrature_reference

SQ3 = float(np.sqrt(1.0 / 3.0))
RUNGS = ((81, 27), (135, 45))

# pinned reference errors (e_L2, e_H1, e_E) per scenario/scheme/mesh
REF_ERRORS = {
    ("travelling-wave", "compact"): {
        (81, 27): (2.434899e-11, 1.618170e-10, 1.166171e-10),
        (135, 45): (3.186161e-12, 2.119400e-11, 1.528949e-11),
    },
    ("travelling-wave-varrho", "compact"): {
        (81, 27): (2.083224e-11, 1.405375e-10, 1.035755e-10),
        (135, 45): (2.725370e-12, 1.845130e-11, 1.361021e-11),
    },
    ("radial-u0-ramp", "compact"): {
        (81, 27): (4.444064e-4, 8.412731e-2, 7.300600e-2),
        (135, 45): (2.308279e-4, 7.058185e-2, 6.029682e-2),
    },
    ("radial-u0-ramp", "explicit"): {
        (81, 27): (9.032524e-4, 1.316278e-1, 1.104166e-1),
        (135, 45): (5.365153e-4, 1.168099e-1, 9.645128e-2),
    },
    ("radial-u0-bump", "compact"): {
        (81, 27): (1.801824e-5, 3.162480e-3, 2.714343e-3),
        (135, 45): (6.263696e-6, 1.740913e-3, 1.519010e-3),
    },
}

_CACHE: dict = {}


def study(name: str, scheme: str = "compact", rungs=RUNGS):
    """Cached two-rung refinement study; returns the list of error triples."""
    key = (name, scheme, rungs)
    if key not in _CACHE:
        scn = get_scenario(name)
        triples = []
        for N, M in rungs:
            mesh, medium, problem = scn.build(N, M)
            result = run(problem, medium, mesh, scheme=scheme)
            triples.append(measure_errors(result.state,
                                          scn.exact_sampler(mesh), mesh,
                                          medium.a))
        _CACHE[key] = triples
    return _CACHE[key]


def report(name: str, checks) -> None:
    """Print one acceptance line; checks is [(label, ok, detail), ...]."""
    ok = all(c[1] for c in checks)
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}")
    for label, good, detail in checks:
        print(f"    [{'ok' if good else 'FAIL'}] {label}: {detail}")
    assert ok, f"{name}: " + "; ".join(
        f"{label}: {detail}" for label, good, detail in checks if not good)


def rel_dev(value: float, ref: float) -> float:
    return abs(value - ref) / abs(ref)


def error_checks(name, scheme, tol=0.05):
    triples = study(name, scheme)
    refs = REF_ERRORS[(name, scheme)]
    checks = []
    for (N, M), triple in zip(RUNGS, triples):
        for label, got, ref in zip(("e_L2", "e_H1", "e_E"),
                                   triple.as_tuple(), refs[(N, M)]):
            dev = rel_dev(got, ref)
            checks.append((f"{scheme} {label}({N},{M})", dev <= tol,
                           f"{got:.6e} vs {ref:.6e} ({dev:.2%})"))
    return checks, triples


def rate_of(triples, component: int) -> float:
    pick = {0: "e_l2", 1: "e_h1", 2: "e_energy"}[component]
    return runge_rate(getattr(triples[0], pick), getattr(triples[1], pick),
                      5.0 / 3.0)


class TestTableReproduction:
    def test_c1_smooth_wave(self):
        checks, triples = error_checks("travelling-wave", "compact")
        rate = rate_of(triples, 0)
        checks.append(("L2 rate", abs(rate - 3.981) <= 0.03,
                       f"{rate:.3f} vs 3.981 +- 0.03"))
        report("C1 smooth travelling wave", checks)

    def test_c2_variable_density(self):
        checks, triples = error_checks("travelling-wave-varrho", "compact")
        for comp, ref in zip(range(3), (3.982, 3.974, 3.973)):
            rate = rate_of(triples, comp)
            checks.append((f"rate[{comp}]", abs(rate - ref) <= 0.03,
                           f"{rate:.3f} vs {ref} +- 0.03"))
        report("C2 variable density", checks)

    def test_c3_ramp_displacement_scheme_comparison(self):
        checks, compact_triples = error_checks("radial-u0-ramp", "compact")
        more, explicit_triples = error_checks("radial-u0-ramp", "explicit")
        checks += more
        p_c = rate_of(compact_triples, 0)
        p_e = rate_of(explicit_triples, 0)
        checks.append(("compact L2 rate", abs(p_c - 1.282) <= 0.1,
                       f"{p_c:.3f} vs 1.282 +- 0.1"))
        checks.append(("explicit L2 rate", abs(p_e - 1.020) <= 0.1,
                       f"{p_e:.3f} vs 1.020 +- 0.1"))
        for (N, M), tc, te in zip(RUNGS, compact_triples, explicit_triples):
            better = all(c < e for c, e in zip(tc.as_tuple(), te.as_tuple()))
            checks.append((f"compact beats explicit at ({N},{M})", better,
                           f"{tc.as_tuple()} < {te.as_tuple()}"))
        report("C3 ramp displacement, scheme comparison", checks)

    def test_c4_bump_displacement(self):
        checks, triples = error_checks("radial-u0-bump", "compact")
        rate = rate_of(triples, 0)
        checks.append(("compact L2 rate", abs(rate - 2.068) <= 0.1,
                       f"{rate:.3f} vs 2.068 +- 0.1"))
        lam = get_scenario("radial-u0-bump").lambda_order
        th4 = tuple(theoretical_rate(4, lam, n) for n in ("l2", "h1", "energy"))
        th2 = tuple(theoretical_rate(2, lam, n) for n in ("l2", "h1", "energy"))
        ok4 = th4 == (Fraction(2), Fraction(6, 5), Fraction(6, 5))
        ok2 = th2 == (Fraction(5, 3), Fraction(1), Fraction(1))
        disp2 = tuple(format(float(v), ".3f") for v in th2)
        checks.append(("expected-rate row k=4", ok4, f"{th4}"))
        checks.append(("expected-rate row k=2",
                       ok2 and disp2 == ("1.667", "1.000", "1.000"),
                       f"{th2} shown as {disp2}"))
        report("C4 bump displacement", checks)

    def test_c5_remaining_spot_checks(self):
        # one pinned error value and one pinned rate per remaining case
        spots = [
            ("radial-u1-step", "e_l2", 0, 2.173270e-4, 0.968),
            ("radial-u1-ramp", "e_l2", 0, 3.486452e-6, 2.085),
            ("radial-f-step", "e_h1", 1, 8.346416e-4, 1.371),
            ("radial-f-ramp", "e_h1", 1, 5.459770e-6, 2.111),
        ]
        checks = []
        for name, attr, comp, ref_err, ref_rate in spots:
            triples = study(name, "compact")
            got = getattr(triples[0], attr)
            dev = rel_dev(got, ref_err)
            rate = rate_of(triples, comp)
            checks.append((f"{name} {attr}(81,27)", dev <= 0.05,
                           f"{got:.6e} vs {ref_err:.6e} ({dev:.2%})"))
            checks.append((f"{name} rate", abs(rate - ref_rate) <= 0.1,
                           f"{rate:.3f} vs {ref_rate} +- 0.1"))
        report("C5 remaining spot checks", checks)

    def test_error_ordering_invariant(self):
        # every produced triple obeys e_L2 < e_E < e_H1
        checks = []
        for key, triples in list(_CACHE.items()):
            if not isinstance(key, tuple) or len(key) != 3:
                continue
            for (N, M), t in zip(key[2], triples):
                ok = t.e_l2 < t.e_energy < t.e_h1
                checks.append((f"{key[0]}/{key[1]}({N},{M})", ok,
                               f"{t.e_l2:.3e} < {t.e_energy:.3e} < {t.e_h1:.3e}"))
        assert checks, "table studies must run before the ordering check"
        report("error-norm ordering", checks)


class TestPolynomialExactness:
    @staticmethod
    def _constant(val):
        def fn(*coords):
            return np.full((1,) * len(coords), val)
        return fn

    @staticmethod
    def _constant_t(val):
        def fn(*args):
            return np.full((1,) * (len(args) - 1), val)
        return fn

    def test_c6_polynomial_solutions(self):
        a = 0.6
        mesh = make_mesh([1.0, 1.2], [9, 8], 0.5, 50)
        medium = Medium.constant(mesh, 1.0, (a, a))
        x = mesh.node_coords()[0]
        cases = {
            "constant": (WaveProblem(
                u0=self._constant(2.0), u1=self._constant(0.0),
                g=self._constant_t(2.0), gk=(self._constant_t(0.0),) * 2),
                lambda T: np.full(mesh.shape, 2.0)),
            "linear-in-time": (WaveProblem(
                u0=self._constant(0.0), u1=self._constant(1.0),
                g=lambda x, y, t: np.full((1, 1), t),
                gk=(self._constant_t(0.0),) * 2),
                lambda T: np.full(mesh.shape, T)),
            "quadratic-in-time": (WaveProblem(
                u0=self._constant(0.0), u1=self._constant(0.0),
                g=lambda x, y, t: np.full((1, 1), t * t),
                gk=(self._constant_t(0.0),) * 2, f=self._constant_t(2.0)),
                lambda T: np.full(mesh.shape, T * T)),
            "linear-in-space": (WaveProblem(
                u0=lambda x, y: x + 0.0 * y, u1=self._constant(0.0),
                g=lambda x, y, t: x + 0.0 * (y + t),
                gk=(self._constant_t(0.0),) * 2),
                lambda T: np.broadcast_to(x, mesh.shape)),
            "stationary-quadratic": (WaveProblem(
                u0=lambda x, y: x ** 2 + 0.0 * y, u1=self._constant(0.0),
                g=lambda x, y, t: x ** 2 + 0.0 * (y + t),
                gk=(lambda x, y, t: np.full(
                    np.broadcast_shapes(np.shape(x), np.shape(y)),
                    2.0 * a ** 2),
                    self._constant_t(0.0)),
                f=self._constant_t(-2.0 * a ** 2)),
                lambda T: np.broadcast_to(x ** 2, mesh.shape)),
        }
        checks = []
        for scheme in ("compact", "explicit"):
            for label, (prob, exact) in cases.items():
                res = run(prob, medium, mesh, scheme=scheme)
                gap = float(np.max(np.abs(res.state.v_cur.values
                                          - exact(mesh.time_extent))))
                checks.append((f"{scheme} {label}", gap <= 1e-11,
                               f"max gap {gap:.2e}"))
        # zero data must give the zero solution exactly
        zero = WaveProblem(u0=self._constant(0.0), u1=self._constant(0.0),
                           g=self._constant_t(0.0),
                           gk=(self._constant_t(0.0),) * 2,
                           f=self._constant_t(0.0))
        for scheme in ("compact", "explicit"):
            res = run(zero, medium, mesh, scheme=scheme)
            exact_zero = bool(np.all(res.state.v_cur.values == 0.0))
            checks.append((f"{scheme} zero data", exact_zero, "identically 0"))
        report("C6 polynomial exactness", checks)


class TestOperatorProperties:
    def test_c7_operator_suite(self):
        checks = []
        for N, X in ((8, 1.0), (16, 1.3), (32, 1.0)):
            h = X / N
            eig = np.linalg.eigvalsh(-second_difference_matrix(N + 1, h)[1:-1, 1:-1])
            ok = np.all(eig > 4.0 / X ** 2) and np.all(eig < 4.0 / h ** 2)
            checks.append((f"second-difference spectrum N={N}", bool(ok),
                           f"range ({eig.min():.3g}, {eig.max():.3g}) in "
                           f"({4.0 / X ** 2:.3g}, {4.0 / h ** 2:.3g})"))
            eig_s = np.linalg.eigvalsh(numerov_average_matrix(N - 1))
            ok = np.all(eig_s > 2.0 / 3.0) and np.all(eig_s < 1.0)
            checks.append((f"averaging spectrum N={N}", bool(ok),
                           f"range ({eig_s.min():.4f}, {eig_s.max():.4f})"))
        for n_int, steps, coeffs in (((15,), (1.0 / 16,), (1.0,)),
                                     ((7, 9), (1.0 / 8, 0.9 / 10), (0.8, 1.2))):
            L = -dense_interior_laplacian(n_int, steps, coeffs)
            E = dense_interior_numerov_laplacian(n_int, steps, coeffs)
            eig = np.linalg.eigvals(np.linalg.solve(L, E)).real
            ok = np.all(eig > 1.0) and np.all(eig < 1.5)
            checks.append((f"pencil bounds {len(n_int)}d", bool(ok),
                           f"range ({eig.min():.4f}, {eig.max():.4f})"))
        # solve/average round trip
        rng = np.random.default_rng(11)
        mesh = make_mesh([1.0, 0.9], [12, 10], 0.3, 4)
        v = GridField(mesh, rng.uniform(-1.0, 1.0, mesh.shape))
        zero_bc = lambda *args: np.zeros((1,) * (len(args) - 1))  # noqa: E731
        z = solve_direction(v, 0, 1.0, zero_bc, 0.0)
        from compactwave.grid import numerov_average, second_difference
        resid = (numerov_average(z, 0).values - second_difference(v, 0).values)
        worst = float(np.max(np.abs(resid[mesh.interior()])))
        checks.append(("solve/average round trip", worst <= 1e-12,
                       f"residual {worst:.2e}"))
        report("C7 operator properties", checks)


class TestOracleEquivalence:
    def test_c8_closed_form_vs_quadrature(self):
        rng = np.random.default_rng(333)
        checks = []
        for slot, kind in CASES:
            sol = RadialWaveSolution(SQ3, **{slot: RadialProfile(kind, 0.2)})
            worst = 0.0
            for _ in range(200):
                r = float(rng.uniform(1e-3, 0.55))
                t = float(rng.uniform(0.0, 0.3))
                closed = float(sol(np.asarray(r), t))
                ref = quadrature_reference(sol, r, t, SQ3)
                worst = max(worst, abs(closed - ref))
            checks.append((f"{slot}={kind}", worst <= 1e-10,
                           f"max |closed - quadrature| = {worst:.2e}"))
        report("C8 oracle equivalence", checks)


class TestStabilityGate:
    def test_c9_reference_gate(self):
        mesh = make_mesh([1.0] * 3, 81, 0.3, 27)
        medium = Medium.constant(mesh, 1.0, (SQ3,) * 3)
        rep = check_stability(mesh, medium)
        checks = [
            ("courant ratio", abs(rep.courant_ratio - 0.9) <= 1e-12,
             f"{rep.courant_ratio}"),
            ("verdict satisfied", rep.satisfied, f"cfl={rep.cfl_number}"),
        ]
        doubled = make_mesh([1.0] * 3, 81, 0.6, 27)  # doubled time step
        rep2 = check_stability(doubled, Medium.constant(doubled, 1.0, (SQ3,) * 3))
        checks.append(("doubled step flips verdict", not rep2.satisfied,
                       f"courant={rep2.courant_ratio}"))
        report("C9 stability gate", checks)


class TestDeterminism:
    def test_c10_bit_identical_outputs_across_workers(self, tmp_path):
        scn = get_scenario("radial-u0-ramp")
        digests = []
        for workers in (1, max_workers()):
            set_workers(workers)
            mesh, medium, problem = scn.build(81, 27)
            obs = ErrorSeriesObserver(scn.exact_sampler(mesh), mesh, medium.a)
            run(problem, medium, mesh, observers=[obs], workers=workers)
            path = tmp_path / f"ts_w{workers}.csv"
            write_timeseries_csv(obs.records, path)
            digests.append(hashlib.sha256(path.read_bytes()).hexdigest())
        checks = [("csv checksums equal", digests[0] == digests[1],
                   f"{digests[0][:16]} vs {digests[1][:16]}")]
        report("C10 determinism across workers", checks)


class TestLayeredMedium:
    SNAPS = (0.25, 0.4, 0.5, 0.55, 0.6)

    def _layered_run(self, N, M):
        key = ("layered", N, M)
        if key not in _CACHE:
            scn = get_scenario("layered-ricker")
            mesh, medium, problem = scn.build(N, M, T=0.6)
            snaps = SnapshotObserver(self.SNAPS, mesh)
            run(problem, medium, mesh, observers=[snaps])
            center = N // 2
            lines = {t: f.values[:, center, center].copy()
                     for t, f in snaps.fields.items()}
            slice_z = snaps.fields[0.6].values[:, :, center].copy()
            _CACHE[key] = (mesh.axes[0].nodes(), mesh.axes[0].step, lines,
                           slice_z)
        return _CACHE[key]

    @staticmethod
    def _front(x, line):
        threshold = 0.01 * np.max(np.abs(line))
        hit = np.nonzero(np.abs(line) >= threshold)[0]
        return x[hit[0]], x[hit[-1]]

    def test_c11_layered_self_convergence(self):
        xa, ha, lines_a, slice_a = self._layered_run(100, 120)
        xb, hb, lines_b, slice_b = self._layered_run(200, 240)
        checks = []

        # part 1: coincident-node slice agreement at t = 0.6
        coarse = slice_b[::2, ::2]
        rel = float(np.linalg.norm(slice_a - coarse)
                    / np.linalg.norm(coarse))
        checks.append(("slice fields agree to 5%", rel <= 0.05,
                       f"relative L2 difference {rel:.3f}"))

        # part 2: the 1%-of-max front moves with the layer speeds, checked
        # over windows where it stays inside one layer
        windows = (("middle right", 1, 0.25, 0.40, 1.0),
                   ("middle left", 0, 0.25, 0.40, 1.0),
                   ("slow left", 0, 0.50, 0.60, 1.5),
                   ("fast right", 1, 0.55, 0.60, 3.0))
        for (x, h, lines, tag) in ((xa, ha, lines_a, "N=100"),
                                   (xb, hb, lines_b, "N=200")):
            for label, side, t0, t1, speed in windows:
                p0 = self._front(x, lines[t0])[side]
                p1 = self._front(x, lines[t1])[side]
                moved = abs(p1 - p0)
                target = speed * (t1 - t0)
                ok = abs(moved - target) <= h * (1.0 + 1e-9)
                checks.append((f"{tag} {label} speed {speed}", ok,
                               f"moved {moved:.4f} vs {target:.4f} "
                               f"(cell {h})"))
        report("C11 layered-medium self convergence", checks)
