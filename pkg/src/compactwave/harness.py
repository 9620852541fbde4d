"""Convergence-study harness: error norms against exact solutions, practical
convergence rates, expected-rate rows, and CSV/binary/manifest outputs.

Error conventions, fixed across the whole project: the L^2 column is the
plain interior mesh norm; the H^1 column is the unweighted discrete Sobolev
seminorm (unit coefficients); the energy column combines the backward time
difference of the error with the coefficient-weighted H^1 seminorm.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import __version__ as _version
from .backends import BACKEND
from .compact import RunResult, SchemeState, run
from .grid import GridField, TensorMesh, inner_l2, norm_l2, seminorm_h1
from .oracles import Scenario

SCHEME_ORDER = {"compact": 4, "explicit": 2}


@dataclass(frozen=True)
class ErrorTriple:
    """Errors of one state in the three reporting norms, at instant ``time``."""

    e_l2: float
    e_h1: float
    e_energy: float
    time: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.e_l2, self.e_h1, self.e_energy)


def measure_errors(state: SchemeState, exact_at: Callable[[float], GridField],
                   mesh: TensorMesh, a: Sequence[float]) -> ErrorTriple:
    """Errors of ``exact - state`` at the state's time level.

    The energy norm differences the error across the state's two levels, so
    the state must carry its previous level.
    """
    if state.v_prev is None or state.level < 1:
        raise ValueError("error measurement needs two consecutive levels")
    ht = mesh.time_step
    t = state.level * ht
    err = GridField(mesh, exact_at(t).values - state.v_cur.values)
    err_prev = GridField(mesh, exact_at(t - ht).values - state.v_prev.values)
    dt = GridField(mesh, (err.values - err_prev.values) / ht)
    e_energy = float(np.sqrt(inner_l2(dt, dt) + seminorm_h1(err, a) ** 2))
    return ErrorTriple(
        e_l2=norm_l2(err),
        e_h1=seminorm_h1(err, (1.0,) * mesh.ndim),
        e_energy=e_energy,
        time=t,
    )


def runge_rate(e_coarse: float, e_fine: float, q: float) -> float:
    """Practical convergence order from two runs refined by the factor ``q``."""
    if e_coarse <= 0.0 or e_fine <= 0.0:
        raise ValueError("errors must be positive to take a rate")
    if q <= 1.0:
        raise ValueError("refinement factor must exceed 1")
    return float(np.log(e_coarse / e_fine) / np.log(q))


def theoretical_rate(k: int, lam: float, norm: str = "l2") -> Fraction:
    """Expected convergence order of a k-th order scheme for data of
    fractional smoothness order ``lam``:  k/(k+1)*lam in L^2 and
    k/(k+1)*(lam-1) in the H^1 and energy norms, valid for lam <= k+1."""
    if norm not in ("l2", "h1", "energy"):
        raise ValueError(f"unknown norm tag {norm!r}")
    lam_f = Fraction(lam).limit_denominator(10 ** 9)
    lo, hi = Fraction(0), Fraction(k + 1)
    if lam_f < lo or lam_f > hi:
        warnings.warn(f"smoothness order {lam} outside [0, {k + 1}]; clamped",
                      stacklevel=2)
        lam_f = min(max(lam_f, lo), hi)
    factor = Fraction(k, k + 1)
    return factor * lam_f if norm == "l2" else factor * (lam_f - 1)


# ---------------------------------------------------------------------------
# Observers
# ---------------------------------------------------------------------------


class ErrorSeriesObserver:
    """Collects the error triple at every level (optionally decimated)."""

    def __init__(self, exact_at: Callable[[float], GridField],
                 mesh: TensorMesh, a: Sequence[float], every: int = 1):
        self.exact_at = exact_at
        self.mesh = mesh
        self.a = tuple(a)
        self.every = max(1, int(every))
        self.records: list[tuple[int, float, ErrorTriple]] = []

    def __call__(self, level: int, t: float, state: SchemeState) -> None:
        if level < 1 or (level % self.every and level != self.mesh.time_steps):
            return
        triple = measure_errors(state, self.exact_at, self.mesh, self.a)
        self.records.append((level, t, triple))


class SnapshotObserver:
    """Copies the field at the requested instants (must hit time levels)."""

    def __init__(self, times: Sequence[float], mesh: TensorMesh,
                 tol: float = 1e-9):
        ht = mesh.time_step
        self.levels: dict[int, float] = {}
        for t in times:
            lev = round(t / ht)
            if not 0 <= lev <= mesh.time_steps or abs(lev * ht - t) > tol:
                raise ValueError(f"snapshot time {t} is not a time level")
            self.levels[lev] = t
        self.fields: dict[float, GridField] = {}

    def __call__(self, level: int, t: float, state: SchemeState) -> None:
        want = self.levels.get(level)
        if want is not None:
            self.fields[want] = state.v_cur.copy()


# ---------------------------------------------------------------------------
# Convergence studies
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceRow:
    N: int
    M: int
    errors: ErrorTriple | None
    rates: tuple[float, float, float] | None = None
    cpu_s: float = 0.0
    cpu_rel: float | None = None
    failure: str | None = None


@dataclass
class ConvergenceTable:
    scenario: str
    scheme: str
    order: int
    q: Fraction
    rows: list[ConvergenceRow] = field(default_factory=list)
    theoretical: tuple[Fraction, Fraction, Fraction] | None = None


def _check_ladder(ladder: Sequence[tuple[int, int]], q: Fraction) -> None:
    for (n0, m0), (n1, m1) in zip(ladder, ladder[1:]):
        if Fraction(n1, n0) != q or Fraction(m1, m0) != q:
            raise ValueError(
                f"ladder step ({n0},{m0}) -> ({n1},{m1}) does not refine by {q}")


def convergence_study(scenario: Scenario, scheme: str = "compact",
                      ladder: Sequence[tuple[int, int]] | None = None,
                      T: float | None = None, workers: int | None = None,
                      first_step_variant: str = "two-level",
                      q: Fraction | None = None) -> ConvergenceTable:
    """Run the scenario over a refinement ladder and tabulate errors/rates.

    A failed run marks its row and the study continues.
    """
    if scheme not in SCHEME_ORDER:
        raise ValueError(f"unknown scheme {scheme!r}")
    ladder = tuple(ladder if ladder is not None else scenario.ladder)
    q = q if q is not None else scenario.refine_q
    _check_ladder(ladder, q)
    k = SCHEME_ORDER[scheme]
    table = ConvergenceTable(scenario=scenario.name, scheme=scheme, order=k,
                             q=q)
    lam = scenario.lambda_order if scenario.lambda_order is not None else k + 1
    table.theoretical = (theoretical_rate(k, lam, "l2"),
                         theoretical_rate(k, lam, "h1"),
                         theoretical_rate(k, lam, "energy"))
    prev_row = None
    for N, M in ladder:
        row = ConvergenceRow(N=N, M=M, errors=None)
        try:
            mesh, medium, problem = scenario.build(N, M, T)
            result = run(problem, medium, mesh, scheme=scheme,
                         first_step_variant=first_step_variant,
                         workers=workers)
            exact_at = scenario.exact_sampler(mesh)
            row.errors = measure_errors(result.state, exact_at, mesh, medium.a)
            row.cpu_s = result.step_seconds
        except Exception as exc:  # noqa: BLE001 - row-level isolation
            row.failure = f"{type(exc).__name__}: {exc}"
            warnings.warn(f"ladder entry ({N},{M}) failed: {row.failure}",
                          stacklevel=2)
        if row.errors is not None and prev_row is not None \
                and prev_row.errors is not None:
            row.rates = tuple(
                runge_rate(ec, ef, float(q))
                for ec, ef in zip(prev_row.errors.as_tuple(),
                                  row.errors.as_tuple()))
            if prev_row.cpu_s > 0.0 and row.cpu_s > 0.0:
                row.cpu_rel = row.cpu_s / prev_row.cpu_s
        table.rows.append(row)
        if row.errors is not None:
            prev_row = row
    return table


def format_table(table: ConvergenceTable, sig: int = 7) -> str:
    """Fixed-width text rendering with ``sig`` significant digits."""
    lines = [f"scenario {table.scenario}  scheme {table.scheme} "
             f"(order {table.order}, q = {table.q})"]
    head = (f"{'N':>5} {'M':>5} {'e_L2':>14} {'e_H1':>14} {'e_E':>14} "
            f"{'p_L2':>7} {'p_H1':>7} {'p_E':>7} {'cpu_s':>8} {'cpu_rel':>8}")
    lines.append(head)
    fmt = f"{{:.{sig - 1}e}}"
    for row in table.rows:
        if row.errors is None:
            lines.append(f"{row.N:>5} {row.M:>5}   failed: {row.failure}")
            continue
        e = [fmt.format(v) for v in row.errors.as_tuple()]
        p = ["      -"] * 3 if row.rates is None else \
            [f"{v:7.3f}" for v in row.rates]
        rel = "       -" if row.cpu_rel is None else f"{row.cpu_rel:8.2f}"
        lines.append(f"{row.N:>5} {row.M:>5} {e[0]:>14} {e[1]:>14} "
                     f"{e[2]:>14} {p[0]} {p[1]} {p[2]} {row.cpu_s:8.2f} {rel}")
    if table.theoretical is not None:
        th = [f"{float(v):7.3f}" for v in table.theoretical]
        lines.append(f"{'*':>5} {'*':>5} {'-':>14} {'-':>14} {'-':>14} "
                     f"{th[0]} {th[1]} {th[2]}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# File outputs
# ---------------------------------------------------------------------------

CONVERGENCE_COLUMNS = ("scheme", "k", "N", "M", "e_L2", "e_H1", "e_E",
                       "p_L2", "p_H1", "p_E", "cpu_s", "cpu_rel")
TIMESERIES_COLUMNS = ("m", "t", "e_L2", "e_H1", "e_E")


def _full(x: float | None) -> str:
    return "" if x is None else format(x, ".17e")


def write_convergence_csv(tables: Sequence[ConvergenceTable], path) -> None:
    """Full-precision CSV of one or more study tables (17 significant
    digits, so externally recomputed rates agree with in-process ones)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CONVERGENCE_COLUMNS)
        for table in tables:
            for row in table.rows:
                if row.errors is None:
                    continue
                rates = row.rates or (None, None, None)
                w.writerow([
                    table.scheme, table.order, row.N, row.M,
                    *(format(v, ".17e") for v in row.errors.as_tuple()),
                    *(_full(r) for r in rates),
                    _full(row.cpu_s), _full(row.cpu_rel),
                ])
            if table.theoretical is not None:
                w.writerow([table.scheme, table.order, "*", "*", "", "", "",
                            *(format(float(v), ".17e")
                              for v in table.theoretical), "", ""])


def write_timeseries_csv(records, path, l2_scale: float = 1.0) -> None:
    """Error-versus-time CSV; ``l2_scale`` rescales the L^2 column on request
    (handy when plotting it next to the much larger H^1/energy columns)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMESERIES_COLUMNS)
        for m, t, triple in records:
            w.writerow([m, format(t, ".17e"),
                        format(triple.e_l2 * l2_scale, ".17e"),
                        format(triple.e_h1, ".17e"),
                        format(triple.e_energy, ".17e")])


def write_slice_csv(values2d: np.ndarray, path, axes: str, N: int, t: float,
                    plane: str) -> None:
    """Plane cut of a field: one header line, then row-major values."""
    values2d = np.asarray(values2d)
    with open(path, "w", newline="") as fh:
        fh.write(f"# axes={axes} N={N} t={t:.17e} plane={plane}\n")
        w = csv.writer(fh)
        for row in values2d:
            w.writerow([format(v, ".17e") for v in row])


FIELD_MAGIC = b"ACWFLD01"


def write_field_dump(path, mesh: TensorMesh, level: int,
                     values: np.ndarray) -> None:
    """Self-describing little-endian binary dump of one field level."""
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.shape != mesh.shape:
        raise ValueError("field shape does not match mesh")
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<II", 1, mesh.ndim))
        for ax in mesh.axes:
            fh.write(struct.pack("<dQ", ax.extent, ax.intervals))
        fh.write(struct.pack("<dQQ", mesh.time_extent, mesh.time_steps,
                             level))
        fh.write(values.tobytes())


def read_field_dump(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != FIELD_MAGIC:
            raise ValueError(f"{path}: not a field dump")
        version, n = struct.unpack("<II", fh.read(8))
        axes = [struct.unpack("<dQ", fh.read(16)) for _ in range(n)]
        T, M, level = struct.unpack("<dQQ", fh.read(24))
        shape = tuple(int(nk) + 1 for _, nk in axes)
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(shape)
    meta = {"version": version, "ndim": n,
            "extents": [x for x, _ in axes],
            "intervals": [int(nk) for _, nk in axes],
            "time_extent": T, "time_steps": int(M), "level": int(level)}
    return meta, data


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Everything needed to audit one run and its output files."""

    scenario: str
    scheme: str
    N: int
    M: int
    T: float
    first_step_variant: str
    workers: int
    stability: dict
    step_seconds: float
    cpu_rel: float | None = None
    outputs: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    version: str = _version
    backend: str = BACKEND

    def add_output(self, path) -> None:
        self.outputs.append({"path": str(path), "sha256": sha256_of(path)})

    def write(self, path) -> None:
        payload = {k: v for k, v in self.__dict__.items()}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def manifest_from_result(scenario: Scenario, result: RunResult, N: int,
                         M: int, T: float) -> RunManifest:
    return RunManifest(
        scenario=scenario.name, scheme=result.scheme, N=N, M=M, T=T,
        first_step_variant=result.first_step_variant, workers=result.workers,
        stability=result.stability.as_dict(),
        step_seconds=result.step_seconds)
