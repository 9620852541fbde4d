"""Command-line interface: run scenarios, convergence studies, stability
checks, and exact-solution dumps.

Exit codes: 0 success; 2 stability gate tripped under ``--strict``;
3 configuration error; 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .backends import BACKEND, max_workers
from .compact import FIRST_STEP_VARIANTS, check_stability, run
from .harness import (ErrorSeriesObserver, SnapshotObserver,
                      convergence_study, format_table, manifest_from_result,
                      measure_errors, write_convergence_csv, write_field_dump,
                      write_slice_csv, write_timeseries_csv)
from .oracles import (RICKER_GAMMA, get_scenario, ricker_space_integral,
                      scenario_catalog)

EXIT_OK = 0
EXIT_UNSTABLE = 2
EXIT_CONFIG = 3
EXIT_IO = 4


class ConfigError(Exception):
    pass


def _parse_ladder(text: str) -> tuple[tuple[int, int], ...]:
    try:
        pairs = []
        for item in text.split(","):
            n, m = item.strip().split(":")
            pairs.append((int(n), int(m)))
        return tuple(pairs)
    except ValueError as exc:
        raise ConfigError(f"bad ladder {text!r}; expected 'N:M,N:M,...'") from exc


def _parse_slice(text: str, ndim: int = 3) -> tuple[int, float]:
    axes = "xyz"[:ndim]
    try:
        name, value = text.split("=")
        axis = axes.index(name.strip())
        return axis, float(value)
    except ValueError as exc:
        raise ConfigError(f"bad slice {text!r}; expected e.g. 'z=1.5'") from exc


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return cfg


_CONFIG_KEYS = {"scenario", "N", "M", "T", "scheme", "first_step", "workers",
                "snapshots", "slice", "out", "strict", "l2_scale", "every",
                "ricker_normalized"}


def _merge_config(args: argparse.Namespace, cfg: dict) -> None:
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, value in cfg.items():
        attr = key.lower()
        if getattr(args, attr, None) in (None, False):
            setattr(args, attr, value)


def _scenario_options(args) -> dict:
    if getattr(args, "ricker_normalized", False):
        return {"ricker_normalized": True}
    return {}


def _outdir(args, scn, N) -> Path:
    out = Path(args.out) if args.out else Path(f"out-{scn.name}-N{N}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    scn = get_scenario(args.scenario)
    N = args.n if args.n else scn.ladder[0][0]
    M = args.m if args.m else scn.ladder[0][1]
    T = args.t if args.t else scn.default_time
    mesh, medium, problem = scn.build(N, M, T, **_scenario_options(args))
    report = check_stability(mesh, medium)
    print(f"stability: courant={report.courant_ratio:.4f} "
          f"satisfied={report.satisfied}")
    if args.strict and not report.satisfied:
        print("stability gate tripped (--strict)", file=sys.stderr)
        return EXIT_UNSTABLE

    observers = []
    series = None
    snaps = None
    if scn.has_exact:
        series = ErrorSeriesObserver(scn.exact_sampler(mesh), mesh, medium.a,
                                     every=args.every)
        observers.append(series)
    if args.snapshots:
        times = [float(s) for s in args.snapshots.split(",")]
        snaps = SnapshotObserver(times, mesh)
        observers.append(snaps)

    result = run(problem, medium, mesh, scheme=args.scheme,
                 first_step_variant=args.first_step, observers=observers,
                 workers=args.workers)
    print(f"run finished: {mesh.time_steps} levels in "
          f"{result.step_seconds:.2f}s stepping ({result.workers} workers, "
          f"{BACKEND} backend)")

    out = _outdir(args, scn, N)
    manifest = manifest_from_result(scn, result, N, M, T)
    if scn.name == "layered-ricker":
        manifest.extras["source_space_integral"] = ricker_space_integral(
            RICKER_GAMMA, bool(getattr(args, "ricker_normalized", False)))
    if series is not None:
        final = series.records[-1][2]
        print(f"errors at t={final.time:g}: e_L2={final.e_l2:.7e} "
              f"e_H1={final.e_h1:.7e} e_E={final.e_energy:.7e}")
        ts_path = out / "timeseries.csv"
        write_timeseries_csv(series.records, ts_path, l2_scale=args.l2_scale)
        manifest.add_output(ts_path)
    if snaps is not None:
        for t_snap, fld in sorted(snaps.fields.items()):
            dump = out / f"field_t{t_snap:.6f}.bin"
            write_field_dump(dump, mesh, round(t_snap / mesh.time_step),
                             fld.values)
            manifest.add_output(dump)
            if args.slice:
                axis, coord = _parse_slice(args.slice, mesh.ndim)
                h = mesh.axes[axis].step
                idx = round((coord - mesh.axes[axis].origin) / h)
                if not 0 <= idx <= mesh.axes[axis].intervals or \
                        abs(mesh.axes[axis].origin + idx * h - coord) > 1e-9:
                    raise ConfigError(f"slice plane {args.slice} misses nodes")
                cut = np.take(fld.values, idx, axis=axis)
                spath = out / f"slice_{'xyz'[axis]}{coord:g}_t{t_snap:.6f}.csv"
                write_slice_csv(cut, spath, axes="xyz".replace("xyz"[axis], ""),
                                N=N, t=t_snap, plane=args.slice)
                manifest.add_output(spath)
    mpath = out / "manifest.json"
    manifest.write(mpath)
    print(f"outputs in {out}")
    return EXIT_OK


def _cmd_converge(args) -> int:
    scn = get_scenario(args.scenario)
    ladder = _parse_ladder(args.ladder) if args.ladder else None
    schemes = ("compact", "explicit") if args.scheme == "both" else (args.scheme,)
    tables = []
    for scheme in schemes:
        table = convergence_study(scn, scheme=scheme, ladder=ladder,
                                  T=args.t, workers=args.workers,
                                  first_step_variant=args.first_step)
        print(format_table(table))
        tables.append(table)
    out = _outdir(args, scn, (ladder or scn.ladder)[0][0])
    csv_path = out / "convergence.csv"
    write_convergence_csv(tables, csv_path)
    print(f"wrote {csv_path}")
    return EXIT_OK


def _cmd_check_stability(args) -> int:
    scn = get_scenario(args.scenario)
    N = args.n if args.n else scn.ladder[0][0]
    M = args.m if args.m else scn.ladder[0][1]
    mesh, medium, _ = scn.build(N, M, args.t)
    report = check_stability(mesh, medium)
    for key, value in report.as_dict().items():
        print(f"{key}: {value}")
    if args.strict and not report.satisfied:
        return EXIT_UNSTABLE
    return EXIT_OK


def _cmd_oracle(args) -> int:
    scn = get_scenario(args.scenario)
    if not scn.has_exact:
        raise ConfigError(f"scenario {scn.name!r} has no exact solution")
    N = args.n if args.n else scn.ladder[0][0]
    M = scn.ladder[0][1]
    T = scn.default_time
    mesh = scn.mesh(N, M, T)
    t = args.t if args.t is not None else T
    field = scn.exact_sampler(mesh)(t)
    out = _outdir(args, scn, N)
    path = out / f"exact_t{t:.6f}.bin"
    write_field_dump(path, mesh, round(t / mesh.time_step), field.values)
    print(f"wrote {path} (max |u| = {np.abs(field.values).max():.6e})")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="compactwave",
        description="Fourth-order compact solver for the acoustic wave "
                    "equation with a convergence-study harness.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    names = ", ".join(sorted(scenario_catalog()))

    def add_common(sp, with_scheme=True):
        sp.add_argument("scenario", help=f"one of: {names}")
        sp.add_argument("--N", dest="n", type=int, help="intervals per axis")
        sp.add_argument("--T", dest="t", type=float, help="final time")
        sp.add_argument("--workers", type=int, default=None,
                        help=f"worker threads (max {max_workers()})")
        sp.add_argument("--out", help="output directory")
        if with_scheme:
            sp.add_argument("--scheme", default="compact",
                            choices=["compact", "explicit", "both"])
            sp.add_argument("--first-step", dest="first_step",
                            default="two-level", choices=FIRST_STEP_VARIANTS)

    sp = sub.add_parser("run", help="run one scenario")
    add_common(sp)
    sp.add_argument("--M", dest="m", type=int, help="time steps")
    sp.add_argument("--snapshots", help="comma-separated snapshot times")
    sp.add_argument("--slice", help="snapshot plane to cut, e.g. z=1.5")
    sp.add_argument("--strict", action="store_true",
                    help="refuse to run when the stability gate fails")
    sp.add_argument("--every", type=int, default=1,
                    help="record errors every this many levels")
    sp.add_argument("--l2-scale", dest="l2_scale", type=float, default=1.0,
                    help="scale factor for the time-series L2 column")
    sp.add_argument("--ricker-normalized", dest="ricker_normalized",
                    action="store_true",
                    help="unit-integral source bump variant")
    sp.add_argument("--config", help="YAML config file (flags override)")
    sp.set_defaults(fn=_cmd_run)

    sp = sub.add_parser("converge", help="refinement study over a ladder")
    add_common(sp)
    sp.add_argument("--ladder", help="e.g. 81:27,135:45")
    sp.add_argument("--config", help="YAML config file (flags override)")
    sp.set_defaults(fn=_cmd_converge)

    sp = sub.add_parser("check-stability", help="print the mesh-ratio report")
    add_common(sp, with_scheme=False)
    sp.add_argument("--M", dest="m", type=int, help="time steps")
    sp.add_argument("--strict", action="store_true",
                    help="exit 2 when the gate fails")
    sp.set_defaults(fn=_cmd_check_stability)

    sp = sub.add_parser("oracle", help="dump the exact solution grid")
    add_common(sp, with_scheme=False)
    sp.set_defaults(fn=_cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            _merge_config(args, _load_config(args.config))
        if args.command == "run" and getattr(args, "scheme", None) == "both":
            raise ConfigError("run takes a single scheme; use converge for both")
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
