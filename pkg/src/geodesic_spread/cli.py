"""Command-line front end.

Exit codes: 0 success, 2 singular kinetic energy in single-point mode,
64 usage error, 74 I/O error.  Sweeps exit 0 even when points are flagged.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence, TextIO

from . import __version__
from .errors import InvalidParameterError, SingularKineticEnergyError
from .experiments import (
    FIG2_F,
    FIG2_N,
    FIG3_F,
    FIG4_OMEGA,
    AuditRow,
    SweepResult,
    SweepRow,
    SweepSpec,
    point_row,
    run_audit,
    run_fig1,
    run_sweep,
)
from .oscillator import TWO_PI, OscillatorConfig, sigma, sigma_numeric
from .propagation import LAMBDA_UNITS, METRICS, XI0_POLICIES, IntegrationParams, estimate_lambda

EXIT_OK = 0
EXIT_SINGULAR = 2
EXIT_USAGE = 64
EXIT_IO = 74

SUBCOMMANDS = ("sigma", "lambda", "fig1", "fig2", "fig3", "fig4", "eisenhart-control", "audit")
CSV_HEADER = (
    "n_osc",
    "f",
    "omega",
    "sigma",
    "sqrt_sigma",
    "abs_variance",
    "lambda",
    "renorm_count",
    "min_kinetic",
    "diverged",
    "runtime_s",
)
AUDIT_HEADER = (
    "n_osc",
    "f",
    "omega",
    "samples",
    "skipped",
    "max_total",
    "max_i_block",
    "max_j_block",
    "max_k_block",
    "max_k_block_derived",
    "max_total_derived",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _float_in(lo: float | None, hi: float | None, strict_lo: bool = False):
    def parse(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
        if not math.isfinite(value):
            raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
        if lo is not None and (value <= lo if strict_lo else value < lo):
            raise argparse.ArgumentTypeError(f"must be {'>' if strict_lo else '>='} {lo}, got {value}")
        if hi is not None and value > hi:
            raise argparse.ArgumentTypeError(f"must be <= {hi}, got {value}")
        return value

    return parse


@dataclass
class CliConfig:
    subcommand: str
    params: IntegrationParams
    n: list[int] | None = None
    f: list[float] | None = None
    omega: list[float] | None = None
    out: Path | None = None
    plot_script: Path | None = None
    workers: int = 1
    samples: int = 20
    record_runtime: bool = False
    argv: list[str] = field(default_factory=list)


ENSEMBLE_DEFAULTS: dict[str, dict[str, list]] = {
    "sigma": {"n": [2], "f": [0.05], "omega": [TWO_PI]},
    "lambda": {"n": [2], "f": [0.05], "omega": [TWO_PI]},
    "fig1": {"n": [10], "omega": [TWO_PI]},
    "fig2": {"n": list(FIG2_N), "f": list(FIG2_F), "omega": [TWO_PI]},
    "fig3": {"n": [2], "f": list(FIG3_F), "omega": [TWO_PI]},
    "fig4": {"n": [10], "f": [1.0], "omega": list(FIG4_OMEGA)},
    "eisenhart-control": {"n": list(FIG2_N), "f": list(FIG2_F), "omega": [TWO_PI]},
    "audit": {},
}

SINGLE_VALUED = ("sigma", "lambda", "fig1")

_ENSEMBLE_FLAGS = {
    "n": (_positive_int, "N", "number of oscillators"),
    "f": (_float_in(0.0, 1.0), "F", "phase-circle fraction in [0, 1]"),
    "omega": (_float_in(0.0, None, strict_lo=True), "W", "angular frequency"),
}


def _add_ensemble(parser: argparse.ArgumentParser, subcommand: str) -> None:
    defaults = ENSEMBLE_DEFAULTS[subcommand]
    if not defaults:
        return
    single = subcommand in SINGLE_VALUED
    g = parser.add_argument_group("ensemble")
    for name, default in defaults.items():
        kind, metavar, text = _ENSEMBLE_FLAGS[name]
        g.add_argument(f"--{name}", type=kind, nargs="+", metavar=metavar, default=default,
                       help=text if single else f"{text}; a list replaces the grid")


def build_parser() -> argparse.ArgumentParser:
    d = IntegrationParams()
    common = _Parser(add_help=False, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    g = common.add_argument_group("integration")
    g.add_argument("--metric", choices=METRICS, default=d.metric,
                   help="spread equation (figure sweeps fix their own metric)")
    g.add_argument("--dt-per-period", type=_positive_int, default=d.steps_per_period,
                   help="RK4 steps per oscillator period 2*pi/omega")
    g.add_argument("--t-max-periods", type=_float_in(0.0, None, strict_lo=True), default=d.t_max_periods,
                   help="integration length in periods")
    g.add_argument("--renorm-periods", type=_float_in(0.0, None, strict_lo=True), default=d.renorm_periods,
                   help="time between renormalizations, in periods")
    g.add_argument("--epsilon", type=_float_in(0.0, None, strict_lo=True), default=d.epsilon_rel,
                   help="kinetic-energy floor relative to <T>")
    g.add_argument("--xi0", choices=XI0_POLICIES, default=d.xi0_policy, help="initial spread vector")
    g.add_argument("--seed", type=int, default=d.seed, help="seed for seeded-random-unit starts")
    g.add_argument("--lambda-units", choices=LAMBDA_UNITS, default=d.lambda_units,
                   help="normalize by time or by Jacobi arc length")
    g = common.add_argument_group("output")
    g.add_argument("--out", type=Path, default=None, help="CSV output path (stdout when omitted)")
    g.add_argument("--plot-script", type=Path, default=None,
                   help="also write a matplotlib script plotting --out (fig1-fig4)")
    g.add_argument("--workers", type=_positive_int, default=1, help="worker processes for sweeps")
    g.add_argument("--samples", type=_positive_int, default=20, help="random times per config (audit)")
    g.add_argument("--record-runtime", action="store_true",
                   help="fill runtime_s in the CSV (makes output run-dependent)")

    parser = _Parser(
        prog="geodesic-spread",
        description="Geodesic-spread stability analysis of a harmonic-oscillator ensemble.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", required=True)
    helps = {
        "sigma": "kinetic-energy fluctuation statistics at one (N, f)",
        "lambda": "Lyapunov indicator at one (N, f, omega)",
        "fig1": "sigma against f for N = 10",
        "fig2": "Jacobi indicator against sqrt(sigma) over the N = 2 + j^2 grid",
        "fig3": "N = 2: Jacobi indicator and absolute variance against f",
        "fig4": "N = 10, f = 1: Jacobi indicator against omega",
        "eisenhart-control": "the fig2 grid under the Eisenhart metric",
        "audit": "deviation between the generic and closed-form Jacobi equations",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name], description=helps[name],
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        _add_ensemble(p, name)
    return parser


def parse_args(argv: Sequence[str]) -> CliConfig:
    """Parse and validate; usage problems exit with code 64."""
    parser = build_parser()
    ns = parser.parse_args(list(argv))
    if ns.subcommand in SINGLE_VALUED:
        for flag in ENSEMBLE_DEFAULTS[ns.subcommand]:
            if len(getattr(ns, flag)) != 1:
                parser.error(f"argument --{flag}: {ns.subcommand} takes a single value")
    try:
        params = IntegrationParams(
            steps_per_period=ns.dt_per_period,
            t_max_periods=ns.t_max_periods,
            renorm_periods=ns.renorm_periods,
            epsilon_rel=ns.epsilon,
            xi0_policy=ns.xi0,
            seed=ns.seed,
            metric=ns.metric,
            lambda_units=ns.lambda_units,
        )
    except InvalidParameterError as exc:
        parser.error(f"argument --t-max-periods/--renorm-periods/--dt-per-period: {exc}")
    return CliConfig(
        subcommand=ns.subcommand,
        params=params,
        n=getattr(ns, "n", None),
        f=getattr(ns, "f", None),
        omega=getattr(ns, "omega", None),
        out=ns.out,
        plot_script=ns.plot_script,
        workers=ns.workers,
        samples=ns.samples,
        record_runtime=ns.record_runtime,
        argv=list(argv),
    )


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _row_fields(row: SweepRow, record_runtime: bool) -> list[str]:
    return [
        _fmt(row.n_osc),
        _fmt(row.f),
        _fmt(row.omega),
        _fmt(row.sigma),
        _fmt(row.sqrt_sigma),
        _fmt(row.abs_variance),
        _fmt(row.lyapunov),
        _fmt(row.renorm_count),
        _fmt(row.min_kinetic),
        _fmt(row.diverged),
        _fmt(row.runtime) if record_runtime else "",
    ]


def write_csv(result: SweepResult, stream: TextIO, record_runtime: bool = False) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in result.rows:
        writer.writerow(_row_fields(row, record_runtime))


def emit_csv(result: SweepResult, path: str | os.PathLike, record_runtime: bool = False) -> None:
    """Write the sweep CSV (UTF-8, '\\n' line ends, shortest round-trip floats).

    ``runtime_s`` is left empty unless ``record_runtime`` is set, so the file
    is byte-identical across reruns; wall times go to the metadata sidecar.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_csv(result, fh, record_runtime)


def write_audit_csv(rows: Sequence[AuditRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(AUDIT_HEADER)
    for r in rows:
        writer.writerow([_fmt(getattr(r, name)) for name in AUDIT_HEADER])


_PLOT_BODIES = {
    "fig1": """\
fig = plt.figure(figsize=(5, 5))
ax = fig.add_subplot(projection="polar")
ax.plot(2 * np.pi * col("f"), col("sigma"))
ax.set_title("sigma vs phase fraction f (N = %d)" % int(col("n_osc")[0]))
""",
    "fig2": """\
fig, ax = plt.subplots(figsize=(6, 4))
n = col("n_osc")
sc = ax.scatter(col("sqrt_sigma"), col("lambda"), c=n, s=12, cmap="viridis")
fig.colorbar(sc, ax=ax, label="N")
ax.set_xlabel("sqrt(sigma)")
ax.set_ylabel("lambda")
""",
    "fig3": """\
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(col("f"), col("lambda"), "o-", color="C0")
ax.set_xlabel("f")
ax.set_ylabel("lambda", color="C0")
ax2 = ax.twinx()
ax2.plot(col("f"), col("abs_variance"), "s--", color="C1")
ax2.set_ylabel("<T^2> - <T>^2", color="C1")
""",
    "fig4": """\
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(col("omega"), col("lambda"), "o-")
ax.set_xlabel("omega")
ax.set_ylabel("lambda")
""",
}


def emit_plot_script(result: SweepResult, kind: str, path: str | os.PathLike, csv_path: str | os.PathLike) -> None:
    """Write a standalone matplotlib script that plots ``csv_path``.

    The CSV is referenced relative to the script's directory.  The script
    is only written, never run.
    """
    if kind not in _PLOT_BODIES:
        raise ValueError(f"no plot script for {kind!r}")
    if result.label != kind:
        raise ValueError(f"result {result.label!r} does not match plot kind {kind!r}")
    path = Path(path)
    rel = os.path.relpath(Path(csv_path).resolve(), path.resolve().parent)
    text = f'''"""Plot {kind} from {rel}."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent
with open(HERE / {rel!r}, encoding="utf-8") as fh:
    ROWS = list(csv.DictReader(fh))


def col(name):
    return np.array([float(r[name]) if r[name] not in ("true", "false") else r[name] == "true" for r in ROWS])


{_PLOT_BODIES[kind]}
fig.tight_layout()
fig.savefig(HERE / "{path.stem}.png", dpi=150)
'''
    path.write_text(text, encoding="utf-8")


def _metadata(cfg: CliConfig, extra: dict) -> dict:
    return {
        "tool": "geodesic-spread",
        "version": __version__,
        "subcommand": cfg.subcommand,
        "argv": cfg.argv,
        "params": asdict(cfg.params),
        "norm": "||(omega*xi, xi_dot)||",
        "workers": cfg.workers,
        **extra,
    }


def _sweep_spec(cfg: CliConfig) -> SweepSpec:
    metric = "eisenhart" if cfg.subcommand == "eisenhart-control" else "jacobi-generic"
    grid = tuple(dict.fromkeys((n, f, w) for n in cfg.n for f in cfg.f for w in cfg.omega))
    return SweepSpec(grid, IntegrationParams(**{**asdict(cfg.params), "metric": metric}), cfg.subcommand)


def _write_outputs(cfg: CliConfig, result: SweepResult, extra: dict) -> None:
    if cfg.out is None:
        write_csv(result, sys.stdout, cfg.record_runtime)
        return
    emit_csv(result, cfg.out, cfg.record_runtime)
    meta = _metadata(cfg, {
        "grid": [list(r.key) for r in result.rows],
        "wall_time_s": result.wall_time,
        "point_runtime_s": [r.runtime for r in result.rows],
        "failures": [{"point": list(r.key), "error": r.error} for r in result.failures],
        **extra,
    })
    Path(f"{cfg.out}.meta.json").write_text(json.dumps(meta, indent=2, default=str) + "\n", encoding="utf-8")
    if cfg.plot_script is not None and result.label in _PLOT_BODIES:
        emit_plot_script(result, result.label, cfg.plot_script, cfg.out)


def run(cfg: CliConfig) -> int:
    sub = cfg.subcommand
    if cfg.plot_script is not None and cfg.out is None:
        print("geodesic-spread: error: --plot-script requires --out", file=sys.stderr)
        return EXIT_USAGE

    if sub == "sigma":
        n, f, w = cfg.n[0], cfg.f[0], cfg.omega[0]
        stats = sigma(n, f, omega=w)
        num = sigma_numeric(OscillatorConfig(n_osc=n, omega=w, phase_fraction=f))
        print(
            f"N={n} f={f!r} omega={w!r} sigma={stats.sigma!r} sqrt_sigma={stats.sigma_sqrt!r} "
            f"mean_kinetic={stats.mean_kinetic!r} mean_phase={stats.mean_phase!r} "
            f"sigma_numeric={num.sigma!r} abs_variance={num.abs_variance!r}"
        )
        return EXIT_OK

    if sub == "lambda":
        n, f, w = cfg.n[0], cfg.f[0], cfg.omega[0]
        config = OscillatorConfig(n_osc=n, omega=w, phase_fraction=f)
        start = time.perf_counter()
        try:
            est = estimate_lambda(config, cfg.params)
        except SingularKineticEnergyError as exc:
            print(f"geodesic-spread: singular kinetic energy: {exc}", file=sys.stderr)
            return EXIT_SINGULAR
        print(
            f"lambda={est.exponent!r} units={est.lambda_units} renorm_count={est.renorm_count} "
            f"min_kinetic={est.min_kinetic!r} arc_length={est.arc_length_total!r} diverged={est.diverged}"
        )
        if cfg.out is not None:
            row = point_row(config, est, start)
            result = SweepResult("lambda", [row], cfg.params, time.perf_counter() - start)
            _write_outputs(cfg, result, {"arc_length_total": est.arc_length_total})
        return EXIT_OK

    if sub == "audit":
        rows = run_audit(samples=cfg.samples, seed=cfg.params.seed)
        if cfg.out is None:
            write_audit_csv(rows, sys.stdout)
        else:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                write_audit_csv(rows, fh)
        worst = {k: max(getattr(r, k) for r in rows) for k in ("max_i_block", "max_j_block", "max_k_block")}
        print(" ".join(f"{k}={v:.3e}" for k, v in worst.items()), file=sys.stderr)
        return EXIT_OK

    if sub == "fig1":
        result = run_fig1(n_osc=cfg.n[0], omega=cfg.omega[0])
    else:
        result = run_sweep(_sweep_spec(cfg), cfg.workers)
    _write_outputs(cfg, result, {})
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    cfg = parse_args(argv)
    try:
        return run(cfg)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except OSError as exc:
        print(f"geodesic-spread: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
