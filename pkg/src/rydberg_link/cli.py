"""Command-line drivers.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 validation failure. Files written by a failing command are removed.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import AcceptanceContext, run_all
from .atomic import solve_steady_state
from .config import load_preset, parse_config, scenario_hash
from .doppler import doppler_averaged_rho21, transmittance
from .errors import ConfigError, DomainError, NumericalError, ValidationFailure
from .montecarlo import write_decisions_csv, write_trace_csv
from .plotscript import emit_plot_script
from .surface import build_surface, read_surface_csv, write_surface_csv
from .sweeps import SweepSpec, ber_sweep, columns, log_axis, mc_sweep, write_rows_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 2, 3, 4


class Outputs:
    """Tracks files written by a command so they can be removed on failure."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.paths = []
        self._created_dir = False

    def path(self, name) -> Path:
        if not self.dir.exists():
            self.dir.mkdir(parents=True)
            self._created_dir = True
        p = self.dir / name
        self.paths.append(p)
        return p

    def write_text(self, name, text):
        self.path(name).write_text(text)

    def discard(self):
        for p in self.paths:
            p.unlink(missing_ok=True)
        if self._created_dir:
            try:
                self.dir.rmdir()
            except OSError:
                pass


def _load_scenario(args):
    return parse_config(args.config) if args.config else load_preset()


def _load_surface(args, scenario):
    if getattr(args, "surface", None):
        surface = read_surface_csv(args.surface)
        if surface.scenario_hash != scenario_hash(scenario):
            raise ConfigError(f"{args.surface}: surface was built from a different scenario")
        return surface
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return build_surface(scenario)


def cmd_steady_state(args, outputs):
    scenario = _load_scenario(args)
    rabi = scenario.rabi(0.1 * args.e_s1, 0.1 * args.e_s2)
    rho = solve_steady_state(rabi, scenario.detuning(), scenario.decay())
    rho21_d = doppler_averaged_rho21(rabi, scenario.detuning(), scenario.decay(), scenario.cell(),
                                     scenario.doppler_points, scenario.doppler_method)
    t_p = transmittance(rho21_d, rabi, scenario.cell())
    np.set_printoptions(precision=6, linewidth=140)
    print(f"steady state at |E_s1| = {args.e_s1:g} mV/cm, |E_s2| = {args.e_s2:g} mV/cm (atoms at rest):")
    print(rho)
    print(f"Doppler-averaged rho21 = {rho21_d.real:.10g} {rho21_d.imag:+.10g}j")
    print(f"transmittance = {t_p:.10g}")
    with open(outputs.path("steady_state.csv"), "w") as fh:
        fh.write("i,j,re,im\n")
        for i in range(5):
            for j in range(5):
                fh.write(f"{i + 1},{j + 1},{rho[i, j].real:.17g},{rho[i, j].imag:.17g}\n")
    with open(outputs.path("transmittance.csv"), "w") as fh:
        fh.write("e_s1_mVpcm,e_s2_mVpcm,rho21_re,rho21_im,transmittance\n")
        fh.write(f"{args.e_s1:.17g},{args.e_s2:.17g},{rho21_d.real:.17g},{rho21_d.imag:.17g},{t_p:.17g}\n")


def cmd_surface(args, outputs):
    scenario = _load_scenario(args)
    surface = _load_surface(args, scenario)
    path = outputs.path("surface.csv")
    write_surface_csv(surface, path)
    if args.plot:
        outputs.write_text("slices.gp", emit_plot_script([path], "slices"))
    a = surface.anchors
    print(f"surface {surface.g.shape[0]}x{surface.g.shape[1]} written to {path}")
    print(f"v0 = {a.v0:.10g}, vs = {a.vs:.10g} at e_sat = {a.e_sat:g} V/m, "
          f"G range [{surface.g.min():.4f}, {surface.g.max():.4f}]")


def _cases(arg):
    return (1, 2, 3, 4) if arg == "all" else (int(arg),)


def _e1_axis(args):
    return log_axis(args.e1_min, args.e1_max, args.e1_points)


def run_ber_sweep(surface, outputs, cases, e_s2, e_s1, sigmas):
    written = []
    for case in cases:
        rows = ber_sweep(surface, SweepSpec(case, e_s2, e_s1, sigmas))
        p = outputs.path(f"ber_case{case}.csv")
        write_rows_csv(rows, columns("ber"), p)
        written.append(p)
    rows = ber_sweep(surface, SweepSpec(3, e_s2, e_s1, sigmas), symbol=True)
    p = outputs.path("ser.csv")
    write_rows_csv(rows, columns("ser"), p)
    return written, p


def cmd_ber_sweep(args, outputs):
    scenario = _load_scenario(args)
    surface = _load_surface(args, scenario)
    cases = _cases(args.case)
    ber_paths, ser_path = run_ber_sweep(surface, outputs, cases, args.e_s2, _e1_axis(args), tuple(args.sigma))
    if args.plot and len(ber_paths) == 4:
        outputs.write_text("ber.gp", emit_plot_script(ber_paths, "ber"))
    if args.plot:
        outputs.write_text("ser.gp", emit_plot_script([ser_path], "ser"))
    print(f"wrote {', '.join(p.name for p in ber_paths + [ser_path])} to {outputs.dir}")


def run_mc_sweep(scenario, surface, out_dir, cases, e_s2, e_s1, sigmas, n_symbols, seed,
                 mode="nearest-mean", tau=0.0, export_trace=0, outputs=None):
    """Write ``ber_case{c}.csv`` and ``ser.csv`` with analytic and Monte Carlo columns."""
    outputs = Outputs(out_dir) if outputs is None else outputs
    ber_paths = []
    for case in cases:
        spec = SweepSpec(case, e_s2, tuple(e_s1), tuple(sigmas), n_symbols, seed, mode, tau)
        rows, exports = mc_sweep(surface, spec, keep=export_trace)
        p = outputs.path(f"ber_case{case}.csv")
        write_rows_csv(rows, columns("ber", monte_carlo=True), p)
        ber_paths.append(p)
        for k, j, frame, trace, dec, user in exports:
            write_trace_csv(trace, outputs.path(f"trace_case{case}_p{k}_s{j}.csv"))
            write_decisions_csv(frame, dec, user, outputs.path(f"decisions_case{case}_p{k}_s{j}.csv"))
    spec = SweepSpec(3, e_s2, tuple(e_s1), tuple(sigmas), n_symbols, seed, mode, tau)
    rows, _ = mc_sweep(surface, spec, symbol=True)
    ser_path = outputs.path("ser.csv")
    write_rows_csv(rows, columns("ser", monte_carlo=True), ser_path)
    return ber_paths, ser_path


def cmd_mc_sweep(args, outputs):
    scenario = _load_scenario(args)
    surface = _load_surface(args, scenario)
    if args.n_symbols < 1000:
        raise ConfigError("--n-symbols must be >= 1000 for Monte Carlo sweeps")
    ber_paths, ser_path = run_mc_sweep(
        scenario, surface, outputs.dir, _cases(args.case), args.e_s2, _e1_axis(args), args.sigma,
        args.n_symbols, args.seed, args.mode, args.tau_us * 1e-6, args.export_trace, outputs)
    if args.plot and len(ber_paths) == 4:
        outputs.write_text("ber_mc.gp", emit_plot_script(ber_paths, "ber-mc"))
    if args.plot:
        outputs.write_text("ser.gp", emit_plot_script([ser_path], "ser"))
    print(f"wrote {', '.join(p.name for p in ber_paths + [ser_path])} to {outputs.dir}")


def cmd_validate(args, outputs):
    scenario = _load_scenario(args)
    ctx = AcceptanceContext(scenario, seed=args.seed if args.seed else 20240611)
    only = set(args.criteria) if args.criteria else None
    lines = []
    failed = 0
    for res in run_all(ctx, only):
        line = res.line()
        print(line, flush=True)
        lines.append(line)
        failed += not res.passed
    outputs.write_text("validate.txt", "\n".join(lines) + "\n")
    if failed:
        raise ValidationFailure(f"{failed} acceptance criteria failed")


def cmd_plot(args, outputs):
    outputs.write_text(args.output, emit_plot_script(args.csv, args.figure))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rydberg-link",
        description="Two-user OOK reception through a five-level Rydberg receiver.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (default: bundled preset)")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    common.add_argument("--format", choices=["csv"], default="csv", help="output format")

    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--surface", help="reuse a surface CSV instead of rebuilding it")
    sweep.add_argument("--case", choices=["1", "2", "3", "4", "all"], default="all")
    sweep.add_argument("--e-s2", type=float, default=0.4, help="fixed |E_s2| in mV/cm (default 0.4)")
    sweep.add_argument("--e1-min", type=float, default=0.1, help="smallest |E_s1| in mV/cm")
    sweep.add_argument("--e1-max", type=float, default=10.0, help="largest |E_s1| in mV/cm")
    sweep.add_argument("--e1-points", type=int, default=41, help="log-spaced |E_s1| points")
    sweep.add_argument("--sigma", type=float, nargs="+", default=[0.02], help="noise standard deviations")
    sweep.add_argument("--plot", action="store_true", help="also emit gnuplot scripts")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("steady-state", parents=[common], help="print rho and transmittance")
    p.add_argument("--e-s1", type=float, default=0.0, help="|E_s1| in mV/cm")
    p.add_argument("--e-s2", type=float, default=0.0, help="|E_s2| in mV/cm")
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("surface", parents=[common], help="build the response surface CSV")
    p.add_argument("--plot", action="store_true", help="also emit the slices plot script")
    p.set_defaults(func=cmd_surface, surface=None)

    p = sub.add_parser("ber-sweep", parents=[common, sweep], help="analytic BER/SER sweeps")
    p.set_defaults(func=cmd_ber_sweep)

    p = sub.add_parser("mc-sweep", parents=[common, sweep], help="analytic plus Monte Carlo sweeps")
    p.add_argument("--n-symbols", type=int, default=2048, help="symbols per sweep point (>= 1000)")
    p.add_argument("--mode", choices=["nearest-mean", "midpoint-thresholds"], default="nearest-mean")
    p.add_argument("--tau-us", type=float, default=0.0, help="edge transient time constant in microseconds")
    p.add_argument("--export-trace", type=int, default=0, metavar="N",
                   help="export trace and decisions of the first N symbols per point")
    p.set_defaults(func=cmd_mc_sweep)

    p = sub.add_parser("validate", parents=[common], help="run the acceptance criteria")
    p.add_argument("--criteria", type=int, nargs="+", choices=range(1, 13), metavar="N",
                   help="run only these criteria")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", parents=[common], help="emit a gnuplot script from CSV outputs")
    p.add_argument("figure", choices=["slices", "ber", "ber-mc", "ser"])
    p.add_argument("csv", nargs="+", help="input CSV files (four for ber/ber-mc, in case order)")
    p.add_argument("--output", default="plot.gp", help="script file name inside --out")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    outputs = Outputs(args.out)
    try:
        args.func(args, outputs)
    except (ConfigError, DomainError) as exc:
        outputs.discard()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        outputs.discard()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationFailure as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BaseException:
        outputs.discard()
        raise
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
