"""Command-line interface: coefficients, bistability scans, noise spectra, presets.

Subcommands
    coeffs       exact coupling coefficients as fractions and decimals
    mu           perturbation constants mu1, mu2, mu3
    freespace    thin-medium phase shift, nonlinear loss and added noise
    bistability  detuning scan of the steady-state curve (CSV, optional figure)
    spectrum     noise spectra at a working point (CSV, optional figure)
    preset       one of fig1..fig6, CSV + JSON + rendered figure
    replay       re-run a command from a previously written JSON file
    selftest     quick oracle-equivalence suite

Outputs are deterministic: floats are printed with 17 significant digits and
figures carry no timestamps, so identical inputs give byte-identical files.
A config file (INI, section [run]) can predefine any long option; explicit
command-line flags win.  The output directory defaults to the current
directory, or $KERRMODES_OUTDIR when set.

Exit codes: 0 success, 1 configuration error, 2 solver failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .cavity import (
    CavityConfig,
    ConvergenceError,
    bistability_scan,
    scattering_matrix,
    truncated_multimode_steady,
)
from .coupling import lambda_exact, mu_constants
from .freespace import ThinMediumParams, propagate_mean
from .multimode import (
    PerturbativeConfig,
    brute_output_correlation,
    output_correlation,
    steady_state_perturbative,
)
from .presets import (
    DEFAULT_EPSILON,
    PRESETS,
    FigureResult,
    Series,
    build_preset,
    omega_grid,
)
from .spectra import intensity_noise, optimized_lo_noise, optimum_quadrature
from .twomode import (
    TwoModeConfig,
    _from_cavity_state,
    output_correlation_twomode,
    two_mode_scan,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2


class CliError(Exception):
    """Configuration problem; message names the offending field."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on bad flags, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit_(message)


class SystemExit_(Exception):
    def __init__(self, message):
        super().__init__(message)


def fmt(x) -> str:
    """17-significant-digit float formatting for reproducible text output."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (complex, np.complexfloating)):
        return f"{format(x.real, '.17g')}{'+' if x.imag >= 0 else '-'}{format(abs(x.imag), '.17g')}j"
    return str(x)


def outdir_from(args) -> Path:
    if args.outdir is not None:
        base = Path(args.outdir)
    else:
        base = Path(os.environ.get("KERRMODES_OUTDIR", "."))
    base.mkdir(parents=True, exist_ok=True)
    return base


def write_series_csv(path: Path, series_list: list[Series]) -> None:
    """One row per sample: series label first, then the named columns.

    Columns are the union over all series (first-seen order); a series
    without a column leaves the cell empty.
    """
    columns: list[str] = []
    for series in series_list:
        for name in series.columns:
            if name not in columns:
                columns.append(name)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series"] + columns)
        for series in series_list:
            n = len(series.x)
            for i in range(n):
                row = [series.label]
                for name in columns:
                    col = series.columns.get(name)
                    row.append(fmt(col[i]) if col is not None else "")
                writer.writerow(row)


def figure_to_json(result: FigureResult, command: str, params: dict) -> dict:
    return {
        "command": command,
        "params": params,
        "figure": {
            "name": result.name,
            "title": result.title,
            "series": [
                {"label": s.label, "dashed": s.dashed,
                 "columns": {k: [fmt(v) for v in vals]
                             for k, vals in s.columns.items()}}
                for s in result.series],
        },
    }


def write_outputs(args, result: FigureResult, command: str,
                  params: dict, stem: str) -> list[Path]:
    outdir = outdir_from(args)
    paths = []
    fmt_choice = getattr(args, "format", "csv")
    if fmt_choice in ("csv", "svg"):
        path = outdir / f"{stem}.csv"
        write_series_csv(path, result.series)
        paths.append(path)
    if fmt_choice == "json" or command == "preset":
        path = outdir / f"{stem}.json"
        payload = figure_to_json(result, command, params)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
        paths.append(path)
    if fmt_choice == "svg" or command == "preset" or getattr(args, "plot", False):
        from .plotting import render_figure
        path = outdir / f"{stem}.svg"
        render_figure(result, path)
        paths.append(path)
    return paths


# -- subcommand implementations --------------------------------------------------

def cmd_coeffs(args) -> int:
    value = lambda_exact(args.p, args.q, args.r, args.s,
                         args.l, args.m, args.n, args.o)
    print(f"lambda[{args.p},{args.q},{args.r},{args.s};"
          f"{args.l},{args.m},{args.n},{args.o}] = {value} = {fmt(float(value))}")
    return EXIT_OK


def cmd_mu(args) -> int:
    mu = mu_constants(args.cutoff)
    if args.format == "json":
        print(json.dumps({"cutoff": mu.cutoff, "mu1": mu.mu1, "mu2": mu.mu2,
                          "mu3": mu.mu3, "tail_bound": mu.tail_bound},
                         sort_keys=True))
    else:
        print(f"cutoff     = {mu.cutoff}")
        print(f"mu1        = {fmt(mu.mu1)}")
        print(f"mu2        = {fmt(mu.mu2)}")
        print(f"mu3        = {fmt(mu.mu3)}")
        print(f"tail_bound = {fmt(mu.tail_bound)}")
    return EXIT_OK


def cmd_freespace(args) -> int:
    params = ThinMediumParams(khat=args.khat, amp_in=args.amp, q_max=args.qmax)
    res = propagate_mean(params)
    payload = {
        "khat": args.khat,
        "amp_in": args.amp,
        "phi_nl": res.phi_nl,
        "gamma_nl": res.gamma_nl,
        "amp_out": [res.amp_out.real, res.amp_out.imag],
        "v_add": [[res.v_add[i, j] for j in range(2)] for i in range(2)],
    }
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(["quantity", "value"])
        writer.writerow(["phi_nl", fmt(res.phi_nl)])
        writer.writerow(["gamma_nl", fmt(res.gamma_nl)])
        writer.writerow(["amp_out_re", fmt(res.amp_out.real)])
        writer.writerow(["amp_out_im", fmt(res.amp_out.imag)])
        for i in range(2):
            for j in range(2):
                writer.writerow([f"v_add_{i}{j}", fmt(res.v_add[i, j].real)])
    return EXIT_OK


def _bistability_result(args) -> FigureResult:
    from .presets import _curve_series
    if args.model == "single":
        config = CavityConfig(k_nl=args.k, detunings=(0.0,), orders=(0,))
        curve = bistability_scan(config, args.phi_min, args.phi_max,
                                 max_steps=args.max_steps)
        series = [_curve_series(curve, "single-mode")]
    elif args.model == "twomode":
        curve = two_mode_scan(args.k, args.p, args.dphi,
                              args.phi_min, args.phi_max,
                              max_steps=args.max_steps)
        series = [_curve_series(curve, f"p={args.p},dphi={args.dphi:g}")]
    else:
        raise CliError(f"model: bistability supports single|twomode, got {args.model}")
    return FigureResult(
        name="bistability", title=f"Bistability scan ({args.model})",
        xlabel="cavity detuning phi", ylabel="fundamental intensity",
        series=series, params=_params_of(args))


def cmd_bistability(args) -> int:
    result = _bistability_result(args)
    paths = write_outputs(args, result, "bistability", _params_of(args),
                          args.output or "bistability")
    for p in paths:
        print(p)
    return EXIT_OK


def _spectrum_result(args) -> FigureResult:
    omegas = omega_grid(args.omega_max, args.points)
    columns: dict[str, np.ndarray] = {"omega": omegas}
    want_quad = args.observable in ("quadrature", "both")
    want_int = args.observable in ("intensity", "both")

    if args.model == "single":
        config = CavityConfig(k_nl=args.k, detunings=(0.0,), orders=(0,))
        wp = bistability_scan(config, args.phi_min, args.phi_max).working_point(
            args.epsilon)
        vacuum = np.array([[1.0, 0.0], [0.0, 0.0]])
        quad, intens = [], []
        for omega in omegas:
            s = scattering_matrix(wp.config, wp.amps, omega)
            v = s @ vacuum @ s.conj().T
            if want_quad:
                quad.append(optimized_lo_noise(v)[2] if args.lo == "optimized"
                            else optimum_quadrature(v)[1])
            if want_int:
                intens.append(intensity_noise(v, wp.outputs))
        label = f"single K={args.k:g}"
    elif args.model == "twomode":
        curve = two_mode_scan(args.k, args.p, args.dphi,
                              args.phi_min, args.phi_max)
        state = curve.working_point(args.epsilon)
        cfg = TwoModeConfig(k_nl=args.k, p=args.p,
                            phi_a=float(state.config.detunings[0]),
                            phi_b=float(state.config.detunings[1]))
        wp = _from_cavity_state(state, cfg)
        quad, intens = [], []
        for omega in omegas:
            v = output_correlation_twomode(wp, cfg, omega)
            if want_quad:
                quad.append(optimized_lo_noise(v)[2] if args.lo == "optimized"
                            else optimum_quadrature(v)[1])
            if want_int:
                intens.append(intensity_noise(v, wp.outputs))
        label = f"twomode p={args.p} dphi={args.dphi:g}"
    elif args.model == "multimode":
        cfg = PerturbativeConfig(k_nl=args.k, phi0=args.phi0, phi_t=args.phi_t)
        a0 = steady_state_perturbative(cfg)
        out0 = -1.0 + 2.0 * a0
        quad, intens = [], []
        for omega in omegas:
            v = output_correlation(cfg, omega, a0=a0)
            if want_quad:
                quad.append(optimum_quadrature(v)[1])
            if want_int:
                # fundamental-mode projection: the perturbative correlation
                # only covers the fundamental block
                intens.append(intensity_noise(v, np.array([out0])))
        label = f"multimode phi_t={args.phi_t:g}"
    elif args.model == "brute":
        cfg = PerturbativeConfig(k_nl=args.k, phi0=args.phi0, phi_t=args.phi_t)
        steady = truncated_multimode_steady(cfg.cavity_config(args.n_modes))
        quad, intens = [], []
        for omega in omegas:
            v = brute_output_correlation(cfg, args.n_modes, omega,
                                         steady=steady.amps)
            if want_quad:
                quad.append(optimized_lo_noise(v)[2] if args.lo == "optimized"
                            else optimum_quadrature(v)[1])
            if want_int:
                intens.append(intensity_noise(v, steady.outputs))
        label = f"brute N={args.n_modes} phi_t={args.phi_t:g}"
    else:
        raise CliError(f"model: unknown spectrum model {args.model}")

    if want_quad:
        columns["quadrature"] = np.array(quad)
    if want_int:
        columns["intensity"] = np.array(intens)
    series = [Series(label=label, columns=columns)]
    return FigureResult(
        name="spectrum", title=f"Noise spectrum ({args.model}, LO {args.lo})",
        xlabel="normalized frequency omega",
        ylabel="noise relative to shot (0 = shot, -1 = perfect squeezing)",
        series=series, params=_params_of(args), baseline=0.0, floor=-1.0)


def cmd_spectrum(args) -> int:
    result = _spectrum_result(args)
    paths = write_outputs(args, result, "spectrum", _params_of(args),
                          args.output or "spectrum")
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.name not in PRESETS:
        raise CliError(f"name: unknown preset {args.name!r}; "
                       f"choose from {sorted(PRESETS)}")
    result = build_preset(args.name, omega_max=args.omega_max,
                          points=args.points)
    paths = write_outputs(args, result, "preset", _params_of(args), args.name)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_replay(args) -> int:
    with open(args.json_file) as fh:
        payload = json.load(fh)
    command = payload.get("command")
    params = payload.get("params", {})
    if command not in ("bistability", "spectrum", "preset"):
        raise CliError(f"json_file: cannot replay command {command!r}")
    argv = [command]
    for key, value in params.items():
        if key in ("config", "output", "plot", "replayed"):
            continue
        if value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if key == "name":
            argv.append(str(value))
        elif isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    if args.outdir is not None:
        argv.extend(["--outdir", args.outdir])
    return main(argv)


def cmd_selftest(args) -> int:
    """Oracle-equivalence checks, one pass/fail line per item."""
    import itertools

    from .modes import overlap_quadrature
    from .spectra import quadrature_covariance
    from .twomode import drift_consistency_defect, two_mode_working_point

    failures = 0

    def report(name: str, ok: bool, detail: str = ""):
        nonlocal failures
        print(f"[{'PASS' if ok else 'FAIL'}] {name}{': ' + detail if detail else ''}")
        failures += 0 if ok else 1

    worst = 0.0
    for key in itertools.product(range(3), repeat=4):
        exact = float(lambda_exact(*key))
        worst = max(worst, abs(overlap_quadrature(*key) - exact) / exact)
    report("coupling tensor vs quadrature oracle", worst < 1e-8,
           f"max rel err {worst:.2e}")

    mu = mu_constants(60)
    report("mu1 equals ln(4/3)", abs(mu.mu1 - np.log(4.0 / 3.0)) < 1e-12)

    wp = two_mode_working_point(2.5, 3, 1.0)
    defect = drift_consistency_defect(wp, wp.config)
    report("two-mode drift vs tensor Jacobian", defect < 1e-12,
           f"defect {defect:.2e}")

    v0 = output_correlation_twomode(wp, wp.config, 0.0)
    det = float(np.linalg.det(quadrature_covariance(v0)))
    report("static output purity", abs(det - 1.0) < 1e-6, f"det {det:.8f}")

    leak = abs(intensity_noise(v0, wp.outputs))
    report("intensity noise conservation at DC", leak < 1e-6, f"|value| {leak:.2e}")

    print("selftest:", "OK" if failures == 0 else f"{failures} failure(s)")
    return EXIT_OK if failures == 0 else EXIT_SOLVER


# -- argument plumbing ------------------------------------------------------------

def _params_of(args) -> dict:
    skip = {"func", "config", "outdir", "command"}
    return {k: v for k, v in vars(args).items()
            if k not in skip and not k.startswith("_")}


def build_parser() -> _Parser:
    parser = _Parser(prog="kerrmodes", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", help="INI file with a [run] section of defaults")
    parser.add_argument("--outdir", help="output directory "
                        "(default: $KERRMODES_OUTDIR or current directory)")
    # the same options are accepted after the subcommand; SUPPRESS keeps the
    # subparser from clobbering a value parsed at the top level
    common = _Parser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--outdir", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=lambda **kw: _Parser(
                                    parents=[common], **kw))

    p = sub.add_parser("coeffs", help="exact coupling coefficient")
    for name in "pqrs":
        p.add_argument(f"--{name}", type=int, default=0)
    for name in "lmno":
        p.add_argument(f"--{name}", type=int, default=0)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("mu", help="perturbation constants")
    p.add_argument("--cutoff", type=int, default=60)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_mu)

    p = sub.add_parser("freespace", help="thin-medium propagation summary")
    p.add_argument("--khat", type=float, required=True)
    p.add_argument("--amp", type=float, default=1.0)
    p.add_argument("--qmax", type=int, default=12)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_freespace)

    p = sub.add_parser("bistability", help="steady-state detuning scan")
    p.add_argument("--model", choices=("single", "twomode"), default="single")
    p.add_argument("--k", type=float, default=2.5)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--dphi", type=float, default=0.0)
    p.add_argument("--phi-min", type=float, default=-2.0)
    p.add_argument("--phi-max", type=float, default=6.0)
    p.add_argument("--max-steps", type=int, default=4000)
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    p.add_argument("--plot", action="store_true", help="also render the figure")
    p.add_argument("--output", help="output file stem (default: bistability)")
    p.set_defaults(func=cmd_bistability)

    p = sub.add_parser("spectrum", help="noise spectra at a working point")
    p.add_argument("--model", choices=("single", "twomode", "multimode", "brute"),
                   default="twomode")
    p.add_argument("--k", type=float, default=2.5)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--dphi", type=float, default=1.0)
    p.add_argument("--phi0", type=float, default=0.5,
                   help="fundamental detuning (multimode/brute models)")
    p.add_argument("--phi-t", type=float, default=50.0)
    p.add_argument("--n-modes", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                   help="working-point offset from the fold")
    p.add_argument("--phi-min", type=float, default=-2.0)
    p.add_argument("--phi-max", type=float, default=6.0)
    p.add_argument("--lo", choices=("tem00", "optimized"), default="tem00")
    p.add_argument("--observable", choices=("quadrature", "intensity", "both"),
                   default="both")
    p.add_argument("--omega-max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    p.add_argument("--plot", action="store_true")
    p.add_argument("--output", help="output file stem (default: spectrum)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("preset", help="reproduce one of the standard figures")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--omega-max", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("replay", help="re-run a command from its JSON output")
    p.add_argument("json_file")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("selftest", help="oracle-equivalence suite")
    p.set_defaults(func=cmd_selftest)

    return parser


def _apply_config_file(parser: _Parser, argv: list[str]) -> list[str]:
    """Read [run] defaults from --config and let explicit flags override them."""
    probe = _Parser(add_help=False)
    probe.add_argument("--config")
    try:
        known, _ = probe.parse_known_args(argv)
    except SystemExit_:
        return argv
    if not known.config:
        return argv
    ini = configparser.ConfigParser()
    if not ini.read(known.config):
        raise CliError(f"config: cannot read {known.config}")
    if not ini.has_section("run"):
        raise CliError(f"config: {known.config} has no [run] section")
    injected = []
    for key, value in ini.items("run"):
        injected.extend([f"--{key.replace('_', '-')}", value])
    # defaults go before the explicit argv so later flags win; the subcommand
    # name must stay first, so splice after it
    for i, token in enumerate(argv):
        if not token.startswith("-") and token in (
                "coeffs", "mu", "freespace", "bistability", "spectrum",
                "preset", "replay", "selftest"):
            head = argv[:i + 1]
            # preset takes a positional name immediately after
            if token == "preset" and i + 1 < len(argv):
                head = argv[:i + 2]
            return head + injected + argv[len(head):]
    return argv + injected


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (CliError, SystemExit_) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        if exc.residual is not None:
            print(f"last residual: {exc.residual:.3e}", file=sys.stderr)
        return EXIT_SOLVER
    except np.linalg.LinAlgError as exc:
        print(f"solver failure (singular system, physical divergence?): {exc}",
              file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
