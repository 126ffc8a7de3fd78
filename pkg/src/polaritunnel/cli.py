"""Command-line interface: spectra, instanton paths, rates, sweeps and verification.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
Relative ``--output`` paths are placed under $POLARITUNNEL_OUTPUT_DIR when set.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, presets
from .errors import PolaritunnelError
from .instanton import action_finite_beta, action_zero_t, harmonic_frequency, instanton_path
from .model import SystemSpec, coupling_moments, polariton_spectrum, validate_system
from .oracles import CouplingEnsemble, monte_carlo_ensemble, run_verification
from .rates import (epsilon_finite, high_t_action, rate_modification_cumulant,
                    rate_modification_exact)

OUTPUT_DIR_ENV = "POLARITUNNEL_OUTPUT_DIR"
EXIT_OK, EXIT_VERIFY_FAILED, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def to_json(payload) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return json.dumps(payload, indent=2, default=default) + "\n"


# ---------------------------------------------------------------- config ---

def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    return data


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def load_config(args) -> tuple[SystemSpec, dict, dict | None]:
    """System, command-block defaults and optional coupling distribution."""
    inline = args.couplings is not None or args.g2 is not None
    sources = sum(bool(s) for s in (args.preset, args.system, inline))
    if sources != 1:
        raise ConfigError("give exactly one system source: --preset, --system FILE or --couplings/--g2")
    block: dict = {}
    distribution = None
    if args.preset:
        spec = presets.preset_system(args.preset)
        block = presets.preset_defaults(args.preset)
    elif args.system:
        data = _load_json(args.system)
        spec = SystemSpec.from_dict(data)
        block = dict(data.get(args.command, {}))
        distribution = data.get("couplingDistribution")
    else:
        w0 = 1.0 if args.omega0 is None else args.omega0
        wc = w0 if args.omega_c is None else args.omega_c
        if args.couplings is not None and args.g2 is not None:
            raise ConfigError("--couplings and --g2 are mutually exclusive")
        wall = 2.0 if args.wall_a is None else args.wall_a
        if args.couplings is not None:
            spec = SystemSpec(w0, wc, wall, tuple(_parse_floats(args.couplings)))
        else:
            spec = SystemSpec.from_g2(w0, wc, wall, _parse_floats(args.g2))
    if getattr(args, "bare_action", None) is not None:
        spec = spec.with_bare_action(args.bare_action)
    validate_system(spec)
    return spec, block, distribution


def option(args, block: dict, name: str, default=None):
    """Command-line value, else the JSON/preset block value, else ``default``."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    camel = "".join(p if k == 0 else p.capitalize() for k, p in enumerate(name.split("_")))
    return block.get(name, block.get(camel, default))


def write_output(text: str, target: str | None) -> None:
    if target is None or target == "-":
        sys.stdout.write(text)
        return
    path = Path(target)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# -------------------------------------------------------------- commands ---

def cmd_spectrum(args) -> int:
    spec, block, _ = load_config(args)
    mode = option(args, block, "mode", "exact")
    sp = polariton_spectrum(spec, mode)
    record = {"mode": sp.mode, "omegaPlus": sp.omega_plus, "omegaMinus": sp.omega_minus,
              "delta": sp.delta, "rabiSplitting": sp.rabi_splitting,
              "darkCount": sp.dark_count, "darkFrequency": sp.dark_frequency}
    if args.format == "json":
        text = to_json(record)
    else:
        text = to_csv(list(record), [list(record.values())])
    write_output(text, args.output)
    return EXIT_OK


def cmd_instanton(args) -> int:
    spec, block, _ = load_config(args)
    hit = int(option(args, block, "hit", 1))
    tau1 = float(option(args, block, "tau1", 0.0))
    lo = float(option(args, block, "tau_min", -10.0))
    hi = float(option(args, block, "tau_max", 10.0))
    points = int(option(args, block, "points", 401))
    if points < 1 or hi < lo:
        raise ConfigError("need points >= 1 and tau_max >= tau_min")
    grid = np.linspace(lo, hi, points)
    traj = instanton_path(spec, hit, grid, tau1)
    header = ["tau", "x"] + [f"q{k}" for k in range(1, spec.n + 1)]
    columns = [grid] + [traj.values[:, j] for j in range(spec.n + 1)]
    if option(args, block, "decompose", False):
        bare = traj.amplitude * np.exp(-spec.omega0 * np.abs(grid - tau1)) / (2 * spec.omega0)
        header += [f"q{hit}_bare", f"q{hit}_coupling"]
        columns += [bare, traj.values[:, hit] - bare]
    if args.format == "json":
        payload = {"hitIndex": hit, "hitTime": tau1, "amplitude": traj.amplitude}
        payload.update({h: c for h, c in zip(header, columns)})
        text = to_json(payload)
    else:
        text = to_csv(header, [list(row) for row in zip(*columns)])
    write_output(text, args.output)
    return EXIT_OK


def cmd_rate(args) -> int:
    spec, block, distribution = load_config(args)
    mode = option(args, block, "mode", "exact")
    s0 = option(args, block, "s0")
    beta = option(args, block, "beta")
    samples = option(args, block, "samples")
    seed = int(option(args, block, "seed", 0))
    breakdown = rate_modification_exact(spec, s0, mode)
    payload = breakdown.to_dict()
    high = high_t_action(spec, float(beta)) if beta is not None else None
    if high is not None:
        payload["highT"] = {"beta": high.beta, "actions": high.actions,
                            "prefactors": high.prefactors, "ratios": high.ratios}
    if samples is not None:
        if distribution is None:
            raise ConfigError("--samples needs a couplingDistribution in the system JSON")
        ensemble = CouplingEnsemble.from_dict(distribution, count=spec.n, seed=seed)
        template = spec.with_couplings([0.0] * ensemble.count)
        mc = monte_carlo_ensemble(ensemble, template, breakdown.bare_action, int(samples))
        mean, var = ensemble.population_moments()
        moments = coupling_moments(template)
        moments = type(moments)(0.0, mean * spec.omega0 * spec.omega_c, mean, var)
        cumulant = rate_modification_cumulant(moments, template, breakdown.bare_action)
        payload["monteCarlo"] = {"samples": mc.samples, "seed": seed, "rMean": mc.mean,
                                 "rStdErr": mc.stderr, "rejected": mc.rejected,
                                 "cumulantR": cumulant.r, "largeNR": cumulant.r_large_n}
    if args.format == "json":
        write_output(to_json(payload), args.output)
        return EXIT_OK
    header = ["i", "omegaH", "omegaA", "actionSE", "factor"]
    rows = [[s.i, s.omega_h, s.omega_a, s.action, s.factor] for s in breakdown.per_system]
    if high is not None:
        header += ["highTAction", "highTPrefactor", "highTRatio"]
        for row, act, pre, rat in zip(rows, high.actions, high.prefactors, high.ratios):
            row += [act, pre, rat]
    footer = ["ensemble", "", "", "", breakdown.ensemble_r] + [""] * (len(header) - 5)
    text = to_csv(header, rows + [footer])
    if samples is not None:
        mc = payload["monteCarlo"]
        text += to_csv(list(mc), [list(mc.values())])
    write_output(text, args.output)
    return EXIT_OK


def _sweep_values(args, block) -> np.ndarray:
    values = option(args, block, "values")
    if values is not None:
        vals = np.asarray(values if isinstance(values, list) else _parse_floats(values), dtype=float)
    else:
        start, stop = option(args, block, "start"), option(args, block, "stop")
        num = int(option(args, block, "num", 11))
        if start is None or stop is None:
            raise ConfigError("sweep needs --values or --start/--stop")
        vals = np.linspace(float(start), float(stop), num) if num > 0 else np.array([])
    if vals.size == 0:
        raise ConfigError("sweep range is empty")
    return vals


def cmd_sweep(args) -> int:
    spec, block, _ = load_config(args)
    param = option(args, block, "param")
    mode = option(args, block, "mode", "exact")
    if param not in ("g2ratio", "N", "S0", "beta"):
        raise ConfigError("--param must be one of g2ratio, N, S0, beta")
    values = _sweep_values(args, block)
    w0wc = spec.omega0 * spec.omega_c
    if param == "g2ratio":
        s0_values = option(args, block, "s0_values")
        if s0_values is None:
            s0_values = [spec.bare_action]
        elif isinstance(s0_values, str):
            s0_values = _parse_floats(s0_values)
        header = ["g2ratio"] + [f"r_S0={fmt(float(s))}" for s in s0_values]
        rows = []
        for x in values:
            system = SystemSpec.from_g2(spec.omega0, spec.omega_c, spec.wall_a, [x * w0wc] * spec.n)
            rows.append([x] + [rate_modification_exact(system, s, mode).ensemble_r for s in s0_values])
    elif param == "N":
        collective = float(option(args, block, "collective", 0.25))
        header = ["N", "r", "abs_r_minus_1", "N_abs_r_minus_1"]
        rows = []
        for n in values:
            n = int(round(n))
            if n < 1:
                raise ConfigError("N must be >= 1")
            system = SystemSpec.from_g2(spec.omega0, spec.omega_c, spec.wall_a,
                                        [collective * w0wc / n] * n)
            r = rate_modification_exact(system, None, mode).ensemble_r
            rows.append([n, r, abs(r - 1), n * abs(r - 1)])
    elif param == "S0":
        header = ["S0", "r"]
        rows = [[s, rate_modification_exact(spec, s, mode).ensemble_r] for s in values]
    else:
        hit = int(option(args, block, "hit", 1))
        zero_t = action_zero_t(spec, hit)
        header = ["beta", "actionFiniteBeta", "actionZeroT", "actionHighT", "epsilon"]
        rows = []
        for b in values:
            if b <= 0:
                raise ConfigError("beta values must be positive")
            rows.append([b, action_finite_beta(spec, hit, b), zero_t,
                         high_t_action(spec, b).actions[hit - 1], epsilon_finite(spec, hit, b, mode)])
    if args.format == "json":
        text = to_json({"param": param, "columns": header, "rows": rows})
    else:
        text = to_csv(header, rows)
    write_output(text, args.output)
    svg = option(args, block, "svg")
    if svg:
        _write_svg(svg, header, rows)
    return EXIT_OK


def _write_svg(target: str, header: list[str], rows: list[list]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "polaritunnel"
    import matplotlib.pyplot as plt

    data = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for k in range(1, data.shape[1]):
        ax.plot(data[:, 0], data[:, k], label=header[k])
    ax.set_xlabel(header[0])
    ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(target)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_verify(args) -> int:
    if args.system or args.couplings is not None or args.g2 is not None:
        spec, _, _ = load_config(args)
        targets = [("custom", spec)]
    elif args.preset:
        targets = [(presets.resolve(args.preset), presets.preset_system(args.preset))]
    else:
        targets = [(name, presets.preset_system(name)) for name in presets.VERIFY_PRESETS]
    records = []
    failed = 0
    for name, spec in targets:
        for report in run_verification(spec, args.tolerance):
            d = {"system": name, **report.to_dict()}
            if not args.timings:
                d.pop("runtime")
            records.append(d)
            failed += not report.passed
    if args.format == "json":
        text = to_json(records)
    else:
        header = list(records[0])
        text = to_csv(header, [list(r.values()) for r in records])
    write_output(text, args.output)
    if failed:
        print(f"{failed} verification check(s) failed", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


# ---------------------------------------------------------------- parser ---

def _system_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system")
    g.add_argument("--preset", help="fig2/fig3/fig3params, fig4, fig5 or uncoupled")
    g.add_argument("--system", metavar="FILE", help="JSON system descriptor")
    g.add_argument("--couplings", help="comma-separated signed lambda_i^2")
    g.add_argument("--g2", help="comma-separated g_i^2 (alternative to --couplings)")
    g.add_argument("--omega0", type=float)
    g.add_argument("--omega-c", dest="omega_c", type=float)
    g.add_argument("--wall-a", dest="wall_a", type=float)
    g.add_argument("--bare-action", dest="bare_action", type=float,
                   help="move the wall so that S0 = 2 E_b / omega0 takes this value")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polaritunnel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="polariton frequencies and detuning")
    _system_options(p)
    p.add_argument("--mode", choices=("exact", "rwa"))
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("instanton", help="zero-temperature bounce path as CSV")
    _system_options(p)
    p.add_argument("--hit", type=int, help="index of the quadrature that hits the wall")
    p.add_argument("--tau1", type=float)
    p.add_argument("--tau-min", dest="tau_min", type=float)
    p.add_argument("--tau-max", dest="tau_max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--decompose", action="store_true", default=None,
                   help="add bare-bounce and coupling parts of the bouncing quadrature")
    p.set_defaults(func=cmd_instanton)

    p = sub.add_parser("rate", help="rate modification r with per-system breakdown")
    _system_options(p)
    p.add_argument("--mode", choices=("exact", "rwa"))
    p.add_argument("--s0", type=float, help="override the bare action S0")
    p.add_argument("--beta", type=float, help="add the high-temperature comparison")
    p.add_argument("--samples", type=int, help="Monte Carlo draws from couplingDistribution")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("sweep", help="tabulate r or actions over a parameter")
    _system_options(p)
    p.add_argument("--param", choices=("g2ratio", "N", "S0", "beta"))
    p.add_argument("--values", help="comma-separated parameter values")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--num", type=int)
    p.add_argument("--s0-values", dest="s0_values", help="curves for the g2ratio sweep")
    p.add_argument("--collective", type=float, help="fixed N<g^2>/(w0 wc) for the N sweep")
    p.add_argument("--hit", type=int)
    p.add_argument("--mode", choices=("exact", "rwa"))
    p.add_argument("--seed", type=int, help="accepted for uniformity; sweeps are deterministic")
    p.add_argument("--svg", help="also write a line chart")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the oracle cross-checks")
    _system_options(p)
    p.add_argument("--tolerance", type=float, help="override every check tolerance")
    p.add_argument("--timings", action="store_true", help="include per-check runtimes")
    p.add_argument("--seed", type=int, help="accepted for uniformity; checks are deterministic")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PolaritunnelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
