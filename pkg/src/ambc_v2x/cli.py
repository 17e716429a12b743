"""Command-line entry point: ``ambc-v2x {solve,sweep,verify}``.

Configuration comes from defaults, then an optional ``key = value`` file
(``--config``), then ``--set key=value`` pairs, then the dedicated flags.
Power flags are in dBm.

Exit codes: 0 success, 1 verification failed, 2 usage, 3 invalid value,
4 I/O error, 5 every point infeasible.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import FIELD_TYPES, ConfigError, NetworkConfig, coerce_field, watt_to_dbm
from .oracle import GridSpec, verify_suite
from .simulation import SWEEP_PARAMS, SweepPlan, SweepResult, run_realization, run_sweep
from .solver import MODES, SolveOutcome, Status

FORMAT_VERSION = "ambc-v2x-sweep/1"
OUTPUT_ENV = "AMBC_V2X_OUTPUT_DIR"
CSV_HEADER = "param,value,mode,mean_ee_mbpj,stderr_ee,mean_icsi_w,feasibility_rate,mean_iters,n"

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_INVALID, EXIT_IO, EXIT_INFEASIBLE = 0, 1, 2, 3, 4, 5

# flag -> config field
_CONFIG_FLAGS = {
    "p_max": "p_max",
    "q_max": "q_max",
    "sigma_eps": "sigma_eps",
    "c_min": "c_min",
    "circuit_power": "circuit_power_dbm",
    "noise_density": "noise_density_dbm",
    "bandwidth": "bandwidth_hz",
    "bs_radius": "bs_radius_m",
    "rsu_radius": "rsu_radius_m",
    "pathloss_exp": "pathloss_exp",
    "seed": "seed",
    "max_iterations": "max_iterations",
    "tol": "convergence_tol",
    "step_size": "step_size_initial",
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunManifest:
    config: NetworkConfig
    command: str
    output_dir: Path
    plan: SweepPlan | None = None
    format_version: str = FORMAT_VERSION
    timestamp: str = ""

    @property
    def seed(self) -> int:
        return self.config.seed

    def to_dict(self) -> dict:
        plan = None
        if self.plan is not None:
            plan = {"param": self.plan.param, "values": list(self.plan.values), "modes": list(self.plan.modes),
                    "n_realizations": self.plan.realizations}
        return {"format_version": self.format_version, "command": self.command, "timestamp": self.timestamp,
                "seed": self.seed, "output_dir": str(self.output_dir), "config": self.config.to_dict(),
                "plan": plan}


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the timestamp for reproducible manifests.
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = time.gmtime(int(epoch)) if epoch else time.gmtime()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", t)


# ---------------------------------------------------------------------------
# Configuration


def read_config_file(path: str | Path) -> dict[str, object]:
    """Parse ``key = value`` lines (``#`` comments) or a manifest.json config echo."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc.strerror}") from exc
    if path.suffix == ".json":
        data = json.loads(text)
        items = data.get("config", data)
        for key in items:
            if key not in FIELD_TYPES:
                raise UsageError(f"{path}: unknown key {key!r}")
        return {k: coerce_field(k, "none" if v is None else repr(v)) for k, v in items.items()}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in FIELD_TYPES:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = coerce_field(key, value)
    return values


def resolve_config(args: argparse.Namespace) -> NetworkConfig:
    values: dict[str, object] = {}
    if args.config:
        values.update(read_config_file(args.config))
    for item in args.set or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in FIELD_TYPES:
            raise UsageError(f"unknown config key {key!r}")
        values[key] = coerce_field(key, value)
    for flag, name in _CONFIG_FLAGS.items():
        text = getattr(args, flag, None)
        if text is not None:
            values[name] = coerce_field(name, text)
    realizations = getattr(args, "realizations", None)
    if realizations is not None:
        values["n_realizations"] = realizations
    return NetworkConfig(**values)


def _output_dir(args) -> Path:
    return Path(args.output_dir or os.environ.get(OUTPUT_ENV) or "results")


# ---------------------------------------------------------------------------
# Output


def _fmt(x) -> str:
    return repr(float(x))


def format_csv(result: SweepResult) -> str:
    lines = [CSV_HEADER]
    for p in result.points:
        lines.append(",".join([result.plan.param, _fmt(p.value), p.mode, _fmt(p.mean_ee_mbpj), _fmt(p.stderr_ee),
                               _fmt(p.mean_icsi_w), _fmt(p.feasibility_rate), _fmt(p.mean_iters), str(p.n)]))
    return "\n".join(lines) + "\n"


def gnuplot_script(result: SweepResult) -> str:
    plots = ", ".join(
        f"'< grep \",{mode},\" sweep.csv' using 2:4:5 with yerrorlines title '{mode}'" for mode in result.plan.modes)
    return (f"# {FORMAT_VERSION}\nset datafile separator ','\nset xlabel '{result.plan.param}'\n"
            f"set ylabel 'energy efficiency (Mb/J)'\nplot {plots}\n")


def emit_csv(result: SweepResult, manifest: RunManifest, gnuplot: bool = False) -> list[Path]:
    """Write sweep.csv, manifest.json and optionally sweep.gp into the output directory."""
    if not result.points:
        raise ValueError("empty sweep result")
    out = manifest.output_dir
    files = {"sweep.csv": format_csv(result),
             "manifest.json": json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n"}
    if gnuplot:
        files["sweep.gp"] = gnuplot_script(result)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            with open(path, "w", newline="\n", encoding="utf-8") as fh:
                fh.write(text)
            written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write to {exc.filename or out}: {exc.strerror}") from exc
    return written


def _dbm(w) -> str:
    return "-inf dBm" if w <= 0 else f"{float(watt_to_dbm(w)):.3f} dBm"


def print_solution(outcome: SolveOutcome, metrics=None, file=None) -> str:
    """Render a single-realization outcome; also writes it to ``file`` (stdout by default)."""
    sol = outcome.solution
    lines = [f"status: {Status(outcome.status).value.upper()}"]
    if outcome.stage_status:
        lines.append("stages: " + ", ".join(s.value for s in outcome.stage_status))
    lines.append(f"iterations: {outcome.iterations_used}")
    lines.append(f"alpha_1* = {sol.alpha[0]:.6e}   alpha_2* = {sol.alpha[1]:.6e}")
    for m in range(2):
        lines.append(f"beta_1,{m + 1}* = {sol.beta[m, 0]:.6e}   beta_2,{m + 1}* = {sol.beta[m, 1]:.6e}")
    lines.append(f"xi_1* = {sol.xi[0]:.6f}   xi_2* = {sol.xi[1]:.6f}")
    lines.append(f"Q_1 = {sol.q_rsu_w[0]:.6e} W   Q_2 = {sol.q_rsu_w[1]:.6e} W")
    total = float(sol.bs_power_w + sol.rsu_power_w.sum())
    lines.append(f"total transmit power: {total:.6e} W ({_dbm(total)})")
    if metrics is not None:
        ee = float(metrics.ee_mbpj)
        lines.append(f"energy efficiency: {'n/a' if np.isnan(ee) else f'{ee:.6f} Mb/J'}")
        lines.append(f"sum rate: {float(metrics.sum_rate):.6f} bps/Hz   iCSI interference: {float(metrics.icsi_w):.6e} W")
    lines.append("slacks:")
    for name, value in outcome.constraint_slacks.items():
        lines.append(f"  {name:<12} {float(value): .6e}")
    worst_name = min(outcome.constraint_slacks, key=lambda k: float(outcome.constraint_slacks[k]))
    lines.append(f"worst slack: {worst_name} = {float(outcome.constraint_slacks[worst_name]):.6e}")
    text = "\n".join(lines) + "\n"
    (file or sys.stdout).write(text)
    return text


# ---------------------------------------------------------------------------
# Commands


def _cmd_solve(args, config: NetworkConfig) -> int:
    outcome, metrics = run_realization(config, args.index, args.mode)
    print(f"realization {args.index} (seed {config.seed}), mode {args.mode}")
    print_solution(outcome, metrics)
    return EXIT_INFEASIBLE if Status(outcome.status) is Status.INFEASIBLE else EXIT_OK


def _parse_values(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"--values must be comma-separated numbers, got {text!r}") from None


def _cmd_sweep(args, config: NetworkConfig) -> int:
    modes = tuple(m.strip() for m in args.modes.split(","))
    try:
        plan = SweepPlan(param=args.param, values=_parse_values(args.values), base=config, modes=modes,
                         workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    manifest = RunManifest(config=config, command="sweep", output_dir=_output_dir(args), plan=plan,
                           timestamp=_timestamp())

    def progress(p):
        if not args.quiet:
            print(f"{plan.param}={p.value!r:<10} {p.mode:<9} EE={p.mean_ee_mbpj:.6f} +- {p.stderr_ee:.2e} Mb/J  "
                  f"feasible={p.feasibility_rate:.3f}  iters={p.mean_iters:.1f}", flush=True)

    result = run_sweep(plan, progress=progress)
    for path in emit_csv(result, manifest, gnuplot=args.gnuplot):
        print(f"wrote {path}")
    if all(p.feasibility_rate == 0 for p in result.points):
        print("every sweep point is infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_verify(args, config: NetworkConfig) -> int:
    p1 = GridSpec(args.p1_resolution, refine=args.refine)
    p2 = GridSpec(args.p2_resolution, refine=args.refine)
    rows = verify_suite(config, range(args.seeds), p1, p2, mode=args.mode)
    print(f"{'seed':>4} {'stage':>5} {'rsu':>3} {'status':<14} {'solver W':>12} {'oracle W':>12} "
          f"{'allow W':>10}  ok")
    for r in rows:
        rsu = "-" if r.m is None else str(r.m + 1)
        print(f"{r.index:>4} {r.stage:>5} {rsu:>3} {r.solver_status:<14} {r.solver_power_w:>12.5e} "
              f"{r.oracle_power_w:>12.5e} {r.allowance_w:>10.3e}  {'yes' if r.ok else 'NO'}")
    failed = sum(not r.ok for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} comparisons agree")
    return EXIT_OK if failed == 0 else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file (field names of NetworkConfig) or manifest.json")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config field")
    common.add_argument("--p-max", dest="p_max", help="BS power budget (dBm)")
    common.add_argument("--q-max", dest="q_max", help="per-RSU power budget (dBm, or 'auto' for P_max - 3 dB)")
    common.add_argument("--sigma-eps", dest="sigma_eps", help="CSI error standard deviation")
    common.add_argument("--c-min", dest="c_min", help="minimum rate (bps/Hz)")
    common.add_argument("--circuit-power", dest="circuit_power", help="circuit power (dBm)")
    common.add_argument("--noise-density", dest="noise_density", help="noise density (dBm/Hz)")
    common.add_argument("--bandwidth", help="bandwidth (Hz)")
    common.add_argument("--bs-radius", dest="bs_radius", help="BS coverage radius (m)")
    common.add_argument("--rsu-radius", dest="rsu_radius", help="RSU coverage radius (m)")
    common.add_argument("--pathloss-exp", dest="pathloss_exp")
    common.add_argument("--seed", help="master seed")
    common.add_argument("--max-iterations", dest="max_iterations")
    common.add_argument("--tol", help="convergence tolerance")
    common.add_argument("--step-size", dest="step_size", help="initial step size")

    parser = argparse.ArgumentParser(prog="ambc-v2x", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="{solve,sweep,verify}")

    p = sub.add_parser("solve", parents=[common], help="solve one channel realization")
    p.add_argument("--index", type=int, default=0, help="realization index under the master seed")
    p.add_argument("--mode", choices=MODES, default="ambc")

    p = sub.add_parser("sweep", parents=[common], help="Monte Carlo parameter sweep")
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    p.add_argument("--values", required=True, help="comma-separated, strictly ordered")
    p.add_argument("--modes", default=",".join(MODES))
    p.add_argument("--realizations", type=int, help="realizations per point")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output-dir", help=f"default ${OUTPUT_ENV} or ./results")
    p.add_argument("--gnuplot", action="store_true", help="also write sweep.gp")
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("verify", parents=[common], help="compare the solver with the grid oracles")
    p.add_argument("--seeds", type=int, default=20, help="number of realizations")
    p.add_argument("--p1-resolution", type=float, default=1e-3)
    p.add_argument("--p2-resolution", type=float, default=2e-2)
    p.add_argument("--refine", type=int, default=0, help="zoom levels of the oracle grids")
    p.add_argument("--mode", choices=MODES, default="ambc")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        config = resolve_config(args)
        handler = {"solve": _cmd_solve, "sweep": _cmd_sweep, "verify": _cmd_verify}[args.command]
        return handler(args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"invalid value: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (KeyError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
