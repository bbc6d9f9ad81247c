"""Command-line entry point.

Configuration is a flat ``key = value`` file (``#`` starts a comment); any
``key=value`` arguments after the subcommand override it, later ones
winning.  Exit status: 0 ok, 2 configuration or input error, 3 solver
non-convergence, 4 verification flag raised.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, calculus, harness, kernels
from .fieldio import write_field
from .grid import BoxDomain, ContractError
from .lorentz import MeasuredSample, lorentz_norm, lorentz_norm_inf, lp_norm
from .solver import SolverConfig, solve

log = logging.getLogger("pcurl")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_FLAGGED = 0, 2, 3, 4


class ConfigError(Exception):
    pass


def _floats(s):
    return tuple(float(x) for x in s.replace(",", " ").split())


def _ints(s):
    return tuple(int(x) for x in s.replace(",", " ").split())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _source(s):
    if s not in harness.SOURCE_KINDS:
        raise ValueError(f"expected one of {', '.join(harness.SOURCE_KINDS)}")
    return s


def _fmt(v):
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# key -> (parser, default); a default of None means "required"
_SOLVER_KEYS = {
    "grad_tol": (float, 1e-8),
    "max_iters": (int, 20000),
    "epsilon_schedule": (_floats, ""),
    "poisson_tol": (float, 1e-10),
    "restart": (int, 50),
    "precondition": (_bool, True),
    "stage_tol": (float, 1e-6),
}
_SOURCE_KEYS = {
    "source": (_source, "random-divfree"),
    "seed": (int, 0),
    "amplitude": (float, 1.0),
    "smoothness": (int, 2),
    "source_file": (str, ""),
}
_DOMAIN_KEYS = {"lengths": (_floats, (1.0, 1.0, 1.0))}

SCHEMAS = {
    "solve": {"p": (float, None), "resolution": (_ints, (16,)), "residual_trials": (int, 8),
              **_DOMAIN_KEYS, **_SOURCE_KEYS, **_SOLVER_KEYS},
    "verify": {"p_values": (_floats, (1.5, 2.0, 3.0)), "resolutions": (_ints, (16, 32)),
               "lambdas": (_floats, (1.0,)), **_DOMAIN_KEYS, **_SOURCE_KEYS, **_SOLVER_KEYS},
    "sweep": {"p_values": (_floats, None), "resolutions": (_ints, None), "seeds": (_ints, ""),
              "lambdas": (_floats, (1.0,)), **_DOMAIN_KEYS, **_SOURCE_KEYS, **_SOLVER_KEYS},
    "convergence": {"resolutions": (_ints, None), "p": (float, 2.0), **_DOMAIN_KEYS, **_SOLVER_KEYS},
}


def read_config_text(text: str, origin: str = "config") -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{origin}:{lineno}: empty key")
        raw[key] = value
    return raw


def resolve_config(command: str, raw: dict) -> dict:
    """Validate raw strings against the command's schema and fill defaults."""
    schema = SCHEMAS[command]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown configuration key(s) for {command}: {', '.join(unknown)}")
    out = {}
    for key, (parse, default) in schema.items():
        if key in raw:
            try:
                out[key] = parse(raw[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {raw[key]!r} ({exc})") from None
        elif default is None:
            raise ConfigError(f"missing required configuration key {key!r}")
        else:
            out[key] = default
    return out


def _solver_options(cfg: dict) -> dict:
    opts = {k: cfg[k] for k in _SOLVER_KEYS}
    if not opts["epsilon_schedule"]:
        opts["epsilon_schedule"] = None
    return opts


def _lengths(cfg):
    if len(cfg["lengths"]) != 3:
        raise ConfigError("lengths needs three values")
    return cfg["lengths"]


def _sweep_spec(command: str, cfg: dict) -> harness.SweepSpec:
    seeds = cfg.get("seeds") or (cfg["seed"],)
    if cfg["source"] == "file" and not cfg["source_file"]:
        raise ConfigError("source = file needs source_file")
    try:
        spec = harness.SweepSpec(
            p_values=cfg["p_values"], resolutions=cfg["resolutions"], source=cfg["source"],
            lambdas=cfg["lambdas"], seeds=seeds, smoothness=cfg["smoothness"],
            amplitude=cfg["amplitude"], lengths=_lengths(cfg), source_file=cfg["source_file"] or None,
            solver=_solver_options(cfg),
        )
        for p in spec.p_values:
            SolverConfig(p=p, **spec.solver)
    except ContractError as exc:
        raise ConfigError(str(exc)) from None
    return spec


def _dump_resolved(cfg: dict, path: Path):
    with open(path, "w") as fh:
        for key in sorted(cfg):
            fh.write(f"{key} = {_fmt(cfg[key])}\n")


def _write_json(obj, path: Path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _embedded(cfg):
    return {k: _fmt(v) for k, v in sorted(cfg.items())}


# -- commands ----------------------------------------------------------------

def cmd_solve(cfg: dict, out: Path) -> int:
    res = cfg["resolution"]
    if len(res) == 1:
        res = res * 3
    if len(res) != 3:
        raise ConfigError("resolution takes one or three integers")
    try:
        g = BoxDomain(_lengths(cfg), res)
        scfg = SolverConfig(p=cfg["p"], **_solver_options(cfg))
        spec = harness.SweepSpec(p_values=(cfg["p"],), resolutions=(res[0],), source=cfg["source"],
                                 seeds=(cfg["seed"],), smoothness=cfg["smoothness"],
                                 amplitude=cfg["amplitude"], lengths=g.lengths,
                                 source_file=cfg["source_file"] or None)
        f = harness.build_source(spec, g, cfg["seed"])
    except (ContractError, OSError) as exc:
        raise ConfigError(str(exc)) from None

    result = solve(f, scfg, g, residual_trials=cfg["residual_trials"])
    report = harness.estimate_report(result, f, scfg.p, g, seed=cfg["seed"], source=cfg["source"])

    out.mkdir(parents=True, exist_ok=True)
    write_field(out / "u.field", result.u)
    write_field(out / "curl_u.field", result.curl_u)
    with open(out / "trace.txt", "w") as fh:
        fh.write("stage iteration eps energy grad_norm\n")
        for stage, eps, it, J, gn in result.trace:
            fh.write(f"{stage} {it} {eps!r} {J!r} {gn!r}\n")
    summary = {
        "command": "solve",
        "config": _embedded(cfg),
        "kernels": kernels.BACKEND,
        "converged": result.converged,
        "message": result.message,
        "energy": result.energy,
        "iterations": result.iterations,
        "eps": result.eps,
        "epsilon_schedule": list(scfg.epsilon_schedule),
        "projected_grad_norm": result.projected_grad_norm,
        "weak_residual": result.weak_residual,
        "norm_u_l2": calculus.norm(result.u, g),
        "max_interior_divergence": calculus.interior_divergence_max(result.u, g),
        "norm_curl_inf": report.norm_curl_inf,
        "norm_curl_inf_faces": report.norm_curl_inf_faces,
        "norm_curl_p": report.norm_curl_p,
        "norm_f_31": report.norm_f_31,
        "c_emp_inf": report.c_emp_inf,
        "c_emp_p": report.c_emp_p,
    }
    _write_json(summary, out / "summary.json")
    _dump_resolved(cfg, out / "resolved.cfg")
    if not result.converged:
        log.error("solver did not converge: %s", result.message)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _finish_reports(command, cfg, reports, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    harness.write_reports(reports, out / "reports.jsonl")
    harness.write_table(reports, out / "table.csv")
    failed = [r for r in reports if not r.converged]
    flagged = [r for r in reports if r.flags]
    _write_json({
        "command": command,
        "config": _embedded(cfg),
        "kernels": kernels.BACKEND,
        "configurations": len(reports),
        "nonconverged": len(failed),
        "flagged": len(flagged),
        "flags": [f for r in flagged for f in r.flags],
        "max_change_c_emp_inf": harness.max_refinement_change(reports, "c_emp_inf"),
        "max_change_c_emp_p": harness.max_refinement_change(reports, "c_emp_p"),
    }, out / "summary.json")
    _dump_resolved(cfg, out / "resolved.cfg")
    for r in failed:
        log.error("p=%g N=%s seed=%d lambda=%g: %s", r.p, r.shape, r.seed, r.lam, r.message)
    for r in flagged:
        log.warning("p=%g N=%s seed=%d lambda=%g: %s", r.p, r.shape, r.seed, r.lam, "; ".join(r.flags))
    if failed:
        return EXIT_NONCONVERGED
    return EXIT_FLAGGED if flagged else EXIT_OK


def cmd_verify(cfg: dict, out: Path, threads: int = 1, command: str = "verify") -> int:
    spec = _sweep_spec(command, cfg)
    reports = harness.run_sweep(spec, threads)
    harness.verify_linfty_estimate(spec, reports=reports)
    harness.verify_lp_estimate(spec, reports=reports)
    return _finish_reports(command, cfg, reports, out)


def cmd_sweep(cfg: dict, out: Path, threads: int = 1) -> int:
    return cmd_verify(cfg, out, threads, command="sweep")


def cmd_convergence(cfg: dict, out: Path) -> int:
    try:
        SolverConfig(p=cfg["p"], **_solver_options(cfg))
        table = harness.convergence_study(cfg["resolutions"], cfg["p"], _lengths(cfg), _solver_options(cfg))
    except ContractError as exc:
        raise ConfigError(str(exc)) from None
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "convergence.csv", "w") as fh:
        for row in table.rows():
            fh.write(",".join(str(x) for x in row) + "\n")
    _write_json({"command": "convergence", "config": _embedded(cfg), "kernels": kernels.BACKEND,
                 "errors": table.errors, "orders": table.orders}, out / "summary.json")
    _dump_resolved(cfg, out / "resolved.cfg")
    return EXIT_OK


def read_sample(path) -> MeasuredSample:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    values, weights = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if len(parts) != 2:
                raise ValueError
            v, w = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError(f"{path}: row {lineno}: expected 'value weight'") from None
        if not (np.isfinite(v) and np.isfinite(w)) or v < 0 or w <= 0:
            raise ConfigError(f"{path}: row {lineno}: need value >= 0 and weight > 0")
        values.append(v)
        weights.append(w)
    if not values:
        raise ConfigError(f"{path}: no data rows")
    return MeasuredSample(values, weights)


def format12(x: float) -> str:
    """Twelve significant digits, trailing zeros kept."""
    return np.format_float_positional(x, precision=12, unique=False, fractional=False, trim="k")


def cmd_lorentz(args) -> int:
    s = read_sample(args.data)
    try:
        lines = []
        for m, q in zip(args.m, args.p):
            if q == "inf":
                lines.append((f"L({m:g},inf)", lorentz_norm_inf(s, m)))
            else:
                lines.append((f"L({m:g},{float(q):g})", lorentz_norm(s, m, float(q))))
        for q in args.lp:
            lines.append((f"L^{q}", lp_norm(s, np.inf if q == "inf" else float(q))))
    except (ContractError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    lines.append(("measure", s.total_measure))
    for name, val in lines:
        print(f"{name} = {format12(val)}")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------

def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", default="pcurl-out", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="parallel sweep configurations")
    common.add_argument("--seed", type=int, help="overrides the 'seed' key")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("overrides", nargs="*", metavar="key=value")

    ap = argparse.ArgumentParser(prog="pcurl", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve one problem, write fields and a summary")
    sub.add_parser("verify", parents=[common], help="check both estimates over p and resolution")
    sub.add_parser("sweep", parents=[common], help="verify over p, resolution, seeds and scalings")
    sub.add_parser("convergence", parents=[common], help="manufactured-solution convergence table")
    lz = sub.add_parser("lorentz", help="Lorentz and Lebesgue norms of a (value, weight) file")
    lz.add_argument("data")
    lz.add_argument("--m", type=float, action="append", help="first Lorentz index (default 3)")
    lz.add_argument("--p", action="append", help="second Lorentz index or 'inf' (default 1)")
    lz.add_argument("--lp", action="append", default=[], help="also print the L^p norm")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "lorentz":
            args.m = args.m or [3.0]
            args.p = args.p or ["1"]
            if len(args.m) != len(args.p):
                raise ConfigError("give --m and --p the same number of times")
            return cmd_lorentz(args)
        raw = {}
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
            raw.update(read_config_text(text, args.config))
        for item in args.overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            k, v = item.split("=", 1)
            raw[k.strip()] = v.strip()
        if args.seed is not None:
            raw["seed"] = str(args.seed)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = resolve_config(args.command, raw)
        out = Path(args.out)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out, args.threads)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.threads)
        return cmd_convergence(cfg, out)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
