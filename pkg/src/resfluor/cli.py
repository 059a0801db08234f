"""Command-line runner.

Usage::

    resfluor evolve --config run.yaml
    resfluor covariance --drive '{type:"thermal", n_th:1}' --gamma0 0.5 --gamma-s 0.5 --theta 1.5708
    resfluor nulltest --config run.yaml --seed 7 --format csv --out report.csv
    resfluor rates quadrupole --mass 1150 --length 2 --freq-hz 1000

Configs are YAML (JSON also parses). Every command prints one flat record
carrying ``schema_version`` and ``command``; matrices appear as row-major
nested lists in JSON and as ``name_ij`` columns in CSV. ``sample`` emits the
raw shots instead (columns ``config, shot, outcome_b, outcome_c``).

Exit status: 0 on success, 2 for configuration errors, 3 for physics errors
(unphysical state, blind coupling, Fock truncation).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np
import yaml

from . import measurement, nulltest, oracle, physrates, sampler
from .dynamics import (
    Rates, dt_of, evolve_gaussian, mode_transform_explicit, prefactor_F, theta_of, transfer_amplitudes,
)
from .errors import ConfigError, DomainError, InvalidInput
from .states import Coherent, drive_from_dict, format_drive, parse_drive

SCHEMA_VERSION = 1
COMMANDS = ("evolve", "covariance", "nulltest", "counting", "sample", "oracle-check", "rates")


# config ----------------------------------------------------------------------


def _num(section: dict, key: str, where: str, default=None, kind=float):
    if key not in section or section[key] is None:
        if default is None:
            raise ConfigError(f"{where}.{key}: required field missing")
        return default
    try:
        value = kind(float(section[key])) if kind is int else kind(section[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}.{key}: expected a number, got {section[key]!r}") from exc
    if kind is int and float(section[key]) != value:
        raise ConfigError(f"{where}.{key}: expected an integer, got {section[key]!r}")
    return value


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: invalid YAML{where}: {getattr(exc, 'problem', exc)}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


class RunConfig:
    """Validated view of a config mapping merged with command-line overrides."""

    def __init__(self, raw: dict, args: argparse.Namespace | None = None):
        raw = dict(raw)
        args = args or argparse.Namespace()

        drive = getattr(args, "drive", None) or raw.get("drive")
        if drive is None:
            raise ConfigError("drive: required field missing")
        try:
            self.drive = parse_drive(drive) if isinstance(drive, str) else drive_from_dict(drive)
        except InvalidInput as exc:
            raise ConfigError(f"drive: {exc}") from exc

        rates = dict(raw.get("rates") or {})
        for flag, key in (("gamma0", "gamma0"), ("gamma_s", "gamma_s")):
            if getattr(args, flag, None) is not None:
                rates[key] = getattr(args, flag)
        g0, gs = _num(rates, "gamma0", "rates"), _num(rates, "gamma_s", "rates")
        try:
            self.rates = Rates(g0, gs)
        except InvalidInput as exc:
            raise ConfigError(f"rates: {exc}") from exc

        dt, theta = raw.get("dt"), raw.get("theta")
        if getattr(args, "dt", None) is not None or getattr(args, "theta", None) is not None:
            dt, theta = getattr(args, "dt", None), getattr(args, "theta", None)
        if (dt is None) == (theta is None):
            raise ConfigError("time: give exactly one of dt or theta")
        time = {"dt": dt, "theta": theta}
        try:
            if dt is not None:
                self.dt = _num(time, "dt", "time")
                theta_of(self.rates, self.dt)
            else:
                self.dt = dt_of(self.rates, _num(time, "theta", "time"))
        except InvalidInput as exc:
            raise ConfigError(f"time: {exc}") from exc

        s = dict(raw.get("sampling") or {})
        if getattr(args, "seed", None) is not None:
            s["seed"] = args.seed
        if getattr(args, "shots", None) is not None:
            s["shots"] = args.shots
        self.shots = _num(s, "shots", "sampling", sampler.DEFAULT_SHOTS, int)
        self.seed = _num(s, "seed", "sampling", sampler.DEFAULT_SEED, int)
        self.workers = _num(s, "workers", "sampling", 1, int)
        try:
            names = s.get("configs") or [c.name for c in measurement.ALL_CONFIGS]
            self.configs = tuple(measurement.QuadConfig.parse(str(c)) for c in names)
        except InvalidInput as exc:
            raise ConfigError(f"sampling.configs: {exc}") from exc

        o = dict(raw.get("oracle") or {})
        try:
            self.fock = oracle.FockConfig(
                _num(o, "dim", "oracle", 12, int), _num(o, "tail_tol", "oracle", 1e-10)
            )
        except InvalidInput as exc:
            raise ConfigError(f"oracle: {exc}") from exc

        nt = dict(raw.get("nulltest") or {})
        self.z_threshold = _num(nt, "z_threshold", "nulltest", nulltest.DEFAULT_Z_THRESHOLD)
        c = dict(raw.get("counting") or {})
        self.n_max = _num(c, "n_max", "counting", 10, int)

        out = dict(raw.get("output") or {})
        self.format = getattr(args, "format", None) or out.get("format") or "json"
        if self.format not in ("json", "csv"):
            raise ConfigError(f"output.format: expected json or csv, got {self.format!r}")
        self.path = getattr(args, "out", None) or out.get("path")

    def plan(self) -> sampler.ExperimentPlan:
        try:
            return sampler.ExperimentPlan(
                self.drive, self.rates, self.dt, self.shots, self.configs, self.seed
            )
        except (DomainError, InvalidInput) as exc:
            raise ConfigError(f"sampling: {exc}") from exc

    def header(self, command: str) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "drive": format_drive(self.drive),
            "gamma0": self.rates.gamma0,
            "gamma_s": self.rates.gamma_s,
            "dt": self.dt,
            "theta": theta_of(self.rates, self.dt),
        }


# commands --------------------------------------------------------------------


def cmd_evolve(cfg: RunConfig) -> dict:
    amps = transfer_amplitudes(cfg.rates, cfg.dt)
    state = evolve_gaussian(cfg.drive, cfg.rates, cfg.dt)
    M = mode_transform_explicit(cfg.rates, cfg.dt).M
    rec = cfg.header("evolve")
    for name in ("A_a", "A_b", "A_c"):
        z = getattr(amps, name)
        rec[f"{name}_re"], rec[f"{name}_im"] = z.real, z.imag
    rec["M_re"] = M.real.tolist()
    rec["M_im"] = M.imag.tolist()
    rec["mean"] = state.mean.tolist()
    rec["cov"] = state.cov.tolist()
    return rec


def cmd_covariance(cfg: RunConfig) -> dict:
    cov = measurement.emitter_fluorescence_covariances(cfg.drive, cfg.rates, cfg.dt)
    rec = cfg.header("covariance")
    rec.update(pb_xc=cov.pb_xc, pb_pc=cov.pb_pc, xb_xc=cov.xb_xc, xb_pc=cov.xb_pc)
    rec["F"] = prefactor_F(cfg.rates, cfg.dt)
    return rec


def cmd_nulltest(cfg: RunConfig) -> dict:
    plan = cfg.plan()
    m = sampler.simulate(plan, cfg.workers)
    report = nulltest.null_test(m, cfg.rates, cfg.dt, cfg.z_threshold)
    rec = cfg.header("nulltest")
    rec.update(shots_per_config=m.shots_per_config, seed=plan.seed)
    for name, v, se in zip(("pb_xc", "pb_pc", "xb_xc", "xb_pc"), m.values.as_array(), m.stderrs):
        rec[name], rec[f"{name}_stderr"] = float(v), float(se)
    rec.update(report.to_record())
    return rec


def cmd_counting(cfg: RunConfig) -> dict:
    cs = measurement.counting_stats(cfg.drive, cfg.rates, cfg.dt)
    coh = measurement.g2_and_q(cfg.drive)
    rec = cfg.header("counting")
    rec.update(
        mean_nc=cs.mean_nc, var_nc=cs.var_nc, cov_nb_nc=cs.cov_nb_nc,
        g2_drive=cs.g2_drive, mandel_q_drive=cs.mandel_q_drive, n_a=coh.n_a, G=cs.G,
    )
    try:
        rec["pmf"] = measurement.fluorescence_count_pmf(cfg.drive, cfg.rates, cfg.dt, np.arange(cfg.n_max + 1)).tolist()
    except DomainError:
        rec["pmf"] = None
    return rec


def cmd_oracle_check(cfg: RunConfig) -> dict:
    if not isinstance(cfg.drive, Coherent):
        raise ConfigError("drive: oracle-check needs a coherent drive")
    report = oracle.oracle_compare(cfg.drive, cfg.rates, cfg.dt, cfg.fock)
    rec = cfg.header("oracle-check")
    rec.update(dim=cfg.fock.dim, tail_tol=cfg.fock.tail_tol)
    rec.update({f"dev_{k}": v for k, v in report.items() if k != "max_abs_deviation"})
    rec["max_abs_deviation"] = report["max_abs_deviation"]
    return rec


def cmd_sample(cfg: RunConfig) -> sampler.SampleSet:
    return sampler.sample_shots(cfg.plan(), cfg.workers)


def cmd_rates(args: argparse.Namespace) -> dict:
    rec = {"schema_version": SCHEMA_VERSION, "command": "rates", "kind": args.kind}

    def omega():
        if (args.omega is None) == (args.freq_hz is None):
            raise ConfigError("rates: give exactly one of --omega (rad/s) or --freq-hz")
        return args.omega if args.omega is not None else physrates.hz_to_angular(args.freq_hz)

    def need(**kw):
        for k, v in kw.items():
            if v is None:
                raise ConfigError(f"rates {args.kind}: --{k.replace('_', '-')} is required")

    if args.kind == "dipole":
        need(dipole=args.dipole)
        w = omega()
        rec.update(omega=w, dipole=args.dipole, rate=physrates.dipole_rate(w, args.dipole))
        rec["caveat"] = physrates.DIPOLE_CAVEAT
    elif args.kind == "matterwave":
        need(Omega=args.Omega, omega0=args.omega0, Delta=args.Delta)
        rec.update(Omega=args.Omega, omega0=args.omega0, Delta=args.Delta,
                   rate=physrates.matterwave_rate(args.Omega, args.omega0, args.Delta))
    else:
        need(mass=args.mass, length=args.length)
        w = omega()
        rec.update(mass=args.mass, length=args.length, omega=w,
                   rate=physrates.quadrupole_rate(args.mass, args.length, w))
    rec["units"] = "1/s"
    return rec


# output ----------------------------------------------------------------------


def _flatten(rec: dict) -> dict:
    flat = {}
    for k, v in rec.items():
        if isinstance(v, list) and v and isinstance(v[0], list):
            for i, row in enumerate(v):
                for j, x in enumerate(row):
                    flat[f"{k}_{i}{j}"] = x
        elif isinstance(v, list):
            for i, x in enumerate(v):
                flat[f"{k}_{i}"] = x
        else:
            flat[k] = v
    return flat


def render(result, fmt: str) -> str:
    if isinstance(result, sampler.SampleSet):
        if fmt == "csv":
            return result.to_csv()
        rec = {"schema_version": SCHEMA_VERSION, "command": "sample", "seed": result.plan.seed,
               "shots_per_config": result.plan.shots_per_config}
        rec["samples"] = {cfg.name: arr.tolist() for cfg, arr in result.samples.items()}
        return json.dumps(rec) + "\n"
    if fmt == "csv":
        flat = _flatten(result)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(flat.keys())
        w.writerow(["" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in flat.values()])
        return buf.getvalue()
    return json.dumps(result, indent=2) + "\n"


# entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resfluor", description="Driven emitter / resonance fluorescence simulator")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON run configuration")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--seed", type=int)
    common.add_argument("--shots", type=int)
    common.add_argument("--drive", help='drive state, e.g. \'{type:"coherent", alpha:[1,0]}\'')
    common.add_argument("--gamma0", type=float)
    common.add_argument("--gamma-s", dest="gamma_s", type=float)
    t = common.add_mutually_exclusive_group()
    t.add_argument("--theta", type=float, help="dimensionless angle sqrt(dt * gamma)")
    t.add_argument("--dt", type=float, help="window length, inverse units of the rates")

    for name in COMMANDS[:-1]:
        sub.add_parser(name, parents=[common])

    r = sub.add_parser("rates", help="physical coupling rates (SI)")
    r.add_argument("kind", choices=("dipole", "matterwave", "quadrupole"))
    r.add_argument("--omega", type=float, help="angular frequency, rad/s")
    r.add_argument("--freq-hz", dest="freq_hz", type=float, help="ordinary frequency, converted to 2*pi*f")
    r.add_argument("--dipole", type=float, help="transition dipole moment, C m")
    r.add_argument("--Omega", type=float)
    r.add_argument("--omega0", type=float)
    r.add_argument("--Delta", type=float)
    r.add_argument("--mass", type=float, help="kg")
    r.add_argument("--length", type=float, help="m")
    r.add_argument("--out")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    return p


_DISPATCH = {
    "evolve": cmd_evolve,
    "covariance": cmd_covariance,
    "nulltest": cmd_nulltest,
    "counting": cmd_counting,
    "sample": cmd_sample,
    "oracle-check": cmd_oracle_check,
}


def run(argv=None) -> tuple[int, str]:
    """Execute a command; returns ``(exit_code, text)`` without touching stdout."""
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rates":
            result, fmt, path = cmd_rates(args), args.format, args.out
        else:
            cfg = RunConfig(load_config(args.config), args)
            result, fmt, path = _DISPATCH[args.command](cfg), cfg.format, cfg.path
    except DomainError as exc:
        return 3, f"error: {exc}\n"
    except InvalidInput as exc:
        return 2, f"error: {exc}\n"
    text = render(result, fmt)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
        return 0, ""
    return 0, text


def main(argv=None) -> int:
    try:
        code, text = run(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    (sys.stdout if code == 0 else sys.stderr).write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
