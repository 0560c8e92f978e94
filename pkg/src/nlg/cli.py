"""Command-line driver: ``nlg solve | phantom | diagnose``.

Exit codes: 0 success, 1 input error, 2 non-convergence (outputs are still
written), 3 certificate failure.  Every option may also be given in a
``key=value`` file passed with ``--config``; flags override the file and
unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import fieldio
from .cdii import PHANTOMS, make_phantom, synthesize
from .duality import DEFAULT_THRESHOLDS, certify, multiplicity_test
from .exceptions import NLGError
from .fieldio import FieldFormatError
from .grid import Grid, square_flow
from .metric import Metric
from .solver import prepare_reference, run
from .estimators import make_config
from .validation import check_same_grid, check_tensor, check_weight

logger = logging.getLogger("nlg")

EXIT_OK, EXIT_INPUT, EXIT_NONCONV, EXIT_CERT = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    metric: str = "iso"
    a: str | None = None
    sigma0: str | None = None
    g: str | None = None
    u: str | None = None
    T: str | None = None
    alpha: float = 1.0
    max_iter: int = 5000
    stop_tol: float = 1e-6
    gap_tol: float = 1e-5
    div_tol: float = 1e-7
    eps_grad: float | None = None
    cg_tol: float = 1e-10
    seed: int = 0
    out: str | None = None
    # phantom
    name: str = "disk"
    nx: int = 64
    ny: int | None = None
    noise: float = 0.0
    # diagnose thresholds
    max_div: float = DEFAULT_THRESHOLDS["div_residual"]
    max_polar: float = DEFAULT_THRESHOLDS["polar_excess"]
    max_flux: float = DEFAULT_THRESHOLDS["flux_residual"]
    max_align: float = DEFAULT_THRESHOLDS["alignment_defect"]
    max_gap: float | None = None
    multiplicity: float | None = None

    @classmethod
    def from_sources(cls, file_values: dict, flag_values: dict):
        known = {f.name: f for f in fields(cls)}
        merged = {}
        for key, value in file_values.items():
            key = key.replace("-", "_")
            if key not in known:
                raise InputError(f"unknown config key {key!r}")
            merged[key] = value
        merged.update({k: v for k, v in flag_values.items() if v is not None})
        cfg = cls()
        for key, value in merged.items():
            setattr(cfg, key, _coerce(known[key], value))
        return cfg

    def solver_config(self):
        try:
            return make_config(self.alpha, self.max_iter, self.stop_tol, self.gap_tol,
                               self.div_tol, self.eps_grad, self.cg_tol)
        except ValueError as exc:
            raise InputError(str(exc)) from None


def _coerce(f, value):
    if value is None or isinstance(value, bool):
        return value
    t = str(f.type)
    try:
        if t.startswith("int"):
            return int(value)
        if t.startswith("float"):
            return float(value)
    except ValueError:
        raise InputError(f"{f.name}: cannot parse {value!r}") from None
    return str(value) if not isinstance(value, (int, float)) else value


def _need(cfg, name):
    value = getattr(cfg, name)
    if value is None:
        raise InputError(f"--{name.replace('_', '-')} is required")
    return value


def _read(path, kind):
    try:
        return fieldio.read_field(path, kind)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from None
    except FieldFormatError as exc:
        raise InputError(str(exc)) from None


def _load_metric(cfg, grid):
    a = _read(cfg.a, "scalar") if cfg.a else None
    if a is not None:
        check_same_grid(a, grid.zeros_scalar())
    a = check_weight(a, grid)
    if cfg.metric in ("riem", "riemannian"):
        if not cfg.sigma0:
            raise InputError("--sigma0 is required for --metric riem")
        try:
            tgrid, S = fieldio.read_tensor(cfg.sigma0)
        except (FileNotFoundError, FieldFormatError) as exc:
            raise InputError(str(exc)) from None
        if tgrid != grid:
            raise InputError(f"{cfg.sigma0}: grid does not match the boundary data")
        return Metric.riemannian(a, check_tensor(S, grid))
    if cfg.metric not in ("iso", "isotropic"):
        raise InputError(f"unknown metric {cfg.metric!r}")
    return Metric.isotropic(a)


def cmd_solve(cfg: RunConfig) -> int:
    g = _read(_need(cfg, "g"), "trace")
    metric = _load_metric(cfg, g.grid)
    out = Path(_need(cfg, "out"))
    scfg = cfg.solver_config()
    u, T, report, state = run(metric, g, scfg, return_state=True)
    u_g, _ = prepare_reference(g, scfg)
    cert = certify(metric, g, u, T, u_g, scfg.grad_floor)
    out.mkdir(parents=True, exist_ok=True)
    fieldio.write_field(out / "u.fld", u)
    fieldio.write_field(out / "T.fld", T)
    fieldio.write_field(out / "d.fld", state.d)
    fieldio.save_checkpoint(out / "checkpoint", state)
    body = report.to_dict()
    body["certificate"] = cert.to_dict()
    fieldio.write_report(out / "report.json", body)
    print(f"{report.termination_reason}: lambda_hat={report.lambda_hat:.12g} "
          f"gap={report.gap:.3e} iterations={report.iterations_used}")
    if report.termination_reason == "max_iter":
        print(f"no convergence within {scfg.max_iter} iterations; partial outputs in {out}",
              file=sys.stderr)
        return EXIT_NONCONV
    return EXIT_OK


def cmd_phantom(cfg: RunConfig) -> int:
    if cfg.name not in PHANTOMS:
        raise InputError(f"unknown phantom {cfg.name!r}; choose from {', '.join(sorted(PHANTOMS))}")
    ny = cfg.ny if cfg.ny is not None else cfg.nx
    try:
        grid = Grid(cfg.nx, ny, 1.0 / cfg.nx, 1.0 / ny)
        data = synthesize(make_phantom(cfg.name, grid), square_flow(grid), cfg.noise, cfg.seed,
                          cfg.solver_config().linear)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = Path(_need(cfg, "out"))
    out.mkdir(parents=True, exist_ok=True)
    fieldio.write_field(out / "a.fld", data.a)
    fieldio.write_field(out / "g.fld", data.g)
    fieldio.write_field(out / "J_true.fld", data.J_true)
    if data.sigma_true is not None:
        fieldio.write_field(out / "sigma_true.fld", data.sigma_true)
    if data.sigma0 is not None:
        fieldio.write_tensor(out / "sigma0.fld", grid, data.sigma0)
    meta = dict(data.metadata, power=data.power, drive="square_flow")
    fieldio.write_meta(out / "meta.txt", meta)
    print(f"wrote phantom {cfg.name!r} ({grid.nx}x{grid.ny}) to {out}")
    return EXIT_OK


def cmd_diagnose(cfg: RunConfig) -> int:
    g = _read(_need(cfg, "g"), "trace")
    u = _read(_need(cfg, "u"), "scalar")
    T = _read(_need(cfg, "T"), "vector")
    metric = _load_metric(cfg, g.grid)
    check_same_grid(g, u, T)
    scfg = cfg.solver_config()
    u_g, _ = prepare_reference(g, scfg)
    cert = certify(metric, g, u, T, u_g, cfg.eps_grad)
    thresholds = {"div_residual": cfg.max_div, "polar_excess": cfg.max_polar,
                  "flux_residual": cfg.max_flux, "alignment_defect": cfg.max_align}
    if cfg.max_gap is not None:
        thresholds["gap"] = cfg.max_gap
    failed = cert.failures(thresholds)
    body = {"certificate": cert.to_dict(), "thresholds": thresholds, "failed": failed}
    if cfg.multiplicity is not None:
        eps = cfg.multiplicity
        mult = multiplicity_test(metric, g, u, T, lambda t: t + eps * np.tanh(t), u_g, cfg.eps_grad)
        body["multiplicity"] = {"F": f"t + {eps!r} tanh(t)", "tv_excess": mult.tv_excess,
                                "alignment_defect": mult.alignment_defect}
    print(json.dumps(fieldio._jsonable(body), indent=2, sort_keys=True))
    if cfg.out:
        fieldio.write_report(cfg.out, body)
    return EXIT_CERT if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="nlg", description="Neumann least gradient solver")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value file; flags override it")
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--max-iter", dest="max_iter", type=int)
        sp.add_argument("--stop-tol", dest="stop_tol", type=float)
        sp.add_argument("--gap-tol", dest="gap_tol", type=float)
        sp.add_argument("--div-tol", dest="div_tol", type=float)
        sp.add_argument("--cg-tol", dest="cg_tol", type=float)
        sp.add_argument("--eps-grad", dest="eps_grad", type=float)

    def metric_args(sp):
        sp.add_argument("--metric", choices=["iso", "riem"])
        sp.add_argument("--a", help="weight field (scalar); default a = 1")
        sp.add_argument("--sigma0", help="tensor field for --metric riem")
        sp.add_argument("--g", help="boundary data (trace)")

    s = sub.add_parser("solve", help="run the least gradient solver")
    common(s)
    metric_args(s)

    ph = sub.add_parser("phantom", help="synthesize imaging data for a preset")
    common(ph)
    ph.add_argument("--name", help=f"one of {', '.join(sorted(PHANTOMS))}")
    ph.add_argument("--nx", type=int)
    ph.add_argument("--ny", type=int)
    ph.add_argument("--noise", type=float)

    d = sub.add_parser("diagnose", help="certify a (u, T) pair")
    common(d)
    metric_args(d)
    d.add_argument("--u")
    d.add_argument("--T", dest="T")
    d.add_argument("--max-div", dest="max_div", type=float)
    d.add_argument("--max-polar", dest="max_polar", type=float)
    d.add_argument("--max-flux", dest="max_flux", type=float)
    d.add_argument("--max-align", dest="max_align", type=float)
    d.add_argument("--max-gap", dest="max_gap", type=float)
    d.add_argument("--multiplicity", type=float, metavar="EPS",
                   help="also test F(t) = t + EPS tanh(t)")
    return p


COMMANDS = {"solve": cmd_solve, "phantom": cmd_phantom, "diagnose": cmd_diagnose}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        file_values = fieldio.read_meta(args.config) if args.config else {}
    except (OSError, ValueError) as exc:
        print(f"error: config {args.config}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        cfg = RunConfig.from_sources(file_values, flags)
        return COMMANDS[args.command](cfg)
    except (InputError, NLGError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
