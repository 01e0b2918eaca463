"""Command line interface: parameter parsing, harness dispatch, reporting.

Commands
--------
pressure     both model pressures with breakdowns and bounds at one point
equivalence  pressure-gap ladder, rate fit, condensate comparison
laplace      zero-mode series against its Laplace-principle supremum
fulldiag     exact-diagonalization sandwich for a mean-field diagonal model
sweep        pressure rows over a (beta, mu, nu) grid, optionally parallel

Exit codes: 0 all checks passed, 1 checks ran but failed, 2 invalid input,
3 non-convergence or resource guard.  Output is CSV (default) or JSON
lines; floats are printed with 17 significant digits so they round-trip
exactly, and the wall-clock duration is segregated into the final column
so byte-level comparisons can drop it.
"""

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .equivalence import delta_pressure_closed_form, verify_equivalence
from .errors import (BoseLimitsError, DomainError, NonConvergenceError,
                     ResourceGuardError)
from .fockdiag import DiagonalModel, truncate_lattice, verify_sandwich
from .lattice_ideal import ThermoPoint, build_lattice
from .nonlinear_model import (ExponentFunction, laplace_sup, pressure_sqrt_source,
                              zero_mode_log_partition)
from .source_model import pressure_source

__all__ = ["RunConfig", "parse_config", "run", "emit_csv", "emit_json", "main"]

COMMANDS = ("pressure", "equivalence", "laplace", "fulldiag", "sweep")

_COLUMNS = {
    "pressure": [
        "command", "beta", "mu", "nu", "phi", "dim", "side", "volume", "pmax",
        "p_linear_zero_mode", "p_linear_primed", "p_linear_constant",
        "p_linear_total", "p_linear_bound",
        "p_sqrt_zero_mode", "p_sqrt_primed", "p_sqrt_total", "p_sqrt_bound",
        "delta_p", "identity_rel_err", "passed", "duration_s",
    ],
    "equivalence": [
        "command", "row", "beta", "mu", "nu", "dim", "side", "volume",
        "delta_p", "identity_rel_err", "fitted_rate", "fit_residual",
        "rho0_linear", "rho0_sqrt", "rho0_diff", "passed", "duration_s",
    ],
    "laplace": [
        "command", "beta", "mu", "nu", "dim", "side", "volume", "maximizer",
        "sup_value", "numeric_log_sum", "gap", "gap_bound", "terms_used",
        "tail_bound", "passed", "duration_s",
    ],
    "fulldiag": [
        "command", "beta", "mu", "nu", "mf_a", "coefficient", "cutoffs",
        "dimension", "volume", "p_linear", "p_sqrt", "delta_p", "lower",
        "upper", "jensen_upper", "lower_margin", "upper_margin", "a0_scaled",
        "sqrt_rho0", "shell_weight", "passed", "duration_s",
    ],
}
_COLUMNS["sweep"] = _COLUMNS["pressure"]


@dataclass
class RunConfig:
    """Validated inputs of one CLI run."""

    command: str
    beta: tuple = (1.0,)
    mu: tuple = ()
    nu: tuple = (0.0,)
    phi: float = 0.0
    dim: int = 3
    side: float = 16.0
    ladder: tuple = (8, 16, 32, 64)
    pmax: float = 10.0
    fock_cutoff: tuple = (20,)
    coefficient: float = 2.0
    mf_a: float = 1.0
    rel_tol: float = 1e-10
    fd_step: float = 1e-5
    workers: int = 1
    out: str = "-"
    format: str = "csv"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise DomainError(f"unknown command {self.command!r}")
        if not self.mu:
            raise DomainError("mu is required")
        for m in self.mu:
            if m >= 0.0:
                raise DomainError("outside stability domain (mu must be < 0)")
        for b in self.beta:
            if b <= 0.0:
                raise DomainError("beta must be positive")
        for n in self.nu:
            if n < 0.0:
                raise DomainError("nu must be nonnegative")
        if self.command != "sweep" and (len(self.beta), len(self.mu), len(self.nu)) != (1, 1, 1):
            raise DomainError(f"command {self.command} takes single beta/mu/nu values")
        if self.rel_tol <= 0.0 or self.fd_step <= 0.0:
            raise DomainError("tolerances must be positive")
        if not self.ladder:
            raise DomainError("ladder must not be empty")
        if self.format not in ("csv", "json"):
            raise DomainError(f"unknown format {self.format!r}")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")


def _parse_floats(text: str, key: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise DomainError(f"could not parse {key}={text!r} as numbers") from exc


def _parse_ints(text: str, key: str) -> tuple:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise DomainError(f"could not parse {key}={text!r} as integers") from exc


def _read_config_file(path: str) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (tok.strip() for tok in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


_STRING_KEYS = {"command", "out", "format"}
_LIST_FLOAT_KEYS = {"beta", "mu", "nu"}
_LIST_INT_KEYS = {"ladder", "fock_cutoff"}
_FLOAT_KEYS = {"phi", "side", "pmax", "coefficient", "mf_a", "rel_tol", "fd_step"}
_INT_KEYS = {"dim", "workers"}

_ALL_FLAGS = {"--command", "--config", "--beta", "--mu", "--nu", "--phi",
              "--side", "--pmax", "--coefficient", "--mf-a", "--rel-tol",
              "--fd-step", "--dim", "--workers", "--ladder", "--fock-cutoff",
              "--out", "--format"}


def _attach_values(argv):
    """Join each flag with its value ('--mu=-0.5,-1').

    Every flag here takes exactly one value; attaching it keeps argparse
    from mistaking negative numbers or comma lists for option names.
    """
    out, i = [], 0
    argv = list(argv)
    while i < len(argv):
        tok = argv[i]
        if tok in _ALL_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def parse_config(argv: Sequence[str]) -> RunConfig:
    """Build a RunConfig from flags, with optional --config file underlay.

    Flags take precedence over config-file entries; validation failures
    raise DomainError naming the offending key.
    """
    parser = argparse.ArgumentParser(prog="bose-limits", add_help=True)
    parser.add_argument("--command", choices=COMMANDS, default=None)
    parser.add_argument("--config", default=None)
    for key in ("--beta", "--mu", "--nu"):
        parser.add_argument(key, default=None)
    for key in ("--phi", "--side", "--pmax", "--coefficient", "--mf-a",
                "--rel-tol", "--fd-step"):
        parser.add_argument(key, type=float, default=None)
    parser.add_argument("--dim", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--ladder", default=None)
    parser.add_argument("--fock-cutoff", default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    ns = parser.parse_args(_attach_values(argv))

    merged = {}
    if ns.config is not None:
        merged.update(_read_config_file(ns.config))
    for key, value in vars(ns).items():
        if key != "config" and value is not None:
            merged[key] = value

    if "command" not in merged:
        raise DomainError("--command is required")

    kwargs = {}
    for key, value in merged.items():
        if key in _STRING_KEYS:
            kwargs[key] = str(value)
        elif key in _LIST_FLOAT_KEYS:
            kwargs[key] = _parse_floats(str(value), key)
        elif key in _LIST_INT_KEYS:
            kwargs[key] = _parse_ints(str(value), key)
        elif key in _FLOAT_KEYS:
            try:
                kwargs[key] = float(value)
            except ValueError as exc:
                raise DomainError(f"could not parse {key}={value!r}") from exc
        elif key in _INT_KEYS:
            try:
                kwargs[key] = int(value)
            except ValueError as exc:
                raise DomainError(f"could not parse {key}={value!r}") from exc
        else:
            raise DomainError(f"unknown configuration key {key!r}")
    return RunConfig(**kwargs)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, tuple):
        return ";".join(str(v) for v in value)
    return "" if value is None else str(value)


def emit_csv(rows: Sequence[dict], stream, columns: Sequence[str]) -> None:
    """Header plus one line per row; 17 significant digits, stable order."""
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(row.get(col)) for col in columns) + "\n")


def emit_json(rows: Sequence[dict], stream, columns: Sequence[str]) -> None:
    """One JSON object per line, keys identical to the CSV header."""
    for row in rows:
        obj = {col: row.get(col) for col in columns}
        for key, value in obj.items():
            if isinstance(value, tuple):
                obj[key] = ";".join(str(v) for v in value)
        stream.write(json.dumps(obj) + "\n")


def _pressure_row(beta: float, mu: float, nu: float, cfg: RunConfig) -> dict:
    start = time.perf_counter()
    lattice = build_lattice(cfg.dim, cfg.side, cfg.pmax)
    point = ThermoPoint(beta=beta, mu=mu, nu=nu, phi=cfg.phi, lattice=lattice)
    p_lin = pressure_source(point)
    p_sqrt = pressure_sqrt_source(point, rel_tol=cfg.rel_tol,
                                  coefficient=cfg.coefficient)
    delta = p_lin.total - p_sqrt.total
    closed = delta_pressure_closed_form(point, rel_tol=cfg.rel_tol)
    rel_err = abs(delta - closed) / max(abs(closed), 1e-300)
    return {
        "command": cfg.command, "beta": beta, "mu": mu, "nu": nu,
        "phi": cfg.phi, "dim": cfg.dim, "side": cfg.side,
        "volume": lattice.volume, "pmax": cfg.pmax,
        "p_linear_zero_mode": p_lin.zero_mode, "p_linear_primed": p_lin.primed,
        "p_linear_constant": p_lin.constant, "p_linear_total": p_lin.total,
        "p_linear_bound": p_lin.truncation_bound,
        "p_sqrt_zero_mode": p_sqrt.zero_mode, "p_sqrt_primed": p_sqrt.primed,
        "p_sqrt_total": p_sqrt.total, "p_sqrt_bound": p_sqrt.truncation_bound,
        "delta_p": delta, "identity_rel_err": rel_err,
        "passed": rel_err <= 1e-12, "duration_s": time.perf_counter() - start,
    }


def _run_pressure(cfg: RunConfig) -> tuple:
    row = _pressure_row(cfg.beta[0], cfg.mu[0], cfg.nu[0], cfg)
    return (0 if row["passed"] else 1), [row]


def _run_sweep(cfg: RunConfig) -> tuple:
    grid = [(b, m, n) for b in cfg.beta for m in cfg.mu for n in cfg.nu]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_task, [(b, m, n, cfg) for b, m, n in grid]))
    else:
        rows = [_pressure_row(b, m, n, cfg) for b, m, n in grid]
    # Emission order is fixed by the input grid, never by scheduling.
    rows.sort(key=lambda r: (r["beta"], r["mu"], r["nu"]))
    code = 0 if all(r["passed"] for r in rows) else 1
    return code, rows


def _sweep_task(args) -> dict:
    beta, mu, nu, cfg = args
    return _pressure_row(beta, mu, nu, cfg)


def _run_equivalence(cfg: RunConfig) -> tuple:
    start = time.perf_counter()
    beta, mu, nu = cfg.beta[0], cfg.mu[0], cfg.nu[0]
    result = verify_equivalence(beta, mu, nu, cfg.dim, cfg.ladder,
                                p_max=cfg.pmax, rel_tol=cfg.rel_tol,
                                fd_step=cfg.fd_step)
    rows = []
    for i, side in enumerate(result.ladder.sides):
        rows.append({
            "command": cfg.command, "row": "ladder", "beta": beta, "mu": mu,
            "nu": nu, "dim": cfg.dim, "side": side,
            "volume": float(side) ** cfg.dim,
            "delta_p": result.ladder.values[i],
            "identity_rel_err": result.identity_rel_errors[i],
            "passed": result.identity_rel_errors[i] <= 1e-12,
            "duration_s": 0.0,
        })
    rows.append({
        "command": cfg.command, "row": "summary", "beta": beta, "mu": mu,
        "nu": nu, "dim": cfg.dim,
        "fitted_rate": result.ladder.fitted_rate,
        "fit_residual": result.ladder.fit_residual,
        "rho0_linear": result.density_linear.rho_0,
        "rho0_sqrt": result.density_sqrt.rho_0,
        "rho0_diff": result.density_linear.rho_0 - result.density_sqrt.rho_0,
        "passed": result.passed, "duration_s": time.perf_counter() - start,
    })
    return (0 if result.passed else 1), rows


def _run_laplace(cfg: RunConfig) -> tuple:
    beta, mu, nu = cfg.beta[0], cfg.mu[0], cfg.nu[0]
    rows = []
    all_ok = True
    for side in cfg.ladder:
        start = time.perf_counter()
        volume = float(side) ** cfg.dim
        res = zero_mode_log_partition(beta, mu, nu, volume, rel_tol=cfg.rel_tol,
                                      coefficient=cfg.coefficient)
        gap_bound = math.log(res.terms_used) / (beta * volume)
        ok = res.gap <= gap_bound + res.tail_bound
        sup = laplace_sup(ExponentFunction(mu=mu, nu=nu, volume=volume,
                                           coefficient=cfg.coefficient))
        all_ok = all_ok and ok
        rows.append({
            "command": cfg.command, "beta": beta, "mu": mu, "nu": nu,
            "dim": cfg.dim, "side": side, "volume": volume,
            "maximizer": res.maximizer, "sup_value": sup,
            "numeric_log_sum": res.numeric_log_sum, "gap": res.gap,
            "gap_bound": gap_bound, "terms_used": res.terms_used,
            "tail_bound": res.tail_bound, "passed": ok,
            "duration_s": time.perf_counter() - start,
        })
    return (0 if all_ok else 1), rows


def _run_fulldiag(cfg: RunConfig) -> tuple:
    start = time.perf_counter()
    beta, mu, nu = cfg.beta[0], cfg.mu[0], cfg.nu[0]
    lattice = build_lattice(cfg.dim, cfg.side, cfg.pmax)
    trunc = truncate_lattice(lattice, cfg.fock_cutoff)
    model = DiagonalModel(a=cfg.mf_a, mu=mu)
    volume = lattice.volume
    reports = verify_sandwich(model, [trunc], beta, nu, volume=volume,
                              coefficient=cfg.coefficient)
    rows = []
    all_ok = True
    for rep in reports:
        all_ok = all_ok and rep.chain_passed
        rows.append({
            "command": cfg.command, "beta": beta, "mu": mu, "nu": nu,
            "mf_a": cfg.mf_a, "coefficient": cfg.coefficient,
            "cutoffs": rep.cutoffs, "dimension": rep.dimension,
            "volume": rep.volume, "p_linear": rep.pressure_linear,
            "p_sqrt": rep.pressure_sqrt, "delta_p": rep.delta_p,
            "lower": rep.chain_lower, "upper": rep.chain_upper,
            "jensen_upper": rep.jensen_upper,
            "lower_margin": rep.inequality.lower_margin,
            "upper_margin": rep.inequality.upper_margin,
            "a0_scaled": rep.linear_averages.a0_scaled,
            "sqrt_rho0": rep.linear_averages.sqrt_density,
            "shell_weight": rep.shell_weight, "passed": rep.chain_passed,
            "duration_s": time.perf_counter() - start,
        })
    return (0 if all_ok else 1), rows


_RUNNERS = {
    "pressure": _run_pressure,
    "equivalence": _run_equivalence,
    "laplace": _run_laplace,
    "fulldiag": _run_fulldiag,
    "sweep": _run_sweep,
}


def run(config: RunConfig) -> tuple:
    """Dispatch a validated config; returns (exit_code, rows)."""
    return _RUNNERS[config.command](config)


def _write_rows(config: RunConfig, rows: Sequence[dict]) -> None:
    columns = _COLUMNS[config.command]
    emit = emit_csv if config.format == "csv" else emit_json
    if config.out == "-":
        emit(rows, sys.stdout, columns)
    else:
        with open(config.out, "w", encoding="utf-8", newline="\n") as fh:
            emit(rows, fh, columns)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_config(argv)
        code, rows = run(config)
        _write_rows(config, rows)
        return code
    except (NonConvergenceError, ResourceGuardError) as exc:
        sys.stderr.write(json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 3
    except BoseLimitsError as exc:
        sys.stderr.write(json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    except OSError as exc:
        sys.stderr.write(json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
