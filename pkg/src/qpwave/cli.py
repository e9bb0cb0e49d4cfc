"""Command-line driver: ``qpwave {solve,certify,diagnose-liouville,compare-oracle} --config run.json``.

Exit codes: 0 success, 2 invalid configuration or infeasible setup,
3 Picard non-convergence or oracle blow-up, 4 file-system failure.  Errors
are printed to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import diagnostics as dg
from . import qpfield as qf
from .lattice import FrequencyVector, LatticeBox
from .models import EQUATIONS, ModelSpec, build_model
from .oracle import OdeParams, StepError, expRK4_solve
from .qpfield import CoefficientField
from .solver import (
    ConvergenceError,
    SolverParams,
    certify,
    picard_solve,
    quadrature_refinement,
)
from .symbols import SymbolError, check_growth, polynomial_symbol

MODES = ("solve", "certify", "diagnose-liouville", "compare-oracle")
EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_IO = 2, 3, 4

DEFAULT_OUTPUTS = {
    "manifest": "manifest.json",
    "trajectory": "trajectory.csv",
    "certificate": "certificate.json",
    "report": "liouville.json",
    "oracle_trajectory": "oracle_trajectory.csv",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str | None = None
    equation: str = "gkdv"
    p: int = 1
    nls_sign: int = 1
    real: bool | None = None
    symbol: dict | None = None
    omega: list = field(default_factory=lambda: [1.0])
    initial_data: list | None = None
    initial_preset: dict | None = None
    k: float = 1.0
    kappa: float = 0.5
    epsilon: float | None = None
    R: float | None = None
    N: int = 8
    M: int = 32
    T: float | None = None
    tol: float = 1e-10
    max_iter: int = 50
    direction: str = "forward"
    gamma_min: float = 1.0
    oracle_steps: int = 256
    liouville: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.mode is not None and self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.equation not in EQUATIONS:
            raise ConfigError(f"equation must be one of {EQUATIONS}")
        if self.initial_data is not None and self.initial_preset is not None:
            raise ConfigError("give initial_data or initial_preset, not both")
        if self.direction not in ("forward", "backward", "both"):
            raise ConfigError("direction must be forward, backward or both")
        for name in ("N", "M", "max_iter", "oracle_steps", "p"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"{name} must be an integer")
        bad = sorted(set(self.outputs) - set(DEFAULT_OUTPUTS))
        if bad:
            raise ConfigError(f"unknown output keys: {bad}")
        bad = sorted(set(self.liouville) - {"sigma", "kappa", "levels"})
        if bad:
            raise ConfigError(f"unknown liouville keys: {bad}")
        if self.symbol is not None:
            bad = sorted(set(self.symbol) - {"odd", "even", "name"})
            if bad:
                raise ConfigError(f"unknown symbol keys: {bad}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def output_name(self, key: str) -> str:
        return self.outputs.get(key, DEFAULT_OUTPUTS[key])


# building blocks from a config


def make_model(cfg: RunConfig) -> ModelSpec:
    base = build_model(cfg.equation, p=cfg.p, nls_sign=cfg.nls_sign, real_valued=False)
    symbol = base.symbol
    if cfg.symbol is not None:
        symbol = polynomial_symbol(cfg.symbol.get("odd", ()), cfg.symbol.get("even", ()), cfg.symbol.get("name", "custom"))
    real = cfg.real
    if real is None:
        real = build_model(cfg.equation, p=cfg.p, nls_sign=cfg.nls_sign).real_valued and symbol.claims_symmetry
    return ModelSpec(base.name, symbol, base.nonlinearity, real)


def make_data(cfg: RunConfig, omega: FrequencyVector, real: bool) -> CoefficientField:
    if cfg.initial_preset is not None:
        pre = cfg.initial_preset
        bad = sorted(set(pre) - {"amplitude", "decay", "radius"})
        if bad:
            raise ConfigError(f"unknown initial_preset keys: {bad}")
        u0 = CoefficientField.exponential_preset(
            omega, float(pre.get("amplitude", 1.0)), float(pre.get("decay", cfg.k)), int(pre.get("radius", cfg.N))
        )
        return CoefficientField(omega, u0.data, real=real)
    entries = []
    for item in cfg.initial_data or []:
        if isinstance(item, dict):
            bad = sorted(set(item) - {"n", "re", "im"})
            if bad:
                raise ConfigError(f"unknown initial_data entry keys: {bad}")
            n, re, im = item["n"], item.get("re", 0.0), item.get("im", 0.0)
        else:
            n, re, im = item
        entries.append((n, complex(float(re), float(im))))
    return CoefficientField.from_entries(omega, entries, real=real, radius=cfg.N if entries else 0)


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


def _setup(cfg: RunConfig, threads: int):
    omega = FrequencyVector(tuple(float(w) for w in cfg.omega))
    model = make_model(cfg)
    u0 = make_data(cfg, omega, model.real_valued)
    if u0.radius > cfg.N:
        raise ConfigError(f"initial data radius {u0.radius} exceeds N={cfg.N}")
    u0 = u0.resized(cfg.N)
    norm0 = qf.norm_vk(u0, cfg.k)
    R = cfg.R if cfg.R is not None else (1.1 * norm0 if norm0 > 0 else 1.0)
    cert = certify(model, omega, R, cfg.k, cfg.kappa, cfg.epsilon, cfg.gamma_min)
    params = SolverParams.from_certificate(
        cert, cfg.N, cfg.M, T=cfg.T, tol=cfg.tol, max_iter=cfg.max_iter, direction=cfg.direction, threads=threads
    )
    growth = check_growth(model.symbol, omega, cfg.k, LatticeBox(cfg.N, omega.nu), cert.epsilon)
    return omega, model, u0, cert, params, growth


def _base_manifest(cfg: RunConfig, model: ModelSpec, params, cert, growth, u0) -> dict:
    return {
        "config": cfg.to_dict(),
        "model": model.describe(),
        "params": dataclasses.asdict(params),
        "certificate": cert.to_dict(),
        "growth_check": growth.to_dict(),
        "initial_norm_k": qf.norm_vk(u0, params.k),
        "assumptions": ["omega entries assumed rationally independent (not checked numerically)"],
    }


def run_solve(cfg: RunConfig, out: Path, threads: int) -> dict:
    omega, model, u0, cert, params, growth = _setup(cfg, threads)
    result = picard_solve(u0, model, params, cert)
    refine = quadrature_refinement(u0, model, params)
    manifest = _base_manifest(cfg, model, params, cert, growth, u0)
    manifest.update(
        method="picard",
        iterations=result.iterations,
        final_defect=result.final_defect,
        defects=result.defects,
        contraction_ratios=result.ratios,
        contraction_ok=result.contraction_ok(),
        residuals=refine,
    )
    result.trajectory.write_csv(out / cfg.output_name("trajectory"))
    return manifest


def run_certify(cfg: RunConfig, out: Path, threads: int) -> dict:
    omega, model, u0, cert, params, growth = _setup(cfg, threads)
    doc = {"config": cfg.to_dict(), "model": model.describe(), "certificate": cert.to_dict(), "growth_check": growth.to_dict()}
    _write_json(out / cfg.output_name("certificate"), doc)
    return doc


def run_liouville(cfg: RunConfig, out: Path, threads: int) -> dict:
    lv = cfg.liouville
    params = dg.TsugawaParams(tuple(lv.get("sigma", (0.0, 0.0))), float(lv.get("kappa", dg.KAPPA_THRESHOLD)))
    report = dg.verify_divergence_chain(params, tuple(lv.get("levels", (1, 2))))
    doc = {"config": cfg.to_dict(), "report": report.to_dict()}
    _write_json(out / cfg.output_name("report"), doc)
    return doc


def run_compare(cfg: RunConfig, out: Path, threads: int) -> dict:
    omega, model, u0, cert, params, growth = _setup(cfg, threads)
    result = picard_solve(u0, model, params, cert)
    ode = OdeParams.for_horizon(params.T, cfg.oracle_steps, cfg.N)
    oracle = expRK4_solve(u0, model, ode, cfg.direction)
    pic = result.trajectory
    if cfg.oracle_steps % params.M == 0:
        coarse = oracle.subsample(cfg.oracle_steps // params.M)
        diff = np.max(np.abs(coarse.values - pic.values), axis=0)
    else:
        diff = np.abs(oracle.final().data - pic.final().data)
    box = pic.box
    per_coeff = [{"n": list(n), "max_deviation": float(diff[box.slot(n)])} for n in box.indices()]
    manifest = _base_manifest(cfg, model, params, cert, growth, u0)
    manifest.update(
        method="picard+expRK4",
        iterations=result.iterations,
        defects=result.defects,
        oracle={"method": "expRK4", "dt": ode.dt, "steps": ode.steps},
        max_deviation=float(np.max(diff)),
        final_deviation=pic.final().max_abs_diff(oracle.final()),
        per_coefficient=per_coeff,
    )
    pic.write_csv(out / cfg.output_name("trajectory"))
    oracle.write_csv(out / cfg.output_name("oracle_trajectory"))
    return manifest


RUNNERS = {"solve": run_solve, "certify": run_certify, "diagnose-liouville": run_liouville, "compare-oracle": run_compare}


def _fail(code: int, kind: str, message: str, **extra) -> int:
    payload = {"error": kind, "message": message, "exit_code": code}
    payload.update(extra)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpwave", description=__doc__.splitlines()[0])
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--output", default=".", help="directory for emitted files")
    ap.add_argument("--serial", action="store_true", help="single thread, no wall-clock in outputs")
    ap.add_argument("--threads", type=int, default=1)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    threads = 1 if args.serial else args.threads
    if threads < 1:
        return _fail(EXIT_VALIDATION, "ConfigError", "--threads must be >= 1")
    try:
        raw = json.loads(Path(args.config).read_text())
    except OSError as e:
        return _fail(EXIT_IO, type(e).__name__, str(e))
    except json.JSONDecodeError as e:
        return _fail(EXIT_VALIDATION, "ConfigError", f"config is not valid JSON: {e}")
    out = Path(args.output)
    try:
        cfg = RunConfig.from_dict(raw)
        if cfg.mode is not None and cfg.mode != args.mode:
            raise ConfigError(f"config mode {cfg.mode!r} conflicts with subcommand {args.mode!r}")
        cfg.mode = args.mode
        out.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        doc = RUNNERS[args.mode](cfg, out, threads)
        if args.mode in ("solve", "compare-oracle"):
            doc["threads"] = threads
            doc["wall_clock_s"] = None if args.serial else time.perf_counter() - start
            _write_json(out / cfg.output_name("manifest"), doc)
    except ConvergenceError as e:
        return _fail(EXIT_CONVERGENCE, "ConvergenceError", str(e), defects=e.defects)
    except StepError as e:
        return _fail(EXIT_CONVERGENCE, "StepError", str(e))
    except OSError as e:
        return _fail(EXIT_IO, type(e).__name__, str(e))
    except (ValueError, TypeError, KeyError, SymbolError) as e:
        return _fail(EXIT_VALIDATION, type(e).__name__, str(e))
    return 0


if __name__ == "__main__":
    sys.exit(main())
