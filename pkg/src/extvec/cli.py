"""Batch front door: simulate bodies, run the property catalogue, and
evaluate derivatives or motions on serialized inputs.

Exit codes: 0 success, 2 config parse or schema violation, 3 tolerance
failure.  Diagnostics go to stderr; stdout carries only machine-readable
data (JSON summaries and reports).  With a fixed seed every output is
reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from .core import ExtTensor, FrameKind
from .errors import (
    ConfigError,
    ContractViolation,
    SchemaError,
    UnsupportedDimension,
    ValidationError,
)
from .fields import d_form, d_scalar, d_vector, field_from_dict, r_partial_check
from .motion import MotionParams, apply_motion, t_from_params
from .rigid import Body, simulate
from .verify import report_to_json, run_all

_USER_ERRORS = (
    ConfigError,
    SchemaError,
    ValidationError,
    ContractViolation,
    UnsupportedDimension,
)


@dataclass
class RunConfig:
    command: str
    payload: dict
    seed: int = 0
    dt: float = 1e-3
    steps: int = 1000
    tolerance: float | None = None
    metric: str = "euclidean3"
    out: str | None = None
    cases: int = 200


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extvec",
        description="extended-vector mechanics: simulate, verify, derive, transform",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_config in (
        ("simulate", True),
        ("verify", False),
        ("derive", True),
        ("transform", True),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config, help="TOML or JSON input")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--tolerance", type=float, default=None)
        p.add_argument("--metric", default=None)
        p.add_argument("--out", default=None)
    return parser


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        if path.endswith(".toml"):
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        else:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object/table")
    return data


def _merge(args: argparse.Namespace) -> RunConfig:
    payload = _load_config(args.config)
    cfg = RunConfig(command=args.command, payload=payload)
    for key, cast in (
        ("seed", int),
        ("dt", float),
        ("steps", int),
        ("tolerance", float),
        ("metric", str),
        ("out", str),
        ("cases", int),
    ):
        if key in payload:
            try:
                setattr(cfg, key, cast(payload[key]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(cfg, key, cast(flag))
    if cfg.command == "simulate":
        if not cfg.dt > 0.0:
            raise ConfigError("dt must be positive")
        if cfg.steps <= 0:
            raise ConfigError("steps must be positive")
    return cfg


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _run_simulate(cfg: RunConfig) -> int:
    body_doc = cfg.payload.get("body", cfg.payload)
    body = Body.from_dict(body_doc)
    origin = cfg.payload.get("origin")
    traj = simulate(body, cfg.dt, cfg.steps, origin=origin)
    csv_path = cfg.out or "trajectory.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        traj.write_csv(fh)
    tol = cfg.tolerance if cfg.tolerance is not None else 1e-8
    balance = float(np.max(traj.residual_total))
    drift_m = traj.momentum_drift()
    drift_e = traj.energy_drift()
    gate = balance <= tol and drift_e <= tol
    if body.force.conserves_momentum:
        gate = gate and drift_m <= tol
    _emit(
        {
            "command": "simulate",
            "particles": len(body.particles),
            "force": body.force.name,
            "dt": cfg.dt,
            "steps": cfg.steps,
            "trajectory": csv_path,
            "tolerance": tol,
            "energy_drift": drift_e,
            "momentum_drift": drift_m,
            "momentum_conserving": bool(body.force.conserves_momentum),
            "balance_max_residual": balance,
            "passed": gate,
        },
        None,
    )
    if not gate:
        print(
            f"tolerance failure: balance {balance:.3e}, "
            f"energy drift {drift_e:.3e}, momentum drift {drift_m:.3e} "
            f"(bound {tol:.3e})",
            file=sys.stderr,
        )
        return 3
    return 0


def _run_verify(cfg: RunConfig) -> int:
    report = run_all(seed=cfg.seed, cases=cfg.cases, tolerance=cfg.tolerance)
    sys.stdout.write(report_to_json(report) + "\n")
    if cfg.out is not None:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(report_to_json(report) + "\n")
    if not report["passed"]:
        failed = [p["id"] for p in report["properties"] if not p["passed"]]
        print(f"property failures: {', '.join(failed)}", file=sys.stderr)
        return 3
    return 0


def _run_derive(cfg: RunConfig) -> int:
    if "field" not in cfg.payload:
        raise SchemaError("derive config needs a 'field' object")
    field = field_from_dict(cfg.payload["field"])
    form = d_form(field)
    doc = {"command": "derive", "field": field.to_dict(), "form": form.to_dict()}
    if "argument" in cfg.payload:
        arg = _bivector_from_payload(cfg.payload["argument"], field.chart)
        fn = d_scalar if form.kind == "scalar" else d_vector
        doc["derivative"] = fn(field, arg).to_dict()
    if "check" in cfg.payload:
        check = cfg.payload["check"]
        if not isinstance(check, dict) or "slots" not in check:
            raise SchemaError("'check' must be an object with a 'slots' pair")
        slots = check["slots"]
        if not (isinstance(slots, (list, tuple)) and len(slots) == 2):
            raise SchemaError("'slots' must be a pair [A, B]")
        h = float(check.get("h", 1e-4))
        doc["check"] = {
            "slots": [int(slots[0]), int(slots[1])],
            "h": h,
            "residual": r_partial_check(field, int(slots[0]), int(slots[1]), h=h),
        }
    _emit(doc, cfg.out)
    return 0


def _bivector_from_payload(data, chart) -> ExtTensor:
    if not isinstance(data, dict) or "comps" not in data:
        raise SchemaError("bivector argument must be an object with 'comps'")
    comps = np.asarray(data["comps"], dtype=float)
    dim = chart.metric.dim
    if comps.shape != (dim, dim):
        raise SchemaError(f"bivector comps must be {dim}x{dim}")
    return ExtTensor(chart, 2, 0, comps)


def _run_transform(cfg: RunConfig) -> int:
    if "motion" not in cfg.payload:
        raise SchemaError("transform config needs a 'motion' object")
    doc = {"command": "transform"}
    if "field" in cfg.payload:
        field = field_from_dict(cfg.payload["field"])
        params = MotionParams.from_dict(cfg.payload["motion"], metric=field.chart.metric)
        doc["result"] = field.transform(params.L, params.a).to_dict()
    elif "tensor" in cfg.payload:
        tensor = ExtTensor.from_dict(cfg.payload["tensor"])
        if tensor.frame.kind is not FrameKind.P_BASIS:
            tensor = tensor.to_p_basis(np.zeros(tensor.metric.n))
        params = MotionParams.from_dict(cfg.payload["motion"], metric=tensor.metric)
        motion = t_from_params(params, tensor.frame)
        doc["result"] = apply_motion(motion, tensor).to_dict()
    else:
        raise SchemaError("transform config needs a 'field' or 'tensor' object")
    _emit(doc, cfg.out)
    return 0


_RUNNERS = {
    "simulate": _run_simulate,
    "verify": _run_verify,
    "derive": _run_derive,
    "transform": _run_transform,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge(args)
        return _RUNNERS[cfg.command](cfg)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
