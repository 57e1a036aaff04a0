"""Command-line entry point: strict JSON configs, subcommand dispatch,
reproducible run artifacts.

Subcommands: solve (one model trajectory), compare (one pair, report only),
sweep (scaling study with pass/fail verdicts), residual (per-term remainder
norms as CSV), transform (frame changes of PAF snapshot files).  Exit codes:
0 success, 1 config error, 2 numerical failure, 3 sweep verdict failure.
Diagnostics go to standard error; data goes to files (and --dry-run prints
the resolved plan to standard output).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import platform
import sys
from dataclasses import replace
from importlib import resources

import numpy as np

from . import __version__
from .experiments import (
    ExperimentConfig,
    config_hash,
    emit_report,
    preset_profile,
    scaling_study,
)
from .fields import Axis, Field, Frame, Grid
from .flow import FlowState, solve_flow
from .models.base import (
    ModelCoefficients,
    SolverDiverged,
    SolverNaN,
    StepControl,
)
from .models.oneway import solve_kzk, solve_npe
from .models.waves import solve_kuznetsov, solve_westervelt
from .paf import read_paf, write_paf
from .remainders import evaluate_remainder
from .spectral import deriv_array

__all__ = ["main", "entry"]

log = logging.getLogger("nlparax")

SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Anything wrong with flags or the configuration file."""


# ----------------------------------------------------------------------
# strict schema validation (hand-rolled; covers the subset the shipped
# schema file uses, so no third-party dependency is needed)


def load_schema() -> dict:
    text = (resources.files("nlparax") / "schema/run_config.schema.json").read_text()
    return json.loads(text)


def _resolve_ref(schema: dict, root: dict) -> dict:
    while "$ref" in schema:
        ref = schema["$ref"]
        if not ref.startswith("#/"):
            raise ConfigError(f"unsupported schema reference {ref!r}")
        node = root
        for part in ref[2:].split("/"):
            node = node[part]
        schema = node
    return schema


_TYPES = {
    "object": dict,
    "array": list,
    "string": str,
    "boolean": bool,
    "number": (int, float),
    "integer": int,
}


def validate_config(instance, schema: dict, root: dict | None = None,
                    path: str = "config") -> None:
    """Validate against the shipped schema; raises ConfigError naming the
    offending key or value."""
    root = root if root is not None else schema
    schema = _resolve_ref(schema, root)
    typ = schema.get("type")
    if typ is not None:
        py = _TYPES[typ]
        ok = isinstance(instance, py)
        if typ in ("number", "integer") and isinstance(instance, bool):
            ok = False
        if typ == "integer" and isinstance(instance, float):
            ok = float(instance).is_integer()
        if not ok:
            raise ConfigError(f"{path}: expected {typ}, got "
                              f"{type(instance).__name__}")
    if "enum" in schema and instance not in schema["enum"]:
        raise ConfigError(f"{path}: value {instance!r} not one of "
                          f"{schema['enum']}")
    if isinstance(instance, (int, float)) and not isinstance(instance, bool):
        if "minimum" in schema and instance < schema["minimum"]:
            raise ConfigError(f"{path}: {instance} below minimum "
                              f"{schema['minimum']}")
        if "maximum" in schema and instance > schema["maximum"]:
            raise ConfigError(f"{path}: {instance} above maximum "
                              f"{schema['maximum']}")
        if "exclusiveMinimum" in schema and instance <= schema["exclusiveMinimum"]:
            raise ConfigError(f"{path}: {instance} must be > "
                              f"{schema['exclusiveMinimum']}")
    if isinstance(instance, dict):
        props = schema.get("properties", {})
        if schema.get("additionalProperties") is False:
            unknown = sorted(set(instance) - set(props))
            if unknown:
                raise ConfigError(f"{path}: unknown key {unknown[0]!r}"
                                  + (f" (and {len(unknown) - 1} more)"
                                     if len(unknown) > 1 else ""))
        for req in schema.get("required", ()):
            if req not in instance:
                raise ConfigError(f"{path}: missing required key {req!r}")
        for key, sub in props.items():
            if key in instance:
                validate_config(instance[key], sub, root, f"{path}.{key}")
    if isinstance(instance, list) and "items" in schema:
        for i, item in enumerate(instance):
            validate_config(item, schema["items"], root, f"{path}[{i}]")


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    validate_config(data, load_schema())
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {data['schema_version']}")
    return data


# ----------------------------------------------------------------------
# shared builders


def _coeff_from(data: dict | None) -> ModelCoefficients:
    return ModelCoefficients(**(data or {}))


def _grid_from(data: dict) -> Grid:
    axes = tuple(Axis(**a) for a in data["axes"])
    frame = Frame(data.get("frame", "physical"))
    try:
        return Grid(axes, frame)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _initial_field(data: dict, grid: Grid) -> Field:
    try:
        return preset_profile(data["preset"], grid, data.get("params"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _manifest(out_dir: str, payload: dict, argv: list[str]) -> None:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    manifest = {
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "tool_version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "argv": argv,
    }
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _out_dir(args, cfg: dict, default: str) -> str:
    return args.out or cfg.get("output_dir") or default


def _threads() -> int:
    raw = os.environ.get("THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("THREADS must be >= 1")
    return n


# ----------------------------------------------------------------------
# solve


def _run_solve(args, argv) -> int:
    cfg = load_config(args.config)
    if "solve" not in cfg:
        raise ConfigError("config carries no 'solve' payload")
    payload = cfg["solve"]
    model = args.model or payload.get("model")
    if model is None:
        raise ConfigError("model must be given via --model or the config")
    if "model" in payload and args.model and payload["model"] != args.model:
        raise ConfigError(f"--model {args.model} conflicts with config model "
                          f"{payload['model']}")
    coeff = _coeff_from(payload.get("coeff"))
    grid = _grid_from(payload["grid"])
    span = payload["span"]
    ctl = StepControl(step=payload["step"])
    n_samples = payload.get("samples", 2)
    out = _out_dir(args, cfg, f"{model}_run")

    if args.dry_run:
        print(json.dumps({"action": "solve", "model": model,
                          "grid": [a.name for a in grid.axes],
                          "span": span, "steps": math.ceil(span / ctl.step),
                          "samples": n_samples, "output_dir": out},
                         sort_keys=True))
        return 0

    init = _initial_field(payload["initial"], grid)
    if model in ("kuznetsov", "westervelt"):
        i1 = grid.axis_index("x1")
        a1 = grid.axes[i1]
        u1 = Field(grid, -coeff.c * deriv_array(init.scalar, i1, a1.points,
                                                a1.length))
        solver = solve_kuznetsov if model == "kuznetsov" else solve_westervelt
        states = solver(coeff, init, u1, span, ctl, n_samples=n_samples)
        samples = [(s.evol, s.primary) for s in states]
    elif model == "kzk":
        states = solve_kzk(coeff, init, span, ctl,
                           conservative=payload.get("conservative", True),
                           n_samples=n_samples)
        samples = [(s.evol, s.primary) for s in states]
    elif model == "npe":
        states = solve_npe(coeff, init, span, ctl,
                           conservative=payload.get("conservative", True),
                           n_samples=n_samples)
        samples = [(s.evol, s.primary) for s in states]
    elif model in ("ns", "euler"):
        if model == "euler":
            coeff = replace(coeff, nu=0.0)
        rho = Field(grid, coeff.rho0 * (1.0 + coeff.eps * init.scalar))
        vel = Field.zeros(grid, len(grid.axes))
        traj = solve_flow(coeff, FlowState(rho, Field(
            grid, vel.values, len(grid.axes))), span, ctl,
            n_samples=n_samples)
        samples = [(t, U.rho) for t, U in traj]
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown model {model!r}")

    os.makedirs(out, exist_ok=True)
    index = {"model": model, "evol": [], "files": []}
    for i, (t, f) in enumerate(samples):
        name = f"sample_{i:04d}.paf"
        write_paf(os.path.join(out, name), f)
        index["evol"].append(float(t))
        index["files"].append(name)
    with open(os.path.join(out, "index.json"), "w") as fh:
        json.dump(index, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _manifest(out, cfg, argv)
    log.info("wrote %d samples to %s", len(samples), out)
    return 0


# ----------------------------------------------------------------------
# compare / sweep


def _experiment_from(cfg: dict, key: str, pair_flag: str | None) -> ExperimentConfig:
    if key not in cfg:
        raise ConfigError(f"config carries no {key!r} payload")
    payload = dict(cfg[key])
    if pair_flag is not None:
        if payload.get("pair", pair_flag) != pair_flag:
            raise ConfigError(f"--pair {pair_flag} conflicts with config pair "
                              f"{payload['pair']}")
        payload["pair"] = pair_flag
    if "pair" not in payload:
        raise ConfigError("pair must be given via --pair or the config")
    try:
        return ExperimentConfig.from_dict(payload)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _run_study(args, argv, key: str) -> int:
    cfg = load_config(args.config)
    pair_flag = getattr(args, "pair", None)
    ecfg = _experiment_from(cfg, key, pair_flag)
    out = _out_dir(args, cfg, f"{key}_{ecfg.name}")
    if args.dry_run:
        print(json.dumps({"action": key, "pair": ecfg.pair,
                          "eps_list": list(ecfg.eps_list),
                          "horizon": ecfg.horizon,
                          "config_sha256": config_hash(ecfg),
                          "threads": _threads(), "output_dir": out},
                         sort_keys=True))
        return 0
    report = scaling_study(ecfg, max_workers=_threads())
    emit_report(report, out)
    _manifest(out, cfg, argv)
    failed_runs = [s for s in report.series if s["status"] != "ok"]
    if len(failed_runs) == len(report.series):
        log.error("all sweep members failed")
        return 2
    if key == "sweep" and not report.passed():
        for v in report.verdicts:
            if not v["passed"]:
                log.error("verdict failed: %s (%s)", v["criterion"], v["detail"])
        return 3
    return 0


# ----------------------------------------------------------------------
# residual

_RESIDUAL_FIELD = {
    "ns-kuznetsov": "u",
    "kuznetsov-westervelt": "u",
    "ns-kzk": "I",
    "kuznetsov-kzk": "I",
    "ns-npe": "xi",
    "kuznetsov-npe": "xi",
}


def _run_residual(args, argv) -> int:
    cfg = load_config(args.config)
    if "residual" not in cfg:
        raise ConfigError("config carries no 'residual' payload")
    payload = cfg["residual"]
    pair = args.pair or payload.get("pair")
    if pair is None:
        raise ConfigError("pair must be given via --pair or the config")
    if "pair" in payload and args.pair and payload["pair"] != args.pair:
        raise ConfigError(f"--pair {args.pair} conflicts with config pair "
                          f"{payload['pair']}")
    coeff = _coeff_from(payload.get("coeff"))
    grid = _grid_from(payload["grid"])
    fname = payload.get("field_name", _RESIDUAL_FIELD.get(pair))
    if fname is None:
        raise ConfigError(f"unknown pair {pair!r}")
    out = _out_dir(args, cfg, f"residual_{pair}")
    if args.dry_run:
        print(json.dumps({"action": "residual", "pair": pair,
                          "field": fname, "output_dir": out}, sort_keys=True))
        return 0
    f = _initial_field(payload["initial"], grid)
    result = evaluate_remainder(pair, coeff, {fname: f},
                                variant=payload.get("variant"),
                                with_term_stats=True)
    os.makedirs(out, exist_ok=True)
    eps_base = float(coeff.eps) ** float(result.base)
    with open(os.path.join(out, "residual.csv"), "w", newline="") as fh:
        fh.write("pair,term_id,eps_power,l2_norm,linf_norm\n")
        for comp, term_id, power, l2, linf in result.term_stats:
            fh.write(f"{pair},{term_id},{power},{l2:.17g},{linf:.17g}\n")
        for comp, field in result.fields.items():
            fh.write(f"{pair},total-{comp},{result.base},"
                     f"{eps_base * field.l2_norm():.17g},"
                     f"{eps_base * field.linf_norm():.17g}\n")
    _manifest(out, cfg, argv)
    return 0


# ----------------------------------------------------------------------
# transform


def _scale_axis(a: Axis, name: str, factor: float) -> Axis:
    return Axis(name, a.length * factor, a.points, a.periodic,
                a.origin * factor)


def _reverse_axis_values(values: np.ndarray, ax: int) -> np.ndarray:
    idx = (-np.arange(values.shape[ax])) % values.shape[ax]
    return np.take(values, idx, axis=ax)


def transform_field(f: Field, src: str, dst: str, c: float,
                    eps: float) -> Field:
    """Map a snapshot between coordinate frames.

    physical <-> kzk uses the x1 = 0 line (tau = t), physical <-> npe the
    t = 0 slice (z = x1); transverse axes rescale by sqrt(eps).  kzk <-> npe
    applies the affine bijection z_npe = -c tau_kzk (index reversal plus an
    axis rescale), which is exact on periodic grids.
    """
    if src == dst:
        return f
    se = math.sqrt(eps)
    grid, values = f.grid, f.values
    names = [a.name for a in grid.axes]

    def need(axis_name: str) -> None:
        if names[0] != axis_name:
            raise ConfigError(
                f"{src}->{dst} expects leading axis {axis_name!r}, "
                f"got {names[0]!r}"
            )

    if (src, dst) == ("physical", "kzk"):
        need("t")
        axes = [_scale_axis(grid.axes[0], "tau", 1.0)]
        axes += [_scale_axis(a, f"y{i + 1}", se)
                 for i, a in enumerate(grid.axes[1:])]
        return Field(Grid(tuple(axes), Frame.KZK), values, f.components)
    if (src, dst) == ("kzk", "physical"):
        need("tau")
        axes = [_scale_axis(grid.axes[0], "t", 1.0)]
        axes += [_scale_axis(a, f"x{i + 2}", 1.0 / se)
                 for i, a in enumerate(grid.axes[1:])]
        return Field(Grid(tuple(axes), Frame.PHYSICAL), values, f.components)
    if (src, dst) == ("physical", "npe"):
        need("x1")
        axes = [_scale_axis(grid.axes[0], "z", 1.0)]
        axes += [_scale_axis(a, f"y{i + 1}", se)
                 for i, a in enumerate(grid.axes[1:])]
        return Field(Grid(tuple(axes), Frame.NPE), values, f.components)
    if (src, dst) == ("npe", "physical"):
        need("z")
        axes = [_scale_axis(grid.axes[0], "x1", 1.0)]
        axes += [_scale_axis(a, f"x{i + 2}", 1.0 / se)
                 for i, a in enumerate(grid.axes[1:])]
        return Field(Grid(tuple(axes), Frame.PHYSICAL), values, f.components)
    if (src, dst) == ("kzk", "npe"):
        need("tau")
        axes = [_scale_axis(grid.axes[0], "z", c)]
        axes[0] = Axis("z", axes[0].length, axes[0].points, origin=-axes[0].origin)
        axes += list(grid.axes[1:])
        vals = _reverse_axis_values(values, 0)
        return Field(Grid(tuple(axes), Frame.NPE), vals, f.components)
    if (src, dst) == ("npe", "kzk"):
        need("z")
        axes = [_scale_axis(grid.axes[0], "tau", 1.0 / c)]
        axes[0] = Axis("tau", axes[0].length, axes[0].points,
                       origin=-axes[0].origin)
        axes += list(grid.axes[1:])
        vals = _reverse_axis_values(values, 0)
        return Field(Grid(tuple(axes), Frame.KZK), vals, f.components)
    raise ConfigError(f"unsupported frame transform {src} -> {dst}")


def _run_transform(args, argv) -> int:
    if args.dry_run:
        print(json.dumps({"action": "transform", "from": args.src,
                          "to": args.dst, "input": args.input,
                          "output": args.output}, sort_keys=True))
        return 0
    try:
        f = read_paf(args.input)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read {args.input}: {exc}") from exc
    g = transform_field(f, args.src, args.dst, args.sound_speed, args.eps)
    write_paf(args.output, g)
    return 0


# ----------------------------------------------------------------------
# entry


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlparax")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--log-level", default="warning",
                   choices=["debug", "info", "warning", "error"])
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, pair=False):
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None)
        sp.add_argument("--dry-run", action="store_true")
        if pair:
            sp.add_argument("--pair", default=None)

    sp = sub.add_parser("solve", help="run one model trajectory")
    sp.add_argument("--model", choices=["kuznetsov", "westervelt", "kzk",
                                        "npe", "ns", "euler"])
    common(sp)

    sp = sub.add_parser("compare", help="run one pair and report errors")
    common(sp, pair=True)

    sp = sub.add_parser("sweep", help="scaling study with verdicts")
    common(sp, pair=True)

    sp = sub.add_parser("residual", help="per-term remainder norms as CSV")
    common(sp, pair=True)

    sp = sub.add_parser("transform", help="change the frame of a PAF snapshot")
    sp.add_argument("--from", dest="src", required=True,
                    choices=["physical", "kzk", "npe"])
    sp.add_argument("--to", dest="dst", required=True,
                    choices=["physical", "kzk", "npe"])
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--c", dest="sound_speed", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--dry-run", action="store_true")
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 0 for --help, 2 for bad flags
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(stream=sys.stderr,
                        level=getattr(logging, args.log_level.upper()))
    try:
        if args.cmd == "solve":
            return _run_solve(args, argv)
        if args.cmd == "compare":
            return _run_study(args, argv, "compare")
        if args.cmd == "sweep":
            return _run_study(args, argv, "sweep")
        if args.cmd == "residual":
            return _run_residual(args, argv)
        if args.cmd == "transform":
            return _run_transform(args, argv)
        raise ConfigError(f"unknown subcommand {args.cmd!r}")
    except (ConfigError, KeyError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SolverDiverged, SolverNaN, FloatingPointError, ValueError,
            RuntimeError) as exc:
        log.error("%s", exc)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def entry() -> None:  # console-script wrapper
    sys.exit(main())
