"""Command-line interface.

    vfield-lab volume --loxodromic 0.7853981634
    vfield-lab curvature-map --test-field k=0,a=0.3,m=1 --out kt.csv
    vfield-lab index --test-field k=1,a=0,m=1
    vfield-lab trace --theta0 0.2617993878 --start 0,0 --smax 7 --out spiral.csv --plot
    vfield-lab minimize --test-field k=0,a=0.3,m=1 --out run.json
    vfield-lab verify --quick

Settings come from (lowest to highest precedence) built-in defaults, a JSON
config file (``--config`` or ``$VFIELD_LAB_CONFIG``) and command-line flags.
Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence,
4 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import ConfigError, ConvergenceError, InvariantViolation, VFieldError

CONFIG_ENV = "VFIELD_LAB_CONFIG"
DEFAULTS_VERSION = "1"
FLOAT_DIGITS = 12
COMMANDS = ("volume", "curvature-map", "index", "trace", "minimize", "verify")

# Labels for reported numbers that have a known closed-form counterpart.
ANCHORS = {
    "volume": "minimal volume 2 pi^2 = (pi/2) area(S^2)",
    "per_hemisphere.north": "loxodromic hemisphere volume = pi^2",
    "per_hemisphere.south": "loxodromic hemisphere volume = pi^2",
    "bound.value": "(pi + |I_N| + |I_S| - 2)/2 * area(S^2)",
    "bound.s3_value": "(|I_N| + |I_S|) * vol(S^3)",
    "sharpness.sup_i": "|sin phi| = sqrt(kappa^2 + tau^2) cos phi",
    "sharpness.sup_ii": "kappa sin theta = tau cos theta",
    "index": "loxodromic fields have I(N) = I(S) = 1",
}


@dataclass
class RunConfig:
    command: str = ""
    loxodromic: Optional[float] = None
    test_field: Optional[dict] = None
    grid: Optional[str] = None
    epsilon: Optional[float] = None
    nphi: Optional[int] = None
    nlambda: Optional[int] = None
    theta0: Optional[float] = None
    start: tuple = (0.0, 0.0)
    smax: float = 10.0
    step: float = 1e-3
    probe: float = 0.8
    method: str = "closed-form"
    max_iter: int = 500
    tol: float = 1e-8
    checkpoint: Optional[str] = None
    out: Optional[str] = None
    format: Optional[str] = None
    seed: int = 0
    threads: int = 1
    plot: bool = False
    quick: bool = False

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d["start"] = list(self.start)
        return d


FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


# ---------------------------------------------------------------- parsing

_UNIT_SUFFIX = re.compile(r"(deg|degree|degrees|°|d)\s*$", re.IGNORECASE)


def parse_angle(text) -> float:
    """Radians only; unit suffixes and magnitudes beyond 2 pi are rejected."""
    if isinstance(text, str):
        if _UNIT_SUFFIX.search(text.strip()):
            raise ConfigError(f"angle {text!r}: only radians are accepted")
        try:
            value = float(text)
        except ValueError:
            raise ConfigError(f"angle {text!r} is not a number") from None
    else:
        value = float(text)
    if not math.isfinite(value):
        raise ConfigError("angle must be finite")
    if abs(value) > 2.0 * math.pi + 1e-12:
        raise ConfigError(f"angle {value} exceeds 2 pi; degrees are not accepted")
    return value


def parse_test_field(text) -> dict:
    if isinstance(text, dict):
        items = dict(text)
    else:
        items = {}
        for part in str(text).split(","):
            if not part.strip():
                continue
            if "=" not in part:
                raise ConfigError(f"test-field entry {part!r} is not key=value")
            key, value = part.split("=", 1)
            items[key.strip()] = value.strip()
    allowed = {"k", "a", "m", "theta0", "phase", "window"}
    unknown = set(items) - allowed
    if unknown:
        raise ConfigError(f"unknown test-field keys: {sorted(unknown)}")
    try:
        out = {
            "k": int(items.get("k", 0)),
            "a": float(items.get("a", 0.0)),
            "m": int(items.get("m", 1)),
            "theta0": parse_angle(items.get("theta0", math.pi / 2)),
            "phase": parse_angle(items.get("phase", 0.0)),
            "window": str(items.get("window", "none")),
        }
    except ValueError as exc:
        raise ConfigError(f"bad test-field value: {exc}") from None
    if out["window"] not in ("none", "cos2"):
        raise ConfigError(f"unknown window {out['window']!r}")
    return out


def parse_start(text) -> tuple:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    if len(parts) != 2:
        raise ConfigError("--start expects 'phi,lambda'")
    phi, lam = parse_angle(parts[0]), parse_angle(parts[1])
    if abs(phi) >= math.pi / 2:
        raise ConfigError("start latitude must lie strictly between the poles")
    return (phi, lam)


_CONVERTERS = {
    "loxodromic": parse_angle,
    "theta0": parse_angle,
    "test_field": parse_test_field,
    "start": parse_start,
    "epsilon": float,
    "smax": float,
    "step": float,
    "probe": parse_angle,
    "tol": float,
    "nphi": int,
    "nlambda": int,
    "max_iter": int,
    "seed": int,
    "threads": int,
    "grid": str,
    "checkpoint": str,
    "out": str,
    "format": str,
    "method": str,
    "plot": bool,
    "quick": bool,
}


def _apply(cfg: RunConfig, key: str, value):
    if key not in FIELD_NAMES or key == "command":
        raise ConfigError(f"unknown configuration key {key!r}")
    if value is None:
        setattr(cfg, key, None)
        return
    try:
        setattr(cfg, key, _CONVERTERS[key](value))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    fieldg = common.add_argument_group("field")
    fieldg.add_argument("--loxodromic", metavar="THETA0", help="constant angle field (radians)")
    fieldg.add_argument("--test-field", dest="test_field", metavar="k=..,a=..,m=..",
                        help="theta0 + k*lam + a*cos(m*lam + phase)*window(phi); optional theta0, phase, window")
    fieldg.add_argument("--grid", metavar="PATH", help="theta-grid checkpoint (JSON)")
    num = common.add_argument_group("numerics")
    num.add_argument("--epsilon", type=float, help="pole cutoff (volume) or collar width (minimize)")
    num.add_argument("--nphi", type=int)
    num.add_argument("--nlambda", type=int)
    num.add_argument("--threads", type=int)
    num.add_argument("--seed", type=int)
    out = common.add_argument_group("output")
    out.add_argument("--out", help="output file (default: stdout)")
    out.add_argument("--format", choices=("json", "csv"))
    out.add_argument("--plot", action="store_true", help="also write a PNG next to the output")

    parser = argparse.ArgumentParser(prog="vfield-lab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("volume", parents=[common], argument_default=argparse.SUPPRESS, help="volume, hemispheres, index bound and sharpness")
    p = sub.add_parser("curvature-map", parents=[common], argument_default=argparse.SUPPRESS, help="kappa and tau on a latitude-longitude grid")
    p.add_argument("--method", choices=("closed-form", "extrinsic", "both"))
    p = sub.add_parser("index", parents=[common], argument_default=argparse.SUPPRESS, help="indices at N and S by both methods")
    p.add_argument("--probe", help="probe latitude magnitude (radians)")
    p = sub.add_parser("trace", parents=[common], argument_default=argparse.SUPPRESS, help="rhumb-line polyline")
    p.add_argument("--theta0")
    p.add_argument("--start", metavar="PHI,LAMBDA")
    p.add_argument("--smax", type=float)
    p.add_argument("--step", type=float)
    p = sub.add_parser("minimize", parents=[common], argument_default=argparse.SUPPRESS, help="volume minimisation over a theta grid")
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--checkpoint", metavar="PATH", help="where to write the final grid")
    p = sub.add_parser("verify", parents=[common], argument_default=argparse.SUPPRESS, help="run the acceptance criteria")
    p.add_argument("--quick", action="store_true", help="reduced sample counts")
    return parser


def resolve_config(argv=None, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    args = vars(build_parser().parse_args(argv))
    cfg = RunConfig(command=args.pop("command"))
    path = args.pop("config", None) or environ.get(CONFIG_ENV)
    if path:
        for key, value in load_config_file(path).items():
            _apply(cfg, key, value)
    for key, value in args.items():
        _apply(cfg, key, value)
    if cfg.threads < 1:
        raise ConfigError("--threads must be at least 1")
    return cfg


# ---------------------------------------------------------------- output

def _fixed(obj):
    if isinstance(obj, float) or isinstance(obj, np.floating):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{FLOAT_DIGITS}g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _fixed(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fixed(v) for v in obj]
    return obj


def header(cfg: RunConfig) -> dict:
    return {"tool": "vfield-lab", "version": __version__, "defaults_version": DEFAULTS_VERSION,
            "config": cfg.echo()}


def dumps(obj) -> str:
    return json.dumps(_fixed(obj), sort_keys=True, indent=2) + "\n"


def _write_text(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, newline="\n")


def emit_json(cfg: RunConfig, payload: dict):
    _write_text(dumps({"header": header(cfg), **payload}), cfg.out)


def emit_csv(cfg: RunConfig, columns, rows, meta: Optional[dict] = None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    _write_text(buf.getvalue(), cfg.out)
    if cfg.out is not None:
        _write_text(dumps({"header": header(cfg), **(meta or {})}), cfg.out + ".meta.json")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{FLOAT_DIGITS}g}"
    return str(v)


def figure_path(cfg: RunConfig) -> str:
    if cfg.out is None:
        return f"vfield_{cfg.command.replace('-', '_')}.png"
    return str(Path(cfg.out).with_suffix(".png"))


# ---------------------------------------------------------------- commands

def build_field(cfg: RunConfig, required: bool = True):
    from .loxodrome import make_loxodromic_field, make_test_field
    from .varmin import ThetaGrid

    given = [name for name in ("loxodromic", "test_field", "grid") if getattr(cfg, name) is not None]
    if len(given) > 1:
        raise ConfigError(f"choose one field specification, got {given}")
    if not given:
        if required:
            raise ConfigError("a field is required: --loxodromic, --test-field or --grid")
        return None
    if cfg.loxodromic is not None:
        return make_loxodromic_field(cfg.loxodromic)
    if cfg.test_field is not None:
        return make_test_field(**cfg.test_field)
    try:
        return ThetaGrid.load(cfg.grid).to_field()
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load grid {cfg.grid}: {exc}") from None


def _epsilons(cfg):
    from .volume import DEFAULT_EPSILONS

    if cfg.epsilon is None:
        return DEFAULT_EPSILONS
    if not 0.0 < cfg.epsilon < 0.01:
        raise ConfigError("--epsilon for volume must lie in (0, 0.01)")
    return (100.0 * cfg.epsilon, 10.0 * cfg.epsilon, cfg.epsilon)


def cmd_volume(cfg: RunConfig) -> int:
    from .index import index_pair
    from .volume import (DEFAULT_N_LAMBDA, DEFAULT_N_PHI, latitude_profile, lower_bound_s2, lower_bound_s3,
                         sharpness_residuals, volume_total)

    field = build_field(cfg)
    rep = volume_total(field, cfg.nphi or DEFAULT_N_PHI, cfg.nlambda or DEFAULT_N_LAMBDA, _epsilons(cfg))
    wn, ws = index_pair(field, "winding")
    cn, cs = index_pair(field, "connection-form")
    bound = lower_bound_s2(wn.index, ws.index)
    sharp = sharpness_residuals(field)
    problems = []
    if (wn.index, ws.index) != (cn.index, cs.index):
        problems.append("index methods disagree")
    if rep.total < bound - 1e-4:
        problems.append("volume below the index lower bound")
    payload = {
        "field": field.label,
        "volume": rep.total,
        "error_estimate": rep.error_estimate,
        "converged": rep.converged,
        "per_hemisphere": {"north": rep.north.value, "south": rep.south.value},
        "bound": {"I_N": wn.index, "I_S": ws.index, "value": bound, "s3_value": lower_bound_s3(wn.index, ws.index)},
        "sharpness": sharp.to_dict(),
        "reference": {"two_pi_squared": 2 * math.pi**2, "pi_squared": math.pi**2},
        "problems": problems,
        "anchors": ANCHORS,
    }
    if cfg.format == "csv":
        flat = [("volume", rep.total), ("error_estimate", rep.error_estimate),
                ("north", rep.north.value), ("south", rep.south.value), ("I_N", wn.index), ("I_S", ws.index),
                ("bound", bound), ("sup_i", sharp.sup_i), ("sup_ii", sharp.sup_ii)]
        emit_csv(cfg, ("quantity", "value"), flat, {"anchors": ANCHORS})
    else:
        emit_json(cfg, payload)
    if cfg.plot:
        from .plotting import plot_volume_profile

        phi, ring = latitude_profile(field)
        plot_volume_profile(phi, ring, figure_path(cfg))
    if problems:
        raise InvariantViolation("; ".join(problems))
    if not rep.converged:
        raise ConvergenceError(f"volume error estimate {rep.error_estimate:.3g} above tolerance")
    return 0


def cmd_curvature_map(cfg: RunConfig) -> int:
    from .curvature import curvature_arrays, curvature_extrinsic_arrays

    field = build_field(cfg)
    n_phi, n_lam = cfg.nphi or 90, cfg.nlambda or 180
    phi = -math.pi / 2 + (np.arange(n_phi) + 0.5) * math.pi / n_phi
    lam = 2 * math.pi * np.arange(n_lam) / n_lam
    P, L = np.meshgrid(phi, lam, indexing="ij")
    if cfg.method not in ("closed-form", "extrinsic", "both"):
        raise ConfigError(f"unknown curvature method {cfg.method!r}")
    methods = ("closed-form", "extrinsic") if cfg.method == "both" else (cfg.method,)
    results = {}
    for m in methods:
        results[m] = curvature_arrays(field, P, L) if m == "closed-form" else curvature_extrinsic_arrays(field, P, L)
    if cfg.format == "json":
        emit_json(cfg, {"field": field.label, "phi": phi.tolist(), "lambda": lam.tolist(),
                        "maps": {m: {"kappa": k.tolist(), "tau": t.tolist()} for m, (k, t) in results.items()}})
    else:
        rows = ((P[i, j], L[i, j], k[i, j], t[i, j], m)
                for m, (k, t) in results.items() for i in range(n_phi) for j in range(n_lam))
        emit_csv(cfg, ("phi", "lambda", "kappa", "tau", "method"), rows, {"field": field.label})
    if cfg.plot:
        from .plotting import plot_curvature_map

        k, t = results[methods[0]]
        plot_curvature_map(phi, lam, k, t, figure_path(cfg))
    return 0


def cmd_index(cfg: RunConfig) -> int:
    from .index import chart_field_angles, index_pair

    field = build_field(cfg)
    probe = abs(cfg.probe)
    reports = []
    pairs = {}
    for method in ("winding", "connection-form"):
        n, s = index_pair(field, method, probe)
        pairs[method] = (n.index, s.index)
        reports += [n.to_dict(), s.to_dict()]
    agree = pairs["winding"] == pairs["connection-form"]
    payload = {"field": field.label, "reports": reports, "methods_agree": agree,
               "index_sum": sum(pairs["winding"]), "anchors": {"index": ANCHORS["index"]}}
    if cfg.format == "csv":
        cols = ("pole", "method", "raw", "index", "residual", "probe_phi", "samples")
        emit_csv(cfg, cols, ([r[c] for c in cols] for r in reports))
    else:
        emit_json(cfg, payload)
    if cfg.plot:
        from .plotting import plot_index

        plot_index(chart_field_angles(field, "N", probe, 1024), chart_field_angles(field, "S", -probe, 1024),
                   figure_path(cfg))
    unreliable = [r for r in reports if not r["reliable"]]
    if unreliable:
        raise ConvergenceError("unreliable index report")
    if not agree:
        raise InvariantViolation("index methods disagree")
    return 0


def cmd_trace(cfg: RunConfig) -> int:
    from .errors import StepCollapseError
    from .loxodrome import trace_rhumb
    from .sphere_core import SphericalPoint

    theta0 = cfg.theta0 if cfg.theta0 is not None else cfg.loxodromic
    if theta0 is None:
        raise ConfigError("trace needs --theta0")
    if not cfg.smax > 0.0 or not cfg.step > 0.0:
        raise ConfigError("--smax and --step must be positive")
    try:
        tr = trace_rhumb(theta0, SphericalPoint(*cfg.start), cfg.smax, cfg.step)
    except StepCollapseError as exc:
        raise ConvergenceError(str(exc)) from None
    meta = {"theta0": theta0, "reason": tr.reason, "length_to_pole": tr.length_to_pole,
            "points": len(tr.s)}
    if cfg.format == "json":
        emit_json(cfg, {**meta, "columns": ["s", "phi", "lambda", "x", "y", "z"],
                        "rows": [list(r) for r in tr.rows()]})
    else:
        emit_csv(cfg, ("s", "phi", "lambda", "x", "y", "z"), tr.rows(), meta)
    if cfg.plot:
        from .plotting import plot_trace

        plot_trace(tr, figure_path(cfg))
    return 0


def cmd_minimize(cfg: RunConfig) -> int:
    from .varmin import DEFAULT_COLLAR, ThetaGrid, minimize

    start_iter = 0
    if cfg.grid is not None:
        if cfg.loxodromic is not None or cfg.test_field is not None:
            raise ConfigError("choose one field specification")
        try:
            data = json.loads(Path(cfg.grid).read_text())
            grid0 = ThetaGrid.from_checkpoint(data)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot load grid {cfg.grid}: {exc}") from None
        start_iter = int(data.get("iteration", 0))
    else:
        field = build_field(cfg)
        eps = DEFAULT_COLLAR if cfg.epsilon is None else cfg.epsilon
        grid0 = ThetaGrid.from_field(field, cfg.nphi or 64, cfg.nlambda or 128, eps)
    rep = minimize(grid0, max_iter=cfg.max_iter, tol=cfg.tol)
    ckpt = cfg.checkpoint
    if ckpt is None and cfg.out is not None:
        ckpt = str(Path(cfg.out).with_suffix(".ckpt.json"))
    if ckpt is not None:
        rep.grid.save(ckpt, start_iter + rep.iterations, rep.final_volume)
    payload = {"report": rep.to_dict(), "checkpoint": ckpt,
               "reference": {"two_pi_squared": 2 * math.pi**2},
               "anchors": {"report.final_volume": ANCHORS["volume"]}}
    emit_json(cfg, payload)
    if cfg.plot:
        from .plotting import plot_minimization

        plot_minimization(rep, figure_path(cfg))
    if rep.anomaly:
        raise InvariantViolation("non-loxodromic stationary grid")
    if not rep.converged:
        raise ConvergenceError(f"minimisation stopped: {rep.status}")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    from .acceptance import run_all

    results = run_all(seed=cfg.seed, quick=cfg.quick)
    for r in results:
        print(r.line(), file=sys.stderr)
    passed = all(r.passed for r in results)
    emit_json(cfg, {"passed": passed, "quick": cfg.quick, "criteria": [r.to_dict() for r in results]})
    if not passed:
        raise InvariantViolation("acceptance criteria failed")
    return 0


HANDLERS = {
    "volume": cmd_volume,
    "curvature-map": cmd_curvature_map,
    "index": cmd_index,
    "trace": cmd_trace,
    "minimize": cmd_minimize,
    "verify": cmd_verify,
}


def run(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


def main(argv=None) -> int:
    try:
        cfg = resolve_config(argv)
        return run(cfg)
    except VFieldError as exc:
        print(f"vfield-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
