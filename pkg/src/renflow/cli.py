"""Command-line front end.

Every subcommand builds an :class:`ExperimentConfig` (from ``--config`` and
flags, flags winning), writes ``<command>_<hash>.csv`` into the output
directory and finishes with a JSON manifest.  Exit codes: 0 success,
1 verification failure, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import run_all
from .config import ExperimentConfig, RunManifest
from .connect import GeodesicSpec
from .deviation import (PROFILE_CSV_HEADER, ConvexTestFn, DeviationEngine, OtalParams,
                        jensen_check, otal_analyze, theta_profile)
from .errors import ConfigError, NumericalError, RenflowError, VerificationFailed
from .escape import escape_profile
from .geoflow import ChartRay, PhasePoint, scattering
from .liouville import BOX_CSV_HEADER, current_agreement
from .renlen import CSV_HEADER as RENLEN_HEADER
from .renlen import renormalized_length

EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 1, 2, 3
BUMP_KEYS = ("cx", "cy", "radius", "amplitude")


def parse_model(text: str, shift: str | None = None) -> dict:
    """``kind[:key=value,...]`` -> model descriptor, e.g. ``cylinder:neck_length=2``."""
    kind, _, rest = text.partition(":")
    desc = {"kind": kind}
    bump = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"bad model option {item!r}")
        try:
            num = float(value)
        except ValueError as exc:
            raise ConfigError(f"model option {key} needs a number") from exc
        if key in BUMP_KEYS:
            bump[key] = num
        elif key == "neck_length":
            desc["neck_length"] = num
        else:
            raise ConfigError(f"unknown model option {key!r}")
    if bump:
        desc["bump"] = bump
    if shift:
        desc["bdf_shift"] = shift
    return desc


# -- command bodies: each returns {file suffix: text} ----------------------

def run_renlen(cfg: ExperimentConfig, models) -> dict:
    p = cfg.resolved()
    spec = GeodesicSpec(p["p"], p["q"], p["winding"], models[0].kind)
    est = renormalized_length(models[0], spec, p["eps0"], p["levels"])
    return {".csv": RENLEN_HEADER + "\n" + est.csv_row(models[0], p["eps0"], p["levels"]) + "\n"}


def run_scatter(cfg: ExperimentConfig, models) -> dict:
    p = cfg.resolved()
    if len(p["p"]) != len(p["eta"]):
        raise ConfigError("p and eta lists must have equal length")
    lines = ["model,p,eta,exit_y,exit_eta,exit_end"]
    for m in models:
        for y, eta in zip(p["p"], p["eta"]):
            out = scattering(m, PhasePoint(0.0, float(y), 1.0, float(eta)))
            lines.append(f"{m.kind},{float(y)!r},{float(eta)!r},{float(out.y)!r},{float(out.eta)!r},{out.end}")
    return {".csv": "\n".join(lines) + "\n"}


def run_liouville(cfg: ExperimentConfig, models) -> dict:
    p = cfg.resolved()
    boxes = []
    for b in p["boxes"]:
        if len(b) != 4:
            raise ConfigError("boxes need four endpoints E0 E1 F0 F1")
        boxes.append(((float(b[0]), float(b[1])), (float(b[2]), float(b[3]))))
    other = models[1] if len(models) > 1 else models[0]
    _, rows = current_agreement(models[0], other, boxes, p["eps0"], p["levels"])
    lines = [BOX_CSV_HEADER] + [",".join(repr(v) if isinstance(v, float) else str(v) for v in r)
                                for r in rows]
    return {".csv": "\n".join(lines) + "\n"}


def run_deviate(cfg: ExperimentConfig, models) -> dict:
    p = cfg.resolved()
    engine = DeviationEngine(models[0], models[1])
    base = ChartRay((p["x"], p["y"]), p["heading"])
    lines = ["x,y,heading,theta,image_x,image_y,f"]
    for th in p["theta"]:
        if not 0.0 < th < math.pi:
            raise ConfigError("theta values must lie in (0, pi)")
        s = engine.sample(base, float(th))
        lines.append(f"{float(p['x'])!r},{float(p['y'])!r},{float(p['heading'])!r},{float(th)!r},"
                     f"{float(s.image_point[0])!r},{float(s.image_point[1])!r},{float(s.f)!r}")
    return {".csv": "\n".join(lines) + "\n"}


def report_text(report: dict) -> str:
    lines = []
    for key, value in report.items():
        if isinstance(value, dict):
            value = " ".join(f"{k}={v!r}" for k, v in value.items())
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def run_theta(cfg: ExperimentConfig, models) -> dict:
    p = cfg.resolved()
    prof = theta_profile(models[0], models[1], p["eps"], p["ntheta"], p["samples"], cfg.seed)
    report = otal_analyze(prof, OtalParams(p["alpha"], p["beta"], p["beta_prime"]))
    lhs, rhs, slack, se = jensen_check(prof, ConvexTestFn("abs_hinge", 1.0, p["hinge"]))
    report.update({"jensen_lhs": lhs, "jensen_rhs": rhs, "jensen_slack": slack,
                   "jensen_slack_se": se, "max_mc_err": float(np.max(prof.mc_err)),
                   "rejected": prof.rejected})
    return {".csv": prof.to_csv(), "_report.txt": report_text(report),
            "_report.json": json.dumps(report, indent=2, sort_keys=True, default=float) + "\n"}


def run_escape(cfg: ExperimentConfig, models) -> dict:
    p = cfg.resolved()
    grid = np.arange(p["tmin"], p["tmax"] + 0.5 * p["tstep"], p["tstep"])
    stats = escape_profile(models[0], p["eps"], grid, p["samples"], cfg.seed)
    return {".csv": stats.to_csv()}


def run_verify(cfg: ExperimentConfig, models) -> dict:
    results = run_all(cfg.resolved()["only"] or None)
    lines = ["criterion,name,passed,detail"]
    for r in results:
        lines.append(f"{r.number},{r.name},{int(r.passed)},\"{r.detail}\"")
    files = {".csv": "\n".join(lines) + "\n"}
    if not all(r.passed for r in results):
        raise VerificationFailed(files)
    return files


RUNNERS = {"renlen": run_renlen, "scatter": run_scatter, "liouville": run_liouville,
           "deviate": run_deviate, "theta": run_theta, "escape": run_escape,
           "verify": run_verify}


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="renflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML experiment file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        return sp

    sp = common(sub.add_parser("renlen", help="renormalized length of one geodesic"))
    sp.add_argument("--model")
    sp.add_argument("--shift", help="boundary defining function shift preset")
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--winding", type=int)
    sp.add_argument("--eps0", type=float)
    sp.add_argument("--levels", type=int)

    sp = common(sub.add_parser("scatter", help="scattering map of incoming boundary rays"))
    sp.add_argument("--model")
    sp.add_argument("--model-b")
    sp.add_argument("--p", type=float, nargs="+")
    sp.add_argument("--eta", type=float, nargs="+")

    sp = common(sub.add_parser("liouville", help="Liouville mass of boundary boxes"))
    sp.add_argument("--model")
    sp.add_argument("--model-b")
    sp.add_argument("--box", type=float, nargs=4, action="append", metavar=("E0", "E1", "F0", "F1"))
    sp.add_argument("--eps0", type=float)
    sp.add_argument("--levels", type=int)

    sp = common(sub.add_parser("deviate", help="angles of deviation at one base ray"))
    sp.add_argument("--g1")
    sp.add_argument("--g2")
    sp.add_argument("--x", type=float)
    sp.add_argument("--y", type=float)
    sp.add_argument("--heading", type=float)
    sp.add_argument("--theta", type=float, nargs="+")

    sp = common(sub.add_parser("theta", help="average angle of deviation profile"))
    sp.add_argument("--g1")
    sp.add_argument("--g2")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--ntheta", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--beta-prime", type=float)
    sp.add_argument("--hinge", type=float)

    sp = common(sub.add_parser("escape", help="non-escaping mass and decay rate"))
    sp.add_argument("--model")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--tmin", type=float)
    sp.add_argument("--tmax", type=float)
    sp.add_argument("--tstep", type=float)
    sp.add_argument("--samples", type=int)

    sp = common(sub.add_parser("verify", help="run the acceptance suite"))
    sp.add_argument("--only", type=int, nargs="+")
    return ap


MODEL_FLAGS = ("model", "model_b", "g1", "g2")
PARAM_FLAGS = {"p", "q", "winding", "eps0", "levels", "eta", "x", "y", "heading", "theta",
               "eps", "ntheta", "samples", "alpha", "beta", "beta_prime", "hinge", "tmin",
               "tmax", "tstep", "only"}


def config_from_args(args) -> ExperimentConfig:
    base = {"command": args.command}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        loaded = ExperimentConfig.from_yaml(text)
        if loaded.command != args.command:
            raise ConfigError(f"config is for {loaded.command!r}, not {args.command!r}")
        base = loaded.to_dict()
    params = dict(base.get("params") or {})
    for key in PARAM_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if getattr(args, "box", None):
        params["boxes"] = [list(b) for b in args.box]
    models = list(base.get("models") or [])
    given = [getattr(args, k, None) for k in MODEL_FLAGS if hasattr(args, k)]
    if any(given):
        shift = getattr(args, "shift", None)
        models = [parse_model(g, shift if i == 0 else None) for i, g in enumerate(given) if g]
    elif getattr(args, "shift", None) and models:
        models[0]["bdf_shift"] = args.shift
    if args.command != "verify" and not models:
        raise ConfigError("no model given")
    seed = args.seed if args.seed is not None else base.get("seed", 0)
    out = args.out if args.out is not None else base.get("output_dir", ".")
    return ExperimentConfig(args.command, models, params, seed, out)


def _write(cfg: ExperimentConfig, files: dict, wall: float):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.command}_{cfg.config_hash()}"
    named = {stem + suffix: text for suffix, text in files.items()}
    for name, text in named.items():
        (out / name).write_text(text)
    manifest = RunManifest.build(cfg, wall, named)
    (out / f"{stem}_manifest.json").write_text(manifest.to_json())
    return [out / n for n in named]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = config_from_args(args)
        models = cfg.build_models()
        files = RUNNERS[cfg.command](cfg, models)
    except VerificationFailed as exc:
        _write(cfg, exc.args[0], time.perf_counter() - t0)
        print("verification failed", file=sys.stderr)
        return EXIT_VERIFY
    except (ConfigError, NotImplementedError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, RenflowError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    paths = _write(cfg, files, time.perf_counter() - t0)
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
