"""Subcommand CLI binding the library into runnable pipelines.

Exit codes: 0 success, 2 solver did not converge (artifacts and report are
still written, with converged=false), 3 configuration error (nothing is
written). All diagnostics go to stderr; only `metrics` prints to stdout.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .config import SCHEMA_VERSION, load_run_config
from .delaunay import PointCloud, structural_check
from .envelope import (
    SolverConfig,
    StencilConfig,
    convex_envelope,
    full_reach_stencil,
)
from .errors import CcxError, ConfigError
from .fields_io import (
    read_field_csv,
    read_mask_csv,
    read_pgm,
    read_points_csv,
    write_field_csv,
    write_pgm,
)
from .grid import GridSpec, SampledFunction, SampleMask, ScalarField, extend
from .metrics import linf, psnr, relative_l2
from .prototypes import PrototypeId, analytic_average, default_params
from .tasks import (
    NoiseSpec,
    PaddingSpec,
    TestFunctionId,
    build_levelset_sample,
    build_scatter_sample,
    denoise_salt_pepper,
    equispaced_levels,
    inpaint,
    reconstruct_levelset,
    surface_field,
)
from .transforms import (
    TransformParams,
    average_approximation,
    lower_transform,
    resolve_module,
    upper_transform,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with the config-error code."""

    def error(self, message):
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _radius_arg(text):
    if text == "full":
        return "full"
    try:
        radius = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"stencil radius must be 1, 2, 3 or 'full', got {text!r}"
        )
    if radius not in (1, 2, 3):
        raise argparse.ArgumentTypeError(
            f"stencil radius must be 1, 2, 3 or 'full', got {radius}"
        )
    return radius


def _module_arg(text):
    if text == "auto":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"module must be a positive number or 'auto', got {text!r}"
        )
    if not value > 0:
        raise argparse.ArgumentTypeError(f"module must be positive, got {value}")
    return value


def _grid_arg(text):
    parts = text.lower().split("x")
    try:
        nx, ny = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"grid must look like 201x201, got {text!r}"
        )
    if nx < 2 or ny < 2:
        raise argparse.ArgumentTypeError(f"grid sides must be >= 2, got {text}")
    return nx, ny


def _stencil_for(spec, radius):
    if radius == "full":
        return full_reach_stencil(spec)
    return StencilConfig(radius=radius)


def _jsonable(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256_files(paths):
    digest = hashlib.sha256()
    for p in paths:
        with open(p, "rb") as fh:
            digest.update(fh.read())
    return digest.hexdigest()


def _solver_block(report):
    return {
        "sweeps": report.sweeps_used,
        "residual": report.final_residual,
        "converged": report.converged,
        "backend": report.backend,
    }


def _avg_blocks(result):
    return {
        "lower": _solver_block(result.lower_report),
        "upper": _solver_block(result.upper_report),
    }


def _all_converged(blocks):
    return all(b["converged"] for b in blocks.values())


def _read_image(path):
    if path.lower().endswith(".pgm"):
        values = read_pgm(path)
        ny, nx = values.shape
        return ScalarField(GridSpec(nx, ny, 0.0, 0.0, 1.0), values)
    return read_field_csv(path)


def _write_image(path, field):
    if path.lower().endswith(".pgm"):
        write_pgm(path, field.values)
    else:
        write_field_csv(path, field)


def _finish_run(cfg, report_doc, blocks, started):
    report_doc["solver"] = blocks
    report_doc["converged"] = _all_converged(blocks)
    report_doc["wall_time_s"] = time.perf_counter() - started
    _write_json(cfg.report, report_doc)
    if not report_doc["converged"]:
        print("ccx: solver did not converge; see report", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _report_base(cfg):
    return {
        "schema": SCHEMA_VERSION,
        "task": cfg.task,
        "lambda": cfg.lam,
        "tol": cfg.tol,
        "max_sweeps": cfg.max_sweeps,
        "stencil_radius": cfg.stencil_radius,
        "inputs_sha256": _sha256_files(
            ([cfg.source_path] if cfg.source_path else []) + list(cfg.input_paths)
        ),
    }


def _grid_from_section(section):
    if "n" in section:
        n = section["n"]
        return GridSpec(n, n, 0.0, 0.0, 1.0 / (n - 1))
    return GridSpec(
        section["nx"], section["ny"], section["x0"], section["y0"], section["h"]
    )


def _truth_field(cfg):
    """Reference surface of a levelset/scatter config, on its grid."""
    if "field" in cfg.params:
        return read_field_csv(cfg.params["field"])
    spec = _grid_from_section(cfg.params["grid"])
    return surface_field(TestFunctionId(cfg.params["surface"]), spec)


def _sample_metrics(truth, out_field, sample):
    eps = relative_l2(truth, out_field)
    ak = out_field.values[sample.mask.member]
    fk = sample.values_on_k
    denom = math.sqrt(float(np.sum(fk * fk)))
    eps_k = (
        math.sqrt(float(np.sum((ak - fk) ** 2))) / denom if denom > 0 else None
    )
    return {
        "eps": eps,
        "eps_k": eps_k,
        "linf": linf(truth, out_field),
        "n_samples": int(sample.mask.count),
    }


def _params_for(cfg, spec):
    return TransformParams(
        lam=cfg.lam,
        module=cfg.module,
        stencil=_stencil_for(spec, cfg.stencil_radius),
        solver=SolverConfig(tol=cfg.tol, max_sweeps=cfg.max_sweeps),
    )


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_envelope(args):
    field = read_field_csv(args.infile)
    env, report = convex_envelope(
        field,
        _stencil_for(field.spec, args.stencil_radius),
        SolverConfig(tol=args.tol, max_sweeps=args.max_sweeps),
    )
    write_field_csv(args.out, env)
    if not report.converged:
        print(
            f"ccx: envelope stopped at residual {report.final_residual:.3e} "
            f"after {report.sweeps_used} sweeps (tol {args.tol:.3e})",
            file=sys.stderr,
        )
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_transform(args):
    started = time.perf_counter()
    field = read_field_csv(args.infile)
    spec = field.spec
    p = TransformParams(
        lam=args.lam,
        module=args.module,
        stencil=_stencil_for(spec, args.stencil_radius),
        solver=SolverConfig(tol=args.tol, max_sweeps=args.max_sweeps),
    )
    inputs = [args.infile]
    if args.values and not args.mask:
        raise ConfigError("--values requires --mask")

    sf = None
    if args.mask:
        mask = read_mask_csv(args.mask)
        if mask.spec != spec:
            raise ConfigError("--mask grid does not match --in grid")
        inputs.append(args.mask)
        values = field.values
        if args.values:
            vfield = read_field_csv(args.values)
            if vfield.spec != spec:
                raise ConfigError("--values grid does not match --in grid")
            inputs.append(args.values)
            values = vfield.values
        sf = SampledFunction(mask, values[mask.member])

    m_used = None
    if args.kind == "average":
        if sf is None:
            full = SampleMask(spec, np.ones(spec.shape, dtype=bool))
            sf = SampledFunction.from_field(field, full)
        result = average_approximation(sf, p)
        out = result.field
        m_used = result.m_used
        blocks = _avg_blocks(result)
    else:
        if sf is not None:
            m_used = args.module or resolve_module(sf, args.lam)
            sign = "plus" if args.kind == "lower" else "minus"
            work = extend(sf, sign, m_used)
        else:
            work = field
        fn = lower_transform if args.kind == "lower" else upper_transform
        out, report = fn(work, p)
        blocks = {args.kind: _solver_block(report)}

    write_field_csv(args.out, out)
    if args.report:
        doc = {
            "schema": SCHEMA_VERSION,
            "task": f"transform-{args.kind}",
            "lambda": args.lam,
            "m_used": m_used,
            "inputs_sha256": _sha256_files(inputs),
            "solver": blocks,
            "converged": _all_converged(blocks),
            "wall_time_s": time.perf_counter() - started,
        }
        _write_json(args.report, doc)
    if not _all_converged(blocks):
        print("ccx: solver did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


_PROTO_NUMERIC = ("lam", "a", "r", "h", "R", "m", "alpha")


def _proto_box(pid, params):
    """Natural plotting rectangle of a prototype's closed forms."""
    if pid is PrototypeId.SIGN_JUMP_1D:
        w = 3.0 / math.sqrt(params["lam"])
        return -w, w, -w, w
    if pid in (PrototypeId.FOUR_POINT, PrototypeId.CROSS_PARABOLAS,
               PrototypeId.CROSS_ABS):
        return -1.0, 1.0, -1.0, 1.0
    if pid is PrototypeId.EIGHT_POINT:
        s = math.sqrt(2.0)
        return -s, s, -s, s
    if pid in (PrototypeId.TWO_GABLES, PrototypeId.ROOF_BOX,
               PrototypeId.JUMP_STRIP):
        r, hh = params["r"], params["h"]
        return -r, r, -hh, hh
    if pid is PrototypeId.ANNULUS_LEVELS:
        R = params["R"]
        return -R, R, -R, R
    if pid is PrototypeId.WEDGE_LEVELS:
        a = params["a"]
        xm = 3.0 * max(1.0, 1.0 / a) / math.sqrt(params["lam"])
        return 0.0, xm, -a * xm, a * xm
    raise ConfigError(f"prototype {pid.value} has no field oracle")


def _cmd_prototype(args):
    pid = PrototypeId(args.id)
    params = default_params(pid)
    if args.lam is not None:
        if "lam" not in params:
            raise ConfigError(f"{pid.value} takes no lambda parameter")
        params["lam"] = args.lam
    for item in args.param:
        key, _, raw = item.partition("=")
        if key not in params:
            raise ConfigError(
                f"{pid.value} has no parameter {key!r}; it takes {sorted(params)}"
            )
        try:
            params[key] = float(raw)
        except ValueError:
            raise ConfigError(f"--param {key} needs a number, got {raw!r}")
    nx, ny = args.grid
    x0, x1, y0, y1 = _proto_box(pid, params)
    spec = GridSpec(nx, ny, x0, y0, max((x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1)))
    x, y = spec.node_coords()
    values = analytic_average(pid, x, y, check_domain=False, **params)
    write_field_csv(args.out, ScalarField(spec, np.asarray(values, dtype=float)))
    return EXIT_OK


def _cmd_delaunay_check(args):
    started = time.perf_counter()
    points, values = read_points_csv(args.points)
    cloud = PointCloud(points, values)
    h = args.h
    lo = points.min(axis=0) - 2 * h
    hi = points.max(axis=0) + 2 * h
    nx = int(math.ceil((hi[0] - lo[0]) / h)) + 1
    ny = int(math.ceil((hi[1] - lo[1]) / h)) + 1
    spec = GridSpec(nx, ny, float(lo[0]), float(lo[1]), h)
    p = TransformParams(
        lam=args.lam,
        module=args.module,
        stencil=_stencil_for(spec, args.stencil_radius),
        solver=SolverConfig(tol=args.tol, max_sweeps=args.max_sweeps),
    )
    report = structural_check(cloud, p, spec)
    doc = {
        "schema": SCHEMA_VERSION,
        "task": "delaunay-check",
        "lambda": report.lam_used,
        "m_used": report.m_used,
        "inputs_sha256": _sha256_files([args.points]),
        "lipschitz": report.lipschitz,
        "max_snap_distance": report.max_snap_distance,
        "max_deviation": report.max_deviation,
        "tolerance": report.tolerance,
        "passed": report.passed,
        "cells": [
            {
                "vertex_ids": list(c.vertex_ids),
                "regular": c.regular,
                "radius": c.radius,
                "sigma": c.sigma,
                "lam_required": c.lam_required,
                "m_required": c.m_required,
                "grad_measured": c.grad_measured,
                "grad_bound": c.grad_bound,
                "deviation": c.deviation,
                "n_nodes": c.n_nodes,
            }
            for c in report.cells
        ],
        "wall_time_s": time.perf_counter() - started,
    }
    _write_json(args.out, doc)
    return EXIT_OK


def _cmd_metrics(args):
    a = read_field_csv(args.a)
    b = read_field_csv(args.b)
    doc = {"eps": relative_l2(a, b), "linf": linf(a, b)}
    if args.mask:
        mask = read_mask_csv(args.mask)
        doc["eps_k"] = relative_l2(a, b, mask)
    if args.psnr:
        doc["psnr_db"] = psnr(a, b)
    print(json.dumps(_jsonable(doc), sort_keys=True))
    return EXIT_OK


def _cmd_levelset(args):
    cfg = load_run_config(args.config, expected_task="levelset")
    started = time.perf_counter()
    truth = _truth_field(cfg)
    spec = truth.spec
    section = cfg.params["levels"]
    if "count" in section:
        levels = equispaced_levels(truth, section["count"])
    else:
        levels = np.asarray(section["values"])
    sample = build_levelset_sample(
        truth, levels, spec, value_mode=cfg.params["value_mode"]
    )
    out_field, lrep = reconstruct_levelset(sample, _params_for(cfg, spec))
    write_field_csv(cfg.out, out_field)
    doc = _report_base(cfg)
    doc["m_used"] = lrep.m_used
    doc["thresholds"] = {
        "delta0": lrep.delta0,
        "lam_required": lrep.lam_required,
        "lam_warned": lrep.warned,
        "under_resolved": lrep.under_resolved,
    }
    doc["levels"] = [float(v) for v in levels]
    doc["metrics"] = _sample_metrics(truth, out_field, sample)
    blocks = {
        "lower": _solver_block(lrep.lower_report),
        "upper": _solver_block(lrep.upper_report),
    }
    return _finish_run(cfg, doc, blocks, started)


def _cmd_scatter(args):
    cfg = load_run_config(args.config, expected_task="scatter")
    started = time.perf_counter()
    truth = _truth_field(cfg)
    spec = truth.spec
    sample = build_scatter_sample(
        truth, cfg.params["density"], cfg.params["seed"], spec
    )
    result = average_approximation(sample, _params_for(cfg, spec))
    write_field_csv(cfg.out, result.field)
    doc = _report_base(cfg)
    doc["m_used"] = result.m_used
    doc["seed"] = cfg.params["seed"]
    doc["density"] = cfg.params["density"]
    doc["metrics"] = _sample_metrics(truth, result.field, sample)
    return _finish_run(cfg, doc, _avg_blocks(result), started)


def _cmd_inpaint(args):
    cfg = load_run_config(args.config, expected_task="inpaint")
    started = time.perf_counter()
    image = _read_image(cfg.params["image"])
    damage = read_mask_csv(cfg.params["damage_mask"])
    if damage.spec != image.spec:
        raise ConfigError("damage mask grid does not match the image grid")
    out_field, result = inpaint(image, damage, _params_for(cfg, image.spec))
    _write_image(cfg.out, out_field)
    doc = _report_base(cfg)
    doc["m_used"] = result.m_used if result else None
    doc["n_damaged"] = int(damage.member.sum())
    metrics = {}
    if "truth" in cfg.params:
        truth = _read_image(cfg.params["truth"])
        if truth.spec != image.spec:
            raise ConfigError("truth grid does not match the image grid")
        metrics["eps"] = relative_l2(truth, out_field)
        metrics["linf"] = linf(truth, out_field)
        metrics["psnr_db"] = psnr(truth, out_field)
    doc["metrics"] = metrics
    blocks = _avg_blocks(result) if result else {}
    if not blocks:
        doc["solver"] = {}
        doc["converged"] = True
        doc["wall_time_s"] = time.perf_counter() - started
        _write_json(cfg.report, doc)
        return EXIT_OK
    return _finish_run(cfg, doc, blocks, started)


def _cmd_denoise(args):
    cfg = load_run_config(args.config, expected_task="denoise")
    started = time.perf_counter()
    image = _read_image(cfg.params["image"])
    noise = NoiseSpec(density=cfg.params["density"], seed=cfg.params["seed"])
    pad = PaddingSpec(width=cfg.params["pad"])
    result = denoise_salt_pepper(image, noise, pad, _params_for(cfg, image.spec))
    _write_image(cfg.out, result.restored)
    if "corrupted_out" in cfg.params:
        _write_image(cfg.params["corrupted_out"], result.corrupted)
    doc = _report_base(cfg)
    doc["m_used"] = result.avg.m_used
    doc["seed"] = cfg.params["seed"]
    doc["density"] = cfg.params["density"]
    doc["pad"] = cfg.params["pad"]
    doc["metrics"] = {
        "psnr_db": result.psnr_db,
        "psnr_corrupted_db": psnr(image, result.corrupted),
    }
    return _finish_run(cfg, doc, _avg_blocks(result.avg), started)


# ---------------------------------------------------------------------------
# parser assembly


def _add_solver_flags(sp, radius_default=1):
    sp.add_argument(
        "--stencil-radius",
        type=_radius_arg,
        default=radius_default,
        help="sweep stencil radius 1-3, or 'full' for whole-grid reach",
    )
    sp.add_argument("--tol", type=float, default=1e-9, help="relative stop tolerance")
    sp.add_argument(
        "--max-sweeps", type=int, default=1_000_000, help="sweep budget"
    )


def _build_parser():
    parser = _Parser(prog="ccx", description=__doc__)
    parser.add_argument(
        "--version",
        action="version",
        version=f"ccx {__version__} (config schema {SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("envelope", help="discrete convex envelope of a field")
    sp.add_argument("--in", dest="infile", required=True, help="input field CSV")
    sp.add_argument("--out", required=True, help="output field CSV")
    _add_solver_flags(sp)
    sp.set_defaults(handler=_cmd_envelope)

    sp = sub.add_parser("transform", help="lower/upper/average transform")
    sp.add_argument("kind", choices=("lower", "upper", "average"))
    sp.add_argument("--in", dest="infile", required=True, help="input field CSV")
    sp.add_argument("--mask", help="sample mask CSV (restrict input to K)")
    sp.add_argument("--values", help="field CSV overriding sample values on K")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument(
        "--module", type=_module_arg, default=None, help="module M or 'auto'"
    )
    sp.add_argument("--out", required=True, help="output field CSV")
    sp.add_argument("--report", help="optional report JSON path")
    _add_solver_flags(sp)
    sp.set_defaults(handler=_cmd_transform)

    sp = sub.add_parser("prototype", help="closed-form oracle field of a prototype")
    sp.add_argument(
        "--id", required=True, choices=[p.value for p in PrototypeId]
    )
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="override another prototype parameter (repeatable)",
    )
    sp.add_argument("--grid", type=_grid_arg, default=(201, 201))
    sp.add_argument("--out", required=True, help="output field CSV")
    sp.set_defaults(handler=_cmd_prototype)

    sp = sub.add_parser(
        "delaunay-check", help="exact cell interpolants vs the grid transform"
    )
    sp.add_argument("--points", required=True, help="CSV rows x,y,value")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--module", type=_module_arg, default=None)
    sp.add_argument("--h", type=float, required=True, help="comparison grid step")
    sp.add_argument("--out", required=True, help="report JSON path")
    _add_solver_flags(sp, radius_default="full")
    sp.set_defaults(handler=_cmd_delaunay_check)

    sp = sub.add_parser("metrics", help="error metrics between two fields")
    sp.add_argument("--a", required=True, help="reference field CSV")
    sp.add_argument("--b", required=True, help="comparison field CSV")
    sp.add_argument("--mask", help="optional mask CSV for eps_k")
    sp.add_argument("--psnr", action="store_true", help="also report PSNR")
    sp.set_defaults(handler=_cmd_metrics)

    for name, handler in (
        ("levelset", _cmd_levelset),
        ("scatter", _cmd_scatter),
        ("inpaint", _cmd_inpaint),
        ("denoise", _cmd_denoise),
    ):
        sp = sub.add_parser(name, help=f"{name} pipeline driven by a JSON config")
        sp.add_argument("--config", required=True, help="run config JSON")
        sp.set_defaults(handler=handler)

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"ccx: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CcxError as exc:
        print(f"ccx: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"ccx: io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
