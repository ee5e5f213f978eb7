"""Versioned JSON run configuration for the pipeline subcommands.

One config file drives one pipeline run (levelset, scatter, inpaint or
denoise). The schema is strict by design: the version must match, unknown
keys anywhere are rejected, and every referenced path is validated before
any computation starts, so a bad config can never leave partial outputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from .errors import ConfigError

__all__ = ["SCHEMA_VERSION", "RunConfig", "load_run_config", "validate_config"]

SCHEMA_VERSION = 1

_TASKS = ("levelset", "scatter", "inpaint", "denoise")
_SURFACES = ("franke", "cpa", "dpa")
_COMMON_REQUIRED = ("schema", "task", "lambda", "out", "report")
_COMMON_OPTIONAL = ("module", "stencil_radius", "tol", "max_sweeps")
_TASK_KEYS = {
    "levelset": ((), ("surface", "field", "grid", "levels", "value_mode")),
    "scatter": (("density", "seed"), ("surface", "field", "grid")),
    "inpaint": (("image", "damage_mask"), ("truth",)),
    "denoise": (("image", "density", "seed"), ("pad", "corrupted_out")),
}


@dataclass(frozen=True)
class RunConfig:
    """A validated pipeline run: common solver knobs plus task parameters.

    module is None when the config asked for automatic resolution;
    stencil_radius is an int ring radius or the string "full" for the
    whole-grid reach. params holds the task-specific keys exactly as
    validated. source_path and input_paths feed the report's input hash.
    """

    schema: int
    task: str
    lam: float
    module: Optional[float]
    stencil_radius: Any
    tol: float
    max_sweeps: int
    out: str
    report: str
    params: Dict[str, Any]
    source_path: Optional[str]
    input_paths: Tuple[str, ...]


def _fail(where, msg):
    raise ConfigError(f"{where}: {msg}")


def _check_keys(d, required, optional, where):
    if not isinstance(d, dict):
        _fail(where, f"expected an object, got {type(d).__name__}")
    missing = [k for k in required if k not in d]
    if missing:
        _fail(where, f"missing required key(s) {missing}")
    unknown = [k for k in d if k not in required and k not in optional]
    if unknown:
        _fail(where, f"unknown key(s) {unknown}")


def _number(d, key, where, positive=True):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(where, f"'{key}' must be a number, got {v!r}")
    v = float(v)
    if positive and not v > 0:
        _fail(where, f"'{key}' must be positive, got {v}")
    return v


def _integer(d, key, where, minimum=0):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(where, f"'{key}' must be an integer, got {v!r}")
    if v < minimum:
        _fail(where, f"'{key}' must be >= {minimum}, got {v}")
    return v


def _string(d, key, where, choices=None):
    v = d[key]
    if not isinstance(v, str):
        _fail(where, f"'{key}' must be a string, got {v!r}")
    if choices is not None and v not in choices:
        _fail(where, f"'{key}' must be one of {list(choices)}, got {v!r}")
    return v


def _input_path(d, key, where):
    p = _string(d, key, where)
    if not os.path.isfile(p):
        _fail(where, f"'{key}' file does not exist: {p}")
    return p


def _output_path(d, key, where):
    p = _string(d, key, where)
    parent = os.path.dirname(os.path.abspath(p))
    if not os.path.isdir(parent):
        _fail(where, f"'{key}' parent directory does not exist: {parent}")
    return p


def _grid_section(d, where):
    if "n" in d:
        _check_keys(d, ("n",), (), where)
        n = _integer(d, "n", where, minimum=2)
        return {"n": n}
    _check_keys(d, ("nx", "ny", "x0", "y0", "h"), (), where)
    return {
        "nx": _integer(d, "nx", where, minimum=2),
        "ny": _integer(d, "ny", where, minimum=2),
        "x0": _number(d, "x0", where, positive=False),
        "y0": _number(d, "y0", where, positive=False),
        "h": _number(d, "h", where),
    }


def _levels_section(v, where):
    if isinstance(v, dict):
        _check_keys(v, ("count",), (), where)
        return {"count": _integer(v, "count", where, minimum=1)}
    if isinstance(v, list):
        if len(v) < 1:
            _fail(where, "'levels' list must not be empty")
        vals = []
        for item in v:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                _fail(where, f"'levels' entries must be numbers, got {item!r}")
            vals.append(float(item))
        if any(b <= a for a, b in zip(vals, vals[1:])):
            _fail(where, "'levels' must be strictly increasing")
        return {"values": vals}
    _fail(where, f"'levels' must be a list or {{'count': n}}, got {v!r}")


def _surface_or_field(d, params, inputs, where):
    if ("surface" in d) == ("field" in d):
        _fail(where, "exactly one of 'surface' or 'field' is required")
    if "surface" in d:
        params["surface"] = _string(d, "surface", where, choices=_SURFACES)
        grid = d.get("grid", {"n": 201})
        params["grid"] = _grid_section(grid, f"{where}.grid")
    else:
        if "grid" in d:
            _fail(where, "'grid' is read from the 'field' file; drop the key")
        params["field"] = _input_path(d, "field", where)
        inputs.append(params["field"])


def validate_config(doc, expected_task=None, source_path=None):
    """Validate a parsed config document into a RunConfig.

    Parameters
    ----------
    doc : dict
        Parsed JSON document.
    expected_task : str, optional
        Subcommand name; a mismatching "task" value is a ConfigError.
    source_path : str, optional
        Origin file, recorded for input hashing.

    Returns
    -------
    RunConfig

    Raises
    ------
    ConfigError
        On any schema violation, unknown key, or missing path.
    """
    where = "config"
    if not isinstance(doc, dict):
        _fail(where, f"top level must be an object, got {type(doc).__name__}")
    if "task" not in doc or not isinstance(doc.get("task"), str):
        _fail(where, "'task' must name one of " + ", ".join(_TASKS))
    task = doc["task"]
    if task not in _TASKS:
        _fail(where, f"'task' must be one of {list(_TASKS)}, got {task!r}")
    if expected_task is not None and task != expected_task:
        _fail(where, f"'task' is {task!r} but the subcommand is {expected_task!r}")
    req, opt = _TASK_KEYS[task]
    _check_keys(doc, _COMMON_REQUIRED + req, _COMMON_OPTIONAL + opt, where)

    schema = _integer(doc, "schema", where, minimum=0)
    if schema != SCHEMA_VERSION:
        _fail(where, f"'schema' must be {SCHEMA_VERSION}, got {schema}")
    lam = _number(doc, "lambda", where)

    module = None
    if "module" in doc:
        if doc["module"] != "auto":
            module = _number(doc, "module", where)

    radius = doc.get("stencil_radius", "full")
    if radius != "full":
        if isinstance(radius, bool) or not isinstance(radius, int) or radius < 1:
            _fail(where, f"'stencil_radius' must be a positive int or 'full', got {radius!r}")

    tol = _number(doc, "tol", where) if "tol" in doc else 1e-9
    max_sweeps = (
        _integer(doc, "max_sweeps", where, minimum=1)
        if "max_sweeps" in doc
        else 1_000_000
    )
    out = _output_path(doc, "out", where)
    report = _output_path(doc, "report", where)

    params: Dict[str, Any] = {}
    inputs: list = []
    tw = f"config[{task}]"
    if task == "levelset":
        _surface_or_field(doc, params, inputs, tw)
        if "levels" not in doc:
            _fail(tw, "missing required key(s) ['levels']")
        params["levels"] = _levels_section(doc["levels"], f"{tw}.levels")
        params["value_mode"] = (
            _string(doc, "value_mode", tw, choices=("level", "function"))
            if "value_mode" in doc
            else "level"
        )
    elif task == "scatter":
        _surface_or_field(doc, params, inputs, tw)
        density = _number(doc, "density", tw)
        if density > 1.0:
            _fail(tw, f"'density' must be in (0, 1], got {density}")
        params["density"] = density
        params["seed"] = _integer(doc, "seed", tw)
    elif task == "inpaint":
        params["image"] = _input_path(doc, "image", tw)
        params["damage_mask"] = _input_path(doc, "damage_mask", tw)
        inputs += [params["image"], params["damage_mask"]]
        if "truth" in doc:
            params["truth"] = _input_path(doc, "truth", tw)
            inputs.append(params["truth"])
    elif task == "denoise":
        params["image"] = _input_path(doc, "image", tw)
        inputs.append(params["image"])
        density = _number(doc, "density", tw)
        if density > 1.0:
            _fail(tw, f"'density' must be in (0, 1], got {density}")
        params["density"] = density
        params["seed"] = _integer(doc, "seed", tw)
        params["pad"] = _integer(doc, "pad", tw) if "pad" in doc else 0
        if "corrupted_out" in doc:
            params["corrupted_out"] = _output_path(doc, "corrupted_out", tw)

    return RunConfig(
        schema=schema,
        task=task,
        lam=lam,
        module=module,
        stencil_radius=radius,
        tol=tol,
        max_sweeps=max_sweeps,
        out=out,
        report=report,
        params=params,
        source_path=source_path,
        input_paths=tuple(inputs),
    )


def load_run_config(path, expected_task=None):
    """Read and validate one JSON run config.

    Raises
    ------
    ConfigError
        If the file is missing, is not valid JSON, or fails validation.
    """
    if not os.path.isfile(path):
        raise ConfigError(f"config file does not exist: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return validate_config(doc, expected_task=expected_task, source_path=path)
