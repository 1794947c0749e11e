"""Run configuration: JSON schema, validation, defaults, assembly building.

A config is a plain dict with full defaults applied at parse time, so
parsing its own serialization is the identity. Node selectors are
resolved against each part's grid when the assembly is built.
"""

from __future__ import annotations

import copy
import json
import math

import numpy as np

from .fea import BoundaryConditions, Material, nodes_in_disk, resolve_node
from .grid import ElementField, UniformGrid
from .motion import (FollowerTrajectory, KeyframeTrajectory, RigidTransform,
                     RotationTrajectory, StaticTrajectory, Trajectory)
from .optimizer import Assembly, OptimizerSettings, Part


class ConfigError(ValueError):
    """Config schema or invariant violation, with a field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


_MATERIAL_DEFAULTS = {"E": 1.0e9, "nu": 0.3, "ersatz": 1.0e-6}
_OPTIMIZER_DEFAULTS = {
    "delta_v_max": 0.025, "eps_f": 1.0e-3, "max_inner": 12, "max_outer": 400,
    "mode": "collision-free", "use_compliance": True, "ratio_cap": 10.0,
}
_OUTPUT_DEFAULTS = {"run_dir": "runs/out", "export_fields": False}


class RunConfig:
    """Validated, fully-defaulted configuration dictionary."""

    def __init__(self, data: dict):
        self.data = data

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    @property
    def n_parts(self) -> int:
        return len(self.data["parts"])

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(path, msg)


def _as_floats(value, path: str, n: int) -> list:
    _require(isinstance(value, (list, tuple)) and len(value) == n, path,
             f"expected a list of {n} numbers")
    try:
        return [float(x) for x in value]
    except (TypeError, ValueError):
        raise ConfigError(path, "entries must be numbers") from None


def parse_config_dict(raw: dict) -> RunConfig:
    """Validate and normalize a config dict, applying all defaults."""
    _require(isinstance(raw, dict), "$", "config root must be an object")
    data = copy.deepcopy(raw)
    parts = data.get("parts")
    _require(isinstance(parts, list) and len(parts) >= 1, "parts",
             "at least one part is required")
    for pi, p in enumerate(parts):
        path = f"parts[{pi}]"
        _require(isinstance(p, dict), path, "part must be an object")
        p.setdefault("name", f"part{pi}")
        dims = p.get("dims")
        _require(isinstance(dims, (list, tuple)) and len(dims) in (2, 3),
                 path + ".dims", "expected 2 or 3 element counts")
        _require(all(isinstance(n, int) and n >= 1 for n in dims),
                 path + ".dims", "element counts must be integers >= 1")
        d = len(dims)
        _require(d == 2, path + ".dims",
                 "optimization configs are 2D (3D elasticity is out of scope)")
        spacing = p.get("spacing")
        _require(isinstance(spacing, (int, float)) and spacing > 0,
                 path + ".spacing", "spacing must be a positive number")
        p["spacing"] = float(spacing)
        p["origin"] = _as_floats(p.get("origin", [0.0] * d),
                                 path + ".origin", d)
        holes = p.setdefault("holes", [])
        _require(isinstance(holes, list), path + ".holes", "expected a list")
        for hi, h in enumerate(holes):
            hp = f"{path}.holes[{hi}]"
            _require(isinstance(h, dict), hp, "hole must be an object")
            h["center"] = _as_floats(h.get("center"), hp + ".center", d)
            _require(isinstance(h.get("radius"), (int, float))
                     and h["radius"] > 0, hp + ".radius",
                     "radius must be positive")
            h["radius"] = float(h["radius"])
            h.setdefault("fixed", True)
        mat = p.setdefault("material", {})
        for k, v in _MATERIAL_DEFAULTS.items():
            mat.setdefault(k, v)
        try:
            Material(mat["E"], mat["nu"], mat["ersatz"])
        except ValueError as exc:
            raise ConfigError(path + ".material", str(exc)) from None
        fixed = p.setdefault("fixed", [])
        _require(isinstance(fixed, list), path + ".fixed", "expected a list")
        for fi, fx in enumerate(fixed):
            fp = f"{path}.fixed[{fi}]"
            _require(isinstance(fx, dict) and "where" in fx, fp,
                     "expected an object with 'where'")
            axes = fx.setdefault("axes", [0, 1])
            _require(all(a in (0, 1) for a in axes), fp + ".axes",
                     "axes entries must be 0 or 1")
        loads = p.setdefault("loads", [])
        _require(isinstance(loads, list), path + ".loads", "expected a list")
        for li, ld in enumerate(loads):
            lp = f"{path}.loads[{li}]"
            _require(isinstance(ld, dict) and "where" in ld, lp,
                     "expected an object with 'where'")
            ld["vector"] = _as_floats(ld.get("vector"), lp + ".vector", d)
        traj = p.get("trajectory", {"kind": "static"})
        p["trajectory"] = _normalize_trajectory(traj, path + ".trajectory")

    n = len(parts)
    opt = data.setdefault("optimizer", {})
    for k, v in _OPTIMIZER_DEFAULTS.items():
        opt.setdefault(k, v)
    for name, default in (("v_target", 0.5), ("gamma", 1.0), ("lambda_g", 0.5)):
        val = opt.setdefault(name, default)
        if isinstance(val, (int, float)):
            opt[name] = [float(val)] * n
        else:
            opt[name] = _as_floats(val, f"optimizer.{name}", n)
    col = data.setdefault("collision", {})
    steps = col.setdefault("steps", 500)
    _require(isinstance(steps, int) and steps >= 1, "collision.steps",
             "time step count must be an integer >= 1")
    out = data.setdefault("outputs", {})
    for k, v in _OUTPUT_DEFAULTS.items():
        out.setdefault(k, v)
    try:
        _settings_from(data)
    except ValueError as exc:
        raise ConfigError("optimizer", str(exc)) from None
    return RunConfig(data)


def _normalize_trajectory(traj: dict, path: str) -> dict:
    _require(isinstance(traj, dict) and "kind" in traj, path,
             "expected an object with 'kind'")
    kind = traj["kind"]
    if kind == "static":
        return {"kind": "static"}
    if kind == "rotation":
        out = {"kind": "rotation",
               "pivot": _as_floats(traj.get("pivot"), path + ".pivot", 2),
               "theta": _as_floats(traj.get("theta"), path + ".theta", 2)}
        return out
    if kind == "follower":
        L = traj.get("L")
        _require(isinstance(L, (int, float)) and L > 0, path + ".L",
                 "domain length must be positive")
        return {"kind": "follower", "L": float(L),
                "theta": _as_floats(traj.get("theta"), path + ".theta", 2)}
    if kind == "keyframes":
        frames = traj.get("frames")
        _require(isinstance(frames, list) and len(frames) >= 2,
                 path + ".frames", "need at least 2 keyframes")
        norm = []
        for k, fr in enumerate(frames):
            fp = f"{path}.frames[{k}]"
            _require(isinstance(fr, list) and len(fr) == 3, fp,
                     "keyframe must be [t, angle, translation]")
            norm.append([float(fr[0]), float(fr[1]),
                         _as_floats(fr[2], fp + "[2]", 2)])
        _require(norm[0][0] == 0.0 and norm[-1][0] == 1.0, path + ".frames",
                 "keyframe times must start at 0 and end at 1")
        return {"kind": "keyframes", "frames": norm}
    raise ConfigError(path + ".kind", f"unknown trajectory kind {kind!r}")


def parse_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("$", f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    return parse_config_dict(raw)


def write_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(cfg.to_json() + "\n")


def build_trajectory(traj: dict) -> Trajectory:
    kind = traj["kind"]
    if kind == "static":
        return StaticTrajectory(2)
    if kind == "rotation":
        return RotationTrajectory(traj["pivot"], traj["theta"][0],
                                  traj["theta"][1])
    if kind == "follower":
        return FollowerTrajectory(traj["L"], traj["theta"][0],
                                  traj["theta"][1])
    frames = [(t, RigidTransform(RigidTransform.rotation_2d(a).rotation,
                                 np.asarray(tr, dtype=np.float64)))
              for t, a, tr in traj["frames"]]
    return KeyframeTrajectory(frames)


def build_part(pcfg: dict, index: int) -> Part:
    grid = UniformGrid(tuple(pcfg["origin"]), pcfg["spacing"],
                       tuple(pcfg["dims"]))
    solid = np.ones(grid.num_elements, dtype=np.int8)
    mask = np.ones(grid.num_elements, dtype=bool)
    centers = grid.element_centers()
    for h in pcfg["holes"]:
        inside = np.linalg.norm(centers - np.asarray(h["center"]),
                                axis=1) < h["radius"]
        solid[inside] = 0
        mask[inside] = False
    mat = Material(pcfg["material"]["E"], pcfg["material"]["nu"],
                   pcfg["material"]["ersatz"])
    bc = BoundaryConditions()
    for fx in pcfg["fixed"]:
        where = fx["where"]
        if isinstance(where, dict) and "disk" in where:
            dk = where["disk"]
            for n in nodes_in_disk(grid, dk["center"], dk["radius"]):
                bc.fix(int(n), fx["axes"])
        else:
            bc.fix(resolve_node(grid, where), fx["axes"])
    for h in pcfg["holes"]:
        if h["fixed"]:
            for n in nodes_in_disk(grid, h["center"], h["radius"]):
                bc.fix(int(n), (0, 1))
    for ld in pcfg["loads"]:
        bc.load(resolve_node(grid, ld["where"]), ld["vector"])
    try:
        bc.validate(grid)
    except ValueError as exc:
        raise ConfigError(f"parts[{index}]", str(exc)) from None
    design = ElementField(grid, solid, "binary-design")
    return Part(pcfg["name"], grid, design, mask, mat, bc,
                build_trajectory(pcfg["trajectory"]))


def _settings_from(data: dict) -> OptimizerSettings:
    opt = data["optimizer"]
    return OptimizerSettings(
        v_target=list(opt["v_target"]), gamma=list(opt["gamma"]),
        lambda_g=list(opt["lambda_g"]), delta_v_max=opt["delta_v_max"],
        eps_f=opt["eps_f"], max_inner=opt["max_inner"],
        max_outer=opt["max_outer"], mode=opt["mode"],
        use_compliance=opt["use_compliance"], ratio_cap=opt["ratio_cap"],
        collision_steps=data["collision"]["steps"])


def build_assembly(cfg: RunConfig) -> Assembly:
    parts = [build_part(p, i) for i, p in enumerate(cfg.data["parts"])]
    return Assembly(parts, _settings_from(cfg.data))
