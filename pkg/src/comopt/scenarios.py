"""Built-in scenario generators.

Dimensions, positions, and hole sizes of the classic test assemblies are
approximations reconstructed from the published configurations; element
counts, pivots, angle ranges, boundary conditions, the follower law, and
temporal resolutions are as published. The ``scale`` multiplier changes
grid resolution only: physical sizes, forces, and motions are unchanged,
with per-axis sizes preserved up to integer rounding of element counts.
"""

from __future__ import annotations

import math

from .config import RunConfig, parse_config_dict
from .motion import follower_height

_TWO_PI = 2.0 * math.pi


def _scaled(dims, size_x, scale):
    """(dims', spacing') at a resolution multiplier, x-size exact."""
    dims_s = tuple(max(1, round(n * scale)) for n in dims)
    return dims_s, size_x / dims_s[0]


def _part(name, dims, spacing, center, trajectory, fixed, loads, holes=()):
    size = [n * spacing for n in dims]
    return {
        "name": name,
        "dims": list(dims),
        "spacing": spacing,
        "origin": [center[0] - size[0] / 2.0, center[1] - size[1] / 2.0],
        "holes": [{"center": list(c), "radius": r} for c, r in holes],
        "fixed": fixed,
        "loads": loads,
        "trajectory": trajectory,
    }


def cam_follower(scale: float = 1.0) -> RunConfig:
    """Vertically reciprocating follower above a rotating cam.

    The cam turns a full revolution about the center of its fixed
    circular cutout at (0, 8); the follower translates vertically per
    the law 3L/4 + (L/8) cos(2 theta) with L = 16, starting at the top
    of its travel. 10,000 follower and 20,000 cam elements at scale 1.
    """
    L = 16.0
    pivot = (0.0, 8.0)
    fl_dims, fl_eps = _scaled((100, 100), 3.0, scale)
    cam_dims, cam_eps = _scaled((200, 100), 1.4, scale)
    follower = _part(
        "follower", fl_dims, fl_eps,
        (0.0, follower_height(L, 0.0)),
        {"kind": "follower", "L": L, "theta": [0.0, _TWO_PI]},
        fixed=[{"where": "corner:bottom-left", "axes": [1]},
               {"where": "corner:bottom-right", "axes": [0, 1]}],
        loads=[{"where": "corner:top-left", "vector": [1.0, 0.0]}])
    cam = _part(
        "cam", cam_dims, cam_eps, pivot,
        {"kind": "rotation", "pivot": list(pivot), "theta": [0.0, _TWO_PI]},
        fixed=[],
        loads=[{"where": "corner:top-right", "vector": [0.0, -1.0]}],
        holes=[(pivot, 0.12)])
    return parse_config_dict({
        "parts": [follower, cam],
        "optimizer": {"v_target": [0.5, 0.5], "gamma": [1.0, 0.5],
                      "lambda_g": [0.2, 0.2], "mode": "collision-free"},
        "collision": {"steps": 1000},
    })


def three_squares(scale: float = 1.0) -> RunConfig:
    """Three nearly-square rotors on fixed center pins.

    Angle ranges [pi/2, pi/5], [0, 3pi/10], [pi/2, -3pi/2]; loads at the
    top-middle points; 6,000 elements per part at scale 1; 500 time steps.
    """
    dims, eps = _scaled((75, 80), 4.5, scale)
    centers = [(0.0, 4.31), (-3.0, 0.0), (3.0, 0.0)]
    thetas = [[math.pi / 2, math.pi / 5], [0.0, 0.3 * math.pi],
              [math.pi / 2, -1.5 * math.pi]]
    forces = [[1.0, 0.0], [1.0, 1.0], [-1.0, 1.0]]
    parts = []
    for i, (c, th, f) in enumerate(zip(centers, thetas, forces)):
        parts.append(_part(
            f"square{i + 1}", dims, eps, c,
            {"kind": "rotation", "pivot": list(c), "theta": th},
            fixed=[],
            loads=[{"where": "edge-mid:top", "vector": f}],
            holes=[(c, 0.3)]))
    return parse_config_dict({
        "parts": parts,
        "optimizer": {"v_target": [0.4, 0.4, 0.4], "gamma": [1.0, 1.0, 1.0],
                      "lambda_g": [0.5, 0.5, 0.5], "mode": "collision-free"},
        "collision": {"steps": 500},
    })


def gripper_cams(scale: float = 1.0) -> RunConfig:
    """A gripper flanked by two cams that never meet each other.

    Angle ranges [0, pi/2], [0, pi], [pi/2, -3pi/2]; all parts pinned at
    fixed circular cutouts; 6,000 elements per part at scale 1; 500 time
    steps. The cams are placed so their swept volumes stay disjoint: all
    cam-cam collision weights vanish identically.
    """
    dims, eps = _scaled((75, 80), 4.5, scale)
    centers = [(0.0, 0.0), (-4.9, 0.0), (4.9, 0.0)]
    thetas = [[0.0, math.pi / 2], [0.0, math.pi],
              [math.pi / 2, -1.5 * math.pi]]
    names = ["gripper", "cam1", "cam2"]
    loads = [{"where": "corner:top-left", "vector": [1.0, 0.0]},
             {"where": "corner:top-right", "vector": [0.0, -1.0]},
             {"where": "corner:top-right", "vector": [0.0, -1.0]}]
    parts = []
    for name, c, th, ld in zip(names, centers, thetas, loads):
        parts.append(_part(
            name, dims, eps, c,
            {"kind": "rotation", "pivot": list(c), "theta": th},
            fixed=[], loads=[ld], holes=[(c, 0.3)]))
    return parse_config_dict({
        "parts": parts,
        "optimizer": {"v_target": [0.6, 0.6, 0.6], "gamma": [1.0, 1.0, 1.0],
                      "lambda_g": [0.5, 0.5, 0.5], "mode": "volume-target"},
        "collision": {"steps": 500},
    })


def translating_squares(scale: float = 1.0, K: int = 1000) -> RunConfig:
    """Verification scene: a unit square passed over by another.

    Part A is the static unit square [0,1]^2; part B starts at x-offset 2
    and translates linearly to offset 0 over the cycle, giving a closed
    form time-aggregated overlap of 1/4.
    """
    dims, eps = _scaled((64, 64), 1.0, scale)
    a = _part("A", dims, eps, (0.5, 0.5), {"kind": "static"},
              fixed=[{"where": "corner:bottom-left", "axes": [0, 1]},
                     {"where": "corner:bottom-right", "axes": [0, 1]}],
              loads=[{"where": "corner:top-right", "vector": [0.0, -1.0]}])
    b = _part("B", dims, eps, (2.5, 0.5),
              {"kind": "keyframes",
               "frames": [[0.0, 0.0, [0.0, 0.0]], [1.0, 0.0, [-2.0, 0.0]]]},
              fixed=[{"where": "corner:bottom-left", "axes": [0, 1]},
                     {"where": "corner:bottom-right", "axes": [0, 1]}],
              loads=[{"where": "corner:top-right", "vector": [0.0, -1.0]}])
    return parse_config_dict({
        "parts": [a, b],
        "optimizer": {"v_target": [0.5, 0.5], "gamma": [1.0, 1.0],
                      "lambda_g": [0.5, 0.5]},
        "collision": {"steps": K},
    })


_BUILTINS = {
    "cam-follower": cam_follower,
    "three-squares": three_squares,
    "gripper-cams": gripper_cams,
    "translating-squares": translating_squares,
}


def builtin_scenario(name: str, scale: float = 1.0) -> RunConfig:
    """Emit a built-in scenario config at the given resolution multiplier."""
    if name not in _BUILTINS:
        raise ValueError(
            f"unknown scenario {name!r}; options: {', '.join(sorted(_BUILTINS))}")
    return _BUILTINS[name](scale)
