"""Batch command-line interface.

Verbs:
  run             optimize an assembly and write trace + checkpoints
  check-oracle    compare matrix-based collision measures to the
                  brute-force overlap oracle
  check-gradients exact collision-gradient linearity and sensitivity
                  ranking checks on small meshes
  export-fields   render density / sensitivity / collision fields

Exit codes: 0 success, 2 config error, 3 non-convergence, 4 failed
verification.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import _kernels
from .collision import (aggregate_collision, collision_sensitivity,
                        oracle_collision)
from .config import ConfigError, RunConfig, build_assembly, parse_config
from .grid import ElementField, write_field_pgm, write_field_text
from .optimizer import co_design
from .scenarios import builtin_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_VERIFICATION = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a JSON run configuration")
    p.add_argument("--scenario", help="built-in scenario name")
    p.add_argument("--scale", type=float, default=1.0,
                   help="resolution multiplier for built-in scenarios")
    p.add_argument("--out", help="run directory override")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for randomized checks")


def _load_config(args) -> RunConfig:
    if bool(args.config) == bool(args.scenario):
        raise ConfigError("$", "provide exactly one of --config / --scenario")
    if args.config:
        return parse_config(args.config)
    return builtin_scenario(args.scenario, args.scale)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    opt = cfg.data["optimizer"]
    n = cfg.n_parts
    if getattr(args, "mode", None):
        opt["mode"] = args.mode
    for name in ("lambda_g", "gamma"):
        vals = getattr(args, name, None)
        if vals is not None:
            if len(vals) == 1:
                vals = vals * n
            if len(vals) != n:
                raise ConfigError(f"optimizer.{name}",
                                  f"expected 1 or {n} values")
            opt[name] = [float(v) for v in vals]
    if getattr(args, "no_compliance", False):
        opt["use_compliance"] = False
    if args.out:
        cfg.data["outputs"]["run_dir"] = args.out
    return cfg


def cmd_run(args) -> int:
    cfg = _apply_overrides(_load_config(args), args)
    assembly = build_assembly(cfg)
    assembly.assemble_cwms()
    run_dir = cfg.data["outputs"]["run_dir"]
    trace = co_design(assembly, run_dir=run_dir,
                      export_fields=cfg.data["outputs"]["export_fields"])
    last = {r.part: r for r in trace.rows}
    for i, row in sorted(last.items()):
        name = assembly.parts[i].name
        print(f"{name}: v={row.volume:.4f} ratio={row.ratio:.4f} "
              f"G={row.collision:.6e}")
    n_outer = max(r.iteration for r in trace.rows)
    print(f"{trace.status} ({n_outer} outer iterations, "
          f"trace in {run_dir}/trace.csv)")
    return EXIT_OK if trace.converged else EXIT_NONCONVERGED


def cmd_check_oracle(args) -> int:
    cfg = _load_config(args)
    assembly = build_assembly(cfg)
    assembly.assemble_cwms()
    designs = {i: p.design for i, p in enumerate(assembly.parts)}
    report = aggregate_collision(designs, assembly.cwms)
    K = assembly.settings.collision_steps
    worst = 0.0
    for (i, j), measured in sorted(report.pairwise.items()):
        rel = assembly.cwms[(i, j)]
        oracle = oracle_collision(
            assembly.parts[i].design, assembly.parts[j].design,
            _relative(assembly, i, j), K, samples_per_cell=args.samples)
        denom = max(oracle, assembly.parts[i].grid.cell_volume)
        err = abs(measured - oracle) / denom
        worst = max(worst, err)
        print(f"pair ({i},{j}): matrix={measured:.6f} oracle={oracle:.6f} "
              f"rel_err={err:.4f}")
    print(f"worst relative error: {worst:.4f} (tolerance {args.tolerance})")
    return EXIT_OK if worst <= args.tolerance else EXIT_VERIFICATION


def _relative(assembly, i, j):
    from .motion import RelativeTrajectory
    return RelativeTrajectory(i, j, assembly.parts[i].trajectory,
                              assembly.parts[j].trajectory)


def cmd_check_gradients(args) -> int:
    rng = np.random.default_rng(args.seed)
    ok = _check_collision_linearity(rng) and _check_tsf_ranking()
    return EXIT_OK if ok else EXIT_VERIFICATION


def _check_collision_linearity(rng, trials: int = 5) -> bool:
    from .collision import assemble_cwm
    from .grid import UniformGrid, element_to_vertex
    from .motion import (RelativeTrajectory, RotationTrajectory,
                         StaticTrajectory)
    worst = 0
    for _ in range(trials):
        n = int(rng.integers(6, 14))
        ga = UniformGrid((0.0, 0.0), 1.0 / n, (n, n))
        gb = UniformGrid((rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)),
                         1.0 / n, (n, n))
        rel = RelativeTrajectory(0, 1, StaticTrajectory(2),
                                 RotationTrajectory((0.5, 0.5), 0.0,
                                                    rng.uniform(0.5, 6.0)))
        W = assemble_cwm(ga, gb, rel, 100)
        rho_e = ElementField(ga, rng.integers(0, 2, ga.num_elements)
                             .astype(np.int8), "binary-design")
        rho_v = element_to_vertex(ElementField(
            gb, rng.integers(0, 2, gb.num_elements).astype(np.int8),
            "binary-design"))
        base = W.measure_counts(rho_e.values, rho_v.values)
        grad = W.gradient_counts(rho_v.values)
        for e in rng.choice(ga.num_elements, size=8, replace=False):
            flipped = rho_e.copy()
            flipped.values[e] ^= 1
            delta = W.measure_counts(flipped.values, rho_v.values) - base
            expect = (1 - 2 * rho_e.values[e]) * grad[e]
            worst = max(worst, abs(int(delta - expect)))
    print(f"collision gradient: max abs flip discrepancy = {worst}")
    return worst == 0


def _check_tsf_ranking(threshold: float = 0.8) -> bool:
    from .testing import tsf_removal_spearman
    rho = tsf_removal_spearman()
    print(f"sensitivity ranking vs element removal: spearman rho = {rho:.3f} "
          f"(threshold {threshold})")
    return rho >= threshold


def cmd_export_fields(args) -> int:
    cfg = _apply_overrides(_load_config(args), args)
    assembly = build_assembly(cfg)
    assembly.assemble_cwms()
    out = cfg.data["outputs"]["run_dir"]
    os.makedirs(out, exist_ok=True)
    designs = {i: p.design for i, p in enumerate(assembly.parts)}
    rho_v = {i: p.vertex_design() for i, p in enumerate(assembly.parts)}
    report = aggregate_collision(designs, assembly.cwms, rho_v)
    from .collision import collision_gradient
    for i, part in enumerate(assembly.parts):
        base = os.path.join(out, f"part{i}_{part.name}")
        write_field_text(base + "_density.txt", part.design)
        write_field_pgm(base + "_density.pgm", part.design)
        grad = collision_gradient(assembly.cwms, i, rho_v, part.grid)
        write_field_text(base + "_collision.txt", report.local_fields[i])
        write_field_pgm(base + "_collision.pgm", report.local_fields[i])
        tg = collision_sensitivity(grad)
        write_field_text(base + "_tg.txt", tg)
        write_field_pgm(base + "_tg.pgm", tg)
        print(f"{part.name}: G={report.aggregate[i]:.6e} -> {base}_*.txt/pgm")
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="comopt",
        description="Co-optimize moving parts for stiffness and collision "
                    "avoidance")
    sub = ap.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run the co-design optimization")
    _add_common(p_run)
    p_run.add_argument("--mode", choices=["collision-free", "volume-target"])
    p_run.add_argument("--lambda-g", dest="lambda_g", type=float, nargs="+")
    p_run.add_argument("--gamma", type=float, nargs="+")
    p_run.add_argument("--no-compliance", action="store_true",
                       help="drive removal by collision sensitivity alone")
    p_run.set_defaults(fn=cmd_run)

    p_or = sub.add_parser("check-oracle",
                          help="verify matrix measures against the oracle")
    _add_common(p_or)
    p_or.add_argument("--samples", type=int, default=4,
                      help="supersampling resolution per cell")
    p_or.add_argument("--tolerance", type=float, default=0.05)
    p_or.set_defaults(fn=cmd_check_oracle)

    p_gr = sub.add_parser("check-gradients",
                          help="exact linearity and ranking checks")
    _add_common(p_gr)
    p_gr.set_defaults(fn=cmd_check_gradients)

    p_ex = sub.add_parser("export-fields",
                          help="render density/sensitivity/collision fields")
    _add_common(p_ex)
    p_ex.set_defaults(fn=cmd_export_fields)

    args = ap.parse_args(argv)
    threads = os.environ.get("CODESIGN_THREADS")
    if threads:
        _kernels.set_num_threads(int(threads))
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
