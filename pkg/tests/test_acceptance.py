"""Acceptance suite: every release gate with its stated tolerance.

Each test prints one PASS/FAIL line (visible with `pytest -s` or in the
captured output of failing tests) and asserts the gate.
"""

import math
import time

import numpy as np
import pytest

from comopt.collision import (assemble_cwm, collision_measure,
                              oracle_collision)
from comopt.config import build_assembly
from comopt.fea import assemble_and_solve
from comopt.grid import ElementField, UniformGrid, element_to_vertex
from comopt.motion import (KeyframeTrajectory, RelativeTrajectory,
                           RigidTransform, RotationTrajectory,
                           StaticTrajectory)
from comopt.optimizer import co_design
from comopt.scenarios import builtin_scenario
from comopt.sensitivity import compliance_tsf, tsf_value
from comopt.testing import tsf_removal_spearman

from conftest import binary_field
from test_fea import solid, uniaxial_x_patch


def report(num, ok, detail):
    print(f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def translating_squares_pair(n=64):
    ga = UniformGrid((0.0, 0.0), 1.0 / n, (n, n))
    gb = UniformGrid((2.0, 0.0), 1.0 / n, (n, n))
    frames = [(0.0, RigidTransform.identity(2)),
              (1.0, RigidTransform.translation_of((-2.0, 0.0)))]
    rel = RelativeTrajectory(0, 1, StaticTrajectory(2),
                             KeyframeTrajectory(frames))
    return ga, gb, rel


class TestCriterion1OracleEquivalence:
    def test_translating_squares_quarter_both_routes(self):
        t0 = time.perf_counter()
        ga, gb, rel = translating_squares_pair(64)
        a = binary_field(ga, np.ones(ga.num_elements))
        b = binary_field(gb, np.ones(gb.num_elements))
        W = assemble_cwm(ga, gb, rel, 1000)
        matrix = collision_measure(a, W, element_to_vertex(b))
        oracle = oracle_collision(a, b, rel, 1000, 4)
        dt = time.perf_counter() - t0
        ok = (0.2375 <= matrix <= 0.2625 and 0.2375 <= oracle <= 0.2625
              and dt < 10.0)
        report(1, ok, f"matrix={matrix:.5f} oracle={oracle:.5f} "
                      f"(band [0.2375, 0.2625]), runtime {dt:.2f}s < 10s")


class TestCriterion2ExactGradientLinearity:
    def test_every_flip_exact_over_20_seeds(self):
        worst = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(8, 33))
            ga = UniformGrid((0.0, 0.0), 1.0 / n, (n, n))
            gb = UniformGrid((rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)),
                             1.0 / n, (n, n))
            rel = RelativeTrajectory(
                0, 1, StaticTrajectory(2),
                RotationTrajectory(rng.uniform(0.2, 0.8, size=2), 0.0,
                                   rng.uniform(0.5, 6.0)))
            W = assemble_cwm(ga, gb, rel, int(rng.integers(10, 200)))
            rho_e = rng.integers(0, 2, ga.num_elements).astype(np.int64)
            rho_v = element_to_vertex(binary_field(
                gb, rng.integers(0, 2, gb.num_elements))).values
            g = W.gradient_counts(rho_v)
            base = int(rho_e @ g)
            # exhaustive: flip every element, recompute the measure as an
            # independent integer dot product
            for e in range(ga.num_elements):
                flipped = rho_e.copy()
                flipped[e] ^= 1
                delta = int(flipped @ g) - base
                worst = max(worst, abs(delta - (1 - 2 * rho_e[e]) * g[e]))
        report(2, worst == 0,
               f"max abs flip discrepancy = {worst} (zero tolerance, "
               "20 seeds, exhaustive elements)")


class TestCriterion3KinematicInversionSymmetry:
    def test_orderings_agree_within_5pct(self):
        ga, gb, rel = translating_squares_pair(64)
        a = binary_field(ga, np.ones(ga.num_elements))
        b = binary_field(gb, np.ones(gb.num_elements))
        g_ab = collision_measure(a, assemble_cwm(ga, gb, rel, 1000),
                                 element_to_vertex(b))
        g_ba = collision_measure(b, assemble_cwm(gb, ga, rel.inverse(), 1000),
                                 element_to_vertex(a))
        rel_err = abs(g_ab - g_ba) / max(g_ab, g_ba)
        report(3, rel_err <= 0.05,
               f"g_ab={g_ab:.5f} g_ba={g_ba:.5f} rel diff {rel_err:.4f} <= 5%")


class TestCriterion4PlaneStressTSFValue:
    def test_closed_form_and_fe_patch(self):
        t = tsf_value(np.array([1.0, 0.0, 0.0]), np.array([1.0, -0.3, 0.0]),
                      0.3)
        closed_err = abs(t - 3.0)
        grid, mat, bc = uniaxial_x_patch(E=1.0, nu=0.3)
        sol = assemble_and_solve(grid, solid(grid), mat, bc)
        fe_err = np.abs(compliance_tsf(sol, mat, solid(grid)).values
                        - 3.0).max()
        ok = closed_err < 1e-10 and fe_err < 1e-6
        report(4, ok, f"closed-form err {closed_err:.2e} < 1e-10, "
                      f"FE patch err {fe_err:.2e} < 1e-6")


class TestCriterion5PatchTest:
    def test_affine_boundary_displacement(self):
        n = 4
        grid = UniformGrid((0.0, 0.0), 0.25, (n, n))
        from comopt.fea import BoundaryConditions, Material
        bc = BoundaryConditions()
        verts = grid.vertex_coords()
        a, b, c, d, tx, ty = 0.2, -0.3, 0.15, 0.4, 0.05, -0.1
        for jx in range(n + 1):
            for jy in range(n + 1):
                if jx in (0, n) or jy in (0, n):
                    v = grid.vertex_index((jx, jy))
                    x, y = verts[v]
                    bc.fix(v, (0,), a * x + b * y + tx)
                    bc.fix(v, (1,), c * x + d * y + ty)
        sol = assemble_and_solve(grid, solid(grid), Material(E=1.0, nu=0.3),
                                 bc)
        expect = np.stack([a * verts[:, 0] + b * verts[:, 1] + tx,
                           c * verts[:, 0] + d * verts[:, 1] + ty], axis=1)
        err = np.abs(sol.displacement - expect).max()
        report(5, err < 1e-8, f"interior affine reproduction err "
                              f"{err:.2e} < 1e-8 on 4x4 patch")


class TestCriterion6TSFRankingVsBruteForce:
    def test_spearman_on_cantilever(self):
        rho = tsf_removal_spearman(10)
        report(6, rho >= 0.8,
               f"spearman(TSF, exact removal delta) = {rho:.3f} >= 0.8 "
               "(10x10 cantilever, interior elements)")


class TestCriterion7CamFollowerReproduction:
    def test_scale_half_collision_free(self):
        t0 = time.perf_counter()
        cfg = builtin_scenario("cam-follower", 0.5)
        cfg.data["optimizer"]["lambda_g"] = [0.2, 0.2]
        cfg.data["optimizer"]["gamma"] = [1.0, 0.5]
        cfg.data["optimizer"]["mode"] = "collision-free"
        asm = build_assembly(cfg)
        asm.assemble_cwms()
        trace = co_design(asm)
        dt = time.perf_counter() - t0
        last = {r.part: r for r in trace.rows}
        vols = (last[0].volume, last[1].volume)
        ratios = (last[0].ratio, last[1].ratio)
        gs = (last[0].collision, last[1].collision)
        ok = (trace.converged and gs == (0.0, 0.0)
              and all(v >= 0.85 for v in vols)
              and all(r <= 1.2 for r in ratios) and dt < 600.0)
        report(7, ok,
               f"v={vols[0]:.3f},{vols[1]:.3f} (>=0.85) "
               f"ratios={ratios[0]:.3f},{ratios[1]:.3f} (<=1.2) "
               f"G={gs[0]:.1e},{gs[1]:.1e} (exact 0) runtime {dt:.1f}s")


class TestCriterion8ExtremeGammaUnsweep:
    def test_pure_collision_cam_removal(self):
        cfg = builtin_scenario("cam-follower", 0.5)
        cfg.data["optimizer"]["gamma"] = [0.0, 1.0]
        cfg.data["optimizer"]["use_compliance"] = False
        cfg.data["optimizer"]["mode"] = "collision-free"
        asm = build_assembly(cfg)
        asm.assemble_cwms()
        trace = co_design(asm)
        last = {r.part: r for r in trace.rows}
        v_follower, v_cam = last[0].volume, last[1].volume
        gs = (last[0].collision, last[1].collision)
        ok = (trace.converged and gs == (0.0, 0.0)
              and v_follower == 1.0 and v_cam <= 0.3)
        report(8, ok,
               f"follower v={v_follower:.4f} (=1.0), cam v={v_cam:.4f} "
               f"(<=0.3) at collision-free termination G={gs}")


class TestCriterion9GripperCamsStructure:
    def test_cam_cam_weights_identically_zero(self):
        from comopt.collision import aggregate_collision
        cfg = builtin_scenario("gripper-cams", 0.5)
        asm = build_assembly(cfg)
        asm.assemble_cwms()
        nnz_23 = asm.cwms[(1, 2)].counts.nnz
        nnz_32 = asm.cwms[(2, 1)].counts.nnz
        designs = {i: p.design for i, p in enumerate(asm.parts)}
        rep = aggregate_collision(designs, asm.cwms)
        ok = (nnz_23 == 0 and nnz_32 == 0
              and rep.aggregate[1] == rep.pairwise[(1, 0)]
              and rep.aggregate[2] == rep.pairwise[(2, 0)])
        report(9, ok,
               f"cam-cam nnz=({nnz_23},{nnz_32}) (==0), "
               f"G2==g21 and G3==g31 exactly "
               f"(G2={rep.aggregate[1]:.4f}, G3={rep.aggregate[2]:.4f})")


class TestCriterion10PerformanceProportionality:
    def test_collision_eval_cheap_and_cwm_once(self):
        cfg = builtin_scenario("three-squares", 1.0)
        cfg.data["optimizer"]["max_outer"] = 3
        asm = build_assembly(cfg)
        asm.assemble_cwms()
        n_pairs = len(asm.cwms)
        builds = asm.counters.cwm_assemblies
        co_design(asm)
        c = asm.counters
        ratios = {it: c.collision_time[it] / c.fea_time[it]
                  for it in c.fea_time if it > 0}
        worst = max(ratios.values())
        ok = (worst <= 0.10 and builds == n_pairs
              and c.cwm_assemblies == n_pairs)
        report(10, ok,
               f"per-iteration collision/FEA time ratios "
               f"{[f'{r:.4f}' for r in ratios.values()]} (<=0.10), "
               f"CWM builds {c.cwm_assemblies} == {n_pairs} ordered pairs, "
               "assembled once per run")
