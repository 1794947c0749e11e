"""Pareto-tracing co-design: outer volume decrements, inner fixed point.

Each outer iteration lowers every active part's volume target by
gamma_i * delta_v_max and runs that part's inner loop: evaluate the
collision sensitivity, solve elasticity, combine fields, re-threshold,
and repeat until the compliance change stabilizes. Parts update
sequentially so each sees the freshest neighbor designs. Termination is
either "collision-free" (all aggregate measures exactly zero) or "to
volume targets".

Thresholding selects an exact element count from the solid set the part
entered the outer iteration with, so volumes are monotone across outer
iterations while the inner fixed point may reshuffle which elements of
that set survive.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .collision import aggregate_collision, assemble_cwm
from .fea import BoundaryConditions, Material, assemble_and_solve
from .grid import (ElementField, UniformGrid, VertexField, element_to_vertex,
                   volume_fraction, write_field_pgm, write_field_text)
from .motion import RelativeTrajectory, Trajectory
from .sensitivity import augment, compliance_tsf, normalize


@dataclass
class Part:
    """One rigid part: grid, design state, material, BCs, motion."""

    name: str
    grid: UniformGrid
    design: ElementField            # binary, current solid set
    design_mask: np.ndarray         # bool, elements the optimizer may edit
    material: Material
    bc: BoundaryConditions
    trajectory: Trajectory
    frozen: np.ndarray = None       # bool, never removed (BC regions etc.)

    def __post_init__(self):
        self.design_mask = np.asarray(self.design_mask, dtype=bool)
        permanent = self.design.values.astype(bool) & ~self.design_mask
        if self.frozen is None:
            self.frozen = frozen_from_bcs(self.grid, self.bc,
                                          self.design.values)
            # without the elastic objective, load application points
            # carry no meaning and their elements are fair game
            self.frozen_without_loads = permanent | frozen_from_bcs(
                self.grid, self.bc, self.design.values, include_loads=False)
        else:
            self.frozen_without_loads = \
                np.asarray(self.frozen, dtype=bool) | permanent
        self.frozen = np.asarray(self.frozen, dtype=bool) | permanent

    def volume_fraction(self) -> float:
        return volume_fraction(self.design,
                               ElementField(self.grid,
                                            self.design_mask.astype(np.int8),
                                            "binary-design"))

    def vertex_design(self) -> VertexField:
        return element_to_vertex(self.design)


def incident_elements(grid: UniformGrid, vertex: int) -> list[int]:
    """Elements sharing the given vertex (up to 2^d)."""
    nx, ny = grid.dims
    jy, jx = divmod(int(vertex), nx + 1)
    out = []
    for ey in (jy - 1, jy):
        for ex in (jx - 1, jx):
            if 0 <= ex < nx and 0 <= ey < ny:
                out.append(ey * nx + ex)
    return out


def frozen_from_bcs(grid: UniformGrid, bc: BoundaryConditions,
                    solid: np.ndarray, include_loads: bool = True
                    ) -> np.ndarray:
    """Elements touching a fixed-DOF node or containing a load point are
    frozen solid (only where material exists to freeze)."""
    frozen = np.zeros(grid.num_elements, dtype=bool)
    nodes = {n for n, _, _ in bc.fixed}
    if include_loads:
        nodes |= {n for n, _ in bc.loads}
    for n in nodes:
        for e in incident_elements(grid, n):
            frozen[e] = True
    return frozen & solid.astype(bool)


@dataclass
class OptimizerSettings:
    """Per-part schedules and loop tolerances."""

    v_target: list                      # final volume fraction per part
    gamma: list                         # decrement aggressiveness per part
    lambda_g: list                      # collision penalty weight per part
    delta_v_max: float = 0.025
    eps_f: float = 1e-3                 # inner relative compliance tolerance
    max_inner: int = 12
    max_outer: int = 400
    mode: str = "collision-free"        # or "volume-target"
    use_compliance: bool = True
    ratio_cap: float = 10.0             # suspend decrements past this f/f0
    collision_steps: int = 500

    def __post_init__(self):
        if not 0.0 < self.delta_v_max <= 0.1:
            raise ValueError(
                f"delta_v_max must be in (0, 0.1], got {self.delta_v_max}")
        if self.eps_f <= 0:
            raise ValueError(f"eps_f must be positive, got {self.eps_f}")
        for g in self.gamma:
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"gamma must be in [0, 1], got {g}")
        for lg in self.lambda_g:
            if lg < 0:
                raise ValueError(f"lambda_g must be >= 0, got {lg}")
        for v in self.v_target:
            if not 0.0 < v <= 1.0:
                raise ValueError(f"v_target must be in (0, 1], got {v}")
        if self.mode not in ("collision-free", "volume-target"):
            raise ValueError(f"unknown termination mode {self.mode!r}")


@dataclass
class Counters:
    """Instrumentation for the performance acceptance checks."""

    cwm_assemblies: int = 0
    fea_solves: int = 0
    fea_time: dict = field(default_factory=dict)        # outer iter -> seconds
    collision_time: dict = field(default_factory=dict)  # outer iter -> seconds

    def add_fea(self, it: int, dt: float) -> None:
        self.fea_time[it] = self.fea_time.get(it, 0.0) + dt
        self.fea_solves += 1

    def add_collision(self, it: int, dt: float) -> None:
        self.collision_time[it] = self.collision_time.get(it, 0.0) + dt


@dataclass
class Assembly:
    """Ordered parts plus optimizer settings and shared collision state."""

    parts: list
    settings: OptimizerSettings
    cwms: dict = field(default_factory=dict)
    counters: Counters = field(default_factory=Counters)

    def __post_init__(self):
        n = len(self.parts)
        for name in ("v_target", "gamma", "lambda_g"):
            arr = getattr(self.settings, name)
            if len(arr) != n:
                raise ValueError(
                    f"settings.{name} has {len(arr)} entries for {n} parts")

    def assemble_cwms(self) -> None:
        """Build all ordered-pair collision weight matrices once."""
        K = self.settings.collision_steps
        for i, pi in enumerate(self.parts):
            for j, pj in enumerate(self.parts):
                if i == j:
                    continue
                rel = RelativeTrajectory(i, j, pi.trajectory, pj.trajectory)
                self.cwms[(i, j)] = assemble_cwm(pi.grid, pj.grid, rel, K)
                self.counters.cwm_assemblies += 1


def find_threshold(sens: ElementField, pool: np.ndarray, frozen: np.ndarray,
                   design_mask: np.ndarray, target_fraction: float) -> float:
    """Level-set threshold keeping the target fraction of the design mask.

    Candidates are the solid, non-frozen pool elements; the order
    statistic of their sensitivities gives tau. Ties at tau break by
    removing the lower element index first.
    """
    kept, tau = _select(np.asarray(sens.values, dtype=np.float64),
                        np.asarray(pool, dtype=bool),
                        np.asarray(frozen, dtype=bool),
                        np.asarray(design_mask, dtype=bool), target_fraction)
    return tau


def _select(sens: np.ndarray, pool: np.ndarray, frozen: np.ndarray,
            mask: np.ndarray, target_fraction: float):
    """Exact-count selection: (kept bool array incl. frozen, tau)."""
    n_mask = int(mask.sum())
    frozen_in_mask = int((frozen & mask).sum())
    target_count = int(np.floor(target_fraction * n_mask + 1e-9))
    if target_count < frozen_in_mask:
        raise ValueError(
            f"target fraction {target_fraction:.4f} conflicts with frozen "
            f"material ({frozen_in_mask}/{n_mask} elements frozen)")
    candidates = np.flatnonzero(pool & mask & ~frozen)
    k = min(target_count - frozen_in_mask, candidates.size)
    order = np.lexsort((candidates, sens[candidates]))  # ascending, index ties
    kept_idx = candidates[order[candidates.size - k:]] if k > 0 else \
        np.empty(0, dtype=np.int64)
    removed = candidates[order[:candidates.size - k]]
    tau = float(sens[removed].max()) if removed.size else -np.inf
    kept = frozen.copy()
    kept[kept_idx] = True
    return kept, tau


@dataclass
class TraceRow:
    iteration: int
    part: int
    volume: float
    compliance: float
    ratio: float
    collision: float
    tau: float
    inner_iters: int


@dataclass
class OptimizationTrace:
    rows: list = field(default_factory=list)
    converged: bool = False
    status: str = ""
    final_designs: list = field(default_factory=list)
    counters: Counters = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "part", "v", "compliance", "ratio", "G",
                        "tau", "inner_iters"])
            for r in self.rows:
                w.writerow([r.iteration, r.part, f"{r.volume:.6f}",
                            f"{r.compliance:.10e}", f"{r.ratio:.6f}",
                            f"{r.collision:.10e}", f"{r.tau:.6e}",
                            r.inner_iters])

    def part_series(self, part: int, attr: str) -> list:
        return [getattr(r, attr) for r in self.rows if r.part == part]


class _PartState:
    """Mutable per-part bookkeeping across outer iterations."""

    def __init__(self, part: Part, v_target: float, frozen: np.ndarray):
        self.part = part
        self.frozen = frozen
        self.mask = part.design_mask
        self.n_mask = int(self.mask.sum())
        self.frozen_count = int((frozen & self.mask).sum())
        self.floor_frac = self.frozen_count / self.n_mask
        self.sched_frac = part.volume_fraction()
        self.v_target = v_target
        self.suspended = False
        self.baseline = np.nan
        self.compliance = np.nan
        self.last_tau = -np.inf
        self.last_inner = 0

    def current_count(self) -> int:
        return int(np.count_nonzero(self.part.design.values[self.mask]))

    def ratio(self) -> float:
        if np.isnan(self.baseline) or self.baseline <= 0:
            return np.nan
        return self.compliance / self.baseline


def co_design(assembly: Assembly, run_dir: str | None = None,
              export_fields: bool = False) -> OptimizationTrace:
    """Run the collision-aware Pareto trace over all parts."""
    st = assembly.settings
    parts = assembly.parts
    if len(parts) > 1 and not assembly.cwms:
        raise ValueError("collision weight matrices must be assembled "
                         "before optimization")
    counters = assembly.counters
    states = [_PartState(p, st.v_target[i],
                         p.frozen if st.use_compliance
                         else p.frozen_without_loads)
              for i, p in enumerate(parts)]
    trace = OptimizationTrace(counters=counters)
    if run_dir:
        os.makedirs(run_dir, exist_ok=True)

    if st.use_compliance:
        for i, s in enumerate(states):
            t0 = time.perf_counter()
            sol = assemble_and_solve(s.part.grid, s.part.design,
                                     s.part.material, s.part.bc)
            counters.add_fea(0, time.perf_counter() - t0)
            s.baseline = s.compliance = sol.compliance

    rho_v = {i: p.vertex_design() for i, p in enumerate(parts)}

    def evaluate(it: int):
        t0 = time.perf_counter()
        designs = {i: p.design for i, p in enumerate(parts)}
        report = aggregate_collision(designs, assembly.cwms, rho_v)
        counters.add_collision(it, time.perf_counter() - t0)
        return report

    def log(it: int, report) -> None:
        for i, s in enumerate(states):
            trace.rows.append(TraceRow(
                it, i, s.part.volume_fraction(), s.compliance, s.ratio(),
                report.aggregate[i], s.last_tau, s.last_inner))
        if run_dir and export_fields:
            for i, s in enumerate(states):
                base = os.path.join(run_dir, f"iter{it:04d}_part{i}")
                write_field_text(base + "_density.txt", s.part.design)
                write_field_pgm(base + "_density.pgm", s.part.design)

    report = evaluate(0)
    log(0, report)

    def terminal(report) -> bool:
        if st.mode == "collision-free":
            return report.max_aggregate() == 0.0
        return all(s.part.volume_fraction() <= s.v_target + 1e-12
                   for s in states)

    def floor_of(i: int) -> float:
        return states[i].floor_frac if st.mode == "collision-free" \
            else max(states[i].v_target, states[i].floor_frac)

    it = 0
    while not terminal(report):
        it += 1
        if it > st.max_outer:
            trace.status = (f"iteration cap {st.max_outer} exceeded with "
                            f"max G = {report.max_aggregate():.3e}")
            break
        active = [i for i, s in enumerate(states)
                  if not s.suspended and st.gamma[i] > 0.0
                  and s.sched_frac > floor_of(i) + 1e-12]
        if not active:
            trace.status = ("no part can decrement further; "
                            f"max G = {report.max_aggregate():.3e}")
            break
        for i in active:
            s = states[i]
            s.sched_frac = max(floor_of(i),
                               s.sched_frac - st.gamma[i] * st.delta_v_max)
            target_count = int(np.floor(s.sched_frac * s.n_mask + 1e-9))
            if target_count < s.current_count():
                _inner_loop(assembly, states, i, rho_v, s.sched_frac, it)
        report = evaluate(it)
        log(it, report)
    else:
        trace.converged = True
        trace.status = "terminated: " + (
            "all collision measures zero" if st.mode == "collision-free"
            else "volume targets reached")

    trace.final_designs = [p.design for p in parts]
    if run_dir:
        trace.to_csv(os.path.join(run_dir, "trace.csv"))
        for i, p in enumerate(parts):
            base = os.path.join(run_dir, f"final_part{i}")
            write_field_text(base + "_density.txt", p.design)
            write_field_pgm(base + "_density.pgm", p.design)
    return trace


def _inner_loop(assembly: Assembly, states: list, i: int, rho_v: dict,
                target_frac: float, it: int) -> bool:
    """Fixed-point iteration for one part at one volume target.

    Returns True if the design changed. On a singular solve the outer
    step is aborted for this part and its decrements are suspended.
    """
    st = assembly.settings
    s = states[i]
    part = s.part
    counters = assembly.counters

    entry_design = part.design.values.copy()
    pool = entry_design.astype(bool) & s.mask & ~s.frozen

    t0 = time.perf_counter()
    grad_counts = np.zeros(part.grid.num_elements, dtype=np.int64)
    scale = 0.0
    for (a, b), W in assembly.cwms.items():
        if a == i and b != i:
            grad_counts += W.gradient_counts(rho_v[b].values)
            scale = W.scale
    # normalize over the removal candidates only: gradient rows of void
    # or frozen elements must not mask the worst removable collision
    grad_vals = grad_counts.astype(np.float64) * scale
    tg_vals = np.ones(part.grid.num_elements)
    cand_max = grad_vals[pool].max() if pool.any() else 0.0
    if cand_max > 0.0:
        tg_vals[pool] = 1.0 - grad_vals[pool] / cand_max
    t_g = ElementField(part.grid, tg_vals, "scalar")
    counters.add_collision(it, time.perf_counter() - t0)

    sol = None
    if st.use_compliance:
        t0 = time.perf_counter()
        sol = assemble_and_solve(part.grid, part.design, part.material, part.bc)
        counters.add_fea(it, time.perf_counter() - t0)
    f_prev = sol.compliance if sol is not None else np.nan

    max_inner = st.max_inner if st.use_compliance else 1
    inner = 0
    trial = part.design
    while inner < max_inner:
        inner += 1
        if st.use_compliance:
            tsf = compliance_tsf(sol, part.material, trial)
            tsf_n = normalize(tsf, trial.values.astype(bool))
            sens = augment(tsf_n, t_g, st.lambda_g[i])
        else:
            sens = t_g
        kept, tau = _select(np.asarray(sens.values, dtype=np.float64), pool,
                            s.frozen, s.mask, target_frac)
        s.last_tau = tau
        trial = ElementField(part.grid, kept.astype(np.int8), "binary-design")
        if not st.use_compliance:
            break
        t0 = time.perf_counter()
        try:
            sol = assemble_and_solve(part.grid, trial, part.material, part.bc)
        except RuntimeError:
            s.suspended = True
            s.last_inner = inner
            return False  # abort: keep the entry design
        finally:
            counters.add_fea(it, time.perf_counter() - t0)
        f_new = sol.compliance
        df = abs(f_new - f_prev)
        f_prev = f_new
        if df <= st.eps_f * max(abs(f_new), 1e-300):
            break

    part.design = trial
    rho_v[i] = part.vertex_design()
    s.last_inner = inner
    if st.use_compliance:
        s.compliance = f_prev
        if s.ratio() > st.ratio_cap:
            s.suspended = True
    return not np.array_equal(entry_design, trial.values)
