import numpy as np
import pytest

from comopt.fea import (BoundaryConditions, Material, assemble_and_solve,
                        assemble_stiffness, element_stiffness, nodes_in_disk,
                        recover_centroid_state, resolve_node)
from comopt.grid import ElementField, UniformGrid

from conftest import binary_field


def solid(grid):
    return binary_field(grid, np.ones(grid.num_elements))


def uniaxial_x_patch(n=4, E=1.0, nu=0.3, spacing=0.25):
    """n x n solid patch under unit sigma_xx via consistent edge loads."""
    grid = UniformGrid((0.0, 0.0), spacing, (n, n))
    mat = Material(E=E, nu=nu)
    bc = BoundaryConditions()
    for jy in range(n + 1):
        bc.fix(grid.vertex_index((0, jy)), (0,))
    bc.fix(grid.vertex_index((0, 0)), (1,))
    height = n * spacing
    for jy in range(n + 1):
        w = spacing if 0 < jy < n else spacing / 2
        bc.load(grid.vertex_index((n, jy)), (w * 1.0, 0.0))
    del height
    return grid, mat, bc


class TestMaterial:
    def test_constitutive_plane_stress(self):
        D = Material(E=1.0, nu=0.3).constitutive()
        f = 1.0 / (1 - 0.09)
        assert D[0, 0] == pytest.approx(f)
        assert D[0, 1] == pytest.approx(0.3 * f)
        assert D[2, 2] == pytest.approx(0.35 * f)

    @pytest.mark.parametrize("kwargs", [
        {"E": -1.0}, {"nu": 0.5}, {"nu": -0.1}, {"ersatz": 0.0},
        {"ersatz": 2.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            Material(**kwargs)


class TestElementStiffness:
    def test_symmetric_and_size_independent(self):
        mat = Material(E=2.0, nu=0.25)
        k1 = element_stiffness(mat, 1.0)
        k2 = element_stiffness(mat, 0.01)
        np.testing.assert_allclose(k1, k1.T)
        np.testing.assert_allclose(k1, k2, rtol=1e-12)

    def test_rigid_body_nullspace(self):
        k = element_stiffness(Material(E=1.0, nu=0.3), 1.0)
        ones_x = np.zeros(8)
        ones_x[0::2] = 1.0
        assert np.abs(k @ ones_x).max() < 1e-12
        # infinitesimal rotation about the element center:
        # u = (-(y - yc), x - xc) at the CCW corners
        rot = np.array([0.5, -0.5, 0.5, 0.5, -0.5, 0.5, -0.5, -0.5])
        assert np.abs(k @ rot).max() < 1e-12


class TestSolve:
    def test_single_element_tension(self):
        # bottom edge fixed, unit total upward tension on the top edge:
        # uniform uniaxial stress with sigma_yy = force / width
        grid = UniformGrid((0.0, 0.0), 1.0, (1, 1))
        mat = Material(E=1.0, nu=0.3)
        bc = BoundaryConditions()
        bc.fix(grid.vertex_index((0, 0)), (0, 1))
        bc.fix(grid.vertex_index((1, 0)), (0, 1))
        bc.load(grid.vertex_index((0, 1)), (0.0, 0.5))
        bc.load(grid.vertex_index((1, 1)), (0.0, 0.5))
        sol = assemble_and_solve(grid, solid(grid), mat, bc)
        assert sol.element_stress[0, 1] == pytest.approx(1.0, abs=1e-8)
        assert abs(sol.element_stress[0, 2]) < 1e-8

    def test_doubling_E_halves_compliance(self):
        grid, mat, bc = uniaxial_x_patch()
        c1 = assemble_and_solve(grid, solid(grid), mat, bc).compliance
        c2 = assemble_and_solve(grid, solid(grid),
                                Material(E=2.0, nu=0.3), bc).compliance
        assert c2 == pytest.approx(c1 / 2, rel=1e-12)

    def test_all_void_scales_by_inverse_ersatz(self):
        # uniform K scaling: every element carries the ersatz factor
        grid, mat, bc = uniaxial_x_patch()
        c_solid = assemble_and_solve(grid, solid(grid), mat, bc).compliance
        void = binary_field(grid, np.zeros(grid.num_elements))
        c_void = assemble_and_solve(grid, void, mat, bc).compliance
        assert c_void == pytest.approx(1e6 * c_solid, rel=1e-6)

    def test_insufficient_constraints_rejected(self):
        grid = UniformGrid((0.0, 0.0), 1.0, (2, 2))
        bc = BoundaryConditions()
        bc.fix(0, (0,))
        bc.load(8, (1.0, 0.0))
        with pytest.raises(ValueError, match="rigid-body"):
            assemble_and_solve(grid, solid(grid), Material(E=1.0), bc)

    def test_symmetry_energy_identity(self):
        grid, mat, bc = uniaxial_x_patch(n=6)
        rho = solid(grid)
        sol = assemble_and_solve(grid, rho, mat, bc)
        K = assemble_stiffness(grid, rho, mat)
        u = sol.displacement.reshape(-1)
        assert sol.compliance == pytest.approx(float(u @ (K @ u)), rel=1e-8)
        assert (abs(K - K.T) > 1e-12 * abs(K).max()).nnz == 0

    def test_removal_never_decreases_compliance(self):
        grid, mat, bc = uniaxial_x_patch(n=3)
        base = assemble_and_solve(grid, solid(grid), mat, bc).compliance
        for e in range(grid.num_elements):
            trial = solid(grid)
            trial.values[e] = 0
            c = assemble_and_solve(grid, trial, mat, bc).compliance
            assert c >= base - 1e-12 * base

    def test_outputs_finite_positive(self):
        grid, mat, bc = uniaxial_x_patch(n=5)
        sol = assemble_and_solve(grid, solid(grid), mat, bc)
        assert np.isfinite(sol.max_deformation())
        assert sol.max_deformation() > 0
        vm = sol.von_mises()
        assert np.isfinite(vm).all() and vm.max() > 0
        assert sol.compliance > 0
        assert sol.residual <= 1e-8


class TestPatchTest:
    def affine_patch(self, a, b, c, d, tx, ty):
        """Impose u = (a x + b y + tx, c x + d y + ty) on the boundary."""
        n = 4
        grid = UniformGrid((0.0, 0.0), 0.25, (n, n))
        mat = Material(E=1.0, nu=0.3)
        bc = BoundaryConditions()
        verts = grid.vertex_coords()
        for jx in range(n + 1):
            for jy in range(n + 1):
                if jx in (0, n) or jy in (0, n):
                    v = grid.vertex_index((jx, jy))
                    x, y = verts[v]
                    bc.fix(v, (0,), a * x + b * y + tx)
                    bc.fix(v, (1,), c * x + d * y + ty)
        sol = assemble_and_solve(grid, solid(grid), mat, bc)
        expect = np.stack([a * verts[:, 0] + b * verts[:, 1] + tx,
                           c * verts[:, 0] + d * verts[:, 1] + ty], axis=1)
        return sol, expect

    def test_affine_field_reproduced(self):
        sol, expect = self.affine_patch(0.3, -0.1, 0.2, 0.5, 0.01, -0.02)
        assert np.abs(sol.displacement - expect).max() < 1e-8

    def test_rigid_translation_zero_strain(self):
        sol, _ = self.affine_patch(0.0, 0.0, 0.0, 0.0, 0.37, -0.21)
        assert np.abs(sol.element_strain).max() < 1e-10
        assert np.abs(sol.element_stress).max() < 1e-10


class TestCentroidRecovery:
    def test_uniaxial_strain_components(self):
        grid, mat, bc = uniaxial_x_patch()
        sol = assemble_and_solve(grid, solid(grid), mat, bc)
        stress, strain = recover_centroid_state(sol)
        assert np.abs(stress[:, 0] - 1.0).max() < 1e-8
        assert np.abs(strain[:, 0] - 1.0).max() < 1e-8      # eps_xx = 1/E
        assert np.abs(strain[:, 1] + 0.3).max() < 1e-8      # eps_yy = -nu/E

    def test_zero_displacement_zero_tensors(self):
        grid = UniformGrid((0.0, 0.0), 1.0, (2, 2))
        mat = Material(E=1.0)
        bc = BoundaryConditions()
        bc.fix(0, (0, 1)).fix(2, (0, 1)).fix(6, (0, 1))
        sol = assemble_and_solve(grid, solid(grid), mat, bc)
        assert np.abs(sol.element_stress).max() == 0.0
        assert np.abs(sol.element_strain).max() == 0.0


class TestSelectors:
    def test_corners(self):
        grid = UniformGrid((0.0, 0.0), 1.0, (3, 2))
        assert resolve_node(grid, "corner:bottom-left") == 0
        assert resolve_node(grid, "corner:bottom-right") == 3
        assert resolve_node(grid, "corner:top-left") == 8
        assert resolve_node(grid, "corner:top-right") == 11

    def test_point_snaps(self):
        grid = UniformGrid((0.0, 0.0), 1.0, (3, 2))
        assert resolve_node(grid, (1.2, 0.9)) == \
            grid.vertex_index((1, 1))

    def test_unknown_selector(self):
        grid = UniformGrid((0.0, 0.0), 1.0, (2, 2))
        with pytest.raises(ValueError):
            resolve_node(grid, "corner:middle")

    def test_nodes_in_disk(self):
        grid = UniformGrid((0.0, 0.0), 1.0, (4, 4))
        nodes = nodes_in_disk(grid, (2.0, 2.0), 1.01)
        assert grid.vertex_index((2, 2)) in nodes
        assert len(nodes) == 5
