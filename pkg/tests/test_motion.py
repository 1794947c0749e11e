import math

import numpy as np
import pytest

from comopt.grid import UniformGrid
from comopt.motion import (FollowerTrajectory, KeyframeTrajectory,
                           RelativeTrajectory, RigidTransform,
                           RotationTrajectory, StaticTrajectory,
                           follower_height, sample_uniform)

TWO_PI = 2.0 * math.pi


class TestRigidTransform:
    def test_rotation_pi_maps_unit_x(self):
        tf = RigidTransform.rotation_2d(math.pi)
        assert np.allclose(tf.apply((1.0, 0.0)), (-1.0, 0.0), atol=1e-12)

    def test_pivot_is_fixed_point(self):
        tf = RigidTransform.rotation_2d(1.234, pivot=(0.0, 8.0))
        assert np.allclose(tf.apply((0.0, 8.0)), (0.0, 8.0), atol=1e-12)

    def test_compose_inverse(self, rng):
        a = RigidTransform.rotation_2d(rng.uniform(0, 6), pivot=rng.normal(size=2))
        b = RigidTransform.translation_of(rng.normal(size=2))
        c = a.compose(b)
        assert c.compose(c.inverse()).is_identity(1e-12)

    def test_rejects_improper_rotation(self):
        with pytest.raises(ValueError):
            RigidTransform(np.array([[1.0, 0.0], [0.0, -1.0]]), np.zeros(2))

    def test_3d_rotation_axis(self):
        tf = RigidTransform.rotation_3d(math.pi / 2, (0, 0, 1))
        assert np.allclose(tf.apply((1.0, 0.0, 0.0)), (0.0, 1.0, 0.0),
                           atol=1e-12)


class TestTrajectories:
    @pytest.mark.parametrize("traj", [
        RotationTrajectory((0.0, 8.0), 0.0, TWO_PI),
        RotationTrajectory((1.0, -2.0), math.pi / 2, math.pi / 5),
        FollowerTrajectory(16.0, 0.0, TWO_PI),
        StaticTrajectory(2),
    ])
    def test_identity_at_zero(self, traj):
        assert traj.at(0.0).is_identity(1e-12)

    def test_rotation_halfway(self):
        traj = RotationTrajectory((0.0, 8.0), 0.0, TWO_PI)
        tf = traj.at(0.5)
        expect = RigidTransform.rotation_2d(math.pi, pivot=(0.0, 8.0))
        assert np.allclose(tf.rotation, expect.rotation, atol=1e-12)
        assert np.allclose(tf.apply((0.0, 8.0)), (0.0, 8.0), atol=1e-12)

    def test_time_range_checked(self):
        traj = RotationTrajectory((0.0, 0.0), 0.0, 1.0)
        with pytest.raises(ValueError):
            traj.at(1.5)
        with pytest.raises(ValueError):
            traj.at(-0.01)

    def test_distances_preserved(self, rng):
        traj = RotationTrajectory(rng.normal(size=2), 0.3, 4.0)
        a, b = rng.normal(size=2), rng.normal(size=2)
        for t in rng.uniform(0, 1, size=8):
            tf = traj.at(t)
            d0 = np.linalg.norm(a - b)
            d1 = np.linalg.norm(tf.apply(a) - tf.apply(b))
            assert abs(d0 - d1) < 1e-12


class TestFollowerLaw:
    def test_heights(self):
        L = 16.0
        assert follower_height(L, 0.0) == pytest.approx(7 * L / 8)
        assert follower_height(L, math.pi / 4) == pytest.approx(3 * L / 4)
        assert follower_height(L, math.pi / 2) == pytest.approx(5 * L / 8)

    def test_trajectory_translation_tracks_law(self):
        L, end = 16.0, TWO_PI
        traj = FollowerTrajectory(L, 0.0, end)
        for t in (0.0, 0.1, 0.37, 0.5, 1.0):
            tf = traj.at(t)
            dy = follower_height(L, t * end) - follower_height(L, 0.0)
            assert np.allclose(tf.translation, (0.0, dy), atol=1e-12)
            assert np.allclose(tf.rotation, np.eye(2))

    def test_bad_length(self):
        with pytest.raises(ValueError):
            FollowerTrajectory(-1.0, 0.0, 1.0)


class TestKeyframes:
    def test_linear_translation(self):
        frames = [(0.0, RigidTransform.identity(2)),
                  (1.0, RigidTransform.translation_of((-2.0, 0.0)))]
        traj = KeyframeTrajectory(frames)
        assert np.allclose(traj.at(0.25).translation, (-0.5, 0.0))

    def test_angle_interpolation(self):
        frames = [(0.0, RigidTransform.identity(2)),
                  (1.0, RigidTransform.rotation_2d(math.pi / 2))]
        traj = KeyframeTrajectory(frames)
        tf = traj.at(0.5)
        assert np.allclose(tf.rotation,
                           RigidTransform.rotation_2d(math.pi / 4).rotation)

    def test_requires_identity_start(self):
        frames = [(0.0, RigidTransform.rotation_2d(0.3)),
                  (1.0, RigidTransform.identity(2))]
        with pytest.raises(ValueError):
            KeyframeTrajectory(frames)

    def test_3d_slerp(self):
        frames = [(0.0, RigidTransform.identity(3)),
                  (1.0, RigidTransform.rotation_3d(math.pi / 2, (0, 0, 1)))]
        traj = KeyframeTrajectory(frames)
        tf = traj.at(0.5)
        expect = RigidTransform.rotation_3d(math.pi / 4, (0, 0, 1))
        assert np.allclose(tf.rotation, expect.rotation, atol=1e-12)


class TestRelativeTrajectory:
    def test_identical_motions_cancel(self, rng):
        traj = RotationTrajectory(rng.normal(size=2), 0.0, 3.0)
        rel = RelativeTrajectory(0, 1, traj, traj)
        for t in rng.uniform(0, 1, size=6):
            assert rel.at(t).is_identity(1e-12)

    def test_static_observer_returns_moving(self):
        mv = RotationTrajectory((0.5, 0.5), 0.0, 2.0)
        rel = RelativeTrajectory(0, 1, StaticTrajectory(2), mv)
        for t in (0.2, 0.7):
            assert np.allclose(rel.at(t).rotation, mv.at(t).rotation)

    def test_kinematic_inversion(self, rng):
        ta = RotationTrajectory(rng.normal(size=2), 0.2, 2.5)
        tb = RotationTrajectory(rng.normal(size=2), -0.3, 1.1)
        rel = RelativeTrajectory(0, 1, ta, tb)
        inv = rel.inverse()
        for t in rng.uniform(0, 1, size=8):
            assert rel.at(t).compose(inv.at(t)).is_identity(1e-12)
            got = inv.at(t).rotation @ rel.at(t).rotation
            assert np.allclose(got, np.eye(2), atol=1e-12)

    def test_indicator_contravariance(self, rng):
        # membership of x in tau(S) equals membership of tau^-1(x) in S,
        # checked through dual-cell classification
        g = UniformGrid((0.0, 0.0), 0.25, (8, 8))
        tf = RigidTransform.rotation_2d(0.7, pivot=(1.0, 1.0))
        pts = rng.uniform(-0.5, 2.5, size=(200, 2))
        fwd = g.locate_cells(tf.inverse().apply(pts))
        for p, cell in zip(pts, fwd):
            assert g.locate_cell(tf.inverse().apply(p)) == \
                (None if cell < 0 else cell)


class TestSampling:
    def test_single_step_is_identity(self):
        rel = RelativeTrajectory(0, 1, StaticTrajectory(2),
                                 RotationTrajectory((0, 0), 0.0, math.pi))
        (tf,) = sample_uniform(rel, 1)
        assert tf.is_identity()

    def test_two_steps_left_endpoints(self):
        rel = RelativeTrajectory(0, 1, StaticTrajectory(2),
                                 RotationTrajectory((0, 0), 0.0, math.pi))
        tfs = sample_uniform(rel, 2)
        assert tfs[0].is_identity()
        expect = RigidTransform.rotation_2d(math.pi / 2)
        assert np.allclose(tfs[1].rotation, expect.rotation, atol=1e-12)

    def test_zero_steps_rejected(self):
        rel = RelativeTrajectory(0, 1, StaticTrajectory(2), StaticTrajectory(2))
        with pytest.raises(ValueError):
            sample_uniform(rel, 0)
