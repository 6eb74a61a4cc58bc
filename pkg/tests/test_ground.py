import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occlabel.errors import EmptyTrajectory, NoNeighborPairs
from occlabel.geom import CameraFrame, Pose, rot_y, rot_z
from occlabel.ground import GroundSeedConfig, road_smoothness, seed_ground

from oracles import nearest_camera_bruteforce


def cam(fid, xyz, rot=None):
    return CameraFrame(fid, Pose(np.eye(3) if rot is None else rot, xyz))


class TestSeedGround:
    def test_single_level_camera(self):
        cfg = GroundSeedConfig(grid_spacing=0.5, height_offset=2.0, extent=3.0)
        s = seed_ground([cam(0, [0.0, 0.0, 2.0])], cfg)
        assert np.all(s.centers[:, 2] == 0.0)
        np.testing.assert_array_equal(s.normals, np.tile([0.0, 0.0, 1.0], (len(s), 1)))
        # 13 x 13 lattice points in [-3, 3]^2
        assert len(s) == 13 * 13
        np.testing.assert_allclose(s.radii, 0.5 * math.sqrt(0.5))

    def test_two_cameras_split_at_bisector(self):
        cfg = GroundSeedConfig(grid_spacing=0.5, height_offset=2.0, extent=8.0)
        s = seed_ground([cam(0, [0.0, 0.0, 2.0]), cam(1, [10.0, 0.0, 7.0])], cfg)
        x, z = s.centers[:, 0], s.centers[:, 2]
        assert np.all(z[x < 5] == 0.0)
        assert np.all(z[x > 5] == 5.0)
        # the bisector goes to the lower frame id
        assert np.all(z[x == 5] == 0.0)
        row = s.centers[s.centers[:, 1] == 0.0]
        row = row[np.argsort(row[:, 0])]
        assert np.max(np.abs(np.diff(row[:, 2]))) == 5.0

    def test_pitched_camera_tilts_normal(self):
        pitch = math.radians(10)
        cfg = GroundSeedConfig(extent=1.0)
        s = seed_ground([cam(0, [0.0, 0.0, 1.6], rot_y(-pitch))], cfg)
        angle = np.degrees(np.arccos(s.normals[:, 2]))
        np.testing.assert_allclose(angle, 10.0, atol=1e-9)
        np.testing.assert_allclose(np.linalg.norm(s.normals, axis=1), 1.0)

    def test_matches_bruteforce_assignment(self):
        rng = np.random.default_rng(2)
        cams = [cam(i, [*rng.uniform(-4, 4, 2), rng.uniform(0, 3)], rot_z(rng.uniform(-3, 3))) for i in range(5)]
        cfg = GroundSeedConfig(grid_spacing=0.5, height_offset=1.0, extent=2.0)
        s = seed_ground(cams, cfg)
        xy_cams = [(c.frame_id, tuple(c.camera_center[:2])) for c in cams]
        by_id = {c.frame_id: c for c in cams}
        for center in s.centers[::7]:
            fid = nearest_camera_bruteforce(center[:2], xy_cams)
            assert center[2] == by_id[fid].camera_center[2] - 1.0
        # every surfel lies in some camera's square
        for center in s.centers:
            assert any(np.all(np.abs(center[:2] - np.array(c)) <= 2.0) for _, c in xy_cams)

    def test_empty_trajectory(self):
        with pytest.raises(EmptyTrajectory):
            seed_ground([], GroundSeedConfig())

    @settings(max_examples=25, deadline=None)
    @given(st.permutations(range(4)))
    def test_permutation_invariant(self, order):
        # cameras on a 2 x 2 square so many lattice points are equidistant
        pos = [[0.0, 0.0, 1.0], [2.0, 0.0, 2.0], [0.0, 2.0, 3.0], [2.0, 2.0, 4.0]]
        cams = [cam(i, p) for i, p in enumerate(pos)]
        cfg = GroundSeedConfig(grid_spacing=0.5, height_offset=1.0, extent=1.5)
        a = seed_ground(cams, cfg)
        b = seed_ground([cams[i] for i in order], cfg)
        np.testing.assert_array_equal(a.centers, b.centers)
        np.testing.assert_array_equal(a.normals, b.normals)


class TestRoadSmoothness:
    def test_flat_is_zero(self):
        s = seed_ground([cam(0, [0.0, 0.0, 2.0])], GroundSeedConfig(extent=2.0))
        assert road_smoothness(s, 0.6) == 0.0

    def test_single_step(self):
        assert road_smoothness([[0.0, 0.0, 0.0], [0.5, 0.0, 0.1]], 0.6) == pytest.approx(0.01)

    def test_no_pairs(self):
        with pytest.raises(NoNeighborPairs):
            road_smoothness([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]], 1.0)
        with pytest.raises(NoNeighborPairs):
            road_smoothness([[0.0, 0.0, 0.0]], 1.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.1, 10), st.floats(-50, 50))
    def test_scale_and_shift(self, seed, k, shift):
        pts = np.random.default_rng(seed).uniform(0, 3, (40, 3))
        base = road_smoothness(pts, 1.0)
        scaled = pts.copy()
        scaled[:, 2] *= k
        assert road_smoothness(scaled, 1.0) == pytest.approx(k * k * base, rel=1e-9, abs=1e-12)
        shifted = pts.copy()
        shifted[:, 2] += shift
        assert road_smoothness(shifted, 1.0) == pytest.approx(base, rel=1e-6, abs=1e-9)
        assert base >= 0

    def test_matches_bruteforce(self):
        pts = np.random.default_rng(1).uniform(0, 4, (60, 3))
        vals = [
            (pts[i, 2] - pts[j, 2]) ** 2
            for i in range(len(pts))
            for j in range(i + 1, len(pts))
            if math.dist(pts[i, :2], pts[j, :2]) <= 0.8
        ]
        assert road_smoothness(pts, 0.8) == pytest.approx(sum(vals) / len(vals), rel=1e-12)
