import numpy as np
import pytest

from mapnbv.geometry import Pose, key_set
from mapnbv.meshio import sample_surface
from mapnbv.scene import (
    FREE,
    OCCUPIED,
    UNKNOWN,
    Box,
    Observation,
    OccupancyGrid,
    Scene,
    SphereObstacle,
    accumulate,
    synthesize_observation,
    update_occupancy,
)
from mapnbv.scenes import ellipsoid_triangles
from mapnbv.visibility import SensorModel, raycast_visibility


def sphere_scene(n=1200, radius=1.0, seed=0):
    tris = ellipsoid_triangles([0.0, 0.0, 0.0], [radius] * 3, 20, 30)
    cloud = sample_surface(tris, n, seed)
    bounds = Box(np.full(3, -80.0), np.full(3, 80.0))
    return Scene(object_cloud=cloud, world_bounds=bounds, name="sphere"), tris


SENSOR = SensorModel(min_range=0.5, max_range=120.0)


class TestSynthesizeObservation:
    def test_object_behind_sensor_gives_empty(self):
        scene, _ = sphere_scene()
        pose = Pose(np.array([5.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))
        obs = synthesize_observation(scene, pose, SENSOR, 3.0)
        assert obs.cloud.shape[0] == 0

    def test_pose_outside_bounds_rejected(self):
        scene, _ = sphere_scene()
        pose = Pose(np.array([500.0, 0.0, 0.0]), np.array([-1.0, 0.0, 0.0]))
        with pytest.raises(ValueError):
            synthesize_observation(scene, pose, SENSOR, 3.0)

    def test_observation_is_subset_of_object_cloud(self):
        scene, _ = sphere_scene()
        pose = Pose.aimed_at(np.array([40.0, 3.0, 1.0]), np.zeros(3))
        obs = synthesize_observation(scene, pose, SENSOR, 3.0)
        rows = {tuple(p) for p in scene.object_cloud}
        assert all(tuple(p) in rows for p in obs.cloud)

    def test_matches_raycast_oracle_on_convex_object(self):
        scene, tris = sphere_scene()
        pose = Pose.aimed_at(np.array([40.0, 0.0, 0.0]), np.zeros(3))
        obs = synthesize_observation(scene, pose, SENSOR, 3.0)
        got = {tuple(p) for p in obs.cloud}
        ray_idx = raycast_visibility(tris, scene.object_cloud, pose.position)
        want = {tuple(p) for p in scene.object_cloud[ray_idx]}
        sym_diff = len(got ^ want)
        assert sym_diff <= 0.05 * scene.object_cloud.shape[0]

    def test_opposite_poses_union_strictly_larger(self):
        scene, _ = sphere_scene()
        a = synthesize_observation(scene, Pose.aimed_at([40.0, 0, 0], [0, 0, 0]), SENSOR, 3.0)
        b = synthesize_observation(scene, Pose.aimed_at([-40.0, 0, 0], [0, 0, 0]), SENSOR, 3.0)
        res = 0.05
        ka = key_set(a.cloud, res)
        kb = key_set(b.cloud, res)
        union = np.union1d(ka, kb)
        assert union.size > ka.size and union.size > kb.size


class TestAccumulate:
    def test_no_new_observations_keeps_keys(self):
        rng = np.random.default_rng(1)
        observed = rng.random((100, 3))
        out = accumulate(observed, [], 0.1)
        assert np.array_equal(key_set(out, 0.1), key_set(observed, 0.1))

    def test_duplicate_observation_is_idempotent(self):
        rng = np.random.default_rng(2)
        cloud = rng.random((80, 3))
        obs = Observation(0, Pose(np.zeros(3), np.array([1.0, 0, 0])), cloud)
        once = accumulate(np.empty((0, 3)), [obs], 0.1)
        twice = accumulate(once, [obs], 0.1)
        assert once.shape[0] == twice.shape[0]

    def test_disjoint_keys_grow_exactly(self):
        a = np.array([[0.05, 0.05, 0.05]])
        b = np.array([[5.05, 0.05, 0.05], [6.05, 0.05, 0.05]])
        obs = Observation(0, Pose(np.zeros(3), np.array([1.0, 0, 0])), b)
        out = accumulate(a, [obs], 0.1)
        assert out.shape[0] == 3

    def test_monotone_key_growth(self):
        rng = np.random.default_rng(3)
        observed = rng.random((50, 3))
        obs = Observation(0, Pose(np.zeros(3), np.array([1.0, 0, 0])), rng.random((50, 3)))
        out = accumulate(observed, [obs], 0.2)
        before = set(key_set(observed, 0.2).tolist())
        after = set(key_set(out, 0.2).tolist())
        assert before <= after


def make_grid(dims=(12, 12, 12), resolution=1.0):
    return OccupancyGrid(origin=np.zeros(3), resolution=resolution, dims=dims)


def obs_at(points, position=(0.5, 5.5, 5.5)):
    pose = Pose(np.asarray(position, dtype=float), np.array([1.0, 0.0, 0.0]))
    return Observation(0, pose, np.asarray(points, dtype=float))


class TestUpdateOccupancy:
    def test_empty_observation_leaves_grid(self):
        grid = make_grid()
        out = update_occupancy(grid, obs_at(np.empty((0, 3))))
        assert (out.cells == UNKNOWN).all()

    def test_single_point_five_cells_along_x(self):
        grid = make_grid()
        out = update_occupancy(grid, obs_at([[5.5, 5.5, 5.5]], position=(0.5, 5.5, 5.5)))
        assert out.cells[5, 5, 5] == OCCUPIED
        for x in range(0, 5):
            assert out.cells[x, 5, 5] == FREE
        assert out.cells[6, 5, 5] == UNKNOWN

    def test_idempotent(self):
        grid = make_grid()
        obs = obs_at([[5.5, 5.5, 5.5], [4.2, 7.7, 5.1]])
        once = update_occupancy(grid, obs)
        twice = update_occupancy(once, obs)
        assert np.array_equal(once.cells, twice.cells)

    def test_never_downgrades_occupied(self):
        grid = make_grid()
        first = update_occupancy(grid, obs_at([[5.5, 5.5, 5.5]]))
        # a ray to a farther point passes through the occupied cell
        second = update_occupancy(first, obs_at([[9.5, 5.5, 5.5]]))
        assert second.cells[5, 5, 5] == OCCUPIED

    def test_pose_outside_grid_still_carves_inside(self):
        grid = make_grid()
        out = update_occupancy(grid, obs_at([[5.5, 5.5, 5.5]], position=(-3.5, 5.5, 5.5)))
        assert out.cells[5, 5, 5] == OCCUPIED
        for x in range(0, 5):
            assert out.cells[x, 5, 5] == FREE

    def test_matches_dense_sampling_ray_oracle(self):
        rng = np.random.default_rng(7)
        grid = make_grid(dims=(20, 20, 20), resolution=0.5)
        position = np.array([1.1, 4.7, 3.3])
        points = rng.random((40, 3)) * np.array([8.0, 8.0, 8.0]) + 0.7
        obs = Observation(0, Pose(position, np.array([1.0, 0, 0])), points)
        out = update_occupancy(grid, obs)

        occupied = {tuple(c) for c in np.floor((points - grid.origin) / 0.5).astype(int)}
        oracle_free = set()
        for p in points:
            seg = p - position
            n = int(np.linalg.norm(seg) / (0.5 * 1e-3)) + 2
            ts = np.linspace(0.0, 1.0, n)
            cells = np.floor((position + ts[:, None] * seg) / 0.5).astype(int)
            end = tuple(np.floor(p / 0.5).astype(int))
            for c in map(tuple, cells):
                if c != end and c not in occupied:
                    oracle_free.add(c)
        got_free = {tuple(c) for c in np.argwhere(out.cells == FREE)}
        # the integer walk may clip voxel corners the dense oracle steps over
        assert oracle_free <= got_free
        assert len(got_free - oracle_free) <= max(2, int(0.02 * len(got_free)))

    def test_full_orbit_covers_object(self):
        scene, _ = sphere_scene(n=2000)
        sensor = SensorModel(min_range=0.5, max_range=120.0)
        res = 0.05
        keys = set()
        for k in range(12):
            ang = np.radians(30.0 * k)
            pose = Pose.aimed_at(3.0 * np.array([np.cos(ang), np.sin(ang), 0.0]), np.zeros(3))
            obs = synthesize_observation(scene, pose, sensor, 3.0)
            keys |= set(key_set(obs.cloud, res).tolist())
        total = key_set(scene.object_cloud, res).size
        assert len(keys) >= 0.95 * total


class TestSceneValidation:
    def test_object_outside_bounds_rejected(self):
        with pytest.raises(ValueError):
            Scene(
                object_cloud=np.array([[10.0, 0, 0]]),
                world_bounds=Box(np.full(3, -1.0), np.full(3, 1.0)),
            )

    def test_empty_object_rejected(self):
        with pytest.raises(ValueError):
            Scene(object_cloud=np.empty((0, 3)), world_bounds=Box(np.full(3, -1.0), np.full(3, 1.0)))

    def test_obstacle_containment_checks(self):
        box = Box(np.zeros(3), np.ones(3))
        assert box.contains(np.array([[0.5, 0.5, 0.5]]))[0]
        assert not box.contains(np.array([[1.5, 0.5, 0.5]]))[0]
        assert box.contains(np.array([[1.05, 0.5, 0.5]]), margin=0.1)[0]
        sph = SphereObstacle(np.zeros(3), 1.0)
        assert sph.contains(np.array([[0.9, 0, 0]]))[0]
        assert not sph.contains(np.array([[1.2, 0, 0]]))[0]
