import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsgf.errors import UserError
from nsgf.geomcore import (OccupancyField, ShapeSpec, Sim3, extract_mesh,
                           generate_shape, load_grid, occupancy_gradient,
                           query_occupancy, sample_surface, save_grid,
                           shape_confidence, surface_normals, write_obj)
from nsgf.geomcore.mesh import TRI_TABLE

from conftest import sphere_occupancy_field


class TestOccupancyField:
    def test_rejects_bad_bbox(self):
        with pytest.raises(UserError):
            OccupancyField(np.zeros((4, 4, 4)), [0, 0, 0], [1, 0.5, -1], 0.01)

    def test_rejects_out_of_range_values(self):
        with pytest.raises(UserError):
            OccupancyField(np.full((4, 4, 4), 1.5), [0, 0, 0], [1, 1, 1], 0.01)

    def test_node_queries_return_stored_values(self):
        rng = np.random.default_rng(0)
        data = rng.random((6, 5, 7))
        fld = OccupancyField(data, [-1, -1, -1], [1, 1, 1], 0.1)
        xs, ys, zs = fld.node_positions()
        for idx in [(0, 0, 0), (5, 4, 6), (2, 3, 1), (4, 0, 5)]:
            p = np.array([xs[idx[0]], ys[idx[1]], zs[idx[2]]])
            assert query_occupancy(fld, p) == pytest.approx(data[idx], abs=1e-12)

    def test_cell_center_is_mean_of_corners(self):
        # field linear per axis: trilinear at a cell center = corner mean
        xs = np.linspace(0, 1, 5)
        data = (0.3 * xs[:, None, None] + 0.2 * xs[None, :, None]
                + 0.1 * xs[None, None, :] + 0.1)
        fld = OccupancyField(data, [0, 0, 0], [1, 1, 1], 0.1)
        center = np.array([xs[1] + 0.125, xs[2] + 0.125, xs[0] + 0.125])
        corners = [data[1 + i, 2 + j, 0 + k] for i in (0, 1) for j in (0, 1)
                   for k in (0, 1)]
        assert query_occupancy(fld, center) == pytest.approx(np.mean(corners), abs=1e-12)

    def test_constant_field(self):
        fld = OccupancyField(np.full((8, 8, 8), 0.7), [-1, -1, -1], [1, 1, 1], 0.1)
        rng = np.random.default_rng(3)
        pts = rng.uniform(-1, 1, (50, 3))
        assert np.allclose(query_occupancy(fld, pts), 0.7, atol=1e-12)

    def test_outside_points_clamp_and_flag(self):
        fld = OccupancyField(np.full((8, 8, 8), 0.2), [0, 0, 0], [1, 1, 1], 0.1)
        vals, flags = query_occupancy(fld, np.array([[2.0, 0.5, 0.5],
                                                     [0.5, 0.5, 0.5]]),
                                      return_flags=True)
        assert flags.tolist() == [True, False]
        assert vals[0] == pytest.approx(0.2)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_node_exactness_property(self, seed):
        rng = np.random.default_rng(seed)
        dims = rng.integers(3, 9, size=3)
        data = rng.random(tuple(dims))
        fld = OccupancyField(data, [0, 0, 0], [1, 1, 1], 0.1)
        idx = tuple(rng.integers(0, d) for d in dims)
        p = fld.bbox_min + np.array(idx) * fld.voxel_size
        assert query_occupancy(fld, p) == pytest.approx(data[idx], abs=1e-12)


class TestGradient:
    def test_linear_field_exact(self):
        xs = np.linspace(0, 1, 9)
        data = np.broadcast_to(0.8 * xs[:, None, None], (9, 9, 9)).copy() * 0.9
        fld = OccupancyField(data, [0, 0, 0], [1, 1, 1], 0.1)
        g = occupancy_gradient(fld, np.array([0.43, 0.51, 0.62]))
        assert np.abs(g - [0.72, 0.0, 0.0]).max() < 1e-9

    def test_constant_field_zero(self):
        fld = OccupancyField(np.full((8, 8, 8), 0.4), [0, 0, 0], [1, 1, 1], 0.1)
        g = occupancy_gradient(fld, np.array([0.5, 0.5, 0.5]))
        assert np.abs(g).max() < 1e-12

    def test_sphere_gradient_matches_inward_normal(self):
        fld = sphere_occupancy_field(0.3, dims=64)
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            p = 0.3 * n
            g = occupancy_gradient(fld, p)
            g_dir = g / np.linalg.norm(g)
            angle = np.degrees(np.arccos(np.clip(g_dir @ (-n), -1, 1)))
            assert angle < 5.0

    def test_near_boundary_flagged(self):
        fld = OccupancyField(np.random.default_rng(0).random((8, 8, 8)),
                             [0, 0, 0], [1, 1, 1], 0.1)
        _, flag = occupancy_gradient(fld, np.array([0.01, 0.5, 0.5]),
                                     return_flags=True)
        assert flag


class TestConfidence:
    def test_constant_zero(self):
        fld = OccupancyField(np.full((8, 8, 8), 0.4), [0, 0, 0], [1, 1, 1], 0.1)
        assert shape_confidence(fld, np.array([0.5, 0.5, 0.5])) < 1e-12

    def test_linear_ramp_slope(self):
        xs = np.linspace(0, 1, 9)
        data = np.broadcast_to(0.6 * xs[:, None, None], (9, 9, 9)).copy()
        fld = OccupancyField(data, [0, 0, 0], [1, 1, 1], 0.1)
        assert shape_confidence(fld, np.array([0.5, 0.5, 0.5])) == pytest.approx(0.6, abs=1e-9)

    def test_sharp_beats_blurred(self):
        sharp = sphere_occupancy_field(0.3, dims=64)

        def blurred_occ(pts):
            d = np.linalg.norm(pts, axis=1)
            return 1.0 / (1.0 + np.exp((d - 0.3) / (4 * sharp.smoothing_beta)))

        blurred = OccupancyField.from_function(blurred_occ, [-0.5] * 3, [0.5] * 3,
                                               (64,) * 3, 4 * sharp.smoothing_beta)
        p = np.array([0.3, 0.0, 0.0])
        assert shape_confidence(sharp, p) > shape_confidence(blurred, p)


class TestShapes:
    def test_degenerate_bowl_is_analytic_sphere(self):
        spec = ShapeSpec("bowl", {"radius": 0.3, "thickness": 0.3,
                                  "cap_angle": np.pi})
        fld, shape = generate_shape(spec, 32)
        # canonical radius is 0.5 (max extent normalized to 1)
        xs, ys, zs = fld.node_positions()
        rng = np.random.default_rng(0)
        for _ in range(20):
            idx = tuple(rng.integers(0, 32, 3))
            p = np.array([xs[idx[0]], ys[idx[1]], zs[idx[2]]])
            d = np.linalg.norm(p)
            expected = 1.0 / (1.0 + np.exp((d - 0.5) / fld.smoothing_beta))
            assert fld.data[idx] == pytest.approx(expected, abs=1e-12)

    def test_box_center_occupancy(self):
        spec = ShapeSpec("box", {"half_extents": [0.2, 0.2, 0.2]})
        fld, shape = generate_shape(spec, 64)
        assert query_occupancy(fld, np.zeros(3)) > 0.99

    def test_surface_point_is_half(self):
        spec = ShapeSpec("box", {"half_extents": [0.2, 0.2, 0.2]})
        fld, shape = generate_shape(spec, 64)
        # canonical box has half extent 0.5 along each axis
        p = np.array([0.5, 0.0, 0.0])
        assert shape.occupancy(p) == pytest.approx(0.5, abs=1e-12)
        assert query_occupancy(fld, p) == pytest.approx(0.5, abs=0.02)

    def test_cylinder_sdf_exact(self):
        spec = ShapeSpec.cylinder(0.10, 1.0)
        _, shape = generate_shape(spec, 32)
        assert shape.sdf(np.array([0.0, 0.0, 0.0])) == pytest.approx(-0.1)
        assert shape.sdf(np.array([0.25, 0.0, 0.0])) == pytest.approx(0.15)
        assert shape.sdf(np.array([0.0, 0.0, 0.7])) == pytest.approx(0.2)
        assert shape.sdf(np.array([0.1, 0.0, 0.0])) == pytest.approx(0.0, abs=1e-12)

    def test_pose_carried_and_canonicalized(self):
        pose = Sim3(translation=(1.0, -2.0, 0.5), scale=2.0)
        spec = ShapeSpec.cylinder(0.10, 1.0, pose=pose)
        fld, shape = generate_shape(spec, 32)
        # canonical frame recenters/rescales: surface still at radius 0.1
        assert shape.sdf(np.zeros(3)) == pytest.approx(-0.1)
        assert spec.pose.scale == 2.0

    def test_invalid_params_named(self):
        with pytest.raises(UserError, match="thickness"):
            ShapeSpec("bowl", {"radius": 0.3, "thickness": -0.1, "cap_angle": 1.0})
        with pytest.raises(UserError, match="half_extents"):
            ShapeSpec("box", {"half_extents": [0.1, 0.1]})
        with pytest.raises(UserError, match="radii"):
            ShapeSpec("bottle", {"height": 1.0, "radii": [0.1]})

    def test_generate_deterministic(self):
        spec = ShapeSpec.cylinder(0.12, 0.9)
        f1, _ = generate_shape(spec, 32)
        f2, _ = generate_shape(spec, 32)
        assert np.array_equal(f1.data, f2.data)


class TestMarchingCubes:
    def test_tri_table_structure(self):
        assert len(TRI_TABLE) == 256
        assert len(TRI_TABLE[0]) == 0 and len(TRI_TABLE[255]) == 0
        assert max(len(t) for t in TRI_TABLE) == 5
        # single-corner cases produce one triangle
        for c in range(8):
            assert len(TRI_TABLE[1 << c]) == 1

    def test_sphere_vertex_radii(self):
        fld = sphere_occupancy_field(0.3, dims=64)
        mesh = extract_mesh(fld, 0.5)
        radii = np.linalg.norm(mesh.vertices, axis=1)
        voxel_diag = np.linalg.norm(fld.voxel_size)
        assert np.abs(radii - 0.3).max() <= voxel_diag

    def test_vertex_occupancy_near_iso(self):
        fld = sphere_occupancy_field(0.25, dims=48)
        mesh = extract_mesh(fld, 0.5)
        vals = query_occupancy(fld, mesh.vertices)
        assert np.abs(vals - 0.5).max() <= 0.05

    def test_empty_field_gives_empty_mesh(self):
        fld = OccupancyField(np.zeros((16, 16, 16)), [-1, -1, -1], [1, 1, 1], 0.1)
        assert extract_mesh(fld, 0.5).is_empty

    def test_box_surface_area(self):
        spec = ShapeSpec("box", {"half_extents": [0.2, 0.2, 0.2]})
        fld, _ = generate_shape(spec, 64)
        mesh = extract_mesh(fld, 0.5)
        analytic = 6.0 * 1.0  # canonical box edge 1.0
        assert abs(mesh.surface_area() - analytic) / analytic < 0.10

    def test_watertight_closed_surface(self):
        fld = sphere_occupancy_field(0.3, dims=32)
        mesh = extract_mesh(fld, 0.5)
        edges = np.concatenate([mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]],
                                mesh.faces[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        assert np.all(counts == 2)

    def test_outward_winding_matches_normals(self):
        fld = sphere_occupancy_field(0.3, dims=48)
        mesh = extract_mesh(fld, 0.5)
        a, b, c = (mesh.vertices[mesh.faces[:, i]] for i in range(3))
        fn = np.cross(b - a, c - a)
        fn /= np.maximum(np.linalg.norm(fn, axis=1, keepdims=True), 1e-15)
        centroid = (a + b + c) / 3
        radial = centroid / np.linalg.norm(centroid, axis=1, keepdims=True)
        assert ((fn * radial).sum(axis=1) > 0).mean() > 0.99


class TestSampling:
    def test_exact_count(self, cylinder_scene):
        s = sample_surface(cylinder_scene["mesh"], cylinder_scene["field"], 5000,
                           seed=2)
        assert len(s) == 5000

    def test_single_triangle_barycentric(self):
        from nsgf.geomcore import TriMesh
        tri = TriMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float),
                      np.array([[0, 1, 2]]),
                      np.tile([0.0, 0.0, 1.0], (3, 1)))
        fld = OccupancyField(np.full((4, 4, 4), 0.5), [-1, -1, -1], [2, 2, 2], 0.1)
        s = sample_surface(tri, fld, 500, seed=0)
        # inside the triangle: x, y >= 0 and x + y <= 1, z = 0
        assert np.all(s.points[:, 0] >= -1e-12)
        assert np.all(s.points[:, 1] >= -1e-12)
        assert np.all(s.points[:, 0] + s.points[:, 1] <= 1 + 1e-12)
        assert np.abs(s.points[:, 2]).max() < 1e-12

    def test_sphere_centroid(self):
        fld = sphere_occupancy_field(0.3, dims=48)
        mesh = extract_mesh(fld, 0.5)
        s = sample_surface(mesh, fld, 10000, seed=3)
        assert np.linalg.norm(s.points.mean(axis=0)) < 0.01

    def test_area_weighting_binomial(self):
        from nsgf.geomcore import TriMesh
        # two triangles with area ratio 3:1
        verts = np.array([[0, 0, 0], [3, 0, 0], [0, 2, 0],
                          [10, 0, 0], [11, 0, 0], [10, 2, 0]], dtype=float)
        faces = np.array([[0, 1, 2], [3, 4, 5]])
        normals = np.tile([0.0, 0.0, 1.0], (6, 1))
        mesh = TriMesh(verts, faces, normals)
        fld = OccupancyField(np.full((4, 4, 4), 0.5), [-1, -1, -1], [12, 3, 1], 0.1)
        s = sample_surface(mesh, fld, 4000, seed=4)
        big = (s.points[:, 0] < 5).sum()
        p = 0.75
        sigma = np.sqrt(4000 * p * (1 - p))
        assert abs(big - 4000 * p) <= 3 * sigma

    def test_normals_unit(self, cylinder_scene):
        s = cylinder_scene["samples"]
        assert np.abs(np.linalg.norm(s.normals, axis=1) - 1).max() < 1e-6


class TestGridIO:
    def test_roundtrip(self, tmp_path):
        fld = sphere_occupancy_field(0.2, dims=24)
        path = tmp_path / "s.grid"
        save_grid(fld, path)
        back = load_grid(path)
        assert back.dims == fld.dims
        assert np.allclose(back.bbox_min, fld.bbox_min)
        assert back.smoothing_beta == pytest.approx(fld.smoothing_beta)
        # payload quantized to f32
        assert np.allclose(back.data, fld.data, atol=1e-6)

    def test_format_layout(self, tmp_path):
        fld = sphere_occupancy_field(0.2, dims=16)
        path = tmp_path / "s.grid"
        save_grid(fld, path)
        raw = path.read_bytes()
        assert raw[:4] == b"NSGF"
        assert len(raw) == 74 + 4 * 16 ** 3
        # x-fastest ordering
        payload = np.frombuffer(raw, dtype="<f4", offset=74)
        assert payload[1] == np.float32(fld.data[1, 0, 0])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.grid"
        path.write_bytes(b"XXXX" + b"\0" * 80)
        with pytest.raises(UserError, match="magic"):
            load_grid(path)

    def test_rewrite_is_byte_identical(self, tmp_path):
        fld = sphere_occupancy_field(0.2, dims=16)
        p1, p2 = tmp_path / "a.grid", tmp_path / "b.grid"
        save_grid(fld, p1)
        save_grid(load_grid(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_obj_export(self, tmp_path, cylinder_scene):
        path = tmp_path / "m.obj"
        write_obj(cylinder_scene["mesh"], path)
        text = path.read_text().splitlines()
        n_v = sum(1 for line in text if line.startswith("v "))
        n_vn = sum(1 for line in text if line.startswith("vn "))
        n_f = sum(1 for line in text if line.startswith("f "))
        assert n_v == len(cylinder_scene["mesh"].vertices)
        assert n_vn == n_v
        assert n_f == len(cylinder_scene["mesh"].faces)


class TestSurfaceNormals:
    def test_outward_on_sphere(self):
        fld = sphere_occupancy_field(0.3, dims=48)
        rng = np.random.default_rng(2)
        dirs = rng.normal(size=(10, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        n = surface_normals(fld, 0.3 * dirs)
        assert ((n * dirs).sum(axis=1) > 0.99).all()
