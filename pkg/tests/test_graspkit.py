import numpy as np
import pytest

from nsgf.errors import UserError
from nsgf.geomcore import (OccupancyField, ShapeSpec, extract_mesh,
                           generate_shape, surface_normals)
from nsgf.graspkit import (Annotation, GripperModel, annotate_source,
                           cast_antipodal, check_grasp, evaluate,
                           grasp_confidence, load_annotations, rank_and_select,
                           save_annotations)
from nsgf.neuralfield import Grasp, refine_width

from bruteforce import brute_force_antipodal
from conftest import random_unit, sphere_occupancy_field


def make_grasp(p, a, t, w, q=1.0, conf=0.0):
    a = np.asarray(a, dtype=float)
    t = np.asarray(t, dtype=float)
    return Grasp(np.asarray(p, dtype=float), q, a, t, np.cross(t, a), w, conf)


@pytest.fixture(scope="module")
def thin_box():
    # canonical half-extents (0.1, 0.5, 0.5): graspable across x
    fld, shape = generate_shape(ShapeSpec("box", {"half_extents": [0.06, 0.3, 0.3]}), 64)
    return fld


class TestCheckGrasp:
    def test_straight_box_grasp_antipodal(self, thin_box):
        g = make_grasp([-0.1, 0, 0], [0, 0, -1], [0, -1, 0], 0.2)
        v = check_grasp(g, thin_box, GripperModel(), mu=0.5)
        assert v.antipodal_ok
        assert max(v.contact_angles) < np.radians(3)

    def test_oblique_baseline_rejected(self, thin_box):
        # baseline at 45 degrees to the face normal: outside the atan(0.5) cone
        b = np.array([1.0, 1.0, 0]) / np.sqrt(2)
        a = np.array([0.0, 0, -1])
        t = np.cross(a, b)
        p = np.array([-0.1, -0.26, 0.0])
        w = 0.2 * np.sqrt(2)
        g = Grasp(p, 1.0, a, t, b, w)
        v = check_grasp(g, thin_box, GripperModel(max_width=0.4), mu=0.5)
        assert not v.antipodal_ok
        assert min(v.contact_angles) > np.radians(40)

    def test_sphere_diametral_passes_und_narrow_collides(self):
        fld = sphere_occupancy_field(0.1, dims=64)
        g_ok = make_grasp([-0.1, 0, 0], [0, 0, -1], [0, -1, 0], 0.2)
        assert check_grasp(g_ok, fld, GripperModel(), 0.5).passed
        g_bad = make_grasp([-0.1, 0, 0], [0, 0, -1], [0, -1, 0], 0.12)
        v = check_grasp(g_bad, fld, GripperModel(), 0.5)
        assert not v.collision_free
        assert not v.passed

    def test_contacts_outside_bbox_fail(self):
        fld = sphere_occupancy_field(0.1, dims=32)
        g = make_grasp([-0.49, 0, 0], [0, 0, -1], [0, -1, 0], 0.2)
        v = check_grasp(g, fld, GripperModel(), 0.5)
        assert not v.antipodal_ok

    def test_table_plane_option(self):
        fld = sphere_occupancy_field(0.1, dims=64)
        g = make_grasp([-0.1, 0, 0], [0, 0, -1], [0, -1, 0], 0.2)
        assert check_grasp(g, fld, GripperModel(), 0.5).passed
        # approach is -z, so the body spans world z in [0, +0.18]; a plane
        # cutting through that range must register as scene collision
        v = check_grasp(g, fld, GripperModel(), 0.5, table_z=0.05)
        assert not v.collision_free

    def test_rigid_invariance_under_grid_rotation(self):
        # rotate field and grasp by 90 deg about z: exact on the grid lattice
        rng = np.random.default_rng(0)
        data = rng.random((32, 32, 32))
        data = 0.2 + 0.6 * data
        fld = OccupancyField(data, [-0.5] * 3, [0.5] * 3, 0.03)
        rot_data = np.rot90(data, k=1, axes=(0, 1)).copy()
        fld_rot = OccupancyField(rot_data, [-0.5] * 3, [0.5] * 3, 0.03)
        r = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 1]])  # +90 deg about z

        g = make_grasp([-0.1, 0.05, 0], [0, 0, -1], [0, -1, 0], 0.2)
        g_rot = Grasp(r @ g.point, g.validity, r @ g.approach, r @ g.tangential,
                      np.cross(r @ g.tangential, r @ g.approach), g.width)
        v1 = check_grasp(g, fld, GripperModel(), 0.5)
        v2 = check_grasp(g_rot, fld_rot, GripperModel(), 0.5)
        assert v1.passed == v2.passed
        assert v1.antipodal_ok == v2.antipodal_ok


class TestBruteForceAgreement:
    def test_analytic_matches_nnls_oracle(self):
        # criterion: 100 randomized contacts with > 2 degree margin, 100% agreement
        rng = np.random.default_rng(42)
        mu = 0.5
        cone = np.arctan(mu)
        checked = 0
        while checked < 100:
            b = random_unit(rng)
            n1 = random_unit(rng)
            n2 = random_unit(rng)
            a1 = np.arccos(np.clip(n1 @ (-b), -1, 1))
            a2 = np.arccos(np.clip(n2 @ b, -1, 1))
            margin = min(abs(a1 - cone), abs(a2 - cone))
            if margin <= np.radians(2):
                continue
            analytic = (a1 <= cone) and (a2 <= cone)
            brute = brute_force_antipodal(n1, n2, b, mu)
            assert analytic == brute
            checked += 1


class TestCastAntipodal:
    def test_sphere_cast_through_center(self):
        fld = sphere_occupancy_field(0.2, dims=64)
        p = np.array([0.2, 0.0, 0.0])
        n = np.array([1.0, 0.0, 0.0])
        p2, w = cast_antipodal(fld, p, n, max_width=0.8)
        assert w == pytest.approx(0.4, abs=fld.min_voxel)
        assert np.allclose(p2, [-0.2, 0, 0], atol=fld.min_voxel)

    def test_cast_misses_when_too_wide(self):
        fld = sphere_occupancy_field(0.45, dims=64)
        p2, w = cast_antipodal(fld, np.array([0.45, 0, 0]),
                               np.array([1.0, 0, 0]), max_width=0.25)
        assert p2 is None


class TestAnnotate:
    @pytest.fixture(scope="class")
    def cyl(self):
        fld, _ = generate_shape(ShapeSpec.cylinder(0.15, 1.0), 64)
        return fld, extract_mesh(fld, 0.5), GripperModel(max_width=0.35)

    def test_budget_met_and_recheck_passes(self, cyl):
        fld, mesh, gripper = cyl
        ann = annotate_source(fld, mesh, gripper, 0.5, budget=200, seed=0)
        assert len(ann) == 200
        for a in ann:
            assert check_grasp(a.grasp, fld, gripper, 0.5).passed

    def test_reach_invariant(self, cyl):
        fld, mesh, gripper = cyl
        ann = annotate_source(fld, mesh, gripper, 0.5, budget=50, seed=1,
                              candidates=2000)
        for a in ann:
            span = np.linalg.norm(a.label.antipodal_point - a.label.point)
            assert span <= gripper.max_width + 1e-9

    def test_deterministic(self, cyl):
        fld, mesh, gripper = cyl
        a1 = annotate_source(fld, mesh, gripper, 0.5, budget=30, seed=2,
                             candidates=1500)
        a2 = annotate_source(fld, mesh, gripper, 0.5, budget=30, seed=2,
                             candidates=1500)
        assert all(np.array_equal(x.grasp.point, y.grasp.point)
                   and np.array_equal(x.grasp.approach, y.grasp.approach)
                   for x, y in zip(a1, a2))

    def test_too_thick_aborts(self):
        spec = ShapeSpec("bowl", {"radius": 0.45, "thickness": 0.45,
                                  "cap_angle": np.pi})
        fld, _ = generate_shape(spec, 48)
        mesh = extract_mesh(fld, 0.5)
        with pytest.raises(UserError, match="feasible"):
            annotate_source(fld, mesh, GripperModel(max_width=0.25), 0.5,
                            budget=50, seed=0, candidates=500)

    def test_annotation_io(self, cyl, tmp_path):
        fld, mesh, gripper = cyl
        ann = annotate_source(fld, mesh, gripper, 0.5, budget=15, seed=3,
                              candidates=1000)
        path = tmp_path / "ann.json"
        save_annotations(ann, path, extra={"config_hash": "x"})
        back = load_annotations(path)
        assert len(back) == len(ann)
        for x, y in zip(ann, back):
            assert np.allclose(x.grasp.point, y.grasp.point)
            assert np.allclose(x.label.antipodal_point, y.label.antipodal_point)


class TestRanking:
    def test_sharp_region_ranks_first(self):
        # piecewise field: sharp transition in +x half, blurred in -x half
        def occ(pts):
            beta = np.where(pts[:, 0] > 0, 0.01, 0.05)
            d = np.abs(pts[:, 2])  # slab around z=0
            return 1.0 / (1.0 + np.exp((d - 0.1) / beta))

        fld = OccupancyField.from_function(occ, [-0.5] * 3, [0.5] * 3, (48,) * 3,
                                           0.01)
        g_sharp = make_grasp([0.3, 0, -0.1], [-1, 0, 0], [0, 1, 0], 0.2)
        g_blur = make_grasp([-0.3, 0, -0.1], [-1, 0, 0], [0, 1, 0], 0.2)
        ranked = rank_and_select([g_blur, g_sharp], fld)
        assert np.allclose(ranked[0].point, g_sharp.point)
        assert ranked[0].confidence > ranked[1].confidence

    def test_ties_keep_input_order(self):
        fld = OccupancyField(np.full((8, 8, 8), 0.5), [-1] * 3, [1] * 3, 0.1)
        g1 = make_grasp([0.1, 0, 0], [0, 0, -1], [0, -1, 0], 0.1)
        g2 = make_grasp([-0.1, 0, 0], [0, 0, -1], [0, -1, 0], 0.1)
        ranked = rank_and_select([g1, g2], fld)
        assert np.allclose(ranked[0].point, g1.point)
        assert np.allclose(ranked[1].point, g2.point)

    def test_invalid_excluded(self):
        fld = OccupancyField(np.full((8, 8, 8), 0.5), [-1] * 3, [1] * 3, 0.1)
        g = make_grasp([0.1, 0, 0], [0, 0, -1], [0, -1, 0], 0.1, q=-1.0)
        assert rank_and_select([g], fld) == []

    def test_mean_combine_option(self):
        fld = sphere_occupancy_field(0.2, dims=32)
        g = make_grasp([-0.2, 0, 0], [0, 0, -1], [0, -1, 0], 0.4)
        c_min = grasp_confidence(g, fld, "min")
        c_mean = grasp_confidence(g, fld, "mean")
        assert c_mean >= c_min


class TestEvaluate:
    @pytest.fixture(scope="class")
    def sphere_setup(self):
        fld = sphere_occupancy_field(0.1, dims=64)
        good = make_grasp([-0.1, 0, 0], [0, 0, -1], [0, -1, 0], 0.2)
        bad = make_grasp([-0.1, 0, 0], [0, 0, -1], [0, -1, 0], 0.12)
        return fld, good, bad

    def test_single_object_ratio(self, sphere_setup):
        fld, good, bad = sphere_setup
        rep = evaluate([("o", [good] * 7 + [bad] * 3, fld)], GripperModel(), 0.5)
        assert rep.s_omni == pytest.approx(0.7, abs=0)
        assert rep.per_object[0].n_succ == 7

    def test_mean_of_ratios_not_pooled(self, sphere_setup):
        fld, good, bad = sphere_setup
        rep = evaluate([("a", [good, good], fld), ("b", [good, bad], fld)],
                       GripperModel(), 0.5)
        assert rep.s_omni == pytest.approx(0.75, abs=0)

    def test_best_grasp_rate(self, sphere_setup):
        fld, good, bad = sphere_setup
        objs = [(f"o{i}", [good, bad], fld) for i in range(9)]
        objs.append(("o9", [bad, good], fld))
        rep = evaluate(objs, GripperModel(), 0.5)
        assert rep.s_best == pytest.approx(0.9, abs=0)

    def test_permutation_invariant(self, sphere_setup):
        fld, good, bad = sphere_setup
        objs = [("a", [good], fld), ("b", [bad], fld), ("c", [good, bad], fld)]
        r1 = evaluate(objs, GripperModel(), 0.5)
        r2 = evaluate(objs[::-1], GripperModel(), 0.5)
        assert r1.s_omni == r2.s_omni and r1.s_best == r2.s_best

    def test_empty_object_counts_zero(self, sphere_setup):
        fld, good, _ = sphere_setup
        rep = evaluate([("a", [good], fld), ("empty", [], fld)], GripperModel(), 0.5)
        assert rep.s_omni == pytest.approx(0.5)
        assert rep.n_cat == 2

    def test_report_io(self, sphere_setup, tmp_path):
        from nsgf.graspkit import save_report_csv, save_report_json
        fld, good, bad = sphere_setup
        rep = evaluate([("a", [good, bad], fld)], GripperModel(), 0.5)
        save_report_json(rep, tmp_path / "r.json", extra={"config_hash": "h"})
        save_report_csv(rep, tmp_path / "r.csv")
        import json
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["s_omni"] == pytest.approx(0.5)
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0].startswith("object,")
        assert len(lines) == 4  # header + 1 object + 2 summary rows
