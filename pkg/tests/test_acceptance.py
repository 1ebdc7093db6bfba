"""Acceptance suite.

Each test prints one PASS line per criterion after its assertions hold, so
``pytest -s tests/test_acceptance.py`` reads as a checklist. Timing budgets
are asserted inside the tests; scaling checks use interleaved pairwise CPU
time ratios with medians to stay robust against machine noise.
"""

import math
import statistics
import time

import numpy as np
import pytest

from viewq import fixtures, labelgen
from viewq.cli import main as cli_main
from viewq.dataset import read_record, read_record_csv, sphere_map_image
from viewq.descent_sim import (
    ClusterSpec,
    DescentConfig,
    compare_strategies,
    descend,
    random_inits,
    synth_map,
)
from viewq.face_cleaning import remove_hidden_faces
from viewq.mesh_io import save_off
from viewq.rasterizer import make_camera, rasterize
from viewq.sampling import fibonacci_sphere
from viewq.vq_measures import (
    MAX_IS_BEST,
    MEASURES,
    MIN_IS_BEST,
    ORIENTATION,
    evaluate_model,
    normalize_map,
    viewpoint_entropy,
    viewpoint_kl,
    visibility_ratio,
)

CORNER = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
BIMODAL = [ClusterSpec((0.0, 0.0, 1.0), 0.45, 1.0),
           ClusterSpec((0.35, 0.0, -0.94), 0.45, 0.92)]


def report(n, detail):
    print(f"\nACCEPTANCE {n}: PASS — {detail}")


def test_criterion_1_analytic_cube_oracle():
    cube = fixtures.unit_cube()
    t0 = time.perf_counter()
    on_axis = rasterize(cube, make_camera(cube, (0.0, 0.0, 1.0), 1024))
    ve0 = viewpoint_entropy(on_axis)
    vr0 = visibility_ratio(on_axis, cube)
    kl0 = viewpoint_kl(on_axis, cube)
    corner = rasterize(cube, make_camera(cube, CORNER, 1024))
    ve1 = viewpoint_entropy(corner)
    vr1 = visibility_ratio(corner, cube)
    elapsed = time.perf_counter() - t0
    assert ve0 == 0.0
    assert vr0 == pytest.approx(1.0 / 6.0, rel=0.01)
    assert kl0 == pytest.approx(math.log(6.0), rel=0.01)
    assert vr1 == pytest.approx(0.5, rel=0.01)
    assert ve1 == pytest.approx(math.log(3.0), rel=0.01)
    assert elapsed < 10.0
    report(1, "on-axis VE=%g VR=%.4f VKL=%.4f; corner VE=%.4f VR=%.4f; %.2fs"
           % (ve0, vr0, kl0, ve1, vr1, elapsed))


def test_criterion_2_brute_force_equivalence():
    meshes = {
        "cube_quads": fixtures.unit_cube(),
        "airplane": fixtures.airplane(),
        "uv_sphere_10k": fixtures.explode(fixtures.uv_sphere(102, 50)),
    }
    sphere = fibonacci_sphere(1000)
    t0 = time.perf_counter()
    for name, mesh in meshes.items():
        assert mesh.n_source_faces <= 10000
        maps = evaluate_model(mesh, sphere, 512, threads=8)
        for mname in MEASURES:
            m = maps[mname]
            # independent exhaustive scan over the raw per-view values
            raw = m.raw
            if ORIENTATION[mname] == MAX_IS_BEST:
                expect = int(np.flatnonzero(raw == np.nanmax(raw))[0])
                worst = int(np.flatnonzero(raw == np.nanmin(raw))[0])
            else:
                expect = int(np.flatnonzero(raw == np.nanmin(raw))[0])
                worst = int(np.flatnonzero(raw == np.nanmax(raw))[0])
            assert m.best_index == expect, (name, mname)
            assert m.worst_index == worst, (name, mname)
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    report(2, "argbest of all 4 measures matches the exhaustive scan on 3 "
              "meshes at 1000 views, 512^2; %.1fs" % elapsed)


def test_criterion_3_normalization_contract():
    rng = np.random.default_rng(42)
    for trial in range(100):
        raw = rng.normal(size=int(rng.integers(2, 200))) * rng.uniform(0.01, 50)
        orientation = MAX_IS_BEST if trial % 2 == 0 else MIN_IS_BEST
        m = normalize_map(raw, orientation)
        assert np.nanmax(m.normalized) == 1.0
        assert np.nanmin(m.normalized) == 0.0
        assert np.all((m.normalized >= 0.0) & (m.normalized <= 1.0))
    constant = normalize_map(np.full(17, 3.3), MAX_IS_BEST)
    assert np.all(constant.normalized == 1.0)
    report(3, "100 random maps attain exactly 0 and 1; constant maps to all 1")


def test_criterion_4_resolution_stability_and_timing_scaling():
    airplane = fixtures.airplane()
    sphere = fibonacci_sphere(1000)
    lo = evaluate_model(airplane, sphere, 512, threads=8)
    hi = evaluate_model(airplane, sphere, 1024, threads=8)
    a, b = lo["ve"].best_index, hi["ve"].best_index
    geo = math.acos(np.clip(sphere.viewpoints[a] @ sphere.viewpoints[b], -1, 1))
    two_spacings = math.radians(7.2)
    assert geo <= two_spacings

    # scaling substitutes for the hardware-bound absolute timings: CPU-time
    # ratios from interleaved pairs, medians over 9 pairs. Faces dominate the
    # cost only when triangles are subpixel, hence the small raster size for
    # the face-linearity check; the view check runs at 48^2.
    m1k = fixtures.explode(fixtures.uv_sphere(22, 25))
    m10k = fixtures.explode(fixtures.uv_sphere(102, 50))
    sph500 = fibonacci_sphere(500)

    def cpu(mesh, sph, res):
        t0 = time.process_time()
        evaluate_model(mesh, sph, res, threads=1)
        return time.process_time() - t0

    view_ratios = [cpu(m10k, sphere, 48) / cpu(m10k, sph500, 48) for _ in range(9)]
    view_ratio = statistics.median(view_ratios)
    assert 1.8 <= view_ratio <= 2.2

    face_ratios = [cpu(m10k, sphere, 12) / cpu(m1k, sphere, 12) for _ in range(9)]
    face_ratio = statistics.median(face_ratios)
    assert 7.0 <= face_ratio <= 13.0  # 10x +- 30%
    report(4, "VE argmax moved %.2f deg (<= 7.2); time(1000v)/time(500v)=%.2f; "
              "time(10k faces)/time(1k faces)=%.2f" % (math.degrees(geo),
                                                       view_ratio, face_ratio))


def test_criterion_5_label_machinery_exact():
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    sphere = fibonacci_sphere(1000)
    vq = synth_map(BIMODAL, sphere)

    labels = labelgen.build_label_set(vq, sphere, 0.95)
    for _ in range(100):
        pred = rng.normal(size=3)
        pred /= np.linalg.norm(pred)
        loss, idx = labelgen.ml_loss(pred, labels)
        p = pred / np.linalg.norm(pred)
        best_loss, best_idx = None, None
        for j in labels.indices:
            v = sphere.viewpoints[j]
            cand = 1.0 - (v[0] * p[0] + v[1] * p[1] + v[2] * p[2])
            if best_loss is None or cand < best_loss:
                best_loss, best_idx = float(cand), int(j)
        assert (loss, idx) == (best_loss, best_idx)

    for _ in range(100):
        pred = rng.normal(size=3)
        pred /= np.linalg.norm(pred)
        idx, _ = labelgen.gl_target(pred, vq, sphere)
        p = pred / np.linalg.norm(pred)
        best_val, best_idx = None, None
        for j in range(sphere.n):
            d = math.sqrt((sphere.viewpoints[j, 0] - p[0]) ** 2
                          + (sphere.viewpoints[j, 1] - p[1]) ** 2
                          + (sphere.viewpoints[j, 2] - p[2]) ** 2)
            val = vq.normalized[j] * (math.exp(-d / 8.0) + 1.0)
            if best_val is None or val > best_val:
                best_val, best_idx = val, j
        assert idx == best_idx

    sets = [set(labelgen.build_label_set(vq, sphere, a).indices.tolist())
            for a in (0.9, 0.95, 0.99, 1.0)]
    for tighter, looser in zip(sets[1:], sets[:-1]):
        assert tighter <= looser
    assert len(sets[-1]) >= 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    report(5, "ml_loss and gl_target match exhaustive scans on 100 random "
              "predictions; label sets nest over alpha; %.1fs" % elapsed)


def test_criterion_6_two_stage_dynamics():
    t0 = time.perf_counter()
    sphere = fibonacci_sphere(1000)
    vq = synth_map(BIMODAL, sphere)
    config = DescentConfig(seed=0)
    rep = compare_strategies(vq, sphere, config, 100, adversarial_sl=True)
    s = rep.strategies
    assert s["ml+gl"].mean_final_quality >= s["gl"].mean_final_quality
    assert s["gl"].mean_final_quality >= s["sl"].mean_final_quality
    assert s["ml+gl"].mean_final_quality >= 0.95
    assert s["sl"].mean_final_quality <= 0.85

    # fixed point of the refinement stage: at the converged prediction the
    # chosen label's tangent component is below tolerance
    for init in random_inits(5, 123):
        traj = descend(vq, sphere, config, init, "ml+gl")
        v = traj.final
        idx, _ = labelgen.gl_target(v, vq, sphere)
        target = sphere.viewpoints[idx]
        tangent = target - (v @ target) * v
        assert np.linalg.norm(tangent) < 1e-3
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    report(6, "ml+gl %.3f >= gl %.3f >= sl %.3f over 100 inits; fixed-point "
              "check passed; %.1fs" % (s["ml+gl"].mean_final_quality,
                                       s["gl"].mean_final_quality,
                                       s["sl"].mean_final_quality, elapsed))


def test_criterion_7_hidden_face_removal():
    t0 = time.perf_counter()
    nested = fixtures.nested_cubes()
    cleaned, removed = remove_hidden_faces(nested, n_views=1000, resolution=512)
    assert sorted(removed.tolist()) == list(range(12, 24))
    assert cleaned.n_source_faces == 12

    convex = fixtures.icosphere(2)
    _, removed_convex = remove_hidden_faces(convex, n_views=1000, resolution=512)
    assert removed_convex.size == 0

    _, removed_again = remove_hidden_faces(cleaned, n_views=1000, resolution=512)
    assert removed_again.size == 0
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    report(7, "nested cube: 12 interior faces removed; convex: none; "
              "idempotent; %.1fs" % elapsed)


def test_criterion_8_persistence(tmp_path):
    from tests.test_dataset import random_record, records_equal
    from viewq.dataset import write_record

    rng = np.random.default_rng(888)
    for i in range(10):
        rec = random_record(rng, n_views=int(rng.integers(10, 200)))
        path = tmp_path / f"rec{i}.json"
        write_record(rec, path)
        assert records_equal(rec, read_record(path))
        assert records_equal(rec, read_record_csv(tmp_path / f"rec{i}.csv"))

    from scipy import ndimage

    sphere = fibonacci_sphere(1000)
    vq = synth_map([ClusterSpec((0.0, 1.0, 0.0), 0.4, 1.0),
                    ClusterSpec((0.0, -1.0, 0.0), 0.4, 1.0)], sphere)
    img = sphere_map_image(vq, sphere, "mercator", (256, 128))
    _, n_components = ndimage.label(img > 0.99)
    assert n_components == 2
    report(8, "10 randomized records round-trip bit-exact in JSON and CSV; "
              "two-cluster map exports exactly 2 bright regions")


def test_criterion_9_thread_determinism(tmp_path, capsys):
    mesh_path = tmp_path / "icosphere3.off"
    save_off(fixtures.icosphere(3), mesh_path)
    out1 = tmp_path / "t1.json"
    out8 = tmp_path / "t8.json"
    assert cli_main(["sample-vq", str(mesh_path), "-o", str(out1),
                     "--views", "1000", "--resolution", "256",
                     "--threads", "1"]) == 0
    assert cli_main(["sample-vq", str(mesh_path), "-o", str(out8),
                     "--views", "1000", "--resolution", "256",
                     "--threads", "8"]) == 0
    assert out1.read_bytes() == out8.read_bytes()
    assert (tmp_path / "t1.csv").read_bytes() == (tmp_path / "t8.csv").read_bytes()
    report(9, "--threads 1 and --threads 8 wrote byte-identical records")
