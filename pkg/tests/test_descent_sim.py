import numpy as np
import pytest

from viewq import labelgen
from viewq.descent_sim import (
    ClusterSpec,
    DescentConfig,
    compare_strategies,
    conflicting_sl_labels,
    descend,
    final_quality,
    random_inits,
    synth_map,
)
from viewq.sampling import fibonacci_sphere
from viewq.vq_measures import MAX_IS_BEST, normalize_map

BIMODAL = [ClusterSpec((0.0, 0.0, 1.0), 0.45, 1.0),
           ClusterSpec((0.35, 0.0, -0.94), 0.45, 0.92)]


@pytest.fixture(scope="module")
def sphere():
    return fibonacci_sphere(1000)


@pytest.fixture(scope="module")
def bimodal(sphere):
    return synth_map(BIMODAL, sphere)


def single_label_map(sphere, direction):
    raw = np.zeros(sphere.n)
    best = int(np.argmax(sphere.viewpoints @ np.asarray(direction, dtype=float)))
    raw[best] = 1.0
    return normalize_map(raw, MAX_IS_BEST), best


def test_single_label_descent_converges(sphere):
    vq, best = single_label_map(sphere, (0.0, 0.0, 1.0))
    cfg = DescentConfig(total_steps=200, switch_step=200, learning_rate=0.1)
    traj = descend(vq, sphere, cfg, (1.0, 0.0, 0.0), "sl", sl_labels=(best,))
    assert np.all(np.diff(traj.losses) <= 1e-12)  # monotone decrease
    geo = np.arccos(np.clip(traj.final @ sphere.viewpoints[best], -1.0, 1.0))
    assert geo < 0.01


def test_descent_constant_at_label(sphere):
    vq, best = single_label_map(sphere, (0.0, 0.0, 1.0))
    cfg = DescentConfig(total_steps=50, switch_step=50)
    traj = descend(vq, sphere, cfg, sphere.viewpoints[best], "sl", sl_labels=(best,))
    assert np.allclose(traj.positions, sphere.viewpoints[best])


def test_descent_stays_on_sphere(sphere, bimodal):
    cfg = DescentConfig(total_steps=100, switch_step=50, learning_rate=0.3)
    traj = descend(bimodal, sphere, cfg, (1.0, 0.0, 0.0))
    norms = np.linalg.norm(traj.positions, axis=1)
    assert np.abs(norms - 1.0).max() < 1e-9


def test_ml_loss_nonincreasing_small_lr(sphere, bimodal):
    cfg = DescentConfig(total_steps=300, switch_step=300, learning_rate=0.05)
    traj = descend(bimodal, sphere, cfg, (0.9, 0.1, -0.42), "ml")
    assert np.all(np.diff(traj.losses) <= 1e-12)


def test_descent_deterministic(sphere, bimodal):
    cfg = DescentConfig(seed=5)
    init = random_inits(1, 5)[0]
    a = descend(bimodal, sphere, cfg, init)
    b = descend(bimodal, sphere, cfg, init)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.losses, b.losses)
    assert np.array_equal(a.chosen, b.chosen)


def test_stage_schedule(sphere, bimodal):
    cfg = DescentConfig(total_steps=10, switch_step=4)
    traj = descend(bimodal, sphere, cfg, (1.0, 0.0, 0.0))
    stages = [s.stage for s in traj.states]
    assert stages[:4] == ["ML"] * 4
    assert stages[4:] == ["GL"] * 7


def test_synth_map_argbest_near_center(sphere):
    vq = synth_map([ClusterSpec((0.0, 0.0, 1.0), 0.3, 1.0)], sphere)
    nearest = int(np.argmax(sphere.viewpoints[:, 2]))
    assert vq.best_index == nearest


def test_synth_map_two_equal_clusters_label_set(sphere):
    vq = synth_map([ClusterSpec((0.0, 0.0, 1.0), 0.5, 1.0),
                    ClusterSpec((0.0, 0.0, -1.0), 0.5, 1.0)], sphere)
    labels = labelgen.build_label_set(vq, sphere, 0.99)
    zs = sphere.viewpoints[labels.indices, 2]
    assert (zs > 0.9).any() and (zs < -0.9).any()


def test_synth_map_low_peak_normalizes_to_one(sphere):
    vq = synth_map([ClusterSpec((0.0, 0.0, 1.0), 0.3, 0.5)], sphere)
    assert vq.normalized[vq.best_index] == 1.0


def test_synth_map_validation(sphere):
    with pytest.raises(ValueError):
        synth_map([], sphere)
    with pytest.raises(ValueError):
        synth_map([ClusterSpec((0, 0, 1), 0.3, 1.5)], sphere)
    with pytest.raises(ValueError):
        synth_map([ClusterSpec((0, 0, 1), -1.0, 0.5)], sphere)


def test_conflicting_labels_come_from_opposite_hemispheres(sphere, bimodal):
    pair = conflicting_sl_labels(bimodal, sphere)
    assert len(pair) == 2
    a, b = pair
    assert sphere.viewpoints[a] @ sphere.viewpoints[b] < 0.0
    assert a == bimodal.best_index


def test_two_stage_beats_adversarial_sl(sphere, bimodal):
    cfg = DescentConfig(seed=3)
    pair = conflicting_sl_labels(bimodal, sphere)
    for init in random_inits(20, 3):
        combined = descend(bimodal, sphere, cfg, init, "ml+gl")
        conflicted = descend(bimodal, sphere, cfg, init, "sl", sl_labels=pair)
        assert final_quality(combined, bimodal, sphere) >= final_quality(
            conflicted, bimodal, sphere)


def test_compare_strategies_unimodal_all_good(sphere):
    vq = synth_map([ClusterSpec((0.3, 0.5, 0.81), 0.5, 1.0)], sphere)
    cfg = DescentConfig(seed=11)
    report = compare_strategies(vq, sphere, cfg, 10)
    for name, stats in report.strategies.items():
        assert stats.mean_final_quality >= 0.99, name


def test_compare_strategies_empty(sphere, bimodal):
    report = compare_strategies(bimodal, sphere, DescentConfig(), 0)
    assert report.n_inits == 0
    assert report.strategies == {}


def test_gl_fixed_point(sphere, bimodal):
    cfg = DescentConfig()
    for init in random_inits(5, 13):
        traj = descend(bimodal, sphere, cfg, init, "ml+gl")
        v = traj.final
        idx, _ = labelgen.gl_target(v, bimodal, sphere)
        target = sphere.viewpoints[idx]
        tangent = target - (v @ target) * v
        assert np.linalg.norm(tangent) < 1e-3


def test_trajectory_csv(tmp_path, sphere, bimodal):
    cfg = DescentConfig(total_steps=20, switch_step=10)
    traj = descend(bimodal, sphere, cfg, (0.0, 1.0, 0.0))
    path = tmp_path / "traj.csv"
    traj.to_csv(path, bimodal, sphere)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,x,y,z,stage,loss,nearest_vq"
    assert len(lines) == 22  # header + initial state + 20 steps
    fields = lines[1].split(",")
    assert fields[4] == "ML"
    assert len(fields) == 7


def test_config_validation():
    with pytest.raises(ValueError):
        DescentConfig(total_steps=10, switch_step=11)


def test_unknown_strategy(sphere, bimodal):
    with pytest.raises(ValueError):
        descend(bimodal, sphere, DescentConfig(), (0, 0, 1), "bogus")
