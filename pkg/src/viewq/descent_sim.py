"""Gradient descent of a prediction point on the unit sphere.

A network-free stand-in for training: a single prediction vector descends
the label losses by tangent-projected gradient steps with renormalization.
The label is treated as constant within a step, as a training loop would
treat a detached target. Strategies:

* ``sl``: one fixed label chosen at step 0. With a conflicting label pair
  (adversarial supervision) the labels alternate per step, which models a
  dataset assigning different labels to similar inputs.
* ``ml``: per-step nearest label from the thresholded label set.
* ``gl``: per-step proximity-weighted argmax label.
* ``ml+gl``: ml until ``switch_step``, then gl. The first stage moves the
  prediction to a high quality cluster, the second refines toward the
  cluster's maximum.
"""

from dataclasses import dataclass, field

import numpy as np

from . import labelgen
from .vq_measures import MAX_IS_BEST, normalize_map

STRATEGIES = ("sl", "ml", "gl", "ml+gl")


@dataclass
class DescentConfig:
    total_steps: int = 400
    switch_step: int = 200
    learning_rate: float = 0.05
    alpha: float = 0.99
    sigma: float = 2.0
    shift: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.switch_step > self.total_steps:
            raise ValueError("switch_step must not exceed total_steps")


@dataclass(eq=False)
class PredictionState:
    v_hat: np.ndarray
    stage: str
    step: int


@dataclass(eq=False)
class Trajectory:
    states: list            # length total_steps + 1, initial state first
    losses: np.ndarray      # (total_steps,) loss before each update
    chosen: np.ndarray      # (total_steps,) viewpoint index of the label used

    @property
    def positions(self):
        return np.array([s.v_hat for s in self.states])

    @property
    def final(self):
        return self.states[-1].v_hat

    def to_csv(self, path, vq_map, sphere):
        """step, x, y, z, stage, loss, normalized quality of nearest view."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("step,x,y,z,stage,loss,nearest_vq\n")
            for i, st in enumerate(self.states):
                loss = self.losses[i] if i < len(self.losses) else self.losses[-1]
                nearest = int(np.argmax(sphere.viewpoints @ st.v_hat))
                fh.write("%d,%.17g,%.17g,%.17g,%s,%.17g,%.17g\n" % (
                    st.step, st.v_hat[0], st.v_hat[1], st.v_hat[2],
                    st.stage, loss, vq_map.normalized[nearest]))


def _normalize(v):
    return v / np.linalg.norm(v)


def default_sl_label(vq_map):
    """Fixed label for plain single-label descent: the best view."""
    return vq_map.best_index


def conflicting_sl_labels(vq_map, sphere):
    """A pair of high quality labels from opposite hemispheres.

    Stands in for a dataset that annotates similar models with different
    best views: the primary label is the global best, the conflicting one
    is the best view with a negative dot product against it.
    """
    best = vq_map.best_index
    opposite = sphere.viewpoints @ sphere.viewpoints[best] < 0.0
    if not opposite.any():
        return (best,)
    vals = np.where(opposite, np.nan_to_num(vq_map.normalized, nan=-np.inf), -np.inf)
    return (best, int(np.argmax(vals)))


def descend(vq_map, sphere, config, init, strategy="ml+gl", sl_labels=None):
    """Run one descent trajectory.

    Args:
        init: initial unit prediction.
        strategy: one of ``sl``, ``ml``, ``gl``, ``ml+gl``.
        sl_labels: viewpoint indices cycled per step by the ``sl`` strategy;
            defaults to the map's best view.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    v_hat = _normalize(np.asarray(init, dtype=np.float64).reshape(3))
    labels = labelgen.build_label_set(vq_map, sphere, config.alpha)
    params = labelgen.GaussianParams(sigma=config.sigma, shift=config.shift)
    if strategy == "sl" and sl_labels is None:
        sl_labels = (default_sl_label(vq_map),)

    def stage_at(step):
        if strategy == "ml+gl":
            return "ML" if step < config.switch_step else "GL"
        return {"sl": "SL", "ml": "ML", "gl": "GL"}[strategy]

    states = [PredictionState(v_hat.copy(), stage_at(0), 0)]
    losses = np.empty(config.total_steps)
    chosen = np.empty(config.total_steps, dtype=np.int64)
    for step in range(config.total_steps):
        stage = stage_at(step)
        if stage == "SL":
            idx = int(sl_labels[step % len(sl_labels)])
            loss = labelgen.cosine_loss(v_hat, sphere.viewpoints[idx])
        elif stage == "ML":
            loss, idx = labelgen.ml_loss(v_hat, labels)
        else:
            idx, _ = labelgen.gl_target(v_hat, vq_map, sphere, params)
            loss = labelgen.cosine_loss(v_hat, sphere.viewpoints[idx])
        target = sphere.viewpoints[idx]
        tangent = target - (v_hat @ target) * v_hat
        v_hat = _normalize(v_hat + config.learning_rate * tangent)
        losses[step] = loss
        chosen[step] = idx
        states.append(PredictionState(v_hat.copy(), stage_at(step + 1), step + 1))
    return Trajectory(states, losses, chosen)


@dataclass
class ClusterSpec:
    center: tuple   # direction of the cluster peak (normalized internally)
    width: float    # angular width in radians
    peak: float     # raw peak height in (0, 1]


def synth_map(clusters, sphere):
    """Synthetic quality map from gaussian bumps on the sphere.

    Raw value at a view is the max over clusters of
    peak * exp(-(geodesic / width)^2), then normalized like any map.
    """
    if not clusters:
        raise ValueError("need at least one cluster")
    raw = np.zeros(sphere.n)
    for c in clusters:
        if not (0.0 < c.peak <= 1.0):
            raise ValueError(f"peak must be in (0, 1], got {c.peak}")
        if c.width <= 0.0:
            raise ValueError(f"width must be positive, got {c.width}")
        center = np.asarray(c.center, dtype=np.float64)
        center = center / np.linalg.norm(center)
        geo = np.arccos(np.clip(sphere.viewpoints @ center, -1.0, 1.0))
        np.maximum(raw, c.peak * np.exp(-((geo / c.width) ** 2)), out=raw)
    return normalize_map(raw, MAX_IS_BEST, "synthetic")


def random_inits(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass
class StrategyStats:
    mean_final_quality: float
    mean_convergence_step: float
    mean_final_loss: float
    # distance from the prediction at the end of the ML stage to the label
    # it was converging to; only meaningful for ml and ml+gl
    mean_ml_end_label_distance: float = float("nan")

    def to_dict(self):
        return {
            "mean_final_quality": self.mean_final_quality,
            "mean_convergence_step": self.mean_convergence_step,
            "mean_final_loss": self.mean_final_loss,
            "mean_ml_end_label_distance": self.mean_ml_end_label_distance,
        }


@dataclass
class ComparisonReport:
    n_inits: int
    strategies: dict = field(default_factory=dict)  # name -> StrategyStats

    def to_dict(self):
        return {
            "n_inits": self.n_inits,
            "strategies": {k: v.to_dict() for k, v in self.strategies.items()},
        }


def final_quality(trajectory, vq_map, sphere):
    """Normalized quality of the sampled view nearest the final prediction."""
    nearest = int(np.argmax(sphere.viewpoints @ trajectory.final))
    return float(vq_map.normalized[nearest])


def _convergence_step(trajectory, tol=1e-3):
    pos = trajectory.positions
    dist = np.linalg.norm(pos - pos[-1], axis=1)
    inside = dist <= tol
    # first step after which the trajectory stays within tol of its endpoint
    for i in range(len(inside)):
        if inside[i:].all():
            return i
    return len(inside) - 1


def compare_strategies(vq_map, sphere, config, n_inits, adversarial_sl=False):
    """Run all strategies from identical seeded initializations.

    With ``adversarial_sl`` the single-label runs cycle a conflicting label
    pair from opposite hemispheres instead of the plain best view.
    """
    report = ComparisonReport(n_inits=n_inits)
    if n_inits == 0:
        return report
    inits = random_inits(n_inits, config.seed)
    sl_labels = (conflicting_sl_labels(vq_map, sphere) if adversarial_sl
                 else (default_sl_label(vq_map),))
    for strategy in STRATEGIES:
        quals = np.empty(n_inits)
        steps = np.empty(n_inits)
        flosses = np.empty(n_inits)
        ml_end_d = []
        for i in range(n_inits):
            traj = descend(vq_map, sphere, config, inits[i], strategy,
                           sl_labels=sl_labels if strategy == "sl" else None)
            quals[i] = final_quality(traj, vq_map, sphere)
            steps[i] = _convergence_step(traj)
            flosses[i] = traj.losses[-1]
            if strategy in ("ml", "ml+gl"):
                end = config.total_steps if strategy == "ml" else config.switch_step
                if end > 0:
                    pos = traj.states[end].v_hat
                    label = sphere.viewpoints[traj.chosen[end - 1]]
                    ml_end_d.append(np.linalg.norm(pos - label))
        report.strategies[strategy] = StrategyStats(
            mean_final_quality=float(quals.mean()),
            mean_convergence_step=float(steps.mean()),
            mean_final_loss=float(flosses.mean()),
            mean_ml_end_label_distance=float(np.mean(ml_end_d)) if ml_end_d else float("nan"),
        )
    return report
