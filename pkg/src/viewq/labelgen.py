"""Label selection and losses for viewpoint supervision.

Three supervision modes over a normalized quality map:

* single fixed label with a cosine loss,
* multi-label: cosine loss to the nearest member of the set of views whose
  normalized quality reaches a threshold,
* proximity-weighted label: the quality map is reweighted by a shifted
  exponential kernel around the current prediction and the argmax becomes
  the label. The additive shift keeps distant high quality views in play.

The kernel exponent is linear in the chord distance, exp(-d / (2*sigma^2)),
with defaults sigma=2, shift=1; a squared-distance variant is available
behind the ``squared`` flag.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class GaussianParams:
    sigma: float = 2.0
    shift: float = 1.0
    squared: bool = False


@dataclass(eq=False)
class LabelSet:
    """Viewpoints whose normalized quality reaches the alpha threshold."""

    alpha: float
    indices: np.ndarray  # ascending viewpoint indices
    vectors: np.ndarray  # (k, 3) unit vectors


def _unit(v, name="vector"):
    v = np.asarray(v, dtype=np.float64).reshape(3)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError(f"{name} has zero norm")
    return v / n


def cosine_loss(pred, label):
    """1 - cos of the angle between pred and label; in [0, 2]."""
    return float(1.0 - _unit(pred, "pred") @ _unit(label, "label"))


def build_label_set(vq_map, sphere, alpha):
    """Exact thresholding of the normalized map at alpha.

    Never empty for alpha <= 1: the best view always qualifies.
    """
    with np.errstate(invalid="ignore"):
        mask = vq_map.normalized >= alpha
    indices = np.flatnonzero(mask)
    return LabelSet(alpha=float(alpha), indices=indices,
                    vectors=sphere.viewpoints[indices])


def ml_loss(pred, labels):
    """Cosine loss to the closest label in the set.

    Returns (loss, viewpoint index of the chosen label); ties break to the
    lowest viewpoint index.
    """
    if labels.indices.size == 0:
        raise ValueError("label set is empty")
    p = _unit(pred, "pred")
    v = labels.vectors
    # elementwise form keeps the accumulation order of a plain scalar dot
    losses = 1.0 - (v[:, 0] * p[0] + v[:, 1] * p[1] + v[:, 2] * p[2])
    k = int(np.argmin(losses))  # first minimum = lowest viewpoint index
    return float(losses[k]), int(labels.indices[k])


def gl_weights(pred, vq_map, sphere, params=GaussianParams()):
    """Quality map reweighted by the shifted proximity kernel around pred."""
    p = _unit(pred, "pred")
    d = np.linalg.norm(sphere.viewpoints - p, axis=1)
    if params.squared:
        d = d * d
    kernel = np.exp(-d / (2.0 * params.sigma ** 2)) + params.shift
    return vq_map.normalized * kernel


def gl_target(pred, vq_map, sphere, params=GaussianParams()):
    """Label maximizing the proximity-weighted quality.

    Returns (viewpoint index, weighted values); ties break to the lowest
    viewpoint index, NaN entries (excluded views) never win.
    """
    weighted = gl_weights(pred, vq_map, sphere, params)
    safe = np.where(np.isnan(weighted), -np.inf, weighted)
    return int(np.argmax(safe)), weighted


def gl_loss(pred, vq_map, sphere, params=GaussianParams()):
    """Cosine loss to the proximity-weighted label."""
    idx, _ = gl_target(pred, vq_map, sphere, params)
    return cosine_loss(pred, sphere.viewpoints[idx])
