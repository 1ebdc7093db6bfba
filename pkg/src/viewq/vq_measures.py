"""Viewpoint quality measures over rasterized per-face statistics.

Four measures are computed from the projected-area distribution of one
view and the true-area distribution of the mesh:

* entropy of the projected-area distribution (higher is better),
* visible fraction of the true surface area (higher is better),
* KL divergence from projected to true areas (lower is better),
* KL divergence from a view's distribution to the view-averaged prior
  (lower is better).

All logarithms are natural and 0*log(0) is taken as 0. Per-model maps are
normalized linearly so the worst sampled view maps to 0 and the best to 1.
"""

import logging
import os
from dataclasses import dataclass

import numpy as np

from .errors import EmptyViewError, InconsistentPriorError, MeasureUndefinedError
from .rasterizer import FaceStats, sweep_counts

logger = logging.getLogger(__name__)

MAX_IS_BEST = "max_is_best"
MIN_IS_BEST = "min_is_best"

MEASURES = ("ve", "vr", "vkl", "vmi")
ORIENTATION = {
    "ve": MAX_IS_BEST,
    "vr": MAX_IS_BEST,
    "vkl": MIN_IS_BEST,
    "vmi": MIN_IS_BEST,
}


@dataclass(eq=False)
class VQMap:
    """Raw and normalized per-viewpoint values of one measure on one model.

    Views that could not be evaluated (model out of frame) hold NaN in both
    arrays and can never be best or worst.
    """

    measure: str
    orientation: str
    raw: np.ndarray
    normalized: np.ndarray
    best_index: int
    worst_index: int

    @property
    def n_views(self):
        return self.raw.shape[0]

    def valid(self):
        return ~np.isnan(self.raw)


@dataclass(eq=False)
class FacePrior:
    """Average projected-area probability per face over a view set."""

    p_z: np.ndarray

    def __post_init__(self):
        self.p_z = np.asarray(self.p_z, dtype=np.float64)


def viewpoint_entropy(stats):
    """Shannon entropy of the projected-area distribution of one view."""
    if stats.total_pixels == 0:
        raise EmptyViewError("no pixels covered from this view")
    p = stats.pixel_counts[stats.pixel_counts > 0] / stats.total_pixels
    return float(-np.sum(p * np.log(p))) + 0.0  # avoid -0.0


def visibility_ratio(stats, mesh):
    """Fraction of true surface area belonging to visible faces."""
    return float(mesh.source_areas[stats.visible].sum() / mesh.source_areas.sum())


def viewpoint_kl(stats, mesh):
    """KL divergence from the projected-area to the true-area distribution."""
    if stats.total_pixels == 0:
        raise EmptyViewError("no pixels covered from this view")
    mask = stats.pixel_counts > 0
    areas = mesh.source_areas[mask]
    if np.any(areas == 0.0):
        raise MeasureUndefinedError("a face with zero true area is visible")
    p = stats.pixel_counts[mask] / stats.total_pixels
    a = areas / mesh.source_areas.sum()
    return float(np.sum(p * np.log(p / a)))


def face_prior(stats_all_views):
    """Average the per-view conditionals into the face prior p(z).

    Views with zero covered pixels are skipped.
    """
    conds = [s.conditional() for s in stats_all_views if s.total_pixels > 0]
    if not conds:
        raise EmptyViewError("all views are empty")
    return FacePrior(np.mean(conds, axis=0))


def viewpoint_mi(stats, prior):
    """KL divergence from one view's conditional to the face prior."""
    if stats.total_pixels == 0:
        raise EmptyViewError("no pixels covered from this view")
    mask = stats.pixel_counts > 0
    p = stats.pixel_counts[mask] / stats.total_pixels
    q = prior.p_z[mask]
    if np.any(q == 0.0):
        raise InconsistentPriorError(
            "conditional has mass on a face the prior never saw")
    return float(np.sum(p * np.log(p / q)))


def normalize_map(raw, orientation, measure="custom"):
    """Linearly rescale raw values so the worst view is 0 and the best is 1.

    Ties for best or worst break to the lowest viewpoint index. A constant
    map normalizes to all ones (every view is a best view). NaN entries are
    excluded and stay NaN.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1 or raw.size == 0:
        raise ValueError("raw must be a nonempty 1-d array")
    valid = ~np.isnan(raw)
    if not valid.any():
        raise ValueError("all views are excluded; nothing to normalize")
    vals = np.where(valid, raw, np.nan)
    if orientation == MAX_IS_BEST:
        best = int(np.nanargmax(vals))
        worst = int(np.nanargmin(vals))
    elif orientation == MIN_IS_BEST:
        best = int(np.nanargmin(vals))
        worst = int(np.nanargmax(vals))
    else:
        raise ValueError(f"unknown orientation: {orientation!r}")
    span = raw[best] - raw[worst]
    normalized = np.full_like(raw, np.nan)
    if span == 0.0:
        normalized[valid] = 1.0
    else:
        # + 0.0 turns the worst view's -0.0 into a plain 0.0
        normalized[valid] = (raw[valid] - raw[worst]) / span + 0.0
    return VQMap(measure=measure, orientation=orientation, raw=raw,
                 normalized=normalized, best_index=best, worst_index=worst)


def resolve_threads(threads):
    """0 means auto: VIEWQ_THREADS from the environment, else cpu count."""
    if threads and threads > 0:
        return int(threads)
    env = os.environ.get("VIEWQ_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep_faces(mesh, sphere, resolution, fov=np.pi / 2, threads=0):
    """Pixel counts for every sphere view: (n_views, n_source_faces) int64.

    Deterministic function of (mesh, sphere, resolution, fov) regardless of
    the worker count.
    """
    return sweep_counts(mesh, sphere.viewpoints, resolution, fov,
                        resolve_threads(threads))


def rasterize_views(mesh, sphere, resolution, fov=np.pi / 2, threads=0):
    """Rasterize every view of the sphere, one FaceStats each."""
    counts = sweep_faces(mesh, sphere, resolution, fov, threads)
    return [FaceStats(pixel_counts=row, total_pixels=int(row.sum()),
                      visible=row > 0)
            for row in counts]


def evaluate_model(mesh, sphere, resolution=1024, fov=np.pi / 2, threads=0):
    """Evaluate all four measures over a view sphere with shared rasterization.

    Each view is rasterized once; the same per-face pixel counts feed every
    measure, and the prior for the mutual-information measure is built from
    the same view set. Views covering zero pixels (or seeing a zero-area
    face) are excluded from the prior and the normalization, with a warning.

    Returns a dict mapping measure name to its normalized VQMap.
    """
    counts = sweep_faces(mesh, sphere, resolution, fov, threads)
    n = sphere.n
    totals = counts.sum(axis=1)
    valid = totals > 0
    for i in np.flatnonzero(~valid):
        logger.warning("view %d renders to zero pixels; excluded", i)
    if not valid.any():
        raise EmptyViewError("every view rendered to zero pixels")
    # views seeing a face of zero true area have an undefined divergence
    zero_area = mesh.source_areas == 0.0
    if zero_area.any():
        bad = valid & (counts[:, zero_area] > 0).any(axis=1)
        for i in np.flatnonzero(bad):
            logger.warning("view %d sees a zero-area face; excluded", i)
        valid &= ~bad
        if not valid.any():
            raise MeasureUndefinedError(
                "every view sees a face with zero true area")

    # sparse reduction over the nonzero (view, face) pairs; bincount keeps
    # the summation order fixed so results are independent of threading
    n_src = mesh.n_source_faces
    sub = counts if valid.all() else counts[valid]
    n_valid = sub.shape[0]
    flat = sub.ravel()
    nz = np.flatnonzero(flat)
    row = nz // n_src
    col = nz % n_src
    p = flat[nz] / sub.sum(axis=1)[row]
    logp = np.log(p)
    area_frac = mesh.source_areas / mesh.source_areas.sum()
    log_area = np.log(np.where(zero_area, 1.0, area_frac))
    prior = np.bincount(col, weights=p, minlength=n_src) / n_valid
    log_prior = np.log(np.where(prior > 0.0, prior, 1.0))

    raw = {m: np.full(n, np.nan) for m in MEASURES}
    raw["ve"][valid] = -np.bincount(row, weights=p * logp, minlength=n_valid) + 0.0
    raw["vr"][valid] = np.bincount(row, weights=area_frac[col], minlength=n_valid)
    raw["vkl"][valid] = np.bincount(
        row, weights=p * (logp - log_area[col]), minlength=n_valid)
    raw["vmi"][valid] = np.bincount(
        row, weights=p * (logp - log_prior[col]), minlength=n_valid)
    return {m: normalize_map(raw[m], ORIENTATION[m], m) for m in MEASURES}
