"""Persistence of per-model viewpoint quality data and sphere-map export.

The authoritative format is a JSON document with a fixed key order and
17-significant-digit floats, so write/read round trips are bit-exact. A
sibling CSV (one row per viewpoint) is written for analysis tools and can
be read back as well. Quality maps can be exported as grayscale images in
Mercator or equirectangular projection, with each pixel taking the value
of the nearest sampled viewpoint.

JSON schema (top-level key order is fixed):

    format          "viewq-record"
    version         integer schema version
    engine_version  package version that produced the record
    model_id        string
    n_views         viewpoint count
    camera          {resolution: [w, h], fov_degrees, distance_rule}
    sphere          {layout: "fibonacci-offset-half", n}
    measures        {ve|vr|vkl|vmi: {orientation, best_index, worst_index,
                     raw: [...], normalized: [...]}}

Excluded views are stored as null and read back as NaN.
"""

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import RecordFormatError
from .vq_measures import MEASURES, ORIENTATION

logger = logging.getLogger(__name__)

FORMAT_NAME = "viewq-record"
SCHEMA_VERSION = 1
CSV_COLUMNS = ("index", "x", "y", "z",
               "ve_raw", "ve_norm", "vr_raw", "vr_norm",
               "vkl_raw", "vkl_norm", "vmi_raw", "vmi_norm")


@dataclass(eq=False)
class MeasureValues:
    orientation: str
    raw: np.ndarray
    normalized: np.ndarray
    best_index: int
    worst_index: int


@dataclass(eq=False)
class CameraMeta:
    resolution: tuple
    fov_degrees: float
    distance_rule: str = "half-bbox-diagonal"


@dataclass(eq=False)
class ModelRecord:
    model_id: str
    n_views: int
    camera: CameraMeta
    measures: dict = field(default_factory=dict)  # name -> MeasureValues
    engine_version: str = __version__


def record_from_maps(model_id, maps, camera_meta):
    """Assemble a record from evaluate_model output."""
    rec = ModelRecord(model_id=model_id,
                      n_views=next(iter(maps.values())).n_views,
                      camera=camera_meta)
    for name in MEASURES:
        m = maps[name]
        rec.measures[name] = MeasureValues(
            orientation=m.orientation,
            raw=np.asarray(m.raw, dtype=np.float64),
            normalized=np.asarray(m.normalized, dtype=np.float64),
            best_index=m.best_index,
            worst_index=m.worst_index,
        )
    return rec


def validate_record(record):
    if not record.measures:
        raise RecordFormatError("record has no measures")
    for name, mv in record.measures.items():
        for kind in ("raw", "normalized"):
            vals = getattr(mv, kind)
            if len(vals) != record.n_views:
                raise RecordFormatError(
                    f"measures.{name}.{kind}: length {len(vals)} != n_views {record.n_views}")
        norm = np.asarray(mv.normalized, dtype=np.float64)
        ok = np.isnan(norm) | ((norm >= -1e-12) & (norm <= 1.0 + 1e-12))
        if not ok.all():
            raise RecordFormatError(f"measures.{name}.normalized: values outside [0, 1]")
        if not (0 <= mv.best_index < record.n_views):
            raise RecordFormatError(f"measures.{name}.best_index out of range")
        if not (0 <= mv.worst_index < record.n_views):
            raise RecordFormatError(f"measures.{name}.worst_index out of range")


def _fnum(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % (x + 0.0)  # canonicalize -0.0, which JSON reads as int 0


def _emit(obj):
    if isinstance(obj, dict):
        parts = (json.dumps(str(k)) + ": " + _emit(v) for k, v in obj.items())
        return "{" + ", ".join(parts) + "}"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_emit(v) for v in obj) + "]"
    return _fnum(obj)


def record_to_dict(record):
    return {
        "format": FORMAT_NAME,
        "version": SCHEMA_VERSION,
        "engine_version": record.engine_version,
        "model_id": record.model_id,
        "n_views": record.n_views,
        "camera": {
            "resolution": [int(v) for v in record.camera.resolution],
            "fov_degrees": float(record.camera.fov_degrees),
            "distance_rule": record.camera.distance_rule,
        },
        "sphere": {"layout": "fibonacci-offset-half", "n": record.n_views},
        "measures": {
            name: {
                "orientation": mv.orientation,
                "best_index": int(mv.best_index),
                "worst_index": int(mv.worst_index),
                "raw": [None if math.isnan(v) else float(v) for v in mv.raw],
                "normalized": [None if math.isnan(v) else float(v) for v in mv.normalized],
            }
            for name, mv in record.measures.items()
        },
    }


def write_record(record, path, csv_sidecar=True):
    """Write the JSON record and (by default) its CSV sidecar."""
    validate_record(record)
    text = _emit(record_to_dict(record)) + "\n"
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        if csv_sidecar:
            write_record_csv(record, _csv_path(path))
    except OSError as exc:
        raise OSError(f"failed writing record to {path}: {exc}") from exc


def _csv_path(path):
    path = str(path)
    stem = path[:-5] if path.endswith(".json") else path
    return stem + ".csv"


def _require(mapping, key, where="record"):
    if key not in mapping:
        raise RecordFormatError(f"{where}: missing key {key!r}")
    return mapping[key]


def read_record(path):
    """Read a JSON record; schema violations name the offending key."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"{path}: not valid JSON: {exc}") from exc
    if _require(doc, "format") != FORMAT_NAME:
        raise RecordFormatError(f"format: expected {FORMAT_NAME!r}, got {doc['format']!r}")
    if _require(doc, "version") != SCHEMA_VERSION:
        logger.warning("%s: schema version %s, expected %s",
                       path, doc["version"], SCHEMA_VERSION)
    cam = _require(doc, "camera")
    camera = CameraMeta(
        resolution=tuple(_require(cam, "resolution", "camera")),
        fov_degrees=float(_require(cam, "fov_degrees", "camera")),
        distance_rule=_require(cam, "distance_rule", "camera"),
    )
    record = ModelRecord(
        model_id=_require(doc, "model_id"),
        n_views=int(_require(doc, "n_views")),
        camera=camera,
        engine_version=_require(doc, "engine_version"),
    )
    measures = _require(doc, "measures")
    for name, body in measures.items():
        where = f"measures.{name}"

        def arr(key):
            vals = _require(body, key, where)
            return np.array([np.nan if v is None else float(v) for v in vals])

        record.measures[name] = MeasureValues(
            orientation=_require(body, "orientation", where),
            raw=arr("raw"),
            normalized=arr("normalized"),
            best_index=int(_require(body, "best_index", where)),
            worst_index=int(_require(body, "worst_index", where)),
        )
    validate_record(record)
    return record


def write_record_csv(record, path):
    """CSV sidecar: metadata in '#' comments, one row per viewpoint.

    Viewpoint coordinates are regenerated from the declared Fibonacci
    layout. Excluded views have empty value cells.
    """
    from .sampling import fibonacci_sphere

    validate_record(record)
    views = fibonacci_sphere(record.n_views).viewpoints

    def cell(v):
        return "" if math.isnan(v) else "%.17g" % (v + 0.0)

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# format={FORMAT_NAME} version={SCHEMA_VERSION}\n")
        fh.write(f"# engine_version={record.engine_version}\n")
        fh.write(f"# model_id={record.model_id}\n")
        fh.write(f"# n_views={record.n_views}\n")
        fh.write("# camera_resolution=%dx%d fov_degrees=%.17g distance_rule=%s\n" % (
            record.camera.resolution[0], record.camera.resolution[1],
            record.camera.fov_degrees, record.camera.distance_rule))
        for name in MEASURES:
            mv = record.measures[name]
            fh.write("# %s orientation=%s best_index=%d worst_index=%d\n" % (
                name, mv.orientation, mv.best_index, mv.worst_index))
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(record.n_views):
            row = [str(i), "%.17g" % views[i, 0], "%.17g" % views[i, 1], "%.17g" % views[i, 2]]
            for name in MEASURES:
                mv = record.measures[name]
                row.append(cell(mv.raw[i]))
                row.append(cell(mv.normalized[i]))
            fh.write(",".join(row) + "\n")


def read_record_csv(path):
    """Rebuild a record from the CSV sidecar."""
    meta = {}
    measures_meta = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] in MEASURES:
                    entries = dict(p.split("=", 1) for p in parts[1:])
                    measures_meta[parts[0]] = entries
                else:
                    for p in parts:
                        if "=" in p:
                            k, v = p.split("=", 1)
                            meta[k] = v
            elif line and not line.startswith("index,"):
                rows.append(line.split(","))
    for key in ("model_id", "n_views", "camera_resolution", "fov_degrees"):
        if key not in meta:
            raise RecordFormatError(f"{path}: missing metadata {key!r}")
    n_views = int(meta["n_views"])
    if len(rows) != n_views:
        raise RecordFormatError(f"{path}: {len(rows)} rows for n_views={n_views}")
    w, h = meta["camera_resolution"].split("x")
    record = ModelRecord(
        model_id=meta["model_id"],
        n_views=n_views,
        camera=CameraMeta(resolution=(int(w), int(h)),
                          fov_degrees=float(meta["fov_degrees"]),
                          distance_rule=meta.get("distance_rule", "half-bbox-diagonal")),
        engine_version=meta.get("engine_version", "unknown"),
    )

    def num(s):
        return math.nan if s == "" else float(s)

    for mi, name in enumerate(MEASURES):
        mm = measures_meta.get(name)
        if mm is None:
            raise RecordFormatError(f"{path}: missing measure header for {name!r}")
        raw = np.array([num(r[4 + 2 * mi]) for r in rows])
        norm = np.array([num(r[5 + 2 * mi]) for r in rows])
        record.measures[name] = MeasureValues(
            orientation=mm.get("orientation", ORIENTATION[name]),
            raw=raw, normalized=norm,
            best_index=int(mm["best_index"]),
            worst_index=int(mm["worst_index"]),
        )
    validate_record(record)
    return record


def _pixel_directions(projection, width, height):
    i = (np.arange(width) + 0.5) / width
    j = (np.arange(height) + 0.5) / height
    lon = -math.pi + 2.0 * math.pi * i
    if projection == "equirectangular":
        lat = 0.5 * math.pi - math.pi * j
    elif projection == "mercator":
        # latitude clamped to +-85 degrees; +z maps to the top edge
        m_max = math.asinh(math.tan(math.radians(85.0)))
        m = m_max - 2.0 * m_max * j
        lat = np.arctan(np.sinh(m))
    else:
        raise ValueError(f"unknown projection {projection!r}")
    lon_g, lat_g = np.meshgrid(lon, lat)
    cos_lat = np.cos(lat_g)
    dirs = np.stack((cos_lat * np.cos(lon_g),
                     cos_lat * np.sin(lon_g),
                     np.sin(lat_g)), axis=-1)
    return dirs.reshape(-1, 3)


def sphere_map_image(vq_map, sphere, projection="mercator", size=(512, 256)):
    """Render the normalized map as float image via nearest-viewpoint lookup."""
    width, height = size
    if width <= 0 or height <= 0:
        raise ValueError(f"image size must be positive, got {size}")
    dirs = _pixel_directions(projection, width, height)
    values = np.nan_to_num(vq_map.normalized, nan=0.0)
    out = np.empty(dirs.shape[0])
    chunk = 8192
    vp = sphere.viewpoints.T
    for lo in range(0, dirs.shape[0], chunk):
        dots = dirs[lo:lo + chunk] @ vp
        out[lo:lo + chunk] = values[np.argmax(dots, axis=1)]
    return out.reshape(height, width)


def export_sphere_map(vq_map, sphere, path, projection="mercator", size=(512, 256)):
    """Write the map as grayscale PGM (or PNG for .png paths)."""
    img = sphere_map_image(vq_map, sphere, projection, size)
    bytes_img = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    if str(path).lower().endswith(".png"):
        try:
            from PIL import Image
        except ImportError as exc:
            raise RuntimeError("PNG export needs Pillow; use a .pgm path instead") from exc
        Image.fromarray(bytes_img, mode="L").save(str(path))
        return
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (bytes_img.shape[1], bytes_img.shape[0]))
        fh.write(bytes_img.tobytes())
