"""Command line interface.

Defaults reproduce the measurement protocol: 1000 Fibonacci viewpoints,
1024x1024 pixels, 90 degree vertical fov, camera at half the bbox diagonal.
Data goes to stdout or files as JSON/CSV; logs go to stderr. Exit codes:
0 success, 1 runtime error, 2 usage error.
"""

import argparse
import logging
import math
import os
import sys
import time

import numpy as np

from . import __version__, dataset, descent_sim, face_cleaning
from .errors import ViewQError
from .mesh_io import load_mesh, mesh_summary, save_off
from .rasterizer import make_camera, render_item_buffer, save_item_buffer_pgm
from .sampling import fibonacci_sphere
from .vq_measures import MEASURES, evaluate_model

logger = logging.getLogger("viewq")

FACE_WARN_THRESHOLD = 10000


def _add_common(p):
    p.add_argument("--views", type=int, default=1000, help="viewpoints on the sphere")
    p.add_argument("--resolution", type=int, default=1024, help="image size in pixels")
    p.add_argument("--fov", type=float, default=90.0, help="vertical field of view, degrees")
    p.add_argument("--threads", type=int, default=0,
                   help="worker threads; 0 = VIEWQ_THREADS env or cpu count")


def _load(path):
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")
    mesh = load_mesh(path)
    if mesh.n_source_faces > FACE_WARN_THRESHOLD:
        logger.warning("%s has %d faces; sampling may be slow",
                       path, mesh.n_source_faces)
    return mesh


class UsageError(Exception):
    pass


def cmd_sample_vq(args):
    mesh = _load(args.mesh)
    sphere = fibonacci_sphere(args.views)
    maps = evaluate_model(mesh, sphere, args.resolution,
                          math.radians(args.fov), args.threads)
    record = dataset.record_from_maps(
        args.model_id or os.path.splitext(os.path.basename(args.mesh))[0],
        maps,
        dataset.CameraMeta(resolution=(args.resolution, args.resolution),
                           fov_degrees=args.fov),
    )
    dataset.write_record(record, args.output)
    if args.itembuffer_pgm:
        cam = make_camera(mesh, sphere.viewpoints[0],
                          args.resolution, math.radians(args.fov))
        owner, _ = render_item_buffer(mesh, cam)
        save_item_buffer_pgm(owner, args.itembuffer_pgm)
    if args.map_pgm:
        dataset.export_sphere_map(maps[args.map_measure], sphere, args.map_pgm,
                                  projection=args.map_projection)
    logger.info("wrote %s", args.output)
    return 0


def cmd_best_view(args):
    mesh = _load(args.mesh)
    sphere = fibonacci_sphere(args.views)
    maps = evaluate_model(mesh, sphere, args.resolution,
                          math.radians(args.fov), args.threads)
    wanted = args.measures.split(",") if args.measures else list(MEASURES)
    out = {"model": args.mesh, "n_views": args.views, "measures": {}}
    for name in wanted:
        if name not in maps:
            raise UsageError(f"unknown measure {name!r}")
        m = maps[name]
        out["measures"][name] = {
            "best_index": m.best_index,
            "viewpoint": [float(v) for v in sphere.viewpoints[m.best_index]],
            "raw": float(m.raw[m.best_index]),
        }
    print(dataset._emit(out))
    return 0


def _parse_clusters(text):
    clusters = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        fields = [float(v) for v in part.replace(":", ",").split(",")]
        if len(fields) != 5:
            raise UsageError(
                f"cluster needs x,y,z,width,peak; got {part!r}")
        clusters.append(descent_sim.ClusterSpec(tuple(fields[:3]), fields[3], fields[4]))
    if not clusters:
        raise UsageError("no clusters given")
    return clusters


def cmd_simulate_labels(args):
    from . import labelgen

    sphere = fibonacci_sphere(args.views)
    vq_map = descent_sim.synth_map(_parse_clusters(args.clusters), sphere)
    config = descent_sim.DescentConfig(
        total_steps=args.steps, switch_step=args.switch_step,
        learning_rate=args.lr, alpha=args.alpha, sigma=args.sigma,
        shift=args.shift, seed=args.seed)
    report = descent_sim.compare_strategies(
        vq_map, sphere, config, args.inits, adversarial_sl=args.adversarial_sl)
    if args.trajectory_csv:
        init = descent_sim.random_inits(1, config.seed)[0]
        traj = descent_sim.descend(vq_map, sphere, config, init, "ml+gl")
        traj.to_csv(args.trajectory_csv, vq_map, sphere)
    if args.labels_json:
        labels = labelgen.build_label_set(vq_map, sphere, config.alpha)
        init = descent_sim.random_inits(1, config.seed)[0]
        params = labelgen.GaussianParams(sigma=config.sigma, shift=config.shift,
                                         squared=args.squared_kernel)
        target_idx, _ = labelgen.gl_target(init, vq_map, sphere, params)
        dump = {
            "alpha": config.alpha,
            "label_indices": [int(i) for i in labels.indices],
            "label_vectors": [[float(x) for x in v] for v in labels.vectors],
            "example_prediction": [float(x) for x in init],
            "example_gl_target": target_idx,
        }
        with open(args.labels_json, "w", encoding="utf-8") as fh:
            fh.write(dataset._emit(dump) + "\n")
    print(dataset._emit(report.to_dict()))
    return 0


def cmd_clean_faces(args):
    mesh = _load(args.mesh)
    cleaned, removed = face_cleaning.remove_hidden_faces(
        mesh, args.views, args.resolution, args.threads)
    save_off(cleaned, args.output)
    report = {
        "input": args.mesh,
        "output": args.output,
        "n_views": args.views,
        "resolution": args.resolution,
        "original_faces": mesh.n_source_faces,
        "kept_faces": cleaned.n_source_faces,
        "removed_faces": [int(i) for i in removed],
    }
    text = dataset._emit(report)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_bench(args):
    views_list = [int(v) for v in args.views.split(",")]
    entries = []
    for path in args.meshes:
        mesh = _load(path)
        for n_views in views_list:
            sphere = fibonacci_sphere(n_views)
            times = []
            best = None
            for _ in range(args.runs):
                t0 = time.perf_counter()
                maps = evaluate_model(mesh, sphere, args.resolution,
                                      math.radians(args.fov), args.threads)
                times.append(time.perf_counter() - t0)
                indices = {m: maps[m].best_index for m in MEASURES}
                if best is None:
                    best = indices
                elif best != indices:
                    raise RuntimeError("non-deterministic best indices across runs")
            entries.append({
                "mesh": path,
                "n_faces": mesh.n_source_faces,
                "views": n_views,
                "resolution": args.resolution,
                "runs": args.runs,
                "mean_seconds": float(np.mean(times)),
                "times": [float(t) for t in times],
                "best_indices": best,
            })
    print(dataset._emit({"engine_version": __version__, "entries": entries}))
    return 0


def cmd_summary(args):
    print(dataset._emit(mesh_summary(_load(args.mesh))))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="viewq",
        description="Viewpoint quality sampling, labeling and cleaning tools.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-vq", help="evaluate all measures over the view sphere")
    p.add_argument("mesh")
    p.add_argument("-o", "--output", required=True, help="output JSON path")
    p.add_argument("--model-id", default=None)
    p.add_argument("--itembuffer-pgm", default=None,
                   help="debug dump of the first view's item buffer")
    p.add_argument("--map-pgm", default=None,
                   help="export one measure's sphere map as a PGM image")
    p.add_argument("--map-measure", default="ve", choices=list(MEASURES))
    p.add_argument("--map-projection", default="mercator",
                   choices=("mercator", "equirectangular"))
    _add_common(p)
    p.set_defaults(func=cmd_sample_vq)

    p = sub.add_parser("best-view", help="print the best viewpoint per measure")
    p.add_argument("mesh")
    p.add_argument("--measures", default=None, help="comma separated subset")
    _add_common(p)
    p.set_defaults(func=cmd_best_view)

    p = sub.add_parser("simulate-labels",
                       help="compare label strategies by spherical descent")
    p.add_argument("--clusters", required=True,
                   help="semicolon separated x,y,z,width,peak")
    p.add_argument("--views", type=int, default=1000)
    p.add_argument("--inits", type=int, default=100)
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--switch-step", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--alpha", type=float, default=0.99)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--shift", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--adversarial-sl", action="store_true",
                   help="cycle conflicting labels in the single-label runs")
    p.add_argument("--trajectory-csv", default=None)
    p.add_argument("--labels-json", default=None,
                   help="dump the label set and an example weighted target")
    p.add_argument("--squared-kernel", action="store_true",
                   help="use a squared-distance exponent in the label kernel")
    p.set_defaults(func=cmd_simulate_labels)

    p = sub.add_parser("clean-faces", help="remove faces hidden from every view")
    p.add_argument("mesh")
    p.add_argument("-o", "--output", required=True, help="cleaned OFF path")
    p.add_argument("--report", default=None, help="JSON removal report path")
    _add_common(p)
    p.set_defaults(func=cmd_clean_faces)

    p = sub.add_parser("bench", help="time the sampling procedure")
    p.add_argument("meshes", nargs="+")
    p.add_argument("--views", default="250,500,1000", help="comma separated counts")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--resolution", type=int, default=1024)
    p.add_argument("--fov", type=float, default=90.0)
    p.add_argument("--threads", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("summary", help="print mesh statistics")
    p.add_argument("mesh")
    p.set_defaults(func=cmd_summary)
    return parser


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print('{"error": %s}' % _json_str(exc), file=sys.stderr)
        return 2
    except ViewQError as exc:
        print('{"error": %s}' % _json_str(exc), file=sys.stderr)
        return 1
    except Exception as exc:  # unexpected
        logger.exception("unhandled error")
        print('{"error": %s}' % _json_str(exc), file=sys.stderr)
        return 1


def _json_str(exc):
    import json
    return json.dumps(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
