"""
track_cli.py

Command-line entry point for the region-based tracker.

Verbs:
  build-model    precompute and cache the sparse viewpoint model of a mesh
  track          track the objects of a sequence directory, write estimated poses
  evaluate-rbot  5 cm / 5 degree success protocol (RBOT-style tree or one sequence)
  evaluate-opt   AUC protocol without re-initialization (OPT-style tree or one sequence)
  synthesize     render a seeded synthetic sequence
  overlay        draw model contours onto the frames of a sequence
  benchmark      time track_step on a synthetic sequence
  sweep          success rate over a grid of one tracker parameter

Every verb reads the JSON config (TRACKER_CONFIG_FILE, or --config) with
optional blocks:
  "tracker":         flat TrackerConfig keys
  "viewpoint_model": n_c, subdivisions, sphere_radius, rng_seed
  "objects":         [{"mesh": path, "model_cache": path, "initial_pose": ..., "overrides": {...}}]
  "opt_overrides":   {object name: {"lambda_r": ...}} for evaluate-opt

On failure one machine-readable line goes to stderr and the exit code is 1:
  ERROR code=<code> message="<text>"

Run:
    py -m track_cli synthesize --box 0.06 0.06 0.06 --out data/results/synthetic/cube
    py -m track_cli evaluate-rbot --sequence data/results/synthetic/cube --box 0.06 0.06 0.06
"""

from __future__ import annotations

#####################################
# Import Modules
#####################################

# stdlib
import argparse
import json
import pathlib
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

# external
import numpy as np
import pandas as pd

# local
import utils.utils_config as config
from consumers import datasets
from consumers.evaluation import (
    EvalReport,
    RegionTracker,
    new_run_id,
    opt_protocol,
    rbot_protocol,
    success_table,
    write_report,
)
from producers.overlay_producer import emit_overlay
from producers.sequence_producer import (
    DEFAULT_INTRINSICS,
    VARIANTS,
    TrajectorySpec,
    generate_synthetic_sequence,
)
from tracking.errors import ConfigError, TrackingError
from tracking.geometry import Pose
from tracking.mesh_render import TriangleMesh, load_mesh, make_box_mesh
from tracking.tracker import TrackedObject, TrackerConfig, initialize, track_step
from tracking.viewpoint_model import SparseViewpointModel, ViewpointModelConfig, load_or_build_model
from utils.emitters import emit_to_sink
from utils.utils_io import FrameSequence, load_sequence, read_pose_csv, read_rgb, write_pose_csv
from utils.utils_logger import logger

#####################################
# Constants
#####################################

SWEEP_PARAMETERS = ("amplitude", "slope", "step_size", "lambda_r", "lambda_t")

#####################################
# Configuration Helpers
#####################################


def error_line(code: str, message: str) -> str:
    escaped = str(message).replace("\\", "\\\\").replace('"', '\\"').replace("\n", " ")
    return f'ERROR code={code} message="{escaped}"'


def pose_from_config(value) -> Pose:
    """Accept a 4x4 matrix or {"rotation": 3x3 | 9 values, "translation": 3 values}."""
    try:
        if isinstance(value, dict):
            return Pose.from_rt(np.asarray(value["rotation"], dtype=np.float64), value["translation"], orthonormalize=True)
        matrix = np.asarray(value, dtype=np.float64)
        return Pose.from_rt(matrix[:3, :3], matrix[:3, 3], orthonormalize=True)
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot read a pose from {value!r}: {exc}") from exc


def tracker_config_from(raw: dict) -> TrackerConfig:
    block = raw.get("tracker", {})
    if not isinstance(block, dict):
        raise ConfigError("'tracker' must be a JSON object")
    return TrackerConfig.from_dict(block)


def model_config_from(raw: dict) -> ViewpointModelConfig:
    block = raw.get("viewpoint_model", {})
    allowed = {"n_c", "subdivisions", "sphere_radius", "rng_seed"}
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown viewpoint_model keys: {sorted(unknown)}")
    try:
        return ViewpointModelConfig(**block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid viewpoint_model block: {exc}") from exc


def model_cache_file(mesh: TriangleMesh, model_config: ViewpointModelConfig, cache_dir: pathlib.Path) -> pathlib.Path:
    return cache_dir / f"{mesh.name}_s{model_config.subdivisions}_n{model_config.n_c}.svm"


def model_for(
    mesh: TriangleMesh, model_config: ViewpointModelConfig, cache_path: pathlib.Path | None = None
) -> SparseViewpointModel:
    cache_path = cache_path or model_cache_file(mesh, model_config, config.get_model_cache_path())
    return load_or_build_model(mesh, cache_path, model_config)


def mesh_from_args(args: argparse.Namespace) -> TriangleMesh:
    if getattr(args, "box", None):
        return make_box_mesh(args.box, name=args.name or "box")
    if getattr(args, "mesh", None):
        mesh = load_mesh(args.mesh)
        if args.mesh_scale != 1.0:
            mesh = datasets.scale_mesh(mesh, args.mesh_scale)
        return mesh
    raise ConfigError("either --mesh or --box is required")


def mirror_records(records: list[dict], sink: str | None) -> None:
    if not records:
        return
    sink = sink or config.get_report_sink()
    results_dir = config.get_results_path()
    if sink == "sqlite":
        ok = emit_to_sink(records, sink, results_dir, sqlite_path=config.get_sqlite_path())
    elif sink == "duckdb":
        ok = emit_to_sink(records, sink, results_dir, duckdb_path=config.get_duckdb_path())
    else:
        ok = emit_to_sink(records, sink, results_dir)
    if ok:
        logger.info(f"Mirrored {len(records)} frame records to the {sink} sink")
    else:
        logger.warning(f"Could not mirror frame records to the {sink} sink")


#####################################
# Evaluation Tasks (picklable for --jobs)
#####################################


def _evaluate_sequence(
    sequence: FrameSequence,
    mesh: TriangleMesh,
    protocol: str,
    raw: dict,
    overrides: dict | None = None,
    occluder_mesh: TriangleMesh | None = None,
) -> EvalReport:
    tracker_config = tracker_config_from(raw)
    model_config = model_config_from(raw)
    occluder = None
    if occluder_mesh is not None and sequence.occluder_poses:
        occluder = (occluder_mesh, model_for(occluder_mesh, model_config))
        tracker_config = replace(tracker_config, use_occlusion_masks=True)
    tracker = RegionTracker(
        mesh, model_for(mesh, model_config), sequence.intrinsics, tracker_config, overrides, occluder
    )
    if protocol == "opt":
        return opt_protocol(tracker, sequence, mesh)
    return rbot_protocol(tracker, sequence, mesh)


def _rbot_task(task: tuple) -> tuple[dict, list[dict]]:
    root, name, variant, raw, run_id, overrides = task
    sequence = datasets.load_rbot_sequence(root, name, variant)
    occluder = datasets.load_rbot_occluder(root) if variant == "occlusion" else None
    report = _evaluate_sequence(
        sequence, datasets.load_rbot_mesh(root, name), "rbot", raw, overrides, occluder
    )
    summary = {"object": name, "variant": variant, **report.summary()}
    return summary, report.records(run_id)


def _opt_task(task: tuple) -> tuple[dict, list[dict]]:
    root, name, directory, raw, run_id, overrides = task
    sequence = load_sequence(directory, name=f"{name}_{pathlib.Path(directory).name}")
    report = _evaluate_sequence(sequence, datasets.load_opt_mesh(root, name), "opt", raw, overrides)
    summary = {"object": name, "variant": pathlib.Path(directory).name, **report.summary()}
    return summary, report.records(run_id)


def run_tasks(worker, tasks: list[tuple], jobs: int) -> list[tuple[dict, list[dict]]]:
    """Run independent sequence evaluations, one tracker group per worker."""
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    logger.info(f"Evaluating {len(tasks)} sequences on {jobs} workers")
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks))


#####################################
# Verbs
#####################################


def cmd_build_model(args: argparse.Namespace, raw: dict) -> None:
    mesh = mesh_from_args(args)
    flags = {
        "subdivisions": args.subdivisions,
        "n_c": args.n_c,
        "sphere_radius": args.radius,
        "rng_seed": args.seed,
    }
    try:
        model_config = replace(model_config_from(raw), **{k: v for k, v in flags.items() if v is not None})
    except ValueError as exc:
        raise ConfigError(f"invalid build-model flags: {exc}") from exc
    out = pathlib.Path(args.out) if args.out else model_cache_file(mesh, model_config, config.get_model_cache_path())
    if out.is_file():
        out.unlink()
    model = load_or_build_model(mesh, out, model_config)
    print(f"model {out}: {model.n_v} views x {model.n_c} points")


def _objects_from(args: argparse.Namespace, raw: dict, sequence: FrameSequence) -> list[TrackedObject]:
    model_config = model_config_from(raw)
    blocks = raw.get("objects") or []
    objects = []
    if getattr(args, "mesh", None) or getattr(args, "box", None):
        mesh = mesh_from_args(args)
        objects.append(TrackedObject(mesh=mesh, model=model_for(mesh, model_config), id=0, pose=sequence.gt_poses[0]))
        return objects
    if not blocks:
        raise ConfigError("no object to track: pass --mesh/--box or list 'objects' in the config")
    base = config.get_config_dir(args.config)
    for index, block in enumerate(blocks):
        if "mesh" not in block:
            raise ConfigError(f"object block {index} lacks 'mesh'")
        mesh = load_mesh(base / block["mesh"])
        cache = base / block["model_cache"] if "model_cache" in block else None
        if "initial_pose" in block:
            pose = pose_from_config(block["initial_pose"])
        elif index == 0:
            pose = sequence.gt_poses[0]
        else:
            raise ConfigError(f"object block {index} needs an 'initial_pose'")
        objects.append(
            TrackedObject(
                mesh=mesh,
                model=model_for(mesh, model_config, cache),
                id=index,
                pose=pose,
                overrides=dict(block.get("overrides", {})),
            )
        )
    return objects


def cmd_track(args: argparse.Namespace, raw: dict) -> None:
    sequence = load_sequence(args.sequence)
    tracker_config = tracker_config_from(raw)
    objects = _objects_from(args, raw, sequence)
    out_dir = pathlib.Path(args.out) if args.out else config.get_results_path() / "tracks" / sequence.name

    first = sequence.load_frame(0)
    for obj in objects:
        initialize(obj, first, obj.pose, sequence.intrinsics, tracker_config)
    poses = {obj.id: [obj.pose] for obj in objects}
    steps = []
    for k in range(1, len(sequence)):
        results = track_step(objects, sequence.load_frame(k), sequence.intrinsics, tracker_config)
        for result in results:
            poses[result.object_id].append(result.pose)
            steps.append(
                {
                    "frame": k,
                    "object_id": result.object_id,
                    "valid_lines": result.valid_lines[-1] if result.valid_lines else 0,
                    "mean_contour_distance_px": result.mean_contour_distance_px[-1]
                    if result.mean_contour_distance_px
                    else float("nan"),
                    "histogram_updated": result.histogram_updated,
                    "step_ms": result.step_ms,
                }
            )
    for obj in objects:
        write_pose_csv(poses[obj.id], out_dir / f"{obj.name}_poses.csv")
    pd.DataFrame(steps).to_csv(out_dir / "steps.csv", index=False)
    logger.info(f"Tracked {len(sequence)} frames of {sequence.name}; results in {out_dir}")
    print(f"tracked {len(objects)} object(s) over {len(sequence)} frames -> {out_dir}")


def _single_sequence_report(args: argparse.Namespace, raw: dict, protocol: str) -> pd.DataFrame:
    sequence = load_sequence(args.sequence)
    mesh = mesh_from_args(args)
    occluder_mesh = None
    if sequence.occluder_mesh_path is not None:
        occluder_mesh = load_mesh(sequence.occluder_mesh_path)
    run_id = new_run_id()
    report = _evaluate_sequence(sequence, mesh, protocol, raw, occluder_mesh=occluder_mesh)
    out_dir = pathlib.Path(args.out) if args.out else config.get_results_path() / "evaluations"
    write_report(report, out_dir / f"{sequence.name}_{protocol}_frames.csv")
    if not args.no_sink:
        mirror_records(report.records(run_id), args.sink)
    return pd.DataFrame([report.summary()])


def cmd_evaluate_rbot(args: argparse.Namespace, raw: dict) -> None:
    if args.sequence:
        summary = _single_sequence_report(args, raw, "rbot")
        print(summary.to_string(index=False))
        return

    root = pathlib.Path(args.root)
    if not datasets.rbot_available(root):
        raise TrackingError(f"no RBOT-style dataset at {root}")
    names = args.objects or [n for n in datasets.RBOT_OBJECTS if (root / n).is_dir()]
    variants = args.variants or list(datasets.RBOT_VARIANTS)
    # models are cached once up front so parallel workers only read them
    model_config = model_config_from(raw)
    for name in names:
        model_for(datasets.load_rbot_mesh(root, name), model_config)
    if "occlusion" in variants:
        model_for(datasets.load_rbot_occluder(root), model_config)

    run_id = new_run_id()
    tasks = [(root, name, variant, raw, run_id, None) for name in names for variant in variants]
    outcomes = run_tasks(_rbot_task, tasks, args.jobs or config.get_jobs_as_int())

    summaries = [summary for summary, _ in outcomes]
    out_dir = pathlib.Path(args.out) if args.out else config.get_results_path() / "rbot"
    out_dir.mkdir(parents=True, exist_ok=True)
    table = success_table(summaries)
    table.to_csv(out_dir / "success_rates.csv", float_format="%.1f")
    pd.DataFrame(summaries).to_csv(out_dir / "sequences.csv", index=False)
    if not args.no_sink:
        mirror_records([r for _, records in outcomes for r in records], args.sink)

    regular = [s["success_rate"] for s in summaries if s["variant"] == "regular"]
    if regular and np.mean(regular) <= 80.0:
        logger.warning(f"Regular-variant average success {np.mean(regular):.1f}% is at or below 80%")
    print(table.round(1).to_string())


def cmd_evaluate_opt(args: argparse.Namespace, raw: dict) -> None:
    if args.sequence:
        summary = _single_sequence_report(args, raw, "opt")
        print(summary.to_string(index=False))
        return

    root = pathlib.Path(args.root)
    found = datasets.opt_sequences(root)
    run_id = new_run_id()
    overrides = raw.get("opt_overrides", {})
    tasks = [
        (root, name, pathlib.Path(sequence.frame_paths[0]).parent.parent, raw, run_id, overrides.get(name))
        for name, sequence in found
    ]
    outcomes = run_tasks(_opt_task, tasks, args.jobs or config.get_jobs_as_int())

    summaries = [summary for summary, _ in outcomes]
    out_dir = pathlib.Path(args.out) if args.out else config.get_results_path() / "opt"
    out_dir.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(summaries)
    table = frame.pivot_table(index="object", values="auc", aggfunc="mean")
    table.loc["mean"] = table.mean(axis=0)
    table.to_csv(out_dir / "auc_scores.csv", float_format="%.2f")
    frame.to_csv(out_dir / "sequences.csv", index=False)
    if not args.no_sink:
        mirror_records([r for _, records in outcomes for r in records], args.sink)
    print(table.round(2).to_string())


def cmd_synthesize(args: argparse.Namespace, raw: dict) -> None:
    mesh = mesh_from_args(args)
    background = read_rgb(args.background) if args.background else None
    spec = TrajectorySpec(
        kind=args.trajectory,
        n_frames=args.frames,
        distance=args.distance,
        max_translation_m=args.max_translation,
        max_rotation_deg=args.max_rotation,
    )
    seed = args.seed if args.seed is not None else config.get_rng_seed_as_int()
    out = pathlib.Path(args.out) if args.out else config.get_results_path() / "synthetic" / f"{mesh.name}_{args.variant}"
    sequence = generate_synthetic_sequence(
        mesh, spec, out, DEFAULT_INTRINSICS, background=background, seed=seed, variant=args.variant
    )
    print(f"wrote {len(sequence)} frames to {out}")


def cmd_overlay(args: argparse.Namespace, raw: dict) -> None:
    sequence = load_sequence(args.sequence)
    mesh = mesh_from_args(args)
    poses = read_pose_csv(args.poses) if args.poses else sequence.gt_poses
    if len(poses) != len(sequence):
        raise TrackingError(f"{len(poses)} poses for {len(sequence)} frames")
    out_dir = pathlib.Path(args.out) if args.out else config.get_results_path() / "overlays" / sequence.name
    written = 0
    for k in range(0, len(sequence), max(args.every, 1)):
        emit_overlay(sequence.load_frame(k), mesh, poses[k], sequence.intrinsics, out_dir / f"{k:06d}.png")
        written += 1
    print(f"wrote {written} overlays to {out_dir}")


def _synthetic_cube(args: argparse.Namespace, out: pathlib.Path) -> tuple[TriangleMesh, FrameSequence]:
    mesh = make_box_mesh((0.06, 0.06, 0.06), name="cube")
    seed = args.seed if args.seed is not None else config.get_rng_seed_as_int()
    sequence = generate_synthetic_sequence(mesh, TrajectorySpec(n_frames=args.frames), out, seed=seed)
    return mesh, sequence


def cmd_benchmark(args: argparse.Namespace, raw: dict) -> None:
    tracker_config = tracker_config_from(raw)
    model_config = model_config_from(raw)
    with tempfile.TemporaryDirectory() as tmp:
        mesh, sequence = _synthetic_cube(args, pathlib.Path(tmp) / "benchmark")
        obj = TrackedObject(mesh=mesh, model=model_for(mesh, model_config))
        initialize(obj, sequence.load_frame(0), sequence.gt_poses[0], sequence.intrinsics, tracker_config)
        step_ms = []
        for k in range(1, len(sequence)):
            image = sequence.load_frame(k)
            step_ms.append(track_step([obj], image, sequence.intrinsics, tracker_config)[0].step_ms)

    timings = np.asarray(step_ms)
    stats = {
        "frames": int(timings.size),
        "mean_ms": float(np.mean(timings)),
        "median_ms": float(np.median(timings)),
        "p95_ms": float(np.percentile(timings, 95)),
        "n_c": model_config.n_c,
    }
    out = pathlib.Path(args.out) if args.out else config.get_results_path() / "benchmark.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(stats, indent=2), encoding="utf-8")
    logger.info(f"Benchmark: {stats}")
    print(
        f"track_step over {stats['frames']} frames: mean {stats['mean_ms']:.2f} ms, "
        f"median {stats['median_ms']:.2f} ms, p95 {stats['p95_ms']:.2f} ms"
    )


def cmd_sweep(args: argparse.Namespace, raw: dict) -> None:
    if args.param not in SWEEP_PARAMETERS:
        raise ConfigError(f"--param must be one of {SWEEP_PARAMETERS}")
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        mesh, sequence = _synthetic_cube(args, pathlib.Path(tmp) / "sweep")
        for value in args.values:
            block = {**raw.get("tracker", {}), args.param: value}
            swept = {**raw, "tracker": block}
            report = _evaluate_sequence(sequence, mesh, "rbot", swept)
            summary = report.summary()
            rows.append(
                {
                    args.param: value,
                    "success_rate": summary["success_rate"],
                    "reinit_count": summary["reinit_count"],
                    "mean_e_t": summary["mean_e_t"],
                    "mean_e_r": summary["mean_e_r"],
                }
            )
    frame = pd.DataFrame(rows)
    out = pathlib.Path(args.out) if args.out else config.get_results_path() / f"sweep_{args.param}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False)
    print(frame.to_string(index=False))


#####################################
# Argument Parser
#####################################


def _add_mesh_arguments(parser: argparse.ArgumentParser, required: bool = False) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--mesh", help="Wavefront OBJ file of the object")
    group.add_argument("--box", type=float, nargs=3, metavar=("X", "Y", "Z"), help="use a box of these extents (m)")
    parser.add_argument("--mesh-scale", type=float, default=1.0, help="scale applied to --mesh vertices (0.001 for mm)")
    parser.add_argument("--name", default=None, help="object name for --box")


def _add_sink_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sink", choices=config.REPORT_SINKS, default=None, help="override REPORT_SINK")
    parser.add_argument("--no-sink", action="store_true", help="do not mirror per-frame records")
    parser.add_argument("--jobs", type=int, default=None, help="parallel sequence workers (TRACKER_JOBS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="track_cli", description="Sparse region-based 6-DoF object tracker.")
    parser.add_argument("--config", default=None, help="JSON config file (default: TRACKER_CONFIG_FILE)")
    verbs = parser.add_subparsers(dest="verb", required=True)

    p = verbs.add_parser("build-model", help="precompute a sparse viewpoint model")
    _add_mesh_arguments(p, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--subdiv", "--subdivisions", dest="subdivisions", type=int, default=None)
    p.add_argument("--n-c", dest="n_c", type=int, default=None)
    p.add_argument("--radius", type=float, default=None, help="view sphere radius (m)")
    p.add_argument("--seed", type=int, default=None, help="contour point sampling seed")
    p.set_defaults(handler=cmd_build_model)

    p = verbs.add_parser("track", help="track a sequence directory")
    p.add_argument("--sequence", required=True)
    _add_mesh_arguments(p)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_track)

    p = verbs.add_parser("evaluate-rbot", help="5 cm / 5 degree success protocol")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--root", help="RBOT-style dataset root")
    source.add_argument("--sequence", help="one sequence directory")
    _add_mesh_arguments(p)
    p.add_argument("--objects", nargs="*", default=None)
    p.add_argument("--variants", nargs="*", choices=list(datasets.RBOT_VARIANTS), default=None)
    p.add_argument("--out", default=None)
    _add_sink_arguments(p)
    p.set_defaults(handler=cmd_evaluate_rbot)

    p = verbs.add_parser("evaluate-opt", help="AUC protocol without re-initialization")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--root", help="OPT-style dataset root")
    source.add_argument("--sequence", help="one sequence directory")
    _add_mesh_arguments(p)
    p.add_argument("--out", default=None)
    _add_sink_arguments(p)
    p.set_defaults(handler=cmd_evaluate_opt)

    p = verbs.add_parser("synthesize", help="render a seeded synthetic sequence")
    _add_mesh_arguments(p, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--trajectory", choices=("random_walk", "orbit"), default="random_walk")
    p.add_argument("--variant", choices=VARIANTS, default="regular")
    p.add_argument("--distance", type=float, default=0.5)
    p.add_argument("--max-translation", type=float, default=0.008)
    p.add_argument("--max-rotation", type=float, default=2.5)
    p.add_argument("--background", default=None, help="background photo (resized to 640x480)")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(handler=cmd_synthesize)

    p = verbs.add_parser("overlay", help="draw model contours onto sequence frames")
    p.add_argument("--sequence", required=True)
    _add_mesh_arguments(p, required=True)
    p.add_argument("--poses", default=None, help="pose CSV (default: ground truth)")
    p.add_argument("--every", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_overlay)

    p = verbs.add_parser("benchmark", help="time track_step on a synthetic cube sequence")
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_benchmark)

    p = verbs.add_parser("sweep", help="success rate over a grid of one parameter")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--values", type=float, nargs="+", required=True)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_sweep)
    return parser


#####################################
# Main
#####################################


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = config.load_json_config(args.config)
        args.handler(args, raw)
    except TrackingError as exc:
        logger.error(f"{args.verb} failed: {exc}")
        print(error_line(exc.code, str(exc)), file=sys.stderr)
        return 1
    except OSError as exc:
        logger.error(f"{args.verb} failed: {exc}")
        print(error_line("io", str(exc)), file=sys.stderr)
        return 1
    except ValueError as exc:
        logger.error(f"{args.verb} failed: {exc}")
        print(error_line("config", str(exc)), file=sys.stderr)
        return 1
    return 0


#####################################
# Conditional Execution
#####################################

if __name__ == "__main__":
    sys.exit(main())
