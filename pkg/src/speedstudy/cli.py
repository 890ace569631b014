"""Command-line interface.

Subcommands:
  calibrate --config scene.json [--max-rmse-px 2.0]
  analyze   --manifest run.json --out dir/
  compare   --pre a.json --w1 b.json --w2 c.json --out dir/
  simulate  --config sim.json --seed N --out dir/

Exit codes: 0 success, 2 input/config error, 3 calibration gate failure,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .analytics import compare_phases, percent_change, PhaseSummary
from .config import load_manifest, load_scene_config, SceneConfig
from .errors import (
    AtInfinity,
    ConfigError,
    DegenerateConfiguration,
    EmptyInput,
    InvariantViolation,
    LocationMismatch,
    MalformedRow,
    NonPositiveBaseline,
    SpeedStudyError,
    TooFewPoints,
)
from .geometry import Homography, WorldPoint, reprojection_rmse, solve_homography
from .ingest import ClassLabel, serialize_detections
from .pipeline import kinematics_csv, maneuvers_csv, process_phase
from .simulator import (
    DEFAULT_CLASS_MAP,
    SyntheticVehicle,
    ground_truth_csv,
    profile_from_dict,
    render_scene,
)

log = logging.getLogger("speedstudy")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GATE = 3
EXIT_INVARIANT = 4

_INPUT_ERRORS = (
    ConfigError,
    MalformedRow,
    TooFewPoints,
    DegenerateConfiguration,
    LocationMismatch,
    EmptyInput,
    NonPositiveBaseline,
    AtInfinity,
    OSError,
)


def write_atomic(path: Path, text: str):
    """Write via a temp file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _solve_scene(cfg: SceneConfig) -> tuple[Homography, float]:
    h = solve_homography(cfg.correspondences)
    return h, reprojection_rmse(h, cfg.correspondences)


def cmd_calibrate(args) -> int:
    cfg = load_scene_config(args.config)
    h, rmse = _solve_scene(cfg)
    print(f"location {cfg.location_id} ({cfg.name})")
    print("canonical homography (world -> image):")
    for row in h.matrix:
        print("  [" + ", ".join(f"{v: .12g}" for v in row) + "]")
    print(f"reprojection RMSE: {rmse:.6g} px (gate: {args.max_rmse_px} px)")
    if rmse > args.max_rmse_px:
        log.error("calibration gate failed: RMSE %.6g px > %.6g px", rmse, args.max_rmse_px)
        return EXIT_GATE
    return EXIT_OK


def cmd_analyze(args) -> int:
    manifest = load_manifest(args.manifest)
    cfg = load_scene_config(manifest.scene_config_path)
    h, rmse = _solve_scene(cfg)
    if rmse > args.max_rmse_px:
        log.error("calibration gate failed: RMSE %.6g px > %.6g px", rmse, args.max_rmse_px)
        return EXIT_GATE
    out = Path(args.out)
    for phase_input in manifest.phases:
        result = process_phase(phase_input, cfg, h)
        tag = phase_input.phase.value
        write_atomic(out / f"{tag}_summary.json", _json_text(result.summary.to_json_dict()))
        counts = {
            "phase": tag,
            "totals": result.filter_totals,
            "recordings": [
                {"source": r.source, "raw_rows": r.raw_rows, "counts": r.filter_counts}
                for r in result.recordings
            ],
        }
        write_atomic(out / f"{tag}_filter_counts.json", _json_text(counts))
        for i, rec in enumerate(result.recordings):
            write_atomic(out / f"{tag}_rec{i:02d}_kinematics.csv", kinematics_csv(rec.kinematics))
            if rec.maneuvers is not None:
                write_atomic(out / f"{tag}_rec{i:02d}_maneuvers.csv", maneuvers_csv(rec.maneuvers))
        print(
            f"phase {tag}: {result.summary.sample_count} vehicles, "
            f"mean {result.summary.mean_mph}, p85 {result.summary.p85_mph}"
        )
    return EXIT_OK


def _load_summary(path) -> PhaseSummary:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"summary not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    try:
        return PhaseSummary.from_json_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad summary ({exc})") from None


def cmd_compare(args) -> int:
    pre = _load_summary(args.pre)
    w1 = _load_summary(args.w1)
    w2 = _load_summary(args.w2)
    mean_row, p85_row = compare_phases(pre, w1, w2)

    lines = ["loc_id,metric,pre,post_w1,delta_w1,post_w2,delta_w2"]
    for row in (mean_row, p85_row):
        lines.append(
            f"{row.location_id},{row.metric},{row.pre:.1f},{row.post_w1:.1f},"
            f"{row.delta_w1:.1f},{row.post_w2:.1f},{row.delta_w2:.1f}"
        )
    out = Path(args.out)
    write_atomic(out / "comparison.csv", "\n".join(lines) + "\n")

    report = {"location_id": pre.location_id}
    for row in (mean_row, p85_row):
        report[row.metric] = {
            "pre": row.pre,
            "post_w1": row.post_w1,
            "post_w2": row.post_w2,
            "delta_w1": row.delta_w1,
            "delta_w2": row.delta_w2,
            "pct_w1": percent_change(row.pre, row.post_w1),
            "pct_w2": percent_change(row.pre, row.post_w2),
        }
    write_atomic(out / "percent_change.json", _json_text(report))
    for row in (mean_row, p85_row):
        print(
            f"loc {row.location_id} {row.metric}: pre {row.pre:.1f} -> "
            f"W1 {row.post_w1:.1f} ({row.delta_w1:+.1f}), "
            f"W2 {row.post_w2:.1f} ({row.delta_w2:+.1f})"
        )
    return EXIT_OK


def _load_sim_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"sim config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def _sim_vehicles(data: dict) -> list[SyntheticVehicle]:
    vehicles = []
    for i, v in enumerate(data.get("vehicles", [])):
        path = f"vehicles[{i}]"
        try:
            direction = tuple(float(c) for c in v["direction"])
            norm = float(np.hypot(direction[0], direction[1]))
            if norm == 0:
                raise ConfigError(f"{path}.direction: must be nonzero")
            vehicles.append(
                SyntheticVehicle(
                    vehicle_id=int(v["id"]),
                    entry_time_s=float(v.get("entry_time_s", 0.0)),
                    start=WorldPoint(float(v["start"][0]), float(v["start"][1])),
                    direction=(direction[0] / norm, direction[1] / norm),
                    profile=profile_from_dict(v["profile"], f"{path}.profile"),
                    bbox_px=(float(v["bbox_px"][0]), float(v["bbox_px"][1])),
                    class_label=ClassLabel(v.get("class_label", "car")),
                    max_distance_m=(
                        None if v.get("max_distance_m") is None else float(v["max_distance_m"])
                    ),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"{path}.{exc.args[0]}: missing") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not vehicles:
        raise ConfigError("vehicles: need at least one vehicle")
    return vehicles


def cmd_simulate(args) -> int:
    data = _load_sim_config(args.config)
    if "homography_matrix" not in data:
        raise ConfigError("homography_matrix: missing (3x3 row-major list)")
    try:
        h_true = Homography(np.array(data["homography_matrix"], dtype=np.float64))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"homography_matrix: {exc}") from None
    fps = float(data.get("fps", 10.0))
    duration = float(data.get("duration_s", 0.0))
    if fps <= 0 or duration <= 0:
        raise ConfigError("fps and duration_s must be positive")
    sigma = float(data.get("noise_sigma_px", 0.0))
    if sigma < 0:
        raise ConfigError("noise_sigma_px: must be >= 0")
    zone = data.get("approach_zone")
    class_map = DEFAULT_CLASS_MAP
    if "class_map" in data:
        class_map = {int(k): ClassLabel(v) for k, v in data["class_map"].items()}
    vehicles = _sim_vehicles(data)

    detections, truth = render_scene(
        vehicles, h_true, fps, duration, sigma, seed=args.seed, approach_zone=zone
    )
    out = Path(args.out)
    write_atomic(out / "detections.csv", serialize_detections(detections, class_map))
    write_atomic(out / "ground_truth.csv", ground_truth_csv(truth))

    speeds = [float(v.speeds_mph.max()) for v in truth.vehicles]
    print(
        f"rendered {len(truth.vehicles)} vehicles, {len(detections)} detections, "
        f"peak speeds {min(speeds):.1f}-{max(speeds):.1f} mph, seed {args.seed}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speedstudy", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="solve and gate the scene homography")
    p.add_argument("--config", required=True, help="scene config JSON")
    p.add_argument("--max-rmse-px", type=float, default=2.0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("analyze", help="run the full pipeline over a manifest")
    p.add_argument("--manifest", required=True, help="run manifest JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-rmse-px", type=float, default=2.0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="before/after comparison of three summaries")
    p.add_argument("--pre", required=True)
    p.add_argument("--w1", required=True)
    p.add_argument("--w2", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="render a synthetic scene to CSV")
    p.add_argument("--config", required=True, help="simulation config JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        log.error("internal invariant violated: %s", exc)
        return EXIT_INVARIANT
    except _INPUT_ERRORS as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except SpeedStudyError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
