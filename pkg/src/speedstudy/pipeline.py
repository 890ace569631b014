"""End-to-end per-recording and per-phase processing.

One recording (a single detection CSV) runs parse -> assemble -> filter
cascade -> world-plane kinematics -> maneuver classification. A phase pools
the per-vehicle results of its recordings into one PhaseSummary. Track ids
are only unique within a recording, which is why recordings are processed
independently and exported separately.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .analytics import PhaseSummary, build_phase_summary
from .behavior import ManeuverObservation, observe_maneuvers
from .config import PhaseInput, SceneConfig
from .errors import EmptyInput, InvariantViolation
from .geometry import Homography
from .ingest import CASCADE_STAGES, assemble_tracks, parse_track_file, run_filter_cascade
from .kinematics import TrackKinematics, to_world_track, track_kinematics

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecordingResult:
    source: str
    raw_rows: int
    kinematics: list[TrackKinematics]
    maneuvers: list[ManeuverObservation] | None
    filter_counts: dict[str, int]


@dataclass(frozen=True)
class PhaseResult:
    summary: PhaseSummary
    recordings: list[RecordingResult]
    filter_totals: dict[str, int]


def process_detections(
    detections, cfg: SceneConfig, h: Homography, source: str = "<memory>"
) -> RecordingResult:
    """Run the full analysis over one recording's parsed detections."""
    tracks = assemble_tracks(detections)
    th = cfg.thresholds
    survivors, counts = run_filter_cascade(
        tracks,
        cfg.geometry(),
        h,
        stationary_m=th.stationary_m,
        following_px=th.following_px,
        following_frac=th.following_frac,
        direction_deg=th.direction_deg,
    )
    if counts["input"] - sum(counts[s] for s in CASCADE_STAGES) != counts["surviving"]:
        raise InvariantViolation(f"filter accounting does not balance: {counts}")

    world_tracks = []
    unprojectable = 0
    for t in survivors:
        wt = to_world_track(t, h)
        if wt is None:
            unprojectable += 1
        else:
            world_tracks.append(wt)
    counts["unprojectable"] = unprojectable

    kins = []
    for wt in world_tracks:
        k = track_kinematics(wt, cfg.fps, th.min_track_s)
        if k is not None:
            kins.append(k)
    counts["no_kinematics"] = len(world_tracks) - len(kins)

    maneuvers = None
    if cfg.intersection_type == "unsignalized":
        maneuvers = observe_maneuvers(
            kins,
            world_tracks,
            cfg.approach_zone,
            cfg.fps,
            th.min_track_s,
            cfg.v_mean_reduction,
            th.stopgo_mph,
            th.slowdown_mph,
        )
    return RecordingResult(source, len(detections), kins, maneuvers, counts)


def process_recording(path, cfg: SceneConfig, h: Homography) -> RecordingResult:
    detections = parse_track_file(path, cfg.class_map)
    return process_detections(detections, cfg, h, source=str(path))


def process_phase(phase_input: PhaseInput, cfg: SceneConfig, h: Homography) -> PhaseResult:
    recordings = [process_recording(p, cfg, h) for p in phase_input.detection_paths]

    totals: dict[str, int] = {}
    for rec in recordings:
        for key, value in rec.filter_counts.items():
            totals[key] = totals.get(key, 0) + value
    totals["raw_detections"] = sum(r.raw_rows for r in recordings)

    if cfg.representative == "per_vehicle":
        speeds = [k.representative_mph for rec in recordings for k in rec.kinematics]
    else:
        speeds = [
            s.speed_mph for rec in recordings for k in rec.kinematics for s in k.samples
        ]
    maneuvers = None
    if cfg.intersection_type == "unsignalized":
        maneuvers = [m for rec in recordings for m in rec.maneuvers]

    try:
        summary = build_phase_summary(
            cfg.location_id,
            phase_input.phase,
            speeds,
            phase_input.hours,
            maneuvers=maneuvers if maneuvers else None,
            bin_width_mph=cfg.histogram_bin_mph,
            percentile_method=cfg.percentile_method,
        )
    except EmptyInput:
        log.warning("phase %s: no vehicles survived; writing empty report", phase_input.phase.value)
        summary = PhaseSummary(
            location_id=cfg.location_id,
            phase=phase_input.phase,
            sample_count=0,
            hours=phase_input.hours,
            mean_mph=None,
            p85_mph=None,
            histogram=(),
        )
    log.info(
        "phase %s: %d raw rows, %d vehicles in summary",
        phase_input.phase.value,
        totals["raw_detections"],
        summary.sample_count,
    )
    return PhaseResult(summary, recordings, totals)


def kinematics_csv(kins: list[TrackKinematics]) -> str:
    """Sample rows plus one `track_id,summary,<mean mph>,<n samples>` row per
    track (the literal 'summary' sits in the frame column)."""
    lines = ["track_id,frame,speed_mph,window_frames"]
    for k in kins:
        for s in k.samples:
            lines.append(f"{k.track_id},{s.frame},{s.speed_mph!r},{s.window_frames}")
        lines.append(f"{k.track_id},summary,{k.representative_mph!r},{len(k.samples)}")
    return "\n".join(lines) + "\n"


def maneuvers_csv(observations: list[ManeuverObservation]) -> str:
    lines = ["track_id,v_mean_mph,class"]
    for o in observations:
        lines.append(f"{o.track_id},{o.v_mean_mph!r},{o.maneuver.value}")
    return "\n".join(lines) + "\n"
