"""Tracker-output parsing, track assembly, and the track filter cascade.

Input format (one detection per line, no header, ``#`` lines ignored)::

    frame,id,bb_left,bb_top,bb_width,bb_height,conf,class_id

The cascade runs in a fixed order -- area-of-interest clipping, vehicle-type
majority vote, stationary removal, close-follower removal, direction gating --
and every stage is a pure subset operation over its input tracks.
"""

from __future__ import annotations

import io
import logging
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import MalformedRow
from .geometry import Homography, ImagePoint, project_points

log = logging.getLogger(__name__)

CASCADE_STAGES = ("aoi", "vehicle_type", "stationary", "following", "direction")


class ClassLabel(Enum):
    CAR = "car"
    BUS = "bus"
    TRUCK = "truck"
    MOTORCYCLE = "motorcycle"
    BICYCLE = "bicycle"
    PEDESTRIAN = "pedestrian"
    OTHER = "other"


VEHICLE_LABELS = frozenset({ClassLabel.CAR, ClassLabel.BUS, ClassLabel.TRUCK})


@dataclass(frozen=True)
class Detection:
    frame: int
    track_id: int
    bbox: tuple[float, float, float, float]  # left, top, width, height (px)
    confidence: float
    class_label: ClassLabel


@dataclass(frozen=True)
class Track:
    """Frame-ordered detections of one tracker identity plus anchor points."""

    track_id: int
    detections: tuple[Detection, ...]
    anchors: np.ndarray  # (N, 2) float64, bottom-center per detection

    def __post_init__(self):
        self.anchors.setflags(write=False)

    def __len__(self):
        return len(self.detections)

    @property
    def frames(self) -> np.ndarray:
        return np.array([d.frame for d in self.detections], dtype=np.int64)


@dataclass(frozen=True)
class SceneGeometry:
    """Per-site constants: frame rate, zones, travel direction, class ids."""

    fps: float
    aoi_polygon: np.ndarray  # image px, simple polygon
    approach_zone: np.ndarray  # world meters, simple polygon
    travel_direction: np.ndarray  # unit vector, world frame
    class_map: dict[int, ClassLabel]

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        for name, poly in (("aoi_polygon", self.aoi_polygon), ("approach_zone", self.approach_zone)):
            arr = np.asarray(poly, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[0] < 3 or arr.shape[1] != 2:
                raise ValueError(f"{name} needs at least 3 (x, y) vertices")
            if not _is_simple_polygon(arr):
                raise ValueError(f"{name} is self-intersecting")
        d = np.asarray(self.travel_direction, dtype=np.float64)
        if abs(float(np.hypot(d[0], d[1])) - 1.0) > 1e-9:
            raise ValueError("travel_direction must be a unit vector")


def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _is_simple_polygon(poly: np.ndarray) -> bool:
    n = len(poly)
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True


def anchor_point(bbox: tuple[float, float, float, float]) -> ImagePoint:
    """Bottom center of a bounding box: the vehicle's ground-contact point."""
    left, top, width, height = bbox
    if width <= 0 or height <= 0:
        raise ValueError(f"bbox must have positive size, got {bbox}")
    return ImagePoint(left + width / 2.0, top + height)


def parse_track_file(source, class_map: dict[int, ClassLabel]) -> list[Detection]:
    """Parse a detection CSV into Detections, preserving row order.

    Unknown class ids map to OTHER with a warning (once per id); structurally
    bad rows raise MalformedRow carrying the 1-based line number.
    """
    name = None
    if isinstance(source, (str, Path)):
        name = str(source)
        stream = open(source, "r", encoding="utf-8")
        close = True
    elif isinstance(source, (bytes, bytearray)):
        stream = io.StringIO(source.decode("utf-8"))
        close = True
    else:
        stream = source
        close = False
        name = getattr(source, "name", None)
    try:
        return _parse_lines(stream, class_map, name)
    finally:
        if close:
            stream.close()


def _parse_lines(stream, class_map, name) -> list[Detection]:
    detections = []
    unknown_ids: set[int] = set()
    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 8:
            raise MalformedRow(line_no, f"expected 8 columns, got {len(fields)}", name)
        try:
            frame = int(fields[0])
            track_id = int(fields[1])
            left, top, width, height = (float(f) for f in fields[2:6])
            conf = float(fields[6])
            class_id = int(fields[7])
        except ValueError as exc:
            raise MalformedRow(line_no, str(exc), name) from None
        if frame < 0:
            raise MalformedRow(line_no, f"frame must be >= 0, got {frame}", name)
        if track_id <= 0:
            raise MalformedRow(line_no, f"track id must be positive, got {track_id}", name)
        if width <= 0 or height <= 0:
            raise MalformedRow(line_no, f"bbox size must be positive, got {width}x{height}", name)
        if not 0.0 <= conf <= 1.0:
            raise MalformedRow(line_no, f"confidence must be in [0, 1], got {conf}", name)
        label = class_map.get(class_id)
        if label is None:
            if class_id not in unknown_ids:
                unknown_ids.add(class_id)
                log.warning("unknown class id %d mapped to 'other'", class_id)
            label = ClassLabel.OTHER
        detections.append(Detection(frame, track_id, (left, top, width, height), conf, label))
    return detections


def serialize_detections(detections, class_map: dict[int, ClassLabel]) -> str:
    """Inverse of parse_track_file; floats use repr so round trips are lossless."""
    reverse: dict[ClassLabel, int] = {}
    for class_id, label in class_map.items():
        reverse.setdefault(label, class_id)
    lines = []
    for d in detections:
        class_id = reverse[d.class_label]
        left, top, width, height = (float(v) for v in d.bbox)
        lines.append(
            f"{d.frame},{d.track_id},{left!r},{top!r},{width!r},{height!r},"
            f"{float(d.confidence)!r},{class_id}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def assemble_tracks(detections) -> list[Track]:
    """Group detections by id, sort by frame, and resolve duplicate frames.

    A duplicate (id, frame) pair keeps the higher-confidence detection (first
    seen wins ties). Output is ordered by track id.
    """
    by_id: dict[int, list[Detection]] = {}
    for d in detections:
        by_id.setdefault(d.track_id, []).append(d)
    tracks = []
    for track_id in sorted(by_id):
        dets = sorted(by_id[track_id], key=lambda d: d.frame)
        deduped: list[Detection] = []
        for d in dets:
            if deduped and deduped[-1].frame == d.frame:
                if d.confidence > deduped[-1].confidence:
                    deduped[-1] = d
            else:
                deduped.append(d)
        anchors = np.empty((len(deduped), 2), dtype=np.float64)
        for i, d in enumerate(deduped):
            a = anchor_point(d.bbox)
            anchors[i, 0] = a.u
            anchors[i, 1] = a.v
        tracks.append(Track(track_id, tuple(deduped), anchors))
    return tracks


def clip_to_aoi(track: Track, aoi_polygon) -> Track | None:
    """Keep the longest contiguous run of detections anchored inside the AoI.

    Boundary points count as inside; equal-length runs keep the earliest.
    Returns None when no detection qualifies.
    """
    inside = _kernels.points_in_polygon(track.anchors, aoi_polygon)
    best_start, best_len = -1, 0
    run_start = None
    for i, flag in enumerate(list(inside) + [False]):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            if i - run_start > best_len:
                best_start, best_len = run_start, i - run_start
            run_start = None
    if best_len == 0:
        return None
    if best_len == len(track):
        return track
    sl = slice(best_start, best_start + best_len)
    return Track(track.track_id, track.detections[sl], track.anchors[sl].copy())


def filter_vehicle_type(tracks) -> list[Track]:
    """Keep tracks whose majority class is car, bus, or truck.

    Majority is the modal label over the track's detections; ties are broken
    toward retention if any tied label is a vehicle.
    """
    kept = []
    for t in tracks:
        counts = Counter(d.class_label for d in t.detections)
        top = max(counts.values())
        modal = {label for label, c in counts.items() if c == top}
        if modal & VEHICLE_LABELS:
            kept.append(t)
    return kept


def _endpoint_world_displacement(track: Track, h_inv: np.ndarray) -> np.ndarray | None:
    """Net world displacement first->last anchor; None when unprojectable."""
    ends = track.anchors[[0, -1]]
    world, valid = project_points(h_inv, ends)
    if not valid.all():
        return None
    return world[1] - world[0]


def filter_stationary(tracks, h: Homography, min_net_m: float = 2.0) -> list[Track]:
    """Drop tracks whose net world displacement stays under min_net_m."""
    h_inv = h.inverse().matrix
    kept = []
    for t in tracks:
        disp = _endpoint_world_displacement(t, h_inv)
        if disp is not None and float(np.hypot(disp[0], disp[1])) < min_net_m:
            continue
        kept.append(t)
    return kept


def filter_following(
    tracks,
    h: Homography,
    travel_direction,
    max_px: float = 40.0,
    min_frac: float = 0.5,
) -> list[Track]:
    """Drop tracks trailing another vehicle too closely for too long.

    A track goes when some other input track sits ahead of it (positive
    component along the travel direction projected into image space at the
    follower's anchor) and within max_px, for at least min_frac of the frames
    the two coexist.
    """
    if len(tracks) < 2:
        return list(tracks)
    h_mat = h.matrix
    h_inv = h.inverse().matrix
    direction = np.asarray(travel_direction, dtype=np.float64)

    frames_parts, idx_parts, anchor_parts = [], [], []
    for i, t in enumerate(tracks):
        frames_parts.append(t.frames)
        idx_parts.append(np.full(len(t), i, dtype=np.int64))
        anchor_parts.append(t.anchors)
    frames = np.concatenate(frames_parts)
    track_idx = np.concatenate(idx_parts)
    anchors = np.concatenate(anchor_parts)

    world, valid = project_points(h_inv, anchors)
    ahead_img, valid2 = project_points(h_mat, world + direction)  # 1 m step
    dirs = ahead_img - anchors
    norms = np.hypot(dirs[:, 0], dirs[:, 1])
    ok = valid & valid2 & (norms > 0)
    dirs[ok] /= norms[ok, np.newaxis]
    dirs[~ok] = 0.0

    coexist, close = _kernels.close_pair_counts(
        frames, track_idx, anchors[:, 0], anchors[:, 1], dirs[:, 0], dirs[:, 1],
        max_px, len(tracks),
    )
    has_leader = ((coexist > 0) & (close >= min_frac * coexist)).any(axis=1)
    return [t for flag, t in zip(has_leader, tracks) if not flag]


def filter_direction(tracks, h: Homography, travel_direction, max_deg: float = 45.0) -> list[Track]:
    """Keep tracks whose net world displacement stays within max_deg of the
    travel direction. Zero or unprojectable displacement is dropped."""
    h_inv = h.inverse().matrix
    direction = np.asarray(travel_direction, dtype=np.float64)
    kept = []
    for t in tracks:
        disp = _endpoint_world_displacement(t, h_inv)
        if disp is None:
            continue
        norm = float(np.hypot(disp[0], disp[1]))
        if norm == 0.0:
            continue
        cos_angle = float(np.dot(disp, direction)) / norm
        angle = math.degrees(math.acos(min(1.0, max(-1.0, cos_angle))))
        if angle <= max_deg + 1e-9:
            kept.append(t)
    return kept


def run_filter_cascade(
    tracks,
    scene: SceneGeometry,
    h: Homography,
    stationary_m: float = 2.0,
    following_px: float = 40.0,
    following_frac: float = 0.5,
    direction_deg: float = 45.0,
) -> tuple[list[Track], dict[str, int]]:
    """Apply the five stages in their fixed order, accounting for removals.

    Returns the surviving tracks and a stage->removed-count dict that also
    carries 'input' and 'surviving' totals.
    """
    counts = {"input": len(tracks)}
    clipped = []
    for t in tracks:
        c = clip_to_aoi(t, scene.aoi_polygon)
        if c is not None:
            clipped.append(c)
    counts["aoi"] = len(tracks) - len(clipped)

    typed = filter_vehicle_type(clipped)
    counts["vehicle_type"] = len(clipped) - len(typed)

    moving = filter_stationary(typed, h, stationary_m)
    counts["stationary"] = len(typed) - len(moving)

    spaced = filter_following(moving, h, scene.travel_direction, following_px, following_frac)
    counts["following"] = len(moving) - len(spaced)

    directed = filter_direction(spaced, h, scene.travel_direction, direction_deg)
    counts["direction"] = len(spaced) - len(directed)

    counts["surviving"] = len(directed)
    for stage in CASCADE_STAGES:
        log.info("filter %s removed %d tracks", stage, counts[stage])
    return directed, counts
