"""Independent oracles and small builders shared by the test modules.

Everything here is written directly from first principles (plain Python, no
package kernels) so tests compare the implementation against a second path.
"""

from __future__ import annotations

import math

import numpy as np

from speedstudy import Correspondence, Detection, ImagePoint, WorldPoint
from speedstudy.ingest import ClassLabel

MPS_TO_MPH = 2.2369362920544


def apply_h(matrix, x, y):
    """Hand 3x3 multiply plus homogeneous divide."""
    num_u = matrix[0][0] * x + matrix[0][1] * y + matrix[0][2]
    num_v = matrix[1][0] * x + matrix[1][1] * y + matrix[1][2]
    den = matrix[2][0] * x + matrix[2][1] * y + matrix[2][2]
    return num_u / den, num_v / den


def make_correspondences(matrix, world_pts) -> list[Correspondence]:
    """Exact correspondences generated by pushing world points through matrix."""
    corrs = []
    for x, y in world_pts:
        u, v = apply_h(matrix, x, y)
        corrs.append(Correspondence(WorldPoint(x, y), ImagePoint(u, v)))
    return corrs


def random_projective_matrix(rng) -> np.ndarray:
    """A well-conditioned projective map over roughly [0, 100]^2."""
    return np.array(
        [
            [rng.uniform(0.5, 2.0), rng.uniform(-0.3, 0.3), rng.uniform(-50, 50)],
            [rng.uniform(-0.3, 0.3), rng.uniform(0.5, 2.0), rng.uniform(-50, 50)],
            [rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3), 1.0],
        ]
    )


def point_in_polygon_oracle(x, y, polygon, tol=1e-9) -> bool:
    """Even-odd ray casting with boundary inclusion, scalar and literal."""
    n = len(polygon)
    inside = False
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        # boundary check against the segment
        ex, ey = x2 - x1, y2 - y1
        seg2 = ex * ex + ey * ey
        if seg2 > 0:
            t = max(0.0, min(1.0, ((x - x1) * ex + (y - y1) * ey) / seg2))
            if math.hypot(x1 + t * ex - x, y1 + t * ey - y) <= tol:
                return True
        elif math.hypot(x1 - x, y1 - y) <= tol:
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def brute_speed_series(frames, points, fps, min_track_s=0.5):
    """Sliding-window speeds straight from the definition.

    Window reaches back min(history, round(fps)) positions; speed is endpoint
    displacement over endpoint frame gap; reporting starts at
    ceil(fps * min_track_s) frames of history (at least 2).
    """
    wmax = max(int(math.floor(fps + 0.5)), 2)
    warm = max(math.ceil(fps * min_track_s), 2)
    out = []
    for i in range(len(frames)):
        history = i + 1
        if history < warm:
            continue
        w = min(history, wmax)
        j = i - w + 1
        d = math.dist(points[i], points[j])
        dt = (frames[i] - frames[j]) / fps
        out.append((int(frames[i]), d / dt * MPS_TO_MPH, w))
    return out


CORRIDOR_CORNERS = [
    ((0.0, -5.0), (500.0, 950.0)),
    ((0.0, 5.0), (1420.0, 950.0)),
    ((60.0, -5.0), (860.0, 340.0)),
    ((60.0, 5.0), (1060.0, 340.0)),
]


def scene_config_dict(h, location_id=1, fps=10.0, **overrides) -> dict:
    """Scene config JSON body for the demo corridor camera."""
    from speedstudy.geometry import world_to_image

    aoi_world = [(-5.0, -6.0), (65.0, -6.0), (65.0, 6.0), (-5.0, 6.0)]
    aoi = []
    for x, y in aoi_world:
        p = world_to_image(h, WorldPoint(x, y))
        aoi.append([p.u, p.v])
    cfg = {
        "location_id": location_id,
        "name": "demo corridor",
        "fps": fps,
        "calibration": {
            "correspondences": [
                {"world": list(w), "image": list(i)} for w, i in CORRIDOR_CORNERS
            ]
        },
        "aoi_polygon": aoi,
        "approach_zone": [[20.0, -6.0], [35.0, -6.0], [35.0, 6.0], [20.0, 6.0]],
        "travel_direction": [1.0, 0.0],
        "class_map": {
            "1": "car", "2": "bus", "3": "truck",
            "4": "motorcycle", "5": "bicycle", "6": "pedestrian", "7": "other",
        },
    }
    cfg.update(overrides)
    return cfg


def det(frame, track_id, bbox=(0.0, 0.0, 10.0, 20.0), conf=0.9, label=ClassLabel.CAR):
    return Detection(frame, track_id, bbox, conf, label)


def straight_track_detections(
    track_id,
    n_frames,
    start_uv,
    step_uv,
    first_frame=0,
    bbox_size=(10.0, 20.0),
    label=ClassLabel.CAR,
):
    """Detections whose anchors move linearly in image space."""
    out = []
    w, h = bbox_size
    for k in range(n_frames):
        u = start_uv[0] + k * step_uv[0]
        v = start_uv[1] + k * step_uv[1]
        out.append(
            Detection(first_frame + k, track_id, (u - w / 2, v - h, w, h), 0.9, label)
        )
    return out
