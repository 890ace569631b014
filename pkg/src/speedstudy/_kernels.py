"""Hot numeric kernels with numba and pure-numpy implementations.

Public entry points (``points_in_polygon``, ``window_speeds``,
``close_pair_counts``) dispatch to whichever backend ``_accel`` selected at
import. The ``*_numpy`` variants stay importable either way so tests and the
benchmark can compare both paths.
"""

from __future__ import annotations

import numpy as np

from ._accel import NUMBA_ENABLED, compile_kernel

BOUNDARY_TOL = 1e-9


# ---------------------------------------------------------------------------
# point-in-polygon (even-odd rule, boundary counts as inside)


def _points_in_polygon_loops(xs, ys, px, py, tol, out):
    n = xs.shape[0]
    m = px.shape[0]
    tol2 = tol * tol
    for k in range(n):
        x = xs[k]
        y = ys[k]
        inside = False
        on_edge = False
        j = m - 1
        for i in range(m):
            xi = px[i]
            yi = py[i]
            xj = px[j]
            yj = py[j]
            ex = xj - xi
            ey = yj - yi
            seg2 = ex * ex + ey * ey
            if seg2 > 0.0:
                t = ((x - xi) * ex + (y - yi) * ey) / seg2
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                cx = xi + t * ex - x
                cy = yi + t * ey - y
            else:
                cx = xi - x
                cy = yi - y
            if cx * cx + cy * cy <= tol2:
                on_edge = True
            if (yi > y) != (yj > y):
                x_cross = xi + (y - yi) * (xj - xi) / (yj - yi)
                if x < x_cross:
                    inside = not inside
            j = i
        out[k] = inside or on_edge


_points_in_polygon_jit = compile_kernel(_points_in_polygon_loops)


def points_in_polygon_numpy(points, polygon, tol=BOUNDARY_TOL):
    """Vectorized even-odd test; loops over edges, broadcasts over points."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    poly = np.asarray(polygon, dtype=np.float64)
    x = pts[:, 0]
    y = pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    tol2 = tol * tol
    m = len(poly)
    for i in range(m):
        xi, yi = poly[i]
        xj, yj = poly[i - 1]
        ex = xj - xi
        ey = yj - yi
        seg2 = ex * ex + ey * ey
        if seg2 > 0.0:
            t = np.clip(((x - xi) * ex + (y - yi) * ey) / seg2, 0.0, 1.0)
            cx = xi + t * ex - x
            cy = yi + t * ey - y
        else:
            cx = xi - x
            cy = yi - y
        on_edge |= cx * cx + cy * cy <= tol2
        crosses = (yi > y) != (yj > y)
        dy = yj - yi
        safe_dy = np.where(dy == 0.0, 1.0, dy)
        x_cross = xi + (y - yi) * (xj - xi) / safe_dy
        inside ^= crosses & (x < x_cross)
    return inside | on_edge


def points_in_polygon(points, polygon, tol=BOUNDARY_TOL):
    """Boolean mask of points inside (or within tol of) a simple polygon."""
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    poly = np.asarray(polygon, dtype=np.float64)
    if not NUMBA_ENABLED:
        return points_in_polygon_numpy(pts, poly, tol)
    out = np.empty(len(pts), dtype=np.bool_)
    _points_in_polygon_jit(
        np.ascontiguousarray(pts[:, 0]),
        np.ascontiguousarray(pts[:, 1]),
        np.ascontiguousarray(poly[:, 0]),
        np.ascontiguousarray(poly[:, 1]),
        tol,
        out,
    )
    return out


# ---------------------------------------------------------------------------
# sliding-window speeds
#
# For position i (0-based) the window reaches back w = min(i + 1, wmax)
# samples; speed is endpoint displacement over endpoint frame gap. Samples are
# emitted once the history holds at least first_hist samples (and always at
# least 2, so the window spans a positive time).


def _window_speeds_loops(frames, xs, ys, wmax, first_hist, fps, speeds, wlens):
    n = frames.shape[0]
    for i in range(n):
        if i + 1 < first_hist or i == 0:
            speeds[i] = -1.0
            wlens[i] = 0
            continue
        j = i - wmax + 1
        if j < 0:
            j = 0
        dx = xs[i] - xs[j]
        dy = ys[i] - ys[j]
        dt = (frames[i] - frames[j]) / fps
        speeds[i] = np.sqrt(dx * dx + dy * dy) / dt
        wlens[i] = i - j + 1


_window_speeds_jit = compile_kernel(_window_speeds_loops)


def window_speeds_numpy(frames, xs, ys, wmax, first_hist, fps):
    n = len(frames)
    i = np.arange(n)
    j = np.maximum(0, i - wmax + 1)
    emit = (i + 1 >= first_hist) & (i > 0)
    dt = (frames - frames[j]) / fps
    safe_dt = np.where(emit, dt, 1.0)
    dx = xs - xs[j]
    dy = ys - ys[j]
    speeds = np.where(emit, np.sqrt(dx * dx + dy * dy) / safe_dt, -1.0)
    wlens = np.where(emit, i - j + 1, 0)
    return speeds, wlens.astype(np.int64)


def window_speeds(frames, xs, ys, wmax, first_hist, fps):
    """Per-position window speed (m/s) and window length; -1 marks no sample.

    first_hist is clamped to 2 so every emitted window spans >= 2 samples.
    """
    frames = np.ascontiguousarray(frames, dtype=np.int64)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    wmax = max(int(wmax), 2)
    first_hist = max(int(first_hist), 2)
    if not NUMBA_ENABLED:
        return window_speeds_numpy(frames, xs, ys, wmax, first_hist, fps)
    n = len(frames)
    speeds = np.empty(n, dtype=np.float64)
    wlens = np.empty(n, dtype=np.int64)
    _window_speeds_jit(frames, xs, ys, wmax, first_hist, float(fps), speeds, wlens)
    return speeds, wlens


# ---------------------------------------------------------------------------
# close-leader scan for the following filter
#
# Rows are all (track, frame, anchor) tuples of a site sorted by frame;
# group_start/group_end delimit each frame's slice. For every ordered pair of
# tracks present in a frame we count coexistence, and closeness when the other
# anchor is within max_px and ahead along the follower's image-space travel
# direction.


def _close_pair_counts_loops(
    group_start, group_end, track_idx, us, vs, dus, dvs, max_px, coexist, close
):
    r2 = max_px * max_px
    for g in range(group_start.shape[0]):
        s = group_start[g]
        e = group_end[g]
        for a in range(s, e):
            ta = track_idx[a]
            for b in range(s, e):
                if b == a:
                    continue
                tb = track_idx[b]
                coexist[ta, tb] += 1
                dx = us[b] - us[a]
                dy = vs[b] - vs[a]
                if dx * dx + dy * dy < r2:
                    if dx * dus[a] + dy * dvs[a] > 0.0:
                        close[ta, tb] += 1


_close_pair_counts_jit = compile_kernel(_close_pair_counts_loops)


def close_pair_counts_numpy(
    group_start, group_end, track_idx, us, vs, dus, dvs, max_px, n_tracks
):
    coexist = np.zeros((n_tracks, n_tracks), dtype=np.int64)
    close = np.zeros((n_tracks, n_tracks), dtype=np.int64)
    r2 = max_px * max_px
    for s, e in zip(group_start, group_end):
        if e - s < 2:
            continue
        idx = track_idx[s:e]
        u = us[s:e]
        v = vs[s:e]
        dx = u[np.newaxis, :] - u[:, np.newaxis]
        dy = v[np.newaxis, :] - v[:, np.newaxis]
        off_diag = ~np.eye(e - s, dtype=bool)
        pairs = (idx[:, np.newaxis], idx[np.newaxis, :])
        np.add.at(coexist, pairs, off_diag.astype(np.int64))
        near = (dx * dx + dy * dy < r2) & off_diag
        ahead = dx * dus[s:e, np.newaxis] + dy * dvs[s:e, np.newaxis] > 0.0
        np.add.at(close, pairs, (near & ahead).astype(np.int64))
    return coexist, close


def close_pair_counts(frames, track_idx, us, vs, dus, dvs, max_px, n_tracks):
    """Coexistence and close-ahead frame counts for every ordered track pair.

    close[t, l] counts frames where track l sits within max_px of track t and
    ahead of it; coexist[t, l] counts frames where both are tracked. Input
    rows need not be pre-sorted.
    """
    order = np.argsort(frames, kind="stable")
    frames = np.ascontiguousarray(frames[order], dtype=np.int64)
    track_idx = np.ascontiguousarray(track_idx[order], dtype=np.int64)
    us = np.ascontiguousarray(us[order], dtype=np.float64)
    vs = np.ascontiguousarray(vs[order], dtype=np.float64)
    dus = np.ascontiguousarray(dus[order], dtype=np.float64)
    dvs = np.ascontiguousarray(dvs[order], dtype=np.float64)
    boundaries = np.flatnonzero(np.diff(frames)) + 1
    group_start = np.concatenate(([0], boundaries)).astype(np.int64)
    group_end = np.concatenate((boundaries, [len(frames)])).astype(np.int64)
    if not NUMBA_ENABLED:
        return close_pair_counts_numpy(
            group_start, group_end, track_idx, us, vs, dus, dvs, max_px, n_tracks
        )
    coexist = np.zeros((n_tracks, n_tracks), dtype=np.int64)
    close = np.zeros((n_tracks, n_tracks), dtype=np.int64)
    _close_pair_counts_jit(
        group_start, group_end, track_idx, us, vs, dus, dvs, float(max_px), coexist, close
    )
    return coexist, close
