"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py
The numba timings appear only when that backend is importable; first-call JIT
compilation is excluded by a warmup pass.
"""

import time

import numpy as np

from speedstudy import _kernels
from speedstudy._accel import NUMBA_ENABLED


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_points_in_polygon(rng):
    pts = rng.uniform(-10, 110, size=(1_000_000, 2))
    poly = np.array([[0, 0], [100, 5], [110, 60], [50, 105], [-5, 55]], dtype=float)
    jobs = {"numpy": lambda: _kernels.points_in_polygon_numpy(pts, poly)}
    if NUMBA_ENABLED:
        _kernels.points_in_polygon(pts[:100], poly)  # warmup / compile
        jobs["numba"] = lambda: _kernels.points_in_polygon(pts, poly)
    return "points_in_polygon (1M pts, 5-gon)", jobs


def bench_window_speeds(rng):
    n_tracks, n = 2000, 300
    tracks = []
    for _ in range(n_tracks):
        frames = np.arange(n, dtype=np.int64)
        xs = np.cumsum(rng.normal(0, 0.5, n))
        ys = np.cumsum(rng.normal(0, 0.5, n))
        tracks.append((frames, xs, ys))

    def run_numpy():
        for f, x, y in tracks:
            _kernels.window_speeds_numpy(f, x, y, 10, 5, 10.0)

    jobs = {"numpy": run_numpy}
    if NUMBA_ENABLED:
        f, x, y = tracks[0]
        _kernels.window_speeds(f, x, y, 10, 5, 10.0)  # warmup

        def run_numba():
            for f, x, y in tracks:
                _kernels.window_speeds(f, x, y, 10, 5, 10.0)

        jobs["numba"] = run_numba
    return "window_speeds (2000 tracks x 300 frames)", jobs


def bench_close_pairs(rng):
    n_tracks, frames_per_track = 400, 250
    rows = n_tracks * frames_per_track
    frames = np.repeat(np.arange(frames_per_track), n_tracks).astype(np.int64)
    track_idx = np.tile(np.arange(n_tracks), frames_per_track).astype(np.int64)
    us = rng.uniform(0, 2000, rows)
    vs = rng.uniform(0, 1100, rows)
    ang = rng.uniform(0, 2 * np.pi, rows)
    dus, dvs = np.cos(ang), np.sin(ang)

    order = np.argsort(frames, kind="stable")
    sf = frames[order]
    bounds = np.flatnonzero(np.diff(sf)) + 1
    gs = np.concatenate(([0], bounds)).astype(np.int64)
    ge = np.concatenate((bounds, [rows])).astype(np.int64)
    args_sorted = (track_idx[order], us[order], vs[order], dus[order], dvs[order])

    jobs = {
        "numpy": lambda: _kernels.close_pair_counts_numpy(
            gs, ge, *args_sorted, 40.0, n_tracks
        )
    }
    if NUMBA_ENABLED:
        _kernels.close_pair_counts(
            frames[:800], track_idx[:800], us[:800], vs[:800], dus[:800], dvs[:800],
            40.0, n_tracks,
        )  # warmup

        def run_numba():
            _kernels.close_pair_counts(frames, track_idx, us, vs, dus, dvs, 40.0, n_tracks)

        jobs["numba"] = run_numba
    return "close_pair_counts (400 tracks x 250 frames)", jobs


def main():
    rng = np.random.default_rng(7)
    print(f"numba backend available: {NUMBA_ENABLED}")
    print(f"{'kernel':<45} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for bench in (bench_points_in_polygon, bench_window_speeds, bench_close_pairs):
        name, jobs = bench(rng)
        t_np = timeit(jobs["numpy"])
        if "numba" in jobs:
            t_nb = timeit(jobs["numba"])
            print(f"{name:<45} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms {t_np / t_nb:>7.1f}x")
        else:
            print(f"{name:<45} {t_np * 1e3:>8.1f}ms {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
