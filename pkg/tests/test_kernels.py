import os
import subprocess
import sys

import numpy as np
import pytest

from helpers import brute_speed_series, point_in_polygon_oracle
from speedstudy import _kernels
from speedstudy._accel import DISABLE_ENV, NUMBA_ENABLED, backend_name

CONCAVE = np.array([[0, 0], [10, 0], [10, 10], [5, 5], [0, 10]], dtype=float)


class TestPointsInPolygon:
    def test_square_interior_exterior(self):
        square = np.array([[0, 0], [10, 0], [10, 10], [0, 10]], dtype=float)
        pts = np.array([[5, 5], [10.5, 5], [-0.1, 0], [9.999, 9.999]])
        got = _kernels.points_in_polygon(pts, square)
        assert got.tolist() == [True, False, False, True]

    def test_boundary_counts_as_inside(self):
        square = np.array([[0, 0], [10, 0], [10, 10], [0, 10]], dtype=float)
        pts = np.array([[0, 5], [10, 10], [5, 0], [5, 10 + 5e-10]])
        assert _kernels.points_in_polygon(pts, square).all()

    def test_concave_polygon(self):
        pts = np.array([[5, 7], [5, 4], [2, 6], [8, 6]])
        got = _kernels.points_in_polygon(pts, CONCAVE)
        assert got.tolist() == [False, True, True, True]

    def test_matches_scalar_oracle(self, rng):
        pts = rng.uniform(-2, 12, size=(500, 2))
        got = _kernels.points_in_polygon(pts, CONCAVE)
        want = [point_in_polygon_oracle(x, y, CONCAVE) for x, y in pts]
        assert got.tolist() == want

    def test_backends_agree(self, rng):
        pts = rng.uniform(-2, 12, size=(1000, 2))
        via_numpy = _kernels.points_in_polygon_numpy(pts, CONCAVE)
        assert np.array_equal(_kernels.points_in_polygon(pts, CONCAVE), via_numpy)


class TestWindowSpeeds:
    def test_matches_brute_force_random_walk(self, rng):
        for fps in (10.0, 12.5, 25.0):
            frames = np.sort(rng.choice(np.arange(200), size=60, replace=False)).astype(np.int64)
            xs = np.cumsum(rng.normal(0, 1, 60))
            ys = np.cumsum(rng.normal(0, 1, 60))
            wmax = max(int(np.floor(fps + 0.5)), 2)
            warm = max(int(np.ceil(fps / 2)), 2)
            speeds, wlens = _kernels.window_speeds(frames, xs, ys, wmax, warm, fps)
            emitted = speeds >= 0
            got = [
                (int(f), s * 2.2369362920544, int(w))
                for f, s, w in zip(frames[emitted], speeds[emitted], wlens[emitted])
            ]
            want = brute_speed_series(frames, np.column_stack([xs, ys]), fps)
            assert len(got) == len(want)
            for (gf, gs, gw), (wf, ws, ww) in zip(got, want):
                assert gf == wf and gw == ww
                assert gs == pytest.approx(ws, rel=1e-12)

    def test_backends_agree(self, rng):
        frames = np.arange(0, 240, 2, dtype=np.int64)
        xs = np.cumsum(rng.normal(0, 1, len(frames)))
        ys = np.cumsum(rng.normal(0, 1, len(frames)))
        a = _kernels.window_speeds(frames, xs, ys, 10, 5, 10.0)
        b = _kernels.window_speeds_numpy(frames, xs, ys, 10, 5, 10.0)
        assert np.allclose(a[0], b[0], rtol=0, atol=0)
        assert np.array_equal(a[1], b[1])

    def test_window_never_exceeds_wmax(self, rng):
        frames = np.arange(100, dtype=np.int64)
        xs = rng.normal(0, 1, 100)
        ys = rng.normal(0, 1, 100)
        _, wlens = _kernels.window_speeds(frames, xs, ys, 10, 5, 10.0)
        assert wlens.max() == 10
        assert set(wlens[:4]) == {0}  # no sample before 5 frames of history


class TestClosePairCounts:
    def _toy(self):
        # two tracks side by side for 10 frames: track 1 trails 30 px behind
        frames = np.repeat(np.arange(10), 2).astype(np.int64)
        track_idx = np.tile([0, 1], 10).astype(np.int64)
        us = np.where(track_idx == 0, 100.0, 70.0) + np.repeat(np.arange(10), 2) * 5.0
        vs = np.full(20, 50.0)
        dus = np.ones(20)
        dvs = np.zeros(20)
        return frames, track_idx, us, vs, dus, dvs

    def test_trailing_pair(self):
        frames, track_idx, us, vs, dus, dvs = self._toy()
        coexist, close = _kernels.close_pair_counts(frames, track_idx, us, vs, dus, dvs, 40.0, 2)
        assert coexist[0, 1] == coexist[1, 0] == 10
        assert close[1, 0] == 10  # leader (track 0) is ahead of track 1 within 40 px
        assert close[0, 1] == 0  # nothing ahead of the leader

    def test_backends_agree(self, rng):
        n_rows = 400
        frames = rng.integers(0, 50, n_rows).astype(np.int64)
        track_idx = rng.integers(0, 12, n_rows).astype(np.int64)
        # collapse duplicate (frame, track) pairs: keep first occurrence
        _, keep = np.unique(frames * 100 + track_idx, return_index=True)
        frames, track_idx = frames[keep], track_idx[keep]
        n = len(frames)
        us = rng.uniform(0, 300, n)
        vs = rng.uniform(0, 300, n)
        angles = rng.uniform(0, 2 * np.pi, n)
        dus, dvs = np.cos(angles), np.sin(angles)
        a = _kernels.close_pair_counts(frames, track_idx, us, vs, dus, dvs, 40.0, 12)
        order = np.argsort(frames, kind="stable")
        b_frames = frames[order]
        bounds = np.flatnonzero(np.diff(b_frames)) + 1
        gs = np.concatenate(([0], bounds)).astype(np.int64)
        ge = np.concatenate((bounds, [n])).astype(np.int64)
        b = _kernels.close_pair_counts_numpy(
            gs, ge, track_idx[order], us[order], vs[order], dus[order], dvs[order], 40.0, 12
        )
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])


class TestBackendSelection:
    def test_active_backend_reported(self):
        assert backend_name() in ("numba", "numpy")

    @pytest.mark.skipif(not NUMBA_ENABLED, reason="numba backend not active")
    def test_env_flag_forces_numpy_backend(self):
        code = "from speedstudy._accel import backend_name; print(backend_name())"
        env = dict(os.environ, **{DISABLE_ENV: "1"})
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True
        )
        assert out.stdout.strip() == "numpy"
