"""Scene configuration and run manifest loading.

A scene config JSON pins everything site-specific: calibration
correspondences, area-of-interest polygon (image px), approach zone (world
meters), travel direction, tracker class ids, and all analysis thresholds. A
run manifest points a scene at one detection CSV set + recorded hours per
phase.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analytics import Phase
from .errors import ConfigError
from .geometry import Correspondence, ImagePoint, WorldPoint
from .ingest import ClassLabel, SceneGeometry


@dataclass(frozen=True)
class Thresholds:
    stationary_m: float = 2.0
    following_px: float = 40.0
    following_frac: float = 0.5
    direction_deg: float = 45.0
    stopgo_mph: float = 5.0
    slowdown_mph: float = 10.0
    min_track_s: float = 0.5

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) <= 0:
                raise ConfigError(f"thresholds.{name}: must be positive")


@dataclass(frozen=True)
class SceneConfig:
    location_id: int
    name: str
    fps: float
    correspondences: tuple[Correspondence, ...]
    aoi_polygon: np.ndarray
    approach_zone: np.ndarray
    travel_direction: np.ndarray
    class_map: dict[int, ClassLabel]
    thresholds: Thresholds = field(default_factory=Thresholds)
    percentile_method: str = "interpolate"
    representative: str = "per_vehicle"
    v_mean_reduction: str = "min"
    intersection_type: str = "unsignalized"
    histogram_bin_mph: float = 1.0

    def geometry(self) -> SceneGeometry:
        return SceneGeometry(
            fps=self.fps,
            aoi_polygon=self.aoi_polygon,
            approach_zone=self.approach_zone,
            travel_direction=self.travel_direction,
            class_map=self.class_map,
        )


@dataclass(frozen=True)
class PhaseInput:
    phase: Phase
    detection_paths: tuple[Path, ...]
    hours: float


@dataclass(frozen=True)
class RunManifest:
    scene_config_path: Path
    phases: tuple[PhaseInput, ...]


def _get(data: dict, key: str, path: str):
    if key not in data:
        raise ConfigError(f"{path}.{key}: missing")
    return data[key]


def _polygon(data, path: str) -> np.ndarray:
    try:
        arr = np.array(data, dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a list of [x, y] pairs") from None
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise ConfigError(f"{path}: expected at least 3 [x, y] pairs")
    return arr


def scene_config_from_dict(data: dict, path: str = "scene") -> SceneConfig:
    corr_raw = _get(data, "calibration", path)
    corr_list = _get(corr_raw, "correspondences", f"{path}.calibration")
    corrs = []
    for i, c in enumerate(corr_list):
        cp = f"{path}.calibration.correspondences[{i}]"
        try:
            wx, wy = (float(v) for v in _get(c, "world", cp))
            iu, iv = (float(v) for v in _get(c, "image", cp))
        except (TypeError, ValueError):
            raise ConfigError(f"{cp}: world and image must be [x, y] numbers") from None
        corrs.append(Correspondence(WorldPoint(wx, wy), ImagePoint(iu, iv)))
    if len(corrs) < 4:
        raise ConfigError(f"{path}.calibration.correspondences: need at least 4, got {len(corrs)}")

    fps = float(_get(data, "fps", path))
    if fps <= 0:
        raise ConfigError(f"{path}.fps: must be positive")

    direction = np.array(_get(data, "travel_direction", path), dtype=np.float64)
    norm = float(np.hypot(direction[0], direction[1]))
    if norm == 0:
        raise ConfigError(f"{path}.travel_direction: must be nonzero")
    direction = direction / norm

    class_map = {}
    for key, value in _get(data, "class_map", path).items():
        try:
            class_map[int(key)] = ClassLabel(value)
        except ValueError:
            raise ConfigError(f"{path}.class_map.{key}: unknown label {value!r}") from None

    thresholds = Thresholds()
    if "thresholds" in data:
        unknown = set(data["thresholds"]) - set(Thresholds.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"{path}.thresholds: unknown keys {sorted(unknown)}")
        thresholds = replace(thresholds, **{k: float(v) for k, v in data["thresholds"].items()})

    def _choice(key: str, options: tuple[str, ...], default: str) -> str:
        value = data.get(key, default)
        if value not in options:
            raise ConfigError(f"{path}.{key}: expected one of {options}, got {value!r}")
        return value

    cfg = SceneConfig(
        location_id=int(_get(data, "location_id", path)),
        name=str(data.get("name", "")),
        fps=fps,
        correspondences=tuple(corrs),
        aoi_polygon=_polygon(_get(data, "aoi_polygon", path), f"{path}.aoi_polygon"),
        approach_zone=_polygon(_get(data, "approach_zone", path), f"{path}.approach_zone"),
        travel_direction=direction,
        class_map=class_map,
        thresholds=thresholds,
        percentile_method=_choice("percentile_method", ("interpolate", "nearest_rank"), "interpolate"),
        representative=_choice("representative", ("per_vehicle", "per_sample"), "per_vehicle"),
        v_mean_reduction=_choice("v_mean_reduction", ("min", "mean"), "min"),
        intersection_type=_choice("intersection_type", ("unsignalized", "signalized"), "unsignalized"),
        histogram_bin_mph=float(data.get("histogram_bin_mph", 1.0)),
    )
    if cfg.histogram_bin_mph <= 0:
        raise ConfigError(f"{path}.histogram_bin_mph: must be positive")
    cfg.geometry()  # validates polygons and direction
    return cfg


def load_scene_config(path) -> SceneConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"scene config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    try:
        return scene_config_from_dict(data, path.name)
    except ValueError as exc:
        raise ConfigError(f"{path.name}: {exc}") from None


def load_manifest(path) -> RunManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    base = path.parent
    scene_path = base / _get(data, "scene_config", "manifest")
    phases_raw = _get(data, "phases", "manifest")
    if not phases_raw:
        raise ConfigError("manifest.phases: need at least one phase")
    phases = []
    for i, entry in enumerate(phases_raw):
        pp = f"manifest.phases[{i}]"
        try:
            phase = Phase(_get(entry, "phase", pp))
        except ValueError:
            raise ConfigError(
                f"{pp}.phase: expected one of {[p.value for p in Phase]}"
            ) from None
        hours = float(_get(entry, "hours", pp))
        if hours <= 0:
            raise ConfigError(f"{pp}.hours: must be positive")
        paths = tuple(base / p for p in _get(entry, "detections", pp))
        if not paths:
            raise ConfigError(f"{pp}.detections: need at least one CSV path")
        phases.append(PhaseInput(phase, paths, hours))
    return RunManifest(scene_path, tuple(phases))
