"""speedstudy: calibrated vehicle speeds and before/after intervention
reports from fixed-camera multi-object-tracker output."""

from ._accel import backend_name
from .analytics import (
    ComparisonRow,
    Phase,
    PhaseSummary,
    build_phase_summary,
    compare_phases,
    delta_mismatches,
    histogram,
    mean_speed,
    percent_change,
    percentile_85,
)
from .behavior import (
    ManeuverClass,
    ManeuverObservation,
    approach_speed,
    classify_maneuver,
    maneuver_distribution,
)
from .geometry import (
    Correspondence,
    Homography,
    ImagePoint,
    WorldPoint,
    image_to_world,
    reprojection_rmse,
    solve_homography,
    world_to_image,
)
from .ingest import (
    ClassLabel,
    Detection,
    SceneGeometry,
    Track,
    anchor_point,
    assemble_tracks,
    clip_to_aoi,
    filter_direction,
    filter_following,
    filter_stationary,
    filter_vehicle_type,
    parse_track_file,
    run_filter_cascade,
    serialize_detections,
)
from .kinematics import (
    MPS_TO_MPH,
    SpeedSample,
    TrackKinematics,
    WorldTrack,
    speed_series,
    to_world_track,
    track_kinematics,
)
from .simulator import (
    Constant,
    GroundTruth,
    PiecewiseLinear,
    SyntheticVehicle,
    TrapezoidStop,
    example_roadside_homography,
    integrate_profile,
    render_scene,
)

__version__ = "0.1.0"
