"""Action-phase segmentation, Action-chains and driving heterogeneity scoring."""

__version__ = "0.1.0"

from .chain import (ActionChainTable, ChainEntry, TransitionModel, build_action_chains,  # noqa: E402
                    coupled_conditional, coupled_distribution, estimate, joint_transition)
from .config import IngestConfig, PipelineConfig, SegmentationConfig, VARIABLES  # noqa: E402
from .hetero import DriverScore, FlowStats, driver_dh, flow_stats, score_drivers  # noqa: E402
from .ingest import RawRecord, Trajectory, build_trajectories, load_records, smooth  # noqa: E402
from .phase import (ActionPhase, PhaseKey, PhaseLibrary, TimeLabel, build_library,  # noqa: E402
                    extract_phases, top_k)
from .segment import (Trend, TrendSegment, TrendTimeline, find_turning_points,  # noqa: E402
                      label_trends, merge_short_stable, refine_stable, segment_variable)

__all__ = [
    "ActionChainTable", "ActionPhase", "ChainEntry", "DriverScore", "FlowStats", "IngestConfig",
    "PhaseKey", "PhaseLibrary", "PipelineConfig", "RawRecord", "SegmentationConfig", "TimeLabel",
    "Trajectory", "TransitionModel", "Trend", "TrendSegment", "TrendTimeline", "VARIABLES",
    "build_action_chains", "build_library", "build_trajectories", "coupled_conditional",
    "coupled_distribution", "driver_dh", "estimate", "extract_phases", "find_turning_points",
    "flow_stats", "joint_transition", "label_trends", "load_records", "merge_short_stable",
    "refine_stable", "score_drivers", "segment_variable", "smooth", "top_k",
]
