"""Next-activity and next-timestamp prediction from event logs.

Event logs are encoded as per-activity feature matrices, optionally
propagated over the log's directly-follows graph by a graph-convolution
layer, and fed to small dense networks trained one sample at a time.
"""

__version__ = "0.1.0"

from .dfg import Dfg, PropagationKind, PropagationMatrix, export_dot, mine_dfg, propagation_matrix
from .evaluation import StageMetrics, accuracy_by_stage, mae_by_stage, render_report
from .eventlog import (Case, Event, EventLog, LogStats, chronological_case_split, log_statistics,
                       parse_event_log, sample_validation_split, write_event_log)
from .features import (FeatureScaling, Sample, build_samples, encode_prefix, fit_feature_scaling,
                       quarter_of, quartile_of)
from .models import (Head, Model, ModelConfig, TrainedModel, Variant, build_model, load_checkpoint,
                     predict_event, predict_time, save_checkpoint)
from .training import TrainConfig, TrainHistory, run_experiment, train_single

__all__ = [
    "Case", "Dfg", "Event", "EventLog", "FeatureScaling", "Head", "LogStats", "Model", "ModelConfig",
    "PropagationKind", "PropagationMatrix", "Sample", "StageMetrics", "TrainConfig", "TrainHistory",
    "TrainedModel", "Variant", "accuracy_by_stage", "build_model", "build_samples",
    "chronological_case_split", "encode_prefix", "export_dot", "fit_feature_scaling", "load_checkpoint",
    "log_statistics", "mae_by_stage", "mine_dfg", "parse_event_log", "predict_event", "predict_time",
    "propagation_matrix", "quarter_of", "quartile_of", "render_report", "run_experiment",
    "sample_validation_split", "save_checkpoint", "train_single", "write_event_log",
]
