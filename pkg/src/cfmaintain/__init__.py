"""Maintaining counterfactual explanations for online classifiers under concept drift."""
from .core import CfeState, LabeledBuffer, LabeledInstance, make_rng
from .generators import (GenerationError, GrowingSpheres, NearestNeighbor, RobX,
                         gs_generate, nn_generate, robx_generate, stability)
from .maintenance import (CounterfactualMaintainer, MaintenanceConfig, apply_update,
                          maintain_population, maintain_step, plausibility_direction,
                          validity_direction)
from .metrics import MetricsConfig, checkpoint_evaluate, kde_score, knn_score, validity_metric
from .models import HoeffdingTreeClassifier, OnlineLogisticRegression
from .streams import DriftingStream, DriftSchedule, StreamSpec

__version__ = "0.1.0"

__all__ = [
    "CfeState", "LabeledBuffer", "LabeledInstance", "make_rng",
    "GenerationError", "GrowingSpheres", "NearestNeighbor", "RobX",
    "gs_generate", "nn_generate", "robx_generate", "stability",
    "CounterfactualMaintainer", "MaintenanceConfig", "apply_update", "maintain_population",
    "maintain_step", "plausibility_direction", "validity_direction",
    "MetricsConfig", "checkpoint_evaluate", "kde_score", "knn_score", "validity_metric",
    "HoeffdingTreeClassifier", "OnlineLogisticRegression",
    "DriftingStream", "DriftSchedule", "StreamSpec",
]
