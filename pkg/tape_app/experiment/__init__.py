from .ensemble import accuracy, ensemble_mean
from .schemas import AblationReport, ExperimentReport, MetricSummary, PromptSweepReport, SplitMetrics

__all__ = [
    "AblationReport",
    "ExperimentReport",
    "MetricSummary",
    "PromptSweepReport",
    "SplitMetrics",
    "accuracy",
    "ensemble_mean",
]
