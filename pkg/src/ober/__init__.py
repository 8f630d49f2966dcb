"""Outcome-based educational recommender: outcome model, event log, mastery,
pluggable recommenders, split-test metrics and a learner simulator."""

from .config import AppConfig, load_config
from .errors import OberError
from .events import EventLog, InteractionEvent, LogSnapshot, Session, sessionize
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    GroupMetrics,
    MasteryGrowthSeries,
    assign_group,
    mastery_growth,
    mastery_metric,
    relevance,
    report,
    retention,
)
from .mastery import MasteryReport, mastery_report, outcome_mastery, rollup_mastery, total_mastery
from .outcomes import (
    AlignmentSet,
    CoverageReport,
    ItemCatalog,
    LearningModel,
    OutcomeForest,
    audit_coverage,
    load_alignments,
    load_items,
    load_model,
    load_outcomes,
)
from .recommenders import (
    RecommendationEngine,
    RecommendationList,
    RecommendationRequest,
    RecommenderConfig,
)
from .simulator import LearnerProfile, SimulationConfig, generate_population, simulate

__version__ = "0.1.0"
