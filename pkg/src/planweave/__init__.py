"""Human-steerable co-planning over multi-agent plan DAGs.

The package splits into layers: plan values and graph algorithms (model,
graph, validate, diff, serialize), deterministic structural editing and
subgraph reintegration (edits, reintegrate, history), execution (expreval,
execution), planner backends and revision flows (prompts, backends,
revision), benchmarking and evaluation (goldplans, benchgen, metrics,
harness), and the interactive session service plus CLI (service, cli).
"""

from .model import (
    AgentKind,
    DiffSummary,
    NodeStatus,
    Plan,
    PlanEdge,
    PlanNode,
    SubgraphSelection,
    VarBinding,
    make_plan,
    selection_of,
)
from .validate import ValidationLevel, ValidationReport, Violation, validate_plan
from .serialize import ParseError, parse_plan, plan_from_doc, plan_to_doc, serialize_plan
from .diff import plan_diff
from .edits import (
    AddEdge,
    AddNode,
    DeleteEdge,
    DeleteNode,
    DuplicateNode,
    EditError,
    MergeNodes,
    NodeSpec,
    SequenceFailure,
    SetAgent,
    SetInputs,
    SetOutputs,
    SetTask,
    SplitMode,
    SplitNode,
    apply_op,
    apply_sequence,
    merge_nodes,
    split_node,
)
from .reintegrate import (
    FLEXIBLE,
    FROZEN,
    BoundaryMismatchError,
    MalformedRevisionError,
    ReintegrationPolicy,
    ReintegrationResult,
    reintegrate,
)
from .history import HistoryStack, record, redo, undo
from .execution import (
    ExecutionFailure,
    InvalidPlanError,
    MathExecutor,
    ResultBundle,
    build_executors,
    execute_all,
    execute_node,
)
from .backends import (
    BackendError,
    CannedBackend,
    FaultInjectorBackend,
    LiveBackend,
    OracleBackend,
    PlannerBackend,
    SplitSpec,
    build_backend,
)
from .revision import (
    CONDITION_SPECS,
    FeedbackScope,
    FeedbackText,
    RevisionCondition,
    RevisionOutcome,
    RevisionStatus,
    auto_merge,
    auto_split,
    generate,
    revise_by_edit_sequence,
    revise_global,
    revise_targeted,
)
from .goldplans import GoldPlan, GoldPlanSet, Subset, gold_plan_set
from .benchgen import (
    BenchmarkItem,
    BreakOpKind,
    FeedbackStyle,
    GenerationConfig,
    break_plan,
    generate_dataset,
    load_dataset,
    parse_feedback,
    render_feedback,
    store_dataset,
)
from .metrics import (
    GedResult,
    MetricReport,
    ged,
    semantic_similarity,
    stability,
    value_equal,
)
from .harness import ExperimentConfig, repair_natural, run_experiment
from .service import build_app, serve

__version__ = "0.1.0"

__all__ = [
    "AgentKind",
    "DiffSummary",
    "NodeStatus",
    "Plan",
    "PlanEdge",
    "PlanNode",
    "SubgraphSelection",
    "VarBinding",
    "make_plan",
    "selection_of",
    "ValidationLevel",
    "ValidationReport",
    "Violation",
    "validate_plan",
    "ParseError",
    "parse_plan",
    "plan_from_doc",
    "plan_to_doc",
    "serialize_plan",
    "plan_diff",
    "AddEdge",
    "AddNode",
    "DeleteEdge",
    "DeleteNode",
    "DuplicateNode",
    "EditError",
    "MergeNodes",
    "NodeSpec",
    "SequenceFailure",
    "SetAgent",
    "SetInputs",
    "SetOutputs",
    "SetTask",
    "SplitMode",
    "SplitNode",
    "apply_op",
    "apply_sequence",
    "merge_nodes",
    "split_node",
    "FLEXIBLE",
    "FROZEN",
    "BoundaryMismatchError",
    "MalformedRevisionError",
    "ReintegrationPolicy",
    "ReintegrationResult",
    "reintegrate",
    "HistoryStack",
    "record",
    "redo",
    "undo",
    "ExecutionFailure",
    "InvalidPlanError",
    "MathExecutor",
    "ResultBundle",
    "build_executors",
    "execute_all",
    "execute_node",
    "BackendError",
    "CannedBackend",
    "FaultInjectorBackend",
    "LiveBackend",
    "OracleBackend",
    "PlannerBackend",
    "SplitSpec",
    "build_backend",
    "CONDITION_SPECS",
    "FeedbackScope",
    "FeedbackText",
    "RevisionCondition",
    "RevisionOutcome",
    "RevisionStatus",
    "auto_merge",
    "auto_split",
    "generate",
    "revise_by_edit_sequence",
    "revise_global",
    "revise_targeted",
    "GoldPlan",
    "GoldPlanSet",
    "Subset",
    "gold_plan_set",
    "BenchmarkItem",
    "BreakOpKind",
    "FeedbackStyle",
    "GenerationConfig",
    "break_plan",
    "generate_dataset",
    "load_dataset",
    "parse_feedback",
    "render_feedback",
    "store_dataset",
    "GedResult",
    "MetricReport",
    "ged",
    "semantic_similarity",
    "stability",
    "value_equal",
    "ExperimentConfig",
    "repair_natural",
    "run_experiment",
    "build_app",
    "serve",
    "__version__",
]
