"""statediff: test-based bug localization by state-annotated trace differencing."""

from .depgraph import (
    CdEdge,
    ClassDependenceGraph,
    DdEdge,
    NoExitPath,
    PostDominatorTree,
    assemble_cidg,
    compute_postdominators,
    derive_control_dependences,
    derive_data_dependences,
    to_dot,
)
from .exprs import Expr, ExprSyntaxError, UndefinedVariable, evaluate, parse_expr
from .localizer import (
    BugReport,
    ComparisonMatrix,
    DecisionTable,
    EmptySuite,
    LengthMismatch,
    MultipleFailures,
    NoFailingTest,
    NoPassingTest,
    SelectionResult,
    build_comparison_matrix,
    build_decision_table,
    coverage_distance,
    find_divergence,
    generate_bug_report,
    localize_traces,
    select_nearest_pass,
)
from .model import (
    Diagnostic,
    DuplicateId,
    ModelSyntaxError,
    NodeKind,
    ProgramModel,
    ProgramNode,
    StateLabel,
    UnknownClass,
    UnknownNode,
    load_model,
    model_to_text,
    parse_model,
    validate_model,
)
from .runner import (
    DomainTooLarge,
    ExecutionTrace,
    HaltReason,
    InputExhausted,
    TestCase,
    TestSuite,
    Verdict,
    enumerate_inputs,
    load_suite,
    restrict_trace,
    run_suite,
    run_test,
)
from .statechart import (
    ActionTuple,
    AmbiguousState,
    StateChart,
    TransitionRow,
    build_transition_table,
    decode_state,
    load_chart,
)

__version__ = "0.1.0"
