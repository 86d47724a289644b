"""Spot-price index construction and VM selection policy simulation."""

from .catalog import (
    Catalog,
    ResourceRequirement,
    Scope,
    VmFamily,
    VmSpec,
    filter_candidates,
    load_catalog,
)
from .errors import (
    ConflictError,
    CoverageError,
    GapError,
    InvariantError,
    OutOfRangeError,
    ParseError,
    SelectionError,
    SimulationError,
    SpotIndexError,
)
from .index import (
    IndexCurve,
    IndexSample,
    IndexSeries,
    compare_indices,
    denormalize,
    index_at,
    index_sample,
    index_series,
    normalize,
    on_demand_index,
)
from .policies import (
    BalancedPolicy,
    CandidateView,
    CostCentricPolicy,
    AvailabilityAwarePolicy,
    POLICIES,
    Policy,
    PolicyContext,
    PolicyDecision,
    StaticPolicy,
    build_policy,
    sharpe,
    utilized_price,
)
from .prices import PricePoint, PriceTrace, ingest_traces, is_capped, load_trace_dir, write_trace_jsonl
from .simulator import (
    JobSpec,
    MigrationModel,
    Phase,
    RunParams,
    SimReport,
    aggregate_reports,
    ledger_from_report,
    normalize_report,
    on_demand_baseline,
    replay,
    run_simulation,
    run_trials,
)
from .synth import SynthMarketSpec, generate, generate_market_suite, generate_with_warmup
from .tracking import LedgerEvent, TrackingLedger, gain, migration_loss, should_migrate

__version__ = "0.1.0"

__all__ = [
    "AvailabilityAwarePolicy",
    "BalancedPolicy",
    "CandidateView",
    "Catalog",
    "ConflictError",
    "CostCentricPolicy",
    "CoverageError",
    "GapError",
    "IndexCurve",
    "IndexSample",
    "IndexSeries",
    "InvariantError",
    "JobSpec",
    "LedgerEvent",
    "MigrationModel",
    "OutOfRangeError",
    "POLICIES",
    "ParseError",
    "Phase",
    "Policy",
    "PolicyContext",
    "PolicyDecision",
    "PricePoint",
    "PriceTrace",
    "ResourceRequirement",
    "RunParams",
    "Scope",
    "SelectionError",
    "SimReport",
    "SimulationError",
    "SpotIndexError",
    "StaticPolicy",
    "SynthMarketSpec",
    "TrackingLedger",
    "VmFamily",
    "VmSpec",
    "aggregate_reports",
    "build_policy",
    "compare_indices",
    "denormalize",
    "filter_candidates",
    "gain",
    "generate",
    "generate_market_suite",
    "generate_with_warmup",
    "index_at",
    "index_sample",
    "index_series",
    "ingest_traces",
    "is_capped",
    "ledger_from_report",
    "load_catalog",
    "load_trace_dir",
    "migration_loss",
    "normalize",
    "normalize_report",
    "on_demand_baseline",
    "on_demand_index",
    "replay",
    "run_simulation",
    "run_trials",
    "sharpe",
    "should_migrate",
    "utilized_price",
    "write_trace_jsonl",
]
