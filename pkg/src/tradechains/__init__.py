"""Product-level value-chain inference from regional trade specialization."""

from .allocation import AllocationEntry, AllocationReport, BilateralFlowTable, allocate
from .evalbench import HitRates, SynthWorldConfig, hit_rates, random_baseline, synth_world
from .icio import (
    IcioTensor,
    LabelMatrix,
    binarize_ti,
    clean_icio,
    icio_specialization,
    industry_flows,
    trade_intensity,
)
from .inference import (
    Link,
    LinkSet,
    ParamSet,
    RankedCandidates,
    backward_candidates,
    backward_forward,
    forward_candidates,
    infer_all,
)
from .ingest import (
    CleaningPolicy,
    TradeDataError,
    TradeTable,
    filter_regions,
    parse_regional_trade,
    reconcile_products,
)
from .specialization import (
    SpecializationTable,
    double_normalize,
    rca_matrix,
    specialized_locations,
)
from .tuning import GridSpec, TuneResult, evaluate_params, grid_search, precision

__version__ = "0.1.0"

__all__ = [
    "AllocationEntry",
    "AllocationReport",
    "BilateralFlowTable",
    "CleaningPolicy",
    "GridSpec",
    "HitRates",
    "IcioTensor",
    "LabelMatrix",
    "Link",
    "LinkSet",
    "ParamSet",
    "RankedCandidates",
    "SpecializationTable",
    "SynthWorldConfig",
    "TradeDataError",
    "TradeTable",
    "TuneResult",
    "allocate",
    "backward_candidates",
    "backward_forward",
    "binarize_ti",
    "clean_icio",
    "double_normalize",
    "evaluate_params",
    "filter_regions",
    "forward_candidates",
    "grid_search",
    "hit_rates",
    "icio_specialization",
    "industry_flows",
    "infer_all",
    "parse_regional_trade",
    "precision",
    "random_baseline",
    "rca_matrix",
    "reconcile_products",
    "specialized_locations",
    "synth_world",
    "trade_intensity",
]
