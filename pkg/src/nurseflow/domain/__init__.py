from .catalog import default_catalog, toy_catalog
from .rules import (
    SoftCounts,
    Violation,
    ViolationCapError,
    block_hard_violations,
    block_soft_counts,
    count_soft_violations,
    policy_violations,
    validate_roster,
)
from .types import (
    SLOTS,
    CostParams,
    Horizon,
    Instance,
    ModelError,
    NurseProfile,
    Roster,
    Shift,
    ShiftCatalog,
    Slot,
    StageLimits,
    WorkPolicy,
    as_demand,
    horizon_limits,
    stage_limits,
    supply_matrix,
)
