"""The TU collaboration game built from coalitional regrets."""

from .core import axiom_report, balancing_weights, core_nonempty, is_convex, is_in_core
from .game import (
    Allocation,
    RegretTable,
    TUGame,
    Violation,
    ViolationReport,
    format_coalition,
    grand_payout,
    mask_of,
    members_of,
    read_game_csv,
    read_regret_table_csv,
    value_from_regrets,
    write_allocation_csv,
    write_game_csv,
    write_raw_regrets_csv,
    write_regret_table_csv,
)
from .shapley import EXACT_LIMIT, shapley_exact, shapley_mc, shapley_weights
from .simplex import LPResult, UnboundedLP, simplex_max

__all__ = [
    "EXACT_LIMIT",
    "Allocation",
    "LPResult",
    "RegretTable",
    "TUGame",
    "UnboundedLP",
    "Violation",
    "ViolationReport",
    "axiom_report",
    "balancing_weights",
    "core_nonempty",
    "format_coalition",
    "grand_payout",
    "is_convex",
    "is_in_core",
    "mask_of",
    "members_of",
    "read_game_csv",
    "read_regret_table_csv",
    "shapley_exact",
    "shapley_mc",
    "shapley_weights",
    "simplex_max",
    "value_from_regrets",
    "write_allocation_csv",
    "write_game_csv",
    "write_raw_regrets_csv",
    "write_regret_table_csv",
]
