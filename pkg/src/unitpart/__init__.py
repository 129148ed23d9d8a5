"""Exact-arithmetic construction of unit-fraction partitions.

Block streams with reciprocal sum 1/kd dicing into groups summing n/d,
staged families approximating an infinite-set partition of [2kd, inf),
and a successor/star toolkit: divisibility chains, coprime
certificates, valuation stability, budgeted factorization, ladders.
"""

import sys

# Stage builds legitimately produce elements tens of thousands of digits
# long; rendering and parsing them must not trip the interpreter's
# default int/str conversion cap.  Raised, never lowered (0 = unlimited).
_INT_STR_DIGITS = 2_000_000
if hasattr(sys, "get_int_max_str_digits"):
    if 0 < sys.get_int_max_str_digits() < _INT_STR_DIGITS:
        sys.set_int_max_str_digits(_INT_STR_DIGITS)

from .core_arith import Nat, Rat, format_rat, nat_gcd, nat_valuation, parse_rat, rat_sum
from .dyadic_engine import (
    StageFamily,
    audit_stage,
    expand_words,
    extend_stage,
    group_stage,
    init_stage1,
    prefix_stability_report,
    resume_stage,
    stage_sigma_target,
)
from .errors import (
    BudgetExhaustedError,
    CannotAdvanceError,
    CertificateError,
    CheckpointFormatError,
    ChecksumError,
    ConstructionFailureError,
    IncompleteGroupError,
    InvalidParametersError,
    MissingElementError,
    UnitpartError,
)
from .starlab import (
    Factorization,
    Ladder,
    coprime_certificate,
    divisibility_chain_check,
    factorize,
    format_ladder,
    ladder,
    star_iter,
    successor_and_star,
    valuation_stability_check,
)
from .towers import TowerMultiset, is_simple, sigma_of, stack, vital_split
from .verify import verify_artifact
from .vital_engine import (
    Block,
    Group,
    Parameters,
    Theorem1State,
    advance,
    blocks_stream,
    find_offending,
    frontier,
    group_blocks,
    init_state,
    next_block,
)

__version__ = "0.1.0"
