"""Streaming construction of unit-sum blocks partitioning [kd, infinity).

Given coprime n, d and a scale k, the engine emits pairwise-disjoint
finite blocks S_0, S_1, ... of integers >= kd, each with reciprocal sum
exactly 1/(kd), whose union covers an ever-growing initial segment of
[kd, infinity).  Consecutive runs of kn blocks then merge into groups
with reciprocal sum n/d.

Each block is built from the previous one: the previous block's elements
seed a working multiset, and the smallest "offending" element is split
(one story at y replaced by stories at y+1 and y(y+1)) until no offender
remains.  An element offends when it already belongs to an earlier block
(it must vanish entirely) or carries multiplicity >= 2 (it must thin
down to a single story).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import (
    BudgetExhaustedError,
    CannotAdvanceError,
    IncompleteGroupError,
    InvalidParametersError,
    UnitpartError,
)
from .towers import TowerMultiset, is_simple, sigma_of, vital_split

__all__ = [
    "Parameters",
    "Block",
    "Group",
    "Theorem1State",
    "init_state",
    "find_offending",
    "advance",
    "next_block",
    "blocks_stream",
    "frontier",
    "group_blocks",
]


@dataclass(frozen=True)
class Parameters:
    """Run parameters: target sum n/d at scale k, with n and d coprime."""

    k: int
    n: int
    d: int

    def __post_init__(self):
        for name in ("k", "n", "d"):
            value = getattr(self, name)
            if value < 1:
                raise InvalidParametersError(f"{name} must be >= 1, got {value}")
        if gcd(self.n, self.d) != 1:
            raise InvalidParametersError(
                f"n and d must be coprime, got gcd({self.n}, {self.d}) = "
                f"{gcd(self.n, self.d)}"
            )

    @property
    def kd(self) -> int:
        return self.k * self.d

    @property
    def kn(self) -> int:
        return self.k * self.n


@dataclass(frozen=True)
class Block:
    """A finalized block: distinct elements >= kd with sum of reciprocals 1/kd."""

    index: int
    elements: tuple[int, ...]
    sigma: Fraction
    steps_used: int
    frontier_after: int

    @property
    def max_element(self) -> int:
        return self.elements[-1]


@dataclass(frozen=True)
class Group:
    """Union of kn consecutive blocks; reciprocal sum n/d."""

    index: int
    block_indices: tuple[int, ...]
    elements: tuple[int, ...]
    sigma: Fraction


@dataclass(frozen=True)
class Theorem1State:
    """Resumable run state.

    `transitional` is the working multiset for the block currently under
    construction (block number `block_index`); `step_index` counts the
    splits spent on it so far.  `used` is exactly the union of completed
    block elements, and `frontier` is the largest L with [kd, L] fully
    inside `used` (kd - 1 when nothing is covered yet).
    """

    params: Parameters
    completed: tuple[Block, ...]
    used: frozenset[int]
    transitional: TowerMultiset
    block_index: int
    step_index: int
    frontier: int


def init_state(params: Parameters) -> Theorem1State:
    """Fresh run: no completed blocks, working multiset {kd}."""
    return Theorem1State(
        params=params,
        completed=(),
        used=frozenset(),
        transitional=TowerMultiset.from_elements([params.kd]),
        block_index=0,
        step_index=0,
        frontier=params.kd - 1,
    )


def find_offending(m: TowerMultiset, used: frozenset[int] | set[int]) -> int | None:
    """Smallest y that must still be split, or None when m is finalizable.

    y offends when y is in `used` (any multiplicity) or has multiplicity
    >= 2; None is returned iff m is simple and disjoint from `used`.
    """
    for y, mult in m.items():
        if y in used or mult >= 2:
            return y
    return None


def advance(state: Theorem1State) -> Theorem1State:
    """Split the smallest offending element once."""
    y = find_offending(state.transitional, state.used)
    if y is None:
        raise CannotAdvanceError(
            f"block {state.block_index} is complete; no offending element"
        )
    return Theorem1State(
        params=state.params,
        completed=state.completed,
        used=state.used,
        transitional=vital_split(state.transitional, y),
        block_index=state.block_index,
        step_index=state.step_index + 1,
        frontier=state.frontier,
    )


def _audit_final(elements: tuple[int, ...], state: Theorem1State) -> Fraction:
    """Always-on finalization audit; returns the block's exact sigma."""
    kd = state.params.kd
    sigma = sigma_of(TowerMultiset.from_elements(elements))
    if sigma != Fraction(1, kd):
        raise UnitpartError(
            f"finalization audit failed: block {state.block_index} has "
            f"sigma {sigma}, expected 1/{kd}"
        )
    if any(e < kd for e in elements):
        raise UnitpartError(
            f"finalization audit failed: block {state.block_index} contains "
            f"an element below {kd}"
        )
    overlap = state.used.intersection(elements)
    if overlap:
        raise UnitpartError(
            f"finalization audit failed: block {state.block_index} overlaps "
            f"earlier blocks at {sorted(overlap)[:5]}"
        )
    return sigma


def _check_invariants(mults: dict[int, int], expected_sigma: Fraction) -> None:
    for y, mult in mults.items():
        if mult > y:
            raise UnitpartError(f"height invariant violated: {y}^({mult})")
    sigma = sigma_of(TowerMultiset(mults.items()))
    if sigma != expected_sigma:
        raise UnitpartError(
            f"sum invariant violated: sigma {sigma} != {expected_sigma}"
        )


def next_block(
    state: Theorem1State,
    step_budget: int | None = None,
    check_each_step: bool = False,
) -> tuple[Theorem1State, Block]:
    """Normalize the working multiset and finalize it as the next block.

    Splits at most `step_budget` times in this invocation (None means
    unbounded); if the block is still unfinished the call raises
    BudgetExhaustedError carrying a state that resumes exactly where it
    stopped.  `check_each_step` re-verifies the exact-sum and
    height-<=-base invariants after every split.
    """
    if step_budget is not None and step_budget < 0:
        raise ValueError(f"step budget must be >= 0, got {step_budget}")
    params = state.params
    used = state.used
    mults: dict[int, int] = dict(state.transitional.items())
    expected_sigma = Fraction(1, params.kd)

    heap = [y for y, m in mults.items() if y in used or m >= 2]
    heapq.heapify(heap)
    spent = 0
    steps = state.step_index

    while heap:
        y = heapq.heappop(heap)
        m = mults.get(y, 0)
        if m == 0 or (y not in used and m < 2):
            continue  # stale heap entry
        if step_budget is not None and spent >= step_budget:
            suspended = Theorem1State(
                params=params,
                completed=state.completed,
                used=used,
                transitional=TowerMultiset(mults.items()),
                block_index=state.block_index,
                step_index=steps,
                frontier=state.frontier,
            )
            raise BudgetExhaustedError(suspended)
        if m == 1:
            del mults[y]
        else:
            mults[y] = m - 1
        for z in (y + 1, y * (y + 1)):
            mults[z] = mults.get(z, 0) + 1
            if z in used or mults[z] >= 2:
                heapq.heappush(heap, z)
        if y in mults and (y in used or mults[y] >= 2):
            heapq.heappush(heap, y)
        spent += 1
        steps += 1
        if check_each_step:
            _check_invariants(mults, expected_sigma)

    elements = tuple(sorted(mults))
    sigma = _audit_final(elements, state)
    new_used = used.union(elements)
    front = state.frontier
    while front + 1 in new_used:
        front += 1
    block = Block(
        index=state.block_index,
        elements=elements,
        sigma=sigma,
        steps_used=steps,
        frontier_after=front,
    )
    next_state = Theorem1State(
        params=params,
        completed=state.completed + (block,),
        used=new_used,
        transitional=TowerMultiset.from_elements(elements),
        block_index=state.block_index + 1,
        step_index=0,
        frontier=front,
    )
    return next_state, block


def blocks_stream(
    params: Parameters,
    count: int,
    step_budget: int | None = None,
    state: Theorem1State | None = None,
    check_each_step: bool = False,
) -> tuple[Theorem1State, list[Block]]:
    """Produce blocks until `count` are completed in total.

    `step_budget` bounds the splits spent in this invocation across all
    blocks; exhaustion raises BudgetExhaustedError whose state carries
    the completed blocks, so nothing is lost.  Pass a previously
    suspended state to resume.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if state is None:
        state = init_state(params)
    elif state.params != params:
        raise InvalidParametersError(
            f"resume state was built for {state.params}, not {params}"
        )
    new_blocks: list[Block] = []
    remaining = step_budget
    while state.block_index < count:
        before = state.step_index
        try:
            state, block = next_block(
                state, step_budget=remaining, check_each_step=check_each_step
            )
        except BudgetExhaustedError:
            raise
        new_blocks.append(block)
        if remaining is not None:
            remaining -= block.steps_used - before
    return state, new_blocks


def frontier(blocks: list[Block], kd: int) -> int:
    """Largest L with [kd, L] inside the union of block elements."""
    union = set()
    for block in blocks:
        union.update(block.elements)
    level = kd - 1
    while level + 1 in union:
        level += 1
    return level


def group_blocks(blocks: list[Block], params: Parameters) -> list[Group]:
    """Dice consecutive runs of kn blocks into groups with sigma n/d."""
    kn = params.kn
    if len(blocks) % kn != 0:
        remainder = [b.index for b in blocks[len(blocks) - len(blocks) % kn :]]
        raise IncompleteGroupError(remainder, kn)
    target = Fraction(params.n, params.d)
    groups = []
    for u in range(len(blocks) // kn):
        chunk = blocks[u * kn : (u + 1) * kn]
        elements: list[int] = []
        for block in chunk:
            elements.extend(block.elements)
        sigma = sum((b.sigma for b in chunk), Fraction(0))
        if sigma != target:
            raise UnitpartError(
                f"group {u + 1} audit failed: sigma {sigma} != {target}"
            )
        groups.append(
            Group(
                index=u + 1,
                block_indices=tuple(b.index for b in chunk),
                elements=tuple(sorted(elements)),
                sigma=sigma,
            )
        )
    return groups
