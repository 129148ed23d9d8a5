from fractions import Fraction
from math import gcd

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chains import THIRDS_CHAIN, UNIT_CHAIN, walk_chain
from unitpart.errors import (
    BudgetExhaustedError,
    CannotAdvanceError,
    IncompleteGroupError,
    InvalidParametersError,
)
from unitpart.towers import parse_multiset
from unitpart.vital_engine import (
    Parameters,
    advance,
    blocks_stream,
    find_offending,
    frontier,
    group_blocks,
    init_state,
    next_block,
)


def test_unit_chain_verbatim():
    state = walk_chain(Parameters(1, 1, 1), UNIT_CHAIN)
    blocks = state.completed
    assert [b.elements for b in blocks[:3]] == [
        (1,),
        (2, 3, 6),
        (4, 5, 7, 8, 12, 13, 20, 42, 43, 56, 156, 1806),
    ]
    assert [b.steps_used for b in blocks[:3]] == [0, 2, 9]
    # the walk stops two splits into the fourth block
    assert state.block_index == 3
    assert state.step_index == 2


def test_thirds_chain_verbatim():
    state = walk_chain(Parameters(1, 2, 3), THIRDS_CHAIN)
    blocks = state.completed
    assert [b.elements for b in blocks] == [
        (3,),
        (4, 12),
        (5, 13, 20, 156),
        (6, 14, 21, 30, 157, 182, 420, 24492),
    ]
    assert [b.steps_used for b in blocks] == [0, 1, 2, 4]
    assert all(b.sigma == Fraction(1, 3) for b in blocks)


def test_thirds_fifth_block():
    # every seed element splits exactly once: 8 steps, 16 elements
    state, blocks = blocks_stream(Parameters(1, 2, 3), 5)
    fifth = blocks[4]
    assert fifth.steps_used == 8
    assert fifth.elements == (
        7, 15, 22, 31, 42, 158, 183, 210, 421, 462, 930,
        24493, 24806, 33306, 176820, 599882556,
    )
    assert fifth.sigma == Fraction(1, 3)


def test_parameters_validation():
    with pytest.raises(InvalidParametersError):
        Parameters(1, 2, 4)
    with pytest.raises(InvalidParametersError):
        Parameters(0, 1, 1)
    p = Parameters(2, 1, 5)
    assert p.kd == 10
    assert p.kn == 2


def test_init_state_examples():
    assert init_state(Parameters(1, 1, 1)).transitional == parse_multiset("{1}")
    assert init_state(Parameters(1, 2, 3)).transitional == parse_multiset("{3}")
    assert init_state(Parameters(2, 1, 5)).transitional == parse_multiset("{10}")
    assert init_state(Parameters(1, 2, 3)).frontier == 2


def test_find_offending_examples():
    used = frozenset({1, 2, 3, 6})
    assert find_offending(parse_multiset("{2,3,6}"), used) == 2
    assert find_offending(parse_multiset("{4,5,6^2,12^2,20}"), used) == 6
    done = parse_multiset("{6,14,21,30,157,182,420,24492}")
    assert find_offending(done, frozenset({3, 4, 5, 12, 13, 20, 156})) is None


def test_advance_requires_offender():
    with pytest.raises(CannotAdvanceError):
        advance(init_state(Parameters(1, 1, 1)))


def test_frontier_examples():
    _, two = blocks_stream(Parameters(1, 2, 3), 2)
    assert frontier(two, 3) == 4
    _, three = blocks_stream(Parameters(1, 1, 1), 3)
    assert frontier(three, 1) == 8
    assert frontier([], 3) == 2


def test_group_blocks_thirds():
    params = Parameters(1, 2, 3)
    _, blocks = blocks_stream(params, 4)
    groups = group_blocks(blocks, params)
    assert len(groups) == 2
    assert groups[0].block_indices == (0, 1)
    assert groups[1].block_indices == (2, 3)
    assert all(g.sigma == Fraction(2, 3) for g in groups)
    assert groups[0].elements == (3, 4, 12)


def test_group_blocks_scale():
    params = Parameters(2, 1, 1)
    _, blocks = blocks_stream(params, 4)
    groups = group_blocks(blocks, params)
    assert len(groups) == 2
    assert all(g.sigma == 1 for g in groups)


def test_group_blocks_incomplete():
    params = Parameters(1, 2, 3)
    _, blocks = blocks_stream(params, 3)
    with pytest.raises(IncompleteGroupError) as info:
        group_blocks(blocks, params)
    assert info.value.group_size == 2
    assert info.value.remainder == [2]


@pytest.mark.parametrize("budget", [10, 50])
def test_suspension_resumes_identically(budget):
    params = Parameters(1, 1, 1)
    full_state, _ = blocks_stream(params, 4)

    state = None
    rounds = 0
    while True:
        try:
            state, _ = blocks_stream(params, 4, step_budget=budget, state=state)
            break
        except BudgetExhaustedError as exc:
            state = exc.state
            rounds += 1
    assert rounds > 0
    assert state.completed == full_state.completed
    assert state.used == full_state.used
    assert state.frontier == full_state.frontier


def test_next_block_suspension_keeps_step_count():
    params = Parameters(1, 1, 1)
    state, _ = blocks_stream(params, 2)
    with pytest.raises(BudgetExhaustedError) as info:
        next_block(state, step_budget=5)
    suspended = info.value.state
    assert suspended.step_index == 5
    resumed, block = next_block(suspended)
    assert block.steps_used == 9
    assert block.elements == (4, 5, 7, 8, 12, 13, 20, 42, 43, 56, 156, 1806)


def test_checked_stream_matches_plain():
    params = Parameters(1, 1, 1)
    _, plain = blocks_stream(params, 4)
    _, checked = blocks_stream(params, 4, check_each_step=True)
    assert plain == checked


def test_stream_argument_errors():
    params = Parameters(1, 1, 1)
    with pytest.raises(ValueError):
        blocks_stream(params, 0)
    state, _ = blocks_stream(params, 2)
    with pytest.raises(InvalidParametersError):
        blocks_stream(Parameters(1, 2, 3), 3, state=state)
    with pytest.raises(ValueError):
        next_block(init_state(params), step_budget=-1)


small_params = st.sampled_from(
    [
        Parameters(k, n, d)
        for k in range(1, 13)
        for d in range(1, 13)
        if k * d <= 12
        for n in range(1, 13)
        if gcd(n, d) == 1
    ]
)


@settings(deadline=None, max_examples=25)
@given(small_params)
def test_block_invariants_hold(params):
    state, blocks = blocks_stream(params, 3, check_each_step=True)
    seen: set[int] = set()
    last_frontier = params.kd - 1
    for block in blocks:
        assert block.sigma == Fraction(1, params.kd)
        assert all(e >= params.kd for e in block.elements)
        assert not seen.intersection(block.elements)
        seen.update(block.elements)
        assert block.frontier_after > last_frontier
        last_frontier = block.frontier_after
    assert frontier(blocks, params.kd) == state.frontier
