"""Staged finite approximations of an infinite-set partition of [2kd, infinity).

Stage i holds i+1 finite sets, indexed u = 0 .. i, each with reciprocal
sum exactly (2^i - 1)/(2^i * kd).  The u = 0 set is the doubling chain
{2*kd, 4*kd, ..., 2^i*kd}; each other set is rebuilt stage by stage so
that its small elements eventually stop changing, and those stabilized
prefixes are the members of the limiting partition.

Extending a stage appends 2^(i+1)*kd to the doubling chain, grafts new
material onto each existing set (all length-u successor/star words
applied to the new chain element), rebuilds the top set from length-(i+1)
words over the whole chain, and then normalizes each candidate in order
u = 1, 2, ... with the same smallest-offender split loop the block
engine uses, against everything finalized so far.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import (
    BudgetExhaustedError,
    ConstructionFailureError,
    InvalidParametersError,
)
from .towers import TowerMultiset, sigma_of, stack
from .vital_engine import Parameters

__all__ = [
    "StageFamily",
    "StageBuildState",
    "StageAuditReport",
    "StabilityReport",
    "GroupApprox",
    "StageGrouping",
    "expand_words",
    "init_stage1",
    "extend_stage",
    "extend_stage_with_count",
    "resume_stage",
    "resume_stage_with_count",
    "stage_sigma_target",
    "prefix_stability_report",
    "group_stage",
    "audit_stage",
]

# Exact resummation cost grows roughly quadratically with the total bit
# size of a set (the final gcd dominates); beyond this bound a direct
# Fraction sum takes minutes to hours, so audits switch to the rebuild
# route instead.  600k bits keeps every direct resummation under ~0.5s.
_RESUM_BIT_LIMIT = 600_000


def _total_bits(elements) -> int:
    return sum(e.bit_length() for e in elements)


def _set_sigma(elements, certified: Fraction) -> Fraction:
    """Exact reciprocal resummation when affordable, else the certified value.

    Only for sets whose sum a stage audit has already certified: below
    the resummation bound the sum is recomputed outright, above it the
    certified value is reported rather than recomputed.
    """
    if _total_bits(elements) <= _RESUM_BIT_LIMIT:
        return sigma_of(TowerMultiset.from_elements(elements))
    return certified


@dataclass(frozen=True)
class StageFamily:
    """A completed stage: sets[u] is the ascending element tuple for index u."""

    stage: int
    params: Parameters
    sets: tuple[tuple[int, ...], ...]

    def union(self) -> set[int]:
        out: set[int] = set()
        for s in self.sets:
            out.update(s)
        return out


@dataclass(frozen=True)
class StageBuildState:
    """Suspended stage extension, resumable without data loss.

    Sets with u < current_u are finalized; `working` is the mid-
    normalization multiset for current_u.  Candidates for later u are
    recomputed deterministically, so they are not stored.
    """

    base: StageFamily
    s0_next: tuple[int, ...]
    finalized: tuple[tuple[int, ...], ...]
    current_u: int
    working: TowerMultiset
    steps_spent: int


@dataclass(frozen=True)
class StageAuditReport:
    """Outcome of the independent post-construction audit of one stage.

    sigma_route records how each set's sum was certified: "resummed"
    (direct exact Fraction sum), "rebuilt" (set reproduced by re-running
    the deterministic extension from the previous stage, with the cheap
    expansion sums checked exactly; splits conserve the sum identically,
    so exactness carries over), or "unchecked" (too large to resum and
    no previous stage was supplied).
    """

    stage: int
    sigma_ok: tuple[bool, ...]
    sigma_route: tuple[str, ...]
    disjoint: bool
    simple: bool
    s0_ok: bool
    coverage_ok: bool
    coverage_interval: tuple[int, int]
    membership: tuple[bool, ...]

    def ok(self) -> bool:
        """Membership flags are informational and do not gate success."""
        return (
            all(self.sigma_ok)
            and self.disjoint
            and self.simple
            and self.s0_ok
            and self.coverage_ok
        )

    def summary(self) -> str:
        bad = []
        if not all(self.sigma_ok):
            bad.append(
                "sigma not certified at u="
                + ",".join(
                    f"{u}({route})"
                    for u, (ok, route) in enumerate(
                        zip(self.sigma_ok, self.sigma_route)
                    )
                    if not ok
                )
            )
        if not self.disjoint:
            bad.append("sets not pairwise disjoint")
        if not self.simple:
            bad.append("repeated element inside a set")
        if not self.s0_ok:
            bad.append("doubling chain content wrong")
        if not self.coverage_ok:
            lo, hi = self.coverage_interval
            bad.append(f"coverage gap in [{lo},{hi}]")
        return f"stage {self.stage}: " + ("; ".join(bad) if bad else "all checks passed")


@dataclass(frozen=True)
class StabilityReport:
    """Prefix agreement between consecutive stages.

    stable_below[u] is the largest cutoff c with identical elements
    <= c in both stages (None when the sets are identical); the family
    value is the least of these over the shared u range.
    """

    cutoff: int
    agree_at_cutoff: tuple[bool, ...]
    stable_below: tuple[int | None, ...]
    family_stable_below: int | None


@dataclass(frozen=True)
class GroupApprox:
    """Union of kn consecutive stage sets; sigma = (n/d)(1 - 2^-i)."""

    index: int
    u_indices: tuple[int, ...]
    elements: tuple[int, ...]
    sigma: Fraction


@dataclass(frozen=True)
class StageGrouping:
    groups: tuple[GroupApprox, ...]
    ungrouped: tuple[int, ...]


def expand_words(v: int, x: int) -> TowerMultiset:
    """All 2^v values w(x) over length-v successor/star words, as a multiset.

    Letters apply left to right.  The reciprocal sum of the result is
    exactly 1/x.
    """
    if x < 2:
        raise ValueError(f"word expansion needs x >= 2, got {x}")
    if v < 0:
        raise ValueError(f"word length must be >= 0, got {v}")
    values = []
    for word in product("+*", repeat=v):
        y = x
        for letter in word:
            y = y + 1 if letter == "+" else y * (y + 1)
        values.append(y)
    return TowerMultiset.from_elements(values)


def init_stage1(params: Parameters) -> StageFamily:
    """Stage 1: doubling chain {2kd} and its one-step expansion."""
    base = 2 * params.kd
    family = StageFamily(
        stage=1,
        params=params,
        sets=((base,), (base + 1, base * (base + 1))),
    )
    report = audit_stage(family)
    if not report.ok():
        raise ConstructionFailureError(report)
    return family


def stage_sigma_target(i: int, params: Parameters) -> Fraction:
    """Exact per-set reciprocal-sum target at stage i: (2^i - 1)/(2^i * kd)."""
    if i < 1:
        raise ValueError(f"stage must be >= 1, got {i}")
    return Fraction(2**i - 1, 2**i * params.kd)


def _candidate(
    base: StageFamily, s0_next: tuple[int, ...], u: int
) -> TowerMultiset:
    """Pre-normalization candidate for index u of the next stage."""
    i = base.stage
    new_power = s0_next[-1]
    if u <= i:
        return stack(
            TowerMultiset.from_elements(base.sets[u]), expand_words(u, new_power)
        )
    candidate = TowerMultiset()
    for x in s0_next:
        candidate = stack(candidate, expand_words(i + 1, x))
    return candidate


def _run_build(
    state: StageBuildState, step_budget: int | None, audit: bool = True
) -> tuple[StageFamily, int]:
    """Drive a stage build to completion or budget suspension."""
    base = state.base
    i = base.stage
    s0_next = state.s0_next
    finalized = list(state.finalized)
    u = state.current_u
    mults: dict[int, int] = dict(state.working.items())
    steps = state.steps_spent
    spent = 0

    while True:
        used = set(s0_next)
        for done in finalized:
            used.update(done)
        heap = [y for y, m in mults.items() if y in used or m >= 2]
        heapq.heapify(heap)
        while heap:
            y = heapq.heappop(heap)
            m = mults.get(y, 0)
            if m == 0 or (y not in used and m < 2):
                continue  # stale heap entry
            if step_budget is not None and spent >= step_budget:
                raise BudgetExhaustedError(
                    StageBuildState(
                        base=base,
                        s0_next=s0_next,
                        finalized=tuple(finalized),
                        current_u=u,
                        working=TowerMultiset(mults.items()),
                        steps_spent=steps,
                    )
                )
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
        finalized.append(tuple(sorted(mults)))
        u += 1
        if u > i + 1:
            break
        mults = dict(_candidate(base, s0_next, u).items())

    family = StageFamily(
        stage=i + 1,
        params=base.params,
        sets=(s0_next,) + tuple(finalized),
    )
    if audit:
        report = audit_stage(family, prior=base)
        if not report.ok():
            raise ConstructionFailureError(report)
    return family, spent


def extend_stage(
    family: StageFamily, step_budget: int | None = None
) -> StageFamily:
    """Build stage i+1 from a completed stage i.

    `step_budget` caps the splits spent in this invocation; exhaustion
    raises BudgetExhaustedError carrying a resumable StageBuildState.
    The finished stage is audited independently and a failed audit
    raises ConstructionFailureError rather than repairing anything.
    """
    return extend_stage_with_count(family, step_budget)[0]


def extend_stage_with_count(
    family: StageFamily, step_budget: int | None = None
) -> tuple[StageFamily, int]:
    """extend_stage plus the number of splits this invocation performed."""
    s0_next = family.sets[0] + (2 ** (family.stage + 1) * family.params.kd,)
    state = StageBuildState(
        base=family,
        s0_next=s0_next,
        finalized=(),
        current_u=1,
        working=_candidate(family, s0_next, 1),
        steps_spent=0,
    )
    return _run_build(state, step_budget)


def resume_stage(
    state: StageBuildState, step_budget: int | None = None
) -> StageFamily:
    """Continue a suspended stage build; same contract as extend_stage."""
    return _run_build(state, step_budget)[0]


def resume_stage_with_count(
    state: StageBuildState, step_budget: int | None = None
) -> tuple[StageFamily, int]:
    """resume_stage plus the number of splits this invocation performed."""
    return _run_build(state, step_budget)


def _conservation_anchors_ok(prior: StageFamily, family: StageFamily) -> bool:
    """Cheap exact sums backing the rebuild route.

    Every grafted expansion must sum to exactly 1/new_power, the rebuilt
    top candidate to the full next-stage target, and prior sets are
    resummed where affordable (larger prior sets carry their own earlier
    certification).  Splits conserve the reciprocal sum identically, so
    a reproduced normalization inherits exactness from these anchors.
    """
    i = prior.stage
    new_power = family.sets[0][-1]
    prev_target = stage_sigma_target(i, prior.params)
    for u in range(1, i + 1):
        if sigma_of(expand_words(u, new_power)) != Fraction(1, new_power):
            return False
        s = prior.sets[u]
        if _total_bits(s) <= _RESUM_BIT_LIMIT:
            if sigma_of(TowerMultiset.from_elements(s)) != prev_target:
                return False
    top = _candidate(prior, family.sets[0], i + 1)
    return sigma_of(top) == stage_sigma_target(i + 1, prior.params)


def _rebuild_matches(
    prior: StageFamily, family: StageFamily, step_budget: int | None
) -> bool:
    """Re-run the deterministic extension of prior and compare elementwise."""
    s0_next = prior.sets[0] + (2 ** (prior.stage + 1) * prior.params.kd,)
    if family.sets[0] != s0_next:
        return False
    state = StageBuildState(
        base=prior,
        s0_next=s0_next,
        finalized=(),
        current_u=1,
        working=_candidate(prior, s0_next, 1),
        steps_spent=0,
    )
    try:
        rebuilt, _ = _run_build(state, step_budget, audit=False)
    except BudgetExhaustedError:
        return False
    return rebuilt.sets == family.sets


def audit_stage(
    family: StageFamily,
    prior: StageFamily | None = None,
    rebuild_budget: int | None = None,
) -> StageAuditReport:
    """Re-verify every stage invariant from the raw elements.

    Checks: per-set reciprocal sums, pairwise disjointness, simplicity,
    doubling-chain content, and coverage of the interval [2kd, 2kd+i]
    by the union of all sets.  Also records, without gating, whether
    2kd+u lands in the u-th set (it provably cannot when 2kd+u is
    itself a chain power, e.g. kd=1, u=2).

    Sets small enough are resummed exactly.  A set too large for direct
    resummation is certified through `prior` instead: the extension is
    re-run deterministically and must reproduce the stored sets, and
    the cheap candidate sums are checked exactly; splits conserve the
    sum, so the reproduced sets inherit exactness.  Without a prior
    stage such a set is reported unchecked and fails the audit.
    `rebuild_budget` caps the split steps the re-run may take.
    """
    i = family.stage
    kd = family.params.kd
    target = stage_sigma_target(i, family.params)
    if prior is not None:
        if prior.stage != i - 1 or prior.params != family.params:
            raise InvalidParametersError(
                f"prior must be stage {i - 1} with the same parameters, "
                f"got stage {prior.stage}"
            )

    rebuilt_ok: bool | None = None
    sigma_ok = []
    sigma_route = []
    for s in family.sets:
        if _total_bits(s) <= _RESUM_BIT_LIMIT:
            sigma_route.append("resummed")
            sigma_ok.append(sigma_of(TowerMultiset.from_elements(s)) == target)
        elif prior is not None:
            if rebuilt_ok is None:
                rebuilt_ok = _conservation_anchors_ok(
                    prior, family
                ) and _rebuild_matches(prior, family, rebuild_budget)
            sigma_route.append("rebuilt")
            sigma_ok.append(rebuilt_ok)
        else:
            sigma_route.append("unchecked")
            sigma_ok.append(False)
    simple = all(len(set(s)) == len(s) for s in family.sets)
    seen: set[int] = set()
    disjoint = True
    for s in family.sets:
        as_set = set(s)
        if seen & as_set:
            disjoint = False
            break
        seen |= as_set
    s0_ok = family.sets[0] == tuple(2**v * kd for v in range(1, i + 1))
    union = family.union()
    lo, hi = 2 * kd, 2 * kd + i
    coverage_ok = all(x in union for x in range(lo, hi + 1))
    membership = tuple(2 * kd + u in set(family.sets[u]) for u in range(i + 1))
    return StageAuditReport(
        stage=i,
        sigma_ok=tuple(sigma_ok),
        sigma_route=tuple(sigma_route),
        disjoint=disjoint,
        simple=simple,
        s0_ok=s0_ok,
        coverage_ok=coverage_ok,
        coverage_interval=(lo, hi),
        membership=membership,
    )


def _stable_below(a: tuple[int, ...], b: tuple[int, ...]) -> int | None:
    """Largest cutoff below which two ascending tuples agree; None if equal."""
    diff = set(a).symmetric_difference(b)
    if not diff:
        return None
    return min(diff) - 1


def prefix_stability_report(
    fam_i: StageFamily, fam_next: StageFamily, cutoff: int
) -> StabilityReport:
    """How far each set's small elements survived the stage extension."""
    if fam_next.stage != fam_i.stage + 1:
        raise InvalidParametersError(
            f"stages must be consecutive, got {fam_i.stage} and {fam_next.stage}"
        )
    lo = 2 * fam_i.params.kd
    agree = []
    stable = []
    for u in range(fam_i.stage + 1):
        a, b = fam_i.sets[u], fam_next.sets[u]
        agree.append(
            [x for x in a if lo <= x <= cutoff] == [x for x in b if lo <= x <= cutoff]
        )
        stable.append(_stable_below(a, b))
    bounded = [s for s in stable if s is not None]
    family_floor = min(bounded) if bounded else None
    return StabilityReport(
        cutoff=cutoff,
        agree_at_cutoff=tuple(agree),
        stable_below=tuple(stable),
        family_stable_below=family_floor,
    )


def group_stage(family: StageFamily) -> StageGrouping:
    """Merge runs of kn consecutive sets (u ascending, from u = 0).

    Complete groups carry sigma = (n/d)(1 - 2^-i) exactly; sets that do
    not fill a group are reported ungrouped, never silently dropped.
    The family must already have passed its stage audit: per-set sums
    are resummed where affordable and taken from the audit-certified
    target beyond the resummation bound.
    """
    params = family.params
    kn = params.kn
    per_set = stage_sigma_target(family.stage, params)
    expected = kn * per_set
    groups = []
    count = len(family.sets) // kn
    for j in range(count):
        u_indices = tuple(range(j * kn, (j + 1) * kn))
        elements: list[int] = []
        sigma = Fraction(0)
        for u in u_indices:
            elements.extend(family.sets[u])
            sigma += _set_sigma(family.sets[u], per_set)
        if sigma != expected:
            raise ConstructionFailureError(
                audit_stage(family)
            )
        groups.append(
            GroupApprox(
                index=j + 1,
                u_indices=u_indices,
                elements=tuple(sorted(elements)),
                sigma=sigma,
            )
        )
    ungrouped = tuple(range(count * kn, len(family.sets)))
    return StageGrouping(groups=tuple(groups), ungrouped=ungrouped)
