"""Independent audit of emitted artifact files.

Every checkable fact is recomputed from the raw element data: exact
reciprocal sums, disjointness, frontier and coverage, stage audits,
stability cutoffs, segment products, primality of listed factors, and
cross-segment prime distinctness.  Stored summary values (sigmas, audit
flags, the rendered ladder line) are compared against the recomputation
and never trusted on their own.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .artifacts import (
    ParsedLadder,
    parse_blocks_text,
    parse_ladder_text,
    parse_stages_text,
    sniff_format,
)
from .core_arith import rat_sum
from .dyadic_engine import (
    StageFamily,
    _set_sigma,
    audit_stage,
    prefix_stability_report,
    stage_sigma_target,
)
from .starlab import (
    Ladder,
    certify_prime,
    coprime_certificate,
    divisibility_chain_check,
    format_ladder,
    observed_primes,
    observed_prime_powers,
)
from .vital_engine import frontier as compute_frontier

__all__ = ["CheckResult", "VerificationReport", "verify_text", "verify_artifact"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    kind: str
    checks: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def summary(self) -> str:
        status = "pass" if self.ok else "FAIL"
        lines = [f"{self.kind} artifact: {status} ({len(self.checks)} checks)"]
        for c in self.checks:
            mark = "ok " if c.passed else "BAD"
            detail = f" {c.detail}" if c.detail else ""
            lines.append(f"  [{mark}] {c.name}{detail}")
        return "\n".join(lines)


def _sigma(elements) -> Fraction:
    return rat_sum(Fraction(1, e) for e in elements)


# Honest stage re-runs stay well under this; a crafted artifact cannot
# make re-verification spin unboundedly.
_REBUILD_BUDGET = 4_000_000


def _verify_blocks(text: str) -> VerificationReport:
    parsed = parse_blocks_text(text)
    params = parsed.params
    kd = params.kd
    target = Fraction(1, kd)
    checks: list[CheckResult] = []
    seen: set[int] = set()
    prefix = []
    for pos, block in enumerate(parsed.blocks):
        name = f"block {block.index}"
        stored_max = parsed.stored_max[pos]
        checks.append(
            CheckResult(
                f"{name} stored max honest",
                stored_max == block.max_element,
                f"recomputed {block.max_element}, stored {stored_max}"
                if stored_max != block.max_element
                else "",
            )
        )
        checks.append(
            CheckResult(f"{name} indexed consecutively", block.index == pos)
        )
        ascending = all(
            a < b for a, b in zip(block.elements, block.elements[1:])
        )
        checks.append(CheckResult(f"{name} elements strictly ascending", ascending))
        checks.append(
            CheckResult(
                f"{name} elements >= {kd}", all(e >= kd for e in block.elements)
            )
        )
        sigma = _sigma(block.elements)
        checks.append(
            CheckResult(
                f"{name} recomputed sigma = 1/{kd}",
                sigma == target,
                f"got {sigma}" if sigma != target else "",
            )
        )
        checks.append(
            CheckResult(f"{name} stored sigma honest", block.sigma == sigma)
        )
        overlap = seen.intersection(block.elements)
        checks.append(
            CheckResult(
                f"{name} disjoint from earlier blocks",
                not overlap,
                f"overlap {sorted(overlap)[:5]}" if overlap else "",
            )
        )
        seen.update(block.elements)
        prefix.append(block)
        front = compute_frontier(prefix, kd)
        checks.append(
            CheckResult(
                f"{name} stored frontier honest",
                front == block.frontier_after,
                f"recomputed {front}, stored {block.frontier_after}",
            )
        )
    fronts = [b.frontier_after for b in parsed.blocks]
    checks.append(
        CheckResult(
            "frontier strictly increases",
            all(a < b for a, b in zip(fronts, fronts[1:])),
        )
    )
    kn = params.kn
    for g in parsed.groups:
        name = f"group {g.index}"
        wanted = parsed.blocks[(g.index - 1) * kn : g.index * kn]
        checks.append(
            CheckResult(
                f"{name} covers blocks {(g.index - 1) * kn}..{g.index * kn - 1}",
                tuple(b.index for b in wanted) == g.block_indices,
            )
        )
        union = tuple(sorted(e for b in wanted for e in b.elements))
        checks.append(CheckResult(f"{name} elements are the union", union == g.elements))
        sigma = _sigma(g.elements)
        expected = Fraction(params.n, params.d)
        checks.append(
            CheckResult(
                f"{name} recomputed sigma = {params.n}/{params.d}",
                sigma == expected and sigma == g.sigma,
            )
        )
    return VerificationReport(kind="blocks", checks=tuple(checks))


def _verify_stages(text: str) -> VerificationReport:
    parsed = parse_stages_text(text)
    params = parsed.params
    checks: list[CheckResult] = []
    families = []
    prev_family: StageFamily | None = None
    for record in parsed.stages:
        name = f"stage {record.stage}"
        family = StageFamily(
            stage=record.stage, params=params, sets=tuple(record.sets)
        )
        families.append((record, family))
        checks.append(
            CheckResult(
                f"{name} has sets for u = 0..{record.stage}",
                len(record.sets) == record.stage + 1,
            )
        )
        prior = (
            prev_family
            if prev_family is not None and prev_family.stage == record.stage - 1
            else None
        )
        prev_family = family
        report = audit_stage(family, prior=prior, rebuild_budget=_REBUILD_BUDGET)
        checks.append(
            CheckResult(
                f"{name} audit recomputed",
                report.ok(),
                report.summary() if not report.ok() else "",
            )
        )
        checks.append(
            CheckResult(
                f"{name} stored audit flag honest", record.audit_pass == report.ok()
            )
        )
        checks.append(
            CheckResult(
                f"{name} stored coverage honest",
                record.coverage == report.coverage_interval
                and record.coverage_ok == report.coverage_ok,
            )
        )
        checks.append(
            CheckResult(
                f"{name} stored membership honest",
                record.membership == report.membership,
            )
        )
        target = stage_sigma_target(record.stage, params)
        sigmas_honest = all(
            _set_sigma(s, target) == stored
            for s, stored in zip(record.sets, record.sigmas)
        )
        checks.append(CheckResult(f"{name} stored sigmas honest", sigmas_honest))
    for (prev_rec, prev_fam), (rec, fam) in zip(families, families[1:]):
        name = f"stages {prev_fam.stage}->{fam.stage}"
        checks.append(
            CheckResult(
                f"{name} consecutive", fam.stage == prev_fam.stage + 1
            )
        )
        if fam.stage != prev_fam.stage + 1:
            continue
        stability = prefix_stability_report(
            prev_fam, fam, 2 * params.kd + prev_fam.stage
        )
        checks.append(
            CheckResult(
                f"{name} stored stability honest",
                rec.stability == stability.family_stable_below,
                f"recomputed {stability.family_stable_below}, stored {rec.stability}",
            )
        )
    return VerificationReport(kind="stages", checks=tuple(checks))


def _verify_ladder(text: str) -> VerificationReport:
    parsed: ParsedLadder = parse_ladder_text(text)
    checks: list[CheckResult] = []
    x, depth = parsed.x, parsed.depth
    targets = [x]
    y = x
    for _ in range(depth):
        targets.append(y + 1)
        y = y * (y + 1)
    checks.append(
        CheckResult(
            "segment count matches depth", len(parsed.segments) == depth + 1
        )
    )
    stored_targets = [s.target for s in parsed.segments]
    checks.append(
        CheckResult("segment targets recomputed from seed", stored_targets == targets)
    )
    prime_owner: dict[int, int] = {}
    for seg in parsed.segments:
        name = f"segment {seg.index}"
        f = seg.factorization
        checks.append(
            CheckResult(
                f"{name} product reconstructs target",
                f.value == seg.target,
                f"{f.value} != {seg.target}" if f.value != seg.target else "",
            )
        )
        primes = f.distinct_primes()
        checks.append(
            CheckResult(
                f"{name} primes ascending",
                all(a < b for a, b in zip(primes, primes[1:])),
            )
        )
        certified = all(certify_prime(p)[0] for p in primes)
        checks.append(CheckResult(f"{name} listed primes are prime", certified))
        checks.append(
            CheckResult(
                f"{name} status honest",
                (f.cofactor == 1) == (seg.status == "complete"),
            )
        )
        for p in primes:
            if p in prime_owner:
                checks.append(
                    CheckResult(
                        f"prime {p} unique to one segment",
                        False,
                        f"segments {prime_owner[p]} and {seg.index}",
                    )
                )
            else:
                prime_owner[p] = seg.index
    # complete-prefix merge: products of targets must rebuild the iterates
    acc = 1
    iterate = x
    merged_ok = True
    for m, t in enumerate(targets):
        acc *= t
        if m >= 1:
            iterate = iterate * (iterate + 1)
        if acc != iterate:
            merged_ok = False
    checks.append(
        CheckResult("merged segments rebuild the star iterates", merged_ok)
    )
    rebuilt = Ladder(
        seed=x, segments=tuple(s.factorization for s in parsed.segments)
    )
    checks.append(
        CheckResult(
            "ladder line matches re-render",
            parsed.ladder_line == format_ladder(rebuilt),
        )
    )
    checks.append(
        CheckResult(
            "divisibility chain recomputed",
            divisibility_chain_check(x, max(depth, 1)) == parsed.chain_ok,
        )
    )
    if parsed.certificate:
        cert = coprime_certificate(x, len(parsed.certificate))
        checks.append(
            CheckResult("certificate recomputed", cert == parsed.certificate)
        )
    checks.append(
        CheckResult(
            "observed primes honest", observed_primes(rebuilt) == parsed.primes
        )
    )
    checks.append(
        CheckResult(
            "observed prime powers honest",
            observed_prime_powers(rebuilt) == parsed.prime_powers,
        )
    )
    return VerificationReport(kind="ladder", checks=tuple(checks))


def verify_text(text: str) -> VerificationReport:
    kind = sniff_format(text)
    if kind == "blocks":
        return _verify_blocks(text)
    if kind == "stages":
        return _verify_stages(text)
    return _verify_ladder(text)


def verify_artifact(path: str | Path) -> VerificationReport:
    """Parse and re-audit one artifact file."""
    return verify_text(Path(path).read_text(encoding="utf-8"))
