"""Line-oriented artifact files with versioned headers.

Three formats, all tab-separated with big integers as decimal strings:
block runs, stage families, and factorization ladders.  Writers are
pure renderers (string in, string out) so byte-identity across
suspended/resumed runs is testable without touching the filesystem;
parsers rebuild plain records for the independent verifier, which
recomputes every invariant rather than trusting stored values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .core_arith import format_rat, parse_rat
from .dyadic_engine import (
    StabilityReport,
    StageAuditReport,
    StageFamily,
    StageGrouping,
    _set_sigma,
    stage_sigma_target,
)
from .errors import CheckpointFormatError
from .starlab import Factorization, Ladder, format_factors, format_ladder
from .vital_engine import Block, Group, Parameters

__all__ = [
    "BLOCKS_HEADER",
    "STAGES_HEADER",
    "LADDER_HEADER",
    "render_blocks",
    "render_stages",
    "render_ladder",
    "write_text",
    "sniff_format",
    "parse_blocks_text",
    "parse_stages_text",
    "parse_ladder_text",
    "parse_factors",
    "ParsedBlocks",
    "ParsedStages",
    "ParsedStage",
    "ParsedLadder",
    "ParsedSegment",
]

BLOCKS_HEADER = "unitpart blocks v1"
STAGES_HEADER = "unitpart stages v1"
LADDER_HEADER = "unitpart ladder v1"


def _params_line(params: Parameters) -> str:
    return f"params\tk={params.k}\tn={params.n}\td={params.d}"


def _parse_params_line(line: str) -> Parameters:
    fields = dict(part.split("=", 1) for part in line.split("\t")[1:])
    return Parameters(k=int(fields["k"]), n=int(fields["n"]), d=int(fields["d"]))


def render_blocks(
    params: Parameters,
    blocks: list[Block],
    groups: list[Group] | None = None,
) -> str:
    lines = [BLOCKS_HEADER, _params_line(params)]
    for b in blocks:
        lines.append(
            "block\t{}\t{}\t{}\t{}\t{}\t{}".format(
                b.index,
                ",".join(str(e) for e in b.elements),
                format_rat(b.sigma),
                b.steps_used,
                b.frontier_after,
                b.max_element,
            )
        )
    for g in groups or []:
        lines.append(
            "group\t{}\t{}\t{}\t{}".format(
                g.index,
                ",".join(str(i) for i in g.block_indices),
                ",".join(str(e) for e in g.elements),
                format_rat(g.sigma),
            )
        )
    return "\n".join(lines) + "\n"


def render_stages(
    params: Parameters,
    families: list[StageFamily],
    reports: list[StageAuditReport],
    stabilities: list[StabilityReport | None],
    groupings: list[StageGrouping | None] | None = None,
) -> str:
    lines = [STAGES_HEADER, _params_line(params)]
    for pos, family in enumerate(families):
        report = reports[pos]
        stability = stabilities[pos]
        lo, hi = report.coverage_interval
        stab = "na" if stability is None else str(stability.family_stable_below)
        lines.append(
            "stage\t{}\tcoverage={}-{}\tcoverage_ok={}\tstability={}\taudit={}\tmembership={}".format(
                family.stage,
                lo,
                hi,
                int(report.coverage_ok),
                stab,
                "pass" if report.ok() else "fail",
                ",".join(str(int(f)) for f in report.membership),
            )
        )
        for u, elements in enumerate(family.sets):
            sigma = _set_sigma(elements, stage_sigma_target(family.stage, params))
            lines.append(
                "set\t{}\t{}\t{}\t{}".format(
                    family.stage,
                    u,
                    ",".join(str(e) for e in elements),
                    format_rat(sigma),
                )
            )
        if groupings is not None and groupings[pos] is not None:
            grouping = groupings[pos]
            for g in grouping.groups:
                lines.append(
                    "sgroup\t{}\t{}\t{}\t{}\t{}".format(
                        family.stage,
                        g.index,
                        ",".join(str(u) for u in g.u_indices),
                        ",".join(str(e) for e in g.elements),
                        format_rat(g.sigma),
                    )
                )
            if grouping.ungrouped:
                lines.append(
                    "ungrouped\t{}\t{}".format(
                        family.stage,
                        ",".join(str(u) for u in grouping.ungrouped),
                    )
                )
    return "\n".join(lines) + "\n"


def render_ladder(
    x: int,
    depth: int,
    effort: int,
    lad: Ladder,
    targets: list[int],
    chain_ok: bool,
    certificate: list[int],
    primes: tuple[int, ...],
    prime_powers: tuple[int, ...],
) -> str:
    lines = [
        LADDER_HEADER,
        f"params\tx={x}\tdepth={depth}\teffort={effort}",
        "letters=left-to-right",
        "ladder\t" + format_ladder(lad),
    ]
    for j, seg in enumerate(lad.segments):
        lines.append(
            "segment\t{}\t{}\t{}\t{}\trounds={}".format(
                j, targets[j], format_factors(seg), seg.status, seg.randomized_rounds
            )
        )
    lines.append("chain\tm={}\t{}".format(max(depth, 1), "pass" if chain_ok else "fail"))
    lines.append(
        "certificate\tn={}\t{}".format(
            len(certificate), ",".join(str(c) for c in certificate)
        )
    )
    lines.append("primes\t" + ",".join(str(p) for p in primes))
    lines.append("prime_powers\t" + ",".join(str(q) for q in prime_powers))
    return "\n".join(lines) + "\n"


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def sniff_format(text: str) -> str:
    """First line decides the format; unknown headers are format errors."""
    head = text.splitlines()[0] if text else ""
    if head == BLOCKS_HEADER:
        return "blocks"
    if head == STAGES_HEADER:
        return "stages"
    if head == LADDER_HEADER:
        return "ladder"
    raise CheckpointFormatError(f"unrecognized artifact header: {head!r}")


@dataclass(frozen=True)
class ParsedBlocks:
    params: Parameters
    blocks: list[Block]
    groups: list[Group]
    stored_max: list[int]


def parse_blocks_text(text: str) -> ParsedBlocks:
    lines = text.splitlines()
    if not lines or lines[0] != BLOCKS_HEADER:
        raise CheckpointFormatError("not a block artifact")
    params = _parse_params_line(lines[1])
    blocks: list[Block] = []
    groups: list[Group] = []
    stored_max: list[int] = []
    for line in lines[2:]:
        if not line:
            continue
        kind, *rest = line.split("\t")
        if kind == "block":
            index, elems, sigma, steps, front, mx = rest
            block = Block(
                index=int(index),
                elements=tuple(int(e) for e in elems.split(",")),
                sigma=parse_rat(sigma),
                steps_used=int(steps),
                frontier_after=int(front),
            )
            blocks.append(block)
            stored_max.append(int(mx))
        elif kind == "group":
            index, bidx, elems, sigma = rest
            groups.append(
                Group(
                    index=int(index),
                    block_indices=tuple(int(i) for i in bidx.split(",")),
                    elements=tuple(int(e) for e in elems.split(",")),
                    sigma=parse_rat(sigma),
                )
            )
        else:
            raise CheckpointFormatError(f"unknown record kind {kind!r}")
    return ParsedBlocks(
        params=params, blocks=blocks, groups=groups, stored_max=stored_max
    )


@dataclass(frozen=True)
class ParsedStage:
    stage: int
    coverage: tuple[int, int]
    coverage_ok: bool
    stability: int | None
    audit_pass: bool
    membership: tuple[bool, ...]
    sets: list[tuple[int, ...]]
    sigmas: list[Fraction]


@dataclass(frozen=True)
class ParsedStages:
    params: Parameters
    stages: list[ParsedStage]


def parse_stages_text(text: str) -> ParsedStages:
    lines = text.splitlines()
    if not lines or lines[0] != STAGES_HEADER:
        raise CheckpointFormatError("not a stage artifact")
    params = _parse_params_line(lines[1])
    stages: list[ParsedStage] = []
    pending: dict | None = None

    def flush():
        if pending is not None:
            stages.append(ParsedStage(**pending))

    for line in lines[2:]:
        if not line:
            continue
        kind, *rest = line.split("\t")
        if kind == "stage":
            flush()
            fields = dict(part.split("=", 1) for part in rest[1:])
            lo, hi = fields["coverage"].split("-")
            stab = fields["stability"]
            pending = dict(
                stage=int(rest[0]),
                coverage=(int(lo), int(hi)),
                coverage_ok=fields["coverage_ok"] == "1",
                stability=None if stab == "na" else int(stab),
                audit_pass=fields["audit"] == "pass",
                membership=tuple(f == "1" for f in fields["membership"].split(",")),
                sets=[],
                sigmas=[],
            )
        elif kind == "set":
            if pending is None or int(rest[0]) != pending["stage"]:
                raise CheckpointFormatError("set record outside its stage")
            pending["sets"].append(tuple(int(e) for e in rest[2].split(",")))
            pending["sigmas"].append(parse_rat(rest[3]))
        elif kind in ("sgroup", "ungrouped"):
            continue  # grouping lines are re-derived, not trusted
        else:
            raise CheckpointFormatError(f"unknown record kind {kind!r}")
    flush()
    return ParsedStages(params=params, stages=stages)


def parse_factors(text: str) -> Factorization:
    """Inverse of format_factors."""
    if text == "":
        return Factorization(factors=())
    factors = []
    cofactor = 1
    for part in text.split("·"):
        if part.endswith("?"):
            cofactor = int(part[:-1])
        elif "^" in part:
            p, e = part.split("^", 1)
            factors.append((int(p), int(e)))
        else:
            factors.append((int(part), 1))
    return Factorization(factors=tuple(factors), cofactor=cofactor)


@dataclass(frozen=True)
class ParsedSegment:
    index: int
    target: int
    factorization: Factorization
    status: str
    rounds: int


@dataclass(frozen=True)
class ParsedLadder:
    x: int
    depth: int
    effort: int
    ladder_line: str
    segments: list[ParsedSegment]
    chain_ok: bool
    certificate: list[int]
    primes: tuple[int, ...]
    prime_powers: tuple[int, ...]


def parse_ladder_text(text: str) -> ParsedLadder:
    lines = text.splitlines()
    if not lines or lines[0] != LADDER_HEADER:
        raise CheckpointFormatError("not a ladder artifact")
    fields = dict(part.split("=", 1) for part in lines[1].split("\t")[1:])
    if lines[2] != "letters=left-to-right":
        raise CheckpointFormatError("missing word-order metadata")
    segments: list[ParsedSegment] = []
    ladder_line = ""
    chain_ok = False
    certificate: list[int] = []
    primes: tuple[int, ...] = ()
    prime_powers: tuple[int, ...] = ()
    for line in lines[3:]:
        if not line:
            continue
        kind, *rest = line.split("\t")
        if kind == "ladder":
            ladder_line = rest[0]
        elif kind == "segment":
            segments.append(
                ParsedSegment(
                    index=int(rest[0]),
                    target=int(rest[1]),
                    factorization=parse_factors(rest[2]),
                    status=rest[3],
                    rounds=int(rest[4].split("=", 1)[1]),
                )
            )
        elif kind == "chain":
            chain_ok = rest[1] == "pass"
        elif kind == "certificate":
            certificate = [int(c) for c in rest[1].split(",")] if rest[1] else []
        elif kind == "primes":
            primes = tuple(int(p) for p in rest[0].split(",")) if rest[0] else ()
        elif kind == "prime_powers":
            prime_powers = tuple(int(q) for q in rest[0].split(",")) if rest[0] else ()
        else:
            raise CheckpointFormatError(f"unknown record kind {kind!r}")
    return ParsedLadder(
        x=int(fields["x"]),
        depth=int(fields["depth"]),
        effort=int(fields["effort"]),
        ladder_line=ladder_line,
        segments=segments,
        chain_ok=chain_ok,
        certificate=certificate,
        primes=primes,
        prime_powers=prime_powers,
    )
