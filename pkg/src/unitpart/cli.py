"""Command-line entry points.

Subcommands: `thm1` streams unit-sum blocks, `thm2` builds stage
families, `star` prints factorization ladders, `verify` re-audits any
emitted artifact.  Exit statuses: 0 success, 2 usage, 3 suspended at
the step budget (checkpoint written), 4 verification or construction
failure, 5 unrecognized or corrupt file format.

Artifacts are written only when a run completes, so a suspended and
resumed run yields a file byte-identical to an uninterrupted one.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .artifacts import (
    render_blocks,
    render_ladder,
    render_stages,
    write_text,
)
from .checkpoint import (
    load_checkpoint,
    save_checkpoint,
    thm1_payload,
    thm1_restore,
    thm2_payload,
    thm2_restore,
)
from .dyadic_engine import (
    audit_stage,
    extend_stage_with_count,
    group_stage,
    init_stage1,
    prefix_stability_report,
    resume_stage_with_count,
)
from .errors import (
    BudgetExhaustedError,
    CheckpointFormatError,
    ConstructionFailureError,
    IncompleteGroupError,
    InvalidParametersError,
    UnitpartError,
)
from .starlab import (
    DEFAULT_EFFORT,
    coprime_certificate,
    divisibility_chain_check,
    format_ladder,
    ladder,
    observed_primes,
    observed_prime_powers,
)
from .verify import verify_artifact
from .vital_engine import Parameters, blocks_stream, group_blocks

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SUSPENDED = 3
EXIT_VERIFY_FAILED = 4
EXIT_FORMAT = 5

ARTIFACT_VERSION = 1
MAX_STAGE = 8


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unitpart",
        description="exact unit-fraction partition runs and audits",
    )
    sub = parser.add_subparsers(dest="command")

    def add_common(p, with_params: bool):
        if with_params:
            p.add_argument("--k", type=int, default=None, help="scale (default 1)")
            p.add_argument("--n", type=int, default=None, help="target numerator (default 1)")
            p.add_argument("--d", type=int, default=None, help="target denominator (default 1)")
        p.add_argument("--step-budget", type=int, default=None,
                       help="max splits this invocation; suspends with a checkpoint when exhausted")
        p.add_argument("--checkpoint", type=Path, default=None,
                       help="checkpoint file for suspension and --resume")
        p.add_argument("--resume", action="store_true",
                       help="continue from --checkpoint (stored run settings govern)")
        p.add_argument("--group", action="store_true",
                       help="also emit kn-wise group records")
        p.add_argument("--out", type=Path, default=None,
                       help="artifact file path (stdout when omitted)")
        p.add_argument("--figures", action="store_true",
                       help="render PNG figures next to --out")

    p1 = sub.add_parser("thm1", help="stream unit-sum blocks and dice them into groups")
    add_common(p1, with_params=True)
    p1.add_argument("--blocks", type=int, default=None, help="blocks to produce (default 4)")
    p1.set_defaults(func=_cmd_thm1)

    p2 = sub.add_parser("thm2", help="build staged families approximating the infinite-set partition")
    add_common(p2, with_params=True)
    p2.add_argument("--stages", type=int, default=None, help="stages to build (default 3, max 8)")
    p2.set_defaults(func=_cmd_thm2)

    p3 = sub.add_parser("star", help="factorization ladder and certificates for a seed")
    p3.add_argument("--x", type=int, default=2, help="ladder seed (default 2)")
    p3.add_argument("--depth", type=int, default=5, help="segments beyond the seed (default 5)")
    p3.add_argument("--effort", type=int, default=DEFAULT_EFFORT,
                    help="factorization operation budget per segment")
    p3.add_argument("--out", type=Path, default=None, help="artifact file path")
    p3.add_argument("--figures", action="store_true", help="render PNG figures next to --out")
    p3.set_defaults(func=_cmd_star)

    p4 = sub.add_parser("verify", help="independently re-audit artifact files")
    p4.add_argument("paths", nargs="+", type=Path, help="artifact files to verify")
    p4.set_defaults(func=_cmd_verify)

    return parser


def _common_checks(parser_error, args) -> None:
    if args.resume and args.checkpoint is None:
        parser_error("--resume requires --checkpoint")
    if args.step_budget is not None and args.checkpoint is None:
        parser_error("--step-budget requires --checkpoint to hold the suspended state")
    if args.step_budget is not None and args.step_budget < 0:
        parser_error("--step-budget must be >= 0")
    if args.figures and args.out is None:
        parser_error("--figures requires --out")


def _params_or_default(args) -> Parameters:
    return Parameters(
        k=args.k if args.k is not None else 1,
        n=args.n if args.n is not None else 1,
        d=args.d if args.d is not None else 1,
    )


def _check_resume_params(parser_error, args, stored: dict) -> None:
    for name in ("k", "n", "d"):
        given = getattr(args, name)
        if given is not None and given != stored[name]:
            parser_error(
                f"--{name} {given} conflicts with the checkpoint "
                f"(stored {name}={stored[name]})"
            )


def _cmd_thm1(args, parser_error) -> int:
    _common_checks(parser_error, args)
    state = None
    if args.resume:
        _, payload = load_checkpoint(args.checkpoint, expect_kind="thm1")
        state, run = thm1_restore(payload)
        _check_resume_params(parser_error, args, run)
        if args.blocks is not None and args.blocks != run["blocks"]:
            parser_error(
                f"--blocks {args.blocks} conflicts with the checkpoint "
                f"(stored blocks={run['blocks']})"
            )
        if args.out is not None:
            run["out"] = str(args.out)
        params = state.params
    else:
        params = _params_or_default(args)
        blocks_wanted = args.blocks if args.blocks is not None else 4
        if blocks_wanted < 1:
            parser_error("--blocks must be >= 1")
        if args.group and blocks_wanted % params.kn != 0:
            parser_error(
                f"--group needs a multiple of kn = {params.kn} blocks, "
                f"got {blocks_wanted}"
            )
        run = {
            "command": "thm1",
            "k": params.k,
            "n": params.n,
            "d": params.d,
            "blocks": blocks_wanted,
            "group": bool(args.group),
            "out": str(args.out) if args.out else None,
            "figures": bool(args.figures),
            "artifact_version": ARTIFACT_VERSION,
        }

    try:
        state, _ = blocks_stream(
            params, count=run["blocks"], step_budget=args.step_budget, state=state
        )
    except BudgetExhaustedError as exc:
        save_checkpoint(args.checkpoint, "thm1", thm1_payload(exc.state, run))
        s = exc.state
        print(
            f"suspended: block {s.block_index} at step {s.step_index}; "
            f"checkpoint written to {args.checkpoint}"
        )
        return EXIT_SUSPENDED

    blocks = list(state.completed[: run["blocks"]])
    groups = group_blocks(blocks, params) if run["group"] else None
    text = render_blocks(params, blocks, groups)
    return _deliver(text, run, args, kind="thm1", blocks=blocks)


def _cmd_thm2(args, parser_error) -> int:
    _common_checks(parser_error, args)
    families = None
    build = None
    if args.resume:
        _, payload = load_checkpoint(args.checkpoint, expect_kind="thm2")
        families, build, run = thm2_restore(payload)
        _check_resume_params(parser_error, args, run)
        if args.stages is not None and args.stages != run["stages"]:
            parser_error(
                f"--stages {args.stages} conflicts with the checkpoint "
                f"(stored stages={run['stages']})"
            )
        if args.out is not None:
            run["out"] = str(args.out)
        params = families[0].params
    else:
        params = _params_or_default(args)
        stages_wanted = args.stages if args.stages is not None else 3
        if stages_wanted < 1:
            parser_error("--stages must be >= 1")
        if stages_wanted > MAX_STAGE:
            parser_error(f"--stages is capped at {MAX_STAGE}")
        run = {
            "command": "thm2",
            "k": params.k,
            "n": params.n,
            "d": params.d,
            "stages": stages_wanted,
            "group": bool(args.group),
            "out": str(args.out) if args.out else None,
            "figures": bool(args.figures),
            "artifact_version": ARTIFACT_VERSION,
        }
        families = [init_stage1(params)]

    remaining = args.step_budget
    try:
        if build is not None:
            family, spent = resume_stage_with_count(build, remaining)
            families.append(family)
            if remaining is not None:
                remaining -= spent
        while families[-1].stage < run["stages"]:
            family, spent = extend_stage_with_count(families[-1], remaining)
            families.append(family)
            if remaining is not None:
                remaining -= spent
    except BudgetExhaustedError as exc:
        save_checkpoint(
            args.checkpoint, "thm2", thm2_payload(families, exc.state, run)
        )
        print(
            f"suspended: building stage {families[-1].stage + 1} "
            f"(u={exc.state.current_u}, {exc.state.steps_spent} splits in); "
            f"checkpoint written to {args.checkpoint}"
        )
        return EXIT_SUSPENDED
    except ConstructionFailureError as exc:
        print(f"construction failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAILED

    reports = [
        audit_stage(f, prior=families[pos - 1] if pos else None)
        for pos, f in enumerate(families)
    ]
    stabilities = [None] + [
        prefix_stability_report(a, b, 2 * params.kd + a.stage)
        for a, b in zip(families, families[1:])
    ]
    groupings = [group_stage(f) for f in families] if run["group"] else None
    text = render_stages(params, families, reports, stabilities, groupings)
    return _deliver(
        text, run, args, kind="thm2", families=families, stabilities=stabilities
    )


def _cmd_star(args, parser_error) -> int:
    if args.figures and args.out is None:
        parser_error("--figures requires --out")
    if args.x < 1:
        parser_error("--x must be >= 1")
    if args.depth < 0:
        parser_error("--depth must be >= 0")
    lad = ladder(args.x, args.depth, args.effort)
    targets = [args.x]
    y = args.x
    for _ in range(args.depth):
        targets.append(y + 1)
        y = y * (y + 1)
    chain_ok = divisibility_chain_check(args.x, max(args.depth, 1))
    cert = coprime_certificate(args.x, args.depth) if args.depth >= 1 else []

    print(format_ladder(lad))
    print(f"divisibility chain through {max(args.depth, 1)} steps: "
          f"{'pass' if chain_ok else 'fail'}")
    if cert:
        print(f"coprime certificate ({len(cert)} entries): pass")
    for j, seg in enumerate(lad.segments):
        if seg.status == "partial":
            print(f"segment {j} partial: cofactor {seg.cofactor} unresolved")

    if args.out:
        text = render_ladder(
            args.x,
            args.depth,
            args.effort,
            lad,
            targets,
            chain_ok,
            cert,
            observed_primes(lad),
            observed_prime_powers(lad),
        )
        write_text(args.out, text)
        print(f"wrote {args.out}")
        if args.figures:
            from .report import render_ladder_figures

            for path in render_ladder_figures(lad, targets, args.out.with_suffix("")):
                print(f"wrote {path}")
    return EXIT_OK


def _cmd_verify(args, parser_error) -> int:
    worst = EXIT_OK
    for path in args.paths:
        try:
            report = verify_artifact(path)
        except FileNotFoundError:
            print(f"{path}: no such file", file=sys.stderr)
            worst = max(worst, EXIT_FORMAT)
            continue
        except CheckpointFormatError as exc:
            print(f"{path}: format error: {exc}", file=sys.stderr)
            worst = max(worst, EXIT_FORMAT)
            continue
        print(f"{path}:")
        print(report.summary())
        if not report.ok:
            worst = max(worst, EXIT_VERIFY_FAILED)
    return worst


def _deliver(
    text: str,
    run: dict,
    args,
    kind: str,
    blocks=None,
    families=None,
    stabilities=None,
) -> int:
    out = run.get("out")
    if out:
        write_text(out, text)
        print(f"wrote {out}")
        if run.get("figures"):
            from .report import render_block_figures, render_stage_figures

            stem = Path(out).with_suffix("")
            if kind == "thm1":
                paths = render_block_figures(blocks, stem)
            else:
                paths = render_stage_figures(families, stabilities, stem)
            for path in paths:
                print(f"wrote {path}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_help()
        return EXIT_USAGE

    def parser_error(message: str):
        parser.error(message)

    try:
        return args.func(args, parser_error)
    except CheckpointFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (InvalidParametersError, IncompleteGroupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnitpartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
