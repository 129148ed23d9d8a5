"""Figure files rendered next to the delimited artifacts.

Each run kind gets one PNG summarizing growth: block runs show element
growth and frontier, stage runs show set sizes and stability cutoffs,
ladders show digit counts per segment.  Rendering is headless.
"""

from __future__ import annotations

from math import log10
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dyadic_engine import StabilityReport, StageFamily
from .starlab import Ladder
from .vital_engine import Block

__all__ = [
    "render_block_figures",
    "render_stage_figures",
    "render_ladder_figures",
]


def _digits(x: int) -> float:
    """log10 of a possibly huge positive integer, cheaply."""
    if x < 10**15:
        return log10(x)
    return x.bit_length() * log10(2)


def render_block_figures(blocks: list[Block], out_stem: str | Path) -> list[Path]:
    out = Path(f"{out_stem}_growth.png")
    idx = [b.index for b in blocks]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(idx, [_digits(b.max_element) for b in blocks], "o-", label="digits of max")
    ax1.plot(idx, [len(b.elements) for b in blocks], "s--", label="element count")
    ax1.set_xlabel("block")
    ax1.set_yscale("log")
    ax1.legend()
    ax1.set_title("block growth")
    ax2.plot(idx, [b.frontier_after for b in blocks], "o-")
    ax2.set_xlabel("block")
    ax2.set_ylabel("frontier")
    ax2.set_title("covered initial segment")
    fig.tight_layout()
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return [out]


def render_stage_figures(
    families: list[StageFamily],
    stabilities: list[StabilityReport | None],
    out_stem: str | Path,
) -> list[Path]:
    out = Path(f"{out_stem}_stages.png")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    for family in families:
        ax1.plot(
            range(len(family.sets)),
            [len(s) for s in family.sets],
            "o-",
            label=f"stage {family.stage}",
        )
    ax1.set_xlabel("u")
    ax1.set_ylabel("set size")
    ax1.set_yscale("log")
    ax1.legend(fontsize=7)
    ax1.set_title("set sizes")
    xs = [f.stage for f, s in zip(families, stabilities) if s is not None]
    ys = [
        s.family_stable_below
        for s in stabilities
        if s is not None and s.family_stable_below is not None
    ]
    if xs and len(xs) == len(ys):
        ax2.plot(xs, ys, "o-")
    ax2.set_xlabel("stage")
    ax2.set_ylabel("stability cutoff")
    ax2.set_title("prefix stabilization")
    fig.tight_layout()
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return [out]


def render_ladder_figures(
    lad: Ladder, targets: list[int], out_stem: str | Path
) -> list[Path]:
    out = Path(f"{out_stem}_segments.png")
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(range(len(targets)), [_digits(t) for t in targets])
    ax.set_xlabel("segment")
    ax.set_ylabel("digits of target")
    ax.set_title(f"ladder of {lad.seed}")
    fig.tight_layout()
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return [out]
