"""Versioned, checksummed run checkpoints.

A checkpoint is a single JSON document: format tag, version, kind
("thm1" or "thm2"), a sha256 over the canonical encoding, and a payload
holding the engine state with all large integers as decimal strings.
The used-set of a block run is never stored; it is rebuilt from the
completed blocks on load, so it cannot drift out of sync.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .core_arith import format_rat, parse_rat
from .dyadic_engine import StageBuildState, StageFamily
from .errors import CheckpointFormatError, ChecksumError
from .towers import TowerMultiset
from .vital_engine import Block, Parameters, Theorem1State

__all__ = [
    "CHECKPOINT_FORMAT",
    "CHECKPOINT_VERSION",
    "save_checkpoint",
    "load_checkpoint",
    "thm1_payload",
    "thm1_restore",
    "thm2_payload",
    "thm2_restore",
]

CHECKPOINT_FORMAT = "unitpart-checkpoint"
CHECKPOINT_VERSION = 1


def _canonical(kind: str, payload: dict) -> bytes:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "payload": payload,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def save_checkpoint(path: str | Path, kind: str, payload: dict) -> None:
    digest = hashlib.sha256(_canonical(kind, payload)).hexdigest()
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "sha256": digest,
        "payload": payload,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1), encoding="utf-8")


def load_checkpoint(path: str | Path, expect_kind: str | None = None) -> tuple[str, dict]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointFormatError(f"checkpoint is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointFormatError("file is not a checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointFormatError(
            f"unsupported checkpoint version {doc.get('version')!r}"
        )
    kind = doc.get("kind")
    payload = doc.get("payload")
    if kind not in ("thm1", "thm2") or not isinstance(payload, dict):
        raise CheckpointFormatError("checkpoint kind or payload malformed")
    digest = hashlib.sha256(_canonical(kind, payload)).hexdigest()
    if digest != doc.get("sha256"):
        raise ChecksumError("checkpoint payload does not match its checksum")
    if expect_kind is not None and kind != expect_kind:
        raise CheckpointFormatError(
            f"expected a {expect_kind} checkpoint, found {kind}"
        )
    return kind, payload


def _params_dict(params: Parameters) -> dict:
    return {"k": str(params.k), "n": str(params.n), "d": str(params.d)}


def _params_from(d: dict) -> Parameters:
    return Parameters(k=int(d["k"]), n=int(d["n"]), d=int(d["d"]))


def thm1_payload(state: Theorem1State, run: dict) -> dict:
    return {
        "params": _params_dict(state.params),
        "completed": [
            {
                "index": b.index,
                "elements": [str(e) for e in b.elements],
                "sigma": format_rat(b.sigma),
                "steps_used": b.steps_used,
                "frontier_after": str(b.frontier_after),
            }
            for b in state.completed
        ],
        "transitional": [
            [str(e), str(m)] for e, m in state.transitional.items()
        ],
        "block_index": state.block_index,
        "step_index": state.step_index,
        "frontier": str(state.frontier),
        "run": run,
    }


def thm1_restore(payload: dict) -> tuple[Theorem1State, dict]:
    params = _params_from(payload["params"])
    completed = tuple(
        Block(
            index=b["index"],
            elements=tuple(int(e) for e in b["elements"]),
            sigma=parse_rat(b["sigma"]),
            steps_used=b["steps_used"],
            frontier_after=int(b["frontier_after"]),
        )
        for b in payload["completed"]
    )
    used = frozenset(e for b in completed for e in b.elements)
    state = Theorem1State(
        params=params,
        completed=completed,
        used=used,
        transitional=TowerMultiset(
            (int(e), int(m)) for e, m in payload["transitional"]
        ),
        block_index=payload["block_index"],
        step_index=payload["step_index"],
        frontier=int(payload["frontier"]),
    )
    return state, payload["run"]


def thm2_payload(
    families: list[StageFamily], build: StageBuildState | None, run: dict
) -> dict:
    doc = {
        "params": _params_dict(families[0].params),
        "families": [
            {
                "stage": fam.stage,
                "sets": [[str(e) for e in s] for s in fam.sets],
            }
            for fam in families
        ],
        "build": None,
        "run": run,
    }
    if build is not None:
        doc["build"] = {
            "s0_next": [str(e) for e in build.s0_next],
            "finalized": [[str(e) for e in s] for s in build.finalized],
            "current_u": build.current_u,
            "working": [[str(e), str(m)] for e, m in build.working.items()],
            "steps_spent": build.steps_spent,
        }
    return doc


def thm2_restore(payload: dict) -> tuple[list[StageFamily], StageBuildState | None, dict]:
    params = _params_from(payload["params"])
    families = [
        StageFamily(
            stage=f["stage"],
            params=params,
            sets=tuple(tuple(int(e) for e in s) for s in f["sets"]),
        )
        for f in payload["families"]
    ]
    build = None
    if payload["build"] is not None:
        b = payload["build"]
        build = StageBuildState(
            base=families[-1],
            s0_next=tuple(int(e) for e in b["s0_next"]),
            finalized=tuple(tuple(int(e) for e in s) for s in b["finalized"]),
            current_u=b["current_u"],
            working=TowerMultiset((int(e), int(m)) for e, m in b["working"]),
            steps_spent=b["steps_spent"],
        )
    return families, build, payload["run"]
