"""Finite multisets of positive integers with reciprocal-sum bookkeeping.

A tower is an element y held with multiplicity x (x "stories" on base y).
The central rewrite step replaces one story at y by one story each at
y+1 and y(y+1); the reciprocal identity 1/y = 1/(y+1) + 1/(y(y+1))
makes this sum-preserving, exactly.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator

from .core_arith import rat_sum
from .errors import MissingElementError

__all__ = [
    "TowerMultiset",
    "sigma_of",
    "stack",
    "is_simple",
    "vital_split",
    "format_multiset",
    "parse_multiset",
]


class TowerMultiset:
    """Immutable multiset of positive integers, iterated in ascending order."""

    __slots__ = ("_mults",)

    def __init__(self, entries: Iterable[tuple[int, int]] = ()):
        mults: dict[int, int] = {}
        for elem, mult in entries:
            if elem < 1:
                raise ValueError(f"elements must be positive, got {elem}")
            if mult < 1:
                raise ValueError(f"multiplicities must be >= 1, got {mult} at {elem}")
            mults[elem] = mults.get(elem, 0) + mult
        # keys stored in ascending order so iteration never re-sorts
        self._mults = {e: mults[e] for e in sorted(mults)}

    @classmethod
    def from_elements(cls, elems: Iterable[int]) -> "TowerMultiset":
        return cls((e, 1) for e in elems)

    @classmethod
    def _from_sorted_dict(cls, mults: dict[int, int]) -> "TowerMultiset":
        # trusted constructor: keys already ascending, values already >= 1
        obj = cls.__new__(cls)
        obj._mults = mults
        return obj

    def multiplicity(self, elem: int) -> int:
        return self._mults.get(elem, 0)

    def __contains__(self, elem: int) -> bool:
        return elem in self._mults

    def __len__(self) -> int:
        """Number of distinct elements."""
        return len(self._mults)

    def total_stories(self) -> int:
        return sum(self._mults.values())

    def support(self) -> tuple[int, ...]:
        """Distinct elements, ascending."""
        return tuple(self._mults)

    def items(self) -> Iterator[tuple[int, int]]:
        """(element, multiplicity) pairs, ascending by element."""
        return iter(self._mults.items())

    def __iter__(self) -> Iterator[int]:
        return iter(self._mults)

    def max_height(self) -> int:
        return max(self._mults.values(), default=0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TowerMultiset):
            return NotImplemented
        return self._mults == other._mults

    def __hash__(self) -> int:
        return hash(tuple(self._mults.items()))

    def __repr__(self) -> str:
        return f"TowerMultiset({format_multiset(self)})"


def sigma_of(m: TowerMultiset) -> Fraction:
    """Exact reciprocal sum counted with multiplicity; empty multiset gives 0."""
    return rat_sum(Fraction(mult, elem) for elem, mult in m.items())


def stack(a: TowerMultiset, b: TowerMultiset) -> TowerMultiset:
    """Multiset union adding multiplicities pointwise."""
    merged = dict(a._mults)
    for elem, mult in b.items():
        merged[elem] = merged.get(elem, 0) + mult
    return TowerMultiset._from_sorted_dict({e: merged[e] for e in sorted(merged)})


def is_simple(m: TowerMultiset) -> bool:
    """True when every multiplicity is exactly 1."""
    return all(mult == 1 for _, mult in m.items())


def vital_split(m: TowerMultiset, y: int) -> TowerMultiset:
    """Replace one story at y by one story each at y+1 and y(y+1).

    Preserves sigma exactly. The degenerate base y=1 sends both new
    stories to the same element 2.
    """
    if y not in m:
        raise MissingElementError(f"cannot split at {y}: element not present")
    mults = dict(m._mults)
    if mults[y] == 1:
        del mults[y]
    else:
        mults[y] -= 1
    for z in (y + 1, y * (y + 1)):
        mults[z] = mults.get(z, 0) + 1
    return TowerMultiset._from_sorted_dict({e: mults[e] for e in sorted(mults)})


def format_multiset(m: TowerMultiset) -> str:
    """Canonical text form, e.g. {4,5,6^2,12^2,20}."""
    parts = []
    for elem, mult in m.items():
        parts.append(str(elem) if mult == 1 else f"{elem}^{mult}")
    return "{" + ",".join(parts) + "}"


def parse_multiset(s: str) -> TowerMultiset:
    """Inverse of format_multiset."""
    s = s.strip()
    if not (s.startswith("{") and s.endswith("}")):
        raise ValueError(f"not a multiset literal: {s!r}")
    body = s[1:-1].strip()
    if not body:
        return TowerMultiset()
    entries = []
    for part in body.split(","):
        part = part.strip()
        if "^" in part:
            elem_str, mult_str = part.split("^", 1)
            entries.append((int(elem_str), int(mult_str)))
        else:
            entries.append((int(part), 1))
    return TowerMultiset(entries)
