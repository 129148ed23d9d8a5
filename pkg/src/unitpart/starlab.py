"""Successor/star iteration, divisibility and coprimality certificates,
budgeted factorization, and prime-power ladders.

The star map sends x to x(x+1).  Iterating it produces a divisibility
chain whose consecutive quotients x+1, star(x)+1, star^2(x)+1, ... are
pairwise coprime, so star^n(x) accumulates at least n distinct primes.
The ladder of x concatenates the factorizations of x and of each
quotient; merged, they reproduce the factorization of star^n(x) with no
prime ever appearing twice.

Factorization is deterministic and budgeted by operation counts (trial
probes plus cycle-walk iterations), never wall-clock, so identical
inputs give identical outputs everywhere.  Primality uses strong
pseudoprime tests: a fixed deterministic base set below the published
threshold, and recorded seeded rounds above it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from math import gcd, prod

from .core_arith import nat_valuation
from .errors import CertificateError

__all__ = [
    "Factorization",
    "Ladder",
    "ValuationReport",
    "DEFAULT_EFFORT",
    "successor_and_star",
    "star_iter",
    "apply_word",
    "divisibility_chain_check",
    "coprime_certificate",
    "valuation_stability_check",
    "factorize",
    "certify_prime",
    "ladder",
    "format_factors",
    "format_ladder",
    "merged_segments",
    "observed_primes",
    "observed_prime_powers",
]

DEFAULT_EFFORT = 2_000_000

_TRIAL_BOUND = 100_000

# Largest input for which the 12-base strong-pseudoprime test is a proof.
_DETERMINISTIC_LIMIT = 3_317_044_064_679_887_385_961_981
_DETERMINISTIC_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_RANDOM_ROUNDS = 24
_WITNESS_SALT = 0x5F3759DF


def successor_and_star(x: int) -> tuple[int, int]:
    """(x+1, x(x+1)); both images coincide at 2 when x = 1."""
    if x < 1:
        raise ValueError(f"invalid argument: x = {x} outside domain")
    return x + 1, x * (x + 1)


def star_iter(p: int, x: int, max_bits: int | None = 1_000_000) -> int:
    """p-fold star iteration; the identity when p = 0.

    Results roughly square each step, so a size guard (in bits) rejects
    runaway requests; pass max_bits=None to disable it.
    """
    if x < 1:
        raise ValueError(f"invalid argument: x = {x} outside domain")
    if p < 0:
        raise ValueError(f"iteration count must be >= 0, got {p}")
    y = x
    for _ in range(p):
        y = y * (y + 1)
        if max_bits is not None and y.bit_length() > max_bits:
            raise ValueError(
                f"star iterate exceeds the {max_bits}-bit size guard"
            )
    return y


def apply_word(word: str, x: int) -> int:
    """Apply a word over the alphabet {'+', '*'} to x, leftmost letter first.

    '+' is the successor map, '*' the star map.
    """
    if x < 1:
        raise ValueError(f"invalid argument: x = {x} outside domain")
    y = x
    for letter in word:
        if letter == "+":
            y = y + 1
        elif letter == "*":
            y = y * (y + 1)
        else:
            raise ValueError(f"invalid word letter {letter!r}")
    return y


def divisibility_chain_check(x: int, m: int) -> bool:
    """True iff each star iterate of x divides the next, up to star^m."""
    if x < 1 or m < 1:
        raise ValueError("need x >= 1 and m >= 1")
    y = x
    for _ in range(m):
        nxt = y * (y + 1)
        if nxt % y != 0:
            return False
        y = nxt
    return True


def coprime_certificate(x: int, n: int) -> list[int]:
    """The quotients [star^j(x) + 1 for j < n], verified before return.

    Entries exceed 1, are pairwise coprime, and multiply with x to
    star^n(x); that certifies star^n(x) has at least n distinct prime
    factors without factoring anything.
    """
    if x < 1 or n < 1:
        raise ValueError("need x >= 1 and n >= 1")
    entries = []
    y = x
    for _ in range(n):
        entries.append(y + 1)
        y = y * (y + 1)
    for e in entries:
        if e <= 1:
            raise CertificateError(f"certificate entry {e} is not > 1")
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            if gcd(entries[i], entries[j]) != 1:
                raise CertificateError(
                    f"certificate entries {entries[i]} and {entries[j]} "
                    "share a factor"
                )
    if x * prod(entries) != y:
        raise CertificateError("certificate product does not reconstruct the iterate")
    return entries


@lru_cache(maxsize=1)
def _small_primes() -> tuple[int, ...]:
    sieve = bytearray([1]) * (_TRIAL_BOUND + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, int(_TRIAL_BOUND**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytes(len(sieve[i * i :: i]))
    return tuple(i for i in range(2, _TRIAL_BOUND + 1) if sieve[i])


def _strong_probable_prime(n: int, base: int) -> bool:
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    x = pow(base % n, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def _certify_prime(n: int) -> tuple[bool, int]:
    """(is prime, randomized rounds used).  Zero rounds means the answer
    is unconditional."""
    if n < 2:
        return False, 0
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n == p:
            return True, 0
        if n % p == 0:
            return False, 0
    for base in _DETERMINISTIC_BASES:
        if not _strong_probable_prime(n, base):
            return False, 0
    if n < _DETERMINISTIC_LIMIT:
        return True, 0
    rng = random.Random(n ^ _WITNESS_SALT)
    for _ in range(_RANDOM_ROUNDS):
        base = rng.randrange(2, n - 1)
        if not _strong_probable_prime(n, base):
            return False, 0
    return True, _RANDOM_ROUNDS


def certify_prime(n: int) -> tuple[bool, int]:
    """Public primality certification; see _certify_prime for the contract."""
    return _certify_prime(n)


def _brent_rho(n: int, attempt: int, budget: int) -> tuple[int | None, int]:
    """One deterministic cycle-walk attempt at splitting odd composite n.

    Parameters derive from n and the attempt index; returns (factor or
    None, iterations spent), spending at most `budget` iterations.
    """
    if n % 2 == 0:
        return 2, 0
    c = 1 + (n + 2 * attempt) % 255
    y = 2 + (n + attempt) % 11
    m = 128
    spent = 0
    g = r = q = 1
    x = ys = y
    while g == 1 and spent < budget:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        k = 0
        while k < r and g == 1 and spent < budget:
            ys = y
            for _ in range(min(m, r - k)):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
                spent += 1
            g = gcd(q, n)
            k += m
        r *= 2
    if g == n:
        # batch overshot; replay one step at a time
        g = 1
        while g == 1:
            ys = (ys * ys + c) % n
            spent += 1
            g = gcd(abs(x - ys), n)
    if 1 < g < n:
        return g, spent
    return None, spent


@dataclass(frozen=True)
class Factorization:
    """Certified prime powers in ascending prime order plus any
    composite remainder the budget could not resolve."""

    factors: tuple[tuple[int, int], ...]
    cofactor: int = 1
    randomized_rounds: int = 0

    @property
    def status(self) -> str:
        return "complete" if self.cofactor == 1 else "partial"

    @property
    def value(self) -> int:
        out = self.cofactor
        for p, e in self.factors:
            out *= p**e
        return out

    def distinct_primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)


def factorize(m: int, effort: int = DEFAULT_EFFORT) -> Factorization:
    """Deterministic budgeted factorization.

    Trial division by all primes below 100000, then repeated
    cycle-walk splitting of what remains, certifying every emitted
    prime.  `effort` caps the operation count; leftovers become a
    composite cofactor (a partial result is valid, never wrong).
    """
    if m < 1:
        raise ValueError(f"cannot factor {m}; domain starts at 1")
    counts: dict[int, int] = {}
    rounds = 0
    budget = effort
    n = m
    for p in _small_primes():
        if p * p > n or budget <= 0:
            break
        budget -= 1
        if n % p == 0:
            counts[p] = 0
            while n % p == 0:
                n //= p
                counts[p] += 1
    if n > 1:
        if n < _TRIAL_BOUND * _TRIAL_BOUND and budget > 0:
            # survived full trial division, so prime
            counts[n] = counts.get(n, 0) + 1
            n = 1
    unresolved: list[int] = []
    stack = [n] if n > 1 else []
    while stack:
        c = stack.pop()
        is_p, rr = _certify_prime(c)
        rounds += rr
        if is_p:
            counts[c] = counts.get(c, 0) + 1
            continue
        found = None
        for attempt in range(32):
            if budget <= 0:
                break
            found, spent = _brent_rho(c, attempt, budget)
            budget -= spent
            if found is not None:
                break
        if found is None:
            unresolved.append(c)
            if budget <= 0:
                unresolved.extend(stack)
                stack = []
        else:
            stack.append(found)
            stack.append(c // found)
    cofactor = prod(unresolved) if unresolved else 1
    return Factorization(
        factors=tuple(sorted(counts.items())),
        cofactor=cofactor,
        randomized_rounds=rounds,
    )


@dataclass(frozen=True)
class Ladder:
    """Segment 0 factors the seed; segment j factors star^(j-1)(seed)+1."""

    seed: int
    segments: tuple[Factorization, ...]


def ladder(x: int, depth: int, effort: int = DEFAULT_EFFORT) -> Ladder:
    """Factor the seed and the first `depth` chain quotients.

    Certified primes may not repeat across segments; a repeat would
    contradict the coprimality of the quotients and raises
    CertificateError.
    """
    if x < 1 or depth < 0:
        raise ValueError("need x >= 1 and depth >= 0")
    targets = [x]
    y = x
    for _ in range(depth):
        targets.append(y + 1)
        y = y * (y + 1)
    segments = tuple(factorize(t, effort) for t in targets)
    seen: dict[int, int] = {}
    for j, seg in enumerate(segments):
        for p, _ in seg.factors:
            if p in seen:
                raise CertificateError(
                    f"prime {p} appears in segments {seen[p]} and {j}"
                )
            seen[p] = j
    return Ladder(seed=x, segments=segments)


def format_factors(f: Factorization) -> str:
    """Ascending prime powers joined by the middle dot; bare prime when
    the exponent is 1; unresolved cofactor appended with a '?'."""
    parts = [str(p) if e == 1 else f"{p}^{e}" for p, e in f.factors]
    if f.cofactor != 1:
        parts.append(f"{f.cofactor}?")
    return "·".join(parts)


def format_ladder(lad: Ladder) -> str:
    body = ";".join(format_factors(seg) for seg in lad.segments)
    return f"{lad.seed}^* = {body}"


def merged_segments(lad: Ladder, upto: int) -> tuple[tuple[tuple[int, int], ...], bool]:
    """Concatenate segments 0..upto into one ascending prime-power list.

    The boolean reports whether every merged segment was complete.
    """
    if not 0 <= upto < len(lad.segments):
        raise ValueError(f"no segment {upto} in a {len(lad.segments)}-segment ladder")
    merged: dict[int, int] = {}
    complete = True
    for seg in lad.segments[: upto + 1]:
        if seg.status != "complete":
            complete = False
        for p, e in seg.factors:
            merged[p] = merged.get(p, 0) + e
    return tuple(sorted(merged.items())), complete


def observed_primes(lad: Ladder) -> tuple[int, ...]:
    """All certified primes seen anywhere in the ladder, ascending."""
    out = set()
    for seg in lad.segments:
        out.update(seg.distinct_primes())
    return tuple(sorted(out))


def observed_prime_powers(lad: Ladder) -> tuple[int, ...]:
    """All certified prime-power values p**e seen in segments, ascending."""
    out = {p**e for seg in lad.segments for p, e in seg.factors}
    return tuple(sorted(out))


@dataclass(frozen=True)
class ValuationReport:
    """Per-prime exact-valuation comparison between two star iterates.

    checks rows are (prime, exponent in star^n x, valuation in
    star^m x, stable).  `complete` is False when the base factorization
    left a cofactor, making the report partial but still sound.
    """

    x: int
    n: int
    m: int
    checks: tuple[tuple[int, int, int, bool], ...]
    complete: bool

    @property
    def all_stable(self) -> bool:
        return all(row[3] for row in self.checks)


def valuation_stability_check(
    x: int, n: int, m: int, effort: int = DEFAULT_EFFORT
) -> ValuationReport:
    """Verify that every certified p^e exactly dividing star^n(x) still
    exactly divides star^m(x)."""
    if x < 1 or n < 1 or m <= n:
        raise ValueError("need x >= 1 and 1 <= n < m")
    base = star_iter(n, x)
    target = star_iter(m, x)
    fact = factorize(base, effort)
    checks = []
    for p, e in fact.factors:
        v = nat_valuation(p, target)
        checks.append((p, e, v, v == e))
    return ValuationReport(
        x=x,
        n=n,
        m=m,
        checks=tuple(checks),
        complete=fact.status == "complete",
    )
