"""Rational vectors, sup-norm hypercubes C_tau(p/q) and coprimality counting.

A hypercube ``C_tau(p/q)`` is the product of open intervals
``(p_i/q - q**-tau, p_i/q + q**-tau)``.  The pair (p, q) is kept exactly as
given: ``C_tau(2p/2q)`` is a strictly smaller cube than ``C_tau(p/q)``.
Containment and disjointness are decided exactly for rational ``tau``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import DimensionMismatch, PreconditionError, TauMismatch
from .exact import as_tau, factorize, fmt_rational, parse_rational, power_enclosure, sign_of

EULER_GAMMA = 0.5772156649015329


class TriBool(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNDECIDED = "undecided"

    def __bool__(self):
        if self is TriBool.UNDECIDED:
            raise ValueError("undecided comparison has no truth value")
        return self is TriBool.TRUE

    @classmethod
    def of(cls, flag: bool) -> "TriBool":
        return cls.TRUE if flag else cls.FALSE


@dataclass(frozen=True)
class RationalVec:
    """Integer vector p over a shared denominator q (not reduced)."""

    p: tuple[int, ...]
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise PreconditionError(f"denominator must be >= 1, got {self.q}")
        if not self.p:
            raise PreconditionError("dimension must be >= 1")
        object.__setattr__(self, "p", tuple(int(x) for x in self.p))

    @property
    def n(self) -> int:
        return len(self.p)

    def components(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(x, self.q) for x in self.p)

    def sup_distance(self, other: "RationalVec") -> Fraction:
        if other.n != self.n:
            raise DimensionMismatch(f"dimensions {self.n} and {other.n}")
        num = max(abs(a * other.q - b * self.q) for a, b in zip(self.p, other.p))
        return Fraction(num, self.q * other.q)


@dataclass(frozen=True)
class Hypercube:
    center: RationalVec
    tau: Fraction

    def __post_init__(self):
        t = as_tau(self.tau)
        if t <= 1:
            raise PreconditionError(f"tau must exceed 1, got {t}")
        object.__setattr__(self, "tau", t)

    @classmethod
    def make(cls, p, q: int, tau) -> "Hypercube":
        if isinstance(p, int):
            p = (p,)
        return cls(RationalVec(tuple(p), q), parse_rational(tau))

    @property
    def p(self) -> tuple[int, ...]:
        return self.center.p

    @property
    def q(self) -> int:
        return self.center.q

    @property
    def n(self) -> int:
        return self.center.n

    def halfwidth(self, bits: int = 53) -> tuple[Fraction, Fraction]:
        """Certified dyadic enclosure ``lo <= q**-tau <= hi``."""
        return power_enclosure(self.q, self.tau, bits)

    def halfwidth_float(self) -> float:
        return float(self.q) ** -float(self.tau)

    def to_json(self) -> dict:
        return {"q": self.q, "p": list(self.p), "tau": fmt_rational(self.tau)}

    @classmethod
    def from_json(cls, obj: dict) -> "Hypercube":
        return cls.make(tuple(obj["p"]), int(obj["q"]), obj["tau"])


def _check_pair(a: Hypercube, b: Hypercube) -> None:
    if a.n != b.n:
        raise DimensionMismatch(f"dimensions {a.n} and {b.n}")
    if a.tau != b.tau:
        raise TauMismatch(f"tau {a.tau} and {b.tau}")


def axis_offsets(a: Hypercube, b: Hypercube) -> list[Fraction]:
    """Exact |center difference| per axis."""
    return [Fraction(abs(x * b.q - y * a.q), a.q * b.q) for x, y in zip(a.p, b.p)]


def _relation_at(a: Hypercube, b: Hypercube, bits: int) -> tuple[TriBool, TriBool]:
    alo, ahi = a.halfwidth(bits)
    blo, bhi = b.halfwidth(bits)
    offs = axis_offsets(a, b)
    if all(d + bhi <= alo for d in offs):
        contains = TriBool.TRUE
    elif any(d + blo > ahi for d in offs):
        contains = TriBool.FALSE
    else:
        contains = TriBool.UNDECIDED
    if any(d >= ahi + bhi for d in offs):
        disjoint = TriBool.TRUE
    elif all(d < alo + blo for d in offs):
        disjoint = TriBool.FALSE
    else:
        disjoint = TriBool.UNDECIDED
    return contains, disjoint


def cube_relation(a: Hypercube, b: Hypercube, bits: int | None = None) -> tuple[TriBool, TriBool]:
    """Return (b is contained in a, a and b are disjoint).

    With ``bits`` set, only a dyadic enclosure of that precision is used and
    either answer may be UNDECIDED.  Without it the answer is exact.
    Open cubes: touching boundaries do not intersect, and equal boundaries
    still count as containment.
    """
    _check_pair(a, b)
    if bits is not None:
        return _relation_at(a, b, bits)
    offs = axis_offsets(a, b)
    contains = all(sign_of(d, [(1, b.q), (-1, a.q)], a.tau) <= 0 for d in offs)
    disjoint = any(sign_of(d, [(-1, a.q), (-1, b.q)], a.tau) >= 0 for d in offs)
    return TriBool.of(contains), TriBool.of(disjoint)


def intervals_overlap(x: int, q: int, y: int, q1: int, tau) -> bool:
    """Exact test I_tau(x/q) & I_tau(y/q1) != empty (open intervals)."""
    d = Fraction(abs(x * q1 - y * q), q * q1)
    return sign_of(d, [(-1, q), (-1, q1)], tau) < 0


def euler_phi(q: int) -> int:
    if q < 1:
        raise PreconditionError(f"euler_phi expects q >= 1, got {q}")
    out = q
    for p, _ in factorize(q):
        out = out // p * (p - 1)
    return out


def totients_up_to(m: int) -> np.ndarray:
    """phi(0..m) by sieve (phi(0) reported as 0)."""
    phi = np.arange(m + 1, dtype=np.int64)
    for p in range(2, m + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    return phi


def coprime_count(q: int, lo, hi) -> int:
    """#{p integer in [lo, hi] : gcd(p, q) = 1}, by enumeration."""
    lo, hi = parse_rational(lo), parse_rational(hi)
    if lo < 0 or lo > hi:
        raise PreconditionError(f"need 0 <= lo <= hi, got [{lo}, {hi}]")
    start, stop = math.ceil(lo), math.floor(hi)
    return sum(1 for p in range(start, stop + 1) if math.gcd(p, q) == 1)


def is_primitive(p, q: int, mode: str = "any") -> bool:
    if mode == "any":
        return any(math.gcd(x, q) == 1 for x in p)
    if mode == "absolute":
        return all(math.gcd(x, q) == 1 for x in p)
    raise PreconditionError(f"mode must be 'any' or 'absolute', got {mode!r}")


def axis_positions(q: int, tau, strict_interior: bool) -> list[int]:
    """p in [1, q-1] with (if strict) I_tau(p/q) inside (0, 1)."""
    out = []
    for p in range(1, q):
        if strict_interior:
            # p/q - q^-tau >= 0 and 1 - p/q - q^-tau >= 0
            if sign_of(Fraction(p, q), [(-1, q)], tau) < 0:
                continue
            if sign_of(Fraction(q - p, q), [(-1, q)], tau) < 0:
                continue
        out.append(p)
    return out


def cubes_in_unit_box(q: int, tau, n: int, strict_interior: bool = True) -> list[tuple[int, ...]]:
    if q < 2:
        raise PreconditionError(f"need q >= 2, got {q}")
    axis = axis_positions(q, parse_rational(tau), strict_interior)
    return [tuple(v) for v in product(axis, repeat=n)]


def cube_inside_unit_box(cube: Hypercube) -> bool:
    return all(
        sign_of(Fraction(x, cube.q), [(-1, cube.q)], cube.tau) >= 0
        and sign_of(Fraction(cube.q - x, cube.q), [(-1, cube.q)], cube.tau) >= 0
        for x in cube.p
    )


# -- diagnostics -------------------------------------------------------------


def coprime_ratio(q: int, gamma, eta) -> float:
    """coprime_count(q, gamma*q, (gamma+eta)*q) / phi(q), to compare with eta."""
    gamma, eta = parse_rational(gamma), parse_rational(eta)
    return coprime_count(q, gamma * q, (gamma + eta) * q) / euler_phi(q)


def phi_loglog_minimum(lo: int, hi: int) -> tuple[int, float]:
    """Minimiser and minimum of phi(m) log log m / m over m in [lo, hi]."""
    if lo < 3:
        raise PreconditionError("log log m needs m >= 3")
    phi = totients_up_to(hi)[lo:]
    m = np.arange(lo, hi + 1, dtype=np.float64)
    vals = phi * np.log(np.log(m)) / m
    i = int(np.argmin(vals))
    return lo + i, float(vals[i])

