"""Hypercubes of new generation inside a parent cube, and separated sets of them.

A cube C_tau(p/q) is of new generation in C_tau(p0/q0) when p is absolutely
q-primitive, the cube lies in the parent, and no cube C_tau(p1/q1) with
q0 < q1 < q meets it.

Two facts keep the enumeration small and exact:

* sup-norm cubes meet iff they overlap on every axis, and for a fixed q1 the
  integer p1 can be chosen independently per axis.  So "q1 blocks p" is the
  conjunction over axes of a one-dimensional test.
* if p is absolutely q-primitive then |p/q - p1/q1| >= 1/(q q1), so an
  intersection forces q1**(tau - 1) < 2q.  Larger q1 never block.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import kernels
from .errors import EmptyRange, HypothesisWarning, ParamMismatch, PreconditionError
from .exact import fmt_rational, iroot, parse_rational, sign_of
from .integer_sets import IntegerSetSpec, members_between
from .parallel import pmap
from .rational_geometry import (
    Hypercube,
    cube_inside_unit_box,
    cube_relation,
    euler_phi,
    intervals_overlap,
    is_primitive,
)

_REL = 1e-9


def blocking_limit(q: int, tau: Fraction) -> int:
    """Largest q1 with q1**(tau-1) < 2q (only such q1 can meet an absolutely primitive p/q)."""
    a, b = tau.numerator, tau.denominator
    e = a - b
    target = (2 * q) ** b
    m = iroot(target, e)
    return m - 1 if m**e == target else m


def axis_contained(p0: int, q0: int, q: int, tau: Fraction, shrink: Fraction = Fraction(1)) -> list[int]:
    """Integers p with gcd(p, q) = 1 and I(p/q) inside the parent axis interval.

    The parent interval is centred at p0/q0 with half-width ``shrink * q0**-tau``.
    Containment of open intervals allows touching endpoints.
    """
    tf = float(tau)
    h0 = float(shrink) * float(q0) ** -tf
    h = float(q) ** -tf
    rhs = h0 - h
    if rhs < -_REL * h0:
        return []
    x = p0 * q / q0
    R = q * max(rhs, 0.0)
    out = []
    qq0 = float(q) * q0
    for p in range(math.floor(x - R) - 1, math.ceil(x + R) + 2):
        if math.gcd(p, q) != 1:
            continue
        num = abs(p * q0 - p0 * q)
        lhs = num / qq0
        if lhs < rhs * (1 - _REL) - 1e-300:
            out.append(p)
        elif lhs <= rhs * (1 + _REL) + _REL * h0:
            if sign_of(Fraction(num, q * q0), [(1, q), (-shrink, q0)], tau) <= 0:
                out.append(p)
    return out


def _resolve_overlap(p: int, q: int, q1: int, tau: Fraction) -> bool:
    tf = float(tau)
    x = p * q1 / q
    w = q1 * (float(q) ** -tf + float(q1) ** -tf) * 1.01 + 1e-6
    return any(
        intervals_overlap(p, q, y, q1, tau)
        for y in range(math.floor(x - w) - 1, math.ceil(x + w) + 2)
    )


def _blocking_matrix(values: list[int], q: int, q1s: np.ndarray, tau: Fraction) -> np.ndarray:
    """Boolean matrix [value, q1]: some y has I(value/q) meeting I(y/q1)."""
    tf = float(tau)
    if len(values) == 0 or len(q1s) == 0:
        return np.zeros((len(values), len(q1s)), dtype=bool)
    h1s = q1s.astype(np.float64) ** -tf
    state = kernels.classify_axis(np.asarray(values, dtype=np.int64), q, q1s, float(q) ** -tf, h1s)
    out = state == kernels.OVERLAP
    for i, j in zip(*np.nonzero(state == kernels.UNCERTAIN)):
        out[i, j] = _resolve_overlap(values[i], q, int(q1s[j]), tau)
    return out


def new_generation_at(parent: Hypercube, q: int, shrink: Fraction = Fraction(1)):
    """All p with C_tau(p/q) of new generation in ``parent``.

    Returns (candidates, members): the number of absolutely q-primitive p whose
    cube lies in the (optionally shrunk) parent, and the sorted list of those
    that are of new generation.
    """
    q0, tau = parent.q, parent.tau
    if q <= q0:
        raise ParamMismatch(f"need q > q0, got q={q}, q0={q0}")
    axes = [axis_contained(p0, q0, q, tau, shrink) for p0 in parent.p]
    candidates = math.prod(len(a) for a in axes)
    if candidates == 0:
        return 0, []
    hi = min(q - 1, blocking_limit(q, tau))
    q1s = np.arange(q0 + 1, hi + 1, dtype=np.int64)
    if len(q1s) == 0:
        return candidates, [tuple(v) for v in product(*axes)]

    values = sorted(set().union(*axes))
    index = {v: i for i, v in enumerate(values)}
    block = _blocking_matrix(values, q, q1s, tau)
    if parent.n == 1:
        free = ~block.any(axis=1)
        return candidates, [(v,) for v in axes[0] if free[index[v]]]

    members = []
    for vec in product(*axes):
        rows = block[index[vec[0]]].copy()
        for v in vec[1:]:
            rows &= block[index[v]]
            if not rows.any():
                break
        if not rows.any():
            members.append(tuple(vec))
    return candidates, members


def is_new_generation(cand: Hypercube, parent: Hypercube) -> bool:
    """Direct check of the definition for a single candidate cube."""
    if cand.n != parent.n or cand.tau != parent.tau:
        raise ParamMismatch("candidate and parent differ in dimension or tau")
    q, q0, tau = cand.q, parent.q, cand.tau
    if q <= q0:
        raise ParamMismatch(f"need q > q0, got q={q}, q0={q0}")
    if not is_primitive(cand.p, q, "absolute"):
        return False
    contains, _ = cube_relation(parent, cand)
    if not bool(contains):
        return False
    for q1 in range(q0 + 1, min(q - 1, blocking_limit(q, tau)) + 1):
        if all(_resolve_overlap(x, q, q1, tau) for x in cand.p):
            return False
    return True


@dataclass(frozen=True)
class NewGenReport:
    parent: Hypercube
    q: int
    candidates: int
    new_gen_count: int
    count_bound: float
    bound_satisfied: bool

    def to_json(self) -> dict:
        return {
            "parent": self.parent.to_json(),
            "q": self.q,
            "candidates": self.candidates,
            "new_gen": self.new_gen_count,
            "bound": self.count_bound,
            "satisfied": self.bound_satisfied,
        }

    def csv_row(self) -> list:
        return [self.q, self.candidates, self.new_gen_count, f"{self.count_bound:.6g}",
                str(self.bound_satisfied).lower()]


def count_lower_bound(parent: Hypercube, q: int) -> tuple[float, int]:
    """(phi(q)^n * vol(parent) / 2^(n+1) as a float, phi(q)).

    The float is for reporting; :func:`meets_lower_bound` compares exactly.
    """
    n = parent.n
    phi = euler_phi(q)
    vol = (2.0 * float(parent.q) ** -float(parent.tau)) ** n
    return phi**n * vol / 2 ** (n + 1), phi


def meets_lower_bound(count: int, phi: int, parent: Hypercube) -> bool:
    """Exact test count >= phi^n (2 q0^-tau)^n / 2^(n+1) = phi^n q0^(-n tau) / 2."""
    n, a, b = parent.n, parent.tau.numerator, parent.tau.denominator
    # (2 count)^b * q0^(n a) >= phi^(n b)
    return (2 * count) ** b * parent.q ** (n * a) >= phi ** (n * b)


def count_new_generation(parent: Hypercube, q: int) -> NewGenReport:
    if q <= parent.q:
        raise ParamMismatch(f"need q > q0, got q={q}, q0={parent.q}")
    if not cube_inside_unit_box(parent):
        raise PreconditionError("parent cube must lie inside (0,1)^n")
    candidates, members = new_generation_at(parent, q)
    bound, phi = count_lower_bound(parent, q)
    return NewGenReport(
        parent=parent,
        q=q,
        candidates=candidates,
        new_gen_count=len(members),
        count_bound=bound,
        bound_satisfied=meets_lower_bound(len(members), phi, parent),
    )


# -- separated sets ------------------------------------------------------------


def separated(v1: tuple[int, ...], q1: int, v2: tuple[int, ...], q2: int, expo: Fraction) -> bool:
    """Exact test |v1/q1 - v2/q2| >= q1**(-expo) in the sup norm."""
    num = max(abs(a * q2 - b * q1) for a, b in zip(v1, v2))
    c, d = expo.numerator, expo.denominator
    # num/(q1 q2) >= q1^(-c/d)  <=>  num^d * q1^c >= (q1 q2)^d
    return num**d * q1**c >= (q1 * q2) ** d


@dataclass(frozen=True)
class ESet:
    parent: Hypercube
    k: int
    nu: Fraction
    members: tuple[tuple[tuple[int, ...], int], ...]
    excluded: int
    candidates: int
    size_bound: float
    size_bound_met: bool
    warnings: tuple[str, ...] = field(default=())

    @property
    def expo(self) -> Fraction:
        return 1 + self.nu / self.parent.n

    def cubes(self) -> list[Hypercube]:
        return [Hypercube.make(p, q, self.parent.tau) for p, q in self.members]

    def to_json(self) -> dict:
        return {
            "parent": self.parent.to_json(),
            "k": self.k,
            "nu": fmt_rational(self.nu),
            "members": [{"p": list(p), "q": q} for p, q in self.members],
            "excluded": self.excluded,
            "candidates": self.candidates,
            "size_bound": self.size_bound,
            "size_bound_met": self.size_bound_met,
            "warnings": list(self.warnings),
        }


def filter_separated(cands, expo: Fraction) -> tuple[list, int]:
    """Keep candidates in order; drop one if a kept element with smaller q is too close.

    ``cands`` must be sorted by (q, p).  Returns (kept, number excluded).
    """
    kept: list = []
    keys: list[float] = []
    order: list[int] = []
    excluded = 0
    if not cands:
        return kept, 0
    # kept q1 are never below the smallest candidate q, so this bounds every threshold
    radius = float(cands[0][1]) ** -float(expo) * (1 + 1e-6) + 1e-15
    for p, q in cands:
        x0 = p[0] / q
        lo = bisect.bisect_left(keys, x0 - radius)
        hi = bisect.bisect_right(keys, x0 + radius)
        clash = False
        for idx in order[lo:hi]:
            p1, q1 = kept[idx]
            if q1 < q and not separated(p1, q1, p, q, expo):
                clash = True
                break
        if clash:
            excluded += 1
            continue
        pos = bisect.bisect_left(keys, x0)
        keys.insert(pos, x0)
        order.insert(pos, len(kept))
        kept.append((p, q))
    return kept, excluded


class _NewGenAt:
    """Picklable ``q -> new_generation_at(parent, q, shrink)``."""

    def __init__(self, parent: Hypercube, shrink: Fraction):
        self.parent, self.shrink = parent, shrink

    def __call__(self, q: int):
        return new_generation_at(self.parent, q, self.shrink)


def build_e_set(
    parent: Hypercube,
    spec: IntegerSetSpec,
    k: int,
    nu,
    *,
    shrink: Fraction = Fraction(1),
    threads: int | None = None,
) -> ESet:
    """Separated family of new-generation cubes with denominators in spec & (k, 2k].

    Candidates are generated per denominator, then filtered in ascending
    (q, p) order: a candidate is excluded when an already kept p1/q1 with
    q1 < q lies within q1**-(1 + nu/n) of it.
    """
    nu = parse_rational(nu)
    if nu < 0:
        raise PreconditionError("nu must be >= 0")
    if k <= parent.q:
        raise PreconditionError(f"need k > q0, got k={k}, q0={parent.q}")
    n, tau = parent.n, parent.tau
    notes = []
    if tau <= 2 + Fraction(1, n):
        msg = f"tau={tau} <= 2 + 1/n; separation of new-generation cubes is not guaranteed"
        warnings.warn(msg, HypothesisWarning, stacklevel=2)
        notes.append(msg)
    qs = members_between(spec, k, 2 * k)
    if not qs:
        raise EmptyRange(f"{spec.to_string()} has no element in ({k}, {2 * k}]")
    per_q = pmap(_NewGenAt(parent, shrink), qs, threads, chunksize=max(1, len(qs) // 64))
    cands = [(p, q) for q, (_, members) in zip(qs, per_q) for p in members]
    phi_sum = sum(euler_phi(q) ** n for q in qs)
    expo = 1 + nu / n
    kept, excluded = filter_separated(cands, expo)
    vol = (2.0 * float(parent.q) ** -float(tau)) ** n
    size_bound = vol / 2 ** (n + 2) * phi_sum
    return ESet(
        parent=parent,
        k=k,
        nu=nu,
        members=tuple(kept),
        excluded=excluded,
        candidates=len(cands),
        size_bound=size_bound,
        size_bound_met=len(kept) >= size_bound,
        warnings=tuple(notes),
    )
