"""Nested level sets of disjoint hypercubes, their mass distribution, and dimension diagnostics.

Level 0 is the unit box.  Level 1 holds every interior cube at the smallest
usable denominator.  Each later level places, inside every parent cube shrunk
by ``1 - ETA``, a family of new-generation cubes:

* when the denominator set has positive exponent of convergence, the set is
  first thinned to exponent ``nu - delta`` and children come from a separated
  family with denominators in (q_k, 2 q_k];
* otherwise every child at level k shares the single denominator q_k.

Each parent splits its mass evenly over its children, so every node mass is a
unit fraction and each level sums to exactly 1.
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product

import numpy as np

from . import kernels
from .errors import (
    EmptyRange,
    HypothesisViolation,
    HypothesisWarning,
    InfeasibleShaping,
    InsufficientScales,
    InvariantViolation,
    PreconditionError,
    StarvedParent,
)
from .exact import as_tau, fmt_rational, iroot, mixed_sign, parse_rational, sign_of
from .integer_sets import (
    IntegerSetSpec,
    ShapeParams,
    enumerate_up_to,
    estimate_nu,
    members_between,
    parse_spec,
    shape_subset,
)
from .new_generation import build_e_set, new_generation_at
from .parallel import pmap
from .rational_geometry import Hypercube, cube_inside_unit_box, cube_relation, cubes_in_unit_box

SCHEMA_VERSION = 1
ETA = Fraction(1, 4)
MAX_DEPTH = 4
NU_ZERO_CUTOFF = 0.05
MAX_RETRIES = 64


@dataclass(frozen=True)
class Epsilon:
    """The separation value coef * base**(-expo)."""

    coef: Fraction
    base: int
    expo: Fraction

    @property
    def value(self) -> float:
        return float(self.coef) * float(self.base) ** -float(self.expo)

    def to_json(self) -> dict:
        return {"coef": fmt_rational(self.coef), "base": self.base, "expo": fmt_rational(self.expo)}

    @classmethod
    def from_json(cls, obj: dict) -> "Epsilon":
        return cls(parse_rational(obj["coef"]), int(obj["base"]), parse_rational(obj["expo"]))


@dataclass(frozen=True)
class Node:
    p: tuple[int, ...]
    q: int
    parent: int
    inv_mass: int

    @property
    def mass(self) -> Fraction:
        return Fraction(1, self.inv_mass)


@dataclass(frozen=True)
class Level:
    q_k: int
    epsilon: Epsilon
    nodes: tuple[Node, ...]
    m_min: int
    retries: int = 0
    excluded: int = 0

    @property
    def epsilon_k(self) -> float:
        return self.epsilon.value


@dataclass
class LevelSetTree:
    n: int
    tau: Fraction
    branch: str
    spec: str
    delta: Fraction
    nu_hat: float
    nu_used: Fraction
    gamma: Fraction
    levels: list[Level] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def cubes(self, level: int) -> list[Hypercube]:
        if level == 0:
            raise PreconditionError("level 0 is the unit box, not a cube")
        return [Hypercube.make(nd.p, nd.q, self.tau) for nd in self.levels[level].nodes]

    def children_counts(self, level: int) -> Counter:
        """Children per parent index for nodes of ``level``."""
        return Counter(nd.parent for nd in self.levels[level].nodes)

    @cached_property
    def _deep(self) -> "_DeepIndex":
        return _DeepIndex(self)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "params": {
                "n": self.n,
                "tau": fmt_rational(self.tau),
                "branch": self.branch,
                "spec": self.spec,
                "delta": fmt_rational(self.delta),
                "nu_hat": round(self.nu_hat, 6),
                "nu_used": fmt_rational(self.nu_used),
                "gamma": fmt_rational(self.gamma),
                "eta": fmt_rational(ETA),
            },
            "levels": [
                {
                    "q_k": lv.q_k,
                    "epsilon_k": lv.epsilon_k,
                    "epsilon": lv.epsilon.to_json(),
                    "m_k_min": lv.m_min,
                    "retries": lv.retries,
                    "excluded": lv.excluded,
                    "nodes": [
                        {"parent_index": nd.parent, "p": list(nd.p), "q": nd.q,
                         "mass": fmt_rational(nd.mass)}
                        for nd in lv.nodes
                    ],
                }
                for lv in self.levels
            ],
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LevelSetTree":
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise PreconditionError(f"unsupported tree schema {obj.get('schema_version')!r}")
        pr = obj["params"]
        levels = []
        for lv in obj["levels"]:
            nodes = tuple(
                Node(tuple(d["p"]), int(d["q"]), int(d["parent_index"]),
                     parse_rational(d["mass"]).denominator)
                for d in lv["nodes"]
            )
            levels.append(Level(int(lv["q_k"]), Epsilon.from_json(lv["epsilon"]), nodes,
                                int(lv["m_k_min"]), int(lv.get("retries", 0)),
                                int(lv.get("excluded", 0))))
        return cls(
            n=int(pr["n"]), tau=parse_rational(pr["tau"]), branch=pr["branch"], spec=pr["spec"],
            delta=parse_rational(pr["delta"]), nu_hat=float(pr["nu_hat"]),
            nu_used=parse_rational(pr["nu_used"]), gamma=parse_rational(pr["gamma"]),
            levels=levels, notes=list(obj.get("notes", [])),
        )


@dataclass(frozen=True)
class MdpParams:
    rho: Fraction
    kappa: Fraction = Fraction(1)
    c_estimate: float = float("nan")


# -- construction -------------------------------------------------------------


def ceil_power(q: int, gamma: Fraction) -> int:
    """Smallest integer m >= q**gamma."""
    c, d = gamma.numerator, gamma.denominator
    target = q**c
    m = iroot(target, d)
    return m if m**d >= target else m + 1


class _Denominators:
    """Denominator source; optionally thinned, re-thinned on demand to a larger horizon.

    Thinning is prefix-stable: membership of x <= horizon never changes when
    the horizon grows, so earlier levels stay valid.
    """

    def __init__(self, spec: IntegerSetSpec, nu_target: Fraction | None):
        self.base = spec
        self.nu_target = nu_target
        self.horizon = 0
        self.spec = spec
        self.infeasible = False
        if nu_target is not None:
            self._reshape(1 << 14)

    def _reshape(self, horizon: int) -> None:
        params = ShapeParams(nu=self.nu_target, horizon=horizon, alpha="invlog")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InfeasibleShaping)
            self.spec, rec = shape_subset(self.base, params, check_estimate=False)
        self.infeasible = rec.infeasible
        self.horizon = horizon

    def ensure(self, x: int) -> None:
        if self.nu_target is not None and x > self.horizon:
            self._reshape(1 << max(14, (x - 1).bit_length()))

    def between(self, lo: int, hi: int) -> list[int]:
        self.ensure(hi)
        return members_between(self.spec, lo, hi)

    def first_at_least(self, x: int) -> int:
        lo, span = x - 1, max(16, x)
        limit = max(self.base.values, default=0) if self.base.is_finite else None
        while limit is None or lo < limit:
            got = self.between(lo, lo + span)
            if got:
                return got[0]
            lo, span = lo + span, 2 * span
        raise EmptyRange(f"{self.base.to_string()} has no element >= {x}")


def _level_one(src: _Denominators, n: int, tau: Fraction) -> tuple[int, list[tuple[int, ...]]]:
    q = src.first_at_least(2)
    for _ in range(10_000):
        cubes = cubes_in_unit_box(q, tau, n, strict_interior=True)
        if len(cubes) >= 2:
            return q, cubes
        q = src.first_at_least(q + 1)
    raise EmptyRange("no usable first-level denominator")


def _eset_children(args):
    p, q, tau, window, k, nu, shrink = args
    parent = Hypercube.make(p, q, tau)
    spec = IntegerSetSpec.explicit(window)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HypothesisWarning)
        es = build_e_set(parent, spec, k, nu, shrink=shrink, threads=1)
    return list(es.members), es.excluded


def _single_q_children(args):
    p, q, tau, qk, shrink = args
    parent = Hypercube.make(p, q, tau)
    _, members = new_generation_at(parent, qk, shrink)
    return [(v, qk) for v in members], 0


def _attach(parents: tuple[Node, ...], results, level: int) -> tuple[tuple[Node, ...], int, int]:
    nodes = []
    m_min = None
    excluded = 0
    for idx, (parent, (children, exc)) in enumerate(zip(parents, results)):
        if len(children) < 2:
            raise StarvedParent(level, idx, len(children))
        excluded += exc
        m = len(children)
        m_min = m if m_min is None else min(m_min, m)
        for p, q in sorted(children, key=lambda c: (c[1], c[0])):
            nodes.append(Node(tuple(p), q, idx, parent.inv_mass * m))
    return tuple(nodes), m_min or 0, excluded


def build_tree(
    spec: IntegerSetSpec | str,
    n: int,
    tau,
    delta=None,
    depth: int = 2,
    gamma=None,
    *,
    nu_hat: float | None = None,
    threads: int | None = None,
    check: bool = True,
) -> LevelSetTree:
    """Build levels 0..depth of the nested construction.

    ``gamma`` is the growth exponent (default tau): level k uses the smallest
    admissible q_k >= max(q_{k-1}**gamma, q_{k-1} + 1), moving upward while
    some parent would get fewer than two children.
    """
    if isinstance(spec, str):
        spec = parse_spec(spec)
    tau = as_tau(parse_rational(tau))
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if tau <= 2 + Fraction(1, n):
        raise HypothesisViolation(f"construction needs tau > 2 + 1/n, got tau={tau}, n={n}")
    if not 0 <= depth <= MAX_DEPTH:
        raise PreconditionError(f"depth must be in [0, {MAX_DEPTH}], got {depth}")
    gamma = tau if gamma is None else parse_rational(gamma)
    if gamma < 1:
        raise PreconditionError("growth exponent must be >= 1")

    if nu_hat is None:
        nu_hat = estimate_nu(spec, 1 << 20, "dyadic").nu_estimate_dyadic
    nu_r = Fraction(round(float(nu_hat), 2)).limit_denominator(100)
    positive = nu_hat >= NU_ZERO_CUTOFF
    if delta is None:
        delta = nu_r / 4 if positive else Fraction(0)
    delta = parse_rational(delta)
    if delta < 0:
        raise PreconditionError("delta must be >= 0")
    nu_used = nu_r - delta if positive else Fraction(0)
    if positive and nu_used <= 0:
        raise PreconditionError(f"delta={delta} leaves no room below nu={nu_r}")
    if not positive and 2 * delta >= n:
        raise PreconditionError("need 2*delta < n so that rho > 0")

    tree = LevelSetTree(
        n=n, tau=tau, branch="nu_positive" if positive else "nu_zero", spec=spec.to_string(),
        delta=delta, nu_hat=float(nu_hat), nu_used=nu_used, gamma=gamma,
    )
    root = Node((), 1, -1, 1)
    tree.levels.append(Level(1, Epsilon(Fraction(1), 1, Fraction(1)), (root,), 1))
    if depth == 0:
        return tree

    src = _Denominators(spec, nu_used if positive else None)
    shrink = 1 - ETA
    expo = 1 + nu_used / n

    q1, cubes = _level_one(src, n, tau)
    m1 = len(cubes)
    nodes = tuple(Node(p, q1, 0, m1) for p in cubes)
    eps1 = Epsilon(Fraction(1, 2), q1, expo if positive else Fraction(n))
    tree.levels.append(Level(q1, eps1, nodes, m1))

    prev_q = q1
    for level in range(2, depth + 1):
        parents = tree.levels[-1].nodes
        start = max(ceil_power(prev_q, gamma), prev_q + 1)
        if positive:
            start = max(start, 2 * prev_q)
        retries = 0
        qk = start if positive else src.first_at_least(start)
        while True:
            if positive:
                window = src.between(qk, 2 * qk)
                if not window:
                    m = src.first_at_least(qk + 1)
                    qk = max(qk, (m + 1) // 2)
                    continue
                jobs = [(nd.p, nd.q, tau, tuple(window), qk, nu_used, shrink) for nd in parents]
                results = pmap(_eset_children, jobs, threads)
            else:
                jobs = [(nd.p, nd.q, tau, qk, shrink) for nd in parents]
                results = pmap(_single_q_children, jobs, threads)
            try:
                new_nodes, m_min, excluded = _attach(parents, results, level)
                break
            except StarvedParent:
                retries += 1
                if retries > MAX_RETRIES:
                    raise
                qk = qk + max(1, qk // 8) if positive else src.first_at_least(qk + 1)
        eps = Epsilon(Fraction(1, 2), 2 * qk, expo) if positive else Epsilon(Fraction(1, 2), qk, Fraction(n))
        tree.levels.append(Level(qk, eps, new_nodes, m_min, retries, excluded))
        prev_q = qk
    if positive and src.infeasible:
        tree.notes.append("thinning caps never bound; denominators used unthinned")
    if positive:
        tree.spec = src.spec.to_string()
    if check:
        check_invariants(tree)
    return tree


# -- invariants ----------------------------------------------------------------


def _gap_at_least(a: Node, b: Node, tau: Fraction, eps: Epsilon) -> bool:
    """Sup-norm gap between the closed cubes of a and b is >= eps (exact)."""
    for x, y in zip(a.p, b.p):
        d = Fraction(abs(x * b.q - y * a.q), a.q * b.q)
        terms = [(-1, a.q, tau), (-1, b.q, tau), (-eps.coef, eps.base, eps.expo)]
        if mixed_sign(d, terms) >= 0:
            return True
    return False


def check_invariants(tree: LevelSetTree) -> dict:
    """Assert mass conservation, nesting and separation exactly; return a summary.

    Raises InvariantViolation on the first failure.
    """
    tau, n = tree.tau, tree.n
    summary = {"levels": []}
    for k, lv in enumerate(tree.levels):
        total = sum(Fraction(c, d) for d, c in Counter(nd.inv_mass for nd in lv.nodes).items())
        if total != 1:
            raise InvariantViolation(f"level {k} masses sum to {total}, not 1")
        if k == 0:
            summary["levels"].append({"level": 0, "nodes": 1, "mass": "1/1"})
            continue
        parents = tree.levels[k - 1].nodes
        counts = tree.children_counts(k)
        for nd in lv.nodes:
            if nd.inv_mass != parents[nd.parent].inv_mass * counts[nd.parent]:
                raise InvariantViolation(f"level {k}: mass of {nd} is not an even split")
            cube = Hypercube.make(nd.p, nd.q, tau)
            if k == 1:
                ok = cube_inside_unit_box(cube)
            else:
                par = parents[nd.parent]
                ok = bool(cube_relation(Hypercube.make(par.p, par.q, tau), cube)[0])
            if not ok:
                raise InvariantViolation(f"level {k}: cube {nd.p}/{nd.q} not nested in its parent")
        pairs = _close_pairs(lv.nodes, tau, lv.epsilon.value)
        for i, j in pairs:
            if not _gap_at_least(lv.nodes[i], lv.nodes[j], tau, lv.epsilon):
                a, b = lv.nodes[i], lv.nodes[j]
                raise InvariantViolation(f"level {k}: {a.p}/{a.q} and {b.p}/{b.q} closer than epsilon")
        summary["levels"].append({"level": k, "nodes": len(lv.nodes), "mass": "1/1",
                                  "pairs_checked": len(pairs)})
    return summary


def _close_pairs(nodes, tau: Fraction, eps: float) -> list[tuple[int, int]]:
    """Index pairs whose first-axis separation might fall below eps.

    Any pair left out is separated by more than eps on the first axis.  In one
    dimension, adjacent pairs in sorted order are always included since the
    gap grows along the line.
    """
    if len(nodes) < 2:
        return []
    tf = float(tau)
    xs = np.array([nd.p[0] / nd.q for nd in nodes])
    hs = np.array([float(nd.q) ** -tf for nd in nodes])
    order = np.argsort(xs, kind="stable")
    out = set()
    for a, b in zip(order[:-1], order[1:]):
        out.add((min(a, b), max(a, b)))
    if len(nodes[0].p) > 1:
        reach = eps + 2 * hs.max() + 1e-12
        xs_sorted = xs[order]
        for pos, i in enumerate(order):
            hi = np.searchsorted(xs_sorted, xs[i] + reach, side="right")
            for j in order[pos + 1 : hi]:
                out.add((min(i, j), max(i, j)))
    return sorted((int(a), int(b)) for a, b in out)


# -- mass and boxes --------------------------------------------------------------


class _DeepIndex:
    """Deepest-level nodes sorted along the first axis."""

    def __init__(self, tree: LevelSetTree):
        lv = tree.levels[-1]
        self.root = tree.depth == 0
        self.tau = tree.tau
        tf = float(tree.tau)
        nodes = sorted(lv.nodes, key=lambda nd: Fraction(nd.p[0], nd.q)) if not self.root else []
        self.nodes = nodes
        self.x0 = np.array([nd.p[0] / nd.q for nd in nodes])
        self.centers = np.array([[x / nd.q for x in nd.p] for nd in nodes]).reshape(len(nodes), tree.n)
        self.h = np.array([float(nd.q) ** -tf for nd in nodes])
        self.hmax = float(self.h.max()) if nodes else 0.0


def _meets(nd: Node, box, tau: Fraction) -> bool:
    """Open cube of ``nd`` meets the closed box (exact)."""
    for x, (lo, hi) in zip(nd.p, box):
        c = Fraction(x, nd.q)
        if sign_of(c - hi, [(-1, nd.q)], tau) >= 0:
            return False
        if sign_of(c - lo, [(1, nd.q)], tau) <= 0:
            return False
    return True


def _as_box(box, n: int) -> list[tuple[Fraction, Fraction]]:
    out = []
    for lo, hi in box:
        lo, hi = Fraction(lo), Fraction(hi)
        if not (0 <= lo <= hi <= 1):
            raise PreconditionError(f"box side [{lo}, {hi}] must lie in [0, 1]")
        out.append((lo, hi))
    if len(out) != n:
        raise PreconditionError(f"box has {len(out)} sides, tree has n={n}")
    return out


def _boxes_hit(tree: LevelSetTree, box) -> list[Node]:
    idx = tree._deep
    lo0, hi0 = float(box[0][0]), float(box[0][1])
    a = bisect_left(idx.x0, lo0 - idx.hmax - 1e-12) if len(idx.x0) else 0
    b = bisect_right(idx.x0, hi0 + idx.hmax + 1e-12) if len(idx.x0) else 0
    if a >= b:
        return []
    lo = np.array([float(s[0]) for s in box])
    hi = np.array([float(s[1]) for s in box])
    c = idx.centers[a:b]
    h = idx.h[a:b, None]
    above = c - h - hi  # < 0 needed
    below = c + h - lo  # > 0 needed
    margin = 1e-15
    sure = np.all((above < -margin) & (below > margin), axis=1)
    maybe = np.all((above < margin) & (below > -margin), axis=1) & ~sure
    hit = [idx.nodes[a + i] for i in np.flatnonzero(sure)]
    hit += [idx.nodes[a + i] for i in np.flatnonzero(maybe) if _meets(idx.nodes[a + i], box, tree.tau)]
    return hit


def _sum_inverse(inv: list[int]) -> Fraction:
    return sum((Fraction(c, d) for d, c in Counter(inv).items()), Fraction(0))


def mass_of_box(tree: LevelSetTree, box) -> Fraction:
    """Mass of the deepest-level cubes meeting the closed box (exact)."""
    box = _as_box(box, tree.n)
    if tree.depth == 0:
        return Fraction(1)
    return _sum_inverse([nd.inv_mass for nd in _boxes_hit(tree, box)])


def mdp_params(tree: LevelSetTree, delta=None) -> MdpParams:
    delta = tree.delta if delta is None else parse_rational(delta)
    nu = tree.nu_used + tree.delta if tree.branch == "nu_positive" else Fraction(0)
    rho = (tree.n + nu - 2 * delta) / tree.tau
    if not 0 < rho < tree.n:
        raise PreconditionError(f"rho={rho} must lie in (0, n)")
    return MdpParams(rho=rho)


@dataclass(frozen=True)
class MdpResult:
    c_estimate: float
    worst_box: tuple[tuple[Fraction, Fraction], ...]
    passed: bool
    rho: Fraction
    c_doubled: float
    boxes: int

    def to_json(self) -> dict:
        return {
            "c_estimate": self.c_estimate,
            "c_doubled": self.c_doubled,
            "rho": fmt_rational(self.rho),
            "worst_box": [[fmt_rational(lo), fmt_rational(hi)] for lo, hi in self.worst_box],
            "pass": self.passed,
            "boxes": self.boxes,
        }


def _clip_box(center, side: float):
    box = []
    for c in center:
        lo, hi = max(0.0, c - side / 2), min(1.0, c + side / 2)
        box.append((Fraction(lo), Fraction(hi)))
    return box


def _ratio(tree: LevelSetTree, box, rho: float) -> float:
    diam = max(float(hi - lo) for lo, hi in box)
    if diam <= 0:
        return float("nan")
    return float(mass_of_box(tree, box)) / diam**rho


def mdp_check(tree: LevelSetTree, delta=None, samples: int = 2000, seed: int = 0) -> MdpResult:
    """Largest observed mass(U)/|U|**rho over random and node-centred boxes.

    Random boxes have log-uniform side in [eps_deepest, 1] and uniform centre,
    clipped to the unit box.  Node-centred boxes have sides equal to the node's
    cube width, eps of its level and four times that.  ``passed`` requires the
    maximum to be finite and to move by less than 10% when the random sample
    is doubled.
    """
    if tree.depth < 2:
        raise PreconditionError("mass distribution check needs depth >= 2")
    params = mdp_params(tree, delta)
    rho = float(params.rho)
    n = tree.n
    tf = float(tree.tau)
    full = [(Fraction(0), Fraction(1))] * n
    best, worst = _ratio(tree, full, rho), full
    count = 1

    for k, lv in enumerate(tree.levels[1:], start=1):
        eps = lv.epsilon.value
        for nd in lv.nodes:
            centre = [x / nd.q for x in nd.p]
            for side in (2 * float(nd.q) ** -tf, eps, 4 * eps):
                box = _clip_box(centre, side)
                r = _ratio(tree, box, rho)
                count += 1
                if r > best:
                    best, worst = r, box

    rng = np.random.default_rng(seed)
    log_lo = math.log(tree.levels[-1].epsilon.value)

    def draw(m):
        nonlocal best, worst, count
        sides = np.exp(rng.uniform(log_lo, 0.0, size=m))
        centres = rng.uniform(0.0, 1.0, size=(m, n))
        for side, centre in zip(sides, centres):
            box = _clip_box(centre, float(side))
            r = _ratio(tree, box, rho)
            if math.isnan(r):
                continue
            count += 1
            if r > best:
                best, worst = r, box

    draw(samples)
    c1 = best
    draw(samples)
    c2 = best
    passed = math.isfinite(c1) and abs(c2 - c1) <= 0.1 * c1
    return MdpResult(c1, tuple(worst), passed, params.rho, c2, count)


# -- box counting ----------------------------------------------------------------


def _axis_cells(x: int, q: int, tau: Fraction, h: float, ell: int) -> tuple[int, int]:
    """First and last dyadic cell at level ell met by the open interval around x/q.

    Cell k meets (c - h, c + h) iff floor((c-h) 2^ell) <= k <= ceil((c+h) 2^ell) - 1.
    """
    F, rem = divmod(x << ell, q)
    scale = 1 << ell
    w = h * scale

    def near(v: float, sign: int):
        # exact sign of rem/q + sign * 2^ell * q^-tau - round(v), or None when v is clearly off-integer
        m = round(v)
        if abs(v - m) >= 1e-9:
            return None, m
        return sign_of(Fraction(rem, q) - m, [(sign * scale, q)], tau), m

    v = rem / q - w
    s, m = near(v, -1)
    lo = math.floor(v) if s is None else (m if s >= 0 else m - 1)
    v = rem / q + w
    s, m = near(v, +1)
    hi = math.ceil(v) - 1 if s is None else (m - 1 if s <= 0 else m)
    return F + lo, F + hi


def box_counts(tree: LevelSetTree, ells) -> list[int]:
    """Number of dyadic cells of side 2**-ell meeting the deepest level, per ell."""
    n = tree.n
    out = []
    if tree.depth == 0:
        return [1 << (n * ell) for ell in ells]
    tau = tree.tau
    tf = float(tau)
    nodes = tree.levels[-1].nodes
    hs = [float(nd.q) ** -tf for nd in nodes]
    for ell in ells:
        if n == 1:
            spans = sorted(_axis_cells(nd.p[0], nd.q, tau, h, ell) for nd, h in zip(nodes, hs))
            total, cur_lo, cur_hi = 0, None, None
            for lo, hi in spans:
                if cur_hi is None or lo > cur_hi:
                    if cur_hi is not None:
                        total += cur_hi - cur_lo + 1
                    cur_lo, cur_hi = lo, hi
                else:
                    cur_hi = max(cur_hi, hi)
            total += cur_hi - cur_lo + 1
            out.append(total)
        else:
            cells = set()
            for nd, h in zip(nodes, hs):
                ranges = [range(a, b + 1) for a, b in (_axis_cells(x, nd.q, tau, h, ell) for x in nd.p)]
                cells.update(product(*ranges))
            out.append(len(cells))
    return out


@dataclass(frozen=True)
class BoxDimension:
    slope: float
    levels: tuple[int, ...]
    counts: tuple[int, ...]

    def to_csv_rows(self) -> list[list]:
        return [[ell, c] for ell, c in zip(self.levels, self.counts)]


def default_grid_levels(tree: LevelSetTree) -> list[int]:
    """ell with 2**-ell between the deepest separation and 1/8."""
    eps = tree.levels[-1].epsilon.value
    top = math.floor(-math.log2(eps)) if eps < 1 else 0
    return list(range(3, top + 1))


def box_dimension(tree: LevelSetTree, grid_levels=None) -> BoxDimension:
    """Least-squares slope of log2 N(ell) against ell."""
    ells = default_grid_levels(tree) if grid_levels is None else sorted(set(int(x) for x in grid_levels))
    if len(ells) < 3:
        raise InsufficientScales(f"need at least 3 grid levels, got {len(ells)}")
    if ells[0] < 0:
        raise PreconditionError("grid levels must be >= 0")
    counts = box_counts(tree, ells)
    x = np.array(ells, dtype=np.float64)
    y = np.log2(np.array(counts, dtype=np.float64))
    slope = float(np.polyfit(x, y, 1)[0])
    return BoxDimension(slope, tuple(ells), tuple(counts))


# -- cover sums and the dimension formula ---------------------------------------


def _first_members(spec: IntegerSetSpec, start: int, count: int) -> np.ndarray:
    if spec.kind == "all":
        return np.arange(max(start, 1), max(start, 1) + count, dtype=np.float64)
    if spec.kind == "arithmetic":
        d = spec.param
        first = -(-max(start, 1) // d) * d
        return np.arange(first, first + d * count, d, dtype=np.float64)
    bound = max(2 * start, 64)
    while True:
        vals = [v for v in enumerate_up_to(spec, bound) if v >= start]
        if len(vals) >= count:
            return np.array(vals[:count], dtype=np.float64)
        if spec.is_finite and bound > max(spec.values, default=0):
            return np.array(vals, dtype=np.float64)
        bound *= 4


def upper_bound_cover_sum(spec: IntegerSetSpec | str, n: int, tau, s: float, N_start: int = 1,
                          terms: int = 1000) -> np.ndarray:
    """Partial sums of sum (q+1)**n / q**(s*tau) over the first ``terms`` members >= N_start.

    Summed in float64 with compensated (Kahan) accumulation.
    """
    if isinstance(spec, str):
        spec = parse_spec(spec)
    s = float(s)
    if s <= 0:
        raise PreconditionError("s must be positive")
    if terms < 0:
        raise PreconditionError("terms must be >= 0")
    if terms == 0:
        return np.zeros(0)
    q = _first_members(spec, N_start, terms)
    t = float(parse_rational(tau)) if not isinstance(tau, float) else tau
    vals = np.exp(n * np.log1p(q) - s * t * np.log(q))
    return kernels.kahan_cumsum(vals)


def theoretical_dimension(n: int, tau, nu, *, strict: bool = False) -> Fraction:
    """(n + nu) / tau.

    Outside tau > 2 + 1/n the value is still returned with a
    HypothesisWarning, or HypothesisViolation is raised when ``strict``.
    """
    tau = as_tau(parse_rational(tau))
    nu = parse_rational(nu)
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if not 0 <= nu <= 1:
        raise PreconditionError("nu must lie in [0, 1]")
    if tau <= 2 + Fraction(1, n):
        msg = f"tau={tau} <= 2 + 1/n; the formula is only an upper bound there"
        if strict:
            raise HypothesisViolation(msg)
        warnings.warn(msg, HypothesisWarning, stacklevel=2)
    return (n + nu) / tau
