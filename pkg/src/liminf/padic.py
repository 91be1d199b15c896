"""p-adic norms on rationals and the approximation inequality |q x - r|_p < max(q, |r|)**-tau.

Everything is exact: norms are powers of p (or 0) and the right-hand side is
compared through integer powers, with tau = a/b rational.

Searches over (r, q) use a necessary per-axis condition to stay small.  Since
max(q, |r|) >= max(q, |r_i|), a solution must satisfy
|q x_i - r_i|_p < max(q, |r_i|)**-tau on every axis, which forces r_i into one
residue class modulo p**e with p**e > q**tau.  Only that class is scanned, and
every survivor is re-checked against the full inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import NotPrime, PreconditionError
from .exact import as_tau, fmt_rational, parse_rational
from .integer_sets import is_prime


def _check_prime(p: int) -> None:
    if not isinstance(p, int) or not is_prime(p):
        raise NotPrime(f"{p!r} is not a prime")


def valuation(x, p: int) -> int | None:
    """v_p(x); None for x = 0 (infinite valuation)."""
    _check_prime(p)
    x = Fraction(x)
    if x == 0:
        return None
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def padic_norm(x, p: int) -> Fraction:
    """|x|_p = p**(-v_p(x)), and 0 for x = 0."""
    x = parse_rational(x) if not isinstance(x, Fraction) else x
    v = valuation(x, p)
    if v is None:
        return Fraction(0)
    return Fraction(1, p**v) if v >= 0 else Fraction(p ** (-v))


@dataclass(frozen=True)
class PAdicRational:
    value: Fraction
    p: int

    @property
    def valuation(self) -> int | None:
        return valuation(self.value, self.p)

    @property
    def norm(self) -> Fraction:
        return padic_norm(self.value, self.p)


@dataclass(frozen=True)
class ApproxVector:
    r: tuple[int, ...]
    q: int

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(int(v) for v in self.r))
        if self.q < 1:
            raise PreconditionError(f"q must be >= 1, got {self.q}")

    @property
    def height(self) -> int:
        return max(self.q, max((abs(v) for v in self.r), default=0))

    def scaled(self, m: int) -> "ApproxVector":
        return ApproxVector(tuple(m * v for v in self.r), m * self.q)

    def to_json(self) -> dict:
        return {"r": list(self.r), "q": self.q}


@dataclass(frozen=True)
class ANuParams:
    i0: int
    f: int
    nu_height: int

    def check(self, n: int) -> None:
        if not 1 <= self.i0 <= n:
            raise PreconditionError(f"i0 must lie in [1, {n}], got {self.i0}")
        if self.f < 0:
            raise PreconditionError("f must be >= 0")
        if self.nu_height < 1:
            raise PreconditionError("nu must be >= 1")


def _as_vector(x) -> tuple[Fraction, ...]:
    if isinstance(x, (int, Fraction, str)):
        x = [x]
    return tuple(parse_rational(v) for v in x)


def _norm_below(v: int | None, p: int, height: int, tau: Fraction) -> bool:
    """p**(-v) < height**(-tau), with v None meaning the norm is 0."""
    if v is None:
        return True
    a, b = tau.numerator, tau.denominator
    if v < 0:
        return False
    return height**a < p ** (v * b)


def residual_valuation(x, cand: ApproxVector, p: int) -> int | None:
    """min_i v_p(q x_i - r_i), i.e. -log_p of max_i |q x_i - r_i|_p (None if all vanish)."""
    xs = _as_vector(x)
    if len(xs) != len(cand.r):
        raise PreconditionError("x and r differ in length")
    vals = [valuation(cand.q * xi - ri, p) for xi, ri in zip(xs, cand.r)]
    finite = [v for v in vals if v is not None]
    return min(finite) if finite else None


def approx_test(x, cand: ApproxVector, tau, p: int) -> bool:
    """max_i |q x_i - r_i|_p < height**-tau, decided exactly."""
    _check_prime(p)
    tau = as_tau(parse_rational(tau))
    return _norm_below(residual_valuation(x, cand, p), p, cand.height, tau)


def is_exact_approximation(x, cand: ApproxVector, p: int) -> bool:
    """q x = r exactly, so the left side is 0 for every multiple."""
    return residual_valuation(x, cand, p) is None


def p_primitive_reduce(cand: ApproxVector, p: int | None = None) -> tuple[ApproxVector, int]:
    """Divide r and q by their common gcd; returns (reduced vector, multiplier)."""
    if p is not None:
        _check_prime(p)
    g = math.gcd(cand.q, *cand.r)
    return ApproxVector(tuple(v // g for v in cand.r), cand.q // g), g


def multiples_cutoff(cand: ApproxVector, x, tau, p: int) -> float:
    """Bound M with every qualifying multiple m < M.

    A multiple m qualifies iff |m|_p m**tau < |qx - r|_p**-1 H**-tau.  Since
    |m|_p >= 1/m this forces m**(tau-1) < that right side.  Infinite when
    the approximation is exact or tau <= 1.
    """
    tau = as_tau(parse_rational(tau))
    v = residual_valuation(x, cand, p)
    if v is None or tau <= 1:
        return math.inf
    log_rhs = v * math.log(p) - float(tau) * math.log(cand.height)
    return math.exp(log_rhs / (float(tau) - 1))


def multiples_satisfying(cand: ApproxVector, x, tau, p: int, m_max: int) -> list[int]:
    """All m in [1, m_max] with m * cand still approximating x."""
    _check_prime(p)
    tau = as_tau(parse_rational(tau))
    if not approx_test(x, cand, tau, p):
        raise PreconditionError("candidate does not approximate x")
    if m_max <= 0:
        return []
    v0 = residual_valuation(x, cand, p)
    H = cand.height
    out = []
    for m in range(1, m_max + 1):
        vm = None if v0 is None else v0 + valuation(m, p)
        if _norm_below(vm, p, m * H, tau):
            out.append(m)
    cutoff = multiples_cutoff(cand, x, tau, p)
    if out and out[-1] >= cutoff:
        raise AssertionError(f"multiple {out[-1]} beyond the analytic cutoff {cutoff}")
    return out


# -- exhaustive scans -----------------------------------------------------------------


def _axis_candidates(xi: Fraction, q: int, tau: Fraction, p: int, hmax: int) -> list[tuple[int, int | None]]:
    """(r, v_p(q xi - r)) for |r| <= hmax passing the per-axis necessary condition."""
    t = q * xi
    A, B = t.numerator, t.denominator
    if B % p == 0:
        return []
    a, b = tau.numerator, tau.denominator
    # smallest e with p**(e b) > q**a
    e, qa = 0, q**a
    while p ** (e * b) <= qa:
        e += 1
    mod = p**e
    r0 = (A * pow(B, -1, mod)) % mod
    start = r0 - ((r0 + hmax) // mod) * mod
    out = []
    for r in range(start, hmax + 1, mod):
        v = valuation(Fraction(A - r * B, B), p)
        if _norm_below(v, p, max(q, abs(r)), tau):
            out.append((r, v))
    return out


def _solutions(xs, tau, p, height_max, q_values):
    for q in q_values:
        axes = [_axis_candidates(xi, q, tau, p, height_max) for xi in xs]
        if any(not ax for ax in axes):
            continue
        yield q, axes


def _combine(q, axes, tau, p):
    for combo in product(*axes):
        r = tuple(c[0] for c in combo)
        vs = [c[1] for c in combo if c[1] is not None]
        v = min(vs) if vs else None
        cand = ApproxVector(r, q)
        if _norm_below(v, p, cand.height, tau):
            yield cand


def zp_counterexample_search(x, tau, p: int, height_max: int) -> list[ApproxVector]:
    """(r, q) with p | q, some r_i a p-adic unit, height <= height_max, and approx_test true.

    For x in Z_p^n this list is empty; a nonempty result is a counterexample.
    """
    _check_prime(p)
    tau = parse_rational(tau)
    if tau < 1:
        raise PreconditionError("tau must be >= 1")
    xs = _as_vector(x)
    for xi in xs:
        v = valuation(xi, p)
        if v is not None and v < 0:
            raise PreconditionError(f"|{xi}|_{p} > 1: x is not in Z_{p}^n")
    out = []
    for q, axes in _solutions(xs, tau, p, height_max, range(p, height_max + 1, p)):
        n = len(axes)
        # split on the first axis i0 whose r is a unit, so only qualifying vectors are built
        for i0 in range(n):
            units = [c for c in axes[i0] if c[0] % p != 0]
            if not units:
                continue
            parts = [[c for c in axes[j] if c[0] % p == 0] for j in range(i0)]
            parts += [units] + axes[i0 + 1 :]
            out.extend(_combine(q, parts, tau, p))
    return out


@dataclass(frozen=True)
class ScanReport:
    p: int
    tau: Fraction
    height_max: int
    satisfying: tuple[ApproxVector, ...]
    violating: tuple[ApproxVector, ...]

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "tau": fmt_rational(self.tau),
            "height_max": self.height_max,
            "satisfying": [c.to_json() for c in self.satisfying],
            "violating": [c.to_json() for c in self.violating],
        }


def wstar_membership_scan(x, tau, p: int, height_max: int) -> ScanReport:
    """Every solution of the approximation inequality up to height_max, split by p | q."""
    _check_prime(p)
    tau = as_tau(parse_rational(tau))
    xs = _as_vector(x)
    sat, vio = [], []
    if height_max >= 1:
        for q, axes in _solutions(xs, tau, p, height_max, range(1, height_max + 1)):
            for cand in _combine(q, axes, tau, p):
                (sat if q % p == 0 else vio).append(cand)
    key = lambda c: (c.q, c.r)  # noqa: E731
    return ScanReport(p, tau, height_max, tuple(sorted(sat, key=key)), tuple(sorted(vio, key=key)))


# -- A_nu ---------------------------------------------------------------------------


def count_A_nu_upto(m: int, n: int, p: int, f: int) -> int:
    """#{(r, q): v_p(q) = f, p does not divide r_i0, max(q, |r|) <= m}."""
    if m < 1:
        return 0
    pf = p**f
    qs = m // pf - m // (pf * p)
    units = 2 * (m - m // p)
    return qs * units * (2 * m + 1) ** (n - 1)


def enumerate_A_nu(params: ANuParams, n: int, p: int, *, with_members: bool = True):
    """(members, count) of A_nu(i0, f): height exactly nu, v_p(q) = f, r_i0 a p-adic unit.

    ``count`` comes from a closed form; ``members`` (ascending (q, r)) is
    built only when ``with_members`` is true, else it is None.
    """
    _check_prime(p)
    params.check(n)
    nu, f, i0 = params.nu_height, params.f, params.i0 - 1
    count = count_A_nu_upto(nu, n, p, f) - count_A_nu_upto(nu - 1, n, p, f)
    if not with_members:
        return None, count
    members = []
    rng = range(-nu, nu + 1)
    for q in range(1, nu + 1):
        if valuation(q, p) != f:
            continue
        for r in product(rng, repeat=n):
            if r[i0] % p == 0:
                continue
            if max(q, max(abs(v) for v in r)) == nu:
                members.append(ApproxVector(r, q))
    if len(members) != count:
        raise AssertionError(f"enumeration found {len(members)} members, closed form says {count}")
    return members, count
