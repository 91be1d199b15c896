"""Exact decisions on expressions built from rationals and powers q^(-tau).

Every geometric predicate in the package reduces to the sign of

    r + sum_k c_k * q_k ** (-tau)

with ``r`` and ``c_k`` rational, ``q_k`` positive integers and ``tau = a/b``
rational.  :func:`sign_of` decides that sign exactly.  A float evaluation is
tried first; when it is too close to call, the radicals are grouped by their
b-th-power-free kernel.  If every irrational group cancels, the expression is
rational and compared exactly.  Otherwise the value is provably nonzero
(real b-th roots of distinct b-th-power-free integers are linearly independent
over Q), so dyadic enclosures are refined until they separate it from zero.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from .errors import InvariantViolation, PreconditionError

_FLOAT_MARGIN = 1e-10
_START_BITS = 64
_MAX_BITS = 1 << 16


def iroot(n: int, k: int) -> int:
    """Largest integer m with m**k <= n."""
    if n < 0:
        raise ValueError("iroot of negative number")
    if n < 2 or k == 1:
        return n
    if k == 2:
        return math.isqrt(n)
    x = 1 << -(-n.bit_length() // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


@lru_cache(maxsize=1 << 16)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    out = []
    for p in (2, 3):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    f = 5
    while f * f <= n:
        for p in (f, f + 2):
            if n % p == 0:
                e = 0
                while n % p == 0:
                    n //= p
                    e += 1
                out.append((p, e))
        f += 6
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def as_tau(tau) -> Fraction:
    t = Fraction(tau)
    if t <= 0:
        raise PreconditionError(f"exponent must be positive, got {t}")
    return t


@lru_cache(maxsize=1 << 18)
def _radical_split(q: int, a: int, b: int) -> tuple[int, int]:
    """Write q**a = kernel * t**b with kernel b-th-power-free; return (kernel, t)."""
    kernel, t = 1, 1
    for p, e in factorize(q):
        ea = e * a
        t *= p ** (ea // b)
        kernel *= p ** (ea % b)
    return kernel, t


def _root_enclosure(kernel: int, b: int, bits: int) -> tuple[int, int]:
    """Integers lo, hi with lo/2^bits <= kernel**(-1/b) <= hi/2^bits."""
    m = iroot((1 << (bits * b)) // kernel, b)
    return m, m + 1


def sign_of(r, terms, tau) -> int:
    """Exact sign (-1, 0, 1) of ``r + sum(c * q**-tau for c, q in terms)``."""
    tau = as_tau(tau)
    r = Fraction(r)
    combined: dict[int, Fraction] = {}
    for c, q in terms:
        if q < 1:
            raise PreconditionError(f"denominator must be >= 1, got {q}")
        combined[q] = combined.get(q, Fraction(0)) + Fraction(c)

    tf = float(tau)
    val = float(r)
    scale = abs(val)
    for q, c in combined.items():
        if c:
            h = float(q) ** -tf
            val += float(c) * h
            scale += abs(float(c)) * h
    if abs(val) > _FLOAT_MARGIN * scale:
        return 1 if val > 0 else -1

    a, b = tau.numerator, tau.denominator
    groups: dict[int, Fraction] = {}
    for q, c in combined.items():
        if not c:
            continue
        kernel, t = _radical_split(q, a, b)
        groups[kernel] = groups.get(kernel, Fraction(0)) + c / t
    rational = r + groups.pop(1, Fraction(0))
    groups = {k: c for k, c in groups.items() if c}
    if not groups:
        return (rational > 0) - (rational < 0)

    bits = _START_BITS
    while bits <= _MAX_BITS:
        scale_ = 1 << bits
        lo = hi = rational * scale_
        for kernel, c in groups.items():
            rlo, rhi = _root_enclosure(kernel, b, bits)
            if c > 0:
                lo += c * rlo
                hi += c * rhi
            else:
                lo += c * rhi
                hi += c * rlo
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        bits *= 2
    raise InvariantViolation("radical sign not resolved; expression should be nonzero")


def power_enclosure(q: int, tau, bits: int = 53) -> tuple[Fraction, Fraction]:
    """Dyadic rationals lo <= q**(-tau) <= hi with hi - lo <= 2**(1-bits) / t."""
    tau = as_tau(tau)
    kernel, t = _radical_split(q, tau.numerator, tau.denominator)
    if kernel == 1:
        v = Fraction(1, t)
        return v, v
    lo, hi = _root_enclosure(kernel, tau.denominator, bits)
    return Fraction(lo, t << bits), Fraction(hi, t << bits)


def is_rational_power(q: int, tau) -> bool:
    tau = as_tau(tau)
    return _radical_split(q, tau.numerator, tau.denominator)[0] == 1


def rational_power_lt(base: Fraction, q: int, expo) -> bool:
    """Decide ``base < q ** (-expo)`` exactly for rational base >= 0 and expo = c/d > 0."""
    expo = Fraction(expo)
    base = Fraction(base)
    if base <= 0:
        return True
    c, d = expo.numerator, expo.denominator
    # base^d < q^(-c)  <=>  num^d * q^c < den^d
    return base.numerator**d * q**c < base.denominator**d


def parse_rational(text) -> Fraction:
    """Exact rational from ``"a/b"``, an integer or a decimal literal."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise PreconditionError("pass rationals as strings or Fractions, not floats")
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise PreconditionError(f"not a rational number: {text!r}") from exc


def fmt_rational(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def mixed_sign(r, terms) -> int:
    """Exact sign of ``r + sum(c * q**-e for c, q, e in terms)`` with per-term rational e > 0.

    Exponents are brought to a common denominator b so that every radical is
    a rational multiple of kernel**(-1/b); groups then cancel or not exactly
    as in :func:`sign_of`.
    """
    r = Fraction(r)
    terms = [(Fraction(c), int(q), as_tau(e)) for c, q, e in terms]
    val, scale = float(r), abs(float(r))
    for c, q, e in terms:
        h = float(q) ** -float(e)
        val += float(c) * h
        scale += abs(float(c)) * h
    if abs(val) > _FLOAT_MARGIN * scale:
        return 1 if val > 0 else -1
    b = math.lcm(*(e.denominator for _, _, e in terms)) if terms else 1
    groups: dict[int, Fraction] = {}
    for c, q, e in terms:
        kernel, t = _radical_split(q, e.numerator * (b // e.denominator), b)
        groups[kernel] = groups.get(kernel, Fraction(0)) + c / t
    rational = r + groups.pop(1, Fraction(0))
    groups = {k: c for k, c in groups.items() if c}
    if not groups:
        return (rational > 0) - (rational < 0)
    bits = _START_BITS
    while bits <= _MAX_BITS:
        scale_ = 1 << bits
        lo = hi = rational * scale_
        for kernel, c in groups.items():
            rlo, rhi = _root_enclosure(kernel, b, bits)
            if c > 0:
                lo, hi = lo + c * rlo, hi + c * rhi
            else:
                lo, hi = lo + c * rhi, hi + c * rlo
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        bits *= 2
    raise InvariantViolation("radical sign not resolved; expression should be nonzero")
