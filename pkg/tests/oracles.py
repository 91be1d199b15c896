"""Brute-force reference implementations, written independently of the library.

Near-ties are settled with 60-digit mpmath arithmetic instead of the
library's radical-kernel sign test.  A difference below 1e-45 is treated as an
exact tie, which for rational tau only happens when both sides are rational
and equal.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np

mpmath.mp.dps = 60
_TIE = mpmath.mpf("1e-45")


def _mp_pow(q: int, tau: Fraction):
    return mpmath.power(mpmath.mpf(q), -mpmath.mpf(tau.numerator) / tau.denominator)


def mp_sign(num: int, den: int, terms, tau: Fraction) -> int:
    """Sign of num/den + sum c * q**-tau, with ties reported as 0."""
    v = mpmath.mpf(num) / den
    for c, q in terms:
        v += mpmath.mpf(c) * _mp_pow(q, tau)
    if abs(v) < _TIE:
        return 0
    return 1 if v > 0 else -1


def is_prime_td(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def totient_td(n: int) -> int:
    return sum(1 for k in range(1, n + 1) if math.gcd(k, n) == 1)


def newgen_count_1d(p0: int, q0: int, q: int, tau: Fraction) -> int:
    """Count p with I(p/q) new generation in I(p0/q0): every q1 in (q0, q), every nearby p1."""
    tf = float(tau)
    h0, h = float(q0) ** -tf, float(q) ** -tf
    ps = []
    c0 = Fraction(p0, q0)
    for p in range(max(1, math.floor((c0 - 2 * Fraction(h0)) * q)), min(q, math.ceil((c0 + 2 * Fraction(h0)) * q) + 1)):
        if math.gcd(p, q) != 1:
            continue
        num = abs(p * q0 - p0 * q)
        lhs, rhs = num / (q * q0), h0 - h
        if abs(lhs - rhs) > 1e-12 * h0:
            inside = lhs < rhs
        else:
            inside = mp_sign(num, q * q0, [(1, q), (-1, q0)], tau) <= 0
        if inside:
            ps.append(p)
    if not ps:
        return 0
    P = np.array(ps, dtype=np.int64)[:, None]
    Q1 = np.arange(q0 + 1, q, dtype=np.int64)[None, :]
    if Q1.size == 0:
        return len(ps)
    blocked = np.zeros(len(ps), dtype=bool)
    H1 = Q1.astype(np.float64) ** -tf
    rhs = h + H1
    base = (P * Q1) // q  # floor(p q1 / q)
    for shift in (-1, 0, 1, 2):
        P1 = base + shift
        num = np.abs(P * Q1 - P1 * q)
        lhs = num / (float(q) * Q1)
        sure = lhs < rhs * (1 - 1e-12)
        close = np.abs(lhs - rhs) <= rhs * 1e-12
        blocked |= sure.any(axis=1)
        for i, j in zip(*np.nonzero(close & ~sure)):
            q1 = int(Q1[0, j])
            if mp_sign(int(num[i, j]), q * q1, [(-1, q), (-1, q1)], tau) < 0:
                blocked[i] = True
    return int((~blocked).sum())


def separated_pair(p1, q1, p2, q2, expo: Fraction) -> bool:
    """|p1/q1 - p2/q2|_sup >= q1**-expo via mpmath, ties counted as separated."""
    d = max(abs(Fraction(a, q1) - Fraction(b, q2)) for a, b in zip(p1, p2))
    v = mpmath.mpf(d.numerator) / d.denominator - mpmath.power(q1, -mpmath.mpf(expo.numerator) / expo.denominator)
    return v > -_TIE


def cubes_disjoint(p1, q1, p2, q2, tau: Fraction) -> bool:
    for a, b in zip(p1, p2):
        num = abs(a * q2 - b * q1)
        if mp_sign(num, q1 * q2, [(-1, q1), (-1, q2)], tau) >= 0:
            return True
    return False


def padic_val(x: Fraction, p: int):
    if x == 0:
        return None
    v, a, b = 0, x.numerator, x.denominator
    while a % p == 0:
        a //= p
        v += 1
    while b % p == 0:
        b //= p
        v -= 1
    return v


def anu_bruteforce(n: int, p: int, f: int, i0: int, nu: int) -> int:
    """Double loop over q and r in [-nu, nu]^n."""
    from itertools import product

    count = 0
    for q in range(1, nu + 1):
        if padic_val(Fraction(q), p) != f:
            continue
        for r in product(range(-nu, nu + 1), repeat=n):
            if r[i0 - 1] % p == 0:
                continue
            if max(q, max(abs(v) for v in r)) == nu:
                count += 1
    return count


def eset_pair_failures(members, expo: Fraction, tau: Fraction) -> list:
    """All pairs violating separation (threshold from the smaller q) or disjointness.

    Pairs clearly fine in float64 (margin 1e-9 relative) are skipped; the rest
    go through mpmath.
    """
    P = np.array([p for p, _ in members], dtype=np.float64)
    Q = np.array([q for _, q in members], dtype=np.float64)
    X = P / Q[:, None]
    H = Q ** -float(tau)
    bad = []
    for i in range(len(members)):
        d = np.abs(X[i + 1 :] - X[i]).max(axis=1)
        qmin = np.minimum(Q[i + 1 :], Q[i])
        thr = np.where(Q[i + 1 :] == Q[i], 0.0, qmin ** -float(expo))
        need = np.maximum(thr, H[i] + H[i + 1 :])
        for j in np.flatnonzero(d <= need * (1 + 1e-9)):
            (p1, q1), (p2, q2) = members[i], members[i + 1 + j]
            if q1 > q2:
                (p1, q1), (p2, q2) = (p2, q2), (p1, q1)
            if q1 < q2 and not separated_pair(p1, q1, p2, q2, expo):
                bad.append(((p1, q1), (p2, q2), "separation"))
            if not cubes_disjoint(p1, q1, p2, q2, tau):
                bad.append(((p1, q1), (p2, q2), "overlap"))
    return bad
