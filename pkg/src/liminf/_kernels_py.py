"""Pure-Python versions of the hot loops.

Same signatures and results as the compiled ``_kernels`` module; used when
the extension is not built or ``LIMINF_PURE_PYTHON=1`` is set.
"""

import math

import numpy as np

# relative slack separating "certain" float decisions from ones needing exact arithmetic
REL_SLACK = 1e-9

NO_OVERLAP = 0
OVERLAP = 1
UNCERTAIN = 2


def classify_axis(ps, q, q1s, hq, h1s):
    """Per (p, q1): does some integer y give I(p/q) & I(y/q1) != empty?

    Returns a uint8 matrix with NO_OVERLAP, OVERLAP or UNCERTAIN entries.
    ``hq`` and ``h1s`` are float values of q**-tau and q1**-tau.
    """
    ps = np.asarray(ps, dtype=np.int64)
    q1s = np.asarray(q1s, dtype=np.int64)
    h1s = np.asarray(h1s, dtype=np.float64)
    out = np.zeros((len(ps), len(q1s)), dtype=np.uint8)
    q = int(q)
    for j in range(len(q1s)):
        q1 = int(q1s[j])
        rhs = hq + float(h1s[j])
        qq1 = float(q) * q1
        w = q1 * rhs * (1.0 + REL_SLACK) + REL_SLACK
        for i in range(len(ps)):
            p = int(ps[i])
            x = p * q1 / q
            state = NO_OVERLAP
            for y in range(math.floor(x - w), math.ceil(x + w) + 1):
                lhs = abs(p * q1 - y * q) / qq1
                if lhs < rhs * (1.0 - REL_SLACK):
                    state = OVERLAP
                    break
                if lhs <= rhs * (1.0 + REL_SLACK):
                    state = UNCERTAIN
            out[i, j] = state
    return out


def shape_scan(member, caps, horizon):
    """Dyadic-cap shaping loop; mutates ``member`` (uint8, indices 0..2*horizon).

    Returns (removed, witnesses, witness_counts, fallback_steps).
    """
    removed = []
    witnesses = []
    counts = []
    fallback = 0
    d = int(member[2]) if len(member) > 2 else 0
    prev_top = 0
    for n in range(1, horizon + 1):
        if n > 1:
            d += int(member[2 * n - 1]) + int(member[2 * n]) - int(member[n])
        cap = int(caps[n])
        if d > cap:
            excess = d - cap
            lo = max(n, prev_top)
            x = 2 * n
            while excess > 0 and x > lo:
                if member[x]:
                    member[x] = 0
                    removed.append(x)
                    excess -= 1
                    d -= 1
                x -= 1
            if excess > 0:
                fallback += 1
                while excess > 0 and x > n:
                    if member[x]:
                        member[x] = 0
                        removed.append(x)
                        excess -= 1
                        d -= 1
                    x -= 1
            witnesses.append(n)
            counts.append(d)
            prev_top = 2 * n
    return removed, witnesses, counts, fallback


def kahan_cumsum(terms):
    """Compensated running sums of a float64 array."""
    terms = np.asarray(terms, dtype=np.float64)
    out = np.empty(len(terms), dtype=np.float64)
    s = 0.0
    c = 0.0
    for i in range(len(terms)):
        y = float(terms[i]) - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i] = s
    return out
