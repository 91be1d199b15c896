"""Infinite sets of denominators, their counting functions and convergence exponents.

Sets are described by an :class:`IntegerSetSpec` and written in a small
mini-language (see :func:`parse_spec`)::

    all | arith:d | primes | powers:b | squares | kpow:k | file:<path>
    shaped(<spec>;nu=<r>;alpha=invlog;N=<n>)
"""

from __future__ import annotations

import bisect
import csv
import io
import math
import re
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InfeasibleShaping, PreconditionError
from .exact import iroot, parse_rational

KINDS = ("all", "arithmetic", "primes", "powers", "kth_powers", "explicit", "shaped")
ALPHAS = ("invlog", "invloglog", "const")
FIT_STEPS = 8


@dataclass(frozen=True, eq=False)
class IntegerSetSpec:
    kind: str
    param: int = 0
    values: tuple[int, ...] = ()
    base: "IntegerSetSpec | None" = None
    shape: "ShapeParams | None" = None
    record: "ShapingRecord | None" = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown set kind {self.kind!r}")
        if self.kind == "arithmetic" and self.param < 1:
            raise PreconditionError("arithmetic progression needs d >= 1")
        if self.kind == "powers" and self.param < 2:
            raise PreconditionError("powers need base b >= 2")
        if self.kind == "kth_powers" and self.param < 2:
            raise PreconditionError("kth powers need k >= 2")
        if self.kind in ("explicit", "shaped"):
            vals = self.values
            if any(v < 1 for v in vals):
                raise PreconditionError("set members must be positive integers")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise PreconditionError("explicit values must be sorted and duplicate-free")

    # -- constructors -------------------------------------------------------

    @classmethod
    def all(cls):
        return cls("all")

    @classmethod
    def arithmetic(cls, d: int):
        return cls("arithmetic", param=d)

    @classmethod
    def primes(cls):
        return cls("primes")

    @classmethod
    def powers(cls, b: int):
        return cls("powers", param=b)

    @classmethod
    def kth_powers(cls, k: int):
        return cls("kth_powers", param=k)

    @classmethod
    def explicit(cls, values, label: str = ""):
        return cls("explicit", values=tuple(int(v) for v in values), label=label)

    # -- queries ------------------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.kind in ("explicit", "shaped")

    def __contains__(self, x: int) -> bool:
        if x < 1:
            return False
        k = self.kind
        if k == "all":
            return True
        if k == "arithmetic":
            return x % self.param == 0
        if k == "primes":
            return is_prime(x)
        if k == "powers":
            b = self.param
            while x % b == 0:
                x //= b
                if x == 1:
                    return True
            return False
        if k == "kth_powers":
            return iroot(x, self.param) ** self.param == x
        i = bisect.bisect_left(self.values, x)
        return i < len(self.values) and self.values[i] == x

    def to_string(self) -> str:
        k = self.kind
        if k == "all" or k == "primes":
            return k
        if k == "arithmetic":
            return f"arith:{self.param}"
        if k == "powers":
            return f"powers:{self.param}"
        if k == "kth_powers":
            return "squares" if self.param == 2 else f"kpow:{self.param}"
        if k == "explicit":
            return self.label or f"explicit[{len(self.values)}]"
        s = self.shape
        return f"shaped({self.base.to_string()};nu={s.nu};alpha={s.alpha_spec};N={s.horizon})"

    def __repr__(self):
        return f"IntegerSetSpec({self.to_string()})"


def is_prime(x: int) -> bool:
    if x < 2:
        return False
    if x % 2 == 0:
        return x == 2
    f = 3
    while f * f <= x:
        if x % f == 0:
            return False
        f += 2
    return True


def prime_mask(bound: int) -> np.ndarray:
    sieve = np.ones(bound + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(bound) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return sieve


def member_mask(spec: IntegerSetSpec, bound: int) -> np.ndarray:
    """Boolean array m with m[x] true iff x is in the set, for 0 <= x <= bound."""
    m = np.zeros(bound + 1, dtype=bool)
    k = spec.kind
    if k == "all":
        m[1:] = True
    elif k == "arithmetic":
        m[spec.param :: spec.param] = True
    elif k == "primes":
        m = prime_mask(bound)
    elif k == "powers":
        x = spec.param
        while x <= bound:
            m[x] = True
            x *= spec.param
    elif k == "kth_powers":
        r = np.arange(1, iroot(bound, spec.param) + 1, dtype=np.int64)
        m[r**spec.param] = True
    else:
        vals = np.asarray(spec.values, dtype=np.int64)
        m[vals[vals <= bound]] = True
    return m


def enumerate_up_to(spec: IntegerSetSpec, bound: int) -> list[int]:
    if bound < 1:
        raise PreconditionError(f"bound must be >= 1, got {bound}")
    k = spec.kind
    if k == "all":
        return list(range(1, bound + 1))
    if k == "arithmetic":
        return list(range(spec.param, bound + 1, spec.param))
    if k == "powers":
        out, x = [], spec.param
        while x <= bound:
            out.append(x)
            x *= spec.param
        return out
    if k == "kth_powers":
        return [r**spec.param for r in range(1, iroot(bound, spec.param) + 1)]
    if k in ("explicit", "shaped"):
        return list(spec.values[: bisect.bisect_right(spec.values, bound)])
    return np.flatnonzero(member_mask(spec, bound)).tolist()


def members_between(spec: IntegerSetSpec, lo: int, hi: int) -> list[int]:
    """Members x with lo < x <= hi, ascending."""
    if hi <= lo:
        return []
    k = spec.kind
    if k == "all":
        return list(range(lo + 1, hi + 1))
    if k == "arithmetic":
        d = spec.param
        return list(range((lo // d + 1) * d, hi + 1, d))
    if k in ("explicit", "shaped"):
        v = spec.values
        return list(v[bisect.bisect_right(v, lo) : bisect.bisect_right(v, hi)])
    if k == "primes":
        return [x for x in range(lo + 1, hi + 1) if is_prime(x)]
    return [x for x in enumerate_up_to(spec, hi) if x > lo]


def delta(spec: IntegerSetSpec, n: int) -> int:
    """Counting function #(set & [1, n])."""
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    k = spec.kind
    if k == "all":
        return n
    if k == "arithmetic":
        return n // spec.param
    if k == "kth_powers":
        return iroot(n, spec.param)
    if k == "powers":
        c, x = 0, spec.param
        while x <= n:
            c += 1
            x *= spec.param
        return c
    if k in ("explicit", "shaped"):
        return bisect.bisect_right(spec.values, n)
    return int(member_mask(spec, n).sum())


def dyadic_diff(spec: IntegerSetSpec, n: int) -> int:
    """delta(2n) - delta(n): members in (n, 2n]."""
    if n < 1:
        raise PreconditionError(f"n must be >= 1, got {n}")
    return delta(spec, 2 * n) - delta(spec, n)


# -- exponent of convergence ---------------------------------------------------


@dataclass(frozen=True)
class DensityProfile:
    """Dyadic samples of the counting function with exponent estimates.

    ``running_plain``/``running_dyadic`` hold, per sample, the running maximum
    of the raw ratios log(delta_n)/log(n) and log(max(1, delta_2n - delta_n))/log(n).
    The ``nu_estimate_*`` values come from a least-squares fit of
    ``log y = c + nu*log(n) + beta*log(log(n))`` on a fine grid over
    [sqrt(max_n), max_n], which removes constant and logarithmic factors that bias the raw
    ratios at desk scale.
    """

    spec: str
    mode: str
    samples: tuple[tuple[int, int, int], ...]
    running_plain: tuple[float, ...]
    running_dyadic: tuple[float, ...]
    nu_estimate_plain: float
    nu_estimate_dyadic: float

    @property
    def nu_estimate(self) -> float:
        return self.nu_estimate_plain if self.mode == "plain" else self.nu_estimate_dyadic

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["n", "delta", "dyadic_diff", "running_nu_plain", "running_nu_dyadic"])
        for (n, d, dd), rp, rd in zip(self.samples, self.running_plain, self.running_dyadic):
            w.writerow([n, d, dd, f"{rp:.6f}", f"{rd:.6f}"])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "spec": self.spec,
            "mode": self.mode,
            "nu_estimate_plain": round(self.nu_estimate_plain, 6),
            "nu_estimate_dyadic": round(self.nu_estimate_dyadic, 6),
            "samples": [
                {"n": n, "delta": d, "dyadic_diff": dd, "running_nu_plain": round(rp, 6),
                 "running_nu_dyadic": round(rd, 6)}
                for (n, d, dd), rp, rd in zip(self.samples, self.running_plain, self.running_dyadic)
            ],
        }


def _fit_exponent(ns: np.ndarray, ys: np.ndarray) -> float:
    ln = np.log(ns.astype(np.float64))
    ly = np.log(np.maximum(ys, 1).astype(np.float64))
    if len(ns) >= 4:
        X = np.column_stack([np.ones_like(ln), ln, np.log(ln)])
    elif len(ns) >= 2:
        X = np.column_stack([np.ones_like(ln), ln])
    else:
        return float(ly[-1] / ln[-1])
    coef = np.linalg.lstsq(X, ly, rcond=None)[0]
    return float(coef[1])


def _counts_at(spec: IntegerSetSpec, points: list[int]) -> list[int]:
    if spec.kind == "primes":
        cum = np.cumsum(member_mask(spec, max(points)))
        return [int(cum[x]) for x in points]
    return [delta(spec, x) for x in points]


def estimate_nu(spec: IntegerSetSpec, max_n: int, mode: str = "plain") -> DensityProfile:
    if max_n < 16:
        raise PreconditionError(f"max_n must be >= 16, got {max_n}")
    if mode not in ("plain", "dyadic"):
        raise PreconditionError(f"mode must be plain or dyadic, got {mode!r}")
    J = max_n.bit_length() - 1
    ns = [1 << j for j in range(1, J + 1)]
    counts = _counts_at(spec, ns + [2 * ns[-1]])
    d = np.array(counts[:-1], dtype=np.int64)
    d2 = np.array(counts[1:], dtype=np.int64)
    dd = d2 - d
    nsa = np.array(ns, dtype=np.int64)

    logn = np.log(nsa.astype(np.float64))
    raw_plain = np.log(np.maximum(d, 1)) / logn
    raw_dyadic = np.log(np.maximum(dd, 1)) / logn
    # the fit uses FIT_STEPS points per octave over [sqrt(max_n), max_n] to damp rounding noise
    lo = math.log2(max_n) / 2
    steps = int(math.ceil((J - lo) * FIT_STEPS))
    fit_ns = np.unique(np.floor(2.0 ** np.linspace(lo, J, steps + 1)).astype(np.int64))
    fit_counts = _counts_at(spec, [int(x) for x in fit_ns] + [2 * int(x) for x in fit_ns])
    fd = np.array(fit_counts[: len(fit_ns)], dtype=np.int64)
    fdd = np.array(fit_counts[len(fit_ns) :], dtype=np.int64) - fd
    est_plain = min(1.0, max(0.0, _fit_exponent(fit_ns, fd)))
    est_dyadic = min(1.0, max(0.0, _fit_exponent(fit_ns, fdd)))
    return DensityProfile(
        spec=spec.to_string(),
        mode=mode,
        samples=tuple((int(n), int(a), int(b)) for n, a, b in zip(nsa, d, dd)),
        running_plain=tuple(float(x) for x in np.maximum.accumulate(raw_plain)),
        running_dyadic=tuple(float(x) for x in np.maximum.accumulate(raw_dyadic)),
        nu_estimate_plain=est_plain,
        nu_estimate_dyadic=est_dyadic,
    )


# -- shaping ------------------------------------------------------------------


@dataclass(frozen=True)
class ShapeParams:
    nu: Fraction
    horizon: int
    alpha: str = "invlog"
    alpha_const: Fraction = Fraction(1)

    def __post_init__(self):
        nu = parse_rational(self.nu) if not isinstance(self.nu, float) else Fraction(self.nu)
        object.__setattr__(self, "nu", nu)
        if nu <= 0:
            raise PreconditionError(f"nu must be positive, got {nu}")
        if self.alpha not in ALPHAS:
            raise PreconditionError(f"alpha must be one of {ALPHAS}, got {self.alpha!r}")
        if self.horizon < 1:
            raise PreconditionError("horizon must be >= 1")
        if self.alpha_const <= 0:
            raise PreconditionError("constant alpha must be positive")

    @property
    def alpha_spec(self) -> str:
        return self.alpha if self.alpha != "const" else f"const:{self.alpha_const}"

    def alpha_values(self, upto: int) -> np.ndarray:
        """alpha_n for n = 0..upto (index 0 unused)."""
        n = np.arange(upto + 1, dtype=np.float64)
        if self.alpha == "invlog":
            return 1.0 / np.log(np.maximum(n, 2))
        if self.alpha == "invloglog":
            return 1.0 / np.log(np.log(np.maximum(n, 3)))
        return np.full(upto + 1, float(self.alpha_const))

    def cap_values(self, upto: int) -> np.ndarray:
        """n**nu * alpha_n for n = 0..upto."""
        n = np.arange(upto + 1, dtype=np.float64)
        return n ** float(self.nu) * self.alpha_values(upto)

    def monotone_from(self) -> int:
        """Smallest m with n**nu * alpha_n nondecreasing on [m, horizon]."""
        caps = self.cap_values(self.horizon)[2:]
        drops = np.flatnonzero(np.diff(caps) < 0)
        return 2 if len(drops) == 0 else int(drops[-1]) + 3


@dataclass(frozen=True)
class ShapingRecord:
    removed: tuple[int, ...]
    witnesses: tuple[int, ...]
    witness_counts: tuple[int, ...]
    infeasible: bool = False
    fallback_steps: int = 0
    monotone_from: int = 2


def shape_subset(spec: IntegerSetSpec, params: ShapeParams, *, check_estimate: bool = True):
    """Thin ``spec`` so that delta(2n) - delta(n) <= n**nu * alpha_n for n <= horizon.

    Scans n upward; at the first n whose dyadic count exceeds the floor of the
    cap, removes the excess from the top of (max(n, 2*n_prev), 2n], largest
    elements first, and records n as a witness.  The result is truncated to
    [1, 2*horizon].  Returns (shaped spec, record).
    """
    N = params.horizon
    mono = params.monotone_from()
    base_members = member_mask(spec, 2 * N)
    infeasible = False
    if check_estimate:
        est = estimate_nu(spec, max(16, N), "dyadic").nu_estimate_dyadic
        infeasible = float(params.nu) >= est
    if infeasible:
        warnings.warn(
            f"nu={params.nu} is not below the estimated exponent of {spec.to_string()}",
            InfeasibleShaping,
            stacklevel=2,
        )
        record = ShapingRecord((), (), (), infeasible=True, monotone_from=mono)
        kept = np.flatnonzero(base_members)
    else:
        caps = np.floor(params.cap_values(N)).astype(np.int64)
        member = base_members.astype(np.uint8)
        removed, wit, counts, fallback = kernels.shape_scan(member, caps, N)
        if not wit:
            warnings.warn(
                f"caps never bind for {spec.to_string()} up to {N}", InfeasibleShaping, stacklevel=2
            )
        record = ShapingRecord(
            removed=tuple(sorted(int(x) for x in removed)),
            witnesses=tuple(int(x) for x in wit),
            witness_counts=tuple(int(x) for x in counts),
            infeasible=not wit,
            fallback_steps=int(fallback),
            monotone_from=mono,
        )
        kept = np.flatnonzero(member)
    shaped = IntegerSetSpec(
        "shaped",
        values=tuple(int(x) for x in kept if x >= 1),
        base=spec,
        shape=params,
        record=record,
    )
    return shaped, record


def verify_caps(shaped: IntegerSetSpec, params: ShapeParams) -> list[int]:
    """Every n <= horizon whose dyadic count exceeds n**nu * alpha_n (empty if all hold)."""
    N = params.horizon
    cum = np.cumsum(member_mask(shaped, 2 * N))
    n = np.arange(1, N + 1)
    diffs = cum[2 * n] - cum[n]
    caps = params.cap_values(N)[1:]
    return (n[diffs > caps]).tolist()


# -- mini-language --------------------------------------------------------------

_SHAPED_RE = re.compile(r"^shaped\((?P<inner>.+)\)$")


def parse_spec(text: str) -> IntegerSetSpec:
    text = text.strip()
    m = _SHAPED_RE.match(text)
    if m:
        parts = _split_top(m.group("inner"))
        if not parts:
            raise PreconditionError(f"empty shaped spec: {text!r}")
        base = parse_spec(parts[0])
        opts = {}
        for part in parts[1:]:
            if "=" not in part:
                raise PreconditionError(f"expected key=value in shaped spec, got {part!r}")
            k, v = part.split("=", 1)
            opts[k.strip()] = v.strip()
        unknown = set(opts) - {"nu", "alpha", "N"}
        if unknown or "nu" not in opts or "N" not in opts:
            raise PreconditionError(
                "grammar: shaped(<spec>;nu=<r>;alpha=invlog|invloglog|const:<c>;N=<n>)"
            )
        alpha = opts.get("alpha", "invlog")
        const = Fraction(1)
        if alpha.startswith("const:"):
            const = parse_rational(alpha.split(":", 1)[1])
            alpha = "const"
        params = ShapeParams(parse_rational(opts["nu"]), int(opts["N"]), alpha, const)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InfeasibleShaping)
            shaped, _ = shape_subset(base, params)
        return shaped
    if text == "all":
        return IntegerSetSpec.all()
    if text == "primes":
        return IntegerSetSpec.primes()
    if text == "squares":
        return IntegerSetSpec.kth_powers(2)
    if ":" in text:
        key, arg = text.split(":", 1)
        if key == "file":
            path = Path(arg)
            try:
                vals = [int(line) for line in path.read_text().split() if line.strip()]
            except (OSError, ValueError) as exc:
                raise PreconditionError(f"cannot read integer list from {arg}: {exc}") from exc
            return IntegerSetSpec.explicit(sorted(set(vals)), label=text)
        try:
            val = int(arg)
        except ValueError:
            raise PreconditionError(f"expected an integer after {key}:, got {arg!r}") from None
        if key == "arith":
            return IntegerSetSpec.arithmetic(val)
        if key == "powers":
            return IntegerSetSpec.powers(val)
        if key == "kpow":
            return IntegerSetSpec.kth_powers(val)
    raise PreconditionError(
        f"unknown set spec {text!r}; grammar: all | arith:d | primes | powers:b | squares | "
        "kpow:k | file:<path> | shaped(<spec>;nu=<r>;alpha=invlog;N=<n>)"
    )


def _split_top(s: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == ";" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]
