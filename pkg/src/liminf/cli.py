"""Command-line entry point: ``liminf <command> [options]``.

Exit codes: 0 success, 2 bad input or unmet precondition, 3 internal
invariant violation.  Reports go to ``--output`` or standard output as CSV
(header always present, CRLF line ends) or JSON (one object with
``schema_version``).  Options may also come from a ``--config`` file of
``key=value`` lines; command-line flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from fractions import Fraction

from . import __version__
from .cantor import box_dimension, build_tree, mdp_check, theoretical_dimension, upper_bound_cover_sum
from .errors import HypothesisWarning, InvariantViolation, LiminfError, PreconditionError, StarvedParent
from .exact import fmt_rational, parse_rational
from .integer_sets import ShapeParams, estimate_nu, parse_spec, shape_subset
from .new_generation import build_e_set, count_new_generation
from .padic import (
    ANuParams,
    enumerate_A_nu,
    padic_norm,
    valuation,
    wstar_membership_scan,
    zp_counterexample_search,
)
from .parallel import set_threads
from .rational_geometry import Hypercube

SCHEMA_VERSION = 1


class ConfigError(PreconditionError):
    pass


# -- output ---------------------------------------------------------------------


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **obj}, indent=2) + "\n"


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _num(x: float) -> str:
    return f"{x:.6f}"


# -- argument helpers -------------------------------------------------------------


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _rat_list(text: str) -> tuple[Fraction, ...]:
    return tuple(parse_rational(v) for v in str(text).split(",") if v.strip())


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise ConfigError(f"missing required option --{name.replace('_', '-')}")


def _tau(args) -> Fraction:
    return parse_rational(args.tau)


# -- commands ---------------------------------------------------------------------


def cmd_density(args) -> str:
    _need(args, "set", "max_n")
    prof = estimate_nu(parse_spec(args.set), int(args.max_n), args.mode)
    return prof.to_csv() if args.format == "csv" else _json(prof.to_json())


def cmd_shape(args) -> str:
    _need(args, "set", "nu", "horizon")
    alpha, const = args.alpha, Fraction(1)
    if alpha.startswith("const:"):
        alpha, const = "const", parse_rational(alpha.split(":", 1)[1])
    params = ShapeParams(nu=parse_rational(args.nu), horizon=int(args.horizon), alpha=alpha, alpha_const=const)
    shaped, rec = shape_subset(parse_spec(args.set), params)
    caps = params.cap_values(params.horizon)
    if args.format == "csv":
        rows = [[n, c, _num(caps[n])] for n, c in zip(rec.witnesses, rec.witness_counts)]
        return _csv(["witness_n", "dyadic_count", "cap"], rows)
    return _json({
        "spec": shaped.to_string(),
        "removed": len(rec.removed),
        "witnesses": list(rec.witnesses),
        "witness_counts": list(rec.witness_counts),
        "infeasible": rec.infeasible,
        "fallback_steps": rec.fallback_steps,
        "monotone_from": rec.monotone_from,
    })


def _parent(args) -> Hypercube:
    _need(args, "p0", "q0", "tau")
    return Hypercube.make(_int_list(args.p0), int(args.q0), _tau(args))


def cmd_newgen(args) -> str:
    parent = _parent(args)
    if args.q_range:
        lo, hi = (int(v) for v in args.q_range.split(":"))
        qs = range(lo, hi + 1)
    else:
        _need(args, "q")
        qs = [int(args.q)]
    reports = [count_new_generation(parent, q) for q in qs]
    if args.format == "csv":
        return _csv(["q", "candidates", "new_gen", "bound", "satisfied"], [r.csv_row() for r in reports])
    return _json({"reports": [r.to_json() for r in reports]})


def cmd_eset(args) -> str:
    parent = _parent(args)
    _need(args, "set", "k", "nu")
    es = build_e_set(parent, parse_spec(args.set), int(args.k), parse_rational(args.nu))
    if args.format == "csv":
        rows = [[";".join(map(str, p)), q] for p, q in es.members]
        return _csv(["p", "q"], rows)
    return _json(es.to_json())


def _tree(args):
    _need(args, "set", "n", "tau", "depth")
    return build_tree(
        parse_spec(args.set), int(args.n), _tau(args),
        delta=None if args.delta is None else parse_rational(args.delta),
        depth=int(args.depth),
        gamma=None if args.gamma is None else parse_rational(args.gamma),
        nu_hat=None if args.nu_hat is None else float(parse_rational(args.nu_hat)),
    )


def cmd_cantor(args) -> str:
    tree = _tree(args)
    if args.format == "csv":
        rows = [[k, lv.q_k, len(lv.nodes), lv.m_min, repr(lv.epsilon_k), lv.retries]
                for k, lv in enumerate(tree.levels)]
        return _csv(["level", "q_k", "nodes", "m_k_min", "epsilon_k", "retries"], rows)
    out = tree.to_json()
    out.pop("schema_version")
    return _json(out)


def cmd_mdp(args) -> str:
    tree = _tree(args)
    res = mdp_check(tree, samples=int(args.samples), seed=int(args.seed))
    if args.format == "csv":
        return _csv(["rho", "c_estimate", "c_doubled", "boxes", "pass"],
                    [[fmt_rational(res.rho), repr(res.c_estimate), repr(res.c_doubled), res.boxes,
                      str(res.passed).lower()]])
    return _json(res.to_json())


def cmd_boxdim(args) -> str:
    tree = _tree(args)
    levels = None if args.grid_levels is None else _int_list(args.grid_levels)
    bd = box_dimension(tree, levels)
    if args.format == "csv":
        return _csv(["level", "count"], bd.to_csv_rows())
    return _json({"slope": bd.slope, "levels": list(bd.levels), "counts": list(bd.counts)})


def cmd_coversum(args) -> str:
    _need(args, "set", "n", "tau", "s", "terms")
    sums = upper_bound_cover_sum(parse_spec(args.set), int(args.n), _tau(args), float(parse_rational(args.s)),
                                 int(args.n_start), int(args.terms))
    stride = int(args.stride) if args.stride else max(1, len(sums) // 1000)
    idx = list(range(stride - 1, len(sums), stride))
    if sums.size and (not idx or idx[-1] != len(sums) - 1):
        idx.append(len(sums) - 1)
    if args.format == "csv":
        return _csv(["terms", "partial_sum"], [[i + 1, repr(float(sums[i]))] for i in idx])
    return _json({"terms": [i + 1 for i in idx], "partial_sums": [float(sums[i]) for i in idx]})


def cmd_dim(args) -> str:
    _need(args, "n", "tau", "nu")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", HypothesisWarning)
        d = theoretical_dimension(int(args.n), _tau(args), parse_rational(args.nu))
    ok = not any(issubclass(w.category, HypothesisWarning) for w in caught)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.format == "csv":
        return _csv(["n", "tau", "nu", "dimension", "decimal", "hypothesis_ok"],
                    [[args.n, fmt_rational(_tau(args)), fmt_rational(parse_rational(args.nu)),
                      fmt_rational(d), f"{float(d):.4f}", str(ok).lower()]])
    return _json({"dimension": fmt_rational(d), "decimal": float(d), "hypothesis_ok": ok})


def cmd_padic_norm(args) -> str:
    _need(args, "x", "p")
    x, p = parse_rational(args.x), int(args.p)
    v = valuation(x, p)
    norm = padic_norm(x, p)
    if args.format == "csv":
        return _csv(["x", "p", "valuation", "norm"],
                    [[fmt_rational(x), p, "inf" if v is None else v, fmt_rational(norm)]])
    return _json({"x": fmt_rational(x), "p": p, "valuation": v, "norm": fmt_rational(norm)})


def cmd_padic_scan(args) -> str:
    _need(args, "x", "p", "tau", "height_max")
    rep = wstar_membership_scan(_rat_list(args.x), _tau(args), int(args.p), int(args.height_max))
    if args.format == "csv":
        rows = [[";".join(map(str, c.r)), c.q, "true"] for c in rep.satisfying]
        rows += [[";".join(map(str, c.r)), c.q, "false"] for c in rep.violating]
        return _csv(["r", "q", "p_divides_q"], rows)
    return _json(rep.to_json())


def cmd_padic_zp(args) -> str:
    _need(args, "x", "p", "tau", "height_max")
    xs = _rat_list(args.x)
    found = zp_counterexample_search(xs, _tau(args), int(args.p), int(args.height_max))
    if args.format == "csv":
        return _csv(["x", "p", "tau", "height_max", "counterexamples"],
                    [[";".join(fmt_rational(v) for v in xs), args.p, fmt_rational(_tau(args)),
                      args.height_max, len(found)]])
    return _json({"x": [fmt_rational(v) for v in xs], "p": int(args.p), "tau": fmt_rational(_tau(args)),
                  "height_max": int(args.height_max), "counterexamples": len(found),
                  "solutions": [c.to_json() for c in found]})


def cmd_padic_anu(args) -> str:
    _need(args, "n", "p", "f", "i0", "nu")
    n, p = int(args.n), int(args.p)
    rows = []
    for nu in _int_list(args.nu):
        _, count = enumerate_A_nu(ANuParams(int(args.i0), int(args.f), nu), n, p, with_members=False)
        rows.append([nu, count, count / nu**n])
    if args.format == "csv":
        return _csv(["nu", "count", "count_over_nu_n"], [[a, b, _num(c)] for a, b, c in rows])
    return _json({"n": n, "p": p, "f": int(args.f), "i0": int(args.i0),
                  "rows": [{"nu": a, "count": b, "ratio": c} for a, b, c in rows]})


# -- parser -----------------------------------------------------------------------

_COMMANDS = {
    "density": ("estimate the exponent of convergence", cmd_density, ["set", "max_n", "mode"]),
    "shape": ("thin a set to a target exponent", cmd_shape, ["set", "nu", "horizon", "alpha"]),
    "newgen": ("count new-generation cubes in a parent", cmd_newgen, ["p0", "q0", "tau", "q", "q_range"]),
    "eset": ("build a separated family of new-generation cubes", cmd_eset, ["p0", "q0", "tau", "set", "k", "nu"]),
    "cantor": ("build the nested level sets", cmd_cantor, ["set", "n", "tau", "delta", "depth", "gamma", "nu_hat"]),
    "mdp": ("mass distribution check on a built tree", cmd_mdp, ["set", "n", "tau", "delta", "depth", "gamma", "nu_hat", "samples", "seed"]),
    "boxdim": ("box-counting slope of a built tree", cmd_boxdim, ["set", "n", "tau", "delta", "depth", "gamma", "nu_hat", "grid_levels"]),
    "coversum": ("partial sums of the cover series", cmd_coversum, ["set", "n", "tau", "s", "n_start", "terms", "stride"]),
    "dim": ("dimension formula (n + nu)/tau", cmd_dim, ["n", "tau", "nu"]),
    "padic-norm": ("p-adic valuation and norm", cmd_padic_norm, ["x", "p"]),
    "padic-scan": ("all approximation solutions up to a height", cmd_padic_scan, ["x", "p", "tau", "height_max"]),
    "padic-zp": ("counterexample search for x in Z_p^n", cmd_padic_zp, ["x", "p", "tau", "height_max"]),
    "padic-anu": ("sizes of A_nu(i0, f)", cmd_padic_anu, ["n", "p", "f", "i0", "nu"]),
}

_OPTIONS = {
    "set": dict(help="integer set, e.g. all, arith:3, primes, squares, powers:2"),
    "max_n": dict(help="largest n for the counting function"),
    "mode": dict(default="plain", choices=["plain", "dyadic"]),
    "nu": dict(help="rational exponent (comma list for padic-anu)"),
    "horizon": dict(help="shaping horizon N"),
    "alpha": dict(default="invlog", help="invlog, invloglog or const:<c>"),
    "p0": dict(help="parent numerator vector, comma separated"),
    "q0": dict(help="parent denominator"),
    "tau": dict(help="rational exponent a/b"),
    "q": dict(help="denominator"),
    "q_range": dict(help="inclusive range lo:hi of denominators"),
    "k": dict(help="range parameter: denominators in (k, 2k]"),
    "n": dict(help="dimension"),
    "delta": dict(help="thinning slack (rational)"),
    "depth": dict(help="number of levels"),
    "gamma": dict(help="growth exponent for q_k (default tau)"),
    "nu_hat": dict(help="exponent of convergence to use instead of estimating it"),
    "samples": dict(default="2000"),
    "seed": dict(default="0"),
    "grid_levels": dict(help="comma list of dyadic levels"),
    "s": dict(help="exponent of the cover sum"),
    "n_start": dict(default="1"),
    "terms": dict(help="number of terms"),
    "stride": dict(help="emit every stride-th partial sum"),
    "x": dict(help="rational or comma-separated rational vector"),
    "p": dict(help="prime"),
    "height_max": dict(help="largest height max(q, |r|)"),
    "f": dict(help="exact p-adic valuation of q"),
    "i0": dict(help="unit coordinate index (1-based)"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liminf", description="Diophantine liminf-set toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (help_, func, opts) in _COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="key=value file; flags override it")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        sp.add_argument("--output", help="write the report here instead of stdout")
        sp.add_argument("--threads", type=int, help="worker processes (0 = one per CPU)")
        for opt in opts:
            kw = dict(_OPTIONS[opt])
            sp.add_argument("--" + opt.replace("_", "-"), dest=opt, **kw)
        sp.set_defaults(func=func, _keys=set(opts) | {"format", "output", "threads"})
    return parser


def _read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _apply_config(parser, argv, args):
    cfg = _read_config(args.config)
    unknown = sorted(set(cfg) - args._keys)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    if "threads" in cfg:
        cfg["threads"] = int(cfg["threads"])
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
        set_threads(args.threads)
        text = args.func(args)
        _emit(args, text)
    except (InvariantViolation, StarvedParent, AssertionError) as exc:
        print(f"liminf: invariant violation: {exc}", file=sys.stderr)
        return 3
    except (LiminfError, ValueError, ZeroDivisionError) as exc:
        print(f"liminf {args.command}: error: {exc}", file=sys.stderr)
        return 2
    finally:
        set_threads(None)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
