import json
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from liminf.cantor import (
    Epsilon,
    Level,
    LevelSetTree,
    Node,
    box_dimension,
    build_tree,
    check_invariants,
    mass_of_box,
    mdp_check,
    theoretical_dimension,
    upper_bound_cover_sum,
)
from liminf.errors import (
    HypothesisViolation,
    HypothesisWarning,
    InsufficientScales,
    InvariantViolation,
    PreconditionError,
)
from liminf.integer_sets import IntegerSetSpec, parse_spec


def synthetic(levels_nodes, tau=Fraction(4), n=1):
    root = Level(1, Epsilon(Fraction(1), 1, Fraction(1)), (Node((), 1, -1, 1),), 1)
    levels = [root]
    for q, nodes in levels_nodes:
        levels.append(Level(q, Epsilon(Fraction(1, 2), q, Fraction(n)), tuple(nodes), 1))
    return LevelSetTree(n=n, tau=tau, branch="nu_zero", spec="all", delta=Fraction(0), nu_hat=0.0,
                        nu_used=Fraction(0), gamma=tau, levels=levels)


def test_depth_two_masses_exact(depth2_tree):
    for lv in depth2_tree.levels:
        assert sum(nd.mass for nd in lv.nodes) == 1
    summary = check_invariants(depth2_tree)
    assert len(summary["levels"]) == 3


def test_depth_zero_is_root():
    tree = build_tree("all", 1, "7/2", "1/4", depth=0, nu_hat=1.0)
    assert tree.depth == 0
    assert tree.levels[0].nodes[0].mass == 1
    assert mass_of_box(tree, [(0, 1)]) == 1


def test_nu_zero_branch_shares_denominator():
    tree = build_tree(IntegerSetSpec.powers(2), 1, 4, depth=2)
    assert tree.branch == "nu_zero"
    for lv in tree.levels[1:]:
        assert {nd.q for nd in lv.nodes} == {lv.q_k}
        assert lv.q_k in IntegerSetSpec.powers(2)


def test_nu_positive_children_in_window(depth2_tree):
    spec = parse_spec(depth2_tree.spec)
    lv = depth2_tree.levels[2]
    assert all(lv.q_k < nd.q <= 2 * lv.q_k and nd.q in spec for nd in lv.nodes)


def test_two_dimensional_tree():
    tree = build_tree("all", 2, 3, "1/4", depth=2, nu_hat=1.0)
    assert tree.n == 2
    assert sum(nd.mass for nd in tree.levels[2].nodes) == 1


def test_json_roundtrip(depth2_tree):
    obj = depth2_tree.to_json()
    again = LevelSetTree.from_json(json.loads(json.dumps(obj)))
    assert again.to_json() == obj
    check_invariants(again)


def test_corruption_detected(depth2_tree):
    obj = depth2_tree.to_json()
    obj["levels"][2]["nodes"][0]["mass"] = "1/2"
    with pytest.raises(InvariantViolation):
        check_invariants(LevelSetTree.from_json(obj))
    obj = depth2_tree.to_json()
    node = obj["levels"][2]["nodes"][0]
    node["p"] = [node["p"][0] + node["q"] // 3]
    with pytest.raises(InvariantViolation):
        check_invariants(LevelSetTree.from_json(obj))


def test_preconditions():
    with pytest.raises(HypothesisViolation):
        build_tree("all", 1, 3, depth=1, nu_hat=1.0)
    with pytest.raises(PreconditionError):
        build_tree("all", 1, "7/2", depth=5, nu_hat=1.0)
    with pytest.raises(PreconditionError):
        build_tree("all", 1, "7/2", delta=2, depth=1, nu_hat=1.0)


def test_mass_of_box_examples():
    level1 = [Node((k,), 5, 0, 4) for k in (1, 2, 3, 4)]
    level2 = [Node((5 * k * 10 + j - 1,), 250, k - 1, 12) for k in (1, 2, 3, 4) for j in (0, 1, 2)]
    tree = synthetic([(5, level1), (250, level2)])
    assert mass_of_box(tree, [(0, 1)]) == 1
    nd = level2[4]
    h = Fraction(1, 250**4)
    c = Fraction(nd.p[0], nd.q)
    assert mass_of_box(tree, [(c - h, c + h)]) == Fraction(1, 12)
    assert mass_of_box(tree, [(0, Fraction(1, 10))]) == 0


def test_mass_of_real_cube_box(depth2_tree):
    nd = depth2_tree.levels[2].nodes[3]
    c = Fraction(nd.p[0], nd.q)
    h = Fraction(1, nd.q**3)  # wider than the cube, well inside the separation
    assert mass_of_box(depth2_tree, [(c - h, c + h)]) == nd.mass
    with pytest.raises(PreconditionError):
        mass_of_box(depth2_tree, [(0, 2)])


def test_mdp_depth_two(depth2_tree):
    res = mdp_check(depth2_tree, samples=400, seed=1)
    assert math.isfinite(res.c_estimate)
    assert res.c_estimate >= 1
    assert res.passed
    assert res.rho == Fraction(1 + 1 - Fraction(1, 2), Fraction(7, 2))


def test_mdp_reproducible(depth2_tree):
    a = mdp_check(depth2_tree, samples=200, seed=7)
    b = mdp_check(depth2_tree, samples=200, seed=7)
    assert a == b


def test_box_dimension_full_box():
    tree = build_tree("all", 1, "7/2", depth=0, nu_hat=1.0)
    assert box_dimension(tree, [1, 2, 3, 4]).slope == pytest.approx(1.0)


def test_box_dimension_point_like_chain():
    chain = [(q, [Node((q // 2 + 1,), q, 0, 1)]) for q in (11, 1001)]
    tree = synthetic(chain)
    res = box_dimension(tree, range(3, 12))
    assert abs(res.slope) < 0.05


def test_box_dimension_bounds_and_scales(depth2_tree):
    res = box_dimension(depth2_tree)
    assert 0 <= res.slope <= 1
    with pytest.raises(InsufficientScales):
        box_dimension(depth2_tree, [3, 4])


def test_cover_sum_basics():
    assert len(upper_bound_cover_sum("all", 1, 3, 0.7, terms=0)) == 0
    sums = upper_bound_cover_sum("all", 1, 3, 0.7, terms=10**5)
    assert np.all(np.diff(sums) >= 0)
    primes = upper_bound_cover_sum("primes", 1, 3, 0.7, terms=1000)
    assert np.all(np.diff(primes) > 0)


def test_cover_sum_decades_shrink_above_critical_exponent():
    # convergent side: each decade adds less than the previous one; divergent side: more
    def decades(s):
        sums = upper_bound_cover_sum("all", 1, 3, s, terms=10**6)
        marks = [sums[10**j - 1] for j in range(3, 7)]
        return np.diff(marks)

    conv, div = decades(0.7), decades(0.62)
    assert np.all(conv[1:] < conv[:-1])
    assert np.all(div[1:] > div[:-1])


@pytest.mark.parametrize("args, expect", [((1, 3, 1), Fraction(2, 3)), ((2, 4, 0), Fraction(1, 2))])
def test_theoretical_dimension(args, expect):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HypothesisWarning)
        assert theoretical_dimension(*args) == expect


def test_theoretical_dimension_outside_hypothesis():
    with pytest.warns(HypothesisWarning):
        assert theoretical_dimension(1, 2, 1) == 1
    with pytest.raises(HypothesisViolation):
        theoretical_dimension(1, 2, 1, strict=True)

