from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liminf import kernels
from liminf.rational_geometry import intervals_overlap

BACKENDS = kernels.backends()


@pytest.fixture(params=[name for name, _ in BACKENDS])
def backend(request):
    return dict(BACKENDS)[request.param]


def test_python_backend_always_available():
    assert "python" in dict(BACKENDS)
    assert kernels.BACKEND in dict(BACKENDS)


@settings(max_examples=60, deadline=None)
@given(st.integers(5, 400), st.sampled_from([Fraction(7, 2), Fraction(3), Fraction(5, 2)]))
def test_classify_axis_is_sound(q, tau):
    ps = np.arange(1, q, dtype=np.int64)
    q1s = np.arange(2, min(q, 40), dtype=np.int64)
    tf = float(tau)
    hq = float(q) ** -tf
    h1s = q1s.astype(np.float64) ** -tf
    outs = [mod.classify_axis(ps, q, q1s, hq, h1s) for _, mod in BACKENDS]
    for other in outs[1:]:
        assert np.array_equal(outs[0], other)
    out = outs[0]
    for i, j in zip(*np.nonzero(out != kernels.UNCERTAIN)):
        p, q1 = int(ps[i]), int(q1s[j])
        hit = any(intervals_overlap(p, q, y, q1, tau) for y in range(p * q1 // q - 1, p * q1 // q + 3))
        assert hit == (out[i, j] == kernels.OVERLAP)


def test_classify_axis_flags_exact_ties():
    # with tau = 2, 1/2 +- 1/4 and 1/1 +- 1/4 share one endpoint: never a certain overlap
    for _, mod in BACKENDS:
        out = mod.classify_axis(np.array([1]), 2, np.array([1]), 0.25, np.array([0.25]))
        assert out[0, 0] in (kernels.UNCERTAIN, kernels.NO_OVERLAP)


@settings(max_examples=30, deadline=None)
@given(st.integers(10, 400), st.floats(0.3, 0.95), st.integers(0, 2**32 - 1))
def test_shape_scan_backends_agree(horizon, nu, seed):
    rng = np.random.default_rng(seed)
    member = (rng.random(2 * horizon + 1) < 0.7).astype(np.uint8)
    member[0] = 0
    n = np.arange(horizon + 1, dtype=np.float64)
    caps = np.floor(n**nu / np.log(np.maximum(n, 2))).astype(np.int64)
    results = []
    for _, mod in BACKENDS:
        m = member.copy()
        res = mod.shape_scan(m, caps, horizon)
        results.append((m.tolist(), [list(map(int, r)) for r in res[:3]], int(res[3])))
    assert all(r == results[0] for r in results[1:])


@given(st.lists(st.floats(0, 1e6, allow_nan=False), max_size=200))
def test_kahan_cumsum_backends_agree(values):
    arr = np.array(values, dtype=np.float64)
    outs = [np.asarray(mod.kahan_cumsum(arr)) for _, mod in BACKENDS]
    for other in outs[1:]:
        assert np.array_equal(outs[0], other)
    if values:
        assert outs[0][-1] == pytest.approx(float(np.sum(arr)), rel=1e-12, abs=1e-9)


def test_kahan_beats_naive_sum():
    terms = np.full(10**6, 0.1)
    assert abs(kernels.kahan_cumsum(terms)[-1] - 1e5) < abs(np.cumsum(terms)[-1] - 1e5) + 1e-12


def test_pure_python_selected_by_env():
    import os
    import subprocess
    import sys

    code = (
        "from liminf import kernels, BACKEND\n"
        "from liminf.rational_geometry import Hypercube\n"
        "from liminf.new_generation import count_new_generation\n"
        "r = count_new_generation(Hypercube.make(1, 2, '7/2'), 1009)\n"
        "print(kernels.BACKEND, BACKEND, r.new_gen_count)\n"
    )
    env = dict(os.environ, LIMINF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    from liminf.new_generation import count_new_generation
    from liminf.rational_geometry import Hypercube

    expect = count_new_generation(Hypercube.make(1, 2, "7/2"), 1009).new_gen_count
    assert out.stdout.split() == ["python", "python", str(expect)]
