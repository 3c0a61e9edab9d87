import inspect
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topsa import _kernels
from topsa.engine import (
    check_recovery,
    derive_keys,
    exhaustive_recovery,
    random_round,
    recover,
    run_round,
    sample_source_key,
    sample_vector,
)
from topsa.errors import BudgetExceeded, ShapeMismatch
from topsa.ffla import FieldMatrix
from topsa.gf import field_make
from topsa.scheme import build_complete, build_prism, build_ring, prism6_f5_fixture

F5 = field_make(5)


@pytest.fixture(params=["numba", "numpy"])
def each_backend(request):
    before = _kernels.backend()
    _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(before)


def test_derive_keys_examples():
    s = prism6_f5_fixture()
    assert derive_keys(s, [1, 1, 1]) == tuple(F5(1) for _ in range(6))
    assert all(z.is_zero() for z in derive_keys(s, [0, 0, 0]))
    c = build_complete(3)
    assert [z.a for z in derive_keys(c, [1, 0])] == [1, 0, 1]
    with pytest.raises(ShapeMismatch):
        derive_keys(s, [1, 1])


def test_run_round_complete3():
    s = build_complete(3)
    t = run_round(s, [1, 0, 1], [1, 1])
    assert [z.a for z in t.Z] == [1, 1, 0]
    assert [x.a for x in t.X] == [0, 1, 1]
    assert t.recovered[0] == 1
    assert all(check_recovery(t))


def test_zero_inputs_recover_zero():
    s = prism6_f5_fixture()
    t = run_round(s, [0] * 6, [3, 1, 4])
    assert all(r.is_zero() for r in t.recovered)


def test_run_round_shape():
    with pytest.raises(ShapeMismatch):
        run_round(prism6_f5_fixture(), [0] * 5, [0, 0, 0])


def test_recover_sees_only_local_view():
    params = list(inspect.signature(recover).parameters)
    assert params == ["alpha_k", "own_input", "own_key", "received"]


def test_recover_depends_only_on_neighbors():
    # changing a non-neighbor's broadcast never changes user 1's output
    s = prism6_f5_fixture()
    t = run_round(s, [1, 2, 3, 4, 0, 1], [2, 2, 1])
    nbrs = sorted(s.topology.neighbors(1))
    base = recover(s.alpha[0], t.W[0], t.Z[0], {i: t.X[i - 1] for i in nbrs})
    X = list(t.X)
    X[4] = X[4] + 1
    again = recover(s.alpha[0], t.W[0], t.Z[0], {i: X[i - 1] for i in nbrs})
    assert base == again == t.expected[0]
    X[1] = X[1] + 1
    assert recover(s.alpha[0], t.W[0], t.Z[0], {i: X[i - 1] for i in nbrs}) != base


def test_sampling_deterministic():
    assert sample_vector(F5, 10, 7) == sample_vector(F5, 10, 7)
    assert sample_source_key(F5, 3, 1) == sample_source_key(F5, 3, 1)
    with pytest.raises(ValueError):
        sample_source_key(F5, 0, 1)
    s = build_prism(3)
    a = random_round(s, np.random.default_rng(11))
    b = random_round(s, np.random.default_rng(11))
    assert a.to_json() == b.to_json()


def test_sampling_uniform():
    n = 100_000
    codes = np.array([x.code for x in sample_vector(F5, n, 2024)])
    freq = np.bincount(codes, minlength=5)
    sigma = np.sqrt(n * 0.2 * 0.8)
    assert np.all(np.abs(freq - n / 5) < 5 * sigma)


def test_transcript_dict():
    t = run_round(build_prism(3), [(1, 2)] * 6, [0, (0, 1), 3])
    d = t.to_dict()
    assert set(d) == {"W", "N", "Z", "X", "recovered", "expected"}
    assert d["W"][0] == [1, 2]


@pytest.mark.parametrize("s", [prism6_f5_fixture(), build_ring(4), build_ring(5), build_prism(3),
                               build_complete(5)], ids=["fixture", "ring4", "ring5", "prism3", "complete5"])
def test_random_rounds_recover(s):
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert all(check_recovery(random_round(s, rng)))


def test_exhaustive_recovery_small(each_backend):
    assert exhaustive_recovery(build_ring(4)).tolist() == [0] * 4
    assert exhaustive_recovery(build_complete(4)).tolist() == [0] * 4


def test_exhaustive_recovery_detects_bad_h(each_backend):
    s = build_ring(4)
    H = s.H.codes.copy()
    H[0, 0] = (H[0, 0] + 1) % 5
    s_bad = s.with_H(FieldMatrix(s.spec, H))
    fails = exhaustive_recovery(s_bad)
    # user k fails for every W exactly when its combined key residual is nonzero
    expect = [0] * 4
    for N in itertools.product(range(5), repeat=2):
        Z = derive_keys(s_bad, N)
        for k in range(1, 5):
            res = s_bad.alpha[k - 1] * Z[k - 1]
            for i in s_bad.topology.neighbors(k):
                res = res + Z[i - 1]
            if not res.is_zero():
                expect[k - 1] += 5**4
    assert fails.tolist() == expect and any(expect)


def test_exhaustive_recovery_budget():
    with pytest.raises(BudgetExceeded):
        exhaustive_recovery(build_ring(8), budget=10**6)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["fixture", "prism3", "ring6"]), st.integers(0, 2**32 - 1))
def test_recovery_property(which, seed):
    s = {"fixture": prism6_f5_fixture(), "prism3": build_prism(3), "ring6": build_ring(6)}[which]
    t = random_round(s, np.random.default_rng(seed))
    assert t.recovered == t.expected
