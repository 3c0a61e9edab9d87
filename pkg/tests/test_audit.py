import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topsa import _kernels, audit
from topsa.audit import (
    audit_scheme,
    brute_force_mi,
    empirical_entropy,
    entropy_checks,
    recheck_witness,
    state_count,
)
from topsa.errors import BudgetExceeded, NonUniformSupport
from topsa.ffla import FieldMatrix, rank, submatrix_rows
from topsa.gf import field_make
from topsa.scheme import Scheme, build_complete, build_prism, build_ring, prism6_f5_fixture
from topsa.topology import make_ring

from oracles import PairField, mutual_information_bits

F5 = field_make(5)


def zero_row(s, k):
    H = s.H.codes.copy()
    H[k - 1] = 0
    return s.with_H(FieldMatrix(s.spec, H))


def oracle_mi(s, k, own_input=True):
    nbrs = {v: s.topology.neighbors(v) for v in s.topology.vertices()}
    return mutual_information_bits(PairField(s.spec.p), s.H.codes.tolist(),
                                   s.alpha_codes.tolist(), nbrs, k, own_input)


@pytest.fixture(params=["numba", "numpy"])
def each_backend(request):
    before = _kernels.backend()
    _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(before)


def test_fixture_user1_zero(each_backend):
    r = brute_force_mi(prism6_f5_fixture(), 1)
    assert r.zero and r.witness is None and r.states == 5**9


def test_complete3_all_users_zero():
    s = build_complete(3)
    assert all(brute_force_mi(s, k).zero for k in (1, 2, 3))


def test_sabotaged_witness(each_backend):
    s = zero_row(prism6_f5_fixture(), 4)
    r = brute_force_mi(s, 1)
    assert not r.zero
    w = r.witness
    assert (w.neighbor_sum, w.own_input, w.own_key) == (0, 0, 0)
    assert w.messages == (0, 0, 0) and w.inputs == (0, 0, 0)
    assert (w.n_joint, w.n_class, w.n_messages, w.n_inputs) == (25, 15625, 125, 625)
    assert w.n_joint * w.n_class != w.n_messages * w.n_inputs
    assert recheck_witness(s, 1, w)
    assert r.to_dict()["witness"]["counts"]["joint"] == 25


def test_recheck_rejects_fake_witness():
    s = prism6_f5_fixture()
    w = brute_force_mi(zero_row(s, 4), 1).witness
    assert not recheck_witness(s, 1, w)


def test_swap_symmetry():
    s = zero_row(prism6_f5_fixture(), 4)
    a = brute_force_mi(s, 1)
    b = brute_force_mi(s, 1, swap=True)
    assert a.zero == b.zero is False
    assert recheck_witness(s, 1, b.witness)
    assert brute_force_mi(prism6_f5_fixture(), 2, swap=True).zero


def test_reduced_conditioning():
    s = prism6_f5_fixture()
    r = brute_force_mi(s, 1, own_input=False)
    assert r.zero
    bad = brute_force_mi(zero_row(s, 4), 1, own_input=False)
    assert not bad.zero and bad.witness.own_input is None
    assert recheck_witness(zero_row(s, 4), 1, bad.witness)


def test_non_neighbor_sabotage_is_invisible():
    # user 6 is not adjacent to user 1, so zeroing its key leaves user 1's view intact
    s = zero_row(prism6_f5_fixture(), 6)
    assert brute_force_mi(s, 1).zero
    assert not brute_force_mi(s, 4).zero


def test_sparse_path_agrees(monkeypatch):
    s = zero_row(prism6_f5_fixture(), 4)
    dense = brute_force_mi(s, 1)
    monkeypatch.setattr(audit, "DENSE_CELL_LIMIT", 1)
    sparse = brute_force_mi(s, 1)
    assert not sparse.zero and recheck_witness(s, 1, sparse.witness)
    assert sparse.witness.n_joint * sparse.witness.n_class != \
        sparse.witness.n_messages * sparse.witness.n_inputs
    assert brute_force_mi(prism6_f5_fixture(), 1).zero
    assert dense.zero == sparse.zero


def test_budget():
    with pytest.raises(BudgetExceeded):
        brute_force_mi(build_ring(8), 1)
    assert state_count(build_ring(8)) == 17**10


@pytest.mark.parametrize("own_input", [True, False])
def test_oracle_ring4(own_input):
    s = build_ring(4)
    assert oracle_mi(s, 1, own_input) == pytest.approx(0, abs=1e-9)
    assert brute_force_mi(s, 1, own_input=own_input).zero
    bad = zero_row(s, 2)
    assert oracle_mi(bad, 1, own_input) > 0.01
    assert not brute_force_mi(bad, 1, own_input=own_input).zero


def test_oracle_complete3():
    s = build_complete(3)
    for k in (1, 2, 3):
        assert oracle_mi(s, k) == pytest.approx(0, abs=1e-9)
    bad = zero_row(s, 2)
    assert oracle_mi(bad, 1) > 0.01 and not brute_force_mi(bad, 1).zero


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=8, max_size=8), st.lists(st.integers(0, 2), min_size=4, max_size=4),
       st.integers(1, 4), st.booleans())
def test_zero_decision_matches_oracle(hflat, alpha, k, own_input):
    # arbitrary (possibly broken) schemes on a 4-ring over F_3
    F3 = field_make(3)
    s = Scheme(make_ring(4), F3, alpha, FieldMatrix(F3, np.array(hflat).reshape(4, 2)))
    mi = oracle_mi(s, k, own_input)
    r = brute_force_mi(s, k, own_input=own_input)
    assert r.zero == (abs(mi) < 1e-9)
    if not r.zero:
        assert recheck_witness(s, k, r.witness)


def test_entropy_examples():
    s = prism6_f5_fixture()
    chk = entropy_checks(s)
    assert all(c.ok and c.closed == 3 and c.open_given_own == 2 for c in chk)
    assert empirical_entropy(s, [1, 2, 3, 4]) == 3
    assert empirical_entropy(s, []) == 0
    assert empirical_entropy(s, [1]) == 1
    assert empirical_entropy(s, [1, 2, 3]) == 3


def test_entropy_duplicated_rows_fail():
    s = prism6_f5_fixture()
    H = s.H.codes.copy()
    H[1] = H[2] = H[3]
    bad = s.with_H(FieldMatrix(F5, H))
    assert not entropy_checks(bad)[0].ok
    assert empirical_entropy(bad, [2, 3, 4]) == 1


def test_empirical_entropy_budget():
    with pytest.raises(BudgetExceeded):
        empirical_entropy(prism6_f5_fixture(), [1], budget=10)


def test_empirical_entropy_rejects_non_uniform(monkeypatch):
    monkeypatch.setattr(_kernels, "key_outcome_counts", lambda *a: np.array([2, 1, 1]))
    with pytest.raises(NonUniformSupport):
        empirical_entropy(prism6_f5_fixture(), [1])
    monkeypatch.setattr(_kernels, "key_outcome_counts", lambda *a: np.array([1, 1, 1]))
    with pytest.raises(NonUniformSupport):
        empirical_entropy(prism6_f5_fixture(), [1])


@pytest.mark.parametrize("s", [prism6_f5_fixture(), build_ring(5), build_prism(3), build_complete(6)],
                         ids=["fixture", "ring5", "prism3", "complete6"])
def test_empirical_entropy_equals_rank(s):
    for k in s.topology.vertices():
        nb = sorted(s.topology.neighbors(k))
        for S in (nb, nb + [k], [k]):
            assert empirical_entropy(s, S) == rank(submatrix_rows(s.H, [i - 1 for i in S]))


def test_audit_scheme_pass():
    rep = audit_scheme(build_ring(4))
    assert rep.status == "pass" and rep.exit_code == 0 and rep.mi_audited == 4


def test_audit_scheme_fail():
    rep = audit_scheme(zero_row(build_ring(4), 2))
    assert rep.status == "fail" and rep.exit_code == 2
    assert any(u.witness is not None for u in rep.users)


def test_audit_scheme_skips():
    rep = audit_scheme(build_ring(8), budget=1000)
    assert rep.status == "pass-with-skips" and rep.exit_code == 3 and rep.mi_audited == 0
    d = rep.to_dict()
    assert d["conditioning"] == "S,W_k,Z_k" and len(d["users"]) == 8
