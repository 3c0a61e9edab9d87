import itertools
import json

import numpy as np
import pytest

from topsa.errors import (
    BudgetExceeded,
    ConstructionFailed,
    FormatError,
    KernelTooSmall,
    NotRegular,
    RankConditionFailed,
    ShapeMismatch,
    TooSmall,
)
from topsa.ffla import FieldMatrix, kernel_basis, rank
from topsa.gf import field_make
from topsa.scheme import (
    Scheme,
    build_complete,
    build_prism,
    build_ring,
    dmam,
    from_kernel,
    load_scheme,
    neutralization_residuals,
    prism6_f5_fixture,
    prism_parameters,
    save_scheme,
    search_modulation,
    verify,
)
from topsa.topology import make_complete, make_custom, make_prism, make_ring

from oracles import PairField, brute_kernel, order_mod, smallest_prime_one_mod, squares_mod

F5 = field_make(5)
F2 = field_make(2)


def all_fixtures():
    return {
        "prism6_f5": prism6_f5_fixture(),
        **{f"ring{K}": build_ring(K) for K in (3, 4, 5, 6, 8)},
        **{f"prism{M}": build_prism(M) for M in (3, 4, 5)},
        **{f"complete{K}": build_complete(K) for K in range(2, 9)},
    }


FIXTURES = all_fixtures()


def test_dmam_examples():
    t = make_prism(3)
    assert dmam(t, F5, [0] * 6) == t.adjacency(F5)
    A = dmam(t, F5, [2] * 6)
    assert A.codes.diagonal().tolist() == [2] * 6
    assert A.codes[0].tolist() == [2, 1, 1, 1, 0, 0]
    J = dmam(make_complete(3), F2, [1, 1, 1])
    assert J.codes.tolist() == [[1] * 3] * 3
    with pytest.raises(ShapeMismatch):
        dmam(t, F5, [2] * 5)


def test_build_ring_k5():
    s = build_ring(5)
    assert s.spec.p == smallest_prime_one_mod(5) == 11
    w = s.H[1, 0]
    assert w == 3 and order_mod(3, 11) == 5
    assert all(a == 4 for a in s.alpha)
    assert (-(3 + pow(3, -1, 11))) % 11 == 4


def test_build_ring_k4_zero_modulation():
    s = build_ring(4)
    assert s.spec.p == 5 and s.H[1, 0] == 2
    assert all(a.is_zero() for a in s.alpha)
    rep = verify(s)
    assert rep.passed
    assert all(u.alpha_zero and u.open_rank == u.open_expected == 1 for u in rep.users)


def test_build_ring_k6():
    s = build_ring(6)
    assert s.spec.p == 7 and s.H[1, 0] == 3
    assert order_mod(3, 7) == 6 and order_mod(2, 7) == 3


def test_build_ring_h_columns_are_powers():
    s = build_ring(8)
    w = s.H[1, 0]
    for i in range(8):
        assert s.H[i, 0] == w**i and s.H[i, 1] == w ** (-i)


def test_prism_parameters_m3():
    par = prism_parameters(3)
    assert par.p == 7 and par.omega == 2 and par.lam1 == 6 and par.disc == 5
    assert 5 not in squares_mod(7)
    s = build_prism(3)
    assert (s.spec.p, s.spec.degree, s.spec.delta) == (7, 2, 5)
    A = dmam(s.topology, s.spec, s.alpha)
    assert (A @ s.H).is_zero()


def test_prism_parameters_m4():
    par = prism_parameters(4)
    assert par.p == 5 and par.omega == 2 and par.lam1 == 0 and par.disc == 0
    s = build_prism(4)
    assert s.spec.degree == 1 and all(a == 4 for a in s.alpha)


def test_prism_alpha_roots_satisfy_quadratic():
    # alpha_1 + alpha_2 = -(lam1 + 2) and alpha_1 alpha_2 = 2 lam1 + 1
    for M in (3, 4, 5, 6):
        s = build_prism(M)
        par = prism_parameters(M)
        lam = s.spec(par.lam1.a)
        a1, a2 = s.alpha[0], s.alpha[-1]
        assert a1 + a2 == -(lam + 2)
        assert a1 * a2 == 2 * lam + 1


def test_prism_fixture_verifies():
    s = prism6_f5_fixture()
    rep = verify(s)
    assert rep.passed and rep.kernel_dim == 3
    assert [u.open_rank for u in rep.users] == [3] * 6


def test_prism_too_small():
    with pytest.raises(TooSmall):
        build_prism(2)
    with pytest.raises(TooSmall):
        build_ring(2)
    with pytest.raises(TooSmall):
        build_complete(1)


def test_build_complete():
    s = build_complete(3)
    assert s.H.codes.tolist() == [[1, 0], [0, 1], [1, 1]]
    assert (dmam(s.topology, F2, s.alpha) @ s.H).is_zero()
    s2 = build_complete(2)
    assert s2.H.codes.tolist() == [[1], [1]] and s2.d == 1


def test_verify_complete_k6():
    rep = verify(build_complete(6))
    assert rep.passed and all(u.open_rank == 5 for u in rep.users)


def test_verify_zeroed_column():
    s = prism6_f5_fixture()
    H = s.H.codes.copy()
    H[:, 2] = 0
    rep = verify(s.with_H(FieldMatrix(F5, H)))
    assert rep.recovery_ok and not rep.ranks_ok and not rep.passed
    assert rep.failures()


def test_verify_non_kernel_h():
    s = prism6_f5_fixture()
    rng = np.random.default_rng(3)
    H = FieldMatrix(F5, rng.integers(0, 5, size=(6, 3)))
    assert not verify(s.with_H(H)).recovery_ok


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_scheme_invariants(name):
    s = FIXTURES[name]
    rep = verify(s)
    assert rep.passed
    assert rank(s.H) == s.d
    assert s.rates == (1, 1, s.d)
    for row in neutralization_residuals(s):
        assert all(v.is_zero() for v in row)
    for k in s.topology.vertices():
        if s.alpha[k - 1].is_zero():
            total = [s.spec.zero] * s.d
            for i in s.topology.neighbors(k):
                total = [a + b for a, b in zip(total, s.H.row(i - 1))]
            assert all(v.is_zero() for v in total)


def test_from_kernel_prism():
    s = from_kernel(make_prism(3), F5, [2] * 6)
    assert verify(s).passed
    A = dmam(s.topology, F5, s.alpha)
    assert len(kernel_basis(A)) == 3
    assert rank(FieldMatrix.hstack([s.H, prism6_f5_fixture().H])) == 3


def test_from_kernel_ring():
    s = from_kernel(make_ring(5), field_make(11), [4] * 5)
    assert s.d == 2 and verify(s).passed


def test_from_kernel_ring_zero_alpha_regression():
    F11 = field_make(11)
    A = dmam(make_ring(5), F11, [0] * 5)
    assert len(brute_kernel(PairField(11), [[(v, 0) for v in r] for r in A.codes.tolist()])) == 1
    with pytest.raises(KernelTooSmall) as exc:
        from_kernel(make_ring(5), F11, [0] * 5)
    assert exc.value.kernel_dim == 0 and exc.value.d == 2


def test_from_kernel_rank_failure_reported():
    # complete K=4 over F_2 with alpha = 1: the canonical kernel basis of the
    # all-ones matrix is (1,1,0,0), (1,0,1,0), (1,0,0,1); ranks decide the outcome
    t = make_complete(4)
    try:
        s = from_kernel(t, F2, [1] * 4)
    except RankConditionFailed as exc:
        assert not exc.report.ranks_ok and exc.report.recovery_ok
    else:
        assert verify(s).passed


def test_from_kernel_non_regular():
    with pytest.raises(NotRegular):
        from_kernel(make_custom(3, [(1, 2), (2, 3)]), F5, [0, 0, 0])


def test_search_examples():
    r = search_modulation(make_prism(3), F5, "uniform")
    assert [a.a for a in r.alpha] == [2] * 6 and r.kernel_dim == 3 and r.evaluated == 5
    r = search_modulation(make_complete(4), F2, "uniform")
    assert [a.a for a in r.alpha] == [1] * 4 and r.kernel_dim == 3
    r = search_modulation(make_ring(4), F5, "uniform")
    assert [a.a for a in r.alpha] == [0] * 4 and r.kernel_dim >= 2


def _brute_search(t, F, cands):
    best, arg = -1, None
    for alpha in cands:
        dim = len(kernel_basis(dmam(t, F, list(alpha))))
        if dim > best:
            best, arg = dim, alpha
    return best, arg


def test_search_uniform_matches_brute():
    t = make_prism(3)
    best, arg = _brute_search(t, F5, [(a,) * 6 for a in range(5)])
    r = search_modulation(t, F5, "uniform")
    assert r.kernel_dim == best and tuple(a.a for a in r.alpha) == arg


def test_search_exhaustive_dominates_uniform():
    t = make_ring(4)
    F3 = field_make(3)
    ex = search_modulation(t, F3, "exhaustive")
    un = search_modulation(t, F3, "uniform")
    assert ex.kernel_dim >= un.kernel_dim
    best, arg = _brute_search(t, F3, itertools.product(range(3), repeat=4))
    assert ex.kernel_dim == best and tuple(a.a for a in ex.alpha) == arg
    assert ex.evaluated == 81
    assert all(len(kernel_basis(dmam(t, F3, list(m)))) == best for m in ex.maximizers)


def test_search_blockwise_prism():
    t = make_prism(3)
    r = search_modulation(t, F5, "blockwise", blocks=[[1, 2, 3], [4, 5, 6]])
    assert r.evaluated == 25 and r.kernel_dim >= 3
    assert tuple(r.alpha) == min(r.maximizers, key=lambda m: tuple(e.code for e in m))


def test_search_budget():
    with pytest.raises(BudgetExceeded):
        search_modulation(make_prism(3), F5, "exhaustive", cap=1000)
    with pytest.raises(ValueError):
        search_modulation(make_prism(3), F5, "blockwise", blocks=[[1, 2], [3]])


def test_search_batch_order_independent():
    t = make_ring(4)
    F3 = field_make(3)
    a = search_modulation(t, F3, "exhaustive", batch=7)
    b = search_modulation(t, F3, "exhaustive", batch=1000)
    assert a == b


def test_scheme_roundtrip(tmp_path):
    for s in (prism6_f5_fixture(), build_prism(3), build_complete(4)):
        path = tmp_path / "s.json"
        save_scheme(s, path)
        again = load_scheme(path)
        assert again == s
        data = json.loads(path.read_text())
        assert data["rates"] == {"rx": [1, 1], "rz": [1, 1], "rzs": [s.d, 1]}


def test_scheme_load_rejects(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(FormatError):
        load_scheme(path)
    data = prism6_f5_fixture().to_dict()
    data["rates"]["rzs"] = [2, 1]
    path.write_text(json.dumps(data))
    with pytest.raises(FormatError):
        load_scheme(path)
    data = prism6_f5_fixture().to_dict()
    data["H"]["data"] = data["H"]["data"][:-1]
    path.write_text(json.dumps(data))
    with pytest.raises(FormatError):
        load_scheme(path)


def test_scheme_shape_checks():
    s = prism6_f5_fixture()
    with pytest.raises(ShapeMismatch):
        Scheme(s.topology, F5, s.alpha[:5], s.H)
    with pytest.raises(ShapeMismatch):
        Scheme(s.topology, F5, s.alpha, FieldMatrix.zeros(F5, 6, 2))
    with pytest.raises(NotRegular):
        Scheme(make_custom(3, [(1, 2), (2, 3)]), F5, [0] * 3, FieldMatrix.zeros(F5, 3, 1))


def test_construction_failed_is_error_type():
    assert issubclass(ConstructionFailed, RuntimeError)
