"""Exhaustive security audit of a scheme.

Mutual information is decided without logarithms: for uniform (W, N) the
conditional MI I(X_{N_k}; W_{N_k} | S_k, W_k, Z_k) is zero exactly when, inside
every conditioning class c, the joint counts factorize,

    n(c, x, w) * n(c) == n(c, x) * n(c, w)   for all x, w,

which is an integer identity. A failing cell is reported as a witness.

Entropy conditions use the fact that a linear image of a uniform vector is
uniform on its support, so H(Z_S) = rank(H[S]) in q-ary units;
:func:`empirical_entropy` re-derives that number by enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import _arith, _kernels
from .errors import BudgetExceeded, NonUniformSupport
from .ffla import rank, submatrix_rows
from .scheme import Scheme

DEFAULT_BUDGET = 10**8
# joint count tables above this many cells switch to the sorted sparse path
DENSE_CELL_LIMIT = 1 << 24


def state_count(s: Scheme) -> int:
    return s.spec.q ** (s.K + s.H.cols)


@dataclass(frozen=True)
class Witness:
    """A conditioning class and cell where the joint counts do not factorize."""

    neighbor_sum: object
    own_input: Optional[object]
    own_key: object
    messages: tuple
    inputs: tuple
    n_joint: int
    n_class: int
    n_messages: int
    n_inputs: int

    def to_dict(self) -> dict:
        return {
            "neighbor_sum": self.neighbor_sum.to_json(),
            "own_input": None if self.own_input is None else self.own_input.to_json(),
            "own_key": self.own_key.to_json(),
            "messages": [x.to_json() for x in self.messages],
            "inputs": [w.to_json() for w in self.inputs],
            "counts": {
                "joint": self.n_joint,
                "class": self.n_class,
                "messages": self.n_messages,
                "inputs": self.n_inputs,
            },
        }


@dataclass(frozen=True)
class MIResult:
    user: int
    zero: bool
    states: int
    witness: Optional[Witness] = None

    def to_dict(self) -> dict:
        return {
            "user": self.user,
            "mi": "zero" if self.zero else "positive",
            "states": self.states,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


def _digits(code: int, q: int, n: int) -> list[int]:
    out = []
    for _ in range(n):
        out.append(code % q)
        code //= q
    return out[::-1]


def _decode_witness(s, cell, counts_lookup, m, own_input, swap) -> Witness:
    q = s.spec.q
    c, i1, i2 = (int(v) for v in cell)
    x, w = (i2, i1) if swap else (i1, i2)
    if own_input:
        ssum, wk, zk = _digits(c, q, 3)
    else:
        (ssum, zk), wk = _digits(c, q, 2), None
    el = s.spec.from_code
    n_joint, n_class, n_x, n_w = counts_lookup(c, i1, i2)
    if swap:
        n_x, n_w = n_w, n_x
    return Witness(
        neighbor_sum=el(ssum),
        own_input=None if wk is None else el(wk),
        own_key=el(zk),
        messages=tuple(el(v) for v in _digits(x, q, m)),
        inputs=tuple(el(v) for v in _digits(w, q, m)),
        n_joint=n_joint,
        n_class=n_class,
        n_messages=n_x,
        n_inputs=n_w,
    )


def brute_force_mi(
    s: Scheme,
    k: int,
    budget: int = DEFAULT_BUDGET,
    own_input: bool = True,
    swap: bool = False,
) -> MIResult:
    """Decide I(X_{N_k}; W_{N_k} | S_k, W_k, Z_k) = 0 by enumerating every (W, N).

    ``own_input=False`` drops W_k from the conditioning tuple; ``swap`` builds
    the table with the roles of messages and inputs exchanged.
    """
    states = state_count(s)
    if states > budget:
        raise BudgetExceeded(f"{states} states exceed the budget of {budget}")
    q, p, deg, delta = s.spec.q, s.spec.p, s.spec.degree, s.spec.delta_code
    nb = np.array(sorted(i - 1 for i in s.topology.neighbors(k)), dtype=np.int64)
    m = len(nb)
    nc, nx, nw = _kernels.mi_shape(q, m, own_input)
    H = s.H.codes
    if nc * nx * nw <= DENSE_CELL_LIMIT:
        counts = _kernels.mi_counts(H, k - 1, nb, p, deg, delta, own_input, swap)
        cell = _kernels.factorization_witness(counts)

        def lookup(c, i1, i2):
            return (int(counts[c, i1, i2]), int(counts[c].sum()),
                    int(counts[c, i1].sum()), int(counts[c, :, i2].sum()))
    else:
        if np.log2(float(nc)) + np.log2(float(nx)) + np.log2(float(nw)) >= 62:
            raise BudgetExceeded("joint cell space does not fit 64-bit indices")
        keys, cnt = _kernels.mi_sparse_counts(H, k - 1, nb, p, deg, delta, own_input, swap)
        n1, n2 = (nw, nx) if swap else (nx, nw)
        cell = _kernels.sparse_factorization_witness(keys, cnt, n1, n2)

        def lookup(c, i1, i2):
            kc = keys // (n1 * n2)
            in_c = kc == c
            k1 = (keys // n2) % n1
            k2 = keys % n2
            joint = cnt[in_c & (k1 == i1) & (k2 == i2)].sum()
            return (int(joint), int(cnt[in_c].sum()),
                    int(cnt[in_c & (k1 == i1)].sum()), int(cnt[in_c & (k2 == i2)].sum()))
    if cell[0] < 0:
        return MIResult(k, True, states)
    return MIResult(k, False, states, _decode_witness(s, cell, lookup, m, own_input, swap))


def recheck_witness(s: Scheme, k: int, witness: Witness) -> bool:
    """Recount only the witness's conditioning class; True when factorization fails there."""
    q, p, deg, delta = s.spec.q, s.spec.p, s.spec.degree, s.spec.delta_code
    K, d = s.H.shape
    nb = sorted(i - 1 for i in s.topology.neighbors(k))
    x_t = np.array([e.code for e in witness.messages])
    w_t = np.array([e.code for e in witness.inputs])
    target = (witness.neighbor_sum.code, witness.own_key.code,
              None if witness.own_input is None else witness.own_input.code)
    n_c = n_x = n_w = n_xw = 0
    N = _kernels.all_vectors(q, d)
    Z = np.zeros((N.shape[0], K), dtype=np.int64)
    for j in range(d):
        Z = _arith.add(Z, _arith.mul(N[:, [j]], s.H.codes[:, j][None, :], p, deg, delta), p, deg)
    for wcode in range(q**K):
        W = np.array(_digits(wcode, q, K), dtype=np.int64)
        ssum = 0
        for i in nb:
            ssum = _arith.add(ssum, int(W[i]), p, deg)
        if ssum != target[0] or (target[2] is not None and W[k - 1] != target[2]):
            continue
        keep = Z[:, k - 1] == target[1]
        if not keep.any():
            continue
        X = _arith.add(W[nb][None, :], Z[keep][:, nb], p, deg)
        hit_x = (X == x_t).all(axis=1)
        hit_w = bool((W[nb] == w_t).all())
        n_c += int(keep.sum())
        n_x += int(hit_x.sum())
        if hit_w:
            n_w += int(keep.sum())
            n_xw += int(hit_x.sum())
    return n_c > 0 and n_xw * n_c != n_x * n_w


@dataclass(frozen=True)
class EntropyCheck:
    user: int
    closed: int
    open_given_own: int
    d: int

    @property
    def ok(self) -> bool:
        return self.closed >= self.d and self.open_given_own >= self.d - 1

    def to_dict(self) -> dict:
        return {
            "user": self.user,
            "H(Z_closed)": [self.closed, self.d],
            "H(Z_open|Z_k)": [self.open_given_own, self.d - 1],
            "ok": self.ok,
        }


def entropy_checks(s: Scheme) -> tuple[EntropyCheck, ...]:
    """Neighborhood key-entropy floors via H(Z_S) = rank(H[S])."""
    out = []
    for k in s.topology.vertices():
        nb = [i - 1 for i in s.topology.neighbors(k)]
        closed = rank(submatrix_rows(s.H, nb + [k - 1]))
        own = rank(submatrix_rows(s.H, [k - 1]))
        out.append(EntropyCheck(k, closed, closed - own, s.d))
    return tuple(out)


def empirical_entropy(s: Scheme, users: Iterable[int], budget: int = DEFAULT_BUDGET) -> int:
    """H(Z_S) in q-ary units by enumerating every source key."""
    rows = sorted({u - 1 for u in users})
    if not rows:
        return 0
    q = s.spec.q
    if q**s.H.cols > budget:
        raise BudgetExceeded(f"{q ** s.H.cols} source keys exceed the budget of {budget}")
    counts = _kernels.key_outcome_counts(s.H.codes[rows], s.spec.p, s.spec.degree, s.spec.delta_code)
    nz = counts
    if not (nz == nz[0]).all():
        raise NonUniformSupport(f"key outcomes for users {sorted(users)} are not uniform")
    support = int(nz.size)
    r = 0
    while q**r < support:
        r += 1
    if q**r != support:
        raise NonUniformSupport(f"support size {support} is not a power of {q}")
    return r


@dataclass(frozen=True)
class UserAudit:
    user: int
    mi: str
    entropy: EntropyCheck
    witness: Optional[Witness] = None

    @property
    def ok(self) -> bool:
        return self.mi != "positive" and self.entropy.ok

    def to_dict(self) -> dict:
        return {
            "user": self.user,
            "mi": self.mi,
            "entropy": self.entropy.to_dict(),
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


@dataclass(frozen=True)
class AuditReport:
    users: tuple
    states: int
    budget: int
    own_input: bool = True
    notes: tuple = field(default_factory=tuple)

    @property
    def status(self) -> str:
        if not all(u.ok for u in self.users):
            return "fail"
        if any(u.mi == "skipped" for u in self.users):
            return "pass-with-skips"
        return "pass"

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "fail": 2, "pass-with-skips": 3}[self.status]

    @property
    def mi_audited(self) -> int:
        return sum(u.mi != "skipped" for u in self.users)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "states_per_user": self.states,
            "budget": self.budget,
            "conditioning": "S,W_k,Z_k" if self.own_input else "S,Z_k",
            "mi_audited": self.mi_audited,
            "users": [u.to_dict() for u in self.users],
        }


def audit_scheme(s: Scheme, budget: int = DEFAULT_BUDGET, own_input: bool = True) -> AuditReport:
    """Entropy floors for every user; exact MI per user while q^(K+d) fits the budget."""
    states = state_count(s)
    checks = entropy_checks(s)
    users = []
    for chk in checks:
        if states > budget:
            users.append(UserAudit(chk.user, "skipped", chk))
            continue
        res = brute_force_mi(s, chk.user, budget, own_input)
        users.append(UserAudit(chk.user, "zero" if res.zero else "positive", chk, res.witness))
    return AuditReport(tuple(users), states, budget, own_input)
