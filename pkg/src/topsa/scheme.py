"""Linear secure-aggregation schemes: DMAM kernels, explicit key matrices, checks.

A scheme assigns each user k a modulation coefficient alpha_k and a row of the
key matrix H (K x d). User k's key is Z_k = H[k] . N for a uniform source key
N in F_q^d, it broadcasts X_k = W_k + Z_k, and recovers its neighborhood sum as
alpha_k Z_k + sum_{i in N_k} X_i. Keys cancel iff (diag(alpha) + A) H = 0;
security additionally needs the neighborhood rank conditions checked by
:func:`verify`.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import (
    BudgetExceeded,
    ConstructionFailed,
    FieldMismatch,
    FormatError,
    KernelTooSmall,
    NotRegular,
    RankConditionFailed,
    ShapeMismatch,
    TooSmall,
)
from .ffla import FieldMatrix, kernel_basis, mat_mat, rank, submatrix_rows
from .gf import FieldElement, FieldSpec, field_make, find_root_of_unity, next_prime_congruent_one, sqrt
from .topology import Topology, make_complete, make_prism, make_ring


@dataclass(frozen=True)
class Scheme:
    topology: Topology
    spec: FieldSpec
    alpha: tuple
    H: FieldMatrix

    def __post_init__(self):
        d = self.topology.degree
        if d is None:
            raise NotRegular("rates (1, 1, d) presume a regular graph")
        alpha = tuple(self.spec.coerce(a) for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if len(alpha) != self.topology.K:
            raise ShapeMismatch(f"alpha has {len(alpha)} entries, expected {self.topology.K}")
        if self.H.spec != self.spec:
            raise FieldMismatch("H lives in a different field than the scheme")
        if self.H.shape != (self.topology.K, d):
            raise ShapeMismatch(f"H has shape {self.H.shape}, expected {(self.topology.K, d)}")

    @property
    def K(self) -> int:
        return self.topology.K

    @property
    def d(self) -> int:
        return self.topology.degree

    @property
    def rates(self) -> tuple[Fraction, Fraction, Fraction]:
        """(R_X, R_Z, R_ZSigma): one message symbol, one key symbol, H.cols source symbols."""
        return Fraction(1), Fraction(1), Fraction(self.H.cols)

    @property
    def alpha_codes(self) -> np.ndarray:
        return np.array([a.code for a in self.alpha], dtype=np.int64)

    def neighbor_csr(self) -> tuple[np.ndarray, np.ndarray]:
        ptr = [0]
        idx = []
        for k in self.topology.vertices():
            idx.extend(sorted(i - 1 for i in self.topology.neighbors(k)))
            ptr.append(len(idx))
        return np.array(ptr, dtype=np.int64), np.array(idx, dtype=np.int64)

    def with_H(self, H: FieldMatrix) -> "Scheme":
        return Scheme(self.topology, self.spec, self.alpha, H)

    def to_dict(self) -> dict:
        rx, rz, rzs = self.rates
        return {
            "topology": self.topology.to_dict(),
            "field": self.spec.to_dict(),
            "alpha": [a.to_json() for a in self.alpha],
            "H": self.H.to_dict(),
            "d": self.d,
            "rates": {
                "rx": [rx.numerator, rx.denominator],
                "rz": [rz.numerator, rz.denominator],
                "rzs": [rzs.numerator, rzs.denominator],
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scheme":
        try:
            topo = Topology.from_dict(data["topology"])
            spec = FieldSpec.from_dict(data["field"])
            alpha = tuple(spec.coerce(tuple(a)) for a in data["alpha"])
            H = FieldMatrix.from_dict(spec, data["H"])
            s = cls(topo, spec, alpha, H)
            if int(data["d"]) != s.d:
                raise FormatError(f"d = {data['d']} but the topology has degree {s.d}")
            rates = data.get("rates")
            if rates is not None:
                got = tuple(Fraction(*rates[key]) for key in ("rx", "rz", "rzs"))
                if got != s.rates:
                    raise FormatError(f"declared rates {got} disagree with the key design {s.rates}")
        except FormatError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise FormatError(f"malformed scheme: {exc}") from exc
        return s


def save_scheme(s: Scheme, path) -> None:
    Path(path).write_text(json.dumps(s.to_dict(), indent=1) + "\n")


def load_scheme(path) -> Scheme:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return Scheme.from_dict(data)


# ---------------------------------------------------------------------------
# DMAM and verification
# ---------------------------------------------------------------------------

def dmam(t: Topology, spec: FieldSpec, alpha: Sequence) -> FieldMatrix:
    """diag(alpha) + A over ``spec``."""
    if len(alpha) != t.K:
        raise ShapeMismatch(f"alpha has {len(alpha)} entries, expected {t.K}")
    a = t.adjacency(spec).codes.copy()
    for i, v in enumerate(alpha):
        a[i, i] = spec.coerce(v).code
    return FieldMatrix(spec, a)


@dataclass(frozen=True)
class UserCheck:
    user: int
    alpha_zero: bool
    closed_rank: int
    closed_expected: int
    open_rank: int
    open_expected: int

    @property
    def ok(self) -> bool:
        return self.closed_rank == self.closed_expected and self.open_rank == self.open_expected


@dataclass(frozen=True)
class VerificationReport:
    recovery_ok: bool
    kernel_dim: int
    rank_H: int
    d: int
    users: tuple = field(default_factory=tuple)

    @property
    def ranks_ok(self) -> bool:
        return all(u.ok for u in self.users)

    @property
    def passed(self) -> bool:
        return self.recovery_ok and self.ranks_ok

    def failures(self) -> list[str]:
        out = []
        if not self.recovery_ok:
            out.append("recovery: A_alpha H != 0")
        for u in self.users:
            if u.closed_rank != u.closed_expected:
                out.append(f"user {u.user}: rank(H[N_k+k]) = {u.closed_rank}, need {u.closed_expected}")
            if u.open_rank != u.open_expected:
                out.append(f"user {u.user}: rank(H[N_k]) = {u.open_rank}, need {u.open_expected}")
        return out

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "recovery_ok": self.recovery_ok,
            "kernel_dim": self.kernel_dim,
            "rank_H": self.rank_H,
            "d": self.d,
            "users": [
                {
                    "user": u.user,
                    "alpha_zero": u.alpha_zero,
                    "closed_rank": [u.closed_rank, u.closed_expected],
                    "open_rank": [u.open_rank, u.open_expected],
                    "ok": u.ok,
                }
                for u in self.users
            ],
        }


def verify(s: Scheme) -> VerificationReport:
    """Check A_alpha H = 0 and both neighborhood rank conditions; never raises on failure."""
    A = dmam(s.topology, s.spec, s.alpha)
    recovery_ok = mat_mat(A, s.H).is_zero()
    d = s.d
    users = []
    for k in s.topology.vertices():
        nb = [i - 1 for i in s.topology.neighbors(k)]
        zero = s.alpha[k - 1].is_zero()
        users.append(UserCheck(
            user=k,
            alpha_zero=zero,
            closed_rank=rank(submatrix_rows(s.H, nb + [k - 1])),
            closed_expected=d,
            open_rank=rank(submatrix_rows(s.H, nb)),
            open_expected=d - 1 if zero else d,
        ))
    return VerificationReport(
        recovery_ok=recovery_ok,
        kernel_dim=s.K - rank(A),
        rank_H=rank(s.H),
        d=d,
        users=tuple(users),
    )


def neutralization_residuals(s: Scheme) -> list[list[FieldElement]]:
    """Row form alpha_k H[k] + sum_{i in N_k} H[i] for every user (all zero when valid)."""
    out = []
    for k in s.topology.vertices():
        acc = [s.alpha[k - 1] * h for h in s.H.row(k - 1)]
        for i in s.topology.neighbors(k):
            acc = [a + h for a, h in zip(acc, s.H.row(i - 1))]
        out.append(acc)
    return out


def _checked(s: Scheme, what: str) -> Scheme:
    report = verify(s)
    if not report.passed:
        raise ConstructionFailed(f"{what} failed verification: {'; '.join(report.failures())}", report)
    return s


# ---------------------------------------------------------------------------
# explicit constructions
# ---------------------------------------------------------------------------

def ring_field(K: int) -> FieldSpec:
    return field_make(next_prime_congruent_one(K))


def build_ring(K: int) -> Scheme:
    """Uniform alpha = -(w + 1/w) with H columns (w^i) and (w^-i), w a primitive K-th root."""
    t = make_ring(K)
    F = ring_field(K)
    w = find_root_of_unity(F, K)
    a = -(w + w.inverse())
    H = FieldMatrix.from_values(F, [[w**i, w ** (-i)] for i in range(K)])
    return _checked(Scheme(t, F, (a,) * K, H), f"ring K={K}")


@dataclass(frozen=True)
class PrismParameters:
    p: int
    omega: FieldElement
    lam1: FieldElement
    disc: FieldElement
    spec: FieldSpec
    sqrt_disc: FieldElement


def prism_parameters(M: int) -> PrismParameters:
    """Field choice for the prism: smallest p = 1 mod M, extended when lam1(lam1-4) is a non-square."""
    if M < 3:
        raise TooSmall(f"a prism needs M >= 3, got {M}")
    p = next_prime_congruent_one(M)
    Fp = field_make(p)
    w = find_root_of_unity(Fp, M)
    lam1 = w + w.inverse()
    disc = lam1 * (lam1 - 4)
    r = sqrt(Fp, disc)
    if r is not None:
        F = Fp
    else:
        F = field_make(p, disc.a)
        r = sqrt(F, F(disc.a))
    return PrismParameters(p, w, lam1, disc, F, r)


def build_prism(M: int) -> Scheme:
    """Blockwise alpha on the two cycles, H columns built from v_t for t in {0, 1, M-1}."""
    t = make_prism(M)
    par = prism_parameters(M)
    F = par.spec
    w = F(par.omega.a)
    lam1 = F(par.lam1.a)
    half = F(2).inverse()
    roots = ((-(lam1 + 2) + par.sqrt_disc) * half, (-(lam1 + 2) - par.sqrt_disc) * half)
    report = None
    for a1, a2 in (roots, roots[::-1]):
        cols = []
        for tt in (0, 1, M - 1):
            v = [w ** (tt * i) for i in range(M)]
            lam_t = w**tt + w ** (-tt)
            c = -(a1 + lam_t)
            cols.append(v + [c * x for x in v])
        H = FieldMatrix.from_values(F, list(zip(*cols)))
        s = Scheme(t, F, (a1,) * M + (a2,) * M, H)
        report = verify(s)
        if report.passed:
            return s
    raise ConstructionFailed(f"prism M={M} failed verification: {'; '.join(report.failures())}", report)


def build_complete(K: int) -> Scheme:
    """Over F_2: alpha all ones, H = [I_{K-1}; all-ones row]."""
    t = make_complete(K)
    F = field_make(2)
    rows = [[1 if i == j else 0 for j in range(K - 1)] for i in range(K - 1)]
    rows.append([1] * (K - 1))
    return _checked(Scheme(t, F, (F.one,) * K, FieldMatrix.from_values(F, rows)), f"complete K={K}")


def prism6_f5_fixture() -> Scheme:
    """The hand-designed 6-user prism scheme over F_5 with alpha = 2 everywhere."""
    F = field_make(5)
    cols = [
        (1, 0, 0, -2, -1, -1),
        (0, 1, 0, -1, -2, -1),
        (0, 0, 1, -1, -1, -2),
    ]
    return Scheme(make_prism(3), F, (F(2),) * 6, FieldMatrix.from_values(F, list(zip(*cols))))


BUILDERS = {"ring": build_ring, "prism": build_prism, "complete": build_complete}


def from_kernel(t: Topology, spec: FieldSpec, alpha: Sequence) -> Scheme:
    """H = first d canonical basis vectors of ker(diag(alpha) + A)."""
    d = t.degree
    if d is None:
        raise NotRegular("from_kernel needs a regular graph")
    basis = kernel_basis(dmam(t, spec, alpha))
    if len(basis) < d:
        raise KernelTooSmall(f"kernel dimension {len(basis)} < d = {d}", len(basis), d)
    s = Scheme(t, spec, tuple(alpha), FieldMatrix.hstack(basis[:d]))
    report = verify(s)
    if not report.passed:
        raise RankConditionFailed(f"rank conditions fail: {'; '.join(report.failures())}", report)
    return s


# ---------------------------------------------------------------------------
# modulation search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchResult:
    alpha: tuple
    kernel_dim: int
    maximizers: tuple
    evaluated: int
    strategy: str

    def feasible(self, d: int) -> bool:
        return self.kernel_dim >= d

    def to_dict(self, d: Optional[int] = None) -> dict:
        out = {
            "strategy": self.strategy,
            "alpha": [a.to_json() for a in self.alpha],
            "kernel_dim": self.kernel_dim,
            "evaluated": self.evaluated,
            "maximizers": [[a.to_json() for a in m] for m in self.maximizers],
        }
        if d is not None:
            out["d"] = d
            out["feasible"] = self.feasible(d)
        return out


def _candidates(t: Topology, q: int, strategy: str, blocks):
    K = t.K
    if strategy == "uniform":
        return q, ((a,) * K for a in range(q))
    if strategy == "exhaustive":
        return q**K, itertools.product(range(q), repeat=K)
    if strategy == "blockwise":
        if not blocks:
            raise ValueError("blockwise search needs a block partition")
        seen = sorted(v for b in blocks for v in b)
        if seen != list(range(1, K + 1)):
            raise ValueError("blocks must partition the vertices 1..K")
        owner = {v: bi for bi, b in enumerate(blocks) for v in b}

        def gen():
            for vals in itertools.product(range(q), repeat=len(blocks)):
                yield tuple(vals[owner[v]] for v in range(1, K + 1))

        return q ** len(blocks), gen()
    raise ValueError(f"unknown strategy {strategy!r}")


def search_modulation(
    t: Topology,
    spec: FieldSpec,
    strategy: str = "uniform",
    blocks: Optional[Sequence[Sequence[int]]] = None,
    cap: int = 10**6,
    batch: int = 4096,
) -> SearchResult:
    """Maximize dim ker(diag(alpha) + A) over the candidate set of ``strategy``."""
    total, cands = _candidates(t, spec.q, strategy, blocks)
    if total > cap:
        raise BudgetExceeded(f"{total} candidates exceed the cap of {cap}")
    A = t.adjacency(spec).codes
    diag = np.arange(t.K)
    best = -1
    maximizers: list[tuple] = []
    evaluated = 0
    while True:
        chunk = list(itertools.islice(cands, batch))
        if not chunk:
            break
        codes = np.array(chunk, dtype=np.int64)
        mats = np.repeat(A[None], len(chunk), axis=0)
        mats[:, diag, diag] = codes
        dims = t.K - _kernels.batch_rank(mats, spec.p, spec.degree, spec.delta_code)
        evaluated += len(chunk)
        top = int(dims.max())
        if top > best:
            best, maximizers = top, []
        if top == best:
            maximizers.extend(tuple(int(v) for v in row) for row in codes[dims == best])
    maximizers.sort()
    to_el = lambda m: tuple(spec.from_code(c) for c in m)  # noqa: E731
    return SearchResult(
        alpha=to_el(maximizers[0]),
        kernel_dim=best,
        maximizers=tuple(to_el(m) for m in maximizers),
        evaluated=evaluated,
        strategy=strategy,
    )
