"""Enumeration kernels behind the engine, audit and search modules.

Each kernel has two implementations over integer element codes:

* ``*_jit``: explicit loops compiled with ``numba.njit``;
* ``*_numpy``: a vectorized, chunked numpy formulation.

The public name (without suffix) dispatches to one of them. The compiled path is
used when numba imports and the environment variable ``TOPSA_JIT`` is not set to
``0``/``false``/``no``. Both paths are pure and return identical results; the test
suite checks that agreement directly.

Shared argument conventions: ``H`` is the (K, d) key matrix as codes, ``alpha``
the length-K modulation codes, neighborhoods are in CSR form (``ptr``, ``idx``,
0-based, each row sorted), and ``(p, deg, delta)`` describe the field.
"""

from __future__ import annotations

import os
import types

import numpy as np

from . import _arith

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_jit() -> bool:
    return os.environ.get("TOPSA_JIT", "1").strip().lower() not in ("0", "false", "no", "off")


_USE_JIT = HAVE_NUMBA and _env_jit()


def backend() -> str:
    return "numba" if _USE_JIT else "numpy"


def set_backend(name: str) -> None:
    """Switch the dispatch target at runtime ("numba" or "numpy")."""
    global _USE_JIT
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _USE_JIT = name == "numba"


if HAVE_NUMBA:
    _njit = numba.njit(cache=True, nogil=True)
    # _arith helpers call each other by global name; compile copies whose
    # globals resolve to the compiled siblings.
    _jit_ns: dict = {"__name__": __name__}
    for _name in ("add", "neg", "sub", "mul", "power", "inv"):
        _f = getattr(_arith, _name)
        _jit_ns[_name] = _njit(types.FunctionType(_f.__code__, _jit_ns, _name, _f.__defaults__))
    _add, _neg, _sub, _mul, _power, _inv = (
        _jit_ns[n] for n in ("add", "neg", "sub", "mul", "power", "inv"))
else:  # pragma: no cover
    def _njit(f):
        return f

    _add, _neg, _sub, _mul, _power, _inv = (
        _arith.add, _arith.neg, _arith.sub, _arith.mul, _arith.power, _arith.inv)


def all_vectors(q: int, n: int) -> np.ndarray:
    """All vectors of F_q^n as code rows, in row-major (canonical) order."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grid = np.indices((q,) * n, dtype=np.int64).reshape(n, -1)
    return np.ascontiguousarray(grid.T)


def key_table(H: np.ndarray, p: int, deg: int, delta: int) -> np.ndarray:
    """Z = H N for every source key N, shape (q^d, K), rows in canonical N order."""
    q = p**deg
    K, d = H.shape
    N = all_vectors(q, d)
    Z = np.zeros((N.shape[0], K), dtype=np.int64)
    for j in range(d):
        Z = _arith.add(Z, _arith.mul(N[:, j][:, None], H[:, j][None, :], p, deg, delta), p, deg)
    return Z


def _block_rows(q: int, K: int, nkeys: int, width: int) -> int:
    target = 1 << 22
    return int(max(1, min(q**K, target // max(1, nkeys * width))))


def _w_block(start: int, count: int, q: int, K: int) -> np.ndarray:
    s = np.arange(start, start + count, dtype=np.int64)
    W = np.empty((count, K), dtype=np.int64)
    for j in range(K - 1, -1, -1):
        W[:, j] = s % q
        s //= q
    return W


# ---------------------------------------------------------------------------
# exhaustive recovery
# ---------------------------------------------------------------------------

def _recovery_failures_numpy(H, alpha, ptr, idx, p, deg, delta):
    q = p**deg
    K, d = H.shape
    Z = key_table(H, p, deg, delta)
    nkeys = Z.shape[0]
    own = np.stack([_arith.mul(alpha[k], Z[:, k], p, deg, delta) for k in range(K)], axis=1)
    fails = np.zeros(K, dtype=np.int64)
    total = q**K
    step = _block_rows(q, K, nkeys, K)
    for start in range(0, total, step):
        count = min(step, total - start)
        W = _w_block(start, count, q, K)
        X = _arith.add(W[:, None, :], Z[None, :, :], p, deg)
        for k in range(K):
            nb = idx[ptr[k]:ptr[k + 1]]
            rec = own[None, :, k]
            expected = np.zeros(count, dtype=np.int64)
            for i in nb:
                rec = _arith.add(rec, X[:, :, i], p, deg)
                expected = _arith.add(expected, W[:, i], p, deg)
            fails[k] += np.count_nonzero(rec != expected[:, None])
    return fails


@_njit
def _recovery_failures_jit(H, alpha, ptr, idx, p, deg, delta, Z):
    q = p**deg
    K = H.shape[0]
    nkeys = Z.shape[0]
    fails = np.zeros(K, dtype=np.int64)
    own = np.empty((nkeys, K), dtype=np.int64)
    for n in range(nkeys):
        for k in range(K):
            own[n, k] = _mul(alpha[k], Z[n, k], p, deg, delta)
    W = np.zeros(K, dtype=np.int64)
    X = np.empty(K, dtype=np.int64)
    expected = np.empty(K, dtype=np.int64)
    total = q**K
    for _ in range(total):
        for k in range(K):
            e = 0
            for t in range(ptr[k], ptr[k + 1]):
                e = _add(e, W[idx[t]], p, deg)
            expected[k] = e
        for n in range(nkeys):
            for i in range(K):
                X[i] = _add(W[i], Z[n, i], p, deg)
            for k in range(K):
                r = own[n, k]
                for t in range(ptr[k], ptr[k + 1]):
                    r = _add(r, X[idx[t]], p, deg)
                if r != expected[k]:
                    fails[k] += 1
        # odometer over W, last coordinate fastest
        j = K - 1
        while j >= 0:
            W[j] += 1
            if W[j] < q:
                break
            W[j] = 0
            j -= 1
    return fails


def recovery_failures(H, alpha, ptr, idx, p, deg, delta) -> np.ndarray:
    """Per-user count of (W, N) states where recovery differs from the neighborhood sum."""
    if _USE_JIT:
        return recovery_failures_jit(H, alpha, ptr, idx, p, deg, delta)
    return _recovery_failures_numpy(H, alpha, ptr, idx, p, deg, delta)


def recovery_failures_jit(H, alpha, ptr, idx, p, deg, delta):
    Z = key_table(H, p, deg, delta)
    return _recovery_failures_jit(H, alpha, ptr, idx, p, deg, delta, Z)


recovery_failures_numpy = _recovery_failures_numpy


# ---------------------------------------------------------------------------
# conditional mutual information counts
# ---------------------------------------------------------------------------
# For user k the conditioning class is c = (S, W_k, Z_k) (or (S, Z_k) when
# own_input is False), where S is the neighborhood input sum; x indexes the
# observed messages X_{N_k} and w the neighborhood inputs W_{N_k}, each as a
# base-q number over the sorted neighbor list.

def mi_shape(q: int, d: int, own_input: bool) -> tuple[int, int, int]:
    nc = q**3 if own_input else q**2
    return nc, q**d, q**d


def _mi_flat_blocks(H, k, nb, p, deg, delta, own_input, swap):
    """Yield flat joint-cell indices for consecutive blocks of W (all N per W)."""
    q = p**deg
    K = H.shape[0]
    nb = np.asarray(nb, dtype=np.int64)
    Z = key_table(H, p, deg, delta)
    nkeys = Z.shape[0]
    _, nx, nw = mi_shape(q, len(nb), own_input)
    weights = q ** np.arange(len(nb) - 1, -1, -1, dtype=np.int64)
    total = q**K
    step = _block_rows(q, K, nkeys, len(nb) + 2)
    zk = Z[:, k]
    zn = Z[:, nb]
    for start in range(0, total, step):
        count = min(step, total - start)
        W = _w_block(start, count, q, K)
        Wn = W[:, nb]
        s = np.zeros(count, dtype=np.int64)
        for j in range(len(nb)):
            s = _arith.add(s, Wn[:, j], p, deg)
        w_idx = Wn @ weights
        c_base = s * q + W[:, k] if own_input else s
        c_idx = c_base[:, None] * q + zk[None, :]
        x_idx = _arith.add(Wn[:, None, :], zn[None, :, :], p, deg) @ weights
        if swap:
            yield ((c_idx * nw + w_idx[:, None]) * nx + x_idx).ravel()
        else:
            yield ((c_idx * nx + x_idx) * nw + w_idx[:, None]).ravel()


def _mi_counts_numpy(H, k, nb, p, deg, delta, own_input, swap):
    q = p**deg
    shape = mi_shape(q, len(nb), own_input)
    counts = np.zeros(shape[0] * shape[1] * shape[2], dtype=np.int64)
    for flat in _mi_flat_blocks(H, k, nb, p, deg, delta, own_input, swap):
        counts += np.bincount(flat, minlength=counts.size)
    return counts.reshape(shape)


def mi_sparse_counts(H, k, nb, p, deg, delta, own_input=True, swap=False):
    """Sorted (cell, count) pairs of the nonzero joint cells; for cell spaces too large to hold densely."""
    keys = np.zeros(0, dtype=np.int64)
    counts = np.zeros(0, dtype=np.int64)
    for flat in _mi_flat_blocks(H, k, nb, p, deg, delta, own_input, swap):
        u, c = np.unique(flat, return_counts=True)
        keys = np.concatenate([keys, u])
        counts = np.concatenate([counts, c])
        keys, inv = np.unique(keys, return_inverse=True)
        counts = np.bincount(inv, weights=counts, minlength=keys.size).astype(np.int64)
    return keys, counts


def sparse_factorization_witness(keys, counts, nx, nw) -> np.ndarray:
    """Sparse counterpart of :func:`factorization_witness`.

    Only nonzero cells are tested: if every one satisfies n(c,x,w) n(c) =
    n(c,x) n(c,w), the products over those cells already sum to n(c), so no
    empty cell can carry positive mass in the product distribution.
    """
    c = keys // (nx * nw)
    cx = keys // nw
    cw = c * nw + keys % nw

    def tally(group):
        u, inv = np.unique(group, return_inverse=True)
        return np.bincount(inv, weights=counts, minlength=u.size).astype(np.int64)[inv]

    bad = counts * tally(c) != tally(cx) * tally(cw)
    if not bad.any():
        return np.full(3, -1, dtype=np.int64)
    key = int(keys[np.argmax(bad)])
    return np.array([key // (nx * nw), (key // nw) % nx, key % nw], dtype=np.int64)


@_njit
def _mi_counts_jit(Z, K, k, nb, p, deg, own_input, swap, counts):
    q = p**deg
    nkeys = Z.shape[0]
    m = nb.shape[0]
    W = np.zeros(K, dtype=np.int64)
    total = q**K
    for _ in range(total):
        s = 0
        w_idx = 0
        for j in range(m):
            s = _add(s, W[nb[j]], p, deg)
            w_idx = w_idx * q + W[nb[j]]
        c_base = s * q + W[k] if own_input else s
        for n in range(nkeys):
            c = c_base * q + Z[n, k]
            x_idx = 0
            for j in range(m):
                x_idx = x_idx * q + _add(W[nb[j]], Z[n, nb[j]], p, deg)
            if swap:
                counts[c, w_idx, x_idx] += 1
            else:
                counts[c, x_idx, w_idx] += 1
        j = K - 1
        while j >= 0:
            W[j] += 1
            if W[j] < q:
                break
            W[j] = 0
            j -= 1


def mi_counts_jit(H, k, nb, p, deg, delta, own_input=True, swap=False):
    q = p**deg
    K = H.shape[0]
    nb = np.asarray(nb, dtype=np.int64)
    Z = key_table(H, p, deg, delta)
    counts = np.zeros(mi_shape(q, len(nb), own_input), dtype=np.int64)
    _mi_counts_jit(Z, K, k, nb, p, deg, own_input, swap, counts)
    return counts


mi_counts_numpy = _mi_counts_numpy


def mi_counts(H, k, nb, p, deg, delta, own_input=True, swap=False) -> np.ndarray:
    """Dense joint counts n[c, x, w] over all q^(K+d) states (x/w exchanged when ``swap``)."""
    if _USE_JIT:
        return mi_counts_jit(H, k, nb, p, deg, delta, own_input, swap)
    return _mi_counts_numpy(H, k, nb, p, deg, delta, own_input, swap)


@_njit
def _factorization_witness_jit(counts):
    nc, nx, nw = counts.shape
    out = np.full(3, -1, dtype=np.int64)
    row = np.empty(nx, dtype=np.int64)
    col = np.empty(nw, dtype=np.int64)
    for c in range(nc):
        tot = 0
        for x in range(nx):
            r = 0
            for w in range(nw):
                r += counts[c, x, w]
            row[x] = r
            tot += r
        if tot == 0:
            continue
        for w in range(nw):
            s = 0
            for x in range(nx):
                s += counts[c, x, w]
            col[w] = s
        for x in range(nx):
            for w in range(nw):
                if counts[c, x, w] * tot != row[x] * col[w]:
                    out[0] = c
                    out[1] = x
                    out[2] = w
                    return out
    return out


def _factorization_witness_numpy(counts):
    row = counts.sum(axis=2)
    col = counts.sum(axis=1)
    tot = row.sum(axis=1)
    nc = counts.shape[0]
    step = max(1, (1 << 22) // max(1, counts.shape[1] * counts.shape[2]))
    for c0 in range(0, nc, step):
        sl = slice(c0, min(nc, c0 + step))
        bad = counts[sl] * tot[sl, None, None] != row[sl, :, None] * col[sl, None, :]
        if bad.any():
            c, x, w = np.unravel_index(int(np.argmax(bad)), bad.shape)
            return np.array([c0 + c, x, w], dtype=np.int64)
    return np.full(3, -1, dtype=np.int64)


def factorization_witness(counts) -> np.ndarray:
    """First cell (c, x, w), canonical order, where n(c,x,w) n(c) != n(c,x) n(c,w); else [-1]*3."""
    if _USE_JIT:
        return _factorization_witness_jit(counts)
    return _factorization_witness_numpy(counts)


factorization_witness_jit = _factorization_witness_jit
factorization_witness_numpy = _factorization_witness_numpy


# ---------------------------------------------------------------------------
# key outcome distribution (entropy oracle)
# ---------------------------------------------------------------------------

@_njit
def _key_outcome_codes_jit(Hs, p, deg, delta):
    q = p**deg
    m, d = Hs.shape
    out = np.empty(q**d, dtype=np.int64)
    N = np.zeros(d, dtype=np.int64)
    for t in range(q**d):
        code = 0
        for i in range(m):
            z = 0
            for j in range(d):
                z = _add(z, _mul(Hs[i, j], N[j], p, deg, delta), p, deg)
            code = code * q + z
        out[t] = code
        j = d - 1
        while j >= 0:
            N[j] += 1
            if N[j] < q:
                break
            N[j] = 0
            j -= 1
    return out


def _key_outcome_codes_numpy(Hs, p, deg, delta):
    q = p**deg
    m = Hs.shape[0]
    Z = key_table(Hs, p, deg, delta)
    weights = q ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return Z @ weights


def _key_outcome_counts_jit(Hs, p, deg, delta):
    return np.unique(_key_outcome_codes_jit(Hs, p, deg, delta), return_counts=True)[1]


def _key_outcome_counts_numpy(Hs, p, deg, delta):
    return np.unique(_key_outcome_codes_numpy(Hs, p, deg, delta), return_counts=True)[1]


def key_outcome_counts(Hs, p, deg, delta) -> np.ndarray:
    """Counts of each distinct Z_S = Hs N over all q^d source keys, in outcome order."""
    Hs = np.ascontiguousarray(Hs, dtype=np.int64)
    if Hs.shape[0] * np.log2(float(p**deg)) >= 62:
        # outcome codes would overflow: fall back to row-wise uniqueness
        Z = key_table(Hs, p, deg, delta)
        return np.unique(Z, axis=0, return_counts=True)[1]
    if _USE_JIT:
        return _key_outcome_counts_jit(Hs, p, deg, delta)
    return _key_outcome_counts_numpy(Hs, p, deg, delta)


key_outcome_counts_jit = _key_outcome_counts_jit
key_outcome_counts_numpy = _key_outcome_counts_numpy


# ---------------------------------------------------------------------------
# batched rank (modulation search)
# ---------------------------------------------------------------------------

@_njit
def _batch_rank_jit(mats, p, deg, delta):
    B, n, m = mats.shape
    out = np.zeros(B, dtype=np.int64)
    a = np.empty((n, m), dtype=np.int64)
    for b in range(B):
        for i in range(n):
            for j in range(m):
                a[i, j] = mats[b, i, j]
        r = 0
        for c in range(m):
            if r == n:
                break
            piv = -1
            for i in range(r, n):
                if a[i, c] != 0:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != r:
                for j in range(m):
                    t = a[r, j]
                    a[r, j] = a[piv, j]
                    a[piv, j] = t
            s = _inv(a[r, c], p, deg, delta)
            for j in range(m):
                a[r, j] = _mul(a[r, j], s, p, deg, delta)
            for i in range(r + 1, n):
                f = a[i, c]
                if f != 0:
                    for j in range(m):
                        a[i, j] = _sub(a[i, j], _mul(f, a[r, j], p, deg, delta), p, deg)
            r += 1
        out[b] = r
    return out


def _batch_rank_numpy(mats, p, deg, delta):
    a = np.array(mats, dtype=np.int64, copy=True)
    B, n, m = a.shape
    rank = np.zeros(B, dtype=np.int64)
    rows = np.arange(n)
    for c in range(m):
        cand = (a[:, :, c] != 0) & (rows[None, :] >= rank[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        b = np.flatnonzero(has)
        r = rank[b]
        piv = np.argmax(cand[b], axis=1)
        top = a[b, r].copy()
        a[b, r] = a[b, piv]
        a[b, piv] = top
        scale = _arith.inv(a[b, r, c], p, deg, delta)
        a[b, r] = _arith.mul(a[b, r], scale[:, None], p, deg, delta)
        f = a[b, :, c].copy()
        f[rows[None, :] <= r[:, None]] = 0
        a[b] = _arith.sub(a[b], _arith.mul(f[:, :, None], a[b, r][:, None, :], p, deg, delta), p, deg)
        rank[b] += 1
    return rank


def batch_rank(mats, p, deg, delta) -> np.ndarray:
    """Rank of each matrix in a (B, n, m) stack of codes."""
    mats = np.ascontiguousarray(mats, dtype=np.int64)
    if _USE_JIT:
        return _batch_rank_jit(mats, p, deg, delta)
    return _batch_rank_numpy(mats, p, deg, delta)


batch_rank_jit = _batch_rank_jit
batch_rank_numpy = _batch_rank_numpy
