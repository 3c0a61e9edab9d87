"""Dense linear algebra over a :class:`~topsa.gf.FieldSpec`.

Matrices store element codes in an int64 numpy array; all row operations are
vectorized code arithmetic from :mod:`topsa._arith`. Indices are 0-based.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from . import _arith
from .errors import BadIndex, FieldMismatch, FormatError, ShapeMismatch
from .gf import FieldElement, FieldSpec


class FieldMatrix:
    """Immutable rows x cols matrix over ``spec``."""

    __slots__ = ("spec", "_data")

    def __init__(self, spec: FieldSpec, data):
        arr = np.array(data, dtype=np.int64, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ShapeMismatch(f"expected a 2-d array, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= spec.q):
            raise ValueError("entry codes out of range for the field")
        arr.setflags(write=False)
        self.spec = spec
        self._data = arr

    @classmethod
    def from_values(cls, spec: FieldSpec, rows: Iterable[Iterable]) -> "FieldMatrix":
        """Build from nested values (ints, (a, b) pairs or FieldElements)."""
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        codes = np.zeros((len(rows), ncols), dtype=np.int64)
        for i, r in enumerate(rows):
            if len(r) != ncols:
                raise ShapeMismatch("ragged rows")
            for j, v in enumerate(r):
                codes[i, j] = spec.coerce(v).code
        return cls(spec, codes)

    @classmethod
    def zeros(cls, spec: FieldSpec, rows: int, cols: int) -> "FieldMatrix":
        return cls(spec, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, spec: FieldSpec, n: int) -> "FieldMatrix":
        return cls(spec, np.eye(n, dtype=np.int64) * spec.one.code)

    @classmethod
    def column(cls, spec: FieldSpec, values: Sequence) -> "FieldMatrix":
        return cls.from_values(spec, [[v] for v in values])

    @classmethod
    def hstack(cls, cols: Sequence["FieldMatrix"]) -> "FieldMatrix":
        if not cols:
            raise ShapeMismatch("nothing to stack")
        spec = cols[0].spec
        for c in cols:
            if c.spec != spec:
                raise FieldMismatch("cannot stack matrices over different fields")
        return cls(spec, np.hstack([c.codes for c in cols]))

    @property
    def codes(self) -> np.ndarray:
        return self._data

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def __getitem__(self, idx) -> FieldElement:
        i, j = idx
        return self.spec.from_code(self._data[i, j])

    def row(self, i: int) -> list[FieldElement]:
        return [self.spec.from_code(c) for c in self._data[i]]

    def col(self, j: int) -> list[FieldElement]:
        return [self.spec.from_code(c) for c in self._data[:, j]]

    def tolist(self) -> list[list[FieldElement]]:
        return [self.row(i) for i in range(self.rows)]

    def is_zero(self) -> bool:
        return not self._data.any()

    @property
    def T(self) -> "FieldMatrix":
        return FieldMatrix(self.spec, self._data.T)

    def __eq__(self, other):
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.spec == other.spec and self.shape == other.shape and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash((self.spec, self.shape, self._data.tobytes()))

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        return mat_mat(self, other)

    def __repr__(self):
        body = "\n ".join(str([e.to_json() if self.spec.degree == 2 else e.a for e in r]) for r in self.tolist())
        return f"FieldMatrix({self.spec}, {self.rows}x{self.cols}\n [{body}])"

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "data": [self.spec.from_code(c).to_json() for c in self._data.ravel()],
        }

    @classmethod
    def from_dict(cls, spec: FieldSpec, data: dict) -> "FieldMatrix":
        try:
            r, c, flat = int(data["rows"]), int(data["cols"]), data["data"]
            if len(flat) != r * c:
                raise FormatError(f"matrix data has {len(flat)} entries, expected {r * c}")
            codes = np.array([spec.coerce(tuple(v)).code for v in flat], dtype=np.int64)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"malformed matrix: {exc}") from exc
        return cls(spec, codes.reshape(r, c))


def _ops(spec: FieldSpec):
    return spec.p, spec.degree, spec.delta_code


def rref(m: FieldMatrix) -> tuple[FieldMatrix, list[int]]:
    """Gauss-Jordan elimination; pivot is the first nonzero entry scanning down."""
    p, deg, delta = _ops(m.spec)
    a = m.codes.copy()
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        scale = _arith.inv(int(a[r, c]), p, deg, delta)
        a[r] = _arith.mul(a[r], scale, p, deg, delta)
        factors = a[:, c].copy()
        factors[r] = 0
        a = _arith.sub(a, _arith.mul(factors[:, None], a[r][None, :], p, deg, delta), p, deg)
        pivots.append(c)
        r += 1
    return FieldMatrix(m.spec, a), pivots


def rank(m: FieldMatrix) -> int:
    return len(rref(m)[1])


def kernel_basis(m: FieldMatrix) -> list[FieldMatrix]:
    """Canonical basis of {x : m x = 0}: one vector per free column, in increasing order."""
    p, deg, _ = _ops(m.spec)
    r, pivots = rref(m)
    red = r.codes
    one = _arith.one(p, deg)
    basis = []
    for f in (c for c in range(m.cols) if c not in set(pivots)):
        v = np.zeros(m.cols, dtype=np.int64)
        v[f] = one
        for i, pc in enumerate(pivots):
            v[pc] = _arith.neg(red[i, f], p, deg)
        basis.append(FieldMatrix(m.spec, v.reshape(-1, 1)))
    return basis


def kernel_dim(m: FieldMatrix) -> int:
    return m.cols - rank(m)


def submatrix_rows(m: FieldMatrix, rows: Iterable[int]) -> FieldMatrix:
    idx = sorted(set(int(i) for i in rows))
    for i in idx:
        if not 0 <= i < m.rows:
            raise BadIndex(f"row {i} outside 0..{m.rows - 1}")
    return FieldMatrix(m.spec, m.codes[idx].reshape(len(idx), m.cols))


def mat_mat(m: FieldMatrix, x: FieldMatrix) -> FieldMatrix:
    if m.spec != x.spec:
        raise FieldMismatch("operands live in different fields")
    if m.cols != x.rows:
        raise ShapeMismatch(f"cannot multiply {m.shape} by {x.shape}")
    p, deg, delta = _ops(m.spec)
    out = np.zeros((m.rows, x.cols), dtype=np.int64)
    for j in range(m.cols):
        out = _arith.add(out, _arith.mul(m.codes[:, j][:, None], x.codes[j][None, :], p, deg, delta), p, deg)
    return FieldMatrix(m.spec, out)


def mat_vec(m: FieldMatrix, x: Sequence) -> list[FieldElement]:
    """Product of ``m`` with a vector given as a sequence of field values."""
    col = x if isinstance(x, FieldMatrix) else FieldMatrix.column(m.spec, x)
    if col.cols != 1:
        raise ShapeMismatch("expected a column vector")
    return mat_mat(m, col).col(0)
