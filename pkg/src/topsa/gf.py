"""Exact arithmetic in prime fields F_p and quadratic extensions F_p[x]/(x^2 - delta).

Elements carry a reference to their :class:`FieldSpec`; mixing elements of two
different fields raises :class:`~topsa.errors.FieldMismatch`. Elements are
ordered canonically by the pair ``(a, b)``, which is also the order of their
integer codes (see :mod:`topsa._arith`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from . import _arith
from .errors import DeltaIsSquare, DivisionByZero, FieldMismatch, NoSuchRoot, NotPrime

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic primality test (Miller-Rabin with fixed bases, exact below 3.3e24)."""
    if n < 2:
        return False
    for b in _MR_BASES:
        if n % b == 0:
            return n == b
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime_congruent_one(m: int, start: int = 2) -> int:
    """Smallest prime p >= start with p = 1 (mod m)."""
    p = max(start, 2)
    if m > 1:
        r = (p - 1) % m
        if r:
            p += m - r
    while not is_prime(p):
        p += m if m > 1 else 1
    return p


def prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def _legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def _tonelli_shanks(a: int, p: int) -> Optional[int]:
    a %= p
    if a == 0 or p == 2:
        return a
    if _legendre(a, p) != 1:
        return None
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while _legendre(z, p) != -1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


@dataclass(frozen=True)
class FieldSpec:
    """F_p (degree 1) or F_p[x]/(x^2 - delta) (degree 2)."""

    p: int
    degree: int = 1
    delta: Optional[int] = None

    def __post_init__(self):
        if not is_prime(self.p):
            raise NotPrime(f"{self.p} is not prime")
        if self.degree == 1:
            if self.delta is not None:
                raise ValueError("delta is only meaningful for degree 2")
        elif self.degree == 2:
            if self.p == 2:
                # every element of F_2 is a square; the construction also divides by 2
                raise DeltaIsSquare("quadratic extensions need odd characteristic")
            if self.delta is None:
                raise ValueError("degree 2 requires delta")
            object.__setattr__(self, "delta", self.delta % self.p)
            if self.delta == 0 or _legendre(self.delta, self.p) == 1:
                raise DeltaIsSquare(f"{self.delta} is a square mod {self.p}")
        else:
            raise ValueError(f"unsupported degree {self.degree}")

    @property
    def q(self) -> int:
        return self.p**self.degree

    @property
    def delta_code(self) -> int:
        return self.delta or 0

    def __call__(self, a: int, b: int = 0) -> "FieldElement":
        return FieldElement(a, b, self)

    @property
    def zero(self) -> "FieldElement":
        return FieldElement(0, 0, self)

    @property
    def one(self) -> "FieldElement":
        return FieldElement(1, 0, self)

    def from_code(self, code: int) -> "FieldElement":
        code = int(code)
        if not 0 <= code < self.q:
            raise ValueError(f"code {code} out of range for field of order {self.q}")
        if self.degree == 1:
            return FieldElement(code, 0, self)
        return FieldElement(code // self.p, code % self.p, self)

    def elements(self) -> Iterator["FieldElement"]:
        """All elements in canonical (a, b) order."""
        for code in range(self.q):
            yield self.from_code(code)

    def coerce(self, value) -> "FieldElement":
        if isinstance(value, FieldElement):
            if value.spec != self:
                raise FieldMismatch(f"element of {value.spec} used in {self}")
            return value
        if isinstance(value, (list, tuple)):
            a, b = value
            if self.degree == 1 and b % self.p:
                raise ValueError(f"nonzero extension part {b} in a prime field")
            return FieldElement(a, b, self)
        return FieldElement(int(value), 0, self)

    def to_dict(self) -> dict:
        return {"p": self.p, "degree": self.degree, "delta": self.delta}

    @classmethod
    def from_dict(cls, data: dict) -> "FieldSpec":
        return cls(int(data["p"]), int(data.get("degree", 1)), data.get("delta"))

    def __str__(self):
        if self.degree == 1:
            return f"F_{self.p}"
        return f"F_{self.q} = F_{self.p}[x]/(x^2-{self.delta})"


class FieldElement:
    """Immutable element a + b*x of a :class:`FieldSpec`."""

    __slots__ = ("a", "b", "spec")

    def __init__(self, a: int, b: int, spec: FieldSpec):
        p = spec.p
        object.__setattr__(self, "a", int(a) % p)
        object.__setattr__(self, "b", int(b) % p if spec.degree == 2 else 0)
        object.__setattr__(self, "spec", spec)
        if spec.degree == 1 and int(b) % p:
            raise ValueError("prime field elements have no extension part")

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    @property
    def code(self) -> int:
        return self.a * self.spec.p + self.b if self.spec.degree == 2 else self.a

    def _other(self, other) -> "FieldElement":
        return self.spec.coerce(other)

    def _args(self):
        s = self.spec
        return s.p, s.degree

    def __add__(self, other):
        o = self._other(other)
        return self.spec.from_code(_arith.add(self.code, o.code, *self._args()))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        return self.spec.from_code(_arith.sub(self.code, o.code, *self._args()))

    def __rsub__(self, other):
        return self._other(other) - self

    def __neg__(self):
        return self.spec.from_code(_arith.neg(self.code, *self._args()))

    def __mul__(self, other):
        o = self._other(other)
        s = self.spec
        return s.from_code(_arith.mul(self.code, o.code, s.p, s.degree, s.delta_code))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise DivisionByZero("zero has no multiplicative inverse")
        s = self.spec
        return s.from_code(_arith.inv(self.code, s.p, s.degree, s.delta_code))

    def __truediv__(self, other):
        return self * self._other(other).inverse()

    def __rtruediv__(self, other):
        return self._other(other) * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        s = self.spec
        return s.from_code(_arith.power(self.code, e, s.p, s.degree, s.delta_code))

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.spec == other.spec and self.a == other.a and self.b == other.b
        if isinstance(other, int):
            return self.b == 0 and self.a == other % self.spec.p
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.spec))

    def __lt__(self, other: "FieldElement"):
        return (self.a, self.b) < (self._other(other).a, self._other(other).b)

    def to_json(self) -> list[int]:
        return [self.a, self.b]

    def __repr__(self):
        if self.spec.degree == 1:
            return f"{self.a} (mod {self.spec.p})"
        return f"{self.a}+{self.b}x (mod {self.spec.p}, x^2={self.spec.delta})"


def field_make(p: int, delta: Optional[int] = None) -> FieldSpec:
    """F_p when ``delta`` is None, else F_p[x]/(x^2 - delta)."""
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if delta is None:
        return FieldSpec(p)
    return FieldSpec(p, 2, delta)


def _check(x: FieldElement, y: FieldElement):
    if x.spec != y.spec:
        raise FieldMismatch(f"cannot combine elements of {x.spec} and {y.spec}")


def add(x: FieldElement, y: FieldElement) -> FieldElement:
    _check(x, y)
    return x + y


def sub(x: FieldElement, y: FieldElement) -> FieldElement:
    _check(x, y)
    return x - y


def neg(x: FieldElement) -> FieldElement:
    return -x


def mul(x: FieldElement, y: FieldElement) -> FieldElement:
    _check(x, y)
    return x * y


def inv(x: FieldElement) -> FieldElement:
    return x.inverse()


def multiplicative_order(x: FieldElement) -> int:
    if x.is_zero():
        raise DivisionByZero("zero has no multiplicative order")
    n = x.spec.q - 1
    order = n
    for r in prime_factors(n):
        while order % r == 0 and (x ** (order // r)) == 1:
            order //= r
    return order


def find_root_of_unity(spec: FieldSpec, n: int) -> FieldElement:
    """Canonically smallest element of multiplicative order exactly ``n``."""
    if n < 1 or (spec.q - 1) % n:
        raise NoSuchRoot(f"{n} does not divide {spec.q - 1}")
    factors = prime_factors(n)
    for code in range(1, spec.q):
        w = spec.from_code(code)
        if w**n == 1 and all(w ** (n // r) != 1 for r in factors):
            return w
    raise NoSuchRoot(f"no element of order {n} in {spec}")  # unreachable for a field


def is_square(x: FieldElement) -> bool:
    return sqrt(x.spec, x) is not None


def sqrt(spec: FieldSpec, x: FieldElement) -> Optional[FieldElement]:
    """A square root of ``x`` (the canonically smaller of the two), or None."""
    x = spec.coerce(x)
    if spec.degree == 1:
        r = _tonelli_shanks(x.a, spec.p)
        if r is None:
            return None
        return spec(min(r, (spec.p - r) % spec.p))
    for r in spec.elements():
        if r * r == x:
            return r
    return None
