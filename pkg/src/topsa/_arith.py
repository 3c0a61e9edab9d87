"""Field arithmetic on integer element codes.

An element a + b*x of F_p[x]/(x^2 - delta) is encoded as ``a*p + b``; a prime
field element is encoded as ``a``. Code order therefore equals the canonical
lexicographic order on (a, b).

Every function here uses only integer operators, so the same source runs on
numpy arrays (vectorized fallback path) and, after ``numba.njit``, on scalars
inside the compiled kernels. Products stay below p**3, which fits int64 for
every field this toolkit is meant for.
"""


def add(x, y, p, deg):
    if deg == 1:
        return (x + y) % p
    return ((x // p + y // p) % p) * p + (x % p + y % p) % p


def neg(x, p, deg):
    if deg == 1:
        return (p - x) % p
    return ((p - x // p) % p) * p + (p - x % p) % p


def sub(x, y, p, deg):
    return add(x, neg(y, p, deg), p, deg)


def mul(x, y, p, deg, delta):
    if deg == 1:
        return (x * y) % p
    a1 = x // p
    b1 = x % p
    a2 = y // p
    b2 = y % p
    a = (a1 * a2 + (b1 * b2 % p) * delta) % p
    b = (a1 * b2 + a2 * b1) % p
    return a * p + b


def power(x, e, p, deg, delta):
    result = x * 0 + (p if deg == 2 else 1)
    base = x
    while e > 0:
        if e & 1:
            result = mul(result, base, p, deg, delta)
        base = mul(base, base, p, deg, delta)
        e >>= 1
    return result


def inv(x, p, deg, delta):
    """Inverse by Fermat; 0 maps to 0, callers guard against it."""
    q = p if deg == 1 else p * p
    return power(x, q - 2, p, deg, delta)


def one(p, deg):
    return p if deg == 2 else 1
