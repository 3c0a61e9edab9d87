"""One protocol round: source key, derived keys, masked broadcasts, recovery."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from . import _kernels
from .errors import BudgetExceeded, ShapeMismatch
from .ffla import mat_vec
from .gf import FieldElement, FieldSpec
from .scheme import Scheme

SeedLike = Union[int, np.random.Generator]


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_vector(spec: FieldSpec, n: int, seed: SeedLike) -> tuple[FieldElement, ...]:
    # Generator.integers is unbiased (rejection on the raw output range).
    codes = _rng(seed).integers(0, spec.q, size=n)
    return tuple(spec.from_code(c) for c in codes)


def sample_source_key(spec: FieldSpec, d: int, seed: SeedLike) -> tuple[FieldElement, ...]:
    if d < 1:
        raise ValueError("the source key has at least one symbol")
    return sample_vector(spec, d, seed)


def derive_keys(s: Scheme, N: Sequence) -> tuple[FieldElement, ...]:
    if len(N) != s.H.cols:
        raise ShapeMismatch(f"source key has {len(N)} symbols, H expects {s.H.cols}")
    return tuple(mat_vec(s.H, [s.spec.coerce(n) for n in N]))


def recover(alpha_k: FieldElement, own_input: FieldElement, own_key: FieldElement,
            received: Mapping[int, FieldElement]) -> FieldElement:
    """User-side recovery from exactly what the user holds.

    ``own_input`` is part of the user's view but not needed for the neighborhood
    sum; ``received`` maps neighbor labels to their broadcasts.
    """
    acc = alpha_k * own_key
    for x in received.values():
        acc = acc + x
    return acc


@dataclass(frozen=True)
class Transcript:
    W: tuple
    N: tuple
    Z: tuple
    X: tuple
    recovered: tuple
    expected: tuple

    def to_dict(self) -> dict:
        return {name: [e.to_json() for e in getattr(self, name)]
                for name in ("W", "N", "Z", "X", "recovered", "expected")}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def run_round(s: Scheme, W: Sequence, N: Sequence) -> Transcript:
    if len(W) != s.K:
        raise ShapeMismatch(f"{len(W)} inputs for {s.K} users")
    W = tuple(s.spec.coerce(w) for w in W)
    N = tuple(s.spec.coerce(n) for n in N)
    Z = derive_keys(s, N)
    X = tuple(w + z for w, z in zip(W, Z))
    recovered = []
    expected = []
    for k in s.topology.vertices():
        nbrs = sorted(s.topology.neighbors(k))
        recovered.append(recover(s.alpha[k - 1], W[k - 1], Z[k - 1], {i: X[i - 1] for i in nbrs}))
        target = s.spec.zero
        for i in nbrs:
            target = target + W[i - 1]
        expected.append(target)
    return Transcript(W, N, Z, X, tuple(recovered), tuple(expected))


def check_recovery(t: Transcript) -> tuple[bool, ...]:
    return tuple(r == e for r, e in zip(t.recovered, t.expected))


def random_round(s: Scheme, rng: np.random.Generator) -> Transcript:
    W = sample_vector(s.spec, s.K, rng)
    N = sample_source_key(s.spec, s.H.cols, rng)
    return run_round(s, W, N)


def exhaustive_recovery(s: Scheme, budget: int = 10**8) -> np.ndarray:
    """Per-user number of (W, N) in F_q^K x F_q^d where recovery is wrong."""
    states = s.spec.q ** (s.K + s.H.cols)
    if states > budget:
        raise BudgetExceeded(f"{states} states exceed the budget of {budget}")
    ptr, idx = s.neighbor_csr()
    return _kernels.recovery_failures(
        s.H.codes, s.alpha_codes, ptr, idx, s.spec.p, s.spec.degree, s.spec.delta_code)
