"""Build, run and exhaustively audit one-shot secure aggregation over regular graphs."""

from .errors import TSAError
from .gf import FieldElement, FieldSpec, field_make, find_root_of_unity, sqrt
from .ffla import FieldMatrix, kernel_basis, rank, rref
from .topology import Topology, make_complete, make_custom, make_prism, make_ring
from .scheme import (
    Scheme,
    build_complete,
    build_prism,
    build_ring,
    dmam,
    from_kernel,
    load_scheme,
    prism6_f5_fixture,
    save_scheme,
    search_modulation,
    verify,
)
from .engine import Transcript, check_recovery, derive_keys, run_round, sample_source_key
from .audit import audit_scheme, brute_force_mi, empirical_entropy, entropy_checks

__version__ = "0.1.0"

__all__ = [
    "TSAError",
    "FieldElement", "FieldSpec", "field_make", "find_root_of_unity", "sqrt",
    "FieldMatrix", "kernel_basis", "rank", "rref",
    "Topology", "make_complete", "make_custom", "make_prism", "make_ring",
    "Scheme", "build_complete", "build_prism", "build_ring", "dmam", "from_kernel",
    "load_scheme", "prism6_f5_fixture", "save_scheme", "search_modulation", "verify",
    "Transcript", "check_recovery", "derive_keys", "run_round", "sample_source_key",
    "audit_scheme", "brute_force_mi", "empirical_entropy", "entropy_checks",
]
