"""Command-line entry point: ``topsa {build,verify,run,audit,search}``.

Exit codes: 0 success, 1 usage/I-O/validation error, 2 a check failed,
3 audit passed with budget skips. Machine-readable JSON goes to stdout,
human-readable summaries to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import audit as audit_mod
from . import engine
from .errors import TSAError
from .gf import FieldSpec, field_make
from .scheme import BUILDERS, Scheme, load_scheme, save_scheme, search_modulation, verify
from .topology import Topology, make_complete, make_prism, make_ring

EXIT_OK, EXIT_ERROR, EXIT_FAIL, EXIT_SKIPPED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _say(*parts):
    print(*parts, file=sys.stderr)


def _emit(obj):
    print(json.dumps(obj, sort_keys=True))


def _fmt_rates(s: Scheme) -> str:
    return "(" + ", ".join(str(r) for r in s.rates) + ")"


def _size(args, topology: str) -> int:
    if topology == "prism":
        if args.m is not None:
            return args.m
        if args.k is not None:
            if args.k % 2:
                raise UsageError("a prism has an even number of users")
            return args.k // 2
        raise UsageError("prism needs --m (or an even --k)")
    if args.k is None:
        raise UsageError(f"{topology} needs --k")
    return args.k


def cmd_build(args) -> int:
    s = BUILDERS[args.topology](_size(args, args.topology))
    summary = f"built {args.topology} K={s.K} d={s.d} over {s.spec}; rates (R_X, R_Z, R_ZS) = {_fmt_rates(s)}"
    if args.out:
        save_scheme(s, args.out)
        _say(summary)
        _say(f"wrote {args.out}")
    else:
        _say(summary)
        print(json.dumps(s.to_dict(), indent=1))
    return EXIT_OK


def cmd_verify(args) -> int:
    s = load_scheme(args.scheme)
    report = verify(s)
    _say(f"scheme: K={s.K} d={s.d} over {s.spec}; dim ker(A_alpha) = {report.kernel_dim}")
    _say(f"recovery (A_alpha H = 0): {'ok' if report.recovery_ok else 'FAIL'}")
    for u in report.users:
        _say(f"  user {u.user}: rank H[N+k] {u.closed_rank}/{u.closed_expected}, "
             f"rank H[N] {u.open_rank}/{u.open_expected} {'ok' if u.ok else 'FAIL'}")
    _say("PASS" if report.passed else "FAIL")
    _emit(report.to_dict())
    return EXIT_OK if report.passed else EXIT_FAIL


def _load_inputs(path: str, s: Scheme) -> list[tuple]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read inputs {path}: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("W")
    if not isinstance(data, list) or not data:
        raise UsageError("inputs must be a vector or a list of vectors")

    def is_scalar(v):
        return isinstance(v, int) or (isinstance(v, list) and len(v) == 2 and all(isinstance(x, int) for x in v))

    vectors = [data] if all(is_scalar(v) for v in data) and len(data) == s.K else data
    out = []
    for vec in vectors:
        if not isinstance(vec, list) or len(vec) != s.K:
            raise UsageError(f"each input vector needs {s.K} entries")
        out.append(tuple(s.spec.coerce(tuple(v) if isinstance(v, list) else v) for v in vec))
    return out


def cmd_run(args) -> int:
    s = load_scheme(args.scheme)
    report = verify(s)
    if not report.passed and not args.force:
        _say("refusing to run a scheme that fails verification (use --force)")
        for line in report.failures():
            _say(f"  {line}")
        return EXIT_ERROR
    inputs = _load_inputs(args.inputs, s) if args.inputs else None
    rounds = args.rounds
    if rounds is None:
        rounds = len(inputs) if inputs and len(inputs) > 1 else 1
    rng = np.random.default_rng(args.seed)
    failed = 0
    for r in range(rounds):
        if inputs is None:
            W = engine.sample_vector(s.spec, s.K, rng)
        else:
            W = inputs[r % len(inputs)]
        N = engine.sample_source_key(s.spec, s.H.cols, rng)
        t = engine.run_round(s, W, N)
        ok = engine.check_recovery(t)
        if not all(ok):
            failed += 1
        print(t.to_json())
    _say(f"{rounds} rounds, {failed} with recovery failures")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_audit(args) -> int:
    s = load_scheme(args.scheme)
    report = audit_mod.audit_scheme(s, args.budget, own_input=not args.reduced)
    _say(f"audit: K={s.K} d={s.d} over {s.spec}; {report.states} states per user, budget {args.budget}")
    for u in report.users:
        e = u.entropy
        _say(f"  user {u.user}: MI {u.mi}; H(Z_N+k) = {e.closed} (>= {e.d}), "
             f"H(Z_N|Z_k) = {e.open_given_own} (>= {e.d - 1})")
    _say(report.status.upper())
    _emit(report.to_dict())
    return report.exit_code


def _parse_blocks(text: str) -> list[list[int]]:
    try:
        return [[int(v) for v in part.split(",") if v.strip()] for part in text.split(";") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --blocks {text!r}") from exc


def _search_topology(args) -> Topology:
    if args.graph:
        try:
            return Topology.from_dict(json.loads(Path(args.graph).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read graph {args.graph}: {exc}") from exc
    if not args.topology:
        raise UsageError("search needs --topology or --graph")
    size = _size(args, args.topology)
    return {"ring": make_ring, "prism": make_prism, "complete": make_complete}[args.topology](size)


def cmd_search(args) -> int:
    t = _search_topology(args)
    spec: FieldSpec = field_make(args.p, args.delta)
    blocks = _parse_blocks(args.blocks) if args.blocks else None
    if args.strategy == "blockwise" and blocks is None:
        if t.kind != "prism":
            raise UsageError("blockwise search needs --blocks")
        M = t.K // 2
        blocks = [list(range(1, M + 1)), list(range(M + 1, t.K + 1))]
    res = search_modulation(t, spec, args.strategy, blocks, args.cap)
    d = t.degree
    _say(f"search {args.strategy} on {t.kind} K={t.K} over {spec}: {res.evaluated} candidates")
    _say(f"best alpha = {[a.to_json() if spec.degree == 2 else a.a for a in res.alpha]}, "
         f"dim ker = {res.kernel_dim}, {len(res.maximizers)} maximizer(s)")
    if d is None:
        _say("graph is not regular: no feasibility verdict")
        _emit(res.to_dict())
        return EXIT_OK
    _say(f"feasible (dim ker >= d = {d}): {res.feasible(d)}")
    _emit(res.to_dict(d))
    return EXIT_OK if res.feasible(d) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="topsa", description="Topological secure aggregation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct a scheme for a named topology")
    b.add_argument("--topology", required=True, choices=sorted(BUILDERS))
    b.add_argument("--k", type=int, help="number of users (ring, complete)")
    b.add_argument("--m", type=int, help="cycle length (prism, K = 2M)")
    b.add_argument("--out", help="scheme file to write (default: stdout)")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="check recovery and rank conditions")
    v.add_argument("scheme")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("run", help="execute protocol rounds, JSON-lines transcripts")
    r.add_argument("scheme")
    r.add_argument("--rounds", type=int)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--inputs", help="JSON file: a vector of inputs W, a list of vectors, or {\"W\": ...}")
    r.add_argument("--force", action="store_true", help="run even if verification fails")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("audit", help="exhaustive mutual-information and entropy audit")
    a.add_argument("scheme")
    a.add_argument("--budget", type=int, default=audit_mod.DEFAULT_BUDGET, help="max states per user")
    a.add_argument("--reduced", action="store_true", help="condition on (S, Z_k) only, dropping W_k")
    a.set_defaults(func=cmd_audit)

    s = sub.add_parser("search", help="search modulation vectors maximizing dim ker(A_alpha)")
    s.add_argument("--topology", choices=["ring", "prism", "complete"])
    s.add_argument("--graph", help="topology JSON file")
    s.add_argument("--k", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--delta", type=int)
    s.add_argument("--strategy", choices=["uniform", "blockwise", "exhaustive"], default="uniform")
    s.add_argument("--blocks", help='vertex blocks, e.g. "1,2,3;4,5,6"')
    s.add_argument("--cap", type=int, default=10**6)
    s.set_defaults(func=cmd_search)
    return ap


def _validate(args):
    for name in ("rounds", "budget", "cap"):
        v = getattr(args, name, None)
        if v is not None and v < (0 if name == "rounds" else 1):
            raise UsageError(f"--{name} must be positive")


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        _validate(args)
        return args.func(args)
    except (UsageError, TSAError, OSError) as exc:
        _say(f"error: {exc}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
