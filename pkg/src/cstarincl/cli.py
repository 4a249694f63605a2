"""Command-line entry point: ``cstarincl <group> <command> [options]``.

Exit codes: 0 success or positive decision, 3 negative decision, 4 budget
exhausted or undecided, 2 input error.  Every report embeds a run manifest.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .algebra import (
    commutant,
    conditional_expectation,
    embedding_from_json,
    embedding_to_json,
    validate_embedding,
)
from .fullness import (
    BudgetExhausted,
    FullnessCertificate,
    certificate_from_expectation,
    relatively_full,
    verify_certificate,
)
from .ksearch import (
    append_csv,
    degeneracy_bound,
    k_degeneracy_bound,
    narrow_interval,
    search_unitary,
    spanning_family_min,
)
from .matcore import ToleranceConfig, matrix_from_json, matrix_to_json
from .orthogonality import (
    CONFIDENCE_THRESHOLD,
    certify_nonorthogonal_conjugate,
    intertwiner_construct,
    intertwiner_residual,
)
from .tower import (
    Tower,
    build_uhf_tower,
    christensen_budget,
    propagate_fullness,
    regularity_details,
    verify_commuting_squares,
    verify_corollary_conditions,
)

EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE, EXIT_UNKNOWN = 0, 2, 3, 4


class InputError(Exception):
    pass


class RunContext:
    """Collects the manifest while a command runs."""

    def __init__(self, argv, args):
        self.argv = list(argv)
        self.args = args
        self.started = time.perf_counter()
        self.digests = {}
        self.tol = ToleranceConfig(eig_floor=args.tol_eig, identity_tol=args.tol_id)

    def load_json(self, path):
        if path is None:
            raise InputError("missing required input file")
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
        self.digests[path] = hashlib.sha256(raw).hexdigest()
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} is not valid JSON: {exc}") from exc

    def seed(self, randomized: bool = True):
        if self.args.seed is None:
            if randomized and (self.args.ci or os.environ.get("CI")):
                raise InputError("randomized commands require --seed in CI mode")
            return 0
        return self.args.seed

    def manifest(self) -> dict:
        return {
            "argv": self.argv,
            "seed": self.args.seed,
            "tolerances": {"eig_floor": self.tol.eig_floor, "identity_tol": self.tol.identity_tol,
                           "cert_margin": self.tol.cert_margin,
                           "nonorth_confidence_threshold": CONFIDENCE_THRESHOLD},
            "inputs": self.digests,
            "version": __version__,
            "wall_time": round(time.perf_counter() - self.started, 6),
        }


def _emit(ctx: RunContext, command: str, decision, result: dict):
    report = {"command": command, "decision": decision, "result": result, "manifest": ctx.manifest()}
    text = json.dumps(report, indent=2, default=_json_default)
    out = ctx.args.out
    if out in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(out, "w") as fh:
            fh.write(text + "\n")
        sys.stdout.write(out + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return matrix_to_json(obj) if obj.ndim == 2 else obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _payload(obj, key):
    """Accept either a bare object or a CLI report wrapping it under ``result``."""
    if isinstance(obj, dict) and "result" in obj and "manifest" in obj:
        obj = obj["result"]
    if key is not None and isinstance(obj, dict) and key in obj:
        return obj[key]
    return obj


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


# --- inputs -----------------------------------------------------------------------

def _instance(ctx, args):
    """Embedding and element from ``--instance`` or ``--emb``/``--a``."""
    if args.instance:
        obj = ctx.load_json(args.instance)
        try:
            return embedding_from_json(obj["embedding"]), matrix_from_json(obj["a"])
        except KeyError as exc:
            raise InputError(f"instance file lacks {exc}") from exc
    emb = embedding_from_json(_payload(ctx.load_json(args.emb), "embedding"))
    a = None
    if getattr(args, "a", None):
        a = matrix_from_json(_payload(ctx.load_json(args.a), "a"))
    return emb, a


def _need_a(a):
    if a is None:
        raise InputError("an element is required (--a or --instance)")
    return a


# --- algebra ------------------------------------------------------------------------

def cmd_algebra_validate(ctx, args):
    emb, _ = _instance(ctx, args)
    rep = validate_embedding(emb, ctx.tol)
    _emit(ctx, "algebra validate", "valid" if rep.ok else "invalid",
          {"ok": rep.ok, "method": rep.method, "residuals": rep.residuals})
    return EXIT_OK if rep.ok else EXIT_NEGATIVE


def cmd_algebra_commutant(ctx, args):
    emb, _ = _instance(ctx, args)
    com = emb.commutant_embedding()
    _emit(ctx, "algebra commutant", "ok",
          {"dimension": commutant(emb).dim, "blocks": list(com.blocks),
           "multiplicities": list(com.multiplicities), "embedding": embedding_to_json(com)})
    return EXIT_OK


def cmd_algebra_expect(ctx, args):
    emb, a = _instance(ctx, args)
    e = conditional_expectation(emb, _need_a(a))
    _emit(ctx, "algebra expect", "ok", {"expectation": matrix_to_json(e)})
    return EXIT_OK


# --- full -----------------------------------------------------------------------------

def cmd_full_decide(ctx, args):
    emb, a = _instance(ctx, args)
    dec = relatively_full(_need_a(a), emb, ctx.tol)
    _emit(ctx, "full decide", dec.label, dec.to_json())
    return EXIT_OK if dec.full else EXIT_NEGATIVE


def cmd_full_certify(ctx, args):
    emb, a = _instance(ctx, args)
    a = _need_a(a)
    dec = relatively_full(a, emb, ctx.tol)
    if not dec.full:
        _emit(ctx, "full certify", "not_full", dec.to_json())
        return EXIT_NEGATIVE
    try:
        cert = certificate_from_expectation(a, emb, args.target, ctx.seed(), args.budget, ctx.tol)
    except BudgetExhausted as exc:
        _emit(ctx, "full certify", "budget_exhausted", {"message": str(exc), **dec.to_json()})
        return EXIT_UNKNOWN
    ver = verify_certificate(a, cert, emb, ctx.tol)
    _emit(ctx, "full certify", "certified" if ver.ok else "unverified",
          {"certificate": cert.to_json(), "verification": ver.to_json(), "a": matrix_to_json(a),
           "embedding": embedding_to_json(emb)})
    return EXIT_OK if ver.ok else EXIT_NEGATIVE


def cmd_full_verify(ctx, args):
    emb, a = _instance(ctx, args)
    cert_obj = ctx.load_json(args.cert)
    inner = _payload(cert_obj, None)
    if a is None and isinstance(inner, dict) and "a" in inner:
        a = matrix_from_json(inner["a"])
    cert = FullnessCertificate.from_json(_payload(cert_obj, "certificate"))
    ver = verify_certificate(_need_a(a), cert, emb, ctx.tol)
    _emit(ctx, "full verify", "valid" if ver.ok else "invalid", ver.to_json())
    return EXIT_OK if ver.ok else EXIT_NEGATIVE


# --- nonorth --------------------------------------------------------------------------

def cmd_nonorth_intertwine(ctx, args):
    it = intertwiner_construct(args.d, args.k)
    res = intertwiner_residual(it.u, args.d, args.k)
    _emit(ctx, "nonorth intertwine", "ok", {"d": args.d, "k": args.k, "residual": res, **it.to_json()})
    return EXIT_OK


def cmd_nonorth_certify(ctx, args):
    obj = _payload(ctx.load_json(args.u), None)
    if isinstance(obj, dict) and "u" in obj:
        u = matrix_from_json(obj["u"])
    elif isinstance(obj, dict) and obj.get("best_unitary"):
        u = matrix_from_json(obj["best_unitary"])
    else:
        u = matrix_from_json(obj)
    rep = certify_nonorthogonal_conjugate(u, args.d, args.k, args.budget, ctx.seed(), tol=ctx.tol)
    _emit(ctx, "nonorth certify", rep.status, rep.to_json())
    return {"certified": EXIT_OK, "refuted": EXIT_NEGATIVE}.get(rep.status, EXIT_UNKNOWN)


# --- tower ------------------------------------------------------------------------------

def _load_tower(ctx, path):
    return Tower.from_json(_payload(ctx.load_json(path), "tower"))


def cmd_tower_build(ctx, args):
    t = build_uhf_tower(args.ks, args.ls, args.depth, seed=args.seed, max_ambient=args.max_ambient,
                        strict=args.strict, tol=ctx.tol)
    _emit(ctx, "tower build", "ok", {"ambient_dims": [lv.ambient_dim for lv in t.levels], "tower": t.to_json()})
    return EXIT_OK


def cmd_tower_verify(ctx, args):
    t = _load_tower(ctx, args.tower)
    squares = verify_commuting_squares(t, expectations=args.expectations, tol=ctx.tol)
    regular = [regularity_details(t, n, n + 1, ctx.tol) for n in range(1, t.depth)]
    corollary = verify_corollary_conditions(t, args.budget, ctx.seed(), tol=ctx.tol)
    all_regular = all(r["regular"] for r in regular)
    if not squares["ok"] or not all_regular or corollary["status"] == "refuted":
        decision, code = "failed", EXIT_NEGATIVE
    elif corollary["status"] == "unknown":
        decision, code = "unknown", EXIT_UNKNOWN
    else:
        decision, code = "verified", EXIT_OK
    _emit(ctx, "tower verify", decision,
          {"squares": squares, "regularity": regular, "corollary": corollary})
    return code


def cmd_tower_propagate(ctx, args):
    t = _load_tower(ctx, args.tower)
    a = matrix_from_json(_payload(ctx.load_json(args.a), "a"))
    res = propagate_fullness(t, args.level, a, ctx.seed(), args.budget, tol=ctx.tol)
    _emit(ctx, "tower propagate", "found" if res.found else "not_found", res.to_json())
    return EXIT_OK if res.found else EXIT_NEGATIVE


def cmd_tower_budget(ctx, args):
    table = christensen_budget(args.n, args.eps)
    _emit(ctx, "tower budget", "ok", table.to_json())
    return EXIT_OK


# --- ksearch ---------------------------------------------------------------------------

def cmd_ksearch_run(ctx, args):
    res = search_unitary(args.d, args.k, starts=args.budget, iters=args.iters, seed=ctx.seed())
    if args.csv:
        append_csv(args.csv, [res])
    _emit(ctx, "ksearch run", res.status, res.to_json())
    return {"witness_found": EXIT_OK, "infeasible_by_bound": EXIT_NEGATIVE}.get(res.status, EXIT_UNKNOWN)


def cmd_ksearch_interval(ctx, args):
    k_lo, k_hi, evidence = narrow_interval(args.d, args.budget, ctx.seed(), args.iters)
    if args.csv and evidence:
        append_csv(args.csv, evidence)
    _emit(ctx, "ksearch interval", "ok",
          {"d": args.d, "k_lo": k_lo, "k_hi": k_hi, "k_lo_degeneracy": k_degeneracy_bound(args.d),
           "evidence": [{"k": r.k, "status": r.status, "margin": r.best_margin, "starts": r.starts}
                        for r in evidence]})
    return EXIT_OK


def cmd_ksearch_spanning(ctx, args):
    m_lo, m_hi, fam, evidence = spanning_family_min(args.d, args.budget, ctx.seed(), args.iters, args.m_start)
    _emit(ctx, "ksearch spanning", "ok" if m_hi is not None else "no_family_found",
          {"d": args.d, "m_lo": m_lo, "m_hi": m_hi, "m_lo_degeneracy": degeneracy_bound(args.d),
           "evidence": evidence, "family": None if fam is None else [matrix_to_json(f) for f in fam]})
    return EXIT_OK if m_hi is not None else EXIT_UNKNOWN


# --- parser -----------------------------------------------------------------------------

def _global_flags(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--tol-eig", type=float, default=d(1e-9), help="eigenvalue floor")
    p.add_argument("--tol-id", type=float, default=d(1e-10), help="identity residual tolerance")
    p.add_argument("--seed", type=int, default=d(None), help="RNG seed")
    p.add_argument("--out", default=d("-"), help="report path ('-' for stdout)")
    p.add_argument("--format", choices=["json"], default=d("json"))
    p.add_argument("--ci", action="store_true", default=d(False), help="require explicit seeds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cstarincl", description="Finite-dimensional C*-inclusion toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    groups = parser.add_subparsers(dest="group", metavar="group")
    groups.required = True

    def leaf(sub, name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    def instance_flags(p, with_a=True):
        p.add_argument("--instance", help="JSON with 'embedding' and 'a'")
        p.add_argument("--emb", help="embedding JSON")
        if with_a:
            p.add_argument("--a", help="matrix JSON")

    g = groups.add_parser("algebra", help="embeddings, commutants, expectations").add_subparsers(
        dest="cmd", metavar="command", required=True)
    instance_flags(leaf(g, "validate", cmd_algebra_validate, "check matrix-unit relations"), with_a=False)
    instance_flags(leaf(g, "commutant", cmd_algebra_commutant, "relative commutant"), with_a=False)
    instance_flags(leaf(g, "expect", cmd_algebra_expect, "conditional expectation onto the commutant"))

    g = groups.add_parser("full", help="relative fullness").add_subparsers(dest="cmd", metavar="command",
                                                                           required=True)
    instance_flags(leaf(g, "decide", cmd_full_decide, "decide relative fullness"))
    p = leaf(g, "certify", cmd_full_certify, "build a certificate")
    instance_flags(p)
    p.add_argument("--target", type=float, default=1.0)
    p.add_argument("--budget", type=int, default=256)
    p = leaf(g, "verify", cmd_full_verify, "check a certificate")
    instance_flags(p)
    p.add_argument("--cert", required=True)

    g = groups.add_parser("nonorth", help="everywhere non-orthogonality").add_subparsers(
        dest="cmd", metavar="command", required=True)
    p = leaf(g, "intertwine", cmd_nonorth_intertwine, "construct the intertwining unitary")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p = leaf(g, "certify", cmd_nonorth_certify, "certify or refute a conjugate pair")
    p.add_argument("--u", required=True, help="matrix JSON, intertwiner or search report")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--budget", type=int, default=4096)

    g = groups.add_parser("tower", help="inductive-limit prefixes").add_subparsers(
        dest="cmd", metavar="command", required=True)
    p = leaf(g, "build", cmd_tower_build, "build a UHF tower prefix")
    p.add_argument("--ks", type=_int_list, required=True)
    p.add_argument("--ls", type=_int_list, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--max-ambient", type=int, default=4096)
    p.add_argument("--strict", action="store_true", help="regroup until k exceeds d_1...d_n")
    p = leaf(g, "verify", cmd_tower_verify, "squares, regularity and non-orthogonality")
    p.add_argument("--tower", required=True)
    p.add_argument("--expectations", action="store_true")
    p.add_argument("--budget", type=int, default=4096)
    p = leaf(g, "propagate", cmd_tower_propagate, "find the level where an element becomes full")
    p.add_argument("--tower", required=True)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--a", required=True)
    p.add_argument("--budget", type=int, default=512)
    p = leaf(g, "budget", cmd_tower_budget, "perturbation budget table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)

    g = groups.add_parser("ksearch", help="search for small k").add_subparsers(
        dest="cmd", metavar="command", required=True)
    for name, func, help_text in (("run", cmd_ksearch_run, "search one (d, k)"),
                                  ("interval", cmd_ksearch_interval, "narrow the k interval for d"),
                                  ("spanning", cmd_ksearch_spanning, "minimal spanning family size")):
        p = leaf(g, name, func, help_text)
        p.add_argument("--d", type=int, required=True)
        if name == "run":
            p.add_argument("--k", type=int, required=True)
        p.add_argument("--budget", type=int, default=4, help="number of random starts")
        p.add_argument("--iters", type=int, default=15)
        if name == "spanning":
            p.add_argument("--m-start", type=int, default=None)
        else:
            p.add_argument("--csv", help="append results to this evidence table")
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT
    try:
        ctx = RunContext(argv, args)
        return args.func(ctx, args)
    except (InputError, ValueError, KeyError, TypeError, IndexError) as exc:
        print(f"cstarincl: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
