"""Command-line experiments: ``farpoint <command> [options]``.

Every command prints a JSON summary on stdout.  The exit status is 0 when
all checks requested by the command pass, 1 when a check fails (the JSON
then carries ``"ok": false``), and 2 on invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import balance, generators, iteration, miniball, planar
from .fileio import dumps, fmt_float, load_point_set, point_set_to_dict, save_point_set
from .geometry import FLOAT, RATIONAL, PointSet, validate

DEFAULT_STEPS = 10**4
DEFAULT_STATES = 10**7
DEFAULT_SAMPLES = 10**5
AUDIT_STEPS = 10**3


def _emit(obj) -> None:
    sys.stdout.write(dumps(obj) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else fmt_float(v) if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


def _write(args, text: str, default_stdout: bool = False) -> None:
    if args.output:
        Path(args.output).write_text(text)
    elif default_stdout:
        sys.stdout.write(text)


def _load(args) -> PointSet:
    if not args.input:
        raise ValueError("--input is required for this command")
    return load_point_set(args.input, args.mode)


def _phi(args) -> float:
    return generators.DEFAULT_PHI if args.phi is None else args.phi


def _chunks(items: list, parts: int) -> list:
    size = max(1, math.ceil(len(items) / max(1, parts)))
    return [(k, items[k:k + size]) for k in range(0, len(items), size)]


def _run_chunks(fn, corpus: list, threads: int, **kw) -> list:
    """Run ``fn`` over corpus chunks; per-set seeding keeps the result independent of ``threads``."""
    chunks = _chunks(corpus, threads)
    if threads <= 1 or len(chunks) == 1:
        return [fn(part, id_offset=k, **kw) for k, part in chunks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futs = [pool.submit(fn, part, id_offset=k, **kw) for k, part in chunks]
        return [f.result() for f in futs]


def cmd_iterate(args) -> dict:
    ps = _load(args)
    tr = iteration.run_iteration(ps, args.steps, args.policy, seed=args.seed)
    _write(args, tr.to_jsonl())
    out = {"command": "iterate", "n_steps": tr.n_steps, "policy": args.policy,
           "max_norm": tr.max_norm, "final_norm": tr.norms[-1], "ok": True}
    if tr.norms_sq_exact is not None:
        out["max_norm_sq_exact"] = max(tr.norms_sq_exact)
    return out


def cmd_ustar(args) -> dict:
    ps = _load(args)
    if ps.exact:
        rs = iteration.reachable_set(ps, norm_cap=args.norm_cap, budget=args.states)
        if args.output:
            Path(args.output).write_text(_csv_text(["coeffs", "depth", "norm_sq", "norm"], rs.to_csv_rows()))
        out = {"command": "ustar", "exact": True, "status": rs.status, "count": rs.count,
               "ustar_sq": rs.ustar_sq, "ustar": rs.ustar, "ok": True}
        if rs.status != "closed":
            out["reason"] = iteration.unbounded_reason(ps)
        return out
    best = iteration.ustar_estimate(ps, budget=args.budget, seed=args.seed, steps=args.steps)
    return {"command": "ustar", "exact": False, "lower_bound": best, "ok": True}


def table_a_rows(d_max: int, states: int = DEFAULT_STATES):
    """Rows (d, a(d), u*^2, u*, reachable count, seconds, status) for equidistant sets."""
    for d in range(2, d_max + 1):
        t0 = time.perf_counter()
        try:
            us = iteration.ustar_exact(generators.equidistant_set(d), budget=states)
        except iteration.StateBudgetExceeded as exc:
            yield [d, None, None, None, exc.count, time.perf_counter() - t0, "budget-exceeded"]
            continue
        a = us.squared * d
        status = "ok" if a.denominator == 1 else "non-integer"
        yield [d, str(a), str(us.squared), us.value, us.count, time.perf_counter() - t0, status]


def cmd_table_a(args) -> dict:
    d_max = args.d or 7
    if d_max < 2:
        raise ValueError("table-a needs --d >= 2")
    rows = list(table_a_rows(d_max, args.states))
    _write(args, _csv_text(["d", "a", "ustar_sq", "ustar", "reachable", "seconds", "status"], rows),
           default_stdout=False)
    table = [{"d": r[0], "a": r[1], "reachable": r[4], "status": r[6]} for r in rows]
    bad = [r for r in table if r["status"] != "ok"]
    return {"command": "table-a", "rows": table, "ok": not bad}


def cmd_classify(args) -> dict:
    rep = balance.classify_balance(_load(args))
    return dict({"command": "classify", "ok": True}, **rep.to_dict())


def cmd_delta(args) -> dict:
    ps = _load(args)
    rep = balance.classify_balance(ps)
    cert = balance.min_norm_certificate(ps, rep.min_norm_point)
    return {"command": "delta", "delta": rep.delta, "b": rep.b, "certificate": cert,
            "ok": cert >= -balance.CERT_TOL}


def cmd_seb(args) -> dict:
    P = _load(args).float_points()
    ball = miniball.seb(P, seed=args.seed)
    return {"command": "seb", "center": list(ball.center), "radius": ball.radius,
            "encloses": bool(all(ball.contains(p) for p in P)), "ok": True}


def cmd_bc(args) -> dict:
    P = _load(args).float_points()
    tr = miniball.bc_approximate(P, args.steps, args.policy, seed=args.seed)
    rel = miniball.relation_check(tr)
    viol = [i for i in range(1, len(tr.errors)) if tr.errors[i] > 1 / math.sqrt(i) + 1e-12]
    if args.output:
        Path(args.output).write_text(_csv_text(["i", "err", "bound", "ustar_over_i", "residual"],
                                               tr.csv_rows()))
    return {"command": "bc", "steps": tr.n_steps, "final_error": tr.errors[-1],
            "bound_violations": viol[:20], "relation_max_residual": rel.max_residual,
            "relation_divergence": rel.divergence, "radius": tr.ball.radius,
            "ok": not viol}


def _family(args) -> PointSet:
    fam = args.family
    if fam == "equidistant":
        return generators.equidistant_set(args.d, args.mode or RATIONAL)
    if fam == "A":
        return generators.family_A(args.d, args.m, args.mode or RATIONAL)
    if fam == "B":
        return generators.family_B(args.d, args.b, args.epsilon, _phi(args))
    if fam == "C":
        return generators.family_C(args.d, args.epsilon or 0.0, args.mu, _phi(args))
    if fam == "random-balanced":
        return generators.random_balanced(args.d, args.n or args.d + 3, seed=args.seed)
    if fam == "random-planar":
        rng = np.random.default_rng(args.seed)
        return planar.random_planar_set(rng, args.n or 5)
    if fam == "polygon":
        return planar.regular_polygon(args.n or 5)
    raise ValueError(f"unknown family {fam!r}")


def cmd_generate(args) -> dict:
    ps = _family(args)
    rep = validate(ps)
    if args.output:
        save_point_set(ps, args.output)
    else:
        _emit(point_set_to_dict(ps))
    return {"command": "generate", "family": args.family, "n": ps.n, "d": ps.d,
            "valid": rep.ok, "ok": rep.ok}


def _schedule(args, ps: PointSet) -> list:
    if args.schedule:
        return [int(t) for t in args.schedule.split(",") if t.strip()]
    M = args.target_m
    if args.family == "A":
        return generators.a_schedule(args.d, args.m)
    if M is None:
        raise ValueError("--target-m or --schedule is required")
    if args.family == "B":
        k = generators.b_steps_for_target(args.d, args.b, args.epsilon, _phi(args), M)
        return generators.b_schedule(args.d - args.b, k)
    if args.family == "C":
        k = generators.c_steps_for_target(args.d, args.epsilon or 0.0, args.mu, _phi(args), M)
        return generators.c_schedule(args.d, k)
    raise ValueError("schedule-verify needs --family A, B or C, or an explicit --schedule")


def cmd_schedule_verify(args) -> dict:
    ps = _load(args) if args.input else _family(args)
    sched = _schedule(args, ps)
    rep = generators.verify_prescribed_schedule(ps, sched)
    out = {"command": "schedule-verify", "steps": len(sched), **rep.to_dict()}
    ok = rep.ok
    if args.target_m is not None:
        out["target"] = math.sqrt(args.target_m)
        ok = ok and rep.max_norm >= math.sqrt(args.target_m)
    out["ok"] = ok
    return out


def cmd_audit_lemma(args) -> dict:
    if args.input:
        corpus = [_load(args)]
    else:
        corpus = planar.random_planar_corpus(args.sets, args.seed, min_gap=2 * math.pi / 3)
    policies = [args.policy] if args.policy_given else list(iteration.POLICIES)
    parts = _run_chunks(planar.lemma_corpus_audit, corpus, args.threads,
                        steps=args.steps, policies=policies, seed=args.seed)
    viol = sorted((v for p in parts for v in p.violations), key=lambda v: (v.set_id, v.step))
    rep = planar.AuditReport("lemma", dict(parts[0].params, sets=len(corpus)),
                             sum(p.samples for p in parts), viol)
    return dict(rep.to_dict(), command="audit-lemma")


def cmd_audit_disjoint(args) -> dict:
    phis = [args.phi] if args.phi is not None else [0.0, math.pi / 12, math.pi / 6 - 1e-6]
    reports = [planar.disjointness_audit(phi, args.samples, args.seed) for phi in phis]
    viol = [v.to_dict() for r in reports for v in r.violations]
    return {"command": "audit-disjoint", "audit": "disjoint",
            "params": {"phi": phis, "seed": args.seed}, "samples": sum(r.samples for r in reports),
            "violations": viol, "ok": not viol}


def cmd_audit_sqrt2(args) -> dict:
    if args.input:
        corpus = [_load(args)]
    else:
        corpus = planar.random_planar_corpus(args.sets, args.seed)
    witness = planar.perturbed_perp_witness()
    corpus = corpus + [witness]
    policies = [args.policy] if args.policy_given else list(iteration.POLICIES)
    parts = _run_chunks(planar.sqrt2_bound_audit, corpus, args.threads,
                        steps=args.steps, policies=policies, seed=args.seed)
    best = max(parts, key=lambda p: p.max_norm)
    viol = [v.to_dict() for p in parts for v in p.violations]
    wit_best, _ = iteration.max_norm_fast(witness.float_points(), 4)
    ok = not viol and wit_best >= math.sqrt(2) - 1e-3
    return {"command": "audit-sqrt2", "audit": "sqrt2", "params": dict(best.params, sets=len(corpus)),
            "samples": sum(p.samples for p in parts), "violations": viol,
            "max_norm": best.max_norm, "witness_set": best.witness,
            "perturbed_witness_norm": wit_best, "ok": ok}


def cmd_growth_demo(args) -> dict:
    fam = args.family or "B"
    M = args.target_m or 25.0
    res = generators.growth_demo(fam, d=args.d or 3, M=M, b=args.b or 1, phi=_phi(args),
                                 variant=args.variant)
    return dict(res.to_dict(), command="growth-demo")


COMMANDS = {
    "iterate": cmd_iterate,
    "ustar": cmd_ustar,
    "table-a": cmd_table_a,
    "classify": cmd_classify,
    "delta": cmd_delta,
    "seb": cmd_seb,
    "bc": cmd_bc,
    "generate": cmd_generate,
    "schedule-verify": cmd_schedule_verify,
    "audit-lemma": cmd_audit_lemma,
    "audit-disjoint": cmd_audit_disjoint,
    "audit-sqrt2": cmd_audit_sqrt2,
    "growth-demo": cmd_growth_demo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="point set (JSON or CSV)")
    common.add_argument("--output", help="where to write the trace, table or point set")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mode", choices=[FLOAT, RATIONAL], default=None)
    common.add_argument("--steps", type=int, default=None,
                        help=f"iteration length (default {DEFAULT_STEPS}, {AUDIT_STEPS} for audits)")
    common.add_argument("--policy", choices=list(iteration.POLICIES), default=None)
    common.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    common.add_argument("--states", type=int, default=DEFAULT_STATES, help="reachable-set budget")
    common.add_argument("--sets", type=int, default=1000, help="random corpus size for audits")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--budget", type=int, default=64, help="traces for float u* estimates")
    common.add_argument("--norm-cap", type=float, default=None)
    common.add_argument("--family", choices=["equidistant", "A", "B", "C", "random-balanced",
                                             "random-planar", "polygon"])
    common.add_argument("--variant", choices=["mu", "eps"], default="mu",
                        help="C growth demo: epsilon = 0 (mu) or mu = 3 epsilon (eps)")
    common.add_argument("--schedule", help="comma-separated point indices")
    common.add_argument("--d", type=int)
    common.add_argument("--b", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--mu", type=float)
    common.add_argument("--phi", type=float)
    common.add_argument("--target-m", type=float)
    parser = argparse.ArgumentParser(prog="farpoint", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.steps is None:
        args.steps = AUDIT_STEPS if args.command.startswith("audit-") else DEFAULT_STEPS
    args.policy_given = args.policy is not None
    args.policy = args.policy or iteration.LOWEST
    try:
        out = COMMANDS[args.command](args)
    except (ValueError, OSError, KeyError, iteration.StateBudgetExceeded) as exc:
        _emit({"command": args.command, "ok": False, "error": type(exc).__name__, "reason": str(exc)})
        return 2
    _emit(out)
    return 0 if out.get("ok", True) else 1


if __name__ == "__main__":
    sys.exit(main())
