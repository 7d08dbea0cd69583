"""Command line front end.

Subcommands: classpoly, cmpoints, modpoly-eval, norm, greens, sweep.

Exit code contract (scientifically meaningful, do not conflate 1 and 2):
  0  every requested assertion passed, or the value is legally zero
  1  an assertion failed, i.e. a numerical counterexample to a claimed bound
  2  computational failure (precision exhausted, tail budget, bad input)

Big integers are serialized as decimal strings in JSON output so results
survive any JSON parser.  Point arguments accept three spellings: a negative
discriminant (principal class), a form triple "a,b,c", or a complex number
like "0.3+1.1i" / "2i".
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys

import mpmath as mp

from . import cache as diskcache
from .numerics import PrecisionContext, PrecisionError
from .quadforms import (
    Discriminant,
    QuadForm,
    QuadFormError,
    cm_point,
    enumerate_reduced,
    reduce_form,
)
from .modular import (
    classpoly,
    coset_apply,
    hecke_cosets,
    j_eval,
    known_j_coefficients,
    modpoly_eval,
    seed_j_coefficients,
)
from .greens import (
    G_1,
    G_k_m,
    SingularityError,
    TailBudgetError,
)
from .cmcycles import build_cycle
from .verify import (
    fundamental_discriminants,
    summarize,
    sweep,
    verify_chain,
    verify_lower_bound,
    verify_nonunit,
)

EXIT_OK = 0
EXIT_ASSERT = 1
EXIT_COMPUTE = 2


def parse_point(text: str):
    """Discriminant, form triple or complex number -> CMPoint or complex."""
    text = text.strip()
    if re.fullmatch(r"-\d+", text):
        d = int(text)
        group = enumerate_reduced(d)
        return cm_point(group.identity)
    if re.fullmatch(r"-?\d+\s*,\s*-?\d+\s*,\s*-?\d+", text):
        a, b, c = (int(s) for s in text.split(","))
        return cm_point(reduce_form(QuadForm(a, b, c)))
    # complex: accept i as the imaginary unit, with or without a coefficient
    expr = text.replace(" ", "").replace("I", "i")
    expr = re.sub(r"(?<![\d.])i", "1j", expr).replace("i", "j")
    z = complex(expr)
    if not z.imag > 0:
        raise ValueError(f"point {text!r} is not in the upper half plane")
    return z


def _context(args) -> PrecisionContext:
    return PrecisionContext(
        mantissa_bits=args.precision_bits,
        integer_tolerance=args.tolerance,
    )


def _emit(args, payload, text: str):
    body = json.dumps(payload, indent=2) if args.json else text
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(body + "\n")
    else:
        print(body)


def _load_jcoeff_cache(args):
    if not args.cache_dir:
        return
    best = None
    import os
    if os.path.isdir(args.cache_dir):
        for name in os.listdir(args.cache_dir):
            match = re.fullmatch(r"jcoeffs_(\d+)\.cache", name)
            if match:
                count = int(match.group(1))
                if best is None or count > best:
                    best = count
    if best:
        values = diskcache.load_ints(args.cache_dir, f"jcoeffs:{best}")
        if values:
            seed_j_coefficients(values)


def _save_jcoeff_cache(args):
    if not args.cache_dir:
        return
    coeffs = known_j_coefficients()
    if len(coeffs) >= 64:
        diskcache.store_ints(args.cache_dir, f"jcoeffs:{len(coeffs)}", coeffs)


def _poly_text(coeffs) -> str:
    terms = []
    for power in range(len(coeffs) - 1, -1, -1):
        c = coeffs[power]
        if c == 0 and len(coeffs) > 1:
            continue
        mono = "X" if power == 1 else (f"X^{power}" if power else "")
        if power == len(coeffs) - 1:
            lead = "" if abs(c) == 1 and power else str(c)
            terms.append(f"{lead}{mono}" if c > 0 else f"-{lead.lstrip('-')}{mono}")
            continue
        sign = "+" if c > 0 else "-"
        mag = abs(c)
        coef = "" if mag == 1 and power else str(mag)
        terms.append(f"{sign} {coef}{mono}".rstrip())
    return " ".join(terms) if terms else "0"


# ---------------------------------------------------------------------------
# subcommands


def cmd_classpoly(args) -> int:
    d = args.d
    ctx = _context(args)
    cached = None
    if args.cache_dir:
        cached = diskcache.load_ints(args.cache_dir, f"classpoly:{d}")
    try:
        if cached is not None:
            coeffs = cached
        else:
            coeffs = classpoly(d, ctx)
            if args.cache_dir:
                diskcache.store_ints(args.cache_dir, f"classpoly:{d}", coeffs)
    except PrecisionError as err:
        print(f"precision failure: {err} (residual {err.residual})", file=sys.stderr)
        return EXIT_COMPUTE
    payload = {"d": d, "degree": len(coeffs) - 1,
               "coeffs": [str(c) for c in coeffs]}
    _emit(args, payload, _poly_text(coeffs))
    return EXIT_OK


def cmd_cmpoints(args) -> int:
    d = args.d
    group = enumerate_reduced(d)
    ctx = _context(args)
    rows = []
    for form in group.reduced_forms:
        z = cm_point(form)
        entry = {"form": [form.a, form.b, form.c],
                 "point": f"(-({form.b}) + sqrt({d}))/{2 * form.a}",
                 "approx": [z.approx().real, z.approx().imag]}
        if args.j:
            with ctx.workprec():
                entry["j"] = mp.nstr(j_eval(z, ctx), 20)
        rows.append(entry)
    payload = {"d": d, "d_K": group.discriminant.d_K,
               "conductor": group.discriminant.f, "h": group.h, "points": rows}
    lines = [f"d = {d} = {group.discriminant.f}^2 * {group.discriminant.d_K}, "
             f"h = {group.h}"]
    for entry in rows:
        a, b, c = entry["form"]
        line = f"  ({a},{b},{c})  z ~ {entry['approx'][0]:+.6f} + {entry['approx'][1]:.6f}i"
        if args.j:
            line += f"  j = {entry['j']}"
        lines.append(line)
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_modpoly_eval(args) -> int:
    ctx = _context(args)
    try:
        z1 = parse_point(args.z1)
        z2 = parse_point(args.z2)
        value = modpoly_eval(args.m, z1, z2, ctx)
    except (ValueError, QuadFormError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_COMPUTE
    payload = {"m": args.m, "z1": args.z1, "z2": args.z2,
               "zero": value.is_zero,
               "zero_cosets": [list(c) for c in value.zero_cosets],
               "rel_error": float(value.rel_error)}
    if value.is_zero:
        text = f"phi_{args.m} = 0 (vanishing cosets {list(value.zero_cosets)})"
    else:
        payload["value"] = mp.nstr(value.value, 30)
        payload["log_abs"] = float(value.log_abs())
        text = f"phi_{args.m} = {mp.nstr(value.value, 30)}"
    _emit(args, payload, text)
    return EXIT_OK


def _report_dict(rep) -> dict:
    out = {
        "d1": rep.d1, "d2": rep.d2, "m": rep.m,
        "cycle_kind": rep.cycle_kind, "group_order": rep.group_order,
        "status": rep.status, "asserted": rep.asserted,
        "elapsed": round(rep.elapsed, 4),
    }
    if rep.norm is not None:
        out["norm"] = str(rep.norm)
        out["log_norm"] = rep.log_norm
        out["non_unit"] = rep.non_unit
    if rep.factorization is not None:
        out["factorization"] = [[str(p), e] for p, e in rep.factorization.factors]
        out["cofactor"] = str(rep.factorization.cofactor)
        out["witness"] = rep.witness
    if rep.chain:
        out["chain"] = [{"k": c.k, "mk": c.mk, "neg_gkm": c.neg_gkm,
                         "bound": c.bound, "passed": c.passed} for c in rep.chain]
    if rep.epsilon_bounds:
        out["epsilon_bounds"] = [
            {"epsilon": b.epsilon, "count": b.count, "rhs": b.rhs,
             "lhs": b.lhs, "passed": b.passed} for b in rep.epsilon_bounds]
    if rep.singular_pair is not None:
        out["singular_pair"] = list(rep.singular_pair)
    if rep.error:
        out["error"] = rep.error
    return out


def _report_text(rep) -> str:
    lines = [f"(d1, d2, m) = ({rep.d1}, {rep.d2}, {rep.m})  "
             f"[{rep.cycle_kind}, |Z(W)| = {rep.group_order}]"]
    if rep.status == "zero":
        lines.append(f"  value is zero on the cycle at pair {rep.singular_pair}")
    elif rep.status == "error":
        lines.append(f"  error: {rep.error}")
    else:
        digits = len(str(rep.norm))
        shown = str(rep.norm) if digits <= 50 else f"{str(rep.norm)[:24]}...({digits} digits)"
        tag = "" if rep.asserted else "  [diagnostic product, not asserted as the norm]"
        lines.append(f"  N = {shown}{tag}")
        lines.append(f"  log N = {rep.log_norm:.6f}, non-unit: {rep.non_unit}")
        if rep.factorization is not None:
            lines.append(f"  N = {rep.factorization}")
            lines.append(f"  isogeny witness prime: {rep.witness}")
        for c in rep.chain:
            lines.append(f"  chain k={c.k}: 2 log N = {2 * rep.log_norm:.4f} >= "
                         f"m_k * (-G_k^m) = {c.bound:.4f}  {'pass' if c.passed else 'FAIL'}")
        for b in rep.epsilon_bounds:
            lines.append(f"  eps={b.epsilon}: count {b.count}, "
                         f"log N = {b.lhs:.4f} >= {b.rhs:.6f}  "
                         f"{'pass' if b.passed else 'FAIL'}")
    return "\n".join(lines)


def cmd_norm(args) -> int:
    ctx = _context(args)
    rep = verify_nonunit(args.d1, args.d2, args.m, ctx, factor=args.factor)
    if rep.status == "ok":
        for eps in args.epsilon or []:
            try:
                verify_lower_bound(args.d1, args.d2, args.m, eps, ctx, report=rep)
            except (SingularityError, ValueError) as err:
                print(f"epsilon bound skipped: {err}", file=sys.stderr)
        if args.chain:
            try:
                verify_chain(args.d1, args.d2, args.m, ctx, report=rep)
            except (SingularityError, TailBudgetError) as err:
                print(f"chain skipped: {err}", file=sys.stderr)
    _emit(args, _report_dict(rep), _report_text(rep))
    if rep.status == "zero":
        return EXIT_OK
    if rep.status != "ok":
        return EXIT_COMPUTE
    return EXIT_OK if rep.all_passed else EXIT_ASSERT


def cmd_greens(args) -> int:
    ctx = _context(args)
    if args.k not in (1, 3, 5, 7):
        print("error: --k must be odd in {1, 3, 5, 7}", file=sys.stderr)
        return EXIT_COMPUTE
    try:
        if args.cycle:
            d1, d2 = args.cycle
            cycle = build_cycle(d1, d2)
            total = 0.0
            tail = 0.0
            rows = []
            for pair in cycle.pairs:
                part = G_k_m(args.k, args.m, pair.z1, pair.z2, ctx,
                             tail_target=args.tail)
                rows.append({"pair": list(pair.key),
                             "multiplicity": pair.multiplicity,
                             "value": float(part.value),
                             "tail_bound": part.tail_bound})
                total += pair.multiplicity * float(part.value)
                tail += pair.multiplicity * part.tail_bound
            payload = {"k": args.k, "m": args.m, "d1": d1, "d2": d2,
                       "value": total, "tail_bound": tail, "pairs": rows}
            text = "\n".join(
                [f"G_{args.k}^{args.m}(Z({d1},{d2})) = {total:.9f} "
                 f"(tail bound {tail:.2e})"] +
                [f"  pair {r['pair']} x{r['multiplicity']}: {r['value']:.9f}"
                 for r in rows])
        else:
            z1 = parse_point(args.z1)
            z2 = parse_point(args.z2)
            rows = []
            if args.k == 1:
                for coset in hecke_cosets(args.m).reps:
                    w = coset_apply(coset, z2)
                    val = float(G_1(z1, w, ctx))
                    rows.append({"coset": list(coset), "value": val})
                total = sum(r["value"] for r in rows)
                tail = 0.0
            else:
                part = G_k_m(args.k, args.m, z1, z2, ctx, tail_target=args.tail)
                total, tail = float(part.value), part.tail_bound
                rows.append({"coset": "all", "value": total,
                             "tail_bound": part.tail_bound,
                             "terms": part.terms})
            payload = {"k": args.k, "m": args.m, "value": total,
                       "tail_bound": tail, "per_coset": rows}
            text = "\n".join(
                [f"G_{args.k}^{args.m}(z1, z2) = {total:.9f} "
                 f"(tail bound {tail:.2e})"] +
                [f"  {r}" for r in rows])
    except (SingularityError, TailBudgetError, ValueError, QuadFormError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_COMPUTE
    _emit(args, payload, text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    ctx = _context(args)
    if args.coprime_fundamental:
        values = fundamental_discriminants(args.dmax)
    else:
        values = [d for d in range(-3, -args.dmax - 1, -1) if d % 4 in (0, 1)]
    ms = list(range(1, args.mmax + 1))
    reports = sweep(values, values, ms, ctx, policy=args.policy,
                    epsilons=args.epsilon or (), chain=args.chain,
                    factor=args.factor, workers=args.threads)
    stats = summarize(reports)
    payload = {"summary": stats, "reports": [_report_dict(r) for r in reports]}
    text = (f"{stats['total']} instances: {stats['ok']} ok, "
            f"{stats['zero']} zero, {stats['error']} error, "
            f"{stats['assert_failures']} assertion failures")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
        print(text)
    else:
        _emit(args, payload, text)
    return EXIT_OK if stats["assert_failures"] == 0 else EXIT_ASSERT


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision-bits", type=int, default=256,
                        help="working mantissa bits (default 256)")
    common.add_argument("--tolerance", type=float, default=1e-9,
                        help="integer recognition tolerance (default 1e-9)")
    common.add_argument("--json", action="store_true", help="JSON output")
    common.add_argument("--out", type=str, default=None,
                        help="write output to this path instead of stdout")
    common.add_argument("--cache-dir", type=str, default=None,
                        help="directory for class polynomial / series caches")
    common.add_argument("--threads", type=int, default=1,
                        help="worker processes for sweeps (default 1)")
    parser = argparse.ArgumentParser(
        prog="singmod",
        description="Exact norms and Green's-function bounds for modular "
                    "polynomial values at CM points")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classpoly", parents=[common],
                       help="class polynomial of a discriminant")
    p.add_argument("d", type=int)
    p.set_defaults(func=cmd_classpoly)

    p = sub.add_parser("cmpoints", parents=[common], help="reduced forms and CM points of a discriminant")
    p.add_argument("d", type=int)
    p.add_argument("--j", action="store_true", help="include j-values")
    p.set_defaults(func=cmd_cmpoints)

    p = sub.add_parser("modpoly-eval", parents=[common], help="modular polynomial value at two points")
    p.add_argument("m", type=int)
    p.add_argument("z1", type=str)
    p.add_argument("z2", type=str)
    p.set_defaults(func=cmd_modpoly_eval)

    p = sub.add_parser("norm", parents=[common], help="exact cycle norm with optional bound checks")
    p.add_argument("d1", type=int)
    p.add_argument("d2", type=int)
    p.add_argument("m", type=int)
    p.add_argument("--epsilon", type=float, action="append",
                   help="check the epsilon-neighborhood lower bound (repeatable)")
    p.add_argument("--chain", action="store_true",
                   help="check the k in {3,5,7} chain inequalities")
    p.add_argument("--factor", action="store_true",
                   help="factor the norm and report the witness prime")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("greens", parents=[common], help="Hecke-averaged Green's function values")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--z1", type=str)
    p.add_argument("--z2", type=str)
    p.add_argument("--cycle", type=int, nargs=2, metavar=("D1", "D2"))
    p.add_argument("--tail", type=float, default=None,
                   help="absolute tail budget for the lattice sums")
    p.set_defaults(func=cmd_greens)

    p = sub.add_parser("sweep", parents=[common], help="batch verification over a discriminant grid")
    p.add_argument("--dmax", type=int, required=True)
    p.add_argument("--mmax", type=int, default=3)
    p.add_argument("--coprime-fundamental", action="store_true",
                   help="restrict to fundamental discriminants")
    p.add_argument("--policy", choices=("exact", "all"), default="exact")
    p.add_argument("--epsilon", type=float, action="append")
    p.add_argument("--chain", action="store_true")
    p.add_argument("--factor", action="store_true")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "greens" and not args.cycle and not (args.z1 and args.z2):
        print("error: greens needs --cycle or both --z1/--z2", file=sys.stderr)
        return EXIT_COMPUTE
    _load_jcoeff_cache(args)
    try:
        code = args.func(args)
    except PrecisionError as err:
        print(f"precision failure: {err}", file=sys.stderr)
        return EXIT_COMPUTE
    except (QuadFormError, ValueError) as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_COMPUTE
    _save_jcoeff_cache(args)
    return code


if __name__ == "__main__":
    sys.exit(main())
