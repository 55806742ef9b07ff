"""Command line front end.

Subcommands: validate, eval, diagnose, solve, oracle, lcp, graph, gen.
Text output is a human-readable summary; --format json emits a report
conforming to schemas/report.schema.json.  Exit codes: 0 success, 1 usage
error, 2 invalid input file, 3 solver finished without converging,
4 capability exceeded (enumeration too large, or a singular smooth part
without --regularize).  The environment variable PLABS_LIMIT caps every
brute-force enumeration unless --limit overrides it.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import analysis, gallery, graph as graphmod, lcp as lcpmod, solvers
from .core import AbsNormalForm, evaluate, regularize_smooth_part, validate
from .cpl import CplSystem, brute_force_solutions, form_from_cpl, h_eval, reduce_form
from .docio import ProblemDocument, load_document, save_document
from .errors import (BadParams, DocumentError, PlabsError, SingularSmoothPart,
                     TooLarge, UnknownExample)

_EXIT_OK, _EXIT_USAGE, _EXIT_BADFILE, _EXIT_NOCONV, _EXIT_CAPABILITY = 0, 1, 2, 3, 4

_FORM_METHODS = {"seidel", "newton-opl"}
_CPL_METHODS = {"modulus", "newton-cpl", "signed-ge"}


class _UsageError(Exception):
    pass


def _parse_vector(text: str, size: int, name: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise _UsageError(f"could not parse {name}: {exc}") from exc
    if len(vals) != size:
        raise _UsageError(f"{name} must have {size} components, got {len(vals)}")
    return np.array(vals)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _emit(args, report: dict, text_lines: list[str]) -> None:
    if args.format == "json":
        print(json.dumps(_jsonable(report), indent=2))
    else:
        for line in text_lines:
            print(line)


def _limit(args, default: int) -> int:
    if getattr(args, "limit", None) is not None:
        value = args.limit
    else:
        env = os.environ.get("PLABS_LIMIT")
        value = int(env) if env else default
    if value > 20:
        print(f"warning: brute-force limit {value} means 2^{value} subproblems",
              file=sys.stderr)
    return value


def _load(args) -> ProblemDocument:
    return load_document(args.file)


def _as_form(doc: ProblemDocument, args) -> AbsNormalForm:
    form = doc.problem if doc.kind == "abs-normal" else form_from_cpl(doc.problem)
    if getattr(args, "regularize", False):
        form = regularize_smooth_part(form)
    return form


def _as_cpl(doc: ProblemDocument, args) -> CplSystem:
    if doc.kind == "cpl":
        return doc.problem
    form = doc.problem
    if getattr(args, "regularize", False):
        form = regularize_smooth_part(form)
    return reduce_form(form, y_target=doc.target)


# -- subcommand handlers ---------------------------------------------------


def _cmd_validate(args) -> int:
    doc = _load(args)
    if doc.kind == "cpl":
        report = {"command": "validate", "problem": str(args.file), "kind": doc.kind,
                  "ok": True, "nu": 1 if doc.problem.s else 0, "messages": []}
        _emit(args, report, [f"kind: cpl  s={doc.problem.s}", "ok: true (simply switched)"])
        return _EXIT_OK
    rep = validate(doc.problem)
    report = {"command": "validate", "problem": str(args.file), "kind": doc.kind,
              "ok": rep.ok, "nu": rep.nu, "messages": rep.messages}
    lines = [f"kind: abs-normal  n={doc.problem.n} s={doc.problem.s} m={doc.problem.m}",
             f"switching depth nu: {rep.nu}", f"ok: {str(rep.ok).lower()}"]
    lines += [f"  - {msg}" for msg in rep.messages]
    _emit(args, report, lines)
    return _EXIT_OK


def _cmd_eval(args) -> int:
    doc = _load(args)
    if doc.kind != "abs-normal":
        raise _UsageError("eval needs an abs-normal document")
    form = doc.problem
    x = _parse_vector(args.x, form.n, "--x")
    rec = evaluate(form, x)
    report = {"command": "eval", "problem": str(args.file), "kind": doc.kind,
              "x": rec.x, "z": rec.z, "z_abs": rec.z_abs, "y": rec.y,
              "sigma": str(rec.sigma)}
    lines = [f"x     = {rec.x.tolist()}", f"z     = {rec.z.tolist()}",
             f"|z|   = {rec.z_abs.tolist()}", f"y     = {rec.y.tolist()}",
             f"sigma = {rec.sigma}"]
    _emit(args, report, lines)
    return _EXIT_OK


def _fmt(v) -> str:
    if v is None:
        return "skipped"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _cmd_diagnose(args) -> int:
    doc = _load(args)
    form = _as_form(doc, args)
    limit = _limit(args, 16)
    cert = analysis.certificates(form, limit=limit)
    try:
        likq = analysis.likq_sufficient(form.c, form.Z)
    except TooLarge:
        likq = None
    sample = None
    if form.m == form.n:
        try:
            smp = analysis.sample_orientation(form, samples=32, seed=doc.seed or 0)
            sample = {"samples": smp.samples, "det_signs": sorted(smp.det_signs),
                      "coherent_sampled": smp.coherent_sampled}
        except PlabsError:
            sample = None
    report = {
        "command": "diagnose", "problem": str(args.file), "kind": doc.kind,
        "nu": cert.nu, "schur_available": cert.schur_available,
        "norms_s": {str(p): v for p, v in cert.norms_s.items()},
        "norms_l": {str(p): v for p, v in cert.norms_l.items()},
        "seidel": cert.seidel, "rho_abs": cert.rho_abs,
        "equilibrated_inf_norm": cert.equilibrated_inf_norm,
        "rho_hat": cert.rho_hat, "rho_bar": cert.rho_bar,
        "sign_real_radius": cert.sign_real_radius,
        "sigma_coherent": cert.sigma_coherent,
        "likq_sufficient": likq,
        "skipped": cert.skipped, "messages": cert.messages,
        "orientation_sample": sample,
        "verdicts": cert.verdicts,
    }
    lines = [f"switching depth nu: {cert.nu}"]
    if not cert.schur_available:
        lines.append("Schur complement unavailable (singular J); try --regularize")
        lines += [f"  {m}" for m in cert.messages]
    else:
        lines.append("certificate scalars:")
        lines.append("  " + "  ".join(f"||S||_{p}={_fmt(v)}" for p, v in cert.norms_s.items()))
        lines.append(f"  seidel={_fmt(cert.seidel)} (p={cert.seidel_p})  "
                     f"rho(|S|)={_fmt(cert.rho_abs)}  "
                     f"equilibrated_inf={_fmt(cert.equilibrated_inf_norm)}")
        lines.append(f"  rho_hat={_fmt(cert.rho_hat)} (p={cert.rho_hat_p})  "
                     f"rho_bar={_fmt(cert.rho_bar)} (p={cert.rho_bar_p})")
        lines.append(f"  sign_real_radius={_fmt(cert.sign_real_radius)}  "
                     f"sigma_coherent={_fmt(cert.sigma_coherent)}  "
                     f"likq_sufficient={_fmt(likq)}")
        lines.append("verdicts (sufficient conditions):")
        for k, v in cert.verdicts.items():
            lines.append(f"  {k:<12} {'PASS' if v else 'fail'}")
        for skip in cert.skipped:
            lines.append(f"  note: {skip}")
        if sample:
            lines.append(f"sampled orientation: det signs {sample['det_signs']} "
                         f"over {sample['samples']} probes")
    _emit(args, report, lines)
    return _EXIT_OK


def _cmd_solve(args) -> int:
    doc = _load(args)
    method = args.method
    tol = args.tol
    maxit = args.maxit
    if method in _CPL_METHODS:
        sys_ = _as_cpl(doc, args)
        z0 = _parse_vector(args.z0, sys_.s, "--z0") if args.z0 else None
        if method == "modulus":
            trace = solvers.modulus(sys_, z0=z0, tol=tol, maxit=maxit)
        elif method == "newton-cpl":
            trace = solvers.newton_cpl(sys_, z0=z0, maxit=maxit)
        else:
            _, trace = solvers.signed_ge(sys_)
        final_residual = float(np.max(np.abs(h_eval(sys_, trace.z) - sys_.c_hat),
                                      initial=0.0))
    elif method in _FORM_METHODS:
        form = _as_form(doc, args)
        if doc.kind == "abs-normal" and doc.target is not None:
            form = form.with_target(doc.target)
        if method == "seidel":
            z0 = _parse_vector(args.z0, form.s, "--z0") if args.z0 else None
            trace = solvers.block_seidel(form, z0=z0, tol=tol, maxit=maxit)
        else:
            x0 = _parse_vector(args.x0, form.n, "--x0") if args.x0 else None
            trace = solvers.newton_opl(form, x0=x0, maxit=maxit, tol=tol,
                                       use_escape=args.escape)
        final_residual = float(np.max(np.abs(evaluate(form, trace.x).y), initial=0.0))
    else:  # pragma: no cover - argparse choices forbid it
        raise _UsageError(f"unknown method {method}")

    report = {
        "command": "solve", "problem": str(args.file), "kind": doc.kind,
        "method": method, "status": trace.status, "exact": trace.exact,
        "period": trace.period, "iterations": trace.iterations,
        "flops": trace.flops, "verified_residual": final_residual,
        "residual_norms": trace.residual_norms,
        "z": trace.z, "x": trace.x,
    }
    lines = [f"method: {method}",
             f"status: {trace.status}"
             + (" (exact)" if trace.exact else "")
             + (f" period={trace.period}" if trace.period else ""),
             f"iterations: {trace.iterations}",
             f"verified residual (recomputed): {final_residual:.3e}"]
    if trace.z is not None:
        lines.append(f"z = {trace.z.tolist()}")
    if trace.x is not None:
        lines.append(f"x = {trace.x.tolist()}")
    if trace.flops:
        lines.append(f"fused multiply-adds: {trace.flops}")
    _emit(args, report, lines)
    return _EXIT_OK if trace.status == "converged" else _EXIT_NOCONV


def _cmd_oracle(args) -> int:
    doc = _load(args)
    sys_ = _as_cpl(doc, args)
    limit = _limit(args, 16)
    sols = brute_force_solutions(sys_, limit=limit)
    residuals = [float(np.max(np.abs(h_eval(sys_, z) - sys_.c_hat), initial=0.0))
                 for z in sols]
    report = {"command": "oracle", "problem": str(args.file), "kind": doc.kind,
              "count": len(sols), "solutions": sols, "residuals": residuals}
    lines = [f"solutions found by enumeration: {len(sols)}"]
    for z, r in zip(sols, residuals):
        lines.append(f"  z = {z.tolist()}   residual {r:.2e}")
    _emit(args, report, lines)
    return _EXIT_OK


def _cmd_lcp(args) -> int:
    doc = _load(args)
    sys_ = _as_cpl(doc, args)
    data = lcpmod.to_lcp(sys_)
    pm_limit = _limit(args, 14)
    try:
        pm = lcpmod.p_matrix_check(data.M, limit=pm_limit)
    except TooLarge:
        pm = None
    enum = lcpmod.lcp_solve_enum(data, limit=max(pm_limit, 16))
    report = {"command": "lcp", "problem": str(args.file), "kind": doc.kind,
              "q": data.q, "M": data.M, "role_swapped": data.role_swapped,
              "p_matrix": pm, "solutions": enum.solutions(),
              "skipped_supports": enum.skipped_supports}
    lines = [f"q = {data.q.tolist()}",
             f"P-matrix: {_fmt(pm)}" + ("  (role-swapped reduction)" if data.role_swapped else ""),
             f"solutions: {len(enum)}"]
    for _, _, z in enum:
        lines.append(f"  z = {z.tolist()}")
    _emit(args, report, lines)
    return _EXIT_OK


def _cmd_graph(args) -> int:
    doc = _load(args)
    sys_ = _as_cpl(doc, args)
    limit = _limit(args, 14)
    g = graphmod.build_graph(sys_, limit=limit)
    comps = graphmod.analyze(g)
    comp_reports = []
    for comp in comps:
        comp_reports.append({
            "basin_size": comp.basin_size,
            "cycle_length": len(comp.cycle),
            "cycle": [graphmod.vertex_label(v, g.s) for v in comp.cycle],
            "fixed_point": comp.fixed_point,
            "cycle_valid": comp.cycle_valid,
            "residual_ok": comp.residual_ok,
        })
    dot_file = None
    if args.dot:
        dot_file = str(args.dot)
        with open(args.dot, "w") as fh:
            fh.write(graphmod.export_dot(g))
    report = {"command": "graph", "problem": str(args.file), "kind": doc.kind,
              "vertices": g.size, "components": comp_reports, "dot_file": dot_file}
    lines = [f"vertices: {g.size}  components: {len(comps)}"]
    for cr in comp_reports:
        kind = "fixed point" if cr["fixed_point"] else f"cycle of length {cr['cycle_length']}"
        lines.append(f"  basin {cr['basin_size']:>4}  {kind}: {' -> '.join(cr['cycle'])}")
    if dot_file:
        lines.append(f"DOT written to {dot_file}")
    _emit(args, report, lines)
    return _EXIT_OK


_GEN_PARAMS = {
    "one_d_kink": {"zeta": "zeta"},
    "schueth": {"eps": "eps"},
    "rump": {"n": "n"},
    "cyclic": {"s": "s", "a": "a"},
    "reflector": {},
    "tridiag_max": {"n": "n"},
    "random": {"n": "n", "s": "s", "seed": "seed", "target_norm": "target_norm"},
}


def _cmd_gen(args) -> int:
    name = args.example
    if name not in _GEN_PARAMS:
        raise UnknownExample(f"no example family named {name!r}; "
                             f"known: {', '.join(sorted(_GEN_PARAMS))}")
    params = {}
    for flag, param in _GEN_PARAMS[name].items():
        value = getattr(args, flag if flag != "s" else "s_param")
        if value is not None:
            if param in ("n", "s", "seed"):
                value = int(value)
            params[param] = value
    instance = gallery.generate(name, params)
    save_document(instance, args.output, name=name,
                  seed=params.get("seed"))
    report = {"command": "gen", "example": name, "output": str(args.output),
              "params": params}
    _emit(args, report, [f"wrote {name} instance to {args.output}"])
    return _EXIT_OK


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plabs",
        description="Diagnose and solve piecewise linear systems in abs-normal form.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, limit=False, regularize=False):
        p.add_argument("--format", choices=["text", "json"], default="text")
        if limit:
            p.add_argument("--limit", type=int, default=None,
                           help="brute-force enumeration cap (default per command; "
                                "PLABS_LIMIT overrides)")
        if regularize:
            p.add_argument("--regularize", action="store_true",
                           help="shift the smooth part before Schur-based steps")

    p = sub.add_parser("validate", help="structural report including the switching depth")
    p.add_argument("file")
    common(p)
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("eval", help="evaluate the form at a point")
    p.add_argument("file")
    p.add_argument("--x", required=True, help="comma-separated coordinates")
    common(p)
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("diagnose", help="certificates report (norms, radii, verdicts)")
    p.add_argument("file")
    common(p, limit=True, regularize=True)
    p.set_defaults(handler=_cmd_diagnose)

    p = sub.add_parser("solve", help="run one solver with certificate-aware reporting")
    p.add_argument("file")
    p.add_argument("--method", required=True,
                   choices=sorted(_FORM_METHODS | _CPL_METHODS))
    p.add_argument("--x0", default=None)
    p.add_argument("--z0", default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--maxit", type=int, default=None)
    p.add_argument("--escape", action="store_true",
                   help="resolve signatures by polynomial escape (newton-opl)")
    common(p, regularize=True)
    p.set_defaults(handler=_cmd_solve)

    p = sub.add_parser("oracle", help="brute-force enumeration of all CPL solutions")
    p.add_argument("file")
    common(p, limit=True, regularize=True)
    p.set_defaults(handler=_cmd_oracle)

    p = sub.add_parser("lcp", help="LCP reduction, P-matrix check, enumerated solutions")
    p.add_argument("file")
    common(p, limit=True, regularize=True)
    p.set_defaults(handler=_cmd_lcp)

    p = sub.add_parser("graph", help="Newton transition automaton summary and DOT export")
    p.add_argument("file")
    p.add_argument("--dot", default=None, help="write DOT text to this path")
    common(p, limit=True, regularize=True)
    p.set_defaults(handler=_cmd_graph)

    p = sub.add_parser("gen", help="generate a gallery instance as a problem file")
    p.add_argument("--example", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--s", dest="s_param", type=int, default=None)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--zeta", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--target-norm", dest="target_norm", type=float, default=None)
    common(p)
    p.set_defaults(handler=_cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return _EXIT_OK if exc.code in (0, None) else _EXIT_USAGE
    try:
        return args.handler(args)
    except DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_BADFILE
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CAPABILITY
    except SingularSmoothPart as exc:
        print(f"error: {exc} (pass --regularize to shift the smooth part)",
              file=sys.stderr)
        return _EXIT_CAPABILITY
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except (UnknownExample, BadParams) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except (PlabsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
