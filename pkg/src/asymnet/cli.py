"""Command-line front end.  Exit codes: 0 success, 1 verification failure, 2 usage or input error."""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

import mpmath

from . import config, io
from .generators import HyperboloidSpec, hyperboloid_net, minimal_net
from .net import DegenerateNetError
from .reconstruction import ReconstructionError, extract, reconstruct
from .structure import GaugePropagationError, VerificationError, build_structure
from .suites import classify, run_suites

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _error(kind: str, message: str, **extra) -> None:
    rec = {"error": kind, "message": message}
    rec.update(extra)
    print(json.dumps(rec, default=str), file=sys.stderr)


def _precision(args, *paths):
    """workdps context from --dps, else from the first input file that records one."""
    dps = getattr(args, "dps", None)
    if dps is None:
        for p in paths:
            dps = io.file_dps(p)
            if dps:
                break
    return mpmath.workdps(dps) if dps else contextlib.nullcontext()


def _emit(doc, out):
    text = json.dumps(doc, indent=1, default=_jsonable)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _jsonable(x):
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)


def cmd_generate_hyperboloid(args) -> int:
    dps = args.dps if args.dps is not None else 40
    spec = HyperboloidSpec(
        c=args.c, u0=args.u0, v0=args.v0, du=args.du, dv=args.dv, nu=args.nu, nv=args.nv,
        dps=dps or None, recentre=not args.no_recentre,
    )
    with mpmath.workdps(dps) if dps else contextlib.nullcontext():
        net, _ = hyperboloid_net(spec)
        io.save_net(net, args.output)
    return EXIT_OK


def cmd_generate_minimal(args) -> int:
    f, g = io.load_samples(args.f_samples), io.load_samples(args.g_samples)
    net = minimal_net(f, g, base=tuple(args.base))
    io.save_net(net, args.output)
    return EXIT_OK


def _load(args):
    net = io.load_net(args.net)
    seed = mpmath.mpf(args.gamma0) if net.multiprecision else float(args.gamma0)
    return net, seed


def cmd_analyze(args) -> int:
    with _precision(args, args.net):
        net, seed = _load(args)
        s = build_structure(net, seed, tuple(args.seed_quad), tol=None, planarity_tol=None)
        mp = net.multiprecision
        enc = lambda f: io._encode_array(f.values, mp)  # noqa: E731
        doc = {
            "nu": net.domain.nu,
            "nv": net.domain.nv,
            "gamma_seed": io._encode(s.gamma_seed, mp),
            "seed_quad": list(s.seed_quad),
            "Omega": enc(s.Omega),
            "gamma": enc(s.gamma),
            "nu_conormal": enc(s.nu),
            "xi": enc(s.xi),
            "A": enc(s.A),
            "B": enc(s.B),
            "p_u": enc(s.p.u), "p_v": enc(s.p.v),
            "h_u": enc(s.h.u), "h_v": enc(s.h.v),
            "H_u": enc(s.H.u), "H_v": enc(s.H.v),
            "reports": {k: r.summary() for k, r in run_suites(net, seed, tuple(args.seed_quad)).reports.items()},
            "tolerances": config.as_dict(),
        }
        _emit(doc, args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    with _precision(args, args.net):
        net, seed = _load(args)
        run = run_suites(net, seed, tuple(args.seed_quad))
    if args.csv:
        d = Path(args.csv)
        d.mkdir(parents=True, exist_ok=True)
        for name, rep in run.reports.items():
            io.write_residual_csv(rep, d / f"{name}.csv")
    failed = run.failures(args.tol)
    doc = {
        "tolerance": args.tol,
        "passed": run.passed(args.tol),
        "failed_suites": failed,
        "suites": {k: {**r.summary(), "pass": r.max_abs <= args.tol} for k, r in run.reports.items()},
        "errors": run.errors,
    }
    _emit(doc, args.output)
    for e in run.errors:
        _error("verification", e["message"], suite=e["suite"])
    for name in failed:
        r = run.reports[name]
        _error("verification", f"{name} residual {r.max_abs:.3e} exceeds {args.tol:g}", suite=name,
               argmax=r.argmax, sites=r.sites_above(args.tol)[:20])
    return EXIT_OK if run.passed(args.tol) else EXIT_FAIL


def cmd_classify(args) -> int:
    with _precision(args, args.net):
        net, seed = _load(args)
        s = build_structure(net, seed, tuple(args.seed_quad), tol=None, planarity_tol=None)
        _emit(classify(s, args.tol), args.output)
    return EXIT_OK


def cmd_extract(args) -> int:
    with _precision(args, args.net):
        net, seed = _load(args)
        data = extract(net, seed, tuple(args.seed_quad), tol=args.tol)
        io.save_compat(data, args.output)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    with _precision(args, args.compat):
        data = io.load_compat(args.compat)
        rec = reconstruct(data, data_tol=args.data_tol)
        io.save_net(rec.net, args.output)
        print(json.dumps({"coherence": rec.coherence.summary(), "gauge_loop": rec.gauge.loop.summary(),
                          "gauge_plaquette": rec.gauge.plaquette.summary()}))
    return EXIT_OK


def cmd_export_obj(args) -> int:
    with _precision(args, args.net):
        io.export_obj(io.load_net(args.net), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="asymnet", description="Discrete affine geometry of asymptotic nets.")
    ap.add_argument("--dps", type=int, default=None,
                    help="decimal digits for multiprecision runs (default: from the input file)")
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write an example net").add_subparsers(dest="kind", required=True)
    hy = gen.add_parser("hyperboloid", help="sampled one-sheet hyperboloid")
    for name, default in (("c", 1.0), ("u0", 1.0), ("v0", 1.0), ("du", 0.1), ("dv", 0.2)):
        hy.add_argument(f"--{name}", type=float, default=default)
    hy.add_argument("--nu", type=int, default=20)
    hy.add_argument("--nv", type=int, default=20)
    hy.add_argument("--no-recentre", action="store_true", help="keep the quadric's own origin")
    hy.add_argument("-o", "--output", required=True)
    hy.set_defaults(func=cmd_generate_hyperboloid)
    mn = gen.add_parser("minimal", help="net from separable co-normals f(u) + g(v)")
    mn.add_argument("--f-samples", required=True)
    mn.add_argument("--g-samples", required=True)
    mn.add_argument("--base", type=float, nargs=3, default=(0.0, 0.0, 0.0))
    mn.add_argument("-o", "--output", required=True)
    mn.set_defaults(func=cmd_generate_minimal)

    def net_cmd(name, func, help_, output_required=False):
        p = sub.add_parser(name, help=help_)
        p.add_argument("net")
        p.add_argument("--gamma0", default="1", help="gauge value at the seed quad")
        p.add_argument("--seed-quad", type=int, nargs=2, default=(0, 0))
        p.add_argument("-o", "--output", required=output_required)
        p.set_defaults(func=func)
        return p

    net_cmd("analyze", cmd_analyze, "compute the affine structure")
    v = net_cmd("verify", cmd_verify, "run every residual suite")
    v.add_argument("--tol", type=float, default=config.IDENTITY_TOL)
    v.add_argument("--csv", help="directory for one CSV per suite")
    c = net_cmd("classify", cmd_classify, "minimal / affine sphere / constant-c test")
    c.add_argument("--tol", type=float, default=config.CLASSIFY_TOL)
    e = net_cmd("extract", cmd_extract, "write reconstruction input", output_required=True)
    e.add_argument("--tol", type=float, default=config.IDENTITY_TOL)
    net_cmd("export-obj", cmd_export_obj, "write a Wavefront OBJ mesh", output_required=True)

    r = sub.add_parser("reconstruct", help="integrate a compat file into a net")
    r.add_argument("compat")
    r.add_argument("--data-tol", type=float, default=config.RECONSTRUCT_DATA_TOL)
    r.add_argument("-o", "--output", required=True)
    r.set_defaults(func=cmd_reconstruct)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except io.FormatError as e:
        _error("input", str(e), path=e.path, field=e.field)
        return EXIT_USAGE
    except (DegenerateNetError, GaugePropagationError, VerificationError, ReconstructionError) as e:
        _error("verification", str(e), type=type(e).__name__)
        return EXIT_FAIL
    except (ValueError, OSError) as e:
        _error("usage", str(e), type=type(e).__name__)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
