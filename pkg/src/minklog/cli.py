"""Command-line front end: ``minklog {solve,compute,verify,oracle,plot,gen-measure}``.

Exit codes: 0 ok, 1 input error, 2 non-convergence, 3 verification or
oracle failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import __version__
from .density import GGParams
from .errors import HemisphereConcentrationError, MinklogError, ParameterDomainError, ToleranceNotMetError
from .geometry import DirectionSet, DiscreteMeasure, SupportVector, concentration_direction, radii, wulff_shape
from .io import FORMAT_VERSION, InputFileError, body_record, dumps, measure_record, parse_body, parse_measure, read_json
from .measures import McSpec, gg_volume, lp_surface_measure, mc_surface_oracle, mc_volume_oracle, surface_and_cone
from .quadrature import QuadratureSpec
from .solver import C0FloorError, SolveConfig, entropy_bound_check, euler_lagrange_residual, solve

EXIT_OK, EXIT_INPUT, EXIT_NONCONV, EXIT_VERIFY = 0, 1, 2, 3
VERIFY_TOL = 1e-8
ORACLE_Z = 4.0

log = logging.getLogger("minklog")


class InputError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params(args, n: int) -> GGParams:
    return GGParams(args.b, args.m, n)


def _vertices(P) -> list:
    if P.n == 2:
        # walk the polygon in facet order so the list traces the boundary
        return [f.loop[1] for f in P.facets]
    return P.vertices


def _bound_record(bound) -> dict:
    return {
        "lhs": bound.lhs,
        "rhs": bound.rhs,
        "holds": bound.holds,
        "C": bound.C,
        "C_tilde": bound.C_tilde,
        "alpha0": bound.alpha0,
        "v0": list(bound.v0),
    }


# ---------------------------------------------------------------------------
# solve


def cmd_solve(args) -> int:
    data = read_json(args.measure)
    mu = parse_measure(data, args.measure)
    params = _params(args, mu.n)
    cfg = SolveConfig(
        kappa0=args.kappa0,
        max_iters=args.max_iters,
        el_tol=args.el_tol,
        allow_small_kappa=args.allow_small_kappa,
    )
    try:
        rep = solve(mu, params, cfg)
    except C0FloorError as exc:
        print(f"minklog: solve aborted: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    cfg = rep.config
    bound = entropy_bound_check(rep.h_star, mu, rep.geometry)
    report = {
        "version": __version__,
        "format": FORMAT_VERSION,
        "seed": args.seed,
        "n": mu.n,
        "b": params.b,
        "m": params.m,
        "kappa0": cfg.kappa0,
        "el_tol": cfg.el_tol,
        "allow_small_kappa": cfg.allow_small_kappa,
        "status": rep.status,
        "iterations": rep.iterations,
        "directions": mu.dirs.vectors,
        "weights": mu.weights,
        "h_star": rep.h_star.h,
        "vertices": _vertices(rep.geometry),
        "surface": rep.surface.values,
        "cone": rep.cone.values,
        "gamma": rep.gamma,
        "entropy": rep.entropy,
        "el_residual": rep.el_residual,
        "entropy_bound": _bound_record(bound),
        "trace": [t.as_dict() for t in rep.trace],
    }
    if "name" in data:
        report["name"] = data["name"]
    _emit(dumps(report), args.out)
    print(f"minklog: {rep.status} after {rep.iterations} iterations, "
          f"el_residual={rep.el_residual:.3e}, gamma={rep.gamma:.12g}", file=sys.stderr)
    return EXIT_OK if rep.converged else EXIT_NONCONV


# ---------------------------------------------------------------------------
# compute


def cmd_compute(args) -> int:
    sv = parse_body(read_json(args.body), args.body)
    params = _params(args, sv.n)
    quad = QuadratureSpec.default(sv.n)
    P = wulff_shape(sv)
    S, G = surface_and_cone(P, params, quad)
    r, R = radii(P)
    out = {
        "version": __version__,
        "format": FORMAT_VERSION,
        "n": sv.n,
        "b": params.b,
        "m": params.m,
        "directions": sv.dirs.vectors,
        "h_star": sv.h,
        "effective_h": P.effective_h,
        "active": P.active,
        "vertices": _vertices(P),
        "gamma": gg_volume(P, params, quad),
        "surface": S.values,
        "cone": G.values,
        "radii": {"r": r, "R": R},
    }
    if args.p is not None:
        out["p"] = args.p
        out["lp_surface"] = lp_surface_measure(P, params, args.p, quad).values
    _emit(dumps(out), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _compare(name, stored, fresh, bad: list) -> None:
    a = np.asarray(stored, dtype=float)
    b = np.asarray(fresh, dtype=float)
    if a.shape != b.shape:
        bad.append(f"{name} (shape {a.shape} vs {b.shape})")
        return
    diff = float(np.max(np.abs(a - b))) if a.size else 0.0
    if not diff <= VERIFY_TOL:
        bad.append(f"{name} (max deviation {diff:.3e})")


def cmd_verify(args) -> int:
    data = read_json(args.report)
    try:
        mu = parse_measure(data, args.report)
        sv = parse_body(data, args.report)
        params = GGParams(float(data["b"]), float(data["m"]), mu.n)
        cfg = SolveConfig(
            kappa0=float(data["kappa0"]),
            el_tol=float(data["el_tol"]),
            allow_small_kappa=bool(data.get("allow_small_kappa", False)),
        ).resolved(mu.n)
        stored = {k: data[k] for k in ("gamma", "cone", "el_residual", "entropy_bound")}
        stored_bound = (float(stored["entropy_bound"]["lhs"]), float(stored["entropy_bound"]["rhs"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MinklogError):
            raise
        raise InputError(f"{args.report}: malformed report ({exc!r})") from exc
    params.require_variational()
    P = wulff_shape(sv)
    quad = cfg.quad
    _, G = surface_and_cone(P, params, quad)
    gamma = gg_volume(P, params, quad)
    residual = euler_lagrange_residual(sv, mu, params, quad)
    bound = entropy_bound_check(sv, mu, P)
    bad: list[str] = []
    _compare("gamma", stored["gamma"], gamma, bad)
    _compare("cone", stored["cone"], G.values, bad)
    _compare("el_residual", stored["el_residual"], residual, bad)
    _compare("entropy_bound.lhs", stored_bound[0], bound.lhs, bad)
    _compare("entropy_bound.rhs", stored_bound[1], bound.rhs, bad)
    if not residual <= cfg.el_tol:
        bad.append(f"el_residual {residual:.3e} exceeds el_tol {cfg.el_tol:g}")
    if not bound.holds:
        bad.append("entropy_bound (lower bound violated)")
    if bad:
        print("minklog: verification failed: " + "; ".join(bad), file=sys.stderr)
        return EXIT_VERIFY
    print(f"minklog: verified gamma={gamma:.12g} el_residual={residual:.3e}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle


def _z(quad_value: float, est: float, err: float) -> float:
    if err > 0:
        return (quad_value - est) / err
    return 0.0 if quad_value == est else math.inf


def cmd_oracle(args) -> int:
    sv = parse_body(read_json(args.body), args.body)
    params = _params(args, sv.n)
    quad = QuadratureSpec.default(sv.n)
    if args.quad_rel_tol is not None or args.quad_order is not None:
        quad = QuadratureSpec(
            target_rel_tol=args.quad_rel_tol if args.quad_rel_tol is not None else quad.target_rel_tol,
            facet_rule_order=args.quad_order if args.quad_order is not None else quad.facet_rule_order,
            max_subdivisions=1 if args.quad_rel_tol is not None else quad.max_subdivisions,
        )
    mc = McSpec(samples=args.samples, seed=args.seed)
    P = wulff_shape(sv)
    rows = []
    gamma = gg_volume(P, params, quad)
    est, err = mc_volume_oracle(P, params, mc)
    rows.append(("gamma", gamma, est, err))
    S, _ = surface_and_cone(P, params, quad)
    for f in P.facets:
        est, err = mc_surface_oracle(P, params, f.index, mc)
        rows.append((f"S[{f.index}]", float(S.values[f.index]), est, err))
    worst = 0.0
    for name, q, est, err in rows:
        z = _z(q, est, err)
        worst = max(worst, abs(z))
        print(f"{name:>8}  quadrature={q!r}  mc={est!r}  stderr={err!r}  z={z:+.3f}")
    ok = worst <= ORACLE_Z
    print(f"max |z| = {worst:.3f} ({'pass' if ok else 'FAIL'}, threshold {ORACLE_Z:g})")
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# plot


def cmd_plot(args) -> int:
    data = read_json(args.report)
    mu = parse_measure(data, args.report)
    if mu.n != 2:
        raise InputError("plotting is limited to n = 2 reports")
    sv = parse_body(data, args.report)
    try:
        cone = np.array(data["cone"], dtype=float)
        trace = [float(t["residual"]) for t in data.get("trace", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.report}: malformed report ({exc!r})") from exc
    ext = args.out.rsplit(".", 1)[-1].lower() if "." in args.out else ""
    if ext not in ("svg", "pdf"):
        raise InputError("plot output must be a .svg or .pdf file")

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "minklog"
    P = wulff_shape(sv)
    poly = np.array(_vertices(P) + [_vertices(P)[0]])
    u = mu.dirs.vectors
    target = mu.weights / mu.total
    achieved = cone / cone.sum()
    scale = 0.9 * float(np.max(np.abs(poly))) / max(float(target.max()), float(achieved.max()))

    fig, (ax, axt) = plt.subplots(1, 2, figsize=(10, 4.8))
    ax.plot(poly[:, 0], poly[:, 1], "k-", lw=1.2, label="solution")
    for k in range(len(u)):
        a = target[k] * scale * u[k]
        g = achieved[k] * scale * u[k]
        ax.plot([0, a[0]], [0, a[1]], color="tab:blue", lw=3, alpha=0.5, label="c_i/|mu|" if k == 0 else None)
        ax.plot([0, g[0]], [0, g[1]], color="tab:red", lw=1, label="G_i/G_total" if k == 0 else None)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title(f"b={data.get('b')}, m={data.get('m')}, kappa0={data.get('kappa0')}")
    if trace:
        axt.semilogy(range(len(trace)), np.maximum(trace, 1e-300), "o-")
    axt.set_xlabel("iteration")
    axt.set_ylabel("el_residual")
    fig.tight_layout()
    meta = {"Date": None} if ext == "svg" else {"CreationDate": None, "ModDate": None}
    fig.savefig(args.out, format=ext, metadata=meta)
    plt.close(fig)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen-measure


def generate_measure(n: int, N: int, seed: int, max_tries: int = 100_000) -> DiscreteMeasure:
    """Random directions and weights in [0.1, 1], resampled until hemisphere-free."""
    if N < n + 1:
        raise InputError(f"need N >= n+1 = {n + 1}, got {N}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    for _ in range(max_tries):
        u = rng.standard_normal((N, n))
        w = rng.uniform(0.1, 1.0, N)
        try:
            dirs = DirectionSet.from_vectors(u)
        except MinklogError:
            continue
        if concentration_direction(dirs) is None:
            return DiscreteMeasure(dirs, w)
    raise InputError("could not draw a measure passing the hemisphere check")


def cmd_gen_measure(args) -> int:
    if args.n not in (2, 3):
        raise InputError(f"n must be 2 or 3, got {args.n}")
    mu = generate_measure(args.n, args.N, args.seed)
    rec = measure_record(mu, name=f"random n={args.n} N={args.N} seed={args.seed}")
    rec["seed"] = args.seed
    _emit(dumps(rec), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minklog", description="Discrete generalized Gaussian log-Minkowski solver.")
    ap.add_argument("--version", action="version", version=f"minklog {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def density_flags(p):
        p.add_argument("--b", type=float, default=0.0, help="shape parameter b (default 0)")
        p.add_argument("--m", type=float, default=2.0, help="moment exponent m > 0 (default 2)")

    p = sub.add_parser("solve", help="solve the normalized problem for a measure file")
    p.add_argument("measure")
    density_flags(p)
    p.add_argument("--kappa0", type=float, default=0.8)
    p.add_argument("--el-tol", type=float, default=None, help="default 1e-8 (n=2), 1e-5 (n=3)")
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-small-kappa", action="store_true", help="expert: accept kappa0 <= 3/4")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compute", help="measures of the Wulff shape of a body file")
    p.add_argument("body")
    density_flags(p)
    p.add_argument("--p", type=float, default=None, help="also emit the L_p surface measure")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("verify", help="recompute and check a solve report")
    p.add_argument("report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="Monte Carlo cross-check of volume and facet measures")
    p.add_argument("body")
    density_flags(p)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    # test hooks: deliberately coarse quadrature
    p.add_argument("--quad-rel-tol", type=float, default=None, help=argparse.SUPPRESS)
    p.add_argument("--quad-order", type=int, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plot", help="draw an n=2 solve report (svg or pdf)")
    p.add_argument("report")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("gen-measure", help="random hemisphere-free measure")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen_measure)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; that code is reserved for non-convergence
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="minklog: %(message)s")
    try:
        return args.func(args)
    except (InputError, InputFileError, ParameterDomainError, HemisphereConcentrationError) as exc:
        print(f"minklog: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ToleranceNotMetError as exc:
        print(f"minklog: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except MinklogError as exc:
        print(f"minklog: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"minklog: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
