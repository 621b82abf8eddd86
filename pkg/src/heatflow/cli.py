"""Command-line entry point.

Commands: smooth, wavelet, validate-sphere, benchmark, stats
{ttest|hotelling|corr}, lbo. Every run writes a resolved-config JSON next to
its outputs so results are reproducible; wall-clock timings go to a separate
timing JSON so the data files stay byte-identical across runs. Exit codes:
0 success, 1 runtime or domain error, 2 usage error.
"""

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .expansion import PolynomialFamily, estimate_lambda_max, heat_coefficients
from .fields import FieldStack, read_field_csv, read_stack_csv, write_field_csv, write_stack_csv
from .mesh import assemble_lb_operator, export_operator, load_mesh
from .sphere import ground_truth_field, icosphere, two_cap_signal
from .solvers import (
    eigen_reference,
    eigen_smooth,
    fem_euler_smooth,
    heat_smooth,
    mse,
)
from .stats import correlation_map, hotelling_t2_map, two_sample_t_map, write_statmap
from .wavelets import WaveletKernel, wavelet_stack
from .expansion import apply_expansion

_VALIDATION_CAPS = ((0.0, 0.0, 1.0), (1.0, 0.0, 0.0))


def _limit_threads():
    cap = os.environ.get("HEATFLOW_THREADS")
    if not cap:
        return None
    try:
        import threadpoolctl

        return threadpoolctl.threadpool_limits(limits=int(cap))
    except (ImportError, ValueError):
        return None


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _echo_config(args, out_path):
    flags = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    _write_json(str(out_path) + ".config.json", {"command": args.command, "flags": flags})


def _family_from_args(args):
    kind = getattr(args, "family", "chebyshev")
    if kind == "jacobi":
        return PolynomialFamily.jacobi(args.alpha, args.beta)
    if kind == "chebyshev":
        return PolynomialFamily.chebyshev()
    if kind == "hermite":
        return PolynomialFamily.hermite()
    if kind == "laguerre":
        return PolynomialFamily.laguerre()
    raise ValueError(f"unknown family {kind!r}")


def _cmd_smooth(args):
    t0 = time.perf_counter()
    mesh = load_mesh(args.mesh)
    op = assemble_lb_operator(mesh)
    family = _family_from_args(args)
    if family.scaled:
        b = estimate_lambda_max(op)
        family = family.with_b(b if b > 0 else 1.0)
    t_assembly = time.perf_counter() - t0

    f = read_field_csv(args.signal)
    if f.size != mesh.n_vertices:
        raise ValueError(
            f"signal has {f.size} values for a {mesh.n_vertices}-vertex mesh"
        )

    t1 = time.perf_counter()
    coeffs = heat_coefficients(family, args.sigma, args.degree) if args.sigma > 0 else None
    t_coeffs = time.perf_counter() - t1

    t2 = time.perf_counter()
    if args.sigma == 0:
        fields = [f.copy() for _ in range(args.steps)]
    else:
        fields = []
        cur = f
        for _ in range(args.steps):
            cur = apply_expansion(op, coeffs, cur)
            fields.append(cur)
    t_recur = time.perf_counter() - t2

    if args.steps == 1:
        write_field_csv(args.out, fields[0])
    else:
        sigmas = [repr((i + 1) * args.sigma) for i in range(args.steps)]
        write_stack_csv(args.out, FieldStack(np.column_stack(fields), sigmas, "scales"))
    _echo_config(args, args.out)
    timing = {
        "assembly_seconds": t_assembly,
        "coefficients_seconds": t_coeffs,
        "recurrence_seconds": t_recur,
        "total_seconds": time.perf_counter() - t0,
    }
    _write_json(str(args.out) + ".timing.json", timing)
    print(
        f"smooth: N={mesh.n_vertices} sigma={args.sigma} steps={args.steps} "
        f"assembly={t_assembly:.3f}s coefficients={t_coeffs:.6f}s "
        f"recurrence={t_recur:.3f}s"
    )
    return 0


def _cmd_wavelet(args):
    mesh = load_mesh(args.mesh)
    op = assemble_lb_operator(mesh)
    f = read_field_csv(args.signal)
    if f.size != mesh.n_vertices:
        raise ValueError(
            f"signal has {f.size} values for a {mesh.n_vertices}-vertex mesh"
        )
    scales = [float(tok) for tok in args.scales.split(",") if tok]
    stack = wavelet_stack(op, f, WaveletKernel(), scales, m=args.degree)
    write_stack_csv(args.out, stack)
    _echo_config(args, args.out)
    print(f"wavelet: N={mesh.n_vertices} scales={len(scales)} degree={args.degree}")
    return 0


def _run_sphere_method(op, signal, truth, sigma, method, param, es_cache, args):
    t0 = time.perf_counter()
    if method in ("chebyshev", "jacobi", "hermite", "laguerre"):
        if method == "jacobi":
            family = PolynomialFamily.jacobi(args.alpha, args.beta)
        else:
            family = PolynomialFamily(method)
        g = heat_smooth(op, signal, sigma, family=family, m=int(param))
    elif method == "fem":
        g = fem_euler_smooth(op, signal, sigma, int(param))
    elif method == "eigen":
        k = int(param)
        if "es" not in es_cache or es_cache["es"].k < k:
            es_cache["es"] = eigen_reference(op, k)
        es = es_cache["es"]
        if es.k > k:
            from .solvers import EigenSystem

            es = EigenSystem(es.eigenvalues[:k], es.eigenvectors[:, :k])
        g = eigen_smooth(es, op, signal, sigma)
    else:
        raise ValueError(f"unknown method {method!r}")
    seconds = time.perf_counter() - t0
    return {
        "mesh_vertices": op.n_vertices,
        "sigma": sigma,
        "method": method,
        "fidelity_param": int(param),
        "mse": mse(g, truth),
        "wall_seconds": seconds,
    }


def _cmd_validate_sphere(args):
    mesh = icosphere(args.subdiv)
    op = assemble_lb_operator(mesh)
    signal = two_cap_signal(mesh, *_VALIDATION_CAPS, radius=args.cap_radius)
    truth_degree = args.truth_degree
    cap = int(math.isqrt(mesh.n_vertices // 2)) - 1
    if truth_degree > cap:
        truth_degree = cap
        print(
            f"validate-sphere: truth degree capped to {cap} for "
            f"{mesh.n_vertices} vertices"
        )
    truth = ground_truth_field(mesh, signal, truth_degree, args.sigma)

    methods = [tok for tok in args.method.split(",") if tok]
    degrees = [int(t) for t in args.degree.split(",") if t] if args.degree else []
    iters = [int(t) for t in args.iters.split(",") if t] if args.iters else []
    eigs = [int(t) for t in args.eigs.split(",") if t] if args.eigs else []
    rows = []
    es_cache = {}
    for method in methods:
        if method in ("chebyshev", "jacobi", "hermite", "laguerre"):
            params = degrees
            flag = "--degree"
        elif method == "fem":
            params = iters
            flag = "--iters"
        elif method == "eigen":
            params = eigs
            flag = "--eigs"
        else:
            raise ValueError(f"unknown method {method!r}")
        if not params:
            raise ValueError(f"method {method} needs {flag}")
        for param in params:
            row = _run_sphere_method(op, signal, truth, args.sigma, method, param, es_cache, args)
            rows.append(row)
            print(
                f"validate-sphere: N={row['mesh_vertices']} method={method} "
                f"param={param} mse={row['mse']:.3e} seconds={row['wall_seconds']:.3f}"
            )
    _write_json(args.out_report, rows)
    with open(args.out_benchmark, "w") as fh:
        fh.write("method,subdiv,N,sigma,param,mse,seconds\n")
        for row in rows:
            fh.write(
                f"{row['method']},{args.subdiv},{row['mesh_vertices']},"
                f"{row['sigma']:.16e},{row['fidelity_param']},"
                f"{row['mse']:.16e},{row['wall_seconds']:.6e}\n"
            )
    _echo_config(args, args.out_report)
    return 0


def _read_subject_fields(path):
    """Directory of per-subject field CSVs, or one stacked CSV."""
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.csv"))
        if not files:
            raise ValueError(f"{path}: no subject CSV files")
        cols = [read_field_csv(f) for f in files]
        sizes = {c.size for c in cols}
        if len(sizes) != 1:
            raise ValueError(f"{path}: vertex counts differ across subjects: {sorted(sizes)}")
        return FieldStack(np.column_stack(cols), [f.stem for f in files], "subjects")
    return read_stack_csv(p, axis_meaning="subjects")


def _read_subject_stacks(path):
    """Directory of per-subject multiscale stack CSVs."""
    p = Path(path)
    if not p.is_dir():
        raise ValueError(f"{path}: hotelling needs a directory of per-subject stacks")
    files = sorted(p.glob("*.csv"))
    if not files:
        raise ValueError(f"{path}: no subject CSV files")
    return [read_stack_csv(f, axis_meaning="scales") for f in files]


def _cmd_stats(args):
    if args.test == "ttest":
        out = two_sample_t_map(
            _read_subject_fields(args.group_a),
            _read_subject_fields(args.group_b),
            fdr_q=args.fdr,
        )
    elif args.test == "hotelling":
        out = hotelling_t2_map(
            _read_subject_stacks(args.group_a),
            _read_subject_stacks(args.group_b),
            fdr_q=args.fdr,
        )
    else:
        out = correlation_map(
            _read_subject_fields(args.group_a),
            _read_subject_fields(args.group_b),
            paired=args.paired,
            fdr_q=args.fdr,
        )
    csv_path = args.out + ".csv"
    json_path = args.out + ".json"
    write_statmap(out, csv_path, json_path)
    _echo_config(args, args.out)
    n_sig = int(out.significant.sum()) if out.significant is not None else 0
    print(f"stats {args.test}: N={out.statistic.size} significant={n_sig}")
    return 0


def _cmd_lbo(args):
    mesh = load_mesh(args.mesh)
    op = assemble_lb_operator(
        mesh, area_scheme="barycentric" if args.barycentric else "mixed"
    )
    export_operator(op, args.out_c, args.out_a)
    lam = estimate_lambda_max(op)
    _echo_config(args, args.out_c)
    print(f"lbo: N={op.n_vertices} nnz={op.C.nnz} lambda_max~{lam:.6g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="heatflow",
        description="Spectral heat diffusion, diffusion wavelets and vertex statistics on meshes",
    )
    parser.add_argument("--seed", type=int, default=42, help="seed for randomized fixtures")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("smooth", help="heat kernel smoothing of a vertex signal")
    p.add_argument("--mesh", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--family", default="chebyshev",
                   choices=["chebyshev", "jacobi", "hermite", "laguerre"])
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--degree", type=int, default=1000)
    p.add_argument("--steps", type=int, default=1, help="iterative convolution count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_smooth)

    p = sub.add_parser("wavelet", help="band-pass diffusion wavelet stack")
    p.add_argument("--mesh", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--scales", required=True, help="comma list of t values")
    p.add_argument("--degree", type=int, default=300)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_wavelet)

    for name in ("validate-sphere", "benchmark"):
        p = sub.add_parser(name, help="sphere validation against the SPHARM ground truth")
        p.add_argument("--subdiv", type=int, required=True)
        p.add_argument("--sigma", type=float, required=True)
        p.add_argument("--method", required=True,
                       help="comma list from chebyshev,jacobi,hermite,laguerre,fem,eigen")
        p.add_argument("--degree", default="", help="comma list of expansion degrees")
        p.add_argument("--iters", default="", help="comma list of FEM iteration counts")
        p.add_argument("--eigs", default="", help="comma list of eigenfunction counts")
        p.add_argument("--alpha", type=float, default=0.0)
        p.add_argument("--beta", type=float, default=0.0)
        p.add_argument("--truth-degree", type=int, default=25)
        p.add_argument("--cap-radius", type=float, default=0.3)
        p.add_argument("--out-report", required=True)
        p.add_argument("--out-benchmark", required=True)
        p.set_defaults(func=_cmd_validate_sphere)

    p = sub.add_parser("stats", help="vertex-wise group statistics")
    p.add_argument("test", choices=["ttest", "hotelling", "corr"])
    p.add_argument("--group-a", required=True)
    p.add_argument("--group-b", required=True)
    p.add_argument("--fdr", type=float, default=None)
    p.add_argument("--paired", action="store_true")
    p.add_argument("--out", required=True, help="output base path (.csv and .json added)")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("lbo", help="export the Laplace-Beltrami operator")
    p.add_argument("--mesh", required=True)
    p.add_argument("--out-c", required=True)
    p.add_argument("--out-a", required=True)
    p.add_argument("--barycentric", action="store_true",
                   help="use one-third barycentric areas instead of mixed Voronoi")
    p.set_defaults(func=_cmd_lbo)
    return parser


def main(argv=None):
    _limit_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001  (CLI boundary: report and exit 1)
        print(f"heatflow {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
