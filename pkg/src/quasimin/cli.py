"""Batch front end: parse a problem spec, run a solver, write artifacts.

Usage: quasimin <mode> --spec FILE [--out-dir DIR] [--seed N]

Modes map one-to-one onto spec-file modes (solve, oracle, sphere,
halfspace, gradcheck).  Every run writes a machine-readable summary, even
on solver non-convergence; field dumps and summaries are byte-identical
across reruns of the same spec.  Wall-clock timings go to a separate
timing file so the compared artifacts stay deterministic.

Exit codes: 0 converged, 2 not converged, 3 spec error, 4 I/O failure.
QUASIMIN_NUM_THREADS caps the thread count of the underlying BLAS pools.
"""

from __future__ import annotations

import argparse
import os
import sys
import time


def _apply_thread_env() -> None:
    count = os.environ.get("QUASIMIN_NUM_THREADS")
    if count:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, count)


_apply_thread_env()

import numpy as np

from . import fieldio
from .energy import el_residual, energy, energy_raw, grad_raw
from .grids import BoundaryData, build_grid, sample_boundary
from .optim import AdmissibleSet, minimize
from .oracle import ConvergenceError, SourceField, solve_scalar_exact, solve_scalar_source
from .halfspace import solve_exhaustion
from .specfile import SpecError, parse_problem
from .sphere import solve_harmonic_pair, sup_distance

_Q_EXPONENTS = (2.0, 2.5, 3.0)


class _RunError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _scalar_expr(vec):
    def fn(points):
        out = vec(points)
        return out[..., 0] if vec.ncomp == 1 else out

    return fn


def _boundary_data(grid, spec):
    try:
        return sample_boundary(grid, spec.boundary)
    except ValueError as exc:
        raise _RunError(3, f"boundary evaluation: {exc}") from None


def _summary_paths(spec, outdir):
    paths = {
        key: os.path.join(outdir, name) for key, name in spec.outputs.items()
    }
    paths["timing"] = os.path.join(outdir, "timing.txt")
    return paths


def _solve_summary(report, extra):
    items = {
        "mode": extra.pop("mode"),
        "converged": report.converged,
        "iterations": report.iterations,
        "final_energy": report.final_energy,
        "pg_norm": report.final_pg,
        "tol_pg": report.tol_pg,
        "active_constraints": report.active_count,
        "line_search_failures": report.line_search_failures,
    }
    items.update(extra)
    return items


def _run_solve(spec, paths):
    grid = build_grid(spec.domain, spec.resolution)
    bdry = _boundary_data(grid, spec)
    adm = AdmissibleSet.from_boundary(bdry, box=spec.box_bound)
    U, report = minimize(grid, spec.weight, adm, A=spec.tensor, opts=spec.solver)
    ev = energy(grid, U, spec.weight, A=spec.tensor, q_exponents=_Q_EXPONENTS)
    res = el_residual(grid, U, spec.weight, A=spec.tensor)
    extra = {
        "mode": "solve",
        "el_residual": float(np.abs(res.values).max()),
        "box_bound": " ".join(fieldio._fmt(c) for c in adm.box),
        "symmetrization_delta": ev.symmetrization_delta,
    }
    for q in _Q_EXPONENTS:
        extra[f"qnorm_{q:g}"] = ev.q_norms[q]
    fieldio.write_field(U, paths["field"])
    fieldio.write_history(report.energy_history, report.pg_history, paths["history"])
    fieldio.write_summary(_solve_summary(report, extra), paths["summary"])
    return 0 if report.converged else 2


def _run_oracle(spec, paths):
    grid = build_grid(spec.domain, spec.resolution)
    bdry = _boundary_data(grid, spec)
    if spec.source is not None:
        src_vals = _scalar_expr(spec.source)(grid.points())
        src = SourceField(grid, np.where(grid.in_mask, src_vals, 0.0))
        try:
            U, iters = solve_scalar_source(
                grid, spec.weight, bdry, src, damping=spec.source_damping
            )
        except ConvergenceError as exc:
            fieldio.write_summary(
                {"mode": "oracle", "converged": False, "error": str(exc)},
                paths["summary"],
            )
            return 2
    else:
        U, iters = solve_scalar_exact(grid, spec.weight, bdry), 0
    ev = energy(grid, U, spec.weight, q_exponents=_Q_EXPONENTS)
    res = el_residual(grid, U, spec.weight)
    items = {
        "mode": "oracle",
        "converged": True,
        "iterations": iters,
        "final_energy": ev.value,
        "el_residual": float(np.abs(res.values).max()),
    }
    for q in _Q_EXPONENTS:
        items[f"qnorm_{q:g}"] = ev.q_norms[q]
    fieldio.write_field(U, paths["field"])
    fieldio.write_summary(items, paths["summary"])
    return 0


def _run_sphere(spec, paths):
    grid = build_grid(spec.domain, spec.resolution)
    bdry = _boundary_data(grid, spec)
    norms = np.linalg.norm(bdry.values, axis=-1)
    if norms.min() < 1e-8:
        raise _RunError(3, "sphere boundary expression vanishes at a node")
    bdry = BoundaryData(grid, bdry.values / norms[:, None])
    r1, r2 = solve_harmonic_pair(grid, bdry, opts=spec.solver,
                                 candidates=spec.sphere_candidates)
    base, ext = os.path.splitext(paths["field"])
    field_a = f"{base}_a{ext}"
    field_b = f"{base}_b{ext}"
    fieldio.write_field(r1.mapped, field_a)
    fieldio.write_field(r2.mapped, field_b)
    hist_base, hist_ext = os.path.splitext(paths["history"])
    fieldio.write_history(
        r1.report.energy_history, r1.report.pg_history, f"{hist_base}_a{hist_ext}"
    )
    fieldio.write_history(
        r2.report.energy_history, r2.report.pg_history, f"{hist_base}_b{hist_ext}"
    )
    items = {
        "mode": "sphere",
        "converged": r1.report.converged and r2.report.converged,
        "energy_a": r1.dirichlet_energy,
        "energy_b": r2.dirichlet_energy,
        "chart_energy_a": r1.chart_energy,
        "chart_energy_b": r2.chart_energy,
        "residual_a": r1.residual,
        "residual_b": r2.residual,
        "sup_distance": sup_distance(r1.mapped, r2.mapped),
        "iterations_a": r1.report.iterations,
        "iterations_b": r2.report.iterations,
        "pole": " ".join(fieldio._fmt(c) for c in r1.pole.pole),
    }
    fieldio.write_summary(items, paths["summary"])
    return 0 if items["converged"] else 2


def _run_halfspace(spec, paths):
    rep = solve_exhaustion(
        phi=_scalar_expr(spec.halfspace_fn),
        w=spec.weight,
        radii=spec.radii,
        h=spec.spacing,
        window=spec.window,
        opts=spec.solver,
        box_bound=spec.box_bound,
    )
    items = {
        "mode": "halfspace",
        "converged": rep.converged_all,
        "uniform_bound_ok": rep.uniform_bound_ok,
        "box_bound": " ".join(fieldio._fmt(c) for c in rep.box_bound),
    }
    for k, r in enumerate(rep.radii):
        items[f"radius_{k}"] = r
        items[f"sup_norm_{k}"] = rep.sup_norms[k]
        items[f"window_energy_{k}"] = rep.window_energies[k]
        items[f"energy_{k}"] = rep.full_energies[k]
        items[f"competitor_energy_{k}"] = rep.competitor_energies[k]
        items[f"iterations_{k}"] = rep.reports[k].iterations
    for k, d in enumerate(rep.window_diffs, start=1):
        items[f"window_diff_{k}"] = d
    fieldio.write_field(rep.window_fields[-1], paths["field"])
    last = rep.reports[-1]
    fieldio.write_history(last.energy_history, last.pg_history, paths["history"])
    fieldio.write_summary(items, paths["summary"])
    return 0 if rep.converged_all else 2


def _run_gradcheck(spec, paths, seed):
    grid = build_grid(spec.domain, spec.resolution)
    ncomp = spec.gradcheck_components
    w = spec.weight
    rng = np.random.default_rng(seed)
    vals = rng.uniform(-1.0, 1.0, grid.dims + (ncomp,))
    vals[~grid.in_mask] = 0.0
    analytic = grad_raw(grid, vals, w, spec.tensor)
    step = spec.gradcheck_step * (1.0 + float(np.abs(vals).max()))
    fd = np.zeros_like(analytic)
    for idx in np.ndindex(*grid.dims):
        if not grid.interior_mask[idx]:
            continue
        for a in range(ncomp):
            up = vals.copy()
            up[idx + (a,)] += step
            dn = vals.copy()
            dn[idx + (a,)] -= step
            fd[idx + (a,)] = (
                energy_raw(grid, up, w, spec.tensor)[0]
                - energy_raw(grid, dn, w, spec.tensor)[0]
            ) / (2.0 * step)
    denom = max(float(np.abs(analytic).max()), 1e-300)
    rel = float(np.abs(analytic - fd).max()) / denom
    print(f"gradcheck max relative error: {rel:.6e}")
    ok = rel <= 1e-6
    fieldio.write_summary(
        {"mode": "gradcheck", "converged": ok, "max_rel_error": rel,
         "fd_step": step, "seed": seed, "components": ncomp},
        paths["summary"],
    )
    return 0 if ok else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="quasimin",
        description="Energy-minimizing solver for exponentially weighted "
        "quasi-linear elliptic systems",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in ("solve", "oracle", "sphere", "halfspace", "gradcheck"):
        p = sub.add_parser(mode)
        p.add_argument("--spec", required=True, help="problem spec file")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed for gradcheck fields")
    args = parser.parse_args(argv)

    try:
        with open(args.spec) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read spec: {exc}", file=sys.stderr)
        return 4

    try:
        spec = parse_problem(text)
    except SpecError as exc:
        for diag in exc.diagnostics:
            print(f"spec error: {diag}", file=sys.stderr)
        return 3
    if spec.mode != args.mode:
        print(
            f"spec error: spec file declares mode {spec.mode!r}, "
            f"subcommand is {args.mode!r}",
            file=sys.stderr,
        )
        return 3

    try:
        os.makedirs(args.out_dir, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create out dir: {exc}", file=sys.stderr)
        return 4
    paths = _summary_paths(spec, args.out_dir)

    t0 = time.perf_counter()
    try:
        if spec.mode == "solve":
            code = _run_solve(spec, paths)
        elif spec.mode == "oracle":
            code = _run_oracle(spec, paths)
        elif spec.mode == "sphere":
            code = _run_sphere(spec, paths)
        elif spec.mode == "halfspace":
            code = _run_halfspace(spec, paths)
        else:
            code = _run_gradcheck(spec, paths, args.seed)
    except _RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 4

    try:
        with open(paths["timing"], "w") as fh:
            fh.write(f"wall_time_s = {time.perf_counter() - t0:.6f}\n")
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 4
    return code


if __name__ == "__main__":
    sys.exit(main())
