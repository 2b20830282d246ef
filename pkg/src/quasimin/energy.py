"""Discrete weighted Dirichlet energy, its exact gradient, and residuals.

The energy of a nodal field U is assembled cell by cell with midpoint
quadrature: per lattice cell, the gradient DU is formed from first-order
differences of the corner values, the weight e^{f} is evaluated at the cell
average of U, and the contribution is e^{f} * Q(DU) * cell volume where Q is
either |DU|^2 or the quadratic form of a coefficient tensor A(x) sampled at
the cell midpoint.  The assembly is a fixed-order sum over cells, so results
are bit-reproducible.  grad_energy returns the analytic partial derivatives
of this discrete sum with respect to interior nodal values.

el_residual is the strong-form diagnostic for the system

    -e^{-f(U)} div(e^{f(U)} grad U) + (1/2) f'(U) |grad U|^2 = 0,

discretized with second-order central stencils and midpoint flux weights.
It agrees with grad_energy / (2 e^f vol) up to O(h^2); optimality of the
constrained minimization problem is judged by the projected gradient, not
by this residual.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Sequence

import numpy as np

from .grids import Field, Grid
from .weights import Weight


@dataclass(frozen=True)
class CoefficientTensor:
    """Position-dependent coefficients A_{ij}^{ab} for the anisotropic form.

    func maps point arrays (..., n) to (..., n, n, N, N) entries, indexed
    [i, j, a, b] with i, j spatial and a, b component indices.  The energy
    uses the symmetrization over the pairing (i,a) <-> (j,b); the deviation
    from symmetry is recorded in EnergyValue.symmetrization_delta.  Tensors
    flagged is_identity take the isotropic |DU|^2 code path bit-exactly.
    """

    func: Callable[[np.ndarray, int], np.ndarray] | None = None
    is_identity: bool = False
    label: str = "identity"

    @staticmethod
    def identity() -> "CoefficientTensor":
        return CoefficientTensor(func=None, is_identity=True, label="identity")

    @staticmethod
    def diagonal(entries: Sequence, label: str = "diagonal") -> "CoefficientTensor":
        """Spatially diagonal tensor A_{ij}^{ab} = d_i(x) delta_ij delta^ab.

        entries holds one constant or one callable (points -> values) per
        spatial axis.
        """
        entries = list(entries)

        def func(points: np.ndarray, ncomp: int) -> np.ndarray:
            n = points.shape[-1]
            if len(entries) != n:
                raise ValueError("diagonal tensor rank does not match dimension")
            base = points.shape[:-1]
            out = np.zeros(base + (n, n, ncomp, ncomp))
            eye = np.eye(ncomp)
            for i, entry in enumerate(entries):
                val = entry(points) if callable(entry) else float(entry)
                out[..., i, i, :, :] = np.multiply.outer(
                    np.broadcast_to(np.asarray(val, dtype=float), base), eye
                )
            return out

        return CoefficientTensor(func=func, is_identity=False, label=label)

    def eval(self, points: np.ndarray, ncomp: int) -> np.ndarray:
        if self.func is None:
            n = points.shape[-1]
            eye = np.einsum("ij,ab->ijab", np.eye(n), np.eye(ncomp))
            return np.broadcast_to(eye, points.shape[:-1] + eye.shape).copy()
        out = np.asarray(self.func(points, ncomp), dtype=float)
        n = points.shape[-1]
        want = points.shape[:-1] + (n, n, ncomp, ncomp)
        if out.shape != want:
            raise ValueError(f"tensor entries shape {out.shape} != {want}")
        if not np.isfinite(out).all():
            raise ValueError("coefficient tensor evaluated to non-finite entries")
        return out


@dataclass
class EnergyValue:
    """Assembled energy with per-cell contributions and diagnostics."""

    value: float
    cell_values: np.ndarray
    q_norms: dict[float, float] = dataclass_field(default_factory=dict)
    symmetrization_delta: float = 0.0


def _corner_offsets(ndim: int):
    return list(itertools.product((0, 1), repeat=ndim))


def _corner_slices(offset, dims):
    return tuple(slice(o, d - 1 + o) for o, d in zip(offset, dims))


def _cell_kernel(grid: Grid, values: np.ndarray, w: Weight, A):
    """Shared per-cell quantities for energy and gradient assembly.

    Returns (weight e^{f_base} per cell, DU per cell (..., n, N), quadratic
    form per cell, A-weighted gradient G with dQ/dDU = 2G, cell mask,
    symmetrization delta).
    """
    dims = grid.dims
    ndim = grid.ndim
    ncomp = values.shape[-1]
    offsets = _corner_offsets(ndim)
    corner_vals = [values[_corner_slices(o, dims)] for o in offsets]

    ubar = corner_vals[0].copy()
    for cv in corner_vals[1:]:
        ubar += cv
    ubar /= len(offsets)

    cell_shape = tuple(d - 1 for d in dims)
    D = np.zeros(cell_shape + (ndim, ncomp))
    denom = [2 ** (ndim - 1) * grid.spacing[i] for i in range(ndim)]
    for o, cv in zip(offsets, corner_vals):
        for i in range(ndim):
            sgn = 1.0 if o[i] == 1 else -1.0
            D[..., i, :] += (sgn / denom[i]) * cv

    cell_in = grid.in_mask[_corner_slices(offsets[0], dims)].copy()
    for o in offsets[1:]:
        cell_in &= grid.in_mask[_corner_slices(o, dims)]

    wcell = np.exp(w.f_base(ubar))

    sym_delta = 0.0
    if A is None or A.is_identity:
        Q = np.sum(D * D, axis=(-2, -1))
        G = D
    else:
        mids = _cell_midpoints(grid)
        Aval = A.eval(mids, ncomp)
        Asym = 0.5 * (Aval + Aval.transpose(tuple(range(Aval.ndim - 4)) + (-3, -4, -1, -2)))
        sym_delta = float(np.abs(Aval - Asym).max()) if Aval.size else 0.0
        G = np.einsum("...ijab,...jb->...ia", Asym, D)
        Q = np.einsum("...ia,...ia->...", D, G)
    return wcell, D, Q, G, cell_in, ubar, sym_delta


def _cell_midpoints(grid: Grid) -> np.ndarray:
    axes = [
        grid.origin[k] + grid.spacing[k] * (np.arange(grid.dims[k] - 1) + 0.5)
        for k in range(grid.ndim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def energy_raw(grid: Grid, values: np.ndarray, w: Weight, A=None):
    """Energy value and per-cell contributions from a raw value array."""
    wcell, _, Q, _, cell_in, _, sym_delta = _cell_kernel(grid, values, w, A)
    cells = np.exp(w.shift) * grid.cell_volume * (wcell * Q * cell_in)
    return float(cells.sum()), cells, sym_delta


def grad_raw(grid: Grid, values: np.ndarray, w: Weight, A=None) -> np.ndarray:
    """Exact gradient of the discrete energy w.r.t. interior nodal values."""
    dims = grid.dims
    ndim = grid.ndim
    ncomp = values.shape[-1]
    wcell, D, Q, G, cell_in, ubar, _ = _cell_kernel(grid, values, w, A)
    vol = grid.cell_volume
    offsets = _corner_offsets(ndim)
    denom = [2 ** (ndim - 1) * grid.spacing[i] for i in range(ndim)]

    base = (wcell * cell_in) * vol
    # d e^{f(ubar)} / dU(corner) routes through f'(ubar) / 2^n
    fterm = base * Q / len(offsets)
    fp = -ubar * w.g_value(ubar)[..., None]  # f'(ubar), shape cells + (N,)

    grad = np.zeros(dims + (ncomp,))
    for o in offsets:
        sl = _corner_slices(o, dims) + (slice(None),)
        contrib = fterm[..., None] * fp
        for i in range(ndim):
            sgn = 1.0 if o[i] == 1 else -1.0
            contrib = contrib + (2.0 * sgn / denom[i]) * base[..., None] * G[..., i, :]
        grad[sl] += contrib
    grad *= np.exp(w.shift)
    grad[~grid.interior_mask] = 0.0
    return grad


def energy(grid: Grid, U: Field, w: Weight, A: CoefficientTensor | None = None,
           q_exponents: Sequence[float] = ()) -> EnergyValue:
    """Assemble E(U) = sum_cells e^{f(Ubar)} Q(DU) vol over in-domain cells.

    q_exponents optionally requests the plain gradient integrals
    int |DU|^q as empirical regularity diagnostics.
    """
    if U.grid is not grid and U.grid.dims != grid.dims:
        raise ValueError("field does not live on the given grid")
    value, cells, sym_delta = energy_raw(grid, U.values, w, A)
    q_norms = {}
    if q_exponents:
        _, D, _, _, cell_in, _, _ = _cell_kernel(grid, U.values, w, None)
        grad_sq = np.sum(D * D, axis=(-2, -1))
        for q in q_exponents:
            q = float(q)
            q_norms[q] = float(
                (np.power(grad_sq, q / 2.0) * cell_in).sum() * grid.cell_volume
            )
    return EnergyValue(value=value, cell_values=cells, q_norms=q_norms,
                       symmetrization_delta=sym_delta)


def grad_energy(grid: Grid, U: Field, w: Weight,
                A: CoefficientTensor | None = None) -> Field:
    """Analytic gradient of the discrete energy (zero on boundary nodes)."""
    return Field(grid, U.ncomp, grad_raw(grid, U.values, w, A))


def _shifted(values: np.ndarray, axis: int, step: int) -> np.ndarray:
    """values shifted by step nodes along axis; out-of-range entries zero."""
    out = np.zeros_like(values)
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if step > 0:
        src[axis] = slice(step, None)
        dst[axis] = slice(None, -step)
    else:
        src[axis] = slice(None, step)
        dst[axis] = slice(-step, None)
    out[tuple(dst)] = values[tuple(src)]
    return out


def el_residual(grid: Grid, U: Field, w: Weight,
                A: CoefficientTensor | None = None) -> Field:
    """Strong-form residual at interior nodes using central stencils.

    Flux differencing uses e^{f} at edge midpoints (weight of the averaged
    nodal values); |grad U|^2 uses central differences.  The additive shift
    of the weight cancels between e^{-f} and e^{f} and is omitted.  The
    anisotropic variant needs diagonal neighbors, so on masked domains it is
    evaluated only where the full stencil lies in the domain.
    """
    vals = U.values
    ndim = grid.ndim
    ncomp = U.ncomp
    h = grid.spacing

    f_node = w.f_base(vals)
    grad_c = np.zeros(grid.dims + (ndim, ncomp))
    for ax in range(ndim):
        grad_c[..., ax, :] = (_shifted(vals, ax, +1) - _shifted(vals, ax, -1)) / (2 * h[ax])
    grad_sq = np.sum(grad_c * grad_c, axis=(-2, -1))

    if A is None or A.is_identity:
        div = np.zeros_like(vals)
        for ax in range(ndim):
            up = _shifted(vals, ax, +1)
            dn = _shifted(vals, ax, -1)
            w_up = np.exp(w.f_base(0.5 * (vals + up)))
            w_dn = np.exp(w.f_base(0.5 * (vals + dn)))
            div += (w_up[..., None] * (up - vals) - w_dn[..., None] * (vals - dn)) / h[ax] ** 2
        fp = -vals * w.g_value(vals)[..., None]
        res = -np.exp(-f_node)[..., None] * div + 0.5 * fp * grad_sq[..., None]
        res[~grid.interior_mask] = 0.0
        return Field(grid, ncomp, res)

    # anisotropic residual:
    #   -e^{-f} d_i(e^f A_{ij}^{ab} d_j U^a) + (1/2) f'^b A_{ij}^{ac} d_i U^a d_j U^c
    pts = grid.points()
    fp = -vals * w.g_value(vals)[..., None]
    div = np.zeros_like(vals)
    in_f = grid.in_mask.astype(float)
    ok = grid.interior_mask.copy()
    for ax in range(ndim):
        for j in range(ndim):
            if j == ax:
                continue
            # cross terms need the diagonal neighbors along (ax, j)
            for sgn in (+1, -1):
                for s2 in (+1, -1):
                    ok &= _shifted(_shifted(in_f, j, s2), ax, sgn) > 0.5
        for sgn in (+1, -1):
            nb = _shifted(vals, ax, sgn)
            face_pts = pts.copy()
            face_pts[..., ax] += sgn * 0.5 * h[ax]
            Aface = A.eval(face_pts, ncomp)
            Asym = 0.5 * (
                Aface
                + Aface.transpose(tuple(range(Aface.ndim - 4)) + (-3, -4, -1, -2))
            )
            w_face = np.exp(w.f_base(0.5 * (vals + nb)))
            # face gradient: one-sided along ax, averaged central differences across
            dface = np.zeros(grid.dims + (ndim, ncomp))
            dface[..., ax, :] = sgn * (nb - vals) / h[ax]
            for j in range(ndim):
                if j == ax:
                    continue
                cent_here = (_shifted(vals, j, +1) - _shifted(vals, j, -1)) / (2 * h[j])
                cent_nb = _shifted(cent_here, ax, sgn)
                dface[..., j, :] = 0.5 * (cent_here + cent_nb)
            flux = np.einsum("...jab,...ja->...b", Asym[..., ax, :, :, :], dface)
            div += sgn * (w_face[..., None] * flux) / h[ax]
    Anode = A.eval(pts, ncomp)
    Anode = 0.5 * (
        Anode + Anode.transpose(tuple(range(Anode.ndim - 4)) + (-3, -4, -1, -2))
    )
    quad = np.einsum("...ijac,...ia,...jc->...", Anode, grad_c, grad_c)
    res = -np.exp(-f_node)[..., None] * div + 0.5 * fp * quad[..., None]
    res[~ok] = 0.0
    return Field(grid, ncomp, res)


def ellipticity_bounds(A: CoefficientTensor, sample_points: np.ndarray,
                       sample_dirs: int, ncomp: int = 1) -> tuple[float, float]:
    """Estimate the two-sided quadratic form bounds of A by sampling.

    The Rayleigh quotient A xi xi / |xi|^2 is scanned over the given points
    and a deterministic direction set: every axis direction e_i x e_a plus
    sample_dirs fixed-seed random unit directions in R^{n x N}.
    """
    if sample_dirs < 1:
        raise ValueError("sample_dirs must be >= 1")
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    n = pts.shape[-1]
    Aval = A.eval(pts, ncomp)

    dirs = []
    for i in range(n):
        for a in range(ncomp):
            xi = np.zeros((n, ncomp))
            xi[i, a] = 1.0
            dirs.append(xi)
    rng = np.random.default_rng(20240901)
    extra = rng.standard_normal((sample_dirs, n, ncomp))
    norms = np.sqrt(np.sum(extra**2, axis=(1, 2), keepdims=True))
    dirs.extend(extra / np.maximum(norms, 1e-300))
    dirs = np.stack(dirs)

    quad = np.einsum("pijab,dia,djb->pd", Aval, dirs, dirs)
    nrm = np.einsum("dia,dia->d", dirs, dirs)
    rayleigh = quad / nrm[None, :]
    return float(rayleigh.min()), float(rayleigh.max())
