"""Independent exact solvers for the scalar (N = 1) problem.

For a scalar weight f, the substitution w = W(u) with W'(u) = e^{f(u)/2}
linearizes the Euler-Lagrange equation: if u solves

    Delta u + (1/2) f'(u) |Du|^2 = 0,

then Delta w = e^{f/2} (Delta u + (1/2) f'|Du|^2) = 0, so w is harmonic.
solve_scalar_exact therefore computes the discrete harmonic extension of
W(phi) and maps it back through the inverse transform, an exact reference
up to the linear solver's discretization error.  A damped Picard iteration
handles the inhomogeneous equation, whose transform reads
-Delta w = e^{f(u)/2} h.

The transform table evaluates W by per-interval Gauss-Legendre quadrature
(machine precision for smooth f) and inverts it by bracketed, safeguarded
Newton iteration on the tabulated monotone values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .grids import BoundaryData, Field, Grid
from .weights import Weight


class ConvergenceError(RuntimeError):
    """An iterative solve failed to reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


@dataclass
class SourceField:
    """Per-node scalar source term h(x)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float).reshape(self.grid.dims)
        if not np.isfinite(self.values[self.grid.in_mask]).all():
            raise ValueError("source holds non-finite values on in-domain nodes")


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _gl_integrate(fn, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Fixed-order Gauss-Legendre integral of fn over [a, b], elementwise."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    acc = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for x, wgt in zip(_GL_NODES, _GL_WEIGHTS):
        acc = acc + wgt * fn(mid + half * x)
    return acc * half


class TransformTable:
    """Tabulated monotone map W(u) = int_0^u e^{f(s)/2} ds and its inverse."""

    def __init__(self, weight: Weight, range_m: float, nodes: int = 2049):
        if range_m <= 0:
            raise ValueError("table range must be positive")
        if nodes % 2 == 0:
            nodes += 1  # keep 0 as a table node so W(0) = 0 exactly
        self.weight = weight
        self.range_m = float(range_m)
        self.table_u = np.linspace(-self.range_m, self.range_m, nodes)

        fhalf = 0.5 * self._f_scalar(self.table_u)
        if fhalf.max() > 700.0:
            raise OverflowError(
                f"e^(f/2) overflows on [-{self.range_m}, {self.range_m}]"
            )
        seg = _gl_integrate(self._density, self.table_u[:-1], self.table_u[1:])
        if not (seg > 0).all():
            raise ValueError("transform density must be positive on the range")
        mid = nodes // 2
        w = np.zeros(nodes)
        w[mid + 1 :] = np.cumsum(seg[mid:])
        w[:mid] = -np.cumsum(seg[:mid][::-1])[::-1]
        self.table_w = w

    def _f_scalar(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.weight.f_total(u[..., None])

    def _density(self, u: np.ndarray) -> np.ndarray:
        return np.exp(0.5 * self._f_scalar(u))

    @property
    def w_min(self) -> float:
        return float(self.table_w[0])

    @property
    def w_max(self) -> float:
        return float(self.table_w[-1])

    def forward(self, u) -> np.ndarray:
        """W(u); u must lie in [-M, M]."""
        u = np.asarray(u, dtype=float)
        if u.size and (u.min() < -self.range_m or u.max() > self.range_m):
            raise ValueError("argument leaves the transform table range")
        step = self.table_u[1] - self.table_u[0]
        k = np.clip(
            np.floor((u - self.table_u[0]) / step).astype(int), 0, self.table_u.size - 2
        )
        base_u = self.table_u[k]
        return self.table_w[k] + _gl_integrate(self._density, base_u, u)

    def inverse(self, w) -> np.ndarray:
        """W^{-1}(w) by bracketed Newton iteration on the table."""
        w = np.asarray(w, dtype=float)
        scale = 1.0 + np.abs(w)
        if w.size and (w.min() < self.w_min - 1e-12 or w.max() > self.w_max + 1e-12):
            raise ValueError("value leaves the transform table range")
        wc = np.clip(w, self.w_min, self.w_max)
        k = np.clip(np.searchsorted(self.table_w, wc) - 1, 0, self.table_w.size - 2)
        lo = self.table_u[k]
        hi = self.table_u[k + 1]
        wlo = self.table_w[k]
        whi = self.table_w[k + 1]
        u = lo + (wc - wlo) / (whi - wlo) * (hi - lo)
        for _ in range(60):
            resid = self.forward(u) - wc
            if np.all(np.abs(resid) <= 1e-15 * scale):
                break
            u = np.clip(u - resid / self._density(u), lo, hi)
        else:
            resid = self.forward(u) - wc
            if not np.all(np.abs(resid) <= 1e-12 * scale):
                raise ConvergenceError(
                    "transform inversion did not converge",
                    residual=float(np.abs(resid).max()),
                )
        return u

    def boundary_values(self, boundary: BoundaryData) -> BoundaryData:
        """W applied to scalar Dirichlet data."""
        if boundary.ncomp != 1:
            raise ValueError("transform oracle handles scalar data only")
        return BoundaryData(boundary.grid, self.forward(boundary.values[:, 0]))


def halfweight_table(f: Weight, range_m: float) -> TransformTable:
    """Build the transform table for a scalar weight on [-M, M]."""
    return TransformTable(f, range_m)


def default_table_range(boundary: BoundaryData, box_sup: float | None = None) -> float:
    phi_max = float(np.abs(boundary.values).max()) if boundary.values.size else 0.0
    c_sup = phi_max if box_sup is None else float(box_sup)
    return 2.0 * (1.0 + phi_max + c_sup)


def _neighbor_sum(values: np.ndarray, grid: Grid) -> np.ndarray:
    out = np.zeros_like(values)
    for ax in range(grid.ndim):
        for sgn in (+1, -1):
            shifted = np.zeros_like(values)
            src = [slice(None)] * values.ndim
            dst = [slice(None)] * values.ndim
            if sgn > 0:
                src[ax] = slice(1, None)
                dst[ax] = slice(None, -1)
            else:
                src[ax] = slice(None, -1)
                dst[ax] = slice(1, None)
            shifted[tuple(dst)] = values[tuple(src)]
            out += shifted / grid.spacing[ax] ** 2
    return out


def poisson_dirichlet(grid: Grid, rhs: SourceField | None,
                      boundary: BoundaryData, rtol: float = 1e-12) -> Field:
    """Solve -Delta_h v = rhs with Dirichlet data by conjugate gradients.

    Standard second-order cross stencil on interior nodes; the operator is
    symmetric positive definite, so CG failure signals an assembly bug.
    """
    if boundary.ncomp != 1:
        raise ValueError("poisson_dirichlet is a scalar solver")
    dims = grid.dims
    imask = grid.interior_mask
    int_idx = grid.interior_indices
    n_int = int_idx.size
    if n_int == 0:
        raise ValueError("grid has no interior nodes")

    diag = 2.0 * sum(1.0 / h**2 for h in grid.spacing)

    def apply_homogeneous(v_int: np.ndarray) -> np.ndarray:
        full = np.zeros(grid.num_nodes)
        full[int_idx] = v_int
        full = full.reshape(dims)
        out = diag * full - _neighbor_sum(full, grid)
        return out.reshape(-1)[int_idx]

    b = np.zeros(dims)
    if rhs is not None:
        b += rhs.values
    bfield = boundary.scatter()[..., 0]
    # move the boundary column to the right-hand side
    b += _neighbor_sum(bfield, grid)
    b_int = b.reshape(-1)[int_idx]

    op = LinearOperator((n_int, n_int), matvec=apply_homogeneous)
    sol, info = cg(op, b_int, rtol=rtol, atol=0.0, maxiter=20 * n_int + 200)
    if info != 0:
        raise ConvergenceError(f"conjugate gradients failed (info={info})")

    full = np.zeros(grid.num_nodes)
    full[int_idx] = sol
    full[grid.boundary_indices] = boundary.values[:, 0]
    return Field(grid, 1, full.reshape(dims + (1,)))


def solve_scalar_exact(grid: Grid, f: Weight, boundary: BoundaryData,
                       range_m: float | None = None) -> Field:
    """Exact scalar solve via the half-weight transform.

    Computes the discrete harmonic extension of W(phi) and maps it back
    nodewise through the inverse transform.  If the table range is exceeded
    it is enlarged once before failing.
    """
    if range_m is None:
        range_m = default_table_range(boundary)
    table = TransformTable(f, range_m)
    for attempt in (0, 1):
        try:
            wb = table.boundary_values(boundary)
            wfield = poisson_dirichlet(grid, None, wb)
            u = table.inverse(wfield.values[..., 0])
            break
        except ValueError:
            if attempt == 1:
                raise
            table = TransformTable(f, 2.0 * range_m)
    u = np.where(grid.in_mask, u, 0.0)
    return Field(grid, 1, u[..., None])


def solve_scalar_source(grid: Grid, f: Weight, boundary: BoundaryData,
                        h: SourceField, damping: float = 1.0,
                        tol: float = 1e-10, max_iters: int = 500,
                        range_m: float | None = None) -> tuple[Field, int]:
    """Damped Picard iteration for the inhomogeneous scalar problem.

    Iterates v_{k+1} = (1-theta) v_k + theta * solve(-Delta v = e^{f(u_k)/2} h)
    with u_k = W^{-1}(v_k), starting from the harmonic extension of W(phi).
    The damping is halved whenever the step residual grows.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    if range_m is None:
        hmax = float(np.abs(h.values[grid.in_mask]).max()) if h.values.size else 0.0
        range_m = default_table_range(boundary) + hmax
    table = TransformTable(f, range_m)
    wb = table.boundary_values(boundary)
    v = poisson_dirichlet(grid, None, wb).values[..., 0]

    theta = damping
    prev_resid = np.inf
    for k in range(1, max_iters + 1):
        u = table.inverse(np.where(grid.in_mask, v, 0.0))
        scale = np.exp(0.5 * f.f_total(u[..., None]))
        rhs = SourceField(grid, scale * h.values)
        v_raw = poisson_dirichlet(grid, rhs, wb).values[..., 0]
        v_next = (1.0 - theta) * v + theta * v_raw
        resid = float(np.abs((v_next - v)[grid.in_mask]).max())
        v = v_next
        if resid <= tol:
            u = table.inverse(np.where(grid.in_mask, v, 0.0))
            u = np.where(grid.in_mask, u, 0.0)
            return Field(grid, 1, u[..., None]), k
        if resid > prev_resid:
            theta *= 0.5
        prev_resid = resid
    raise ConvergenceError(
        f"Picard iteration did not contract within {max_iters} steps",
        residual=prev_resid,
    )
