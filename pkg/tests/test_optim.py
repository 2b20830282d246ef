import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasimin import (
    AdmissibleSet,
    DomainSpec,
    Field,
    SolveOptions,
    build_grid,
    constant,
    gaussian,
    kkt_residual,
    minimize,
    poisson_dirichlet,
    project_admissible,
    sample_boundary,
    solve_scalar_exact,
)


def square(n):
    return build_grid(DomainSpec.box([(0, 1), (0, 1)]), (n, n))


def interval(n):
    return build_grid(DomainSpec.box([(0, 1)]), (n,))


def test_admissible_set_validation():
    g = interval(5)
    bd = sample_boundary(g, lambda p: p[:, 0])
    adm = AdmissibleSet.from_boundary(bd)
    assert np.array_equal(adm.box, [1.0])
    with pytest.raises(ValueError, match="positive"):
        AdmissibleSet(np.array([0.0]), bd)
    with pytest.raises(ValueError, match="box bound"):
        AdmissibleSet(np.array([0.5]), bd)


def test_project_clamps_and_pins_boundary():
    g = interval(5)
    bd = sample_boundary(g, lambda p: np.full(p.shape[0], 0.3))
    adm = AdmissibleSet(
        np.array([1.0, 1.0]),
        sample_boundary(g, lambda p: np.tile([0.3, 0.3], (p.shape[0], 1))),
    )
    vals = np.zeros(g.dims + (2,))
    vals[2] = [5.0, -5.0]
    vals[0] = [7.0, 7.0]
    f = Field(g, 2, vals)
    p = project_admissible(f, adm)
    assert np.array_equal(p.values[2], [1.0, -1.0])
    assert np.array_equal(p.values[0], [0.3, 0.3])


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
@settings(max_examples=60, deadline=None)
def test_projection_idempotent(interior_vals):
    g = interval(5)
    bd = sample_boundary(g, lambda p: p[:, 0] * 0.5)
    adm = AdmissibleSet.from_boundary(bd)
    vals = np.zeros(g.dims + (1,))
    vals[1:4, 0] = interior_vals
    once = project_admissible(Field(g, 1, vals), adm)
    twice = project_admissible(once, adm)
    assert np.array_equal(once.values, twice.values)


def test_constant_boundary_converges_immediately():
    g = square(9)
    bd = sample_boundary(g, lambda p: np.full(p.shape[0], 0.4))
    adm = AdmissibleSet(np.array([0.5]), bd)
    opts = SolveOptions(init="boundary_constant")
    u, rep = minimize(g, gaussian(1.0), adm, opts=opts)
    assert rep.converged and rep.iterations <= 2
    assert rep.final_energy == 0.0
    assert np.abs(u.values - 0.4).max() == 0.0


def test_constant_weight_recovers_harmonic_extension():
    g = square(33)
    bd = sample_boundary(g, lambda p: p[:, 0] * p[:, 1])
    adm = AdmissibleSet.from_boundary(bd)
    opts = SolveOptions(init="boundary_constant", tol_pg=1e-10)
    u, rep = minimize(g, constant(0.0), adm, opts=opts)
    assert rep.converged
    harm = poisson_dirichlet(g, None, bd)
    assert np.abs(u.values - harm.values).max() <= 1e-6


def test_minimizer_matches_transform_oracle_1d():
    g = interval(257)
    bd = sample_boundary(g, lambda p: p[:, 0])
    adm = AdmissibleSet.from_boundary(bd)
    w = gaussian(0.5)
    u, rep = minimize(g, w, adm)
    assert rep.converged
    oracle = solve_scalar_exact(g, w, bd)
    assert np.abs(u.values - oracle.values).max() <= 1e-4


def test_feasibility_bit_exact_and_bounded():
    g = square(17)
    bd = sample_boundary(g, lambda p: np.sin(3 * p[:, 0]) * np.cos(2 * p[:, 1]))
    adm = AdmissibleSet.from_boundary(bd)
    u, rep = minimize(g, gaussian(1.0), adm)
    flat = u.flat()
    assert np.array_equal(flat[g.boundary_indices], adm.boundary.values)
    assert np.all(np.abs(flat) <= adm.box)
    assert u.sup_norm() <= float(np.abs(adm.box).max())


def test_energy_history_monotone():
    g = square(17)
    bd = sample_boundary(g, lambda p: p[:, 0] - p[:, 1] ** 2)
    adm = AdmissibleSet.from_boundary(bd)
    _, rep = minimize(g, gaussian(1.0), adm)
    assert np.all(np.diff(rep.energy_history) <= 0.0)
    assert len(rep.energy_history) == rep.iterations + 1


def test_first_step_strictly_decreases_energy():
    g = square(9)
    bd = sample_boundary(g, lambda p: p[:, 0])
    adm = AdmissibleSet.from_boundary(bd)
    init = project_admissible(
        Field(g, 1, np.random.default_rng(7).uniform(-1, 1, g.dims + (1,))), adm
    )
    opts = SolveOptions(init=init, max_iters=1)
    _, rep = minimize(g, gaussian(1.0), adm, opts=opts)
    assert rep.energy_history[1] < rep.energy_history[0]


def test_determinism_identical_runs():
    g = square(17)
    bd = sample_boundary(g, lambda p: p[:, 0] * (1 - p[:, 1]))
    adm = AdmissibleSet.from_boundary(bd)
    u1, r1 = minimize(g, gaussian(1.0), adm)
    u2, r2 = minimize(g, gaussian(1.0), adm)
    assert np.array_equal(u1.values, u2.values)
    assert np.array_equal(r1.energy_history, r2.energy_history)


def test_active_constraints_reported_with_tight_box():
    # clamp a free Laplace minimizer by shrinking the box below its range
    g = square(17)
    bd = sample_boundary(g, lambda p: np.full(p.shape[0], 0.2))
    adm = AdmissibleSet(np.array([0.2]), bd)
    init = Field(g, 1, np.full(g.dims + (1,), 0.2))
    # boundary 0.2 everywhere, weight pulls solution to the constant: stays at bound
    u, rep = minimize(g, gaussian(1.0), adm, opts=SolveOptions(init=init))
    assert rep.converged
    assert rep.active_count == g.num_interior  # constant sits on the bound


def test_kkt_residual_cases():
    g = square(9)
    bd = sample_boundary(g, lambda p: np.full(p.shape[0], 0.4))
    adm = AdmissibleSet(np.array([1.0]), bd)
    const = Field(g, 1, np.full(g.dims + (1,), 0.4))
    assert kkt_residual(g, const, gaussian(1.0), adm) == 0.0

    bd2 = sample_boundary(g, lambda p: p[:, 0])
    adm2 = AdmissibleSet.from_boundary(bd2)
    u, rep = minimize(g, gaussian(1.0), adm2)
    assert kkt_residual(g, u, gaussian(1.0), adm2) <= rep.tol_pg

    bumped = u.values.copy()
    bumped[4, 4, 0] = min(bumped[4, 4, 0] + 0.1, 1.0)
    assert kkt_residual(g, Field(g, 1, bumped), gaussian(1.0), adm2) > 0.0

    bad = u.values.copy()
    bad[0, 0, 0] += 1.0
    with pytest.raises(ValueError, match="boundary"):
        kkt_residual(g, Field(g, 1, bad), gaussian(1.0), adm2)


def test_fixed_step_rule_runs():
    g = interval(17)
    bd = sample_boundary(g, lambda p: p[:, 0])
    adm = AdmissibleSet.from_boundary(bd)
    opts = SolveOptions(step_rule="fixed", fixed_step=1e-3, max_iters=200)
    _, rep = minimize(g, gaussian(1.0), adm, opts=opts)
    assert rep.iterations <= 200
