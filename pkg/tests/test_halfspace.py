import numpy as np
import pytest

from quasimin import gaussian, solve_exhaustion


def gauss_bump(p):
    return np.exp(-np.sum(p * p, axis=-1))


def test_constant_data_stays_constant():
    rep = solve_exhaustion(
        phi=lambda p: np.full(p.shape[:-1], 0.5),
        w=gaussian(1.0),
        radii=[1, 2],
        h=0.5,
        window=[(0, 0.5), (0, 0.5)],
    )
    assert rep.sup_norms == [0.5, 0.5]
    assert rep.window_diffs == [0.0]
    assert rep.uniform_bound_ok


def test_gaussian_data_stabilizes():
    rep = solve_exhaustion(
        phi=gauss_bump, w=gaussian(1.0), radii=[2, 4, 8], h=0.25,
        window=[(0, 1), (0, 1)],
    )
    assert rep.converged_all
    assert rep.uniform_bound_ok
    assert len(rep.window_diffs) == 2
    assert rep.window_diffs[1] <= rep.window_diffs[0]
    # exact minimizer-vs-competitor inequality, every radius
    for fe, ce in zip(rep.full_energies, rep.competitor_energies):
        assert fe <= ce
    # window energy is part of the full-domain energy
    for we, fe in zip(rep.window_energies, rep.full_energies):
        assert we <= fe
    box_sup = float(rep.box_bound.max())
    for sup in rep.sup_norms:
        assert sup <= box_sup


def test_window_fields_share_coordinates():
    rep = solve_exhaustion(
        phi=gauss_bump, w=gaussian(1.0), radii=[2, 4], h=0.5,
        window=[(0, 1), (0, 1)],
    )
    g0, g1 = (f.grid for f in rep.window_fields)
    assert g0.dims == g1.dims
    assert np.allclose(g0.origin, g1.origin)
    assert np.allclose(g0.spacing, g1.spacing)


def test_validation_errors():
    with pytest.raises(ValueError, match="increasing"):
        solve_exhaustion(gauss_bump, gaussian(1.0), [2, 2], 0.5, [(0, 1), (0, 1)])
    with pytest.raises(ValueError, match="half-ball"):
        solve_exhaustion(gauss_bump, gaussian(1.0), [1, 2], 0.5, [(0, 2), (0, 1)])
    with pytest.raises(ValueError, match="half-space"):
        solve_exhaustion(gauss_bump, gaussian(1.0), [2, 4], 0.5, [(0, 1), (-1, 1)])
    with pytest.raises(ValueError, match="multiple"):
        solve_exhaustion(gauss_bump, gaussian(1.0), [1.75, 2], 0.5, [(0, 1), (0, 1)])
