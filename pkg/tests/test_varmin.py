import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfield_lab.loxodrome import make_loxodromic_field, make_test_field
from vfield_lab.varmin import (
    ThetaGrid,
    grid_gradient,
    grid_objective,
    grid_objective_terms,
    loxodromy_defect,
    minimize,
)

TWO_PI_SQ = 2 * math.pi**2


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3))
def test_constant_grid_objective_exact(theta0):
    g = ThetaGrid.from_field(make_loxodromic_field(theta0), 16, 32)
    assert grid_objective(g) == pytest.approx(TWO_PI_SQ, rel=1e-12)
    assert np.max(np.abs(grid_gradient(g))) < 1e-12


def test_gradient_matches_finite_differences(rng):
    g = ThetaGrid.from_field(make_test_field(0, 0.3, 2), 12, 16)
    grad = grid_gradient(g)
    h = 1e-6
    for _ in range(15):
        i, j = rng.integers(0, 12), rng.integers(0, 16)
        up, dn = g.values.copy(), g.values.copy()
        up[i, j] += h
        dn[i, j] -= h
        fd = np.sum(grid_objective_terms(g.with_values(up)) - grid_objective_terms(g.with_values(dn))) / (2 * h)
        assert fd == pytest.approx(grad[i, j], rel=1e-5, abs=1e-9)


def test_objective_above_constant_value(rng):
    g = ThetaGrid.from_field(make_loxodromic_field(1.0), 16, 32)
    for _ in range(5):
        bumped = g.with_values(g.values + 0.3 * rng.standard_normal(g.shape))
        assert grid_objective(bumped) > TWO_PI_SQ


def test_checkerboard_is_not_a_null_mode():
    g = ThetaGrid.from_field(make_loxodromic_field(0.0), 16, 32)
    i, j = np.indices(g.shape)
    board = g.with_values(0.1 * (-1.0) ** (i + j))
    assert grid_objective(board) > TWO_PI_SQ + 1e-3


def test_objective_rotation_invariant():
    g = ThetaGrid.from_field(make_test_field(1, 0.3, 2), 16, 32)
    assert grid_objective(g.rolled(5)) == pytest.approx(grid_objective(g), rel=1e-12)


def test_minimizer_reaches_loxodromic():
    g0 = ThetaGrid.from_field(make_test_field(0, 0.3, 1), 32, 64)
    rep = minimize(g0, audit=False)
    assert rep.converged and rep.status == "converged"
    assert rep.final_volume == pytest.approx(TWO_PI_SQ, abs=1e-8)
    assert rep.loxodromy_defect < 1e-6
    assert all(b <= a + 1e-12 for a, b in zip(rep.objective_trace, rep.objective_trace[1:]))
    assert not rep.anomaly and not rep.exploratory


def test_loxodromic_start_is_fixed_point():
    g0 = ThetaGrid.from_field(make_loxodromic_field(math.pi / 3), 32, 64)
    rep = minimize(g0, audit=False)
    assert rep.iterations == 0 and rep.converged
    assert np.array_equal(rep.grid.values, g0.values)


def test_max_iter_status():
    g0 = ThetaGrid.from_field(make_test_field(0, 0.3, 1), 16, 32)
    rep = minimize(g0, max_iter=1, tol=1e-14, audit=False)
    assert rep.status == "max-iter" and not rep.converged


def test_nonzero_winding_is_exploratory():
    g0 = ThetaGrid.from_field(make_test_field(1, 0.2, 2), 16, 32)
    rep = minimize(g0, max_iter=5, audit=False)
    assert rep.exploratory and rep.notes


def test_checkpoint_replay(tmp_path):
    g0 = ThetaGrid.from_field(make_test_field(0, 0.3, 1), 16, 32)
    first = minimize(g0, max_iter=2, tol=1e-14, audit=False)
    path = tmp_path / "ck.json"
    first.grid.save(path, first.iterations, first.final_volume)
    data = json.loads(path.read_text())
    assert data["mesh"] == [16, 32] and data["iteration"] == 2
    loaded = ThetaGrid.load(path)
    assert np.array_equal(loaded.values, first.grid.values)
    resumed = minimize(loaded, audit=False)
    straight = minimize(g0, audit=False)
    assert resumed.converged
    assert resumed.final_volume == pytest.approx(straight.final_volume, abs=1e-10)


def test_checkpoint_rejects_bad_mesh():
    with pytest.raises(ValueError):
        ThetaGrid.from_checkpoint({"mesh": [4, 4], "values": [0.0] * 15, "winding": 0, "epsilon": 0.05})


def test_interpolated_field_reproduces_nodes():
    g = ThetaGrid.from_field(make_test_field(1, 0.3, 2), 32, 64)
    f = g.to_field()
    P, L = np.meshgrid(g.phi, g.lam, indexing="ij")
    assert np.allclose(f(P, L), g.values, atol=1e-10)
    # continued with the seam jump
    assert float(f(0.1, 2 * math.pi + 0.3)) == pytest.approx(float(f(0.1, 0.3)) + 2 * math.pi, abs=1e-10)
    assert float(f.d_phi(1.56, 0.3)) == 0.0


def test_loxodromy_defect_zero_for_constant():
    g = ThetaGrid.from_field(make_loxodromic_field(0.4), 16, 32)
    assert loxodromy_defect(g) < 1e-12


def test_grid_validation():
    with pytest.raises(ValueError):
        ThetaGrid(np.zeros((3, 8)))
    with pytest.raises(ValueError):
        ThetaGrid(np.zeros((8, 8)), epsilon=0.0)
