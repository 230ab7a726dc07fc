import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfield_lab.errors import ConvergenceError
from vfield_lab.index import (
    azimuthal_chart,
    chart_loop_sense,
    index_by_connection_form,
    index_by_winding,
    index_pair,
    winding_of_angles,
)
from vfield_lab.loxodrome import make_loxodromic_field, make_test_field, random_smooth_field
from vfield_lab.sphere_core import embed_arrays, field_vectors


def brute_force_index(field, pole, samples=100_000, colat=1e-3):
    """Turning of v read off as (x, y) components on a tiny circle, independent of the chart code."""
    phi_probe = math.pi / 2 - colat if pole == "N" else -(math.pi / 2 - colat)
    lam = 2 * math.pi * np.arange(samples) / samples
    v, _ = field_vectors(field, np.full_like(lam, phi_probe), lam)
    vx, vy = v[:, 0], v[:, 1]
    if pole == "S":
        # seen from below the loop lam -> lam runs clockwise and y flips
        vy = -vy
        lam = -lam
    ang = np.arctan2(vy, vx)
    steps = np.diff(np.append(ang, ang[0]))
    steps = (steps + math.pi) % (2 * math.pi) - math.pi
    turns = np.sum(steps) / (2 * math.pi)
    return round(turns * (1 if pole == "N" else -1))


def test_theta_equals_lambda_north_index_two():
    f = make_test_field(1, 0.0, 1, theta0=0.0)
    assert brute_force_index(f, "N") == 2
    assert index_by_winding(f, "N", 0.8).index == 2
    assert index_by_connection_form(f, "N", 0.8).index == 2


@pytest.mark.parametrize("k", [-1, 0, 1, 2])
def test_frozen_indices(k):
    f = make_test_field(k, 0.0, 1)
    for method in ("winding", "connection-form"):
        n, s = index_pair(f, method)
        assert (n.index, s.index) == (1 + k, 1 - k)
        assert n.reliable and s.reliable
    assert (brute_force_index(f, "N"), brute_force_index(f, "S")) == (1 + k, 1 - k)


@pytest.mark.parametrize("theta0", [0.0, 0.5, math.pi / 2, 3.0])
@pytest.mark.parametrize("probe", [0.3, 0.8, 1.3])
def test_loxodromic_indices(theta0, probe):
    for method in ("winding", "connection-form"):
        n, s = index_pair(make_loxodromic_field(theta0), method, probe)
        assert (n.index, s.index) == (1, 1)
        assert n.residual < 1e-6 and s.residual < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_methods_agree_and_sum_to_two(seed):
    f = random_smooth_field(np.random.default_rng(seed))
    w = index_pair(f, "winding")
    c = index_pair(f, "connection-form")
    assert (w[0].index, w[1].index) == (c[0].index, c[1].index)
    assert w[0].index + w[1].index == 2
    assert w[0].index - w[1].index == 2 * f.winding


def test_chart_orientation():
    assert chart_loop_sense("N", 0.5) == 1
    assert chart_loop_sense("S", -0.5) == -1
    q = azimuthal_chart(embed_arrays(np.array([math.pi / 2 - 0.1]), np.array([0.0])), "N")
    assert np.allclose(q, [[0.1, 0.0]])


def test_winding_of_angles():
    t = np.linspace(0, 2 * math.pi, 100, endpoint=False)
    turns, biggest = winding_of_angles(-3 * t)
    assert turns == pytest.approx(-3)
    assert biggest < 0.2


def test_probe_validation():
    f = make_loxodromic_field(0.0)
    with pytest.raises(ValueError):
        index_by_winding(f, "N", -0.5)
    with pytest.raises(ValueError):
        index_by_winding(f, "X", 0.5)


def test_no_negative_zero():
    n, s = index_pair(make_test_field(1, 0.0, 1))
    assert math.copysign(1.0, s.raw) == 1.0 or s.raw != 0.0
    assert str(s.index) == "0"


def test_strict_flags_unreliable():
    # four samples alias cos(4 lam + 0.5) to a constant, so the raw index is off by ~0.19
    f = make_test_field(0, 0.1, 4, phase=0.5)
    n = index_by_connection_form(f, "N", 0.8, samples=4, max_samples=4)
    assert not n.reliable
    with pytest.raises(ConvergenceError):
        index_pair(f, "connection-form", 0.8, strict=True, samples=4, max_samples=4)
    assert index_by_connection_form(f, "N", 0.8, samples=4).reliable
