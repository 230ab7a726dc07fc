import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfield_lab.loxodrome import make_test_field
from vfield_lab.sphere_core import (
    HALF_PI,
    SphericalPoint,
    embed,
    embed_arrays,
    field_vectors,
    frame_at,
    geodesic_point,
    meridian_tangent,
    orientation_sign,
    parallel_tangent,
    unembed,
    unembed_arrays,
)

lat = st.floats(-1.55, 1.55)
lon = st.floats(-2 * math.pi, 2 * math.pi)


@given(lat, lon)
def test_embed_round_trip(phi, lam):
    p = SphericalPoint(phi, lam)
    q = unembed(embed(p))
    assert abs(q.phi - p.phi) < 1e-12
    assert abs(math.remainder(q.lam - p.lam, 2 * math.pi)) < 1e-10


@given(lat, lon)
def test_frame_is_orthonormal_and_positive(phi, lam):
    u, n = parallel_tangent(phi, lam), meridian_tangent(phi, lam)
    x = embed_arrays(phi, lam)
    assert abs(np.dot(u, n)) < 1e-14
    assert abs(np.linalg.norm(u) - 1) < 1e-14 and abs(np.linalg.norm(n) - 1) < 1e-14
    assert abs(np.dot(u, x)) < 1e-14 and abs(np.dot(n, x)) < 1e-14
    assert orientation_sign(u, n, x) == 1.0


@given(lat, lon, st.floats(-10, 10))
def test_field_frame_positive(phi, lam, theta0):
    f = make_test_field(0, 0.0, 1, theta0=theta0 % (2 * math.pi))
    v, vp = field_vectors(f, phi, lam)
    assert abs(np.dot(v, vp)) < 1e-14
    assert orientation_sign(vp, v, embed_arrays(phi, lam)) == 1.0


def test_latitude_validation():
    for bad in (HALF_PI, -HALF_PI, 2.0, math.nan):
        with pytest.raises(ValueError):
            SphericalPoint(bad, 0.0)
    assert SphericalPoint(0.0, -0.5).lam == pytest.approx(2 * math.pi - 0.5)


def test_unembed_branch_follows_reference():
    x = embed_arrays(0.1, 6.28)
    _, lam = unembed_arrays(x, lam_ref=-0.01)
    assert lam == pytest.approx(6.28 - 2 * math.pi, abs=1e-12)


def test_geodesic_stays_on_sphere():
    p = embed_arrays(0.3, 1.0)
    d = meridian_tangent(0.3, 1.0)
    q = geodesic_point(p, d, 0.2)
    assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-14)
    assert math.acos(np.clip(np.dot(p, q), -1, 1)) == pytest.approx(0.2, abs=1e-12)
    assert unembed(q).phi == pytest.approx(0.5, abs=1e-12)


def test_frame_sample_intrinsic_matches_extrinsic():
    f = make_test_field(1, 0.3, 2)
    fs = frame_at(f, SphericalPoint(0.4, 2.0))
    c, s = fs.intrinsic["v"]
    assert np.allclose(fs.v, c * fs.u + s * fs.n)
    assert np.allclose(fs.position, embed(fs.point))


def test_numeric_derivatives_fall_back_to_differences():
    f = make_test_field(1, 0.3, 2, window="cos2")
    g = f.without_derivatives()
    phi, lam = np.array([0.2, -0.9]), np.array([1.0, 4.0])
    assert np.allclose(g.d_phi(phi, lam), f.d_phi(phi, lam), atol=1e-8)
    assert np.allclose(g.d_lambda(phi, lam), f.d_lambda(phi, lam), atol=1e-8)


def test_rotated_field_is_rotation_about_axis():
    f = make_test_field(1, 0.3, 2)
    g = f.rotated(0.7)
    assert float(g(0.1, 0.2)) == pytest.approx(float(f(0.1, 0.9)))
    assert float(g.d_lambda(0.1, 0.2)) == pytest.approx(float(f.d_lambda(0.1, 0.9)))
