import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfield_lab.errors import ConvergenceError
from vfield_lab.loxodrome import make_loxodromic_field, make_test_field, random_smooth_field
from vfield_lab.sphere_core import SphericalPoint
from vfield_lab.volume import (
    IntegrationDomain,
    flat_density,
    latitude_profile,
    lower_bound_s2,
    lower_bound_s3,
    sharpness_residuals,
    volume_band,
    volume_density,
    volume_density_extrinsic,
    volume_integrand,
    volume_total,
)

TWO_PI_SQ = 2 * math.pi**2


@pytest.mark.parametrize("theta0", [0.0, math.pi / 4, math.pi / 2, 2.5])
def test_loxodromic_volume(theta0):
    rep = volume_total(make_loxodromic_field(theta0))
    assert rep.converged
    assert rep.total == pytest.approx(TWO_PI_SQ, rel=1e-6)
    assert rep.north.value == pytest.approx(math.pi**2, abs=1e-6)
    assert rep.south.value == pytest.approx(math.pi**2, abs=1e-6)


def test_winding_one_volume_is_eight_pi():
    # theta = pi/2 + lam: (theta_lam + sin phi)/cos phi integrates to exactly 8 pi
    rep = volume_total(make_test_field(1, 0.0, 1))
    assert rep.total == pytest.approx(8 * math.pi, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-1.5, 1.5), st.floats(0, 6.28))
def test_loxodromic_integrand_times_cos_is_one(theta0, phi, lam):
    f = make_loxodromic_field(theta0)
    assert volume_integrand(f, SphericalPoint(phi, lam)) * math.cos(phi) == pytest.approx(1.0, abs=1e-12)


def test_flat_density_gives_sphere_area():
    rep = volume_total(make_test_field(0, 0.3, 1), density=flat_density)
    assert rep.total == pytest.approx(4 * math.pi, abs=1e-8)


def test_extrinsic_density_matches(rng):
    for _ in range(20):
        f = random_smooth_field(rng)
        phi, lam = rng.uniform(-1.4, 1.4, 5), rng.uniform(0, 6.28, 5)
        assert np.allclose(volume_density(f, phi, lam), volume_density_extrinsic(f, phi, lam), atol=1e-6)


def test_volume_excess_of_perturbed_field():
    f = make_test_field(0, 0.3, 1, phase=-math.pi / 2)
    assert volume_total(f).total > TWO_PI_SQ + 0.01
    r = sharpness_residuals(f)
    assert r.sup_i > 0.01


def test_loxodromic_sharpness():
    r = sharpness_residuals(make_loxodromic_field(0.3))
    assert r.sup_i < 1e-10 and r.sup_ii < 1e-10


@pytest.mark.parametrize("k", [-1, 0, 1, 2])
def test_volume_exceeds_bound(k):
    f = make_test_field(k, 0.3, 2)
    bound = lower_bound_s2(1 + k, 1 - k)
    assert volume_total(f, estimate_error=False).total >= bound - 1e-4


def test_bounds_are_exact_at_loxodromic_indices():
    assert lower_bound_s2(1, 1) == TWO_PI_SQ
    assert lower_bound_s3(1, 1) == 4 * math.pi**2
    assert lower_bound_s2(-2, 0) == lower_bound_s2(2, 0)


def test_latitude_profile_is_two_pi_for_loxodromic():
    phi, ring = latitude_profile(make_loxodromic_field(1.0))
    assert np.allclose(ring, 2 * math.pi, atol=1e-12)


def test_error_estimate_shrinks_with_resolution():
    f = make_test_field(0, 0.5, 3)
    coarse = volume_band(f, IntegrationDomain(0.0, math.pi / 2, n_phi=16, n_lambda=16))
    fine = volume_band(f, IntegrationDomain(0.0, math.pi / 2, n_phi=128, n_lambda=128))
    assert fine.error_estimate < coarse.error_estimate


def test_strict_raises_when_unconverged():
    with pytest.raises(ConvergenceError):
        volume_total(make_test_field(0, 1.0, 7), n_phi=4, n_lambda=4, strict=True)


def test_domain_validation():
    with pytest.raises(ValueError):
        IntegrationDomain(0.5, 0.1)
    with pytest.raises(ValueError):
        IntegrationDomain(0.0, 1.0, epsilons=(0.0,))
    with pytest.raises(ValueError):
        IntegrationDomain(0.0, 2.0)


def test_volume_rotation_invariant():
    f = make_test_field(0, 0.3, 2)
    a = volume_total(f, estimate_error=False).total
    b = volume_total(f.rotated(1.234), estimate_error=False).total
    assert a == pytest.approx(b, rel=1e-10)
