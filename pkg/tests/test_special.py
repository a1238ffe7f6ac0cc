"""Pointwise special-function checks against frozen oracle values.

Reference numbers were computed independently with mpmath at 30 digits
and frozen here; the suite never imports mpmath at run time.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetaladder.errors import DomainError
from zetaladder.special import (CriticalPoint, RSConfig, ThetaMode, TWO_PI,
                                em_zeta_half, hl_x, riemann_siegel_z,
                                riemann_siegel_z_values, tau, theta,
                                theta_derivative, z_phase)

# mpmath mp.dps=30: zeta(0.5), |zeta(0.5+100j)|, theta and Z at spot heights
ZETA_HALF = -1.4603545088095868
THETA_REF = {
    50.0: 26.46136607016141,
    100.0: 87.97216523178722,
    1000.0: 2034.5464280380315,
}
Z_REF = {
    50.0: -0.340735005955025,
    100.0: 2.6926970566644637,
    1000.0: 0.9977946375215866,
    10000.0: -0.34139472423120854,
}
GAMMA_1 = 14.134725141734695


def oracle_z(t: float) -> float:
    """Real part of the rotated zeta oracle; equals Z up to the remainder."""
    return (z_phase(t) * em_zeta_half(t)).real


class TestTau:
    def test_unit_height(self):
        assert tau(TWO_PI) == 1.0

    def test_four_periods(self):
        assert tau(8.0 * math.pi) == 2.0

    def test_zero(self):
        assert tau(0.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            tau(-1.0)

    @given(st.floats(min_value=0.0, max_value=1e12))
    def test_monotone_and_square(self, t):
        v = tau(t)
        assert v >= 0.0
        assert math.isclose(v * v * TWO_PI, t, rel_tol=1e-12, abs_tol=1e-300)


class TestTheta:
    def test_main_terms_at_two_pi(self):
        # the log term vanishes, leaving -t/2 - pi/8
        assert theta(TWO_PI, ThetaMode.MAIN_TERMS) == pytest.approx(
            -math.pi - math.pi / 8.0, abs=1e-14)

    @pytest.mark.parametrize("t", sorted(THETA_REF))
    def test_frozen_values(self, t):
        assert theta(t, ThetaMode.EXACT_GAMMA) == pytest.approx(
            THETA_REF[t], abs=5e-12 * max(1.0, abs(THETA_REF[t])))

    def test_finite_difference_slope_at_two_pi_e(self):
        t, h = TWO_PI * math.e, 1e-4
        fd = (theta(t + h) - theta(t - h)) / (2.0 * h)
        assert fd == pytest.approx(0.5, abs=1e-3)

    def test_derivative_matches_fd_along_range(self):
        h = 1e-3
        for t in np.geomspace(10.0, 1e5, 25):
            fd = (theta(t + h) - theta(t - h)) / (2.0 * h)
            assert abs(fd - theta_derivative(t)) <= max(1e-6, 1.0 / t)

    def test_modes_agree_within_inverse_t(self):
        for t in np.geomspace(10.0, 1e6, 40):
            d = abs(theta(t, ThetaMode.EXACT_GAMMA)
                    - theta(t, ThetaMode.MAIN_TERMS))
            assert d <= 1.0 / t

    def test_domain(self):
        with pytest.raises(DomainError):
            theta(0.0)
        with pytest.raises(DomainError):
            theta(-5.0)
        with pytest.raises(DomainError):
            theta(100.0, "main_terms")


class TestRSConfig:
    def test_bad_correction_order(self):
        with pytest.raises(DomainError):
            RSConfig(correction_order=2)

    def test_bad_error_constant(self):
        with pytest.raises(DomainError):
            RSConfig(error_constant=0.0)

    def test_bad_mode(self):
        with pytest.raises(DomainError):
            RSConfig(theta_mode="exact")


class TestRiemannSiegelZ:
    @pytest.mark.parametrize("t", sorted(Z_REF))
    def test_frozen_values(self, t):
        # the first correction term leaves a remainder well under t^(-3/4)
        point = riemann_siegel_z(t)
        assert abs(point.z - Z_REF[t]) <= t ** -0.75

    def test_critical_point_fields(self):
        p = riemann_siegel_z(100.0)
        assert isinstance(p, CriticalPoint)
        assert p.t == 100.0
        assert p.zeta_abs == abs(p.z)
        assert p.theta == pytest.approx(THETA_REF[100.0], abs=1e-9)

    def test_against_oracle_random_sample(self):
        cfg = RSConfig()
        rng = np.random.default_rng(42)
        for t in rng.uniform(50.0, 5000.0, 200):
            diff = abs(riemann_siegel_z(float(t), cfg).z - oracle_z(float(t)))
            assert diff <= cfg.error_constant * t ** -0.25

    def test_first_zero_bisection(self):
        # bracket the first sign change of the oracle and bisect it down
        a, b = 14.0, 14.2
        assert oracle_z(a) * oracle_z(b) < 0.0
        for _ in range(60):
            m = 0.5 * (a + b)
            if oracle_z(a) * oracle_z(m) <= 0.0:
                b = m
            else:
                a = m
        root = 0.5 * (a + b)
        assert root == pytest.approx(GAMMA_1, abs=1e-6)
        # the asymptotic Z is small there but only to its remainder bound
        assert abs(riemann_siegel_z(root).z) <= 2.0 * root ** -0.25

    def test_sign_change_count_10_100(self):
        ts = np.arange(10.0, 100.0 + 1e-9, 0.01)
        zs = riemann_siegel_z_values(ts)
        flips = np.count_nonzero(np.signbit(zs[:-1]) != np.signbit(zs[1:]))
        assert int(flips) == 29

    def test_vector_path_matches_scalar(self):
        ts = np.linspace(60.0, 61.0, 7)
        vec = riemann_siegel_z_values(ts)
        for t, v in zip(ts, vec):
            assert riemann_siegel_z(float(t)).z == v

    def test_below_two_pi_refused(self):
        with pytest.raises(DomainError):
            riemann_siegel_z(6.0)
        with pytest.raises(DomainError):
            riemann_siegel_z_values(np.array([6.0, 100.0]))

    def test_order_zero_still_inside_band(self):
        cfg0 = RSConfig(correction_order=0)
        for t in (100.0, 1000.0, 10000.0):
            d = abs(riemann_siegel_z(t, cfg0).z - oracle_z(t))
            assert d <= cfg0.error_constant * t ** -0.25


class TestEmZetaHalf:
    def test_at_zero(self):
        v = em_zeta_half(0.0)
        assert v.real == pytest.approx(ZETA_HALF, abs=1e-12)
        assert v.imag == 0.0

    @pytest.mark.parametrize("t", [100.0, 1000.0])
    def test_modulus_matches_z(self, t):
        cfg = RSConfig()
        d = abs(abs(em_zeta_half(t)) - abs(riemann_siegel_z(t, cfg).z))
        assert d <= cfg.error_constant * t ** -0.25

    def test_rotation_is_real_at_500(self):
        assert abs((z_phase(500.0) * em_zeta_half(500.0)).imag) <= 1e-8

    def test_rotation_is_real_over_range(self):
        for t in np.geomspace(10.0, 1e6, 100):
            assert abs((z_phase(float(t)) * em_zeta_half(float(t))).imag) \
                <= 1e-8

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            em_zeta_half(-1.0)

    def test_phase_is_unimodular(self):
        for t in (10.0, 123.4, 9999.0, 7.5e5):
            assert abs(abs(z_phase(t)) - 1.0) <= 1e-15


class TestHlX:
    CONST = (math.pi / 2.0) ** 0.25

    def test_ratio_is_minus_constant(self):
        for t in (100.0, 543.2, 10000.0):
            z = riemann_siegel_z(t).z
            assert hl_x(t) / z == pytest.approx(-self.CONST, rel=1e-14)

    def test_sign_opposite_z(self):
        for t in (100.0, 101.0, 250.3):
            z = riemann_siegel_z(t).z
            assert math.copysign(1.0, hl_x(t)) == -math.copysign(1.0, z)

    def test_vanishes_at_zero_of_z(self):
        # gamma_1 is below 2pi*4 but fine for the formula itself
        assert abs(hl_x(GAMMA_1)) <= 2.0 * GAMMA_1 ** -0.25 * self.CONST

    @given(st.floats(min_value=TWO_PI, max_value=1e5))
    @settings(max_examples=25, deadline=None)
    def test_proportionality_everywhere(self, t):
        assert hl_x(t) == pytest.approx(-self.CONST * riemann_siegel_z(t).z,
                                        rel=1e-13, abs=1e-300)
