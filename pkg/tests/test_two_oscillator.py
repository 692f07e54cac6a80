import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from quatsync.errors import BlowUp, NotWeak
from quatsync.stability import classify_eigenvalues
from quatsync.two_oscillator import (detect_periodic_orbit, epsilon_band, equilibrium_n2,
                                     jacobian_n2, lift_check, lyapunov_F, nested_orbits,
                                     nullcline_hit_time, rhs_n2)

ALPHA = math.acosh(2.0)
# w + i v obeys dz/dt = omega - lam sin z, so every orbit around the centre has
# the linearized period
PERIOD = 2 * math.pi / math.sqrt(3.0)


@pytest.fixture(scope="module")
def orbit():
    return detect_periodic_orbit(ALPHA + 0.01, 2.0, 1.0)


class TestVectorField:
    def test_example(self):
        wdot, vdot = rhs_n2((0.0, 1.0), 2.0, 1.0)
        assert wdot == 2.0 and vdot == pytest.approx(-math.sinh(1.0), abs=1e-15)

    def test_complex_form(self):
        rng = np.random.default_rng(0)
        for w, v in rng.uniform(-3, 3, (50, 2)):
            z = complex(2.0 - 1.3 * np.sin(complex(w, v)))
            wdot, vdot = rhs_n2((w, v), 2.0, 1.3)
            assert abs(complex(wdot, vdot) - z) < 1e-13

    def test_vectorized(self):
        w, v = np.linspace(0, 1, 5), np.linspace(0, 2, 5)
        wdot, vdot = rhs_n2((w, v), 2.0, 1.0)
        assert wdot.shape == (5,) and vdot[0] == 0.0

    def test_blow_up(self):
        with pytest.raises(BlowUp):
            rhs_n2((0.0, 31.0), 2.0, 1.0)

    def test_axis_invariant(self):
        for w in np.linspace(-4, 4, 17):
            assert rhs_n2((w, 0.0), 2.0, 1.0)[1] == 0.0


class TestEquilibrium:
    def test_values(self):
        eq = equilibrium_n2(2.0, 1.0)
        assert eq.w == math.pi / 2 and eq.v == pytest.approx(1.3169578969248166, abs=1e-15)
        assert equilibrium_n2(2.0, 1.0, k=1).w == pytest.approx(5 * math.pi / 2)

    @given(st.floats(0.05, 5.0), st.floats(0.01, 0.99), st.integers(-2, 2))
    def test_residual(self, omega, ratio, k):
        lam = omega * ratio
        eq = equilibrium_n2(omega, lam, k)
        wdot, vdot = rhs_n2(eq, omega, lam)
        assert abs(wdot) <= 1e-10 * omega and abs(vdot) <= 1e-10 * omega

    def test_not_weak(self):
        for omega, lam in ((1.0, 1.0), (1.0, 2.0), (1.0, 0.0)):
            with pytest.raises(NotWeak):
                equilibrium_n2(omega, lam)

    def test_periodic_in_w(self):
        a = rhs_n2((0.3, 0.7), 2.0, 1.0)
        b = rhs_n2((0.3 + 2 * math.pi, 0.7), 2.0, 1.0)
        assert a == pytest.approx(b, abs=1e-14)

    def test_center(self):
        J = jacobian_n2(equilibrium_n2(2.0, 1.0), 2.0, 1.0)
        eigs = np.linalg.eigvals(J)
        assert classify_eigenvalues(eigs) == "center_candidate"
        assert np.sort(np.abs(eigs.imag)) == pytest.approx([math.sqrt(3)] * 2, abs=1e-14)

    def test_jacobian_finite_difference(self):
        s, h = np.array([0.4, 0.9]), 1e-6
        J = jacobian_n2(s, 2.0, 1.0)
        for j in range(2):
            e = np.eye(2)[j] * h
            col = (np.array(rhs_n2(s + e, 2.0, 1.0)) - np.array(rhs_n2(s - e, 2.0, 1.0))) / (2 * h)
            np.testing.assert_allclose(J[:, j], col, atol=1e-8)


class TestEnergy:
    def test_examples(self):
        assert lyapunov_F((0.0, ALPHA), 0, 2.0) == pytest.approx(-math.pi, abs=1e-14)
        assert lyapunov_F((math.pi / 2, ALPHA), 0, 2.0) == pytest.approx(0.0, abs=1e-14)

    def test_is_derivative_of_distance(self):
        rng = np.random.default_rng(1)
        for w, v in rng.uniform(-1, 3, (20, 2)):
            wdot, vdot = rhs_n2((w, v), 2.0, 1.0)
            dL = (w - math.pi / 2) * wdot + (v - ALPHA) * vdot
            assert dL == pytest.approx(lyapunov_F((w, v), 0, 2.0), abs=1e-12)

    def test_band(self):
        assert epsilon_band(2.0) == 0.5
        for gamma in (5.0, 20.0):
            eps = epsilon_band(gamma)
            a = math.acosh(gamma)
            assert 0 < eps < 0.5
            inner = np.linspace((1 - eps) * a, (1 + eps) * a, 1001)
            assert np.all(np.abs((inner - a) * np.sinh(inner)) < math.pi * gamma / 2)
            assert np.all(2 * np.cosh(inner) - (inner - a) * np.sinh(inner) > 0)
            v = (1 + eps + 1e-6) * a
            assert abs((v - a) * math.sinh(v)) >= math.pi * gamma / 2 or \
                2 * math.cosh(v) - (v - a) * math.sinh(v) <= 0

    def test_sign_regions(self):
        eps, a = epsilon_band(2.0), ALPHA
        w = np.linspace(0, math.pi / 2, 202)[1:-1]
        v = np.linspace((1 - eps) * a, (1 + eps) * a, 202)[1:-1]
        W, V = np.meshgrid(w, v)
        assert np.all(lyapunov_F((W, V), 0, 2.0) < 0)
        assert np.all(lyapunov_F((W + math.pi / 2, V), 0, 2.0) > 0)
        assert np.all(np.abs(lyapunov_F((np.full_like(v, math.pi / 2), v), 0, 2.0)) < 1e-15)

    def test_band_rejects_gamma(self):
        with pytest.raises(NotWeak):
            epsilon_band(1.0)


class TestOrbits:
    def test_small_orbit(self, orbit):
        assert orbit.closure_error < 1e-6 and orbit.symmetry_error < 1e-6
        assert orbit.period == pytest.approx(PERIOD, abs=1e-6)
        assert orbit.u0 < ALPHA < orbit.v0
        assert orbit.crossings[0].w == pytest.approx(math.pi / 2, abs=1e-9)

    def test_matches_complex_ode(self, orbit):
        # independent route: complex scalar ODE through scipy
        sol = solve_ivp(lambda t, z: 2.0 - np.sin(z), (0, orbit.period),
                        [complex(math.pi / 2, orbit.v0)], rtol=1e-11, atol=1e-13,
                        dense_output=True)
        t, w, v = orbit.samples(0.05)
        z = sol.sol(t)[0]
        assert np.max(np.abs(w - z.real)) < 1e-6 and np.max(np.abs(v - z.imag)) < 1e-6

    def test_nested(self):
        orbits = nested_orbits(2.0, 1.0)
        u0 = [o.u0 for o in orbits]
        assert u0 == sorted(u0) and max(u0) < ALPHA
        max_v = [o.max_v for o in orbits]
        assert max_v == sorted(max_v, reverse=True) and min(max_v) > ALPHA
        for o in orbits:
            assert o.period == pytest.approx(PERIOD, abs=1e-6)
            assert o.decelerates

    def test_k_shift(self):
        o = detect_periodic_orbit(ALPHA + 0.2, 2.0, 1.0, k=1)
        ref = detect_periodic_orbit(ALPHA + 0.2, 2.0, 1.0)
        assert o.u0 == pytest.approx(ref.u0, abs=1e-8)

    def test_rejects_start_below_alpha(self):
        with pytest.raises(ValueError):
            detect_periodic_orbit(ALPHA - 0.1, 2.0, 1.0)

    def test_report_dict(self, orbit):
        d = orbit.to_dict()
        assert d["lambda"] == 1.0 and len(d["crossings"]) == 2

    def test_nullcline_hit(self, orbit):
        t = nullcline_hit_time(1.0, 2.0, 1.0)
        assert 0 < t < PERIOD / 2
        with pytest.raises(ValueError):
            nullcline_hit_time(2.0, 2.0, 1.0)

    def test_lift_peach_ring(self):
        ring = detect_periodic_orbit(1.45, 2.0, 1.0)
        assert lift_check(ring, 2.0, 1.0) < 1e-8

    def test_lift_along_z(self, orbit):
        assert lift_check(orbit, 2.0, 1.0, direction=(0, 0, 1)) < 1e-7
        with pytest.raises(ValueError):
            lift_check(orbit, 2.0, 1.0, direction=(0, 0, 0))
