import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from quatsync.errors import BlowUp, MaxStepsExceeded
from quatsync.integrate import IntegratorConfig, find_section_crossing, integrate, step_rk4
from quatsync.model import ModelParams, pack, rhs_full


def growth(t, s):
    return s


def harmonic(t, s):
    return np.array([-s[1], s[0]])


def rk4_error(dt):
    cfg = IntegratorConfig(method="rk4_fixed", t_end=1.0, dt=dt)
    return abs(integrate(growth, [1.0], cfg).states[-1, 0] - math.e)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            IntegratorConfig(method="euler")
        with pytest.raises(ValueError):
            IntegratorConfig(method="rk4_fixed")
        with pytest.raises(ValueError):
            IntegratorConfig(rtol=1e-16)
        with pytest.raises(ValueError):
            IntegratorConfig(max_steps=0)

    def test_to_dict(self):
        d = IntegratorConfig(t_end=5.0).to_dict()
        assert d["method"] == "rk45_adaptive" and d["t_end"] == 5.0


class TestRk4:
    def test_single_step(self):
        y = step_rk4(growth, np.array([1.0]), 0.0, 0.1)
        assert abs(y[0] - math.exp(0.1)) < 1e-7

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            step_rk4(growth, np.array([1.0]), 0.0, 0.0)

    def test_fourth_order(self):
        ratio = rk4_error(0.1) / rk4_error(0.05)
        assert 12 <= ratio <= 20

    def test_lands_on_t_end(self):
        traj = integrate(growth, [1.0], IntegratorConfig(method="rk4_fixed", t_end=1.0, dt=0.3))
        assert traj.times[-1] == 1.0 and len(traj) == 5


class TestAdaptive:
    def test_harmonic_period(self):
        cfg = IntegratorConfig(t_end=2 * math.pi, rtol=1e-10, atol=1e-12)
        traj = integrate(harmonic, [1.0, 0.0], cfg)
        assert np.max(np.abs(traj.states[-1] - [1.0, 0.0])) < 1e-8

    def test_tolerance_tightening(self):
        errs = []
        for rtol in (1e-6, 1e-8):
            cfg = IntegratorConfig(t_end=2 * math.pi, rtol=rtol, atol=rtol * 1e-2)
            errs.append(np.max(np.abs(integrate(harmonic, [1.0, 0.0], cfg).states[-1] - [1, 0])))
        assert errs[1] < errs[0] / 10

    def test_classical_phase_locking(self):
        p = ModelParams([0.25, -0.25], 1.0)
        s0 = pack([0.0, 0.0], [0.2, 0.2], [0, 0], [0, 0])
        traj = integrate(lambda t, s: rhs_full(s, p), s0, IntegratorConfig(t_end=60.0))
        w = traj.states[-1, :2]
        assert w[0] - w[1] == pytest.approx(math.asin(0.5), abs=1e-8)

    def test_against_solve_ivp(self):
        # independent reference integrator
        rng = np.random.default_rng(3)
        p = ModelParams(rng.uniform(-1, 1, 4), 1.2)
        s0 = np.concatenate([rng.uniform(-2, 2, 4), rng.uniform(-0.6, 0.6, 12)])
        f = lambda t, s: rhs_full(s, p)  # noqa: E731
        ours = integrate(f, s0, IntegratorConfig(t_end=10.0, rtol=1e-11, atol=1e-13))
        ref = solve_ivp(f, (0, 10), s0, method="DOP853", rtol=1e-12, atol=1e-14)
        assert np.max(np.abs(ours.states[-1] - ref.y[:, -1])) < 1e-8

    def test_deterministic(self):
        cfg = IntegratorConfig(t_end=20.0)
        a = integrate(harmonic, [1.0, 0.3], cfg)
        b = integrate(harmonic, [1.0, 0.3], cfg)
        assert np.array_equal(a.times, b.times) and np.array_equal(a.states, b.states)

    def test_max_steps(self):
        with pytest.raises(MaxStepsExceeded) as info:
            integrate(harmonic, [1.0, 0.0], IntegratorConfig(t_end=100.0, max_steps=5))
        assert len(info.value.trajectory) == 6

    def test_blow_up_keeps_partial_trajectory(self):
        def f(t, s):
            if s[0] > 10:
                raise BlowUp("too large", float(s[0]))
            return s

        with pytest.raises(BlowUp) as info:
            integrate(f, [1.0], IntegratorConfig(t_end=5.0))
        traj = info.value.trajectory
        assert len(traj) > 1
        assert traj.t_end < math.log(10) + 1e-9
        assert np.all(traj.states[:, 0] <= 10)

    def test_stop_callback(self):
        traj = integrate(growth, [1.0], IntegratorConfig(t_end=10.0), stop=lambda t, s: s[0] > 3)
        assert traj.states[-1, 0] > 3 and traj.t_end < 10.0

    def test_bad_span(self):
        with pytest.raises(ValueError):
            integrate(growth, [1.0], IntegratorConfig(t_end=1.0), t0=2.0)


class TestTrajectory:
    def test_interpolation(self):
        traj = integrate(harmonic, [1.0, 0.0], IntegratorConfig(t_end=10.0, rtol=1e-10))
        np.testing.assert_array_equal(traj(traj.times[3]), traj.states[3])
        t = np.linspace(0, 10, 101)
        vals = traj(t)
        assert np.max(np.abs(vals[:, 0] - np.cos(t))) < 1e-6
        with pytest.raises(ValueError):
            traj(11.0)

    def test_sample_includes_end(self):
        traj = integrate(harmonic, [1.0, 0.0], IntegratorConfig(t_end=1.05))
        t, s = traj.sample(0.1)
        assert t[-1] == 1.05 and np.max(np.diff(t)) <= 0.1 + 1e-15
        assert s.shape == (len(t), 2)

    def test_section_crossings(self):
        traj = integrate(harmonic, [1.0, 0.0], IntegratorConfig(t_end=10.0, rtol=1e-10))
        hits = find_section_crossing(traj, lambda s: s[1], "any")
        times = [t for t, _ in hits]
        np.testing.assert_allclose(times, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-8)
        down = find_section_crossing(traj, lambda s: s[1], "down")
        assert [round(t / math.pi) for t, _ in down] == [1, 3]
        with pytest.raises(ValueError):
            find_section_crossing(traj, lambda s: s[1], "sideways")
