import math

import numpy as np
import pytest
from scipy import integrate

from sensit import (
    ModulationFunction,
    SdrParams,
    evaluate,
    fourier_transform,
    integrate_against,
    make_cpmg,
    make_hahn,
    make_sdr,
    segments,
    time_reverse,
)

from oracles import gl_integrate

T750 = 750e-6


def random_sdr(rng, n_pulses=12, sensing_time=T750):
    x = rng.uniform(0.0, (n_pulses - 1) / n_pulses)
    return make_sdr(SdrParams(n_pulses, x, sensing_time))


class TestConstruction:
    def test_hahn_pulse_at_midpoint(self):
        m = make_hahn(T750)
        assert m.pulse_times == (375e-6,)
        assert m.initial_sign == 1

    def test_hahn_rejects_nonpositive_duration(self):
        with pytest.raises(ValueError):
            make_hahn(0.0)
        with pytest.raises(ValueError):
            make_hahn(-1.0)

    def test_cpmg_single_pulse_equals_hahn(self):
        assert make_cpmg(1, T750) == make_hahn(T750)

    def test_cpmg_two_pulse_positions(self):
        assert make_cpmg(2, 1.0).pulse_times == (0.25, 0.75)

    def test_cpmg_rejects_zero_pulses(self):
        with pytest.raises(ValueError):
            make_cpmg(0, 1.0)

    def test_pulses_outside_window_rejected(self):
        with pytest.raises(ValueError):
            ModulationFunction(1.0, (1.5,))

    def test_coincident_pulses_cancel_pairwise(self):
        m = ModulationFunction(1.0, (0.5, 0.5))
        assert m.pulse_times == ()
        assert m.initial_sign == 1
        m3 = ModulationFunction(1.0, (0.5, 0.5, 0.5))
        assert m3.pulse_times == (0.5,)

    def test_boundary_pulse_flips_sign(self):
        m = ModulationFunction(1.0, (0.0, 0.4))
        assert m.pulse_times == (0.4,)
        assert m.initial_sign == -1
        m_end = ModulationFunction(1.0, (0.4, 1.0))
        assert m_end.pulse_times == (0.4,)
        assert m_end.initial_sign == -1


class TestSdr:
    def test_max_asymmetry_is_cpmg(self):
        n = 12
        m = make_sdr(SdrParams(n, (n - 1) / n, T750))
        ref = make_cpmg(n, T750)
        assert len(m.pulse_times) == n
        assert np.allclose(m.pulse_times, ref.pulse_times, atol=1e-15 * T750, rtol=0.0)

    def test_zero_asymmetry_is_hahn_up_to_sign(self):
        m = make_sdr(SdrParams(12, 0.0, T750))
        assert m.pulse_times == make_hahn(T750).pulse_times
        assert m.initial_sign in (1, -1)

    def test_documented_pulse_positions(self):
        # N=12, x=11/24, T_s=750 us: 11 pulses spaced 31.25 us starting at
        # 15.625 us, plus the long-echo pulse at 546.875 us
        m = make_sdr(SdrParams(12, 11 / 24, T750))
        expected = [15.625e-6 + k * 31.25e-6 for k in range(11)] + [546.875e-6]
        assert np.allclose(m.pulse_times, expected, atol=1e-15 * T750, rtol=0.0)

    def test_asymmetry_out_of_range(self):
        with pytest.raises(ValueError):
            SdrParams(12, 11 / 12 + 1e-6, T750)
        with pytest.raises(ValueError):
            SdrParams(12, -0.01, T750)
        with pytest.raises(ValueError):
            SdrParams(1, 0.0, T750)

    def test_positions_continuous_in_x(self):
        n = 12
        for x in (0.05, 0.3, 0.6, 11 / 12 - 1e-9):
            a = make_sdr(SdrParams(n, x, 1.0))
            b = make_sdr(SdrParams(n, x + 1e-9, 1.0))
            assert len(a.pulse_times) == len(b.pulse_times)
            shift = max(abs(p - q) for p, q in zip(a.pulse_times, b.pulse_times))
            assert shift < 5e-9 * n


class TestTimeReverse:
    def test_involution(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            m = random_sdr(rng)
            mm = time_reverse(time_reverse(m))
            assert mm.initial_sign == m.initial_sign
            assert np.allclose(mm.pulse_times, m.pulse_times, atol=1e-15 * m.sensing_time, rtol=0.0)

    def test_cpmg_is_symmetric(self):
        m = make_cpmg(8, T750)
        r = time_reverse(m)
        assert np.allclose(r.pulse_times, m.pulse_times, atol=1e-15 * T750, rtol=0.0)

    def test_reversed_sdr_structure(self):
        # reversed SDR: single echo over [0, (1-x)T_s] with its pulse at the
        # center, then the short-echo train
        n, x, t_s = 12, 0.4, 1.0
        r = time_reverse(make_sdr(SdrParams(n, x, t_s)))
        assert r.pulse_times[0] == pytest.approx((1 - x) * t_s / 2, abs=1e-15)
        train = np.diff(r.pulse_times[1:])
        assert np.allclose(train, x * t_s / (n - 1), atol=1e-12)

    def test_pointwise_reflection(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            m = random_sdr(rng, sensing_time=1.0)
            r = time_reverse(m)
            grid = rng.uniform(0.0, 1.0, 300)
            pulses = np.array(m.pulse_times + r.pulse_times)
            safe = np.abs(grid[:, None] - pulses[None, :]).min(axis=1) > 1e-9
            grid = grid[safe]
            assert np.array_equal(evaluate(r, grid), evaluate(m, 1.0 - grid))


class TestEvaluate:
    def test_hahn_quarters(self):
        m = make_hahn(1.0)
        assert evaluate(m, 0.25) == 1
        assert evaluate(m, 0.75) == -1

    def test_initial_sign_before_first_pulse(self):
        m = ModulationFunction(1.0, (0.5,), initial_sign=-1)
        assert evaluate(m, 0.1) == -1

    def test_outside_window_raises(self):
        m = make_hahn(1.0)
        with pytest.raises(ValueError):
            evaluate(m, -0.1)
        with pytest.raises(ValueError):
            evaluate(m, 1.1)

    def test_unit_magnitude_and_flip_count(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            m = random_sdr(rng, sensing_time=1.0)
            grid = np.linspace(1e-7, 1.0 - 1e-7, 4001)
            vals = evaluate(m, grid)
            assert set(np.unique(vals)) <= {-1, 1}
            flips = int(np.sum(vals[1:] != vals[:-1]))
            assert flips == len(m.pulse_times)


class TestIntegrateAgainst:
    def test_hahn_constant_is_zero(self):
        assert integrate_against(make_hahn(1.0), "constant") == pytest.approx(0.0, abs=1e-15)

    def test_cpmg_exponential_symmetry(self):
        m = make_cpmg(6, 1.0)
        a = integrate_against(m, "exp_from_start", 0.37)
        b = integrate_against(m, "exp_from_end", 0.37)
        assert a == pytest.approx(b, abs=1e-15)

    def test_hahn_exponential_frozen_value(self):
        # exact closed form for T_s = tau = 1: (1 - e^{-1/2})^2
        val = integrate_against(make_hahn(1.0), "exp_from_start", 1.0)
        assert val == pytest.approx(0.15481812174617549, abs=1e-15)

    def test_matches_quadrature(self):
        m = make_hahn(1.0)
        ref, err = integrate.quad(
            lambda t: evaluate(m, t) * math.exp(-t), 0.0, 1.0, points=[0.5], limit=200
        )
        assert err < 1e-12
        assert integrate_against(m, "exp_from_start", 1.0) == pytest.approx(ref, abs=1e-12)

    def test_sdr_matches_gauss_legendre(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            m = random_sdr(rng, sensing_time=1.0)
            tau = rng.uniform(0.05, 2.0)
            ref = gl_integrate(m, lambda t: np.exp(-t / tau))
            assert integrate_against(m, "exp_from_start", tau) == pytest.approx(ref, rel=1e-12, abs=1e-14)

    def test_reversal_change_of_variables(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            m = random_sdr(rng, sensing_time=1.0)
            tau = rng.uniform(0.05, 2.0)
            a = integrate_against(m, "exp_from_start", tau)
            b = integrate_against(time_reverse(m), "exp_from_end", tau)
            assert a == pytest.approx(b, rel=1e-13, abs=1e-15)

    def test_bad_kernel_and_tau(self):
        m = make_hahn(1.0)
        with pytest.raises(ValueError):
            integrate_against(m, "gaussian")
        with pytest.raises(ValueError):
            integrate_against(m, "exp_from_start", -1.0)
        with pytest.raises(ValueError):
            integrate_against(m, "exp_from_start")


class TestFourierTransform:
    def test_zero_frequency_is_constant_integral(self):
        m = make_cpmg(3, 1.0)
        assert fourier_transform(m, 0.0) == pytest.approx(integrate_against(m, "constant"), abs=1e-15)

    def test_matches_quadrature_on_grid(self):
        rng = np.random.default_rng(6)
        m = random_sdr(rng, sensing_time=1.0)
        omegas = np.array([0.0, 0.3, 2.0, 17.0, -5.5])
        vals = fourier_transform(m, omegas)
        for w, v in zip(omegas, vals):
            re = gl_integrate(m, lambda t: np.cos(w * t))
            im = gl_integrate(m, lambda t: np.sin(w * t))
            assert v == pytest.approx(re + 1j * im, rel=1e-11, abs=1e-12)


def test_segments_tile_the_window():
    rng = np.random.default_rng(7)
    m = random_sdr(rng)
    segs = segments(m)
    assert segs[0][0] == 0.0
    assert segs[-1][1] == m.sensing_time
    for (a, b, s), (a2, b2, s2) in zip(segs[:-1], segs[1:]):
        assert b == a2
        assert s2 == -s
    assert segs[0][2] == m.initial_sign
