import cmath
import math

import numpy as np
import pytest

from sensit import (
    ClassicalOuBackend,
    ClassicalOuMcBackend,
    EnvState,
    ModulationFunction,
    OuParams,
    QuantumBathBackend,
    SdrParams,
    SignalUnderflowError,
    build_system,
    contrast_analytic,
    decoherence_gaussian,
    default_x_grid,
    experiment_preparation_scan,
    experiment_quench_decay,
    experiment_scrambling_scan,
    make_cpmg,
    make_hahn,
    make_sdr,
    maximally_mixed,
    otoc_k,
    otoc_k_commutator,
    prepare_quenched_state,
    sdr_sweep,
    sensit_contrast,
    sigma_functional,
    signal_exact,
    sphere_bath,
    time_reverse,
)


@pytest.fixture(scope="module")
def bath4():
    return sphere_bath(4, seed=11, coupling_scale=2000.0)


class TestSensitContrast:
    def test_cpmg_classical_contrast_is_zero(self):
        backend = ClassicalOuBackend(OuParams(tau=0.3, sigma0=1.0, sigma_init=3.0))
        point = sensit_contrast(make_cpmg(12, 1.0), backend)
        assert abs(point.re_delta_j) < 1e-10

    def test_cpmg_quantum_contrast_is_zero(self, bath4):
        backend = QuantumBathBackend(bath4, prepare_quenched_state(bath4, 150e-6))
        point = sensit_contrast(make_cpmg(12, 750e-6), backend)
        assert abs(point.re_delta_j) < 1e-10

    def test_stationary_classical_sdr_is_zero(self):
        backend = ClassicalOuBackend(OuParams(tau=0.3, sigma0=2.0, sigma_init=2.0))
        point = sensit_contrast(make_sdr(SdrParams(12, 0.5, 1.0)), backend)
        assert abs(point.re_delta_j) < 1e-10

    def test_definitional_cross_check_quantum(self, bath4):
        state = prepare_quenched_state(bath4, 180e-6)
        m = make_sdr(SdrParams(12, 0.5, 750e-6))
        point = sensit_contrast(m, QuantumBathBackend(bath4, state), "magnetic", x=0.5)
        m_f = signal_exact(m, bath4, state)
        m_ft = signal_exact(time_reverse(m), bath4, state)
        assert point.m_f == m_f
        assert point.m_ft == m_ft
        assert point.re_delta_j == pytest.approx(
            math.log(abs(m_ft)) - math.log(abs(m_f)), abs=1e-14
        )

    def test_log_magnitude_equals_complex_route(self, bath4):
        state = prepare_quenched_state(bath4, 120e-6)
        m = make_sdr(SdrParams(12, 0.4, 750e-6))
        point = sensit_contrast(m, QuantumBathBackend(bath4, state))
        delta = -cmath.log(point.m_f) + cmath.log(point.m_ft).conjugate()
        assert point.re_delta_j == pytest.approx(delta.real, abs=1e-12)
        assert point.im_delta_j == pytest.approx(delta.imag, abs=1e-12)

    def test_magnetic_phase_relation_at_equilibrium(self, bath4):
        backend = QuantumBathBackend(bath4, maximally_mixed(4))
        point = sensit_contrast(make_sdr(SdrParams(12, 0.3, 750e-6)), backend, "magnetic")
        assert abs(point.im_delta_j) < 1e-10
        assert abs(point.re_delta_j) < 1e-10

    def test_electric_class_skips_conjugation(self, bath4):
        state = prepare_quenched_state(bath4, 150e-6)
        m = make_sdr(SdrParams(12, 0.35, 750e-6))
        mag = sensit_contrast(m, QuantumBathBackend(bath4, state), "magnetic")
        ele = sensit_contrast(m, QuantumBathBackend(bath4, state), "electric")
        assert mag.re_delta_j == pytest.approx(ele.re_delta_j, abs=1e-14)
        assert mag.im_delta_j == pytest.approx(
            ele.im_delta_j - 2.0 * cmath.log(ele.m_ft).imag, abs=1e-12
        )

    def test_signal_underflow(self):
        backend = ClassicalOuBackend(OuParams(tau=0.3, sigma0=500.0, sigma_init=500.0))
        with pytest.raises(SignalUnderflowError):
            sensit_contrast(make_hahn(1.0), backend)


class TestSdrSweep:
    def test_stationary_integral_is_null(self):
        backend = ClassicalOuBackend(OuParams(tau=0.2, sigma0=2.0, sigma_init=2.0))
        curve = sdr_sweep(12, 1.0, None, backend)
        assert abs(curve.integrated) < 1e-9
        assert len(curve.points) == 12

    def test_endpoints_are_time_symmetric(self):
        backend = ClassicalOuBackend(OuParams(tau=0.2, sigma0=1.0, sigma_init=4.0))
        curve = sdr_sweep(12, 1.0, None, backend)
        assert abs(curve.points[0].re_delta_j) < 1e-10
        assert abs(curve.points[-1].re_delta_j) < 1e-10

    def test_quenched_integral_matches_response_functional(self):
        p = OuParams(tau=0.2, sigma0=1.0, sigma_init=3.5)
        xs = default_x_grid(12)
        curve = sdr_sweep(12, 1.0, xs, ClassicalOuBackend(p))
        ref = (p.sigma_init - p.sigma0) * np.trapezoid(
            [sigma_functional(make_sdr(SdrParams(12, x, 1.0)), p.tau) for x in xs], xs
        )
        assert curve.integrated == pytest.approx(ref, abs=1e-8)

    def test_grid_validation(self):
        backend = ClassicalOuBackend(OuParams(0.2, 1.0, 1.0))
        with pytest.raises(ValueError):
            sdr_sweep(12, 1.0, [0.5], backend)
        with pytest.raises(ValueError):
            sdr_sweep(12, 1.0, [0.5, 0.4], backend)
        with pytest.raises(ValueError):
            sdr_sweep(12, 1.0, [0.0, 0.95], backend)

    def test_threads_do_not_change_values(self, bath4):
        backend = QuantumBathBackend(bath4, prepare_quenched_state(bath4, 150e-6))
        a = sdr_sweep(12, 750e-6, None, backend, threads=1)
        b = sdr_sweep(12, 750e-6, None, backend, threads=3)
        assert a.integrated == b.integrated
        for pa, pb in zip(a.points, b.points):
            assert pa == pb

    def test_mc_backend_round_trip(self):
        p = OuParams(tau=0.3, sigma0=1.0, sigma_init=2.5)
        backend = ClassicalOuMcBackend(p, n_traj=4000, seed=17)
        xs = np.array([0.2, 0.5, 0.8])
        a = sdr_sweep(12, 1.0, xs, backend)
        b = sdr_sweep(12, 1.0, xs, backend)
        assert [pa.m_f for pa in a.points] == [pb.m_f for pb in b.points]


class TestBackendAgreement:
    def test_single_spin_static_vs_classical_gaussian(self):
        # free evolution against a frozen field: binary +/- d/2 versus a
        # Gaussian of the same variance agree while the phase is small
        d1 = 1.0
        t_s = 1.0
        quantum = build_system([d1], [[0.0]])
        fid = ModulationFunction(t_s)
        m_quantum = signal_exact(fid, quantum, maximally_mixed(1))
        # static classical field: OU with a huge correlation time
        p = OuParams(tau=1e6 * t_s, sigma0=d1**2 / 4.0, sigma_init=d1**2 / 4.0)
        m_classical = math.exp(-decoherence_gaussian(fid, p))
        assert abs(m_quantum - m_classical) / abs(m_classical) < 0.02


class TestQuenchDecay:
    def setup_method(self):
        self.p = OuParams(tau=150e-6, sigma0=2.0e7, sigma_init=8.0e7)
        self.ts = np.linspace(50e-6, 3e-3, 30)
        self.curves = experiment_quench_decay(self.p, self.ts, make_hahn)

    def test_all_curves_start_at_unity(self):
        tiny = experiment_quench_decay(self.p, [1e-9], make_hahn)
        for key in ("m_sigma_zero", "m_stationary", "m_quenched"):
            assert tiny[key][0] == pytest.approx(1.0, abs=1e-9)

    def test_short_time_ordering(self):
        mz, ms, mq = (self.curves[k][0] for k in ("m_sigma_zero", "m_stationary", "m_quenched"))
        assert mz > ms > mq

    def test_long_time_rates_converge(self):
        rates = []
        for key in ("m_sigma_zero", "m_stationary", "m_quenched"):
            lnm = -np.log(self.curves[key])
            rates.append((lnm[-1] - lnm[-2]) / (self.ts[-1] - self.ts[-2]))
        assert (max(rates) - min(rates)) / np.mean(rates) < 0.05

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            experiment_quench_decay(self.p, [0.0, 1.0], make_hahn)


class TestPreparationScan:
    def test_equilibrium_row_is_null(self, bath4):
        scan = experiment_preparation_scan(bath4, [0.0, 100e-6], 12, 750e-6)
        assert abs(scan["integrated_contrast"][0]) < 1e-9
        assert abs(scan["k_value"][0]) < 1e-9
        assert scan["integrated_contrast"][1] != 0.0

    def test_k_matches_commutator_route(self, bath4):
        scan = experiment_preparation_scan(bath4, [120e-6], 12, 750e-6)
        assert scan["k_value"][0] == pytest.approx(otoc_k_commutator(bath4, 120e-6), abs=1e-10)


class TestScramblingScan:
    def test_zero_te_matches_preparation_point(self, bath4):
        t_p = 150e-6
        prep = experiment_preparation_scan(bath4, [t_p], 12, 750e-6)
        scr = experiment_scrambling_scan(bath4, t_p, [0.0, 1e-3], 12, 750e-6)
        assert scr["integrated_contrast"][0] == prep["integrated_contrast"][0]

    def test_static_bath_is_te_independent(self):
        s = build_system([2000.0, -1500.0, 800.0], np.zeros((3, 3)))
        scr = experiment_scrambling_scan(s, 150e-6, [0.0, 1e-3, 5e-3], 6, 750e-6)
        c = scr["integrated_contrast"]
        assert np.max(np.abs(c - c[0])) < 1e-10

    def test_requires_positive_preparation(self, bath4):
        with pytest.raises(ValueError):
            experiment_scrambling_scan(bath4, 0.0, [0.0], 12, 750e-6)
