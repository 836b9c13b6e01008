"""Contrast measurements built from sequences, noise backends and states.

The central observable is the difference between the decoherence exponents
accumulated under a pulse sequence and under its time-reversed counterpart.
For stationary environments whose noise operators commute (or effectively
commute) at different times the two signals coincide up to conjugation and
the contrast vanishes; a nonzero value singles out nonstationary or
genuinely quantum non-Gaussian fluctuations.  Sweeping the asymmetry
parameter of the SDR family and integrating the contrast over it condenses
the effect into a single scalar per environment state.
"""

from __future__ import annotations

import cmath
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ou import OuParams, decoherence_gaussian, simulate_signal_mc
from .sequences import ModulationFunction, SdrParams, make_sdr, time_reverse
from .spinbath import EnvState, SpinBathSystem, otoc_k, prepare_quenched_state, scramble, signal_exact

# Signals with modulus below this are treated as fully decayed; taking their
# logarithm would amplify noise without bound.
SIGNAL_FLOOR = 1e-12


class SignalUnderflowError(ValueError):
    """Raised when a signal magnitude is too small for a meaningful contrast."""


@dataclass(frozen=True)
class ClassicalOuBackend:
    """Closed-form Gaussian signal for the quenched OU process."""

    params: OuParams

    def signal(self, m: ModulationFunction) -> complex:
        return complex(np.exp(-decoherence_gaussian(m, self.params)))


@dataclass(frozen=True)
class ClassicalOuMcBackend:
    """Monte Carlo signal for the quenched OU process (deterministic per seed)."""

    params: OuParams
    n_traj: int
    seed: int
    grid_factor: int = 50
    threads: int = 1

    def signal(self, m: ModulationFunction) -> complex:
        est = simulate_signal_mc(
            m, self.params, self.n_traj, self.seed,
            grid_factor=self.grid_factor, threads=self.threads,
        )
        return est.mean


@dataclass(frozen=True)
class QuantumBathBackend:
    """Exact spin-bath signal for a fixed environment state."""

    system: SpinBathSystem
    state: EnvState

    def signal(self, m: ModulationFunction) -> complex:
        return signal_exact(m, self.system, self.state)


@dataclass(frozen=True)
class ContrastPoint:
    """Signals for one sequence and its reversal, plus the log-ratio split."""

    x: float
    m_f: complex
    m_ft: complex
    re_delta_j: float
    im_delta_j: float


@dataclass(frozen=True)
class ContrastCurve:
    """Contrast points over an asymmetry grid and their integral."""

    points: list[ContrastPoint]
    integrated: float


def sensit_contrast(
    m: ModulationFunction,
    backend,
    noise_class: str = "magnetic",
    x: float = float("nan"),
) -> ContrastPoint:
    """Contrast between a sequence and its time reversal on one backend.

    The reversed-sequence exponent is complex conjugated for magnetic-type
    noise before taking the difference, so that a symmetric environment
    yields exactly zero.  Raises ``SignalUnderflowError`` when either signal
    magnitude falls below ``SIGNAL_FLOOR``.
    """
    m_f = complex(backend.signal(m))
    m_ft = complex(backend.signal(time_reverse(m)))
    if abs(m_f) < SIGNAL_FLOOR or abs(m_ft) < SIGNAL_FLOOR:
        raise SignalUnderflowError(
            f"signal underflow: |M_f| = {abs(m_f):.3e}, |M_fT| = {abs(m_ft):.3e}"
        )
    j_f = -cmath.log(m_f)
    j_ft = -cmath.log(m_ft)
    if noise_class == "magnetic":
        j_ft = j_ft.conjugate()
    delta = j_f - j_ft
    return ContrastPoint(
        x=x, m_f=m_f, m_ft=m_ft, re_delta_j=delta.real, im_delta_j=delta.imag
    )


def default_x_grid(n_pulses: int, n_points: int = 12) -> np.ndarray:
    """Uniform asymmetry grid on [0, (N-1)/N]."""
    return np.linspace(0.0, (n_pulses - 1) / n_pulses, n_points)


def _map_indexed(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def sdr_sweep(
    n_pulses: int,
    sensing_time: float,
    x_grid,
    backend,
    noise_class: str = "magnetic",
    threads: int = 1,
) -> ContrastCurve:
    """Contrast at every asymmetry of the SDR family plus its x integral.

    ``x_grid`` may be None for the default 12 uniform points.  The integral
    uses the trapezoid rule on the given grid.
    """
    if x_grid is None:
        x_grid = default_x_grid(n_pulses)
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size < 2:
        raise ValueError("x_grid must hold at least two points")
    if np.any(np.diff(xs) <= 0.0):
        raise ValueError("x_grid must be strictly increasing")
    x_max = (n_pulses - 1) / n_pulses
    if xs[0] < 0.0 or xs[-1] > x_max + 1e-12:
        raise ValueError(f"x_grid must stay within [0, {x_max}]")

    def one(x: float) -> ContrastPoint:
        m = make_sdr(SdrParams(n_pulses, min(x, x_max), sensing_time))
        return sensit_contrast(m, backend, noise_class, x=x)

    points = _map_indexed(one, [float(x) for x in xs], threads)
    integrated = float(np.trapezoid([p.re_delta_j for p in points], xs))
    return ContrastCurve(points=points, integrated=integrated)


def experiment_quench_decay(
    p: OuParams,
    ts_grid,
    make_sequence,
) -> dict[str, np.ndarray]:
    """Signal-vs-time curves for quenches below, at and above equilibrium.

    For every sensing time in ``ts_grid`` the sequence produced by
    ``make_sequence(t_s)`` is applied to three variants of the noise: initial
    variance zero, equal to the stationary one, and ``p.sigma_init``.
    Returns arrays keyed ``ts``, ``m_sigma_zero``, ``m_stationary``,
    ``m_quenched``.
    """
    ts = np.asarray(ts_grid, dtype=float)
    if ts.ndim != 1 or ts.size < 1 or np.any(ts <= 0.0):
        raise ValueError("ts_grid must hold positive sensing times")
    variants = {
        "m_sigma_zero": OuParams(p.tau, p.sigma0, 0.0),
        "m_stationary": OuParams(p.tau, p.sigma0, p.sigma0),
        "m_quenched": OuParams(p.tau, p.sigma0, p.sigma_init),
    }
    out: dict[str, np.ndarray] = {"ts": ts}
    for key, params in variants.items():
        out[key] = np.array(
            [np.exp(-decoherence_gaussian(make_sequence(t), params)) for t in ts]
        )
    return out


def experiment_preparation_scan(
    sys: SpinBathSystem,
    tp_grid,
    n_pulses: int,
    sensing_time: float,
    x_grid=None,
    phi_points: int | None = None,
    threads: int = 1,
) -> dict[str, np.ndarray]:
    """Integrated contrast and correlated-spin count versus preparation time."""
    tps = np.asarray(tp_grid, dtype=float)
    if tps.ndim != 1 or tps.size < 1 or np.any(tps < 0.0):
        raise ValueError("tp_grid must hold non-negative times")
    contrasts = []
    ks = []
    for t_p in tps:
        state = prepare_quenched_state(sys, float(t_p))
        curve = sdr_sweep(
            n_pulses, sensing_time, x_grid,
            QuantumBathBackend(sys, state), sys.noise_class, threads=threads,
        )
        contrasts.append(curve.integrated)
        ks.append(otoc_k(sys, float(t_p), phi_points).k_value)
    return {
        "tp": tps,
        "integrated_contrast": np.array(contrasts),
        "k_value": np.array(ks),
    }


def experiment_scrambling_scan(
    sys: SpinBathSystem,
    t_p: float,
    te_grid,
    n_pulses: int,
    sensing_time: float,
    x_grid=None,
    threads: int = 1,
) -> dict[str, np.ndarray]:
    """Integrated contrast versus free-evolution time after the quench."""
    if t_p <= 0.0:
        raise ValueError("scrambling scan needs a positive preparation time")
    tes = np.asarray(te_grid, dtype=float)
    if tes.ndim != 1 or tes.size < 1 or np.any(tes < 0.0):
        raise ValueError("te_grid must hold non-negative times")
    prepared = prepare_quenched_state(sys, t_p)
    contrasts = []
    for t_e in tes:
        state = scramble(sys, prepared, float(t_e))
        curve = sdr_sweep(
            n_pulses, sensing_time, x_grid,
            QuantumBathBackend(sys, state), sys.noise_class, threads=threads,
        )
        contrasts.append(curve.integrated)
    return {"te": tes, "integrated_contrast": np.array(contrasts)}
