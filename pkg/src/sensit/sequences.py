"""Piecewise-constant control modulation generated by pi-pulse trains.

A train of ideal, instantaneous pi pulses applied to a dephasing qubit turns
the qubit-environment coupling on and off in sign: the effective coupling is
multiplied by a waveform f(t) that equals +1 or -1 everywhere on [0, T_s] and
flips at every pulse.  This module represents such waveforms, builds the
standard sequences (Hahn echo, CPMG, and the asymmetric SDR family that
interpolates between them), reverses them in time, and integrates them
exactly against the elementary kernels needed by the analytic noise models.

All times are in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Pulses closer together than COINCIDENCE_TOL * sensing_time annihilate in
# pairs; a leftover pulse on the boundary t=0 or t=T_s is absorbed into
# initial_sign.  This makes the fully collapsed SDR limit x=0 well defined.
COINCIDENCE_TOL = 1e-15

KERNEL_CONSTANT = "constant"
KERNEL_EXP_FROM_START = "exp_from_start"  # exp(-t/tau)
KERNEL_EXP_FROM_END = "exp_from_end"      # exp(-(T_s - t)/tau)

_KERNELS = (KERNEL_CONSTANT, KERNEL_EXP_FROM_START, KERNEL_EXP_FROM_END)


@dataclass(frozen=True)
class ModulationFunction:
    """Sign waveform f(t) on [0, sensing_time] defined by its flip instants.

    f(t) = initial_sign * (-1)**(number of pulses at instants <= t).  The
    constructor sorts the pulse list, cancels coincident pulses pairwise and
    folds boundary pulses into ``initial_sign``, so stored pulse times are
    strictly increasing and strictly inside (0, sensing_time).
    """

    sensing_time: float
    pulse_times: tuple[float, ...] = ()
    initial_sign: int = 1

    def __post_init__(self):
        t_s = float(self.sensing_time)
        if not math.isfinite(t_s) or t_s <= 0.0:
            raise ValueError(f"sensing_time must be positive, got {self.sensing_time}")
        sign = self.initial_sign
        if sign not in (1, -1):
            raise ValueError(f"initial_sign must be +1 or -1, got {self.initial_sign}")

        tol = COINCIDENCE_TOL * t_s
        times = sorted(float(t) for t in self.pulse_times)
        if times and (times[0] < -tol or times[-1] > t_s + tol):
            raise ValueError("pulse times must lie within [0, sensing_time]")

        # Pairwise cancellation of coincident pulses.
        kept: list[float] = []
        i = 0
        while i < len(times):
            j = i
            while j + 1 < len(times) and times[j + 1] - times[i] <= tol:
                j += 1
            if (j - i + 1) % 2 == 1:
                kept.append(times[i])
            i = j + 1

        # Boundary pulses only flip the overall sign of f.
        inner: list[float] = []
        for t in kept:
            if t <= tol or t_s - t <= tol:
                sign = -sign
            else:
                inner.append(t)

        object.__setattr__(self, "sensing_time", t_s)
        object.__setattr__(self, "pulse_times", tuple(inner))
        object.__setattr__(self, "initial_sign", sign)

    @property
    def n_pulses(self) -> int:
        return len(self.pulse_times)


@dataclass(frozen=True)
class SdrParams:
    """Parameters of the asymmetric SDR sequence.

    ``asymmetry`` x interpolates between a single Hahn echo (x=0) and a CPMG
    train of ``n_pulses`` equidistant pulses (x=(N-1)/N) at fixed total
    duration.
    """

    n_pulses: int
    asymmetry: float
    sensing_time: float

    def __post_init__(self):
        if self.n_pulses < 2:
            raise ValueError(f"SDR needs n_pulses >= 2, got {self.n_pulses}")
        x_max = (self.n_pulses - 1) / self.n_pulses
        if not 0.0 <= self.asymmetry <= x_max:
            raise ValueError(
                f"asymmetry must be in [0, {x_max}], got {self.asymmetry}"
            )
        if self.sensing_time <= 0.0:
            raise ValueError(f"sensing_time must be positive, got {self.sensing_time}")


def make_hahn(sensing_time: float) -> ModulationFunction:
    """Single spin echo: one pulse at the midpoint of the sensing window."""
    if sensing_time <= 0.0:
        raise ValueError(f"sensing_time must be positive, got {sensing_time}")
    return ModulationFunction(sensing_time, (sensing_time / 2.0,))


def make_cpmg(n_pulses: int, sensing_time: float) -> ModulationFunction:
    """CPMG train: n equidistant pulses at (k - 1/2) * T_s / n, k = 1..n."""
    if n_pulses < 1:
        raise ValueError(f"n_pulses must be >= 1, got {n_pulses}")
    if sensing_time <= 0.0:
        raise ValueError(f"sensing_time must be positive, got {sensing_time}")
    step = sensing_time / n_pulses
    return ModulationFunction(
        sensing_time, tuple((k - 0.5) * step for k in range(1, n_pulses + 1))
    )


def make_sdr(params: SdrParams) -> ModulationFunction:
    """Asymmetric echo train: N-1 short echoes followed by one long echo.

    The first part concatenates N-1 spin echoes of duration x*T_s/(N-1)
    (pulses at their centers), the second part is a single echo spanning
    [x*T_s, T_s] with its pulse at (x+1)*T_s/2.  At x=0 the leading pulses
    collapse onto t=0 and cancel into the overall sign, leaving a Hahn echo;
    at x=(N-1)/N the sequence is exactly CPMG with N pulses.
    """
    n = params.n_pulses
    x = params.asymmetry
    t_s = params.sensing_time
    spacing = x * t_s / (n - 1)
    pulses = [(k - 0.5) * spacing for k in range(1, n)]
    pulses.append((x + 1.0) * t_s / 2.0)
    return ModulationFunction(t_s, tuple(pulses))


def time_reverse(m: ModulationFunction) -> ModulationFunction:
    """Return the waveform f_T with f_T(t) = f(T_s - t) pointwise."""
    reflected = tuple(sorted(m.sensing_time - t for t in m.pulse_times))
    sign = m.initial_sign * (-1 if len(m.pulse_times) % 2 else 1)
    return ModulationFunction(m.sensing_time, reflected, sign)


def evaluate(m: ModulationFunction, t):
    """Evaluate f at time(s) t in [0, sensing_time]; returns +/-1 values."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > m.sensing_time):
        raise ValueError("evaluation time outside [0, sensing_time]")
    count = np.searchsorted(np.asarray(m.pulse_times), t_arr, side="right")
    signs = m.initial_sign * np.where(count % 2 == 0, 1, -1)
    if np.isscalar(t) or t_arr.ndim == 0:
        return int(signs)
    return signs


def segments(m: ModulationFunction) -> list[tuple[float, float, int]]:
    """Constant-sign intervals as (start, end, sign) in time order."""
    bounds = [0.0, *m.pulse_times, m.sensing_time]
    out = []
    sign = m.initial_sign
    for a, b in zip(bounds[:-1], bounds[1:]):
        out.append((a, b, sign))
        sign = -sign
    return out


def integrate_against(m: ModulationFunction, kernel: str, tau: float | None = None) -> float:
    """Exact integral of f(t) * kernel(t) over [0, sensing_time].

    Parameters
    ----------
    kernel : one of ``constant``, ``exp_from_start`` (exp(-t/tau)) or
        ``exp_from_end`` (exp(-(T_s - t)/tau)).
    tau : decay time of the exponential kernels, required and positive for
        the exponential choices.

    The result is the closed-form sum over the constant-sign segments, so it
    carries no quadrature error.
    """
    if kernel not in _KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {_KERNELS}")
    if kernel == KERNEL_CONSTANT:
        return math.fsum(s * (b - a) for a, b, s in segments(m))
    if tau is None or tau <= 0.0:
        raise ValueError(f"exponential kernel needs tau > 0, got {tau}")
    t_s = m.sensing_time
    total = []
    for a, b, s in segments(m):
        width = -math.expm1(-(b - a) / tau)  # 1 - exp(-L/tau), no cancellation
        if kernel == KERNEL_EXP_FROM_START:
            total.append(s * tau * math.exp(-a / tau) * width)
        else:
            total.append(s * tau * math.exp(-(t_s - b) / tau) * width)
    return math.fsum(total)


def _expm1c(z: np.ndarray) -> np.ndarray:
    """exp(z) - 1 for complex z, accurate near z = 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    series = z * (1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0)))
    with np.errstate(over="ignore"):
        direct = np.exp(z) - 1.0
    return np.where(small, series, direct)


def fourier_transform(m: ModulationFunction, omega) -> np.ndarray:
    """Spectral weight F(w) = integral of f(t) exp(i w t) dt, exact per segment.

    Accepts scalar or array ``omega`` (rad/s) and vectorizes over it.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.zeros(w.shape, dtype=complex)
    zero = w == 0.0
    nonzero = ~zero
    wn = w[nonzero]
    for a, b, s in segments(m):
        if np.any(zero):
            out[zero] += s * (b - a)
        if wn.size:
            out[nonzero] += s * np.exp(1j * wn * a) * _expm1c(1j * wn * (b - a)) / (1j * wn)
    if np.isscalar(omega) or np.asarray(omega).ndim == 0:
        return complex(out[0])
    return out
