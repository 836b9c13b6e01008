"""Exact dephasing of a qubit probe coupled to a finite dipolar spin bath.

The environment is a register of n <= 12 spin-1/2 particles.  The probe
couples to the collective field B = sum_i d_i Iz_i (diagonal in the product
z basis) while the bath evolves under the secular dipolar Hamiltonian

    H_E = sum_{i != j} d_ij (2 Iz_i Iz_j - Ix_i Ix_j - Iy_i Iy_j),

which is Hermitian and conserves total Iz.  Everything here is dense linear
algebra: Heisenberg-picture noise operators B(t), nested-anticommutator
correlation functions and their cumulants, the exact two-branch signal of a
pulse-modulated probe, out-of-equilibrium state preparation, scrambling
under H_E, and the spin-counting metric K extracted from the coherence-order
spectrum under collective x rotations.

Because the control waveform is piecewise constant with values +/-1, the
probe signal is an exact product of segment propagators generated by
H_E + B/2 and H_E - B/2; both generators are eigendecomposed once per system
and cached.

Couplings are angular frequencies (rad/s); times are seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sequences import ModulationFunction, fourier_transform, segments

MAX_ENV_SPINS = 12

_HERMITICITY_TOL = 1e-12
_TRACE_TOL = 1e-12
# Tolerated imaginary residue when a trace is real by symmetry.
_REALITY_TOL = 1e-10

NOISE_CLASSES = ("magnetic", "electric")


class SpinBathSystem:
    """Environment operators for a fixed set of couplings.

    Attributes
    ----------
    n_env : number of bath spins (1..12).
    couplings_d : probe-bath couplings d_i, shape (n_env,).
    dipolar_d : symmetric intra-bath coupling matrix d_ij with zero diagonal.
    noise_class : "magnetic" (field flips under time reversal) or "electric".
    b_diag : diagonal of the noise operator B in the product z basis.
    h_env : dense bath Hamiltonian H_E.
    """

    def __init__(self, couplings_d, dipolar_d, noise_class: str = "magnetic"):
        d = np.asarray(couplings_d, dtype=float)
        if d.ndim != 1 or d.size < 1:
            raise ValueError("couplings_d must be a non-empty 1-D array")
        n = d.size
        if n > MAX_ENV_SPINS:
            raise ValueError(f"bath of {n} spins exceeds the cap of {MAX_ENV_SPINS}")
        dd = np.asarray(dipolar_d, dtype=float)
        if dd.shape != (n, n):
            raise ValueError(f"dipolar_d must have shape ({n}, {n}), got {dd.shape}")
        if not np.array_equal(dd, dd.T):
            raise ValueError("dipolar_d must be symmetric")
        if np.any(np.diag(dd) != 0.0):
            raise ValueError("dipolar_d must have a zero diagonal")
        if noise_class not in NOISE_CLASSES:
            raise ValueError(f"noise_class must be one of {NOISE_CLASSES}")

        self.n_env = n
        self.dim = 2**n
        self.couplings_d = d.copy()
        self.couplings_d.flags.writeable = False
        self.dipolar_d = dd.copy()
        self.dipolar_d.flags.writeable = False
        self.noise_class = noise_class

        states = np.arange(self.dim)
        # spin i sits on bit (n-1-i); bit 0 means up (z = +1/2)
        zbits = np.empty((n, self.dim))
        for i in range(n):
            zbits[i] = 0.5 - ((states >> (n - 1 - i)) & 1)
        self._zbits = zbits

        self.b_diag = zbits.T @ d
        self.b_diag.flags.writeable = False

        h = np.zeros((self.dim, self.dim))
        diag = np.zeros(self.dim)
        for i in range(n):
            for j in range(i + 1, n):
                dij = dd[i, j]
                if dij == 0.0:
                    continue
                diag += 4.0 * dij * zbits[i] * zbits[j]
                opposite = zbits[i] * zbits[j] < 0.0
                partner = states ^ ((1 << (n - 1 - i)) | (1 << (n - 1 - j)))
                h[partner[opposite], states[opposite]] += -dij
        h[states, states] += diag
        self.h_env = h
        self.h_env.flags.writeable = False

        self._env_eig_cache = None
        self._branch_eig_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._ix_cache = None
        self._ix_eig_cache = None
        self._b_env_basis = None

    def _env_eig(self):
        if self._env_eig_cache is None:
            self._env_eig_cache = np.linalg.eigh(self.h_env)
        return self._env_eig_cache

    def _branch_eig(self, sign: int):
        if sign not in self._branch_eig_cache:
            gen = self.h_env + (0.5 * sign) * np.diag(self.b_diag)
            self._branch_eig_cache[sign] = np.linalg.eigh(gen)
        return self._branch_eig_cache[sign]

    def _ix_total(self) -> np.ndarray:
        if self._ix_cache is None:
            states = np.arange(self.dim)
            ix = np.zeros((self.dim, self.dim))
            for i in range(self.n_env):
                ix[states ^ (1 << (self.n_env - 1 - i)), states] += 0.5
            ix.flags.writeable = False
            self._ix_cache = ix
        return self._ix_cache

    def _ix_eig(self):
        if self._ix_eig_cache is None:
            self._ix_eig_cache = np.linalg.eigh(self._ix_total())
        return self._ix_eig_cache

    def _b_in_env_basis(self) -> np.ndarray:
        if self._b_env_basis is None:
            _, v = self._env_eig()
            self._b_env_basis = v.T @ (self.b_diag[:, None] * v)
        return self._b_env_basis


def build_system(couplings_d, dipolar_d, noise_class: str = "magnetic") -> SpinBathSystem:
    """Assemble the dense bath operators for explicit coupling tables."""
    return SpinBathSystem(couplings_d, dipolar_d, noise_class)


def sphere_bath(
    n_env: int,
    seed: int,
    coupling_scale: float,
    min_separation: float = 0.5,
) -> SpinBathSystem:
    """Reproducible synthetic bath: spins at random points of the unit sphere.

    The probe sits at the origin.  Couplings follow the secular dipolar form
    scale * (1 - 3 cos^2 theta) / r^3 both for probe-spin (r = 1) and
    spin-spin vectors; position sets with any pair closer than
    ``min_separation`` are redrawn so no coupling diverges.  Fixed ``seed``
    gives bit-identical couplings.
    """
    if n_env < 1 or n_env > MAX_ENV_SPINS:
        raise ValueError(f"n_env must be in 1..{MAX_ENV_SPINS}, got {n_env}")
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        raw = rng.standard_normal((n_env, 3))
        pos = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        if n_env == 1:
            break
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.linalg.norm(delta, axis=2)
        if np.min(dist[np.triu_indices(n_env, k=1)]) >= min_separation:
            break
    else:
        raise RuntimeError(
            f"could not place {n_env} spins with min_separation={min_separation}"
        )
    d_i = coupling_scale * (1.0 - 3.0 * pos[:, 2] ** 2)
    d_ij = np.zeros((n_env, n_env))
    for i in range(n_env):
        for j in range(i + 1, n_env):
            r = pos[i] - pos[j]
            rn = np.linalg.norm(r)
            cos_t = r[2] / rn
            d_ij[i, j] = d_ij[j, i] = coupling_scale * (1.0 - 3.0 * cos_t**2) / rn**3
    return SpinBathSystem(d_i, d_ij, "magnetic")


@dataclass(frozen=True)
class EnvState:
    """Unit-trace Hermitian environment operator (not necessarily positive)."""

    rho: np.ndarray

    def __post_init__(self):
        r = np.array(self.rho, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError(f"state must be a square matrix, got shape {r.shape}")
        scale = max(1.0, float(np.max(np.abs(r))))
        if np.max(np.abs(r - r.conj().T)) > _HERMITICITY_TOL * scale:
            raise ValueError("state is not Hermitian")
        if abs(np.trace(r).real - 1.0) > _TRACE_TOL or abs(np.trace(r).imag) > _TRACE_TOL:
            raise ValueError("state must have unit trace")
        r.flags.writeable = False
        object.__setattr__(self, "rho", r)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]


def maximally_mixed(n_env: int) -> EnvState:
    dim = 2**n_env
    return EnvState(np.eye(dim, dtype=complex) / dim)


def heisenberg_b(sys: SpinBathSystem, t: float) -> np.ndarray:
    """Noise operator at time t: exp(i H_E t) B exp(-i H_E t)."""
    w, v = sys._env_eig()
    phases = np.exp(1j * w * t)
    core = sys._b_in_env_basis() * np.outer(phases, phases.conj())
    return v @ core @ v.conj().T


def _real_trace(x: np.ndarray, r: np.ndarray) -> float:
    val = complex(np.einsum("ab,ba->", x, r))
    tol = _REALITY_TOL * max(1.0, abs(val))
    if abs(val.imag) > tol:
        raise ArithmeticError(f"expected a real trace, got {val}")
    return val.real


def correlation_g(sys: SpinBathSystem, rho: EnvState, times) -> float:
    """Symmetrized n-point correlation of the noise operator in state rho.

    Computes 2**-(n-1) <{B(t1), {B(t2), ... {B(t_{n-1}), B(t_n)}...}} rho>
    with the arguments sorted ascending (the value is permutation
    symmetric).  Times may be negative.
    """
    ts = sorted(float(t) for t in times)
    if not ts:
        raise ValueError("need at least one time")
    ops = [heisenberg_b(sys, t) for t in ts]
    x = ops[-1]
    for b in reversed(ops[:-1]):
        x = b @ x + x @ b
    return _real_trace(x, rho.rho) / 2.0 ** (len(ts) - 1)


@dataclass
class CumulantSet:
    """Correlation values on every non-empty subset of a time tuple.

    ``g`` maps a frozenset of time indices to the correlation evaluated on
    those times; ``w`` holds the matching cumulants once computed.
    """

    times: tuple[float, ...]
    g: dict[frozenset, float]
    w: dict[frozenset, float] | None = None

    @property
    def order(self) -> int:
        return len(self.times)

    def g_full(self) -> float:
        return self.g[frozenset(range(self.order))]

    def w_full(self) -> float:
        if self.w is None:
            raise ValueError("cumulants not computed yet")
        return self.w[frozenset(range(self.order))]


def correlation_set(sys: SpinBathSystem, rho: EnvState, times) -> CumulantSet:
    """Evaluate the correlation on all non-empty subsets of ``times``."""
    ts = tuple(float(t) for t in times)
    n = len(ts)
    if n == 0:
        raise ValueError("need at least one time")
    ops = {i: heisenberg_b(sys, t) for i, t in enumerate(ts)}
    g: dict[frozenset, float] = {}
    for mask in range(1, 2**n):
        idx = [i for i in range(n) if mask >> i & 1]
        order = sorted(idx, key=lambda i: ts[i])
        x = ops[order[-1]]
        for i in reversed(order[:-1]):
            x = ops[i] @ x + x @ ops[i]
        g[frozenset(idx)] = _real_trace(x, rho.rho) / 2.0 ** (len(idx) - 1)
    return CumulantSet(times=ts, g=g)


def _set_partitions(items: list):
    """Yield all partitions of ``items`` as lists of blocks."""
    if len(items) == 1:
        yield [items]
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def cumulants_from_correlations(cs: CumulantSet, max_order: int = 6) -> CumulantSet:
    """Cumulants from correlations by subtracting all proper partitions.

    For each index subset S, W(S) = G(S) minus the sum over partitions of S
    into two or more blocks of the product of the lower-order cumulants of
    the blocks.  Requires ``cs.g`` to contain every non-empty subset of the
    time tuple; orders above ``max_order`` are refused.
    """
    n = cs.order
    if n > max_order:
        raise ValueError(f"cumulant order {n} exceeds the supported cap {max_order}")
    w: dict[frozenset, float] = {}
    for mask in range(1, 2**n):
        idx = sorted(i for i in range(n) if mask >> i & 1)
        key = frozenset(idx)
        if key not in cs.g:
            raise ValueError(f"missing correlation value for time subset {tuple(idx)}")
        val = cs.g[key]
        if len(idx) > 1:
            for part in _set_partitions(idx):
                if len(part) < 2:
                    continue
                prod = 1.0
                for block in part:
                    prod *= w[frozenset(block)]
                val -= prod
        w[key] = val
    return CumulantSet(times=cs.times, g=dict(cs.g), w=w)


def signal_exact(m: ModulationFunction, sys: SpinBathSystem, rho: EnvState) -> complex:
    """Probe coherence after the modulated evolution, by two-branch propagation.

    For the piecewise-constant waveform the evolution factorizes over the
    probe's z eigenstates: each constant-sign segment contributes
    exp(-i (H_E +/- B/2) dt) on the up/down branch, and the signal is
    Tr[U_up rho U_down^dagger].  This is exact; no time-ordering or Trotter
    error is introduced.
    """
    if rho.dim != sys.dim:
        raise ValueError(f"state dimension {rho.dim} does not match bath {sys.dim}")
    up = np.eye(sys.dim, dtype=complex)
    dn = np.eye(sys.dim, dtype=complex)
    for a, b, s in segments(m):
        dt = b - a
        w_u, v_u = sys._branch_eig(s)
        up = (v_u * np.exp(-1j * w_u * dt)) @ (v_u.conj().T @ up)
        w_d, v_d = sys._branch_eig(-s)
        dn = (v_d * np.exp(-1j * w_d * dt)) @ (v_d.conj().T @ dn)
    return complex(np.vdot(dn, up @ rho.rho))


def decoherence_second_order(m: ModulationFunction, sys: SpinBathSystem, rho: EnvState) -> complex:
    """Decoherence exponent truncated at the two-point cumulant, exactly.

    Evaluates -i * integral f W1 + 1/2 * double-integral f f W2 using the
    spectral decomposition of H_E and the closed-form spectral weight of the
    sequence, so the only error relative to the full signal is the genuine
    truncation of higher cumulants.
    """
    w, v = sys._env_eig()
    btil = sys._b_in_env_basis().astype(complex)
    rtil = v.conj().T @ rho.rho @ v
    omega = w[:, None] - w[None, :]
    f = fourier_transform(m, omega.ravel()).reshape(omega.shape)
    x = btil * f
    mean_term = complex(np.sum(x * rtil.T))
    pair_term = complex(np.trace(x @ x @ rtil))
    # subtract the disconnected part of the two-point function
    w1_sq = mean_term * mean_term
    return -1j * mean_term + 0.5 * (pair_term - w1_sq)


def time_reversal_conjugate(rho: EnvState) -> EnvState:
    """Conjugate the state by the antiunitary spin-flip (all spins, then
    complex conjugation).  Involutive."""
    r = rho.rho
    dim = r.shape[0]
    pops = np.array([bin(i).count("1") for i in range(dim)])
    sgn = np.where(pops % 2 == 0, 1.0, -1.0)
    out = np.outer(sgn, sgn) * np.conj(r[::-1, ::-1])
    return EnvState(out)


def prepare_quenched_state(sys: SpinBathSystem, t_p: float) -> EnvState:
    """Diagonal out-of-equilibrium state cos(B t_p) / Tr cos(B t_p).

    Models an ideal preparation in which the bath Hamiltonian is refocused
    while the probe imprints its coupling for a duration t_p, followed by a
    projective filtering of the probe.  t_p = 0 gives the maximally mixed
    state.  Raises if the normalizing trace is degenerate.
    """
    c = np.cos(sys.b_diag * t_p)
    tr = float(np.sum(c))
    if abs(tr) <= 1e-9 * sys.dim:
        raise ValueError(
            f"degenerate polarization: |Tr cos(B t_p)| = {abs(tr):.3e} at t_p = {t_p}"
        )
    return EnvState(np.diag((c / tr).astype(complex)))


def scramble(sys: SpinBathSystem, rho: EnvState, t_e: float) -> EnvState:
    """Evolve the state under the bath Hamiltonian for a time t_e."""
    if t_e < 0.0:
        raise ValueError(f"scrambling time must be non-negative, got {t_e}")
    if t_e == 0.0:
        return rho
    w, v = sys._env_eig()
    u = (v * np.exp(-1j * w * t_e)) @ v.conj().T
    out = u @ rho.rho @ u.conj().T
    return EnvState((out + out.conj().T) / 2.0)


@dataclass(frozen=True)
class OtocResult:
    """Coherence-order spectrum (normalized to unit sum) and its second moment."""

    mqc_spectrum: dict[int, float]
    k_value: float


def otoc_k(sys: SpinBathSystem, t_p: float, phi_points: int | None = None) -> OtocResult:
    """Correlated-spin count K from the coherence-order spectrum.

    Builds the probe-bath state correlated for a time t_p, measures the
    rotation echo S(phi) = <rho exp(i phi Ix) rho exp(-i phi Ix)> on a
    uniform phi grid, Fourier-transforms it into intensities I_M per
    coherence order M, and returns K = sum M^2 I_M / sum I_M.  The grid must
    resolve every order, which needs at least 2 n_env + 2 points.
    """
    n = sys.n_env
    if phi_points is None:
        phi_points = 2 * n + 2
    if phi_points < 2 * n + 2:
        raise ValueError(
            f"phi_points must be at least {2 * n + 2} for {n} spins, got {phi_points}"
        )
    c = np.cos(sys.b_diag * t_p) / sys.dim
    s = np.sin(sys.b_diag * t_p) / sys.dim
    wx, vx = sys._ix_eig()
    cx = vx.conj().T @ (c[:, None] * vx)
    sx = vx.conj().T @ (s[:, None] * vx)
    q = cx * cx.T + sx * sx.T
    diffs = wx[None, :] - wx[:, None]

    phis = 2.0 * np.pi * np.arange(phi_points) / phi_points
    signal = np.empty(phi_points, dtype=complex)
    for j, phi in enumerate(phis):
        signal[j] = 0.5 * np.sum(q * np.exp(1j * phi * diffs))
    if np.max(np.abs(signal.imag)) > _REALITY_TOL * max(1.0, np.max(np.abs(signal))):
        raise ArithmeticError("rotation echo acquired a non-real component")

    orders = np.arange(-n, n + 1)
    intensities = np.empty(orders.size)
    for k, m_order in enumerate(orders):
        val = np.mean(signal * np.exp(-1j * phis * m_order))
        intensities[k] = val.real
    floor = -1e-12 * max(1.0, float(intensities.max()))
    if intensities.min() < floor:
        raise ArithmeticError("negative coherence-order intensity")
    intensities = np.clip(intensities, 0.0, None)
    total = float(intensities.sum())
    spectrum = {int(m_order): float(i / total) for m_order, i in zip(orders, intensities)}
    k_value = float(np.sum(orders**2 * intensities) / total)
    return OtocResult(mqc_spectrum=spectrum, k_value=k_value)


def otoc_k_commutator(sys: SpinBathSystem, t_p: float) -> float:
    """Independent route to K: squared norm of [rho, Ix] over the purity.

    Uses the same correlated state as ``otoc_k`` but never touches the phase
    grid or the Fourier transform, so it cross-validates the spectrum route.
    """
    c = np.cos(sys.b_diag * t_p) / sys.dim
    s = np.sin(sys.b_diag * t_p) / sys.dim
    ix = sys._ix_total()
    comm_c = (c[:, None] - c[None, :]) * ix
    comm_s = (s[:, None] - s[None, :]) * ix
    num = float(np.sum(np.abs(comm_c) ** 2) + np.sum(np.abs(comm_s) ** 2))
    den = float(np.sum(c**2) + np.sum(s**2))
    return num / den
