"""Closed register of spin-1/2 particles at fixed random positions.

Particles sit at fixed points in a D-dimensional box and interact through
their z-components with pairwise strength g_ij = eta / r_ij**epsilon.  The
Hamiltonian is diagonal in the sigma_z product basis, so single-particle
reduced states have an exact closed form: the populations never move and the
off-diagonal element is a product of N-1 phase factors (pure dephasing).

All functions are pure in (params, seed, t); nothing here keeps global state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DegenerateGeometryError

# Points closer than R_MIN_FACTOR * box_side to an existing point are
# redrawn (couplings would diverge), up to RESAMPLE_CAP retries per point.
R_MIN_FACTOR = 1e-6
RESAMPLE_CAP = 100

# Largest register for the full 2**N state-vector reference evolution.
ORACLE_CAP = 14

# Interaction strengths for SI-unit evaluations of the empirical laws:
# electromagnetic coupling between elementary charges (epsilon = 1) and the
# Li-6 spin-spin coupling (epsilon = 3).
ELEMENTARY_CHARGE = 1.602176634e-19  # C
ETA_ELECTROMAGNETIC = 8.22e43 * ELEMENTARY_CHARGE**2  # Hz m
ETA_LI6_SPIN = 3.27e-26  # Hz m^3

_AMP_TOL = 1e-12


def _full_superposition_amplitudes(n: int) -> np.ndarray:
    amps = np.full((n, 2), np.sqrt(0.5), dtype=complex)
    return amps


@dataclass
class ModelParams:
    """Static parameters of one spin register.

    ``amplitudes`` holds one (a_k, b_k) pair per particle for the initial
    product state; rows must be normalised.  ``None`` selects the full
    superposition a_k = b_k = 1/sqrt(2) for every particle.
    """

    n_particles: int
    dimension: int
    epsilon: float
    eta: float = 1.0
    density: float = 1.0
    amplitudes: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.n_particles < 2:
            raise ValueError("dynamics needs at least 2 particles")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not (self.epsilon > 0 and self.eta > 0 and self.density > 0):
            raise ValueError("epsilon, eta and density must be positive")
        if self.amplitudes is None:
            self.amplitudes = _full_superposition_amplitudes(self.n_particles)
        else:
            self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
            if self.amplitudes.shape != (self.n_particles, 2):
                raise ValueError(
                    f"amplitudes must have shape ({self.n_particles}, 2)"
                )
            norms = np.abs(self.amplitudes[:, 0]) ** 2 + np.abs(self.amplitudes[:, 1]) ** 2
            if np.max(np.abs(norms - 1.0)) > _AMP_TOL:
                raise ValueError("amplitude pairs must satisfy |a|^2 + |b|^2 = 1")

    @property
    def box_side(self) -> float:
        return (self.n_particles / self.density) ** (1.0 / self.dimension)

    @classmethod
    def full_superposition(
        cls,
        n_particles: int,
        dimension: int,
        epsilon: float,
        eta: float = 1.0,
        density: float = 1.0,
    ) -> "ModelParams":
        return cls(n_particles, dimension, epsilon, eta=eta, density=density)


@dataclass
class SpinEnsemble:
    """One sampled realization: positions, couplings and the seed that made it."""

    params: ModelParams
    positions: np.ndarray  # (N, D), metres
    couplings: np.ndarray  # (N, N) symmetric, zero diagonal, rad/s
    seed: int

    @property
    def n_particles(self) -> int:
        return self.params.n_particles

    @property
    def box_side(self) -> float:
        return self.params.box_side

    def time_unit(self, convention: str = "text") -> float:
        """Conversion factor u with T = u * t between real and simulation time.

        ``text`` uses u = eta * density**(epsilon/D); ``figure`` uses the
        alternative u = eta * (2*density)**(epsilon/D) that appears alongside
        some fitted constants.
        """
        p = self.params
        if convention == "text":
            return p.eta * p.density ** (p.epsilon / p.dimension)
        if convention == "figure":
            return p.eta * (2.0 * p.density) ** (p.epsilon / p.dimension)
        raise ValueError(f"unknown time-unit convention {convention!r}")


@dataclass
class CoherenceTrace:
    """Mean single-particle coherence sampled on a time grid (simulation units)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if self.times.size == 0:
            raise ValueError("trace must contain at least one sample")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if self.values.min() < -1e-9 or self.values.max() > 1.0 + 1e-9:
            raise ValueError("coherence values must lie in [0, 1]")
        np.clip(self.values, 0.0, 1.0, out=self.values)

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass
class SingleParticleState:
    """Reduced 2x2 state of one particle at one instant."""

    z: complex
    rho: np.ndarray
    eigenvalues: np.ndarray  # descending pair


def sample_ensemble(params: ModelParams, seed: int) -> SpinEnsemble:
    """Place particles uniformly in the box and build the coupling matrix.

    The draw is a deterministic function of ``seed``: positions come from a
    PCG64 stream as box_side * unit_draw, so ensembles with the same seed but
    different density are exact geometric rescalings of each other whenever
    the box sides differ by a power of two.
    """
    n, d = params.n_particles, params.dimension
    side = params.box_side
    r_min = R_MIN_FACTOR * side
    rng = np.random.default_rng(seed)

    positions = np.empty((n, d))
    for i in range(n):
        for _ in range(RESAMPLE_CAP + 1):
            candidate = side * rng.random(d)
            if i == 0:
                positions[0] = candidate
                break
            dist = np.sqrt(((positions[:i] - candidate) ** 2).sum(axis=1))
            if dist.min() >= r_min:
                positions[i] = candidate
                break
        else:
            raise DegenerateGeometryError(
                f"could not place particle {i} after {RESAMPLE_CAP} retries"
            )

    diff = positions[:, None, :] - positions[None, :, :]
    r = np.sqrt((diff**2).sum(axis=-1))
    np.fill_diagonal(r, 1.0)
    couplings = params.eta / r**params.epsilon
    np.fill_diagonal(couplings, 0.0)
    return SpinEnsemble(params=params, positions=positions, couplings=couplings, seed=seed)


def _check_particle(ensemble: SpinEnsemble, particle: int) -> None:
    if not 0 <= particle < ensemble.n_particles:
        raise ValueError(
            f"particle index {particle} out of range for N={ensemble.n_particles}"
        )


def offdiag_correlation(ensemble: SpinEnsemble, particle: int, t: float) -> complex:
    """Off-diagonal element z of the reduced state of one particle at real time t.

    z = a conj(b) * prod over other particles of
        (|a_k|^2 exp(-2i g t) + |b_k|^2 exp(+2i g t));
    for full superpositions this reduces to 0.5 * prod(cos(2 g t)).
    """
    _check_particle(ensemble, particle)
    amps = ensemble.params.amplitudes
    pa = np.abs(amps[:, 0]) ** 2
    pb = np.abs(amps[:, 1]) ** 2
    phase = 2.0 * ensemble.couplings[particle] * t
    factors = pa * np.exp(-1j * phase) + pb * np.exp(1j * phase)
    factors[particle] = 1.0
    return complex(amps[particle, 0] * np.conj(amps[particle, 1]) * np.prod(factors))


def reduced_density(ensemble: SpinEnsemble, particle: int, t: float) -> SingleParticleState:
    """Exact reduced 2x2 density matrix of one particle at real time t."""
    z = offdiag_correlation(ensemble, particle, t)
    a, b = ensemble.params.amplitudes[particle]
    pa, pb = abs(a) ** 2, abs(b) ** 2
    rho = np.array([[pa, z], [np.conj(z), pb]], dtype=complex)
    radicand = 1.0 - 4.0 * (pa * pb - abs(z) ** 2)
    root = np.sqrt(max(radicand, 0.0))
    eigs = np.array([0.5 * (1.0 + root), 0.5 * (1.0 - root)])
    return SingleParticleState(z=z, rho=rho, eigenvalues=eigs)


def spin_basis_transform(theta: float, phi: float) -> np.ndarray:
    """Unitary mapping the sigma_z basis to the (theta, phi) spin basis."""
    return np.array(
        [
            [np.cos(theta), np.exp(-1j * phi) * np.sin(theta)],
            [np.exp(1j * phi) * np.sin(theta), -np.cos(theta)],
        ],
        dtype=complex,
    )


def reduced_density_rotated(
    ensemble: SpinEnsemble, particle: int, t: float, theta: float, phi: float
) -> np.ndarray:
    """Reduced state of one particle expressed in an arbitrary spin basis.

    Returns U rho U^dagger with the (theta, phi) basis transform; the spectrum
    is independent of the chosen basis.
    """
    state = reduced_density(ensemble, particle, t)
    u = spin_basis_transform(theta, phi)
    return u @ state.rho @ u.conj().T


def simulate_coherence(
    ensemble: SpinEnsemble, times: np.ndarray, convention: str = "text"
) -> CoherenceTrace:
    """Mean single-particle coherence on a grid of simulation-time points.

    Each particle contributes sqrt(1 - 4(|a|^2 |b|^2 - |z(t)|^2)), i.e. the
    coherence of its reduced 2x2 state; for full superpositions this is the
    absolute value of the cosine product.  ``times`` are simulation-time
    values T = u * t with u = ensemble.time_unit(convention).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("time grid must be a non-empty 1-D array")
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("time grid must be strictly increasing")
    if times[0] < 0.0:
        raise ValueError("time grid must be nonnegative")

    t_real = times / ensemble.time_unit(convention)
    g = ensemble.couplings
    n = ensemble.n_particles
    amps = ensemble.params.amplitudes
    pa = np.abs(amps[:, 0]) ** 2
    pb = np.abs(amps[:, 1]) ** 2
    ab = np.abs(amps[:, 0] * np.conj(amps[:, 1]))
    full_sup = np.max(np.abs(pa - 0.5)) <= 1e-12

    diag = np.arange(n)
    chunk = max(1, 2_000_000 // (n * n))
    values = np.empty(times.size)
    for start in range(0, times.size, chunk):
        tb = t_real[start : start + chunk]
        phases = 2.0 * tb[:, None, None] * g[None, :, :]
        if full_sup:
            # |a_k|^2 = |b_k|^2 = 1/2: every factor is a real cosine
            factors = np.cos(phases)
            factors[:, diag, diag] = 1.0
            abs_prod = np.abs(np.prod(factors, axis=2))
        else:
            factors = pa[None, None, :] * np.exp(-1j * phases)
            factors += pb[None, None, :] * np.exp(1j * phases)
            factors[:, diag, diag] = 1.0
            abs_prod = np.abs(np.prod(factors, axis=2))
        abs_z = ab[None, :] * abs_prod
        radicand = 1.0 - 4.0 * ((pa * pb)[None, :] - abs_z**2)
        per_particle = np.sqrt(np.clip(radicand, 0.0, None))
        values[start : start + chunk] = per_particle.mean(axis=1)

    np.clip(values, 0.0, 1.0, out=values)
    return CoherenceTrace(times=times.copy(), values=values)


def brute_force_reduced_density(
    ensemble: SpinEnsemble, particle: int, t: float, cap: int = ORACLE_CAP
) -> np.ndarray:
    """Reference reduced state from the full 2**N state vector.

    The Hamiltonian is diagonal in the sigma_z product basis, so each basis
    state s only picks up the phase exp(-i t sum_{j<i} g_ij s_j s_i).  The
    reduced matrix is then an explicit contraction over all other particles.
    Independent of the closed form in ``reduced_density``; used as an oracle.
    """
    _check_particle(ensemble, particle)
    n = ensemble.n_particles
    if n > cap:
        raise CapacityError(f"brute force needs 2**{n} amplitudes (cap N <= {cap})")

    dim = 2**n
    idx = np.arange(dim)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1  # axis k = particle k
    signs = 1.0 - 2.0 * bits
    phase = 0.5 * np.einsum("si,ij,sj->s", signs, ensemble.couplings, signs)
    amps = ensemble.params.amplitudes
    psi0 = np.prod(amps[np.arange(n)[None, :], bits], axis=1)
    psi = psi0 * np.exp(-1j * phase * t)

    left = 2**particle
    right = 2 ** (n - particle - 1)
    psi3 = psi.reshape(left, 2, right)
    return np.einsum("uav,ubv->ab", psi3, psi3.conj())


def default_time_grid(
    t_ref: float = 1.0,
    n_log: int = 512,
    n_linear: int = 512,
    log_lo: float = 1e-3,
    log_hi: float = 20.0,
    linear_hi: float = 5.0,
) -> np.ndarray:
    """Default sampling grid: log-spaced points to resolve the decay shoulder
    plus a linear sweep for the early fall-off, merged and deduplicated."""
    log_part = np.geomspace(log_lo * t_ref, log_hi * t_ref, n_log)
    lin_part = np.linspace(0.0, linear_hi * t_ref, n_linear)
    return np.unique(np.concatenate([lin_part, log_part]))
