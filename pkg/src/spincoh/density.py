"""Density-matrix primitives and basis-independent coherence/entropy metrics.

The coherence of a state rho is defined from its largest eigenvalue,

    coherence(rho) = N/(N-1) * (lambda_max - 1/N),

which is 0 for the maximally mixed state and 1 for any pure state, and is
invariant under unitary changes of basis.  Entropies are reported in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidStateError

# Structural tolerance for hermiticity / unit trace; spectral tolerance for
# eigenvalue-based identities.  Overridable per call where it matters.
STRUCT_TOL = 1e-12
SPECTRUM_TOL = 1e-10

# Eigenvalues in [-NEG_EIG_LIMIT, 0) are treated as roundoff and clamped to 0
# before entropy; anything more negative is an invalid state.
NEG_EIG_LIMIT = 1e-9

# Capacity cap for tensor products, counted in matrix entries (dim**2).
MAX_PRODUCT_ENTRIES = 2**20


@dataclass
class Spectrum:
    """Real eigenvalues of a density matrix, sorted descending."""

    eigenvalues: np.ndarray
    dim: int

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])


@dataclass
class MetricsReport:
    """Whole-system vs per-subsystem coherence/entropy metrics.

    ``xi_id`` / ``s_id`` are computed from the full matrix, ``xi_re`` /
    ``s_re`` from the reduced subsystem matrices (mean coherence, summed
    entropy).  ``mutual_information = s_re - s_id`` and
    ``mutual_entanglement = xi_id - xi_re`` quantify inter-subsystem
    correlations.
    """

    xi_id: float
    xi_re: float
    s_id: float
    s_re: float
    mutual_information: float
    mutual_entanglement: float

    def as_record(self) -> dict[str, float]:
        return {
            "xi_id": self.xi_id,
            "xi_re": self.xi_re,
            "s_id": self.s_id,
            "s_re": self.s_re,
            "mutual_information": self.mutual_information,
            "mutual_entanglement": self.mutual_entanglement,
        }


def check_density_matrix(rho: np.ndarray, atol: float = STRUCT_TOL) -> np.ndarray:
    """Validate the structural invariants of a density matrix.

    Checks square shape, finiteness, hermiticity and unit trace (both within
    ``atol``).  Positivity is not checked here; eigenvalue-based operations
    enforce it where required.

    Returns the input as a complex ndarray.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if rho.shape[0] == 0:
        raise ValueError("density matrix must have dimension >= 1")
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError("density matrix contains non-finite entries")
    herm_dev = np.max(np.abs(rho - rho.conj().T))
    if herm_dev > atol:
        raise InvalidStateError(f"matrix is not Hermitian (max deviation {herm_dev:.3e})")
    trace_dev = abs(np.trace(rho) - 1.0)
    if trace_dev > atol:
        raise InvalidStateError(f"trace differs from 1 by {trace_dev:.3e}")
    return rho


def eigen_spectrum(rho: np.ndarray, atol: float = STRUCT_TOL) -> Spectrum:
    """Full real spectrum of a density matrix, sorted descending."""
    rho = check_density_matrix(rho, atol=atol)
    eigs = np.linalg.eigvalsh(rho)[::-1]
    return Spectrum(eigenvalues=eigs, dim=rho.shape[0])


def coherence(rho: np.ndarray, atol: float = STRUCT_TOL) -> float:
    """Basis-independent coherence N/(N-1) * (lambda_max - 1/N).

    Results are clamped into [0, 1] only when they overshoot the boundary by
    at most 1e-12 (roundoff); larger excursions indicate an invalid input and
    are returned as-is.
    """
    spectrum = eigen_spectrum(rho, atol=atol)
    if spectrum.dim < 2:
        raise ValueError("coherence is undefined for dimension < 2")
    n = spectrum.dim
    xi = n / (n - 1.0) * (spectrum.lambda_max - 1.0 / n)
    if -1e-12 <= xi < 0.0:
        return 0.0
    if 1.0 < xi <= 1.0 + 1e-12:
        return 1.0
    return xi


def von_neumann_entropy(rho: np.ndarray, atol: float = STRUCT_TOL) -> float:
    """Entropy -sum(lambda_i ln lambda_i) in nats, with 0 ln 0 = 0.

    Eigenvalues in [-1e-9, 0) are clamped to zero before the logarithm;
    anything more negative raises InvalidStateError.
    """
    spectrum = eigen_spectrum(rho, atol=atol)
    eigs = spectrum.eigenvalues
    if np.any(eigs < -NEG_EIG_LIMIT):
        raise InvalidStateError(f"negative eigenvalue {eigs.min():.3e} beyond tolerance")
    eigs = np.where(eigs < 0.0, 0.0, eigs)
    terms = np.where(eigs > 0.0, eigs * np.log(np.where(eigs > 0.0, eigs, 1.0)), 0.0)
    return float(-terms.sum())


def tensor_product(
    a: np.ndarray, b: np.ndarray, max_entries: int = MAX_PRODUCT_ENTRIES
) -> np.ndarray:
    """Kronecker product of two density matrices (uncorrelated joint state)."""
    a = check_density_matrix(a)
    b = check_density_matrix(b)
    entries = (a.shape[0] * b.shape[0]) ** 2
    if entries > max_entries:
        raise CapacityError(
            f"product state would have {entries} entries (cap {max_entries})"
        )
    return np.kron(a, b)


def partial_trace(rho: np.ndarray, subsystem_dims: list[int], keep: int) -> np.ndarray:
    """Reduced density matrix of one subsystem.

    Parameters
    ----------
    rho : full density matrix over the tensor product of subsystems
    subsystem_dims : dimension of each factor, in tensor order; their
        product must equal the dimension of ``rho``
    keep : index of the subsystem to keep; all others are traced out
    """
    rho = check_density_matrix(rho)
    dims = [int(d) for d in subsystem_dims]
    if any(d < 1 for d in dims):
        raise ValueError("subsystem dimensions must be positive")
    n_sub = len(dims)
    if int(np.prod(dims)) != rho.shape[0]:
        raise ValueError(
            f"subsystem dimensions {dims} do not factor dimension {rho.shape[0]}"
        )
    if not 0 <= keep < n_sub:
        raise ValueError(f"keep index {keep} out of range for {n_sub} subsystems")

    tensor = rho.reshape(dims + dims)
    row = list(range(n_sub))
    col = list(range(n_sub))
    col[keep] = n_sub  # kept column axis gets its own label; the rest contract
    return np.einsum(tensor, row + col, [keep, n_sub])


def metrics_report(full: np.ndarray, partition: list[int]) -> MetricsReport:
    """Compute the full/reduced metric pair for a given subsystem partition.

    Every partition cell must have dimension >= 2 (coherence is undefined for
    one-dimensional factors).
    """
    full = check_density_matrix(full)
    if any(int(d) < 2 for d in partition):
        raise ValueError("every partition cell must have dimension >= 2")
    s_id = von_neumann_entropy(full)
    xi_id = coherence(full)
    reduced = [partial_trace(full, partition, i) for i in range(len(partition))]
    s_re = float(sum(von_neumann_entropy(r) for r in reduced))
    xi_re = float(np.mean([coherence(r) for r in reduced]))
    return MetricsReport(
        xi_id=xi_id,
        xi_re=xi_re,
        s_id=s_id,
        s_re=s_re,
        mutual_information=s_re - s_id,
        mutual_entanglement=xi_id - xi_re,
    )
