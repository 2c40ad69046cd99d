import itertools

import numpy as np
import pytest

from spincoh import (
    CapacityError,
    InvalidStateError,
    coherence,
    eigen_spectrum,
    metrics_report,
    partial_trace,
    tensor_product,
    von_neumann_entropy,
)

RHO_HALF = np.array([[0.5, 0.25], [0.25, 0.5]], dtype=complex)
# -(3/4 ln 3/4 + 1/4 ln 1/4)
S_HALF = 0.5623351446188083


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def pure_state_density(vec):
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return np.outer(vec, vec.conj())


class TestSpectrum:
    def test_maximally_mixed_2x2(self):
        spectrum = eigen_spectrum(np.eye(2) / 2)
        assert np.allclose(spectrum.eigenvalues, [0.5, 0.5], atol=1e-14)

    def test_half_matrix_eigenvalues(self):
        spectrum = eigen_spectrum(RHO_HALF)
        assert np.allclose(spectrum.eigenvalues, [0.75, 0.25], atol=1e-12)

    def test_joint_spectrum(self):
        joint = tensor_product(RHO_HALF, RHO_HALF)
        spectrum = eigen_spectrum(joint)
        assert np.allclose(
            spectrum.eigenvalues, [9 / 16, 3 / 16, 3 / 16, 1 / 16], atol=1e-12
        )

    def test_spectrum_sums_to_one(self):
        rng = np.random.default_rng(1)
        for dim in (2, 3, 5, 8):
            spectrum = eigen_spectrum(random_density(rng, dim))
            assert abs(spectrum.eigenvalues.sum() - 1.0) < 1e-10
            assert spectrum.eigenvalues[0] >= 1.0 / dim - 1e-12

    def test_descending_order(self):
        rng = np.random.default_rng(2)
        eigs = eigen_spectrum(random_density(rng, 6)).eigenvalues
        assert np.all(np.diff(eigs) <= 0)

    def test_rejects_non_hermitian(self):
        bad = np.array([[0.5, 0.3], [0.1, 0.5]])
        with pytest.raises(InvalidStateError):
            eigen_spectrum(bad)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            eigen_spectrum(np.zeros((0, 0)))


class TestCoherence:
    def test_half_matrix(self):
        assert coherence(RHO_HALF) == pytest.approx(0.5, abs=1e-12)

    def test_maximally_mixed_is_zero(self):
        for dim in (2, 3, 7):
            assert coherence(np.eye(dim) / dim) == pytest.approx(0.0, abs=1e-12)

    def test_pure_state_is_one(self):
        rng = np.random.default_rng(3)
        for dim in (2, 4, 9):
            vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            assert coherence(pure_state_density(vec)) == pytest.approx(1.0, abs=1e-10)

    def test_joint_state(self):
        joint = tensor_product(RHO_HALF, RHO_HALF)
        assert coherence(joint) == pytest.approx(5 / 12, abs=1e-12)

    def test_dim_one_rejected(self):
        with pytest.raises(ValueError):
            coherence(np.array([[1.0]]))

    def test_range(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            xi = coherence(random_density(rng, int(rng.integers(2, 9))))
            assert 0.0 <= xi <= 1.0

    def test_product_coherence_law(self):
        # K uncorrelated two-level systems with top eigenvalue p combine to
        # (2^K/(2^K-1)) (p^K - 2^-K)
        rng = np.random.default_rng(5)
        for k in (2, 3):
            p = rng.uniform(0.5, 1.0)
            single = np.diag([p, 1 - p]).astype(complex)
            u = random_unitary(rng, 2)
            single = u @ single @ u.conj().T
            joint = single
            for _ in range(k - 1):
                joint = tensor_product(joint, single)
            m = 2**k
            expected = m / (m - 1) * (p**k - 1.0 / m)
            assert coherence(joint) == pytest.approx(expected, abs=1e-10)

    def test_two_level_example_from_product_law(self):
        # K=2, p=3/4 reproduces the joint value 5/12
        assert 4 / 3 * ((3 / 4) ** 2 - 1 / 4) == pytest.approx(5 / 12, abs=1e-15)


class TestEntropy:
    def test_pure_state_zero(self):
        assert von_neumann_entropy(pure_state_density([1, 1j, 0])) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_half_matrix(self):
        assert von_neumann_entropy(RHO_HALF) == pytest.approx(S_HALF, abs=1e-12)
        assert von_neumann_entropy(RHO_HALF) == pytest.approx(0.5623, abs=1e-3)

    def test_joint(self):
        joint = tensor_product(RHO_HALF, RHO_HALF)
        assert von_neumann_entropy(joint) == pytest.approx(2 * S_HALF, abs=1e-12)
        assert von_neumann_entropy(joint) == pytest.approx(1.1246, abs=1e-3)

    def test_nonnegative(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            s = von_neumann_entropy(random_density(rng, int(rng.integers(2, 7))))
            assert s >= -1e-12

    def test_rejects_strongly_negative_eigenvalue(self):
        bad = np.diag([1.1, -0.1]).astype(complex)
        with pytest.raises(InvalidStateError):
            von_neumann_entropy(bad)

    def test_clamps_roundoff_negatives(self):
        rho = np.diag([1.0 + 5e-10, -5e-10]).astype(complex)
        assert von_neumann_entropy(rho) == pytest.approx(0.0, abs=1e-8)


class TestUnitaryInvariance:
    def test_coherence_and_entropy_invariant(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            dim = int(rng.integers(2, 10))
            rho = random_density(rng, dim)
            u = random_unitary(rng, dim)
            rotated = u @ rho @ u.conj().T
            assert abs(coherence(rotated) - coherence(rho)) < 1e-10
            assert abs(von_neumann_entropy(rotated) - von_neumann_entropy(rho)) < 1e-10


class TestTensorProduct:
    def test_scalar_identity(self):
        assert np.allclose(tensor_product(RHO_HALF, np.array([[1.0]])), RHO_HALF)

    def test_dimensions_and_trace(self):
        rng = np.random.default_rng(8)
        a = random_density(rng, 3)
        b = random_density(rng, 4)
        joint = tensor_product(a, b)
        assert joint.shape == (12, 12)
        assert abs(np.trace(joint) - 1.0) < 1e-12

    def test_spectrum_is_product_of_spectra(self):
        rng = np.random.default_rng(9)
        a = random_density(rng, 3)
        b = random_density(rng, 2)
        joint_eigs = eigen_spectrum(tensor_product(a, b)).eigenvalues
        ea = np.linalg.eigvalsh(a)
        eb = np.linalg.eigvalsh(b)
        expected = np.sort(np.outer(ea, eb).ravel())[::-1]
        assert np.allclose(joint_eigs, expected, atol=1e-12)

    def test_capacity(self):
        big = np.eye(64) / 64
        with pytest.raises(CapacityError):
            tensor_product(big, big, max_entries=2**10)


def explicit_partial_trace(rho, dims, keep):
    """Index-by-index contraction oracle."""
    n = len(dims)
    dk = dims[keep]
    out = np.zeros((dk, dk), dtype=complex)
    for row in itertools.product(*[range(d) for d in dims]):
        for col in itertools.product(*[range(d) for d in dims]):
            if all(row[m] == col[m] for m in range(n) if m != keep):
                r = np.ravel_multi_index(row, dims)
                c = np.ravel_multi_index(col, dims)
                out[row[keep], col[keep]] += rho[r, c]
    return out


class TestPartialTrace:
    def test_product_state_factors(self):
        rng = np.random.default_rng(10)
        a = random_density(rng, 2)
        b = random_density(rng, 3)
        joint = tensor_product(a, b)
        assert np.allclose(partial_trace(joint, [2, 3], 0), a, atol=1e-12)
        assert np.allclose(partial_trace(joint, [2, 3], 1), b, atol=1e-12)

    def test_bell_state(self):
        bell = pure_state_density([1, 0, 0, 1])
        for keep in (0, 1):
            reduced = partial_trace(bell, [2, 2], keep)
            assert np.allclose(reduced, np.eye(2) / 2, atol=1e-12)

    def test_random_three_qubit_vs_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            vec = rng.normal(size=8) + 1j * rng.normal(size=8)
            rho = pure_state_density(vec)
            for keep in range(3):
                got = partial_trace(rho, [2, 2, 2], keep)
                want = explicit_partial_trace(rho, [2, 2, 2], keep)
                assert np.max(np.abs(got - want)) < 1e-12

    def test_mixed_dims_vs_oracle(self):
        rng = np.random.default_rng(12)
        rho = random_density(rng, 12)
        for keep in range(3):
            got = partial_trace(rho, [2, 3, 2], keep)
            want = explicit_partial_trace(rho, [2, 3, 2], keep)
            assert np.max(np.abs(got - want)) < 1e-12
            assert abs(np.trace(got) - 1.0) < 1e-12
            assert np.max(np.abs(got - got.conj().T)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            partial_trace(np.eye(4) / 4, [2, 3], 0)
        with pytest.raises(ValueError):
            partial_trace(np.eye(4) / 4, [2, 2], 2)


class TestMetricsReport:
    def test_uncorrelated_product_zero_information(self):
        rng = np.random.default_rng(13)
        a = random_density(rng, 2)
        b = random_density(rng, 2)
        report = metrics_report(tensor_product(a, b), [2, 2])
        assert abs(report.mutual_information) < 1e-10
        assert report.mutual_information == report.s_re - report.s_id
        assert report.mutual_entanglement == report.xi_id - report.xi_re

    def test_pure_product_of_superpositions(self):
        plus = pure_state_density([1, 1])
        full = tensor_product(tensor_product(plus, plus), plus)
        report = metrics_report(full, [2, 2, 2])
        assert report.xi_id == pytest.approx(1.0, abs=1e-10)
        assert report.s_id == pytest.approx(0.0, abs=1e-10)
        assert report.xi_re == pytest.approx(1.0, abs=1e-10)

    def test_evolved_two_qubit_state(self):
        # Entangled two-spin state: diagonal phases from a z-z coupling
        g, t = 0.8, 0.9
        amp = np.array([1, 1, 1, 1], dtype=complex) / 2.0
        phases = np.exp(-1j * g * t * np.array([1, -1, -1, 1]))
        rho = pure_state_density(amp * phases)
        report = metrics_report(rho, [2, 2])
        assert report.mutual_information >= -1e-12
        assert report.mutual_entanglement >= -1e-12
        # cross-check against the subsystem primitives
        parts = [partial_trace(rho, [2, 2], i) for i in range(2)]
        assert report.xi_re == pytest.approx(
            np.mean([coherence(p) for p in parts]), abs=1e-14
        )
        assert report.s_re == pytest.approx(
            sum(von_neumann_entropy(p) for p in parts), abs=1e-14
        )

    def test_rejects_one_dimensional_cells(self):
        with pytest.raises(ValueError):
            metrics_report(np.eye(2) / 2, [1, 2])
