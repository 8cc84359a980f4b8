import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_hermitian, random_state
from spintherm.errors import DimensionMismatchError, ValidationError
from spintherm.linalg import (
    PAULI_X,
    PAULI_Z,
    DensityMatrix,
    HermitianOperator,
    PureState,
    SpectralDecomposition,
    Subspace,
    eig_hermitian,
    embed_site_operator,
    partial_trace,
    partial_trace_state,
    project_onto,
    trace_norm_distance,
)
from spintherm.models import product_state
from spintherm.register import SpinRegister


# ---- embedding ----------------------------------------------------------

def test_embed_single_site_z():
    reg = SpinRegister(1)
    op = embed_site_operator(reg, 0, PAULI_Z)
    np.testing.assert_array_equal(np.real(np.diagonal(op.entries)), [1, -1])


def test_embed_two_sites_bit_order():
    reg = SpinRegister(2)
    z0 = embed_site_operator(reg, 0, PAULI_Z)
    np.testing.assert_array_equal(np.real(np.diagonal(z0.entries)), [1, 1, -1, -1])
    z1 = embed_site_operator(reg, 1, PAULI_Z)
    np.testing.assert_array_equal(np.real(np.diagonal(z1.entries)), [1, -1, 1, -1])


def test_embed_matches_kron():
    reg = SpinRegister(3)
    for site in range(3):
        want = np.kron(
            np.kron(np.eye(1 << site), PAULI_X), np.eye(1 << (2 - site))
        )
        got = embed_site_operator(reg, site, PAULI_X).entries
        np.testing.assert_array_equal(got, want)


def test_embed_x_spectrum():
    reg = SpinRegister(3)
    for site in range(3):
        w = np.linalg.eigvalsh(embed_site_operator(reg, site, PAULI_X).entries)
        np.testing.assert_allclose(np.sort(w), [-1] * 4 + [1] * 4, atol=1e-12)


def test_embed_site_out_of_range():
    with pytest.raises(ValidationError):
        embed_site_operator(SpinRegister(2), 2, PAULI_Z)


# ---- partial trace ------------------------------------------------------

def test_partial_trace_product_state():
    reg = SpinRegister(2)
    psi = product_state(reg, [(1, 0), (0, 1)])  # up (x) down
    red = partial_trace_state(psi, [0])
    np.testing.assert_allclose(red.entries, [[1, 0], [0, 0]], atol=1e-12)


def test_partial_trace_bell_state():
    reg = SpinRegister(2)
    bell = PureState(np.array([0, 1, 1, 0]) / np.sqrt(2), register=reg)
    red = partial_trace_state(bell, [0])
    np.testing.assert_allclose(red.entries, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_composition():
    reg = SpinRegister(3)
    rho = random_density(8, seed=11, register=reg)
    nested = partial_trace(partial_trace(rho, [0, 1]), [0])
    direct = partial_trace(rho, [0])
    assert np.max(np.abs(nested.entries - direct.entries)) < 1e-12


def test_partial_trace_empty_keep():
    reg = SpinRegister(2)
    rho = random_density(4, seed=3, register=reg)
    with pytest.raises(ValidationError):
        partial_trace(rho, [])


def test_partial_trace_preserves_trace_and_positivity():
    reg = SpinRegister(4)
    for seed in range(5):
        rho = random_density(16, seed=seed, register=reg)
        red = partial_trace(rho, [1, 3])
        assert abs(np.trace(red.entries) - 1) < 1e-10
        assert np.linalg.eigvalsh(red.entries)[0] > -1e-10


# ---- trace norm distance ------------------------------------------------

def test_trace_norm_distance_examples():
    up = DensityMatrix(np.diag([1.0, 0.0]))
    down = DensityMatrix(np.diag([0.0, 1.0]))
    mixed = DensityMatrix(np.eye(2) / 2)
    assert trace_norm_distance(up, up) == 0.0
    assert abs(trace_norm_distance(up, mixed) - 1.0) < 1e-12
    assert abs(trace_norm_distance(up, down) - 2.0) < 1e-12
    with pytest.raises(DimensionMismatchError):
        trace_norm_distance(up, DensityMatrix(np.eye(4) / 4))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), dim=st.sampled_from([2, 3, 4, 8]))
def test_trace_norm_distance_properties(seed, dim):
    a = random_density(dim, seed)
    b = random_density(dim, seed + 1)
    c = random_density(dim, seed + 2)
    dab = trace_norm_distance(a, b)
    assert abs(dab - trace_norm_distance(b, a)) < 1e-12
    assert -1e-12 <= dab <= 2 + 1e-12
    assert dab <= trace_norm_distance(a, c) + trace_norm_distance(c, b) + 1e-10


def test_distance_two_iff_orthogonal_pure_states():
    for seed in range(6):
        psi = random_state(8, seed)
        # orthogonal partner via Gram-Schmidt against psi
        raw = random_state(8, seed + 100)
        phi = raw - np.vdot(psi, raw) * psi
        phi /= np.linalg.norm(phi)
        a = DensityMatrix(np.outer(psi, psi.conj()))
        b = DensityMatrix(np.outer(phi, phi.conj()))
        assert abs(trace_norm_distance(a, b) - 2.0) < 1e-10
        # non-orthogonal pair stays strictly below 2
        mix = (psi + phi) / np.linalg.norm(psi + phi)
        c = DensityMatrix(np.outer(mix, mix.conj()))
        assert trace_norm_distance(a, c) < 2 - 1e-3


# ---- eigendecomposition -------------------------------------------------

def test_eig_diagonal_fast_path():
    h = HermitianOperator(np.diag([3.0, 1.0, 2.0]).astype(complex))
    dec = eig_hermitian(h)
    np.testing.assert_array_equal(dec.eigenvalues, [1.0, 2.0, 3.0])
    # permutation columns reconstruct exactly
    np.testing.assert_array_equal(dec.reconstruct(), h.entries)


def test_eig_pauli_x():
    dec = eig_hermitian(HermitianOperator(PAULI_X))
    np.testing.assert_allclose(dec.eigenvalues, [-1.0, 1.0], atol=1e-12)


def test_eig_reconstruction_random():
    h = random_hermitian(64, seed=2)
    dec = eig_hermitian(h)
    err = np.max(np.abs(dec.reconstruct() - h.entries))
    assert err < 1e-10


@pytest.mark.parametrize("dim", [256, 1024, 2048])
def test_eig_roundtrip_relative(dim):
    h = random_hermitian(dim, seed=dim)
    dec = eig_hermitian(h)
    idx = np.linspace(0, dim - 1, 64).astype(int)
    resid = np.max(
        np.abs(h.entries @ dec.eigenvectors[:, idx] - dec.eigenvectors[:, idx] * dec.eigenvalues[idx])
    )
    assert resid < 1e-8 * np.max(np.abs(h.entries))


def test_eig_roundtrip_diagonal_4096():
    rng = np.random.default_rng(0)
    h = HermitianOperator(np.diag(rng.normal(size=4096)).astype(complex))
    dec = eig_hermitian(h)
    assert np.max(np.abs(dec.reconstruct() - h.entries)) == 0.0


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        HermitianOperator(np.array([[0, 1], [0, 0]], dtype=complex))


# ---- projections --------------------------------------------------------

def test_project_inside_and_orthogonal():
    frame = np.eye(4)[:, :2].astype(complex)
    sub = Subspace(frame)
    inside = np.array([1, 0, 0, 0], dtype=complex)
    _, w = project_onto(sub, inside)
    assert abs(w - 1.0) < 1e-12
    outside = np.array([0, 0, 1, 0], dtype=complex)
    comp, w0 = project_onto(sub, outside)
    assert w0 < 1e-12 and np.max(np.abs(comp)) < 1e-12


def test_projection_weights_sum_to_one():
    psi = random_state(8, seed=4)
    eye = np.eye(8, dtype=complex)
    total = 0.0
    for cols in [(0, 1, 2), (3,), (4, 5), (6, 7)]:
        _, w = project_onto(Subspace(eye[:, list(cols)]), psi)
        total += w
    assert abs(total - 1.0) < 1e-10


def test_project_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        project_onto(Subspace(np.eye(4, dtype=complex)), random_state(8, 0))


# ---- type invariants ----------------------------------------------------

def test_pure_state_norm_enforced():
    with pytest.raises(ValidationError):
        PureState(np.array([1.0, 1.0]))


def test_density_matrix_invariants():
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([0.7, 0.7]))  # trace 1.4
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([1.5, -0.5]))  # negative eigenvalue


def test_subspace_orthonormality_enforced():
    bad = np.ones((4, 2), dtype=complex)
    with pytest.raises(ValidationError):
        Subspace(bad)


def test_spectral_decomposition_ordering_enforced():
    with pytest.raises(ValidationError):
        SpectralDecomposition(np.array([2.0, 1.0]), np.eye(2, dtype=complex))


def test_carriers_are_immutable():
    rho = random_density(4, seed=9)
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 1.0
