import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density
from spintherm.errors import (
    EmptyShellError,
    EquilibriumTieError,
    NonCommutingFamilyError,
    ShellLeakageError,
    ValidationError,
)
from spintherm.linalg import (
    PAULI_X,
    PAULI_Z,
    HermitianOperator,
    Subspace,
    eig_hermitian,
    embed_site_operator,
)
from spintherm.macrostates import (
    CoarseGrainSpec,
    MacroObservableFamily,
    build_cell_magnetization,
    coarse_grain,
    energy_shell,
    find_equilibrium_macrostate,
    joint_decomposition,
    reconstruct_observable,
    symmetric_shell_edge,
)
from spintherm.models import build_h2, plus_state, sample_fields
from spintherm.register import SpinRegister
from spintherm.rng import complex_normal, make_rng


# ---- coarse graining -----------------------------------------------------

def test_coarse_grain_examples():
    spec = CoarseGrainSpec(0.1)
    assert abs(coarse_grain(0.26, spec) - 0.3) < 1e-12
    assert coarse_grain(0.0, spec) == 0.0
    # 1.5 resolutions: the tie goes to the even multiple
    assert abs(coarse_grain(0.15, spec) - 0.2) < 1e-12
    assert abs(coarse_grain(0.25, spec) - 0.2) < 1e-12
    assert abs(coarse_grain(-0.15, spec) + 0.2) < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    v=st.floats(-1e4, 1e4, allow_nan=False),
    res=st.sampled_from([0.1, 0.5, 1.0, 3.0]),
)
def test_coarse_grain_properties(v, res):
    spec = CoarseGrainSpec(res)
    out = coarse_grain(v, spec)
    assert abs(out / res - round(out / res)) < 1e-6
    assert abs(out - v) <= res / 2 + 1e-6 * max(1.0, abs(v))


def test_coarse_grain_spec_validation():
    with pytest.raises(ValidationError):
        CoarseGrainSpec(0.0)


# ---- cell magnetization families -----------------------------------------

def test_cell_magnetization_two_site_values():
    reg = SpinRegister(2)
    fam = build_cell_magnetization(reg, "z", CoarseGrainSpec(1.0))
    vals = np.sort(np.real(np.diagonal(fam.observables[0][1].entries)))
    np.testing.assert_array_equal(vals, [-2, 0, 0, 2])


def test_cell_magnetization_joint_sector_count():
    reg = SpinRegister(4, cells=((0, 1), (2, 3)))
    fam = build_cell_magnetization(reg, "z", CoarseGrainSpec(1.0))
    decomp = joint_decomposition(fam)
    assert decomp.n_sectors == 9  # three values per cell
    assert sum(decomp.sector_dims()) == 16


def test_x_family_plus_state_maximal_eigenvector():
    reg = SpinRegister(4, cells=((0, 1), (2, 3)))
    fam = build_cell_magnetization(reg, "x", CoarseGrainSpec(1.0))
    psi = plus_state(reg).amplitudes
    for _, op in fam.observables:
        out = op.entries @ psi
        np.testing.assert_allclose(out, 2.0 * psi, atol=1e-10)


def test_family_rejects_axis_mixing():
    reg = SpinRegister(2, cells=((0,), (1,)))
    z = embed_site_operator(reg, 0, PAULI_Z)
    x = embed_site_operator(reg, 0, PAULI_X)
    with pytest.raises(NonCommutingFamilyError):
        MacroObservableFamily((("z0", z), ("x0", x)))
    with pytest.raises(ValidationError):
        build_cell_magnetization(reg, "y", CoarseGrainSpec(1.0))


# ---- energy shells -------------------------------------------------------

def test_energy_shell_full_window():
    h = HermitianOperator(np.diag([1.0, 2.0, 3.0]).astype(complex))
    dec = eig_hermitian(h)
    shell = energy_shell(dec, 3.5, 10.0)
    assert shell.dim == 3


def test_energy_shell_half_open_window():
    h = HermitianOperator(np.diag([1.0, 2.0, 3.0]).astype(complex))
    dec = eig_hermitian(h)
    shell = energy_shell(dec, 2.5, 1.0)  # (1.5, 2.5] contains only E = 2
    assert shell.dim == 1
    np.testing.assert_allclose(np.abs(shell.frame.ravel()), [0, 1, 0], atol=1e-12)
    with pytest.raises(EmptyShellError):
        energy_shell(dec, 0.5, 0.2)


def test_energy_shells_partition_total_dimension():
    from conftest import random_hermitian

    h = random_hermitian(32, seed=21)
    dec = eig_hermitian(h)
    lo, hi = dec.eigenvalues[0], dec.eigenvalues[-1]
    edges = np.linspace(lo - 0.1, hi + 0.1, 6)
    total = 0
    for e0, e1 in zip(edges[:-1], edges[1:]):
        try:
            total += energy_shell(dec, e1, e1 - e0).dim
        except EmptyShellError:
            pass
    assert total == 32


# ---- joint decomposition -------------------------------------------------

def test_joint_decomposition_single_observable():
    reg = SpinRegister(1)
    fam = MacroObservableFamily((("z", embed_site_operator(reg, 0, PAULI_Z)),))
    decomp = joint_decomposition(fam)
    assert decomp.n_sectors == 2
    assert decomp.sector_dims() == (1, 1)


def test_joint_decomposition_example_kernel():
    # two cells of two sites: the zero-magnetization sector has dim 2^2 = 4
    reg = SpinRegister(4, cells=((0, 1), (2, 3)))
    fam = build_cell_magnetization(reg, "z", CoarseGrainSpec(1.0))
    decomp = find_equilibrium_macrostate(joint_decomposition(fam))
    assert decomp.equilibrium_subspace.dim == 4
    assert decomp.epsilon == 0.75
    assert decomp.dominant is False
    # brute-force oracle: count bit strings with zero magnetization per cell
    count = 0
    for b in range(16):
        bits = [(b >> k) & 1 for k in range(4)]
        if sum(bits[:2]) == 1 and sum(bits[2:]) == 1:
            count += 1
    assert count == 4


def test_joint_decomposition_dense_path_matches_diagonal_path():
    # same family run through the dense eigh route via a rotated copy
    reg = SpinRegister(3, cells=((0, 1), (2,)))
    fam = build_cell_magnetization(reg, "z", CoarseGrainSpec(1.0))
    diag_dims = sorted(joint_decomposition(fam).sector_dims())
    u = np.linalg.qr(complex_normal(make_rng(3), (8, 8)))[0]
    rotated = MacroObservableFamily(
        tuple(
            (lbl, HermitianOperator(u @ op.entries @ u.conj().T))
            for lbl, op in fam.observables
        ),
        commutator_tolerance=1e-9,
    )
    dense_dims = sorted(joint_decomposition(rotated).sector_dims())
    assert diag_dims == dense_dims


def test_joint_decomposition_shell_leakage():
    reg = SpinRegister(2)
    fam = MacroObservableFamily((("x0", embed_site_operator(reg, 0, PAULI_X)),))
    shell = Subspace(np.eye(4, dtype=complex)[:, :2])  # spans |00>, |01>
    with pytest.raises(ShellLeakageError):
        joint_decomposition(fam, within=shell)


def test_sector_projections_resolve_shell():
    reg = SpinRegister(4, cells=((0, 1), (2, 3)))
    fam = build_cell_magnetization(reg, "z", CoarseGrainSpec(1.0))
    decomp = joint_decomposition(fam)
    total = np.zeros((16, 16), dtype=complex)
    for _, sub in decomp.sectors:
        p = sub.projector()
        np.testing.assert_allclose(p @ p, p, atol=1e-8)
        total += p
    np.testing.assert_allclose(total, np.eye(16), atol=1e-8)
    for i, (_, a) in enumerate(decomp.sectors):
        for _, b in decomp.sectors[i + 1 :]:
            assert np.max(np.abs(a.frame.conj().T @ b.frame)) < 1e-8


def test_observable_reconstruction():
    reg = SpinRegister(4, cells=((0, 1), (2, 3)))
    fam = build_cell_magnetization(reg, "z", CoarseGrainSpec(1.0))
    decomp = joint_decomposition(fam)
    for j, (_, op) in enumerate(fam.observables):
        np.testing.assert_allclose(
            reconstruct_observable(decomp, j), op.entries, atol=1e-8
        )


def test_z_sectors_spanned_by_basis_vectors():
    reg = SpinRegister(4, cells=((0, 1), (2, 3)))
    fam = build_cell_magnetization(reg, "z", CoarseGrainSpec(1.0))
    decomp = joint_decomposition(fam)
    for _, sub in decomp.sectors:
        assert np.all((sub.frame == 0) | (sub.frame == 1))


# ---- equilibrium selection ------------------------------------------------

def test_single_sector_epsilon_zero():
    reg = SpinRegister(2)
    # resolution so coarse that all magnetization values collapse to zero
    fam = build_cell_magnetization(reg, "z", CoarseGrainSpec(100.0))
    decomp = find_equilibrium_macrostate(joint_decomposition(fam))
    assert decomp.n_sectors == 1
    assert decomp.epsilon == 0.0


def test_equilibrium_counting_oracle_n12():
    # three cells of four sites; the zero bin spans |m| <= 2
    reg = SpinRegister(12, cells=tuple(tuple(range(4 * j, 4 * j + 4)) for j in range(3)))
    fam = build_cell_magnetization(reg, "z", CoarseGrainSpec(6.0))
    decomp = find_equilibrium_macrostate(joint_decomposition(fam))
    per_cell = sum(math.comb(4, k) for k in (1, 2, 3))  # |sum sigma_z| <= 2
    assert per_cell == 14
    assert decomp.equilibrium_subspace.dim == per_cell**3 == 2744
    assert abs(decomp.epsilon - (1 - 2744 / 4096)) < 1e-15


def test_equilibrium_tie_detected():
    reg = SpinRegister(1)
    fam = MacroObservableFamily((("z", embed_site_operator(reg, 0, PAULI_Z)),))
    decomp = joint_decomposition(fam)  # two sectors of dim 1 each
    with pytest.raises(EquilibriumTieError):
        find_equilibrium_macrostate(decomp)


def test_equilibrium_reference_state_scoring():
    reg = SpinRegister(1)
    fam = MacroObservableFamily((("z", embed_site_operator(reg, 0, PAULI_Z)),))
    decomp = joint_decomposition(fam)
    rho = random_density(2, seed=5)
    picked = find_equilibrium_macrostate(decomp, rho_ref=rho)
    weights = [
        float(np.real((sub.frame.conj().T @ rho.entries @ sub.frame).item()))
        for _, sub in decomp.sectors
    ]
    assert picked.eq_index == int(np.argmax(weights))


# ---- basis-fraction inequality -------------------------------------------

def test_basis_mate_fraction_bound_random_instances():
    from spintherm.diagnostics import basis_mate_fraction

    rng = make_rng(77)
    delta = 0.1
    for _ in range(20):
        dim = int(rng.integers(16, 128))
        k_eq = int(rng.integers(dim // 2, dim))
        eps = 1 - k_eq / dim
        z = complex_normal(rng, (dim, dim))
        q, r = np.linalg.qr(z)
        basis = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
        p_eq = Subspace(np.eye(dim, dtype=complex)[:, :k_eq], trusted=True)
        frac = basis_mate_fraction(basis, p_eq, delta)
        assert frac >= 1 - eps / delta - 1e-12


def test_symmetric_shell_edge_flip_invariance():
    fields = sample_fields(10, 1.0, seed=2)
    reg = SpinRegister(10)
    dec = eig_hermitian(build_h2(reg, fields))
    edge = symmetric_shell_edge(dec.eigenvalues, 0.4)
    shell = energy_shell(dec, edge, 2 * edge)
    assert shell.dim % 2 == 0  # states pair up under global spin flip
