import numpy as np
import pytest

from conftest import random_hermitian, random_state
from spintherm.dynamics import (
    build_context,
    evolve,
    expectation_series,
    finite_time_average,
    gap_degeneracy_scan,
    infinite_time_average,
    mate_eth_average_bound,
    relaxation_experiment,
    time_variance,
)
from spintherm.errors import ValidationError
from spintherm.linalg import (
    PAULI_Z,
    HermitianOperator,
    PureState,
    Subspace,
    eig_hermitian,
    embed_site_operator,
)
from spintherm.macrostates import (
    CoarseGrainSpec,
    MacroObservableFamily,
    build_cell_magnetization,
    find_equilibrium_macrostate,
    joint_decomposition,
)
from spintherm.models import (
    build_h2,
    build_random_basis_hamiltonian,
    plus_state,
    sample_fields,
    total_magnetization,
)
from spintherm.register import SpinRegister
from spintherm.rng import complex_normal, make_rng


def _context(dim, seed):
    h = random_hermitian(dim, seed)
    dec = eig_hermitian(h)
    psi = PureState(random_state(dim, seed + 1))
    return h, dec, build_context(dec, psi)


# ---- evolution ---------------------------------------------------------------

def test_evolve_time_zero_identity():
    _, _, ctx = _context(12, seed=1)
    psi0 = evolve(ctx, 0.0)
    recon = ctx.decomposition.eigenvectors @ ctx.coefficients
    np.testing.assert_allclose(psi0.amplitudes, recon, atol=1e-12)


def test_eigenstate_evolves_by_phase_only():
    h, dec, _ = _context(8, seed=2)
    phi = PureState(dec.eigenvectors[:, 3])
    ctx = build_context(dec, phi)
    later = evolve(ctx, 1.7)
    overlap = np.vdot(phi.amplitudes, later.amplitudes)
    assert abs(abs(overlap) - 1.0) < 1e-12
    a = random_hermitian(8, seed=3)
    vals = expectation_series(ctx, a, np.linspace(0, 5, 7))
    assert np.max(np.abs(vals - vals[0])) < 1e-10


def test_energy_and_norm_conserved():
    h, dec, ctx = _context(16, seed=4)
    for t in (0.0, 0.3, 2.1, 17.0):
        psi_t = evolve(ctx, t)
        assert abs(np.linalg.norm(psi_t.amplitudes) - 1.0) < 1e-10
        e = np.real(np.vdot(psi_t.amplitudes, h.entries @ psi_t.amplitudes))
        e0 = np.real(np.vdot(evolve(ctx, 0.0).amplitudes, h.entries @ evolve(ctx, 0.0).amplitudes))
        assert abs(e - e0) < 1e-10


# ---- infinite-time averages -----------------------------------------------------

def test_average_of_commuting_observable_is_initial_value():
    h, dec, ctx = _context(10, seed=5)
    a = HermitianOperator(2.0 * h.entries + np.eye(10))  # commutes with h
    psi0 = evolve(ctx, 0.0)
    expect0 = float(np.real(np.vdot(psi0.amplitudes, a.entries @ psi0.amplitudes)))
    assert abs(infinite_time_average(ctx, a) - expect0) < 1e-10


def test_average_nondegenerate_identity():
    for seed in range(5):
        h, dec, ctx = _context(24, seed=seed + 10)
        a = random_hermitian(24, seed=seed + 50)
        avg = infinite_time_average(ctx, a)
        tilde = dec.eigenvectors.conj().T @ a.entries @ dec.eigenvectors
        direct = float(np.sum(np.abs(ctx.coefficients) ** 2 * np.real(np.diagonal(tilde))))
        assert abs(avg - direct) < 1e-12


def test_quadrature_average_converges_with_horizon():
    h, dec, ctx = _context(32, seed=20)
    a = random_hermitian(32, seed=21)
    exact = infinite_time_average(ctx, a)
    spacing = (dec.eigenvalues[-1] - dec.eigenvalues[0]) / 31
    errs = [
        abs(finite_time_average(ctx, a, t_units / spacing) - exact)
        for t_units in (1e2, 1e3, 1e4)
    ]
    assert errs[2] < 1e-2
    assert errs[2] <= errs[0] + 1e-12


def test_averaging_is_idempotent_pinching():
    # averaging the already-pinched observable changes nothing
    h, dec, ctx = _context(12, seed=30)
    a = random_hermitian(12, seed=31)
    v = dec.eigenvectors
    tilde = v.conj().T @ a.entries @ v
    pinched = v @ np.diag(np.diagonal(tilde)) @ v.conj().T
    once = infinite_time_average(ctx, a)
    twice = infinite_time_average(ctx, HermitianOperator(0.5 * (pinched + pinched.conj().T)))
    assert abs(once - twice) < 1e-12


# ---- degenerate spectra -----------------------------------------------------------

def test_degenerate_groups_average():
    # two-fold degenerate level: the group projection, not individual
    # eigenvectors, defines the average
    w = np.array([0.0, 1.0, 1.0, 2.0])
    v = np.linalg.qr(complex_normal(make_rng(3), (4, 4)))[0]
    h = HermitianOperator((v * w) @ v.conj().T)
    dec = eig_hermitian(h)
    psi = PureState(random_state(4, seed=8))
    ctx = build_context(dec, psi)
    assert ctx.n_groups == 3
    a = random_hermitian(4, seed=9)
    avg = infinite_time_average(ctx, a)
    horizon = 4e4
    quad = finite_time_average(ctx, a, horizon)
    assert abs(avg - quad) < 1e-2


# ---- time variance -----------------------------------------------------------------

def test_variance_zero_for_eigenbasis_diagonal():
    h, dec, ctx = _context(10, seed=40)
    v = dec.eigenvectors
    diag = v @ np.diag(np.arange(10.0)) @ v.conj().T
    tv = time_variance(ctx, HermitianOperator(0.5 * (diag + diag.conj().T)))
    assert tv.method == "dephasing"
    assert tv.value < 1e-20


def test_variance_two_level_closed_form():
    h = HermitianOperator(np.diag([0.0, 1.0]).astype(complex))
    dec = eig_hermitian(h)
    psi = PureState(np.array([1.0, 1.0]) / np.sqrt(2))
    ctx = build_context(dec, psi)
    sx = HermitianOperator(np.array([[0, 1], [1, 0]], dtype=complex))
    tv = time_variance(ctx, sx)
    assert tv.method == "dephasing"
    assert abs(tv.value - 0.5) < 1e-12
    # quadrature cross-check: variance of cos(t) over long horizons is 1/2
    t = np.linspace(0, 4000.0, 200_001)
    vals = expectation_series(ctx, sx, t)
    mean = np.trapezoid(vals, t) / t[-1]
    quad = np.trapezoid((vals - mean) ** 2, t) / t[-1]
    assert abs(quad - 0.5) < 0.01


def test_variance_matches_quadrature_generic():
    for seed in (1, 2):
        h, dec, ctx = _context(10, seed=seed + 70)
        a = random_hermitian(10, seed=seed + 80)
        tv = time_variance(ctx, a)
        assert tv.method == "dephasing"
        spacing = (dec.eigenvalues[-1] - dec.eigenvalues[0]) / 9
        horizon = 3e3 / spacing
        t = np.linspace(0, horizon, 120_001)
        vals = expectation_series(ctx, a, t)
        mean = np.trapezoid(vals, t) / horizon
        quad = np.trapezoid((vals - mean) ** 2, t) / horizon
        assert abs(tv.value - quad) <= 0.05 * max(tv.value, 1e-12)


def test_variance_bounded_by_offdiagonal_cap():
    h, dec, ctx = _context(16, seed=90)
    cap = 0.03
    v = dec.eigenvectors
    a = random_hermitian(16, seed=91).entries
    tilde = v.conj().T @ a @ v
    off = tilde - np.diag(np.diagonal(tilde))
    off /= np.maximum(np.abs(off) / cap, 1.0)
    capped = v @ (np.diag(np.diagonal(tilde)) + off) @ v.conj().T
    tv = time_variance(ctx, HermitianOperator(0.5 * (capped + capped.conj().T)))
    assert tv.value <= cap**2 + 1e-15


def test_variance_zero_iff_block_diagonal():
    h, dec, ctx = _context(8, seed=95)
    a = random_hermitian(8, seed=96)
    tv = time_variance(ctx, a)
    assert tv.value > 1e-8  # generic observables fluctuate


def test_variance_resonant_fallback_flagged():
    h = HermitianOperator(np.diag([0.0, 1.0, 2.0]).astype(complex))  # equal gaps
    dec = eig_hermitian(h)
    ctx = build_context(dec, PureState(np.ones(3) / np.sqrt(3)))
    tv = time_variance(ctx, random_hermitian(3, seed=97))
    assert tv.method == "quadrature"
    assert tv.value >= 0


# ---- resonance scan -----------------------------------------------------------------

def test_gap_scan_equally_spaced():
    scan = gap_degeneracy_scan(np.array([0.0, 1.0, 2.0]), tol=1e-9)
    assert scan.resonant
    assert scan.count == 4  # (1,0)~(2,1) and (0,1)~(1,2), ordered both ways
    assert len(scan.quadruples) == 4


def test_gap_scan_generic_spectrum_clean():
    w = np.sort(make_rng(7).normal(size=40))
    scan = gap_degeneracy_scan(w, tol=1e-9)
    assert not scan.resonant


def test_gap_scan_h2_resonance_count_oracle():
    reg = SpinRegister(4)
    h = build_h2(reg, sample_fields(4, 1.0, seed=13))
    dec = eig_hermitian(h)
    scan = gap_degeneracy_scan(dec, tol=1e-9)
    # brute-force oracle over all ordered pair pairs
    w = dec.eigenvalues
    pairs = [(a, b) for a in range(16) for b in range(16) if a != b]
    count = 0
    for i, (a, b) in enumerate(pairs):
        for j, (c, d) in enumerate(pairs):
            if i != j and abs((w[a] - w[b]) - (w[c] - w[d])) <= 1e-9:
                count += 1
    assert scan.count == count
    assert scan.resonant  # flipping one spin gives a spin-independent gap


def test_gap_scan_dimension_guard():
    with pytest.raises(ValidationError):
        gap_degeneracy_scan(np.arange(5000.0))


# ---- average bound and relaxation ----------------------------------------------------

@pytest.fixture(scope="module")
def h2_setup():
    reg = SpinRegister(10, cells=((0, 1, 2, 3, 4), (5, 6, 7, 8, 9)))
    fields = sample_fields(10, 1.0, seed=3)
    h2 = build_h2(reg, fields)
    dec = eig_hermitian(h2)
    # synthetic strongly dominant sector: everything except the all-up state
    marker = np.zeros(1024)
    marker[0] = 7.0
    fam = MacroObservableFamily(
        (("marker", HermitianOperator(np.diag(marker.astype(complex)))),)
    )
    decomp = find_equilibrium_macrostate(joint_decomposition(fam))
    assert decomp.epsilon == 1 / 1024
    return reg, fields, h2, dec, decomp


def test_average_bound_eigenstate(h2_setup):
    reg, fields, h2, dec, decomp = h2_setup
    p_eq = decomp.equilibrium_subspace
    # pick an eigenstate inside the equilibrium space
    weights = np.sum(np.abs(p_eq.frame.conj().T @ dec.eigenvectors) ** 2, axis=0)
    idx = int(np.argmax(weights))
    ctx = build_context(dec, PureState(dec.eigenvectors[:, idx], register=reg))
    res = mate_eth_average_bound(ctx, p_eq, delta=0.05)
    assert res.applicable and res.bound_holds
    assert abs(res.average - weights[idx]) < 1e-10


def test_average_bound_random_basis_hamiltonian(h2_setup):
    reg, fields, h2, dec, decomp = h2_setup
    p_eq = decomp.equilibrium_subspace
    spectrum = np.sort(make_rng(5).normal(size=1024))
    h = build_random_basis_hamiltonian(Subspace.full(1024), spectrum, seed=6)
    dec_r = eig_hermitian(h)
    for seed in range(3):
        ctx = build_context(dec_r, PureState(random_state(1024, seed + 200), register=reg))
        res = mate_eth_average_bound(ctx, p_eq, delta=0.05)
        assert res.applicable  # every eigenstate passes the weight test
        assert res.average >= 1 - 0.05 - 1e-12


def test_average_bound_inapplicable_out_of_equilibrium(h2_setup):
    reg, fields, h2, dec, decomp = h2_setup
    p_eq = decomp.equilibrium_subspace
    # the all-up basis state is the excluded sector: orthogonal to the
    # equilibrium space, and it stays orthogonal forever
    psi = PureState(np.eye(1024, dtype=complex)[:, 0], register=reg)
    ctx = build_context(dec, psi)
    res = mate_eth_average_bound(ctx, p_eq, delta=0.05)
    assert not res.applicable
    assert res.average < 1e-10


def test_relaxation_h2_plus_state_closed_form(h2_setup):
    reg, fields, h2, dec, _ = h2_setup
    mx = total_magnetization(reg, "x")
    t = np.linspace(0.0, 25.0, 41)
    res = relaxation_experiment(h2, plus_state(reg), mx, t, spec_dec=dec)
    closed = np.array([np.sum(np.cos(2 * np.array(fields.fields) * tt)) for tt in t])
    assert np.max(np.abs(res.values - closed)) < 1e-10
    assert abs(res.long_time_average) < 1e-10


def test_relaxation_cell_energy_constant(h2_setup):
    reg, fields, h2, dec, _ = h2_setup
    diag = np.zeros(reg.dim)
    for site in reg.cells[0]:
        diag += fields.fields[site] * reg.z_signs(site)
    cell_energy = HermitianOperator(np.diag(diag.astype(complex)), register=reg)
    psi0 = PureState(random_state(1024, seed=300), register=reg)
    res = relaxation_experiment(h2, psi0, cell_energy, np.linspace(0, 11, 12), spec_dec=dec)
    assert np.max(np.abs(res.values - res.values[0])) < 1e-12


def test_relaxation_eigenstate_flat(h2_setup):
    reg, fields, h2, dec, _ = h2_setup
    psi0 = PureState(dec.eigenvectors[:, 17], register=reg)
    a = total_magnetization(reg, "x")
    res = relaxation_experiment(h2, psi0, a, np.linspace(0, 9, 10), spec_dec=dec)
    assert np.max(np.abs(res.values - res.values[0])) < 1e-10


def test_relaxation_rejects_unsorted_grid():
    reg = SpinRegister(2)
    h = build_h2(reg, sample_fields(2, 1.0, seed=1))
    with pytest.raises(ValidationError):
        relaxation_experiment(h, plus_state(reg), total_magnetization(reg, "x"), [1.0, 0.5])


def test_h2_site_z_expectations_static(h2_setup):
    reg, fields, h2, dec, _ = h2_setup
    psi0 = PureState(random_state(1024, seed=301), register=reg)
    ctx = build_context(dec, psi0)
    for site in (0, 4, 9):
        z = embed_site_operator(reg, site, PAULI_Z)
        vals = expectation_series(ctx, z, np.linspace(0, 7, 9))
        assert np.max(np.abs(vals - vals[0])) < 1e-12


def test_relaxation_csv_format(tmp_path, h2_setup):
    reg, fields, h2, dec, _ = h2_setup
    res = relaxation_experiment(
        h2, plus_state(reg), total_magnetization(reg, "x"), [0.0, 1.0], spec_dec=dec
    )
    out = tmp_path / "series.csv"
    text = res.to_csv(out, metadata={"n_sites": 10})
    lines = text.strip().split("\n")
    assert lines[0] == "# n_sites = 10"
    assert lines[1] == "t,value"
    assert out.read_text() == text
