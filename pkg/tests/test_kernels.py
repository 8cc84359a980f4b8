"""Contract tests for the partial-trace kernels, checked against an
independent axis-transpose implementation and across backends."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spintherm import kernels
from spintherm.kernels import _fallback
from spintherm.rng import complex_normal, make_rng

try:
    from spintherm.kernels import _bitkernels
except ImportError:
    _bitkernels = None


def reference_ptrace_state(amps, n_sites, keep):
    """Independent oracle: reshape to a rank-n tensor and transpose axes."""
    keep = sorted(keep)
    rest = [s for s in range(n_sites) if s not in keep]
    t = np.asarray(amps).reshape([2] * n_sites)
    t = np.transpose(t, keep + rest)
    m = t.reshape(2 ** len(keep), 2 ** len(rest))
    return m @ m.conj().T


def reference_ptrace_density(rho, n_sites, keep):
    keep = sorted(keep)
    rest = [s for s in range(n_sites) if s not in keep]
    t = np.asarray(rho).reshape([2] * (2 * n_sites))
    order = keep + rest + [n_sites + s for s in keep] + [n_sites + s for s in rest]
    t = np.transpose(t, order)
    dk, dr = 2 ** len(keep), 2 ** len(rest)
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("arbr->ab", t)


def _rand_state(n_sites, seed):
    z = complex_normal(make_rng(seed), 1 << n_sites)
    return z / np.linalg.norm(z)


def _rand_density(n_sites, seed):
    d = 1 << n_sites
    m = complex_normal(make_rng(seed), (d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


@pytest.mark.parametrize("n_sites,keep", [(1, (0,)), (3, (0,)), (3, (1, 2)), (4, (0, 2)), (5, (1, 3, 4))])
def test_state_kernel_matches_reference(n_sites, keep):
    amps = _rand_state(n_sites, seed=n_sites * 17 + len(keep))
    got = kernels.ptrace_state(amps, n_sites, keep)
    want = reference_ptrace_state(amps, n_sites, keep)
    np.testing.assert_allclose(got, want, atol=1e-13)


@pytest.mark.parametrize("n_sites,keep", [(2, (0,)), (3, (0, 2)), (4, (1, 3))])
def test_density_kernel_matches_reference(n_sites, keep):
    rho = _rand_density(n_sites, seed=n_sites * 31 + len(keep))
    got = kernels.ptrace_density(rho, n_sites, keep)
    want = reference_ptrace_density(rho, n_sites, keep)
    np.testing.assert_allclose(got, want, atol=1e-13)


def test_batch_kernel_matches_single():
    n_sites, keep = 5, (0, 3)
    batch = np.stack([_rand_state(n_sites, seed=s) for s in range(7)])
    got = kernels.ptrace_state_batch(batch, n_sites, keep)
    for i in range(7):
        np.testing.assert_allclose(
            got[i], kernels.ptrace_state(batch[i], n_sites, keep), atol=1e-13
        )


@pytest.mark.skipif(_bitkernels is None, reason="compiled backend not built")
def test_backends_agree():
    n_sites = 6
    for keep in [(0,), (2, 4), (0, 1, 5)]:
        g = kernels.gather_indices(n_sites, keep)
        dk = 1 << len(keep)
        dr = g.size // dk
        amps = _rand_state(n_sites, seed=len(keep))
        rho = _rand_density(n_sites, seed=10 + len(keep))
        np.testing.assert_allclose(
            _bitkernels.ptrace_state_gathered(amps, g, dk, dr),
            _fallback.ptrace_state_gathered(amps, g, dk, dr),
            atol=1e-13,
        )
        np.testing.assert_allclose(
            _bitkernels.ptrace_density_gathered(np.ascontiguousarray(rho), g, dk, dr),
            _fallback.ptrace_density_gathered(np.ascontiguousarray(rho), g, dk, dr),
            atol=1e-13,
        )


@settings(max_examples=40, deadline=None)
@given(
    n_sites=st.integers(2, 6),
    keep_bits=st.integers(1, 63),
    seed=st.integers(0, 2**32 - 1),
)
def test_partial_trace_properties(n_sites, keep_bits, seed):
    keep = tuple(s for s in range(n_sites) if (keep_bits >> s) & 1)
    if not keep:
        keep = (0,)
    rho = _rand_density(n_sites, seed)
    red = kernels.ptrace_density(rho, n_sites, keep)
    assert abs(np.trace(red) - 1.0) < 1e-10
    assert np.linalg.eigvalsh(red)[0] > -1e-10
    np.testing.assert_allclose(
        red, reference_ptrace_density(rho, n_sites, keep), atol=1e-12
    )


def test_gather_rejects_bad_keep():
    with pytest.raises(ValueError):
        kernels.gather_indices(3, ())
    with pytest.raises(ValueError):
        kernels.gather_indices(3, (3,))
