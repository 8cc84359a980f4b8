"""Partial-trace kernels: compiled bit-twiddling core with a numpy fallback.

The partial trace over a bit-indexed register is the hot inner loop of every
Monte Carlo diagnostic in this package, so it is implemented twice:

* ``_bitkernels`` — a Cython extension doing bit-masked index arithmetic
  with no intermediate copies;
* ``_fallback`` — an equivalent pure-numpy implementation.

The compiled core is used when it imported cleanly and the environment
variable ``SPINTHERM_PURE_PYTHON`` is not set. Both backends satisfy the
same contract; the test suite checks them against each other whenever both
are available, and ``benchmarks/bench_kernels.py`` compares their speed.

Gather layout shared by both backends: for a register of ``n`` sites and a
sorted tuple ``keep`` of kept sites, ``gather[k * d_rest + r]`` is the full
basis index whose kept-site bits spell ``k`` and whose remaining bits spell
``r`` (ascending site order on both sides, first site = most significant
bit, as in :mod:`spintherm.register`).
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np

from . import _fallback

try:
    from . import _bitkernels
except ImportError:  # extension not built
    _bitkernels = None

if os.environ.get("SPINTHERM_PURE_PYTHON") or _bitkernels is None:
    _impl = _fallback
    BACKEND = "python"
else:
    _impl = _bitkernels
    BACKEND = "compiled"


@lru_cache(maxsize=256)
def gather_indices(n_sites: int, keep: tuple) -> np.ndarray:
    """Index table mapping (kept, rest) sub-indices to full basis indices."""
    keep = tuple(sorted(keep))
    if len(keep) == 0:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= n_sites or len(set(keep)) != len(keep):
        raise ValueError(f"keep sites {keep} invalid for {n_sites} sites")
    rest = tuple(s for s in range(n_sites) if s not in keep)
    d = 1 << n_sites
    b = np.arange(d, dtype=np.int64)
    nk, nr = len(keep), len(rest)
    kidx = np.zeros(d, dtype=np.int64)
    for j, s in enumerate(keep):
        kidx |= ((b >> (n_sites - 1 - s)) & 1) << (nk - 1 - j)
    ridx = np.zeros(d, dtype=np.int64)
    for j, s in enumerate(rest):
        ridx |= ((b >> (n_sites - 1 - s)) & 1) << (nr - 1 - j)
    gather = np.empty(d, dtype=np.int64)
    gather[(kidx << nr) | ridx] = b
    gather.flags.writeable = False
    return gather


def ptrace_state(amps: np.ndarray, n_sites: int, keep) -> np.ndarray:
    """Reduced density matrix of a pure state on the kept sites."""
    keep = tuple(sorted(keep))
    g = gather_indices(n_sites, keep)
    dk = 1 << len(keep)
    dr = g.size // dk
    amps = np.ascontiguousarray(amps, dtype=np.complex128)
    return _impl.ptrace_state_gathered(amps, g, dk, dr)


def ptrace_density(rho: np.ndarray, n_sites: int, keep) -> np.ndarray:
    """Partial trace of a density matrix onto the kept sites."""
    keep = tuple(sorted(keep))
    g = gather_indices(n_sites, keep)
    dk = 1 << len(keep)
    dr = g.size // dk
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    return _impl.ptrace_density_gathered(rho, g, dk, dr)


def ptrace_state_batch(batch: np.ndarray, n_sites: int, keep) -> np.ndarray:
    """Reduced density matrices for a (n_states, dim) batch of pure states."""
    keep = tuple(sorted(keep))
    g = gather_indices(n_sites, keep)
    dk = 1 << len(keep)
    dr = g.size // dk
    batch = np.ascontiguousarray(batch, dtype=np.complex128)
    return _impl.ptrace_state_batch_gathered(batch, g, dk, dr)
