"""Pure-numpy partial-trace backend (same contract as the Cython core)."""

from __future__ import annotations

import numpy as np


def ptrace_state_gathered(amps, gather, dk, dr):
    m = amps[gather].reshape(dk, dr)
    return m @ m.conj().T


def ptrace_density_gathered(rho, gather, dk, dr):
    # one gathered copy, then a contraction over the traced index
    g = rho[np.ix_(gather, gather)].reshape(dk, dr, dk, dr)
    return np.einsum("arbr->ab", g)


def ptrace_state_batch_gathered(batch, gather, dk, dr):
    m = batch[:, gather].reshape(batch.shape[0], dk, dr)
    return np.einsum("sij,skj->sik", m, m.conj())
