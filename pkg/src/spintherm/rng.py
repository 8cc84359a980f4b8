"""Seeded random streams and Haar sampling.

Every sampling routine in the package takes an explicit 64-bit seed (plus an
optional stream index); there is no global RNG state anywhere. Streams are
backed by the Philox counter-based generator, so distinct (seed, stream)
pairs give independent, bit-reproducible sequences and parallel callers can
partition the stream space.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return a Generator for the (seed, stream) pair."""
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian CN(0, 1) samples (unit total variance)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix.

    The R diagonal is phase-fixed so the result is exactly Haar rather than
    merely unitary.
    """
    z = complex_normal(rng, (dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_isometry(dim: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """First `cols` columns of a Haar unitary, drawn directly (economy QR)."""
    z = complex_normal(rng, (dim, cols))
    q, r = np.linalg.qr(z, mode="reduced")
    d = np.diagonal(r)
    return q * (d / np.abs(d))
