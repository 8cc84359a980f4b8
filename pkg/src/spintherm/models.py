"""Hamiltonians and reference states for the spin-chain examples.

Covers the non-interacting random-field chain, the interacting chain with
Ising couplings and a transverse field, Hamiltonians with a Haar-random
eigenbasis on an energy shell, product states, and Gibbs states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, ValidationError
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    PureState,
    Subspace,
    eig_hermitian,
    is_exactly_diagonal,
)
from .register import SpinRegister
from .rng import haar_unitary, make_rng


@dataclass(frozen=True)
class FieldConfiguration:
    """Local random fields h_i drawn uniformly from (-w, w)."""

    w: float
    fields: tuple
    seed: int

    def __post_init__(self):
        if self.w < 0:
            raise ValidationError("disorder width w must be >= 0")
        fields = tuple(float(h) for h in self.fields)
        if self.w == 0:
            if any(h != 0.0 for h in fields):
                raise ValidationError("w = 0 requires all fields zero")
        elif any(abs(h) >= self.w for h in fields):
            raise ValidationError("fields must satisfy |h_i| < w strictly")
        object.__setattr__(self, "fields", fields)

    @property
    def n_sites(self) -> int:
        return len(self.fields)


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the interacting chain: Ising J, transverse field gamma."""

    j: float
    gamma: float
    fields: FieldConfiguration

    def __post_init__(self):
        if not (np.isfinite(self.j) and np.isfinite(self.gamma)):
            raise ValidationError("couplings must be finite")


def sample_fields(n_sites: int, w: float, seed: int) -> FieldConfiguration:
    """Draw i.i.d. uniform(-w, w) fields; deterministic given the seed."""
    if w < 0:
        raise ValidationError("disorder width w must be >= 0")
    if w == 0:
        return FieldConfiguration(0.0, (0.0,) * n_sites, seed)
    rng = make_rng(seed)
    h = rng.uniform(-w, w, size=n_sites)
    # uniform() may return the lower endpoint; the invariant is strict
    while np.any(np.abs(h) >= w):
        bad = np.abs(h) >= w
        h[bad] = rng.uniform(-w, w, size=int(bad.sum()))
    return FieldConfiguration(w, tuple(h), seed)


def build_h2(register: SpinRegister, fields: FieldConfiguration) -> HermitianOperator:
    """Non-interacting chain sum_i h_i sigma_i^z (diagonal in the z basis)."""
    if fields.n_sites != register.n_sites:
        raise ValidationError(
            f"{fields.n_sites} fields for {register.n_sites} sites"
        )
    diag = np.zeros(register.dim)
    for i, h in enumerate(fields.fields):
        diag += h * register.z_signs(i)
    return HermitianOperator(np.diag(diag.astype(np.complex128)), register=register)


def h2_diagonal(register: SpinRegister, fields: FieldConfiguration) -> np.ndarray:
    """Diagonal of the non-interacting chain, without building the matrix."""
    diag = np.zeros(register.dim)
    for i, h in enumerate(fields.fields):
        diag += h * register.z_signs(i)
    return diag


def build_h5(
    register: SpinRegister, params: ModelParams, periodic: bool = False
) -> HermitianOperator:
    """Interacting chain sum_i (J z_i z_{i+1} + gamma x_i + h_i z_i).

    Open boundary by default (no wrap bond); set ``periodic`` for the wrap
    term. Reduces to the non-interacting chain when J = gamma = 0.
    """
    n = register.n_sites
    if n < 2:
        raise ValidationError("interacting chain needs n_sites >= 2")
    if params.fields.n_sites != n:
        raise ValidationError("field count must equal n_sites")
    d = register.dim
    zs = np.stack([register.z_signs(i) for i in range(n)])
    diag = np.zeros(d)
    for i, h in enumerate(params.fields.fields):
        diag += h * zs[i]
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic:
        bonds.append((n - 1, 0))
    for i, j in bonds:
        diag += params.j * zs[i] * zs[j]
    m = np.diag(diag.astype(np.complex128))
    if params.gamma != 0.0:
        b = np.arange(d)
        for i in range(n):
            flipped = b ^ (1 << register.bit_position(i))
            m[flipped, b] += params.gamma
    return HermitianOperator(m, register=register)


def build_random_basis_hamiltonian(
    shell: Subspace, spectrum, seed: int
) -> HermitianOperator:
    """Operator with the given spectrum and a Haar-random eigenbasis in the shell.

    Vanishes on the orthogonal complement. Distinct eigenvalues are required
    (degeneracies would break the exact time-averaging identities downstream).
    """
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.size != shell.dim:
        raise ValidationError(
            f"spectrum length {spectrum.size} != shell dim {shell.dim}"
        )
    if np.unique(spectrum).size != spectrum.size:
        raise DegenerateSpectrumError("spectrum must have pairwise distinct values")
    rng = make_rng(seed)
    u = haar_unitary(shell.dim, rng)
    v = shell.frame @ u
    m = (v * spectrum) @ v.conj().T
    m = 0.5 * (m + m.conj().T)
    return HermitianOperator(m)


def product_state(register: SpinRegister, single_site_states) -> PureState:
    """Tensor product of per-site two-component states (site 0 = slowest index)."""
    factors = [np.asarray(f, dtype=np.complex128).ravel() for f in single_site_states]
    if len(factors) != register.n_sites:
        raise ValidationError("need one factor per site")
    amps = np.ones(1, dtype=np.complex128)
    for f in factors:
        if f.size != 2:
            raise ValidationError("each factor must have two amplitudes")
        if abs(np.linalg.norm(f) - 1.0) > 1e-10:
            raise ValidationError("factors must be normalized")
        amps = np.kron(amps, f)
    return PureState(amps, register=register)


def plus_state(register: SpinRegister) -> PureState:
    """All spins along +x."""
    f = np.array([1.0, 1.0]) / np.sqrt(2.0)
    return product_state(register, [f] * register.n_sites)


def total_magnetization(register: SpinRegister, axis: str) -> HermitianOperator:
    """Sum of single-site Pauli operators over the whole chain."""
    d = register.dim
    if axis == "z":
        diag = np.zeros(d)
        for i in range(register.n_sites):
            diag += register.z_signs(i)
        return HermitianOperator(np.diag(diag.astype(np.complex128)), register=register)
    if axis == "x":
        m = np.zeros((d, d), dtype=np.complex128)
        b = np.arange(d)
        for i in range(register.n_sites):
            m[b ^ (1 << register.bit_position(i)), b] += 1.0
        return HermitianOperator(m, register=register)
    raise ValidationError(f"axis must be 'z' or 'x', got {axis!r}")


def build_gibbs(h: HermitianOperator, beta: float) -> DensityMatrix:
    """Gibbs state exp(-beta H)/Z via the spectral decomposition.

    The spectrum is shifted by its extreme value before exponentiating, so
    any finite beta is overflow-safe.
    """
    if not np.isfinite(beta):
        raise ValidationError("beta must be finite")
    entries = h.entries
    if is_exactly_diagonal(entries):
        x = -beta * np.real(np.diagonal(entries))
        x = x - np.max(x)
        p = np.exp(x)
        p /= p.sum()
        return DensityMatrix(np.diag(p.astype(np.complex128)), register=h.register)
    dec = eig_hermitian(h)
    x = -beta * dec.eigenvalues
    x = x - np.max(x)
    p = np.exp(x)
    p /= p.sum()
    m = (dec.eigenvectors * p) @ dec.eigenvectors.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(m, register=h.register)
