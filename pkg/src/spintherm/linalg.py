"""Dense complex linear algebra over bit-indexed spin Hilbert spaces.

Carriers (pure states, Hermitian operators, density matrices, orthonormal
frames, spectral decompositions) validate their structural invariants on
construction and are immutable afterwards, so they are safe to share across
concurrent tasks. All operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatchError, ValidationError
from .register import SpinRegister

TOL_HERMITIAN = 1e-10
TOL_NORM = 1e-10
TOL_TRACE = 1e-10
TOL_EIG_FLOOR = -1e-8
TOL_FRAME = 1e-8
TOL_RECONSTRUCT = 1e-8

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, order="C")
    a.flags.writeable = False
    return a


def is_exactly_diagonal(m: np.ndarray) -> bool:
    return np.count_nonzero(m) == np.count_nonzero(np.diagonal(m))


def hermiticity_defect(a: np.ndarray) -> float:
    if not a.size:
        return 0.0
    diag = np.diagonal(a)
    if np.count_nonzero(a) == np.count_nonzero(diag):  # diagonal matrix
        return 2.0 * float(np.max(np.abs(np.imag(diag)))) if diag.size else 0.0
    return float(np.max(np.abs(a - a.conj().T)))


@dataclass(frozen=True)
class PureState:
    """Normalized state vector, optionally tied to a spin register."""

    amplitudes: np.ndarray
    register: SpinRegister = None

    def __post_init__(self):
        amps = _freeze(np.asarray(self.amplitudes).ravel())
        if self.register is not None and amps.size != self.register.dim:
            raise DimensionMismatchError(
                f"state dim {amps.size} != register dim {self.register.dim}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > TOL_NORM:
            raise ValidationError(f"state norm {norm} deviates from 1 beyond {TOL_NORM}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density_matrix(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()), register=self.register)


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix, optionally tied to a spin register."""

    entries: np.ndarray
    register: SpinRegister = None

    def __post_init__(self):
        m = _freeze(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"operator must be square, got shape {m.shape}")
        if self.register is not None and m.shape[0] != self.register.dim:
            raise DimensionMismatchError(
                f"operator dim {m.shape[0]} != register dim {self.register.dim}"
            )
        defect = hermiticity_defect(m)
        if defect > TOL_HERMITIAN * max(1.0, float(np.max(np.abs(m)))):
            raise ValidationError(f"Hermiticity defect {defect} too large")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """Positive unit-trace Hermitian matrix; register optional."""

    entries: np.ndarray
    register: SpinRegister = None

    def __post_init__(self):
        m = _freeze(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got {m.shape}")
        if self.register is not None and m.shape[0] != self.register.dim:
            raise DimensionMismatchError(
                f"density dim {m.shape[0]} != register dim {self.register.dim}"
            )
        defect = hermiticity_defect(m)
        if defect > TOL_HERMITIAN * max(1.0, float(np.max(np.abs(m)))):
            raise ValidationError(f"Hermiticity defect {defect} too large")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TOL_TRACE * max(1.0, abs(tr)):
            raise ValidationError(f"trace {tr} deviates from 1")
        if is_exactly_diagonal(m):
            wmin = float(np.min(np.real(np.diagonal(m))))
        else:
            wmin = float(np.linalg.eigvalsh(m)[0])
        if wmin < TOL_EIG_FLOOR:
            raise ValidationError(f"smallest eigenvalue {wmin} below {TOL_EIG_FLOOR}")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def purity(self) -> float:
        return float(np.real(np.vdot(self.entries, self.entries)))


@dataclass(frozen=True)
class Subspace:
    """Orthonormal frame identifying a subspace of an ambient space.

    Construction verifies the Gram identity. Internal constructors that
    assemble frames from already-unitary factors (eigenvector columns,
    identity slices) pass ``trusted=True`` to skip the quadratic-cost
    re-verification; the invariant itself is exercised by the test suite.
    """

    frame: np.ndarray
    ambient_dim: int = None
    trusted: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        f = np.asarray(self.frame, dtype=np.complex128)
        if f.ndim == 1:
            f = f[:, None]
        f = _freeze(f)
        if f.shape[1] < 1:
            raise ValidationError("subspace must have dimension >= 1")
        amb = self.ambient_dim if self.ambient_dim is not None else f.shape[0]
        if amb != f.shape[0]:
            raise DimensionMismatchError(
                f"frame rows {f.shape[0]} != ambient dim {amb}"
            )
        if not self.trusted:
            gram = f.conj().T @ f
            defect = float(np.max(np.abs(gram - np.eye(f.shape[1]))))
            if defect > TOL_FRAME:
                raise ValidationError(f"frame not orthonormal, defect {defect}")
        object.__setattr__(self, "frame", f)
        object.__setattr__(self, "ambient_dim", amb)

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T

    @staticmethod
    def full(dim: int) -> "Subspace":
        return Subspace(np.eye(dim, dtype=np.complex128), trusted=True)


#: Full unitarity / reconstruction checks are cubic; above this dimension
#: they run on a random column sample instead (these invariants are checked
#: in full at reviewable sizes by the test suite).
FULL_CHECK_DIM = 1024


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and unitary eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        w = np.array(self.eigenvalues, dtype=np.float64)
        v = _freeze(self.eigenvectors)
        w.flags.writeable = False
        if np.any(np.diff(w) < 0):
            raise ValidationError("eigenvalues must be ascending")
        if v.shape != (w.size, w.size):
            raise DimensionMismatchError("eigenvector matrix shape mismatch")
        d = w.size
        if d <= FULL_CHECK_DIM:
            cols = v
            eye = np.eye(d)
        else:
            idx = np.linspace(0, d - 1, 256).astype(int)
            cols = v[:, idx]
            eye = np.eye(idx.size)
        defect = float(np.max(np.abs(cols.conj().T @ cols - eye)))
        if defect > TOL_FRAME:
            raise ValidationError(f"eigenvectors not unitary, defect {defect}")
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", v)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


def embed_site_operator(register: SpinRegister, site: int, local: np.ndarray) -> HermitianOperator:
    """Operator acting as ``local`` on one site and identity elsewhere.

    Follows the global bit convention: site 0 is the most significant bit,
    so the result equals ``kron(I_{2^site}, local, I_{2^{n-1-site}})``,
    built by bit-indexed scatter rather than Kronecker products.
    """
    if not 0 <= site < register.n_sites:
        raise ValidationError(f"site {site} out of range")
    local = np.asarray(local, dtype=np.complex128)
    if local.shape != (2, 2):
        raise ValidationError("local operator must be 2x2")
    if hermiticity_defect(local) > TOL_HERMITIAN:
        raise ValidationError("local operator must be Hermitian")
    d = register.dim
    mask = 1 << register.bit_position(site)
    b = np.arange(d)
    m = np.zeros((d, d), dtype=np.complex128)
    for s_in in (0, 1):
        cols = b[((b & mask) != 0) == bool(s_in)]
        for s_out in (0, 1):
            if local[s_out, s_in] != 0:
                rows = (cols & ~mask) | (mask if s_out else 0)
                m[rows, cols] = local[s_out, s_in]
    return HermitianOperator(m, register=register)


def _keep_tuple(register: SpinRegister, keep) -> tuple:
    keep = tuple(sorted(set(int(s) for s in keep)))
    if len(keep) == 0:
        raise ValidationError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= register.n_sites:
        raise ValidationError(f"keep sites {keep} exceed register")
    return keep


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Trace out the complement of ``keep``; preserves trace and positivity.

    The reduced matrix lives on a fresh register of ``len(keep)`` sites,
    relabeled 0..k-1 in ascending original order, so nested partial traces
    compose naturally.
    """
    if rho.register is None:
        raise ValidationError("partial_trace needs a register-backed density matrix")
    keep = _keep_tuple(rho.register, keep)
    reduced = kernels.ptrace_density(rho.entries, rho.register.n_sites, keep)
    reduced = 0.5 * (reduced + reduced.conj().T)
    return DensityMatrix(reduced, register=rho.register.subregister(keep))


def partial_trace_state(psi: PureState, keep) -> DensityMatrix:
    """Reduced density matrix of a pure state (fast path, same contract)."""
    if psi.register is None:
        raise ValidationError("partial_trace_state needs a register-backed state")
    keep = _keep_tuple(psi.register, keep)
    reduced = kernels.ptrace_state(psi.amplitudes, psi.register.n_sites, keep)
    reduced = 0.5 * (reduced + reduced.conj().T)
    return DensityMatrix(reduced, register=psi.register.subregister(keep))


def trace_norm(m: np.ndarray) -> float:
    """Trace norm (sum of singular values); for Hermitian input, sum |eig|."""
    if hermiticity_defect(m) <= 1e-12 * max(1.0, float(np.max(np.abs(m))) if m.size else 1.0):
        return float(np.sum(np.abs(np.linalg.eigvalsh(m))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def trace_norm_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Trace-norm distance between two density matrices (in [0, 2])."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dims {a.dim} != {b.dim}")
    return trace_norm(a.entries - b.entries)


def eig_hermitian(h: HermitianOperator) -> SpectralDecomposition:
    """Hermitian eigendecomposition with ascending eigenvalues.

    Exactly diagonal input (all off-diagonal entries zero, which holds for
    the non-interacting chain) short-circuits to a sort: the eigenvectors
    are then exact basis vectors rather than eigh output.
    """
    m = h.entries
    d = m.shape[0]
    if is_exactly_diagonal(m):
        w = np.real(np.diagonal(m)).astype(np.float64)
        order = np.argsort(w, kind="stable")
        v = np.zeros((d, d), dtype=np.complex128)
        v[order, np.arange(d)] = 1.0
        return SpectralDecomposition(w[order], v)
    w, v = np.linalg.eigh(m)
    dec = SpectralDecomposition(w, v)
    scale = max(float(np.max(np.abs(m))), 1e-300)
    if d <= FULL_CHECK_DIM:
        err = float(np.max(np.abs(dec.reconstruct() - m)))
    else:
        idx = np.linspace(0, d - 1, 256).astype(int)
        err = float(np.max(np.abs(m @ v[:, idx] - v[:, idx] * w[idx])))
    if err > TOL_RECONSTRUCT * scale:
        raise ValidationError(f"eigendecomposition residual {err} too large")
    return dec


def project_onto(subspace: Subspace, psi) -> tuple:
    """Project a state onto a subspace; returns (component, weight).

    weight = ||F^dagger psi||^2 in [0, 1]; component = F (F^dagger psi).
    """
    amps = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi)
    if amps.size != subspace.ambient_dim:
        raise DimensionMismatchError(
            f"state dim {amps.size} != ambient {subspace.ambient_dim}"
        )
    coeff = frame_coefficients(subspace, amps)
    weight = float(np.real(np.vdot(coeff, coeff)))
    component = subspace.frame @ coeff
    return component, weight


def frame_coefficients(subspace: Subspace, amps: np.ndarray) -> np.ndarray:
    """F^dagger psi without materializing a conjugated copy of the frame."""
    return np.conj(np.conj(amps) @ subspace.frame)
