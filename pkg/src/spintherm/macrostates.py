"""Coarse-graining, commuting macro-observable families, and macro-spaces.

A commuting family of coarse-grained observables decomposes the Hilbert
space (or an energy shell inside it) into joint eigenspaces, the
macro-spaces. The sector carrying the dominant dimension of the shell is
the equilibrium macro-space; its dimension deficit defines epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyShellError,
    EquilibriumTieError,
    NonCommutingFamilyError,
    ShellLeakageError,
    ValidationError,
)
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    SpectralDecomposition,
    Subspace,
    hermiticity_defect,
)
from .register import SpinRegister

CLUSTER_TOL = 1e-8

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)


def _is_diagonal(m: np.ndarray) -> bool:
    return np.count_nonzero(m) == np.count_nonzero(np.diagonal(m))


def _basis_columns(frame: np.ndarray):
    """Support indices if every column is exactly a scaled basis vector, else None."""
    nonzero_per_col = (frame != 0).sum(axis=0)
    if np.any(nonzero_per_col != 1):
        return None
    return np.argmax(frame != 0, axis=0)


def _diagonal_blocks(family, shell, support):
    """Sector blocks when every observable is diagonal and the shell frame
    consists of computational basis vectors: group columns by value tuples."""
    per_obs = [np.real(np.diagonal(op.entries))[support] for _, op in family.observables]
    groups = {}
    for col, key in enumerate(zip(*per_obs)):
        groups.setdefault(tuple(float(v) for v in key), []).append(col)
    return [
        (shell.frame[:, cols], key) for key, cols in sorted(groups.items())
    ]


@dataclass(frozen=True)
class CoarseGrainSpec:
    """Resolution of a macro measurement; ties round half to even."""

    resolution: float
    tie_rule: str = "half-even"

    def __post_init__(self):
        if not (self.resolution > 0):
            raise ValidationError("resolution must be positive")
        if self.tie_rule != "half-even":
            raise ValidationError("only the half-even tie rule is supported")


def coarse_grain(value: float, spec: CoarseGrainSpec) -> float:
    """Snap to the nearest multiple of the resolution, ties to even.

    A tiny relative tolerance treats quotients within 1e-9 of a half-integer
    as exact ties, so decimal inputs like 0.15 / 0.1 land on the documented
    half-even branch despite binary rounding.
    """
    if not np.isfinite(value):
        raise ValidationError("value must be finite")
    q = value / spec.resolution
    k = math.floor(q)
    frac = q - k
    if abs(frac - 0.5) <= 1e-9 * max(1.0, abs(q)):
        n = k if k % 2 == 0 else k + 1
    else:
        n = k + (1 if frac > 0.5 else 0)
    return n * spec.resolution


@dataclass(frozen=True)
class MacroObservableFamily:
    """Labeled Hermitian observables that commute within tolerance."""

    observables: tuple  # of (label, HermitianOperator)
    commutator_tolerance: float = 1e-10

    def __post_init__(self):
        obs = tuple((str(lbl), op) for lbl, op in self.observables)
        if not obs:
            raise ValidationError("family must contain at least one observable")
        dims = {op.dim for _, op in obs}
        if len(dims) != 1:
            raise DimensionMismatchError("observables must share one dimension")
        diag = [_is_diagonal(op.entries) for _, op in obs]
        for i in range(len(obs)):
            for j in range(i + 1, len(obs)):
                if diag[i] and diag[j]:
                    continue  # diagonal matrices commute exactly
                a, b = obs[i][1].entries, obs[j][1].entries
                defect = float(np.max(np.abs(a @ b - b @ a)))
                if defect > self.commutator_tolerance:
                    raise NonCommutingFamilyError(
                        f"[{obs[i][0]}, {obs[j][0]}] max entry {defect} exceeds "
                        f"{self.commutator_tolerance}"
                    )
        object.__setattr__(self, "observables", obs)

    @property
    def dim(self) -> int:
        return self.observables[0][1].dim

    @property
    def labels(self) -> tuple:
        return tuple(lbl for lbl, _ in self.observables)


@dataclass(frozen=True)
class MacroDecomposition:
    """Joint eigensectors of a macro family, with an optional equilibrium pick."""

    family: MacroObservableFamily
    sectors: tuple  # of (value tuple, Subspace)
    shell: Subspace
    eq_index: int = None
    epsilon: float = None
    dominant: bool = None

    @property
    def ambient_dim(self) -> int:
        return self.shell.ambient_dim

    @property
    def shell_dim(self) -> int:
        return self.shell.dim

    @property
    def n_sectors(self) -> int:
        return len(self.sectors)

    def sector_dims(self) -> tuple:
        return tuple(sub.dim for _, sub in self.sectors)

    @property
    def equilibrium_subspace(self) -> Subspace:
        if self.eq_index is None:
            raise ValidationError("equilibrium sector not selected yet")
        return self.sectors[self.eq_index][1]

    def with_equilibrium(self, eq_index: int, dominance_threshold: float) -> "MacroDecomposition":
        eps = 1.0 - self.sectors[eq_index][1].dim / self.shell_dim
        return MacroDecomposition(
            family=self.family,
            sectors=self.sectors,
            shell=self.shell,
            eq_index=eq_index,
            epsilon=eps,
            dominant=bool(eps < dominance_threshold),
        )


def build_cell_magnetization(
    register: SpinRegister, axis: str, spec: CoarseGrainSpec
) -> MacroObservableFamily:
    """Coarse-grained magnetization of each cell along one axis.

    All observables of a family share the axis (single-axis families commute
    exactly); mixing axes within one family is rejected here and handled by
    the window-probability test instead.
    """
    if axis not in ("z", "x"):
        raise ValidationError(f"axis must be 'z' or 'x', got {axis!r}")
    d = register.dim
    obs = []
    for j, cell in enumerate(register.cells):
        raw = np.zeros(d)
        for site in cell:
            raw += register.z_signs(site)
        grained = np.array([coarse_grain(v, spec) for v in raw])
        m = np.diag(grained.astype(np.complex128))
        if axis == "x":
            w = np.ones((1, 1), dtype=np.complex128)
            for site in range(register.n_sites):
                w = np.kron(w, _HADAMARD if site in cell else np.eye(2))
            m = w @ m @ w.conj().T
            m = 0.5 * (m + m.conj().T)
        obs.append((f"cell{j}_m{axis}", HermitianOperator(m, register=register)))
    return MacroObservableFamily(tuple(obs))


def energy_shell(spec_dec: SpectralDecomposition, e: float, delta_e: float) -> Subspace:
    """Span of eigenvectors with eigenvalue in the window (e - delta_e, e]."""
    if not delta_e > 0:
        raise ValidationError("delta_e must be positive")
    w = spec_dec.eigenvalues
    mask = (w > e - delta_e) & (w <= e)
    if not np.any(mask):
        raise EmptyShellError(f"no eigenvalue in ({e - delta_e}, {e}]")
    return Subspace(spec_dec.eigenvectors[:, mask])


def microcanonical_state(shell: Subspace) -> DensityMatrix:
    """Normalized projection onto the shell."""
    return DensityMatrix(shell.projector() / shell.dim)


def symmetric_shell_edge(eigenvalues: np.ndarray, fraction: float) -> float:
    """Window half-width for a shell (-a, a] capturing about the given
    fraction of states, with a strictly between adjacent distinct |E| values.

    Placing the edge between magnitudes keeps the shell invariant under a
    spectrum sign flip (no eigenvalue sits exactly on the boundary), which
    the mid-spectrum experiments rely on.
    """
    mags = np.unique(np.abs(np.asarray(eigenvalues)))
    if mags.size < 2:
        raise ValidationError("need at least two distinct magnitudes")
    k = int(np.clip(round(fraction * mags.size), 1, mags.size - 1))
    return 0.5 * (mags[k - 1] + mags[k])


def joint_decomposition(
    family: MacroObservableFamily,
    within: Subspace = None,
    cluster_tol: float = CLUSTER_TOL,
) -> MacroDecomposition:
    """Simultaneous eigensectors of a commuting family, optionally inside a shell.

    Sectors are labeled by the tuple of clustered eigenvalues, one per
    observable, and refined observable by observable: each current block is
    diagonalized in the next observable's restriction and split at the
    clustering tolerance.
    """
    d = family.dim
    shell = within if within is not None else Subspace.full(d)
    if shell.ambient_dim != d:
        raise DimensionMismatchError("shell ambient does not match family")
    if within is not None:
        support = _basis_columns(shell.frame)
        diag_shell = support is not None
        proj = None
        for lbl, op in family.observables:
            if diag_shell and _is_diagonal(op.entries):
                continue  # diagonal observable vs basis-vector shell: exact
            if proj is None:
                proj = shell.projector()
            defect = float(np.max(np.abs(op.entries @ proj - proj @ op.entries)))
            if defect > max(cluster_tol, family.commutator_tolerance):
                raise ShellLeakageError(
                    f"{lbl} leaks across the shell (commutator {defect})"
                )

    support = _basis_columns(shell.frame)
    if support is not None and all(_is_diagonal(op.entries) for _, op in family.observables):
        # everything is diagonal in the computational basis: sectors are
        # spanned exactly by basis vectors, grouped by their value tuples
        blocks = _diagonal_blocks(family, shell, support)
    else:
        blocks = [(shell.frame, ())]
        for lbl, op in family.observables:
            refined = []
            for frame, values in blocks:
                a = frame.conj().T @ op.entries @ frame
                a = 0.5 * (a + a.conj().T)
                w, v = np.linalg.eigh(a)
                start = 0
                for i in range(1, w.size + 1):
                    if i == w.size or w[i] - w[i - 1] > cluster_tol:
                        cols = frame @ v[:, start:i]
                        val = float(np.mean(w[start:i]))
                        refined.append((cols, values + (val,)))
                        start = i
            blocks = refined

    blocks.sort(key=lambda b: b[1])
    sectors = tuple((values, Subspace(cols, trusted=True)) for cols, values in blocks)
    total = sum(sub.dim for _, sub in sectors)
    if total != shell.dim:
        raise ValidationError(
            f"sector dims sum to {total}, expected shell dim {shell.dim}"
        )
    return MacroDecomposition(family=family, sectors=sectors, shell=shell)


def find_equilibrium_macrostate(
    decomp: MacroDecomposition,
    rho_ref: DensityMatrix = None,
    dominance_threshold: float = 0.1,
    tie_tol: float = 1e-12,
) -> MacroDecomposition:
    """Select the sector maximizing tr(rho_ref P_nu) as the equilibrium one.

    With the default micro-canonical reference the score is just the sector
    dimension. A tie between two maximal sectors is raised, not broken: a
    genuine tie (e.g. coexisting phases) would corrupt every downstream
    diagnostic if silently resolved.
    """
    if decomp.n_sectors == 0:
        raise ValidationError("decomposition has no sectors")
    if rho_ref is None:
        scores = np.array([float(sub.dim) for _, sub in decomp.sectors])
    else:
        if rho_ref.dim != decomp.ambient_dim:
            raise DimensionMismatchError("rho_ref dimension mismatch")
        scores = np.array(
            [
                float(np.real(np.trace(sub.frame.conj().T @ rho_ref.entries @ sub.frame)))
                for _, sub in decomp.sectors
            ]
        )
    best = int(np.argmax(scores))
    ties = np.flatnonzero(scores >= scores[best] - tie_tol * max(1.0, abs(scores[best])))
    if ties.size > 1:
        raise EquilibriumTieError(
            f"sectors {ties.tolist()} tie for the dominant macro-space"
        )
    return decomp.with_equilibrium(best, dominance_threshold)


def reconstruct_observable(decomp: MacroDecomposition, which: int) -> np.ndarray:
    """Rebuild observable `which` as sum_nu nu_j P_nu (restricted to the shell)."""
    d = decomp.ambient_dim
    out = np.zeros((d, d), dtype=np.complex128)
    for values, sub in decomp.sectors:
        out += values[which] * sub.projector()
    return out


def hermitian_or_raise(m: np.ndarray) -> np.ndarray:
    if hermiticity_defect(m) > 1e-9:
        raise ValidationError("matrix drifted from Hermitian")
    return 0.5 * (m + m.conj().T)
