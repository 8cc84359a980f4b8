"""Equilibrium membership tests and whole-spectrum eigenstate scans.

A state can be probed for equilibrium in several inequivalent senses:

* weight on the dominant macro-space (macroscopic equilibrium),
* closeness of every small-region reduced density matrix to the
  micro-canonical one (microscopic equilibrium),
* per-observable window probabilities (the variant that tolerates
  non-commuting macro observables),
* sector weights proportional to sector dimensions (von Neumann normality),
* agreement of induced spectral distributions for an arbitrary observable
  set (equilibrium relative to a set of observables).

Scanning all shell eigenstates at once gives the two flavors of the
eigenstate-thermalization diagnostic.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionMismatchError, EmptySpectralWindowError, ValidationError
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    PureState,
    SpectralDecomposition,
    Subspace,
    eig_hermitian,
    frame_coefficients,
    trace_norm,
)
from .macrostates import MacroDecomposition, energy_shell, microcanonical_state
from .register import SpinRegister
from .rng import complex_normal, haar_isometry, make_rng

DEFAULT_DELTA = 0.05
DEFAULT_MITE_EPSILON = 0.1


def default_delta(epsilon: float = None) -> float:
    """sqrt(epsilon) when the dimension deficit is known, else 0.05."""
    if epsilon is not None and epsilon > 0:
        return float(np.sqrt(epsilon))
    return DEFAULT_DELTA


def equilibrium_weight(state, p_eq: Subspace) -> float:
    """tr(rho P_eq), computed through the frame."""
    if isinstance(state, PureState):
        if state.dim != p_eq.ambient_dim:
            raise DimensionMismatchError("state/subspace dimension mismatch")
        coeff = frame_coefficients(p_eq, state.amplitudes)
        return float(np.real(np.vdot(coeff, coeff)))
    if isinstance(state, DensityMatrix):
        if state.dim != p_eq.ambient_dim:
            raise DimensionMismatchError("state/subspace dimension mismatch")
        f = p_eq.frame
        return float(np.real(np.vdot(f.ravel(), (state.entries @ f).ravel())))
    raise TypeError("state must be a PureState or DensityMatrix")


@dataclass(frozen=True)
class MateVerdict:
    weight: float
    delta: float
    in_mate: bool


def mate_test(state, p_eq: Subspace, delta: float) -> MateVerdict:
    """Macroscopic equilibrium: weight on the dominant macro-space > 1 - delta."""
    if not 0 < delta < 1:
        raise ValidationError("delta must be in (0, 1)")
    w = equilibrium_weight(state, p_eq)
    if w < -1e-10 or w > 1 + 1e-10:
        raise ValidationError(f"weight {w} outside [0, 1]")
    return MateVerdict(weight=w, delta=delta, in_mate=bool(w > 1 - delta))


@dataclass(frozen=True)
class MateSweepResult:
    fraction: float
    bound: float
    n_samples: int
    delta: float
    epsilon: float
    slack: float

    @property
    def satisfied(self) -> bool:
        return self.fraction >= self.bound - self.slack


def mixed_state_mate_sweep(
    decomp: MacroDecomposition,
    spectrum_law,
    n_samples: int,
    seed: int,
    delta: float = None,
) -> MateSweepResult:
    """Fraction of random mixed states in macroscopic equilibrium.

    Density matrices are drawn with a Haar-random eigenbasis of the shell
    and the fixed eigenvalue list ``spectrum_law``; the expected fraction is
    at least 1 - epsilon/delta regardless of the eigenvalue law. Only the
    nonzero-law columns of the basis are ever generated.
    """
    if decomp.eq_index is None:
        raise ValidationError("decomposition needs the equilibrium sector selected")
    p = np.asarray(spectrum_law, dtype=np.float64)
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-10:
        raise ValidationError("spectrum law must be nonnegative and sum to 1")
    eps = decomp.epsilon
    delta = default_delta(eps) if delta is None else delta
    support = np.flatnonzero(p > 0)
    k = decomp.shell_dim
    if p.size != k:
        raise DimensionMismatchError("law length must equal shell dimension")
    t = decomp.equilibrium_subspace.frame.conj().T @ decomp.shell.frame
    rng = make_rng(seed)
    hits = 0
    for _ in range(n_samples):
        v = haar_isometry(k, support.size, rng)
        weights = np.sum(np.abs(t @ v) ** 2, axis=0)
        w = float(np.dot(p[support], weights))
        hits += w > 1 - delta
    n_eff = max(n_samples, 1)
    frac = hits / n_eff
    bound = max(0.0, 1 - eps / delta)
    slack = 3.0 * np.sqrt(max(bound * (1 - bound), 1e-12) / n_eff)
    return MateSweepResult(frac, bound, n_samples, delta, eps, slack)


@dataclass(frozen=True)
class MiteVerdict:
    per_region: tuple  # of (region tuple, trace-norm distance)
    epsilon: float
    in_mite: bool
    ell0: int = None

    @property
    def worst_distance(self) -> float:
        return max(d for _, d in self.per_region)


def _reduced_mc(shell: Subspace, register: SpinRegister, region: tuple) -> np.ndarray:
    """Reduced micro-canonical matrix tr_rest(P_shell / dim)."""
    if shell.dim == shell.ambient_dim:
        dk = 1 << len(region)
        return np.eye(dk, dtype=np.complex128) / dk
    batch = kernels.ptrace_state_batch(
        np.ascontiguousarray(shell.frame.T), register.n_sites, region
    )
    return batch.sum(axis=0) / shell.dim


def mite_test(
    state,
    shell: Subspace,
    regions,
    epsilon: float = DEFAULT_MITE_EPSILON,
    register: SpinRegister = None,
    ell0: int = None,
) -> MiteVerdict:
    """Microscopic equilibrium: every region's reduced state is close to
    the micro-canonical one in trace norm."""
    register = register or getattr(state, "register", None)
    if register is None:
        raise ValidationError("mite_test needs a register (from the state or explicit)")
    regions = [tuple(sorted(int(s) for s in r)) for r in regions]
    if any(len(r) == 0 for r in regions):
        raise ValidationError("regions must be nonempty")
    if any(r[-1] >= register.n_sites for r in regions):
        raise ValidationError("region exceeds register")
    rows = []
    for region in regions:
        if isinstance(state, PureState):
            red = kernels.ptrace_state(state.amplitudes, register.n_sites, region)
        else:
            red = kernels.ptrace_density(state.entries, register.n_sites, region)
        mc = _reduced_mc(shell, register, region)
        rows.append((region, trace_norm(red - mc)))
    return MiteVerdict(
        per_region=tuple(rows),
        epsilon=epsilon,
        in_mite=bool(all(d < epsilon for _, d in rows)),
        ell0=ell0,
    )


@dataclass(frozen=True)
class MiteMateConsistency:
    n_samples: int
    n_mite: int
    n_mate: int
    n_violations: int  # in MITE but not in MATE

    @property
    def consistent(self) -> bool:
        return self.n_violations == 0


def mite_implies_mate_check(
    samples,
    decomp: MacroDecomposition,
    regions,
    epsilon: float,
    delta: float,
    register: SpinRegister = None,
) -> MiteMateConsistency:
    """Count states that pass the microscopic test but fail the macroscopic one.

    Meaningful when the macro observables are coarse-grained sums over cells
    each contained in one of the tested regions; the expected count is zero.
    """
    if decomp.eq_index is None:
        raise ValidationError("decomposition needs the equilibrium sector selected")
    p_eq = decomp.equilibrium_subspace
    n_mite = n_mate = n_bad = n = 0
    for psi in samples:
        n += 1
        mv = mate_test(psi, p_eq, delta)
        it = mite_test(psi, decomp.shell, regions, epsilon, register=register)
        n_mite += it.in_mite
        n_mate += mv.in_mate
        n_bad += it.in_mite and not mv.in_mate
    return MiteMateConsistency(n, n_mite, n_mate, n_bad)


@dataclass(frozen=True)
class TmateVerdict:
    rows: tuple  # of (label, probability, thermal value, window half-width)
    delta: float
    in_tmate: bool


def tmate_windows(observables, rho_mc: DensityMatrix) -> tuple:
    """Spectral window subspaces around each observable's thermal value.

    Each entry of ``observables`` is (label, operator, window half-width);
    precompute once when testing many states against the same family.
    """
    out = []
    for i, entry in enumerate(observables):
        label, op, window = (
            entry if len(entry) == 3 else (f"m{i}", entry[0], entry[1])
        )
        if not isinstance(op, HermitianOperator):
            raise TypeError("observables must be HermitianOperator instances")
        dec = eig_hermitian(op)
        vj = float(np.real(np.trace(rho_mc.entries @ op.entries)))
        mask = np.abs(dec.eigenvalues - vj) <= window
        if not np.any(mask):
            raise EmptySpectralWindowError(
                f"{label}: no eigenvalue within {window} of thermal value {vj}"
            )
        frame = Subspace(dec.eigenvectors[:, mask], trusted=True)
        out.append((str(label), frame, vj, float(window)))
    return tuple(out)


def tmate_test(
    state,
    observables,
    rho_mc: DensityMatrix,
    delta: float,
    windows: tuple = None,
) -> TmateVerdict:
    """Window-probability equilibrium for possibly non-commuting observables.

    For each observable the spectral projection onto eigenvalues within
    +-window of its micro-canonical mean must carry probability > 1 - delta.
    """
    if windows is None:
        windows = tmate_windows(observables, rho_mc)
    rows = []
    for label, frame, vj, window in windows:
        prob = equilibrium_weight(state, frame)
        rows.append((label, prob, vj, window))
    return TmateVerdict(
        rows=tuple(rows),
        delta=delta,
        in_tmate=bool(all(p > 1 - delta for _, p, _, _ in rows)),
    )


@dataclass(frozen=True)
class NormalityResult:
    ratios: tuple  # of (sector values, ratio)
    band: tuple
    is_normal: bool


def normality_test(psi, decomp: MacroDecomposition, band=(0.99, 1.01)) -> NormalityResult:
    """Sector weights against sector dimension fractions.

    ratio_nu = ||P_nu psi||^2 * dim(shell) / dim(sector); the verdict
    requires every ratio inside the band.
    """
    lo, hi = band
    if not lo < hi:
        raise ValidationError("band must be an increasing pair")
    amps = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi)
    rows = []
    for values, sub in decomp.sectors:
        if sub.dim == 0:
            raise ValidationError("zero-dimensional sector")
        coeff = frame_coefficients(sub, amps)
        weight = float(np.real(np.vdot(coeff, coeff)))
        rows.append((values, weight * decomp.shell_dim / sub.dim))
    return NormalityResult(
        ratios=tuple(rows),
        band=(float(lo), float(hi)),
        is_normal=bool(all(lo < r < hi for _, r in rows)),
    )


@dataclass(frozen=True)
class RelativeEquilibriumResult:
    rows: tuple  # of (label, total-variation distance)
    tolerance: float
    in_equilibrium: bool


def relative_equilibrium_test(
    state,
    observable_set,
    rho_mc: DensityMatrix,
    tv_tolerance: float,
    cluster_tol: float = 1e-8,
) -> RelativeEquilibriumResult:
    """Equilibrium relative to an observable set.

    For each observable, the eigenvalue distribution induced by the state is
    compared in total variation to the one induced by the micro-canonical
    matrix; eigenvalues within ``cluster_tol`` count as one outcome.
    """
    rows = []
    for i, entry in enumerate(observable_set):
        label, op = entry if isinstance(entry, tuple) else (f"a{i}", entry)
        dec = eig_hermitian(op)
        w = dec.eigenvalues
        boundaries = [0]
        for j in range(1, w.size):
            if w[j] - w[j - 1] > cluster_tol:
                boundaries.append(j)
        boundaries.append(w.size)
        tv = 0.0
        for b0, b1 in zip(boundaries[:-1], boundaries[1:]):
            frame = dec.eigenvectors[:, b0:b1]
            sub = Subspace(frame)
            p = equilibrium_weight(state, sub)
            q = equilibrium_weight(rho_mc, sub)
            tv += abs(p - q)
        rows.append((str(label), 0.5 * tv))
    return RelativeEquilibriumResult(
        rows=tuple(rows),
        tolerance=tv_tolerance,
        in_equilibrium=bool(all(t <= tv_tolerance for _, t in rows)),
    )


@dataclass(frozen=True)
class EthScanReport:
    rows: tuple  # of (index, energy, mate weight, worst mite distance, alignment)
    epsilon: float
    delta: float
    mite_epsilon: float
    mate_fraction: float
    mite_fraction: float
    mate_eth: bool
    mite_eth: bool
    n_mixed: int
    remark2_bound: float

    @property
    def remark2_ok(self) -> bool:
        return self.mate_fraction >= self.remark2_bound - 1e-12

    def alignment_classes(self) -> set:
        return {row[4] for row in self.rows}

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("index,energy,mate_weight,worst_mite_distance,alignment\n")
        for idx, e, w, dist, cls in self.rows:
            buf.write(f"{idx},{e!r},{w!r},{dist!r},{cls}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text


def _alignment(weight: float, delta: float) -> str:
    if weight >= 1 - delta:
        return "in-eq"
    if weight <= delta:
        return "orthogonal"
    return "mixed"


def eth_scan(
    h: HermitianOperator,
    shell_params,
    decomp: MacroDecomposition,
    regions,
    epsilon: float,
    delta: float,
    spec_dec: SpectralDecomposition = None,
) -> EthScanReport:
    """Classify every shell eigenstate by equilibrium weight and worst
    region distance.

    ``shell_params`` is the (energy, width) pair of the eigenvalue window;
    ``decomp`` must have its equilibrium sector selected and live on the
    same shell. ``epsilon``/``delta`` are the microscopic distance cap and
    the weight tolerance.
    """
    if decomp.eq_index is None:
        raise ValidationError("decomposition needs the equilibrium sector selected")
    dec = spec_dec if spec_dec is not None else eig_hermitian(h)
    e, delta_e = shell_params
    shell = energy_shell(dec, e, delta_e)
    if shell.dim != decomp.shell_dim:
        raise DimensionMismatchError(
            f"decomposition shell dim {decomp.shell_dim} != scan shell {shell.dim}"
        )
    mask = (dec.eigenvalues > e - delta_e) & (dec.eigenvalues <= e)
    indices = np.flatnonzero(mask)
    energies = dec.eigenvalues[indices]
    frame = dec.eigenvectors[:, indices]

    t = decomp.equilibrium_subspace.frame.conj().T @ frame
    weights = np.sum(np.abs(t) ** 2, axis=0)

    register = h.register
    regions = [tuple(sorted(int(s) for s in r)) for r in regions]
    worst = np.zeros(frame.shape[1])
    if regions:
        if register is None:
            raise ValidationError("region scan needs a register-backed Hamiltonian")
        states = np.ascontiguousarray(frame.T)
        for region in regions:
            reduced = kernels.ptrace_state_batch(states, register.n_sites, region)
            mc = reduced.sum(axis=0) / shell.dim if shell.dim != shell.ambient_dim \
                else np.eye(1 << len(region), dtype=np.complex128) / (1 << len(region))
            diffs = reduced - mc
            eig = np.linalg.eigvalsh(0.5 * (diffs + diffs.conj().transpose(0, 2, 1)))
            worst = np.maximum(worst, np.sum(np.abs(eig), axis=1))

    rows = tuple(
        (int(idx), float(en), float(w), float(dist), _alignment(w, delta))
        for idx, en, w, dist in zip(indices, energies, weights, worst)
    )
    n = len(rows)
    mate_frac = sum(1 for r in rows if r[2] > 1 - delta) / n
    mite_frac = sum(1 for r in rows if r[3] < epsilon) / n
    return EthScanReport(
        rows=rows,
        epsilon=decomp.epsilon,
        delta=delta,
        mite_epsilon=epsilon,
        mate_fraction=mate_frac,
        mite_fraction=mite_frac,
        mate_eth=bool(mate_frac == 1.0),
        mite_eth=bool(mite_frac == 1.0),
        n_mixed=sum(1 for r in rows if r[4] == "mixed"),
        remark2_bound=max(0.0, 1 - decomp.epsilon / delta),
    )


@dataclass(frozen=True)
class OffdiagReport:
    max_offdiag: float
    hist_counts: tuple
    hist_edges: tuple
    n_elements: int


def offdiag_eth_scan(
    spec_dec: SpectralDecomposition,
    a: HermitianOperator,
    shell: Subspace,
    bins: int = 32,
) -> OffdiagReport:
    """Magnitudes of the observable's off-diagonal eigenbasis elements in
    the shell."""
    f = shell.frame
    tilde = f.conj().T @ a.entries @ f
    k = tilde.shape[0]
    off = np.abs(tilde[~np.eye(k, dtype=bool)])
    if off.size == 0:
        return OffdiagReport(0.0, (), (), 0)
    counts, edges = np.histogram(off, bins=bins)
    return OffdiagReport(
        max_offdiag=float(off.max()),
        hist_counts=tuple(int(c) for c in counts),
        hist_edges=tuple(float(e) for e in edges),
        n_elements=int(off.size),
    )


def basis_mate_fraction(basis: np.ndarray, p_eq: Subspace, delta: float) -> float:
    """Fraction of orthonormal basis columns with equilibrium weight > 1 - delta."""
    t = p_eq.frame.conj().T @ basis
    weights = np.sum(np.abs(t) ** 2, axis=0)
    return float(np.mean(weights > 1 - delta))


def sample_shell_states(shell: Subspace, n: int, seed: int) -> np.ndarray:
    """(n, ambient) array of uniform random shell states (row vectors)."""
    rng = make_rng(seed)
    z = complex_normal(rng, (n, shell.dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z @ shell.frame.T


def micro_state(shell: Subspace) -> DensityMatrix:
    return microcanonical_state(shell)
