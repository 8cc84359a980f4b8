"""Spectral time evolution, exact infinite-time averages, time variance,
and resonance diagnostics.

Infinite-time averaging is implemented as the pinching over groups of equal
eigenvalues: the average of <psi_t|A|psi_t> equals the sum over groups of
<psi_g|A|psi_g> with psi_g the (unnormalized) projection of the initial
state onto each distinct-eigenvalue eigenspace. With all groups singletons
this reduces to sum_a |c_a|^2 <a|A|a>, so one code path serves both the
non-degenerate and the degenerate case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import (
    HermitianOperator,
    PureState,
    SpectralDecomposition,
    eig_hermitian,
)
from .register import SpinRegister

GAP_SCAN_MAX_DIM = 4096


@dataclass(frozen=True)
class EvolutionContext:
    """Eigen-decomposition plus the initial state's eigenbasis coefficients."""

    decomposition: SpectralDecomposition
    coefficients: np.ndarray
    group_slices: tuple  # (start, stop) pairs over the ascending spectrum
    group_energies: np.ndarray
    register: SpinRegister = None

    @property
    def dim(self) -> int:
        return self.coefficients.size

    @property
    def n_groups(self) -> int:
        return len(self.group_slices)

    def group_projections(self) -> np.ndarray:
        """(dim, n_groups) matrix of unnormalized group components psi_g."""
        v = self.decomposition.eigenvectors
        c = self.coefficients
        cols = [v[:, a:b] @ c[a:b] for a, b in self.group_slices]
        return np.stack(cols, axis=1)


def build_context(
    spec_dec: SpectralDecomposition,
    psi,
    degeneracy_tol: float = None,
) -> EvolutionContext:
    """Group eigenvalues at the degeneracy tolerance and project the state.

    The default tolerance is 1e-9 times the spectral range.
    """
    register = None
    if isinstance(psi, PureState):
        register = psi.register
        amps = psi.amplitudes
    else:
        amps = np.asarray(psi, dtype=np.complex128).ravel()
    w = spec_dec.eigenvalues
    if amps.size != w.size:
        raise ValidationError("state dimension must match the decomposition")
    c = spec_dec.eigenvectors.conj().T @ amps
    total = float(np.real(np.vdot(c, c)))
    if abs(total - 1.0) > 1e-10:
        raise ValidationError(f"coefficient norm {total} deviates from 1")
    spread = float(w[-1] - w[0]) if w.size > 1 else 0.0
    tol = 1e-9 * spread if degeneracy_tol is None else degeneracy_tol
    slices = []
    start = 0
    for i in range(1, w.size + 1):
        if i == w.size or w[i] - w[i - 1] > tol:
            slices.append((start, i))
            start = i
    energies = np.array([w[a:b].mean() for a, b in slices])
    return EvolutionContext(
        decomposition=spec_dec,
        coefficients=c,
        group_slices=tuple(slices),
        group_energies=energies,
        register=register,
    )


def evolve(ctx: EvolutionContext, t: float) -> PureState:
    """psi_t = sum_a exp(-i E_a t) c_a |a>."""
    phases = np.exp(-1j * ctx.decomposition.eigenvalues * t)
    amps = ctx.decomposition.eigenvectors @ (phases * ctx.coefficients)
    return PureState(amps, register=ctx.register)


def _permutation_columns(v: np.ndarray):
    """Row indices if v is exactly a permutation matrix (diagonal-Hamiltonian
    eigenvectors), else None."""
    if (v != 0).sum() != v.shape[1]:
        return None
    rows = np.argmax(v != 0, axis=0)
    if not np.all(v[rows, np.arange(v.shape[1])] == 1.0):
        return None
    return rows


def _tilde_and_weights(ctx: EvolutionContext, a: HermitianOperator):
    v = ctx.decomposition.eigenvectors
    perm = _permutation_columns(v)
    if perm is not None:
        return a.entries[np.ix_(perm, perm)]
    return v.conj().T @ a.entries @ v


def infinite_time_average(ctx: EvolutionContext, a: HermitianOperator) -> float:
    """Exact dephasing value of the long-time average of <psi_t|A|psi_t>.

    Equals the sum of within-group blocks of the coefficient-weighted
    eigenbasis matrix; with few groups the projection form is cheaper, so
    the implementation picks whichever contraction is smaller.
    """
    v = ctx.decomposition.eigenvectors
    d = ctx.dim
    if ctx.n_groups < d // 2 and _permutation_columns(v) is None:
        u = ctx.group_projections()
        b = a.entries @ u
        return float(np.real(np.sum(u.conj() * b)))
    tilde = _tilde_and_weights(ctx, a)
    c = ctx.coefficients
    gmat = np.conj(c)[:, None] * tilde * c[None, :]
    total = 0.0
    for start, stop in ctx.group_slices:
        total += float(np.real(np.sum(gmat[start:stop, start:stop])))
    return total


def _bohr_amplitudes(ctx: EvolutionContext, a: HermitianOperator):
    """Nonzero frequency-domain coefficients of <psi_t|A|psi_t>.

    Exact zeros (local observables of structured chains produce mostly-zero
    eigenbasis elements) are dropped, which is lossless.
    """
    tilde = _tilde_and_weights(ctx, a)
    c = ctx.coefficients
    g = (np.conj(c)[:, None] * tilde * c[None, :]).ravel()
    w = ctx.decomposition.eigenvalues
    omega = (w[:, None] - w[None, :]).ravel()
    mask = g != 0
    return g[mask], omega[mask]


def expectation_series(ctx: EvolutionContext, a: HermitianOperator, t_grid) -> np.ndarray:
    """<psi_t|A|psi_t> sampled on a time grid."""
    t_grid = np.asarray(t_grid, dtype=np.float64)
    g, omega = _bohr_amplitudes(ctx, a)
    out = np.empty(t_grid.size)
    step = max(1, int(2e6 // max(g.size, 1)))
    for i in range(0, t_grid.size, step):
        ts = t_grid[i : i + step]
        out[i : i + step] = np.real(np.exp(1j * np.outer(ts, omega)) @ g)
    return out


def finite_time_average(
    ctx: EvolutionContext,
    a: HermitianOperator,
    horizon: float,
    step: float = None,
) -> float:
    """Trapezoid time average of <psi_t|A|psi_t> over [0, horizon].

    The step defaults to 0.1 / max|E|. The trapezoid sum over the grid is a
    geometric series for each Bohr frequency, so it is evaluated in closed
    form per frequency rather than by looping over grid points; the result
    is exactly the trapezoid-rule value.
    """
    w = ctx.decomposition.eigenvalues
    wmax = float(np.max(np.abs(w)))
    if step is None:
        step = 0.1 / wmax if wmax > 0 else horizon / 100.0
    m = max(1, int(np.ceil(horizon / step)))
    h = horizon / m
    g, omega = _bohr_amplitudes(ctx, a)
    q = np.exp(1j * omega * h)
    qm = np.exp(1j * omega * horizon)
    near_one = np.abs(q - 1.0) < 1e-12
    geo = np.empty_like(q)
    geo[~near_one] = (qm[~near_one] - 1.0) / (q[~near_one] - 1.0)
    geo[near_one] = m
    kernel = (geo + 0.5 * (qm - 1.0)) / m
    return float(np.real(np.dot(g, kernel)))


@dataclass(frozen=True)
class GapScan:
    """Resonant gap quadruples (a, b, a', b') with E_a - E_b = E_a' - E_b'."""

    count: int
    quadruples: tuple
    tol: float

    @property
    def resonant(self) -> bool:
        return self.count > 0


def gap_degeneracy_scan(
    spec_dec_or_energies, tol: float = 1e-9, max_report: int = 1000
) -> GapScan:
    """Find all coinciding gaps among distinct-index pairs.

    The two identity patterns allowed by the non-resonance condition (the
    same pair twice, or two zero gaps from equal indices) never enter the
    enumeration; anything else equal within tol is a violation. Sorting the
    O(D^2) gap list keeps it at desk scale, guarded above dimension 4096.
    """
    if isinstance(spec_dec_or_energies, SpectralDecomposition):
        w = spec_dec_or_energies.eigenvalues
    else:
        w = np.asarray(spec_dec_or_energies, dtype=np.float64)
    d = w.size
    if d > GAP_SCAN_MAX_DIM:
        raise ValidationError(
            f"gap scan is quadratic in memory; dimension {d} exceeds {GAP_SCAN_MAX_DIM}"
        )
    ii, jj = np.nonzero(~np.eye(d, dtype=bool))
    gaps = w[ii] - w[jj]
    order = np.argsort(gaps, kind="stable")
    gaps = gaps[order]
    ii, jj = ii[order], jj[order]
    boundaries = [0]
    for k in range(1, gaps.size):
        if gaps[k] - gaps[k - 1] > tol:
            boundaries.append(k)
    boundaries.append(gaps.size)
    count = 0
    quads = []
    for b0, b1 in zip(boundaries[:-1], boundaries[1:]):
        s = b1 - b0
        if s < 2:
            continue
        count += s * (s - 1)
        if len(quads) < max_report:
            for x in range(b0, b1):
                for y in range(b0, b1):
                    if x != y and len(quads) < max_report:
                        quads.append(
                            (int(ii[x]), int(jj[x]), int(ii[y]), int(jj[y]))
                        )
    return GapScan(count=count, quadruples=tuple(quads), tol=tol)


@dataclass(frozen=True)
class TimeVariance:
    value: float
    method: str  # "dephasing" (exact formula) or "quadrature" (resonant fallback)

    @property
    def exact(self) -> bool:
        return self.method == "dephasing"


def time_variance(
    ctx: EvolutionContext,
    a: HermitianOperator,
    quad_horizon: float = None,
) -> TimeVariance:
    """Long-time variance of <psi_t|A|psi_t>.

    With non-degenerate gaps between eigenvalue groups this is exactly
    sum over distinct group pairs of |<psi_g|A|psi_g'>|^2 (the singleton
    case reads sum_{a != b} |c_a|^2 |A_ab|^2 |c_b|^2). If the group
    energies are gap-resonant, the exact formula does not apply and a
    finite-horizon quadrature estimate is returned, flagged by `method`.
    """
    scan = gap_degeneracy_scan(ctx.group_energies, tol=1e-9)
    if not scan.resonant:
        u = ctx.group_projections()
        m = u.conj().T @ a.entries @ u
        off = np.abs(m) ** 2
        np.fill_diagonal(off, 0.0)
        return TimeVariance(float(np.sum(off)), "dephasing")
    w = ctx.group_energies
    spread = float(w[-1] - w[0]) if w.size > 1 else 1.0
    if quad_horizon is None:
        quad_horizon = 2e3 / max(spread / max(w.size - 1, 1), 1e-12)
    t = np.linspace(0.0, quad_horizon, 4096)
    vals = expectation_series(ctx, a, t)
    mean = np.trapezoid(vals, t) / quad_horizon
    var = np.trapezoid((vals - mean) ** 2, t) / quad_horizon
    return TimeVariance(float(var), "quadrature")


@dataclass(frozen=True)
class MateAverageBound:
    average: float
    delta: float
    bound_holds: bool
    applicable: bool  # every participating eigenstate passes the weight test
    min_eigenstate_weight: float


def mate_eth_average_bound(ctx: EvolutionContext, p_eq, delta: float) -> MateAverageBound:
    """Long-time average of the equilibrium weight, with the 1 - delta bound.

    The bound is guaranteed only when every eigenstate carrying weight in
    the initial state is itself in equilibrium; otherwise the report is
    marked inapplicable instead of raising.
    """
    v = ctx.decomposition.eigenvectors
    f = p_eq.frame
    participating = np.flatnonzero(np.abs(ctx.coefficients) ** 2 > 1e-14)
    if participating.size:
        t = f.conj().T @ v[:, participating]
        weights = np.sum(np.abs(t) ** 2, axis=0)
        min_w = float(weights.min())
    else:
        min_w = 1.0
    applicable = bool(min_w > 1 - delta)
    u = ctx.group_projections()
    avg = float(np.sum(np.abs(f.conj().T @ u) ** 2))
    return MateAverageBound(
        average=avg,
        delta=delta,
        bound_holds=bool(avg >= 1 - delta - 1e-12),
        applicable=applicable,
        min_eigenstate_weight=min_w,
    )


@dataclass(frozen=True)
class RelaxationResult:
    times: np.ndarray
    values: np.ndarray
    long_time_average: float

    def to_csv(self, path=None, metadata: dict = None) -> str:
        lines = []
        for key, val in (metadata or {}).items():
            lines.append(f"# {key} = {val}")
        lines.append("t,value")
        for t, v in zip(self.times, self.values):
            lines.append(f"{t!r},{v!r}")
        lines.append(f"# long_time_average = {self.long_time_average!r}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text


def relaxation_experiment(
    h: HermitianOperator,
    psi0,
    observable: HermitianOperator,
    t_grid,
    spec_dec: SpectralDecomposition = None,
) -> RelaxationResult:
    """Expectation-value time series plus the exact infinite-time average."""
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if t_grid.size and np.any(np.diff(t_grid) < 0):
        raise ValidationError("time grid must be ascending")
    dec = spec_dec if spec_dec is not None else eig_hermitian(h)
    ctx = build_context(dec, psi0)
    vals = expectation_series(ctx, observable, t_grid)
    avg = infinite_time_average(ctx, observable)
    return RelaxationResult(times=t_grid, values=vals, long_time_average=avg)
