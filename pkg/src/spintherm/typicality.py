"""Random-state machinery: uniform and Scrooge-measure sampling, moment
identities, concentration checks, abstract subsystems, and ensemble
equivalence.

All samplers are stateless given (seed, stream); Monte Carlo loops chunk
their work so nothing materializes more than a few hundred megabytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from . import kernels
from .errors import DimensionMismatchError, ValidationError
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    PureState,
    Subspace,
    eig_hermitian,
    trace_norm,
)
from .macrostates import energy_shell
from .models import build_gibbs
from .register import SpinRegister
from .rng import complex_normal, haar_unitary, make_rng

PSW_CONSTANT = 18 * np.pi**3


def sample_uniform(subspace: Subspace, seed: int, register: SpinRegister = None) -> PureState:
    """One state drawn from the uniform (surface) measure on the subspace sphere."""
    rng = make_rng(seed)
    z = complex_normal(rng, subspace.dim)
    z /= np.linalg.norm(z)
    return PureState(subspace.frame @ z, register=register)


def _uniform_coeffs(dim: int, n: int, rng) -> np.ndarray:
    z = complex_normal(rng, (n, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass(frozen=True)
class MomentReport:
    dim: int
    n_samples: int
    first: np.ndarray        # E c_a
    second: np.ndarray       # E c_a* c_b
    third: np.ndarray        # E c_a |c_b|^2
    fourth: np.ndarray       # E |c_a|^2 |c_b|^2
    first_se: np.ndarray
    second_se: np.ndarray
    third_se: np.ndarray
    fourth_se: np.ndarray

    def second_expected(self) -> np.ndarray:
        return np.eye(self.dim) / self.dim

    def fourth_expected(self) -> np.ndarray:
        d = self.dim
        return (1.0 + np.eye(d)) / (d * (d + 1))

    def max_sigmas(self) -> dict:
        """Worst deviation from the exact moments, in standard errors."""
        out = {}
        out["first"] = float(np.max(np.abs(self.first) / self.first_se))
        out["second"] = float(
            np.max(np.abs(self.second - self.second_expected()) / self.second_se)
        )
        out["third"] = float(np.max(np.abs(self.third) / self.third_se))
        out["fourth"] = float(
            np.max(np.abs(self.fourth - self.fourth_expected()) / self.fourth_se)
        )
        return out


def moment_check(
    subspace: Subspace, n_samples: int, seed: int, chunk: int = 4096
) -> MomentReport:
    """Empirical low moments of uniform-sphere coefficients with standard errors.

    The exact values: first and third moments vanish, second moments are
    delta_ab / d, and the only non-vanishing fourth moments are
    (1 + delta_ab) / (d (d+1)).
    """
    if n_samples < 1000:
        raise ValidationError("need at least 1000 samples for stable moments")
    d = subspace.dim
    rng = make_rng(seed)
    s1 = np.zeros(d, dtype=np.complex128)
    s1sq = np.zeros(d)
    s2 = np.zeros((d, d), dtype=np.complex128)
    s2sq = np.zeros((d, d))
    s3 = np.zeros((d, d), dtype=np.complex128)
    s3sq = np.zeros((d, d))
    s4 = np.zeros((d, d))
    s4sq = np.zeros((d, d))
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        z = _uniform_coeffs(d, m, rng)
        p = np.abs(z) ** 2
        s1 += z.sum(axis=0)
        s1sq += (np.abs(z) ** 2).sum(axis=0)
        x2 = np.einsum("sa,sb->ab", z.conj(), z)
        s2 += x2
        s2sq += np.einsum("sa,sb->ab", p, p)
        x3 = np.einsum("sa,sb->ab", z, p)
        s3 += x3
        s3sq += np.einsum("sa,sb->ab", p, p * p)
        s4 += np.einsum("sa,sb->ab", p, p)
        s4sq += np.einsum("sa,sb->ab", p * p, p * p)
        done += m

    n = float(n_samples)

    def _se(sum_sq, mean_abs2):
        var = np.maximum(sum_sq / n - mean_abs2, 1e-300)
        return np.sqrt(var / n)

    first = s1 / n
    second = s2 / n
    third = s3 / n
    fourth = s4 / n
    return MomentReport(
        dim=d,
        n_samples=n_samples,
        first=first,
        second=second,
        third=third,
        fourth=fourth,
        first_se=_se(s1sq, np.abs(first) ** 2),
        second_se=_se(s2sq, np.abs(second) ** 2),
        third_se=_se(s3sq, np.abs(third) ** 2),
        fourth_se=_se(s4sq, fourth**2),
    )


def observable_fluctuation(a: np.ndarray, rho: np.ndarray) -> float:
    """tr(A* A rho) - |tr(A rho)|^2, the fluctuation functional in the
    variance bound."""
    mean = np.trace(a @ rho)
    return float(np.real(np.trace(a.conj().T @ a @ rho)) - abs(mean) ** 2)


@dataclass(frozen=True)
class VarianceBoundResult:
    empirical_mean: float
    expected_mean: float
    empirical_variance: float
    bound: float
    n_samples: int
    slack: float

    @property
    def satisfied(self) -> bool:
        return self.empirical_variance <= self.bound * (1 + self.slack) + 1e-15


def variance_bound_check(
    a: HermitianOperator,
    subspace: Subspace,
    n_samples: int,
    seed: int,
    slack: float = 0.2,
    chunk: int = 4096,
) -> VarianceBoundResult:
    """Empirical variance of <psi|A|psi> over uniform subspace states against
    the fluctuation bound V_A(rho_R) / (d_R + 1)."""
    if a.dim != subspace.ambient_dim:
        raise DimensionMismatchError("observable/subspace dimension mismatch")
    f = subspace.frame
    k = subspace.dim
    tilde = f.conj().T @ a.entries @ f
    rho_r = (f @ f.conj().T) / k
    expected = float(np.real(np.trace(a.entries @ rho_r)))
    bound = observable_fluctuation(a.entries, rho_r) / (k + 1)
    rng = make_rng(seed)
    s = ss = 0.0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        z = _uniform_coeffs(k, m, rng)
        vals = np.real(np.einsum("sa,ab,sb->s", z.conj(), tilde, z))
        s += vals.sum()
        ss += (vals**2).sum()
        done += m
    mean = s / n_samples
    var = max(ss / n_samples - mean**2, 0.0)
    return VarianceBoundResult(mean, expected, var, bound, n_samples, slack)


@dataclass(frozen=True)
class Bipartition:
    """Factorization of an ambient space into dims (d1, d2), optionally
    conjugated by a unitary rotation (an abstract subsystem)."""

    d1: int
    d2: int
    rotation: np.ndarray = None
    site_based: bool = False

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise ValidationError("factor dimensions must be positive")
        if self.rotation is not None:
            u = np.asarray(self.rotation, dtype=np.complex128)
            if u.shape != (self.dim, self.dim):
                raise DimensionMismatchError("rotation shape mismatch")
            defect = float(np.max(np.abs(u.conj().T @ u - np.eye(self.dim))))
            if defect > 1e-8:
                raise ValidationError(f"rotation not unitary, defect {defect}")
            u = np.array(u, order="C")
            u.flags.writeable = False
            object.__setattr__(self, "rotation", u)

    @property
    def dim(self) -> int:
        return self.d1 * self.d2


def abstract_bipartition(ambient_dim: int, d1: int, rotation_seed: int = None) -> Bipartition:
    """Canonical index split of the ambient space, optionally Haar-rotated.

    Without a rotation seed, a power-of-two d1 corresponds to keeping the
    leading sites of a spin register (site 0 is the most significant bit, so
    the row-major reshape (d1, d2) keeps exactly those sites).
    """
    if ambient_dim % d1 != 0:
        raise ValidationError(f"{d1} does not divide ambient dim {ambient_dim}")
    d2 = ambient_dim // d1
    if rotation_seed is None:
        site_based = d1 & (d1 - 1) == 0
        return Bipartition(d1, d2, rotation=None, site_based=site_based)
    u = haar_unitary(ambient_dim, make_rng(rotation_seed))
    return Bipartition(d1, d2, rotation=u, site_based=False)


def reduced_state(psi: np.ndarray, part: Bipartition) -> np.ndarray:
    """First-factor reduced density matrix of an ambient state vector.

    With a rotation U the state is expressed in the rotated product basis
    first: rho_1 = tr_2 of (U^dagger psi)(U^dagger psi)^dagger.
    """
    psi = np.asarray(psi).ravel()
    if psi.size != part.dim:
        raise DimensionMismatchError("state/bipartition dimension mismatch")
    if part.rotation is not None:
        psi = part.rotation.conj().T @ psi
    m = psi.reshape(part.d1, part.d2)
    return m @ m.conj().T


def reduced_density(rho: np.ndarray, part: Bipartition) -> np.ndarray:
    """Same contraction for a density matrix."""
    if rho.shape != (part.dim, part.dim):
        raise DimensionMismatchError("density/bipartition dimension mismatch")
    if part.rotation is not None:
        u = part.rotation
        rho = u.conj().T @ rho @ u
    g = rho.reshape(part.d1, part.d2, part.d1, part.d2)
    return np.einsum("arbr->ab", g)


@dataclass(frozen=True)
class PswResult:
    violation_rate: float
    bound: float
    threshold: float
    n_samples: int

    @property
    def slack(self) -> float:
        p = min(max(self.bound, 1e-12), 1.0)
        return 3.0 * np.sqrt(p * (1 - p) / self.n_samples)

    @property
    def satisfied(self) -> bool:
        return self.violation_rate <= min(self.bound, 1.0) + self.slack


def psw_check(
    shell: Subspace,
    part: Bipartition,
    eps_tilde: float,
    n_samples: int,
    seed: int,
    chunk: int = 512,
) -> PswResult:
    """Canonical-typicality tail: rate of samples whose first-factor reduced
    state deviates from the average one by at least eps_tilde + d1/sqrt(d_R),
    against the tail bound 4 exp(-d_R eps_tilde^2 / 18 pi^3)."""
    if part.dim != shell.ambient_dim:
        raise DimensionMismatchError("bipartition must factor the ambient space")
    d_r = shell.dim
    threshold = eps_tilde + part.d1 / np.sqrt(d_r)
    bound = 4.0 * np.exp(-d_r * eps_tilde**2 / PSW_CONSTANT)
    if d_r == shell.ambient_dim:
        # tr_2 of I/d is I/d1 in any rotated product basis
        mean_red = np.eye(part.d1) / part.d1
    else:
        mean_red = reduced_density(shell.projector() / d_r, part)
    rng = make_rng(seed)
    full = d_r == shell.ambient_dim
    violations = 0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        z = _uniform_coeffs(d_r, m, rng)
        batch = z if full else z @ shell.frame.T
        if part.rotation is not None:
            batch = batch @ part.rotation.conj()
        mats = batch.reshape(m, part.d1, part.d2)
        red = np.einsum("sij,skj->sik", mats, mats.conj())
        diffs = red - mean_red
        eig = np.linalg.eigvalsh(0.5 * (diffs + diffs.conj().transpose(0, 2, 1)))
        dist = np.sum(np.abs(eig), axis=1)
        violations += int(np.count_nonzero(dist >= threshold))
        done += m
    return PswResult(violations / n_samples, float(bound), float(threshold), n_samples)


def sample_gap_batch(
    rho: DensityMatrix, n_samples: int, seed: int, batch: int = 64, chunk: int = 256
) -> np.ndarray:
    """(n, d) samples from the Scrooge measure of rho by batched importance
    resampling.

    Candidates are Gaussian vectors with covariance rho; one candidate per
    batch is kept with probability proportional to its squared norm (the
    size-bias adjustment) and then normalized. Exactness holds in the
    batch -> infinity limit, so the batch size is an explicit knob and the
    density-matrix acceptance test gates the default.
    """
    w, v = np.linalg.eigh(rho.entries)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValidationError("rank-0 density matrix")
    sqrtw = np.sqrt(w / w.sum())
    d = rho.dim
    rng = make_rng(seed)
    out = np.empty((n_samples, d), dtype=np.complex128)
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        z = complex_normal(rng, (m, batch, d)) * sqrtw
        nrm2 = np.sum(np.abs(z) ** 2, axis=2)
        cdf = np.cumsum(nrm2, axis=1)
        u = rng.uniform(0.0, cdf[:, -1])
        pick = (cdf < u[:, None]).sum(axis=1)
        sel = z[np.arange(m), pick]
        sel /= np.linalg.norm(sel, axis=1, keepdims=True)
        out[done : done + m] = sel
        done += m
    # rows hold eigenbasis coefficients; map back to the ambient basis
    return out @ v.T


def sample_gap(rho: DensityMatrix, seed: int, batch: int = 64) -> PureState:
    """Single Scrooge-measure sample."""
    vec = sample_gap_batch(rho, 1, seed, batch=batch)[0]
    return PureState(vec, register=rho.register)


@dataclass(frozen=True)
class GapProbeResult:
    rows: tuple  # of (region, median, q1, q3, max)
    n_samples: int
    beta: float


def gap_mite_conjecture_probe(
    h: HermitianOperator,
    beta: float,
    regions,
    n_samples: int,
    seed: int,
    batch: int = 64,
) -> GapProbeResult:
    """Distance statistics of Scrooge-measure samples' reduced states from the
    Gibbs reduced states. Report-only: the underlying claim is a conjecture
    and is never asserted."""
    if h.register is None:
        raise ValidationError("probe needs a register-backed Hamiltonian")
    rho_beta = build_gibbs(h, beta)
    n_sites = h.register.n_sites
    regions = [tuple(sorted(int(s) for s in r)) for r in regions]
    targets = {
        r: kernels.ptrace_density(rho_beta.entries, n_sites, r) for r in regions
    }
    samples = sample_gap_batch(rho_beta, n_samples, seed, batch=batch)
    rows = []
    for r in regions:
        red = kernels.ptrace_state_batch(samples, n_sites, r)
        diffs = red - targets[r]
        eig = np.linalg.eigvalsh(0.5 * (diffs + diffs.conj().transpose(0, 2, 1)))
        dist = np.sum(np.abs(eig), axis=1)
        q1, med, q3 = np.percentile(dist, [25, 50, 75])
        rows.append((r, float(med), float(q1), float(q3), float(dist.max())))
    return GapProbeResult(tuple(rows), n_samples, float(beta))


@dataclass(frozen=True)
class MiteMostResult:
    fraction: float
    distances: tuple
    d0: int
    epsilon: float
    n_subsystems: int


def mite_most_estimate(
    psi, d0: int, n_subsystems: int, epsilon: float, seed: int
) -> MiteMostResult:
    """Fraction of Haar-rotated abstract subsystems of factor dimension d0
    on which the state's reduced matrix is epsilon-close to maximally mixed.

    The reference reduced state is I/d0 because an abstract split factors
    the state's own space, whose normalized projection is maximally mixed.
    Sharing a seed across states shares the sampled subsystems.
    """
    amps = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi).ravel()
    d = amps.size
    if d % d0 != 0:
        raise ValidationError(f"d0 = {d0} must divide dim {d}")
    if d0**2 > d:
        raise ValidationError("d0 must satisfy d0 << sqrt(dim) for the estimate")
    rng = make_rng(seed)
    target = np.eye(d0) / d0
    dists = []
    for _ in range(n_subsystems):
        u = haar_unitary(d, rng)
        part = Bipartition(d0, d // d0, rotation=u)
        red = reduced_state(amps, part)
        dists.append(trace_norm(red - target))
    dists = tuple(float(x) for x in dists)
    frac = float(np.mean([x < epsilon for x in dists])) if dists else 1.0
    return MiteMostResult(frac, dists, d0, epsilon, n_subsystems)


def mite_most_estimate_batch(
    states: np.ndarray, d0: int, n_subsystems: int, epsilon: float, seed: int
) -> tuple:
    """Per-state pass fractions over a shared set of Haar-rotated subsystems.

    Equivalent to calling :func:`mite_most_estimate` on each row with the
    same seed (the rotations drawn are identical); each rotation is built
    once and applied to all states at once.
    """
    states = np.asarray(states, dtype=np.complex128)
    n, d = states.shape
    if d % d0 != 0:
        raise ValidationError(f"d0 = {d0} must divide dim {d}")
    if d0**2 > d:
        raise ValidationError("d0 must satisfy d0 << sqrt(dim) for the estimate")
    rng = make_rng(seed)
    target = np.eye(d0) / d0
    passed = np.zeros(n)
    for _ in range(n_subsystems):
        u = haar_unitary(d, rng)
        rotated = states @ u.conj()
        mats = rotated.reshape(n, d0, d // d0)
        red = np.einsum("sij,skj->sik", mats, mats.conj())
        diffs = red - target
        eig = np.linalg.eigvalsh(0.5 * (diffs + diffs.conj().transpose(0, 2, 1)))
        dist = np.sum(np.abs(eig), axis=1)
        passed += dist < epsilon
    return passed / n_subsystems


def _phase_reflection_unitary(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Unitary (global phase times a Householder reflection) with U src = dst."""
    c = np.vdot(src, dst)
    phase = c / abs(c) if abs(c) > 1e-14 else 1.0
    y = np.conj(phase) * dst
    v = y - src
    nv2 = float(np.real(np.vdot(v, v)))
    d = src.size
    if nv2 < 1e-28:
        return phase * np.eye(d, dtype=np.complex128)
    u = np.eye(d, dtype=np.complex128) - 2.0 * np.outer(v, v.conj()) / nv2
    return phase * u


def adversarial_subsystem(psi, d1: int, seed: int) -> Bipartition:
    """A rotated bipartition under which the given state is exactly a product.

    A random product state psi' = phi (x) chi is mapped onto psi by a
    phase-adjusted reflection U; conjugating the canonical split by U makes
    the first-factor reduced state of psi pure, hence at trace distance
    2 (1 - 1/d1) from maximally mixed — the construction every state admits.
    """
    amps = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi).ravel()
    d = amps.size
    if d % d1 != 0:
        raise ValidationError(f"{d1} does not divide dim {d}")
    if not 2 <= d1 <= d // 2:
        raise ValidationError("need 2 <= d1 <= dim/2")
    d2 = d // d1
    rng = make_rng(seed)
    phi = complex_normal(rng, d1)
    phi /= np.linalg.norm(phi)
    chi = complex_normal(rng, d2)
    chi /= np.linalg.norm(chi)
    prod = np.kron(phi, chi)
    u = _phase_reflection_unitary(prod, amps)
    return Bipartition(d1, d2, rotation=u)


@dataclass(frozen=True)
class EnsembleEquivalenceResult:
    beta: float
    rows: tuple  # of (region, diameter, distance)
    ell0: int
    mite_epsilon: float
    shell_dim: int


def match_beta(
    eigenvalues: np.ndarray, target_energy: float, tol: float
) -> float:
    """Inverse temperature with tr(rho_beta H) equal to the target, by bisection."""
    w = np.asarray(eigenvalues, dtype=np.float64)
    lo, hi = float(w.min()), float(w.max())
    if not lo - 1e-12 <= target_energy <= hi + 1e-12:
        raise ValidationError("target energy outside the spectrum")
    if hi - lo < 1e-14:
        return 0.0

    def mean_energy(beta):
        x = -beta * w
        x -= x.max()
        p = np.exp(x)
        return float(np.dot(p, w) / p.sum())

    b = 1.0
    for _ in range(200):
        if mean_energy(-b) >= target_energy >= mean_energy(b):
            break
        b *= 2.0
    else:
        raise ValidationError("failed to bracket the matching inverse temperature")
    return float(bisect(lambda x: mean_energy(x) - target_energy, -b, b, xtol=tol))


def ensemble_equivalence_sweep(
    h: HermitianOperator,
    shell_params,
    beta_solver_tol: float,
    regions,
    mite_epsilon: float = 0.1,
    spec_dec=None,
) -> EnsembleEquivalenceResult:
    """Per-region trace distance between the shell-average and Gibbs reduced
    states, with the largest region diameter still below the microscopic
    tolerance.

    The inverse temperature is matched to the shell's mean energy (the
    standard convention when none is prescribed)."""
    if h.register is None:
        raise ValidationError("sweep needs a register-backed Hamiltonian")
    dec = spec_dec if spec_dec is not None else eig_hermitian(h)
    e, delta_e = shell_params
    shell = energy_shell(dec, e, delta_e)
    mask = (dec.eigenvalues > e - delta_e) & (dec.eigenvalues <= e)
    target = float(dec.eigenvalues[mask].mean())
    beta = match_beta(dec.eigenvalues, target, beta_solver_tol)
    rho_beta = build_gibbs(h, beta)
    n_sites = h.register.n_sites
    regions = [tuple(sorted(int(s) for s in r)) for r in regions]
    rows = []
    frame_t = np.ascontiguousarray(shell.frame.T)
    for r in regions:
        if shell.dim == shell.ambient_dim:
            mc_red = np.eye(1 << len(r), dtype=np.complex128) / (1 << len(r))
        else:
            reduced = kernels.ptrace_state_batch(frame_t, n_sites, r)
            mc_red = reduced.sum(axis=0) / shell.dim
        beta_red = kernels.ptrace_density(rho_beta.entries, n_sites, r)
        diam = r[-1] - r[0] + 1
        rows.append((r, diam, trace_norm(mc_red - beta_red)))
    diameters = sorted({diam for _, diam, _ in rows})
    ell0 = 0
    for ell in diameters:
        if all(dist < mite_epsilon for _, diam, dist in rows if diam <= ell):
            ell0 = ell
        else:
            break
    return EnsembleEquivalenceResult(
        beta=float(beta),
        rows=tuple(rows),
        ell0=int(ell0),
        mite_epsilon=mite_epsilon,
        shell_dim=shell.dim,
    )


def schmidt_spectra(psi: np.ndarray, part: Bipartition) -> tuple:
    """Eigenvalue lists of the two reduced states of a pure state (descending)."""
    psi = np.asarray(psi).ravel()
    if part.rotation is not None:
        psi = part.rotation.conj().T @ psi
    m = psi.reshape(part.d1, part.d2)
    s = np.linalg.svd(m, compute_uv=False) ** 2
    w1 = np.sort(np.linalg.eigvalsh(m @ m.conj().T))[::-1]
    w2 = np.sort(np.linalg.eigvalsh(m.conj().T @ m))[::-1]
    return w1, w2, np.sort(s)[::-1]
