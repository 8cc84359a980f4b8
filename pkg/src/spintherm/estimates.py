"""Closed-form quantitative estimates in log-domain arithmetic.

The quantities here (dominant-sector deficits, level counts, binomial
deviation probabilities) span hundreds of orders of magnitude up to numbers
like 10^(10^25), so everything is carried as a base-10 exponent and never
materialized as a float value unless it safely fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom, norm

from .errors import ValidationError

LN10 = math.log(10.0)

#: Physical constants (SI). k_B is exact by definition since the 2019 SI;
#: hbar is derived from the exact Planck constant.
CONSTANTS = {
    "hbar": 1.054571817e-34,  # J s
    "k_B": 1.380649e-23,      # J / K
}


@dataclass(frozen=True, eq=False)
class LogNumber:
    """A positive magnitude stored as its base-10 logarithm.

    For display, magnitudes whose exponent itself is astronomical are shown
    as an iterated exponent 10^(10^t) with t = log10(log10 x).
    """

    log10: float

    def __post_init__(self):
        if not np.isfinite(self.log10):
            raise ValidationError("log10 value must be finite")

    @staticmethod
    def from_value(x: float) -> "LogNumber":
        if not x > 0:
            raise ValidationError("LogNumber encodes positive magnitudes only")
        return LogNumber(math.log10(x))

    @staticmethod
    def from_log10(e: float) -> "LogNumber":
        return LogNumber(float(e))

    @staticmethod
    def from_ln(e: float) -> "LogNumber":
        return LogNumber(float(e) / LN10)

    @property
    def value(self) -> float:
        """Float value; overflows to inf / underflows to 0 beyond ~1e308."""
        if self.log10 > 308:
            return math.inf
        if self.log10 < -308:
            return 0.0
        return 10.0**self.log10

    @property
    def ln(self) -> float:
        return self.log10 * LN10

    @property
    def tower(self) -> float:
        """log10 of the exponent (only defined for exponent > 0)."""
        if self.log10 <= 0:
            raise ValidationError("tower height needs a positive exponent")
        return math.log10(self.log10)

    def __mul__(self, other):
        if isinstance(other, LogNumber):
            return LogNumber(self.log10 + other.log10)
        return LogNumber(self.log10 + math.log10(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, LogNumber):
            return LogNumber(self.log10 - other.log10)
        return LogNumber(self.log10 - math.log10(other))

    def __pow__(self, exponent: float):
        return LogNumber(self.log10 * exponent)

    def sqrt(self) -> "LogNumber":
        return LogNumber(self.log10 / 2.0)

    def add(self, other: "LogNumber") -> "LogNumber":
        hi, lo = max(self.log10, other.log10), min(self.log10, other.log10)
        return LogNumber(hi + math.log10(1.0 + 10.0 ** (lo - hi)))

    def _key(self):
        return self.log10

    def __eq__(self, other):
        return isinstance(other, LogNumber) and self.log10 == other.log10

    def __lt__(self, other):
        return self.log10 < other.log10

    def __le__(self, other):
        return self.log10 <= other.log10

    def __gt__(self, other):
        return self.log10 > other.log10

    def __ge__(self, other):
        return self.log10 >= other.log10

    def __repr__(self):
        if abs(self.log10) < 6:
            return f"LogNumber({self.value:.6g})"
        if self.log10 > 1e6:
            return f"LogNumber(10^(10^{self.tower:.4f}))"
        return f"LogNumber(10^{self.log10:.6g})"


def mate_epsilon_estimate(m: float, n: float, delta_m: float) -> LogNumber:
    """Dimension deficit of the dominant sector: m * exp(-m * n * delta_m^2).

    Cell-count union bound on the Gaussian estimate that any one of m cell
    variables deviates beyond its resolution. delta_m = 0 degenerates the
    bound to just m.
    """
    if m <= 0 or n <= 0 or delta_m < 0:
        raise ValidationError("cell count and particle number must be positive")
    return LogNumber(math.log10(m) - m * n * delta_m**2 / LN10)


def delta_choice(epsilon: LogNumber) -> LogNumber:
    """The natural weight tolerance: the square root of the deficit."""
    if epsilon.log10 > 0:
        raise ValidationError("epsilon must be at most 1")
    return epsilon.sqrt()


@dataclass(frozen=True)
class BinomialDeviation:
    """Tail probability of one cell's particle count leaving its tolerance band."""

    n_total: int
    m_cells: int
    rel_tol: float
    per_cell_mean: float
    threshold: float
    exact: LogNumber          # None above the exact-summation cutoff
    gaussian_estimate: LogNumber
    gaussian_bound: LogNumber  # Bernstein-type; provably >= exact
    union_bound: LogNumber     # m_cells * gaussian_bound
    exponent: float            # t^2 / (2 sigma^2), natural log scale

    @property
    def ratio(self) -> float:
        """exact / gaussian_estimate (float; None-safe only when exact exists)."""
        if self.exact is None:
            return math.nan
        return 10.0 ** (self.exact.log10 - self.gaussian_estimate.log10)


EXACT_SUMMATION_CAP = 10**6


def exact_binomial_deviation(
    n_total: int, m_cells: int, rel_tol: float
) -> BinomialDeviation:
    """Probability that one cell's occupancy deviates by more than
    rel_tol * mean.

    The occupancy is Binomial(n_total, 1/m). Up to 10^6 trials the two-sided
    tail is summed exactly (in log space); the Gaussian estimate is the
    central normal tail, and the guaranteed bound is Bernstein's
    2 exp(-t^2 / (2 sigma^2 + 2t/3)), which dominates the exact tail for
    every parameter choice.
    """
    if n_total < m_cells:
        raise ValidationError("need at least one particle per cell on average")
    if rel_tol < 0:
        raise ValidationError("relative tolerance must be nonnegative")
    p = 1.0 / m_cells
    mean = n_total * p
    t = rel_tol * mean
    sigma2 = n_total * p * (1.0 - p)

    if t <= 0 or sigma2 == 0:
        exact = LogNumber.from_log10(0.0)  # any deviation: probability 1
        gau = LogNumber.from_log10(0.0)
        bern = LogNumber.from_log10(math.log10(2.0))
        return BinomialDeviation(
            n_total, m_cells, rel_tol, mean, t, exact, gau, bern,
            bern * m_cells, 0.0,
        )

    exact = None
    if n_total <= EXACT_SUMMATION_CAP:
        dist = binom(n_total, p)
        # strict deviation: count N < mean - t and N > mean + t
        edge = mean - t
        lo = int(edge) - 1 if float(edge).is_integer() else math.floor(edge)
        hi = math.floor(mean + t)
        log_lower = dist.logcdf(lo) if lo >= 0 else -math.inf
        log_upper = dist.logsf(hi)
        hi_part = LogNumber.from_ln(log_upper) if np.isfinite(log_upper) else None
        lo_part = LogNumber.from_ln(log_lower) if np.isfinite(log_lower) else None
        if hi_part and lo_part:
            exact = hi_part.add(lo_part)
        else:
            exact = hi_part or lo_part
        if exact is None:
            exact = LogNumber.from_log10(-745.0)  # below double underflow

    z = t / math.sqrt(sigma2)
    gau = LogNumber.from_ln(math.log(2.0) + norm.logsf(z))
    exponent = t * t / (2.0 * sigma2)
    bern = LogNumber.from_ln(math.log(2.0) - t * t / (2.0 * sigma2 + 2.0 * t / 3.0))
    return BinomialDeviation(
        n_total=n_total,
        m_cells=m_cells,
        rel_tol=rel_tol,
        per_cell_mean=mean,
        threshold=t,
        exact=exact,
        gaussian_estimate=gau,
        gaussian_bound=bern,
        union_bound=bern * m_cells,
        exponent=exponent,
    )


def exceptional_cell_threshold(n_per_cell: float, rel_tol: float) -> LogNumber:
    """Cell count at which some cell is expected to deviate by chance alone.

    The inverse of the per-cell Gaussian tail exp(-(rel_tol n)^2 / 2n): with
    n ~ 2.5e16 particles per cell and 0.1% tolerance this is the iterated
    exponent marking where no dominant macro-sector survives.
    """
    if n_per_cell <= 0 or rel_tol <= 0:
        raise ValidationError("arguments must be positive")
    exponent = (rel_tol * n_per_cell) ** 2 / (2.0 * n_per_cell)
    return LogNumber.from_ln(exponent)


def per_particle_level_exponent(box_len: float, mass: float, temp: float) -> float:
    """log10 of the per-particle factor (3 e L^2 m k T / 2 pi hbar^2)^(3/2)."""
    hbar, k = CONSTANTS["hbar"], CONSTANTS["k_B"]
    c = 3.0 * math.e * box_len**2 * mass * k * temp / (2.0 * math.pi * hbar**2)
    return 1.5 * math.log10(c)


def ideal_gas_level_count(
    n_particles: float, box_len: float, mass: float, temp: float, delta_t: float
) -> LogNumber:
    """Levels of an N-particle ideal gas in a temperature window delta_t:
    (3N/2) (3 e L^2 m k / 2 pi hbar^2)^(3N/2) T^(3N/2 - 1) delta_t."""
    if min(n_particles, box_len, mass, temp, delta_t) <= 0:
        raise ValidationError("all parameters must be positive")
    hbar, k = CONSTANTS["hbar"], CONSTANTS["k_B"]
    c = 3.0 * math.e * box_len**2 * mass * k / (2.0 * math.pi * hbar**2)
    exp10 = (
        math.log10(1.5 * n_particles)
        + 1.5 * n_particles * math.log10(c)
        + (1.5 * n_particles - 1.0) * math.log10(temp)
        + math.log10(delta_t)
    )
    return LogNumber.from_log10(exp10)


def ball_octant_level_count(n_particles: int, radius: float) -> LogNumber:
    """Exact positive-orthant ball volume 2^-3N pi^(3N/2) R^(3N) / (3N/2)!.

    This is the unapproximated count of lattice points under a sphere in 3N
    dimensions (no Stirling step), used as the oracle for the closed form.
    """
    if n_particles < 1 or radius <= 0:
        raise ValidationError("need n_particles >= 1 and radius > 0")
    three_n = 3 * n_particles
    exp10 = (
        -three_n * math.log10(2.0)
        + (three_n / 2.0) * math.log10(math.pi)
        + three_n * math.log10(radius)
        - gammaln(three_n / 2.0 + 1.0) / LN10
    )
    return LogNumber.from_log10(exp10)


def lattice_point_count(radius: float) -> int:
    """Brute-force count of positive-integer triples inside a 3-ball."""
    r2 = radius * radius
    count = 0
    nmax = int(radius)
    for n1 in range(1, nmax + 1):
        for n2 in range(1, nmax + 1):
            rem = r2 - n1 * n1 - n2 * n2
            if rem >= 1:
                count += int(math.sqrt(rem))
    return count


def dmc_heuristics(n: float) -> tuple:
    """Bracketing magnitudes for realistic shell dimensions: 10^(N/10) to
    10^(30 N)."""
    if n < 1:
        raise ValidationError("need at least one degree of freedom")
    return LogNumber.from_log10(n / 10.0), LogNumber.from_log10(30.0 * n)
