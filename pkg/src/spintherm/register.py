"""Spin registers: the lattice and its bit-indexed computational basis.

Indexing convention (fixed globally, every module relies on it):

* A basis state of ``n`` spins-1/2 is a length-``n`` bit string
  ``s_0 s_1 ... s_{n-1}``, where ``s_i`` is the state of site ``i`` and
  ``0`` means spin-up.
* The basis index is ``int(s, 2)``: site 0 occupies the *most significant*
  bit, site ``n-1`` the least significant. Equivalently, an operator acting
  on site ``i`` embeds as ``kron(I_{2^i}, op, I_{2^{n-1-i}})``.

So for two sites, ``sigma^z`` on site 0 is ``diag(+1, +1, -1, -1)`` and on
site 1 it is ``diag(+1, -1, +1, -1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

#: Hard cap on register size; 2^16 amplitudes is the largest state vector
#: the dense routines are meant to handle.
DEFAULT_MAX_SITES = 16


@dataclass(frozen=True)
class SpinRegister:
    """A chain of spin-1/2 sites partitioned into macro cells.

    Parameters
    ----------
    n_sites : int
        Number of spins.
    cells : tuple of tuples of int, optional
        Disjoint site groups covering all sites (the coarse-graining cells).
        Defaults to a single cell containing every site.
    max_sites : int
        Hard cap on ``n_sites`` (guards against accidental 2^N blow-up).
    """

    n_sites: int
    cells: tuple = None
    max_sites: int = field(default=DEFAULT_MAX_SITES, repr=False)

    def __post_init__(self):
        if not 1 <= self.n_sites <= self.max_sites:
            raise ValidationError(
                f"n_sites must be in [1, {self.max_sites}], got {self.n_sites}"
            )
        cells = self.cells
        if cells is None:
            cells = (tuple(range(self.n_sites)),)
        cells = tuple(tuple(sorted(int(s) for s in cell)) for cell in cells)
        seen = [s for cell in cells for s in cell]
        if sorted(seen) != list(range(self.n_sites)):
            raise ValidationError("cells must be disjoint and cover all sites")
        object.__setattr__(self, "cells", cells)

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def bit_position(self, site: int) -> int:
        """Shift amount of `site` within a basis index (site 0 = MSB)."""
        if not 0 <= site < self.n_sites:
            raise ValidationError(f"site {site} out of range [0, {self.n_sites})")
        return self.n_sites - 1 - site

    def site_bits(self, site: int) -> np.ndarray:
        """Bit value (0 = up, 1 = down) of `site` for every basis index."""
        b = np.arange(self.dim)
        return (b >> self.bit_position(site)) & 1

    def z_signs(self, site: int) -> np.ndarray:
        """sigma^z eigenvalue (+1 up / -1 down) of `site` per basis index."""
        return 1 - 2 * self.site_bits(site)

    def basis_index(self, bits) -> int:
        """Basis index of the bit string [s_0, ..., s_{n-1}]."""
        bits = list(bits)
        if len(bits) != self.n_sites:
            raise ValidationError("bit string length must equal n_sites")
        idx = 0
        for b in bits:
            if b not in (0, 1):
                raise ValidationError("bits must be 0 or 1")
            idx = (idx << 1) | b
        return idx

    def bitstring(self, index: int) -> tuple:
        """Inverse of :meth:`basis_index`."""
        return tuple((index >> self.bit_position(i)) & 1 for i in range(self.n_sites))

    def subregister(self, sites) -> "SpinRegister":
        """Register for the given sites (used by partial traces)."""
        return SpinRegister(len(tuple(sites)), max_sites=self.max_sites)
