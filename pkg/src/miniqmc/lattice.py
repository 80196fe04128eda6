"""Orthorhombic simulation cell and minimum-image displacements."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Cell:
    lengths: tuple
    periodic: tuple = (True, True, True)

    def __post_init__(self):
        lengths = tuple(float(x) for x in self.lengths)
        periodic = tuple(bool(p) for p in self.periodic)
        if len(lengths) != 3 or len(periodic) != 3:
            raise ValueError("a cell needs three lengths and three periodic flags")
        if any(not np.isfinite(x) or x <= 0.0 for x in lengths):
            raise ValueError("cell lengths must be positive, got %r" % (lengths,))
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "periodic", periodic)

    @classmethod
    def cubic(cls, length, periodic=True):
        return cls((length,) * 3, (periodic,) * 3)

    @classmethod
    def open(cls, lengths=(1.0, 1.0, 1.0)):
        return cls(lengths, (False, False, False))

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @property
    def any_periodic(self):
        return any(self.periodic)

    def wrap(self, disp, axis=-1):
        """Map displacements onto the nearest image along periodic axes.

        ``axis`` is the axis of ``disp`` carrying the three Cartesian
        components, so both (n, 3) AoS and (3, n) SoA blocks work. The result
        lies in (-L/2, L/2] on periodic axes.
        """
        disp = np.asarray(disp)
        if not self.any_periodic:
            return disp
        shape = [1] * disp.ndim
        shape[axis] = 3
        dtype = disp.dtype if disp.dtype.kind == "f" else np.float64
        lengths = np.asarray(self.lengths, dtype=dtype).reshape(shape)
        mask = np.asarray(self.periodic).reshape(shape)
        shift = lengths * np.ceil(disp / lengths - dtype.type(0.5))
        return disp - np.where(mask, shift, 0)

    def wrap_position(self, r):
        """Fold a position into [0, L) on periodic axes."""
        r = np.asarray(r, dtype=np.float64)
        lengths = np.asarray(self.lengths)
        return np.where(self.periodic, np.mod(r, lengths), r)


def min_image_disp(cell, a, b):
    """Distance and displacement ``b - a`` under the minimum-image rule."""
    disp = cell.wrap(np.asarray(b, dtype=np.float64) - np.asarray(a, dtype=np.float64))
    return float(np.sqrt(disp @ disp)), disp
