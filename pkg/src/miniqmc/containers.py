"""Aligned structure-of-arrays storage for D-dimensional particle data."""

import numpy as np

DEFAULT_BLOCK = 16


def padded_size(n, block=DEFAULT_BLOCK):
    """Smallest multiple of ``block`` that is >= max(n, 1)."""
    if block < 1:
        raise ValueError("block must be >= 1, got %r" % (block,))
    if n < 0:
        raise ValueError("n must be non-negative, got %r" % (n,))
    n = max(n, 1)
    return ((n + block - 1) // block) * block


def aligned_empty(shape, dtype, alignment):
    """Zeroed array whose data pointer is a multiple of ``alignment`` bytes."""
    dtype = np.dtype(dtype)
    count = int(np.prod(shape))
    nbytes = count * dtype.itemsize
    raw = np.zeros(nbytes + alignment, dtype=np.uint8)
    offset = (-raw.ctypes.data) % alignment
    return raw[offset:offset + nbytes].view(dtype).reshape(shape)


class AlignedSoAVector:
    """D lanes of ``n_padded`` scalars mirroring a list of ``n`` D-vectors.

    Lane ``d`` holds component ``d`` of every element contiguously, which is
    the layout the distance and Jastrow kernels stream over. Slots
    ``n..n_padded`` are padding and stay zero.
    """

    def __init__(self, n, dims=3, block=DEFAULT_BLOCK, dtype=np.float64):
        self.n = int(n)
        self.dims = int(dims)
        self.block = int(block)
        self.n_padded = padded_size(self.n, self.block)
        self.dtype = np.dtype(dtype)
        self.lanes = aligned_empty((self.dims, self.n_padded), self.dtype,
                                   self.block * self.dtype.itemsize)

    @classmethod
    def from_aos(cls, aos, dims=3, block=DEFAULT_BLOCK, dtype=np.float64):
        aos = np.asarray(aos, dtype=np.float64)
        if aos.size == 0:
            aos = aos.reshape(0, dims)
        if aos.ndim != 2 or aos.shape[1] != dims:
            raise ValueError("expected an (n, %d) array of vectors" % dims)
        v = cls(aos.shape[0], dims=dims, block=block, dtype=dtype)
        v.assign(aos)
        return v

    def assign(self, aos):
        """Copy an (n, D) AoS array into the lanes (the ``Rsoa = R`` step)."""
        aos = np.asarray(aos)
        if aos.shape != (self.n, self.dims):
            raise ValueError("shape mismatch: %r vs (%d, %d)"
                             % (aos.shape, self.n, self.dims))
        self.lanes[:, :self.n] = aos.T

    def __len__(self):
        return self.n

    def _check(self, i):
        if not 0 <= i < self.n:
            raise IndexError("index %d out of range for %d elements" % (i, self.n))

    def __getitem__(self, i):
        self._check(i)
        return self.lanes[:, i].copy()

    def __setitem__(self, i, value):
        self._check(i)
        self.lanes[:, i] = value

    def to_aos(self):
        return self.lanes[:, :self.n].T.copy()

    @property
    def nbytes(self):
        return self.lanes.nbytes

    def __repr__(self):
        return "AlignedSoAVector(n=%d, n_padded=%d, dims=%d, dtype=%s)" % (
            self.n, self.n_padded, self.dims, self.dtype)


def soa_from_aos(aos, dims=3, block=DEFAULT_BLOCK, dtype=np.float64):
    return AlignedSoAVector.from_aos(aos, dims=dims, block=block, dtype=dtype)


def aos_element(v, i):
    return v[i]


def set_element(v, i, value):
    v[i] = value
