"""Single-particle orbital sets: periodic tricubic B-spline tables and plane waves.

Both sets expose the same evaluation surface:

``evaluate_v(pos)``
    orbital values, shape (n_orb,)
``evaluate_vgh(pos)``
    values (n_orb,), gradients (3, n_orb), hessians (6, n_orb) ordered
    xx, xy, xz, yy, yz, zz
``evaluate_vgl(pos)``
    values, gradients and laplacians (n_orb,)
"""

import struct

import numpy as np

from .containers import DEFAULT_BLOCK, padded_size

# hessian component -> derivative orders along (x, y, z)
_HESS_ORDERS = ((2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2))
_VGH_ORDERS = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)) + _HESS_ORDERS
_VGH_INDEX = tuple(np.array(col) for col in zip(*_VGH_ORDERS))
_V_INDEX = (np.array([0]),) * 3


def bspline_weights(t):
    """Cubic B-spline basis weights and their first two t-derivatives.

    Returns shape (3, 4) + shape(t): derivative order, then basis index.
    """
    t2 = t * t
    t3 = t2 * t
    s = 1.0 - t
    return np.array([
        [s * s * s / 6, (3 * t3 - 6 * t2 + 4) / 6, (-3 * t3 + 3 * t2 + 3 * t + 1) / 6, t3 / 6],
        [-s * s / 2, (3 * t2 - 4 * t) / 2, (-3 * t2 + 2 * t + 1) / 2, t2 / 2],
        [s, 3 * t - 2, -3 * t + 1, t],
    ])


def periodic_interpolation_coefficients(values, axes=(0, 1, 2)):
    """Solve the cyclic tridiagonal systems (c[i-1] + 4c[i] + c[i+1])/6 = f[i].

    The systems are circulant, so each axis is solved by diagonalizing in
    Fourier space. Eigenvalues (4 + 2cos(2 pi k/n))/6 are >= 1/3, so the
    solve cannot be singular.
    """
    c = np.asarray(values, dtype=np.float64)
    for ax in axes:
        n = c.shape[ax]
        lam = (4.0 + 2.0 * np.cos(2.0 * np.pi * np.arange(n) / n)) / 6.0
        shape = [1] * c.ndim
        shape[ax] = n
        c = np.fft.ifft(np.fft.fft(c, axis=ax) / lam.reshape(shape), axis=ax).real
    return c


class TricubicSPOSet:
    """Periodic tricubic B-spline orbitals over an orthorhombic cell.

    ``coeffs`` has shape (nx, ny, nz, n_orb_padded); the orbital lane is
    unit stride so every evaluation streams contiguous memory. Tables are
    read-only once built and can be shared between threads.
    """

    def __init__(self, cell, coeffs, n_orb, dtype=np.float64, block=DEFAULT_BLOCK):
        coeffs = np.asarray(coeffs)
        if coeffs.ndim != 4:
            raise ValueError("coefficients must be a 4D array")
        self.cell = cell
        self.grid = tuple(int(g) for g in coeffs.shape[:3])
        if min(self.grid) < 4:
            raise ValueError("each grid dimension must be >= 4, got %r" % (self.grid,))
        self.n_orb = int(n_orb)
        self.block = block
        self.n_orb_padded = padded_size(self.n_orb, block)
        self.dtype = np.dtype(dtype)
        table = np.zeros(self.grid + (self.n_orb_padded,), dtype=self.dtype)
        lanes = min(coeffs.shape[3], self.n_orb)
        table[..., :lanes] = coeffs[..., :lanes]
        table.setflags(write=False)
        self.coeffs = table
        self._flat = table.reshape(-1, self.n_orb_padded)
        self._scale = np.array(self.grid, dtype=np.float64) / np.array(cell.lengths)
        self._strides = np.array([self.grid[1] * self.grid[2], self.grid[2], 1])
        self._powers = self._scale[:, None, None] ** np.arange(3)[None, :, None]
        self._offsets = np.arange(4)

    @classmethod
    def from_function(cls, cell, grid, generators, dtype=np.float64, block=DEFAULT_BLOCK):
        """Interpolating spline through ``generators`` sampled on the grid nodes.

        Each generator maps an (..., 3) array of Cartesian points to values.
        """
        grid = tuple(int(g) for g in grid)
        if min(grid) < 4:
            raise ValueError("each grid dimension must be >= 4, got %r" % (grid,))
        axes = [np.arange(n) * (L / n) for n, L in zip(grid, cell.lengths)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        n_orb = len(generators)
        n_pad = padded_size(n_orb, block)
        coeffs = np.zeros(grid + (n_pad,))
        for j, g in enumerate(generators):
            f = np.broadcast_to(np.asarray(g(pts), dtype=np.float64), grid)
            coeffs[..., j] = periodic_interpolation_coefficients(f)
        return cls(cell, coeffs, n_orb, dtype=dtype, block=block)

    def astype(self, dtype):
        return TricubicSPOSet(self.cell, self.coeffs, self.n_orb, dtype=dtype, block=self.block)

    @property
    def nbytes(self):
        return self.coeffs.nbytes

    def _locate(self, pos):
        u = np.asarray(pos, dtype=np.float64) * self._scale
        base = np.floor(u)
        t = u - base
        base = base.astype(np.int64) - 1
        idx = [(base[d] + self._offsets) % self.grid[d] for d in range(3)]
        flat = (idx[0][:, None, None] * self._strides[0]
                + idx[1][None, :, None] * self._strides[1]
                + idx[2][None, None, :]).ravel()
        return flat, t

    def _weights(self, t, orders):
        a, b, c = orders
        w = np.moveaxis(bspline_weights(t), -1, 0) * self._powers
        W = (w[0, a][:, :, None, None] * w[1, b][:, None, :, None]
             * w[2, c][:, None, None, :])
        return W.reshape(len(a), 64).astype(self.dtype, copy=False)

    def evaluate_v(self, pos):
        flat, t = self._locate(pos)
        W = self._weights(t, _V_INDEX)
        return (W @ self._flat[flat])[0, :self.n_orb]

    def evaluate_vgh(self, pos):
        flat, t = self._locate(pos)
        out = self._weights(t, _VGH_INDEX) @ self._flat[flat]
        n = self.n_orb
        return out[0, :n], out[1:4, :n], out[4:10, :n]

    def evaluate_vgl(self, pos):
        v, g, h = self.evaluate_vgh(pos)
        return v, g, h[0] + h[3] + h[5]

    _MAGIC = b"MQSP"

    def save(self, path):
        """Flat little-endian dump with a {dims, n_orb, precision} header."""
        header = self._MAGIC + struct.pack("<4qq3d", *self.grid, self.n_orb,
                                           self.dtype.itemsize, *self.cell.lengths)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(self.coeffs[..., :self.n_orb].astype(self.dtype.newbyteorder("<")).tobytes())

    @classmethod
    def load(cls, path, cell=None, block=DEFAULT_BLOCK):
        from .lattice import Cell
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != cls._MAGIC:
            raise ValueError("%s is not a spline table" % path)
        fields = struct.unpack_from("<4qq3d", data, 4)
        grid, n_orb, itemsize, lengths = fields[:3], fields[3], fields[4], fields[5:]
        dtype = np.dtype("<f4" if itemsize == 4 else "<f8")
        offset = 4 + struct.calcsize("<4qq3d")
        coeffs = np.frombuffer(data, dtype=dtype, offset=offset).reshape(grid + (n_orb,))
        if cell is None:
            cell = Cell(lengths)
        return cls(cell, coeffs, n_orb, dtype=dtype.newbyteorder("="), block=block)


class PlaneWaveSPOSet:
    """Real plane-wave orbitals cos(k.r) / sin(k.r): exact kinetic eigenfunctions."""

    def __init__(self, cell, kvecs, phases=None):
        self.cell = cell
        self.kvecs = np.asarray(kvecs, dtype=np.float64).reshape(-1, 3)
        self.n_orb = len(self.kvecs)
        phases = ["cos"] * self.n_orb if phases is None else list(phases)
        if len(phases) != self.n_orb or not set(phases) <= {"cos", "sin"}:
            raise ValueError("phases must be 'cos' or 'sin', one per k-vector")
        self.phases = phases
        self._is_sin = np.array([p == "sin" for p in phases])
        self._k = self.kvecs.T.copy()
        self._kk = np.stack([self._k[a] * self._k[b] for a, b in
                             ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))])
        self._k2 = np.einsum("ij,ij->j", self._k, self._k)
        self.dtype = np.dtype(np.float64)

    @classmethod
    def commensurate(cls, cell, integer_kvecs, phases=None):
        """k = 2 pi n / L for integer triples ``n``, so every orbital is periodic."""
        n = np.asarray(integer_kvecs, dtype=np.float64).reshape(-1, 3)
        return cls(cell, 2.0 * np.pi * n / np.array(cell.lengths), phases)

    def astype(self, dtype):
        return self

    @property
    def nbytes(self):
        return self.kvecs.nbytes

    def kinetic_eigenvalues(self):
        return 0.5 * self._k2

    def _phase(self, pos):
        theta = np.asarray(pos, dtype=np.float64) @ self._k
        c, s = np.cos(theta), np.sin(theta)
        v = np.where(self._is_sin, s, c)
        dv = np.where(self._is_sin, c, -s)
        return v, dv

    def evaluate_v(self, pos):
        return self._phase(pos)[0]

    def evaluate_vgh(self, pos):
        v, dv = self._phase(pos)
        return v, self._k * dv, -self._kk * v

    def evaluate_vgl(self, pos):
        v, dv = self._phase(pos)
        return v, self._k * dv, -self._k2 * v


def _half_space_kvectors(cell, count):
    """Integer k-vectors with one of each +-k pair, ordered by |k|, k = 0 excluded."""
    lengths = np.array(cell.lengths)
    m = 1
    while True:
        r = np.arange(-m, m + 1)
        ints = np.stack(np.meshgrid(r, r, r, indexing="ij"), -1).reshape(-1, 3)
        # keep the lexicographically positive member of each +-k pair
        first = np.where(ints[:, 0] != 0, ints[:, 0], np.where(ints[:, 1] != 0, ints[:, 1], ints[:, 2]))
        ints = ints[first > 0]
        k2 = np.sum((ints / lengths) ** 2, axis=1)
        order = np.lexsort((ints[:, 2], ints[:, 1], ints[:, 0], k2))
        ints, k2 = ints[order], k2[order]
        # all shells below the cube's inscribed sphere are complete
        complete = k2 < (m / lengths.max()) ** 2 + 1e-12
        if complete.sum() >= count:
            return ints[:count]
        m *= 2


def random_plane_wave_generators(cell, n_orb, seed, n_terms=8):
    """Smooth periodic orbitals, each a random sum of <= n_terms plane waves.

    The cos/sin(k.r) basis functions of the lowest shells are dealt out to
    the orbitals without repetition, so the orbitals are mutually orthogonal
    over the cell and the Slater matrices stay well conditioned.
    """
    rng = np.random.default_rng(seed)
    n_basis = n_orb * n_terms
    ints = _half_space_kvectors(cell, (n_basis + 1) // 2)
    kv_all = 2.0 * np.pi * ints / np.array(cell.lengths)
    funcs = [(k, phase) for k in range(len(kv_all)) for phase in (0, 1)][:n_basis]
    funcs = [funcs[i] for i in rng.permutation(len(funcs))]
    gens = []
    for j in range(n_orb):
        group = funcs[j * n_terms:(j + 1) * n_terms]
        kv = kv_all[[k for k, _ in group]]
        phase = np.array([p for _, p in group])
        amp = rng.normal(size=len(group))
        amp /= np.linalg.norm(amp)

        def g(pts, kv=kv, phase=phase, amp=amp):
            theta = pts @ kv.T
            return np.where(phase == 0, np.cos(theta), np.sin(theta)) @ amp
        gens.append(g)
    return gens
