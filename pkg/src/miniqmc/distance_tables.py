"""Electron-electron and electron-ion distance tables.

Three AA storage schemes are provided:

* :class:`PackedAATable` keeps the upper triangle in packed AoS storage and
  patches all N-1 pair entries of a moved particle on acceptance.
* :class:`PaddedAATable` keeps full rows of ``padded_size(N)`` scalars with
  displacements in SoA lanes. With ``policy="forward_update"`` an accepted
  move of particle k writes row k and only the column entries (k', k) with
  k' > k; rows of particles already moved in the current sweep go stale.
  With ``policy="on_the_fly"`` no column is written and a stale row is
  recomputed from the current positions the first time it is requested.

Row displacements point from the row particle to the column particle
(``r_j - r_i``). Self slots hold :data:`SENTINEL` so that any cutoff test
``r < r_cut`` drops them without a branch.

All AA schemes assume moves are proposed in ascending particle order between
two calls of :meth:`evaluate_all`.
"""

import numpy as np

from .containers import aligned_empty, padded_size
from .errors import StagingError

SENTINEL = 1.0e30
POLICIES = ("forward_update", "on_the_fly")


def _row_from_soa(cell, lanes, r, n):
    disp = cell.wrap(lanes[:, :n] - r[:, None], axis=0)
    return np.sqrt(np.einsum("ij,ij->j", disp, disp)), disp


class _Table:
    def __init__(self, target, dtype):
        self.target = target
        self.cell = target.cell
        self.dtype = np.dtype(dtype)
        self.staged = None

    def reject_move(self, k):
        self.staged = None

    def _check_staged(self, k):
        if self.staged != k:
            raise StagingError("accept_move(%d) without a staged candidate" % k)
        self.staged = None

    def memory_bytes(self):
        return sum(a.nbytes for a in self._arrays())


class PackedAATable(_Table):
    """Reference AA table: packed upper triangle, AoS displacements."""

    kind = "AA"
    policy = "packed"

    def __init__(self, electrons, dtype=None):
        super().__init__(electrons, electrons.dtype if dtype is None else dtype)
        n = electrons.n
        self.n = n
        npairs = n * (n - 1) // 2
        self.upper = np.zeros(npairs, dtype=self.dtype)
        self.disp_upper = np.zeros((npairs, 3), dtype=self.dtype)
        self.temp_d = np.zeros(n, dtype=self.dtype)
        self.temp_disp = np.zeros((n, 3), dtype=self.dtype)
        self._base = np.array([i * (2 * n - i - 1) // 2 for i in range(n)], dtype=np.int64)

    def _arrays(self):
        return (self.upper, self.disp_upper, self.temp_d, self.temp_disp)

    def storage_scalars(self):
        return len(self.upper)

    def _pairs(self, k):
        """Packed indices of pairs (k, j) for all j != k, and the disp sign."""
        j = np.arange(self.n)
        lo = np.minimum(j, k)
        hi = np.maximum(j, k)
        idx = self._base[lo] + (hi - lo - 1)
        others = j != k
        sign = np.where(j > k, 1, -1).astype(self.dtype)
        return idx[others], sign[others], others

    def evaluate_all(self, electrons=None, ions=None):
        if electrons is not None:
            if electrons.n != self.n:
                raise ValueError("table built for %d particles, got %d" % (self.n, electrons.n))
            self.target = electrons
        R = self.target.R.astype(self.dtype)
        i, j = np.triu_indices(self.n, 1)
        disp = self.cell.wrap(R[j] - R[i])
        self.disp_upper[:] = disp
        self.upper[:] = np.sqrt(np.einsum("ij,ij->i", disp, disp))
        self.staged = None

    def stage_candidate_row(self, k, r_new):
        if not 0 <= k < self.n:
            raise IndexError("particle %d out of range" % k)
        disp = self.cell.wrap(self.target.R.astype(self.dtype) - np.asarray(r_new, dtype=self.dtype))
        self.temp_disp[:] = disp
        self.temp_d[:] = np.sqrt(np.einsum("ij,ij->i", disp, disp))
        self.temp_d[k] = SENTINEL
        self.temp_disp[k] = 0
        self.staged = k

    def accept_move(self, k):
        self._check_staged(k)
        idx, sign, others = self._pairs(k)
        self.upper[idx] = self.temp_d[others]
        self.disp_upper[idx] = sign[:, None] * self.temp_disp[others]

    def temp_row(self):
        return self.temp_d, self.temp_disp.T

    def pair_distances(self):
        """All i < j distances; valid right after :meth:`evaluate_all`."""
        return self.upper

    def get_row(self, i):
        if not 0 <= i < self.n:
            raise IndexError("row %d out of range" % i)
        idx, sign, others = self._pairs(i)
        d = np.full(self.n, SENTINEL, dtype=self.dtype)
        disp = np.zeros((self.n, 3), dtype=self.dtype)
        d[others] = self.upper[idx]
        disp[others] = sign[:, None] * self.disp_upper[idx]
        return d, disp.T

    def get_dist(self, i, j):
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError("pair (%d, %d) out of range" % (i, j))
        if i == j:
            return SENTINEL
        lo, hi = min(i, j), max(i, j)
        return float(self.upper[self._base[lo] + hi - lo - 1])


class PaddedAATable(_Table):
    """Optimized AA table: N rows of padded length, SoA displacement lanes."""

    kind = "AA"

    def __init__(self, electrons, policy="on_the_fly", dtype=None, block=None):
        super().__init__(electrons, electrons.dtype if dtype is None else dtype)
        if policy not in POLICIES:
            raise ValueError("unknown policy %r, expected one of %r" % (policy, POLICIES))
        self.policy = policy
        n = electrons.n
        self.n = n
        self.block = electrons.block if block is None else block
        self.n_padded = padded_size(n, self.block)
        align = self.block * self.dtype.itemsize
        self.dist = aligned_empty((n, self.n_padded), self.dtype, align)
        self.disp = aligned_empty((3, n, self.n_padded), self.dtype, align)
        self.temp_d = aligned_empty((self.n_padded,), self.dtype, align)
        self.temp_disp = aligned_empty((3, self.n_padded), self.dtype, align)
        self.stale = np.zeros(n, dtype=bool)

    def _arrays(self):
        return (self.dist, self.disp, self.temp_d, self.temp_disp)

    def storage_scalars(self):
        return self.dist.size

    def _compute_row(self, i):
        lanes = self.target.Rsoa.lanes
        d, disp = _row_from_soa(self.cell, lanes, lanes[:, i], self.n)
        self.dist[i, :self.n] = d
        self.disp[:, i, :self.n] = disp
        self.dist[i, i] = SENTINEL
        self.stale[i] = False

    def evaluate_all(self, electrons=None, ions=None):
        if electrons is not None:
            if electrons.n != self.n:
                raise ValueError("table built for %d particles, got %d" % (self.n, electrons.n))
            self.target = electrons
        n = self.n
        lanes = self.target.Rsoa.lanes[:, :n]
        disp = self.cell.wrap(lanes[:, None, :] - lanes[:, :, None], axis=0)
        self.disp[:, :, :n] = disp
        d = self.dist[:, :n]
        d[:] = np.sqrt(np.einsum("kij,kij->ij", disp, disp))
        np.fill_diagonal(d, SENTINEL)
        self.stale[:] = False
        self.staged = None

    def stage_candidate_row(self, k, r_new):
        if not 0 <= k < self.n:
            raise IndexError("particle %d out of range" % k)
        n = self.n
        d, disp = _row_from_soa(self.cell, self.target.Rsoa.lanes,
                                np.asarray(r_new, dtype=self.dtype), n)
        self.temp_d[:n] = d
        self.temp_disp[:, :n] = disp
        self.temp_d[k] = SENTINEL
        self.temp_disp[:, k] = 0
        self.staged = k

    def accept_move(self, k):
        self._check_staged(k)
        n = self.n
        self.dist[k, :n] = self.temp_d[:n]
        self.disp[:, k, :n] = self.temp_disp[:, :n]
        if self.policy == "forward_update":
            self.dist[k + 1:n, k] = self.temp_d[k + 1:n]
            self.disp[:, k + 1:n, k] = -self.temp_disp[:, k + 1:n]
        else:
            self.stale[:] = True
            self.stale[k] = False

    def temp_row(self):
        return self.temp_d[:self.n], self.temp_disp[:, :self.n]

    def pair_distances(self):
        """All i > j distances; valid right after :meth:`evaluate_all`."""
        return self.dist[:, :self.n][np.tril_indices(self.n, -1)]

    def get_row(self, i):
        if not 0 <= i < self.n:
            raise IndexError("row %d out of range" % i)
        if self.stale[i]:
            self._compute_row(i)
        return self.dist[i, :self.n], self.disp[:, i, :self.n]

    def get_dist(self, i, j):
        if not 0 <= j < self.n:
            raise IndexError("column %d out of range" % j)
        return float(self.get_row(i)[0][j])


class ABTable(_Table):
    """Electron-ion table: one padded row of ion distances per electron."""

    kind = "AB"
    policy = "rows"

    def __init__(self, electrons, ions, dtype=None, block=None):
        super().__init__(electrons, electrons.dtype if dtype is None else dtype)
        self.source = ions
        self.n = electrons.n
        self.n_sources = ions.n
        self.block = electrons.block if block is None else block
        self.n_sources_padded = padded_size(ions.n, self.block)
        align = self.block * self.dtype.itemsize
        self.dist = aligned_empty((self.n, self.n_sources_padded), self.dtype, align)
        self.disp = aligned_empty((3, self.n, self.n_sources_padded), self.dtype, align)
        self.temp_d = aligned_empty((self.n_sources_padded,), self.dtype, align)
        self.temp_disp = aligned_empty((3, self.n_sources_padded), self.dtype, align)
        self._src = ions.R.T.astype(self.dtype)

    def _arrays(self):
        return (self.dist, self.disp, self.temp_d, self.temp_disp)

    def storage_scalars(self):
        return self.dist.size

    def evaluate_all(self, electrons=None, ions=None):
        if electrons is not None:
            if electrons.n != self.n:
                raise ValueError("table built for %d electrons, got %d" % (self.n, electrons.n))
            self.target = electrons
        if ions is not None:
            if ions.n != self.n_sources:
                raise ValueError("table built for %d ions, got %d" % (self.n_sources, ions.n))
            self.source = ions
            self._src = ions.R.T.astype(self.dtype)
        m = self.n_sources
        lanes = self.target.Rsoa.lanes[:, :self.n]
        disp = self.cell.wrap(self._src[:, None, :] - lanes[:, :, None], axis=0)
        self.disp[:, :, :m] = disp
        self.dist[:, :m] = np.sqrt(np.einsum("kij,kij->ij", disp, disp))
        self.staged = None

    def stage_candidate_row(self, k, r_new):
        if not 0 <= k < self.n:
            raise IndexError("particle %d out of range" % k)
        m = self.n_sources
        d, disp = _row_from_soa(self.cell, self._src, np.asarray(r_new, dtype=self.dtype), m)
        self.temp_d[:m] = d
        self.temp_disp[:, :m] = disp
        self.staged = k

    def accept_move(self, k):
        self._check_staged(k)
        m = self.n_sources
        self.dist[k, :m] = self.temp_d[:m]
        self.disp[:, k, :m] = self.temp_disp[:, :m]

    def temp_row(self):
        m = self.n_sources
        return self.temp_d[:m], self.temp_disp[:, :m]

    def get_row(self, i):
        if not 0 <= i < self.n:
            raise IndexError("row %d out of range" % i)
        m = self.n_sources
        return self.dist[i, :m], self.disp[:, i, :m]

    def get_dist(self, i, j):
        if not 0 <= j < self.n_sources:
            raise IndexError("ion %d out of range" % j)
        return float(self.get_row(i)[0][j])


def make_aa_table(electrons, variant="opt", policy="on_the_fly"):
    if variant == "ref":
        return PackedAATable(electrons)
    return PaddedAATable(electrons, policy=policy)


def evaluate_all(table, electrons=None, ions=None):
    table.evaluate_all(electrons, ions)


def stage_candidate_row(table, k, r_new):
    table.stage_candidate_row(k, r_new)


def accept_move(table, k):
    table.accept_move(k)


def get_dist(table, i, j):
    return table.get_dist(i, j)


def get_row(table, i):
    return table.get_row(i)


def storage_scalars(table):
    return table.storage_scalars()
