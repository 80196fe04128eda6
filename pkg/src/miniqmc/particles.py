"""Particle sets with dual AoS/SoA positions, and serializable walkers."""

import struct
from dataclasses import dataclass, field

import numpy as np

from .containers import DEFAULT_BLOCK, AlignedSoAVector
from .drivers.timers import NULL_TIMERS


class ParticleSet:
    """Per-thread compute state for one group of particles.

    ``R`` is the (n, 3) double-precision AoS position array and ``Rsoa`` its
    SoA mirror in the kernel precision. Distance tables registered with
    :meth:`add_table` follow the move protocol ``make_move`` /
    ``accept_move`` / ``reject_move``.
    """

    def __init__(self, name, positions, cell, species=None, species_names=None,
                 charges=None, block=DEFAULT_BLOCK, dtype=np.float64):
        self.name = name
        self.cell = cell
        self.R = np.array(positions, dtype=np.float64).reshape(-1, 3)
        n = len(self.R)
        self.block = block
        self.dtype = np.dtype(dtype)
        self.Rsoa = AlignedSoAVector(n, block=block, dtype=self.dtype)
        self.Rsoa.assign(self.R)
        self.G = np.zeros((n, 3))
        self.L = np.zeros(n)
        self.species = (np.zeros(n, dtype=int) if species is None
                        else np.asarray(species, dtype=int))
        if self.species.shape != (n,):
            raise ValueError("species must have one entry per particle")
        n_types = int(self.species.max()) + 1 if n else 1
        self.species_names = (list(species_names) if species_names is not None
                              else ["T%d" % t for t in range(n_types)])
        self.charges = (np.zeros(n_types) if charges is None
                        else np.asarray(charges, dtype=np.float64))
        self.tables = []
        self.aa = None
        self.ab = None
        self.active = None
        self.active_pos = None
        self.frozen = False
        self.timers = NULL_TIMERS

    @property
    def n(self):
        return len(self.R)

    def __len__(self):
        return len(self.R)

    def freeze(self):
        """Mark the set immutable (ions do not move during a run)."""
        self.frozen = True
        self.R.setflags(write=False)
        return self

    def particle_charges(self):
        return self.charges[self.species]

    def sync_soa(self):
        self.Rsoa.assign(self.R)

    def set_positions(self, positions):
        if self.frozen:
            raise RuntimeError("particle set %r is frozen" % self.name)
        positions = np.asarray(positions, dtype=np.float64)
        if positions.shape != self.R.shape:
            raise ValueError("expected positions of shape %r, got %r"
                             % (self.R.shape, positions.shape))
        self.R[:] = positions
        self.sync_soa()

    def add_table(self, table):
        """Register a table; it becomes ``self.aa`` or ``self.ab`` by kind."""
        self.tables.append(table)
        if table.kind == "AA":
            self.aa = table
        else:
            self.ab = table
        return table

    def update(self):
        """Refresh every distance table from the committed positions."""
        with self.timers.scope("DistTable"):
            for t in self.tables:
                t.evaluate_all()

    def make_move(self, k, r_new):
        if not 0 <= k < self.n:
            raise IndexError("particle %d out of range" % k)
        self.active = k
        self.active_pos = np.array(r_new, dtype=np.float64)
        with self.timers.scope("DistTable"):
            for t in self.tables:
                t.stage_candidate_row(k, self.active_pos)

    def accept_move(self, k):
        if self.active != k:
            raise RuntimeError("no staged move for particle %d" % k)
        with self.timers.scope("DistTable"):
            for t in self.tables:
                t.accept_move(k)
        self.R[k] = self.active_pos
        self.Rsoa[k] = self.active_pos
        self.active = None

    def reject_move(self, k):
        for t in self.tables:
            t.reject_move(k)
        self.active = None

    def memory_bytes(self):
        return (self.R.nbytes + self.Rsoa.nbytes + self.G.nbytes + self.L.nbytes
                + sum(t.memory_bytes() for t in self.tables))


_HEADER = struct.Struct("<qq")


@dataclass
class Walker:
    R: np.ndarray
    weight: float = 1.0
    multiplicity: int = 1
    age: int = 0
    e_local: float = 0.0
    buffer: np.ndarray = field(default_factory=lambda: np.zeros(0))
    walker_id: int = 0
    flagged: bool = False

    def __post_init__(self):
        self.R = np.array(self.R, dtype=np.float64).reshape(-1, 3)
        self.buffer = np.asarray(self.buffer, dtype=np.float64)
        if self.weight < 0:
            raise ValueError("walker weight must be non-negative")
        if self.multiplicity < 0:
            raise ValueError("walker multiplicity must be non-negative")

    def copy(self, walker_id=None):
        return Walker(self.R.copy(), self.weight, self.multiplicity, self.age,
                      self.e_local, self.buffer.copy(),
                      self.walker_id if walker_id is None else walker_id,
                      self.flagged)

    def to_bytes(self):
        """Little-endian dump: {n, buffer_len}, R, weight, e_local, buffer."""
        body = np.concatenate([self.R.ravel(), [self.weight, self.e_local],
                               self.buffer]).astype("<f8")
        return _HEADER.pack(len(self.R), len(self.buffer)) + body.tobytes()

    @classmethod
    def from_bytes(cls, data, offset=0):
        """Inverse of :meth:`to_bytes`; returns ``(walker, bytes_consumed)``."""
        n, nbuf = _HEADER.unpack_from(data, offset)
        count = 3 * n + 2 + nbuf
        body = np.frombuffer(data, dtype="<f8", count=count,
                             offset=offset + _HEADER.size).astype(np.float64)
        w = cls(body[:3 * n].reshape(n, 3), weight=float(body[3 * n]),
                e_local=float(body[3 * n + 1]), buffer=body[3 * n + 2:].copy())
        return w, _HEADER.size + 8 * count


def load_walker(ps, walker, psi=None):
    """Copy a walker into the compute objects and refresh the tables."""
    if walker.R.shape != ps.R.shape:
        raise ValueError("walker has %d particles, particle set has %d"
                         % (len(walker.R), ps.n))
    ps.R[:] = walker.R
    ps.sync_soa()
    ps.update()
    if psi is not None:
        if len(walker.buffer) != psi.buffer_size:
            raise ValueError("walker buffer holds %d scalars, wavefunction needs %d"
                             % (len(walker.buffer), psi.buffer_size))
        psi.copy_from_buffer(walker.buffer)


def store_walker(ps, walker, psi=None):
    """Persist positions and component state back into the walker."""
    if walker.R.shape != ps.R.shape:
        raise ValueError("walker has %d particles, particle set has %d"
                         % (len(walker.R), ps.n))
    walker.R[:] = ps.R
    if psi is not None:
        if len(walker.buffer) == 0:
            walker.buffer = np.zeros(psi.buffer_size)
        elif len(walker.buffer) != psi.buffer_size:
            raise ValueError("walker buffer holds %d scalars, wavefunction needs %d"
                             % (len(walker.buffer), psi.buffer_size))
        psi.copy_to_buffer(walker.buffer)
