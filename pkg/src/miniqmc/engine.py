"""Per-thread compute objects: electrons with tables, wavefunction, Hamiltonian."""

import numpy as np

from .distance_tables import ABTable, PackedAATable, PaddedAATable
from .particles import ParticleSet
from .wavefunction import PRECISIONS, TrialWaveFunction


class Engine:
    """One worker's private ParticleSet / TrialWaveFunction pair.

    ``variant="ref"`` uses the packed AA table and the N x N two-body
    Jastrow; ``variant="opt"`` uses padded SoA rows (``policy`` selects
    forward update or on-the-fly rows) and the 5N two-body Jastrow.
    """

    def __init__(self, system, variant="opt", precision="double", policy="on_the_fly",
                 block=16):
        self.system = system
        self.variant = variant
        self.precision = precision
        self.policy = policy if variant == "opt" else "packed"
        dtype = PRECISIONS[precision]
        n = system.n_electrons
        self.ions = system.ions
        e = ParticleSet("e", np.zeros((n, 3)), system.cell, block=block, dtype=dtype)
        if variant == "ref":
            e.add_table(PackedAATable(e))
        else:
            e.add_table(PaddedAATable(e, policy=policy))
        if self.ions.n:
            e.add_table(ABTable(e, self.ions))
        self.electrons = e
        self.psi = TrialWaveFunction(system.wf_config, e, self.ions, variant, precision)
        self.hamiltonian = system.hamiltonian

    def set_positions(self, R):
        self.electrons.set_positions(R)
        return self.psi.recompute_from_scratch(self.electrons)

    def memory_bytes(self):
        return self.electrons.memory_bytes() + self.psi.memory_bytes()
