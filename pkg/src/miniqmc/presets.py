"""Benchmark workloads and the synthetic systems built from them.

Sizes (N, N_ion, ion charges, unique SPO count, FFT grid) follow the
published workload table; geometry, orbitals, Jastrow functors and
pseudopotential channels are synthetic and generated from a seed.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .hamiltonian import Hamiltonian, NonlocalPP, PPChannel
from .lattice import Cell
from .particles import ParticleSet
from .splines import functor_fit
from .spo import PlaneWaveSPOSet, TricubicSPOSet, random_plane_wave_generators
from .wavefunction import WaveFunctionConfig


@dataclass(frozen=True)
class Preset:
    name: str
    n_electrons: int
    n_ions: int
    species: tuple          # (name, Z*, count) per ion species
    cell_lengths: tuple
    grid: tuple
    n_orb: int              # unique SPOs of the published workload
    jastrow: bool = True
    pp: bool = True
    table_bspline_gb: float = None

    def __post_init__(self):
        if self.n_electrons % 2:
            raise ValueError("N must be even")
        if sum(c for _, _, c in self.species) != self.n_ions:
            raise ValueError("species counts must add up to N_ion")

    @property
    def n_spo_built(self):
        """Orbitals actually tabulated: the determinant needs N/2 per spin."""
        return max(self.n_orb, self.n_electrons // 2)

    @property
    def spline_table_bytes(self):
        """Bytes of the synthetic double-precision table (padded orbital lanes)."""
        from .containers import padded_size
        return int(np.prod(self.grid)) * padded_size(self.n_spo_built) * 8


PRESETS = {
    "tiny": Preset("tiny", 14, 2, (("X", 7.0, 2),), (6.0, 6.0, 6.0), (12, 12, 12), 7),
    "graphite": Preset("graphite", 256, 64, (("C", 4.0, 64),), (11.2, 11.2, 32.0),
                       (28, 28, 80), 80, table_bspline_gb=0.1),
    "be-64": Preset("be-64", 256, 64, (("Be", 4.0, 64),), (12.6, 12.6, 21.6),
                    (84, 84, 144), 81, table_bspline_gb=1.4),
    "nio-32": Preset("nio-32", 384, 32, (("Ni", 18.0, 16), ("O", 6.0, 16)),
                     (15.76, 15.76, 7.88), (80, 80, 80), 144, table_bspline_gb=1.3),
    "nio-64": Preset("nio-64", 768, 64, (("Ni", 18.0, 32), ("O", 6.0, 32)),
                     (15.76, 15.76, 15.76), (80, 80, 80), 240, table_bspline_gb=2.1),
}


def preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError("unknown preset %r; choose from %s" % (name, ", ".join(sorted(PRESETS))))


def _factor_grid(n, lengths):
    """Integer (a, b, c) with a*b*c == n, shaped like the cell."""
    best = None
    for a in range(1, n + 1):
        if n % a:
            continue
        for b in range(1, n // a + 1):
            if (n // a) % b:
                continue
            c = n // a // b
            spacing = np.array(lengths) / np.array([a, b, c])
            score = spacing.max() / spacing.min()
            if best is None or score < best[0]:
                best = (score, (a, b, c))
    return best[1]


def ion_positions(p):
    """Ions on a simple sub-lattice; species alternate like a rock-salt checkerboard."""
    dims = _factor_grid(p.n_ions, p.cell_lengths)
    idx = np.stack(np.meshgrid(*[np.arange(d) for d in dims], indexing="ij"), -1).reshape(-1, 3)
    pos = (idx + 0.5) / np.array(dims) * np.array(p.cell_lengths)
    parity = idx.sum(axis=1) % 2
    order = np.argsort(parity, kind="stable")
    species = np.empty(p.n_ions, dtype=int)
    start = 0
    for s, (_, _, count) in enumerate(p.species):
        species[order[start:start + count]] = s
        start += count
    return pos, species


@dataclass
class System:
    """A fully specified benchmark system (shared, read-only across threads)."""

    name: str
    cell: Cell
    ions: ParticleSet
    wf_config: WaveFunctionConfig
    hamiltonian: Hamiltonian
    electron_sigma: float = 0.6
    meta: dict = field(default_factory=dict)

    @property
    def n_electrons(self):
        return self.wf_config.n_electrons

    def initial_electrons(self, rng):
        """Electrons scattered around ions in proportion to Z*, spins shuffled."""
        n = self.n_electrons
        if self.ions.n == 0:
            return rng.uniform(0, 1, size=(n, 3)) * np.array(self.cell.lengths)
        z = self.ions.particle_charges()
        counts = np.floor(z / z.sum() * n).astype(int)
        while counts.sum() < n:
            counts[np.argmax(z / z.sum() * n - counts)] += 1
        centers = np.repeat(self.ions.R, counts, axis=0)
        R = centers + rng.normal(scale=self.electron_sigma, size=(n, 3))
        R = R[rng.permutation(n)]
        return self.cell.wrap_position(R)


def _poly_functor(amplitude, r_cut, m=16, power=3):
    return functor_fit(lambda r: amplitude * (1.0 - r / r_cut) ** power, r_cut, m)


def build_system(p, seed=11, jastrow=None, pp=None, spo_dtype=np.float64):
    """Synthetic system for a preset: spline orbitals, smooth functors, model PP."""
    if isinstance(p, str):
        p = preset(p)
    jastrow = p.jastrow if jastrow is None else jastrow
    pp = p.pp if pp is None else pp
    cell = Cell(p.cell_lengths)
    pos, species = ion_positions(p)
    ions = ParticleSet("ion", pos, cell, species=species,
                       species_names=[s for s, _, _ in p.species],
                       charges=[z for _, z, _ in p.species]).freeze()
    gens = random_plane_wave_generators(cell, p.n_spo_built, seed)
    spo = TricubicSPOSet.from_function(cell, p.grid, gens, dtype=spo_dtype)
    half_box = 0.5 * min(p.cell_lengths)
    j1 = j2 = None
    if jastrow:
        rc1 = min(2.5, 0.98 * half_box)
        j1 = {s: _poly_functor(-0.3 * np.sqrt(z), rc1) for s, (_, z, _) in enumerate(p.species)}
        rc2 = min(4.0, 0.98 * half_box)
        j2 = (_poly_functor(0.25, rc2), _poly_functor(0.5, rc2))
    pp_obj = None
    if pp:
        rcp = min(1.6, 0.9 * half_box)
        channels = {s: PPChannel(rcp, [_poly_functor(1.5, rcp, power=2), _poly_functor(-0.8, rcp, power=2)])
                    for s in range(len(p.species))}
        pp_obj = NonlocalPP(channels)
    config = WaveFunctionConfig(spo, p.n_electrons, j1, j2)
    return System(p.name, cell, ions, config, Hamiltonian(True, pp_obj),
                  meta={"preset": p.name, "seed": seed})


def plane_wave_system(n_electrons=4, length=10.0, integer_kvecs=None, phases=None):
    """Free electrons in a periodic box with a plane-wave determinant, no potential.

    The default orbitals per spin are cos and sin of the first shell along x,
    y, z, so the trial function is an exact kinetic eigenstate with energy
    sum_k k^2 / 2 over occupied orbitals of both spins.
    """
    n_half = n_electrons // 2
    cell = Cell.cubic(length)
    if integer_kvecs is None:
        shell = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
        integer_kvecs, phases = [], []
        for vec in shell:
            for ph in ("cos", "sin"):
                integer_kvecs.append(vec)
                phases.append(ph)
        integer_kvecs, phases = integer_kvecs[:n_half], phases[:n_half]
    spo = PlaneWaveSPOSet.commensurate(cell, integer_kvecs, phases)
    ions = ParticleSet("ion", np.zeros((0, 3)), cell).freeze()
    config = WaveFunctionConfig(spo, n_electrons)
    exact = 2.0 * float(np.sum(spo.kinetic_eigenvalues()[:n_half]))
    return System("planewave", cell, ions, config, Hamiltonian(coulomb=False),
                  electron_sigma=0.0, meta={"exact_energy": exact})
