"""Isolated kernel loops that mimic the particle-by-particle access pattern.

Each benchmark sweeps electrons in order, stages a Gaussian move, reads what
a wavefunction component would read, and accepts about half the moves. The
random stream is fixed by ``seed``, so ``ref`` and ``opt`` see the same
moves and their checksums can be compared directly.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .distance_tables import ABTable, PackedAATable, PaddedAATable
from .drivers.timers import KernelTimers
from .lattice import Cell
from .oracle import brute_spline_value
from .particles import ParticleSet
from .presets import _poly_functor, ion_positions, preset
from .spo import TricubicSPOSet, random_plane_wave_generators
from .wavefunction import PRECISIONS, OneBodyJastrow, TwoBodyJastrowOpt, TwoBodyJastrowRef

# electrons per bohr^3 used when only --n is given (close to the NiO cells)
DEFAULT_DENSITY = 0.19


@dataclass
class KernelResult:
    kernel: str
    n: int
    n_moves: int
    seconds: float
    checksum: float
    timers: KernelTimers
    meta: dict = field(default_factory=dict)
    verified: bool = None

    @property
    def throughput(self):
        """Moves (or orbital evaluations) per second."""
        return self.n_moves / self.seconds if self.seconds > 0 else math.inf


def _cell_for(n, preset_name=None):
    if preset_name is not None:
        return Cell(preset(preset_name).cell_lengths)
    return Cell.cubic((n / DEFAULT_DENSITY) ** (1.0 / 3.0))


def _electrons(n, cell, rng, variant, policy, dtype):
    R = rng.uniform(size=(n, 3)) * np.asarray(cell.lengths)
    e = ParticleSet("e", R, cell, dtype=dtype)
    if variant == "ref":
        e.add_table(PackedAATable(e))
    else:
        e.add_table(PaddedAATable(e, policy=policy))
    return e


def _moves(rng, n, step_size=0.3):
    return rng.normal(scale=step_size, size=(n, 3)), rng.uniform(size=n)


def disttable_bench(n=256, steps=2, variant="opt", precision="double", policy="on_the_fly",
                    seed=2017, preset_name=None, timers=None):
    """Distance-table kernel: stage row, read the old row, accept half.

    Checksum is the correctly rounded sum of all pair distances at the end,
    which is independent of storage order.
    """
    rng = np.random.default_rng(seed)
    cell = _cell_for(n, preset_name)
    e = _electrons(n, cell, rng, variant, policy, PRECISIONS[precision])
    timers = timers or KernelTimers()
    e.timers = timers
    aa = e.aa
    e.update()
    t0 = time.perf_counter()
    for _ in range(steps):
        delta, u = _moves(rng, n)
        for k in range(n):
            with timers.scope("DistTable"):
                aa.get_row(k)
            e.make_move(k, e.R[k] + delta[k])
            if u[k] < 0.5:
                e.accept_move(k)
            else:
                e.reject_move(k)
    seconds = time.perf_counter() - t0
    checksum = math.fsum(float(x) for x in aa.pair_distances())
    meta = {"variant": variant, "precision": precision, "policy": e.aa.__class__.__name__
            if variant == "ref" else policy, "cell": list(cell.lengths),
            "storage_scalars": int(aa.storage_scalars())}
    return KernelResult("disttable", n, steps * n, seconds, checksum, timers, meta)


def jastrow_bench(n=256, steps=2, variant="opt", precision="double", policy="on_the_fly",
                  seed=2017, preset_name=None, timers=None, verify=False):
    """One- and two-body Jastrow kernel loop: eval_grad, ratio_grad, accept/reject.

    Checksum is the final log J from the incrementally maintained state.
    With ``verify`` the checksum is compared with a from-scratch evaluation.
    """
    rng = np.random.default_rng(seed)
    cell = _cell_for(n, preset_name)
    dtype = PRECISIONS[precision]
    e = _electrons(n, cell, rng, variant, policy, dtype)
    timers = timers or KernelTimers()
    e.timers = timers
    half_box = 0.5 * min(cell.lengths)
    rc2 = min(4.0, 0.98 * half_box)
    j2_cls = TwoBodyJastrowRef if variant == "ref" else TwoBodyJastrowOpt
    comps = [j2_cls(_poly_functor(0.25, rc2), _poly_functor(0.5, rc2), n, dtype)]
    if preset_name is not None:
        p = preset(preset_name)
        pos, species = ion_positions(p)
        ions = ParticleSet("ion", pos, cell, species=species,
                           charges=[z for _, z, _ in p.species]).freeze()
        e.add_table(ABTable(e, ions))
        rc1 = min(2.5, 0.98 * half_box)
        comps.insert(0, OneBodyJastrow(
            {s: _poly_functor(-0.3 * math.sqrt(z), rc1) for s, (_, z, _) in enumerate(p.species)},
            ions, n, dtype))
    e.update()
    log_j = sum(c.evaluate_log(e) for c in comps)
    t0 = time.perf_counter()
    for _ in range(steps):
        delta, u = _moves(rng, n)
        for k in range(n):
            for c in comps:
                with timers.scope(c.name):
                    c.eval_grad(e, k)
            e.make_move(k, e.R[k] + delta[k])
            rho = 1.0
            for c in comps:
                with timers.scope(c.name):
                    r, _ = c.ratio_grad(e, k)
                rho *= float(r)
            if u[k] < 0.5:
                for c in comps:
                    with timers.scope(c.name):
                        c.accept_move(e, k)
                e.accept_move(k)
                log_j += math.log(rho)
            else:
                for c in comps:
                    c.reject_move(k)
                e.reject_move(k)
    seconds = time.perf_counter() - t0
    res = KernelResult("jastrow", n, steps * n, seconds, float(log_j), timers,
                       {"variant": variant, "precision": precision,
                        "components": [c.name for c in comps],
                        "j2_per_walker_bytes": int(comps[-1].buffer_size * np.dtype(dtype).itemsize)})
    if verify:
        e.update()
        fresh = sum(c.evaluate_log(e) for c in comps)
        tol = 1e-9 if precision == "double" else 5e-4
        res.meta["scratch_checksum"] = float(fresh)
        res.verified = abs(fresh - log_j) <= tol * max(1.0, abs(fresh))
    return res


def bspline_bench(preset_name="graphite", n_orb=None, samples=512, precision="double",
                  seed=2017, max_table_bytes=256 * 2 ** 20, timers=None, verify=False):
    """Tricubic SPO evaluation at random positions (v and vgh, as in the sweep).

    The preset grid is coarsened uniformly when the synthetic table would
    exceed ``max_table_bytes``; evaluation cost does not depend on the grid.
    """
    p = preset(preset_name)
    n_orb = n_orb or p.n_spo_built
    grid = np.array(p.grid)
    from .containers import padded_size
    lanes = padded_size(n_orb)
    scaled = False
    while np.prod(grid) * lanes * 8 > max_table_bytes and grid.min() > 8:
        grid = np.maximum(8, grid // 2)
        scaled = True
    cell = Cell(p.cell_lengths)
    gens = random_plane_wave_generators(cell, n_orb, seed)
    spo = TricubicSPOSet.from_function(cell, tuple(int(g) for g in grid), gens)
    fast = spo.astype(PRECISIONS[precision])
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(samples, 3)) * np.asarray(cell.lengths)
    timers = timers or KernelTimers()
    acc = 0.0
    t0 = time.perf_counter()
    for r in pts:
        with timers.scope("Bspline-v"):
            v = fast.evaluate_v(r)
        with timers.scope("Bspline-vgh"):
            fast.evaluate_vgh(r)
        acc += float(np.sum(v, dtype=np.float64))
    seconds = time.perf_counter() - t0
    res = KernelResult("bspline", n_orb, 2 * samples, seconds, acc, timers,
                       {"preset": p.name, "grid": [int(g) for g in grid], "grid_scaled": scaled,
                        "n_orb": n_orb, "precision": precision,
                        "table_bytes": int(fast.nbytes)})
    if verify:
        tol = 1e-10 if precision == "double" else 1e-4
        worst = 0.0
        for r in pts[:8]:
            ref = brute_spline_value(spo, r)
            worst = max(worst, float(np.max(np.abs(fast.evaluate_v(r) - ref))
                                     / max(1.0, np.max(np.abs(ref)))))
        res.meta["max_rel_err"] = worst
        res.verified = worst < tol
    return res
