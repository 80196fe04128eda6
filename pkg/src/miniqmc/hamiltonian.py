"""Local energy: kinetic, minimum-image Coulomb and a model nonlocal pseudopotential.

Hartree-like units throughout. Periodic Coulomb sums use the minimum-image
pair distance only (no Ewald correction).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import DivergenceError

COINCIDENT = 1.0e-10


def icosahedral_rule():
    """12 unit vectors on the icosahedron vertices with equal weights 1/12."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    pts = []
    for a in (1.0, -1.0):
        for b in (phi, -phi):
            pts += [(0.0, a, b), (a, b, 0.0), (b, 0.0, a)]
    pts = np.array(pts)
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    return pts, np.full(len(pts), 1.0 / len(pts))


@dataclass
class PPChannel:
    """Nonlocal channels for one ion species: v_l(r) for l = 0, 1 and cutoff r_c."""

    r_cut: float
    v: list


@dataclass
class NonlocalPP:
    channels: dict
    points: np.ndarray = None
    weights: np.ndarray = None

    def __post_init__(self):
        if self.points is None:
            self.points, self.weights = icosahedral_rule()
        if not np.isclose(np.sum(self.weights), 1.0):
            raise ValueError("quadrature weights must sum to 1")


@dataclass
class LocalEnergyBreakdown:
    kinetic: float
    coulomb_ee: float = 0.0
    coulomb_ei: float = 0.0
    nonlocal_: float = 0.0
    total: float = field(init=False)

    def __post_init__(self):
        self.total = self.kinetic + self.coulomb_ee + self.coulomb_ei + self.nonlocal_

    def as_dict(self):
        return {"kinetic": self.kinetic, "coulomb_ee": self.coulomb_ee,
                "coulomb_ei": self.coulomb_ei, "nonlocal": self.nonlocal_,
                "total": self.total}


def kinetic(G, L):
    """-1/2 sum_k (L_k + |G_k|^2) with G, L the derivatives of ln Psi."""
    G = np.asarray(G, dtype=np.float64)
    return -0.5 * float(np.sum(L) + np.sum(G * G))


def coulomb_ee(electrons, table=None):
    table = electrons.aa if table is None else table
    d = np.asarray(table.pair_distances(), dtype=np.float64)
    if d.size and d.min() < COINCIDENT:
        raise DivergenceError("coincident electrons (r = %.3e)" % d.min())
    return float(np.sum(1.0 / d))


def coulomb_ei(electrons, ions, table=None):
    table = electrons.ab if table is None else table
    m = ions.n
    d = np.asarray(table.dist[:, :m], dtype=np.float64)
    if d.size and d.min() < COINCIDENT:
        raise DivergenceError("electron on top of an ion (r = %.3e)" % d.min())
    z = ions.particle_charges()
    return -float(np.sum(z[None, :] / d))


def _rotation(rng):
    if rng is None:
        return np.eye(3)
    return Rotation.random(random_state=rng).as_matrix()


def nonlocal_pp(psi, electrons, ions, pp, rng=None, table=None):
    """Spherical-quadrature estimate of sum_I V_NL Psi / Psi.

    Every quadrature point is a virtual move of one electron onto the sphere
    of radius r = |r_i - r_I| around ion I. Moves are staged and rejected,
    so no committed state changes. With ``rng`` the rule is randomly rotated
    for each (ion, electron) pair, drawn in ascending (ion, electron) order.
    """
    table = electrons.ab if table is None else table
    total = 0.0
    for I in range(ions.n):
        channel = pp.channels.get(int(ions.species[I]))
        if channel is None:
            continue
        for i in range(electrons.n):
            r = float(table.dist[i, I])
            if r >= channel.r_cut:
                continue
            to_ion = table.disp[:, i, I].astype(np.float64)
            unit = -to_ion / r
            quad = pp.points @ _rotation(rng).T
            cos_theta = quad @ unit
            center = electrons.R[i] + to_ion
            vl = [float(v.evaluate(r)) for v in channel.v]
            acc = 0.0
            for q in range(len(quad)):
                electrons.make_move(i, center + r * quad[q])
                rho = psi.ratio(electrons, i)
                psi.reject_move(electrons, i)
                legendre = (1.0, cos_theta[q])
                acc += pp.weights[q] * rho * sum(
                    (2 * l + 1) * vl[l] * legendre[l] for l in range(len(vl)))
            total += acc
    return total


class Hamiltonian:
    """Bundle of the local-energy terms enabled for a system."""

    def __init__(self, coulomb=True, pp=None):
        self.coulomb = coulomb
        self.pp = pp

    def local_energy(self, psi, electrons, ions=None, rng=None, timers=None):
        """E_L at the committed configuration.

        Requires fresh tables (``electrons.update()``) and derivatives
        (``psi.evaluate_derivatives``) for the current positions.
        """
        ke = kinetic(electrons.G, electrons.L)
        ee = ei = nl = 0.0
        if self.coulomb:
            ee = coulomb_ee(electrons)
            if ions is not None and ions.n:
                ei = coulomb_ei(electrons, ions)
        if self.pp is not None and ions is not None:
            if timers is not None:
                with timers.scope("NLPP"):
                    nl = nonlocal_pp(psi, electrons, ions, self.pp, rng)
            else:
                nl = nonlocal_pp(psi, electrons, ions, self.pp, rng)
        return LocalEnergyBreakdown(ke, ee, ei, nl)


def local_energy(psi, electrons, ions=None, pp=None, rng=None, coulomb=True):
    return Hamiltonian(coulomb, pp).local_energy(psi, electrons, ions, rng)
