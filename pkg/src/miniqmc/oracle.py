"""Brute-force reference evaluations used to check the incremental kernels.

Nothing here reuses incremental state: every call rebuilds the Jastrow sums
with explicit double loops and the determinants with a dense factorization.
Costs are O(N^2) and O(N^3) per call, so keep N small.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError
from .lattice import min_image_disp


@dataclass(frozen=True)
class OracleConfig:
    h: float = 1.0e-5
    rtol_double: float = 1.0e-9
    rtol_mixed: float = 5.0e-4

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("finite-difference step must be positive")


def _cell(config, ions, cell):
    if cell is not None:
        return cell
    if ions is not None:
        return ions.cell
    return config.spo.cell


def brute_jastrow(R, ions, config, cell=None):
    cell = _cell(config, ions, cell)
    R = np.asarray(R, dtype=np.float64)
    n = len(R)
    J = 0.0
    if config.j1:
        for I in range(ions.n):
            f = config.j1.get(int(ions.species[I]))
            if f is None:
                continue
            for i in range(n):
                d, _ = min_image_disp(cell, ions.R[I], R[i])
                J += float(f.evaluate(d))
    if config.j2:
        same, diff = config.j2
        half = n // 2
        for i in range(n):
            for j in range(i + 1, n):
                f = same if (i < half) == (j < half) else diff
                d, _ = min_image_disp(cell, R[i], R[j])
                J += float(f.evaluate(d))
    return J


def brute_logpsi(R, ions, config, cell=None):
    """(log|Psi|, sign) evaluated directly from exp(J) D_up D_down."""
    R = np.asarray(R, dtype=np.float64)
    n = len(R)
    half = n // 2
    logpsi = brute_jastrow(R, ions, config, cell)
    sign = 1.0
    for first in (0, half):
        A = np.empty((half, half))
        for j in range(half):
            A[:, j] = config.spo.evaluate_v(R[first + j])[:half]
        s, logdet = np.linalg.slogdet(A)
        if s == 0 or not np.isfinite(logdet):
            raise SingularMatrixError("singular spin block in oracle")
        logpsi += logdet
        sign *= s
    return float(logpsi), float(sign)


def brute_ratio(R, k, r_new, ions, config, cell=None):
    """Psi(R')/Psi(R) by two independent full evaluations."""
    R = np.asarray(R, dtype=np.float64)
    R2 = R.copy()
    R2[k] = r_new
    l0, s0 = brute_logpsi(R, ions, config, cell)
    l1, s1 = brute_logpsi(R2, ions, config, cell)
    return s0 * s1 * float(np.exp(l1 - l0))


def _check_h(h):
    if not 1.0e-6 <= h <= 1.0e-3:
        raise ValueError("h must lie in [1e-6, 1e-3]")


def _central_grad(R, k, ions, config, h, cell):
    g = np.zeros(3)
    for a in range(3):
        Rp, Rm = R.copy(), R.copy()
        Rp[k, a] += h
        Rm[k, a] -= h
        g[a] = (brute_logpsi(Rp, ions, config, cell)[0]
                - brute_logpsi(Rm, ions, config, cell)[0]) / (2 * h)
    return g


def _central_lap(R, k, ions, config, h, cell, l0):
    lap = 0.0
    for a in range(3):
        Rp, Rm = R.copy(), R.copy()
        Rp[k, a] += h
        Rm[k, a] -= h
        lap += (brute_logpsi(Rp, ions, config, cell)[0] - 2 * l0
                + brute_logpsi(Rm, ions, config, cell)[0]) / (h * h)
    return lap


def fd_grad_logpsi(R, k, ions, config, h=1.0e-5, cell=None, extrapolate=False):
    """Central-difference grad_k ln|Psi|.

    With ``extrapolate`` the O(h^2) error is removed by combining steps h
    and h/2 (Richardson), leaving O(h^4).
    """
    _check_h(h)
    R = np.asarray(R, dtype=np.float64)
    g = _central_grad(R, k, ions, config, h, cell)
    if extrapolate:
        g = (4.0 * _central_grad(R, k, ions, config, h / 2, cell) - g) / 3.0
    return g


def fd_lap_logpsi(R, k, ions, config, h=1.0e-4, cell=None, extrapolate=False):
    """Central-difference laplacian_k ln|Psi| (optionally Richardson-extrapolated)."""
    _check_h(h)
    R = np.asarray(R, dtype=np.float64)
    l0 = brute_logpsi(R, ions, config, cell)[0]
    lap = _central_lap(R, k, ions, config, h, cell, l0)
    if extrapolate:
        lap = (4.0 * _central_lap(R, k, ions, config, h / 2, cell, l0) - lap) / 3.0
    return lap


def brute_local_kinetic(R, ions, config, h=1.0e-4, cell=None):
    """-1/2 sum_k (lap_k ln Psi + |grad_k ln Psi|^2) from extrapolated finite differences."""
    total = 0.0
    for k in range(len(R)):
        g = fd_grad_logpsi(R, k, ions, config, h, cell, extrapolate=True)
        total += fd_lap_logpsi(R, k, ions, config, h, cell, extrapolate=True) + g @ g
    return -0.5 * total


def brute_nonlocal_pp(R, ions, config, pp, rotations=None, cell=None):
    """Quadrature estimate of the nonlocal term with full re-evaluations of Psi.

    ``rotations`` is an iterable of 3x3 matrices consumed in ascending
    (ion, electron) order over pairs inside the cutoff; None means identity.
    """
    cell = _cell(config, ions, cell)
    R = np.asarray(R, dtype=np.float64)
    rotations = iter(rotations) if rotations is not None else None
    l0, s0 = brute_logpsi(R, ions, config, cell)
    total = 0.0
    for I in range(ions.n):
        channel = pp.channels.get(int(ions.species[I]))
        if channel is None:
            continue
        for i in range(len(R)):
            r, disp = min_image_disp(cell, R[i], ions.R[I])
            if r >= channel.r_cut:
                continue
            rot = np.eye(3) if rotations is None else next(rotations)
            unit = -disp / r
            for q, w in enumerate(pp.weights):
                direction = rot @ pp.points[q]
                R2 = R.copy()
                R2[i] = R[i] + disp + r * direction
                l1, s1 = brute_logpsi(R2, ions, config, cell)
                rho = s0 * s1 * np.exp(l1 - l0)
                cos_t = direction @ unit
                for l, v in enumerate(channel.v):
                    total += w * rho * (2 * l + 1) * float(v.evaluate(r)) * (1.0, cos_t)[l]
    return total


def _bspline_basis(t):
    """Uniform cubic B-spline basis B_{-1..2}(t) written out term by term."""
    return np.array([
        (1.0 - t) ** 3 / 6.0,
        (3.0 * t ** 3 - 6.0 * t ** 2 + 4.0) / 6.0,
        (-3.0 * t ** 3 + 3.0 * t ** 2 + 3.0 * t + 1.0) / 6.0,
        t ** 3 / 6.0,
    ])


def brute_spline_value(spo, pos):
    """Orbital values of a tricubic spline set by an explicit 64-term loop."""
    coeffs = np.asarray(spo.coeffs, dtype=np.float64)
    grid = coeffs.shape[:3]
    u = np.asarray(pos, dtype=np.float64) / np.asarray(spo.cell.lengths) * np.asarray(grid)
    i0 = np.floor(u).astype(int)
    t = u - i0
    bx, by, bz = (_bspline_basis(t[d]) for d in range(3))
    out = np.zeros(spo.n_orb)
    for a in range(4):
        ia = (i0[0] + a - 1) % grid[0]
        for b in range(4):
            ib = (i0[1] + b - 1) % grid[1]
            for c in range(4):
                ic = (i0[2] + c - 1) % grid[2]
                out += bx[a] * by[b] * bz[c] * coeffs[ia, ib, ic, :spo.n_orb]
    return out
