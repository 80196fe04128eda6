"""Slater-Jastrow trial wavefunction composed of J1, J2 and two spin blocks."""

from dataclasses import dataclass

import numpy as np

from ..drivers.timers import NULL_TIMERS
from .jastrow import OneBodyJastrow, TwoBodyJastrowOpt, TwoBodyJastrowRef
from .slater import SlaterDetBlock

PRECISIONS = {"double": np.float64, "mixed": np.float32}


@dataclass
class WaveFunctionConfig:
    """Everything needed to build a trial wavefunction, in double precision.

    ``j1`` maps ion species index to a radial functor; ``j2`` is a
    (like-spin, unlike-spin) functor pair. Either may be None.
    """

    spo: object
    n_electrons: int
    j1: dict = None
    j2: tuple = None

    def __post_init__(self):
        if self.n_electrons % 2:
            raise ValueError("N must be even (N_up = N_down = N/2)")


class TrialWaveFunction:
    """Composite wavefunction with the particle-by-particle move protocol.

    Typical use::

        ps.make_move(k, r_new)
        rho, grad = psi.ratio_grad(ps, k)
        psi.accept_move(ps, k)   # or psi.reject_move(ps, k)

    ``log_psi`` and ``sign`` are tracked in double precision; component
    state lives in the kernel precision (single in mixed mode).
    """

    def __init__(self, config, electrons, ions=None, variant="opt", precision="double"):
        if variant not in ("ref", "opt"):
            raise ValueError("variant must be 'ref' or 'opt'")
        if precision not in PRECISIONS:
            raise ValueError("precision must be 'double' or 'mixed'")
        self.config = config
        self.variant = variant
        self.precision = precision
        self.dtype = np.dtype(PRECISIONS[precision])
        n = config.n_electrons
        if electrons.n != n:
            raise ValueError("config expects %d electrons, particle set has %d" % (n, electrons.n))
        self.n = n
        self.n_half = n // 2
        self.jastrows = []
        if config.j1:
            if ions is None:
                raise ValueError("a one-body Jastrow needs an ion particle set")
            self.jastrows.append(OneBodyJastrow(config.j1, ions, n, self.dtype))
        if config.j2:
            cls = TwoBodyJastrowRef if variant == "ref" else TwoBodyJastrowOpt
            self.jastrows.append(cls(config.j2[0], config.j2[1], n, self.dtype))
        spo = config.spo.astype(self.dtype)
        self.spo = spo
        self.dets = [SlaterDetBlock(spo, 0, self.n_half, self.dtype, "up"),
                     SlaterDetBlock(spo, self.n_half, self.n_half, self.dtype, "dn")]
        self.components = self.jastrows + self.dets
        self.log_psi = 0.0
        self.sign = 1.0
        self._staged = None
        self.timers = NULL_TIMERS

    def _det(self, k):
        return self.dets[0] if k < self.n_half else self.dets[1]

    @property
    def buffer_size(self):
        return 2 + sum(c.buffer_size for c in self.components)

    def buffer_layout(self):
        """(name, offset, length) of each section, in registration order."""
        out = [("header", 0, 2)]
        off = 2
        for c in self.components:
            out.append((c.name, off, c.buffer_size))
            off += c.buffer_size
        return out

    def copy_to_buffer(self, buf):
        buf[0] = self.log_psi
        buf[1] = self.sign
        off = 2
        for c in self.components:
            c.copy_to_buffer(buf[off:off + c.buffer_size])
            off += c.buffer_size
        return buf

    def copy_from_buffer(self, buf):
        self.log_psi = float(buf[0])
        self.sign = float(buf[1])
        off = 2
        for c in self.components:
            c.copy_from_buffer(buf[off:off + c.buffer_size])
            off += c.buffer_size
        self._staged = None

    def recompute_from_scratch(self, ps):
        """Rebuild every component from the committed positions (double, then cast)."""
        ps.update()
        self.log_psi = float(sum(c.evaluate_log(ps) for c in self.components))
        self.sign = self.dets[0].sign * self.dets[1].sign
        self._staged = None
        return self.log_psi

    def ratio(self, ps, k):
        """Psi(R')/Psi(R) for the move staged in ``ps`` (ps.make_move(k, r'))."""
        timers = self.timers
        log_j = 0.0
        for c in self.jastrows:
            with timers.scope(c.name):
                log_j += np.log(c.ratio(ps, k))
        with timers.scope("Bspline-v"):
            rho_d = self._det(k).ratio(ps, k)
        rho = float(np.exp(log_j)) * rho_d
        self._staged = (k, rho)
        return rho

    def ratio_grad(self, ps, k):
        """Ratio and grad_k ln Psi at the staged position."""
        log_j = 0.0
        grad = np.zeros(3)
        timers = self.timers
        for c in self.jastrows:
            with timers.scope(c.name):
                r, g = c.ratio_grad(ps, k)
            log_j += np.log(r)
            grad += g
        with timers.scope("Bspline-vgh"):
            rho_d, g_d = self._det(k).ratio_grad(ps, k)
        rho = float(np.exp(log_j)) * rho_d
        self._staged = (k, rho)
        return rho, grad + g_d

    def eval_grad(self, ps, k):
        """grad_k ln Psi at the committed position of electron k."""
        with self.timers.scope("SPO-vgl"):
            grad = self._det(k).eval_grad(ps, k)
        for c in self.jastrows:
            with self.timers.scope(c.name):
                grad = grad + c.eval_grad(ps, k)
        return grad

    def accept_move(self, ps, k):
        staged = self._staged
        if staged is None or staged[0] != k:
            raise RuntimeError("accept_move(%d) without a staged ratio" % k)
        rho = staged[1]
        timers = self.timers
        with timers.scope("DetUpdate"):
            self._det(k).accept_move(ps, k)
        for c in self.jastrows:
            with timers.scope(c.name):
                c.accept_move(ps, k)
        ps.accept_move(k)
        self.log_psi += float(np.log(abs(rho)))
        if rho < 0:
            self.sign = -self.sign
        self._staged = None

    def reject_move(self, ps, k):
        for c in self.components:
            c.reject_move(k)
        ps.reject_move(k)
        self._staged = None

    def evaluate_derivatives(self, ps):
        """Per-electron grad ln Psi (N, 3) and laplacian ln Psi (N,), stored in ps.G/ps.L."""
        G = np.zeros((self.n, 3))
        L = np.zeros(self.n)
        for c in self.jastrows:
            with self.timers.scope(c.name):
                c.evaluate_gl(ps, G, L)
        with self.timers.scope("SPO-vgl"):
            for d in self.dets:
                d.evaluate_gl(ps, G, L)
        ps.G[:] = G
        ps.L[:] = L
        return G, L

    def residual(self, ps):
        return max(d.residual(ps) for d in self.dets)

    def memory_by_component(self):
        out = {}
        for c in self.components:
            out[c.name] = out.get(c.name, 0) + c.memory_bytes()
        return out

    def memory_bytes(self):
        return sum(c.memory_bytes() for c in self.components)
