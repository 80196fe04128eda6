"""One- and two-body Jastrow factors built on cubic B-spline functors.

Sign conventions: a table row for particle k stores ``disp = r_j - r_k``.
For a radial term U(|r_k - r_j|) the gradient with respect to r_k is
``-U'(d) disp / d`` and the laplacian is ``U'' + 2 U' / d``.
"""

import numpy as np


def _grad_lap(d, du, d2u, disp):
    """Per-entry gradient wrt the row particle (3, n) and laplacian (n,)."""
    f = du / d
    return -f * disp, d2u + 2 * f


def _double_rows(cell, centers, others):
    """Min-image distances/displacements from each center to each other point, in double."""
    disp = cell.wrap(others[None, :, :] - centers[:, None, :])
    return np.sqrt(np.einsum("ijk,ijk->ij", disp, disp)), np.moveaxis(disp, 2, 0)


class OneBodyJastrow:
    """Electron-ion Jastrow with per-electron value, gradient and laplacian sums (5N)."""

    name = "J1"

    def __init__(self, functors, ions, n_electrons, dtype=np.float64):
        """``functors`` maps ion species index to a CubicBspline1D (missing = no term)."""
        self.dtype = np.dtype(dtype)
        self.n = n_electrons
        self.ions = ions
        self.functors64 = {s: f.astype(np.float64) for s, f in functors.items()}
        self.functors = {s: f.astype(self.dtype) for s, f in functors.items()}
        self.groups = [(s, np.flatnonzero(ions.species == s)) for s in sorted(self.functors)]
        self.Vat = np.zeros(self.n, dtype=self.dtype)
        self.gradAt = np.zeros((3, self.n), dtype=self.dtype)
        self.lapAt = np.zeros(self.n, dtype=self.dtype)
        self.log_value = 0.0
        self._staged = None

    def storage_scalars(self):
        return self.Vat.size + self.gradAt.size + self.lapAt.size

    def memory_bytes(self):
        return self.Vat.nbytes + self.gradAt.nbytes + self.lapAt.nbytes

    @property
    def buffer_size(self):
        return 5 * self.n

    def _row(self, d, disp, functors):
        u = np.zeros((), dtype=d.dtype)
        g = np.zeros(3, dtype=d.dtype)
        lap = np.zeros((), dtype=d.dtype)
        for s, idx in self.groups:
            fu, fdu, fd2u = functors[s].evaluate_vgl(d[idx])
            gi, li = _grad_lap(d[idx], fdu, fd2u, disp[:, idx])
            u = u + fu.sum()
            g = g + gi.sum(axis=1)
            lap = lap + li.sum()
        return u, g, lap

    def evaluate_log(self, ps):
        d, disp = _double_rows(ps.cell, ps.R, self.ions.R)
        for i in range(self.n):
            u, g, lap = self._row(d[i], disp[:, i], self.functors64)
            self.Vat[i] = u
            self.gradAt[:, i] = g
            self.lapAt[i] = lap
        self.log_value = float(self.Vat.sum(dtype=np.float64))
        return self.log_value

    def _value(self, d):
        return sum(self.functors[s].evaluate(d[idx]).sum() for s, idx in self.groups)

    def ratio(self, ps, k):
        d, _ = ps.ab.temp_row()
        delta = float(self._value(d)) - float(self.Vat[k])
        self._staged = (k, delta, None)
        return np.exp(delta)

    def ratio_grad(self, ps, k):
        d, disp = ps.ab.temp_row()
        u, g, lap = self._row(d, disp, self.functors)
        delta = float(u) - float(self.Vat[k])
        self._staged = (k, delta, (u, g, lap))
        return np.exp(delta), g.astype(np.float64)

    def eval_grad(self, ps, k):
        return self.gradAt[:, k].astype(np.float64)

    def accept_move(self, ps, k):
        staged_k, delta, vgl = self._staged
        if vgl is None:
            d, disp = ps.ab.temp_row()
            vgl = self._row(d, disp, self.functors)
        self.Vat[k], self.gradAt[:, k], self.lapAt[k] = vgl
        self.log_value += delta
        self._staged = None

    def reject_move(self, k):
        self._staged = None

    def evaluate_gl(self, ps, G, L):
        G += self.gradAt.T
        L += self.lapAt

    def copy_to_buffer(self, buf):
        n = self.n
        buf[:n] = self.Vat
        buf[n:4 * n] = self.gradAt.ravel()
        buf[4 * n:5 * n] = self.lapAt
        return buf

    def copy_from_buffer(self, buf):
        n = self.n
        self.Vat[:] = buf[:n]
        self.gradAt[:] = buf[n:4 * n].reshape(3, n)
        self.lapAt[:] = buf[4 * n:5 * n]
        self.log_value = float(self.Vat.sum(dtype=np.float64))


class _TwoBodyBase:
    name = "J2"

    def __init__(self, f_same, f_diff, n_electrons, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self.n = n_electrons
        self.n_half = n_electrons // 2
        self.f_same64 = f_same.astype(np.float64)
        self.f_diff64 = f_diff.astype(np.float64)
        self.f_same = f_same.astype(self.dtype)
        self.f_diff = f_diff.astype(self.dtype)
        self.log_value = 0.0
        self._staged = None

    def _row_vgl(self, k, d, disp, double=False):
        """u, grad wrt r_k (3, n), laplacian for one row, split by spin channel."""
        h = self.n_half
        same, diff = (self.f_same64, self.f_diff64) if double else (self.f_same, self.f_diff)
        f_up, f_dn = (same, diff) if k < h else (diff, same)
        u = np.empty(self.n, dtype=d.dtype)
        du = np.empty(self.n, dtype=d.dtype)
        d2u = np.empty(self.n, dtype=d.dtype)
        u[:h], du[:h], d2u[:h] = f_up.evaluate_vgl(d[:h])
        u[h:], du[h:], d2u[h:] = f_dn.evaluate_vgl(d[h:])
        g, lap = _grad_lap(d, du, d2u, disp)
        return u, g, lap

    def _row_value(self, k, d):
        h = self.n_half
        f_up, f_dn = (self.f_same, self.f_diff) if k < h else (self.f_diff, self.f_same)
        return float(f_up.evaluate(d[:h]).sum()) + float(f_dn.evaluate(d[h:]).sum())

    def _full_rows(self, ps):
        from ..distance_tables import SENTINEL
        d, disp = _double_rows(ps.cell, ps.R, ps.R)
        np.fill_diagonal(d, SENTINEL)
        return d, disp

    def reject_move(self, k):
        self._staged = None


class TwoBodyJastrowOpt(_TwoBodyBase):
    """Two-body Jastrow keeping only per-electron sums: 5N scalars."""

    variant = "opt"

    def __init__(self, f_same, f_diff, n_electrons, dtype=np.float64):
        super().__init__(f_same, f_diff, n_electrons, dtype)
        self.Uat = np.zeros(self.n, dtype=self.dtype)
        self.dUat = np.zeros((3, self.n), dtype=self.dtype)
        self.d2Uat = np.zeros(self.n, dtype=self.dtype)

    def storage_scalars(self):
        return self.Uat.size + self.dUat.size + self.d2Uat.size

    def memory_bytes(self):
        return self.Uat.nbytes + self.dUat.nbytes + self.d2Uat.nbytes

    @property
    def buffer_size(self):
        return 5 * self.n

    def evaluate_log(self, ps):
        d, disp = self._full_rows(ps)
        for k in range(self.n):
            u, g, lap = self._row_vgl(k, d[k], disp[:, k], double=True)
            self.Uat[k] = u.sum()
            self.dUat[:, k] = g.sum(axis=1)
            self.d2Uat[k] = lap.sum()
        self.log_value = 0.5 * float(self.Uat.sum(dtype=np.float64))
        return self.log_value

    def _row_compressed(self, k, d, disp):
        """Row terms restricted to partners inside the cutoff.

        Returns (idx, u, grad wrt r_k (3, m), lap); pairs beyond r_cut
        contribute exactly zero and are skipped.
        """
        h = self.n_half
        f_up, f_dn = (self.f_same, self.f_diff) if k < h else (self.f_diff, self.f_same)
        i_up = np.flatnonzero(d[:h] < f_up.r_cut)
        i_dn = np.flatnonzero(d[h:] < f_dn.r_cut) + h
        u1, du1, d2u1 = f_up.evaluate_vgl(d[i_up])
        u2, du2, d2u2 = f_dn.evaluate_vgl(d[i_dn])
        idx = np.concatenate([i_up, i_dn])
        dd = d[idx]
        g, lap = _grad_lap(dd, np.concatenate([du1, du2]), np.concatenate([d2u1, d2u2]),
                           disp[:, idx])
        return idx, np.concatenate([u1, u2]), g, lap

    def ratio(self, ps, k):
        d, _ = ps.aa.temp_row()
        delta = self._row_value(k, d) - float(self.Uat[k])
        self._staged = (k, delta, None)
        return np.exp(delta)

    def ratio_grad(self, ps, k):
        d, disp = ps.aa.temp_row()
        new = self._row_compressed(k, d, disp)
        delta = float(new[1].sum()) - float(self.Uat[k])
        self._staged = (k, delta, new)
        return np.exp(delta), new[2].sum(axis=1).astype(np.float64)

    def eval_grad(self, ps, k):
        return self.dUat[:, k].astype(np.float64)

    def accept_move(self, ps, k):
        _, delta, new = self._staged
        if new is None:
            d, disp = ps.aa.temp_row()
            new = self._row_compressed(k, d, disp)
        d_old, disp_old = ps.aa.get_row(k)
        i_old, u_old, g_old, lap_old = self._row_compressed(k, d_old, disp_old)
        i_new, u_new, g_new, lap_new = new
        # g_* are gradients wrt r_k; the partner electron sees the opposite sign
        self.Uat[i_old] -= u_old
        self.dUat[:, i_old] += g_old
        self.d2Uat[i_old] -= lap_old
        self.Uat[i_new] += u_new
        self.dUat[:, i_new] -= g_new
        self.d2Uat[i_new] += lap_new
        self.Uat[k] = u_new.sum()
        self.dUat[:, k] = g_new.sum(axis=1)
        self.d2Uat[k] = lap_new.sum()
        self.log_value += delta
        self._staged = None

    def evaluate_gl(self, ps, G, L):
        G += self.dUat.T
        L += self.d2Uat

    def copy_to_buffer(self, buf):
        n = self.n
        buf[:n] = self.Uat
        buf[n:4 * n] = self.dUat.ravel()
        buf[4 * n:5 * n] = self.d2Uat
        return buf

    def copy_from_buffer(self, buf):
        n = self.n
        self.Uat[:] = buf[:n]
        self.dUat[:] = buf[n:4 * n].reshape(3, n)
        self.d2Uat[:] = buf[4 * n:5 * n]
        self.log_value = 0.5 * float(self.Uat.sum(dtype=np.float64))


class TwoBodyJastrowRef(_TwoBodyBase):
    """Two-body Jastrow storing full N x N value, gradient (AoS) and laplacian matrices."""

    variant = "ref"

    def __init__(self, f_same, f_diff, n_electrons, dtype=np.float64):
        super().__init__(f_same, f_diff, n_electrons, dtype)
        n = self.n
        self.U = np.zeros((n, n), dtype=self.dtype)
        self.dU = np.zeros((n, n, 3), dtype=self.dtype)
        self.d2U = np.zeros((n, n), dtype=self.dtype)

    def storage_scalars(self):
        return self.U.size + self.dU.size + self.d2U.size

    def memory_bytes(self):
        return self.U.nbytes + self.dU.nbytes + self.d2U.nbytes

    @property
    def buffer_size(self):
        return 5 * self.n * self.n

    def evaluate_log(self, ps):
        d, disp = self._full_rows(ps)
        for k in range(self.n):
            u, g, lap = self._row_vgl(k, d[k], disp[:, k], double=True)
            self.U[k] = u
            self.dU[k] = g.T
            self.d2U[k] = lap
        self.log_value = 0.5 * float(self.U.sum(dtype=np.float64))
        return self.log_value

    def ratio(self, ps, k):
        d, _ = ps.aa.temp_row()
        delta = self._row_value(k, d) - float(self.U[k].sum())
        self._staged = (k, delta, None)
        return np.exp(delta)

    def ratio_grad(self, ps, k):
        d, disp = ps.aa.temp_row()
        new = self._row_vgl(k, d, disp)
        delta = float(new[0].sum()) - float(self.U[k].sum())
        self._staged = (k, delta, new)
        return np.exp(delta), new[1].sum(axis=1).astype(np.float64)

    def eval_grad(self, ps, k):
        return self.dU[k].sum(axis=0).astype(np.float64)

    def accept_move(self, ps, k):
        _, delta, new = self._staged
        if new is None:
            d, disp = ps.aa.temp_row()
            new = self._row_vgl(k, d, disp)
        u, g, lap = new
        self.U[k, :] = u
        self.U[:, k] = u
        self.dU[k, :, :] = g.T
        self.dU[:, k, :] = -g.T
        self.d2U[k, :] = lap
        self.d2U[:, k] = lap
        self.log_value += delta
        self._staged = None

    def evaluate_gl(self, ps, G, L):
        G += self.dU.sum(axis=1)
        L += self.d2U.sum(axis=1)

    def copy_to_buffer(self, buf):
        n2 = self.n * self.n
        buf[:n2] = self.U.ravel()
        buf[n2:4 * n2] = self.dU.ravel()
        buf[4 * n2:5 * n2] = self.d2U.ravel()
        return buf

    def copy_from_buffer(self, buf):
        n, n2 = self.n, self.n * self.n
        self.U[:] = buf[:n2].reshape(n, n)
        self.dU[:] = buf[n2:4 * n2].reshape(n, n, 3)
        self.d2U[:] = buf[4 * n2:5 * n2].reshape(n, n)
        self.log_value = 0.5 * float(self.U.sum(dtype=np.float64))
