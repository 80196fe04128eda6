"""Spin-block Slater determinants with rank-one inverse updates.

Convention: A(i, j) = phi_i(r_j), so electron j owns column j of A and row j
of A^-1. Moving electron j to r' replaces column j by u = phi(r'); the
matrix determinant lemma gives the ratio as the dot product of row j of
A^-1 with u.
"""

import numpy as np
import scipy.linalg

from ..errors import NearSingularUpdate, SingularMatrixError

NEAR_SINGULAR = 1.0e-14


def det_ratio(Ainv, row, u):
    return Ainv[row] @ u


def sherman_morrison_update(Ainv, row, u, ratio=None):
    """In-place A^-1 update after replacing column ``row`` of A with ``u``.

    A'^-1 = A^-1 - (A^-1 u - e_row) (A^-1[row, :]) / ratio
    """
    if ratio is None:
        ratio = det_ratio(Ainv, row, u)
    if abs(ratio) < NEAR_SINGULAR:
        raise NearSingularUpdate("determinant ratio %.3e below %.0e" % (ratio, NEAR_SINGULAR))
    # the update is formed in double even when A^-1 is stored in single precision
    inv = Ainv.astype(np.float64, copy=False)
    col = inv @ np.asarray(u, dtype=np.float64)
    col[row] -= 1.0
    col /= ratio
    Ainv[:] = inv - np.outer(col, inv[row])
    return Ainv


def lu_inverse(A):
    """(A^-1, log|det A|, sign det A) from a dense partial-pivot LU factorization."""
    A = np.asarray(A, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise SingularMatrixError("non-finite entries in Slater matrix")
    lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    diag = np.diag(lu)
    if np.any(diag == 0.0):
        raise SingularMatrixError("Slater matrix is singular")
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    sign = (-1.0) ** swaps * np.prod(np.sign(diag))
    logdet = float(np.sum(np.log(np.abs(diag))))
    Ainv = scipy.linalg.lu_solve((lu, piv), np.eye(len(A)), check_finite=False)
    return Ainv, logdet, float(sign)


class SlaterDetBlock:
    """Determinant of the first ``n`` orbitals over electrons [first, first + n)."""

    def __init__(self, spo, first, n, dtype=np.float64, label="up"):
        if spo.n_orb < n:
            raise ValueError("SPO set has %d orbitals, block needs %d" % (spo.n_orb, n))
        self.spo = spo
        self.first = first
        self.n = n
        self.label = label
        self.name = "Det" + label
        self.dtype = np.dtype(dtype)
        self.Ainv = np.zeros((n, n), dtype=self.dtype)
        self.log_value = 0.0
        self.sign = 1.0
        self._staged = None

    def owns(self, k):
        return self.first <= k < self.first + self.n

    def storage_scalars(self):
        return self.Ainv.size

    def memory_bytes(self):
        return self.Ainv.nbytes

    @property
    def buffer_size(self):
        return self.n * self.n + 2

    def slater_matrix(self, ps):
        n = self.n
        A = np.empty((n, n))
        for j in range(n):
            A[:, j] = self.spo.evaluate_v(ps.R[self.first + j])[:n]
        return A

    def evaluate_log(self, ps):
        Ainv, logdet, sign = lu_inverse(self.slater_matrix(ps))
        self.Ainv[:] = Ainv
        self.log_value = logdet
        self.sign = sign
        return logdet

    def residual(self, ps):
        """max |A A^-1 - I| with A rebuilt from the committed positions."""
        A = self.slater_matrix(ps)
        return float(np.max(np.abs(A @ self.Ainv.astype(np.float64) - np.eye(self.n))))

    def ratio(self, ps, k):
        row = k - self.first
        u = self.spo.evaluate_v(ps.active_pos)[:self.n].astype(self.dtype, copy=False)
        rho = float(self.Ainv[row] @ u)
        self._staged = (k, rho, u)
        return rho

    def ratio_grad(self, ps, k):
        row = k - self.first
        v, g, _ = self.spo.evaluate_vgl(ps.active_pos)
        n = self.n
        a = self.Ainv[row]
        u = v[:n].astype(self.dtype, copy=False)
        rho = float(a @ u)
        grad = (g[:, :n].astype(self.dtype, copy=False) @ a).astype(np.float64) / rho
        self._staged = (k, rho, u)
        return rho, grad

    def eval_grad(self, ps, k):
        row = k - self.first
        v, g, _ = self.spo.evaluate_vgl(ps.R[k])
        n = self.n
        a = self.Ainv[row].astype(np.float64)
        return (g[:, :n] @ a) / (v[:n] @ a)

    def accept_move(self, ps, k):
        _, rho, u = self._staged
        sherman_morrison_update(self.Ainv, k - self.first, u, rho)
        self.log_value += np.log(abs(rho))
        if rho < 0:
            self.sign = -self.sign
        self._staged = None

    def reject_move(self, k):
        self._staged = None

    def evaluate_gl(self, ps, G, L):
        n = self.n
        for j in range(n):
            k = self.first + j
            v, g, lap = self.spo.evaluate_vgl(ps.R[k])
            a = self.Ainv[j].astype(np.float64)
            gk = g[:, :n].astype(np.float64) @ a
            G[k] += gk
            L[k] += lap[:n].astype(np.float64) @ a - gk @ gk

    def copy_to_buffer(self, buf):
        n2 = self.n * self.n
        buf[:n2] = self.Ainv.ravel()
        buf[n2] = self.log_value
        buf[n2 + 1] = self.sign
        return buf

    def copy_from_buffer(self, buf):
        n2 = self.n * self.n
        self.Ainv[:] = buf[:n2].reshape(self.n, self.n)
        self.log_value = float(buf[n2])
        self.sign = float(buf[n2 + 1])
