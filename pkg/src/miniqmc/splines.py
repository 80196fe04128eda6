"""Uniform cubic B-spline radial functors (Jastrow and pseudopotential channels)."""

import numpy as np


def _segment_polynomials(coeffs):
    """Power-basis coefficients (a0, a1, a2, a3) in t for every grid segment."""
    c0, c1, c2, c3 = coeffs[:-3], coeffs[1:-2], coeffs[2:-1], coeffs[3:]
    a0 = (c0 + 4.0 * c1 + c2) / 6.0
    a1 = (c2 - c0) / 2.0
    a2 = (c0 - 2.0 * c1 + c2) / 2.0
    a3 = (-c0 + 3.0 * c1 - 3.0 * c2 + c3) / 6.0
    return np.stack([a0, a1, a2, a3], axis=1)


class CubicBspline1D:
    """Cubic B-spline on [0, r_cut) with ``m`` uniform intervals.

    ``coeffs`` holds the m + 3 control coefficients. The functor is
    identically zero, with zero derivatives, for r >= r_cut.
    """

    def __init__(self, r_cut, coeffs, dtype=np.float64):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.ndim != 1 or len(coeffs) < 4:
            raise ValueError("need at least 4 control coefficients")
        if not r_cut > 0:
            raise ValueError("r_cut must be positive")
        self.r_cut = float(r_cut)
        self.m = len(coeffs) - 3
        self.delta = self.r_cut / self.m
        self.coeffs = coeffs
        self.dtype = np.dtype(dtype)
        self._set_tables()

    def _set_tables(self):
        dt = self.dtype.type
        self._poly = _segment_polynomials(self.coeffs).astype(self.dtype)
        self._inv_delta = dt(1.0 / self.delta)
        self._rc = dt(self.r_cut)

    def astype(self, dtype):
        return CubicBspline1D(self.r_cut, self.coeffs, dtype=dtype)

    def evaluate_vgl(self, r):
        """Value, du/dr and d2u/dr2 at distances ``r`` (scalar or array)."""
        r = np.asarray(r, dtype=self.dtype)
        inside = r < self._rc
        x = np.where(inside, r, 0) * self._inv_delta
        i = np.minimum(x.astype(np.int64), self.m - 1)
        t = x - i.astype(self.dtype)
        a = self._poly[i]
        a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
        u = ((a3 * t + a2) * t + a1) * t + a0
        du = ((3 * a3 * t + 2 * a2) * t + a1) * self._inv_delta
        d2u = (6 * a3 * t + 2 * a2) * (self._inv_delta * self._inv_delta)
        zero = self.dtype.type(0)
        return (np.where(inside, u, zero), np.where(inside, du, zero),
                np.where(inside, d2u, zero))

    def evaluate(self, r):
        r = np.asarray(r, dtype=self.dtype)
        inside = r < self._rc
        x = np.where(inside, r, 0) * self._inv_delta
        i = np.minimum(x.astype(np.int64), self.m - 1)
        t = x - i.astype(self.dtype)
        a = self._poly[i]
        u = ((a[..., 3] * t + a[..., 2]) * t + a[..., 1]) * t + a[..., 0]
        return np.where(inside, u, self.dtype.type(0))

    __call__ = evaluate

    def knot_values(self):
        c = self.coeffs
        return (c[:-2] + 4.0 * c[1:-1] + c[2:]) / 6.0

    def __repr__(self):
        return "CubicBspline1D(r_cut=%g, m=%d, dtype=%s)" % (self.r_cut, self.m, self.dtype)


def functor_fit(u, r_cut, m, dtype=np.float64):
    """Interpolate ``u`` at the m + 1 knots of [0, r_cut], with u(r_cut) = 0.

    Natural end conditions (zero second derivative) close the system.
    """
    if m < 4:
        raise ValueError("need at least 4 grid intervals, got %d" % m)
    knots = np.linspace(0.0, r_cut, m + 1)
    f = np.array([float(u(r)) for r in knots])
    f[-1] = 0.0
    size = m + 3
    A = np.zeros((size, size))
    b = np.zeros(size)
    for i in range(m + 1):
        A[i, i:i + 3] = (1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0)
        b[i] = f[i]
    A[m + 1, 0:3] = (1.0, -2.0, 1.0)
    A[m + 2, m:m + 3] = (1.0, -2.0, 1.0)
    return CubicBspline1D(r_cut, np.linalg.solve(A, b), dtype=dtype)


def functor_eval_vgl(f, r):
    u, du, d2u = f.evaluate_vgl(r)
    return float(u), float(du), float(d2u)
