"""Quadrature and finite-difference weight machinery on segmented grids."""

from __future__ import annotations

import numpy as np


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at point z on the
    arbitrary node set x (Fornberg's algorithm).

    Returns an (m+1, len(x)) array; row j gives the j-th derivative.
    """
    n = len(x)
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for kk in range(mn, 0, -1):
                    c[kk, i] = c1 * (kk * c[kk - 1, i - 1] - c5 * c[kk, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for kk in range(mn, 0, -1):
                c[kk, j] = ((c4 * c[kk, j]) - kk * c[kk - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def gregory_weights(n: int, h: float) -> np.ndarray:
    """Composite trapezoid weights with fourth-order Gregory end
    corrections on n uniform nodes with spacing h (n >= 7).

    For n < 7 falls back to Simpson (odd n) or plain trapezoid.
    """
    if n < 2:
        raise ValueError("gregory_weights: need at least two nodes")
    w = np.ones(n)
    if n >= 7:
        # Gregory corrections through second differences: O(h^4) error,
        # endpoint weights [3/8, 7/6, 23/24]
        w[0] = w[-1] = 3.0 / 8.0
        w[1] = w[-2] = 7.0 / 6.0
        w[2] = w[-3] = 23.0 / 24.0
    elif n % 2 == 1:
        w = np.ones(n)
        w[0] = w[-1] = 1.0 / 3.0
        w[1:-1:2] = 4.0 / 3.0
        w[2:-1:2] = 2.0 / 3.0
    else:
        w[0] = w[-1] = 0.5
    return w * h


_CC_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def clenshaw_curtis(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Clenshaw-Curtis nodes (ascending, in [-1, 1]) and weights.

    Spectrally accurate for integrands analytic on the segment and exact
    for polynomials of degree < n, which is what makes the polynomial
    cutoff transitions integrable to machine precision.
    """
    if n < 2:
        raise ValueError("clenshaw_curtis: need n >= 2")
    hit = _CC_CACHE.get(n)
    if hit is not None:
        return hit
    j = np.arange(n)
    t = -np.cos(np.pi * j / (n - 1))
    t[0], t[-1] = -1.0, 1.0
    V = np.polynomial.chebyshev.chebvander(t, n - 1)
    k = np.arange(n)
    mom = np.zeros(n)
    even = (k % 2 == 0)
    mom[even] = 2.0 / (1.0 - k[even] ** 2)
    w = np.linalg.solve(V.T, mom)
    _CC_CACHE[n] = (t, w)
    return t, w


def cc_segment(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Clenshaw-Curtis nodes and weights mapped to [a, b]."""
    t, w = clenshaw_curtis(n)
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), w * half


_CUMINT_CACHE: dict[int, np.ndarray] = {}


def cheb_cumint_matrix(n: int) -> np.ndarray:
    """Matrix J with (J y)_i = int_{-1}^{t_i} p(t) dt for the Chebyshev
    interpolant p of the values y on the n Clenshaw-Curtis nodes.
    Bounded operator: the well-conditioned building block for spectral
    two-point ODE solves in integral form."""
    hit = _CUMINT_CACHE.get(n)
    if hit is not None:
        return hit
    t, _ = clenshaw_curtis(n)
    V = np.polynomial.chebyshev.chebvander(t, n - 1)
    Vinv = np.linalg.inv(V)
    cols = np.zeros((n, n))
    for j in range(n):
        anti = np.polynomial.chebyshev.chebint(Vinv[:, j])
        vals = np.polynomial.chebyshev.chebval(t, anti)
        cols[:, j] = vals - vals[0]
    _CUMINT_CACHE[n] = cols
    return cols


_KINK_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def cc_kink_coefficients(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature-defect coefficients of the Clenshaw-Curtis rule for
    integrands with a corner at a node.

    C1[p] = int (t - t_p)_+ dt - sum_j w_j (t_j - t_p)_+   (ramp defect),
    C0[p] = int H(t - t_p) dt - sum_j w_j H(t_j - t_p)     (step defect),

    with H(0) counted as 1/2 (midpoint convention for diagonal entries).
    Kernel compositions with known diagonal jumps subtract these defects
    to restore high-order accuracy.
    """
    hit = _KINK_CACHE.get(n)
    if hit is not None:
        return hit
    t, w = clenshaw_curtis(n)
    C1 = np.empty(n)
    C0 = np.empty(n)
    for p in range(n):
        ramp = np.maximum(t - t[p], 0.0)
        C1[p] = 0.5 * (1.0 - t[p]) ** 2 - float(np.dot(w, ramp))
        step = np.where(t > t[p], 1.0, 0.0)
        step[p] = 0.5
        C0[p] = (1.0 - t[p]) - float(np.dot(w, step))
    _KINK_CACHE[n] = (C1, C0)
    return C1, C0


_DIFF_CACHE: dict[int, np.ndarray] = {}


def cheb_diff_matrix(n: int) -> np.ndarray:
    """Spectral differentiation matrix on the n Clenshaw-Curtis nodes of
    [-1, 1] (values -> derivative values)."""
    hit = _DIFF_CACHE.get(n)
    if hit is not None:
        return hit
    t, _ = clenshaw_curtis(n)
    V = np.polynomial.chebyshev.chebvander(t, n - 1)
    Vd = np.zeros((n, n))
    for k in range(1, n):
        ek = np.zeros(k + 1)
        ek[k] = 1.0
        Vd[:, k] = np.polynomial.chebyshev.chebval(
            t, np.polynomial.chebyshev.chebder(ek))
    D = np.linalg.solve(V.T, Vd.T).T
    _DIFF_CACHE[n] = D
    return D


def chebyshev_cumint(theta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Cumulative integral of y from theta[0], with theta the (ascending)
    Clenshaw-Curtis nodes of one segment: Chebyshev antiderivative."""
    n = len(theta)
    t, _ = clenshaw_curtis(n)
    V = np.polynomial.chebyshev.chebvander(t, n - 1)
    coef = np.linalg.solve(V, np.asarray(y, dtype=float))
    anti = np.polynomial.chebyshev.chebint(coef)
    vals = np.polynomial.chebyshev.chebval(t, anti)
    half = 0.5 * (theta[-1] - theta[0])
    return (vals - vals[0]) * half
