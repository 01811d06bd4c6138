"""Least-squares fitting helpers for slopes, envelopes and inverse-log series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .specfun import ilg


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x (requires x, y > 0)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (x > 0) & (y > 0)
    if mask.sum() < 2:
        raise ValueError("loglog_slope: need at least two positive samples")
    return float(np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)[0])


@dataclass(frozen=True)
class EnvelopeFit:
    """Smallest constant C with |values| <= C * shape over the samples."""
    constant: float
    worst_index: int
    stable: bool
    refined_constant: float | None = None

    @property
    def relative_change(self) -> float:
        if self.refined_constant is None:
            return 0.0
        return abs(self.refined_constant - self.constant) / self.constant


def fit_envelope(values, shape, refined: tuple | None = None,
                 stability: float = 0.10) -> EnvelopeFit:
    values = np.abs(np.asarray(values, dtype=float)).ravel()
    shape = np.asarray(shape, dtype=float).ravel()
    if np.any(shape <= 0):
        raise ValueError("fit_envelope: shape must be positive")
    ratio = values / shape
    i = int(np.argmax(ratio))
    c = float(ratio[i])
    if refined is None:
        return EnvelopeFit(c, i, True)
    rv, rs = refined
    rc = float(np.max(np.abs(np.asarray(rv)).ravel() / np.asarray(rs).ravel()))
    stable = c > 0 and abs(rc - c) / c <= stability
    return EnvelopeFit(c, i, stable, rc)


def fit_lower_constant(values, shape) -> float:
    """Largest constant c with values >= c * shape (values, shape > 0)."""
    values = np.asarray(values, dtype=float).ravel()
    shape = np.asarray(shape, dtype=float).ravel()
    return float(np.min(values / shape))


def ilg_powers(ks, deg: int) -> np.ndarray:
    """Vandermonde matrix in powers of ilg(k), shape (len(ks), deg+1)."""
    il = ilg(np.asarray(ks, dtype=float))
    return np.vander(il, deg + 1, increasing=True)


def fit_ilg_series(ks, values, deg: int):
    """Fit values[j] ~ sum_i c_i ilg(k_j)^i by least squares.

    values may be shape (nk,) or (nk, m); the coefficient array comes back
    as (deg+1,) or (deg+1, m).
    """
    V = ilg_powers(ks, deg)
    vals = np.asarray(values, dtype=float)
    coef, *_ = np.linalg.lstsq(V, vals, rcond=None)
    return coef


def residual_after(ks, values, coef, terms: int):
    """|values - partial ilg sum with `terms` coefficients| per k."""
    V = ilg_powers(ks, coef.shape[0] - 1)
    partial = V[:, :terms] @ coef[:terms]
    return np.abs(np.asarray(values) - partial)


def ilg_residual_slope(ks, values, coef, terms: int) -> float:
    """Fitted order (in ilg k) of the residual after `terms` series terms."""
    res = residual_after(ks, values, coef, terms)
    if res.ndim > 1:
        res = np.max(res, axis=tuple(range(1, res.ndim)))
    return loglog_slope(ilg(np.asarray(ks, dtype=float)), res)
