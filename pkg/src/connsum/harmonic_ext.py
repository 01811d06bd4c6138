"""Harmonic extensions on the product ends and exterior
Dirichlet-to-Neumann operators as per-channel multipliers.

On the two-dimensional end, boundary data on the gluing sphere r = R
decomposes into channels (m, l): Fourier mode m on the angle, eigenvalue
mu_l^2 on the cross-section.  The bounded harmonic extension has radial
profiles

    (r/R)^{-|m|}                       l = 0, m != 0,
    1                                  (m, l) = (0, 0),
    K_{|m|}(mu_l r) / K_{|m|}(mu_l R)  l >= 1,

and the decaying extension on the n-dimensional end replaces the powers
by r^{-(n-2)-m} and the Bessel profile by r^{-(n-2)/2} K_{(n-2)/2+m}.
The exterior DtN operator is the diagonal map f -> lambda_{ml} f with
lambda_{ml} = -(d/dr) b_{ml}(R), a first-order symbol: lambda ~ |m|/R
at large m and ~ mu_l at large mu_l R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun as sf
from .errors import DomainError, TruncationError
from .model import EndSpec

Channel = tuple[int, int]  # (angular degree m >= 0, cross index l >= 0)


@dataclass(frozen=True)
class BoundaryData:
    """Channel coefficients of a function on the gluing sphere of one end."""
    end: str                      # "minus" | "plus"
    R: float
    coeffs: dict[Channel, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.end not in ("minus", "plus"):
            raise DomainError("BoundaryData.end must be 'minus' or 'plus'")
        for (m, l) in self.coeffs:
            if m < 0 or l < 0:
                raise DomainError(f"invalid channel {(m, l)}")

    @staticmethod
    def constant(end: str, R: float, value: float = 1.0) -> "BoundaryData":
        return BoundaryData(end, R, {(0, 0): value})


def _profile_minus(end: EndSpec, m: int, l: int, R: float):
    """(value, d/dr) of the bounded minus-end profile, normalized to 1 at R."""
    if l == 0:
        if m == 0:
            return (lambda r: np.ones_like(np.asarray(r, float)),
                    lambda r: np.zeros_like(np.asarray(r, float)))
        return (lambda r: (np.asarray(r, float) / R) ** (-m),
                lambda r: -m / R * (np.asarray(r, float) / R) ** (-m - 1))
    mu = end.cross_section.mu(l)
    den = sf.bessel_K(float(m), mu * R)
    return (lambda r: sf.bessel_K(float(m), mu * np.asarray(r, float)) / den,
            lambda r: mu * sf.bessel_K_prime(float(m), mu * np.asarray(r, float)) / den)


def _profile_plus(end: EndSpec, m: int, l: int, R: float):
    """(value, d/dr) of the decaying plus-end profile, normalized to 1 at R."""
    n = end.euclidean_dim
    if l == 0:
        p = -(n - 2.0) - m
        return (lambda r: (np.asarray(r, float) / R) ** p,
                lambda r: p / R * (np.asarray(r, float) / R) ** (p - 1))
    mu = end.cross_section.mu(l)
    nu = 0.5 * (n - 2.0) + m
    a = -0.5 * (n - 2.0)
    den = R ** a * sf.bessel_K(nu, mu * R)

    def val(r):
        r = np.asarray(r, float)
        return r ** a * sf.bessel_K(nu, mu * r) / den

    def der(r):
        r = np.asarray(r, float)
        return (a * r ** (a - 1) * sf.bessel_K(nu, mu * r)
                + r ** a * mu * sf.bessel_K_prime(nu, mu * r)) / den

    return val, der


def channel_profile(end: EndSpec, end_tag: str, m: int, l: int, R: float):
    if end_tag == "minus":
        return _profile_minus(end, m, l, R)
    return _profile_plus(end, m, l, R)


@dataclass(frozen=True)
class HarmonicExtension:
    """Harmonic continuation of boundary data into one end."""
    end_spec: EndSpec
    data: BoundaryData

    @property
    def R(self) -> float:
        return self.data.R

    def profile(self, m: int, l: int):
        return channel_profile(self.end_spec, self.data.end, m, l, self.R)

    def channel_values(self, m: int, l: int, r):
        val, _ = self.profile(m, l)
        return self.data.coeffs.get((m, l), 0.0) * val(r)

    def channel_derivative(self, m: int, l: int, r):
        _, der = self.profile(m, l)
        return self.data.coeffs.get((m, l), 0.0) * der(r)

    def sup_bound(self, r):
        """sum over channels of |coefficient| * |profile(r)|; with angular
        factors bounded by one this dominates sup |u| on the sphere of
        radius r."""
        out = np.zeros_like(np.asarray(r, dtype=float))
        for (m, l) in self.data.coeffs:
            out = out + np.abs(self.channel_values(m, l, r))
        return out

    def limit_at_infinity(self) -> float:
        """Value at infinity: the (0,0) coefficient on the minus end, zero
        on the plus end."""
        if self.data.end == "minus":
            return self.data.coeffs.get((0, 0), 0.0)
        return 0.0

    @property
    def tail_rate(self) -> float:
        """Exponential decay rate of the aggregate l >= 1 part."""
        ev = self.end_spec.cross_section.eigenvalues
        return math.sqrt(ev[1]) if len(ev) > 1 else math.inf

    def asymptotic_coefficients(self, max_power: int) -> dict[int, float]:
        """Coefficients of the expansion in powers r^{-j} (l = 0 part)."""
        out: dict[int, float] = {}
        for (m, l), c in self.data.coeffs.items():
            if l != 0:
                continue
            if self.data.end == "minus":
                j = m
            else:
                j = self.end_spec.euclidean_dim - 2 + m
            if j <= max_power:
                out[j] = out.get(j, 0.0) + c * self.R ** j
        return out

    def ode_residual(self, m: int, l: int, r, h: float = 1e-3):
        """Residual of the radial channel ODE on the profile, with the
        second derivative from five-point differences of the analytic
        first derivative."""
        val, der = self.profile(m, l)
        r = np.asarray(r, dtype=float)
        hh = h * r
        d2 = (-der(r + 2 * hh) + 8 * der(r + hh) - 8 * der(r - hh)
              + der(r - 2 * hh)) / (12 * hh)
        n = self.end_spec.euclidean_dim
        mu2 = self.end_spec.cross_section.eigenvalues[l]
        pot = m * (m + n - 2) / r ** 2 + mu2
        return -d2 - (n - 1.0) / r * der(r) + pot * val(r)


def extend_minus(end: EndSpec, f: BoundaryData,
                 tail_tol: float = 1e-12) -> HarmonicExtension:
    """Unique bounded harmonic extension into the two-dimensional end.

    Tends to the (0,0) coefficient times the constant mode at infinity.
    """
    if f.end != "minus":
        raise DomainError("extend_minus needs minus-end boundary data")
    if end.euclidean_dim != 2:
        raise DomainError("extend_minus requires a two-dimensional end")
    _check_truncation(end, f, tail_tol)
    return HarmonicExtension(end, f)


def extend_plus(end: EndSpec, f: BoundaryData,
                tail_tol: float = 1e-12) -> HarmonicExtension:
    """Unique decaying harmonic extension, O(r^{2-n}) at infinity."""
    if f.end != "plus":
        raise DomainError("extend_plus needs plus-end boundary data")
    if end.euclidean_dim < 3:
        raise DomainError("extend_plus requires an end of dimension >= 3")
    _check_truncation(end, f, tail_tol)
    return HarmonicExtension(end, f)


def _check_truncation(end: EndSpec, f: BoundaryData, tol: float):
    n_modes = len(end.cross_section.eigenvalues)
    for (m, l) in f.coeffs:
        if l >= n_modes:
            raise TruncationError(
                f"channel (m={m}, l={l}) beyond the configured spectrum "
                f"truncation ({n_modes} modes)")


def dtn_multiplier(end: EndSpec, end_tag: str, m: int, l: int, R: float) -> float:
    """Exterior DtN eigenvalue on channel (m, l): minus the radial
    derivative at R of the unit-normalized harmonic profile."""
    if end_tag == "minus":
        if l == 0:
            return m / R
        mu = end.cross_section.mu(l)
        return -mu * sf.bessel_K_prime(float(m), mu * R) / sf.bessel_K(float(m), mu * R)
    n = end.euclidean_dim
    if l == 0:
        return (n - 2.0 + m) / R
    mu = end.cross_section.mu(l)
    nu = 0.5 * (n - 2.0) + m
    return 0.5 * (n - 2.0) / R - mu * sf.bessel_K_prime(nu, mu * R) / \
        sf.bessel_K(nu, mu * R)


@dataclass(frozen=True)
class DtNOperator:
    """The exterior DtN map of one end as a channel multiplier family.

    All multipliers are nonnegative; the minus-end constant channel maps
    to zero and angular channels to m/R exactly.
    """
    end_spec: EndSpec
    end: str
    R: float

    def multiplier(self, m: int, l: int) -> float:
        return dtn_multiplier(self.end_spec, self.end, m, l, self.R)

    def __call__(self, f: BoundaryData) -> BoundaryData:
        if f.end != self.end:
            raise DomainError("DtNOperator: boundary data from the wrong end")
        out = {ch: c * self.multiplier(*ch) for ch, c in f.coeffs.items()}
        return BoundaryData(f.end, f.R, out)


def dtn(end: EndSpec, f: BoundaryData) -> BoundaryData:
    """Apply the exterior DtN operator: multiply channel (m, l) by
    lambda_{ml}.  Returns the boundary data of -d_r(extension) at R."""
    return DtNOperator(end, f.end, f.R)(f)


def dtn_symbol_check(end: EndSpec, end_tag: str, R: float,
                     m_max: int = 20) -> dict:
    """First-order-symbol ratios of the DtN multipliers.

    Angular: lambda_{m0} / (expected slope m/R) as m grows; cross-section:
    lambda_{0l} / mu_l as mu_l R grows.  Both tend to 1.
    """
    if m_max < 10:
        raise DomainError("dtn_symbol_check: need m_max >= 10")
    ang = {}
    for m in range(1, m_max + 1):
        lam = dtn_multiplier(end, end_tag, m, 0, R)
        expected = m / R if end_tag == "minus" else (end.euclidean_dim - 2 + m) / R
        ang[m] = lam / expected
    cross = {}
    for l in range(1, len(end.cross_section.eigenvalues)):
        mu = end.cross_section.mu(l)
        cross[l] = dtn_multiplier(end, end_tag, 0, l, R) / mu
    return {"angular_ratio": ang, "cross_ratio": cross,
            "worst_angular": max(abs(v - 1) for v in ang.values()),
            "cross_at_largest": cross[max(cross)] if cross else None}
