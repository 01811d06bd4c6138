"""Geometry of the model connected sum.

Two product ends, R^2 x M_minus and R^{n_plus} x M_plus, are glued through
a rotationally symmetric neck.  An axis coordinate s runs from -S_minus
(far out on the two-dimensional end) to +S_plus (far out on the higher
dimensional end); the gluing sphere sits at |s| = R and the metric is an
exact product for |s| >= R.  Because the neck is rotationally symmetric,
separated-variables channels never mix, and every global object in the
package lives on the one-dimensional axis with the volume weight

    v(s) = c_minus * r       on the minus end (c_minus = 2 pi vol(M_-)),
    v(s) = c_plus * r^{n+-1} on the plus end  (c_plus = |S^{n+-1}| vol(M_+)),

interpolated through the neck by a two-point Hermite polynomial in log v.
The global radial function r(s) equals |s| for |s| >= R and dips smoothly
to 1 in the neck interior.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, DomainError
from .quadrature import (cc_segment, chebyshev_cumint, clenshaw_curtis,
                         fornberg_weights)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def hermite_two_point(x0: float, vals0, x1: float, vals1) -> np.ndarray:
    """Coefficients (ascending) of the polynomial matching the given
    derivative values (f, f', f'', ...) at x0 and x1."""
    rows, rhs = [], []
    deg = len(vals0) + len(vals1) - 1
    for x, vals in ((x0, vals0), (x1, vals1)):
        for j, val in enumerate(vals):
            row = np.zeros(deg + 1)
            for p in range(j, deg + 1):
                row[p] = math.perm(p, j) * x ** (p - j)
            rows.append(row)
            rhs.append(val)
    return np.linalg.solve(np.array(rows), np.array(rhs))


@dataclass(frozen=True)
class CrossSection:
    """Compact cross-section factor of one end."""
    kind: str            # "point" | "circle" | "explicit"
    dim: int
    volume: float
    eigenvalues: tuple[float, ...]  # ascending, eigenvalues[0] == 0

    def __post_init__(self):
        if self.volume <= 0:
            raise ConfigError("cross-section volume must be positive")
        ev = self.eigenvalues
        if len(ev) == 0 or ev[0] != 0.0:
            raise ConfigError("cross-section spectrum must start at 0")
        if any(b <= a for a, b in zip(ev, ev[1:])):
            raise ConfigError("cross-section spectrum must be strictly ascending")
        if len(ev) > 1 and ev[1] <= 0:
            raise ConfigError("nonzero cross-section eigenvalues must be positive")

    def mu(self, l: int) -> float:
        return math.sqrt(self.eigenvalues[l])

    @staticmethod
    def point() -> "CrossSection":
        return CrossSection("point", 0, 1.0, (0.0,))

    @staticmethod
    def circle(length: float = 2 * math.pi, l_max: int = 32) -> "CrossSection":
        ev = tuple((2 * math.pi * l / length) ** 2 for l in range(l_max + 1))
        return CrossSection("circle", 1, length, ev)


@dataclass(frozen=True)
class EndSpec:
    """One product end R^n x M."""
    euclidean_dim: int
    cross_section: CrossSection
    gluing_radius: float

    @property
    def total_dim(self) -> int:
        return self.euclidean_dim + self.cross_section.dim

    @property
    def weight_constant(self) -> float:
        """c with v(s) = c * r^{n-1} on this end."""
        return sphere_area(self.euclidean_dim) * self.cross_section.volume

    def angular_eigenvalue(self, m: int) -> float:
        """Eigenvalue m (n - 2 + m) of degree-m spherical harmonics."""
        return m * (self.euclidean_dim - 2 + m)


@dataclass(frozen=True)
class ModeChannel:
    """One separated-variables channel (angular degree, cross index)."""
    end: str  # "minus" | "plus"
    angular: int
    cross_index: int

    def __post_init__(self):
        if self.end not in ("minus", "plus"):
            raise ConfigError("channel end must be 'minus' or 'plus'")
        if self.angular < 0 or self.cross_index < 0:
            raise ConfigError("channel indices must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return self.angular == 0 and self.cross_index == 0


ZERO_CHANNEL = ModeChannel("minus", 0, 0)


@dataclass(frozen=True)
class CutoffRadii:
    """Radial anchors of the standing cutoff functions.

    chi:  the K_0 gluing cutoff, rising on the minus end,
    phi:  the end cutoffs phi_{+-}, one per end,
    eta:  the plus-end deformation cutoff of the off-zero extension,
    zeta: the localizer of the interior parametrix,
    basepoint: the frozen kernel basepoints, strictly outside the neck
    and outside supp phi.
    """
    chi: tuple[float, float] = (3.0, 5.0)
    phi: tuple[float, float] = (6.0, 10.0)
    eta: tuple[float, float] = (4.0, 8.0)
    zeta: tuple[float, float] = (12.0, 16.0)
    basepoint: float = 2.5

    def breakpoints(self) -> list[float]:
        return sorted({*self.chi, *self.phi, *self.eta, *self.zeta})


@dataclass(frozen=True)
class GridSpec:
    pts_per_decade: int = 96
    neck_pts: int = 129
    min_segment_pts: int = 33


@dataclass(frozen=True)
class GeometryConfig:
    n_plus: int = 3
    minus_section: CrossSection = field(default_factory=CrossSection.circle)
    plus_section: CrossSection = field(default_factory=CrossSection.point)
    R: float = 2.0
    S_minus: float = 128.0
    S_plus: float = 128.0
    grid: GridSpec = field(default_factory=GridSpec)
    radii: CutoffRadii = field(default_factory=CutoffRadii)
    neck_smoothness: int = 4

    @staticmethod
    def from_dict(raw: dict) -> "GeometryConfig":
        def section(key, spec):
            if isinstance(spec, dict):
                kind = spec.get("type", "explicit")
                if kind == "point":
                    return CrossSection.point()
                if kind == "circle":
                    return CrossSection.circle(spec.get("length", 2 * math.pi),
                                               spec.get("l_max", 32))
                return CrossSection("explicit", int(spec["dim"]),
                                    float(spec["volume"]),
                                    tuple(float(x) for x in spec["spectrum"]))
            raise ConfigError(f"geometry key {key!r} must be a mapping")

        try:
            kwargs = {}
            if "n_plus" in raw:
                kwargs["n_plus"] = int(raw["n_plus"])
            if "spectra" in raw:
                kwargs["minus_section"] = section("spectra.minus", raw["spectra"]["minus"])
                kwargs["plus_section"] = section("spectra.plus", raw["spectra"]["plus"])
            if "volumes" in raw:
                for side in ("minus", "plus"):
                    if side in raw["volumes"]:
                        sec = kwargs.get(f"{side}_section",
                                         CrossSection.circle() if side == "minus"
                                         else CrossSection.point())
                        kwargs[f"{side}_section"] = CrossSection(
                            sec.kind, sec.dim, float(raw["volumes"][side]),
                            sec.eigenvalues)
            for key in ("R", "S_minus", "S_plus"):
                if key in raw:
                    kwargs[key] = float(raw[key])
            if "R_max" in raw:
                kwargs.setdefault("S_minus", float(raw["R_max"]))
                kwargs.setdefault("S_plus", float(raw["R_max"]))
            if "grid" in raw:
                kwargs["grid"] = GridSpec(**raw["grid"])
            if "radii" in raw:
                rr = {k: tuple(v) if isinstance(v, (list, tuple)) else v
                      for k, v in raw["radii"].items()}
                kwargs["radii"] = CutoffRadii(**rr)
            if "neck_smoothness" in raw:
                kwargs["neck_smoothness"] = int(raw["neck_smoothness"])
            return GeometryConfig(**kwargs)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid geometry config: {exc}") from exc

    @staticmethod
    def from_json(path) -> "GeometryConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read geometry file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"geometry file is not valid JSON: {exc}") from exc
        return GeometryConfig.from_dict(raw)


class NeckProfile:
    """Weight and radial interpolants through the neck |s| <= R."""

    def __init__(self, c_minus: float, c_plus: float, n_plus: int, R: float,
                 smoothness: int = 4):
        self.R = R
        self.smoothness = smoothness
        m = smoothness
        # log v matched to log(c_minus * |s|) at -R, log(c_plus * s^{n-1}) at R
        def end_derivs(c, power, s):
            vals = [math.log(c) + power * math.log(abs(s))]
            sign = 1.0
            for j in range(1, m + 1):
                vals.append(power * sign * math.factorial(j - 1) / s ** j)
                sign *= -1.0
            return vals

        self._logv = hermite_two_point(-R, end_derivs(c_minus, 1.0, -R),
                                       R, end_derivs(c_plus, n_plus - 1.0, R))
        self._dlogv = np.polynomial.polynomial.polyder(self._logv)
        # radial function: even C^4 dip from r(+-R) = R to r(0) ~ 1
        self._rpoly = hermite_two_point(0.0, [1.0, 0.0, 0.0, 0.0, 0.0],
                                        R, [R, 1.0, 0.0, 0.0, 0.0])
        self._drpoly = np.polynomial.polynomial.polyder(self._rpoly)
        xs = np.linspace(0, R, 200)
        rv = np.polynomial.polynomial.polyval(xs, self._rpoly)
        if rv.min() < 0.98 or np.any(np.diff(rv) < -1e-12):
            raise ConfigError(
                f"neck radial interpolant ill-behaved for R={R}; use R >= 1.5")

    def log_weight(self, s):
        return np.polynomial.polynomial.polyval(np.asarray(s, float), self._logv)

    def weight(self, s):
        return np.exp(self.log_weight(s))

    def dlog_weight(self, s):
        return np.polynomial.polynomial.polyval(np.asarray(s, float), self._dlogv)

    def radial(self, s):
        return np.polynomial.polynomial.polyval(np.abs(np.asarray(s, float)),
                                                self._rpoly)

    def dradial(self, s):
        s = np.asarray(s, float)
        return np.sign(s) * np.polynomial.polynomial.polyval(np.abs(s), self._drpoly)


class ModelManifold:
    """Immutable model geometry with its computational grid.

    The grid is segmented at every cutoff corner (so composite quadrature
    and stencils never straddle a transition corner), log-spaced in r on
    the ends and uniform through the neck.  `weights` are the quadrature
    weights of the volume measure v(s) ds; `weights_plain` integrate ds.
    """

    def __init__(self, config: GeometryConfig):
        c = config
        if c.n_plus < 3:
            raise ConfigError(f"invalid dimension: n_plus must be >= 3, got {c.n_plus}")
        n_total_minus = 2 + c.minus_section.dim
        n_total_plus = c.n_plus + c.plus_section.dim
        if n_total_minus != n_total_plus:
            raise ConfigError(
                f"total dimension mismatch: 2 + dim(M-) = {n_total_minus} "
                f"!= n_plus + dim(M+) = {n_total_plus}")
        if not (1.5 <= c.R < c.radii.chi[0]):
            raise ConfigError("need 1.5 <= R < first cutoff radius")
        if c.S_minus <= c.radii.zeta[1] or c.S_plus <= c.radii.zeta[1]:
            raise ConfigError("domain must extend beyond the outermost cutoff")
        if not (c.R < c.radii.basepoint < c.radii.phi[0]):
            raise ConfigError("basepoint must sit between the neck and supp phi")

        self.config = c
        self.minus = EndSpec(2, c.minus_section, c.R)
        self.plus = EndSpec(c.n_plus, c.plus_section, c.R)
        self.R = c.R
        self.radii = c.radii
        self.basepoint_minus = c.radii.basepoint
        self.basepoint_plus = c.radii.basepoint
        self.neck = NeckProfile(self.minus.weight_constant,
                                self.plus.weight_constant,
                                c.n_plus, c.R, c.neck_smoothness)
        self._build_grid()

    # -- grid ---------------------------------------------------------------

    def _build_grid(self):
        """Segmented grid: Clenshaw-Curtis nodes per segment, in log r on
        the ends and in s through the neck.  Every cutoff corner is a
        segment boundary, so per-segment integrands are analytic (the
        cutoff transitions are polynomials) and the quadrature and
        cumulative integrals are spectrally accurate."""
        c = self.config
        breaks = self.radii.breakpoints()
        minus_bounds = [c.R] + [b for b in breaks if c.R < b < c.S_minus] + [c.S_minus]
        plus_bounds = [c.R] + [b for b in breaks if c.R < b < c.S_plus] + [c.S_plus]

        def count(th0, th1):
            return max(c.grid.min_segment_pts,
                       int(round((th1 - th0) / math.log(10) * c.grid.pts_per_decade)) + 1)

        segdefs = []  # (kind, theta_lo, theta_hi, n), ascending in s
        for lo, hi in reversed(list(zip(minus_bounds[:-1], minus_bounds[1:]))):
            t0, t1 = -math.log(hi), -math.log(lo)
            segdefs.append(("minus", t0, t1, count(t0, t1)))
        # split at s = 0: the radial interpolant is only C^4 across the tip
        half_neck = max(17, c.grid.neck_pts // 2 + 1)
        segdefs.append(("neck", -c.R, 0.0, half_neck))
        segdefs.append(("neck", 0.0, c.R, half_neck))
        for lo, hi in zip(plus_bounds[:-1], plus_bounds[1:]):
            t0, t1 = math.log(lo), math.log(hi)
            segdefs.append(("plus", t0, t1, count(t0, t1)))

        nodes: list[float] = []
        wplain: list[float] = []
        # (start index, n, theta nodes, jacobian ds/dtheta, kind)
        self.segments = []
        for kind, t0, t1, n in segdefs:
            th, w = cc_segment(t0, t1, n)
            if kind == "minus":
                s_seg = -np.exp(-th)
                jac = np.exp(-th)
            elif kind == "plus":
                s_seg = np.exp(th)
                jac = np.exp(th)
            else:
                s_seg = th
                jac = np.ones_like(th)
            wj = w * jac
            if nodes and abs(nodes[-1] - s_seg[0]) < 1e-11:
                start = len(nodes) - 1
                wplain[-1] += wj[0]
                nodes.extend(s_seg[1:])
                wplain.extend(wj[1:])
            else:
                start = len(nodes)
                nodes.extend(s_seg)
                wplain.extend(wj)
            self.segments.append((start, n, th, jac, kind))

        self.s = np.asarray(nodes)
        self.weights_plain = np.asarray(wplain)
        if np.any(np.diff(self.s) <= 0):
            raise ConfigError("grid nodes are not strictly increasing")
        self.v = self.weight(self.s)
        self.weights = self.weights_plain * self.v
        self.n = len(self.s)
        self.r = self.radial(self.s)
        bounds = [-b for b in minus_bounds[::-1]] + [b for b in plus_bounds]
        self.segment_bounds = np.array(sorted(set(bounds)))

    def cumulative_integral(self, y) -> np.ndarray:
        """int_{s_0}^{s_i} y ds, spectrally accurate per segment."""
        y = np.asarray(y, dtype=float)
        out = np.empty(self.n)
        offset = 0.0
        for start, n, th, jac, _kind in self.segments:
            sl = slice(start, start + n)
            local = chebyshev_cumint(th, y[sl] * jac)
            out[sl] = offset + local
            offset = out[start + n - 1]
        return out

    def derivatives(self, y) -> tuple[np.ndarray, np.ndarray]:
        """(dy/ds, d2y/ds2) by per-segment Chebyshev differentiation.

        Spectral for functions analytic on each segment; at shared segment
        nodes the two one-sided values are averaged.
        """
        from numpy.polynomial import chebyshev as C

        y = np.asarray(y, dtype=float)
        d1 = np.zeros(self.n)
        d2 = np.zeros(self.n)
        counts = np.zeros(self.n)
        for start, n, th, jac, kind in self.segments:
            sl = slice(start, start + n)
            t, _ = clenshaw_curtis(n)
            V = C.chebvander(t, n - 1)
            coef = np.linalg.solve(V, y[sl])
            half = 0.5 * (th[-1] - th[0])
            c1 = C.chebder(coef) / half
            c2 = C.chebder(c1) / half
            u_t = C.chebval(t, c1)
            u_tt = C.chebval(t, c2)
            # map theta derivatives to s derivatives: s'(theta) = jac,
            # s''(theta) = sec * jac with sec = -1 (minus), +1 (plus), 0 (neck)
            sec = {"minus": -1.0, "plus": 1.0, "neck": 0.0}[kind]
            d1[sl] += u_t / jac
            d2[sl] += (u_tt - sec * u_t) / jac ** 2
            counts[sl] += 1.0
        return d1 / counts, d2 / counts

    @cached_property
    def kink_kappa(self) -> tuple[np.ndarray, np.ndarray]:
        """(kappa_ramp, kappa_step): node-local quadrature-defect weights.

        For a kernel composition int K(z, y) f(y) dV(y) whose integrand
        has, at the node y = z_i, a slope jump J1 (in d/ds units) and a
        value jump J0, the corrected Nystrom sum is

            sum_j K_ij q_j f_j + (J1_i kappa_ramp_i + J0_i kappa_step_i) f_i,

        where the jumps are those of K(z_i, .) f v combined (f smooth:
        jumps of K times f_i v_i, already folded into kappa here).
        """
        from .quadrature import cc_kink_coefficients

        k1 = np.zeros(self.n)
        k0 = np.zeros(self.n)
        for start, n, th, jac, _kind in self.segments:
            sl = slice(start, start + n)
            C1, C0 = cc_kink_coefficients(n)
            half = 0.5 * (th[-1] - th[0])
            k1[sl] += self.v[sl] * jac ** 2 * half ** 2 * C1
            k0[sl] += self.v[sl] * jac * half * C0
        return k1, k0

    @cached_property
    def segment_interior(self) -> np.ndarray:
        """Mask of nodes strictly inside their segment.  Endpoint rows of
        spectral differentiation amplify value noise by ~n^2, so residual
        checks are sharpest on this mask."""
        mask = np.ones(self.n, dtype=bool)
        for start, n, _th, _jac, _kind in self.segments:
            mask[start:start + 2] = False
            mask[start + n - 2:start + n] = False
        return mask

    def apply_operator_spectral(self, y, k: float = 0.0) -> np.ndarray:
        """(Delta + k^2) y on the glued zero channel via per-segment
        Chebyshev differentiation."""
        d1, d2 = self.derivatives(y)
        return -d2 - self.dlog_weight(self.s) * d1 + k * k * np.asarray(y, float)

    # -- coordinate fields ----------------------------------------------------

    def weight(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        mi = s <= -self.R
        pl = s >= self.R
        nk = ~(mi | pl)
        out[mi] = self.minus.weight_constant * (-s[mi])
        out[pl] = self.plus.weight_constant * s[pl] ** (self.plus.euclidean_dim - 1)
        if nk.any():
            out[nk] = self.neck.weight(s[nk])
        return out

    def dlog_weight(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        mi = s <= -self.R
        pl = s >= self.R
        nk = ~(mi | pl)
        out[mi] = 1.0 / s[mi]
        out[pl] = (self.plus.euclidean_dim - 1.0) / s[pl]
        if nk.any():
            out[nk] = self.neck.dlog_weight(s[nk])
        return out

    def radial(self, s):
        """Global radial function: |s| on the ends, >= 1 everywhere."""
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.abs(arr)
        nk = out < self.R
        if nk.any():
            out[nk] = self.neck.radial(arr[nk])
        return float(out[0]) if np.ndim(s) == 0 else out

    def dradial(self, s):
        """d r / d s; equals sign(s) on the ends."""
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.sign(arr)
        nk = np.abs(arr) < self.R
        if nk.any():
            out[nk] = self.neck.dradial(arr[nk])
        return float(out[0]) if np.ndim(s) == 0 else out

    def end_of(self, s):
        """-1 on the minus end, +1 on the plus end, 0 in the neck."""
        s = np.asarray(s, dtype=float)
        return np.where(s <= -self.R, -1, np.where(s >= self.R, 1, 0))

    def end_spec(self, end: str) -> EndSpec:
        return self.minus if end == "minus" else self.plus

    # -- masks on the grid ----------------------------------------------------

    @cached_property
    def mask_minus(self):
        return self.s <= -self.R

    @cached_property
    def mask_plus(self):
        return self.s >= self.R

    @cached_property
    def mask_neck(self):
        return ~(self.mask_minus | self.mask_plus)

    def integrate(self, f) -> float:
        """Integral of a grid function against the volume measure v ds."""
        return float(np.dot(self.weights, np.asarray(f, dtype=float)))

    # -- channel machinery ------------------------------------------------------

    def channel_potential(self, channel: ModeChannel, r):
        end = self.end_spec(channel.end)
        r = np.asarray(r, dtype=float)
        return (end.angular_eigenvalue(channel.angular) / r ** 2
                + end.cross_section.eigenvalues[channel.cross_index])

    def channel_grid(self, channel: ModeChannel):
        """Sub-grid (radii) of the end a nonzero channel lives on."""
        mask = self.mask_minus if channel.end == "minus" else self.mask_plus
        idx = np.where(mask)[0]
        r = self.r[idx]
        order = np.argsort(r)
        return idx[order], r[order]


def build_model(config: GeometryConfig | dict | None = None) -> ModelManifold:
    """Validate a geometry description and construct the model."""
    if config is None:
        config = GeometryConfig()
    elif isinstance(config, dict):
        config = GeometryConfig.from_dict(config)
    return ModelManifold(config)


def distance_weighting(model: ModelManifold, s):
    """The global radial function r(s) (>= 1, exactly |s| on the ends)."""
    return model.radial(s)


@dataclass
class GridFunction:
    """A sampled radial function on the model grid."""
    values: np.ndarray
    dvalues: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.dvalues is not None:
            self.dvalues = np.asarray(self.dvalues, dtype=float)
            if self.dvalues.shape != self.values.shape:
                raise DomainError("GridFunction: value/derivative shape mismatch")


# ---------------------------------------------------------------------------
# discrete radial operators


def decaying_radial_logderiv(end: EndSpec, angular: int, kappa: float,
                             r: float) -> float:
    """d/dr log of the channel solution decaying as r -> oo on a product
    end of Euclidean dimension n: r^{1-n/2} K_{n/2-1+m}(kappa r) for
    kappa > 0, the decaying power for kappa = 0 (constant branch when the
    end is two-dimensional with m = 0)."""
    from . import specfun as sf

    n = end.euclidean_dim
    m = angular
    if kappa == 0.0:
        if n == 2 and m == 0:
            return 0.0
        return -(n - 2.0 + m) / r
    nu = 0.5 * (n - 2.0) + m
    return (1.0 - 0.5 * n) / r + \
        kappa * sf.bessel_K_prime(nu, kappa * r) / sf.bessel_K(nu, kappa * r)


def radiation_logderiv(model: ModelManifold, channel: ModeChannel | None,
                       k: float, s: float) -> float:
    """d/ds log of the glued-axis solution decaying toward the nearer
    infinity, at the axis point s.  Exact per-channel radiation condition:
    domain truncation then commits no error for the model."""
    r = abs(s)
    if s < 0:
        end = model.minus
        mu2 = 0.0 if channel is None else \
            end.cross_section.eigenvalues[channel.cross_index]
        m = 0 if channel is None else channel.angular
        ddr = decaying_radial_logderiv(end, m, math.sqrt(k * k + mu2), r)
        return -ddr  # d/ds = -d/dr on the minus side
    end = model.plus
    mu2 = 0.0 if channel is None else \
        end.cross_section.eigenvalues[channel.cross_index]
    m = 0 if channel is None else channel.angular
    return decaying_radial_logderiv(end, m, math.sqrt(k * k + mu2), r)


def radial_laplacian(model: ModelManifold, channel: ModeChannel | None = None,
                     k: float = 0.0, order: int = 4, bc: str = "radiation"):
    """Discrete (Delta + k^2) for one channel.

    Delta is the positive Laplacian -v^{-1}(v u')' + potential.  For the
    glued zero channel (channel None or the zero channel) the operator
    acts on the whole axis grid and a matrix is returned.  A nonzero
    channel lives on its end only: the return value is then
    (matrix, radii), acting on functions of r in [R, S_end], with a
    Dirichlet row at r = R and the radiation row at the outer boundary.

    bc = "radiation" closes the outer boundaries with the exact decaying
    log-derivative; "dirichlet" forces u = 0 there instead.
    """
    glued = channel is None or channel.is_zero
    width = order + 1
    if glued:
        x = model.s
        pot = np.zeros_like(x)
        dlv = model.dlog_weight(x)
    else:
        end = model.end_spec(channel.end)
        _, x = model.channel_grid(channel)
        pot = model.channel_potential(channel, x)
        dlv = (end.euclidean_dim - 1.0) / x
    n = len(x)
    A = np.zeros((n, n))
    half = width // 2
    for i in range(1, n - 1):
        j0 = min(max(i - half, 0), n - width)
        sten = x[j0:j0 + width]
        w = fornberg_weights(x[i], sten, 2)
        A[i, j0:j0 + width] = -w[2] - dlv[i] * w[1]
        A[i, i] += pot[i] + k * k
    if glued:
        for i in (0, n - 1):
            j0 = 0 if i == 0 else n - width
            w = fornberg_weights(x[i], x[j0:j0 + width], 1)
            if bc == "radiation":
                A[i, j0:j0 + width] = w[1]
                A[i, i] -= radiation_logderiv(model, channel, k, x[i])
            elif bc == "dirichlet":
                A[i, i] = 1.0
            else:
                raise ConfigError(f"unknown bc {bc!r}")
        return A
    A[0, 0] = 1.0  # Dirichlet row at the gluing sphere
    i, j0 = n - 1, n - width
    w = fornberg_weights(x[i], x[j0:j0 + width], 1)
    if bc == "radiation":
        mu2 = model.end_spec(channel.end).cross_section.eigenvalues[channel.cross_index]
        A[i, j0:j0 + width] = w[1]
        A[i, i] -= decaying_radial_logderiv(model.end_spec(channel.end),
                                            channel.angular,
                                            math.sqrt(k * k + mu2), x[i])
    elif bc == "dirichlet":
        A[i, i] = 1.0
    else:
        raise ConfigError(f"unknown bc {bc!r}")
    return A, x


def apply_operator(model: ModelManifold, values, k: float = 0.0,
                   method: str = "spectral", order: int = 6):
    """(Delta + k^2) applied to a glued zero-channel grid function.

    method "spectral" differentiates per segment in the Chebyshev basis
    (default; accurate for functions analytic per segment).  method "fd"
    uses moving finite-difference stencils of the given order, a fully
    independent route for cross-checks (boundary values set to zero).
    """
    if method == "spectral":
        out = model.apply_operator_spectral(values, k=k)
        out[0] = out[-1] = 0.0
        return out
    A = radial_laplacian(model, None, k=k, order=order, bc="dirichlet")
    out = A @ np.asarray(values, dtype=float)
    out[0] = out[-1] = 0.0
    return out
