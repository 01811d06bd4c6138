"""Global Laplace and resolvent solves on the glued axis.

The zero channel of the model admits exact homogeneous solutions on both
product regions (powers/logs at zero energy, modified Bessel functions at
energy k > 0), so a two-sided Green function for the whole axis needs
numerical work only across the neck |s| <= R, where the two branches are
continued by high-accuracy ODE integration.  Domain truncation commits no
error: the boundary behaviour is encoded exactly in the decaying branch.

`solve_laplace` returns the unique solution of Delta u = F (F compactly
supported) that stays bounded on the two-dimensional end and decays on the
other; its constant limit beta on the minus end is

    beta = (1/W) int u_R F dV,

a plain quadrature against the plus-decaying branch.  `build_log_harmonic`
assembles the unique global harmonic function growing like log r + c_1 on
the minus end and decaying on the plus end.

A discrete counterpart (`NeckProblem`) closes the compact part with the
exterior DtN rows  B u = d_nu u - Lambda u = 0  and is used for the
uniqueness, self-adjointness and dual-weight probes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import specfun as sf
from .cutoffs import Step
from .errors import DomainError, SingularSystemError
from .quadrature import cheb_cumint_matrix
from .model import (ModeChannel, ModelManifold, fornberg_weights,
                    radiation_logderiv)


def _neck_collocation(model: ModelManifold, k: float, from_plus: bool,
                      u0: float, du0: float):
    """Continue (u, u') across the neck by Chebyshev collocation on the
    neck grid segments, marching away from the given side.

    Returns (values on the neck portion of the grid in grid order,
    derivatives, u at far side, u' at far side).  Because the solution is
    represented in the same per-segment polynomial space as the grid, the
    continued branch differentiates spectrally clean.
    """
    segs = [(start, n, th) for start, n, th, _jac, kind in model.segments
            if kind == "neck"]
    if from_plus:
        segs = segs[::-1]
    vals: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    u_c, du_c = u0, du0
    for start, n, th in segs:
        half = 0.5 * (th[-1] - th[0])
        sl = slice(start, start + n)
        s_seg = model.s[sl]
        dlv = model.dlog_weight(s_seg)
        # integral formulation from the marching side: with g = u'',
        #   u' = du0 + J g,   u = u0 + du0 (s - s0) + J^2 g,
        # and the equation g + dlv (du0 + J g) - k^2 u = 0 becomes a
        # well-conditioned linear system for g.
        J = cheb_cumint_matrix(n) * half
        if from_plus:
            # integrate from the right end: J~ y = -(J_total - J) reversed
            J = J - J[-1][None, :]
        s0 = s_seg[-1] if from_plus else s_seg[0]
        ds = s_seg - s0
        J2 = J @ J
        A = np.eye(n) + dlv[:, None] * J - k * k * J2
        rhs = -dlv * du_c + k * k * (u_c + du_c * ds)
        try:
            g = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"neck collocation failed: {exc}") from exc
        u_seg = u_c + du_c * ds + J2 @ g
        du_seg = du_c + J @ g
        vals[start] = (u_seg, du_seg)
        out = 0 if from_plus else n - 1
        u_c, du_c = float(u_seg[out]), float(du_seg[out])
    return vals, u_c, du_c


class GluedSystem:
    """Two-sided homogeneous solutions and Green machinery at energy k >= 0.

    u_L decays toward minus infinity (is the bounded branch at k = 0),
    u_R decays toward plus infinity; both are normalized to 1 at their
    gluing sphere and stored with derivatives on the model grid.
    """

    def __init__(self, model: ModelManifold, k: float):
        if k < 0:
            raise DomainError("GluedSystem: k must be >= 0")
        self.model = model
        self.k = k
        # branches are stored in hat/exponent form: the true branch is
        # uL_hat e^{exp_l}, uR_hat e^{exp_r}, with the analytic exponents
        # -+ k (r - R) on the ends; exp_l + exp_r <= 0 for every kernel
        # pair actually selected, so entries never overflow even when a
        # raw branch would
        kr = k * np.maximum(model.r - model.R, 0.0)
        self.exp_l = np.where(model.mask_plus, kr, -kr)
        self.exp_r = np.where(model.mask_minus, kr, -kr)
        self.uL, self.uLp = self._branch(toward="minus")
        self.uR, self.uRp = self._branch(toward="plus")
        w = model.v * (self.uL * self.uRp - self.uLp * self.uR)
        self.wronskian = float(-np.median(w))
        if self.wronskian <= 0:
            raise SingularSystemError("glued Wronskian not positive")
        self.wronskian_spread = float(np.max(np.abs(-w - self.wronskian))
                                      / self.wronskian)

    # branch construction ----------------------------------------------------

    def _minus_pair(self, r, decaying: bool):
        """(value, d/ds) e^{+-k(r-R)}-scaled on the minus region of the
        decaying (exponent -k(r-R)) / growing (exponent +k(r-R)) branch,
        normalized to 1 at r = R."""
        k, R = self.k, self.model.R
        if k == 0.0:
            if decaying:
                return np.ones_like(r), np.zeros_like(r)
            # growing branch: log(r/R); d/ds log r = -1/r
            return np.log(r / R), -1.0 / r
        if decaying:
            den = sf.bessel_K(0.0, k * R, scaled=True)
            val = sf.bessel_K(0.0, k * r, scaled=True) / den
            dval = k * sf.bessel_K(1.0, k * r, scaled=True) / den
            return val, dval
        den = sf.bessel_I(0.0, k * R, scaled=True)
        val = sf.bessel_I(0.0, k * r, scaled=True) / den
        dval = -k * sf.bessel_I(1.0, k * r, scaled=True) / den
        return val, dval

    def _plus_pair(self, r, decaying: bool):
        k, R = self.k, self.model.R
        n = self.model.plus.euclidean_dim
        nu = 0.5 * n - 1.0
        if k == 0.0:
            if decaying:
                return (r / R) ** (2.0 - n), (2.0 - n) / R * (r / R) ** (1.0 - n)
            return np.ones_like(r), np.zeros_like(r)
        if decaying:
            den = R ** (-nu) * sf.bessel_K(nu, k * R, scaled=True)
            val = r ** (-nu) * sf.bessel_K(nu, k * r, scaled=True) / den
            dval = -k * r ** (-nu) * sf.bessel_K(nu + 1.0, k * r, scaled=True) / den
            return val, dval
        den = R ** (-nu) * sf.bessel_I(nu, k * R, scaled=True)
        val = r ** (-nu) * sf.bessel_I(nu, k * r, scaled=True) / den
        dval = k * r ** (-nu) * sf.bessel_I(nu + 1.0, k * r, scaled=True) / den
        return val, dval

    def _fill_neck(self, val, dval, vals_by_segment):
        for start, (u_seg, du_seg) in vals_by_segment.items():
            n = len(u_seg)
            sl = slice(start, start + n)
            val[sl] = u_seg
            dval[sl] = du_seg

    def _branch(self, toward: str):
        """Hat-scaled branch: the true branch equals the returned values
        times e^{exp_l} (toward 'minus') or e^{exp_r} (toward 'plus').

        On the matched far side the decaying component is re-expressed in
        the growing branch's exponent: its extra factor e^{-2k(r-R)} only
        shrinks, so everything stays inside double range.
        """
        m = self.model
        s = m.s
        k = self.k
        val = np.empty_like(s)
        dval = np.empty_like(s)
        mi, pl = m.mask_minus, m.mask_plus
        if toward == "minus":
            val[mi], dval[mi] = self._minus_pair(-s[mi], decaying=True)
            v0, d0 = self._minus_pair(np.array([m.R]), True)
            neck_vals, uR_, duR_ = _neck_collocation(m, self.k, False,
                                                     float(v0[0]), float(d0[0]))
            self._fill_neck(val, dval, neck_vals)
            d_val, d_dval = self._plus_pair(np.array([m.R]), True)
            g_val, g_dval = self._plus_pair(np.array([m.R]), False)
            A = np.array([[d_val[0], g_val[0]], [d_dval[0], g_dval[0]]])
            cd, cg = np.linalg.solve(A, [uR_, duR_])
            vd, dd = self._plus_pair(s[pl], True)
            vg, dg = self._plus_pair(s[pl], False)
            damp = np.exp(-2.0 * k * (s[pl] - m.R)) if k > 0 else 1.0
            val[pl] = cd * vd * damp + cg * vg
            dval[pl] = cd * dd * damp + cg * dg
            return val, dval
        val[pl], dval[pl] = self._plus_pair(s[pl], decaying=True)
        v0, d0 = self._plus_pair(np.array([m.R]), True)
        neck_vals, uL_, duL_ = _neck_collocation(m, self.k, True,
                                                 float(v0[0]), float(d0[0]))
        self._fill_neck(val, dval, neck_vals)
        d_val, d_dval = self._minus_pair(np.array([m.R]), True)
        g_val, g_dval = self._minus_pair(np.array([m.R]), False)
        A = np.array([[d_val[0], g_val[0]], [d_dval[0], g_dval[0]]])
        cd, cg = np.linalg.solve(A, [uL_, duL_])
        vd, dd = self._minus_pair(-s[mi], True)
        vg, dg = self._minus_pair(-s[mi], False)
        damp = np.exp(-2.0 * k * (-s[mi] - m.R)) if k > 0 else 1.0
        val[mi] = cd * vd * damp + cg * vg
        dval[mi] = cd * dd * damp + cg * dg
        self._uR_minus_coeffs = (cd, cg)
        return val, dval

    # Green machinery ----------------------------------------------------------

    def apply(self, F):
        """u with (Delta + k^2) u = F, decaying/bounded both ways, and u'.

        Exponent factors are clipped at e^{+-700}: entries where the clip
        could bite are multiplied by exact zeros of the cumulants (the
        source is compactly supported)."""
        m = self.model
        F = np.asarray(F, dtype=float)
        el = np.exp(np.clip(self.exp_l, -745.0, 700.0))
        er = np.exp(np.clip(self.exp_r, -745.0, 700.0))
        cumL = m.cumulative_integral(self.uL * el * F * m.v)
        cumR_all = m.cumulative_integral(self.uR * er * F * m.v)
        cumR = cumR_all[-1] - cumR_all
        u = (self.uR * er * cumL + self.uL * el * cumR) / self.wronskian
        du = (self.uRp * er * cumL + self.uLp * el * cumR) / self.wronskian
        return u, du

    def kernel_matrix(self) -> np.ndarray:
        """Green kernel on grid x grid: uL(s_<) uR(s_>) / W.  The selected
        exponent sums are always <= 0, so no entry overflows."""
        s = self.model.s
        lower = s[:, None] <= s[None, :]
        expo = np.where(lower, self.exp_l[:, None] + self.exp_r[None, :],
                        self.exp_r[:, None] + self.exp_l[None, :])
        out = np.where(lower, self.uL[:, None] * self.uR[None, :],
                       self.uR[:, None] * self.uL[None, :])
        return out * np.exp(np.clip(expo, -745.0, 700.0)) / self.wronskian

    def kernel_dleft(self) -> np.ndarray:
        """d/ds in the left variable of kernel_matrix; the diagonal takes
        the midpoint of the two one-sided limits."""
        s = self.model.s
        below = self.uLp[:, None] * self.uR[None, :]
        above = self.uRp[:, None] * self.uL[None, :]
        lower = s[:, None] < s[None, :]
        expo = np.where(lower, self.exp_l[:, None] + self.exp_r[None, :],
                        self.exp_r[:, None] + self.exp_l[None, :])
        out = np.where(lower, below, above)
        d = np.arange(self.model.n)
        out[d, d] = 0.5 * (below[d, d] + above[d, d])
        return out * np.exp(np.clip(expo, -745.0, 700.0)) / self.wronskian

    def column(self, s0: float):
        """Green kernel column z' -> (s0, z') sampled on the grid (s0 is
        linearly interpolated; exact when s0 is a grid node)."""
        s = self.model.s
        left = s <= s0
        uL0 = np.interp(s0, s, self.uL)
        uR0 = np.interp(s0, s, self.uR)
        e0l = np.interp(s0, s, self.exp_l)
        e0r = np.interp(s0, s, self.exp_r)
        expo = np.where(left, self.exp_l + e0r, e0l + self.exp_r)
        return np.where(left, self.uL * uR0, uL0 * self.uR) \
            * np.exp(np.clip(expo, -745.0, 700.0)) / self.wronskian


@dataclass
class GlobalHarmonicSolution:
    """Solution of Delta u = F, bounded on the minus end, decaying on the
    plus end, with its minus-end limit beta and plus-end tail coefficient
    (u = plus_coeff (r/R)^{2-n} beyond the source)."""
    values: np.ndarray
    dvalues: np.ndarray
    beta: float
    plus_coeff: float


def _check_compact_support(model: ModelManifold, F) -> None:
    F = np.asarray(F, dtype=float)
    guard = np.abs(model.s) >= 0.9 * min(model.config.S_minus, model.config.S_plus)
    floor = 1e-13 * max(1.0, float(np.max(np.abs(F))))
    if np.any(np.abs(F[guard]) > floor):
        raise DomainError("solve_laplace: source must vanish near the domain ends")


def solve_laplace(model: ModelManifold, F,
                  system: GluedSystem | None = None) -> GlobalHarmonicSolution:
    """Unique global solution of Delta u = F for a compactly supported
    radial source, bounded on the minus end and tending to zero on the
    plus end (zero channel)."""
    _check_compact_support(model, F)
    sys0 = system if system is not None else GluedSystem(model, 0.0)
    u, du = sys0.apply(F)
    # read the limits off the computed solution itself, so the far fields
    # are exactly constant (minus) / exactly the power branch (plus)
    # relative to the reported constants
    beta = float(u[0] / sys0.uL[0])
    plus_coeff = float(u[-1] / sys0.uR[-1])
    return GlobalHarmonicSolution(u, du, beta, plus_coeff)


@dataclass
class LogHarmonic:
    """The global harmonic function log r + c_1 + ... on the minus end,
    O(r^{-1}) on the plus end."""
    values: np.ndarray
    dvalues: np.ndarray
    c1: float
    plus_coeff: float


def build_log_harmonic(model: ModelManifold,
                       system: GluedSystem | None = None) -> LogHarmonic:
    """w_1 + w_2 with w_1 = chi(r) log r (chi = 1 far out on the minus
    end) and Delta w_2 = -Delta w_1 solved by the global Laplace solver."""
    a, b = model.radii.chi
    chi = Step(-b, -a, falling=False)  # 1 for s <= -b, 0 for s >= -a
    s = model.s
    chi_v = 1.0 - chi(s)
    chi_d1 = -chi.d1(s)
    chi_d2 = -chi.d2(s)
    neg = s < -model.R
    logr = np.where(neg, np.log(np.maximum(model.r, 1e-12)), 0.0)
    w1 = chi_v * logr
    dlogr = np.zeros_like(s)
    dlogr[neg] = 1.0 / s[neg]
    dw1 = chi_d1 * logr + chi_v * dlogr
    # F = -Delta w1 on the minus product region (supp chi' there):
    # Delta(chi log r) = log r Delta chi - 2 chi' (log r)'
    lap_chi = -chi_d2 - model.dlog_weight(s) * chi_d1
    F = -(logr * lap_chi) + 2.0 * chi_d1 * dlogr
    sol = solve_laplace(model, F, system=system)
    return LogHarmonic(w1 + sol.values, dw1 + sol.dvalues,
                       sol.beta, sol.plus_coeff)


# ---------------------------------------------------------------------------
# discrete DtN boundary problem


class NeckProblem:
    """Discrete zero-channel Laplace problem on the compact part, closed by
    the exterior DtN rows B u = d_nu u - Lambda_ext u = 0.

    For the zero channel the DtN rows coincide with the exact zero-energy
    radiation rows, so with homogeneous data the only solution is zero.
    """

    def __init__(self, model: ModelManifold, domain_radius: float = 12.0,
                 order: int = 4, channel: ModeChannel | None = None):
        if channel is not None and not channel.is_zero:
            raise DomainError(
                "NeckProblem: only the zero channel glues across the neck")
        self.model = model
        idx = np.where(np.abs(model.s) <= domain_radius + 1e-9)[0]
        if len(idx) < order + 3:
            raise DomainError("NeckProblem: domain too small")
        self.idx = idx
        self.s = model.s[idx]
        n = len(idx)
        width = order + 1
        A = np.zeros((n, n))
        dlv = model.dlog_weight(self.s)
        half = width // 2
        for i in range(1, n - 1):
            j0 = min(max(i - half, 0), n - width)
            w = fornberg_weights(self.s[i], self.s[j0:j0 + width], 2)
            A[i, j0:j0 + width] = -w[2] - dlv[i] * w[1]
        for i in (0, n - 1):
            j0 = 0 if i == 0 else n - width
            w = fornberg_weights(self.s[i], self.s[j0:j0 + width], 1)
            A[i, j0:j0 + width] = w[1]
            A[i, i] -= radiation_logderiv(model, None, 0.0, self.s[i])
        self.matrix = A

    def solve(self, F) -> np.ndarray:
        """Solve Delta u = F (F given on the sub-grid, boundary rows
        homogeneous).  Raises SingularSystemError on a (numerically)
        singular system, which would signal a discrete uniqueness failure."""
        rhs = np.asarray(F, dtype=float).copy()
        rhs[0] = rhs[-1] = 0.0
        try:
            u = np.linalg.solve(self.matrix, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc)) from exc
        resid = self.matrix @ u - rhs
        if np.linalg.norm(resid) > 1e-8 * max(1.0, np.linalg.norm(rhs)):
            raise SingularSystemError("discrete neck solve did not converge")
        return u

    def smallest_singular_value(self, dual_weight: np.ndarray | None = None) -> float:
        """min over u of ||A u||_{L^2(dV)} / ||u||, with ||u|| either the
        plain L^2(dV) norm or the dual-weighted norm ||w u||_{L^2(dV)}."""
        q = np.sqrt(self.model.weights[self.idx])
        M = q[:, None] * self.matrix
        if dual_weight is None:
            M = M / q[None, :]
        else:
            M = M / (dual_weight * q)[None, :]
        return float(np.linalg.svd(M, compute_uv=False)[-1])


def dual_weight_uniqueness_probe(model: ModelManifold, weight: np.ndarray,
                                 refinements: tuple[float, ...] = (8.0, 12.0, 16.0),
                                 r_maxes: tuple[float, ...] = (16.0, 32.0, 64.0, 128.0)):
    """Two numerical statements behind the density of the range of Delta:

    * the constrained discrete DtN system has no null vector: its smallest
      singular value (in the dual-weighted metric) stays bounded away from
      zero as the compact domain grows;
    * the log-growing harmonic function is not in L^2 of the dual weight:
      its truncated norm grows like log R_max (reported, not asserted).
    """
    svals = []
    for rad in refinements:
        prob = NeckProblem(model, domain_radius=rad)
        wsub = weight[prob.idx]
        svals.append(prob.smallest_singular_value(dual_weight=wsub))
    U = build_log_harmonic(model)
    norms = []
    for rmax in r_maxes:
        mask = (model.r <= rmax)
        integrand = (U.values * weight) ** 2
        norms.append(float(np.dot(model.weights[mask], integrand[mask])))
    growth = np.polyfit(np.log(np.asarray(r_maxes)), np.asarray(norms), 1)[0]
    return {"singular_values": svals,
            "log_norms": norms,
            "log_norm_growth_per_log_R": float(growth),
            "diverges": bool(np.all(np.diff(norms) > 0) and growth > 0)}


def boundary_symbol_check(xi_prime: float, xi_n: float) -> complex:
    """Action of the boundary symbol b = i xi_n + i D_t - |xi'| on the
    unique bounded solution e^{-(|xi'| + i xi_n) t} of the interior model
    ODE, evaluated at t = 0.  Equals -2 |xi'|: nonzero whenever xi' != 0,
    the Lopatinski-Shapiro condition for this boundary problem."""
    lam = abs(xi_prime) + 1j * xi_n

    def u(t):
        return np.exp(-lam * t)

    h = 1e-6
    du0 = (u(h) - u(-h)) / (2 * h)
    return 1j * xi_n * u(0.0) + du0 - abs(xi_prime) * u(0.0)
