"""Riesz transform experiments on the glued model.

The transform nabla Delta^{-1/2} = (2/pi) int_0^oo nabla (Delta+k^2)^{-1} dk
splits at k_0 into a low-energy part, assembled here as an explicit
two-variable kernel by quadrature of the resolvent gradient in k, and a
high-energy part, applied per separated-variables channel as the spectral
multiplier  xi -> (2/(pi xi)) arctan(xi/k_0)  of the radial operator.

The low-energy kernel drives the boundedness experiments (norm estimates
stabilizing in the truncation radius for 1 < p <= 2) and the
unboundedness witness: on the two-dimensional end the kernel dominates a
rank-one kernel  tau(z)/r * ilg(1/r')/r',  whose L^p -> L^p norm grows
like a positive power of the truncation radius once p > 2, because
ilg(1/r')/r' just fails to lie in L^{p'}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import product_kernels as pk
from .cutoffs import Bump
from .errors import DomainError, NonConvergenceError
from .fits import loglog_slope
from .model import EndSpec, ModelManifold
from .parametrix import Parametrix
from .quadrature import cc_segment, fornberg_weights
from .specfun import ilg


def f_low(xi, k0: float = 1.0):
    """F_<(xi) = (2/(pi xi)) (pi/2 - arctan(xi/k0))."""
    xi = np.asarray(xi, dtype=float)
    return 2.0 / (math.pi * xi) * (0.5 * math.pi - np.arctan(xi / k0))


def f_high(xi, k0: float = 1.0):
    """F_>(xi) = (2/(pi xi)) arctan(xi/k0); F_< + F_> = 1/xi."""
    xi = np.asarray(xi, dtype=float)
    return 2.0 / (math.pi * xi) * np.arctan(xi / k0)


@dataclass
class DiscretizedKernel:
    """Two-variable kernel on grid x grid with its quadrature measure."""
    model: ModelManifold
    values: np.ndarray
    jump_step: np.ndarray | None = None   # diagonal value jump (d/ds kernels)
    quad_error: float = 0.0               # max per-entry k-quadrature error

    def matrix(self) -> np.ndarray:
        out = self.values * self.model.weights[None, :]
        if self.jump_step is not None:
            _, k0v = self.model.kink_kappa
            out = out + np.diag(self.jump_step * k0v)
        return out

    def apply(self, f) -> np.ndarray:
        return self.matrix() @ np.asarray(f, dtype=float)


@dataclass
class RieszSplit:
    """The low/high energy split of 1/xi at k0."""
    k0: float

    def low(self, xi):
        return f_low(xi, self.k0)

    def high(self, xi):
        return f_high(xi, self.k0)

    def consistency(self, xi) -> float:
        """sup of xi |F_< + F_> - 1/xi| (relative pointwise defect)."""
        xi = np.asarray(xi, dtype=float)
        return float(np.max(xi * np.abs(self.low(xi) + self.high(xi)
                                        - 1.0 / xi)))


def low_energy_kernel(model: ModelManifold, k0: float, n_sigma: int = 33,
                      sigma_max: float = 40.0, error_estimate: bool = True,
                      parametrix: Parametrix | None = None) -> DiscretizedKernel:
    """(2/pi) int_0^{k0} d_s R(k)(z, z') dk on grid x grid.

    The substitution k = e^{-sigma} resolves the inverse-log behaviour
    near k = 0 uniformly; the integrand decays like e^{-sigma} so the
    upper truncation contributes ~ e^{-sigma_max}.  The per-entry error
    estimate compares against the embedded coarse rule.

    The resolvent gradients come from the exact glued Green system by
    default (stable at every k on the lattice); passing a Parametrix uses
    the assembled parametrix route instead, whose finite-stage key
    approximation is reliable once ilg k is inside the stage-cascade
    radius.  The two providers are cross-checked in the test suite.
    """
    from .bvp import GluedSystem

    def dleft_at(k: float) -> np.ndarray:
        if parametrix is not None:
            return parametrix.resolvent_dleft(k)
        return GluedSystem(model, k).kernel_dleft()

    def assemble(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
        sig, w = cc_segment(math.log(1.0 / k0), sigma_max, n_nodes)
        out = np.zeros((model.n, model.n))
        jump = np.zeros(model.n)
        for s_i, w_i in zip(sig, w):
            k = math.exp(-s_i)
            out += (2.0 / math.pi) * w_i * k * dleft_at(k)
            jump += (2.0 / math.pi) * w_i * k * (1.0 / model.v)
        return out, jump

    vals, jump = assemble(n_sigma)
    err = 0.0
    if error_estimate:
        coarse, _ = assemble(max(9, (n_sigma + 1) // 2))
        err = float(np.max(np.abs(vals - coarse)))
        scale = float(np.max(np.abs(vals)))
        if scale > 0 and err > 1e-3 * scale:
            raise NonConvergenceError(
                f"k-quadrature unconverged: per-entry error {err:g} "
                f"against scale {scale:g}")
    return DiscretizedKernel(model, vals, jump_step=jump, quad_error=err)


def rank_one_k_integral(c_rate: float, k0: float, r, rp):
    """Closed form int_0^{k0} r^{-1} e^{-c k r} e^{-c k r'} dk
    = r^{-1} (c (r + r'))^{-1} (1 - e^{-c k0 (r + r')})."""
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    tot = c_rate * (r + rp)
    return (1.0 - np.exp(-k0 * tot)) / (r * tot)


# ---------------------------------------------------------------------------
# high-energy multiplier


def _symmetric_channel_operator(model: ModelManifold, end: str, m: int,
                                l: int, r_max: float, n_pts: int):
    """Symmetric finite-volume radial operator of one channel on
    [R, r_max] with Dirichlet walls; returns (eigs, modes, weights, grid,
    D1) with modes orthonormal in the channel volume measure."""
    spec = model.end_spec(end)
    n_dim = spec.euclidean_dim
    r = np.geomspace(model.R, r_max, n_pts)
    h = np.diff(r)
    w = np.zeros(n_pts)
    w[1:-1] = 0.5 * (r[2:] - r[:-2]) * r[1:-1] ** (n_dim - 1)
    w[0] = 0.5 * h[0] * r[0] ** (n_dim - 1)
    w[-1] = 0.5 * h[-1] * r[-1] ** (n_dim - 1)
    vmid = (0.5 * (r[1:] + r[:-1])) ** (n_dim - 1)
    mu2 = spec.cross_section.eigenvalues[l]
    ang = m * (m + n_dim - 2)
    pot = ang / r ** 2 + mu2
    # stiffness: S_ij = sum of v_mid (u_i' u_j') over cells + potential mass
    main = np.zeros(n_pts)
    off = -vmid / h
    main[:-1] -= off
    main[1:] -= off
    S = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
    S = S + np.diag(pot * w)
    # Dirichlet walls: restrict to the interior
    sl = slice(1, n_pts - 1)
    Sd = S[sl, sl]
    wd = w[sl]
    A = Sd / np.sqrt(wd)[:, None] / np.sqrt(wd)[None, :]
    eigs, Q = np.linalg.eigh(A)
    eigs = np.maximum(eigs, 0.0)
    modes = Q / np.sqrt(wd)[:, None]
    rd = r[sl]
    # staggered gradient of the quadratic form (zero boundary values):
    # rows = interior cell interfaces, weights v_mid h
    ni = n_pts - 2
    grad = np.zeros((ni + 1, ni))
    hd = np.empty(ni + 1)
    hd[0] = r[1] - r[0]
    hd[1:] = r[2:] - r[1:-1]
    for i in range(ni + 1):
        if 0 < i <= ni - 1:
            grad[i, i - 1] = -1.0 / hd[i]
        if i <= ni - 1:
            grad[i, i] = grad[i, i] + 1.0 / hd[i]
        elif i == ni:
            grad[i, i - 1] = -1.0 / hd[i]
    gw = vmid * h
    return eigs, modes, wd, rd, grad, gw


def high_energy_multiplier(model: ModelManifold, channels, k0: float = 1.0,
                           r_max: float = 64.0, n_pts: int = 220) -> dict:
    """Apply nabla F_>(sqrt(Delta)) per channel by eigen-decomposition on
    a truncated radial domain and report the L^2 -> L^2 norms.

    The multiplier bound sup_xi |xi F_>(xi)| = (2/pi) arctan(oo) = 1 makes
    sup_channels || nabla F_>(sqrt(Delta)) ||_{2->2} <= 1.
    """
    norms = {}
    for ch in channels:
        eigs, modes, wd, rd, grad, gw = _symmetric_channel_operator(
            model, ch.end, ch.angular, ch.cross_index, r_max, n_pts)
        lam = np.sqrt(eigs)
        mult = np.where(lam > 0, f_high(np.maximum(lam, 1e-300), k0), 0.0)
        # the discretization-consistent gradient is the staggered
        # difference entering the finite-volume quadratic form:
        # ||grad g||^2 <= <Delta g, g>, so the norm is <= sup xi F_>(xi)
        core = modes * mult[None, :]
        T = grad @ core @ (modes.T * wd[None, :])
        Tw = np.sqrt(gw)[:, None] * T / np.sqrt(wd)[None, :]
        norms[(ch.end, ch.angular, ch.cross_index)] = float(
            np.linalg.norm(Tw, 2))
    return {"norms": norms, "uniform_bound": max(norms.values()),
            "multiplier_sup": 1.0}


# ---------------------------------------------------------------------------
# L^p machinery on the model grid


def lp_norm(q: np.ndarray, f: np.ndarray, p: float) -> float:
    return float(np.dot(q, np.abs(f) ** p) ** (1.0 / p))


def boyd_lower_bound(mat: np.ndarray, q: np.ndarray, p: float,
                     iters: int = 50, f0: np.ndarray | None = None,
                     signed: bool = True) -> float:
    """Lower bound for the L^p(q) -> L^p(q) norm of the kernel operator by
    the nonlinear duality iteration f <- [M*(|M f|^{p-1} sgn)]^{1/(p-1)}.

    With signed=True the iteration runs on the signed operator (required
    for Calderon-Zygmund-type kernels, whose absolute value is unbounded);
    on positive kernels both variants converge to the true norm."""
    n = mat.shape[0]
    work = mat if signed else np.abs(mat)
    f = np.ones(n) if f0 is None else np.asarray(f0, dtype=float)
    best = 0.0
    for _ in range(iters):
        nf = lp_norm(q, f, p)
        if not (np.isfinite(nf) and nf > 0):
            break
        f = f / nf
        g = work @ f
        best = max(best, lp_norm(q, g, p))
        u = np.abs(g) ** (p - 1.0) * np.sign(g)
        # q-adjoint of the composition matrix: diag(1/q) M^T diag(q)
        h = (work.T @ (q * u)) / q
        f = np.abs(h) ** (1.0 / (p - 1.0)) * np.sign(h)
        if not np.all(np.isfinite(f)):
            break
    return best


def schur_upper_bound(mat: np.ndarray, q: np.ndarray, p: float) -> float:
    """|| K ||_{p->p} <= C_1^{1/p'} C_inf^{1/p} with C_1 / C_inf the max
    column / row L^1 masses (Schur interpolation)."""
    row = float(np.max(np.abs(mat) @ np.ones(len(q))))
    col = float(np.max(np.ones(len(q)) @ np.abs(mat)))
    return col ** (1.0 - 1.0 / p) * row ** (1.0 / p)


@dataclass
class TrendRow:
    p: float
    r_max: float
    lower: float
    upper: float


def lp_boundedness_report(kern: DiscretizedKernel, p_list, r_maxes,
                          stability: float = 0.05) -> dict:
    """Norm estimates of the kernel restricted to {r, r' <= R_max} for each
    p, with a bounded/divergent verdict from the R_max trend.

    Lower bounds: structured test family (radial plateaus, the aligned
    profile ilg(1/r')/r' on the two-dimensional end) plus the positive-
    kernel power iteration; upper bound: Schur interpolation (p = 2 uses
    the exact weighted spectral norm).
    """
    model = kern.model
    q = model.weights
    rows: list[TrendRow] = []
    verdicts = {}
    for p in p_list:
        series = []
        for rmax in r_maxes:
            mask = model.r <= rmax
            sub = kern.matrix()[np.ix_(mask, mask)]
            qs = q[mask]
            lower = 0.0
            # structured family
            fam = [np.ones(mask.sum())]
            for a in (4.0, rmax / 4, rmax):
                fam.append(np.where(model.r[mask] <= a, 1.0, 0.0))
            prof = np.where(model.mask_minus[mask] & (model.r[mask] > 2.0),
                            _aligned_profile(model.r[mask], p), 0.0)
            if prof.any():
                fam.append(prof)
            for f in fam:
                nf = lp_norm(qs, f, p)
                if nf > 0:
                    lower = max(lower, lp_norm(qs, sub @ f, p) / nf)
            if p == 2.0:
                # the signed spectral norm: at p = 2 the absolute kernel
                # sits on the boundary of the power-weight lemmas, and
                # boundedness rides on the multiplier route (signs matter)
                sq = np.sqrt(qs)
                upper = float(np.linalg.norm(sq[:, None] * sub / sq[None, :], 2))
                lower = upper
            else:
                lower = max(lower, boyd_lower_bound(sub, qs, p))
                upper = schur_upper_bound(sub, qs, p)
            rows.append(TrendRow(p, rmax, lower, upper))
            series.append(lower)
        tail = np.array(series[-3:])
        var = float((tail.max() - tail.min()) / tail.max())
        if var < stability:
            verdicts[p] = {"verdict": "bounded-trend", "variation": var}
        else:
            slope = loglog_slope(np.array(r_maxes[-4:], dtype=float),
                                 np.array(series[-4:]))
            verdicts[p] = {"verdict": "divergent-trend", "variation": var,
                           "growth_exponent": slope}
    return {"rows": rows, "verdicts": verdicts}


def _aligned_profile(r, p: float):
    """The profile aligned with the witness right factor: for the operator
    with right factor b = ilg(1/r)/r, the L^p-norming input is b^{p'-1}."""
    pp = p / (p - 1.0)
    b = np.where(r > 1.0, 1.0 / (np.log(np.maximum(r, 1.0 + 1e-9)) * r), 0.0)
    return b ** (pp - 1.0)


# ---------------------------------------------------------------------------
# the unboundedness witness


def witness_f(t):
    """f(t) = ilg(t)/(1 + ilg(t)) for t < 1, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    small = t < 1.0
    il = np.where(small & (t > 0), 1.0 / np.log(1.0 / np.where(small, t, 0.5)),
                  0.0)
    out[small] = il[small] / (1.0 + il[small])
    return out


def ilg_chain_inequality(samples: int = 10000, seed: int = 11) -> dict:
    """ilg k >= f(k r') ilg(1/r') whenever k r' < 1 and r' >= e.

    From 1/ilg k = 1/ilg(k r') + 1/ilg(1/r') the bound needs
    ilg(1/r') <= 1, which is exactly r' >= e (large radius regime)."""
    rng = np.random.default_rng(seed)
    rp = np.exp(rng.uniform(1.0, np.log(1e6), samples))
    k = np.exp(rng.uniform(np.log(1e-12), 0.0, samples)) / rp  # k r' < 1
    lhs = ilg_clipped(k)
    rhs = witness_f(k * rp) * ilg_clipped(1.0 / rp)
    ok = lhs >= rhs * (1 - 1e-12)
    return {"violations": int((~ok).sum()), "samples": samples}


def ilg_clipped(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = (x > 0) & (x < 1)
    out[pos] = 1.0 / np.log(1.0 / x[pos])
    return out


def kappa_integral(eps: float = 1.0, c_rate: float = 1.0) -> float:
    """int_0^eps f(kappa)(1 + |log kappa|) e^{-c kappa} d kappa > 0."""
    from scipy.integrate import quad

    val, _ = quad(lambda t: float(witness_f(t)) * (1 + abs(math.log(t)))
                  * math.exp(-c_rate * t), 0.0, eps, limit=200)
    return val


@dataclass
class UnboundednessWitness:
    model: ModelManifold
    beta: float
    k0: float
    tau: np.ndarray
    kernel: np.ndarray          # witness kernel on (supp tau) x (minus grid)
    rows: np.ndarray            # grid indices of supp tau
    cols: np.ndarray            # grid indices of the right factor support
    entrywise_nonneg: bool
    lower_constant: float
    diff_exponent: float
    growth: dict = field(default_factory=dict)


def unboundedness_witness(model: ModelManifold, key_approx, p_list=(3.0, 4.0),
                          k0: float = math.exp(-10.0), n_sigma: int = 33,
                          sigma_max: float = 44.0,
                          r_maxes=None) -> UnboundednessWitness:
    """Assemble the two-dimensional-end witness

        T(z, z') = tau(z) int_0^{k0} d_r(phi + u)(z, k)
                                     R_-(z^o, z') phi_-(z') dk.

    The split point k0 sits inside the asymptotic regime (the inverse-log
    stage cascade of the model has ratio beta_2/beta ~ -8, so the leading
    K_0 mechanism rules for ilg k <~ 0.1); there d_r(phi + u) > 0 on
    supp tau and T is entrywise nonnegative, bounded below by
    C (tau(z)/r) ilg(1/r')/r' once r' >~ 1/k0.  Norm lower bounds of the
    truncated kernel then grow like R^{(2-p')/p'} / log R for p > 2
    (fitted with the log factor removed).
    """
    ka = key_approx
    beta = ka.stages[0].beta
    if beta <= 0:
        raise DomainError("unboundedness witness needs beta > 0")
    za, zb = model.radii.zeta
    tau = Bump(-zb, -zb + 1.0, -za - 1.0, -za)(model.s)
    rows = np.where(tau > 0)[0]
    pa, pb = model.radii.phi
    cols = np.where(model.mask_minus & (model.r >= pa))[0]
    end = model.minus
    r0b = model.basepoint_minus
    rr = model.r[rows]
    rc = model.r[cols]
    phi_vals = np.ones_like(rc)
    pstep = 1.0  # phi_- = 1 on r >= pb; transition handled below
    from .cutoffs import Step
    stp = Step(-pb, -pa, falling=False)
    phi_vals = 1.0 - stp(model.s[cols])
    st = ka.stages[0]
    sig, w = cc_segment(math.log(1.0 / k0), sigma_max, n_sigma)
    kern = np.zeros((len(rows), len(cols)))
    positive = True
    for s_i, w_i in zip(sig, w):
        k = math.exp(-s_i)
        _, du = ka.u(k)
        dr_u = -(du + st.phi.dvalues)[rows]   # d_r = -d/ds on the minus end
        if np.any(dr_u <= 0):
            positive = False
        col = pk.reduced_kernel(end, k, r0b, rc) * phi_vals
        kern += w_i * k * np.outer(dr_u, col)
    # lower-bound constant against (tau/r) ilg(1/r')/r' in the saturated
    # window r' >= 5/k0
    shape = np.outer(tau[rows] / rr, ilg_clipped(1.0 / rc) / rc)
    keep = tau[rows] > 0.5
    win = rc >= 5.0 / k0
    if win.sum() >= 3:
        ratio = kern[keep][:, win] / np.maximum(shape[keep][:, win], 1e-300)
        cmin = float(np.min(ratio))
    else:
        cmin = math.nan
    # basepoint-freezing error: int |R(z,.) - R(z^o,.)| dk = O(r'^{-2})
    sig2, w2 = cc_segment(math.log(1.0 / k0), sigma_max, 13)
    mid = float(np.median(rr))
    dint = np.zeros(len(rc))
    for s_i, w_i in zip(sig2, w2):
        k = math.exp(-s_i)
        dint += w_i * k * np.abs(pk.reduced_kernel(end, k, mid, rc)
                                 - pk.reduced_kernel(end, k, r0b, rc))
    sel = rc > 2.0 / k0
    diff_exp = loglog_slope(rc[sel], np.maximum(dint[sel], 1e-300)) \
        if sel.sum() >= 3 else math.nan
    wit = UnboundednessWitness(model, beta, k0, tau, kern, rows, cols,
                               positive and bool(np.all(kern >= 0)),
                               cmin, diff_exp)
    if r_maxes is None:
        top = model.config.S_minus
        r_maxes = tuple(top / 2.0 ** j for j in (7.0, 5.25, 3.5, 1.75, 0.0))
    q = model.weights
    for p in p_list:
        pp = p / (p - 1.0)
        norms = []
        for rmax in r_maxes:
            sel_c = rc <= rmax
            b = ilg_clipped(1.0 / rc[sel_c]) / rc[sel_c]
            f = b ** (pp - 1.0)
            qs = q[cols][sel_c]
            g = kern[:, sel_c] @ (qs * f)
            norms.append(lp_norm(q[rows], g, p) / lp_norm(qs, f, pp * 0 + p))
        corrected = np.array(norms) * np.log(np.array(r_maxes))
        slope = loglog_slope(np.array(r_maxes, dtype=float), corrected)
        wit.growth[p] = {"norms": norms, "r_maxes": tuple(r_maxes),
                         "fitted_exponent": slope,
                         "expected": (2.0 - pp) / pp}
    return wit


def truncated_bnorm_exponent(p: float, r_maxes, R: float = 2.0,
                             c_minus: float = 1.0) -> dict:
    """Fitted growth exponent of || ilg(1/r)/r ||_{L^{p'}(r dr), r <= Rmax},
    with the 1/log R factor removed: expected (2 - p')/p'."""
    from scipy.integrate import quad

    pp = p / (p - 1.0)
    norms = []
    for rmax in r_maxes:
        val, _ = quad(lambda r: (1.0 / (math.log(r) * r)) ** pp * c_minus * r,
                      R, rmax, limit=400)
        norms.append(val ** (1.0 / pp))
    corrected = np.array(norms) * np.log(np.array(r_maxes))
    slope = loglog_slope(np.array(r_maxes, dtype=float), corrected)
    return {"norms": norms, "fitted_exponent": slope,
            "expected": (2.0 - pp) / pp}


def schur_exponent_check(model: ModelManifold, s_exp: float,
                         k_list=(3e-3, 1e-3, 3e-4, 1e-4)) -> dict:
    """The off-diagonal minus-end resolvent at frozen k has
    L^{s'} -> L^inf norm ~ k^{-2/s}: fitted exponent of
    sup_z (int_{d >= 1} |K(z, z')|^s dV')^{1/s} against k."""
    end = model.minus
    r_eval = np.array([model.radii.zeta[0]])
    vals = []
    for k in k_list:
        r = np.geomspace(model.R, 50.0 / k, 4000)
        w = np.gradient(r) * end.weight_constant * r
        kern = pk.reduced_kernel(end, k, r_eval[0], r)
        mask = np.abs(r - r_eval[0]) >= 1.0
        vals.append(float(np.sum(w[mask] * np.abs(kern[mask]) ** s_exp))
                    ** (1.0 / s_exp))
    slope = loglog_slope(np.array(k_list), np.array(vals))
    return {"fitted": slope, "expected": -2.0 / s_exp,
            "values": vals}


# ---------------------------------------------------------------------------
# split consistency on a pure Euclidean model


def split_consistency_euclidean(k0: float = 1.0, n_r: int = 160,
                                r_span=(2.0, 40.0)) -> dict:
    """On R^3 (point cross-section), the low-energy k-quadrature kernel
    plus the high-energy eigen-multiplier kernel reproduce the radial
    derivative of the known kernel of Delta^{-1/2},

        K(r, r') = log((r + r')/|r - r'|) / (4 pi^2 r r'),

    compared pointwise away from the diagonal."""
    from .model import CrossSection

    end = EndSpec(3, CrossSection.point(), 2.0)
    r = np.geomspace(r_span[0], r_span[1], n_r)
    # low part: (2/pi) int_0^{k0} d_r kernel dk by quadrature
    sig, ws = cc_segment(math.log(1.0 / k0), 38.0, 35)
    low = np.zeros((n_r, n_r))
    for s_i, w_i in zip(sig, ws):
        k = math.exp(-s_i)
        low += (2.0 / math.pi) * w_i * k * \
            pk.reduced_kernel_dleft(end, k, r[:, None], r[None, :])
    # high part kernel: d_r F_>(sqrt(Delta)) by dense eigen-decomposition
    h = np.diff(r)
    wcell = np.zeros(n_r)
    wcell[1:-1] = 0.5 * (r[2:] - r[:-2]) * r[1:-1] ** 2
    wcell[0] = 0.5 * h[0] * r[0] ** 2
    wcell[-1] = 0.5 * h[-1] * r[-1] ** 2
    wcell *= end.weight_constant
    vmid = end.weight_constant * (0.5 * (r[1:] + r[:-1])) ** 2
    main = np.zeros(n_r)
    off = -vmid / h
    main[:-1] -= off
    main[1:] -= off
    S = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
    A = S / np.sqrt(wcell)[:, None] / np.sqrt(wcell)[None, :]
    eigs, Q = np.linalg.eigh(A)
    eigs = np.maximum(eigs, 1e-14)
    modes = Q / np.sqrt(wcell)[:, None]
    kern_h = (modes * f_high(np.sqrt(eigs), k0)[None, :]) @ modes.T
    D1 = np.zeros((n_r, n_r))
    for i in range(n_r):
        j0 = min(max(i - 2, 0), n_r - 5)
        D1[i, j0:j0 + 5] = fornberg_weights(r[i], r[j0:j0 + 5], 1)[1]
    high = D1 @ kern_h
    # reference: d/dr of the exact half-inverse kernel
    a = r[:, None]
    b = r[None, :]
    core = np.log((a + b) / np.maximum(np.abs(a - b), 1e-300))
    dcore = 1.0 / (a + b) - np.sign(a - b) / np.maximum(np.abs(a - b), 1e-300)
    ref = (dcore / (a * b) - core / (a * a * b)) / (4 * math.pi ** 2)
    total = low + high
    mask_r = (r > 4.0) & (r < 25.0)
    offdiag = np.abs(a - b) > 3.0
    sel = np.outer(mask_r, mask_r) & offdiag
    rel = float(np.max(np.abs((total - ref)[sel]))
                / np.max(np.abs(ref[sel])))
    return {"rel_error": rel}
