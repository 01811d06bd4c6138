"""Approximate low-energy solutions of (Delta + k^2) u = v by the staged
inverse-log construction.

One stage, for a compactly supported radial source w: solve
Delta phi = -w (bounded on the minus end, limit beta; decaying on the
plus end with tail coefficient c r^{2-n}), then glue

    u = -beta chi(r) ilg(k) K_0(k r) - chi V_- - (1 - chi) V_+(k),

where chi is 1 far out on the two-dimensional end, V_- = phi - beta is the
(exactly trivial) off-zero extension there, and V_+ deforms the plus tail
c r^{2-n} into the decaying Bessel profile
c r^{1-n/2} K_{n/2-1}(k r) / (leading constant) beyond a plus-side cutoff
eta.  Using K_0(x) = -log(x/2) - gamma + R0(x) everything collapses to

    (Delta + k^2) u - w = -ilg(k) * w_next + small(k),

with  w_next = -beta Delta(chi (log r - c_gamma))  compactly supported and
small(k) an explicit, exactly compactly supported O(k^2 log k) field.
Iterating q times yields a residual  -(ilg k)^q w_{q+1} + sum of smalls,
evaluated here in closed form (no numerical differentiation anywhere).

The inverse-log coefficient of u is available in closed form as well:
coefficient m >= 1 equals beta_m chi (log r - c_gamma) - phi_{m+1}, which
for m = 1 is (plus/minus sign conventions aside) beta times the global
log-growing harmonic function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun as sf
from .bvp import GlobalHarmonicSolution, GluedSystem, solve_laplace
from .cutoffs import Step
from .errors import DomainError
from .fits import fit_envelope, loglog_slope
from .model import ModeChannel, ModelManifold
from .specfun import C_GAMMA, ilg


def _gnu(nu: float, x):
    """g_nu(x) = K_nu(x) x^nu / (2^{nu-1} Gamma(nu)): the decaying radial
    profile normalized so that r^{2-n} g_nu(k r) -> r^{2-n} as k -> 0."""
    x = np.asarray(x, dtype=float)
    if nu == 0.5:
        return np.exp(-x)
    out = np.ones_like(x)
    big = x > 1e-8
    if big.any():
        xb = x[big]
        out[big] = sf.bessel_K(nu, xb) * xb ** nu / (2 ** (nu - 1) * math.gamma(nu))
    return out


def _gnu_prime(nu: float, x):
    """d/dx g_nu(x) = -x^nu K_{nu-1}(x) / (2^{nu-1} Gamma(nu))."""
    x = np.asarray(x, dtype=float)
    if nu == 0.5:
        return -np.exp(-x)
    out = np.zeros_like(x)
    pos = x > 0
    if pos.any():
        xp = x[pos]
        out[pos] = -xp ** nu * sf.bessel_K(abs(nu - 1.0), xp) \
            / (2 ** (nu - 1) * math.gamma(nu))
    return out


@dataclass
class KeyStage:
    """One stage of the construction, for one compact source."""
    source: np.ndarray
    phi: GlobalHarmonicSolution
    beta: float
    c_raw: float          # phi = c_raw r^{2-n} near plus infinity
    v_next: np.ndarray    # the next compact source (zero when beta = 0)


class KeyApproximation:
    """Approximate solution u(z, k) of (Delta + k^2) u = v to order q."""

    def __init__(self, model: ModelManifold, v, q: int = 3,
                 system: GluedSystem | None = None):
        if q < 1:
            raise DomainError("KeyApproximation: need q >= 1")
        self.model = model
        self.q = q
        self.v = np.asarray(v, dtype=float)
        sys0 = system if system is not None else GluedSystem(model, 0.0)
        s = model.s
        a, b = model.radii.chi
        chi = Step(-b, -a, falling=False)   # rising in s
        self.chi = 1.0 - chi(s)             # 1 far out on the minus end
        self.chi_d1 = -chi.d1(s)
        self.chi_d2 = -chi.d2(s)
        self.lapchi = -self.chi_d2 - model.dlog_weight(s) * self.chi_d1
        ea, eb = model.radii.eta
        eta = Step(ea, eb)
        self.eta = eta(s)
        self.eta_d1 = eta.d1(s)
        self.eta_d2 = eta.d2(s)
        self.lapeta = -self.eta_d2 - model.dlog_weight(s) * self.eta_d1
        self.n_plus = model.plus.euclidean_dim
        self.nu = 0.5 * self.n_plus - 1.0
        self.logr = np.log(model.r)
        neg = s < 0
        self.dlogr = np.zeros_like(s)
        self.dlogr[neg] = 1.0 / s[neg]      # valid on supp chi
        # g = log r - c_gamma and the compact-source generator
        g = self.logr - C_GAMMA
        self.unit_next = -(g * self.lapchi - 2.0 * self.chi_d1 * self.dlogr)
        self.stages: list[KeyStage] = []
        w = self.v
        for _ in range(q):
            phi = solve_laplace(model, w, system=sys0)
            # Delta phi = -w convention: solve_laplace solves Delta u = F
            phi = GlobalHarmonicSolution(-phi.values, -phi.dvalues,
                                         -phi.beta, -phi.plus_coeff)
            beta = phi.beta
            c_raw = phi.plus_coeff * model.R ** (self.n_plus - 2.0)
            v_next = beta * self.unit_next
            self.stages.append(KeyStage(w, phi, beta, c_raw, v_next))
            w = v_next
        self.final_source = w

    # -- pieces ---------------------------------------------------------------

    def _ilgterm(self, k: float):
        """ilg(k) (log r - c_gamma - R0(k r)) on supp chi, else 0; equals
        1 - ilg(k) K_0(k r) there.  Stable down to k = e^{-500}."""
        if k == 0.0:
            return np.zeros(self.model.n), np.zeros(self.model.n)
        s = self.model.s
        on = self.chi > 0
        out = np.zeros_like(s)
        dout = np.zeros_like(s)
        r = self.model.r[on]
        il = ilg(k)
        out[on] = il * (np.log(r) - C_GAMMA - sf.k0_remainder(k * r))
        dout[on] = il * (self.dlogr[on] + k * sf.k1_tail(k * r))
        return out, dout

    def _deform(self, k: float):
        """(delta_k eta, d/ds of it) with delta_k = r^{2-n}(g_nu(k r) - 1),
        supported on the plus-side cutoff eta."""
        m = self.model
        out = np.zeros(m.n)
        dout = np.zeros(m.n)
        if k == 0.0:
            return out, dout
        on = self.eta > 0
        r = m.r[on]
        n = self.n_plus
        gg = _gnu(self.nu, k * r)
        dgg = _gnu_prime(self.nu, k * r)
        delta = r ** (2.0 - n) * (gg - 1.0)
        ddelta = (2.0 - n) * r ** (1.0 - n) * (gg - 1.0) + r ** (2.0 - n) * k * dgg
        out[on] = delta * self.eta[on]
        dout[on] = ddelta * self.eta[on] + delta * self.eta_d1[on]
        return out, dout

    def u(self, k: float):
        """(values, d/ds values) of the approximate solution at energy k."""
        term, dterm = self._ilgterm(k)
        dkv, dkd = self._deform(k)
        il = ilg(k) if k > 0 else 0.0
        vals = np.zeros(self.model.n)
        dvals = np.zeros(self.model.n)
        for i, st in enumerate(self.stages):
            ui = -st.phi.values + st.beta * self.chi * term
            dui = -st.phi.dvalues + st.beta * (self.chi_d1 * term + self.chi * dterm)
            if k > 0 and st.c_raw != 0.0:
                ui = ui - st.c_raw * dkv
                dui = dui - st.c_raw * dkd
            vals += il ** i * ui
            dvals += il ** i * dui
        return vals, dvals

    def residual(self, k: float):
        """(Delta + k^2) u - v in closed form."""
        m = self.model
        il = ilg(k) if k > 0 else 0.0
        out = -(il ** self.q) * self.final_source.copy()
        if k == 0.0:
            return out
        s = m.s
        on_chi = (np.abs(self.chi_d1) > 0) | (np.abs(self.chi_d2) > 0)
        r_chi = m.r[on_chi]
        R0 = sf.k0_remainder(k * r_chi)
        Q1 = k * sf.bessel_K(1.0, k * r_chi) - 1.0 / r_chi
        on_eta = (np.abs(self.eta_d1) > 0) | (np.abs(self.eta_d2) > 0) | (self.eta > 0)
        dkv, _ = self._deform(k)
        n = self.n_plus
        r2n_eta = np.where(self.eta > 0, m.r ** (2.0 - n) * self.eta, 0.0)
        # delta_k and its s-derivative without the eta factor, on supp eta
        delta = np.zeros(m.n)
        ddelta = np.zeros(m.n)
        onp = self.eta > 0
        rr = m.r[onp]
        gg = _gnu(self.nu, k * rr)
        dgg = _gnu_prime(self.nu, k * rr)
        delta[onp] = rr ** (2.0 - n) * (gg - 1.0)
        ddelta[onp] = (2.0 - n) * rr ** (1.0 - n) * (gg - 1.0) \
            + rr ** (2.0 - n) * k * dgg
        for i, st in enumerate(self.stages):
            small = k * k * (st.beta * self.chi - st.phi.values + st.c_raw * r2n_eta)
            if st.beta != 0.0:
                add = np.zeros(m.n)
                add[on_chi] = -st.beta * il * self.lapchi[on_chi] * R0 \
                    + 2.0 * st.beta * il * self.chi_d1[on_chi] * Q1
                small = small + add
            if st.c_raw != 0.0:
                small = small - st.c_raw * (delta * self.lapeta
                                            - 2.0 * ddelta * self.eta_d1)
            out = out + il ** i * small
        return out

    def ilg_coefficient(self, m: int):
        """Closed-form coefficient of ilg(k)^m in the expansion of u at
        k = 0 (valid for m <= q - 1)."""
        if m < 0 or m > self.q - 1:
            raise DomainError("ilg_coefficient: need 0 <= m <= q-1")
        if m == 0:
            return -self.stages[0].phi.values
        st_prev = self.stages[m - 1]
        st = self.stages[m]
        return st_prev.beta * self.chi * (self.logr - C_GAMMA) - st.phi.values


def build_key_approximation(model: ModelManifold, v, q: int = 3,
                            system: GluedSystem | None = None) -> KeyApproximation:
    """Staged approximate solution of (Delta + k^2) u = v for a compactly
    supported radial source."""
    return KeyApproximation(model, v, q=q, system=system)


# ---------------------------------------------------------------------------
# estimate verification


def verify_key_estimates(approx: KeyApproximation, ks,
                         c_rate: float = 0.5) -> dict:
    """Fit the smallest constants validating the pointwise bounds on u and
    its radial derivative over a (z, k) sweep, one constant per regime.

    Shapes: |u| <= C e^{-c k r} (minus end), C r^{2-n} e^{-c k r} (plus
    end), C (neck); |u'| <= C (r^{-2} + ilg k r^{-1}) e^{-c k r} (minus),
    C r^{1-n} e^{-c k r} (plus), with an extra factor ilg k on the plus
    end when the zero-energy solution vanishes identically there.
    """
    m = approx.model
    n = m.plus.euclidean_dim
    refined_plus = abs(approx.stages[0].c_raw) < 1e-13
    regimes = {key: [] for key in
               ("u_minus", "u_plus", "u_neck", "grad_minus", "grad_plus")}
    shapes = {key: [] for key in regimes}
    for k in ks:
        vals, dvals = approx.u(k)
        il = ilg(k)
        damp = np.exp(-c_rate * k * m.r)
        mi, pl, nk = m.mask_minus, m.mask_plus, m.mask_neck
        regimes["u_minus"].append(vals[mi])
        shapes["u_minus"].append(damp[mi])
        regimes["u_plus"].append(vals[pl])
        shapes["u_plus"].append(m.r[pl] ** (2.0 - n) * damp[pl])
        regimes["u_neck"].append(vals[nk])
        shapes["u_neck"].append(np.ones(nk.sum()))
        regimes["grad_minus"].append(dvals[mi])
        shapes["grad_minus"].append(
            (m.r[mi] ** -2.0 + il * m.r[mi] ** -1.0) * damp[mi])
        gshape = m.r[pl] ** (1.0 - n) * damp[pl]
        if refined_plus:
            gshape = gshape * il
        regimes["grad_plus"].append(dvals[pl])
        shapes["grad_plus"].append(gshape)
    out = {}
    for key in regimes:
        fit = fit_envelope(np.concatenate(regimes[key]),
                           np.concatenate(shapes[key]))
        out[key] = fit.constant
    out["c_rate"] = c_rate
    out["plus_gradient_gains_ilg"] = refined_plus
    return out


def verify_lower_bound(approx: KeyApproximation, ks, eps: float = 0.1,
                       r0: float | None = None) -> dict:
    """Check d_r(u + phi) >= C beta ilg(k)/r on {k r <= eps, r >= r0} of
    the minus end and fit the largest such C (vacuous when beta <= 0)."""
    m = approx.model
    st = approx.stages[0]
    beta = st.beta
    if beta <= 0:
        return {"applicable": False, "beta": beta}
    if r0 is None:
        r0 = m.radii.phi[1] * 1.2
    cs, rems = [], []
    for k in ks:
        vals, dvals = approx.u(k)
        dr = -(dvals + st.phi.dvalues)   # d/dr = -d/ds on the minus end
        mask = m.mask_minus & (m.r >= r0) & (k * m.r <= eps)
        if not mask.any():
            continue
        shape = beta * ilg(k) / m.r[mask]
        ratio = dr[mask] / shape
        cs.append(float(np.min(ratio)))
        rems.append(float(np.max(np.abs(dr[mask] - shape))) / (k / r0))
    c_fit = min(cs) if cs else math.nan
    return {"applicable": True, "beta": beta, "constant": c_fit,
            "remainder_scale": max(rems) if rems else math.nan,
            "positive": bool(cs and c_fit > 0)}


# ---------------------------------------------------------------------------
# per-channel off-zero extensions


@dataclass(frozen=True)
class OffZeroExtension:
    """k-deformation of one decaying zero-energy channel profile, matched
    at the gluing radius."""
    end: str
    channel: ModeChannel
    R: float
    euclidean_dim: int
    mu: float   # cross-section frequency, 0 for l = 0

    def profile(self, k: float, r):
        """Profile normalized to the zero-energy one at r = R."""
        r = np.asarray(r, dtype=float)
        n = self.euclidean_dim
        mcount = self.channel.angular
        if self.mu > 0:   # already exponentially decaying: trivial in k
            nu = 0.5 * (n - 2.0) + mcount
            a = -0.5 * (n - 2.0)
            base = (r ** a * sf.bessel_K(nu, self.mu * r)) \
                / (self.R ** a * sf.bessel_K(nu, self.mu * self.R))
            return base
        p = -(n - 2.0) - mcount if n >= 3 else -mcount
        if k == 0.0:
            return (r / self.R) ** p
        nu = 0.5 * (n - 2.0) + mcount
        a = -0.5 * (n - 2.0)
        num = r ** a * sf.bessel_K(nu, k * r)
        den = self.R ** a * sf.bessel_K(nu, k * self.R)
        return num / den

    def profile_dr(self, k: float, r, h: float = 1e-6):
        r = np.asarray(r, dtype=float)
        return (self.profile(k, r + h) - self.profile(k, r - h)) / (2 * h)


def extend_off_zero(model: ModelManifold,
                    channel: ModeChannel) -> OffZeroExtension:
    """Per-channel k-deformation of the decaying zero-energy profile.

    The constant channel on the minus end has no decaying branch: that is
    exactly the case handled by the beta K_0 mechanism instead.
    """
    end = model.end_spec(channel.end)
    if channel.end == "minus" and channel.is_zero:
        raise DomainError(
            "constant channel on the minus end: use the inverse-log "
            "K_0 mechanism, not an off-zero extension")
    mu = 0.0 if channel.cross_index == 0 else \
        math.sqrt(end.cross_section.eigenvalues[channel.cross_index])
    return OffZeroExtension(channel.end, channel, model.R,
                            end.euclidean_dim, mu)


def residual_slope(approx: KeyApproximation, j_list=(3, 4, 5, 6, 7),
                   region: float = 20.0) -> float:
    """Fitted order of sup_{compact} |(Delta+k^2) u - v| against ilg k at
    k = e^{-2^j}."""
    m = approx.model
    mask = np.abs(m.s) <= region
    ks = [math.exp(-2.0 ** j) for j in j_list]
    sups = [float(np.max(np.abs(approx.residual(k)[mask]))) for k in ks]
    return loglog_slope(ilg(np.array(ks)), np.array(sups))
