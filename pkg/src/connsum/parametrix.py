"""Low-energy parametrix and exact resolvent on the glued model.

The pre-parametrix is G1 + G2 + G3:

* G1: the product-end resolvents, cut off by phi_- phi_- and phi_+ phi_+;
* G2: an interior parametrix, realized as the glued Green kernel frozen
  at a reference energy kbar and localized by zeta(z) zeta(z'), times
  1 - phi_-(z) phi_-(z') - phi_+(z) phi_+(z');
* G3: the key-lemma approximate solutions u_{+-}(z, k) tensored with the
  product resolvent columns at frozen basepoints.

Applying (Delta + k^2) row-wise and collecting the product-rule terms
gives the error kernel E(k) in closed form: every term is an explicit
combination of cutoff derivatives, Bessel kernels, the frozen Green
kernel and the key-lemma residuals, so no numerical differentiation
enters and the left support is exactly compact.  The error splits as
E'(k) (cutoff commutators, O(1) at k = 0) plus E''(k) (key-lemma
residual terms, vanishing at k = 0).

On the weighted space L^2_w, w = 1 on the neck, r^{-1} on the plus end
and (r log r)^{-1} on the minus end, E(k) is Hilbert-Schmidt uniformly
down to k = 0.  A finite-rank correction G4 repairs any null space of
Id + E(0); inverting Id + E(k) = (Id + S(k))^{-1} yields the resolvent

    R(k) = G(k)(Id + S(k)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import product_kernels as pk
from .bvp import GluedSystem
from .cutoffs import Bump, Step
from .errors import SingularSystemError
from .keylemma import KeyApproximation
from .model import ModelManifold
from .specfun import ilg


def weight_w(model: ModelManifold) -> np.ndarray:
    """The Hilbert-Schmidt weight: 1 on the neck, r^{-1} on the plus end,
    (r log r)^{-1} on the minus end."""
    r = model.r
    out = np.ones(model.n)
    out[model.mask_plus] = 1.0 / r[model.mask_plus]
    mi = model.mask_minus
    out[mi] = 1.0 / (r[mi] * np.log(r[mi]))
    return out


def hs_norm(model: ModelManifold, kernel: np.ndarray,
            w: np.ndarray | None = None) -> float:
    """Hilbert-Schmidt norm of a kernel on L^2_w: the L^2(dV) norm of
    w(z)^{-1} K(z, z') w(z')."""
    if w is None:
        w = weight_w(model)
    q = model.weights
    row = q / w ** 2
    col = q * w ** 2
    return math.sqrt(float(np.einsum("i,ij,j->", row, kernel ** 2, col)))


@dataclass
class CutoffField:
    """A standing cutoff with its first derivative and Laplacian on the grid."""
    values: np.ndarray
    d1: np.ndarray
    lap: np.ndarray


def _field(model: ModelManifold, step_values, step_d1, step_d2) -> CutoffField:
    lap = -step_d2 - model.dlog_weight(model.s) * step_d1
    return CutoffField(step_values, step_d1, lap)


class ParametrixPieces:
    """All k-independent ingredients of the parametrix."""

    def __init__(self, model: ModelManifold, q: int = 2, kbar: float = 1.0,
                 system: GluedSystem | None = None):
        self.model = model
        self.q = q
        self.kbar = kbar
        s = model.s
        pa, pb = model.radii.phi
        step_m = Step(-pb, -pa, falling=False)
        self.phi_minus = _field(model, 1.0 - step_m(s), -step_m.d1(s),
                                -step_m.d2(s))
        step_p = Step(pa, pb)
        self.phi_plus = _field(model, step_p(s), step_p.d1(s), step_p.d2(s))
        za, zb = model.radii.zeta
        zeta = Bump(-zb, -za, za, zb)
        self.zeta = _field(model, zeta(s), zeta.d1(s), zeta.d2(s))
        self.v_minus = -self.phi_minus.lap  # v = -Delta phi
        self.v_plus = -self.phi_plus.lap
        sys0 = system if system is not None else GluedSystem(model, 0.0)
        self.u_minus = KeyApproximation(model, self.v_minus, q=q, system=sys0)
        self.u_plus = KeyApproximation(model, self.v_plus, q=q, system=sys0)
        self.gamma_ref = GluedSystem(model, kbar)
        self._gamma_kernel = self.gamma_ref.kernel_matrix()
        self._gamma_dleft = self.gamma_ref.kernel_dleft()
        self.g_int = self.zeta.values[:, None] * self._gamma_kernel \
            * self.zeta.values[None, :]
        self.g_int_dleft = self.zeta.d1[:, None] * self._gamma_kernel \
            * self.zeta.values[None, :] + self.zeta.values[:, None] \
            * self._gamma_dleft * self.zeta.values[None, :]
        self.r0_minus = model.basepoint_minus
        self.r0_plus = model.basepoint_plus
        self.weight = weight_w(model)

    # -- reduced product kernels on the grid ---------------------------------

    def _end_data(self, side: str):
        if side == "minus":
            return self.model.minus, self.phi_minus, self.r0_minus, -1.0
        return self.model.plus, self.phi_plus, self.r0_plus, 1.0

    def product_kernel(self, side: str, k: float) -> np.ndarray:
        """phi-localized reduced product resolvent R_side^k(z, z')
        phi(z) phi(z') on grid x grid (zero outside supp phi x supp phi)."""
        m = self.model
        end, phi, _, _ = self._end_data(side)
        out = np.zeros((m.n, m.n))
        idx = np.where(phi.values > 0)[0]
        if len(idx) == 0:
            return out
        r = m.r[idx]
        block = pk.reduced_kernel(end, k, r[:, None], r[None, :])
        out[np.ix_(idx, idx)] = block * phi.values[idx, None] \
            * phi.values[None, idx]
        return out

    def basepoint_column(self, side: str, k: float) -> np.ndarray:
        """phi(z') R_side^k(z_side^o, z') on the grid."""
        m = self.model
        end, phi, r0, _ = self._end_data(side)
        out = np.zeros(m.n)
        idx = np.where(phi.values > 0)[0]
        out[idx] = pk.reduced_kernel(end, k, r0, m.r[idx]) * phi.values[idx]
        return out

    # -- parametrix pieces -----------------------------------------------------

    def g1(self, k: float) -> np.ndarray:
        return self.product_kernel("minus", k) + self.product_kernel("plus", k)

    def g2(self) -> np.ndarray:
        phm, php = self.phi_minus.values, self.phi_plus.values
        m_fac = 1.0 - phm[:, None] * phm[None, :] - php[:, None] * php[None, :]
        return self.g_int * m_fac

    def g3(self, k: float) -> np.ndarray:
        um, _ = self.u_minus.u(k)
        up, _ = self.u_plus.u(k)
        return um[:, None] * self.basepoint_column("minus", k)[None, :] \
            + up[:, None] * self.basepoint_column("plus", k)[None, :]

    def g_tilde(self, k: float) -> np.ndarray:
        return self.g1(k) + self.g2() + self.g3(k)

    def g_tilde_dleft(self, k: float) -> np.ndarray:
        """d/ds in the left variable of the pre-parametrix kernel."""
        m = self.model
        out = np.zeros((m.n, m.n))
        for side in ("minus", "plus"):
            end, phi, _, orient = self._end_data(side)
            idx = np.where(phi.values > 0)[0]
            r = m.r[idx]
            block = pk.reduced_kernel(end, k, r[:, None], r[None, :])
            dblock = pk.reduced_kernel_dleft(end, k, r[:, None], r[None, :])
            out[np.ix_(idx, idx)] += (orient * dblock * phi.values[idx, None]
                                      + block * phi.d1[idx, None]) \
                * phi.values[None, idx]
        phm, php = self.phi_minus.values, self.phi_plus.values
        m_fac = 1.0 - phm[:, None] * phm[None, :] - php[:, None] * php[None, :]
        dm_fac = -self.phi_minus.d1[:, None] * phm[None, :] \
            - self.phi_plus.d1[:, None] * php[None, :]
        out += self.g_int_dleft * m_fac + self.g_int * dm_fac
        _, dum = self.u_minus.u(k)
        _, dup = self.u_plus.u(k)
        out += dum[:, None] * self.basepoint_column("minus", k)[None, :]
        out += dup[:, None] * self.basepoint_column("plus", k)[None, :]
        return out


@dataclass
class ErrorOperator:
    """The error (Delta + k^2) G(k) - Id in closed form.

    jump_ramp / jump_step record the diagonal slope and value jumps of the
    kernel (same in both variables up to the sign flip of the value jump),
    consumed by kink-corrected compositions.
    """
    model: ModelManifold
    k: float
    e1: np.ndarray        # cutoff-commutator part (E' plus G4 action)
    e2: np.ndarray        # key-lemma residual part E''
    weight: np.ndarray
    jump_ramp: np.ndarray
    jump_step: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.e1 + self.e2

    def hs_e2(self) -> float:
        return hs_norm(self.model, self.e2, self.weight)

    def hs_total(self) -> float:
        return hs_norm(self.model, self.total, self.weight)


def error_kernel(pieces: ParametrixPieces, k: float) -> ErrorOperator:
    """E(k) = (Delta + k^2) G~(k) - Id, assembled analytically."""
    m = pieces.model
    n = m.n
    e1 = np.zeros((n, n))
    for side in ("minus", "plus"):
        end, phi, r0, orient = pieces._end_data(side)
        rows = np.where((np.abs(phi.d1) > 0) | (np.abs(phi.lap) > 0))[0]
        if len(rows) == 0:
            continue
        cols = np.where(phi.values > 0)[0]
        rr = m.r[rows]
        rc = m.r[cols]
        if k > 0:
            kern = pk.reduced_kernel(end, k, rr[:, None], rc[None, :])
            base = pk.reduced_kernel(end, k, r0, rc)
            diff = kern - base[None, :]
            dkern_r = pk.reduced_kernel_dleft(end, k, rr[:, None], rc[None, :])
        else:
            diff = pk.reduced_kernel_k0_diff(end, rr[:, None], rc[None, :],
                                             r0, rc[None, :])
            dkern_r = _dleft_zero_energy(end, rr[:, None], rc[None, :])
        ds_kern = orient * dkern_r
        block = phi.lap[rows, None] * (diff - pieces.g_int[np.ix_(rows, cols)]) \
            - 2.0 * phi.d1[rows, None] * (ds_kern
                                          - pieces.g_int_dleft[np.ix_(rows, cols)])
        e1[np.ix_(rows, cols)] += block * phi.values[None, cols]
    # zeta-commutator terms and the frozen-energy defect
    phm, php = pieces.phi_minus.values, pieces.phi_plus.values
    m_fac = 1.0 - phm[:, None] * phm[None, :] - php[:, None] * php[None, :]
    zrows = np.where((np.abs(pieces.zeta.d1) > 0)
                     | (np.abs(pieces.zeta.lap) > 0))[0]
    add = pieces.zeta.lap[zrows, None] * pieces._gamma_kernel[zrows, :] \
        - 2.0 * pieces.zeta.d1[zrows, None] * pieces._gamma_dleft[zrows, :]
    e1[zrows, :] += m_fac[zrows, :] * add * pieces.zeta.values[None, :]
    e1 += (k * k - pieces.kbar ** 2) * pieces.g_int * m_fac
    # key-lemma residual terms
    e2 = np.zeros((n, n))
    if k > 0:
        e2 += pieces.u_minus.residual(k)[:, None] \
            * pieces.basepoint_column("minus", k)[None, :]
        e2 += pieces.u_plus.residual(k)[:, None] \
            * pieces.basepoint_column("plus", k)[None, :]
    # diagonal jumps: every Green-type factor has slope jump -1/v and its
    # left derivative a value jump 1/v at the diagonal
    v = m.v
    z = pieces.zeta.values
    m_diag = 1.0 - phm ** 2 - php ** 2
    lap_sum = pieces.phi_minus.lap * phm + pieces.phi_plus.lap * php
    d1_sum = pieces.phi_minus.d1 * phm + pieces.phi_plus.d1 * php
    jump_ramp = (-lap_sum * (1.0 - z ** 2) - m_diag * z * pieces.zeta.lap
                 - (k * k - pieces.kbar ** 2) * z ** 2 * m_diag) / v
    jump_step = (-2.0 * d1_sum * (1.0 - z ** 2)
                 - 2.0 * pieces.zeta.d1 * z * m_diag) / v
    return ErrorOperator(m, k, e1, e2, pieces.weight, jump_ramp, jump_step)


def _dleft_zero_energy(end, r, rp):
    """k -> 0 limit of reduced_kernel_dleft: -r^{1-n}/c for r > r', 0 below."""
    n = end.euclidean_dim
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    out = np.where(r > rp, -r ** (1.0 - n) / end.weight_constant, 0.0)
    return out


# ---------------------------------------------------------------------------
# finite-rank correction


@dataclass
class FiniteRankFix:
    """Null-space repair of Id + E(0)."""
    rank: int
    phis: list[np.ndarray] = field(default_factory=list)   # null vectors
    psis: list[np.ndarray] = field(default_factory=list)   # neck bumps
    psi_laps: list[np.ndarray] = field(default_factory=list)
    threshold: float = 0.0
    sigma_before: float = 0.0
    sigma_after: float = 0.0

    def g4(self, n: int) -> np.ndarray:
        out = np.zeros((n, n))
        for psi, phi in zip(self.psis, self.phis):
            out += psi[:, None] * phi[None, :]
        return out

    def g4_error(self, k: float, n: int) -> np.ndarray:
        """(Delta + k^2) G4 as a kernel."""
        out = np.zeros((n, n))
        for psi, lap, phi in zip(self.psis, self.psi_laps, self.phis):
            out += (lap + k * k * psi)[:, None] * phi[None, :]
        return out


def _weighted_operator(model: ModelManifold, kernel: np.ndarray,
                       w: np.ndarray) -> np.ndarray:
    """Matrix of Id + kernel on L^2_w in an orthonormal discrete basis."""
    q = model.weights
    scale = np.sqrt(q) / w
    op = kernel * q[None, :]
    return np.eye(model.n) + scale[:, None] * op / scale[None, :]


def _bump_dictionary(model: ModelManifold):
    """Smooth compactly supported neck bumps with analytic Laplacians."""
    R = model.R
    spans = [(-R, -R / 2, R / 2, R), (-R, -R / 2, 0.0, R / 2),
             (-R / 2, 0.0, R / 2, R), (-R / 2, -R / 4, R / 4, R / 2)]
    out = []
    for a, b, c, d in spans:
        bump = Bump(a, b, c, d)
        s = model.s
        vals = bump(s)
        lap = -bump.d2(s) - model.dlog_weight(s) * bump.d1(s)
        out.append((vals, lap))
    return out


def finite_rank_fix(pieces: ParametrixPieces,
                    err0: ErrorOperator | None = None,
                    rel_threshold: float = 1e-9) -> FiniteRankFix:
    """Compute the null space of Id + E(0) on the weighted space and the
    rank-M correction G4 making Id + E(0) invertible.

    With no null vectors (singular values all above the relative
    threshold) the fix is trivial: M = 0 and G4 = 0.
    """
    model = pieces.model
    if err0 is None:
        err0 = error_kernel(pieces, 0.0)
    w = pieces.weight
    M = _weighted_operator(model, err0.total, w)
    U, sig, Vt = np.linalg.svd(M)
    thresh = rel_threshold * sig[0]
    null_dim = int(np.sum(sig < thresh))
    fix = FiniteRankFix(rank=null_dim, threshold=thresh,
                        sigma_before=float(sig[-1]))
    if null_dim == 0:
        fix.sigma_after = float(sig[-1])
        return fix
    q = model.weights
    scale = np.sqrt(q) / w
    # null vectors back in value coordinates
    null_vecs = [Vt[-(i + 1)] / scale for i in range(null_dim)]
    cokernel = [U[:, -(i + 1)] for i in range(null_dim)]
    chosen, laps = _select_bumps(model, cokernel, null_dim, scale, q)
    fix.phis = null_vecs
    fix.psis = chosen
    fix.psi_laps = laps
    corr = err0.total + fix.g4_error(0.0, model.n)
    sig_after = np.linalg.svd(_weighted_operator(model, corr, w),
                              compute_uv=False)
    fix.sigma_after = float(sig_after[-1])
    if fix.sigma_after < 10 * thresh:
        raise SingularSystemError(
            "finite-rank complement construction failed "
            f"(sigma_after={fix.sigma_after:g}, threshold={thresh:g})")
    return fix


def _select_bumps(model, cokernel, null_dim, scale, q):
    cands = _bump_dictionary(model)
    if len(cands) < null_dim:
        raise SingularSystemError("bump dictionary smaller than null space")
    # greedy pick maximizing alignment of Delta psi with the cokernel
    picked, laps = [], []
    used = set()
    for u in cokernel[:null_dim]:
        best, best_score = None, -1.0
        for j, (vals, lap) in enumerate(cands):
            if j in used:
                continue
            score = abs(float(np.dot(u, scale * q * lap)))
            if score > best_score:
                best, best_score = j, score
        used.add(best)
        picked.append(cands[best][0])
        laps.append(cands[best][1])
    return picked, laps


# ---------------------------------------------------------------------------
# inversion and the resolvent


@dataclass
class InvertedError:
    """S(k) with (Id + E(k))(Id + S(k)) = Id in the kernel algebra.

    jump vectors: the diagonal jumps of S, equal to minus those of E at
    leading order; used by downstream kink-corrected compositions.
    """
    model: ModelManifold
    k: float
    s_kernel: np.ndarray
    identity_residual: float
    sk_identity_residual: float
    jump_ramp: np.ndarray
    jump_step: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """Corrected composition matrix of S as an operator on densities."""
        k1, k0 = self.model.kink_kappa
        return self.s_kernel * self.model.weights[None, :] \
            + np.diag(self.jump_ramp * k1 + self.jump_step * k0)


def invert_error(model: ModelManifold, err: ErrorOperator) -> InvertedError:
    """Solve (Id + E)(Id + S) = Id with kink-corrected compositions.

    The Nystrom system uses the corrected matrix of E (diagonal-jump
    defects restored) and accounts for the diagonal kinks of the unknown
    S(., z') columns (jumps -J_E) on the right-hand side.
    """
    e_total = err.total
    q = model.weights
    k1, k0 = model.kink_kappa
    # corrected matrix of E acting on smooth densities
    Ec = e_total * q[None, :] + np.diag(err.jump_ramp * k1 + err.jump_step * k0)
    # left-variable jumps of S columns: ramp -J1_E, value jump +J0_E
    # (the value jump of a d/ds-type kernel flips sign across the left
    # variable); their composition defect against E enters the system as
    # a fixed matrix E diag(c)
    c_left = -err.jump_ramp * k1 + err.jump_step * k0
    A = np.eye(model.n) + Ec
    rhs = -e_total - e_total * c_left[None, :]
    try:
        S = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"Id + E(k) singular at k={err.k}: {exc}") from exc
    # exactness checks live in the plain discrete kernel algebra, where
    # composition is matrix multiplication with the quadrature weights
    A0 = np.eye(model.n) + e_total * q[None, :]
    S0 = np.linalg.solve(A0, -e_total)
    res_id = float(np.max(np.abs(A0 @ (np.eye(model.n) + S0 * q[None, :])
                                 - np.eye(model.n))))
    rhs_sk = -e_total + (e_total * q[None, :]) @ e_total \
        + (e_total * q[None, :]) @ ((S0 * q[None, :]) @ e_total)
    res_sk = hs_norm(model, S0 - rhs_sk) / max(hs_norm(model, S0), 1e-300)
    return InvertedError(model, err.k, S, res_id, res_sk,
                         -err.jump_ramp, -err.jump_step)


class Parametrix:
    """Assembled parametrix with its finite-rank correction; produces the
    exact resolvent R(k) = G(k)(Id + S(k)) on the grid."""

    def __init__(self, model: ModelManifold, q: int = 2, kbar: float = 1.0,
                 system: GluedSystem | None = None):
        self.model = model
        self.pieces = ParametrixPieces(model, q=q, kbar=kbar, system=system)
        self.fix = finite_rank_fix(self.pieces)

    def error(self, k: float) -> ErrorOperator:
        err = error_kernel(self.pieces, k)
        if self.fix.rank > 0:
            err.e1 = err.e1 + self.fix.g4_error(k, self.model.n)
        return err

    def g_full(self, k: float) -> np.ndarray:
        out = self.pieces.g_tilde(k)
        if self.fix.rank > 0:
            out = out + self.fix.g4(self.model.n)
        return out

    def s_operator(self, k: float) -> InvertedError:
        return invert_error(self.model, self.error(k))

    def _g_matrix(self, k: float) -> np.ndarray:
        """Kink-corrected composition matrix of G(k) on densities: the
        pre-parametrix has the exact Green diagonal slope jump -1/v."""
        q = self.model.weights
        k1, _ = self.model.kink_kappa
        return self.g_full(k) * q[None, :] + np.diag(-k1 / self.model.v)

    def resolvent_kernel(self, k: float) -> np.ndarray:
        G = self.g_full(k)
        inv = self.s_operator(k)
        S = inv.s_kernel
        k1, k0 = self.model.kink_kappa
        # G o S: corrections for G's right kink at y = z and the left
        # kinks of S(., z') at y = z'
        c_left = inv.jump_ramp * k1 - inv.jump_step * k0
        return G + self._g_matrix(k) @ S + G * c_left[None, :]

    def resolvent_apply(self, k: float, v) -> np.ndarray:
        q = self.model.weights
        v = np.asarray(v, dtype=float)
        inv = self.s_operator(k)
        sv = inv.matrix @ v
        return self._g_matrix(k) @ (v + sv)

    def resolvent_dleft(self, k: float) -> np.ndarray:
        """d/ds in the left variable of the resolvent kernel."""
        q = self.model.weights
        dG = self.pieces.g_tilde_dleft(k)
        if self.fix.rank > 0:
            dpsi = np.zeros((self.model.n, self.model.n))
            for psi, phi in zip(self.fix.psis, self.fix.phis):
                d1, _ = self.model.derivatives(psi)
                dpsi += d1[:, None] * phi[None, :]
            dG = dG + dpsi
        inv = self.s_operator(k)
        S = inv.s_kernel
        k1, k0 = self.model.kink_kappa
        # dG has a value jump +1/v at the diagonal (no slope jump)
        dG_mat = dG * q[None, :] + np.diag(k0 / self.model.v)
        c_left = inv.jump_ramp * k1 - inv.jump_step * k0
        return dG + dG_mat @ S + dG * c_left[None, :]

    def choose_k0(self, k_list, floor: float = 1e-6) -> float:
        """Largest lattice k with smallest singular value of Id + E(k)
        on the weighted space above the floor."""
        best = None
        w = self.pieces.weight
        for k in sorted(k_list):
            M = _weighted_operator(self.model, self.error(k).total, w)
            smin = float(np.linalg.svd(M, compute_uv=False)[-1])
            if smin > floor:
                best = k
        if best is None:
            raise SingularSystemError("no lattice k keeps Id + E(k) invertible")
        return best


@dataclass
class IlgSeries:
    """Fitted inverse-log series of R(k) v on a compact set."""
    ks: list
    mask: np.ndarray
    coefficients: np.ndarray   # (deg+1, n_mask)
    values: np.ndarray
    residual_orders: dict = field(default_factory=dict)

    def __getitem__(self, key):  # dict-compatible access
        return getattr(self, {"ks": "ks", "mask": "mask",
                              "coefficients": "coefficients",
                              "values": "values"}[key])


def assemble_parametrix(model: ModelManifold, q: int = 2, kbar: float = 1.0,
                        system=None) -> ParametrixPieces:
    """The k-independent parametrix ingredients (cutoffs, key-lemma
    approximations, frozen interior Green kernel, basepoints, weight)."""
    return ParametrixPieces(model, q=q, kbar=kbar, system=system)


def resolvent(par: Parametrix, k: float, v):
    """R(k) v on the grid as a GridFunction (values and d/ds values)."""
    from .model import GridFunction

    vals = par.resolvent_apply(k, v)
    q = par.model.weights
    inv = par.s_operator(k)
    k1, k0 = par.model.kink_kappa
    dG = par.pieces.g_tilde_dleft(k)
    dmat = dG * q[None, :] + np.diag(k0 / par.model.v)
    sv = inv.matrix @ np.asarray(v, dtype=float)
    dvals = dmat @ (np.asarray(v, dtype=float) + sv)
    return GridFunction(vals, dvals)


def ilg_expansion(parametrix: Parametrix, v, j_list=(4, 5, 6, 7, 8),
                  region: float = 12.0, deg: int | None = None) -> IlgSeries:
    """Fit the inverse-log series of R(k) v on a compact set at
    k = e^{-2^j} (a Richardson-style fit: the nodes halve ilg k each
    step).  j <= 8 keeps the scaled Bessel factors inside double range."""
    from .fits import fit_ilg_series

    m = parametrix.model
    mask = np.abs(m.s) <= region
    ks = [math.exp(-2.0 ** j) for j in j_list]
    vals = np.array([parametrix.resolvent_apply(k, v)[mask] for k in ks])
    if deg is None:
        deg = len(ks) - 1
    coef = fit_ilg_series(ks, vals, deg=deg)
    return IlgSeries(ks, mask, coef, vals)


def ilg_residual_order(parametrix: Parametrix, v, coef, mask, terms: int,
                       j_list=(5.0, 5.75, 6.5, 7.25, 8.0)) -> dict:
    """Decay order (in ilg k) of R(k) v minus its first `terms` fitted
    series terms, on fresh nodes.

    Successive (log-log) pair slopes approach the order from below, with
    a correction linear in ilg k from the next series coefficient; the
    returned `order` extrapolates the pair slopes to ilg k -> 0.
    """
    from .fits import ilg_powers

    ks = [math.exp(-2.0 ** j) for j in j_list]
    vals = np.array([parametrix.resolvent_apply(k, v)[mask] for k in ks])
    V = ilg_powers(ks, coef.shape[0] - 1)
    partial = V[:, :terms] @ coef[:terms]
    res = np.max(np.abs(vals - partial), axis=1)
    ils = ilg(np.asarray(ks))
    pair = np.diff(np.log(res)) / np.diff(np.log(ils))
    mids = np.sqrt(ils[1:] * ils[:-1])
    order = float(np.polyfit(mids, pair, 1)[1])
    return {"pair_slopes": pair, "order": order, "residuals": res}
