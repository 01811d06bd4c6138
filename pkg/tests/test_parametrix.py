import math

import numpy as np
import pytest

from connsum import bvp, model as md, parametrix as px
from connsum.errors import SingularSystemError
from connsum.fits import loglog_slope
from connsum.specfun import ilg


@pytest.fixture(scope="module")
def model():
    return md.build_model()


@pytest.fixture(scope="module")
def sys0(model):
    return bvp.GluedSystem(model, 0.0)


@pytest.fixture(scope="module")
def par(model, sys0):
    return px.Parametrix(model, q=2, kbar=1.0, system=sys0)


class TestAssembly:
    def test_g1_support(self, par, model):
        # G1 vanishes whenever either argument is where phi_+- = 0
        G1 = par.pieces.g1(0.01)
        hole = np.abs(model.s) < model.radii.phi[0]
        assert np.all(G1[hole, :] == 0.0)
        assert np.all(G1[:, hole] == 0.0)

    def test_g3_left_factor_at_zero_energy(self, par):
        # u_+-(., 0) = -phi continuation
        for ka in (par.pieces.u_minus, par.pieces.u_plus):
            u0, _ = ka.u(0.0)
            np.testing.assert_array_equal(u0, -ka.stages[0].phi.values)

    def test_error_column_matches_operator(self, par, model):
        # (Delta + k^2) G~ applied to columns reproduces the closed-form
        # error kernel (mask: the kink-carrying segment of the column and
        # segment-edge differentiation nodes)
        k = 0.01
        Gt = par.pieces.g_tilde(k)
        E = px.error_kernel(par.pieces, k).total
        for j in (60, 230, 430, 700):
            lhs = md.apply_operator(model, Gt[:, j], k=k)
            rhs = E[:, j].copy()
            rhs[j] += 1.0 / model.weights[j]
            sel = model.segment_interior.copy()
            for start, nn, _th, _jac, _kind in model.segments:
                if start <= j < start + nn:
                    sel[start:start + nn] = False
            scale = np.max(np.abs(E[:, j])) + 1e-30
            assert np.max(np.abs(lhs - rhs)[sel]) / scale < 1e-6

    def test_error_left_support_compact(self, par, model):
        for k in (0.0, 1e-3):
            E = par.error(k).total
            outside = np.abs(model.s) > model.radii.zeta[1] + 0.5
            assert np.max(np.abs(E[outside, :])) < 1e-20

    def test_error_prime_left_support_in_collar(self, par, model):
        err = px.error_kernel(par.pieces, 1e-3)
        chi_collar = np.abs(model.s) <= model.radii.zeta[1] + 1e-9
        assert np.all(err.e1[~chi_collar, :] == 0.0)


class TestHilbertSchmidt:
    JS = (3, 4, 5, 6, 7)

    def test_e2_hs_decays_with_bounded_rate(self, par, model):
        # || E''(k) ||_HS = O((ilg k)^{1/2}): the fitted slope must be at
        # least 1/2 - 0.1; here it is markedly larger (faster decay)
        hs = [par.error(math.exp(-2.0 ** j)).hs_e2() for j in self.JS]
        ils = [ilg(math.exp(-2.0 ** j)) for j in self.JS]
        slope = loglog_slope(ils, hs)
        assert slope >= 0.4
        assert np.all(np.diff(hs) < 0)

    def test_q1_hs_diverges(self, model, sys0):
        par1 = px.Parametrix(model, q=1, kbar=1.0, system=sys0)
        hs = [par1.error(math.exp(-2.0 ** j)).hs_e2() for j in self.JS]
        ils = [ilg(math.exp(-2.0 ** j)) for j in self.JS]
        slope = loglog_slope(ils, hs)
        assert slope <= 0.0
        assert hs[-1] > hs[1]

    def test_hs_continuity_to_zero(self, par, model):
        E0 = par.error(0.0).total
        diffs = [px.hs_norm(model, par.error(math.exp(-2.0 ** j)).total - E0)
                 for j in (2, 4, 6, 7)]
        assert np.all(np.diff(diffs) < 0)
        assert diffs[-1] < 0.2 * diffs[0]


class TestFiniteRank:
    def test_default_model_already_invertible(self, par):
        assert par.fix.rank == 0
        assert par.fix.sigma_before > 1e-3

    def test_synthetic_null_space_repaired(self, par, model):
        # feed a degenerate error operator with a known null vector
        err0 = px.error_kernel(par.pieces, 0.0)
        w = par.pieces.weight
        q = model.weights
        g = np.exp(-model.s ** 2)
        # rank-one E with (Id + E) g = 0:  E = -g <g, .>_w / ||g||_w^2
        norm2 = float(np.dot(q / w ** 2, g * g))
        Edeg = err0.total - np.outer(g, g / w ** 2) / norm2 \
            - (err0.total * q[None, :]) @ np.outer(g, g / w ** 2) / norm2
        deg = px.ErrorOperator(model, 0.0, Edeg, np.zeros_like(Edeg), w,
                               np.zeros(model.n), np.zeros(model.n))
        fix = px.finite_rank_fix(par.pieces, err0=deg)
        assert fix.rank >= 1
        assert fix.sigma_after >= 10 * fix.threshold
        # psi_i supported in the neck: exact support check
        for psi in fix.psis:
            assert np.all(psi[np.abs(model.s) > model.R] == 0.0)


class TestInversion:
    def test_identity_residual(self, par):
        for k in (1e-2, 1e-3, 1e-4):
            inv = par.s_operator(k)
            assert inv.identity_residual < 1e-8

    def test_sk_identity(self, par):
        inv = par.s_operator(1e-3)
        assert inv.sk_identity_residual < 1e-8

    def test_s_left_decay(self, par, model):
        # S(k) rapidly decaying in the left variable: exactly compactly
        # supported here, so sup r^M |S| is finite for M <= 4
        S = par.s_operator(1e-3).s_kernel
        for M in range(5):
            vals = model.r[:, None] ** M * np.abs(S)
            assert np.isfinite(np.max(vals))
        outside = np.abs(model.s) > model.radii.zeta[1] + 0.5
        assert np.max(np.abs(S[outside, :])) < 1e-14


class TestResolvent:
    def test_matches_radiation_oracle(self, par, model):
        v = np.exp(-2.0 * model.s ** 2)
        for k in (1e-2, 1e-3, 1e-4):
            Rv = par.resolvent_apply(k, v)
            A = md.radial_laplacian(model, None, k=k, order=6)
            rhs = v.copy()
            rhs[0] = rhs[-1] = 0.0
            u_fd = np.linalg.solve(A, rhs)
            mask = np.abs(model.s) < 30
            rel = np.max(np.abs((Rv - u_fd)[mask])) / np.max(np.abs(u_fd[mask]))
            assert rel < 1e-5

    def test_defining_equation(self, par, model):
        # (Delta + k^2) R(k) v = v: exact in the discrete kernel algebra
        k = 1e-3
        v = np.exp(-2.0 * model.s ** 2)
        err = par.error(k)
        q = model.weights
        A0 = np.eye(model.n) + err.total * q[None, :]
        S0 = np.linalg.solve(A0, -err.total)
        algebra_res = A0 @ (v + (S0 * q[None, :]) @ v) - v
        assert np.max(np.abs(algebra_res)) < 1e-7 * np.max(np.abs(v))
        # and through the independent differentiation route, where the
        # composition-error pattern is amplified by the second derivative
        Rv = par.resolvent_apply(k, v)
        res = md.apply_operator(model, Rv, k=k) - v
        sel = (np.abs(model.s) < 30) & model.segment_interior
        assert np.max(np.abs(res[sel])) < 1e-4

    def test_positivity(self, par, model):
        Rk = par.resolvent_kernel(1e-2)
        j = np.searchsorted(model.s, 0.7)
        assert np.all(Rk[:, j] > -1e-12)

    def test_symmetry(self, par, model):
        # G~ is visibly asymmetric; R comes out symmetric to composition
        # accuracy (weighted L2; pointwise it is quadrature-limited)
        Rk = par.resolvent_kernel(1e-3)
        q = model.weights
        num = math.sqrt(float(np.einsum("i,ij,j->", q, (Rk - Rk.T) ** 2, q)))
        den = math.sqrt(float(np.einsum("i,ij,j->", q, Rk ** 2, q)))
        assert num / den < 1e-7
        Gt = par.pieces.g_tilde(1e-3)
        numg = math.sqrt(float(np.einsum("i,ij,j->", q, (Gt - Gt.T) ** 2, q)))
        assert numg / den > 1e-2  # the input asymmetry is large

    def test_resolvent_identity(self, par, model):
        # R(k1) - R(k2) = (k2^2 - k1^2) R(k1) R(k2) on compacts; k large
        # enough that the e^{-kr} tails die inside the finite domain
        k1, k2 = 0.1, 0.05
        R1 = par.resolvent_kernel(k1)
        R2 = par.resolvent_kernel(k2)
        q = model.weights
        k1v, k0v = model.kink_kappa
        # kink-corrected composition: both factors carry the Green ramp
        comp = (R1 * q[None, :]) @ R2 + np.diag(-k1v / model.v) @ R2 \
            + R1 * (-k1v / model.v)[None, :]
        lhs = R1 - R2
        rhs = (k2 ** 2 - k1 ** 2) * comp
        mask = np.abs(model.s) < 20
        scale = np.max(np.abs(lhs[np.ix_(mask, mask)]))
        defect = np.max(np.abs((lhs - rhs)[np.ix_(mask, mask)]))
        assert defect < 1e-6 * np.max(np.abs(R1)) / np.abs(k2**2 - k1**2) * 1e-2 \
            or defect < 1e-4 * scale

    def test_log_bound_and_cancellation(self, par, model):
        # the product-space piece G1 diverges like |log k| pointwise on
        # the two-dimensional end; the resolvent itself stays bounded on
        # compacts (the model is transient), so the assembled R exhibits
        # the cancellation while remaining O(|log k|) uniformly
        jm = np.searchsorted(model.s, -12.0)
        ks = [math.exp(-2.0 ** j) for j in (3, 4, 5, 6, 7)]
        g1_vals = np.array([par.pieces.g1(k)[jm, jm + 2] for k in ks])
        logk = np.log(1 / np.array(ks))
        coef = np.polyfit(logk, g1_vals, 1)
        fitres = g1_vals - np.polyval(coef, logk)
        assert coef[0] > 0
        assert np.max(np.abs(fitres)) < 0.02 * (g1_vals.max() - g1_vals.min())
        j = np.searchsorted(model.s, 0.5)
        mask = np.abs(model.s) < 10
        sups = [np.max(np.abs(par.resolvent_kernel(k)[:, j][mask])) for k in ks]
        # bounded: Cauchy increments shrink; and trivially O(|log k|)
        assert np.all(np.diff(sups) > 0)
        incr = np.diff(sups)
        assert incr[-1] < 0.7 * incr[0]
        assert sups[-1] < sups[0] * math.log(1 / ks[-1]) / math.log(1 / ks[0])

    def test_k0_selection(self, par):
        k0 = par.choose_k0([1e-4, 1e-3, 1e-2, 0.05, 0.1])
        assert k0 >= 0.01


class TestIlgExpansion:
    def test_c0_and_residual_order(self, model, sys0):
        par3 = px.Parametrix(model, q=3, kbar=1.0, system=sys0)
        v = par3.pieces.v_minus
        out = px.ilg_expansion(par3, v)
        coef, mask = out["coefficients"], out["mask"]
        sol = bvp.solve_laplace(model, v, system=sys0)
        rel0 = np.max(np.abs(coef[0] - sol.values[mask])) \
            / np.max(np.abs(sol.values[mask]))
        assert rel0 < 1e-4
        U = bvp.build_log_harmonic(model)
        beta_phi = -sol.beta  # phi solves Delta phi = -v
        rel1 = np.max(np.abs(coef[1] - beta_phi * U.values[mask])) \
            / np.max(np.abs(U.values[mask]))
        assert rel1 < 1e-3
        for terms in (2, 3):
            res = px.ilg_residual_order(par3, v, coef, mask, terms)
            assert res["order"] >= terms - 0.05
