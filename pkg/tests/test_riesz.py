import math

import numpy as np
import pytest

from connsum import bvp, keylemma as kl, model as md, parametrix as px, riesz as rz
from connsum.cutoffs import Step
from connsum.errors import DomainError


@pytest.fixture(scope="module")
def model():
    # moderate domain: enough octaves for trend checks, fast to sweep
    return md.build_model(md.GeometryConfig(S_minus=512.0, S_plus=512.0))


@pytest.fixture(scope="module")
def low_kernel(model):
    return rz.low_energy_kernel(model, k0=0.05, n_sigma=25)


class TestSplit:
    def test_partition_of_inverse(self):
        xi = np.geomspace(1e-4, 1e4, 200)
        for k0 in (0.05, 1.0):
            split = rz.RieszSplit(k0)
            assert split.consistency(xi) < 1e-12

    def test_high_bounded_by_inverse(self):
        xi = np.geomspace(1e-3, 1e3, 50)
        vals = rz.f_high(xi, 0.7) * xi
        assert np.all(vals <= 1.0 + 1e-14)
        assert np.max(vals) > 0.9


class TestLowEnergyKernel:
    def test_rank_one_model_integral(self):
        # closed form for int_0^{k0} r^{-1} e^{-ckr} e^{-ckr'} dk
        from scipy.integrate import quad
        c, k0 = 0.7, 0.3
        for r, rp in ((2.0, 5.0), (10.0, 3.0)):
            val = rz.rank_one_k_integral(c, k0, r, rp)
            ref, _ = quad(lambda k: math.exp(-c * k * (r + rp)) / r, 0, k0)
            assert val == pytest.approx(ref, rel=1e-10)

    def test_quadrature_error_estimate(self, model):
        kern = rz.low_energy_kernel(model, k0=0.05, n_sigma=25,
                                    error_estimate=True)
        assert kern.quad_error < 1e-3 * np.max(np.abs(kern.values))

    def test_provider_agreement_at_deep_k(self, model):
        # the parametrix route and the direct Green route agree where the
        # stage cascade has converged
        sys0 = bvp.GluedSystem(model, 0.0)
        par = px.Parametrix(model, q=2, kbar=1.0, system=sys0)
        for k in (math.exp(-10.0), math.exp(-16.0)):
            dR = par.resolvent_dleft(k)
            dG = bvp.GluedSystem(model, k).kernel_dleft()
            rel = np.max(np.abs(dR - dG)) / np.max(np.abs(dG))
            assert rel < 1e-3

    def test_scalar_kernel_symmetry(self, model):
        # the non-gradient analogue (the k-integrated resolvent itself)
        # is symmetric
        from connsum.quadrature import cc_segment
        sig, w = cc_segment(math.log(1 / 0.05), 30.0, 15)
        out = np.zeros((model.n, model.n))
        for s_i, w_i in zip(sig, w):
            k = math.exp(-s_i)
            out += w_i * k * bvp.GluedSystem(model, k).kernel_matrix()
        asym = np.max(np.abs(out - out.T)) / np.max(np.abs(out))
        assert asym < 1e-10

    def test_plus_end_column_decay(self, model, low_kernel):
        # entries decay along the plus-end right variable like r'^{1-n}
        i = np.searchsorted(model.s, 0.5)
        cols = np.where(model.mask_plus & (model.r > 30) & (model.r < 500))[0]
        vals = np.abs(low_kernel.values[i, cols])
        from connsum.fits import loglog_slope
        slope = loglog_slope(model.r[cols], np.maximum(vals, 1e-300))
        assert slope == pytest.approx(1.0 - model.plus.euclidean_dim, abs=0.4)


class TestHighEnergy:
    def test_uniform_l2_bound(self, model):
        chans = [md.ModeChannel("minus", 0, 0), md.ModeChannel("minus", 1, 0),
                 md.ModeChannel("minus", 0, 1), md.ModeChannel("plus", 0, 0),
                 md.ModeChannel("plus", 2, 0)]
        out = rz.high_energy_multiplier(model, chans, k0=1.0)
        assert out["uniform_bound"] <= 1.0 + 1e-6
        assert out["uniform_bound"] > 0.3

    def test_split_consistency_euclidean(self):
        out = rz.split_consistency_euclidean()
        assert out["rel_error"] < 1e-3


class TestBoundednessReport:
    def test_bounded_trend_small_p(self, model, low_kernel):
        report = rz.lp_boundedness_report(
            low_kernel, (1.5, 2.0), tuple(2.0 ** j for j in range(3, 10)))
        for p in (1.5, 2.0):
            series = [r.lower for r in report["rows"] if r.p == p]
            # increments rise while the collar resolves, then decelerate
            # toward saturation (full stabilization needs a wider sweep,
            # exercised in the acceptance suite)
            inc = np.diff(series)
            assert np.all(inc > -1e-6)
            assert inc[-1] < inc[-2] < inc[-3]
            assert inc[-1] < 0.75 * np.max(inc)

    def test_p2_estimate_near_multiplier_bound(self, model, low_kernel):
        report = rz.lp_boundedness_report(low_kernel, (2.0,), (256.0, 512.0))
        last = [r for r in report["rows"] if r.p == 2.0][-1]
        assert 0.7 < last.lower <= 1.05


class TestWitness:
    @pytest.fixture(scope="class")
    def wide(self):
        cfg = md.GeometryConfig(S_minus=2.0 ** 24, S_plus=64.0)
        model = md.build_model(cfg)
        sys0 = bvp.GluedSystem(model, 0.0)
        pa, pb = model.radii.phi
        stp = Step(-pb, -pa, falling=False)
        d1 = -stp.d1(model.s)
        d2 = -stp.d2(model.s)
        v_minus = -(-d2 - model.dlog_weight(model.s) * d1)
        ka = kl.build_key_approximation(model, v_minus, q=3, system=sys0)
        return model, ka

    def test_chain_inequality(self):
        out = rz.ilg_chain_inequality()
        assert out["violations"] == 0

    def test_kappa_integral_positive(self):
        assert rz.kappa_integral() > 0

    def test_witness(self, wide):
        model, ka = wide
        wit = rz.unboundedness_witness(model, ka, k0=math.exp(-9.5))
        assert wit.beta > 0
        assert wit.entrywise_nonneg
        assert wit.lower_constant > 0
        # basepoint-freezing error: O(r'^{-2}) bound with room
        assert wit.diff_exponent < -2.0 + 0.3
        for p, g in wit.growth.items():
            assert g["fitted_exponent"] == pytest.approx(g["expected"], abs=0.1)

    def test_beta_zero_source_rejected(self, model):
        sys0 = bvp.GluedSystem(model, 0.0)
        bump = np.exp(-2.0 * model.s ** 2)
        lap = md.apply_operator(model, bump)
        ka0 = kl.build_key_approximation(model, lap, q=2, system=sys0)
        with pytest.raises(DomainError):
            rz.unboundedness_witness(model, ka0)

    def test_bnorm_exponents(self):
        for p in (3.0, 4.0):
            out = rz.truncated_bnorm_exponent(
                p, tuple(2.0 ** j for j in (10, 12, 14, 16, 18)))
            assert out["fitted_exponent"] == pytest.approx(out["expected"],
                                                           abs=0.05)


def test_schur_exponent(model):
    out = rz.schur_exponent_check(model, 4.0)
    assert out["fitted"] == pytest.approx(out["expected"], abs=0.1)
    out2 = rz.schur_exponent_check(model, 2.0)
    assert out2["fitted"] == pytest.approx(-1.0, abs=0.1)
