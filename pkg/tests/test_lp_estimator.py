import math

import numpy as np
import pytest

from connsum import lp_estimator as lpe
from connsum.errors import DomainError


class TestPredicate:
    def test_paper_plus_minus_instance(self):
        # d1 = 3, d2 = 2, a = 2, a' = 3, a + b = a' + b' = 3, p = 1.5
        kern = lpe.PowerKernel(2.0, 1.0, 3.0, 0.0, 3.0, 2.0)
        assert lpe.lemma_predicate(kern, 1.5)

    def test_homogeneous_window(self):
        kern = lpe.PowerKernel(1.0, 1.0, 2.0, 0.0, 2.0, 2.0, domain_start=0.0)
        assert lpe.lemma_predicate(kern, 1.5)
        assert not lpe.lemma_predicate(kern, 3.0)
        with pytest.raises(lpe.BoundaryCase):
            lpe.lemma_predicate(kern, 2.0)

    def test_all_paper_instances_on_their_ranges(self):
        for kern, (plo, phi) in lpe.paper_instances(3):
            for p in (1.2, 1.5, 1.9):
                if plo < p < phi:
                    assert lpe.lemma_predicate(kern, p)
            if math.isfinite(phi):
                assert not lpe.lemma_predicate(kern, phi + 0.7)

    def test_paper_instances_other_dimension(self):
        for kern, (plo, phi) in lpe.paper_instances(5):
            assert lpe.lemma_predicate(kern, 0.5 * (plo + phi))

    def test_p_below_one_rejected(self):
        kern = lpe.PowerKernel(2.0, 1.0, 3.0, 0.0, 3.0, 2.0)
        with pytest.raises(DomainError):
            lpe.lemma_predicate(kern, 0.9)

    def test_scaling_lemma_needs_calibration(self):
        with pytest.raises(DomainError):
            lpe.PowerKernel(1.0, 0.5, 2.0, 0.0, 2.0, 2.0, domain_start=0.0)


class TestMellin:
    def test_closed_form_vs_quadrature(self):
        kern = lpe.PowerKernel(1.0, 1.0, 2.0, 0.0, 2.0, 2.0, domain_start=0.0)
        for p in (1.3, 1.5, 1.8):
            v1 = lpe.mellin_profile_l1(kern, p)
            v2 = lpe.mellin_profile_l1(kern, p, quadrature=True)
            assert v1 == pytest.approx(v2, rel=1e-8)

    def test_infinite_outside_window(self):
        kern = lpe.PowerKernel(1.0, 1.0, 2.0, 0.0, 2.0, 2.0, domain_start=0.0)
        assert lpe.mellin_profile_l1(kern, 3.0) == math.inf

    def test_norm_bounded_by_profile(self):
        # measured norms stay below the L^1 bound of the profile
        kern = lpe.PowerKernel(1.0, 1.0, 2.0, 0.0, 2.0, 2.0, domain_start=0.0)
        p = 1.5
        verdict = lpe.empirical_norm_trend(kern, p)
        bound = lpe.mellin_profile_l1(kern, p)
        assert verdict.trend == "stable"
        assert max(verdict.norms) <= bound * 1.01
        # the gap closes to within ten percent
        assert max(verdict.norms) > 0.9 * bound


class TestTrend:
    def test_divergent_when_aprime_equals_a(self):
        # a' = a violates the lemma: the log-substituted profile is not
        # integrable and the truncated norms grow
        kern = lpe.PowerKernel(1.0, 1.0, 1.0, 1.0, 2.0, 2.0, domain_start=0.0)
        verdict = lpe.empirical_norm_trend(kern, 1.5)
        assert verdict.trend == "divergent"

    def test_bounded_instance_stable(self):
        kern = lpe.PowerKernel(2.0, 1.0, 3.0, 0.0, 3.0, 2.0)
        verdict = lpe.empirical_norm_trend(kern, 1.5)
        assert verdict.trend == "stable"

    def test_duality(self):
        # verdict of the transpose at p' matches
        kern = lpe.PowerKernel(2.0, 1.0, 3.0, 0.0, 3.0, 2.0)
        p = 1.5
        dual = lpe.dual_kernel(kern)
        assert lpe.lemma_predicate(kern, p) == \
            lpe.lemma_predicate(dual, p / (p - 1.0))


def test_random_suite_agreement():
    out = lpe.random_instance_suite(200)
    assert out["total"] == 200
    assert out["agree"] == 200, out["disagreements"][:3]
