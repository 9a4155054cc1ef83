import numpy as np
import pytest

from resetcert.cli import cglp_pid_blocks
from resetcert.elements import base_tf, gsore
from resetcert.errors import DomainError
from resetcert.frf import FrfTable, LoopSamples
from resetcert.gsore import (
    CertificateResult,
    OptimizerSettings,
    certify,
    f1,
    f2,
    gamma_factor,
    gsore_problem,
    prop1_bounds,
    rank_condition,
)
from resetcert.lti import evaluate, series, tf

rng = np.random.default_rng(5)
ONE = tf([1.0])
FAST = OptimizerSettings(population=120, generations=300, restarts=4, seed=42)


def single_sample(lval, w=1.0, cs=1.0 + 0j, cr=1.0 + 0j):
    return LoopSamples(np.array([w]), np.array([lval], complex),
                       np.array([cs], complex), np.array([cr], complex))


def mass_fixture(gamma1=0.5, gamma2=0.5):
    """4th-order double-integrator plant under the CgLp+PID compensator."""
    wc, wd, wr, wp = 10.0, 36.0, 40.0, 200.0
    g = tf([1.0], np.convolve([0.0, 0.0, 1.0], np.convolve([1.0, 1 / wp], [1.0, 1 / wp])))
    elem = gsore(wr, 1.0, gamma1, gamma2)
    probe = series(base_tf(elem), series(cglp_pid_blocks(1.0, wc, wd, 1.0), g))
    k_p = 1.0 / abs(evaluate(probe, wc))
    return elem, cglp_pid_blocks(k_p, wc, wd, 1.0), g


class TestQuadraticForms:
    def test_linearity_zero(self):
        s = single_sample(0.5 - 0.5j)
        assert f1(0, 0, 0, s, 1.0, 1.0)[0] == 0.0
        assert f2(0, 0, 0, s, 1.0, 1.0)[0] == 0.0

    def test_f1_third_slot_is_nchi(self):
        # unit shaping: the X3 coefficient equals a^2 + b^2 + a
        s = single_sample(0.5 - 0.5j)
        assert f1(0, 0, 1, s, 1.0, 1.0)[0] == pytest.approx(1.0, abs=1e-12)

    def test_f1_first_slot_complex_oracle(self):
        wr, xi = 1.0, 1.0
        elem = gsore(wr, xi)
        cr = evaluate(base_tf(elem), 1.0)
        lval = cr
        s = single_sample(lval, w=1.0, cr=cr)
        kappa = 1 + np.conj(lval)
        assert f1(1, 0, 0, s, wr, xi)[0] == pytest.approx((cr * kappa * 1j).real, abs=1e-12)

    def test_f2_terms_complex_oracle(self):
        wr, xi = 2.0, 0.7
        w = 1.3
        lval, cs, cr = 0.4 - 0.2j, 0.9 + 0.1j, 0.3 - 0.6j
        s = single_sample(lval, w=w, cs=cs, cr=cr)
        kappa = 1 + np.conj(lval)
        lead = 1j * w + 2 * xi * wr
        assert f2(1, 0, 0, s, wr, xi)[0] == pytest.approx((cr * kappa * lead).real, abs=1e-12)
        assert f2(0, 0, 1, s, wr, xi)[0] == pytest.approx(
            (lval * kappa * cs * lead).real, abs=1e-12)
        expect = (cr * kappa * (2j * xi * wr * w - w**2)).real - abs(kappa) ** 2
        assert f2(0, 1, 0, s, wr, xi)[0] == pytest.approx(expect, abs=1e-12)


class TestGammaFactor:
    def test_equal_gammas_give_one(self):
        assert gamma_factor(0.5, 0.5) == pytest.approx(1.0, abs=1e-12)
        assert gamma_factor(0.0, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_mixed_sign_value(self):
        assert gamma_factor(0.5, -0.5) == pytest.approx(2.7778, abs=5e-5)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            gamma_factor(1.0, 0.5)

    def test_grid_lower_bound(self):
        g = np.linspace(-0.99, 0.99, 99)
        vals = np.array([[gamma_factor(a, b) for b in g] for a in g])
        assert np.all(vals >= 1.0 - 1e-12)
        # the minimum sits on the diagonal, and only there
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        assert i == j
        off = ~np.eye(99, dtype=bool)
        assert np.all(vals[off] > 1.0 + 1e-12)
        assert np.all(np.abs(np.diag(vals) - 1.0) <= 1e-12)


class TestMagnitudeInterval:
    def test_negative_f3_unbounded_above(self):
        F1 = np.ones(10)
        F2 = np.zeros(10)
        F3 = -np.ones(10)
        e1, e2, ok = prop1_bounds(F1, F2, F3, ratio=0.5)
        assert ok and e2 == np.inf and e1 == -np.inf

    def test_positive_f3_finite_lower(self):
        F1 = np.ones(4)
        F2 = np.full(4, 0.2)
        F3 = np.array([1.0, 2.0, 0.5, 1.5])
        e1, e2, ok = prop1_bounds(F1, F2, F3, ratio=1.0)
        assert ok and np.isfinite(e1) and e2 == np.inf

    def test_brute_force_agreement(self):
        q1s = np.logspace(-2, 2, 60)
        q2s = np.concatenate([-np.logspace(-2, 2, 30)[::-1], np.logspace(-2, 2, 30)])
        for _ in range(20):
            n = int(rng.integers(5, 50))
            F1 = rng.normal(size=n)
            F2 = rng.normal(size=n)
            F3 = rng.normal(size=n)
            mism = 0
            for q1 in q1s[::6]:
                for q2 in q2s[::6]:
                    brute = bool(np.all(q1 * F1 + q2 * F2 > F3))
                    e1, e2, ok = prop1_bounds(F1, F2, F3, q2 / q1)
                    mag = np.hypot(q1, q2)
                    interval = bool(ok and e1 < mag < e2)
                    mism += int(brute != interval)
            assert mism == 0


class TestCertify:
    def test_type3_mass_fixture(self):
        elem, lin, g = mass_fixture()
        prob = gsore_problem(elem, ONE, lin, g, points=600)
        assert prob.problem_type == "III" and prob.origin_pole
        res = certify(prob, FAST)
        assert res.certified
        assert res.m_value < 4.0 - 1e-6
        assert res.oracle_cross_check == "pass"
        assert res.rank_check == "pass"
        b1, b2, r1, r2, r3 = res.reconstructed
        assert r1 > 0 and r3 > 0 and r1 * r3 > r2**2

    def test_determinism_per_seed(self):
        elem, lin, g = mass_fixture()
        prob = gsore_problem(elem, ONE, lin, g, points=400)
        a = certify(prob, OptimizerSettings(population=80, generations=150, restarts=2, seed=9))
        b = certify(prob, OptimizerSettings(population=80, generations=150, restarts=2, seed=9))
        assert a.q == b.q and a.m_value == b.m_value
        c = certify(prob, OptimizerSettings(population=80, generations=150, restarts=2, seed=10))
        assert c.certified == a.certified

    def test_type4_fixture(self):
        elem = gsore(2.0, 1.0, 0.3, 0.5)
        g = tf([1.0], np.convolve([1.0, 1.0], [1.0, 0.5]))
        prob = gsore_problem(elem, ONE, ONE, g, points=400)
        assert prob.problem_type == "IV" and prob.n_minus_m == 4
        res = certify(prob, FAST)
        assert res.certified and res.oracle_cross_check == "pass"

    def test_type5_fixture(self):
        elem = gsore(2.0, 1.0, 0.4, 0.4)
        g = tf([0.8], [1.0, 1.0])
        prob = gsore_problem(elem, ONE, ONE, g, points=400)
        assert prob.problem_type == "V" and prob.n_minus_m == 3
        res = certify(prob, FAST)
        assert res.certified and res.oracle_cross_check == "pass"

    def test_gamma_out_of_range(self):
        elem, lin, g = mass_fixture(gamma1=1.2)
        with pytest.raises(DomainError):
            gsore_problem(elem, ONE, lin, g, points=200)

    def test_certificate_transfers_to_equal_factors(self):
        # a certificate found for (g1, g2) also clears the jump-map bound for
        # any equal pair, whose factor is the minimum value 1
        elem, lin, g = mass_fixture(0.5, 0.5)
        prob = gsore_problem(elem, ONE, lin, g, points=400)
        res = certify(prob, FAST)
        assert res.certified
        _, _, r1, r2, r3 = res.reconstructed
        for gam in (-0.9, 0.0, 0.7):
            assert r1 * r3 > gamma_factor(gam, gam) * r2**2


class TestRandomizedConsistency:
    def test_certified_random_loops_never_contradict_oracle(self):
        # random mixed-type loops: whenever the search certifies, the
        # independent oracle must agree
        from resetcert.lti import base_linear_stability
        from resetcert.errors import GridTooSparse
        rng2 = np.random.default_rng(77)
        fast = OptimizerSettings(population=80, generations=150, restarts=2, seed=3)
        checked = 0
        tried = 0
        while checked < 8 and tried < 40:
            tried += 1
            wr = 10.0 ** rng2.uniform(-0.3, 1.0)
            elem = gsore(wr, rng2.uniform(0.6, 1.6),
                         rng2.uniform(-0.7, 0.7), rng2.uniform(-0.7, 0.7))
            order = int(rng2.integers(1, 4))
            den = [1.0]
            for pole in 10.0 ** rng2.uniform(-0.5, 1.0, order):
                den = np.convolve(den, [1.0, 1.0 / pole])
            if rng2.integers(0, 2):
                den = np.convolve(den, [0.0, 1.0])       # integrator loop
            g = tf([10.0 ** rng2.uniform(-1.0, 0.3) * wr**2], den)
            loop = series(base_tf(elem), g)
            if not base_linear_stability(loop).stable:
                continue
            try:
                prob = gsore_problem(elem, ONE, ONE, g, points=300)
                res = certify(prob, fast)
            except GridTooSparse:
                continue
            if res.certified:
                assert res.oracle_cross_check == "pass"
                checked += 1
        assert checked == 8


class TestScaleInvariance:
    def test_certification_invariant_under_frequency_scaling(self):
        # the same loop stretched in frequency is an equivalent problem; the
        # certified bit and the sup ratio must not depend on the bandwidth
        results = {}
        for scale in (1.0, 20.0 * np.pi):
            wc, wd, wr, wp = 10.0 * scale, 36.0 * scale, 40.0 * scale, 200.0 * scale
            g = tf([1.0], np.convolve([0.0, 0.0, 1.0],
                                      np.convolve([1.0, 1 / wp], [1.0, 1 / wp])))
            elem = gsore(wr, 1.0, 0.5, 0.5)
            probe = series(base_tf(elem),
                           series(cglp_pid_blocks(1.0, wc, wd, 1.0), g))
            k_p = 1.0 / abs(evaluate(probe, wc))
            prob = gsore_problem(elem, ONE, cglp_pid_blocks(k_p, wc, wd, 1.0), g,
                                 points=500)
            results[scale] = certify(prob, FAST)
        a, b = results[1.0], results[20.0 * np.pi]
        assert a.certified and b.certified
        assert a.oracle_cross_check == b.oracle_cross_check == "pass"
        # the searches travel equivalent landscapes up to last-bit grid noise
        assert b.m_value == pytest.approx(a.m_value, rel=0.05)
        # the decision ratios map through the frequency scaling
        alpha = 20.0 * np.pi
        expect = (a.q[0] * alpha, a.q[1] * alpha**2, a.q[2] * alpha**2, a.q[3] * alpha)
        for got, want in zip(b.q, expect):
            assert got == pytest.approx(want, rel=0.2)


class TestCertifyFromMeasuredPlant:
    def test_frf_plant_matches_rational_verdict(self):
        # the certification path needs nothing but samples: feeding the same
        # loop as a measured table (plus declared loop constants) reproduces
        # the rational-plant verdict
        elem = gsore(2.0, 1.0, 0.3, 0.5)
        g = tf([1.0], np.convolve([1.0, 1.0], [1.0, 0.5]))
        rational = gsore_problem(elem, ONE, ONE, g, points=400)
        res_rat = certify(rational, FAST)

        freqs = np.logspace(-3, 3, 1500)
        table = FrfTable(freqs, evaluate(g, freqs))
        measured = gsore_problem(elem, ONE, ONE, table, points=800,
                                 origin_pole=False, k_s0=1.0,
                                 k_n=rational.k_n, n_minus_m=4)
        res_frf = certify(measured, FAST)
        assert res_frf.certified == res_rat.certified is True
        assert res_frf.oracle_cross_check == "pass"
        assert res_frf.rank_check == "conditional"


class TestRankCondition:
    def test_minimal_loop_passes(self):
        elem = gsore(2.0, 1.0, 0.3, 0.5)
        g = tf([1.0], np.convolve([1.0, 1.0], [1.0, 0.5]))
        prob = gsore_problem(elem, ONE, ONE, g, points=200)
        assert rank_condition(prob, (0.5, 0.2, 1.5, 0.3, 2.0)) == "pass"

    def test_cancellation_fails(self):
        # plant zero on top of a compensator pole makes a hidden mode
        elem = gsore(2.0, 1.0, 0.3, 0.5)
        g = tf([1.0, 1.0], np.convolve(np.convolve([1.0, 1.0], [1.0, 0.5]), [2.0, 1.0]))
        lead = tf([1.0], [1.0, 1.0])
        prob = gsore_problem(elem, lead, ONE, g, points=200)
        assert rank_condition(prob, (0.5, 0.2, 1.5, 0.3, 2.0)) == "fail"

    def test_frf_plant_is_conditional(self):
        freqs = np.logspace(-1, 2, 400)
        g = tf([1.0], np.convolve([1.0, 1.0], [1.0, 0.5]))
        plant = FrfTable(freqs, evaluate(g, freqs))
        elem = gsore(2.0, 1.0, 0.3, 0.5)
        prob = gsore_problem(elem, ONE, ONE, plant, points=200,
                             origin_pole=False, k_s0=1.0, k_n=2.0, n_minus_m=4)
        assert rank_condition(prob, (0.5, 0.2, 1.5, 0.3, 2.0)) == "conditional"


class TestDocumentedReferenceShape:
    """The published positioning-stage run is kept as an I/O-shape fixture.

    The measured stage data is not shipped, so only the result container is
    exercised: the reported optimum was Q = (13172, 12001144, 8113151, 1055)
    with M = 3.5 and ratio windows 340 < Q2/Q1 < 5057 and 1132 < Q3/Q4.
    """

    def test_shape_roundtrip(self):
        res = CertificateResult(
            q=(13172.0, 12001144.0, 8113151.0, 1055.0),
            m_value=3.5,
            certified=True,
            constraint_report=[{"id": "S1-diagonal-positivity", "satisfied": True}],
            reconstructed=(1.0, 11375.5, 13172.0, 12001144.0, 8113151.0),
            problem_type="III",
            oracle_cross_check="skipped",
            rank_check="pass",
            seed=0,
            ratio_windows={"q2_over_q1": (340.0, 5057.0), "q4_over_q3": (0.0, 1.0 / 1132.0)},
        )
        assert res.q[1] / res.q[0] == pytest.approx(911.11, rel=1e-3)
        assert 340.0 < res.q[1] / res.q[0] < 5057.0
        assert res.q[2] / res.q[3] > 1132.0
        assert res.m_value < 4.0
