"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
lines and timings.  Two widely assumed sub-claims that the independent
oracles contradict are kept as strict xfails right next to the passing
oracle-corrected versions; the xfail reasons carry the analysis.
"""

import itertools
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from pvlattice import mra, qlat, refine, subst
from pvlattice.algnum import build_context, nearest_integer_sequence
from pvlattice.errors import OccurrenceInconsistent, ZeroHit

PHI = (1 + 5**0.5) / 2


class timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.limit, f"runtime {self.elapsed:.2f}s over {self.limit}s"


def report(num, label, t=None):
    suffix = f" ({t.elapsed:.2f}s)" if t is not None else ""
    print(f"ACCEPTANCE {num:02d} PASS: {label}{suffix}")


def test_acceptance_01_classification():
    table = [
        ((-1, -1), 1.6180),
        ((-1, 1), -1.6180),
        ((2, -4), 3.4142),
        ((1, -1, -2), 2.2470),
        ((-1, -1, 0), 1.3247),
        ((-1, 0, 0, -1), 1.3803),
    ]
    with timer(1.0) as t:
        for coeffs, lead in table:
            ctx = build_context(coeffs)
            assert ctx.classification == "PV"
            assert abs(ctx.lam - lead) < 0.5e-4
    report(1, "six table polynomials classify PV with matching leading roots", t)


def test_acceptance_02_nearest_integer_decay(golden):
    with timer(1.0) as t:
        seq = nearest_integer_sequence(golden.one(), 40)
        for k, _, dist in seq:
            if 5 <= k <= 40:
                ratio = dist / 0.6180**k
                assert 0.5 <= ratio <= 2.0
    report(2, "golden distance(k) / 0.6180^k within [0.5, 2] for k = 5..40", t)


def test_acceptance_03_brute_force_identity(golden):
    with timer(5.0) as t:
        q = qlat.generate(golden, (0, 1), 20)
        brute = set()
        V = golden.vandermonde
        for a, b in itertools.product(range(-40, 41), repeat=2):
            emb = np.array([a, b], dtype=np.float64) @ V
            if abs(emb[0].real) <= 20 - qlat.TOL_BOUNDARY and abs(emb[1]) < 1 - qlat.TOL_BOUNDARY:
                brute.add((a, b))
        assert q.preimage_set() == brute
    report(3, "parallelotope enumeration equals exhaustive scan exactly", t)


def test_acceptance_04_min_gap_bound(golden, plastic, quartic):
    cases = [
        (golden, (0, 1.0), 50),
        (golden, (0, 0.5), 80),
        (plastic, (0, 1.0, 1.0), 60),
        (quartic, (0, 1.2, 1.2, 1.2), 40),
    ]
    violations = 0
    for ctx, sigma, L in cases:
        q = qlat.generate(ctx, sigma, L)
        mn, _ = qlat.delone_constants(q, 4)
        if mn < qlat.min_gap_lower_bound(ctx, sigma) - 1e-9:
            violations += 1
    assert violations == 0
    report(4, "minimal gaps respect 2^(1-n) prod sigma_j^-1 on all test lattices")


def test_acceptance_05_alphabet_and_expansion_oracle(golden):
    with timer(10.0) as t:
        # gap alphabet at window sigma_2 = 1: the brute-force oracle gives
        # THREE letters in ratio phi (see the xfail below for the folklore
        # two-letter claim), stable under L doubling
        g50 = qlat.gap_alphabet(qlat.generate(golden, (0, 1), 50), 5)
        g100 = qlat.gap_alphabet(qlat.generate(golden, (0, 1), 100), 5)
        assert {g.preimage for g in g50} == {g.preimage for g in g100}
        assert len(g50) == 3
        values = [g.value for g in g50]
        for a, b in zip(values, values[1:]):
            assert abs(b / a - PHI) < 1e-9
        # the two-letter Fibonacci alphabet lives at window 1/2
        f100 = qlat.gap_alphabet(qlat.generate(golden, (0, 0.5), 100), 5)
        f200 = qlat.gap_alphabet(qlat.generate(golden, (0, 0.5), 200), 5)
        assert len(f100) == 2
        assert {g.preimage for g in f100} == {g.preimage for g in f200}
        assert abs(f100[1].value / f100[0].value - PHI) < 1e-9
        # substitution expansion oracle at sigma_2 = 1, exact preimage sets
        rule = subst.derive_rule(golden, (0, 1), 80)
        q = qlat.generate(golden, (0, 1), 340)
        assert subst.expansion_matches_lattice(rule, 10, q)
    report(5, "gap alphabet stable (3 letters, ratio phi) and expand(rule, 10) exact", t)


@pytest.mark.xfail(
    strict=True,
    reason="the folklore Fibonacci picture promises exactly 2 letters at "
    "sigma_2 = 1; the brute-force oracle and hand enumeration give 3 "
    "(phi-1, 1, phi).  The two-letter alphabet occurs at sigma_2 = 1/2.",
)
def test_acceptance_05_two_letter_folklore(golden):
    g50 = qlat.gap_alphabet(qlat.generate(golden, (0, 1), 50), 5)
    assert len(g50) == 2


def test_acceptance_06_perron_golden(golden):
    rule = subst.derive_rule(golden, (0, 1), 80)
    assert abs(rule.perron_eigenvalue() - golden.lam) < 1e-9
    report(6, "golden incidence spectral radius equals lambda within 1e-9")


@pytest.mark.xfail(
    strict=True,
    raises=OccurrenceInconsistent,
    reason="no disk window is substitutive for the plastic number's complex "
    "conjugate pair: decompositions are position dependent at every "
    "window scanned (22 values of sigma), and the derivation surfaces "
    "OccurrenceInconsistent by design, so no plastic rule exists to "
    "take a Perron eigenvalue from.",
)
def test_acceptance_06_perron_plastic_disk_window(plastic):
    rule = subst.derive_rule(plastic, (0, 1, 1), 100)
    assert abs(rule.perron_eigenvalue() - plastic.lam) < 1e-9


def test_acceptance_07_mahler(two_frequency):
    with timer(30.0) as t:
        lehmer = [1, 1, 0, -1, -1, -1, -1, -1, 0, 1, 1]
        assert abs(refine.mahler_univariate(lehmer).value - 1.17628) <= 1e-5
        assert abs(refine.mahler_univariate([0.5, 0.5]).value - 0.5) <= 1e-12
        quad = refine.mahler_mask(two_frequency)
        special = refine.mahler_specialized(two_frequency, (1, 127))
        assert abs(quad.value - special.value) <= 1e-4
    report(7, "Lehmer measure, Jensen exactness, d = 2 dual-route agreement", t)


def test_acceptance_08_rho_table(haar, cantor, golden_bernoulli, growing, golden):
    assert abs(refine.rho(haar) - 1.0) <= 1e-10
    assert abs(refine.rho(cantor) - 0.63093) <= 1e-5 + 4e-8
    assert abs(refine.rho(cantor) - math.log(2) / math.log(3)) <= 1e-6
    assert abs(refine.rho(golden_bernoulli) - math.log(2) / math.log(PHI)) <= 1e-5
    assert abs(refine.rho(golden_bernoulli) - 1.44042) <= 1e-5 + 1e-7
    r = refine.rho(growing)
    assert r < 0 and abs(abs(r) - 0.69424) <= 1e-5
    report(8, "decay exponent table: 1, 0.63093, 1.44042, |.| = 0.69424")


def test_acceptance_09_mean_log_mask(haar):
    with timer(60.0) as t:
        big = refine.mean_log_mask(haar, 1e4, 64)
        small = refine.mean_log_mask(haar, 1e3, 64)
        target = math.log(0.5)
        assert abs(big.value - target) < 0.01
        assert abs(big.value - target) < abs(small.value - target)
    report(9, "mean ln|A| at L = 1e4 within 0.01 of ln(1/2), error shrinking", t)


def test_acceptance_10_mean_log_hat(haar, cantor):
    with timer(300.0) as t:
        haar_errs = [
            abs(refine.mean_log_hat(haar, float(2**e)).value + 1.0)
            for e in (10, 12, 14)
        ]
        assert haar_errs[-1] < 0.1
        assert haar_errs[0] > haar_errs[1] > haar_errs[2]
        cantor_errs = [
            abs(refine.mean_log_hat(cantor, float(3**e)).value + 0.6309)
            for e in (6, 8, 10)
        ]
        assert cantor_errs[-1] < 0.1
        assert cantor_errs[0] > cantor_errs[1] > cantor_errs[2]
    report(10, "mean ln|f^| desk-scale limits with shrinking error bands", t)


def test_acceptance_11_dilation_orbit_evidence(golden, golden_bernoulli, haar):
    with timer(10.0) as t:
        res = refine.erdos_sequence(golden_bernoulli, golden.one(), 40)
        assert res.plateau_stat < 1e-6
        assert abs(res.values[-1]) > 0
        with pytest.raises(ZeroHit):
            refine.erdos_sequence(haar, 1, 10)
    report(11, "golden |f^(phi^k)| plateaus positive; Haar alpha = 1 hits a zero", t)


def test_acceptance_12_nesting(golden, plastic):
    with timer(10.0) as t:
        cfg = mra.build_config(golden, (0, 1), [(0, 0), (1, 2)])
        assert mra.check_nesting(cfg, 30).violations == 0
        sigma = (0, 1.5, 1.5)
        xi = mra.derive_xi(plastic, sigma)
        qxi = qlat.generate(plastic, xi, 80)
        cfgp = mra.build_config(
            plastic, sigma, [tuple(int(x) for x in r) for r in qxi.preimages]
        )
        assert mra.check_nesting(cfgp, 40).violations == 0
        # negative control: a sigma-lattice point outside the xi window
        qs = qlat.generate(golden, (0, 1), 20)
        control = None
        for i in range(len(qs)):
            conj = abs((qs.preimages[i].astype(float) @ golden.vandermonde)[1])
            if 0.55 < conj < 0.95:
                control = tuple(int(x) for x in qs.preimages[i])
                break
        rep = mra.check_nesting_raw(golden, (0, 1), [control], 30)
        assert rep.violations > 0
    report(12, "nesting holds for golden and plastic, negative control caught", t)


def test_acceptance_13_property_bundle(golden, example_masks, two_frequency):
    # the named properties: group laws, functional-equation identity,
    # representation correctness, determinism, round-trip serialization
    # (the full property suite is the rest of tests/)
    rep = qlat.check_group_laws(golden, (0, 0.6), (0, 1.0), 30)
    assert rep.violations == 0

    rng = np.random.default_rng(123)
    for mask in example_masks:
        for y in rng.uniform(-2, 2, 3):
            for k in range(1, 9):
                lhs = refine.fourier_hat(mask, y * mask.dilation**k)
                rhs = refine.fourier_hat(mask, y)
                for j in range(k):
                    rhs *= complex(mask(y * mask.dilation**j))
                assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    for mask in example_masks + [two_frequency]:
        ys = rng.uniform(-8, 8, 32)
        assert np.max(np.abs(mask(ys) - mask.eval_exponent_form(ys))) < 1e-12

    a = qlat.generate(golden, (0, 1), 40)
    b = qlat.generate(golden, (0, 1), 40)
    assert a.to_csv() == b.to_csv()

    ctx2 = build_context(json.loads(json.dumps(golden.to_json()))["coeffs"])
    assert ctx2.coeffs == golden.coeffs
    rule = subst.derive_rule(golden, (0, 1), 80)
    rule2 = subst.rule_from_json(json.dumps(rule.to_json()))
    assert rule2.decompositions == rule.decompositions
    for mask in example_masks + [two_frequency]:
        again = refine.mask_from_json(json.dumps(mask.to_json()))
        assert again.tau_coords == mask.tau_coords
    report(13, "group laws, functional equation, representation, determinism, round trips")
