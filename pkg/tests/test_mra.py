import numpy as np
import pytest

from pvlattice import mra, qlat
from pvlattice.errors import NotUnitConstant, ValidationError


def test_xi_golden(golden):
    xi = mra.derive_xi(golden, (0, 1))
    assert abs(xi[1] - 0.3820) < 5e-5


def test_xi_monotone(golden):
    values = [mra.derive_xi(golden, (0, s))[1] for s in (0.2, 0.5, 1.0)]
    assert values == sorted(values)
    assert values[0] > 0


def test_xi_plastic_pair_equal(plastic):
    lam2 = abs(plastic.roots[1])
    xi = mra.derive_xi(plastic, (0, 1, 1))
    assert xi[1] == xi[2]
    assert abs(xi[1] - (1 - lam2)) < 1e-12


def test_xi_requires_unit_constant(nonunit):
    with pytest.raises(NotUnitConstant):
        mra.derive_xi(nonunit, (0, 1))


def test_window_identity(golden, plastic, quartic):
    # |lambda_j| sigma_j + xi_j = sigma_j, the algebraic heart of nesting
    for ctx, sigma in [
        (golden, (0, 1.0)),
        (plastic, (0, 0.9, 0.9)),
        (quartic, (0, 1.3, 1.3, 1.1)),  # conjugate pair sits at indices 1, 2
    ]:
        xi = mra.derive_xi(ctx, sigma)
        for j in range(1, ctx.degree):
            lhs = abs(ctx.roots[j]) * sigma[j] + xi[j]
            assert abs(lhs - sigma[j]) < 1e-10


def test_nesting_golden_zero_violations(golden):
    # translations 0 and phi^3 = (1, 2) both lie in the xi-window lattice
    cfg = mra.build_config(golden, (0, 1), [(0, 0), (1, 2), (-1, -2)])
    rep = mra.check_nesting(cfg, 30)
    assert rep.violations == 0
    assert rep.checked_pairs > 0
    assert rep.min_margin > 0


def test_nesting_zero_translation(golden):
    cfg = mra.build_config(golden, (0, 1), [(0, 0)])
    rep = mra.check_nesting(cfg, 20)
    assert rep.violations == 0


def test_nesting_plastic_zero_violations(plastic):
    sigma = (0, 1.5, 1.5)
    xi = mra.derive_xi(plastic, sigma)
    q = qlat.generate(plastic, xi, 80)
    assert len(q) >= 3  # 0 and a symmetric nonzero pair
    translations = [tuple(int(x) for x in row) for row in q.preimages]
    cfg = mra.build_config(plastic, sigma, translations)
    rep = mra.check_nesting(cfg, 40)
    assert rep.violations == 0


def test_nesting_quartic_zero_violations(quartic):
    # the xi window is tiny (pair contraction 0.9404), so its first nonzero
    # lattice points sit out near +-153
    sigma = (0.0, 3.0, 3.0, 3.0)
    xi = mra.derive_xi(quartic, sigma)
    q = qlat.generate(quartic, xi, 200, cell_budget=3 * 10**7)
    assert len(q) >= 3
    cfg = mra.build_config(quartic, sigma, [tuple(int(x) for x in r) for r in q.preimages])
    rep = mra.check_nesting(cfg, 60)
    assert rep.violations == 0


def test_nesting_negative_control(golden):
    # brute search for a lattice point of L(sigma) outside L(xi)
    sigma = (0, 1)
    xi = mra.derive_xi(golden, sigma)
    q = qlat.generate(golden, sigma, 20)
    control = None
    for i in range(len(q)):
        conj = abs((q.preimages[i].astype(float) @ golden.vandermonde)[1])
        if xi[1] + 0.15 < conj < sigma[1] - 0.05:
            control = tuple(int(x) for x in q.preimages[i])
            break
    assert control is not None
    with pytest.raises(ValidationError):
        mra.build_config(golden, sigma, [control])
    rep = mra.check_nesting_raw(golden, sigma, [control], 30)
    assert rep.violations > 0


def test_project_constant(golden):
    q = qlat.generate(golden, (0, 1), 30)
    xs = np.linspace(-8, 8, 500)
    samples = [(x, 3.25) for x in xs]
    for k in range(3):
        with pytest.warns(UserWarning):    # edge intervals have no samples
            pc = mra.project_pc(q, samples, k)
        assert np.allclose(pc.values, 3.25)


def test_project_indicator_representable(golden):
    q = qlat.generate(golden, (0, 1), 40)
    c1 = q.values[q.index_of((0, 0)) + 1]  # right neighbor of the origin
    rng = np.random.default_rng(9)
    xs = rng.uniform(-6, 6, 4000)
    indicator = lambda x: 1.0 if 0 <= x < c1 else 0.0
    with pytest.warns(UserWarning):
        pc0 = mra.project_pc(q, [(x, indicator(x)) for x in xs], 0)
    assert np.all(pc0(xs) == np.array([indicator(x) for x in xs]))
    # re-projection at the finer level reproduces it at sample locations
    with pytest.warns(UserWarning):
        pc1 = mra.project_pc(q, [(x, float(pc0(x))) for x in xs], 1)
    assert np.all(pc1(xs) == pc0(xs))


def test_project_idempotent(golden):
    q = qlat.generate(golden, (0, 1), 30)
    rng = np.random.default_rng(10)
    xs = np.sort(rng.uniform(-7, 7, 3000))
    samples = list(zip(xs, np.sin(xs)))
    with pytest.warns(UserWarning):
        pc = mra.project_pc(q, samples, 0)
    with pytest.warns(UserWarning):
        pc2 = mra.project_pc(q, list(zip(xs, pc(xs))), 0)
    assert np.array_equal(pc.values, pc2.values)


def test_breakpoint_nesting_exact(golden):
    # level-(k+1) breakpoints contain the level-k ones as exact preimages:
    # lambda^-k x = lambda^-(k+1) (lambda x) and lambda x has preimage C^T l
    L = 60.0
    q = qlat.generate(golden, (0, 1), L)
    ct = np.asarray(golden.companion, dtype=np.int64)
    lam = golden.lam
    pres = q.preimage_set()
    for k in range(5):
        for i in range(len(q)):
            if abs(q.values[i]) > L / lam:
                continue
            image = tuple(int(x) for x in (q.preimages[i] @ ct))
            assert image in pres


def test_project_out_of_range(golden):
    q = qlat.generate(golden, (0, 1), 10)
    with pytest.raises(ValidationError):
        mra.project_pc(q, [(100.0, 1.0)], 0)
