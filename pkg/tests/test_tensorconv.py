import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorpot.dequad import QuadratureRule, SubstChain, node_search, rule_for
from tensorpot.genfun import ShapeParams
from tensorpot.grid import GridDensity
from tensorpot.kernels import Family, I1_closed_form, PotentialSpec, yukawa_gaussian_closed_form_3d
from tensorpot.tensorconv import (
    ConvergenceTable,
    SeparableKernel,
    apply_direct,
    apply_separable,
    build_separable_kernel,
    direct_coefficients,
    evaluate_at,
    evaluate_product_density,
)

W11 = SubstChain.waldvogel(1.0, 1.0)
H, D = 0.5, 2.0
PARAMS = ShapeParams(D, D)
HARM1 = PotentialSpec("harmonic", 3, 1)


def _gauss(half=8, h=H, n=3):
    return GridDensity.centered(lambda *y: np.exp(-sum(c * c for c in y)), h, half, n)


def _delta(half, n=3, h=H):
    vals = np.zeros((2 * half + 1,) * n)
    vals[(half,) * n] = 1.0
    return GridDensity(h, (-half,) * n, vals)


@pytest.fixture(scope="module")
def kernel_1e5():
    rep = rule_for(Family("I1"), 3, W11, 1e-5)
    return build_separable_kernel(HARM1, PARAMS, rep.rule, W11, H, offset_cap=16)


def test_rank_equals_node_count(kernel_1e5):
    rep = rule_for(Family("I1"), 3, W11, 1e-5)
    assert kernel_1e5.rank == rep.node_count
    assert abs(kernel_1e5.rank - 82) <= 0.25 * 82


def test_factors_symmetric_and_finite(kernel_1e5):
    f = kernel_1e5.factors
    assert f.shape == (kernel_1e5.rank, 3, 2 * kernel_1e5.P + 1)
    np.testing.assert_array_equal(f, f[..., ::-1])
    assert np.all(np.isfinite(f))


def test_harmonic_kernel_needs_cap():
    rep = rule_for(Family("I1"), 3, W11, 1e-3)
    with pytest.raises(ValueError):
        build_separable_kernel(HARM1, PARAMS, rep.rule, W11, H)


def test_single_node_gives_sampled_gaussian():
    rule = QuadratureRule(0.3, 0, 0)
    ker = build_separable_kernel(HARM1, PARAMS, rule, W11, H, offset_cap=5)
    res = apply_separable(ker, _delta(5)).values
    t = float(W11.t(0.0))
    p = np.arange(-5, 6)
    g = np.exp(-p * p / (D * (1 + t)))
    expect = ker.weights[0] * np.einsum("i,j,k->ijk", g, g, g)
    np.testing.assert_allclose(res, expect, rtol=1e-14)


def test_zero_density():
    rep = rule_for(Family("I1"), 3, W11, 1e-3)
    ker = build_separable_kernel(HARM1, PARAMS, rep.rule, W11, H, offset_cap=4)
    dens = _delta(4).like(np.zeros((9, 9, 9)))
    assert np.all(apply_separable(ker, dens).values == 0.0)


def test_point_mass_gives_scaled_I1(kernel_1e5):
    res = apply_separable(kernel_1e5, _delta(8))
    k = np.arange(-8, 9)
    K = np.stack(np.meshgrid(k, k, k, indexing="ij"), -1)
    r = np.linalg.norm(K, axis=-1) / math.sqrt(D)
    expect = D * H * H / (4 * (math.pi * D) ** 1.5) * I1_closed_form(r, 3)
    np.testing.assert_allclose(res.values, expect, rtol=1e-5)
    direct = apply_direct(HARM1, PARAMS, _delta(8)).values
    np.testing.assert_allclose(direct, expect, rtol=1e-13)


@pytest.mark.parametrize("M", [1, 2])
def test_separable_matches_direct(M):
    spec = PotentialSpec("harmonic", 3, M)
    rep = rule_for(spec.family(), 3, W11, 1e-5)
    ker = build_separable_kernel(spec, PARAMS, rep.rule, W11, H, offset_cap=16)
    dens = _gauss()
    sep = apply_separable(ker, dens).values
    direct = apply_direct(spec, PARAMS, dens, form="tensor").values
    assert np.max(np.abs(sep - direct) / np.abs(direct)) <= 2e-5


def test_radial_and_tensor_direct_agree_for_M1():
    dens = _gauss(6)
    r = apply_direct(HARM1, PARAMS, dens, form="radial").values
    t = apply_direct(HARM1, PARAMS, dens, form="tensor").values
    np.testing.assert_allclose(r, t, rtol=1e-13)


def test_rank_ladder_improves_monotonically():
    dens = _gauss()
    direct = apply_direct(HARM1, PARAMS, dens).values
    devs = []
    for eps in (1e-1, 1e-3, 1e-5):
        rep = rule_for(Family("I1"), 3, W11, eps)
        ker = build_separable_kernel(HARM1, PARAMS, rep.rule, W11, H, offset_cap=16)
        devs.append(np.max(np.abs(apply_separable(ker, dens).values - direct) / direct))
        assert devs[-1] <= eps
    assert devs[0] > devs[1] > devs[2]


def test_axis_order_independence(kernel_1e5, rng):
    dens = _gauss(6).like(rng.standard_normal((13, 13, 13)))
    a = apply_separable(kernel_1e5, dens).values
    b = apply_separable(kernel_1e5, dens, axis_order=[2, 0, 1]).values
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_linearity(alpha, beta, seed):
    rep = rule_for(Family("I1"), 3, W11, 1e-3)
    ker = build_separable_kernel(HARM1, PARAMS, rep.rule, W11, H, offset_cap=6)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2, 7, 7, 7))
    base = _delta(3)
    lhs = apply_separable(ker, base.like(alpha * u + beta * v)).values
    rhs = alpha * apply_separable(ker, base.like(u)).values + beta * apply_separable(ker, base.like(v)).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


def test_translation_equivariance(kernel_1e5):
    vals = np.zeros((17, 17, 17))
    vals[8, 8, 8] = 1.0
    vals[7, 9, 8] = -0.5
    a = apply_separable(kernel_1e5, _delta(8).like(vals)).values
    b = apply_separable(kernel_1e5, _delta(8).like(np.roll(vals, 1, axis=0))).values
    np.testing.assert_allclose(b[4:14, 2:15, 2:15], a[3:13, 2:15, 2:15], rtol=1e-13, atol=1e-18)


def test_fft_path_matches_toeplitz():
    dens = GridDensity.centered(lambda y: np.exp(-y * y), 0.05, 150, 1)
    spec = PotentialSpec("yukawa", 3, 1, 1.0)
    # 301 points along the first axis take the FFT path, the other axes are single cells
    rep = node_search(Family("K1", 1, math.sqrt(D) * 0.05), 3, SubstChain.single(1.0), 1e-7)
    ker = build_separable_kernel(spec, PARAMS, rep.rule, SubstChain.single(1.0), 0.05, offset_cap=300)
    vals3 = dens.values[:, None, None]
    d3 = GridDensity(0.05, (-150, 0, 0), vals3)
    fast = apply_separable(ker, d3).values
    probes = [[-150, 0, 0], [0, 0, 0], [37, 0, 0], [150, 0, 0]]
    slow = evaluate_at(ker, d3, probes)
    np.testing.assert_allclose(fast[[0, 150, 187, 300], 0, 0], slow, rtol=1e-12)


def test_yukawa_point_mass_matches_closed_form():
    a, h = 0.8, 0.5
    spec = PotentialSpec("yukawa", 3, 1, a)
    fam = Family("K1", 1, a * math.sqrt(D) * h)
    single = SubstChain.single(1.0)
    rep = node_search(fam, 3, single, 1e-11)
    ker = build_separable_kernel(spec, PARAMS, rep.rule, single, h)
    res = apply_separable(ker, _delta(6)).values
    k = np.arange(-6, 7)
    K = np.stack(np.meshgrid(k, k, k, indexing="ij"), -1) / math.sqrt(D)
    expect = D * h * h / (math.pi * D) ** 1.5 * yukawa_gaussian_closed_form_3d(K, fam.a)
    np.testing.assert_allclose(res, expect, rtol=1e-9)
    direct = apply_direct(spec, PARAMS, _delta(6), form="tensor").values
    np.testing.assert_allclose(direct, expect, rtol=1e-12)


def test_evaluate_helpers_match_full_application(kernel_1e5):
    dens = _gauss()
    full = apply_separable(kernel_1e5, dens).values
    probes = np.array([[0, 0, 0], [3, -2, 1], [-8, 8, 0]])
    np.testing.assert_allclose(evaluate_at(kernel_1e5, dens, probes), full[tuple((probes + 8).T)], rtol=1e-12)
    g = np.exp(-(H * np.arange(-8, 9)) ** 2)
    prod = evaluate_product_density(kernel_1e5, [g] * 3, [-8] * 3, probes)
    np.testing.assert_allclose(prod, full[tuple((probes + 8).T)], rtol=1e-12)


def test_direct_box_growth_stabilizes():
    vals = []
    for half in (6, 9, 12):
        dens = _gauss(half)
        vals.append(apply_direct(HARM1, PARAMS, dens).values[(half,) * 3])
    assert abs(vals[2] / vals[1] - 1) <= abs(vals[1] / vals[0] - 1) + 1e-15
    assert abs(vals[2] / vals[1] - 1) <= 1e-3


def test_direct_guards():
    with pytest.raises(ValueError):
        apply_direct(HARM1, PARAMS, GridDensity(H, (0, 0, 0), np.zeros((101, 100, 100))))
    with pytest.raises(ValueError):
        apply_direct(HARM1, PARAMS, _delta(2, n=4))
    with pytest.raises(ValueError):
        direct_coefficients(PotentialSpec("yukawa", 3, 1, 1.0), PARAMS, H, (3, 3, 3), form="radial")


def test_shape_mismatch(kernel_1e5):
    with pytest.raises(ValueError):
        apply_separable(kernel_1e5, _delta(2, n=2))
    with pytest.raises(ValueError):
        apply_separable(kernel_1e5, _delta(2, h=0.25))


def test_kernel_validation():
    with pytest.raises(ValueError):
        SeparableKernel(3, np.ones(2), np.ones((2, 4)), 0.5)
    with pytest.raises(ValueError):
        SeparableKernel(3, np.ones(2), np.full((2, 3), np.nan), 0.5)
    k = SeparableKernel(2, np.array([2.0]), np.array([[0.5, 1.0, 0.5]]), 0.5)
    assert k.coefficient([1, -1]) == pytest.approx(0.5)
    assert k.coefficient([2, 0]) == 0.0


def test_convergence_table_orders():
    t = ConvergenceTable(np.array([0.4, 0.2, 0.1]), np.array([1.6, 0.4, 0.1]))
    np.testing.assert_allclose(t.orders, [2.0, 2.0])
    assert t.rows()[0] == (0.4, 1.6)


def test_result_serialization(tmp_path, kernel_1e5):
    res = apply_separable(kernel_1e5, _gauss(4))
    path = tmp_path / "res.bin"
    res.save(path)
    back = GridDensity.load(path)
    np.testing.assert_array_equal(back.values, res.values)
    assert back.m_min == res.grid.m_min and back.h == res.grid.h
    assert GridDensity.from_bytes(res.to_bytes()).shape == (9, 9, 9)
