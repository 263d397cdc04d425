import math

import numpy as np
import pytest

from rfol.core import CollocationGrid, DataError, ParameterError
from rfol.datagen import (
    Advection1Params,
    Advection2Params,
    _draw_params,
    gen_advection1,
    gen_advection2,
    gen_advection3,
    gen_rkhs_regression,
    generate,
    gp_sample,
    sign_field,
    square_wave,
    wave_and_bump,
)


def test_advection1_shape():
    d = gen_advection1(1000, 40, 0)
    assert d.inputs.shape == (1000, 40) and d.outputs.shape == (1000, 40)
    assert d.input_grid.size == 40


def test_advection1_hand_case():
    x = (np.arange(40) + 0.5) / 40
    u = square_wave(0.5, 0.4, 1.0)(x)
    np.testing.assert_array_equal(u, ((x >= 0.3) & (x <= 0.7)).astype(float))
    v = square_wave(0.5, 0.4, 1.0)(np.mod(x - 0.5, 1.0))
    np.testing.assert_array_equal(v, ((x >= 0.8) | (x <= 0.2)).astype(float))
    np.testing.assert_array_equal(np.roll(u, 20), v)


@pytest.mark.parametrize("gen", [gen_advection1, gen_advection2])
def test_mass_conservation(gen):
    d = gen(50, 40, 1)
    np.testing.assert_allclose(d.outputs.sum(axis=1), d.inputs.sum(axis=1), rtol=1e-13)


@pytest.mark.parametrize("gen,res", [(gen_advection1, 40), (gen_advection2, 40), (gen_advection3, 200)])
def test_transport_exact_shift(gen, res):
    d = gen(20, res, 2)
    assert np.array_equal(d.outputs, np.roll(d.inputs, res // 2, axis=1))


def test_odd_resolution_evaluates_shifted_function():
    d = gen_advection1(5, 41, 3)
    x = d.input_grid.points[:, 0]
    p = Advection1Params()
    for k, (c, b, h) in enumerate(_draw_params(3, 5, [p.c, p.b, p.h])):
        np.testing.assert_array_equal(d.outputs[k], square_wave(c, b, h)(np.mod(x - 0.5, 1.0)))


def test_advection2_degenerate_cases():
    x = (np.arange(40) + 0.5) / 40
    bump = wave_and_bump(0.3, 0.1, 0.0, 0.7, 1.0, 10.0)(x)
    np.testing.assert_allclose(bump, np.sqrt(np.maximum(1 - 100 * (x - 0.7) ** 2, 0)))
    wave = wave_and_bump(0.3, 0.1, 1.2, 0.7, 0.0, 10.0)(x)
    np.testing.assert_array_equal(wave, square_wave(0.3, 0.2, 1.2)(x))


@pytest.mark.parametrize("gen", [gen_advection1, gen_advection2, gen_advection3])
def test_seed_determinism(gen):
    a, b, c = gen(10, 40, 7), gen(10, 40, 7), gen(10, 40, 8)
    assert a == b
    assert not np.array_equal(a.inputs, c.inputs)


def test_prefix_consistency_across_sample_counts():
    a, b = gen_advection1(10, 40, 4), gen_advection1(30, 40, 4)
    np.testing.assert_array_equal(a.inputs, b.inputs[:10])


def test_parameter_marginals():
    p = Advection1Params()
    draws = _draw_params(0, 10_000, [p.c, p.b, p.h])
    np.testing.assert_allclose(draws.mean(axis=0), [0.5, 0.45, 1.5], rtol=0.02)


def test_advection2_ranges():
    p = Advection2Params()
    boxes = [p.c1, p.w, p.h1, p.c2, p.h2, p.a2]
    draws = _draw_params(1, 2000, boxes)
    for j, (lo, hi) in enumerate(boxes):
        assert lo <= draws[:, j].min() and draws[:, j].max() <= hi


def test_advection3_values():
    d = gen_advection3(30, 200, 0)
    assert set(np.unique(d.inputs)) <= {-1.0, 1.0}
    assert d.input_grid.size == 200


def test_advection3_odd_resolution_rejected():
    with pytest.raises(ParameterError):
        gen_advection3(2, 201, 0)


def test_sign_of_positive_constant():
    u = sign_field(np.full(10, 1e-9))
    assert np.all(u == 1.0) and np.all(np.roll(u, 5) == 1.0)


def test_sign_balance():
    d = gen_advection3(1000, 200, 5)
    assert 0.45 <= np.mean(d.inputs > 0) <= 0.55


GRID200 = CollocationGrid.equispaced(200)


def test_gp_white_noise_variance():
    draws = gp_sample(GRID200, 3.0, 0.0, 0, count=10_000)
    theory = 1.0 - 1.0 / 200  # unit modes with the mean mode removed
    assert np.var(draws) == pytest.approx(theory, rel=0.05)


def test_gp_zero_mean():
    draws = gp_sample(GRID200, 3.0, 2.0, 1, count=100)
    assert np.max(np.abs(draws.mean(axis=1))) <= 1e-12
    assert abs(gp_sample(GRID200, 3.0, 2.0, 2).values.mean()) <= 1e-12


def dense_covariance(n, tau, power):
    h = 1.0 / n
    L = (2 * np.eye(n) - np.roll(np.eye(n), 1, axis=1) - np.roll(np.eye(n), -1, axis=1)) / h**2
    lam, Q = np.linalg.eigh(L + tau**2 * np.eye(n))
    C = (Q * lam ** (-power)) @ Q.T
    P = np.eye(n) - np.ones((n, n)) / n
    return P @ C @ P


def test_gp_covariance_matches_dense_oracle():
    draws = gp_sample(GRID200, 3.0, 2.0, 3, count=20_000)
    emp = draws.T @ draws / draws.shape[0]
    ref = dense_covariance(200, 3.0, 2.0)
    assert np.linalg.norm(emp - ref) / np.linalg.norm(ref) <= 0.05


def test_gp_two_dimensional():
    g = CollocationGrid.tensor([16, 8])
    f = gp_sample(g, 2.0, 1.5, 0)
    assert f.values.shape == (128,) and abs(f.values.mean()) <= 1e-12


def test_gp_rejects_irregular_grid():
    g = CollocationGrid(np.array([0.1, 0.2, 0.7]), [0.0], [1.0])
    with pytest.raises(DataError):
        gp_sample(g, 1.0, 1.0, 0)


def test_rkhs_closed_form():
    grid, sample, f = gen_rkhs_regression(11, 2.0, 1, 0, coeffs=[1.0], centers=[0.5])
    assert f(0.5) == 1.0
    assert f(0.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert sample.values[5] == 1.0


def test_rkhs_zero_coefficients():
    _, sample, f = gen_rkhs_regression(7, 3.0, 4, 0, coeffs=np.zeros(4))
    assert np.all(sample.values == 0) and f(0.3) == 0


def test_rkhs_values_match_closed_form():
    grid, sample, f = gen_rkhs_regression(25, 5.0, 6, 9)
    x = grid.points[:, 0]
    direct = [sum(a * math.exp(-5.0 * abs(xi - z)) for a, z in zip(f.coeffs, f.centers)) for xi in x]
    np.testing.assert_allclose(sample.values, direct, rtol=0, atol=1e-14)
    assert x[0] == 0.0 and x[-1] == 1.0


def test_rkhs_centers_on_grid():
    grid, _, f = gen_rkhs_regression(20, 5.0, 5, 1, centers_on_grid=True)
    assert set(f.centers) <= set(grid.points[:, 0])


def test_generate_unknown_problem():
    with pytest.raises(ParameterError):
        generate("burgers", 10)
    with pytest.raises(ParameterError):
        gen_advection1(3, 1, 0)
