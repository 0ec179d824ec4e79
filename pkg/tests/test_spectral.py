import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_kernel
from dyadic_diffusion.dyadic import delta_power_integral, tail_constant
from dyadic_diffusion.haar import GridFunction, haar_forward, haar_samples, lp_norm
from dyadic_diffusion.kernels import gaussian, lambda_to_k, power_law_seed, step_kernel
from dyadic_diffusion.spectral import (OperatorPlan, apply_kernel, apply_kernel_quadrature,
                                       derivative_constant, fractional_derivative_quadrature,
                                       fractional_derivative_spectral, heat_solve,
                                       operator_matrix, quadrature_matrix)

KERNELS = {
    "gaussian": lambda: gaussian(1.0),
    "power_law": lambda: power_law_seed(2 / 3),
    "step": lambda: step_kernel(),
}


def _haar_functions(Jd, Jr):
    for j in range(-Jd, Jr):
        for k in range(2 ** (j + Jd)):
            yield j, k, haar_samples(Jd, Jr, j, k)


def test_plan_validation():
    with pytest.raises(ValueError, match="does not cover"):
        OperatorPlan(gaussian(1.0, (-2, 10)), 4, 4)
    with pytest.raises(ValueError, match="scaling mode"):
        OperatorPlan(gaussian(1.0), 2, 2, "keep")
    plan = OperatorPlan(gaussian(1.0), 2, 2)
    with pytest.raises(ValueError, match="layout"):
        apply_kernel(plan, GridFunction.zeros(1, 3))


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_eigenfunctions(name):
    K = KERNELS[name]()
    plan = OperatorPlan(K, 3, 4)
    A = quadrature_matrix(K, 3, 4)
    for j, k, h in _haar_functions(3, 4):
        expect = K.lam_at(j) * h.values
        assert np.max(np.abs(apply_kernel(plan, h).values - expect)) < 1e-12
        assert np.max(np.abs(A @ h.values - expect)) < 1e-10


def test_constants_carried():
    f = GridFunction.constant(3, 3, 2.5)
    for K in (gaussian(1.0), power_law_seed(0.3)):
        assert np.allclose(apply_kernel(OperatorPlan(K, 3, 3), f).values, 2.5, rtol=0, atol=1e-13)
        assert np.max(np.abs(apply_kernel(OperatorPlan(K, 3, 3, "annihilate"), f).values)) < 1e-13


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_quadrature_matches_restrict_mode(name):
    K = KERNELS[name]()
    Jd, Jr = 3, 5
    rng = np.random.default_rng(4)
    f = GridFunction(Jd, Jr, rng.normal(size=256))
    restrict = apply_kernel(OperatorPlan(K, Jd, Jr, "restrict"), f)
    assert np.max(np.abs(restrict.values - apply_kernel_quadrature(K, f).values)) < 1e-10
    carry = apply_kernel(OperatorPlan(K, Jd, Jr), f)
    assert np.max(np.abs(carry.values - apply_kernel_quadrature(K, f, "mean").values)) < 1e-10
    M = operator_matrix(OperatorPlan(K, Jd, Jr, "restrict"))
    assert np.max(np.abs(M - quadrature_matrix(K, Jd, Jr))) < 1e-10


def test_quadrature_row_sums():
    K = gaussian(0.5)
    Jd, Jr = 2, 4
    A = quadrature_matrix(K, Jd, Jr)
    retained = lambda_to_k(K).mass_upto(Jd)
    assert np.allclose(A.sum(axis=1), retained, rtol=1e-13)
    assert math.isclose(OperatorPlan(K, Jd, Jr).retained_mass, retained)
    assert np.allclose(A, A.T)
    assert np.all(apply_kernel_quadrature(K, GridFunction.zeros(Jd, Jr)).values == 0)
    with pytest.raises(ValueError):
        apply_kernel_quadrature(K, GridFunction.zeros(Jd, Jr), "reflect")


def test_quadrature_entries():
    K = power_law_seed(2 / 3)
    A = quadrature_matrix(K, 1, 2)
    k = K.k()
    # cells 0 and 5 at resolution 2**-2 are 2**0 apart in delta
    assert A[0, 5] == k.at(1) * 0.25
    assert A[0, 1] == k.at(-1) * 0.25
    assert A[3, 3] == k.mass_upto(-2)


@pytest.mark.parametrize("mode", ["carry", "restrict"])
def test_non_expansive(mode):
    rng = np.random.default_rng(9)
    Jd, Jr = 3, 4
    kernels = [gaussian(1.0), power_law_seed(2 / 3), step_kernel(), random_kernel(rng, (-30, 12))]
    for K in kernels:
        plan = OperatorPlan(K, Jd, Jr, mode)
        for _ in range(25):
            f = GridFunction(Jd, Jr, rng.standard_cauchy(size=128))
            Tf = apply_kernel(plan, f)
            for p in (1, 2, math.inf):
                assert lp_norm(Tf, p) <= lp_norm(f, p) * (1 + 1e-12)


def test_carry_operator_doubly_stochastic():
    M = operator_matrix(OperatorPlan(power_law_seed(1.2), 2, 3))
    assert np.allclose(M.sum(axis=0), 1.0) and np.allclose(M.sum(axis=1), 1.0)
    assert M.min() >= -1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_commuting_diagram(seed):
    rng = np.random.default_rng(seed)
    K = random_kernel(rng, (-20, 12))
    plan = OperatorPlan(K, 2, 4)
    f = GridFunction(2, 4, rng.normal(size=64))
    lhs = haar_forward(apply_kernel(plan, f)).data
    rhs = haar_forward(f).multiply(plan.level_factors, 1.0).data
    assert np.max(np.abs(lhs - rhs)) < 1e-12


# -- fractional derivative ------------------------------------------------------------

def test_derivative_constant_from_integral():
    # bare integral on h^0_0 at a point of its left half, written out by hand
    s = 0.5
    sibling = 2 * 0.5  # (1 - (-1)) * |right half| * 1**(-1-s)
    outside = delta_power_integral(-1 - s, 2.0, "tail")
    assert math.isclose(sibling + outside, derivative_constant(s), rel_tol=1e-14)
    h = haar_samples(1, 3, 0, 0)
    bare = fractional_derivative_quadrature(s, h, x=0, normalized=False)
    assert math.isclose(bare, derivative_constant(s), rel_tol=1e-14)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_quadrature_derivative_on_haar(s):
    Jd, Jr = 3, 5
    for j, k, h in _haar_functions(Jd, Jr):
        q = fractional_derivative_quadrature(s, h).values
        expect = 2.0 ** (j * s) * h.values
        assert np.max(np.abs(q - expect)) <= 1e-8 * np.max(np.abs(expect))
        spectral = fractional_derivative_spectral(s, h).values
        assert np.max(np.abs(spectral - expect)) <= 1e-12 * np.max(np.abs(expect))


def test_derivative_pointwise_example():
    h = haar_samples(2, 3, 0, 0)
    assert math.isclose(fractional_derivative_quadrature(0.5, h, x=1), 1.0, rel_tol=1e-12)
    assert math.isclose(fractional_derivative_quadrature(0.5, h, x=5), -1.0, rel_tol=1e-12)
    assert fractional_derivative_quadrature(0.5, h, x=12) == 0.0


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75, 1.0])
def test_constants_have_zero_derivative(s):
    c = GridFunction.constant(2, 3, 4.0)
    assert np.all(fractional_derivative_spectral(s, c).values == 0)
    if s < 1:
        assert np.max(np.abs(fractional_derivative_quadrature(s, c, exterior="mean").values)) < 1e-12


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_random_function_quadrature_vs_spectral(s):
    rng = np.random.default_rng(3)
    f = GridFunction(3, 4, rng.normal(size=128))
    spectral = fractional_derivative_spectral(s, f).values
    quad = fractional_derivative_quadrature(s, f, exterior="mean").values
    assert np.max(np.abs(quad - spectral)) < 1e-8 * np.max(np.abs(spectral))
    spectral0 = fractional_derivative_spectral(s, f, mode="restrict").values
    quad0 = fractional_derivative_quadrature(s, f).values
    assert np.max(np.abs(quad0 - spectral0)) < 1e-8 * np.max(np.abs(spectral0))


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_derivative_tail_closed_form(s):
    Jd = 3
    r = 2.0 ** (Jd + 1)
    direct = math.fsum(0.5 * 2.0 ** (-m * s) for m in range(Jd + 1, 4000))
    closed = tail_constant(-1 - s) * r ** (-s)
    assert math.isclose(delta_power_integral(-1 - s, r, "tail"), direct, rel_tol=1e-12)
    assert math.isclose(closed, direct, rel_tol=1e-12)


def test_derivative_validation():
    f = GridFunction.zeros(1, 2)
    with pytest.raises(ValueError, match="pointwise integral divergent; use spectral form"):
        fractional_derivative_quadrature(1.0, f)
    for bad in (0.0, 1.5, -0.2):
        with pytest.raises(ValueError):
            fractional_derivative_spectral(bad, f)
        with pytest.raises(ValueError):
            fractional_derivative_quadrature(bad, f)
    with pytest.raises(ValueError):
        fractional_derivative_spectral(0.5, f, mode="carry")
    with pytest.raises(ValueError):
        fractional_derivative_quadrature(0.5, f, x=99)


# -- heat semigroup ------------------------------------------------------------------

def test_heat_on_haar():
    Jd, Jr = 2, 4
    for j, k, h in _haar_functions(Jd, Jr):
        u = heat_solve(1.0, 0.3, h)
        assert np.max(np.abs(u.values - math.exp(-0.3 * 2.0 ** j) * h.values)) < 1e-13


def test_heat_identity_and_semigroup():
    rng = np.random.default_rng(6)
    u0 = GridFunction(3, 4, rng.normal(size=128))
    assert heat_solve(0.5, 0.0, u0) is u0
    for s in (0.5, 1.0):
        a = heat_solve(s, 0.7, u0)
        b = heat_solve(s, 0.4, heat_solve(s, 0.3, u0))
        assert np.max(np.abs(a.values - b.values)) < 1e-12
    with pytest.raises(ValueError):
        heat_solve(1.0, -1.0, u0)


def test_heat_equals_gaussian_kernel():
    rng = np.random.default_rng(8)
    u0 = GridFunction(4, 5, rng.normal(size=512))
    for t in (0.1, 1.0, 3.0):
        via_kernel = apply_kernel(OperatorPlan(gaussian(t), 4, 5), u0)
        assert np.max(np.abs(heat_solve(1.0, t, u0).values - via_kernel.values)) < 1e-12


def test_generator_first_order():
    rng = np.random.default_rng(10)
    u0 = GridFunction(2, 4, rng.normal(size=64))
    t = 0.5
    u = heat_solve(1.0, t, u0)
    gen = -fractional_derivative_spectral(1.0, u, mode="annihilate").values
    errs = []
    for eps in (1e-3, 1e-4):
        fd = (heat_solve(1.0, t + eps, u0).values - u.values) / eps
        errs.append(np.max(np.abs(haar_forward(u.with_values(fd - gen)).data)))
    assert 8 < errs[0] / errs[1] < 12
    assert errs[0] < 10 * 1e-3
