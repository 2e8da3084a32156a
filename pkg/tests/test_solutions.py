import math

import numpy as np
import pytest

from sgvem.element import ModelParams
from sgvem.solutions import (
    ExactSolution,
    PolyFactor,
    Term,
    body_force,
    continuous_norms,
    example_solution,
)


ALL_EXAMPLES = ("exam1a", "exam1b", "exam3", "divfree")


def make_params(name):
    if name == "exam1b":
        return ModelParams(lam=1.0, mu=1.0, iota=0.5)
    if name == "exam3":
        return ModelParams(lam=100.0, mu=1.0, iota=1e-5)
    if name == "divfree":
        return ModelParams(lam=1e8, mu=1.0, iota=1e-5)
    return ModelParams(lam=1.0, mu=1.0, iota=1e-5)


def test_unknown_example_rejected():
    with pytest.raises(ValueError, match="unknown example"):
        example_solution("nope", make_params("exam1a"))


@pytest.mark.parametrize("name", ALL_EXAMPLES)
def test_derivative_chains_match_finite_differences(name, rng):
    """Each supplied derivative matches a centered difference of the one below."""
    params = make_params(name)
    sol = example_solution(name, params)
    pts = rng.uniform(0.1, 0.9, (100, 2))
    h = 1e-5
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    for comp in range(2):
        for dx in range(5):
            for dy in range(5 - dx):
                if dx + dy == 0:
                    continue
                val = sol.derivative(comp, dx, dy, pts)
                if dx > 0:
                    lower = lambda p: sol.derivative(comp, dx - 1, dy, p)
                    fd = (lower(pts + ex) - lower(pts - ex)) / (2 * h)
                else:
                    lower = lambda p: sol.derivative(comp, dx, dy - 1, p)
                    fd = (lower(pts + ey) - lower(pts - ey)) / (2 * h)
                scale = max(1.0, np.abs(val).max())
                assert np.abs(fd - val).max() / scale < 1e-6, (name, comp, dx, dy)


def test_exam1a_boundary_compatibility(rng):
    sol = example_solution("exam1a", make_params("exam1a"))
    t = rng.uniform(0, 1, 50)
    for pts, normal_axis in (
        (np.column_stack([np.zeros(50), t]), 0),
        (np.column_stack([np.ones(50), t]), 0),
        (np.column_stack([t, np.zeros(50)]), 1),
        (np.column_stack([t, np.ones(50)]), 1),
    ):
        assert np.abs(sol.displacement(pts)).max() < 1e-13
        grad = sol.gradient(pts)
        assert np.abs(grad[:, :, normal_axis]).max() < 1e-12


def test_exam1a_corners_vanish():
    sol = example_solution("exam1a", make_params("exam1a"))
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    assert np.abs(sol.displacement(corners)).max() < 1e-14


def test_exam3_value_compatible_but_normal_violating(rng):
    sol = example_solution("exam3", make_params("exam3"))
    t = rng.uniform(0.1, 0.9, 20)
    edge = np.column_stack([np.zeros(20), t])
    assert np.abs(sol.displacement(edge)).max() < 1e-13
    assert np.abs(sol.gradient(edge)[:, 1, 0]).max() > 1.0  # d u2 / dx = O(1)
    assert sol.clamped_value and not sol.clamped_normal


def test_exam3_divergence_identity(rng):
    lam = 100.0
    sol = example_solution("exam3", ModelParams(lam=lam, mu=1.0, iota=1e-5))
    pts = rng.uniform(0, 1, (60, 2))
    expected = (
        np.pi / (1 + lam)
        * (np.cos(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])
           + np.sin(np.pi * pts[:, 0]) * np.cos(np.pi * pts[:, 1]))
    )
    assert np.abs(sol.divergence(pts) - expected).max() < 1e-12


def test_exam3_second_part_vanishes_for_large_lambda():
    mid = np.array([[0.5, 0.5]])
    for lam, bound in ((1e3, 2e-3), (1e6, 2e-6), (1e9, 2e-9)):
        sol = example_solution("exam3", ModelParams(lam=lam, mu=1.0, iota=1e-5))
        assert np.abs(sol.displacement(mid)).max() < bound


def test_divfree_divergence_vanishes(rng):
    sol = example_solution("divfree", make_params("divfree"))
    pts = rng.uniform(0, 1, (100, 2))
    assert np.abs(sol.divergence(pts)).max() < 1e-12


def test_exam1b_boundary_layer_values():
    iota = 1e-3
    sol = example_solution("exam1b", ModelParams(lam=1.0, mu=1.0, iota=iota))
    pts = np.array([[0.0, 0.5]])
    # u1(0, y) = iota (1 + e^{-y/iota}) - 0: dominated by the layer scale
    assert sol.displacement(pts)[0, 0] == pytest.approx(iota, rel=1e-6)
    assert not sol.clamped_value


# ---------------------------------------------------------------------------
# body force
# ---------------------------------------------------------------------------

def test_body_force_of_linear_field_is_zero(rng):
    one = PolyFactor([1.0])
    x = PolyFactor([0.0, 1.0])
    sol = ExactSolution("linear", (
        (Term(0.7, x, one), Term(-0.1, one, x)),
        (Term(1.3, one, x),),
    ))
    params = ModelParams(lam=3.0, mu=2.0, iota=0.5)
    f = body_force(sol, params)(rng.uniform(0, 1, (20, 2)))
    assert np.abs(f).max() < 1e-13


def test_divfree_force_parameter_independent(rng):
    pts = rng.uniform(0, 1, (30, 2))
    f1 = body_force(example_solution("divfree", ModelParams(lam=10.0, mu=1.0, iota=1e-1)),
                    ModelParams(lam=10.0, mu=1.0, iota=1e-1))(pts)
    f2 = body_force(example_solution("divfree", ModelParams(lam=1e8, mu=1.0, iota=1e-5)),
                    ModelParams(lam=1e8, mu=1.0, iota=1e-5))(pts)
    assert np.array_equal(f1, f2)


@pytest.mark.parametrize("name,params", [
    ("exam3", ModelParams(lam=100.0, mu=1.0, iota=0.3)),
    ("exam1a", ModelParams(lam=1.0, mu=1.0, iota=1.0)),
])
def test_body_force_matches_finite_difference_oracle(name, params, rng):
    """FD of the analytic Lame field reproduces the fourth-order force terms."""
    sol = example_solution(name, params)
    force = body_force(sol, params)
    pts = rng.uniform(0.2, 0.8, (40, 2))
    mu, lam, i2 = params.mu, params.lam, params.iota**2

    def lame(p):
        lap = np.stack(
            [sol.derivative(i, 2, 0, p) + sol.derivative(i, 0, 2, p) for i in range(2)],
            axis=1,
        )
        return mu * lap + (lam + mu) * sol.div_gradient(p)

    h = 4e-3
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    # 4th-order accurate second differences of the Lame field
    def second(fn, p, e):
        return (
            -fn(p + 2 * e) + 16 * fn(p + e) - 30 * fn(p) + 16 * fn(p - e) - fn(p - 2 * e)
        ) / (12 * h**2)

    lap_L = second(lame, pts, ex) + second(lame, pts, ey)
    fd = i2 * lap_L - lame(pts)
    exact = force(pts)
    assert np.abs(fd - exact).max() / np.abs(exact).max() < 1e-6


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def test_table_norms_match_reference_values(mesh100):
    params = ModelParams(lam=1e5, mu=1.0, iota=1e-5)
    sol = example_solution("exam3", params)
    norms = continuous_norms(sol, params, mesh100)
    assert norms["lam_div_h2"] == pytest.approx(4.5001e1, rel=1e-3)
    assert norms["f_l2"] == pytest.approx(6.9087e1, rel=1e-3)


def test_norms_of_zero_solution(mesh32):
    zero = ExactSolution("zero", ((), ()))
    params = ModelParams(lam=5.0, mu=1.0, iota=0.5)
    norms = continuous_norms(zero, params, mesh32)
    assert all(v == 0.0 for v in norms.values())


def test_norm_quadrature_saturation(mesh32):
    params = ModelParams(lam=100.0, mu=1.0, iota=1e-5)
    sol = example_solution("exam3", params)
    a = continuous_norms(sol, params, mesh32, degree=8)
    b = continuous_norms(sol, params, mesh32, degree=12)
    for key in a:
        assert abs(a[key] - b[key]) <= 1e-6 * abs(b[key])


def test_norms_mesh_independent(mesh32):
    from sgvem.mesh import generate_structured_triangles

    params = ModelParams(lam=100.0, mu=1.0, iota=1e-3)
    sol = example_solution("exam3", params)
    a = continuous_norms(sol, params, mesh32)
    b = continuous_norms(sol, params, generate_structured_triangles(6))
    for key in a:
        assert abs(a[key] - b[key]) <= 1e-7 * abs(b[key])
