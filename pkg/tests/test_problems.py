import numpy as np
import pytest
import sympy

from lsqd.geometry import locate_boundary_point, outward_normal
from lsqd.problems import exp_xy, manufacture, polynomial, preset, preset_names, sincos7_1d

X, Y = sympy.symbols("x y")


def sympy_fields(expr, vars_):
    """Independent oracle: value, gradient and Laplacian by symbolic differentiation."""
    grads = [sympy.diff(expr, v) for v in vars_]
    lap = sum(sympy.diff(expr, v, 2) for v in vars_)
    lam = lambda e: sympy.lambdify(vars_, e, "numpy")
    return lam(expr), [lam(g) for g in grads], lam(lap)


def test_exp_xy_forcing():
    prob = manufacture(exp_xy(), 1.0, 1.0, "dirichlet")
    pts = np.random.default_rng(0).uniform(-1, 1, (50, 2))
    np.testing.assert_allclose(prob.f(pts), -np.exp(pts.sum(axis=1)), rtol=1e-14)


def test_sincos_forcing_poisson():
    prob = manufacture(sincos7_1d(), 0.0, 1.0, "dirichlet")
    x = np.linspace(0, 1, 33)[:, None]
    u = np.sin(7 * x[:, 0]) + np.cos(7 * x[:, 0])
    np.testing.assert_allclose(prob.f(x), 49 * u, rtol=1e-13, atol=1e-12)


def test_helmholtz_preset_forcing():
    p = preset("helmholtz/octofoil/uniform")
    assert (p.problem.a, p.problem.mu) == (1.0, -100.0)
    pts = np.random.default_rng(1).uniform(-0.5, 0.5, (20, 2))
    np.testing.assert_allclose(p.problem.f(pts), 201.0 * np.exp(pts.sum(axis=1)), rtol=1e-13)


def test_preset_examples():
    p = preset("dirichlet/octofoil/adaptive")
    assert p.domain.kind == "octofoil" and p.grid.mode == "random"
    x = np.array([0.3, 0.2])
    assert (p.problem.beta_at(x), p.problem.gamma_at(x)) == (1.0, 0.0)
    p = preset("neumann/octofoil/uniform/ratio1000")
    assert (p.problem.a, p.problem.mu) == (1000.0, 1.0)
    assert (p.problem.beta_at(x), p.problem.gamma_at(x)) == (0.0, 1.0)
    p = preset("degenerate/robin")
    assert (p.problem.beta_at(x), p.problem.gamma_at(x)) == (1.0, -1.0)
    assert (p.problem.beta_at(-x), p.problem.gamma_at(-x)) == (1.0, 0.0)
    p = preset("demo1d")
    assert p.P_range == (2, 3, 4) and p.splits_range == tuple(range(6))
    assert p.problem.a == 0.0


@pytest.mark.parametrize("bad", ["nope", "dirichlet/cube/uniform", "dirichlet/square/uniform/ratioX", "a/b"])
def test_unknown_preset(bad):
    with pytest.raises(ValueError):
        preset(bad)


def test_twelve_classical_configurations():
    names = preset_names()
    classical = [n for n in names if n.split("/")[0] in ("dirichlet", "neumann", "mixed") and "ratio" not in n]
    assert len(classical) == 12
    for n in names:
        preset(n)


@pytest.mark.parametrize("name", [n for n in preset_names() if n != "demo1d"])
def test_presets_satisfy_pde_and_bc(name):
    p = preset(name)
    prob = p.problem
    u, grad, lap = sympy_fields(sympy.exp(X + Y), (X, Y))
    rng = np.random.default_rng(len(name))
    pts = rng.uniform(-1, 1, (1000, 2))
    x, y = pts[:, 0], pts[:, 1]
    res = prob.f(pts) - (prob.a * u(x, y) - prob.mu * lap(x, y))
    assert np.max(np.abs(res)) < 1e-10
    # boundary points along random rays
    dom = p.domain
    for th in rng.uniform(0, 2 * np.pi, 40):
        d = np.array([np.cos(th), np.sin(th)])
        xb = locate_boundary_point(dom, 0.05 * d, 1.5 * d if dom.kind == "octofoil" else 0.999 * d / np.max(np.abs(d)) + 0.01 * d)
        n = outward_normal(dom, xb)
        beta, gamma = prob.beta_at(xb), prob.gamma_at(xb)
        expect = beta * u(*xb) + gamma * (grad[0](*xb) * n[0] + grad[1](*xb) * n[1])
        assert abs(prob.g(xb, n) - expect) < 1e-10


def test_demo1d_satisfies_equation():
    prob = preset("demo1d").problem
    u, grad, lap = sympy_fields(sympy.sin(7 * X) + sympy.cos(7 * X), (X,))
    x = np.random.default_rng(2).uniform(0, 1, 1000)
    assert np.max(np.abs(prob.f(x[:, None]) - (-lap(x)))) < 1e-10
    for xb, n in ((0.0, -1.0), (1.0, 1.0)):
        assert abs(prob.g(np.array([xb]), np.array([n])) - u(xb)) < 1e-12


@pytest.mark.parametrize("P", [2, 3, 5])
def test_polynomial_family_against_sympy(P):
    exact = polynomial(P, seed=P)
    from lsqd.basis import exponents

    coef = np.random.default_rng(P).uniform(-1, 1, len(exponents(P, 2)))
    expr = sum(float(c) * X ** int(e[0]) * Y ** int(e[1]) for c, e in zip(coef, exponents(P, 2)))
    u, grad, lap = sympy_fields(expr, (X, Y))
    pts = np.random.default_rng(9).uniform(-1, 1, (200, 2))
    x, y = pts[:, 0], pts[:, 1]
    np.testing.assert_allclose(exact.value(pts), u(x, y), atol=1e-12)
    np.testing.assert_allclose(exact.gradient(pts)[:, 0], grad[0](x, y) * np.ones_like(x), atol=1e-12)
    np.testing.assert_allclose(exact.gradient(pts)[:, 1], grad[1](x, y) * np.ones_like(x), atol=1e-12)
    np.testing.assert_allclose(exact.laplacian(pts), lap(x, y) * np.ones_like(x), atol=1e-11)
