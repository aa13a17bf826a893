from fractions import Fraction

import numpy as np
import pytest

from curvmag.errors import (DegenerateLevelError, InadmissibleConstantError, IntegralObstructionError,
                            PreconditionError, QuantisationError, ValidationError)
from curvmag.gauge import GaugeClass, ScalarField, factorisation_step, flux
from curvmag.laplace import (admissible_b0, laplace_step, liouville_gauge_reduce, liouville_residual,
                             predicted_dimensions, quasi_cyclic_constant, quasi_cyclic_feasible, run_quasi_cyclic,
                             sinh_poisson_residual, solve_sinh_poisson)
from curvmag.surface import ellipsoid, hyperbolic, sphere, torus

K = ScalarField.curvature


@pytest.fixture(scope="module")
def sph():
    return sphere(nodes=16)


@pytest.fixture(scope="module")
def tor():
    return torus(nodes=16)


def test_constant_class_step(sph):
    c = Fraction(6)
    out = laplace_step(GaugeClass(c / 2, -c / 2), sph)
    assert out.B.curvature_multiple == -1 and out.B.const == c / 2
    assert out.U.curvature_multiple == 1 and out.U.const == -3 * c / 2


def test_sphere_example_flux(sph):
    out = laplace_step(GaugeClass(1, -1), sph)
    assert flux(GaugeClass(1, -1).B, sph).exact == 2
    assert flux(out.B, sph).exact == 0


def test_degenerate_level(sph, tor):
    with pytest.raises(DegenerateLevelError):
        laplace_step(GaugeClass(1, 1), sph)
    m = tor.mesh(8)
    x = m.positions[:, 0]
    B = ScalarField.sampled(np.sin(x), m)
    with pytest.raises(DegenerateLevelError):
        laplace_step(GaugeClass(B, ScalarField.constant(0)), tor)


def test_n1_equivalence_with_beta_step(sph):
    for c in (Fraction(2), Fraction(7, 3), Fraction(10)):
        lap = laplace_step(GaugeClass(c / 2, -c / 2), sph)
        beta = factorisation_step(GaugeClass(c / 2, -c / 2, -c), "beta", sph)
        assert lap.B.curvature_multiple == beta.B.curvature_multiple and lap.B.const == beta.B.const
        assert lap.U.curvature_multiple == beta.U.curvature_multiple and lap.U.const == beta.U.const


def _sampled_class(mesh, seed):
    rng = np.random.default_rng(seed)
    p = mesh.positions
    B = 1.5 + 0.3 * np.sin(p[:, 0] + rng.uniform()) * np.cos(p[:, 1])
    gap = 2 + 0.4 * np.cos(p[:, 0] - p[:, 2] * rng.uniform())
    return GaugeClass(ScalarField.sampled(B, mesh), ScalarField.sampled(B - gap, mesh))


@pytest.mark.parametrize("surf_name,expected", [("sphere", -2), ("torus", 0), ("ellipsoid", -2)])
def test_flux_increment_sampled(surf_name, expected):
    surf = {"sphere": sphere(nodes=8), "torus": torus(nodes=8), "ellipsoid": ellipsoid(2, 1, 1.5, nodes=8)}[surf_name]
    m = surf.mesh(3 if surf_name != "torus" else 24)
    for seed in range(3):
        cls = _sampled_class(m, seed)
        out = laplace_step(cls, surf)
        assert abs(flux(out.B).value - flux(cls.B).value - expected) < 1e-4


def test_flux_increment_genus2_exact():
    d = hyperbolic(2)
    cls = GaugeClass(Fraction(5, 2), Fraction(-5, 2))
    out = laplace_step(cls, d)
    assert flux(out.B, d).exact - flux(cls.B, d).exact == 2


def test_telescoping_identity():
    m = sphere(nodes=8).mesh(3)
    cls = _sampled_class(m, 5)
    out = laplace_step(cls, sphere(nodes=8))
    lhs = m.integrate((out.U + out.B).on_mesh(m))
    rhs = m.integrate((cls.U + cls.B).on_mesh(m)) - 4 * np.pi * flux(cls.B).value
    assert abs(lhs - rhs) < 1e-10


def test_quasi_cyclic_constants():
    assert quasi_cyclic_constant(5, 1, 0, area_over_2pi=Fraction(2)) == 5
    assert quasi_cyclic_constant(5, 2, 0, area_over_2pi=Fraction(2)) == 8
    assert quasi_cyclic_constant(3, 2, 2, area_over_2pi=Fraction(2)) == 8
    for N in range(1, 5):
        for b0 in range(2 * N, 2 * N + 4):
            assert quasi_cyclic_constant(b0, N, 0, area_over_2pi=Fraction(2)) == N * b0 - N * (N - 1)
    A = 7.5
    c = quasi_cyclic_constant(3, 2, 1, A)
    assert c * A == pytest.approx(4 * np.pi * 2 * 3, rel=1e-15)
    with pytest.raises(InadmissibleConstantError):
        quasi_cyclic_constant(1, 3, 0, area_over_2pi=Fraction(2))
    with pytest.raises(ValidationError):
        quasi_cyclic_constant(1, 0, 0, area_over_2pi=Fraction(2))


def test_feasibility():
    assert quasi_cyclic_feasible(4, 2, 0)
    assert not quasi_cyclic_feasible(3, 2, 0)
    assert all(quasi_cyclic_feasible(1, N, 1) for N in range(1, 6))
    assert not quasi_cyclic_feasible(0, 1, 1)
    assert predicted_dimensions(5, 2, 0) == {"level_minus_c": 2, "level_zero": 6}
    assert predicted_dimensions(3, 2, 0) is None


def test_run_n1_sphere_exact(sph):
    chain = run_quasi_cyclic(5, 1, sph, Fraction(5, 2))
    assert chain.c == 5 and chain.quasi_cyclic
    assert chain.end_residuals == (0, 0)
    last = chain.classes[-1]
    assert last.B.curvature_multiple == -1 and last.B.const == Fraction(5, 2)
    assert last.U.curvature_multiple == 1 and last.U.const == Fraction(-15, 2)
    assert chain.flux_increments == [-2]


def test_run_n2_torus_constant(tor):
    c = quasi_cyclic_constant(3, 2, 1, tor.total_area)
    chain = run_quasi_cyclic(3, 2, tor, c / 4)
    assert chain.quasi_cyclic and chain.flux_increments == [0, 0]
    assert max(chain.end_residuals) < 1e-12


def test_run_preconditions(sph):
    with pytest.raises(PreconditionError):
        run_quasi_cyclic(3, 2, sph, Fraction(3, 2))
    with pytest.raises(QuantisationError):
        run_quasi_cyclic(5, 2, sph, Fraction(1))


@pytest.fixture(scope="module")
def sphere_solution():
    s = sphere(nodes=16)
    m = s.mesh(3)
    return s, solve_sinh_poisson(s, 8, mesh=m)


def test_sinh_poisson_sphere(sphere_solution):
    s, st = sphere_solution
    assert st.residual <= 1e-10 and st.b0 == 5
    assert abs(st.flux - 5) < 1e-4
    assert np.max(np.abs(sinh_poisson_residual(st.mesh, st.phi, 8))) <= 1e-10


def test_newton_stable_under_perturbation(sphere_solution):
    s, st = sphere_solution
    rng = np.random.default_rng(4)
    again = solve_sinh_poisson(s, 8, mesh=st.mesh, phi0=st.phi + 1e-3 * rng.standard_normal(st.mesh.n_vertices))
    assert np.max(np.abs(again.phi - st.phi)) < 1e-8


def test_newton_residual_decreases(sphere_solution):
    s, _ = sphere_solution
    m = s.mesh(3)
    st = solve_sinh_poisson(s, 8, mesh=m, phi0=np.log(2.0) + 0.3 * m.positions[:, 2])
    h = st.history
    assert all(b < a for a, b in zip(h[1:], h[2:]))


def test_sphere_n2_chain_from_newton(sphere_solution):
    s, st = sphere_solution
    chain = run_quasi_cyclic(5, 2, s, st.B0, mesh=st.mesh)
    assert chain.quasi_cyclic
    assert max(chain.end_residuals) <= 1e-6
    assert all(abs(d + 2) < 1e-4 for d in chain.flux_increments)


def test_torus_constant_solution(tor):
    c = 2 / np.pi
    m = tor.mesh(16)
    phi0 = np.log(c / 4) + 0.5 * np.random.default_rng(0).uniform(-1, 1, m.n_vertices)
    st = solve_sinh_poisson(tor, c, mesh=m, phi0=phi0)
    assert np.max(np.abs(st.phi - np.log(c / 4))) <= 1e-10
    assert abs(st.flux - c / 4 * tor.total_area / (2 * np.pi)) < 1e-10


def test_integral_obstruction(tor):
    with pytest.raises(IntegralObstructionError):
        admissible_b0(1.0, tor)
    with pytest.raises(IntegralObstructionError):
        solve_sinh_poisson(sphere(nodes=8), 7.3)


def test_liouville_reduction():
    assert liouville_residual("log(2/(1 + x**2 + y**2)**2)", np.random.default_rng(0).uniform(-2, 2, (20, 2))) <= 1e-8
    flat = torus(nodes=4).charts[0]
    phi = np.arange(flat.nodes_x.size, dtype=float)
    assert np.array_equal(liouville_gauge_reduce(phi, flat), phi)
    chart = sphere(nodes=6).charts[0]
    tilde = np.log(2 / (1 + chart.nodes_x ** 2 + chart.nodes_y ** 2) ** 2)
    phi = tilde + 2 * np.log(chart.h(chart.nodes_x, chart.nodes_y))
    assert np.max(np.abs(liouville_gauge_reduce(phi, chart) - tilde)) < 1e-12
