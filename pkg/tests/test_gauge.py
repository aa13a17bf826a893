import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from curvmag.errors import PreconditionError, ValidationError
from curvmag.gauge import (Factorisability, GaugeClass, ScalarField, chain_classify, chain_term, chern_after_step,
                           disc_connection, factorisability, factorisation_step, flux, index_prediction,
                           monopole_connection, torus_connection)
from curvmag.numeric.mesh import ellipsoid_mesh, sphere_mesh
from curvmag.surface import ellipsoid, hyperbolic, sphere, torus

K = ScalarField.curvature


def test_field_arithmetic_exact():
    a = ScalarField(Fraction(1, 2), Fraction(3))
    b = ScalarField.constant(Fraction(1, 3))
    c = a + b - 2 * a
    assert c.curvature_multiple == Fraction(-1, 2) and c.const == Fraction(-8, 3)
    assert (-a).const == -3
    assert ScalarField.from_dict(a.to_dict()).const == a.const


def test_field_validation():
    m = sphere_mesh(1)
    with pytest.raises(ValidationError):
        ScalarField.sampled(np.ones(3), m)
    with pytest.raises(ValidationError):
        ScalarField.sampled(np.full(m.n_vertices, np.nan), m)
    with pytest.raises(ValidationError):
        ScalarField.from_dict({"bogus": 1})


def test_sampled_fields_on_different_meshes_rejected():
    a = ScalarField.sampled(np.ones(sphere_mesh(1).n_vertices), sphere_mesh(1))
    b = ScalarField.sampled(np.ones(sphere_mesh(1).n_vertices), sphere_mesh(1))
    with pytest.raises(ValidationError):
        a + b


def test_factorisability_cases():
    s = sphere()
    assert factorisability(GaugeClass(1, -1)) is Factorisability.ALPHA
    assert factorisability(GaugeClass(1, 1)) is Factorisability.BETA
    assert factorisability(GaugeClass(0, 0)) is Factorisability.BOTH
    assert factorisability(GaugeClass(1, 3)) is Factorisability.NONE
    # K = 1 on the unit sphere, so U = -K is U = -1
    assert factorisability(GaugeClass(1, K(-1)), surface=s) is Factorisability.ALPHA
    assert factorisability(GaugeClass(1, K(-1)), surface=ellipsoid(2, 1, 1)) is Factorisability.NONE


def test_step_precondition():
    with pytest.raises(PreconditionError):
        factorisation_step(GaugeClass(1, 3), "alpha")
    with pytest.raises(ValidationError):
        factorisation_step(GaugeClass(1, -1), "gamma")


def test_step_examples():
    out = factorisation_step(GaugeClass(K(), K(-1)), "alpha")
    assert out.equals(GaugeClass(K(2), K(2)))
    out = factorisation_step(GaugeClass(1, 1), "beta", sphere())
    assert out.equals(GaugeClass(0, 0), sphere())


def _random_tagged(rng):
    B = ScalarField(Fraction(rng.randint(-6, 6), rng.randint(1, 5)), Fraction(rng.randint(-9, 9), rng.randint(1, 7)))
    return B, Fraction(rng.randint(-9, 9), rng.randint(1, 4))


@pytest.mark.parametrize("seed", range(10))
def test_alpha_beta_inverse_tagged(seed):
    rng = random.Random(seed)
    B, s = _random_tagged(rng)
    start = GaugeClass(B, s - B, s)
    back = factorisation_step(factorisation_step(start, "alpha"), "beta")
    assert back.B.curvature_multiple == B.curvature_multiple and back.B.const == B.const
    assert back.equals(start, tol=0)
    start = GaugeClass(B, B + s, s)
    back = factorisation_step(factorisation_step(start, "beta"), "alpha")
    assert back.equals(start, tol=0)


@pytest.mark.parametrize("seed", range(5))
def test_alpha_beta_inverse_sampled(seed):
    m = ellipsoid_mesh(2, 1, 1.5, 2)
    rng = np.random.default_rng(seed)
    B = ScalarField.sampled(rng.normal(size=m.n_vertices), m)
    s = float(rng.normal())
    start = GaugeClass(B, s - B, s)
    back = factorisation_step(factorisation_step(start, "alpha"), "beta")
    assert np.max(np.abs(back.B.on_mesh(m) - B.on_mesh(m))) <= 1e-10
    assert np.max(np.abs(back.U.on_mesh(m) - start.U.on_mesh(m))) <= 1e-10


def test_chain_two_term_ellipsoid():
    rep = chain_classify(GaugeClass(K(), K(-1)), ellipsoid(2, 1, 1, nodes=16))
    assert rep.classification == "two-term" and len(rep.steps) == 2 and rep.verify()


def test_chain_three_term_constant_B():
    e = ellipsoid(2, 1, 1, nodes=16)
    rep = chain_classify(GaugeClass(1, -1), e)
    assert rep.classification == "three-term" and rep.verify(e)
    with pytest.raises(PreconditionError):
        rep.term(0)


@pytest.mark.parametrize("surf", [sphere(nodes=8), torus(nodes=8), hyperbolic(2)], ids=["sphere", "torus", "disc"])
def test_chain_infinite(surf):
    rep = chain_classify(GaugeClass(2, -2), surf, max_terms=6)
    assert rep.classification == "infinite"
    assert rep.verify(surf)


@pytest.mark.parametrize("surf", [sphere(nodes=8), hyperbolic(3)], ids=["sphere", "disc"])
def test_chain_terms_closed_form(surf):
    rep = chain_classify(GaugeClass(Fraction(3, 2), Fraction(-3, 2)), surf, max_terms=12)
    for m in range(11):
        cls = rep.forward(m)
        B, U = rep.term(m)
        assert cls.B.constant_value(surf) == B and cls.U.constant_value(surf) == U


def test_chain_term_formula():
    assert chain_term(Fraction(1), Fraction(1), 3) == (4, 7 + 9)
    assert chain_term(Fraction(1), Fraction(1), 3, "beta") == (-2, -7 + 9)


def test_chain_needs_factorisable_start():
    with pytest.raises(PreconditionError):
        chain_classify(GaugeClass(1, 5), sphere(nodes=8))


def test_flux_exact():
    s = sphere(nodes=8)
    assert flux(ScalarField.constant(1), s).exact == 2
    assert flux(K(), s).integer == 2
    d = hyperbolic(2)
    assert flux(ScalarField.constant(Fraction(5, 2)), d).exact == 5
    assert flux(K(3), d).exact == -6
    assert flux(ScalarField.constant(Fraction(1, 3)), s).integer is None


def test_flux_sampled_and_torus():
    t = torus(nodes=8)
    f = flux(ScalarField.constant(2 / np.pi), t)
    assert f.integer == 4 and f.exact is None
    m = sphere_mesh(3)
    f = flux(ScalarField.sampled(m.curvature, m))
    assert f.integer == 2


def test_flux_shift_matches_chern_bookkeeping():
    for surf, g in ((sphere(nodes=8), 0), (hyperbolic(3), 3)):
        cls = GaugeClass(4, -4)
        after = factorisation_step(cls, "alpha", surf)
        assert flux(after.B, surf).exact == chern_after_step(flux(cls.B, surf).exact, g, "alpha")
        cls = GaugeClass(4, 4)
        after = factorisation_step(cls, "beta", surf)
        assert flux(after.B, surf).exact == chern_after_step(flux(cls.B, surf).exact, g, "beta")


def test_index_prediction():
    assert index_prediction(5, 0) == (6, 0)
    assert index_prediction(4, 2) == (3, 0)
    assert index_prediction(2, 2) is None


def test_connections():
    mc = monopole_connection(2)
    assert mc.check_field(1) and mc.transition_charge == 2
    assert monopole_connection(5).transition_charge == 5
    assert disc_connection(3).check_field(3)
    tc = torus_connection(4, bloch=(7.0, -1.0))
    assert tc.check_field(sp.Integer(2) / sp.pi)
    assert 0 <= tc.bloch_phases[0] < 2 * np.pi
    with pytest.raises(ValidationError):
        type(mc)((sp.Integer(0),), (sp.Integer(1),), 1)
