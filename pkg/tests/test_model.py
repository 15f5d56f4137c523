from fractions import Fraction

import numpy as np
import pytest

from oracles import central_difference
from wim.errors import DomainError, InvalidShapeError, ShapeError, UnsupportedModelError
from wim.model import (
    ModelSpec,
    as_tensor,
    flattening_minors,
    jacobian,
    mle_segre,
    multinomial,
    parameter_grid,
    phi,
    phi_batch,
    project_to_domain,
    sample_simplex,
)

MODELS = ["2,2", "3,3", "2,2,2", "2_2", "2_3", "2_6", "2_2,2", "3_2", "3,2_2"]


def random_theta(model, rng):
    return np.concatenate([rng.dirichlet(np.ones(m))[: m - 1] for m, _ in model.factors])


def test_parse_and_round_trip():
    m = ModelSpec.parse("(2_2, 2)")
    assert m.factors == ((2, 2), (2, 1))
    assert m.sizes == (3, 2) and m.n == 6 and m.param_dim == 2
    assert str(m) == "(2_2,2)"
    assert ModelSpec.from_dict(m.to_dict()) == m
    assert ModelSpec.of((2, 2), 2) == m
    for bad in ("", "1,2", "2_0", "x"):
        with pytest.raises(InvalidShapeError):
            ModelSpec.parse(bad)


def test_multinomial():
    assert multinomial((1, 1)) == 2
    assert multinomial((2, 1, 1)) == 12


def test_hardy_weinberg_parametrization():
    assert phi(ModelSpec.parse("2_2"), [Fraction(1, 3)]) == (Fraction(1, 9), Fraction(4, 9), Fraction(4, 9))


def test_two_bit_parametrization():
    nu = phi(ModelSpec.of(2, 2), [Fraction(1, 2), Fraction(1, 3)])
    assert nu == (Fraction(1, 6), Fraction(1, 3), Fraction(1, 6), Fraction(1, 3))


@pytest.mark.parametrize("name", MODELS)
def test_phi_lands_in_simplex_and_on_model(name):
    model = ModelSpec.parse(name)
    rng = np.random.default_rng(1)
    for _ in range(20):
        theta = random_theta(model, rng)
        nu = phi(model, theta)
        assert nu.min() >= 0 and abs(nu.sum() - 1) < 1e-12
        if model.is_segre:
            assert flattening_minors(model, nu) < 1e-12
        np.testing.assert_allclose(phi_batch(model, theta[None])[0], nu, atol=1e-15)


@pytest.mark.parametrize("name", MODELS)
def test_exact_phi_matches_float(name):
    model = ModelSpec.parse(name)
    theta = [Fraction(1, k + 3) for k in range(model.param_dim)]
    exact = phi(model, theta)
    assert sum(exact) == 1
    np.testing.assert_allclose([float(x) for x in exact], phi(model, [float(t) for t in theta]), atol=1e-15)


@pytest.mark.parametrize("name", MODELS)
def test_jacobian_matches_finite_differences(name):
    model = ModelSpec.parse(name)
    rng = np.random.default_rng(2)
    theta = 0.8 * random_theta(model, rng) + 0.2 / np.array([m for m, _ in model.factors for _ in range(m - 1)])
    J = jacobian(model, theta)
    num = central_difference(lambda t: phi_batch(model, t[None])[0], theta)
    np.testing.assert_allclose(J, num, atol=1e-7)
    # columns sum to zero: phi stays in the simplex
    np.testing.assert_allclose(J.sum(axis=0), 0, atol=1e-12)


def test_exact_jacobian():
    J = jacobian(ModelSpec.parse("2_2"), [Fraction(1, 3)])
    assert list(J[:, 0]) == [Fraction(2, 3), Fraction(2, 3), Fraction(-4, 3)]


def test_domain_checks():
    model = ModelSpec.of(3, 2)
    with pytest.raises(ShapeError):
        phi(model, [0.2, 0.2])
    with pytest.raises(DomainError):
        phi(model, [0.7, 0.7, 0.5])
    t = project_to_domain(model, np.array([0.9, 0.9, 1.4]))
    model.check_theta(t)


def test_flattening_minors_detect_dependence():
    model = ModelSpec.of(2, 2)
    assert flattening_minors(model, [Fraction(1, 2), 0, 0, Fraction(1, 2)]) == Fraction(1, 4)
    assert as_tensor(model, [0.1, 0.2, 0.3, 0.4]).shape == (2, 2)


def test_mle_is_product_of_marginals():
    model = ModelSpec.of(2, 2)
    mle = mle_segre(model, ["1/10", "2/10", "3/10", "4/10"])
    assert mle == (Fraction(3, 25), Fraction(9, 50), Fraction(7, 25), Fraction(21, 50))
    # a point on the model is its own estimate
    nu = phi(ModelSpec.of(3, 3), [0.2, 0.5, 0.1, 0.3])
    np.testing.assert_allclose(mle_segre(ModelSpec.of(3, 3), nu), nu, atol=1e-15)


def test_mle_hardy_weinberg_and_unsupported():
    assert mle_segre(ModelSpec.parse("2_2"), ["1/2", "0", "1/2"]) == (Fraction(1, 4), Fraction(1, 2), Fraction(1, 4))
    with pytest.raises(UnsupportedModelError):
        mle_segre(ModelSpec.parse("2_2,2"), [1 / 6] * 6)


def test_sample_simplex_is_uniform():
    X = sample_simplex(4, 20000, seed=5)
    assert X.shape == (20000, 4)
    np.testing.assert_allclose(X.sum(axis=1), 1)
    np.testing.assert_allclose(X.mean(axis=0), 0.25, atol=0.005)
    # uniform on the 3-simplex: each marginal is Beta(1, 3), variance 3/80
    np.testing.assert_allclose(X.var(axis=0), 3 / 80, atol=0.002)
    assert (sample_simplex(4, 3, seed=5) == X[:3]).all()


def test_parameter_grid():
    g = parameter_grid(ModelSpec.of(3, 2), 5)
    assert g.shape == (15 * 5, 3)
    assert (g[:, :2].sum(axis=1) <= 1 + 1e-12).all()
