import math

import numpy as np
import pytest

from oracles import curve_oracle, minimax_values
from wim.errors import CapacityError, ShapeError
from wim.model import ModelSpec, mle_segre, parameter_grid, phi_batch
from wim.optimize import (
    Problem,
    ProjectionOptions,
    cone_membership,
    facet_feasibility,
    project_by_facets,
    project_global,
    solve_facet,
)
from wim.statespace import discrete_metric, l0_metric, l1_metric
from wim.wdist import twobit_closed_form, wasserstein


@pytest.fixture(scope="module")
def twobit():
    return Problem(ModelSpec.of(2, 2), l0_metric([2, 2]))


@pytest.fixture(scope="module")
def hw3():
    return Problem(ModelSpec.parse("2_3"), l1_metric([4]))


@pytest.fixture(scope="module")
def hw2bit():
    return Problem(ModelSpec.parse("2_2,2"), l1_metric([3, 2]))


def test_problem_validation():
    with pytest.raises(ShapeError):
        Problem(ModelSpec.of(2, 2), discrete_metric(3))
    with pytest.raises(CapacityError):
        Problem(ModelSpec.of(2, 2, 2, 2, 2, 2, 2), l0_metric([2] * 7), lattice=False)


# -- cone membership ------------------------------------------------------------


def test_cone_membership_basic():
    gens = [[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]]
    ok, lam, res = cone_membership(gens, [1.0, 0.0, -1.0])
    assert ok and np.allclose(lam, [1, 1]) and res < 1e-12
    ok, lam, res = cone_membership(gens, [-1.0, 0.0, 1.0])
    assert not ok and res > 0.5
    with pytest.raises(ValueError):
        cone_membership(np.zeros((3, 0)), [0.0, 0.0, 0.0])


def test_edge_cone_matches_sign_conditions():
    # the cone spanned by e2 - e1 and e3 - e1 holds nu* - mu of the corner case
    # exactly when sqrt(mu4) - mu4 - mu2 >= 0 and sqrt(mu4) - mu4 - mu3 >= 0
    gens = [[-1.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 1.0, 0.0]]
    rng = np.random.default_rng(0)
    mus = [np.array([0.1, 0.2, 0.3, 0.4])] + list(rng.dirichlet(np.ones(4), size=300))
    for mu in mus:
        m1, m2, m3, m4 = mu
        s4 = math.sqrt(m4)
        nu = np.array([1 - 2 * s4 + m4, s4 - m4, s4 - m4, m4])
        a, b = s4 - m4 - m2, s4 - m4 - m3
        if min(abs(a), abs(b)) < 1e-9:
            continue
        ok, _, _ = cone_membership(gens, nu - mu)
        assert ok == (a >= 0 and b >= 0)
    assert not cone_membership(gens, nu_of(mus[0]) - mus[0])[0]


def nu_of(mu):
    s4 = math.sqrt(mu[3])
    return np.array([1 - 2 * s4 + mu[3], s4 - mu[3], s4 - mu[3], mu[3]])


# -- global projection -------------------------------------------------------------


def test_global_matches_closed_form(twobit):
    for mu in np.random.default_rng(1).dirichlet(np.ones(4), size=20):
        res = project_global(twobit, mu)
        assert abs(res.value - twobit_closed_form(mu).value) < 1e-8


def test_global_beats_every_grid_point(hw2bit):
    grid = parameter_grid(hw2bit.model, 120)
    nus = phi_batch(hw2bit.model, grid)
    for mu in np.random.default_rng(2).dirichlet(np.ones(6), size=5):
        res = project_global(hw2bit, mu)
        assert res.value <= minimax_values(hw2bit.X, mu, nus).min() + 1e-12


def test_global_matches_curve_oracle(hw3):
    curve = lambda ps: phi_batch(hw3.model, ps[:, None])
    for mu in np.random.default_rng(3).dirichlet(np.ones(4), size=10):
        res = project_global(hw3, mu)
        ref, _ = curve_oracle(hw3.X, mu, curve)
        assert abs(res.value - ref) < 1e-8


def test_result_consistency(hw2bit):
    mu = np.random.default_rng(4).dirichlet(np.ones(6))
    res = project_global(hw2bit, mu)
    assert np.allclose(res.nu_star, hw2bit.phi(res.theta_star))
    assert abs(res.value - wasserstein(hw2bit.poly, mu, res.nu_star).value) < 1e-12
    # nu* - mu sits on the boundary of the scaled ball inside the type cone
    w = (res.nu_star - mu) / res.value
    assert abs(hw2bit.ball.norm(w) - 1) < 1e-7
    ok, _, _ = cone_membership(res.type_face.generators_float, w, tol=1e-6)
    assert ok
    assert res.degree_bound == hw2bit.polar.bound_for_type(res.type_dim)
    d = res.to_dict()
    assert d["type_dim"] == res.type_dim and len(d["nu_star"]) == 6


def test_mle_is_an_upper_bound(twobit):
    P = twobit.poly
    for mu in np.random.default_rng(5).dirichlet(np.ones(4), size=10):
        res = project_global(twobit, mu)
        assert res.value <= wasserstein(P, mu, mle_segre(twobit.model, mu)).value + 1e-12


def test_point_on_model_has_value_zero(twobit):
    res = project_global(twobit, [0.06, 0.14, 0.24, 0.56])
    assert res.value < 1e-9 and res.type_dim is None


DIHEDRAL = [(0, 1, 2, 3), (1, 0, 3, 2), (2, 3, 0, 1), (0, 2, 1, 3),
            (3, 2, 1, 0), (3, 1, 2, 0), (1, 3, 0, 2), (2, 0, 3, 1)]


def test_dihedral_equivariance(twobit):
    rng = np.random.default_rng(6)
    for mu in rng.dirichlet(np.ones(4), size=5):
        base = project_global(twobit, mu)
        for g in DIHEDRAL[1:]:
            res = project_global(twobit, mu[list(g)])
            assert abs(res.value - base.value) < 1e-9
            assert res.type_dim == base.type_dim


@pytest.mark.parametrize("mu", [[0.3, 0.25, 0.25, 0.2], [0.2, 0.3, 0.3, 0.2]])
def test_wall_reports_ties(twobit, mu):
    res = project_global(twobit, mu)
    assert res.n_optimal == 2
    cf = twobit_closed_form(mu)
    found = sorted([tuple(np.round(res.nu_star, 8)), *(tuple(np.round(t, 8)) for t in res.ties)])
    expected = sorted([tuple(np.round(cf.solution, 8)), *(tuple(np.round(t, 8)) for t in cf.ties)])
    assert np.allclose(found, expected, atol=1e-6)


def test_hardy_weinberg_wall():
    prob = Problem(ModelSpec.parse("2_2"), discrete_metric(3))
    res = project_global(prob, [0.4, 0.2, 0.4])
    assert res.n_optimal == 2
    res = project_global(prob, [0.2, 0.6, 0.2])
    assert res.n_optimal == 1 and res.type_dim == 1
    assert np.allclose(res.nu_star, [0.25, 0.5, 0.25], atol=1e-6)


def test_seed_reproducibility(hw2bit):
    mu = np.random.default_rng(7).dirichlet(np.ones(6))
    a = project_global(hw2bit, mu, ProjectionOptions(seed=3))
    b = project_global(hw2bit, mu, ProjectionOptions(seed=3))
    assert a.value == b.value and (a.theta_star == b.theta_star).all()


# -- facet subproblems ---------------------------------------------------------------


def test_facet_feasibility_witnesses(hw2bit):
    mu = np.random.default_rng(8).dirichlet(np.ones(6))
    feasible, witnesses = facet_feasibility(hw2bit, mu)
    assert feasible == sorted(witnesses)
    for k in feasible:
        w = hw2bit.phi(witnesses[k]) - mu
        # the facet attains the dual maximum at the witness
        scores = hw2bit.X @ w
        assert scores[k] >= scores.max() - 1e-9


def test_two_bit_has_five_feasible_facets(twobit):
    for mu in np.random.default_rng(9).dirichlet(np.ones(4), size=5):
        feasible, _ = facet_feasibility(twobit, mu)
        assert len(feasible) == 5


def test_solve_facet_is_certified(twobit):
    mu = np.random.default_rng(10).dirichlet(np.ones(4))
    feasible, witnesses = facet_feasibility(twobit, mu)
    k = feasible[0]
    sub = solve_facet(twobit, mu, k, [witnesses[k]])
    assert sub.feasible
    w = sub.nu - mu
    ok, _, _ = cone_membership(twobit.facet_generators[k], w, tol=1e-6)
    assert ok
    assert abs(sub.value - twobit.X[k] @ w) < 1e-12


@pytest.mark.parametrize("fixture", ["twobit", "hw3", "hw2bit"])
def test_facets_agree_with_global(fixture, request):
    prob = request.getfixturevalue(fixture)
    for mu in np.random.default_rng(11).dirichlet(np.ones(prob.model.n), size=5):
        res = project_by_facets(prob, mu)
        assert res.method == "facets"
        assert abs(res.value - res.cross_check) < 1e-6


def test_types_agree_with_and_without_lattice():
    model, metric = ModelSpec.parse("2_2,2"), l1_metric([3, 2])
    plain, cached = Problem(model, metric), Problem(model, metric, lattice=True)
    assert plain.lattice is None and cached.lattice is not None
    for mu in np.random.default_rng(12).dirichlet(np.ones(6), size=10):
        a, b = project_global(plain, mu), project_global(cached, mu)
        assert a.type_dim == b.type_dim
        assert a.type_face.vertex_ids == b.type_face.vertex_ids
        assert a.type_face.facet_ids == b.type_face.facet_ids
