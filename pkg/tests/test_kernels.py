import numpy as np
import pytest

from wim import kernels
from wim.model import ModelSpec
from wim.optimize import Problem
from wim.polytope import _bfs_tables, lipschitz_vertices_bipartite, lipschitz_vertices_general
from wim.statespace import discrete_metric, l0_metric, l1_metric

needs_cython = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernels not built")
PY = kernels.get_backend("python")


def test_active_backend_is_registered():
    assert kernels.BACKEND in kernels.BACKENDS
    assert kernels.get_backend() is kernels.BACKENDS[kernels.BACKEND]
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@needs_cython
@pytest.mark.parametrize("metric", [l0_metric([2, 2, 2]), l1_metric([3, 3]), l1_metric([6])])
def test_labelings_parity(metric):
    tables = _bfs_tables(metric)
    a = kernels.get_backend("cython").bipartite_labelings(*tables)
    b = PY.bipartite_labelings(*tables)
    assert (np.asarray(a) == np.asarray(b)).all()


@needs_cython
@pytest.mark.parametrize("metric", [discrete_metric(5), l0_metric([3, 2])])
def test_double_description_parity(metric):
    a = lipschitz_vertices_general(metric, backend="cython")
    b = lipschitz_vertices_general(metric, backend="python")
    assert a.vertex_set() == b.vertex_set()


def test_python_backend_counts():
    assert len(lipschitz_vertices_bipartite(l0_metric([2, 2, 2]), backend="python")) == 38


@needs_cython
@pytest.mark.parametrize("name,metric", [("3,3", l1_metric([3, 3])), ("2_2,2", l1_metric([3, 2])),
                                          ("2_6", discrete_metric(7))])
def test_objective_parity(name, metric):
    prob = Problem(ModelSpec.parse(name), metric, lattice=False)
    cy = kernels.get_backend("cython")
    rng = np.random.default_rng(0)
    mu = rng.dirichlet(np.ones(prob.model.n))
    for _ in range(50):
        theta = rng.random(prob.model.param_dim) * 0.6
        np.testing.assert_allclose(cy.phi_value(theta, *prob.tables), PY.phi_value(theta, *prob.tables),
                                   rtol=0, atol=1e-15)
        va, ka = cy.minimax_value(theta, mu, prob.X, *prob.tables)
        vb, kb = PY.minimax_value(theta, mu, prob.X, *prob.tables)
        assert abs(va - vb) < 1e-14
        wild = theta + rng.normal(0, 0.5, size=theta.shape)
        assert abs(cy.clamped_minimax(wild, mu, prob.X, *prob.tables)
                   - PY.clamped_minimax(wild, mu, prob.X, *prob.tables)) < 1e-14
