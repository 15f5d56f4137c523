"""Projection of a data distribution onto an independence model.

``project_global`` minimizes ``g(theta) = max_k <mu - phi(theta), l_k>``
directly: a grid scan over the parameter polytope seeds Nelder–Mead runs
(plus random multistarts), and the best local solutions are polished by
SLSQP on the epigraph form ``min t  s.t.  t >= <mu - phi(theta), l_k>``.

``project_by_facets`` decomposes the problem over the facets ``F`` of the
Wasserstein ball: ``(mu + C_F) ∩ M`` is tested for feasibility and
``<l_F, phi(theta) - mu>`` minimized on it; the best facet wins.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize, nnls

from . import kernels
from .errors import CapacityError, ShapeError
from .faces import Face, FaceLattice, face_lattice, minimal_face_containing
from .model import ModelSpec, jacobian, parameter_grid, phi_batch, project_to_domain
from .polar import PolarDegrees, polar_degrees
from .polytope import LipschitzPolytope, WassersteinBall, build_ball, lipschitz_polytope
from .statespace import FiniteMetric, as_distribution

MAX_PARAM_DIM = 6
VALUE_TOL = 1e-7
TIE_SEP = 1e-4
ZERO_TOL = 1e-9
CONE_TOL = 1e-8


def default_grid(param_dim: int) -> int:
    if param_dim <= 2:
        return 64
    if param_dim <= 4:
        return 24
    return 10


@dataclass
class ProjectionOptions:
    grid: int | None = None
    multistarts: int = 20
    seed: int = 0
    grid_seeds: int = 8
    polish_top: int = 6
    value_tol: float = VALUE_TOL
    tie_sep: float = TIE_SEP
    face_tol: float = 1e-7


class Problem:
    """Everything about a (model, metric) pair that does not depend on ``mu``.

    Solution types are read off the vertex-facet incidences directly; with
    ``lattice=True`` the full face lattice is built up front and used as a
    lookup table instead (same faces, but capped at ``max_faces``).
    """

    def __init__(self, model: ModelSpec, metric: FiniteMetric, max_faces: int | None = None,
                 lattice: bool = False):
        if model.n != metric.n:
            raise ShapeError(
                f"model {model} has {model.n} states but the metric has {metric.n}"
            )
        if model.param_dim > MAX_PARAM_DIM:
            raise CapacityError(
                f"param_dim {model.param_dim} exceeds the cap of {MAX_PARAM_DIM}"
            )
        self.model = model
        self.metric = metric
        self.poly: LipschitzPolytope = lipschitz_polytope(metric)
        self.ball: WassersteinBall = build_ball(self.poly)
        self.lattice: FaceLattice | None = None
        if lattice:
            self.lattice = face_lattice(self.ball, **({"max_faces": max_faces} if max_faces else {}))
        self.X = np.ascontiguousarray(self.poly.as_float)
        self.tables = model.tables.args()

    @cached_property
    def polar(self) -> PolarDegrees:
        return polar_degrees(self.model)

    @cached_property
    def facet_generators(self) -> list[np.ndarray]:
        """Ball vertices of each facet, as columns."""
        V = self.ball.as_float
        return [V[self.ball.facet_vertex_ids(k)].T.copy() for k in range(self.ball.n_facets)]

    def phi(self, theta) -> np.ndarray:
        return kernels.phi_value(np.ascontiguousarray(theta, dtype=float), *self.tables)

    def value(self, theta, mu) -> tuple[float, int]:
        return kernels.minimax_value(
            np.ascontiguousarray(theta, dtype=float), mu, self.X, *self.tables
        )

    def domain_constraints(self) -> list[dict]:
        out = []
        for (m, _), off in zip(self.model.factors, self.model.free_offsets):
            if m > 2:
                idx = slice(off, off + m - 1)

                def fun(z, idx=idx):
                    return 1.0 - z[idx].sum()

                def jac(z, idx=idx):
                    g = np.zeros_like(z)
                    g[idx] = -1.0
                    return g

                out.append({"type": "ineq", "fun": fun, "jac": jac})
        return out


@dataclass
class ProjectionResult:
    nu_star: np.ndarray
    value: float
    theta_star: np.ndarray
    type_face: Face | None
    type_dim: int | None
    ties: list[np.ndarray] = field(default_factory=list)
    feasible_facet_count: int | None = None
    degree_bound: int = 0
    method: str = "global"
    cross_check: float | None = None

    @property
    def n_optimal(self) -> int:
        """Number of distinct optimal points found (``1 + len(ties)``)."""
        return 1 + len(self.ties)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "value": self.value,
            "nu_star": [float(x) for x in self.nu_star],
            "theta_star": [float(x) for x in self.theta_star],
            "type_dim": self.type_dim,
            "type_face": self.type_face.to_dict() if self.type_face is not None else None,
            "ties": [[float(x) for x in t] for t in self.ties],
            "feasible_facet_count": self.feasible_facet_count,
            "degree_bound": str(self.degree_bound),
            "cross_check_value": self.cross_check,
        }


# -- helpers -------------------------------------------------------------------


def _random_params(model: ModelSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    blocks = []
    for m, _ in model.factors:
        blocks.append(rng.dirichlet(np.ones(m), size=count)[:, : m - 1])
    return np.concatenate(blocks, axis=1)


def _grid_values(problem: Problem, mu: np.ndarray, grid: np.ndarray) -> np.ndarray:
    W = phi_batch(problem.model, grid) - mu  # nu - mu
    return W @ problem.X.T  # scores <l_k, nu - mu>


def _distinct(points: np.ndarray, order, limit: int, sep: float) -> list[int]:
    picked: list[int] = []
    for i in order:
        if all(np.max(np.abs(points[i] - points[j])) > sep for j in picked):
            picked.append(int(i))
            if len(picked) == limit:
                break
    return picked


def _nelder_mead(problem: Problem, mu: np.ndarray, theta0: np.ndarray, step: float):
    model = problem.model
    args = (mu, problem.X) + problem.tables
    f = lambda theta: kernels.clamped_minimax(theta, *args)

    d = len(theta0)
    simplex = np.vstack([theta0] + [theta0 + step * e for e in np.eye(d)])
    res = minimize(
        f, theta0, method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-8, "fatol": 1e-12,
                 "maxiter": 400 * d, "maxfev": 600 * d},
    )
    theta = project_to_domain(model, res.x)
    return theta, problem.value(theta, mu)[0]


def _polish(problem: Problem, mu: np.ndarray, theta0: np.ndarray):
    """SLSQP on the epigraph form, with analytic Jacobians."""
    model, X = problem.model, problem.X
    d = model.param_dim
    t0 = problem.value(theta0, mu)[0]

    def cons(z):
        return z[d] - X @ (mu - problem.phi(z[:d]))

    def cons_jac(z):
        J = jacobian(model, z[:d])
        return np.hstack([X @ J, np.ones((X.shape[0], 1))])

    constraints = [{"type": "ineq", "fun": cons, "jac": cons_jac}]
    for c in problem.domain_constraints():
        constraints.append({"type": "ineq", "fun": c["fun"], "jac": c["jac"]})
    z0 = np.append(theta0, t0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(
            lambda z: z[d], z0, jac=lambda z: np.eye(d + 1)[d], method="SLSQP",
            bounds=[(0.0, 1.0)] * d + [(None, None)], constraints=constraints,
            options={"ftol": 1e-15, "maxiter": 200},
        )
    theta = project_to_domain(model, res.x[:d])
    val = problem.value(theta, mu)[0]
    if val <= t0:
        return theta, val
    return theta0, t0


def _type_of(problem: Problem, mu, nu, value, tol) -> Face | None:
    if value <= ZERO_TOL:
        return None
    w = (nu - mu) / value
    return minimal_face_containing(problem.ball, w, problem.lattice, tol=tol)


def _as_mu(problem: Problem, mu) -> np.ndarray:
    mu = as_distribution(mu, problem.model.n, exact=False)
    return np.ascontiguousarray(mu, dtype=float)


def _finish(problem, mu, candidates, opts, method) -> ProjectionResult:
    """Pick the best candidate, collect ties, and type the solution."""
    candidates = sorted(candidates, key=lambda c: c[1])
    theta, value = candidates[0]
    value = max(value, 0.0)
    nu = problem.phi(theta)
    ties = []
    seen = [nu]
    for th, v in candidates[1:]:
        if v > value + opts.value_tol:
            break
        other = problem.phi(th)
        if all(np.max(np.abs(other - s)) >= opts.tie_sep for s in seen):
            ties.append(other)
            seen.append(other)
    face = _type_of(problem, mu, nu, value, opts.face_tol)
    dim = face.dim if face is not None else None
    return ProjectionResult(
        nu_star=nu, value=float(value), theta_star=theta, type_face=face, type_dim=dim,
        ties=ties, degree_bound=problem.polar.bound_for_type(dim), method=method,
    )


# -- global method -------------------------------------------------------------


def global_candidates(problem: Problem, mu: np.ndarray, opts: ProjectionOptions):
    model = problem.model
    res = opts.grid or default_grid(model.param_dim)
    grid = parameter_grid(model, res)
    vals = (-_grid_values(problem, mu, grid)).max(axis=1)
    step = 1.0 / (res - 1)
    seeds = [grid[i] for i in _distinct(grid, np.argsort(vals), opts.grid_seeds, 1.5 * step)]
    rng = np.random.default_rng(opts.seed)
    seeds += list(_random_params(model, opts.multistarts, rng))
    local = [_nelder_mead(problem, mu, s, step) for s in seeds]
    local.sort(key=lambda c: c[1])
    thetas = np.array([c[0] for c in local])
    picked = _distinct(thetas, range(len(local)), opts.polish_top, 1e-6)
    return [_polish(problem, mu, local[i][0]) for i in picked]


def project_global(problem: Problem, mu, opts: ProjectionOptions | None = None) -> ProjectionResult:
    opts = opts or ProjectionOptions()
    mu = _as_mu(problem, mu)
    return _finish(problem, mu, global_candidates(problem, mu, opts), opts, "global")


# -- cone membership and facet feasibility -------------------------------------


def cone_membership(generators, w, tol: float = CONE_TOL):
    """Nonnegative least-squares fit of ``w`` by the generators.

    ``generators`` is a list of vectors (or an ``(n, g)`` array of columns).
    Returns ``(feasible, lambdas, residual)`` with feasibility meaning
    ``residual <= tol * (1 + |w|)``.
    """
    A = np.asarray(generators, dtype=float)
    w = np.asarray(w, dtype=float)
    if A.ndim == 2 and A.shape[0] != w.shape[0]:
        A = A.T
    if A.size == 0:
        raise ValueError("cone needs at least one generator")
    lam, res = nnls(A, w)
    return bool(res <= tol * (1.0 + np.linalg.norm(w))), lam, float(res)


@dataclass
class FacetSubproblem:
    facet: int
    normal: np.ndarray
    generator_ids: tuple[int, ...]
    feasible: bool = False
    theta: np.ndarray | None = None
    nu: np.ndarray | None = None
    value: float | None = None


def _margin(problem: Problem, k: int):
    """``<l_k - l_j, phi(theta) - mu>`` for all j, and its Jacobian."""
    D = problem.X[k][None, :] - problem.X
    D = np.delete(D, k, axis=0)
    return D


def _land(problem: Problem, mu, k, theta0, objective: bool):
    """SLSQP with the margin constraints of facet ``k``.

    With ``objective`` the facet functional is minimized, otherwise the
    smallest margin is maximized (a feasibility search).
    """
    model = problem.model
    d = model.param_dim
    D = _margin(problem, k)
    lk = problem.X[k]
    if objective:
        fun = lambda th: float(lk @ (problem.phi(th) - mu))
        jac = lambda th: lk @ jacobian(model, th)
        constraints = [{
            "type": "ineq",
            "fun": lambda th: D @ (problem.phi(th) - mu),
            "jac": lambda th: D @ jacobian(model, th),
        }]
        z0, bounds = theta0, [(0.0, 1.0)] * d
        dom = problem.domain_constraints()
    else:
        fun = lambda z: -z[d]
        jac = lambda z: -np.eye(d + 1)[d]
        constraints = [{
            "type": "ineq",
            "fun": lambda z: D @ (problem.phi(z[:d]) - mu) - z[d],
            "jac": lambda z: np.hstack([D @ jacobian(model, z[:d]), -np.ones((len(D), 1))]),
        }]
        start = float((D @ (problem.phi(theta0) - mu)).min()) if len(D) else 0.0
        z0, bounds = np.append(theta0, start), [(0.0, 1.0)] * d + [(None, 1.0)]
        dom = [
            {"type": "ineq", "fun": (lambda z, f=c["fun"]: f(z[:d])),
             "jac": (lambda z, g=c["jac"]: np.append(g(z[:d]), 0.0))}
            for c in problem.domain_constraints()
        ]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(fun, z0, jac=jac, method="SLSQP", bounds=bounds,
                       constraints=constraints + dom, options={"ftol": 1e-14, "maxiter": 300})
    return project_to_domain(model, res.x[:d])


def _certify(problem: Problem, mu, k, theta) -> bool:
    w = problem.phi(theta) - mu
    D = _margin(problem, k)
    if len(D) and (D @ w).min() < -1e-9:
        return False
    return cone_membership(problem.facet_generators[k], w)[0]


def _penalty_search(problem: Problem, mu, k, starts, rhos=(1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8)):
    """Minimize ``<l_F, w> + rho * dist(w, C_F)^2`` over a rho schedule."""
    model = problem.model
    lk = problem.X[k]
    A = problem.facet_generators[k]
    d = model.param_dim

    best = None
    for theta in starts:
        for rho in rhos:
            def obj(th, rho=rho):
                th = project_to_domain(model, th)
                w = problem.phi(th) - mu
                return float(lk @ w) + rho * nnls(A, w)[1] ** 2

            res = minimize(obj, theta, method="L-BFGS-B", bounds=[(0.0, 1.0)] * d,
                           options={"maxiter": 200})
            theta = project_to_domain(model, res.x)
        if best is None or obj(theta) < obj(best):
            best = theta
    return best


def facet_feasibility(problem: Problem, mu, opts: ProjectionOptions | None = None,
                      deep: bool = False):
    """Which facets ``F`` have ``(mu + C_F) ∩ M`` nonempty.

    A grid scan marks every facet that attains the maximum of
    ``<l, phi(theta) - mu>`` at some grid point.  The remaining facets get a
    margin-maximizing search from their best grid points (and, with
    ``deep``, a penalty search as well); a facet is feasible only when the
    final point passes the cone-membership certificate.  Returns the list of
    feasible facets and a witness parameter point for each.
    """
    opts = opts or ProjectionOptions()
    mu = _as_mu(problem, mu)
    model = problem.model
    res = opts.grid or default_grid(model.param_dim)
    grid = parameter_grid(model, res)
    S = _grid_values(problem, mu, grid)
    top = S.max(axis=1, keepdims=True)
    hit = S >= top - 1e-12
    witnesses: dict[int, np.ndarray] = {}
    for k in range(problem.ball.n_facets):
        rows = np.flatnonzero(hit[:, k])
        if len(rows):
            witnesses[k] = grid[rows[np.argmin(top[rows, 0])]]
            continue
        gap = (S[:, k:k + 1] - top)[:, 0]
        starts = [grid[i] for i in _distinct(grid, np.argsort(-gap), 3, 1.5 / (res - 1))]
        for s in starts:
            th = _land(problem, mu, k, s, objective=False)
            if _certify(problem, mu, k, th):
                witnesses[k] = th
                break
        if k not in witnesses and deep:
            th = _penalty_search(problem, mu, k, starts[:1])
            th = _land(problem, mu, k, th, objective=False)
            if _certify(problem, mu, k, th):
                witnesses[k] = th
    return sorted(witnesses), witnesses


def solve_facet(problem: Problem, mu, k: int, starts) -> FacetSubproblem:
    """Minimize ``<l_F, phi(theta) - mu>`` on ``(mu + C_F) ∩ M``."""
    mu = _as_mu(problem, mu)
    sub = FacetSubproblem(k, problem.X[k], tuple(problem.ball.facet_vertex_ids(k)))
    best = None
    for s in starts:
        th = _land(problem, mu, k, s, objective=True)
        if not _certify(problem, mu, k, th):
            # the direct landing failed; approach the cone through the penalty path
            th = _penalty_search(problem, mu, k, [s], rhos=(1e2, 1e4, 1e6, 1e8))
            th = _land(problem, mu, k, th, objective=True)
            if not _certify(problem, mu, k, th):
                continue
        val = float(problem.X[k] @ (problem.phi(th) - mu))
        if best is None or val < best[1]:
            best = (th, val)
    if best is not None:
        sub.feasible = True
        sub.theta = best[0]
        sub.nu = problem.phi(best[0])
        sub.value = best[1]
    return sub


def project_by_facets(problem: Problem, mu, opts: ProjectionOptions | None = None,
                      cross_check: bool = True) -> ProjectionResult:
    opts = opts or ProjectionOptions()
    mu = _as_mu(problem, mu)
    feasible, witnesses = facet_feasibility(problem, mu, opts)
    rng = np.random.default_rng(opts.seed)
    subs = []
    for k in feasible:
        starts = [witnesses[k]] + list(_random_params(problem.model, 2, rng))
        subs.append(solve_facet(problem, mu, k, starts))
    cands = [(s.theta, problem.value(s.theta, mu)[0]) for s in subs if s.feasible]
    if not cands:
        raise ArithmeticError("no facet subproblem produced a certified solution")
    result = _finish(problem, mu, cands, opts, "facets")
    result.feasible_facet_count = len(feasible)
    if cross_check:
        result.cross_check = project_global(problem, mu, opts).value
    return result
