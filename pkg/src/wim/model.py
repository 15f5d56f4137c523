"""Segre–Veronese independence models.

A model ``((m_1)_{d_1}, ..., (m_k)_{d_k})`` is parametrized by one probability
vector per factor.  Parameters are stored as the free coordinates only (the
first ``m_i - 1`` entries of each vector), concatenated factor by factor.
A state of a symmetric factor is an exponent vector ``a`` of degree ``d``
and contributes ``multinomial(d; a) * prod p_j^{a_j}``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import kernels
from .errors import DomainError, InvalidShapeError, ShapeError, UnsupportedModelError
from .statespace import ProductShape, as_distribution, is_exact

DOMAIN_TOL = 1e-12


def multinomial(exps) -> int:
    out = math.factorial(sum(exps))
    for e in exps:
        out //= math.factorial(e)
    return out


@dataclass(frozen=True)
class ModelTables:
    """Flat arrays describing ``phi`` for the compiled kernels."""

    msizes: np.ndarray
    free_off: np.ndarray
    loc_ptr: np.ndarray
    exps: np.ndarray
    coefs: np.ndarray
    state_local: np.ndarray

    def args(self):
        return (self.msizes, self.free_off, self.loc_ptr, self.exps, self.coefs, self.state_local)


@dataclass(frozen=True)
class ModelSpec:
    shape: ProductShape

    @classmethod
    def of(cls, *factors) -> "ModelSpec":
        """``ModelSpec.of(3, 3)`` or ``ModelSpec.of((2, 2), 2)``."""
        out = []
        for f in factors:
            out.append((f, 1) if isinstance(f, int) else tuple(f))
        return cls(ProductShape(tuple(out)))

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        """Parse ``"2_2,2"``, ``"(3,3)"`` or ``"2,2,2"``."""
        body = text.strip().strip("()").replace(" ", "")
        if not body:
            raise InvalidShapeError("empty model description")
        factors = []
        for part in body.split(","):
            m = re.fullmatch(r"(\d+)(?:_(\d+))?", part)
            if m is None:
                raise InvalidShapeError(f"cannot parse model factor {part!r}")
            factors.append((int(m.group(1)), int(m.group(2) or 1)))
        return cls(ProductShape(tuple(factors)))

    @classmethod
    def from_dict(cls, spec: dict) -> "ModelSpec":
        try:
            factors = tuple((int(f["m"]), int(f.get("d", 1))) for f in spec["factors"])
        except (KeyError, TypeError) as exc:
            raise InvalidShapeError(f"bad model spec: {exc}") from None
        return cls(ProductShape(factors))

    def to_dict(self) -> dict:
        return {"factors": [{"m": m, "d": d} for m, d in self.factors]}

    def __str__(self):
        return str(self.shape)

    @property
    def factors(self):
        return self.shape.factors

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.shape.sizes

    @property
    def n(self) -> int:
        return self.shape.n

    @property
    def param_dim(self) -> int:
        return sum(m - 1 for m, _ in self.factors)

    @property
    def is_segre(self) -> bool:
        return all(d == 1 for _, d in self.factors)

    @property
    def free_offsets(self) -> list[int]:
        out, acc = [], 0
        for m, _ in self.factors:
            out.append(acc)
            acc += m - 1
        return out

    @cached_property
    def tables(self) -> ModelTables:
        k = len(self.factors)
        max_m = max(m for m, _ in self.factors)
        loc_ptr = [0]
        exps, coefs = [], []
        for (m, _), states in zip(self.factors, self.shape.factor_states):
            for a in states:
                exps.append(list(a) + [0] * (max_m - m))
                coefs.append(float(multinomial(a)))
            loc_ptr.append(len(coefs))
        i32 = lambda x: np.ascontiguousarray(x, dtype=np.int32)
        return ModelTables(
            msizes=i32([m for m, _ in self.factors]),
            free_off=i32(self.free_offsets),
            loc_ptr=i32(loc_ptr),
            exps=i32(exps).reshape(len(coefs), max_m),
            coefs=np.ascontiguousarray(coefs, dtype=float),
            state_local=i32(self.shape.states).reshape(self.n, k),
        )

    def factor_vectors(self, theta) -> list[list]:
        """Full probability vector of each factor from the free coordinates."""
        out = []
        for (m, _), off in zip(self.factors, self.free_offsets):
            free = list(theta[off : off + m - 1])
            out.append(free + [1 - sum(free)])
        return out

    def check_theta(self, theta, tol: float = DOMAIN_TOL):
        if len(theta) != self.param_dim:
            raise ShapeError(f"expected {self.param_dim} parameters, got {len(theta)}")
        for p in self.factor_vectors(theta):
            if any(x < -tol for x in p):
                raise DomainError(f"parameter point {list(map(float, theta))} leaves the parameter polytope")


def phi(model: ModelSpec, theta, exact: bool | None = None):
    """The monomial parametrization.  Exact for rational ``theta``."""
    theta = list(np.ravel(theta)) if isinstance(theta, np.ndarray) else list(theta)
    if exact is None:
        exact = is_exact(theta)
    if exact:
        theta = [Fraction(x) for x in theta]
        model.check_theta(theta, tol=0)
        locals_ = []
        for (m, _), states, p in zip(model.factors, model.shape.factor_states, model.factor_vectors(theta)):
            locals_.append([multinomial(a) * math.prod((pj**e for pj, e in zip(p, a)), start=Fraction(1)) for a in states])
        return tuple(
            math.prod((locals_[f][s] for f, s in enumerate(state)), start=Fraction(1))
            for state in model.shape.states
        )
    theta = np.ascontiguousarray(theta, dtype=float)
    model.check_theta(theta)
    return kernels.phi_value(theta, *model.tables.args())


def phi_batch(model: ModelSpec, thetas: np.ndarray) -> np.ndarray:
    """``phi`` on each row of an ``(N, param_dim)`` array (no domain checks)."""
    t = model.tables
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    out = np.ones((thetas.shape[0], model.n))
    for f, (m, _) in enumerate(model.factors):
        off = model.free_offsets[f]
        free = thetas[:, off : off + m - 1]
        p = np.concatenate([free, 1.0 - free.sum(axis=1, keepdims=True)], axis=1)
        lo, hi = t.loc_ptr[f], t.loc_ptr[f + 1]
        e = t.exps[lo:hi, :m]
        local = t.coefs[lo:hi] * np.prod(p[:, None, :] ** e[None, :, :], axis=2)
        out *= local[:, t.state_local[:, f]]
    return out


def jacobian(model: ModelSpec, theta) -> np.ndarray:
    """``d phi / d theta`` as an ``(n, param_dim)`` array.

    Rational input gives an object array of Fractions.
    """
    theta = list(np.ravel(theta)) if isinstance(theta, np.ndarray) else list(theta)
    exact = is_exact(theta)
    dtype = object if exact else float
    theta = [Fraction(x) for x in theta] if exact else [float(x) for x in theta]
    one = Fraction(1) if exact else 1.0
    k = len(model.factors)
    loc, dloc = [], []
    for (m, _), states, p in zip(model.factors, model.shape.factor_states, model.factor_vectors(theta)):
        val = np.empty(len(states), dtype=dtype)
        der = np.empty((len(states), m - 1), dtype=dtype)

        def mono(a, skip=None):
            out = one
            for j, (pj, e) in enumerate(zip(p, a)):
                if j == skip:
                    e -= 1
                out = out * pj**e
            return out

        for s, a in enumerate(states):
            c = multinomial(a)
            val[s] = c * mono(a)
            last = a[m - 1] * mono(a, m - 1) if a[m - 1] else 0 * one
            for j in range(m - 1):
                dj = a[j] * mono(a, j) if a[j] else 0 * one
                der[s, j] = c * (dj - last)
        loc.append(val)
        dloc.append(der)
    J = np.zeros((model.n, model.param_dim), dtype=dtype)
    offs = model.free_offsets
    for s, state in enumerate(model.shape.states):
        for f in range(k):
            rest = one
            for g in range(k):
                if g != f:
                    rest = rest * loc[g][state[g]]
            m = model.factors[f][0]
            for j in range(m - 1):
                J[s, offs[f] + j] = rest * dloc[f][state[f], j]
    return J


def as_tensor(model: ModelSpec, nu) -> np.ndarray:
    """Reshape a distribution to the factor-size tensor (object dtype if exact)."""
    nu = list(nu)
    if len(nu) != model.n:
        raise ShapeError(f"expected {model.n} entries, got {len(nu)}")
    dtype = object if is_exact(nu) else float
    return np.array(nu, dtype=dtype).reshape(model.sizes)


def flattening_minors(model: ModelSpec, nu) -> float | Fraction:
    """Largest absolute 2x2 minor over all one-vs-rest flattenings."""
    T = as_tensor(model, nu)
    worst = 0
    for axis, size in enumerate(model.sizes):
        M = np.moveaxis(T, axis, 0).reshape(size, -1)
        for a in range(size):
            for b in range(a + 1, size):
                minors = np.outer(M[a], M[b]) - np.outer(M[b], M[a])
                worst = max(worst, np.max(np.abs(minors)))
    return worst


def mle_segre(model: ModelSpec, mu):
    """Maximum likelihood estimate: the product of the marginals of ``mu``.

    The Hardy–Weinberg model ``(2_2)`` is also accepted, via the allele
    frequency ``p = mu_1 + mu_2 / 2``.
    """
    mu = as_distribution(mu, model.n)
    exact = isinstance(mu, tuple)
    if model.factors == ((2, 2),):
        p = mu[0] + mu[1] / 2
        return phi(model, [p], exact=exact)
    if not model.is_segre:
        raise UnsupportedModelError(
            f"closed-form MLE needs a pure Segre model; {model} has symmetric factors"
        )
    T = as_tensor(model, mu)
    k = len(model.sizes)
    marginals = [
        T.sum(axis=tuple(a for a in range(k) if a != i)) if k > 1 else T for i in range(k)
    ]
    out = marginals[0]
    for m in marginals[1:]:
        out = np.multiply.outer(out, m)
    flat = out.reshape(-1)
    return tuple(Fraction(x) for x in flat) if exact else np.asarray(flat, dtype=float)


def sample_simplex(n: int, count: int, seed: int = 0) -> np.ndarray:
    """``count`` uniform points of the ``(n-1)``-simplex (normalized exponentials)."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    E = rng.standard_exponential((count, n))
    return E / E.sum(axis=1, keepdims=True)


def parameter_grid(model: ModelSpec, per_axis: int) -> np.ndarray:
    """Points of a regular grid on the product of parameter simplices."""
    blocks = []
    for m, _ in model.factors:
        axis = np.linspace(0.0, 1.0, per_axis)
        mesh = np.stack(np.meshgrid(*([axis] * (m - 1)), indexing="ij"), -1).reshape(-1, m - 1)
        blocks.append(mesh[mesh.sum(axis=1) <= 1.0 + 1e-12])
    out = blocks[0]
    for b in blocks[1:]:
        out = np.concatenate(
            [np.repeat(out, len(b), axis=0), np.tile(b, (len(out), 1))], axis=1
        )
    return out


def project_to_domain(model: ModelSpec, theta: np.ndarray) -> np.ndarray:
    """Nearest-ish feasible point: clip to [0,1] and rescale over-full factors."""
    theta = np.clip(np.asarray(theta, dtype=float), 0.0, 1.0)
    for (m, _), off in zip(model.factors, model.free_offsets):
        s = theta[off : off + m - 1].sum()
        if s > 1.0:
            theta[off : off + m - 1] /= s
    return theta
