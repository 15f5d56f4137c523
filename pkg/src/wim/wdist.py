"""Wasserstein distances on finite metric spaces and two closed forms.

The distance is the optimum of the Kantorovich dual LP.  Since every
vertex of the Lipschitz polytope is already enumerated, it is evaluated
as a maximum over those vertices, exactly in rational mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ExactnessError, ShapeError
from .polytope import LipschitzPolytope
from .statespace import as_distribution

ACTIVE_TOL = 1e-12
SQRT_GUARD = 1e-12


@dataclass(frozen=True)
class DistanceCertificate:
    value: float | Fraction
    optimizer: tuple
    optimizer_index: int
    active: tuple[int, ...]

    def to_dict(self) -> dict:
        from .statespace import format_rational

        exact = isinstance(self.value, Fraction)
        fmt = format_rational if exact else float
        return {
            "value": fmt(self.value),
            "optimizer": [fmt(x) for x in self.optimizer],
            "active": list(self.active),
        }


def wasserstein(poly: LipschitzPolytope, mu, nu, tol: float = ACTIVE_TOL) -> DistanceCertificate:
    """``W_d(mu, nu) = max_x <mu - nu, x>`` over the vertices of ``P_d``."""
    n = poly.n
    mu = as_distribution(mu, n)
    nu = as_distribution(nu, n)
    if isinstance(mu, tuple) and isinstance(nu, tuple):
        diff = [a - b for a, b in zip(mu, nu)]
        L = math.lcm(*(x.denominator for x in diff))
        ints = np.array([int(x * L) for x in diff], dtype=object)
        scores = poly.numerators.astype(object) @ ints
        best = max(scores)
        active = tuple(int(k) for k in np.flatnonzero(scores == best))
        value = Fraction(int(best), poly.denominator * L)
        k = active[0]
        return DistanceCertificate(value, poly.vertices[k], k, active)
    diff = np.asarray(mu, dtype=float) - np.asarray(nu, dtype=float)
    scores = poly.as_float @ diff
    k = int(np.argmax(scores))
    value = float(scores[k])
    active = tuple(int(i) for i in np.flatnonzero(scores >= value - tol))
    return DistanceCertificate(value, tuple(float(x) for x in poly.as_float[k]), k, active)


def wasserstein_value(poly: LipschitzPolytope, mu, nu):
    return wasserstein(poly, mu, nu).value


# -- closed forms ---------------------------------------------------------------


@dataclass(frozen=True)
class ClosedForm:
    """Value and solution of a closed-form projection.

    ``case_id`` is the first applicable case (1-based); ``boundary`` is set
    when more than one case applies, and ``ties`` holds any further distinct
    optimal solutions from the other applicable cases.
    """

    value: float
    solution: tuple[float, ...]
    case_id: int
    boundary: bool = False
    ties: tuple[tuple[float, ...], ...] = field(default=())

    def __iter__(self):
        return iter((self.value, self.solution, self.case_id))

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "solution": list(self.solution),
            "case_id": self.case_id,
            "boundary": self.boundary,
            "ties": [list(t) for t in self.ties],
        }


def _ge(a: float, b: float) -> bool:
    return a >= b - SQRT_GUARD


def _float_mu(mu, n, exact):
    if exact:
        raise ExactnessError(
            "closed forms involve square roots and have no exact rational evaluation"
        )
    mu = as_distribution(mu, n, exact=False)
    if len(mu) != n:
        raise ShapeError(f"expected a distribution on {n} states")
    return [float(x) for x in mu]


def _resolve(cases) -> ClosedForm:
    """``cases``: list of (case_id, applies, value_fn, solution_fn)."""
    hits = [(cid, val, sol) for cid, ok, val, sol in cases if ok]
    if not hits:
        raise ArithmeticError("no closed-form case applies")
    cid, val, sol = hits[0]
    value, solution = val(), tuple(sol())
    ties: list[tuple[float, ...]] = []
    for _, v, s in hits[1:]:
        other = tuple(s())
        if abs(v() - value) > 1e-9:
            continue
        if all(max(abs(a - b) for a, b in zip(other, t)) > 1e-9 for t in [solution] + ties):
            ties.append(other)
    return ClosedForm(value, solution, cid, len(hits) > 1, tuple(ties))


def hardy_weinberg_closed_form(mu, exact: bool = False) -> ClosedForm:
    """Distance to the Hardy–Weinberg curve under ``d=(1,1,1)`` or ``d=(1,2,1)``."""
    m1, m2, m3 = _float_mu(mu, 3, exact)
    r1, r3 = math.sqrt(m1), math.sqrt(m3)
    cases = [
        (1, _ge(m1, m3) and _ge(m1, 0.25),
         lambda: abs(2 * r1 - 2 * m1 - m2),
         lambda: (m1, 2 * r1 - 2 * m1, 1 + m1 - 2 * r1)),
        (2, _ge(m3, m1) and _ge(m3, 0.25),
         lambda: abs(2 * r3 - 2 * m3 - m2),
         lambda: (1 + m3 - 2 * r3, 2 * r3 - 2 * m3, m3)),
        (3, _ge(0.25, m1) and _ge(0.25, m3),
         lambda: m2 - 0.5,
         lambda: (0.25, 0.5, 0.25)),
    ]
    return _resolve(cases)


def twobit_closed_form(mu, exact: bool = False) -> ClosedForm:
    """Distance to the 2-bit independence surface under the L0 metric on [2]x[2]."""
    m1, m2, m3, m4 = _float_mu(mu, 4, exact)
    s1, s2, s3, s4 = (math.sqrt(x) for x in (m1, m2, m3, m4))
    det = abs(m1 * m4 - m2 * m3)

    def ratio(den):
        return det / den if den > 0 else 0.0

    cases = [
        (1, _ge(m1, m4) and _ge(s1, m1 + m2) and _ge(s1, m1 + m3),
         lambda: 2 * s1 * (1 - s1) - m2 - m3,
         lambda: (m1, s1 - m1, s1 - m1, 1 - 2 * s1 + m1)),
        (2, _ge(m2, m3) and _ge(s2, m1 + m2) and _ge(s2, m2 + m4),
         lambda: 2 * s2 * (1 - s2) - m1 - m4,
         lambda: (s2 - m2, m2, 1 - 2 * s2 + m2, s2 - m2)),
        (3, _ge(m3, m2) and _ge(s3, m1 + m3) and _ge(s3, m3 + m4),
         lambda: 2 * s3 * (1 - s3) - m1 - m4,
         lambda: (s3 - m3, 1 - 2 * s3 + m3, m3, s3 - m3)),
        (4, _ge(m4, m1) and _ge(s4, m2 + m4) and _ge(s4, m3 + m4),
         lambda: 2 * s4 * (1 - s4) - m2 - m3,
         lambda: (1 - 2 * s4 + m4, s4 - m4, s4 - m4, m4)),
        (5, _ge(m1, m4) and _ge(m2, m3) and _ge(m1 + m2, s1) and _ge(m1 + m2, s2) and m1 + m2 > 0,
         lambda: ratio(m1 + m2),
         lambda: (m1, m2, m1 * (m3 + m4) / (m1 + m2), m2 * (m3 + m4) / (m1 + m2))),
        (6, _ge(m1, m4) and _ge(m3, m2) and _ge(m1 + m3, s1) and _ge(m1 + m3, s3) and m1 + m3 > 0,
         lambda: ratio(m1 + m3),
         lambda: (m1, m1 * (m2 + m4) / (m1 + m3), m3, m3 * (m2 + m4) / (m1 + m3))),
        (7, _ge(m4, m1) and _ge(m2, m3) and _ge(m2 + m4, s4) and _ge(m2 + m4, s2) and m2 + m4 > 0,
         lambda: ratio(m2 + m4),
         lambda: (m2 * (m1 + m3) / (m2 + m4), m2, m4 * (m1 + m3) / (m2 + m4), m4)),
        (8, _ge(m4, m1) and _ge(m3, m2) and _ge(m3 + m4, s4) and _ge(m3 + m4, s3) and m3 + m4 > 0,
         lambda: ratio(m3 + m4),
         lambda: (m3 * (m1 + m2) / (m3 + m4), m4 * (m1 + m2) / (m3 + m4), m3, m4)),
    ]
    return _resolve(cases)
