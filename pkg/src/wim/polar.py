"""Polar degrees of Segre–Veronese varieties (exact big-integer arithmetic).

``delta[r-1]`` is nonzero only for ``codim <= r <= dim(M*)``; the formula is
evaluated on ``n-1-m <= r <= n-1`` and the upper end of the support is read
off the result.  Binomials outside ``0 <= b <= a`` are zero, and so are terms
with a negative factorial argument.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .model import ModelSpec


def binom(a: int, b: int) -> int:
    if b < 0 or a < 0 or b > a:
        return 0
    return math.comb(a, b)


@dataclass(frozen=True)
class PolarDegrees:
    """``delta[i]`` is ``delta_i`` for ``i = 0..n-2``."""

    model: ModelSpec
    delta: tuple[int, ...]

    @property
    def codim(self) -> int:
        return self.model.n - 1 - self.model.param_dim

    @property
    def nonzero_range(self) -> tuple[int, int]:
        """``(r1, r2)``: ``r1 = codim(M)`` and ``r2 = dim(M*)``."""
        support = [i + 1 for i, x in enumerate(self.delta) if x]
        return (self.codim, max(support))

    @property
    def shifted(self) -> list[int]:
        """Rows of the published tables: entry 0 is ``delta_{codim-1}``."""
        r1, r2 = self.nonzero_range
        return list(self.delta[r1 - 1 : r2])

    @property
    def degree(self) -> int:
        return self.delta[self.codim - 1]

    @property
    def dual_degree(self) -> int:
        return self.delta[self.nonzero_range[1] - 1]

    def bound_for_type(self, type_dim: int | None) -> int:
        """Upper bound on the algebraic degree of a solution of this type.

        Calibrated on the (3,3) examples: a type of dimension ``t`` maps to
        ``delta_t`` (3 -> 6, 4 -> 12).
        """
        if type_dim is None or not 0 <= type_dim < len(self.delta):
            return 0
        return self.delta[type_dim]


def _delta_general(n: int, mdim: int, r: int, inner) -> int:
    total = Fraction(0)
    for s in range(0, mdim - n + 1 + r + 1):
        b = binom(mdim - s + 1, n - r)
        if b == 0:
            continue
        total += (-1) ** s * b * math.factorial(mdim - s) * inner(s)
    if total.denominator != 1:
        raise ArithmeticError(f"non-integral polar degree {total}")
    return int(total)


def polar_degrees(model: ModelSpec) -> PolarDegrees:
    n, mdim = model.n, model.param_dim
    factors = model.factors

    def term(m, d, i):
        if m - 1 - i < 0:
            return Fraction(0)
        return Fraction(binom(m, i) * d ** (m - 1 - i), math.factorial(m - 1 - i))

    inner_cache: dict[int, Fraction] = {}

    def inner(s):
        if s not in inner_cache:
            acc = Fraction(0)
            for combo in itertools.product(*(range(min(s, m - 1) + 1) for m, _ in factors)):
                if sum(combo) != s:
                    continue
                acc += math.prod((term(m, d, i) for (m, d), i in zip(factors, combo)), start=Fraction(1))
            inner_cache[s] = acc
        return inner_cache[s]

    delta = [0] * (n - 1)
    for r in range(max(1, n - 1 - mdim), n):
        delta[r - 1] = _delta_general(n, mdim, r, inner)
    return PolarDegrees(model, tuple(delta))


def polar_degrees_kbit(k: int) -> PolarDegrees:
    """Specialization to the ``k``-bit model ``(2, ..., 2)``."""
    if k < 2:
        raise ValueError("k-bit formula needs k >= 2")
    n = 2**k
    delta = [0] * (n - 1)
    for r in range(n - 1 - k, n):
        total = 0
        for s in range(0, k - n + 1 + r + 1):
            total += (-1) ** s * binom(k + 1 - s, n - r) * math.factorial(k - s) * 2**s * binom(k, s)
        delta[r - 1] = total
    return PolarDegrees(ModelSpec.of(*([2] * k)), tuple(delta))


def polar_degrees_matrix(m1: int, m2: int) -> PolarDegrees:
    """Specialization to ``m1 x m2`` matrices of rank one."""
    if m1 < 2 or m2 < 2:
        raise ValueError("matrix formula needs m1, m2 >= 2")
    n, mdim = m1 * m2, m1 + m2 - 2

    def part(m, i):
        if m - 1 - i < 0:
            return Fraction(0)
        return Fraction(binom(m, i), math.factorial(m - 1 - i))

    def inner(s):
        return sum((part(m1, i) * part(m2, s - i) for i in range(s + 1)), Fraction(0))

    delta = [0] * (n - 1)
    for r in range(n - 1 - mdim, n):
        delta[r - 1] = _delta_general(n, mdim, r, inner)
    return PolarDegrees(ModelSpec.of(m1, m2), tuple(delta))
