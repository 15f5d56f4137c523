"""Product state spaces and finite metrics on them.

States of a product shape are indexed lexicographically with the first
factor varying slowest.  A symmetric factor ``(m)_d`` contributes the
``C(m+d-1, d)`` exponent vectors of degree ``d`` in ``m`` variables, listed in
colex order, so that ``(2)_2`` gives the three states ``(2,0), (1,1), (0,2)``.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidShapeError, InvalidSizeError, MetricError, ShapeError

DIST_TOL = 1e-12


def parse_rational(value) -> Fraction:
    """Parse ``"p/q"`` strings, ints, Fractions and decimal strings exactly.

    Floats are accepted too but converted through their shortest decimal
    repr, so ``0.9`` becomes ``9/10`` rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _lcm_of_denominators(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, v.denominator)
    return out


# -- product shapes ---------------------------------------------------------


def symmetric_states(m: int, d: int) -> list[tuple[int, ...]]:
    """Exponent vectors of degree ``d`` in ``m`` variables, colex order."""
    states = [
        c for c in itertools.product(range(d + 1), repeat=m) if sum(c) == d
    ]
    states.sort(key=lambda a: tuple(reversed(a)))
    return states


@dataclass(frozen=True)
class ProductShape:
    """Shape ``((m_1)_{d_1}, ..., (m_k)_{d_k})`` of an independence model."""

    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        factors = tuple((int(m), int(d)) for m, d in self.factors)
        if not factors:
            raise InvalidShapeError("a product shape needs at least one factor")
        for m, d in factors:
            if m < 2 or d < 1:
                raise InvalidShapeError(
                    f"factor ({m})_{d} is invalid: need m >= 2 and d >= 1"
                )
        object.__setattr__(self, "factors", factors)

    @property
    def sizes(self) -> tuple[int, ...]:
        """Number of states contributed by each factor."""
        return tuple(math.comb(m + d - 1, d) for m, d in self.factors)

    @property
    def n(self) -> int:
        return math.prod(self.sizes)

    @cached_property
    def factor_states(self) -> tuple[tuple[tuple[int, ...], ...], ...]:
        return tuple(tuple(symmetric_states(m, d)) for m, d in self.factors)

    @cached_property
    def states(self) -> tuple[tuple[int, ...], ...]:
        """Per-state tuples of local indices, first factor slowest."""
        return tuple(itertools.product(*(range(s) for s in self.sizes)))

    def label(self, index: int) -> str:
        return "".join(str(i) for i in self.states[index])

    def __str__(self):
        parts = []
        for m, d in self.factors:
            parts.append(str(m) if d == 1 else f"{m}_{d}")
        return "(" + ",".join(parts) + ")"


def lex_states(sizes: Sequence[int]) -> list[tuple[int, ...]]:
    return list(itertools.product(*(range(s) for s in sizes)))


# -- metrics ------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteMetric:
    """Exact metric on ``[n]``; ``graph_edges`` is set for unit graph metrics."""

    n: int
    d: tuple[tuple[Fraction, ...], ...]
    kind: str = "custom"
    graph_edges: frozenset[tuple[int, int]] | None = None
    sizes: tuple[int, ...] | None = field(default=None, compare=False)

    @cached_property
    def array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.d])

    @cached_property
    def scale(self) -> int:
        """Common denominator of all entries."""
        return _lcm_of_denominators(x for row in self.d for x in row)

    @cached_property
    def integer_array(self) -> np.ndarray:
        """``scale * d`` as an integer array."""
        s = self.scale
        return np.array(
            [[int(x * s) for x in row] for row in self.d], dtype=np.int64
        )

    def pairs(self) -> list[tuple[int, int]]:
        """Pairs whose constraints define the Lipschitz polytope."""
        if self.graph_edges is not None:
            return sorted(self.graph_edges)
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]

    def neighbors(self) -> list[list[int]]:
        if self.graph_edges is None:
            raise ValueError("metric carries no graph structure")
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in sorted(self.graph_edges):
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def is_bipartite(self) -> bool:
        if self.graph_edges is None:
            return False
        adj = self.neighbors()
        color = [-1] * self.n
        for s in range(self.n):
            if color[s] >= 0:
                continue
            color[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for v in adj[u]:
                    if color[v] < 0:
                        color[v] = 1 - color[u]
                        queue.append(v)
                    elif color[v] == color[u]:
                        return False
        return True

    def scaled(self, factor) -> "FiniteMetric":
        factor = parse_rational(factor)
        rows = [[x * factor for x in row] for row in self.d]
        return custom_metric(rows)

    def to_dict(self) -> dict:
        if self.kind == "discrete":
            return {"kind": "discrete", "n": self.n}
        if self.kind in ("L0", "L1") and self.sizes is not None:
            return {"kind": self.kind.lower(), "sizes": list(self.sizes)}
        return {
            "kind": "custom",
            "matrix": [[format_rational(x) for x in row] for row in self.d],
        }


def shortest_path_matrix(n: int, edges: Iterable[tuple[int, int]]) -> np.ndarray:
    """Unit-weight all-pairs shortest paths by breadth-first search."""
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    out = np.full((n, n), -1, dtype=np.int64)
    for s in range(n):
        out[s, s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if out[s, v] < 0:
                    out[s, v] = out[s, u] + 1
                    queue.append(v)
    return out


def check_metric_axioms(rows: Sequence[Sequence[Fraction]]) -> None:
    """Raise :class:`MetricError` unless ``rows`` is an exact metric."""
    n = len(rows)
    if n < 2:
        raise InvalidSizeError("a metric needs at least two points")
    if any(len(r) != n for r in rows):
        raise MetricError("metric matrix must be square")
    for i in range(n):
        if rows[i][i] != 0:
            raise MetricError(f"nonzero diagonal entry at ({i + 1},{i + 1})")
        for j in range(i + 1, n):
            if rows[i][j] != rows[j][i]:
                raise MetricError(f"asymmetric entries at ({i + 1},{j + 1})")
            if rows[i][j] <= 0:
                raise MetricError(
                    f"off-diagonal entry ({i + 1},{j + 1}) must be positive"
                )
    scale = _lcm_of_denominators(x for r in rows for x in r)
    ints = [[int(x * scale) for x in r] for r in rows]
    if max(max(r) for r in ints) < 2**30:
        D = np.array(ints, dtype=np.int64)
        # bad[i, j, k]: d_ij > d_ik + d_kj
        bad = D[:, :, None] > D[:, None, :] + D.T[None, :, :]
        if bad.any():
            i, j, k = (int(t) for t in np.argwhere(bad)[0])
            raise _triangle_error(rows, i, j, k)
        return
    for i, j, k in itertools.product(range(n), repeat=3):
        if ints[i][j] > ints[i][k] + ints[k][j]:
            raise _triangle_error(rows, i, j, k)


def _triangle_error(rows, i, j, k) -> MetricError:
    return MetricError(
        f"triangle inequality fails for triple ({i + 1},{j + 1},{k + 1}): "
        f"d{i + 1}{j + 1} = {rows[i][j]} > "
        f"{rows[i][k]} + {rows[k][j]}",
        triple=(i, j, k),
    )


def _freeze(rows) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(parse_rational(x) for x in r) for r in rows)


def custom_metric(matrix) -> FiniteMetric:
    rows = _freeze(matrix)
    check_metric_axioms(rows)
    return FiniteMetric(n=len(rows), d=rows, kind="custom")


def metric_from_pairs(n: int, values: Sequence) -> FiniteMetric:
    """Build a custom metric from the upper triangle ``(d12, d13, ..., d_{n-1,n})``."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if len(values) != len(pairs):
        raise InvalidShapeError(
            f"expected {len(pairs)} pairwise distances for n={n}, got {len(values)}"
        )
    rows = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), v in zip(pairs, values):
        rows[i][j] = rows[j][i] = parse_rational(v)
    return custom_metric(rows)


def _graph_metric(n, edges, kind, sizes=None) -> FiniteMetric:
    sp = shortest_path_matrix(n, edges)
    rows = tuple(tuple(Fraction(int(x)) for x in r) for r in sp)
    return FiniteMetric(
        n=n, d=rows, kind=kind, graph_edges=frozenset(edges), sizes=sizes
    )


def discrete_metric(n: int) -> FiniteMetric:
    if n < 2:
        raise InvalidSizeError(f"discrete metric needs n >= 2, got {n}")
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return _graph_metric(n, edges, "discrete")


def _check_sizes(sizes) -> tuple[int, ...]:
    sizes = tuple(int(s) for s in sizes)
    if not sizes:
        raise InvalidShapeError("sizes must be a nonempty list")
    if any(s < 2 for s in sizes):
        raise InvalidShapeError(f"every factor size must be >= 2, got {sizes}")
    return sizes


def l0_metric(sizes: Sequence[int]) -> FiniteMetric:
    """Hamming metric on ``[m_1] x ... x [m_k]``: product of complete graphs."""
    sizes = _check_sizes(sizes)
    states = lex_states(sizes)
    edges = [
        (a, b)
        for a in range(len(states))
        for b in range(a + 1, len(states))
        if sum(x != y for x, y in zip(states[a], states[b])) == 1
    ]
    return _graph_metric(len(states), edges, "L0", sizes)


def l1_metric(sizes: Sequence[int]) -> FiniteMetric:
    """Manhattan metric on ``[m_1] x ... x [m_k]``: product of paths."""
    sizes = _check_sizes(sizes)
    states = lex_states(sizes)
    edges = [
        (a, b)
        for a in range(len(states))
        for b in range(a + 1, len(states))
        if sum(abs(x - y) for x, y in zip(states[a], states[b])) == 1
    ]
    return _graph_metric(len(states), edges, "L1", sizes)


def metric_from_dict(spec: dict) -> FiniteMetric:
    kind = str(spec.get("kind", "")).lower()
    if kind == "discrete":
        return discrete_metric(int(spec["n"]))
    if kind == "l0":
        return l0_metric(spec["sizes"])
    if kind == "l1":
        return l1_metric(spec["sizes"])
    if kind == "custom":
        return custom_metric(spec["matrix"])
    raise InvalidShapeError(f"unknown metric kind {spec.get('kind')!r}")


# -- distributions ------------------------------------------------------------


def is_exact(values) -> bool:
    return all(isinstance(v, (Fraction, int, str)) and not isinstance(v, bool)
               for v in values)


def as_distribution(values, n: int | None = None, exact: bool | None = None):
    """Validate a point of the probability simplex.

    Returns a tuple of Fractions in exact mode (all inputs rational, or
    ``exact=True``) and a float array otherwise.
    """
    values = list(np.ravel(values)) if isinstance(values, np.ndarray) else list(values)
    if n is not None and len(values) != n:
        raise ShapeError(f"expected a distribution on {n} states, got {len(values)}")
    if exact is None:
        exact = is_exact(values)
    if exact:
        out = tuple(parse_rational(v) for v in values)
        if any(v < 0 for v in out):
            raise ShapeError("distribution has a negative entry")
        if sum(out) != 1:
            raise ShapeError(f"distribution sums to {sum(out)}, not 1")
        return out
    arr = np.array([float(parse_rational(v)) if isinstance(v, str) else float(v) for v in values],
                   dtype=float)
    if (arr < -DIST_TOL).any():
        raise ShapeError("distribution has a negative entry")
    if abs(arr.sum() - 1.0) > DIST_TOL * max(1, len(arr)):
        raise ShapeError(f"distribution sums to {arr.sum()!r}, not 1")
    return np.clip(arr, 0.0, None)
