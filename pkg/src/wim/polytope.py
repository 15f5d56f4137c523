"""Lipschitz polytopes and their dual Wasserstein balls.

Points of the quotient ``R^n / R1`` are stored in canonical form (minimum
coordinate zero).  Vertex sets are kept as an integer numerator array with a
single common denominator, which keeps every incidence test exact while
still allowing float views for the optimizer.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import kernels
from .errors import CapacityError, WrongMethodError
from .statespace import FiniteMetric

GENERAL_MAX_N = 10


def canonical(coords) -> tuple[Fraction, ...]:
    """Canonical representative of a quotient point: minimum coordinate 0."""
    coords = [Fraction(c) for c in coords]
    low = min(coords)
    return tuple(c - low for c in coords)


def exact_rank(rows) -> int:
    """Rank over Q of a list of rational vectors (fraction-free elimination)."""
    basis: list[list[int]] = []
    pivots: list[int] = []
    for row in rows:
        row = [Fraction(x) for x in row]
        den = math.lcm(*(x.denominator for x in row)) if row else 1
        v = [int(x * den) for x in row]
        for b, p in zip(basis, pivots):
            if v[p]:
                f, g = b[p], v[p]
                v = [f * vi - g * bi for vi, bi in zip(v, b)]
        nz = next((i for i, x in enumerate(v) if x), None)
        if nz is None:
            continue
        g = math.gcd(*v)
        basis.append([x // g for x in v])
        pivots.append(nz)
    return len(basis)


@dataclass(frozen=True, eq=False)
class LipschitzPolytope:
    """Vertices of ``P_d`` as ``numerators / denominator`` (canonical rows)."""

    metric: FiniteMetric
    numerators: np.ndarray
    denominator: int = 1
    method: str = ""

    @property
    def n(self) -> int:
        return self.metric.n

    def __len__(self) -> int:
        return self.numerators.shape[0]

    @cached_property
    def vertices(self) -> list[tuple[Fraction, ...]]:
        den = self.denominator
        return [tuple(Fraction(int(x), den) for x in row) for row in self.numerators]

    @cached_property
    def as_float(self) -> np.ndarray:
        return np.ascontiguousarray(self.numerators, dtype=float) / self.denominator

    def vertex_set(self) -> set[tuple[Fraction, ...]]:
        return set(self.vertices)

    @cached_property
    def facet_pairs(self) -> tuple[tuple[int, int, int], ...]:
        """Facet-defining halfspaces ``sign * (x_i - x_j) <= d_ij``."""
        n = self.n
        N = self.numerators
        den = self.denominator
        scale = self.metric.scale
        dd = self.metric.integer_array
        out = []
        for i, j in self.metric.pairs():
            for sign in (1, -1):
                tight = scale * sign * (N[:, i] - N[:, j]) == den * dd[i, j]
                pts = self.as_float[tight]
                if len(pts) < n - 1:
                    continue
                diffs = np.vstack([pts[1:] - pts[0], np.ones(n)])
                if np.linalg.matrix_rank(diffs) - 1 == n - 2:
                    out.append((i, j, sign))
        return tuple(out)

    def check_feasible(self) -> bool:
        """Every vertex satisfies every pairwise constraint (exact)."""
        N = self.numerators.astype(object)
        dd = self.metric.integer_array
        scale, den = self.metric.scale, self.denominator
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if (abs(scale * (N[:, i] - N[:, j])) > den * int(dd[i, j])).any():
                    return False
        return True


def _finish(metric, rows, den, method) -> LipschitzPolytope:
    arr = np.asarray(rows)
    arr = arr - arr.min(axis=1, keepdims=True)
    order = np.lexsort(arr.T[::-1])
    arr = arr[order]
    if arr.dtype != object:
        arr = arr.astype(np.int64)
    return LipschitzPolytope(metric, np.ascontiguousarray(arr), den, method)


def lipschitz_vertices_discrete(n_or_metric) -> LipschitzPolytope:
    """Binary vectors ``e_I`` for every proper nonempty ``I``; ``2^n - 2`` of them."""
    from .statespace import discrete_metric

    if isinstance(n_or_metric, FiniteMetric):
        metric = n_or_metric
        if metric.kind != "discrete":
            raise WrongMethodError("lipschitz_vertices_discrete needs the discrete metric")
    else:
        metric = discrete_metric(int(n_or_metric))
    n = metric.n
    rows = [bits for bits in itertools.product((0, 1), repeat=n) if 0 < sum(bits) < n]
    return _finish(metric, rows, 1, "discrete")


def _bfs_tables(metric: FiniteMetric):
    adj = metric.neighbors()
    n = metric.n
    order, parent = [0], [-1] * n
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                order.append(v)
                queue.append(v)
    if len(order) != n:
        raise WrongMethodError("graph is disconnected")
    rank = {v: p for p, v in enumerate(order)}
    back_ptr, back_idx = [0], []
    for p, v in enumerate(order):
        back_idx.extend(sorted(u for u in adj[v] if rank[u] < p))
        back_ptr.append(len(back_idx))
    as32 = lambda xs: np.asarray(xs, dtype=np.int32)
    return as32(order), as32(parent), as32(back_ptr), as32(back_idx)


def lipschitz_vertices_bipartite(metric: FiniteMetric, backend: str | None = None) -> LipschitzPolytope:
    """Integer labelings with ``|x_i - x_j| = 1`` on every edge of a bipartite graph."""
    if metric.graph_edges is None:
        raise WrongMethodError("metric has no graph structure; use lipschitz_vertices_general")
    if not metric.is_bipartite():
        raise WrongMethodError(
            "graph is not bipartite; use lipschitz_vertices_general instead"
        )
    tables = _bfs_tables(metric)
    labels = kernels.get_backend(backend).bipartite_labelings(*tables)
    return _finish(metric, labels, 1, "bipartite")


def lipschitz_vertices_general(metric: FiniteMetric, max_n: int = GENERAL_MAX_N,
                               backend: str | None = None) -> LipschitzPolytope:
    """Exact double description of ``P_d`` starting from a bounding box.

    Works in the chart ``x_0 = 0`` with homogeneous integer coordinates
    ``(t, x)`` on the metric scaled to integers.  Halfspaces are inserted
    one at a time, always picking the one that cuts off the most current
    vertices; new vertices come from combinatorially adjacent pairs.
    """
    n = metric.n
    if n > max_n:
        raise CapacityError(f"general vertex enumeration is capped at n <= {max_n}, got n={n}")
    adjacent = kernels.get_backend(backend).dd_adjacent_pairs
    D = n - 1
    dd = metric.integer_array
    # halfspaces a.x <= b over full-length x (x_0 pinned to 0)
    A_rows, b_vals = [], []
    for j in range(1, n):
        for sign in (1, -1):
            a = [0] * n
            a[j] = sign
            A_rows.append(a)
            b_vals.append(int(dd[0, j]))
    n_box = len(A_rows)
    for i, j in metric.pairs():
        if i == 0:
            continue
        for sign in (1, -1):
            a = [0] * n
            a[i], a[j] = sign, -sign
            A_rows.append(a)
            b_vals.append(int(dd[i, j]))
    A = np.array(A_rows, dtype=np.int64)
    b = np.array(b_vals, dtype=np.int64)
    H = len(A_rows)
    words = (H + 63) // 64

    # homogeneous vertices: column 0 is t, columns 1.. are x
    verts = []
    inc = []
    for signs in itertools.product((1, -1), repeat=D):
        x = [0] + [s * int(dd[0, j + 1]) for j, s in enumerate(signs)]
        verts.append([1] + x)
        bits = 0
        for j, s in enumerate(signs):
            bits |= 1 << (2 * j + (0 if s == 1 else 1))
        inc.append(bits)
    V = np.array(verts, dtype=np.int64)
    remaining = list(range(n_box, H))

    def slack(V, hs):
        return V[:, :1] * b[hs][None, :] - V[:, 1:] @ A[hs].T

    while remaining:
        F = slack(V, remaining)
        cuts = (F < 0).sum(axis=0)
        pick = int(np.argmax(cuts))
        h = remaining.pop(pick)
        if cuts[pick] == 0:
            # nothing left to cut; only incidences change
            for hh, col in zip([h] + remaining, slack(V, [h] + remaining).T):
                for v in np.flatnonzero(col == 0):
                    inc[v] |= 1 << hh
            break
        f = F[:, pick]
        plus = np.flatnonzero(f > 0)
        zero = np.flatnonzero(f == 0)
        minus = np.flatnonzero(f < 0)
        inc_words = np.zeros((len(inc), words), dtype=np.uint64)
        mask64 = (1 << 64) - 1
        for r, bits in enumerate(inc):
            for w in range(words):
                inc_words[r, w] = (bits >> (64 * w)) & mask64
        pairs = adjacent(inc_words, plus.astype(np.int64), minus.astype(np.int64), D - 1)
        new_rows, new_inc = [], []
        for u, w in pairs:
            row = int(f[u]) * V[w].astype(object) - int(f[w]) * V[u].astype(object)
            g = math.gcd(*(int(x) for x in row))
            new_rows.append([int(x) // g for x in row])
            new_inc.append((inc[u] & inc[w]) | (1 << h))
        keep = np.concatenate([plus, zero])
        kept_inc = [inc[v] | ((1 << h) if f[v] == 0 else 0) for v in keep]
        V = np.vstack([V[keep]] + ([np.array(new_rows, dtype=np.int64)] if new_rows else []))
        inc = kept_inc + new_inc

    t = V[:, 0]
    scale = metric.scale
    den = math.lcm(*(int(x) * scale for x in set(t.tolist())))
    rows = [[int(x) * (den // (int(ti) * scale)) for x in row[1:]] for ti, row in zip(t, V)]
    g = math.gcd(den, *(x for r in rows for x in r))
    rows = [[x // g for x in r] for r in rows]
    return _finish(metric, rows, den // g, "double-description")


def lipschitz_polytope(metric: FiniteMetric) -> LipschitzPolytope:
    """Pick the specialised enumerator when one applies."""
    if metric.kind == "discrete":
        return lipschitz_vertices_discrete(metric)
    if metric.graph_edges is not None and metric.is_bipartite():
        return lipschitz_vertices_bipartite(metric)
    return lipschitz_vertices_general(metric)


# -- the dual ball -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WassersteinBall:
    """``B = conv{(e_i - e_j)/d_ij}`` with one facet per Lipschitz vertex.

    Ball vertices live in the sum-zero hyperplane and are not canonicalized.
    ``facet_masks[k]`` is the bitmask of ball vertices on the facet whose
    inner normal is Lipschitz vertex ``k``.
    """

    polytope: LipschitzPolytope
    vertex_pairs: tuple[tuple[int, int], ...]
    facet_masks: tuple[int, ...]

    @property
    def metric(self) -> FiniteMetric:
        return self.polytope.metric

    @property
    def n(self) -> int:
        return self.polytope.n

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_pairs)

    @property
    def n_facets(self) -> int:
        return len(self.facet_masks)

    @cached_property
    def vertices(self) -> list[tuple[Fraction, ...]]:
        out = []
        for i, j in self.vertex_pairs:
            d = self.metric.d[i][j]
            v = [Fraction(0)] * self.n
            v[i], v[j] = 1 / d, -1 / d
            out.append(tuple(v))
        return out

    @cached_property
    def as_float(self) -> np.ndarray:
        return np.array([[float(x) for x in v] for v in self.vertices])

    @property
    def normals(self) -> np.ndarray:
        return self.polytope.as_float

    def facet_vertex_ids(self, k: int) -> list[int]:
        mask = self.facet_masks[k]
        return [i for i in range(self.n_vertices) if mask >> i & 1]

    @cached_property
    def vertex_facet_masks(self) -> tuple[int, ...]:
        """Transpose of the incidence: facets through each ball vertex."""
        out = [0] * self.n_vertices
        for k, mask in enumerate(self.facet_masks):
            for i in range(self.n_vertices):
                if mask >> i & 1:
                    out[i] |= 1 << k
        return tuple(out)

    def norm(self, y) -> float:
        """Polyhedral norm ``max_k <l_k, y>`` of a sum-zero vector."""
        return float((self.normals @ np.asarray(y, dtype=float)).max())


def _bits(flags) -> int:
    out = 0
    for i in np.flatnonzero(flags):
        out |= 1 << int(i)
    return out


def build_ball(poly: LipschitzPolytope) -> WassersteinBall:
    metric = poly.metric
    n = metric.n
    if metric.graph_edges is not None:
        cands = []
        for i, j in sorted(metric.graph_edges):
            cands += [(i, j), (j, i)]
    else:
        cands = [(i, j) for i in range(n) for j in range(n) if i != j]
    seen = set()
    unique = []
    for i, j in cands:
        key = (i, j, metric.d[i][j])
        if key not in seen:
            seen.add(key)
            unique.append((i, j))

    N = poly.numerators
    den, scale = poly.denominator, metric.scale
    dd = metric.integer_array
    ones = [1] * n
    keep, columns = [], []
    for i, j in unique:
        diff = scale * (N[:, i] - N[:, j])
        rhs = den * int(dd[i, j])
        if (diff > rhs).any():
            raise AssertionError("Lipschitz vertex violates a metric constraint")
        tight = diff == rhs
        # extreme iff the tight normals span the quotient space
        rows = [list(map(int, r)) for r in N[tight]] + [ones]
        if exact_rank(rows) == n:
            keep.append((i, j))
            columns.append(tight)
    T = np.array(columns).T if columns else np.zeros((len(poly), 0), dtype=bool)
    masks = tuple(_bits(T[k]) for k in range(T.shape[0]))
    return WassersteinBall(poly, tuple(keep), masks)


# -- closed-form f-vectors -----------------------------------------------------


def fvector_discrete_formula(n: int) -> list[int]:
    """``f_i(P_d) = C(n, i) (2^{n-i} - 2)`` for the discrete metric."""
    return [math.comb(n, i) * (2 ** (n - i) - 2) for i in range(n - 1)]


def fvector_path_formula(n: int) -> list[int]:
    """``f_i(P_d) = 2^{n-i-1} C(n-1, i)`` for the path metric (an (n-1)-cube)."""
    return [2 ** (n - i - 1) * math.comb(n - 1, i) for i in range(n - 1)]
