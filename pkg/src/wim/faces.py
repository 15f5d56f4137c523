"""Face lattices from vertex–facet incidence.

Faces are enumerated top-down: starting from the facets, the faces of a
face ``S`` are the inclusion-maximal nonempty sets ``S & F`` over facets
``F`` not containing ``S``.  Every face is a closed set of the incidence
Galois connection, so no convex-hull computation is ever repeated.
Vertex sets and facet sets are Python-int bitmasks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import CapacityError, GeometryError
from .polytope import WassersteinBall, exact_rank

MAX_FACES = 10**6


def _members(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def enumerate_faces(facet_masks, top_dim: int, max_faces: int = MAX_FACES):
    """Proper faces of a polytope given by facet vertex-bitmasks.

    Returns a list indexed by dimension ``0..top_dim``; each entry maps a
    face's vertex mask to the mask of facets containing it.  Raises
    :class:`CapacityError` (with the completed part of the f-vector) when
    more than ``max_faces`` faces are found.
    """
    K = len(facet_masks)
    levels: list[dict[int, int]] = [dict() for _ in range(top_dim + 1)]
    top = levels[top_dim]
    for k, mask in enumerate(facet_masks):
        top[mask] = top.get(mask, 0) | (1 << k)
    total = len(top)
    for dim in range(top_dim, 0, -1):
        below = levels[dim - 1]
        for S, fS in levels[dim].items():
            cands = set()
            for g in range(K):
                if fS >> g & 1:
                    continue
                C = S & facet_masks[g]
                if C:
                    cands.add(C)
            for C in cands:
                if C in below:
                    continue
                if any(C != D and C & D == C for D in cands):
                    continue
                fC = 0
                for g in range(K):
                    if C & facet_masks[g] == C:
                        fC |= 1 << g
                below[C] = fC
                total += 1
                if total > max_faces:
                    partial = {d: len(levels[d]) for d in range(dim, top_dim + 1)}
                    raise CapacityError(
                        f"face lattice exceeds {max_faces} faces", partial=partial
                    )
    return levels


@dataclass(frozen=True, eq=False)
class Face:
    """A proper face of the Wasserstein ball.

    ``normal`` is the Lipschitz vertex of the first facet containing the
    face; ``cone_generators`` are the face's vertices, which generate the
    cone ``C_F``.
    """

    vertex_ids: tuple[int, ...]
    dim: int
    facet_ids: tuple[int, ...]
    ball: WassersteinBall = field(repr=False)

    @property
    def vertex_mask(self) -> int:
        return sum(1 << i for i in self.vertex_ids)

    @property
    def normal(self) -> tuple[Fraction, ...]:
        return self.ball.polytope.vertices[self.facet_ids[0]]

    @property
    def normal_float(self) -> np.ndarray:
        return self.ball.normals[self.facet_ids[0]]

    @property
    def cone_generators(self) -> list[tuple[Fraction, ...]]:
        return [self.ball.vertices[i] for i in self.vertex_ids]

    @property
    def generators_float(self) -> np.ndarray:
        return self.ball.as_float[list(self.vertex_ids)]

    @property
    def labels(self) -> list[tuple[int, int]]:
        """Ball vertices as ``(i, j)`` for ``(e_i - e_j)/d_ij``."""
        return [self.ball.vertex_pairs[i] for i in self.vertex_ids]

    @cached_property
    def span_basis(self) -> list[tuple[Fraction, ...]]:
        basis, rank = [], 0
        for v in self.cone_generators:
            if exact_rank(basis + [v]) > rank:
                basis.append(v)
                rank += 1
        return basis

    def to_dict(self) -> dict:
        from .statespace import format_rational

        return {
            "dim": self.dim,
            "vertex_ids": list(self.vertex_ids),
            "vertices": [[i, j] for i, j in self.labels],
            "normal": [format_rational(x) for x in self.normal],
        }


@dataclass(frozen=True, eq=False)
class FaceLattice:
    ball: WassersteinBall
    levels: tuple[dict[int, int], ...] = field(repr=False)

    @property
    def f_vector(self) -> list[int]:
        return [len(level) for level in self.levels]

    @property
    def lipschitz_f_vector(self) -> list[int]:
        """``f_i(P_d) = f_{n-i-2}(B)`` by polarity."""
        return self.f_vector[::-1]

    def face_from_mask(self, vmask: int, dim: int | None = None) -> Face:
        if dim is None:
            dim = next(d for d, lv in enumerate(self.levels) if vmask in lv)
        fmask = self.levels[dim][vmask]
        return Face(tuple(_members(vmask)), dim, tuple(_members(fmask)), self.ball)

    def faces(self, dim: int) -> list[Face]:
        return [self.face_from_mask(v, dim) for v in sorted(self.levels[dim])]

    def __contains__(self, vmask: int) -> bool:
        return any(vmask in lv for lv in self.levels)

    def euler_characteristic(self) -> int:
        return sum((-1) ** i * f for i, f in enumerate(self.f_vector))


def face_lattice(ball: WassersteinBall, max_faces: int = MAX_FACES) -> FaceLattice:
    levels = enumerate_faces(ball.facet_masks, ball.n - 2, max_faces)
    for vmask in levels[0]:
        if vmask & (vmask - 1):
            raise AssertionError("a 0-dimensional face has more than one vertex")
    return FaceLattice(ball, tuple(levels))


def lipschitz_f_vector_direct(ball: WassersteinBall, max_faces: int = MAX_FACES) -> list[int]:
    """f-vector of ``P_d`` from its own lattice (the transposed incidence)."""
    levels = enumerate_faces(ball.vertex_facet_masks, ball.n - 2, max_faces)
    return [len(level) for level in levels]


def _face_dim(ball: WassersteinBall, vmask: int) -> int:
    # the face misses the origin, so affine dim = linear rank - 1
    return exact_rank([ball.vertices[i] for i in _members(vmask)]) - 1


def minimal_face_containing(ball: WassersteinBall, w, lattice: FaceLattice | None = None,
                            tol: float = 1e-7) -> Face:
    """The face whose relative interior contains the boundary point ``w``.

    With rational input the tight facets are found exactly; otherwise facets
    with ``<l_F, w> >= 1 - tol`` count as tight.
    """
    w = list(w)
    if len(w) != ball.n:
        raise GeometryError(f"point has {len(w)} coordinates, ball lives in R^{ball.n}")
    if all(isinstance(x, (int, Fraction)) for x in w):
        N = ball.polytope.numerators
        den = ball.polytope.denominator
        vals = [sum(Fraction(int(a)) * Fraction(x) for a, x in zip(row, w)) / den for row in N]
        top = max(vals)
        if top != 1:
            raise GeometryError(f"point has norm {top}, not on the unit sphere")
        tight = [k for k, v in enumerate(vals) if v == 1]
    else:
        vals = ball.normals @ np.asarray(w, dtype=float)
        top = float(vals.max())
        if abs(top - 1.0) > tol:
            raise GeometryError(f"point has norm {top!r}, not on the unit sphere")
        tight = [int(k) for k in np.flatnonzero(vals >= 1.0 - tol)]
    vmask = (1 << ball.n_vertices) - 1
    for k in tight:
        vmask &= ball.facet_masks[k]
    if not vmask:
        raise GeometryError("tight facets have no common vertex")
    if lattice is not None and vmask in lattice:
        return lattice.face_from_mask(vmask)
    fmask = 0
    for k, mask in enumerate(ball.facet_masks):
        if vmask & mask == vmask:
            fmask |= 1 << k
    return Face(tuple(_members(vmask)), _face_dim(ball, vmask), tuple(_members(fmask)), ball)
