"""Pure-Python/numpy implementations of the hot kernels.

Signatures match ``wim._ckernels`` exactly; see ``wim.kernels`` for the
selection logic.
"""

from __future__ import annotations

import numpy as np


def bipartite_labelings(order, parent, back_ptr, back_idx):
    """All integer labelings with unit differences along every edge.

    ``order`` is a BFS order of the vertices, ``parent[v]`` the BFS parent of
    ``v`` and ``back_ptr``/``back_idx`` list, for each position ``p``, the
    neighbours of ``order[p]`` that appear earlier in the order.  The root is
    labelled 0.  Returns an ``(count, n)`` int64 array.
    """
    order = [int(v) for v in order]
    parent = [int(v) for v in parent]
    back_ptr = [int(v) for v in back_ptr]
    back_idx = [int(v) for v in back_idx]
    n = len(order)
    x = [0] * n
    out: list[list[int]] = []
    if n == 1:
        return np.zeros((1, 1), dtype=np.int64)
    choice = [0] * n
    pos = 1
    choice[1] = -1
    while pos >= 1:
        choice[pos] += 1
        if choice[pos] > 1:
            pos -= 1
            continue
        v = order[pos]
        val = x[parent[v]] + (1 if choice[pos] == 0 else -1)
        ok = True
        for t in range(back_ptr[pos], back_ptr[pos + 1]):
            diff = val - x[back_idx[t]]
            if diff != 1 and diff != -1:
                ok = False
                break
        if not ok:
            continue
        x[v] = val
        if pos == n - 1:
            out.append(list(x))
        else:
            pos += 1
            choice[pos] = -1
    return np.array(out, dtype=np.int64).reshape(len(out), n)


def phi_value(theta, msizes, free_off, loc_ptr, exps, coefs, state_local):
    """Evaluate the monomial parametrization at one parameter point."""
    k = len(msizes)
    local = []
    for f in range(k):
        m = int(msizes[f])
        free = theta[free_off[f] : free_off[f] + m - 1]
        p = np.empty(m)
        p[: m - 1] = free
        p[m - 1] = 1.0 - free.sum()
        lo, hi = loc_ptr[f], loc_ptr[f + 1]
        vals = coefs[lo:hi] * np.prod(p[None, :] ** exps[lo:hi, :m], axis=1)
        local.append(vals)
    out = np.ones(state_local.shape[0])
    for f in range(k):
        out = out * local[f][state_local[:, f]]
    return out


def minimax_value(theta, mu, X, msizes, free_off, loc_ptr, exps, coefs, state_local):
    """``max_k <mu - phi(theta), X[k]>`` and the maximizing row."""
    phi = phi_value(theta, msizes, free_off, loc_ptr, exps, coefs, state_local)
    scores = X @ (mu - phi)
    k = int(np.argmax(scores))
    return float(scores[k]), k


def dd_adjacent_pairs(inc, plus, minus, min_common):
    """Combinatorially adjacent (plus, minus) vertex pairs.

    ``inc`` is a ``(V, W)`` uint64 array of incidence bitsets.  A pair is
    adjacent when its common incidence set has at least ``min_common``
    elements and no third vertex's incidence set contains it.
    """
    words = inc.shape[1]
    rows = []
    for r in inc:
        val = 0
        for w in range(words):
            val |= int(r[w]) << (64 * w)
        rows.append(val)
    V = len(rows)
    out = []
    for u in plus:
        u = int(u)
        zu = rows[u]
        for w in minus:
            w = int(w)
            z = zu & rows[w]
            if z.bit_count() < min_common:
                continue
            adjacent = True
            for v in range(V):
                if v != u and v != w and (z & rows[v]) == z:
                    adjacent = False
                    break
            if adjacent:
                out.append((u, w))
    return np.array(out, dtype=np.int64).reshape(len(out), 2)


def clamped_minimax(theta, mu, X, msizes, free_off, loc_ptr, exps, coefs, state_local):
    """Minimax value at the clamped parameter point plus an L1 exit penalty.

    Coordinates are clipped to [0, 1]; a factor whose free coordinates sum
    past 1 is rescaled onto the simplex face.  The penalty is the L1
    distance between ``theta`` and its clamped image.
    """
    t = np.clip(np.asarray(theta, dtype=float), 0.0, 1.0)
    for f in range(len(msizes)):
        lo = free_off[f]
        hi = lo + msizes[f] - 1
        s = t[lo:hi].sum()
        if s > 1.0:
            t[lo:hi] /= s
    val, _ = minimax_value(t, mu, X, msizes, free_off, loc_ptr, exps, coefs, state_local)
    return val + float(np.abs(np.asarray(theta) - t).sum())
