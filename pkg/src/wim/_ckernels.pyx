# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``wim._kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def bipartite_labelings(int32_t[::1] order, int32_t[::1] parent,
                        int32_t[::1] back_ptr, int32_t[::1] back_idx):
    cdef Py_ssize_t n = order.shape[0]
    if n == 1:
        return np.zeros((1, 1), dtype=np.int64)
    cdef Py_ssize_t cap = 1024, count = 0
    out = np.empty((cap, n), dtype=np.int64)
    cdef int64_t[:, ::1] ov = out
    cdef int64_t *x = <int64_t *> malloc(n * sizeof(int64_t))
    cdef int *choice = <int *> malloc(n * sizeof(int))
    cdef Py_ssize_t pos, t, i
    cdef int32_t v
    cdef int64_t val, diff
    cdef bint ok
    for i in range(n):
        x[i] = 0
        choice[i] = 0
    try:
        pos = 1
        choice[1] = -1
        while pos >= 1:
            choice[pos] += 1
            if choice[pos] > 1:
                pos -= 1
                continue
            v = order[pos]
            if choice[pos] == 0:
                val = x[parent[v]] + 1
            else:
                val = x[parent[v]] - 1
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
                if count == cap:
                    cap *= 2
                    out = np.concatenate([out, np.empty_like(out)])
                    ov = out
                for i in range(n):
                    ov[count, i] = x[i]
                count += 1
            else:
                pos += 1
                choice[pos] = -1
    finally:
        free(x)
        free(choice)
    return out[:count].copy()


cdef void _phi(const double[::1] theta, const int32_t[::1] msizes,
               const int32_t[::1] free_off, const int32_t[::1] loc_ptr,
               const int32_t[:, ::1] exps, const double[::1] coefs,
               const int32_t[:, ::1] state_local, double *local,
               double *p, double *phi) noexcept nogil:
    cdef Py_ssize_t k = msizes.shape[0], n = state_local.shape[0]
    cdef Py_ssize_t f, j, s, e, m
    cdef double acc, term
    for f in range(k):
        m = msizes[f]
        acc = 0.0
        for j in range(m - 1):
            p[j] = theta[free_off[f] + j]
            acc += p[j]
        p[m - 1] = 1.0 - acc
        for s in range(loc_ptr[f], loc_ptr[f + 1]):
            term = coefs[s]
            for j in range(m):
                for e in range(exps[s, j]):
                    term *= p[j]
            local[s] = term
    for s in range(n):
        acc = 1.0
        for f in range(k):
            acc *= local[loc_ptr[f] + state_local[s, f]]
        phi[s] = acc


def phi_value(const double[::1] theta, const int32_t[::1] msizes,
              const int32_t[::1] free_off, const int32_t[::1] loc_ptr,
              const int32_t[:, ::1] exps, const double[::1] coefs,
              const int32_t[:, ::1] state_local):
    cdef Py_ssize_t n = state_local.shape[0]
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef double *local = <double *> malloc(coefs.shape[0] * sizeof(double))
    cdef double *p = <double *> malloc(exps.shape[1] * sizeof(double))
    try:
        _phi(theta, msizes, free_off, loc_ptr, exps, coefs, state_local,
             local, p, &ov[0])
    finally:
        free(local)
        free(p)
    return out


def minimax_value(const double[::1] theta, const double[::1] mu,
                  const double[:, ::1] X, const int32_t[::1] msizes,
                  const int32_t[::1] free_off, const int32_t[::1] loc_ptr,
                  const int32_t[:, ::1] exps, const double[::1] coefs,
                  const int32_t[:, ::1] state_local):
    cdef Py_ssize_t n = state_local.shape[0], K = X.shape[0]
    cdef Py_ssize_t i, r, best_k = 0
    cdef double acc, best = -1e300
    cdef double *local = <double *> malloc(coefs.shape[0] * sizeof(double))
    cdef double *p = <double *> malloc(exps.shape[1] * sizeof(double))
    cdef double *phi = <double *> malloc(n * sizeof(double))
    try:
        _phi(theta, msizes, free_off, loc_ptr, exps, coefs, state_local,
             local, p, phi)
        for i in range(n):
            phi[i] = mu[i] - phi[i]
        for r in range(K):
            acc = 0.0
            for i in range(n):
                acc += X[r, i] * phi[i]
            if acc > best:
                best = acc
                best_k = r
    finally:
        free(local)
        free(p)
        free(phi)
    return best, best_k


def dd_adjacent_pairs(const uint64_t[:, ::1] inc, const int64_t[::1] plus,
                      const int64_t[::1] minus, int min_common):
    cdef Py_ssize_t V = inc.shape[0], W = inc.shape[1]
    cdef Py_ssize_t a, b, v, w, cnt
    cdef int64_t u, t
    cdef bint adjacent, contained
    cdef uint64_t *z = <uint64_t *> malloc(W * sizeof(uint64_t))
    found = []
    try:
        for a in range(plus.shape[0]):
            u = plus[a]
            for b in range(minus.shape[0]):
                t = minus[b]
                cnt = 0
                for w in range(W):
                    z[w] = inc[u, w] & inc[t, w]
                    cnt += __builtin_popcountll(z[w])
                if cnt < min_common:
                    continue
                adjacent = True
                for v in range(V):
                    if v == u or v == t:
                        continue
                    contained = True
                    for w in range(W):
                        if z[w] & ~inc[v, w]:
                            contained = False
                            break
                    if contained:
                        adjacent = False
                        break
                if adjacent:
                    found.append((u, t))
    finally:
        free(z)
    return np.array(found, dtype=np.int64).reshape(len(found), 2)


def clamped_minimax(const double[::1] theta, const double[::1] mu,
                    const double[:, ::1] X, const int32_t[::1] msizes,
                    const int32_t[::1] free_off, const int32_t[::1] loc_ptr,
                    const int32_t[:, ::1] exps, const double[::1] coefs,
                    const int32_t[:, ::1] state_local):
    cdef Py_ssize_t d = theta.shape[0], k = msizes.shape[0]
    cdef Py_ssize_t n = state_local.shape[0], K = X.shape[0]
    cdef Py_ssize_t f, j, i, r
    cdef double s, acc, best = -1e300, pen = 0.0
    t = np.empty(d)
    cdef double[::1] tv = t
    for j in range(d):
        tv[j] = min(max(theta[j], 0.0), 1.0)
    for f in range(k):
        s = 0.0
        for j in range(free_off[f], free_off[f] + msizes[f] - 1):
            s += tv[j]
        if s > 1.0:
            for j in range(free_off[f], free_off[f] + msizes[f] - 1):
                tv[j] /= s
    for j in range(d):
        pen += abs(theta[j] - tv[j])
    cdef double *local = <double *> malloc(coefs.shape[0] * sizeof(double))
    cdef double *p = <double *> malloc(exps.shape[1] * sizeof(double))
    cdef double *phi = <double *> malloc(n * sizeof(double))
    try:
        _phi(tv, msizes, free_off, loc_ptr, exps, coefs, state_local, local, p, phi)
        for i in range(n):
            phi[i] = mu[i] - phi[i]
        for r in range(K):
            acc = 0.0
            for i in range(n):
                acc += X[r, i] * phi[i]
            if acc > best:
                best = acc
    finally:
        free(local)
        free(p)
        free(phi)
    return best + pen
