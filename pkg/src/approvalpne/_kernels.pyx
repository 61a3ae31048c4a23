# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Contract matches ``_pykernels``; callers keep values in int64 range."""

from array import array
from cpython cimport array as carray
from libc.stdlib cimport malloc, free

INVALID = -(1 << 63)
cdef long long INVALID_C = -(1LL << 62) * 2


cdef inline int _popcount(long long x) noexcept nogil:
    cdef int total = 0
    while x:
        x &= x - 1
        total += 1
    return total


cdef inline unsigned long long _elect(long long* counts, const long long[:] weights,
                                      const long long[:] prio_rank, int k, int m,
                                      long long* keys) noexcept nogil:
    cdef int c, j, best
    cdef unsigned long long mask = 0
    for c in range(m):
        keys[c] = counts[c] * weights[c] * m + (m - 1 - prio_rank[c])
    for j in range(k):
        best = -1
        for c in range(m):
            if (mask >> c) & 1:
                continue
            if best < 0 or keys[c] > keys[best]:
                best = c
        mask |= 1ULL << best
    return mask


cdef inline long long _utility(unsigned long long mask, const long long[:] util,
                               const long long[:] owa, const long long[:] pref_order) noexcept nogil:
    cdef long long total = 0
    cdef int j = 0, p, c
    cdef int top = owa.shape[0]
    for p in range(pref_order.shape[0]):
        c = pref_order[p]
        if (mask >> c) & 1:
            total += owa[j] * util[c]
            j += 1
            if j == top:
                break
    return total


def elect_mask(base_counts, weights, prio_rank, int k):
    cdef long long[:] cnt = array("q", base_counts)
    cdef long long[:] w = array("q", weights)
    cdef long long[:] pr = array("q", prio_rank)
    cdef int m = cnt.shape[0]
    cdef long long* keys = <long long*> malloc(m * sizeof(long long))
    try:
        return _elect(&cnt[0], w, pr, k, m, keys)
    finally:
        free(keys)


def committee_utility(mask, util, owa, pref_order):
    return _utility(<unsigned long long> mask, array("q", util), array("q", owa), array("q", pref_order))


def scan_ballots(base_counts, weights, prio_rank, int k, util, owa, pref_order, int max_size):
    cdef long long[:] base = array("q", base_counts)
    cdef long long[:] w = array("q", weights)
    cdef long long[:] pr = array("q", prio_rank)
    cdef long long[:] u = array("q", util)
    cdef long long[:] lam = array("q", owa)
    cdef long long[:] po = array("q", pref_order)
    cdef int m = base.shape[0]
    cdef long long total = 1LL << m
    cdef carray.array out = array("q", [0]) * total
    cdef long long[:] res = out
    cdef long long* counts = <long long*> malloc(m * sizeof(long long))
    cdef long long* keys = <long long*> malloc(m * sizeof(long long))
    cdef long long ballot
    cdef int c, size
    cdef long long invalid = INVALID
    try:
        with nogil:
            for ballot in range(total):
                size = 0
                for c in range(m):
                    if (ballot >> c) & 1:
                        counts[c] = base[c] + 1
                        size += 1
                    else:
                        counts[c] = base[c]
                if size > max_size:
                    res[ballot] = invalid
                    continue
                res[ballot] = _utility(_elect(counts, w, pr, k, m, keys), u, lam, po)
    finally:
        free(counts)
        free(keys)
    return out


def profile_filter(accept, code, int n, long long ncodes):
    cdef unsigned long long[:] acc = array("Q", accept)
    cdef long long[:] cd = array("q", code)
    cdef int nb = cd.shape[0]
    cdef int* choice = <int*> malloc(n * sizeof(int))
    cdef long long total
    cdef int i, own, ok
    found = []
    for i in range(n):
        choice[i] = 0
    try:
        while True:
            total = 0
            for i in range(n):
                total += cd[choice[i]]
            ok = 1
            for i in range(n):
                own = choice[i]
                if not (acc[i * ncodes + total - cd[own]] >> own) & 1:
                    ok = 0
                    break
            if ok:
                found.append(tuple([choice[i] for i in range(n)]))
            # odometer, last voter fastest
            i = n - 1
            while i >= 0:
                choice[i] += 1
                if choice[i] < nb:
                    break
                choice[i] = 0
                i -= 1
            if i < 0:
                break
    finally:
        free(choice)
    return found


def accept_table(int max_count, int base, weights, prio_rank, int k, util, owa, pref_order,
                 int kind, unsigned long long sincere_bits):
    cdef long long[:] w = array("q", weights)
    cdef long long[:] pr = array("q", prio_rank)
    cdef long long[:] u = array("q", util)
    cdef long long[:] lam = array("q", owa)
    cdef long long[:] po = array("q", pref_order)
    cdef int m = w.shape[0]
    cdef long long nb = 1LL << m
    cdef long long ncodes = 1
    cdef int c
    for c in range(m):
        ncodes *= base
    cdef carray.array out = array("Q", [0]) * ncodes
    cdef unsigned long long[:] res = out
    cdef long long* others = <long long*> malloc(m * sizeof(long long))
    cdef long long* counts = <long long*> malloc(m * sizeof(long long))
    cdef long long* keys = <long long*> malloc(m * sizeof(long long))
    cdef long long* values = <long long*> malloc(nb * sizeof(long long))
    cdef long long ballot, best, code, place
    cdef int size, best_size
    cdef unsigned long long bits
    try:
        with nogil:
            for c in range(m):
                others[c] = 0
            while True:
                best = INVALID_C
                best_size = m + 1
                for ballot in range(nb):
                    for c in range(m):
                        counts[c] = others[c] + ((ballot >> c) & 1)
                    values[ballot] = _utility(_elect(counts, w, pr, k, m, keys), u, lam, po)
                    if values[ballot] > best:
                        best = values[ballot]
                for ballot in range(nb):
                    if values[ballot] == best:
                        size = _popcount(ballot)
                        if size < best_size:
                            best_size = size
                bits = 0
                for ballot in range(nb):
                    if values[ballot] != best:
                        continue
                    if kind == 1 and _popcount(ballot) != best_size:
                        continue
                    if kind == 2 and not ((sincere_bits >> ballot) & 1):
                        continue
                    bits |= 1ULL << ballot
                code = 0
                place = 1
                for c in range(m):
                    code += others[c] * place
                    place *= base
                res[code] = bits
                # odometer over others[c] in 0..max_count
                c = 0
                while c < m:
                    others[c] += 1
                    if others[c] <= max_count:
                        break
                    others[c] = 0
                    c += 1
                if c == m:
                    break
    finally:
        free(others)
        free(counts)
        free(keys)
        free(values)
    return out
