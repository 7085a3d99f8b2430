# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: the greedy sampler and the pairwise MI reduction.

Semantics match structdiv.sampler and structdiv.analysis exactly; see those
modules for the contracts. Arithmetic on the RNG is identical to rng.py.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

ctypedef int64_t i64


cdef inline uint64_t _next(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] += <uint64_t>0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline i64 _bounded(uint64_t* state, i64 n) noexcept nogil:
    cdef uint64_t un = <uint64_t>n
    cdef uint64_t threshold = (<uint64_t>0 - un) % un
    cdef uint64_t x
    while True:
        x = _next(state)
        if x >= threshold:
            return <i64>(x % un)


def splitmix_draws(uint64_t seed, i64 n, i64 bound):
    """First ``n`` bounded draws from a seed; used to cross-check rng.py."""
    cdef uint64_t state = seed
    out = np.empty(n, dtype=np.int64)
    cdef i64[:] o = out
    cdef i64 i
    for i in range(n):
        o[i] = _bounded(&state, bound)
    return out


def greedy(dict arrays, i64 n_live, i64 n_live_keys, i64 n_live_templates,
           int wc, int we, int mark_bag, i64 budget, uint64_t seed):
    cdef i64[:] bag_ptr = arrays["bag_ptr"]
    cdef i64[:] bag_keys = arrays["bag_keys"]
    cdef i64[:] holder_ptr = arrays["holder_ptr"]
    cdef i64[:] holders = arrays["holders"].copy()
    cdef i64[:] holder_slot = arrays["holder_slot"].copy()
    cdef i64[:] bag_slot = arrays["bag_slot"].copy()
    cdef i64[:] freq = arrays["freq"].copy()
    cdef i64[:] inst_template = arrays["inst_template"]
    cdef i64[:] tfreq = arrays["tfreq"].copy()
    cdef i64[:] live = arrays["live"].copy()
    cdef i64[:] live_slot = arrays["live_slot"].copy()
    cdef i64 n_keys = freq.shape[0]
    cdef i64 n_templates = tfreq.shape[0]
    cdef i64 n_inst = inst_template.shape[0]

    c_sampled_arr = np.zeros(max(n_keys, 1), dtype=np.uint8)
    t_sampled_arr = np.zeros(max(n_templates, 1), dtype=np.uint8)
    cdef unsigned char[:] c_sampled = c_sampled_arr
    cdef unsigned char[:] t_sampled = t_sampled_arr
    cdef i64[:] key_ties = np.empty(max(n_keys, 1), dtype=np.int64)
    cdef i64[:] inst_ties = np.empty(max(n_inst, 1), dtype=np.int64)

    cdef i64 cap = min(budget, n_live) if budget > 0 else 0
    out_c = np.empty(cap, dtype=np.int64)
    out_e = np.empty(cap, dtype=np.int64)
    cdef i64[:] oc = out_c
    cdef i64[:] oe = out_e

    cdef uint64_t state = seed
    cdef i64 unsampled_keys = n_live_keys
    cdef i64 unsampled_t = n_live_templates
    cdef i64 npicks = 0
    cdef i64 k, j, w, best, nties, c, e, base, n, p, last, mj, t, i, f

    with nogil:
        while npicks < cap and n_live > 0:
            best = -1
            nties = 0
            for k in range(n_keys):
                f = freq[k]
                if f == 0:
                    continue
                if wc == 2:
                    w = 1
                elif c_sampled[k]:
                    w = 0
                elif wc == 1:
                    w = f
                else:
                    w = 1
                if w > best:
                    best = w
                    nties = 0
                    key_ties[0] = k
                    nties = 1
                elif w == best:
                    key_ties[nties] = k
                    nties += 1
            if nties > 0:
                c = key_ties[_bounded(&state, nties)]
                base = holder_ptr[c]
                n = freq[c]
                if we == 0:
                    e = holders[base + _bounded(&state, n)]
                else:
                    best = -1
                    nties = 0
                    for i in range(n):
                        e = holders[base + i]
                        t = inst_template[e]
                        if t_sampled[t]:
                            w = 0
                        elif we == 2:
                            w = tfreq[t]
                        else:
                            w = 1
                        if w > best:
                            best = w
                            inst_ties[0] = e
                            nties = 1
                        elif w == best:
                            inst_ties[nties] = e
                            nties += 1
                    e = inst_ties[_bounded(&state, nties)]
            else:
                c = -1
                e = live[_bounded(&state, n_live)]
            oc[npicks] = c
            oe[npicks] = e
            npicks += 1

            # remove e from the live pool
            p = live_slot[e]
            last = n_live - 1
            live[p] = live[last]
            live_slot[live[last]] = p
            live[last] = e
            live_slot[e] = last
            n_live = last
            for j in range(bag_ptr[e], bag_ptr[e + 1]):
                k = bag_keys[j]
                base = holder_ptr[k]
                p = bag_slot[j]
                last = freq[k] - 1
                mj = holder_slot[base + last]
                holders[base + p] = holders[base + last]
                holder_slot[base + p] = mj
                bag_slot[mj] = p
                holders[base + last] = e
                holder_slot[base + last] = j
                bag_slot[j] = last
                freq[k] = last
                if last == 0:
                    n_live_keys -= 1
                    if not c_sampled[k]:
                        unsampled_keys -= 1
            t = inst_template[e]
            tfreq[t] -= 1
            if tfreq[t] == 0:
                n_live_templates -= 1
                if not t_sampled[t]:
                    unsampled_t -= 1

            # update sampled sets
            if c >= 0 and not c_sampled[c]:
                c_sampled[c] = 1
                if freq[c] > 0:
                    unsampled_keys -= 1
            if mark_bag:
                for j in range(bag_ptr[e], bag_ptr[e + 1]):
                    k = bag_keys[j]
                    if not c_sampled[k]:
                        c_sampled[k] = 1
                        if freq[k] > 0:
                            unsampled_keys -= 1
            if not t_sampled[t]:
                t_sampled[t] = 1
                if tfreq[t] > 0:
                    unsampled_t -= 1
            if unsampled_keys == 0:
                c_sampled[:] = 0
                unsampled_keys = n_live_keys
            if unsampled_t == 0:
                t_sampled[:] = 0
                unsampled_t = n_live_templates

    return out_c[:npicks], out_e[:npicks]


cdef inline double _cell(double x, double a, double b, double n) noexcept nogil:
    if x <= 0.0:
        return 0.0
    return (x / n) * log((x * n) / (a * b))


cdef inline double _mi(double ci, double cj, double cij, double n) noexcept nogil:
    cdef double m = (_cell(cij, ci, cj, n)
                     + _cell(ci - cij, ci, n - cj, n)
                     + _cell(cj - cij, n - ci, cj, n)
                     + _cell(n - ci - cj + cij, n - ci, n - cj, n))
    return m if m > 0.0 else 0.0


def mi_matrix(cnp.int32_t[:, :] co, cnp.int64_t[:] counts, i64 n):
    cdef i64 m = counts.shape[0]
    out = np.zeros((m, m), dtype=np.float64)
    cdef double[:, :] o = out
    cdef i64 i, j
    cdef double v
    with nogil:
        for i in range(m):
            for j in range(i, m):
                v = _mi(<double>counts[i], <double>counts[j], <double>co[i, j], <double>n)
                o[i, j] = v
                o[j, i] = v
    return out


def mi_sums(cnp.int32_t[:, :] co, cnp.int64_t[:] counts, i64 n):
    """(sum over i<j, sum over i==j), reduced row by row in index order."""
    cdef i64 m = counts.shape[0]
    cdef i64 i, j
    cdef double upper = 0.0, diag = 0.0, row
    with nogil:
        for i in range(m):
            diag += _mi(<double>counts[i], <double>counts[i], <double>co[i, i], <double>n)
            row = 0.0
            for j in range(i + 1, m):
                row += _mi(<double>counts[i], <double>counts[j], <double>co[i, j], <double>n)
            upper += row
    return upper, diag
