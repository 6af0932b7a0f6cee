# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every routine here has a line-for-line twin in ``_fallback.py``.  The two
must perform the same floating point operations in the same order so that
sweep counts, fluxes and trees agree bit for bit across backends.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()

ctypedef cnp.intp_t intp


def sweep(const double[::1] mu, const double[::1] wt, double dx, double sigma_t,
          const double[::1] q, double[::1] phi, double[:, ::1] psi_edge):
    """Diamond-difference sweep; fills ``phi`` (cells) and ``psi_edge`` (edges x angles)."""
    cdef Py_ssize_t ncell = q.shape[0]
    cdef Py_ssize_t nang = mu.shape[0]
    cdef Py_ssize_t i, n
    cdef double a, num, den, pin, pout
    cdef double half = 0.5 * sigma_t
    cdef double[:, ::1] psi_cell = np.empty((ncell, nang))

    for n in range(nang):
        a = fabs(mu[n]) / dx
        num = a - half
        den = a + half
        pin = 0.0
        if mu[n] > 0:
            psi_edge[0, n] = 0.0
            for i in range(ncell):
                pout = (num * pin + q[i]) / den
                psi_cell[i, n] = 0.5 * (pin + pout)
                psi_edge[i + 1, n] = pout
                pin = pout
        else:
            psi_edge[ncell, n] = 0.0
            for i in range(ncell - 1, -1, -1):
                pout = (num * pin + q[i]) / den
                psi_cell[i, n] = 0.5 * (pin + pout)
                psi_edge[i, n] = pout
                pin = pout

    for i in range(ncell):
        phi[i] = 0.0
    for n in range(nang):
        for i in range(ncell):
            phi[i] = phi[i] + wt[n] * psi_cell[i, n]


def thomas(const double[::1] lower, const double[::1] diag, const double[::1] upper,
           const double[::1] rhs):
    """Thomas elimination. Returns ``(x, ok)``; ``ok`` is False on a pivot below 1e-300."""
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t k
    cdef double m
    x_arr = np.empty(n)
    cdef double[::1] x = x_arr
    cdef double[::1] d = np.empty(n)
    cdef double[::1] r = np.empty(n)

    d[0] = diag[0]
    r[0] = rhs[0]
    if fabs(d[0]) < 1e-300:
        return x_arr, False
    for k in range(1, n):
        m = lower[k - 1] / d[k - 1]
        d[k] = diag[k] - m * upper[k - 1]
        r[k] = rhs[k] - m * r[k - 1]
        if fabs(d[k]) < 1e-300:
            return x_arr, False
    x[n - 1] = r[n - 1] / d[n - 1]
    for k in range(n - 2, -1, -1):
        x[k] = (r[k] - upper[k] * x[k + 1]) / d[k]
    return x_arr, True


cdef struct Pair:
    double value
    intp index


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef double va = (<Pair*>a).value
    cdef double vb = (<Pair*>b).value
    if va < vb:
        return -1
    if va > vb:
        return 1
    return 0


cdef extern from *:
    ctypedef long long int128 "__int128"


cdef inline bint _beats(double score, long long sl, long long sr, Py_ssize_t nl, Py_ssize_t nr,
                        double best, long long bsl, long long bsr, Py_ssize_t bnl,
                        Py_ssize_t bnr) noexcept nogil:
    # Float scores decide clear cases; inside the window the rational
    # scores (sl*nr + sr*nl) / (nl*nr) are compared exactly.
    cdef double window = 1e-9 * fabs(best)
    if score > best + window:
        return True
    if score < best - window:
        return False
    cdef int128 num = <int128>sl * nr + <int128>sr * nl
    cdef int128 bnum = <int128>bsl * bnr + <int128>bsr * bnl
    return num * (<int128>bnl * bnr) > bnum * (<int128>nl * nr)


cdef void _sort_segment(const double[:, ::1] X, intp[::1] idx, Pair* buf,
                        Py_ssize_t start, Py_ssize_t end, Py_ssize_t f) noexcept nogil:
    cdef Py_ssize_t j, m = end - start
    for j in range(m):
        buf[j].index = idx[start + j]
        buf[j].value = X[idx[start + j], f]
    qsort(buf, m, sizeof(Pair), _cmp_pair)
    for j in range(m):
        idx[start + j] = buf[j].index


def grow_tree(const double[:, ::1] X, const intp[::1] y, const intp[::1] sample,
              int n_classes, int mtry, int min_leaf, const double[:, ::1] keys):
    """Grow one CART classification tree by exhaustive Gini split search.

    ``keys[node, f]`` orders the non-constant features at ``node``; the
    first ``mtry`` of them are searched. Returns flat node arrays.
    """
    cdef Py_ssize_t n = sample.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t max_nodes = 2 * n - 1 if n > 0 else 1

    feature_arr = np.full(max_nodes, -1, dtype=np.intp)
    threshold_arr = np.zeros(max_nodes)
    left_arr = np.full(max_nodes, -1, dtype=np.intp)
    right_arr = np.full(max_nodes, -1, dtype=np.intp)
    counts_arr = np.zeros((max_nodes, n_classes), dtype=np.intp)
    decrease_arr = np.zeros(max_nodes)
    cdef intp[::1] feature = feature_arr
    cdef double[::1] threshold = threshold_arr
    cdef intp[::1] left = left_arr
    cdef intp[::1] right = right_arr
    cdef intp[:, ::1] counts = counts_arr
    cdef double[::1] decrease = decrease_arr

    cdef intp[::1] idx = np.array(sample, dtype=np.intp)
    cdef intp[::1] lcount = np.zeros(n_classes, dtype=np.intp)
    cdef intp[::1] cand = np.zeros(p, dtype=np.intp)
    cdef intp[::1] stack_node = np.zeros(max_nodes, dtype=np.intp)
    cdef intp[::1] stack_start = np.zeros(max_nodes, dtype=np.intp)
    cdef intp[::1] stack_end = np.zeros(max_nodes, dtype=np.intp)
    cdef Pair* buf = <Pair*>malloc((n if n > 0 else 1) * sizeof(Pair))

    cdef Py_ssize_t top = 0, node_count = 1
    cdef Py_ssize_t node, start, end, m, j, k, f, nf, nsearch, pos, nl, nr
    cdef Py_ssize_t best_f, best_pos, sorted_f, tmp
    cdef long long sp, sl, sr, best_sl, best_sr, c, nonzero
    cdef double vmin, vmax, v, score, best_score, best_thr

    if n == 0:
        free(buf)
        return feature_arr[:1], threshold_arr[:1], left_arr[:1], right_arr[:1], counts_arr[:1], decrease_arr[:1]

    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    top = 1
    try:
        while top > 0:
            top -= 1
            node = stack_node[top]
            start = stack_start[top]
            end = stack_end[top]
            m = end - start

            for k in range(n_classes):
                counts[node, k] = 0
            for j in range(start, end):
                counts[node, y[idx[j]]] += 1
            sp = 0
            nonzero = 0
            for k in range(n_classes):
                c = counts[node, k]
                sp += c * c
                if c > 0:
                    nonzero += 1
            if nonzero <= 1 or m < 2 * min_leaf:
                continue

            nf = 0
            for f in range(p):
                vmin = X[idx[start], f]
                vmax = vmin
                for j in range(start + 1, end):
                    v = X[idx[j], f]
                    if v < vmin:
                        vmin = v
                    elif v > vmax:
                        vmax = v
                if vmax > vmin:
                    cand[nf] = f
                    nf += 1
            if nf == 0:
                continue
            # insertion sort of candidates by random key, ties by feature index
            for j in range(1, nf):
                tmp = cand[j]
                k = j - 1
                while k >= 0 and keys[node, cand[k]] > keys[node, tmp]:
                    cand[k + 1] = cand[k]
                    k -= 1
                cand[k + 1] = tmp
            nsearch = mtry if mtry < nf else nf

            best_score = -1.0
            best_f = -1
            best_pos = -1
            best_thr = 0.0
            best_sl = 0
            best_sr = 0
            sorted_f = -1
            for j in range(nsearch):
                f = cand[j]
                _sort_segment(X, idx, buf, start, end, f)
                sorted_f = f
                for k in range(n_classes):
                    lcount[k] = 0
                for pos in range(1, m):
                    lcount[y[idx[start + pos - 1]]] += 1
                    if pos < min_leaf or m - pos < min_leaf:
                        continue
                    if not (X[idx[start + pos - 1], f] < X[idx[start + pos], f]):
                        continue
                    sl = 0
                    sr = 0
                    for k in range(n_classes):
                        sl += lcount[k] * lcount[k]
                        c = counts[node, k] - lcount[k]
                        sr += c * c
                    score = <double>sl / pos + <double>sr / (m - pos)
                    if best_f < 0 or _beats(score, sl, sr, pos, m - pos,
                                            best_score, best_sl, best_sr, best_pos, m - best_pos):
                        best_score = score
                        best_f = f
                        best_pos = pos
                        best_sl = sl
                        best_sr = sr
                        best_thr = 0.5 * (X[idx[start + pos - 1], f] + X[idx[start + pos], f])
            if best_f < 0:
                continue
            nl = best_pos
            nr = m - best_pos
            # exact integer test that the split lowers weighted impurity
            if not ((best_sl * nr + best_sr * nl) * m > sp * nl * nr):
                continue
            if sorted_f != best_f:
                _sort_segment(X, idx, buf, start, end, best_f)

            feature[node] = best_f
            threshold[node] = best_thr
            decrease[node] = best_score - <double>sp / m
            left[node] = node_count
            right[node] = node_count + 1
            node_count += 2
            stack_node[top] = right[node]
            stack_start[top] = start + nl
            stack_end[top] = end
            top += 1
            stack_node[top] = left[node]
            stack_start[top] = start
            stack_end[top] = start + nl
            top += 1
    finally:
        free(buf)

    return (feature_arr[:node_count], threshold_arr[:node_count], left_arr[:node_count],
            right_arr[:node_count], counts_arr[:node_count], decrease_arr[:node_count])


def apply_tree(const double[:, ::1] X, const intp[::1] feature, const double[::1] threshold,
               const intp[::1] left, const intp[::1] right):
    """Leaf index reached by each row of ``X``."""
    cdef Py_ssize_t m = X.shape[0]
    cdef Py_ssize_t r
    cdef intp node
    out_arr = np.empty(m, dtype=np.intp)
    cdef intp[::1] out = out_arr
    for r in range(m):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out_arr
