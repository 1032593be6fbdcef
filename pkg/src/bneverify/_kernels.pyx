# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled compute kernels (accelerator backend).

Bit-exact twin of the pure-numpy fallback module: every function returns the
same float64/int64 values element by element, so estimates are identical no
matter which backend is active. Kernels therefore only emit per-sample values
or exact integer counts; record averaging stays with the caller.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"


def fpsb_win_counts(sorted_opp_max, bids):
    """Number of samples whose opponent max bid lies strictly below each bid.

    sorted_opp_max must be ascending. Exact integer counts.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arr = np.ascontiguousarray(
        sorted_opp_max, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(
        bids, dtype=np.float64)
    cdef Py_ssize_t n = arr.shape[0]
    cdef Py_ssize_t k = b.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(k, dtype=np.int64)
    cdef Py_ssize_t i, lo, hi, mid
    for i in range(k):
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) // 2
            if arr[mid] < b[i]:
                lo = mid + 1
            else:
                hi = mid
        out[i] = lo
    return out


def fpsb_point_utils(vals, own, opp_max):
    """Per-sample first-price utility (v - b when strictly winning, else 0)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.ascontiguousarray(
        vals, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(
        own, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] m = np.ascontiguousarray(
        opp_max, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = v[i] - b[i] if b[i] > m[i] else 0.0
    return out


def fpsb_dev_utils(theta, opp_max, bids):
    """Per-sample utilities of constant deviation bids: (K, N) matrix."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t = np.ascontiguousarray(
        theta, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] m = np.ascontiguousarray(
        opp_max, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(
        bids, dtype=np.float64)
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t k = b.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((k, n), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double bid
    for i in range(k):
        bid = b[i]
        for j in range(n):
            out[i, j] = t[j] - bid if bid > m[j] else 0.0
    return out


cdef inline cnp.int64_t _wins_one(const double* own, const double* opp,
                                  const cnp.uint8_t* senior,
                                  Py_ssize_t n1, Py_ssize_t m,
                                  Py_ssize_t m_units) nogil:
    cdef Py_ssize_t mu, j, nu
    cdef cnp.int64_t rank, wins = 0
    cdef double b
    for mu in range(m):
        b = own[mu]
        rank = mu
        for j in range(n1):
            for nu in range(m):
                if senior[j]:
                    if opp[j * m + nu] >= b:
                        rank += 1
                else:
                    if opp[j * m + nu] > b:
                        rank += 1
        if rank < m_units:
            wins += 1
        else:
            break  # ranks grow with mu, later slots cannot win
    return wins


def multiunit_wins_rows(own, opp, senior, m_units):
    """Units won per record for record-specific own bid vectors."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] o = np.ascontiguousarray(
        own, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] p = np.ascontiguousarray(
        opp, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] s = np.ascontiguousarray(
        np.asarray(senior).astype(np.uint8))
    cdef Py_ssize_t r = o.shape[0]
    cdef Py_ssize_t m = o.shape[1]
    cdef Py_ssize_t n1 = p.shape[1]
    cdef Py_ssize_t mu = int(m_units)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(r, dtype=np.int64)
    cdef Py_ssize_t i
    for i in range(r):
        out[i] = _wins_one(&o[i, 0], &p[i, 0, 0], &s[0], n1, m, mu)
    return out


def multiunit_wins_fixed(own, opp, senior, m_units):
    """Units won per record for one fixed own bid vector against all records."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] o = np.ascontiguousarray(
        own, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] p = np.ascontiguousarray(
        opp, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] s = np.ascontiguousarray(
        np.asarray(senior).astype(np.uint8))
    cdef Py_ssize_t r = p.shape[0]
    cdef Py_ssize_t m = o.shape[0]
    cdef Py_ssize_t n1 = p.shape[1]
    cdef Py_ssize_t mu = int(m_units)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(r, dtype=np.int64)
    cdef Py_ssize_t i
    for i in range(r):
        out[i] = _wins_one(&o[0], &p[i, 0, 0], &s[0], n1, m, mu)
    return out


def multiunit_pay_disc_rows(own, wins):
    """Pay-as-bid payment: sum of the first wins[r] own bids per record."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] o = np.ascontiguousarray(
        own, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] w = np.ascontiguousarray(
        wins, dtype=np.int64)
    cdef Py_ssize_t r = o.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(r, dtype=np.float64)
    cdef Py_ssize_t i, k
    cdef double acc
    for i in range(r):
        acc = 0.0
        for k in range(w[i]):
            acc = acc + o[i, k]
        out[i] = acc
    return out


def multiunit_pay_disc_fixed(own, wins):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] o = np.ascontiguousarray(
        own, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] w = np.ascontiguousarray(
        wins, dtype=np.int64)
    cdef Py_ssize_t m = o.shape[0]
    cdef Py_ssize_t r = w.shape[0]
    # prefix sums once, identical accumulation order to the fallback
    cdef cnp.ndarray[cnp.float64_t, ndim=1] prefix = np.empty(m + 1, dtype=np.float64)
    cdef Py_ssize_t k
    prefix[0] = 0.0
    for k in range(m):
        prefix[k + 1] = prefix[k] + o[k]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(r, dtype=np.float64)
    cdef Py_ssize_t i
    for i in range(r):
        out[i] = prefix[w[i]]
    return out


cdef inline double _kth_largest(double* buf, Py_ssize_t width,
                                Py_ssize_t pos) nogil:
    # insertion sort descending; selection involves no arithmetic, so any
    # ordering algorithm yields the identical float
    cdef Py_ssize_t i, j
    cdef double key
    for i in range(1, width):
        key = buf[i]
        j = i - 1
        while j >= 0 and buf[j] < key:
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = key
    return buf[pos]


def multiunit_pay_unif_rows(own, opp, wins, m_units):
    """Uniform-price payment wins * max(own next bid, competitors' next bid)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] o = np.ascontiguousarray(
        own, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] p = np.ascontiguousarray(
        opp, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] w = np.ascontiguousarray(
        wins, dtype=np.int64)
    cdef Py_ssize_t r = o.shape[0]
    cdef Py_ssize_t m = o.shape[1]
    cdef Py_ssize_t n1 = p.shape[1]
    cdef Py_ssize_t width = n1 * m
    cdef Py_ssize_t mu = int(m_units)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(r, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.empty(width, dtype=np.float64)
    cdef Py_ssize_t i, k, pos
    cdef double own_next, comp_next, price
    for i in range(r):
        own_next = o[i, w[i]] if w[i] < m else 0.0
        pos = mu - w[i]
        if pos < width:
            for k in range(width):
                buf[k] = p[i, k // m, k % m]
            comp_next = _kth_largest(&buf[0], width, pos)
        else:
            comp_next = 0.0
        price = own_next if own_next > comp_next else comp_next
        out[i] = (<double> w[i]) * price
    return out


def multiunit_pay_unif_fixed(own, opp, wins, m_units):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] o = np.ascontiguousarray(
        own, dtype=np.float64)
    opp = np.ascontiguousarray(opp, dtype=np.float64)
    rows = np.broadcast_to(o, (opp.shape[0], o.shape[0]))
    return multiunit_pay_unif_rows(np.ascontiguousarray(rows), opp, wins, m_units)
