# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Kendall's tau-b and windowed Gaussian-kernel sums."""
from libc.math cimport erfc, exp, sqrt
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

import numpy as np

cdef double _INV_SQRT2 = 0.70710678118654752440
cdef double _INV_SQRT2PI = 0.39894228040143267794
cdef double _WINDOW = 9.0


cdef long long _merge_count(double* a, double* buf, Py_ssize_t n) nogil:
    # bottom-up merge sort of a, returns number of strict inversions
    cdef long long swaps = 0
    cdef Py_ssize_t width = 1, lo, mid, hi, i, j, k
    cdef double* src = a
    cdef double* dst = buf
    cdef double* tmp
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            if mid > n:
                mid = n
            hi = lo + 2 * width
            if hi > n:
                hi = n
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    swaps += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
            lo += 2 * width
        tmp = src
        src = dst
        dst = tmp
        width *= 2
    if src != a:
        memcpy(a, src, n * sizeof(double))
    return swaps


def kendall_tau_sorted(double[::1] x, double[::1] y):
    """Kendall's tau-b for data already sorted lexicographically by (x, y)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, run_x, run_xy, run_y
    cdef long long n0, n1 = 0, n2 = 0, n3 = 0, swaps
    cdef double denom
    cdef double* ys
    cdef double* buf
    if n < 2:
        return 0.0
    n0 = <long long>n * (n - 1) // 2
    run_x = 1
    run_xy = 1
    for i in range(1, n):
        if x[i] == x[i - 1]:
            run_x += 1
            if y[i] == y[i - 1]:
                run_xy += 1
            else:
                n3 += <long long>run_xy * (run_xy - 1) // 2
                run_xy = 1
        else:
            n1 += <long long>run_x * (run_x - 1) // 2
            n3 += <long long>run_xy * (run_xy - 1) // 2
            run_x = 1
            run_xy = 1
    n1 += <long long>run_x * (run_x - 1) // 2
    n3 += <long long>run_xy * (run_xy - 1) // 2

    ys = <double*>malloc(n * sizeof(double))
    buf = <double*>malloc(n * sizeof(double))
    if ys == NULL or buf == NULL:
        free(ys)
        free(buf)
        raise MemoryError()
    try:
        for i in range(n):
            ys[i] = y[i]
        with nogil:
            swaps = _merge_count(ys, buf, n)
        run_y = 1
        for i in range(1, n):
            if ys[i] == ys[i - 1]:
                run_y += 1
            else:
                n2 += <long long>run_y * (run_y - 1) // 2
                run_y = 1
        n2 += <long long>run_y * (run_y - 1) // 2
    finally:
        free(ys)
        free(buf)
    denom = sqrt(<double>(n0 - n1) * <double>(n0 - n2))
    if denom == 0.0:
        return 0.0
    return (<double>(n0 - n1 - n2 + n3) - 2.0 * <double>swaps) / denom


cdef Py_ssize_t _lower_bound(const double[::1] xs, double v) nogil:
    cdef Py_ssize_t lo = 0, hi = xs.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if xs[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def kernel_cdf(const double[::1] xs, const double[::1] z, double h):
    """Mean of Phi((z - x_i) / h) over sorted sample xs."""
    cdef Py_ssize_t n = xs.shape[0], m = z.shape[0], j, i, lo, hi
    cdef double acc, zj
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in range(m):
            zj = z[j]
            lo = _lower_bound(xs, zj - _WINDOW * h)
            hi = _lower_bound(xs, zj + _WINDOW * h)
            acc = <double>lo
            for i in range(lo, hi):
                acc += 0.5 * erfc(-(zj - xs[i]) / h * _INV_SQRT2)
            o[j] = acc / n
    return out


def kernel_pdf(const double[::1] xs, const double[::1] z, double h):
    """Mean of phi((z - x_i) / h) / h over sorted sample xs."""
    cdef Py_ssize_t n = xs.shape[0], m = z.shape[0], j, i, lo, hi
    cdef double acc, zj, t
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in range(m):
            zj = z[j]
            lo = _lower_bound(xs, zj - _WINDOW * h)
            hi = _lower_bound(xs, zj + _WINDOW * h)
            acc = 0.0
            for i in range(lo, hi):
                t = (zj - xs[i]) / h
                acc += exp(-0.5 * t * t)
            o[j] = acc * _INV_SQRT2PI / (n * h)
    return out
