# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same signatures and semantics as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, copysign
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()

cdef int MAX_QR_ITER = 60


cdef inline void _affine_row(const double* u, const double* prev, const double[:, ::1] w,
                             double* out, Py_ssize_t n) noexcept nogil:
    # out = u + prev @ w; the C-ordered w is w^T to column-major BLAS
    cdef Py_ssize_t j
    cdef int m = <int>n, one = 1
    cdef double alpha = 1.0, beta = 1.0
    cdef char trans = b'N'
    for j in range(n):
        out[j] = u[j]
    dgemv(&trans, &m, &m, &alpha, <double*>&w[0, 0], &m, <double*>prev, &one, &beta, out, &one)


# the vectorized ufunc is several times faster than scalar libm tanh
_tanh = np.tanh


def series_states(drive, w_rec, h0, bint linear=False):
    cdef const double[:, ::1] u = np.ascontiguousarray(drive, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(w_rec, dtype=np.float64)
    cdef double[::1] start = np.array(h0, dtype=np.float64)
    cdef Py_ssize_t steps = u.shape[0], n = u.shape[1], t
    out = np.empty((steps, n))
    cdef double[:, ::1] h = out
    if steps == 0 or n == 0:
        return out
    _affine_row(&u[0, 0], &start[0], w, &h[0, 0], n)
    if not linear:
        _tanh(out[0], out=out[0])
    for t in range(1, steps):
        _affine_row(&u[t, 0], &h[t - 1, 0], w, &h[t, 0], n)
        if not linear:
            row = out[t]
            _tanh(row, out=row)
    return out


def tree_states(drive, w_rec, child_ptr, child_idx, bint linear=False):
    cdef const double[:, ::1] u = np.ascontiguousarray(drive, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(w_rec, dtype=np.float64)
    cdef const cnp.int64_t[::1] ptr = np.ascontiguousarray(child_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] idx = np.ascontiguousarray(child_idx, dtype=np.int64)
    cdef Py_ssize_t n_nodes = u.shape[0], n = u.shape[1], k, p, j, c
    out = np.empty((n_nodes, n))
    acc_arr = np.zeros(max(n, 1))
    cdef double[:, ::1] h = out
    cdef double[::1] acc = acc_arr
    if n_nodes == 0 or n == 0:
        return out
    for k in range(n_nodes):
        for j in range(n):
            acc[j] = 0.0
        for p in range(ptr[k], ptr[k + 1]):
            c = idx[p]
            for j in range(n):
                acc[j] = acc[j] + h[c, j]
        _affine_row(&u[k, 0], &acc[0], w, &h[k, 0], n)
        if not linear:
            row = out[k]
            _tanh(row, out=row)
    return out


cdef void _balance(double[:, ::1] a, Py_ssize_t n) noexcept nogil:
    cdef double radix = 2.0, sqrdx = 4.0
    cdef double c, r, g, f, s
    cdef Py_ssize_t i, j
    cdef bint done = False
    while not done:
        done = True
        for i in range(n):
            c = 0.0
            r = 0.0
            for j in range(n):
                if j != i:
                    c += fabs(a[j, i])
                    r += fabs(a[i, j])
            if c != 0.0 and r != 0.0:
                g = r / radix
                f = 1.0
                s = c + r
                while c < g:
                    f *= radix
                    c *= sqrdx
                g = r * radix
                while c > g:
                    f /= radix
                    c /= sqrdx
                if (c + r) / f < 0.95 * s:
                    done = False
                    g = 1.0 / f
                    for j in range(n):
                        a[i, j] *= g
                    for j in range(n):
                        a[j, i] *= f


cdef void _to_hessenberg(double[:, ::1] a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t m, i, j
    cdef double x, y, tmp
    for m in range(1, n - 1):
        x = 0.0
        i = m
        for j in range(m, n):
            if fabs(a[j, m - 1]) > fabs(x):
                x = a[j, m - 1]
                i = j
        if i != m:
            for j in range(m - 1, n):
                tmp = a[i, j]
                a[i, j] = a[m, j]
                a[m, j] = tmp
            for j in range(n):
                tmp = a[j, i]
                a[j, i] = a[j, m]
                a[j, m] = tmp
        if x != 0.0:
            for i in range(m + 1, n):
                y = a[i, m - 1]
                if y != 0.0:
                    y /= x
                    a[i, m - 1] = y
                    for j in range(m, n):
                        a[i, j] -= y * a[m, j]
                    for j in range(n):
                        a[j, m] += y * a[j, i]
    for i in range(2, n):
        for j in range(i - 1):
            a[i, j] = 0.0


cdef int _hqr(double[:, ::1] a, Py_ssize_t n, double[::1] wr, double[::1] wi) noexcept nogil:
    cdef Py_ssize_t nn, l, m, k, i, j, mmin
    cdef int its
    cdef double anorm = 0.0, t = 0.0
    cdef double x = 0.0, y = 0.0, z = 0.0, w = 0.0, p = 0.0, q = 0.0, r = 0.0, s, u, v
    for i in range(n):
        for j in range(i - 1 if i > 0 else 0, n):
            anorm += fabs(a[i, j])
    nn = n - 1
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = fabs(a[l - 1, l - 1]) + fabs(a[l, l])
                if s == 0.0:
                    s = anorm
                if fabs(a[l, l - 1]) + s == s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
            else:
                y = a[nn - 1, nn - 1]
                w = a[nn, nn - 1] * a[nn - 1, nn]
                if l == nn - 1:
                    p = 0.5 * (y - x)
                    q = p * p + w
                    z = sqrt(fabs(q))
                    x += t
                    if q >= 0.0:
                        z = p + copysign(z, p)
                        wr[nn - 1] = x + z
                        wr[nn] = x + z
                        if z != 0.0:
                            wr[nn] = x - w / z
                        wi[nn - 1] = 0.0
                        wi[nn] = 0.0
                    else:
                        wr[nn - 1] = x + p
                        wr[nn] = x + p
                        wi[nn - 1] = -z
                        wi[nn] = z
                    nn -= 2
                else:
                    if its == MAX_QR_ITER:
                        return -1
                    if its > 0 and its % 10 == 0:
                        t += x
                        for i in range(nn + 1):
                            a[i, i] -= x
                        s = fabs(a[nn, nn - 1]) + fabs(a[nn - 1, nn - 2])
                        x = 0.75 * s
                        y = x
                        w = -0.4375 * s * s
                    its += 1
                    m = nn - 2
                    while m >= l:
                        z = a[m, m]
                        r = x - z
                        s = y - z
                        p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                        q = a[m + 1, m + 1] - z - r - s
                        r = a[m + 2, m + 1]
                        s = fabs(p) + fabs(q) + fabs(r)
                        p /= s
                        q /= s
                        r /= s
                        if m == l:
                            break
                        u = fabs(a[m, m - 1]) * (fabs(q) + fabs(r))
                        v = fabs(p) * (fabs(a[m - 1, m - 1]) + fabs(z) + fabs(a[m + 1, m + 1]))
                        if u + v == v:
                            break
                        m -= 1
                    for i in range(m + 2, nn + 1):
                        a[i, i - 2] = 0.0
                        if i != m + 2:
                            a[i, i - 3] = 0.0
                    k = m
                    while k <= nn - 1:
                        if k != m:
                            p = a[k, k - 1]
                            q = a[k + 1, k - 1]
                            r = 0.0
                            if k != nn - 1:
                                r = a[k + 2, k - 1]
                            x = fabs(p) + fabs(q) + fabs(r)
                            if x != 0.0:
                                p /= x
                                q /= x
                                r /= x
                        s = copysign(sqrt(p * p + q * q + r * r), p)
                        if s != 0.0:
                            if k == m:
                                if l != m:
                                    a[k, k - 1] = -a[k, k - 1]
                            else:
                                a[k, k - 1] = -s * x
                            p += s
                            x = p / s
                            y = q / s
                            z = r / s
                            q /= p
                            r /= p
                            for j in range(k, nn + 1):
                                p = a[k, j] + q * a[k + 1, j]
                                if k != nn - 1:
                                    p += r * a[k + 2, j]
                                    a[k + 2, j] -= p * z
                                a[k + 1, j] -= p * y
                                a[k, j] -= p * x
                            mmin = nn if nn < k + 3 else k + 3
                            for i in range(l, mmin + 1):
                                p = x * a[i, k] + y * a[i, k + 1]
                                if k != nn - 1:
                                    p += z * a[i, k + 2]
                                    a[i, k + 2] -= p * r
                                a[i, k + 1] -= p * q
                                a[i, k] -= p
                        k += 1
            if not l < nn - 1:
                break
    return 0


def hessenberg_eigvals(matrix):
    arr = np.array(matrix, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = arr.shape[0]
    wr_arr = np.zeros(n)
    wi_arr = np.zeros(n)
    if n == 0:
        return wr_arr, wi_arr
    cdef double[:, ::1] a = arr
    cdef double[::1] wr = wr_arr
    cdef double[::1] wi = wi_arr
    cdef int status
    with nogil:
        _balance(a, n)
        _to_hessenberg(a, n)
        status = _hqr(a, n, wr, wi)
    if status != 0:
        raise ArithmeticError("Hessenberg QR did not converge")
    return wr_arr, wi_arr
