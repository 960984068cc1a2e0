"""Pure-Python/NumPy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function. Used when the compiled
extension is unavailable or when ``RANDNN_PURE_PYTHON=1`` is set.
"""

import math

import numpy as np

MAX_QR_ITER = 60


def series_states(drive, w_rec, h0, linear=False):
    """Iterate ``h[t] = act(drive[t] + h[t-1] @ w_rec)`` starting from ``h0``."""
    drive = np.ascontiguousarray(drive, dtype=np.float64)
    w_rec = np.ascontiguousarray(w_rec, dtype=np.float64)
    steps, n = drive.shape
    out = np.empty((steps, n))
    prev = np.array(h0, dtype=np.float64)
    for t in range(steps):
        z = drive[t] + prev @ w_rec
        prev = z if linear else np.tanh(z)
        out[t] = prev
    return out


def tree_states(drive, w_rec, child_ptr, child_idx, linear=False):
    """Bottom-up recursion over nodes stored children-first.

    Node ``k`` has children ``child_idx[child_ptr[k]:child_ptr[k+1]]``, all of
    which must have index < k.
    """
    drive = np.ascontiguousarray(drive, dtype=np.float64)
    w_rec = np.ascontiguousarray(w_rec, dtype=np.float64)
    n_nodes, n = drive.shape
    out = np.empty((n_nodes, n))
    for k in range(n_nodes):
        s = np.zeros(n)
        for p in range(child_ptr[k], child_ptr[k + 1]):
            s = s + out[child_idx[p]]
        z = drive[k] + s @ w_rec
        out[k] = z if linear else np.tanh(z)
    return out


def _balance(a, n):
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = 0.0
            r = 0.0
            for j in range(n):
                if j != i:
                    c += abs(a[j][i])
                    r += abs(a[i][j])
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
                        a[i][j] *= g
                    for j in range(n):
                        a[j][i] *= f


def _to_hessenberg(a, n):
    # Gaussian elimination with pivoting (similarity transform).
    for m in range(1, n - 1):
        x = 0.0
        i = m
        for j in range(m, n):
            if abs(a[j][m - 1]) > abs(x):
                x = a[j][m - 1]
                i = j
        if i != m:
            for j in range(m - 1, n):
                a[i][j], a[m][j] = a[m][j], a[i][j]
            for j in range(n):
                a[j][i], a[j][m] = a[j][m], a[j][i]
        if x != 0.0:
            for i in range(m + 1, n):
                y = a[i][m - 1]
                if y != 0.0:
                    y /= x
                    a[i][m - 1] = y
                    row_m = a[m]
                    row_i = a[i]
                    for j in range(m, n):
                        row_i[j] -= y * row_m[j]
                    for j in range(n):
                        a[j][m] += y * a[j][i]
    for i in range(2, n):
        for j in range(i - 1):
            a[i][j] = 0.0


def _hqr(a, n):
    wr = [0.0] * n
    wi = [0.0] * n
    anorm = 0.0
    for i in range(n):
        for j in range(max(i - 1, 0), n):
            anorm += abs(a[i][j])
    nn = n - 1
    t = 0.0
    x = y = z = w = p = q = r = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1][l - 1]) + abs(a[l][l])
                if s == 0.0:
                    s = anorm
                if abs(a[l][l - 1]) + s == s:
                    a[l][l - 1] = 0.0
                    break
                l -= 1
            x = a[nn][nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
            else:
                y = a[nn - 1][nn - 1]
                w = a[nn][nn - 1] * a[nn - 1][nn]
                if l == nn - 1:
                    p = 0.5 * (y - x)
                    q = p * p + w
                    z = math.sqrt(abs(q))
                    x += t
                    if q >= 0.0:
                        z = p + math.copysign(z, p)
                        wr[nn - 1] = wr[nn] = x + z
                        if z != 0.0:
                            wr[nn] = x - w / z
                        wi[nn - 1] = wi[nn] = 0.0
                    else:
                        wr[nn - 1] = wr[nn] = x + p
                        wi[nn - 1] = -z
                        wi[nn] = z
                    nn -= 2
                else:
                    if its == MAX_QR_ITER:
                        raise ArithmeticError("Hessenberg QR did not converge")
                    if its > 0 and its % 10 == 0:
                        # exceptional shift breaks cycles such as permutations
                        t += x
                        for i in range(nn + 1):
                            a[i][i] -= x
                        s = abs(a[nn][nn - 1]) + abs(a[nn - 1][nn - 2])
                        x = y = 0.75 * s
                        w = -0.4375 * s * s
                    its += 1
                    m = nn - 2
                    while m >= l:
                        z = a[m][m]
                        r = x - z
                        s = y - z
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1]
                        q = a[m + 1][m + 1] - z - r - s
                        r = a[m + 2][m + 1]
                        s = abs(p) + abs(q) + abs(r)
                        p /= s
                        q /= s
                        r /= s
                        if m == l:
                            break
                        u = abs(a[m][m - 1]) * (abs(q) + abs(r))
                        v = abs(p) * (abs(a[m - 1][m - 1]) + abs(z) + abs(a[m + 1][m + 1]))
                        if u + v == v:
                            break
                        m -= 1
                    for i in range(m + 2, nn + 1):
                        a[i][i - 2] = 0.0
                        if i != m + 2:
                            a[i][i - 3] = 0.0
                    k = m
                    while k <= nn - 1:
                        if k != m:
                            p = a[k][k - 1]
                            q = a[k + 1][k - 1]
                            r = 0.0
                            if k != nn - 1:
                                r = a[k + 2][k - 1]
                            x = abs(p) + abs(q) + abs(r)
                            if x != 0.0:
                                p /= x
                                q /= x
                                r /= x
                        s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                        if s != 0.0:
                            if k == m:
                                if l != m:
                                    a[k][k - 1] = -a[k][k - 1]
                            else:
                                a[k][k - 1] = -s * x
                            p += s
                            x = p / s
                            y = q / s
                            z = r / s
                            q /= p
                            r /= p
                            for j in range(k, nn + 1):
                                p = a[k][j] + q * a[k + 1][j]
                                if k != nn - 1:
                                    p += r * a[k + 2][j]
                                    a[k + 2][j] -= p * z
                                a[k + 1][j] -= p * y
                                a[k][j] -= p * x
                            mmin = nn if nn < k + 3 else k + 3
                            for i in range(l, mmin + 1):
                                p = x * a[i][k] + y * a[i][k + 1]
                                if k != nn - 1:
                                    p += z * a[i][k + 2]
                                    a[i][k + 2] -= p * r
                                a[i][k + 1] -= p * q
                                a[i][k] -= p
                        k += 1
            if not l < nn - 1:
                break
    return wr, wi


def hessenberg_eigvals(matrix):
    """All eigenvalues of a real square matrix as ``(real, imag)`` arrays.

    Balancing, reduction to upper Hessenberg form, then Francis double-shift
    QR with deflation. Raises ``ArithmeticError`` if an eigenvalue fails to
    converge within ``MAX_QR_ITER`` sweeps.
    """
    a = np.array(matrix, dtype=np.float64).tolist()
    n = len(a)
    if n == 0:
        return np.empty(0), np.empty(0)
    _balance(a, n)
    _to_hessenberg(a, n)
    wr, wi = _hqr(a, n)
    return np.array(wr), np.array(wi)
