# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Mirrors :mod:`nlocal._fallback` function for function; :mod:`nlocal._backend`
picks one at import time.
"""
import numpy as np

from libc.math cimport sqrt, fabs, pow, copysign


def jacobi_eigh(a_in, double tol=1e-15, int max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Returns ``(w, v)`` with ``w`` unsorted and columns of ``v`` the eigenvectors.
    """
    a_arr = np.array(a_in, dtype=np.complex128, order="C", copy=True)
    cdef double complex[:, ::1] a = a_arr
    cdef Py_ssize_t n = a.shape[0]
    v_arr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double off, total, mag, theta, t, c, s
    cdef double complex apq, ph, phc, x, y

    total = 0.0
    for p in range(n):
        for q in range(n):
            total += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
        if off <= tol * tol * total or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if mag == 0.0:
                    continue
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = copysign(1.0, theta) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                ph = apq / mag
                phc = ph.conjugate()
                for k in range(n):
                    x = a[k, p]
                    y = a[k, q]
                    a[k, p] = c * x - s * phc * y
                    a[k, q] = s * x + c * phc * y
                for k in range(n):
                    x = a[p, k]
                    y = a[q, k]
                    a[p, k] = c * x - s * ph * y
                    a[q, k] = s * x + c * ph * y
                for k in range(n):
                    x = v[k, p]
                    y = v[k, q]
                    v[k, p] = c * x - s * phc * y
                    v[k, q] = s * x + c * phc * y
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    w = np.empty(n, dtype=np.float64)
    for p in range(n):
        w[p] = a[p, p].real
    return w, v_arr


def linear_lhs_batch(tensors, a0, a1, b0, b1):
    """Chain functional sqrt|I| + sqrt|J| for a batch of extreme-party settings.

    ``tensors`` is (n, 3, 3); each setting array is (G, 3) of eta-scaled
    Bloch vectors. Central parties measure the Bell basis.
    Returns ``(lhs, I, J)``, each of shape (G,).
    """
    cdef double[:, :, ::1] T = np.ascontiguousarray(tensors, dtype=np.float64)
    cdef double[:, ::1] A0 = np.ascontiguousarray(a0, dtype=np.float64)
    cdef double[:, ::1] A1 = np.ascontiguousarray(a1, dtype=np.float64)
    cdef double[:, ::1] B0 = np.ascontiguousarray(b0, dtype=np.float64)
    cdef double[:, ::1] B1 = np.ascontiguousarray(b1, dtype=np.float64)
    cdef Py_ssize_t n = T.shape[0], G = A0.shape[0], g, k, i, j
    out = np.empty(G, dtype=np.float64)
    out_i = np.empty(G, dtype=np.float64)
    out_j = np.empty(G, dtype=np.float64)
    cdef double[::1] lhs = out, vi = out_i, vj = out_j
    cdef double mid_z = 1.0, mid_x = 1.0, left, right, ival, jval
    cdef double sp[3]
    cdef double sm[3]
    cdef double tp[3]
    cdef double tm[3]
    for k in range(1, n - 1):
        mid_z *= T[k, 2, 2]
        mid_x *= T[k, 0, 0]
    for g in range(G):
        for i in range(3):
            sp[i] = A0[g, i] + A1[g, i]
            sm[i] = A0[g, i] - A1[g, i]
            tp[i] = B0[g, i] + B1[g, i]
            tm[i] = B0[g, i] - B1[g, i]
        if n == 1:
            ival = 0.0
            jval = 0.0
            for i in range(3):
                for j in range(3):
                    ival += sp[i] * T[0, i, j] * tp[j]
                    jval += sm[i] * T[0, i, j] * tm[j]
        else:
            left = 0.0
            right = 0.0
            for i in range(3):
                left += sp[i] * T[0, i, 2]
                right += T[n - 1, 2, i] * tp[i]
            ival = left * mid_z * right
            left = 0.0
            right = 0.0
            for i in range(3):
                left += sm[i] * T[0, i, 0]
                right += T[n - 1, 0, i] * tm[i]
            jval = left * mid_x * right
        ival *= 0.25
        jval *= 0.25
        vi[g] = ival
        vj[g] = jval
        lhs[g] = sqrt(fabs(ival)) + sqrt(fabs(jval))
    return out, out_i, out_j


def star_lhs_batch(tensors, m0, m1, patterns):
    """Star functional 2^(2-n) sum_i |J_i|^(1/n) for a batch of edge settings.

    ``m0``/``m1`` are (G, n, 3) eta-scaled Bloch vectors of the two settings of
    each edge; ``patterns`` is (P, n) with 0 for a sigma_1 slot, 1 for sigma_2.
    Returns ``(lhs, J)`` with J of shape (G, P).
    """
    cdef double[:, :, ::1] T = np.ascontiguousarray(tensors, dtype=np.float64)
    cdef double[:, :, ::1] M0 = np.ascontiguousarray(m0, dtype=np.float64)
    cdef double[:, :, ::1] M1 = np.ascontiguousarray(m1, dtype=np.float64)
    cdef int[:, ::1] H = np.ascontiguousarray(patterns, dtype=np.intc)
    cdef Py_ssize_t n = T.shape[0], G = M0.shape[0], P = H.shape[0], g, p, j, b
    out = np.empty(G, dtype=np.float64)
    out_j = np.empty((G, P), dtype=np.float64)
    cdef double[::1] lhs = out
    cdef double[:, ::1] vj = out_j
    cdef double scale = pow(2.0, -<double>n), pre = pow(2.0, 2.0 - <double>n)
    cdef double inv_n = 1.0 / <double>n
    cdef double prod, factor, total, sgn
    cdef int h
    for g in range(G):
        total = 0.0
        for p in range(P):
            prod = scale
            for j in range(n):
                h = H[p, j]
                sgn = 1.0 if h == 0 else -1.0
                factor = 0.0
                for b in range(3):
                    factor += T[j, h, b] * (M0[g, j, b] + sgn * M1[g, j, b])
                prod *= factor
            vj[g, p] = prod
            total += pow(fabs(prod), inv_n)
        lhs[g] = pre * total
    return out, out_j
