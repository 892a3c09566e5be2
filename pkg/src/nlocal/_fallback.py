"""Pure-Python/numpy implementations of the kernels in ``_kernels.pyx``.

Same signatures and return conventions; used when the extension is not built
or when ``NLOCAL_PURE_PYTHON`` is set.
"""
import numpy as np


def jacobi_eigh(a_in, tol=1e-15, max_sweeps=100):
    a = np.array(a_in, dtype=np.complex128, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    total = float(np.sum(np.abs(a) ** 2))
    iu = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        off = float(np.sum(np.abs(a[iu]) ** 2))
        if off <= tol * tol * total or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ph = apq / mag
                phc = ph.conjugate()
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * phc * cq
                a[:, q] = s * cp + c * phc * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * ph * rq
                a[q, :] = s * rp + c * ph * rq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * phc * vq
                v[:, q] = s * vp + c * phc * vq
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    return np.real(np.diag(a)).copy(), v


def linear_lhs_batch(tensors, a0, a1, b0, b1):
    T = np.asarray(tensors, dtype=np.float64)
    a0, a1, b0, b1 = (np.atleast_2d(np.asarray(x, dtype=np.float64)) for x in (a0, a1, b0, b1))
    n = T.shape[0]
    sp, sm, tp, tm = a0 + a1, a0 - a1, b0 + b1, b0 - b1
    if n == 1:
        ival = np.einsum("gi,ij,gj->g", sp, T[0], tp)
        jval = np.einsum("gi,ij,gj->g", sm, T[0], tm)
    else:
        mid_z = np.prod(T[1:-1, 2, 2])
        mid_x = np.prod(T[1:-1, 0, 0])
        ival = (sp @ T[0][:, 2]) * mid_z * (tp @ T[-1][2, :])
        jval = (sm @ T[0][:, 0]) * mid_x * (tm @ T[-1][0, :])
    ival = 0.25 * ival
    jval = 0.25 * jval
    return np.sqrt(np.abs(ival)) + np.sqrt(np.abs(jval)), ival, jval


def star_lhs_batch(tensors, m0, m1, patterns):
    T = np.asarray(tensors, dtype=np.float64)
    m0 = np.asarray(m0, dtype=np.float64)
    m1 = np.asarray(m1, dtype=np.float64)
    H = np.asarray(patterns, dtype=np.intc)
    n = T.shape[0]
    sign = np.where(H == 0, 1.0, -1.0)  # (P, n)
    combo = m0[:, None, :, :] + sign[None, :, :, None] * m1[:, None, :, :]  # (G, P, n, 3)
    rows = T[np.arange(n)[None, :], H]  # (P, n, 3)
    factors = np.einsum("pjb,gpjb->gpj", rows, combo)
    J = 2.0 ** (-n) * np.prod(factors, axis=2)
    lhs = 2.0 ** (2 - n) * np.sum(np.abs(J) ** (1.0 / n), axis=1)
    return lhs, J
