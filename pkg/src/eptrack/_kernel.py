"""Compiled right-hand side of the EP equations of motion.

Same algebra as :func:`eptrack.eom._rates_core`, written as explicit
loops so that a step costs microseconds instead of dozens of numpy calls.
Errors are reported through a status code and decoded by the caller.
"""

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

OK = 0
SINGULAR = 1
COLLISION_EP_EP = 2
COLLISION_EP_ORD = 3
COLLISION_ORD_ORD = 4


def _kernel(hl, hd, et, f, e, x, m, gap_rtol, den_rtol, dec_rtol, xdot, scal, info):
    """Fill ``xdot`` (N x N) and ``scal`` = [lambda_dot, E~dot.., Edot.., fdot..].

    ``info`` receives (a, b, gap) on failure; the return value is a status code.
    """
    n = x.shape[0]
    j = n - 2 * m

    hscale = 0.0
    for p in range(n):
        for q in range(n):
            a = abs(hl[p, q])
            if a > hscale:
                hscale = a
    ld = 0.0 + 0.0j
    for r in range(m):
        den = 0.0 + 0.0j
        num = 0.0 + 0.0j
        for p in range(n):
            tl = 0.0 + 0.0j
            td = 0.0 + 0.0j
            for q in range(n):
                tl += hl[p, q] * x[r, q]
                td += hd[p, q] * x[r, q]
            den += x[r, p] * tl
            num += x[r, p] * td
        if hscale == 0.0 or abs(den) < den_rtol * hscale:
            info[0] = r
            info[2] = abs(den)
            return SINGULAR
        ld += -num / den
    ld = ld / m

    v = hl * ld + hd
    w = x @ v @ x.T
    vscale = 0.0
    for p in range(n):
        for q in range(n):
            a = abs(v[p, q])
            if a > vscale:
                vscale = a

    # gap threshold from the spectral diameter of all energies
    lo_r = np.inf
    hi_r = -np.inf
    lo_i = np.inf
    hi_i = -np.inf
    for k in range(m):
        z = et[k]
        lo_r = min(lo_r, z.real); hi_r = max(hi_r, z.real)
        lo_i = min(lo_i, z.imag); hi_i = max(hi_i, z.imag)
    for k in range(j):
        z = e[k]
        lo_r = min(lo_r, z.real); hi_r = max(hi_r, z.real)
        lo_i = min(lo_i, z.imag); hi_i = max(hi_i, z.imag)
    thr = 0.0
    if m + j >= 2:
        thr = gap_rtol * np.hypot(hi_r - lo_r, hi_i - lo_i)

    i_tt = np.zeros((m, m), dtype=np.complex128)
    for a in range(m):
        for b in range(m):
            if a != b:
                d = et[a] - et[b]
                if abs(d) < thr:
                    info[0] = a; info[1] = b; info[2] = abs(d)
                    return COLLISION_EP_EP
                i_tt[a, b] = 1.0 / d
    i_to = np.zeros((m, j), dtype=np.complex128)
    for a in range(m):
        for b in range(j):
            d = et[a] - e[b]
            if abs(d) < thr:
                info[0] = a; info[1] = b; info[2] = abs(d)
                return COLLISION_EP_ORD
            i_to[a, b] = 1.0 / d
    i_oo = np.zeros((j, j), dtype=np.complex128)
    dec = dec_rtol * max(vscale, 1.0)
    for a in range(j):
        for b in range(j):
            if a != b:
                d = e[a] - e[b]
                if abs(d) < thr:
                    if abs(w[2 * m + a, 2 * m + b]) <= dec:
                        continue
                    info[0] = a; info[1] = b; info[2] = abs(d)
                    return COLLISION_ORD_ORD
                i_oo[a, b] = 1.0 / d

    k = np.zeros((n, n), dtype=np.complex128)
    for r in range(m):
        fr = f[r]
        for s in range(m):
            if s == r:
                continue
            it = i_tt[r, s]
            it2 = it * it
            fs = f[s]
            wcc = w[s, r]            # (c~_s|V|c~_r)
            wbc = w[m + s, r]        # (b~_s|V|c~_r)
            wcb = w[s, m + r]        # (c~_s|V|b~_r)
            wbb = w[m + s, m + r]    # (b~_s|V|b~_r)
            k[r, s] = wbc * it + fs * wcc * it2
            k[r, m + s] = wcc * it
            k[m + r, s] = wbb * it + fs * wcb * it2 - fr * wbc * it2 - 2.0 * fr * fs * wcc * it2 * it
            k[m + r, m + s] = wcb * it - fr * wcc * it2
        for q in range(j):
            io = i_to[r, q]
            wco = w[r, 2 * m + q]        # (c~_r|V|c_q)
            wbo = w[m + r, 2 * m + q]    # (b~_r|V|c_q)
            k[r, 2 * m + q] = wco * io
            k[m + r, 2 * m + q] = wbo * io - fr * wco * io * io
            # rows of d c_q; 1/(E_q - E~_r) = -io
            k[2 * m + q, r] = -wbo * io + fr * wco * io * io
            k[2 * m + q, m + r] = -wco * io
    for q in range(j):
        for s in range(j):
            if s != q:
                k[2 * m + q, 2 * m + s] = w[2 * m + s, 2 * m + q] * i_oo[q, s]

    xdot[:, :] = k @ x
    scal[0] = ld
    for r in range(m):
        scal[1 + r] = w[m + r, r]
    for q in range(j):
        scal[1 + m + q] = w[2 * m + q, 2 * m + q]
    for r in range(m):
        scal[1 + m + j + r] = w[m + r, m + r]
    return OK


if numba is not None:
    kernel = numba.njit(cache=True)(_kernel)
else:  # pragma: no cover
    kernel = _kernel
