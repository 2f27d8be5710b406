# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_fallback`` for the reference semantics."""
import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport (cosh, exp, fabs, isfinite, lgamma, log, sinh, sin,
                        sqrt, INFINITY, M_PI)
from libc.stdlib cimport free, malloc
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (random_standard_exponential,
                                           random_standard_normal)

cdef double SPECTRAL_MEAN = 1.0 / sqrt(2.0 * M_PI)
cdef double EPS = 1e-16
cdef int MAXIT = 10000

cdef double[26] RGAMMA1P
RGAMMA1P[:] = [
    1.0,
    0.5772156649015329,
    -0.6558780715202539,
    -0.04200263503409524,
    0.16653861138229148,
    -0.04219773455554433,
    -0.009621971527876973,
    0.0072189432466631,
    -0.0011651675918590652,
    -0.00021524167411495098,
    0.0001280502823881162,
    -2.013485478078824e-05,
    -1.2504934821426706e-06,
    1.133027231981696e-06,
    -2.056338416977607e-07,
    6.116095104481416e-09,
    5.002007644469223e-09,
    -1.18127457048702e-09,
    1.0434267116911005e-10,
    7.782263439905071e-12,
    -3.696805618642206e-12,
    5.100370287454476e-13,
    -2.0583260535665066e-14,
    -5.348122539423018e-15,
    1.2267786282382608e-15,
    -1.1812593016974588e-16,
]


cdef void _kmu_pair_scaled(double xmu, double x, double *kmu, double *k1) noexcept nogil:
    cdef double xmu2 = xmu * xmu
    cdef double x2, pimu, fact, d, e, fact2, gam1, gam2, gampl, gammi, mu2
    cdef double ff, total, total1, p, q, c, delta, scale
    cdef double b, h, delh, q1, q2, a1, a, s, qnew, dels
    cdef int i, j
    if x < 2.0:
        x2 = 0.5 * x
        pimu = M_PI * xmu
        fact = 1.0 if fabs(pimu) < EPS else pimu / sin(pimu)
        d = -log(x2)
        e = xmu * d
        fact2 = 1.0 if fabs(e) < EPS else sinh(e) / e
        mu2 = xmu * xmu
        gam1 = 0.0
        j = 25
        while j >= 1:
            gam1 = gam1 * mu2 + RGAMMA1P[j]
            j -= 2
        gam1 = -gam1
        gam2 = 0.0
        j = 24
        while j >= 0:
            gam2 = gam2 * mu2 + RGAMMA1P[j]
            j -= 2
        gampl = gam2 - xmu * gam1
        gammi = gam2 + xmu * gam1
        ff = fact * (gam1 * cosh(e) + gam2 * fact2 * d)
        total = ff
        e = exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        d = x2 * x2
        total1 = p
        for i in range(1, MAXIT + 1):
            ff = (i * ff + p + q) / (i * i - xmu2)
            c *= d / i
            p /= i - xmu
            q /= i + xmu
            delta = c * ff
            total += delta
            total1 += c * (p - i * ff)
            if fabs(delta) < fabs(total) * EPS:
                break
        scale = exp(x)
        kmu[0] = total * scale
        k1[0] = total1 * (2.0 / x) * scale
        return
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25 - xmu2
    q = a1
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, MAXIT + 1):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if fabs(dels / s) < EPS:
            break
    h = a1 * h
    kmu[0] = sqrt(M_PI / (2.0 * x)) / s
    k1[0] = kmu[0] * (xmu + x + 0.5 - h) / x


cdef double _kv_scaled(double nu, double x) noexcept nogil:
    cdef double kmu, k1, knext, xi2, xmu
    cdef int nl, i
    nu = fabs(nu)
    nl = <int>(nu + 0.5)
    xmu = nu - nl
    _kmu_pair_scaled(xmu, x, &kmu, &k1)
    xi2 = 2.0 / x
    for i in range(1, nl + 1):
        knext = (xmu + i) * xi2 * k1 + kmu
        kmu = k1
        k1 = knext
    return kmu


cdef double _matern(double nu, double x) noexcept nogil:
    cdef double k, logv, v
    if x <= 0.0:
        return 1.0
    k = _kv_scaled(nu, x)
    if not isfinite(k):
        return 1.0
    logv = (1.0 - nu) * log(2.0) - lgamma(nu) + nu * log(x) - x + log(k)
    v = exp(logv)
    return 1.0 if v > 1.0 else v


def kv_scaled_scalar(double nu, double x):
    return _kv_scaled(nu, x)


def kv_scaled(nu, x):
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    cdef const double[::1] fnu = np.ascontiguousarray(nu_b).ravel()
    cdef const double[::1] fx = np.ascontiguousarray(x_b).ravel()
    out = np.empty(fnu.shape[0])
    cdef double[::1] fo = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(fo.shape[0]):
            fo[i] = _kv_scaled(fnu[i], fx[i])
    return out.reshape(nu_b.shape)


def matern(nu, x):
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    cdef const double[::1] fnu = np.ascontiguousarray(nu_b).ravel()
    cdef const double[::1] fx = np.ascontiguousarray(x_b).ravel()
    out = np.empty(fnu.shape[0])
    cdef double[::1] fo = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(fo.shape[0]):
            fo[i] = _matern(fnu[i], fx[i])
    return out.reshape(nu_b.shape)


cdef int _simulate_one(const double[:, ::1] factor, bitgen_t *rng, double bound,
                       Py_ssize_t max_points, double[::1] z, double *g) noexcept nogil:
    cdef Py_ssize_t D = factor.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double gamma = 0.0, zmin = 0.0, s, acc, v
    for i in range(D):
        z[i] = 0.0
    for k in range(max_points):
        gamma += random_standard_exponential(rng)
        s = 1.0 / (SPECTRAL_MEAN * gamma)
        if s * bound < zmin:
            return 0
        for j in range(D):
            g[j] = random_standard_normal(rng)
        for i in range(D):
            acc = 0.0
            for j in range(D):
                acc += factor[i, j] * g[j]
            v = s * acc
            if v > z[i]:
                z[i] = v
        zmin = z[0]
        for i in range(1, D):
            if z[i] < zmin:
                zmin = z[i]
    return -1


def simulate_blocks(factor, streams, Py_ssize_t n_blocks, double bound,
                    Py_ssize_t max_points, double[:, ::1] out):
    cdef const double[:, ::1] f = np.ascontiguousarray(factor, dtype=float)
    cdef Py_ssize_t D = f.shape[0]
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(streams.bitgen.capsule, "BitGenerator")
    cdef double *g = <double *> malloc(D * sizeof(double))
    cdef Py_ssize_t b
    cdef int status
    if g == NULL:
        raise MemoryError()
    try:
        for b in range(n_blocks):
            streams.seek(b)
            with nogil:
                status = _simulate_one(f, rng, bound, max_points, out[b], g)
            if status != 0:
                return b
    finally:
        free(g)
    return -1


def pair_theta(z, pairs):
    cdef const double[:, ::1] zz = np.ascontiguousarray(z, dtype=float)
    cdef const Py_ssize_t[:, ::1] pp = np.ascontiguousarray(pairs, dtype=np.intp)
    cdef Py_ssize_t n = zz.shape[0], m = pp.shape[0], i, t
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double acc, a, b
    with nogil:
        for t in range(m):
            acc = 0.0
            for i in range(n):
                a = zz[i, pp[t, 0]]
                b = zz[i, pp[t, 1]]
                acc += 1.0 / (a if a > b else b)
            o[t] = n / acc
    return out


def triplet_theta(z, triplets):
    cdef const double[:, ::1] zz = np.ascontiguousarray(z, dtype=float)
    cdef const Py_ssize_t[:, ::1] tt = np.ascontiguousarray(triplets, dtype=np.intp)
    cdef Py_ssize_t n = zz.shape[0], m = tt.shape[0], i, t
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double acc, a, b, c
    with nogil:
        for t in range(m):
            acc = 0.0
            for i in range(n):
                a = zz[i, tt[t, 0]]
                b = zz[i, tt[t, 1]]
                c = zz[i, tt[t, 2]]
                if b > a:
                    a = b
                if c > a:
                    a = c
                acc += 1.0 / a
            o[t] = n / acc
    return out


cdef void _ward_row_nn(double[:, ::1] d, signed char[::1] alive, Py_ssize_t i,
                       Py_ssize_t *nn, double *nnd) noexcept nogil:
    cdef Py_ssize_t n = d.shape[0], j
    cdef double best = INFINITY
    cdef Py_ssize_t arg = -1
    for j in range(i + 1, n):
        if alive[j] and d[i, j] < best:
            best = d[i, j]
            arg = j
    nn[i] = arg
    nnd[i] = best


def ward_roots(sqdist, Py_ssize_t n_clusters):
    d_arr = np.array(sqdist, dtype=float, copy=True, order="C")
    cdef double[:, ::1] d = d_arr
    cdef Py_ssize_t n = d.shape[0]
    size_arr = np.ones(n)
    parent_arr = np.arange(n, dtype=np.intp)
    alive_arr = np.ones(n, dtype=np.int8)
    nn_arr = np.full(n, -1, dtype=np.intp)
    nnd_arr = np.full(n, np.inf)
    cdef double[::1] size = size_arr
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef signed char[::1] alive = alive_arr
    cdef Py_ssize_t[::1] nn = nn_arr
    cdef double[::1] nnd = nnd_arr
    cdef Py_ssize_t active = n, i, k, a, b, r
    cdef double best, na, nb, dab, nk, v
    with nogil:
        for i in range(n):
            _ward_row_nn(d, alive, i, &nn[0], &nnd[0])
        while active > n_clusters:
            best = INFINITY
            a = -1
            for i in range(n):
                if alive[i] and nn[i] >= 0 and nnd[i] < best:
                    best = nnd[i]
                    a = i
            b = nn[a]
            na = size[a]
            nb = size[b]
            dab = d[a, b]
            for k in range(n):
                if alive[k] and k != a and k != b:
                    nk = size[k]
                    v = ((na + nk) * d[a, k] + (nb + nk) * d[b, k] - nk * dab) / (na + nb + nk)
                    d[a, k] = v
                    d[k, a] = v
            alive[b] = 0
            size[a] = na + nb
            parent[b] = a
            active -= 1
            _ward_row_nn(d, alive, a, &nn[0], &nnd[0])
            for i in range(b):
                if not alive[i] or i == a:
                    continue
                if nn[i] == a or nn[i] == b:
                    _ward_row_nn(d, alive, i, &nn[0], &nnd[0])
                elif i < a and (d[i, a] < nnd[i] or (d[i, a] == nnd[i] and a < nn[i])):
                    nn[i] = a
                    nnd[i] = d[i, a]
        for i in range(n):
            r = i
            while parent[r] != r:
                r = parent[r]
            nn[i] = r
    return nn_arr.copy()
