# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: per-frequency 3x3 block solves and RK4 time loops.

Mirrors ``_fallback`` exactly; see there for the semantics.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, NAN

cnp.import_array()

cdef double PIVOT_TOL = 1e-14
cdef double CONSISTENCY_TOL = 1e-9


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double cabs(double complex z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef int _solve3(double complex a[3][3], double complex r[3], double complex x[3]) nogil:
    cdef int pivrow[3]
    cdef int row = 0, c, i, j, p
    cdef double scale = 0.0, rscale = 0.0, best, v
    cdef double complex f, piv, acc, tmp
    for i in range(3):
        pivrow[i] = -1
        x[i] = 0
        v = cabs(r[i])
        if v > rscale:
            rscale = v
        for j in range(3):
            v = cabs(a[i][j])
            if v > scale:
                scale = v
    if scale == 0.0:
        scale = 1.0
    if rscale == 0.0:
        rscale = 1.0
    for c in range(3):
        if row == 3:
            break
        p = row
        best = cabs(a[row][c])
        for i in range(row + 1, 3):
            v = cabs(a[i][c])
            if v > best:
                best = v
                p = i
        if best <= PIVOT_TOL * scale:
            continue
        if p != row:
            for j in range(3):
                tmp = a[p][j]
                a[p][j] = a[row][j]
                a[row][j] = tmp
            tmp = r[p]
            r[p] = r[row]
            r[row] = tmp
        piv = a[row][c]
        for i in range(row + 1, 3):
            f = a[i][c] / piv
            if f != 0:
                for j in range(c, 3):
                    a[i][j] = a[i][j] - f * a[row][j]
                r[i] = r[i] - f * r[row]
        pivrow[c] = row
        row += 1
    for i in range(row, 3):
        if cabs(r[i]) > CONSISTENCY_TOL * rscale:
            return 1
    for c in range(2, -1, -1):
        i = pivrow[c]
        if i < 0:
            continue
        acc = r[i]
        for j in range(c + 1, 3):
            acc = acc - a[i][j] * x[j]
        x[c] = acc / a[i][c]
    return 0


def block_response_grid(nus, double d1, double d2, double d3, double k, double g):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] nu_arr = np.ascontiguousarray(nus, dtype=np.float64).ravel()
    cdef Py_ssize_t n = nu_arr.shape[0], m
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef double complex a[3][3]
    cdef double complex r[3]
    cdef double complex x[3]
    cdef double sk = sqrt(k), nu
    cdef double complex ig = 1j * g
    with nogil:
        for m in range(n):
            nu = nu_arr[m]
            a[0][0] = k / 2 + 1j * (d1 - nu)
            a[0][1] = ig
            a[0][2] = 0
            a[1][0] = ig
            a[1][1] = 1j * (d2 - nu)
            a[1][2] = ig
            a[2][0] = k
            a[2][1] = ig
            a[2][2] = k / 2 + 1j * (d3 - nu)
            r[0] = sk
            r[1] = 0
            r[2] = sk
            if _solve3(a, r, x):
                out[m] = NAN + 1j * NAN
            else:
                out[m] = 1.0 - sk * (x[0] + x[2])
    return out.reshape(np.shape(nus))


def rk4_block(a, a_mid, double dt, double d1, double d2, double d3,
              double k, double g, b0=(0j, 0j, 0j)):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] u = np.ascontiguousarray(a, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] um = np.ascontiguousarray(a_mid, dtype=np.complex128)
    cdef Py_ssize_t n = u.shape[0], i
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef double sk = sqrt(k), h = dt
    cdef double complex c1 = -k / 2 - 1j * d1
    cdef double complex c2 = -1j * d2
    cdef double complex c3 = -k / 2 - 1j * d3
    cdef double complex ig = 1j * g
    cdef double complex b1 = b0[0], b2 = b0[1], b3 = b0[2]
    cdef double complex u0, uh, u1, x1, x2, x3
    cdef double complex k11, k12, k13, k21, k22, k23, k31, k32, k33, k41, k42, k43
    with nogil:
        for i in range(n - 1):
            u0 = u[i]
            out[i] = u0 - sk * (b1 + b3)
            uh = um[i]
            u1 = u[i + 1]
            k11 = c1 * b1 - ig * b2 + sk * u0
            k12 = c2 * b2 - ig * (b1 + b3)
            k13 = c3 * b3 - ig * b2 + sk * (u0 - sk * b1)
            x1 = b1 + 0.5 * h * k11
            x2 = b2 + 0.5 * h * k12
            x3 = b3 + 0.5 * h * k13
            k21 = c1 * x1 - ig * x2 + sk * uh
            k22 = c2 * x2 - ig * (x1 + x3)
            k23 = c3 * x3 - ig * x2 + sk * (uh - sk * x1)
            x1 = b1 + 0.5 * h * k21
            x2 = b2 + 0.5 * h * k22
            x3 = b3 + 0.5 * h * k23
            k31 = c1 * x1 - ig * x2 + sk * uh
            k32 = c2 * x2 - ig * (x1 + x3)
            k33 = c3 * x3 - ig * x2 + sk * (uh - sk * x1)
            x1 = b1 + h * k31
            x2 = b2 + h * k32
            x3 = b3 + h * k33
            k41 = c1 * x1 - ig * x2 + sk * u1
            k42 = c2 * x2 - ig * (x1 + x3)
            k43 = c3 * x3 - ig * x2 + sk * (u1 - sk * x1)
            b1 = b1 + h / 6 * (k11 + 2 * k21 + 2 * k31 + k41)
            b2 = b2 + h / 6 * (k12 + 2 * k22 + 2 * k32 + k42)
            b3 = b3 + h / 6 * (k13 + 2 * k23 + 2 * k33 + k43)
        if n:
            out[n - 1] = u[n - 1] - sk * (b1 + b3)
    return out, (b1, b2, b3)


def rk4_resonator(a, a_mid, double dt, double d, double k, b0=0j):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] u = np.ascontiguousarray(a, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] um = np.ascontiguousarray(a_mid, dtype=np.complex128)
    cdef Py_ssize_t n = u.shape[0], i
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef double sk = sqrt(k), h = dt
    cdef double complex c = -k / 2 - 1j * d
    cdef double complex b = b0
    cdef double complex u0, k1, k2, k3, k4
    with nogil:
        for i in range(n - 1):
            u0 = u[i]
            out[i] = u0 - sk * b
            k1 = c * b + sk * u0
            k2 = c * (b + 0.5 * h * k1) + sk * um[i]
            k3 = c * (b + 0.5 * h * k2) + sk * um[i]
            k4 = c * (b + h * k3) + sk * u[i + 1]
            b = b + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if n:
            out[n - 1] = u[n - 1] - sk * b
    return out, b
