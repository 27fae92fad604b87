# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

The arithmetic matches ``flowtraj._kernels_py`` expression for expression,
and the extension is built with -ffp-contract=off, so both backends return
bit-identical float64 results.
"""

import numpy as np


cdef double W_EDGE = 1.0 / 6.0
cdef double W_DIAG = 1.0 / 12.0


def hs_sweep(double[:, ::1] ix, double[:, ::1] iy, double[:, ::1] it,
             double[:, ::1] den, double[:, ::1] u, double[:, ::1] v):
    """One Jacobi sweep of the Horn-Schunck update.

    Same contract as the numpy fallback: inputs are read only, returns the
    new (u, v) pair as fresh arrays.
    """
    cdef Py_ssize_t h = u.shape[0]
    cdef Py_ssize_t w = u.shape[1]
    nu_arr = np.empty((h, w), dtype=np.float64)
    nv_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] nu = nu_arr
    cdef double[:, ::1] nv = nv_arr
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double au, av, frac
    for i in range(h):
        im = i - 1 if i > 0 else 0
        ip = i + 1 if i < h - 1 else h - 1
        for j in range(w):
            jm = j - 1 if j > 0 else 0
            jp = j + 1 if j < w - 1 else w - 1
            au = ((u[i, jm] + u[i, jp]) + (u[im, j] + u[ip, j])) * W_EDGE \
                + ((u[im, jm] + u[im, jp]) + (u[ip, jm] + u[ip, jp])) * W_DIAG
            av = ((v[i, jm] + v[i, jp]) + (v[im, j] + v[ip, j])) * W_EDGE \
                + ((v[im, jm] + v[im, jp]) + (v[ip, jm] + v[ip, jp])) * W_DIAG
            frac = (ix[i, j] * au + iy[i, j] * av + it[i, j]) / den[i, j]
            nu[i, j] = au - ix[i, j] * frac
            nv[i, j] = av - iy[i, j] * frac
    return nu_arr, nv_arr


def convolve2d(double[:, ::1] src, double[:, ::1] kernel):
    """2-D convolution with zero padding, output the same size as src.

    Accumulates over kernel taps in row-major order, including the padded
    zero terms, to mirror the numpy fallback exactly.
    """
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t kh = kernel.shape[0]
    cdef Py_ssize_t kw = kernel.shape[1]
    cdef Py_ssize_t ry = kh // 2
    cdef Py_ssize_t rx = kw // 2
    padded_arr = np.zeros((h + 2 * ry, w + 2 * rx), dtype=np.float64)
    padded_arr[ry:ry + h, rx:rx + w] = np.asarray(src)
    cdef double[:, ::1] padded = padded_arr
    out_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, y, x, oy, ox
    cdef double k
    for i in range(kh):
        oy = 2 * ry - i
        for j in range(kw):
            ox = 2 * rx - j
            k = kernel[i, j]
            for y in range(h):
                for x in range(w):
                    out[y, x] = out[y, x] + k * padded[oy + y, ox + x]
    return out_arr
