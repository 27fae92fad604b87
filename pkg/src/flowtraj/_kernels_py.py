"""Pure-numpy implementations of the hot kernels.

The arithmetic here is ordered expression by expression to match
``flowtraj._kernels`` (the Cython extension), so both backends produce
bit-identical results and can be swapped freely.
"""

import numpy as np

W_EDGE = 1.0 / 6.0
W_DIAG = 1.0 / 12.0


def hs_sweep(ix, iy, it, den, u, v):
    """One Jacobi sweep of the Horn-Schunck update.

    Averages u and v over the 8-neighborhood (replicate border) with the
    classic 1/6 edge, 1/12 diagonal weights, then applies the data-term
    correction. Inputs are read only; returns the new (u, v) pair.
    """
    pu = np.pad(u, 1, mode="edge")
    pv = np.pad(v, 1, mode="edge")

    edge_u = (pu[1:-1, :-2] + pu[1:-1, 2:]) + (pu[:-2, 1:-1] + pu[2:, 1:-1])
    diag_u = (pu[:-2, :-2] + pu[:-2, 2:]) + (pu[2:, :-2] + pu[2:, 2:])
    avg_u = edge_u * W_EDGE + diag_u * W_DIAG

    edge_v = (pv[1:-1, :-2] + pv[1:-1, 2:]) + (pv[:-2, 1:-1] + pv[2:, 1:-1])
    diag_v = (pv[:-2, :-2] + pv[:-2, 2:]) + (pv[2:, :-2] + pv[2:, 2:])
    avg_v = edge_v * W_EDGE + diag_v * W_DIAG

    frac = (ix * avg_u + iy * avg_v + it) / den
    return avg_u - ix * frac, avg_v - iy * frac


def convolve2d(src, kernel):
    """2-D convolution with zero padding, output the same size as src.

    True convolution (the kernel is flipped relative to correlation);
    accumulation order is row-major over the kernel to stay bit-compatible
    with the compiled backend.
    """
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    h, w = src.shape
    padded = np.zeros((h + 2 * ry, w + 2 * rx), dtype=np.float64)
    padded[ry:ry + h, rx:rx + w] = src
    out = np.zeros((h, w), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            out += kernel[i, j] * padded[2 * ry - i:2 * ry - i + h,
                                         2 * rx - j:2 * rx - j + w]
    return out
