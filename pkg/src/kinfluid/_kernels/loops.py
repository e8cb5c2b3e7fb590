"""Scalar-loop kernels, written so numba can compile them directly.

The numpy fallback in numpy_impl.py implements the same contracts with
vectorized array operations; kinfluid._kernels picks one at import time.
"""
import numpy as np


def upwind_transport(f, xi, dt_over_dx, ghost_lo, ghost_hi):
    """First-order upwind advection in x, one constant speed per column.

    ghost_lo/ghost_hi hold the wall ghost-cell value for every column;
    only the inflow columns of each wall are actually read.
    """
    nx, nv = f.shape
    out = np.empty_like(f)
    for j in range(nv):
        c = xi[j] * dt_over_dx
        if c >= 0.0:
            out[0, j] = f[0, j] - c * (f[0, j] - ghost_lo[j])
            for i in range(1, nx):
                out[i, j] = f[i, j] - c * (f[i, j] - f[i - 1, j])
        else:
            for i in range(nx - 1):
                out[i, j] = f[i, j] - c * (f[i + 1, j] - f[i, j])
            out[nx - 1, j] = f[nx - 1, j] - c * (ghost_hi[j] - f[nx - 1, j])
    return out


def upwind_drag(f, drift, dt_over_dv):
    """Conservative upwind advection along the velocity axis.

    drift has shape (nx, nv+1): interface drift speeds per spatial cell,
    with the two outermost interfaces already forced to zero flux.
    """
    nx, nv = f.shape
    out = np.empty_like(f)
    for i in range(nx):
        prev_flux = 0.0
        for j in range(nv):
            if j == nv - 1:
                flux = 0.0
            else:
                a = drift[i, j + 1]
                if a >= 0.0:
                    flux = a * f[i, j]
                else:
                    flux = a * f[i, j + 1]
            out[i, j] = f[i, j] - dt_over_dv * (flux - prev_flux)
            prev_flux = flux
    return out


def thomas_batch(lower, diag, upper, rhs):
    """Solve one tridiagonal system per row. lower[:,0] / upper[:,-1] unused."""
    nx, n = rhs.shape
    out = np.empty_like(rhs)
    cp = np.empty(n)
    dp = np.empty(n)
    for i in range(nx):
        cp[0] = upper[i, 0] / diag[i, 0]
        dp[0] = rhs[i, 0] / diag[i, 0]
        for j in range(1, n):
            m = diag[i, j] - lower[i, j] * cp[j - 1]
            cp[j] = upper[i, j] / m
            dp[j] = (rhs[i, j] - lower[i, j] * dp[j - 1]) / m
        out[i, n - 1] = dp[n - 1]
        for j in range(n - 2, -1, -1):
            out[i, j] = dp[j] - cp[j] * out[i, j + 1]
    return out
