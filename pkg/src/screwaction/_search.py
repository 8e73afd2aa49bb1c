"""Batched 1-D minimisation: coarse grid seeding followed by golden-section refinement."""

from __future__ import annotations

import numpy as np

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, tol=1e-6):
    """Minimise ``f`` independently on every interval ``[lo[i], hi[i]]``.

    ``f`` maps an array of abscissae (same shape as ``lo``) to values.
    Returns ``(x, f(x))``.
    """
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while np.max(b - a) > tol:
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        d_new = np.where(left, c, a + _INVPHI * (b - a))
        c_new = np.where(left, b - _INVPHI * (b - a), d)
        fd_new = np.where(left, fc, np.nan)
        fc_new = np.where(left, np.nan, fd)
        c, d = c_new, d_new
        # one fresh evaluation per item per iteration
        x_new = np.where(left, c, d)
        f_new = f(x_new)
        fc = np.where(left, f_new, fc_new)
        fd = np.where(left, fd_new, f_new)
    x = 0.5 * (a + b)
    return x, f(x)


def grid_golden_min(f, lo, hi, n_grid=32, tol=1e-6):
    """Global-ish minimum of ``f`` on ``[lo, hi]`` per item.

    ``f`` must accept arrays of shape ``(m,)`` and ``(m, n_grid)`` where ``m``
    is the number of items; ``lo``/``hi`` are scalars or length-``m`` arrays.
    The best grid point's neighbourhood is refined by golden section, and the
    grid point itself is kept if refinement does not beat it.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    frac = np.linspace(0.0, 1.0, n_grid)
    grid = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    vals = f(grid)
    j = np.argmin(vals, axis=1)
    rows = np.arange(grid.shape[0])
    step = (hi - lo) / (n_grid - 1)
    a = np.maximum(grid[rows, j] - step, lo)
    b = np.minimum(grid[rows, j] + step, hi)
    x, fx = golden_section(f, a, b, tol)
    g_best = vals[rows, j]
    keep_grid = g_best < fx
    x = np.where(keep_grid, grid[rows, j], x)
    fx = np.where(keep_grid, g_best, fx)
    return x, fx
