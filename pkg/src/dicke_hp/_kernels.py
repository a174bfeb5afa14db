"""Inner-loop kernels.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy
version.  The numba path is used when numba imports and the environment
variable ``DICKE_HP_NO_NUMBA`` is unset (or ``0``).  Both paths are kept
importable under explicit names so tests and the benchmark can compare them.
"""
import math
import os

import numpy as np
from scipy.special import gammaln

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("DICKE_HP_NO_NUMBA", "0") in ("", "0")


def _diagonal_starts(x, kmax):
    # f_0^(k) = e^{-x^2/2} x^k / sqrt(k!), in log space
    k = np.arange(kmax)
    if x == 0.0:
        out = np.zeros(kmax)
        out[0] = 1.0
        return out
    logmag = -0.5 * x * x + k * np.log(abs(x)) - 0.5 * gammaln(k + 1)
    sign = np.where((x < 0) & (k % 2 == 1), -1.0, 1.0)
    return sign * np.exp(logmag)


def _displacement_numpy(x, rows, cols):
    # Along each diagonal m - n = k the normalized Laguerre recurrence
    #   f_{n+1} = ((2n+1+k-y) f_n - sqrt(n(n+k)) f_{n-1}) / sqrt((n+1)(n+k+1)),  y = x^2
    # gives f_n = <n+k|D(x)|n>; <n|D(x)|n+k> = (-1)^k f_n.
    dim = max(rows, cols)
    y = x * x
    k = np.arange(dim, dtype=float)
    diag = np.zeros((dim, dim))  # diag[n, k] = f_n^(k)
    diag[0] = _diagonal_starts(x, dim)
    if dim > 1:
        diag[1] = (1.0 + k - y) * diag[0] / np.sqrt(k + 1.0)
    for n in range(1, dim - 1):
        diag[n + 1] = ((2 * n + 1 + k - y) * diag[n]
                       - np.sqrt(n * (n + k)) * diag[n - 1]) / np.sqrt((n + 1) * (n + k + 1))
    m_idx = np.arange(rows)[:, None]
    n_idx = np.arange(cols)[None, :]
    lo = np.minimum(m_idx, n_idx)
    kk = np.abs(m_idx - n_idx)
    out = diag[lo, kk]
    flip = (n_idx > m_idx) & (kk % 2 == 1)
    return np.where(flip, -out, out)


def _coherent_numpy(re, im, n_max):
    # log-space so that e^{-|b|^2/2} never underflows before the b^n growth
    r2 = re * re + im * im
    k = np.arange(n_max + 1)
    if r2 == 0.0:
        out = np.zeros(n_max + 1, dtype=np.complex128)
        out[0] = 1.0
        return out
    logmag = -0.5 * r2 + k * 0.5 * np.log(r2) - 0.5 * gammaln(k + 1)
    return np.exp(logmag) * np.exp(1j * k * np.arctan2(im, re))


def _curvature_numpy(y, h):
    return (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (h * h)


if HAVE_NUMBA:

    @njit(cache=True)
    def _displacement_numba(x, rows, cols):
        dim = max(rows, cols)
        y = x * x
        out = np.zeros((rows, cols))
        for k in range(dim):
            if x == 0.0:
                f_n = 1.0 if k == 0 else 0.0
            else:
                f_n = np.exp(-0.5 * y + k * np.log(abs(x)) - 0.5 * math.lgamma(k + 1.0))
                if x < 0 and k % 2 == 1:
                    f_n = -f_n
            f_prev = 0.0
            sgn = -1.0 if k % 2 == 1 else 1.0
            for n in range(dim - k):
                if n + k < rows and n < cols:
                    out[n + k, n] = f_n
                if k > 0 and n < rows and n + k < cols:
                    out[n, n + k] = sgn * f_n
                f_next = ((2 * n + 1 + k - y) * f_n
                          - np.sqrt(n * (n + k)) * f_prev) / np.sqrt((n + 1) * (n + k + 1))
                f_prev = f_n
                f_n = f_next
        return out

    @njit(cache=True)
    def _coherent_numba(re, im, n_max):
        out = np.zeros(n_max + 1, dtype=np.complex128)
        r2 = re * re + im * im
        if r2 == 0.0:
            out[0] = 1.0
            return out
        half_log = 0.5 * np.log(r2)
        theta = np.arctan2(im, re)
        for k in range(n_max + 1):
            logmag = -0.5 * r2 + k * half_log - 0.5 * math.lgamma(k + 1.0)
            out[k] = np.exp(logmag) * complex(np.cos(k * theta), np.sin(k * theta))
        return out

    @njit(cache=True)
    def _curvature_numba(y, h):
        n = y.shape[0]
        out = np.empty(n - 2)
        inv = 1.0 / (h * h)
        for k in range(1, n - 1):
            out[k - 1] = (y[k + 1] - 2.0 * y[k] + y[k - 1]) * inv
        return out

else:  # pragma: no cover
    _displacement_numba = _displacement_numpy
    _coherent_numba = _coherent_numpy
    _curvature_numba = _curvature_numpy


def displacement_matrix(x, rows, cols=None):
    """Matrix elements <m|exp(x (a^dag - a))|n> for m < rows, n < cols.

    Entries are those of the untruncated operator; the recurrence never
    touches a truncated ladder, so no cutoff artifact enters.
    """
    cols = rows if cols is None else cols
    fn = _displacement_numba if USE_NUMBA else _displacement_numpy
    return fn(float(x), int(rows), int(cols))


def coherent_amplitudes_raw(beta, n_max):
    """Unnormalized-on-truncation coherent amplitudes e^{-|b|^2/2} b^n / sqrt(n!)."""
    beta = complex(beta)
    fn = _coherent_numba if USE_NUMBA else _coherent_numpy
    return fn(beta.real, beta.imag, int(n_max))


def second_difference(y, h):
    y = np.ascontiguousarray(y, dtype=np.float64)
    fn = _curvature_numba if USE_NUMBA else _curvature_numpy
    return fn(y, float(h))
