"""Hot inner loops, each with a numba and a pure-numpy implementation.

The active implementation is picked once at import time.  Set
``DIFFSEARCH_NUMBA=0`` to force the numpy path (also used automatically
when numba is not importable).  Both implementations stay importable under
explicit names so the test-suite and the benchmark can compare them.
"""

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


USE_NUMBA = HAS_NUMBA and os.environ.get("DIFFSEARCH_NUMBA", "1").lower() not in (
    "0",
    "false",
    "no",
    "off",
)

TWO_PI = 2.0 * np.pi


# --------------------------------------------------------------------------
# secular equation: sum_j w_j cot((lam - p_j)/2) = cot(phi/2)
# --------------------------------------------------------------------------


@njit(cache=True)
def secular_bisect_numba(poles, weights, cot_phi, tol):
    m = poles.shape[0]
    roots = np.empty(m)
    for k in range(m):
        lo = poles[k]
        if k + 1 < m:
            hi = poles[k + 1]
        else:
            hi = poles[0] + TWO_PI
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            f = -cot_phi
            for j in range(m):
                f += weights[j] / np.tan(0.5 * (mid - poles[j]))
            # each branch is strictly decreasing: +inf just right of a pole
            if f > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol:
                break
        roots[k] = 0.5 * (lo + hi)
    return roots


def secular_bisect_numpy(poles, weights, cot_phi, tol):
    lo = poles.copy()
    hi = np.roll(poles, -1)
    hi[-1] += TWO_PI
    active = np.ones(lo.shape, dtype=bool)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        active &= (mid > lo) & (mid < hi)
        if not active.any():
            break
        f = (weights / np.tan(0.5 * (mid[:, None] - poles[None, :]))).sum(axis=1) - cot_phi
        pos = f > 0.0
        lo = np.where(active & pos, mid, lo)
        hi = np.where(active & ~pos, mid, hi)
        active &= (hi - lo) > tol
        if not active.any():
            break
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# repeated application of S = D . diag(1,..,e^{i phi},..,1)
# --------------------------------------------------------------------------


@njit(cache=True)
def search_curve_numba(D, t, phase, psi, q_max):
    out = np.empty(q_max + 1)
    out[0] = psi[t].real ** 2 + psi[t].imag ** 2
    for q in range(1, q_max + 1):
        psi[t] = psi[t] * phase
        psi = D @ psi
        out[q] = psi[t].real ** 2 + psi[t].imag ** 2
    return out, psi


def search_curve_numpy(D, t, phase, psi, q_max):
    out = np.empty(q_max + 1)
    out[0] = psi[t].real ** 2 + psi[t].imag ** 2
    for q in range(1, q_max + 1):
        psi[t] *= phase
        psi = D @ psi
        out[q] = psi[t].real ** 2 + psi[t].imag ** 2
    return out, psi


# --------------------------------------------------------------------------
# amplitude amplification with exact reflections: psi <- -(1-2|u><u|)(1-2|t><t|) psi
# --------------------------------------------------------------------------


@njit(cache=True)
def reflect_pair_numba(u, t, psi, iterations):
    n = psi.shape[0]
    for _ in range(iterations):
        psi[t] = -psi[t]
        ov = 0.0 + 0.0j
        for i in range(n):
            ov += np.conj(u[i]) * psi[i]
        for i in range(n):
            psi[i] = 2.0 * ov * u[i] - psi[i]
    return psi


def reflect_pair_numpy(u, t, psi, iterations):
    for _ in range(iterations):
        psi[t] = -psi[t]
        psi = 2.0 * np.vdot(u, psi) * u - psi
    return psi


if USE_NUMBA:
    secular_bisect = secular_bisect_numba
    search_curve = search_curve_numba
    reflect_pair = reflect_pair_numba
else:
    secular_bisect = secular_bisect_numpy
    search_curve = search_curve_numpy
    reflect_pair = reflect_pair_numpy


def backend():
    """Name of the active kernel backend."""
    return "numba" if USE_NUMBA else "numpy"
