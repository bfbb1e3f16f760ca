"""Statevector engine for iterating ``S = D_s I_t^phi``."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NoMaximumFound, SpecError
from .spectrum import UnitaryOperator

SATURATION_TOL = 1e-12


def _matrix(op):
    return op.matrix if isinstance(op, UnitaryOperator) else np.asarray(op, dtype=complex)


def selective_phase(psi, t, phi):
    """Multiply amplitude ``t`` by ``e^{i phi}``; returns a new array."""
    psi = np.array(psi, dtype=complex)
    if not 0 <= t < psi.shape[0]:
        raise SpecError(f"target index {t} out of range for dimension {psi.shape[0]}")
    psi[t] *= np.exp(1j * phi)
    return psi


def search_step(D, t, phi, psi):
    """One application of ``S = D_s I_t^phi``."""
    d = _matrix(D)
    psi = np.asarray(psi)
    if d.shape[1] != psi.shape[0]:
        raise SpecError(f"dimension mismatch: operator {d.shape}, state {psi.shape}")
    return d @ selective_phase(psi, t, phi)


def search_matrix(D, t, phi):
    """Explicit dense ``S`` (for eigen-decomposition oracles)."""
    d = np.array(_matrix(D))
    d[:, t] *= np.exp(1j * phi)
    return d


def search_power(D, t, phi, q):
    """Dense ``S^q`` for integer ``q`` (negative powers use ``S^dag``)."""
    s = search_matrix(D, t, phi)
    if q < 0:
        s = s.conj().T
        q = -q
    return np.linalg.matrix_power(s, q)


def default_q_max(B, alpha):
    """Sampling window ``10 * ceil(pi B / (4 alpha))``."""
    return 10 * math.ceil(math.pi * B / (4.0 * alpha))


@dataclass(frozen=True)
class SuccessCurve:
    """``probability[q] = |<t|S^q|s>|^2`` for ``q = 0..q_max``."""

    probability: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probability, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("curve needs at least one point")
        if np.any(p < 0.0) or np.any(p > 1.0 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "probability", p)

    @property
    def q(self):
        return np.arange(self.probability.size)

    @property
    def q_max(self):
        return self.probability.size - 1

    def __len__(self):
        return self.probability.size

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "probability"])
        for q, p in enumerate(self.probability):
            w.writerow([q, repr(float(p))])
        return buf.getvalue()


def success_curve(D, t, phi, s, q_max):
    d = _matrix(D)
    s = np.asarray(s, dtype=complex)
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    if d.shape[1] != s.shape[0]:
        raise SpecError(f"dimension mismatch: operator {d.shape}, state {s.shape}")
    probs, _ = _kernels.search_curve(d, int(t), complex(np.exp(1j * phi)), s.copy(), int(q_max))
    return SuccessCurve(np.minimum(probs, 1.0))


def evolve(D, t, phi, s, q):
    """``S^q |s>`` by repeated matvec."""
    d = _matrix(D)
    if q == 0:
        return np.array(s, dtype=complex)
    _, psi = _kernels.search_curve(d, int(t), complex(np.exp(1j * phi)), np.array(s, dtype=complex), int(q))
    return psi


def target_probability(psi, t):
    """``|psi_t|^2`` computed exactly as the curve kernel does."""
    a = psi[t]
    return float(a.real**2 + a.imag**2)


def find_first_max(curve):
    """Smallest ``q`` with ``P(q-1) <= P(q) >= P(q+1)``.

    Only interior points qualify, except that a boundary value within
    ``1e-12`` of 1 is accepted since nothing can exceed it.
    """
    p = curve.probability if isinstance(curve, SuccessCurve) else np.asarray(curve, dtype=float)
    if p.size < 2:
        raise ValueError("curve needs at least two points")
    for q in range(1, p.size - 1):
        if p[q] >= p[q - 1] and p[q] >= p[q + 1]:
            return q, float(p[q])
    last = p.size - 1
    sat = np.flatnonzero(p >= 1.0 - SATURATION_TOL)
    if sat.size:
        return int(sat[0]), float(p[sat[0]])
    raise NoMaximumFound(last, float(p[last]))
