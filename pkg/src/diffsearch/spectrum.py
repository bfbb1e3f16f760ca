"""Diffusion operators built from a prescribed eigenspectrum.

A :class:`DiffusionSpec` fixes the eigenphases of ``D_s`` and the weight
``|<l|t>|^2`` each eigenvector carries on the target basis state.  The
source state ``|s>`` is the eigenvector with phase 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InfeasibleSpecError, SpecError

ZERO_PHASE_TOL = 1e-12
SUM_TOL = 1e-12
UNITARY_TOL = 1e-10
OVERLAP_TOL = 1e-10

SOURCE_MODES = ("uniform", "tilted")


def wrap_angle(theta):
    """Reduce angles to (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    out = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    out = np.where(out <= -np.pi, out + 2.0 * np.pi, out)
    return out if out.ndim else float(out)


def circular_distance(a, b):
    """Shortest distance between angles on the circle."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 2.0 * np.pi)
    return np.minimum(d, 2.0 * np.pi - d)


@dataclass(frozen=True)
class DiffusionSpec:
    """Declarative recipe for ``D_s``.

    ``source`` selects how ``|s>`` is laid out in the computational basis:

    * ``"uniform"`` -- ``sum_i |i>/sqrt(N)``; forces ``alpha^2 = 1/N``.
    * ``"tilted"`` -- ``alpha|t> + sqrt(1-alpha^2)|r>`` with ``|r>`` uniform
      over the non-target states; ``alpha`` is read off the source slot of
      ``target_overlaps``.  Lets small ``alpha`` coexist with small ``N``.
    * an integer ``i`` -- the basis state ``|i>``.
    """

    dimension: int
    source: str | int
    target: int
    eigenphases: tuple
    target_overlaps: tuple
    seed: int = 0
    source_slot: int = field(init=False)

    def __post_init__(self):
        n = self.dimension
        if not isinstance(n, (int, np.integer)) or n < 2:
            raise SpecError(f"dimension must be an integer >= 2, got {n!r}")
        phases = np.asarray(self.eigenphases, dtype=float)
        probs = np.asarray(self.target_overlaps, dtype=float)
        if phases.shape != (n,) or probs.shape != (n,):
            raise SpecError(
                f"need {n} eigenphases and {n} target overlaps, "
                f"got {phases.size} and {probs.size}"
            )
        if not np.all(np.isfinite(phases)) or not np.all(np.isfinite(probs)):
            raise SpecError("eigenphases and overlaps must be finite")
        if not 0 <= self.target < n:
            raise SpecError(f"target index {self.target} out of range for N={n}")
        if np.any(probs < 0.0):
            raise SpecError("target overlaps must be non-negative")
        if np.any(probs > 1.0 + SUM_TOL):
            raise SpecError("a target overlap exceeds 1")
        total = probs.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise SpecError(f"target overlaps sum to {float(total)!r}, not 1")

        phases = wrap_angle(phases)
        zero = np.flatnonzero(np.abs(phases) <= ZERO_PHASE_TOL)
        if zero.size != 1:
            raise SpecError(
                f"exactly one eigenphase must be 0 (the source slot), found {zero.size}"
            )
        slot = int(zero[0])

        alpha2 = probs[slot]
        src = self.source
        if isinstance(src, str):
            if src not in SOURCE_MODES:
                raise SpecError(f"unknown source mode {src!r}")
            if src == "uniform" and abs(alpha2 - 1.0 / n) > SUM_TOL:
                raise SpecError(
                    f"uniform source needs source-slot overlap 1/N={1.0 / n!r}, got {float(alpha2)!r}"
                )
        elif isinstance(src, (int, np.integer)):
            if not 0 <= src < n:
                raise SpecError(f"source index {src} out of range for N={n}")
            expected = 1.0 if src == self.target else 0.0
            if abs(alpha2 - expected) > SUM_TOL:
                raise SpecError(
                    f"basis-state source gives alpha^2={expected}, spec says {float(alpha2)!r}"
                )
        else:
            raise SpecError(f"source must be 'uniform', 'tilted' or an index, got {src!r}")

        object.__setattr__(self, "eigenphases", tuple(float(x) for x in phases))
        object.__setattr__(self, "target_overlaps", tuple(float(x) for x in probs))
        object.__setattr__(self, "source_slot", slot)

    @property
    def alpha(self):
        return float(np.sqrt(self.target_overlaps[self.source_slot]))

    @property
    def theta_min(self):
        phases = np.delete(np.asarray(self.eigenphases), self.source_slot)
        return float(np.min(np.abs(phases)))

    def source_state(self):
        n = self.dimension
        if self.source == "uniform":
            return np.full(n, 1.0 / np.sqrt(n), dtype=complex)
        if self.source == "tilted":
            a = self.alpha
            rest = np.full(n, 1.0 / np.sqrt(n - 1), dtype=complex)
            rest[self.target] = 0.0
            s = np.sqrt(max(0.0, 1.0 - a * a)) * rest
            s[self.target] = a
            return s
        s = np.zeros(n, dtype=complex)
        s[int(self.source)] = 1.0
        return s

    def target_state(self):
        t = np.zeros(self.dimension, dtype=complex)
        t[self.target] = 1.0
        return t

    # -- serialization -------------------------------------------------------

    def to_dict(self):
        return {
            "dimension": int(self.dimension),
            "source": self.source if isinstance(self.source, str) else int(self.source),
            "target": int(self.target),
            "eigenphases": list(self.eigenphases),
            "target_overlaps": list(self.target_overlaps),
            "seed": int(self.seed),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        missing = {"dimension", "source", "target", "eigenphases", "target_overlaps"} - set(d)
        if missing:
            raise SpecError(f"spec is missing keys: {sorted(missing)}")
        return cls(
            dimension=int(d["dimension"]),
            source=d["source"],
            target=int(d["target"]),
            eigenphases=tuple(d["eigenphases"]),
            target_overlaps=tuple(d["target_overlaps"]),
            seed=int(d.get("seed", 0)),
        )

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class UnitaryOperator:
    """Dense unitary; construction verifies ``max|U^dag U - 1| <= atol``."""

    matrix: np.ndarray
    atol: float = UNITARY_TOL

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SpecError(f"operator must be square, got shape {m.shape}")
        err = unitarity_error(m)
        if err > self.atol:
            raise InfeasibleSpecError(f"operator is not unitary: max|U^dag U - 1| = {err:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __matmul__(self, other):
        if isinstance(other, UnitaryOperator):
            return UnitaryOperator(self.matrix @ other.matrix)
        return self.matrix @ other

    def dagger(self):
        return UnitaryOperator(self.matrix.conj().T)


def unitarity_error(m):
    m = np.asarray(m)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


@dataclass(frozen=True)
class EigenData:
    """Eigen-decomposition of ``D_s`` as built (not recomputed).

    Arrays are sorted by eigenphase; ``slots[k]`` is the position of entry
    ``k`` in the originating spec.
    """

    phases: np.ndarray
    vectors: np.ndarray
    target_amplitudes: np.ndarray
    source_slot: int
    slots: np.ndarray

    @property
    def dim(self):
        return self.phases.shape[0]

    @property
    def weights(self):
        return np.abs(self.target_amplitudes) ** 2

    @property
    def alpha(self):
        return float(np.abs(self.target_amplitudes[self.source_slot]))

    @property
    def theta_min(self):
        return float(np.min(np.abs(np.delete(self.phases, self.source_slot))))

    def reconstruct(self):
        v = self.vectors
        return (v * np.exp(1j * self.phases)) @ v.conj().T


def _complete_basis(first_cols, n, rng):
    """Unitary whose leading columns are ``first_cols`` (assumed orthonormal)."""
    k = first_cols.shape[1]
    g = rng.standard_normal((n, n - k)) + 1j * rng.standard_normal((n, n - k))
    q, r = np.linalg.qr(np.hstack([first_cols, g]))
    d = np.diagonal(r)
    q = q * (d / np.where(np.abs(d) > 0, np.abs(d), 1.0))
    q[:, :k] = first_cols
    return q


def build_diffusion(spec):
    """Realize ``D_s`` for ``spec``; returns ``(UnitaryOperator, EigenData)``.

    The source eigenvector is ``spec.source_state()``.  The remaining
    eigenvectors span ``|s>^perp`` and are rotated so that eigenvector ``l``
    has exactly ``sqrt(p_l)`` magnitude along ``|t>``, with a seeded random
    phase.  The completion is exact (one QR), so it never needs iterating.
    """
    n = spec.dimension
    rng = np.random.default_rng(spec.seed)
    s = spec.source_state()
    t = spec.target_state()
    slot = spec.source_slot
    probs = np.asarray(spec.target_overlaps)
    others = np.array([k for k in range(n) if k != slot])

    st = np.vdot(s, t)
    t_perp = t - st * s
    tp_norm = np.linalg.norm(t_perp)
    rest_weight = 1.0 - abs(st) ** 2
    if tp_norm < 1e-12:
        if probs[others].sum() > SUM_TOL:
            raise InfeasibleSpecError("target coincides with source but other overlaps are nonzero")
        # any direction orthogonal to |s> will do
        t_perp = _complete_basis(s[:, None], n, rng)[:, 1]
        rest_weight = 1.0
    else:
        t_perp = t_perp / tp_norm

    perp = _complete_basis(np.column_stack([s, t_perp]), n, rng)[:, 1:]

    phases_rand = np.exp(2j * np.pi * rng.random(n - 1))
    c = np.sqrt(probs[others] / rest_weight) * phases_rand
    if tp_norm < 1e-12:
        # |t> = |s>: nothing to distribute, any orthonormal completion works
        c = np.zeros(n - 1, dtype=complex)
        c[0] = 1.0
    c_norm = np.linalg.norm(c)
    if abs(c_norm - 1.0) > 1e-9:
        raise InfeasibleSpecError(
            f"non-source overlaps carry weight {float(probs[others].sum())!r}, "
            f"but 1 - alpha^2 = {rest_weight!r}"
        )
    c = c / c_norm
    # unitary V with first row c; eigenvector l = perp @ V[:, l]
    v = _complete_basis(np.conj(c)[:, None], n - 1, rng).conj().T

    vecs = np.empty((n, n), dtype=complex)
    vecs[:, slot] = s
    vecs[:, others] = perp @ v

    phases = np.asarray(spec.eigenphases)
    d = (vecs * np.exp(1j * phases)) @ vecs.conj().T
    amps = vecs.conj().T @ t

    got = np.abs(amps) ** 2
    bad = np.max(np.abs(got - probs))
    if bad > OVERLAP_TOL:
        raise InfeasibleSpecError(f"overlap geometry infeasible: max overlap error {bad:.3e}")

    order = np.argsort(phases, kind="stable")
    eig = EigenData(
        phases=phases[order],
        vectors=vecs[:, order],
        target_amplitudes=amps[order],
        source_slot=int(np.flatnonzero(order == slot)[0]),
        slots=order,
    )
    return UnitaryOperator(d), eig


def moments(eig, p):
    """Overlap-weighted ``p``-th moment of ``cot(theta/2)`` over non-source eigenstates."""
    if p not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {p}")
    phases = np.delete(eig.phases, eig.source_slot)
    w = np.delete(eig.weights, eig.source_slot)
    if np.any(np.abs(phases) <= ZERO_PHASE_TOL):
        raise SpecError("a non-source eigenphase is 0: source eigenvalue is degenerate")
    cot = 1.0 / np.tan(phases / 2.0)
    return float(np.sum(w * cot**p))


def ab_quantities(lambda1, lambda2, phi):
    """``A = Lambda1 - cot(phi/2)`` and ``B = sqrt(1 + Lambda2)``.

    ``phi`` here is the rotation angle in the moment convention.  The search
    engine's ``I_t^phi`` multiplies the target amplitude by ``e^{+i phi}``,
    which enters this formula as ``2*pi - phi``; :func:`engine_ab_quantities`
    applies that mapping.
    """
    if not 0.0 < phi < 2.0 * np.pi:
        raise SpecError(f"phi must lie in (0, 2pi), got {phi!r}")
    if lambda2 < -1e-12:
        raise SpecError(f"Lambda2 must be non-negative, got {lambda2!r}")
    a = lambda1 - 1.0 / np.tan(phi / 2.0)
    b = np.sqrt(1.0 + max(lambda2, 0.0))
    return float(a), float(b)


def engine_ab_quantities(lambda1, lambda2, phi):
    """``(A, B)`` governing ``S = D_s I_t^phi`` with ``I_t^phi|t> = e^{i phi}|t>``.

    Expanding the secular equation around ``lambda = 0`` gives the two-level
    condition in terms of ``Lambda1 + cot(phi/2)``; that is ``ab_quantities``
    evaluated at ``2*pi - phi``.  The two conventions agree at ``phi = pi``.
    """
    if not 0.0 < phi < 2.0 * np.pi:
        raise SpecError(f"phi must lie in (0, 2pi), got {phi!r}")
    return ab_quantities(lambda1, lambda2, 2.0 * np.pi - phi)
