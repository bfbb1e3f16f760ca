"""Coherent phase-estimation circuit approximating the selective inversion of ``|s>``.

The circuit acts on system (dimension ``N``) tensor ``b`` ancilla qubits::

    W = V^dag Z_window V,    V = QFT^dag . prod_j ctrl-D^(2^j) . P_kappa

``P_kappa`` prepares the ancilla register in a real taper state
``|kappa>`` (uniform for textbook phase estimation, Kaiser for exponentially
small spectral leakage).  ``Z_window`` flips the sign of ancilla readouts
within ``theta_min/2`` of phase 0.  On an eigenstate with phase ``theta``
the ancilla-``|0>`` block of ``W`` is ``1 - 2 p(theta)``, where ``p`` is the
readout probability inside the window, so ``W`` approximates
``I_s = 1 - 2|s><s|`` whenever ``s`` is the only eigenstate at phase 0.

Extended states are laid out as ``(N, M)`` arrays, system index major,
with ``M = 2**b`` and ancilla value ``y = sum_j bit_j 2**j``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, SpecError
from .spectrum import UnitaryOperator

MAX_AMPLITUDES = 2**20
TAPERS = ("kaiser", "uniform")
_CHUNK_AMPLITUDES = 2**22


def kaiser_shape(M, theta_min):
    """Kaiser parameter that puts the first spectral null at ``theta_min/2``.

    The Kaiser transform's main lobe reaches its first zero at
    ``(2/M) sqrt(beta^2 + pi^2)``.  Below the crossover this is 0 and the
    taper is uniform.
    """
    x = M * theta_min / 4.0
    return math.sqrt(x * x - math.pi**2) if x > math.pi else 0.0


def taper_state(M, theta_min, taper="kaiser"):
    if taper == "uniform":
        k = np.ones(M)
    elif taper == "kaiser":
        beta = kaiser_shape(M, theta_min)
        k = np.kaiser(M, beta) if beta > 0 else np.ones(M)
    else:
        raise SpecError(f"unknown taper {taper!r}; expected one of {TAPERS}")
    return k / np.linalg.norm(k)


def window_mask(M, theta_min):
    """Ancilla readouts ``y`` with circular phase ``|2 pi y / M| < theta_min / 2``."""
    y = np.arange(M)
    signed = np.where(y > M // 2, y - M, y)
    return np.abs(2.0 * np.pi * signed / M) < theta_min / 2.0


def min_bits(theta_min):
    """Fewest ancillas giving at least one readout bin per ``theta_min``."""
    return max(1, math.ceil(math.log2(2.0 * math.pi / theta_min) - 1e-12))


@dataclass(frozen=True)
class PEAConfig:
    ancilla_count: int
    theta_min: float
    target_error: float = 0.05
    taper: str = "kaiser"
    max_amplitudes: int = MAX_AMPLITUDES

    def __post_init__(self):
        if self.ancilla_count < 1:
            raise SpecError("need at least one ancilla")
        if not 0.0 < self.theta_min <= math.pi:
            raise SpecError(f"theta_min must lie in (0, pi], got {self.theta_min!r}")
        if not 0.0 < self.target_error < 1.0:
            raise SpecError(f"target error must lie in (0, 1), got {self.target_error!r}")
        if self.taper not in TAPERS:
            raise SpecError(f"unknown taper {self.taper!r}")
        if self.size * self.theta_min / (2.0 * math.pi) < 1.0 - 1e-12:
            raise SpecError(
                f"{self.ancilla_count} ancillas cannot separate phase 0 from theta_min="
                f"{self.theta_min:.4g}; need at least {min_bits(self.theta_min)}"
            )

    @property
    def size(self):
        return 2**self.ancilla_count

    @property
    def queries(self):
        """Controlled-``D_s`` applications in the estimation half of the circuit."""
        return self.size - 1

    @property
    def circuit_queries(self):
        """Queries for the full ``W``, estimation plus uncompute."""
        return 2 * (self.size - 1)

    def kappa(self):
        return taper_state(self.size, self.theta_min, self.taper)

    def window(self):
        return window_mask(self.size, self.theta_min)


# --------------------------------------------------------------------------
# closed-form readout statistics (independent of the circuit simulation)
# --------------------------------------------------------------------------


def window_probability(cfg, thetas):
    """``p(theta)``: probability the ancilla readout lands in the flip window."""
    M = cfg.size
    kappa = cfg.kappa()
    win = np.flatnonzero(cfg.window())
    x = np.arange(M)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    omega = 2.0 * np.pi * win / M
    amp = np.exp(1j * np.outer(thetas, x)) * kappa
    a = amp @ np.exp(-1j * np.outer(x, omega)) / math.sqrt(M)
    return np.sum(np.abs(a) ** 2, axis=1)


def predicted_error_profile(cfg, pad=8):
    """``(thetas, p)`` on a grid of spacing ``2 pi / (pad M)`` via one zero-padded FFT."""
    M = cfg.size
    L = M * pad
    g2 = np.abs(np.fft.fft(cfg.kappa(), n=L)) ** 2 / M
    p = np.zeros(L)
    for y in np.flatnonzero(cfg.window()):
        yy = y if y <= M // 2 else y - M
        p += np.roll(g2, yy * pad)
    thetas = 2.0 * np.pi * np.arange(L) / L
    return np.where(thetas > np.pi, thetas - 2.0 * np.pi, thetas), p


def predicted_worst_error(cfg, pad=8):
    """Worst eigenstate error of the ideal circuit over all admissible spectra.

    Admissible: the source at phase 0, every other eigenphase at least
    ``theta_min`` away from it.
    """
    thetas, p = predicted_error_profile(cfg, pad)
    far = np.abs(thetas) >= cfg.theta_min
    edge = window_probability(cfg, [cfg.theta_min, -cfg.theta_min])
    err_far = 2.0 * max(float(p[far].max()) if far.any() else 0.0, float(edge.max()))
    err_src = 2.0 * (1.0 - float(p[0]))
    return max(err_far, err_src)


def required_ancillas(theta_min, epsilon, taper="kaiser", b_max=24):
    """Smallest ``b`` whose predicted worst error is at most ``epsilon``.

    Returns ``(b, queries)`` with ``queries = 2**b - 1`` controlled-``D_s``
    applications in the estimation half.
    """
    if not 0.0 < theta_min <= math.pi:
        raise SpecError(f"theta_min must lie in (0, pi], got {theta_min!r}")
    if not 0.0 < epsilon < 1.0:
        raise SpecError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    for b in range(min_bits(theta_min), b_max + 1):
        cfg = PEAConfig(b, theta_min, epsilon, taper)
        if predicted_worst_error(cfg) <= epsilon:
            return b, cfg.queries
    raise BudgetError(f"no b <= {b_max} reaches error {epsilon} at theta_min={theta_min}")


# --------------------------------------------------------------------------
# circuit simulation
# --------------------------------------------------------------------------


class PhaseInversionCircuit:
    """The unitary ``W`` on system tensor ancillas, applied gate by gate.

    ``D_s`` is used only through controlled powers ``D^(2^j)``; nothing here
    looks at its eigenvectors.
    """

    def __init__(self, D, cfg):
        d = D.matrix if isinstance(D, UnitaryOperator) else np.asarray(D, dtype=complex)
        self.n = d.shape[0]
        self.cfg = cfg
        self.M = cfg.size
        if self.n * self.M > cfg.max_amplitudes:
            raise BudgetError(
                f"N * 2^b = {self.n * self.M} exceeds the simulation cap {cfg.max_amplitudes}"
            )
        self.kappa = cfg.kappa()
        self.window = cfg.window()
        powers = [d]
        for _ in range(cfg.ancilla_count - 1):
            powers.append(powers[-1] @ powers[-1])
        self.powers = powers
        v = -self.kappa.astype(complex)
        v[0] += 1.0
        vv = float(np.real(np.vdot(v, v)))
        self._house = (v, vv) if vv > 1e-30 else None

    @property
    def shape(self):
        return (self.n * self.M, self.n * self.M)

    @property
    def queries(self):
        return self.cfg.queries

    @property
    def circuit_queries(self):
        return self.cfg.circuit_queries

    # individual stages act on (N, M, K) tensors in place where possible

    def _prepare(self, x):
        if self._house is None:
            return x
        v, vv = self._house
        c = np.einsum("y,iyk->ik", v.conj(), x)
        x -= (2.0 / vv) * v[None, :, None] * c[:, None, :]
        return x

    def _controlled_powers(self, x, inverse=False):
        n, M, K = x.shape
        order = range(len(self.powers))
        for j in reversed(order) if inverse else order:
            p = self.powers[j].conj().T if inverse else self.powers[j]
            view = x.reshape(n, M >> (j + 1), 2, 1 << j, K)[:, :, 1]
            view[...] = (p @ view.reshape(n, -1)).reshape(view.shape)
        return x

    def _forward(self, x):
        x = self._prepare(x)
        x = self._controlled_powers(x)
        return np.fft.fft(x, axis=1, norm="ortho")

    def _backward(self, x):
        x = np.fft.ifft(x, axis=1, norm="ortho")
        x = self._controlled_powers(x, inverse=True)
        return self._prepare(x)

    def apply(self, state):
        """``W`` applied to an extended state of shape ``(N*M,)``, ``(N, M)`` or ``(N, M, K)``."""
        state = np.asarray(state, dtype=complex)
        shape = state.shape
        x = np.array(state.reshape(self.n, self.M, -1))
        x = self._forward(x)
        x[:, self.window, :] *= -1.0
        x = self._backward(x)
        return x.reshape(shape)

    def to_dense(self):
        dim = self.n * self.M
        if dim * dim > self.cfg.max_amplitudes * 64:
            raise BudgetError(f"dense W of dimension {dim} is too large to materialize")
        eye = np.eye(dim, dtype=complex).reshape(self.n, self.M, dim)
        return self.apply(eye).reshape(dim, dim)

    def zero_block(self):
        """``<0|W|0>`` on the system, via the estimation half only.

        With ``Phi = V|.>|0>`` and ``Z = 1 - 2 P_window``,
        ``<0|W|0> = 1 - 2 sum_{y in window} Phi_y^dag Phi_y``.
        """
        n, M = self.n, self.M
        win = self.window
        # only the window slice of V|j>|0> is kept, so memory stays N * |win| * N
        phi = np.empty((n, int(win.sum()), n), dtype=complex)
        chunk = max(1, _CHUNK_AMPLITUDES // (n * M))
        for j0 in range(0, n, chunk):
            cols = np.arange(j0, min(n, j0 + chunk))
            x = np.zeros((n, M, cols.size), dtype=complex)
            x[cols, 0, np.arange(cols.size)] = 1.0
            phi[:, :, cols] = self._forward(x)[:, win, :]
        return np.eye(n, dtype=complex) - 2.0 * np.einsum("iyj,iyk->jk", phi.conj(), phi)


def approx_selective_inversion(D, cfg):
    """Build the phase-estimation circuit ``W`` approximating ``1 - 2|s><s|``."""
    return PhaseInversionCircuit(D, cfg)


def effective_system_action(W, eig=None):
    """``(block, leakage)`` with ``block = <0|W|0>`` on the system.

    ``leakage`` is the largest norm lost to ancilla states other than
    ``|0...0>``, i.e. ``max (1 - ||block v||)``, taken over the eigenvectors
    in ``eig`` when given and over all unit inputs otherwise.
    """
    block = W.zero_block()
    if eig is not None:
        kept = np.linalg.norm(block @ eig.vectors, axis=0)
        leak = float(np.max(1.0 - kept))
    else:
        leak = float(1.0 - np.linalg.svd(block, compute_uv=False).min())
    return block, max(leak, 0.0)


@dataclass(frozen=True)
class ApproxInversionReport:
    bits: int
    queries: int
    circuit_queries: int
    per_eigenstate_error: np.ndarray | None
    worst_error: float
    leakage: float


def inversion_report(W, source, eig=None):
    """Measured quality of ``W`` against ``I_s = 1 - 2|s><s|``.

    ``worst_error`` is the spectral norm of ``block - I_s``; for a block
    diagonal in the eigenbasis it equals the largest per-eigenstate error.
    """
    block, leak = effective_system_action(W, eig)
    s = np.asarray(source, dtype=complex)
    target = np.eye(W.n) - 2.0 * np.outer(s, s.conj())
    worst = float(np.linalg.norm(block - target, 2))
    per = None
    if eig is not None:
        v = eig.vectors
        diag = np.einsum("il,ij,jl->l", v.conj(), block, v)
        want = np.ones(W.n)
        want[eig.source_slot] = -1.0
        per = np.abs(diag - want)
    return ApproxInversionReport(
        bits=W.cfg.ancilla_count,
        queries=W.queries,
        circuit_queries=W.circuit_queries,
        per_eigenstate_error=per,
        worst_error=worst,
        leakage=leak,
    )


def pea_sweep(D, source, theta_min, bits, taper="kaiser", eig=None, max_amplitudes=MAX_AMPLITUDES):
    """Rows ``(b, queries, worst_error, leakage)`` for each ``b`` in ``bits``."""
    rows = []
    for b in bits:
        cfg = PEAConfig(b, theta_min, 0.5, taper, max_amplitudes)
        rep = inversion_report(PhaseInversionCircuit(D, cfg), source, eig)
        rows.append((b, rep.queries, rep.worst_error, rep.leakage))
    return rows


def sweep_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["b", "queries", "worst_error", "leakage"])
    for b, q, e, l in rows:
        w.writerow([b, q, repr(float(e)), repr(float(l))])
    return buf.getvalue()
