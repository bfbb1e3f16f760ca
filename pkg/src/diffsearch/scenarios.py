"""Engineered diffusion specs and the built-in named scenarios."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SpecError
from .spectrum import DiffusionSpec


def grover_spec(n, target=0, seed=0):
    """Standard Grover diffusion ``2|s><s| - 1`` with the uniform source."""
    phases = [0.0] + [math.pi] * (n - 1)
    overlaps = [1.0 / n] * n
    return DiffusionSpec(n, "uniform", target, tuple(phases), tuple(overlaps), seed)


def lambda1_for(A, phi):
    """``Lambda_1`` that yields effective ``A`` at ``phi``."""
    return A - 1.0 / math.tan(phi / 2.0)


def engineered_spec(
    n,
    alpha,
    lambda1,
    theta_pair=math.pi / 2,
    pair_weight=None,
    theta_gap=None,
    source="tilted",
    target=0,
    seed=0,
):
    """Spec with non-source weight on a ``+-theta_pair`` cluster pair.

    The pair carries total weight ``pair_weight`` (default ``1 - alpha^2``),
    split so that ``Lambda_1 = lambda1``; whatever weight is left goes to
    eigenphase ``pi`` where ``cot`` vanishes.  ``theta_gap`` adds one
    zero-overlap eigenstate at that phase, which sets ``theta_min`` without
    touching the moments.
    """
    a2 = alpha * alpha
    rest = 1.0 - a2
    W = rest if pair_weight is None else float(pair_weight)
    if not 0.0 < W <= rest + 1e-15:
        raise SpecError(f"pair weight must lie in (0, 1 - alpha^2], got {W!r}")
    W = min(W, rest)
    c = 1.0 / math.tan(theta_pair / 2.0)
    diff = lambda1 / c
    wp, wm = 0.5 * (W + diff), 0.5 * (W - diff)
    if wp < 0 or wm < 0:
        raise SpecError(f"|Lambda_1|={abs(lambda1)!r} exceeds the pair maximum {W * c!r}")

    slots_left = n - 1 - (theta_gap is not None)
    filler = rest - W > 1e-15
    n_pair = slots_left - int(filler)
    if n_pair < 2:
        raise SpecError(f"dimension {n} too small for this layout")
    n_plus = n_pair // 2
    n_minus = n_pair - n_plus

    phases = [0.0]
    overlaps = [a2]
    if theta_gap is not None:
        phases.append(float(theta_gap))
        overlaps.append(0.0)
    phases += [theta_pair] * n_plus + [-theta_pair] * n_minus
    overlaps += [wp / n_plus] * n_plus + [wm / n_minus] * n_minus
    if filler:
        phases.append(math.pi)
        overlaps.append(rest - W)
    # absorb float rounding into the largest entry so the sum is 1 to the last bit
    overlaps = np.array(overlaps)
    k = int(np.argmax(overlaps))
    overlaps[k] += 1.0 - overlaps.sum()
    return DiffusionSpec(n, source, target, tuple(phases), tuple(overlaps.tolist()), seed)


@dataclass(frozen=True)
class Scenario:
    name: str
    spec: DiffusionSpec
    phi: float
    epsilon: float | None = None
    description: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "phi": self.phi,
            "epsilon": self.epsilon,
            "description": self.description,
            "spec": self.spec.to_dict(),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        if "spec" not in d:
            raise SpecError("scenario needs a 'spec' entry")
        phi = float(d.get("phi", math.pi))
        if not 0.0 < phi < 2.0 * math.pi:
            raise SpecError(f"phi must lie in (0, 2pi), got {phi!r}")
        eps = d.get("epsilon")
        if eps is not None and not 0.0 < float(eps) < 1.0:
            raise SpecError(f"epsilon must lie in (0, 1), got {eps!r}")
        return cls(
            name=str(d.get("name", "custom")),
            spec=DiffusionSpec.from_dict(d["spec"]),
            phi=phi,
            epsilon=None if eps is None else float(eps),
            description=str(d.get("description", "")),
        )


def _skewed(n=256, alpha=1.0 / 1024, ratio=10.0):
    # A = ratio * 2 alpha B with weights at +-pi/2, so Lambda_2 = 1 - alpha^2
    B = math.sqrt(2.0 - alpha * alpha)
    return engineered_spec(n, alpha, ratio * 2.0 * alpha * B)


def _boundary(n=64, alpha=1.0 / 256, theta_gap=0.2):
    B2 = 2.0 - alpha * alpha
    return engineered_spec(n, alpha, 1.57 * B2 * theta_gap, theta_gap=theta_gap)


def _phase_rotated(n=64):
    # at phi = pi/2 the effective A is Lambda_1 + cot(pi/4); Lambda_1 = -1 cancels it
    return engineered_spec(n, 1.0 / math.sqrt(n), -1.0, theta_pair=math.pi / 3, source="uniform")


def builtin_scenarios():
    return {
        "grover4": Scenario("grover4", grover_spec(4), math.pi, description="Grover, N=4"),
        "grover64": Scenario("grover64", grover_spec(64), math.pi, description="Grover, N=64"),
        "skewed-A": Scenario(
            "skewed-A", _skewed(), math.pi, description="A = 10 (2 alpha B); original search is slow"
        ),
        "phase-rotated": Scenario(
            "phase-rotated", _phase_rotated(), math.pi / 2, description="phi = pi/2 with A tuned to 0"
        ),
        "boundary": Scenario(
            "boundary", _boundary(), math.pi, description="A = 1.57 B^2 theta_min"
        ),
    }


def load_scenario(ref):
    """A built-in name, or a path to a scenario or bare spec JSON file."""
    table = builtin_scenarios()
    if ref in table:
        return table[ref]
    p = Path(ref)
    if not p.is_file():
        raise SpecError(f"no built-in scenario or file named {ref!r} (built-ins: {', '.join(table)})")
    try:
        d = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{ref}: invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise SpecError(f"{ref}: expected a JSON object")
    if "spec" in d:
        return Scenario.from_dict(d)
    return Scenario(p.stem, DiffusionSpec.from_dict(d), float(d.get("phi", math.pi)))


def random_spec(rng, n, theta_min=None, alpha=None, source="uniform", target=0, seed=0):
    """Seeded random spec with every target overlap nonzero.

    Non-source phases are uniform on ``theta_min <= |theta| <= pi`` with one
    pinned at ``+-theta_min``; overlaps are Dirichlet-distributed.  With the
    uniform source ``alpha`` is forced to ``1/sqrt(n)``.
    """
    if source == "uniform":
        alpha = 1.0 / math.sqrt(n)
    elif alpha is None:
        raise SpecError("alpha is required for a non-uniform source")
    lo = 0.05 if theta_min is None else float(theta_min)
    mags = rng.uniform(lo, math.pi, n - 1)
    mags[0] = lo
    signs = rng.choice([-1.0, 1.0], n - 1)
    phases = np.concatenate([[0.0], signs * mags])
    w = rng.dirichlet(np.ones(n - 1)) * (1.0 - alpha * alpha)
    overlaps = np.concatenate([[alpha * alpha], w])
    k = 1 + int(np.argmax(w))
    overlaps[k] += 1.0 - overlaps.sum()
    return DiffusionSpec(n, source, target, tuple(phases.tolist()), tuple(overlaps.tolist()), seed)


def phi_for_A(A, lambda1):
    """Phase ``phi`` in ``(0, 2pi)`` giving effective ``A`` for the given ``Lambda_1``."""
    return 2.0 * math.atan2(1.0, A - lambda1)
