import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffsearch.errors import InfeasibleSpecError, SpecError
from diffsearch.scenarios import grover_spec, random_spec
from diffsearch.spectrum import (
    DiffusionSpec,
    UnitaryOperator,
    ab_quantities,
    build_diffusion,
    circular_distance,
    engine_ab_quantities,
    moments,
    unitarity_error,
    wrap_angle,
)


def test_wrap_angle_range():
    x = np.array([0.0, math.pi, -math.pi, 3 * math.pi, 2 * math.pi, -0.5])
    w = wrap_angle(x)
    assert np.all(w > -math.pi) and np.all(w <= math.pi)
    np.testing.assert_allclose(w, [0.0, math.pi, math.pi, math.pi, 0.0, -0.5], atol=1e-15)


def test_circular_distance_wraps():
    assert circular_distance(math.pi - 0.1, -math.pi + 0.1) == pytest.approx(0.2)


def test_grover_diffusion_is_reflection():
    D, eig = build_diffusion(grover_spec(4))
    s = np.full(4, 0.5)
    np.testing.assert_allclose(D.matrix, 2 * np.outer(s, s) - np.eye(4), atol=1e-12)


def test_two_by_two_dense_eigenphases():
    spec = DiffusionSpec(2, "uniform", 0, (0.0, math.pi / 2), (0.5, 0.5))
    D, _ = build_diffusion(spec)
    got = np.sort(np.angle(np.linalg.eigvals(D.matrix)))
    np.testing.assert_allclose(got, [0.0, math.pi / 2], atol=1e-10)


def test_reconstruction_seed7():
    spec = random_spec(np.random.default_rng(7), 8, seed=7)
    D, eig = build_diffusion(spec)
    assert np.linalg.norm(eig.reconstruct() - D.matrix) <= 1e-10
    s = spec.source_state()
    np.testing.assert_allclose(D.matrix @ s, s, atol=1e-12)
    want = np.asarray(spec.target_overlaps)[eig.slots]
    np.testing.assert_allclose(eig.weights, want, atol=1e-12)


def test_build_is_deterministic_in_seed():
    spec = random_spec(np.random.default_rng(1), 16, seed=3)
    a, _ = build_diffusion(spec)
    b, _ = build_diffusion(spec)
    assert a.matrix.tobytes() == b.matrix.tobytes()


def test_tilted_and_index_sources():
    spec = DiffusionSpec(3, "tilted", 1, (0.0, 1.0, -2.0), (0.04, 0.5, 0.46))
    s = spec.source_state()
    assert abs(np.linalg.norm(s) - 1) < 1e-12
    assert abs(s[1]) == pytest.approx(0.2)
    D, eig = build_diffusion(spec)
    assert eig.alpha == pytest.approx(0.2)
    spec = DiffusionSpec(3, 2, 0, (1.0, 0.0, -2.0), (0.5, 0.0, 0.5))
    D, eig = build_diffusion(spec)
    np.testing.assert_allclose(D.matrix[:, 2], [0, 0, 1], atol=1e-12)


@pytest.mark.parametrize(
    "kw",
    [
        dict(target_overlaps=(0.5, 0.4)),  # sum 0.9
        dict(eigenphases=(0.0, 0.0)),  # two zero phases
        dict(eigenphases=(0.3, 1.0)),  # no zero phase
        dict(target_overlaps=(1.2, -0.2)),
        dict(target=2),
        dict(source="bogus"),
        dict(source=1),  # basis source != target needs alpha = 0
        dict(dimension=1, eigenphases=(0.0,), target_overlaps=(1.0,)),
        dict(eigenphases=(0.0, float("nan"))),
    ],
)
def test_spec_validation(kw):
    base = dict(dimension=2, source="uniform", target=0, eigenphases=(0.0, 1.0), target_overlaps=(0.5, 0.5))
    base.update(kw)
    with pytest.raises(SpecError):
        DiffusionSpec(**base)


def test_uniform_source_needs_one_over_n():
    with pytest.raises(SpecError):
        DiffusionSpec(4, "uniform", 0, (0.0, 1.0, 2.0, 3.0), (0.1, 0.3, 0.3, 0.3))


def test_target_equal_to_source_builds():
    spec = DiffusionSpec(3, 0, 0, (0.0, 1.0, 2.0), (1.0, 0.0, 0.0))
    D, eig = build_diffusion(spec)
    assert eig.alpha == pytest.approx(1.0)


def test_json_roundtrip(tmp_path):
    spec = random_spec(np.random.default_rng(2), 8, seed=5)
    again = DiffusionSpec.from_json(spec.to_json())
    assert again == spec
    p = tmp_path / "s.json"
    p.write_text(spec.to_json())
    assert DiffusionSpec.load(p) == spec
    with pytest.raises(SpecError):
        DiffusionSpec.from_json("{not json")
    with pytest.raises(SpecError):
        DiffusionSpec.from_dict({"dimension": 2})


def test_unitary_operator_rejects_nonunitary():
    with pytest.raises(InfeasibleSpecError):
        UnitaryOperator(np.array([[1.0, 0.0], [0.0, 2.0]]))
    with pytest.raises(SpecError):
        UnitaryOperator(np.ones((2, 3)))
    u = UnitaryOperator(np.eye(2))
    assert unitarity_error((u @ u.dagger()).matrix) == 0.0


def test_moments_trivial_cases():
    _, eig = build_diffusion(grover_spec(8))
    assert moments(eig, 1) == pytest.approx(0.0, abs=1e-15)
    assert moments(eig, 2) == pytest.approx(0.0, abs=1e-15)
    spec = DiffusionSpec(2, "uniform", 0, (0.0, math.pi / 2), (0.5, 0.5))
    _, eig = build_diffusion(spec)
    assert moments(eig, 1) == pytest.approx(0.5)
    assert moments(eig, 2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        moments(eig, 3)


def test_moments_match_dense_oracle():
    spec = random_spec(np.random.default_rng(16), 16, seed=16)
    D, _ = build_diffusion(spec)
    vals, vecs = np.linalg.eig(D.matrix)
    theta = np.angle(vals)
    w = np.abs(vecs.conj().T @ spec.target_state()) ** 2
    keep = np.abs(theta) > 1e-9
    cot = 1 / np.tan(theta[keep] / 2)
    _, eig = build_diffusion(spec)
    assert moments(eig, 1) == pytest.approx(np.sum(w[keep] * cot), abs=1e-9)
    assert moments(eig, 2) == pytest.approx(np.sum(w[keep] * cot**2), abs=1e-9)


@pytest.mark.parametrize(
    "l1,l2,phi,A,B",
    [
        (0.0, 0.0, math.pi, 0.0, 1.0),
        (1.0, 3.0, math.pi / 2, 0.0, 2.0),
        (0.3, 0.5, math.pi, 0.3, 1.224744871391589),
    ],
)
def test_ab_quantities_examples(l1, l2, phi, A, B):
    a, b = ab_quantities(l1, l2, phi)
    assert a == pytest.approx(A, abs=1e-12)
    assert b == pytest.approx(B, abs=1e-12)


def test_engine_convention_mirrors_phi():
    a, b = engine_ab_quantities(0.4, 1.0, math.pi / 2)
    assert a == pytest.approx(0.4 + 1.0)
    assert engine_ab_quantities(0.4, 1.0, math.pi) == pytest.approx(ab_quantities(0.4, 1.0, math.pi))
    with pytest.raises(SpecError):
        ab_quantities(0.0, 0.0, 0.0)
    with pytest.raises(SpecError):
        ab_quantities(0.0, -1.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 24),
    seed=st.integers(0, 2**31 - 1),
    tilted=st.booleans(),
    alpha=st.floats(0.01, 0.9),
)
def test_built_diffusion_invariants(n, seed, tilted, alpha):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, n, 0.05, alpha, source="tilted" if tilted else "uniform", seed=seed)
    D, eig = build_diffusion(spec)
    assert unitarity_error(D.matrix) <= 1e-10
    s = spec.source_state()
    assert np.linalg.norm(D.matrix @ s - s) <= 1e-10
    want = np.asarray(spec.target_overlaps)[eig.slots]
    assert np.max(np.abs(eig.weights - want)) <= 1e-10
    assert np.linalg.norm(eig.reconstruct() - D.matrix) <= 1e-10
