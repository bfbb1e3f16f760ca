import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffsearch.errors import NoMaximumFound, SpecError
from diffsearch.scenarios import grover_spec, random_spec
from diffsearch.search import (
    SuccessCurve,
    default_q_max,
    evolve,
    find_first_max,
    search_matrix,
    search_power,
    search_step,
    selective_phase,
    success_curve,
    target_probability,
)
from diffsearch.spectrum import build_diffusion


def test_selective_phase_examples():
    psi = np.array([0.6, 0.8j, 0.0])
    np.testing.assert_array_equal(selective_phase(psi, 1, 0.0), psi)
    t = np.array([1.0, 0.0])
    np.testing.assert_allclose(selective_phase(t, 0, math.pi), [-1.0, 0.0], atol=1e-15)
    psi = np.array([1.0, 1.0]) / math.sqrt(2)
    np.testing.assert_allclose(selective_phase(psi, 0, math.pi / 2), np.array([1j, 1.0]) / math.sqrt(2), atol=1e-15)
    with pytest.raises(SpecError):
        selective_phase(psi, 5, 1.0)


def test_selective_phase_does_not_mutate():
    psi = np.array([1.0, 0.0], dtype=complex)
    selective_phase(psi, 0, 1.0)
    assert psi[0] == 1.0


def test_grover4_single_step_finds_target():
    spec = grover_spec(4)
    D, _ = build_diffusion(spec)
    out = search_step(D, 0, math.pi, spec.source_state())
    assert abs(out[0]) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_zero_phase_step_is_diffusion():
    spec = random_spec(np.random.default_rng(0), 8)
    D, _ = build_diffusion(spec)
    psi = np.random.default_rng(1).standard_normal(8) + 0j
    np.testing.assert_allclose(search_step(D, 3, 0.0, psi), D.matrix @ psi, atol=1e-12)


def test_step_matches_explicit_product():
    spec = random_spec(np.random.default_rng(8), 8, seed=8)
    D, _ = build_diffusion(spec)
    psi = np.random.default_rng(2).standard_normal(8) + 1j * np.random.default_rng(3).standard_normal(8)
    phase = np.eye(8, dtype=complex)
    phase[2, 2] = np.exp(0.7j)
    np.testing.assert_allclose(search_step(D, 2, 0.7, psi), D.matrix @ phase @ psi, atol=1e-12)
    np.testing.assert_allclose(search_matrix(D, 2, 0.7), D.matrix @ phase, atol=1e-12)
    with pytest.raises(SpecError):
        search_step(D, 2, 0.7, np.ones(4))


def test_search_power_negative_is_inverse():
    spec = random_spec(np.random.default_rng(4), 6)
    D, _ = build_diffusion(spec)
    np.testing.assert_allclose(search_power(D, 0, 1.1, 3) @ search_power(D, 0, 1.1, -3), np.eye(6), atol=1e-12)


def test_grover_curves_match_closed_form(frozen):
    for n, key in ((4, "grover4_curve"), (64, "grover64_curve")):
        spec = grover_spec(n)
        D, _ = build_diffusion(spec)
        want = np.array(frozen[key])
        curve = success_curve(D, 0, math.pi, spec.source_state(), want.size - 1)
        np.testing.assert_allclose(curve.probability, want, atol=1e-12)


def test_flat_curve_without_phase():
    spec = random_spec(np.random.default_rng(9), 16, seed=9)
    D, _ = build_diffusion(spec)
    curve = success_curve(D, 0, 0.0, spec.source_state(), 20)
    np.testing.assert_allclose(curve.probability, spec.alpha**2, atol=1e-12)


def test_find_first_max_examples():
    spec = grover_spec(4)
    D, _ = build_diffusion(spec)
    q, p = find_first_max(success_curve(D, 0, math.pi, spec.source_state(), 3))
    assert q == 1 and p == pytest.approx(1.0)
    spec = grover_spec(64)
    D, _ = build_diffusion(spec)
    q, p = find_first_max(success_curve(D, 0, math.pi, spec.source_state(), 30))
    assert q == 6 and p >= 0.99
    with pytest.raises(NoMaximumFound) as err:
        find_first_max(np.linspace(0.0, 0.5, 10))
    assert err.value.q == 9


def test_find_first_max_ties_and_saturation():
    assert find_first_max([0.1, 0.4, 0.4, 0.2]) == (1, 0.4)
    assert find_first_max([0.2, 1.0]) == (1, 1.0)


def test_first_max_consistent_with_evolve():
    spec = random_spec(np.random.default_rng(11), 32, 0.3, 0.01, source="tilted")
    D, _ = build_diffusion(spec)
    curve = success_curve(D, 0, math.pi, spec.source_state(), 400)
    q, p = find_first_max(curve)
    assert target_probability(evolve(D, 0, math.pi, spec.source_state(), q), 0) == p


def test_curve_csv_and_validation():
    c = SuccessCurve(np.array([0.25, 1.0]))
    assert c.to_csv().splitlines() == ["q,probability", "0,0.25", "1,1.0"]
    assert c.q_max == 1 and len(c) == 2
    with pytest.raises(ValueError):
        SuccessCurve(np.array([1.5]))
    with pytest.raises(ValueError):
        success_curve(np.eye(2), 0, 1.0, np.array([1.0, 0.0]), 0)


def test_default_q_max():
    assert default_q_max(1.0, 0.125) == 10 * math.ceil(2 * math.pi)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), phi=st.floats(0.0, 2 * math.pi), n=st.integers(2, 20))
def test_curve_is_a_probability_and_norm_is_kept(seed, phi, n):
    spec = random_spec(np.random.default_rng(seed), n, seed=seed)
    D, _ = build_diffusion(spec)
    curve = success_curve(D, 0, phi, spec.source_state(), 25)
    assert np.all((curve.probability >= 0) & (curve.probability <= 1))
    psi = evolve(D, 0, phi, spec.source_state(), 25)
    assert abs(np.linalg.norm(psi) - 1) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), phi=st.floats(0.05, 2 * math.pi - 0.05), tilted=st.booleans())
def test_curve_ignores_eigenvector_phases(seed, phi, tilted):
    # <t|S^q|s> only sees |<l|t>|^2, so reseeding the eigenbasis leaves the curve alone
    n = 12
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, n, 0.2, 0.15 if tilted else None, source="tilted" if tilted else "uniform", seed=seed)
    other = dataclasses.replace(spec, seed=seed + 1)
    curves = []
    for sp in (spec, other):
        D, _ = build_diffusion(sp)
        curves.append(success_curve(D, sp.target, phi, sp.source_state(), 40).probability)
    np.testing.assert_allclose(curves[0], curves[1], atol=1e-12)
