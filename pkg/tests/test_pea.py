import math

import numpy as np
import pytest

from diffsearch.errors import BudgetError, SpecError
from diffsearch.pea import (
    PEAConfig,
    PhaseInversionCircuit,
    approx_selective_inversion,
    effective_system_action,
    inversion_report,
    kaiser_shape,
    min_bits,
    pea_sweep,
    predicted_worst_error,
    required_ancillas,
    sweep_csv,
    taper_state,
    window_mask,
    window_probability,
)
from diffsearch.scenarios import grover_spec, random_spec
from diffsearch.spectrum import DiffusionSpec, build_diffusion


def naive_zero_block(D, cfg):
    """<kappa| CU^dag F^dag Z F CU |kappa> from explicit dense matrices."""
    n, M = D.shape[0], cfg.size
    kappa = cfg.kappa()
    dim = n * M
    cu = np.zeros((dim, dim), dtype=complex)
    for y in range(M):
        cu[y::M, y::M] = np.linalg.matrix_power(D, y)
    y = np.arange(M)
    F = np.exp(-2j * np.pi * np.outer(y, y) / M) / math.sqrt(M)
    Z = np.diag(np.where(cfg.window(), -1.0, 1.0))
    R = np.kron(np.eye(n), F.conj().T @ Z @ F)
    W = cu.conj().T @ R @ cu
    K = np.kron(np.eye(n), kappa[:, None])
    return K.conj().T @ W @ K


def off_bin_spec(n=16, theta_min=0.3, seed=3):
    return random_spec(np.random.default_rng(seed), n, theta_min, 0.2, source="tilted", seed=seed)


def test_kaiser_shape_crossover():
    assert kaiser_shape(16, 0.3) == 0.0
    x = 256 * 0.3 / 4
    assert kaiser_shape(256, 0.3) == pytest.approx(math.sqrt(x * x - math.pi**2))
    for taper in ("kaiser", "uniform"):
        assert np.linalg.norm(taper_state(64, 0.3, taper)) == pytest.approx(1.0)
    with pytest.raises(SpecError):
        taper_state(8, 0.3, "hann")


def test_window_mask():
    m = window_mask(8, math.pi)
    assert m.tolist() == [True, True, False, False, False, False, False, True]
    assert window_mask(64, 0.3).sum() == 3


def test_closed_form_window_probability_matches_oracle(frozen):
    for case in frozen["pea_window"]:
        cfg = PEAConfig(case["bits"], case["theta_min"], 0.5, case["taper"])
        got = window_probability(cfg, case["thetas"])
        np.testing.assert_allclose(got, case["window_probability"], atol=1e-12)


def test_circuit_per_eigenstate_error_matches_oracle(frozen):
    for case in frozen["pea_window"]:
        thetas = case["thetas"]
        n = len(thetas)
        w = np.full(n, 1.0 / n)
        spec = DiffusionSpec(n, "tilted", 0, tuple(thetas), tuple(w), seed=1)
        D, eig = build_diffusion(spec)
        cfg = PEAConfig(case["bits"], case["theta_min"], 0.5, case["taper"])
        rep = inversion_report(PhaseInversionCircuit(D, cfg), spec.source_state(), eig)
        p = np.asarray(case["window_probability"])[eig.slots]
        want = np.where(np.arange(n) == eig.source_slot, 2 * (1 - p), 2 * p)
        np.testing.assert_allclose(rep.per_eigenstate_error, want, atol=1e-10)


def test_zero_block_matches_naive_circuit():
    spec = DiffusionSpec(3, "tilted", 0, (0.0, 1.0, -2.2), (0.2, 0.5, 0.3), seed=2)
    D, _ = build_diffusion(spec)
    for taper in ("kaiser", "uniform"):
        cfg = PEAConfig(3, 0.8, 0.5, taper)
        W = PhaseInversionCircuit(D, cfg)
        np.testing.assert_allclose(W.zero_block(), naive_zero_block(D.matrix, cfg), atol=1e-12)


def test_dense_circuit_is_a_hermitian_unitary():
    spec = DiffusionSpec(3, "tilted", 0, (0.0, 1.0, -2.2), (0.2, 0.5, 0.3), seed=2)
    D, _ = build_diffusion(spec)
    W = PhaseInversionCircuit(D, PEAConfig(4, 0.8)).to_dense()
    np.testing.assert_allclose(W @ W.conj().T, np.eye(W.shape[0]), atol=1e-12)
    np.testing.assert_allclose(W, W.conj().T, atol=1e-12)
    block = W.reshape(3, 16, 3, 16)[:, 0, :, 0]
    np.testing.assert_allclose(block, PhaseInversionCircuit(D, PEAConfig(4, 0.8)).zero_block(), atol=1e-12)


def test_apply_accepts_flat_and_batched_states():
    D, _ = build_diffusion(grover_spec(4))
    W = PhaseInversionCircuit(D, PEAConfig(2, math.pi))
    x = np.random.default_rng(0).standard_normal((4, 4)) + 0j
    np.testing.assert_allclose(W.apply(x.ravel()), W.apply(x).ravel(), atol=1e-14)
    batch = np.stack([x, 2 * x], axis=-1)
    np.testing.assert_allclose(W.apply(batch)[..., 1], 2 * W.apply(x), atol=1e-13)


def test_grover_single_bit_is_exact():
    spec = grover_spec(4)
    D, eig = build_diffusion(spec)
    W = approx_selective_inversion(D, PEAConfig(1, math.pi))
    rep = inversion_report(W, spec.source_state(), eig)
    assert rep.queries == 1 and rep.circuit_queries == 2
    assert rep.worst_error <= 1e-12 and rep.leakage <= 1e-12
    block, leak = effective_system_action(W)
    s = spec.source_state()
    np.testing.assert_allclose(block, np.eye(4) - 2 * np.outer(s, s.conj()), atol=1e-12)


def test_bin_center_phases_are_exact():
    spec = DiffusionSpec(4, "uniform", 0, (0.0, math.pi / 2, -math.pi / 2, math.pi), (0.25,) * 4)
    D, eig = build_diffusion(spec)
    rep = inversion_report(PhaseInversionCircuit(D, PEAConfig(2, math.pi / 2)), spec.source_state(), eig)
    assert rep.worst_error <= 1e-12


def test_block_error_bounded_by_measured_error():
    spec = off_bin_spec()
    D, eig = build_diffusion(spec)
    W = PhaseInversionCircuit(D, PEAConfig(8, 0.3))
    rep = inversion_report(W, spec.source_state(), eig)
    block, leak = effective_system_action(W, eig)
    s = spec.source_state()
    assert np.max(np.abs(block - (np.eye(16) - 2 * np.outer(s, s.conj())))) <= rep.worst_error
    assert leak <= rep.worst_error + 1e-15


def test_required_ancillas_examples():
    assert required_ancillas(math.pi, 1e-3) == (1, 1)
    b, q = required_ancillas(0.1, 0.05)
    assert q == 2**b - 1
    spec = random_spec(np.random.default_rng(5), 8, 0.1, 0.1, source="tilted", seed=5)
    D, eig = build_diffusion(spec)
    rep = inversion_report(PhaseInversionCircuit(D, PEAConfig(b, 0.1)), spec.source_state(), eig)
    assert rep.worst_error <= 0.05


def test_halving_epsilon_adds_at_most_one_ancilla():
    eps = [0.2 / 2**k for k in range(20)]
    bits = [required_ancillas(0.3, e)[0] for e in eps]
    assert all(0 <= b2 - b1 <= 1 for b1, b2 in zip(bits, bits[1:]))
    assert bits[-1] - bits[0] <= 4


def test_kaiser_error_decays_monotonically():
    spec = off_bin_spec()
    D, eig = build_diffusion(spec)
    rows = pea_sweep(D, spec.source_state(), 0.3, range(5, 11), eig=eig)
    err = [r[2] for r in rows]
    assert all(e2 <= e1 + 1e-12 for e1, e2 in zip(err, err[1:]))
    assert err[-1] <= 1e-11


def test_uniform_taper_decays_only_as_one_over_m():
    uni = [predicted_worst_error(PEAConfig(b, 0.3, 0.5, "uniform")) for b in range(7, 13)]
    scaled = [e * 2**b for e, b in zip(uni, range(7, 13))]
    assert max(scaled) / min(scaled) <= 2.0
    assert predicted_worst_error(PEAConfig(9, 0.3)) <= 1e-12 < uni[2]


def test_too_few_bits_rejected():
    assert min_bits(0.3) == 5
    with pytest.raises(SpecError):
        PEAConfig(4, 0.3)
    with pytest.raises(SpecError):
        PEAConfig(5, 0.3, taper="hann")
    with pytest.raises(SpecError):
        PEAConfig(0, 0.3)
    with pytest.raises(SpecError):
        required_ancillas(0.3, 1.5)


def test_budget_refusal():
    D, _ = build_diffusion(grover_spec(64))
    with pytest.raises(BudgetError):
        PhaseInversionCircuit(D, PEAConfig(16, math.pi))
    with pytest.raises(BudgetError):
        required_ancillas(0.3, 1e-300, taper="uniform", b_max=8)


def test_sweep_csv_header():
    text = sweep_csv([(5, 31, 0.1, 0.05)])
    assert text.splitlines() == ["b,queries,worst_error,leakage", "5,31,0.1,0.05"]


def test_zero_block_chunking_is_invisible(monkeypatch):
    import diffsearch.pea as pea

    spec = off_bin_spec(n=12)
    D, _ = build_diffusion(spec)
    W = PhaseInversionCircuit(D, PEAConfig(6, 0.3))
    whole = W.zero_block()
    monkeypatch.setattr(pea, "_CHUNK_AMPLITUDES", 12 * 64 * 5)  # five columns per chunk
    np.testing.assert_allclose(W.zero_block(), whole, atol=1e-13)
