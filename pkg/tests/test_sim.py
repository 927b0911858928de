import math

import numpy as np
import pytest

from kickedising.circuit import RX, RZ, RZZ, X, Gate, build_otoc_circuit
from kickedising.lattice import build_heavy_hex, color_edges, induced_subgraph
from kickedising.model import ModelParams, sample_disorder
from kickedising.sim import (
    GLOBAL_DEPOLARIZING,
    LOCAL_DEPOLARIZING,
    NoiseModel,
    StateVector,
    apply_circuit,
    apply_gate,
    expectation_z,
    expectation_z_all,
    run_noisy,
)
from kickedising.circuit import build_floquet_step

from oracles import SZ, circuit_unitary, density_matrix_local_depolarizing, gate_unitary, op_on


def arc(length):
    ring = build_heavy_hex(1, 1)
    # walk the ring to collect consecutive sites
    adj = [[] for _ in range(12)]
    for i, j in ring.edges:
        adj[i].append(j)
        adj[j].append(i)
    order, prev = [0], None
    while len(order) < length:
        nxt = [v for v in adj[order[-1]] if v != prev][0]
        prev = order[-1]
        order.append(nxt)
    return color_edges(induced_subgraph(ring, sorted(order)))


def otoc_circ(length, n, b, insert=True, w=0.3, seed=5):
    g = arc(length)
    params = ModelParams(w=w)
    r = sample_disorder(params, g.num_qubits, seed=seed, realization_index=0)
    step = build_floquet_step(g, params, r)
    return build_otoc_circuit(step, n, b, insert_butterfly=insert)


def test_statevector_starts_in_zero():
    st = StateVector(3)
    assert st.amps[0] == 1.0
    assert np.abs(st.amps[1:]).max() == 0.0
    assert abs(st.norm() - 1.0) < 1e-15


def test_statevector_refuses_oversize_before_allocating():
    with pytest.raises(ValueError, match="exceeds the cap"):
        StateVector(7, max_qubits=6)


def test_gate_kernels_match_dense_matrices():
    rng = np.random.default_rng(0)
    n = 3
    cases = [Gate(X, (q,)) for q in range(n)]
    cases += [Gate(RX, (q,), a) for q in range(n) for a in (0.7, -2.2)]
    cases += [Gate(RZ, (q,), a) for q in range(n) for a in (1.3, -0.4)]
    cases += [Gate(RZZ, (i, j), a)
              for i, j in [(0, 1), (1, 2), (0, 2), (2, 0)] for a in (0.9, -1.7)]
    for gate in cases:
        psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
        psi /= np.linalg.norm(psi)
        st = StateVector(n)
        st.amps[:] = psi
        apply_gate(st, gate)
        ref = gate_unitary(gate, n) @ psi
        assert np.abs(st.amps - ref).max() < 1e-12, gate


def test_expectation_z_matches_dense():
    rng = np.random.default_rng(1)
    n = 4
    psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    psi /= np.linalg.norm(psi)
    st = StateVector(n)
    st.amps[:] = psi
    allz = expectation_z_all(st)
    for m in range(n):
        ref = np.real(psi.conj() @ op_on(SZ, m, n) @ psi)
        assert abs(expectation_z(st, m) - ref) < 1e-12
        assert expectation_z(st, m) == allz[m]


def test_apply_circuit_matches_dense_and_preserves_norm():
    circ = otoc_circ(5, 2, 2)
    st = StateVector(5)
    apply_circuit(st, circ)
    psi0 = np.zeros(2**5, dtype=complex)
    psi0[0] = 1.0
    ref = circuit_unitary(circ) @ psi0
    assert np.abs(st.amps - ref).max() < 1e-10
    assert abs(st.norm() - 1.0) < 1e-12


def test_noiseless_run_equals_exact_application():
    circ = otoc_circ(6, 2, 1)
    res = run_noisy(circ, NoiseModel(), n_traj=3, shots_per_traj=None, rng_seed=0)
    st = StateVector(6)
    apply_circuit(st, circ)
    assert np.array_equal(res.mean, expectation_z_all(st))
    assert np.all(res.stderr == 0.0)


def test_global_depolarizing_damps_by_survival_probability():
    # a reset erases <Z> on average, so E[mean] = (1-q)^steps * ideal
    circ = otoc_circ(6, 2, 0)
    q = 0.3
    noise = NoiseModel(mode=GLOBAL_DEPOLARIZING, q_global=q)
    res = run_noisy(circ, noise, n_traj=4000, shots_per_traj=None, rng_seed=7)
    st = StateVector(6)
    apply_circuit(st, circ)
    ideal = expectation_z_all(st)
    expect = (1.0 - q) ** (2 * 2) * ideal
    sigma = np.maximum(res.stderr, 1e-12)
    assert np.all(np.abs(res.mean - expect) < 4 * sigma)


def test_local_depolarizing_matches_density_matrix():
    circ = otoc_circ(5, 2, 2)
    p2 = 0.05
    noise = NoiseModel(mode=LOCAL_DEPOLARIZING, p2=p2)
    res = run_noisy(circ, noise, n_traj=3000, shots_per_traj=None, rng_seed=11)
    ref = density_matrix_local_depolarizing(circ, p2)
    sigma = np.maximum(res.stderr, 1e-12)
    assert np.all(np.abs(res.mean - ref) < 4 * sigma)
    # and the sampler is genuinely noisy here, not short-circuited
    assert np.any(res.stderr > 0)


def test_stderr_scales_like_inverse_root_trajectories():
    circ = otoc_circ(5, 2, 2)
    noise = NoiseModel(mode=LOCAL_DEPOLARIZING, p2=0.1)
    small = run_noisy(circ, noise, n_traj=400, shots_per_traj=None, rng_seed=3)
    large = run_noisy(circ, noise, n_traj=6400, shots_per_traj=None, rng_seed=3)
    picks = [m for m in range(5) if small.stderr[m] > 0 and large.stderr[m] > 0]
    assert picks
    ratios = [small.stderr[m] / large.stderr[m] for m in picks]
    # expect a factor of 4, allow sampling scatter
    assert 2.8 < np.median(ratios) < 5.6


def test_shot_noise_is_unbiased_and_reproducible():
    circ = otoc_circ(5, 1, 2)
    res = run_noisy(circ, NoiseModel(), n_traj=500, shots_per_traj=64, rng_seed=9)
    st = StateVector(5)
    apply_circuit(st, circ)
    ideal = expectation_z_all(st)
    # per-shot variance (1-z^2)/shots, averaged over trajectories
    sigma = np.sqrt(np.maximum(1e-12, (1 - ideal**2) / 64 / 500))
    assert np.all(np.abs(res.mean - ideal) < 5 * sigma)
    again = run_noisy(circ, NoiseModel(), n_traj=500, shots_per_traj=64, rng_seed=9)
    assert np.array_equal(res.mean, again.mean)
    assert np.array_equal(res.stderr, again.stderr)


def test_trajectory_streams_do_not_depend_on_batching():
    # same seed, same trajectory count: identical whether asked once or twice
    circ = otoc_circ(4, 1, 1)
    noise = NoiseModel(mode=LOCAL_DEPOLARIZING, p2=0.2)
    a = run_noisy(circ, noise, n_traj=50, shots_per_traj=None, rng_seed=21)
    b = run_noisy(circ, noise, n_traj=50, shots_per_traj=None, rng_seed=21)
    assert np.array_equal(a.mean, b.mean)


def test_event_free_trajectories_reproduce_the_exact_result():
    # every trajectory reuses the cached noiseless evaluation; only the
    # averaging arithmetic separates the mean from it
    circ = otoc_circ(4, 1, 1)
    noise = NoiseModel(mode=LOCAL_DEPOLARIZING, p2=1e-12)
    res = run_noisy(circ, noise, n_traj=20, shots_per_traj=None, rng_seed=2)
    st = StateVector(4)
    apply_circuit(st, circ)
    assert np.abs(res.mean - expectation_z_all(st)).max() < 1e-14
    assert np.all(res.stderr < 1e-15)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(mode="thermal")
    with pytest.raises(ValueError):
        NoiseModel(mode=LOCAL_DEPOLARIZING, p2=1.0)
    with pytest.raises(ValueError):
        NoiseModel(mode=GLOBAL_DEPOLARIZING, q_global=-0.1)
    with pytest.raises(ValueError):
        run_noisy(otoc_circ(3, 1, 0), NoiseModel(), 0, None, 0)
