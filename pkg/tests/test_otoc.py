import math

import numpy as np
import pytest

from kickedising.circuit import build_floquet_step, count_lightcone_gates
from kickedising.lattice import bfs_distances, build_heavy_hex, color_edges, induced_subgraph
from kickedising.model import ModelParams, sample_disorder
from kickedising.otoc import (
    OtocRecord,
    effective_quantum_volume,
    measure_otoc,
    read_records_csv,
    write_records_csv,
)
from kickedising.sim import GLOBAL_DEPOLARIZING, LOCAL_DEPOLARIZING, NoiseModel

from oracles import floquet_unitary, otoc_dense

RING = color_edges(build_heavy_hex(1, 1))
NOISELESS = NoiseModel()


def ring_arc(length):
    adj = [[] for _ in range(12)]
    for i, j in RING.edges:
        adj[i].append(j)
        adj[j].append(i)
    order, prev = [0], None
    while len(order) < length:
        nxt = [v for v in adj[order[-1]] if v != prev][0]
        prev = order[-1]
        order.append(nxt)
    return color_edges(induced_subgraph(RING, sorted(order)))


def test_zero_steps_gives_the_bare_butterfly():
    g = ring_arc(5)
    params = ModelParams(w=0.2)
    r = sample_disorder(params, 5, seed=1, realization_index=0)
    recs = measure_otoc(g, params, r, 0, 2, NOISELESS, 1.0, seeds=0)
    assert len(recs) == 5
    for rec in recs:
        assert rec.denominator == 1.0 and not rec.discarded
        want = -1.0 if rec.m == 2 else 1.0
        assert abs(rec.numerator - want) < 1e-12
        assert rec.x == bfs_distances(g, 2)[rec.m]


def test_outside_the_light_cone_the_otoc_is_one():
    params = ModelParams(w=0.1)
    r = sample_disorder(params, 12, seed=4, realization_index=0)
    for n in (1, 2, 3):
        recs = measure_otoc(RING, params, r, n, 0, NOISELESS, 1.0, seeds=0)
        outside = [rec for rec in recs if rec.x > n]
        assert outside
        for rec in outside:
            assert abs(rec.normalized - 1.0) < 1e-10


def test_records_match_the_dense_pipeline():
    g = ring_arc(8)
    for w, seed_r, n, b in [(0.0, 0, 2, 4), (0.3, 1, 3, 2), (0.5, 2, 1, 0)]:
        params = ModelParams(w=w)
        r = sample_disorder(params, 8, seed=17, realization_index=seed_r)
        recs = measure_otoc(g, params, r, n, b, NOISELESS, 1.0, seeds=3)
        U = floquet_unitary(g, params, r.bxt)
        ref = otoc_dense(U, n, b, 8)
        for rec in recs:
            assert abs(rec.numerator - ref[rec.m]) < 1e-10
            assert abs(rec.denominator - 1.0) < 1e-10
            assert abs(rec.normalized - ref[rec.m]) < 1e-10
            assert rec.err_num == 0.0 and rec.err_den == 0.0
            assert rec.veff is None  # no error rate without local noise


def test_effective_quantum_volume_inverts_the_fidelity_law():
    # keep (1-p)**v above underflow so the inversion stays well posed
    for v in (0.5, 7.0, 133.0, 4096.0):
        for p in (1e-4, 3.7e-3, 0.2):
            F = (1.0 - p) ** v
            if F == 0.0:
                continue
            assert abs(effective_quantum_volume(F, p) - v) < 1e-9 * max(1.0, v)
    with pytest.raises(ValueError):
        effective_quantum_volume(0.5, 0.0)
    with pytest.raises(ValueError):
        effective_quantum_volume(0.5, 1.0)
    with pytest.raises(ValueError):
        effective_quantum_volume(0.0, 0.1)
    with pytest.raises(ValueError):
        effective_quantum_volume(-0.2, 0.1)


def test_nonpositive_denominator_is_discarded_not_dropped():
    # near-certain resets with a single trajectory drive denominators to -1
    params = ModelParams(w=0.1)
    r = sample_disorder(params, 6, seed=6, realization_index=0)
    g = ring_arc(6)
    noise = NoiseModel(mode=GLOBAL_DEPOLARIZING, q_global=0.99)
    recs = measure_otoc(g, params, r, 2, 3, noise, 1.0, seeds=8, n_traj=1)
    assert len(recs) == 6
    flagged = [rec for rec in recs if rec.discarded]
    assert flagged, "expected at least one negative denominator"
    for rec in flagged:
        assert rec.denominator <= 0.0
        assert rec.normalized is None and rec.veff is None


def test_veff_tracks_the_pruned_circuit_volume_when_chaotic():
    # each sampled error damages the echo at most fully, so V_eff stays below
    # the surviving two-qubit gate count; in the fast-scrambling regime it
    # climbs toward that count as errors get time to reach the readout
    params = ModelParams(w=0.05)
    r = sample_disorder(params, 12, seed=9, realization_index=0)
    noise = NoiseModel(mode=LOCAL_DEPOLARIZING, p2=2e-3)
    step = build_floquet_step(RING, params, r)
    veffs = {}
    volumes = {}
    for n in (4, 6, 8):
        recs = measure_otoc(RING, params, r, n, 0, noise, 1.0, seeds=5, n_traj=400)
        good = [rec.veff for rec in recs if not rec.discarded]
        assert len(good) == 12
        veffs[n] = float(np.mean(good))
        volumes[n] = count_lightcone_gates(step, RING, n, 0)
    assert veffs[4] < veffs[6] < veffs[8]
    for n in (4, 6, 8):
        assert 0.0 < veffs[n] < volumes[n]
    # superlinear regime: doubling the depth more than doubles the volume
    assert veffs[8] > 2.5 * veffs[4]
    assert 0.5 < veffs[8] / volumes[8] < 0.9


def test_records_csv_round_trip(tmp_path):
    params = ModelParams(w=0.3)
    r = sample_disorder(params, 6, seed=2, realization_index=1)
    g = ring_arc(6)
    noise = NoiseModel(mode=LOCAL_DEPOLARIZING, p2=0.02)
    recs = measure_otoc(g, params, r, 2, 1, noise, 1.5, seeds=4, n_traj=40)
    path = tmp_path / "records.csv"
    write_records_csv(path, recs)
    back = read_records_csv(path)
    assert back == recs  # repr round-trips every float exactly


def test_records_csv_refuses_unknown_schema(tmp_path):
    path = tmp_path / "records.csv"
    params = ModelParams()
    r = sample_disorder(params, 5, seed=0, realization_index=0)
    recs = measure_otoc(ring_arc(5), params, r, 1, 2, NOISELESS, 1.0, seeds=0)
    write_records_csv(path, recs)
    text = path.read_text().replace("schema=1", "schema=99")
    path.write_text(text)
    with pytest.raises(ValueError, match="schema"):
        read_records_csv(path)
    path.write_text("w,realization\n0.1,0\n")
    with pytest.raises(ValueError):
        read_records_csv(path)


def test_measure_otoc_requires_connected_graph():
    from kickedising.lattice import CouplingGraph, color_edges as ce

    g = ce(CouplingGraph(num_qubits=4, edges=((0, 1), (2, 3))))
    params = ModelParams()
    r = sample_disorder(params, 4, seed=0, realization_index=0)
    with pytest.raises(ValueError, match="connected"):
        measure_otoc(g, params, r, 1, 0, NOISELESS, 1.0, seeds=0)
