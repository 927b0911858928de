"""OTOC measurement records: circuit pair, normalization, effective volume.

One measurement prepares U'^n X_b U^n |0>, reads every <Z_m> simultaneously
(the butterfly/numerator circuit), and repeats without the X insertion (the
normalization/denominator circuit). Noiselessly the denominator is exactly 1;
with noise the ratio cancels the depolarizing attenuation and the denominator
doubles as a fidelity probe.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuit import Circuit, build_floquet_step, build_otoc_circuit, fold_gates, prune_causal_cone
from .lattice import CouplingGraph, bfs_distances
from .model import DisorderRealization, ModelParams
from .sim import DEFAULT_MAX_QUBITS, NoiseModel, run_noisy

RECORDS_SCHEMA = 1
_RECORDS_HEADER = f"# kickedising records schema={RECORDS_SCHEMA}"

CSV_COLUMNS = [
    "w", "realization", "n", "m", "x", "f",
    "numerator", "err_num", "denominator", "err_den",
    "normalized", "veff", "discarded",
]


@dataclass(frozen=True)
class OtocRecord:
    """One (disorder realization, step count, site) measurement at one noise factor."""

    w: float
    realization_index: int
    n: int
    m: int
    x: int
    noise_factor: float
    numerator: float
    err_num: float
    denominator: float
    err_den: float
    normalized: float | None
    veff: float | None
    discarded: bool


def effective_quantum_volume(fidelity: float, p: float) -> float:
    """Gate count v solving fidelity = (1 - p)**v."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must be in (0, 1), got {p}")
    if not (fidelity > 0.0):
        raise ValueError(f"fidelity must be positive, got {fidelity}")
    return math.log(fidelity) / math.log(1.0 - p)


def measure_otoc(
    graph: CouplingGraph,
    params: ModelParams,
    realization: DisorderRealization,
    n: int,
    butterfly: int,
    noise: NoiseModel,
    noise_factor: float,
    seeds,
    n_traj: int = 1,
    shots: int | None = None,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> list[OtocRecord]:
    """Measure bare and normalized OTOCs at every site for one realization.

    Both circuits are causal-cone pruned with the same butterfly cone and
    folded at the same noise factor, but sampled with independent trajectory
    streams. `seeds` is an int or SeedSequence; four child streams are derived
    from it (numerator fold, denominator fold, numerator trajectories,
    denominator trajectories). A non-positive denominator flags the record
    DISCARDED; the raw values are still written so downstream aggregation can
    count them.
    """
    dist = bfs_distances(graph, butterfly)
    if any(d < 0 for d in dist):
        raise ValueError("graph must be connected to assign butterfly distances")
    base = seeds if isinstance(seeds, np.random.SeedSequence) else np.random.SeedSequence(seeds)
    child = [
        np.random.SeedSequence(entropy=base.entropy, spawn_key=base.spawn_key + (k,))
        for k in range(4)
    ]

    step = build_floquet_step(graph, params, realization)
    num_circ = prune_causal_cone(
        build_otoc_circuit(step, n, butterfly, insert_butterfly=True), graph, butterfly
    )
    den_circ = prune_causal_cone(
        build_otoc_circuit(step, n, butterfly, insert_butterfly=False), graph, butterfly
    )
    num_circ = fold_gates(num_circ, noise_factor, child[0])
    den_circ = fold_gates(den_circ, noise_factor, child[1])

    num = run_noisy(num_circ, noise, n_traj, shots, child[2], max_qubits=max_qubits)
    den = run_noisy(den_circ, noise, n_traj, shots, child[3], max_qubits=max_qubits)

    use_veff = noise.mode == "local_depolarizing" and 0.0 < noise.p2 < 1.0
    records = []
    for m in range(graph.num_qubits):
        numerator = float(num.mean[m])
        denominator = float(den.mean[m])
        discarded = denominator <= 0.0
        normalized = None if discarded else numerator / denominator
        veff = None
        if use_veff and not discarded:
            veff = effective_quantum_volume(denominator, noise.p2)
        records.append(
            OtocRecord(
                w=params.w,
                realization_index=realization.realization_index,
                n=n,
                m=m,
                x=dist[m],
                noise_factor=noise_factor,
                numerator=numerator,
                err_num=float(num.stderr[m]),
                denominator=denominator,
                err_den=float(den.stderr[m]),
                normalized=normalized,
                veff=veff,
                discarded=discarded,
            )
        )
    return records


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_records_csv(path: str | Path, records: list[OtocRecord]) -> None:
    """Write records with a schema header line; floats use shortest-roundtrip repr."""
    with open(path, "w", newline="") as fh:
        fh.write(_RECORDS_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                _fmt(r.w), r.realization_index, r.n, r.m, r.x, _fmt(r.noise_factor),
                _fmt(r.numerator), _fmt(r.err_num), _fmt(r.denominator), _fmt(r.err_den),
                _fmt(r.normalized), _fmt(r.veff), int(r.discarded),
            ])


def read_records_csv(path: str | Path) -> list[OtocRecord]:
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("# kickedising records schema="):
            raise ValueError(f"{path}: not a records file (missing schema header)")
        version = header.rsplit("=", 1)[-1]
        if version != str(RECORDS_SCHEMA):
            raise ValueError(
                f"{path}: records schema {version} not supported (expected {RECORDS_SCHEMA})"
            )
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        records = []
        for row in reader:
            records.append(
                OtocRecord(
                    w=float(row["w"]),
                    realization_index=int(row["realization"]),
                    n=int(row["n"]),
                    m=int(row["m"]),
                    x=int(row["x"]),
                    noise_factor=float(row["f"]),
                    numerator=float(row["numerator"]),
                    err_num=float(row["err_num"]),
                    denominator=float(row["denominator"]),
                    err_den=float(row["err_den"]),
                    normalized=float(row["normalized"]) if row["normalized"] else None,
                    veff=float(row["veff"]) if row["veff"] else None,
                    discarded=bool(int(row["discarded"])),
                )
            )
    return records
