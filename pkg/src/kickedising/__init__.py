"""Kicked-Ising OTOC simulation suite on heavy-hex coupling graphs."""

__version__ = "0.1.0"

from .lattice import CouplingGraph, build_heavy_hex, color_edges, load_graph
from .model import ModelParams, DisorderRealization, sample_disorder
from .circuit import (
    Circuit,
    Gate,
    build_floquet_step,
    build_otoc_circuit,
    count_lightcone_gates,
    fold_gates,
    prune_causal_cone,
)
from .sim import NoiseModel, StateVector, apply_circuit, expectation_z_all, run_noisy
from .otoc import (
    OtocRecord,
    effective_quantum_volume,
    measure_otoc,
    read_records_csv,
    write_records_csv,
)
from .stats import (
    CrossoverResult,
    EnsembleStats,
    ZneResult,
    aggregate,
    aggregate_zne,
    estimate_crossover,
    zne_extrapolate,
)

__all__ = [
    "__version__",
    "CouplingGraph", "build_heavy_hex", "color_edges", "load_graph",
    "ModelParams", "DisorderRealization", "sample_disorder",
    "Circuit", "Gate", "build_floquet_step", "build_otoc_circuit",
    "count_lightcone_gates", "fold_gates", "prune_causal_cone",
    "NoiseModel", "StateVector", "apply_circuit", "expectation_z_all", "run_noisy",
    "OtocRecord", "effective_quantum_volume", "measure_otoc",
    "read_records_csv", "write_records_csv",
    "CrossoverResult", "EnsembleStats", "ZneResult",
    "aggregate", "aggregate_zne", "estimate_crossover", "zne_extrapolate",
]
