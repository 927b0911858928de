"""Command-line pipeline: disorder sweep, record files, aggregation, summary.

`run` executes the full protocol from a JSON config and writes records.csv,
aggregates.csv, summary.json, and manifest.json into the output directory.
The manifest embeds the fully resolved config, so `run manifest.json`
reproduces the records byte for byte. `analyze` rebuilds aggregates and
summary from an existing records file through the same code path.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .lattice import (
    CouplingGraph,
    bfs_distances,
    build_heavy_hex,
    color_edges,
    graph_to_json,
    load_graph,
)
from .model import ModelParams, sample_disorder
from .otoc import OtocRecord, measure_otoc, read_records_csv, write_records_csv
from .sim import DEFAULT_MAX_QUBITS, DEFAULT_P2, LOCAL_DEPOLARIZING, NONE, NoiseModel
from .stats import (
    DENOMINATOR,
    NORMALIZED,
    NUMERATOR,
    VEFF,
    ZNE,
    EnsembleStats,
    aggregate,
    aggregate_zne,
    estimate_crossover,
    write_aggregates_csv,
)

SUMMARY_SCHEMA = 1
MANIFEST_SCHEMA = 1

# thirteen-point default disorder grid, 0.02 to 0.5
DEFAULT_W_LIST = tuple((2 + 4 * k) / 100 for k in range(13))
DEFAULT_NOISE_FACTORS = (1.0, 1.5)

# Sweep disorder strengths are dimensionless: w quotes the half-width of the
# per-site kick-angle window as a fraction of a full rotation, so w = 0.5
# draws kick angles uniformly from the whole circle. ModelParams.w is the
# same half-width in radians; records keep the dimensionless sweep value.
DISORDER_TO_RADIANS = 2.0 * math.pi


class ConfigError(ValueError):
    """Config rejected; message lists one diagnostic per offending field."""


@dataclass(frozen=True)
class RunConfig:
    lattice: dict
    butterfly_qubit: int
    params: ModelParams  # w field is a placeholder, overridden per sweep point
    w_list: tuple[float, ...]
    n_max: int
    realizations: int
    noise: NoiseModel
    noise_factors: tuple[float, ...]
    trajectories: int
    shots: int | None
    seed: int
    output_dir: str
    max_qubits: int
    threads: int


def _want_int(value, lo, hi=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError("must be an integer")
    if value < lo or (hi is not None and value > hi):
        bound = f">= {lo}" if hi is None else f"in [{lo}, {hi}]"
        raise ValueError(f"must be {bound}, got {value}")
    return value


def _want_float(value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError("must be a number")
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return float(value)


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a run config (or a manifest wrapping one)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]  # accept a manifest back as input
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")

    errors: list[str] = []

    def fail(field: str, msg: str) -> None:
        errors.append(f"{field}: {msg}")

    known = {
        "schema_version", "lattice", "butterfly_qubit", "params", "w_list",
        "n_max", "realizations", "noise", "noise_factors", "trajectories",
        "shots", "seed", "output_dir", "max_qubits", "threads",
    }
    for key in sorted(set(data) - known):
        fail(key, "unknown field")

    lattice = data.get("lattice")
    if not isinstance(lattice, dict) or len(set(lattice) & {"heavy_hex", "edge_list"}) != 1:
        fail("lattice", "need exactly one of 'heavy_hex' or 'edge_list'")
        lattice = {}
    elif "heavy_hex" in lattice:
        hh = lattice["heavy_hex"]
        if not isinstance(hh, dict) or set(hh) != {"rows", "cols"}:
            fail("lattice.heavy_hex", "need exactly the fields 'rows' and 'cols'")
        else:
            for key in ("rows", "cols"):
                try:
                    _want_int(hh[key], 1)
                except ValueError as exc:
                    fail(f"lattice.heavy_hex.{key}", str(exc))
    else:
        ep = lattice["edge_list"]
        if not isinstance(ep, str) or not ep:
            fail("lattice.edge_list", "must be a file path")
        else:
            resolved = (path.parent / ep).resolve() if not Path(ep).is_absolute() else Path(ep)
            if not resolved.is_file():
                fail("lattice.edge_list", f"file not found: {resolved}")
            else:
                # pin the resolved path so a written manifest reruns anywhere
                lattice = {"edge_list": str(resolved)}

    def get_int(field, default, lo, hi=None):
        if field not in data:
            return default
        try:
            return _want_int(data[field], lo, hi)
        except ValueError as exc:
            fail(field, str(exc))
            return default

    butterfly = get_int("butterfly_qubit", 0, 0)
    if "butterfly_qubit" not in data:
        fail("butterfly_qubit", "required")

    pdata = data.get("params", {})
    params = ModelParams()
    if not isinstance(pdata, dict):
        fail("params", "must be an object")
    else:
        for key in sorted(set(pdata) - {"jt", "bzt", "bx0t"}):
            fail(f"params.{key}", "unknown field")
        kwargs = {}
        for key in ("jt", "bzt", "bx0t"):
            if key in pdata:
                try:
                    kwargs[key] = _want_float(pdata[key])
                except ValueError as exc:
                    fail(f"params.{key}", str(exc))
        try:
            params = ModelParams(**kwargs)
        except ValueError as exc:
            fail("params", str(exc))

    w_list = data.get("w_list", list(DEFAULT_W_LIST))
    if not isinstance(w_list, list) or not w_list:
        fail("w_list", "must be a non-empty list")
        w_list = list(DEFAULT_W_LIST)
    else:
        try:
            w_list = [_want_float(w) for w in w_list]
            if any(w < 0 for w in w_list):
                raise ValueError("disorder strengths must be >= 0")
            if len(set(w_list)) != len(w_list):
                raise ValueError("disorder strengths must be distinct")
        except ValueError as exc:
            fail("w_list", str(exc))
            w_list = list(DEFAULT_W_LIST)

    n_max = get_int("n_max", 10, 1)
    realizations = get_int("realizations", 25, 1)

    ndata = data.get("noise", {})
    noise = NoiseModel()
    if not isinstance(ndata, dict):
        fail("noise", "must be an object")
    else:
        for key in sorted(set(ndata) - {"mode", "p2", "q_global"}):
            fail(f"noise.{key}", "unknown field")
        try:
            noise = NoiseModel(
                mode=ndata.get("mode", NONE),
                p2=ndata.get("p2", DEFAULT_P2),
                q_global=ndata.get("q_global", 0.0),
            )
        except (TypeError, ValueError) as exc:
            fail("noise", str(exc))

    factors = data.get("noise_factors", list(DEFAULT_NOISE_FACTORS))
    try:
        if not isinstance(factors, list) or not factors:
            raise ValueError("must be a non-empty list")
        factors = [_want_float(f) for f in factors]
        if any(f < 1.0 for f in factors):
            raise ValueError("noise factors must be >= 1")
        if len(set(factors)) != len(factors):
            raise ValueError("noise factors must be distinct")
    except ValueError as exc:
        fail("noise_factors", str(exc))
        factors = list(DEFAULT_NOISE_FACTORS)

    trajectories = get_int("trajectories", 1, 1)

    shots = data.get("shots", "exact")
    if shots == "exact":
        shots = None
    else:
        try:
            shots = _want_int(shots, 1)
        except ValueError:
            fail("shots", f"must be 'exact' or a positive integer, got {shots!r}")
            shots = None

    seed = get_int("seed", 0, 0)

    output_dir = data.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        fail("output_dir", "must be a non-empty path")
        output_dir = "out"

    max_qubits = get_int("max_qubits", DEFAULT_MAX_QUBITS, 1, 30)
    threads = get_int("threads", 1, 1, 64)

    if errors:
        raise ConfigError(f"{path}: invalid config\n  " + "\n  ".join(errors))
    return RunConfig(
        lattice=lattice,
        butterfly_qubit=butterfly,
        params=params,
        w_list=tuple(sorted(w_list)),
        n_max=n_max,
        realizations=realizations,
        noise=noise,
        noise_factors=tuple(sorted(factors)),
        trajectories=trajectories,
        shots=shots,
        seed=seed,
        output_dir=output_dir,
        max_qubits=max_qubits,
        threads=threads,
    )


def config_to_dict(cfg: RunConfig) -> dict:
    """Canonical JSON form of a resolved config; load_config round-trips it."""
    return {
        "schema_version": 1,
        "lattice": cfg.lattice,
        "butterfly_qubit": cfg.butterfly_qubit,
        "params": {"jt": cfg.params.jt, "bzt": cfg.params.bzt, "bx0t": cfg.params.bx0t},
        "w_list": list(cfg.w_list),
        "n_max": cfg.n_max,
        "realizations": cfg.realizations,
        "noise": {"mode": cfg.noise.mode, "p2": cfg.noise.p2, "q_global": cfg.noise.q_global},
        "noise_factors": list(cfg.noise_factors),
        "trajectories": cfg.trajectories,
        "shots": "exact" if cfg.shots is None else cfg.shots,
        "seed": cfg.seed,
        "output_dir": cfg.output_dir,
        "max_qubits": cfg.max_qubits,
        "threads": cfg.threads,
    }


def build_lattice(cfg: RunConfig) -> CouplingGraph:
    if "heavy_hex" in cfg.lattice:
        hh = cfg.lattice["heavy_hex"]
        graph = build_heavy_hex(hh["rows"], hh["cols"])
    else:
        graph = load_graph(cfg.lattice["edge_list"])
    graph = color_edges(graph)
    if graph.num_qubits > cfg.max_qubits:
        raise ConfigError(
            f"lattice has {graph.num_qubits} qubits, above max_qubits={cfg.max_qubits}; "
            "refusing before allocating the statevector"
        )
    if not (0 <= cfg.butterfly_qubit < graph.num_qubits):
        raise ConfigError(
            f"butterfly_qubit: {cfg.butterfly_qubit} out of range for "
            f"{graph.num_qubits}-qubit lattice"
        )
    if any(d < 0 for d in bfs_distances(graph, cfg.butterfly_qubit)):
        raise ConfigError("lattice: graph must be connected")
    return graph


def run_sweep(cfg: RunConfig, graph: CouplingGraph, progress=None) -> list[OtocRecord]:
    """Execute the full (w, realization, n, noise factor) grid.

    Every task owns a seed keyed by its grid position, so the record stream
    is independent of scheduling and thread count.
    """
    tasks = []
    for w_idx, w in enumerate(cfg.w_list):
        params = replace(cfg.params, w=DISORDER_TO_RADIANS * w)
        for r in range(cfg.realizations):
            realization = sample_disorder(params, graph.num_qubits, cfg.seed, r)
            for n in range(1, cfg.n_max + 1):
                for f_idx, f in enumerate(cfg.noise_factors):
                    seeds = np.random.SeedSequence(
                        entropy=cfg.seed, spawn_key=(1, w_idx, r, n, f_idx)
                    )
                    tasks.append((w, params, realization, n, f, seeds))

    def run_task(task) -> list[OtocRecord]:
        w, params, realization, n, f, seeds = task
        recs = measure_otoc(
            graph, params, realization, n, cfg.butterfly_qubit, cfg.noise, f,
            seeds, n_traj=cfg.trajectories, shots=cfg.shots,
            max_qubits=cfg.max_qubits,
        )
        # records carry the dimensionless sweep value, not the radian width
        return [replace(rec, w=w) for rec in recs]

    results: list[list[OtocRecord] | None] = [None] * len(tasks)
    every = max(1, len(tasks) // 20)
    if cfg.threads == 1:
        for i, task in enumerate(tasks):
            results[i] = run_task(task)
            if progress and (i + 1) % every == 0:
                progress(i + 1, len(tasks))
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = {pool.submit(run_task, t): i for i, t in enumerate(tasks)}
            done = 0
            for fut in as_completed(futures):
                results[futures[fut]] = fut.result()
                done += 1
                if progress and done % every == 0:
                    progress(done, len(tasks))

    records = [rec for chunk in results for rec in chunk]
    records.sort(key=lambda r: (r.w, r.realization_index, r.n, r.noise_factor, r.m))
    return records


def aggregate_all(records: list[OtocRecord], p2: float | None) -> dict[str, list[EnsembleStats]]:
    out = {q: aggregate(records, q, p2=p2) for q in (NUMERATOR, DENOMINATOR, NORMALIZED)}
    if any(r.veff is not None for r in records):
        out[VEFF] = aggregate(records, VEFF, p2=p2)
    if len({r.noise_factor for r in records}) >= 2:
        out[ZNE] = aggregate_zne(records)
    return out


def _crossover_entry(
    stats: list[EnsembleStats] | None, n_star: int, f_star: float
) -> dict | None:
    """Crossover from the mean curve at the deepest step count.

    Probes the site distance nearest to n_star // 2: far enough out that the
    weak-disorder OTOC has saturated, near enough that signal reaches it.
    Needs at least three disorder strengths.
    """
    if not stats:
        return None
    rows = [
        s for s in stats
        if s.n == n_star and s.noise_factor == f_star and s.mean is not None
    ]
    if not rows:
        return None
    target = n_star // 2
    x_star = min({s.x for s in rows}, key=lambda x: (abs(x - target), x))
    curve = [(s.w, s.mean, s.stderr) for s in rows if s.x == x_star]
    if len(curve) < 3:
        return None
    res = estimate_crossover(curve)
    return {
        "w_c": res.w_c,
        "uncertainty": res.uncertainty,
        "low_confidence": res.low_confidence,
        "n": n_star,
        "x": x_star,
        "f": f_star,
        "n_w_points": len(curve),
    }


def build_summary(
    records: list[OtocRecord], stats_by_quantity: dict[str, list[EnsembleStats]]
) -> dict:
    n_star = max(r.n for r in records)
    f_star = min(r.noise_factor for r in records)
    return {
        "schema_version": SUMMARY_SCHEMA,
        "n_records": len(records),
        "n_discarded": sum(1 for r in records if r.discarded),
        "w_values": sorted({r.w for r in records}),
        "n_values": sorted({r.n for r in records}),
        "noise_factors": sorted({r.noise_factor for r in records}),
        "quantities": sorted(stats_by_quantity),
        "w_c": _crossover_entry(stats_by_quantity.get(NORMALIZED), n_star, f_star),
        "w_c_zne": _crossover_entry(stats_by_quantity.get(ZNE), n_star, 0.0),
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_outputs(
    out_dir: Path, records: list[OtocRecord], p2: float | None
) -> dict:
    stats_by_quantity = aggregate_all(records, p2)
    write_aggregates_csv(out_dir / "aggregates.csv", stats_by_quantity)
    summary = build_summary(records, stats_by_quantity)
    _write_json(out_dir / "summary.json", summary)
    return summary


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    graph = build_lattice(cfg)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    progress = None
    if args.progress:
        def progress(done, total):
            print(f"{done}/{total} tasks", file=sys.stderr)

    records = run_sweep(cfg, graph, progress=progress)
    write_records_csv(out_dir / "records.csv", records)
    p2 = cfg.noise.p2 if cfg.noise.mode == LOCAL_DEPOLARIZING else None
    summary = _write_outputs(out_dir, records, p2)

    manifest = {
        "schema_version": MANIFEST_SCHEMA,
        "config": config_to_dict(cfg),
        "lattice_qubits": graph.num_qubits,
        "lattice_edges": graph.num_edges,
        "n_records": len(records),
        "outputs": ["records.csv", "aggregates.csv", "summary.json"],
    }
    _write_json(out_dir / "manifest.json", manifest)

    wc = summary["w_c"]
    wc_text = "n/a" if wc is None else f"{wc['w_c']:.3f} +- {wc['uncertainty']:.3f}"
    print(f"wrote {len(records)} records to {out_dir}/records.csv (w_c {wc_text})")
    return 0


def cmd_analyze(args) -> int:
    records = read_records_csv(args.records)
    if args.w_min is not None:
        records = [r for r in records if r.w >= args.w_min]
    if args.w_max is not None:
        records = [r for r in records if r.w <= args.w_max]
    if not records:
        print("no records selected", file=sys.stderr)
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = _write_outputs(out_dir, records, args.p2)
    wc = summary["w_c"]
    wc_text = "n/a" if wc is None else f"{wc['w_c']:.3f} +- {wc['uncertainty']:.3f}"
    print(f"aggregated {len(records)} records into {out_dir} (w_c {wc_text})")
    return 0


def cmd_export_graph(args) -> int:
    if args.edge_list is not None:
        graph = load_graph(args.edge_list)
    else:
        graph = build_heavy_hex(args.rows, args.cols)
    graph = color_edges(graph)
    text = graph_to_json(graph)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {graph.num_qubits}-qubit graph to {args.out}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kickedising",
        description="Kicked-Ising OTOC simulation pipeline on heavy-hex lattices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a sweep from a JSON config")
    p_run.add_argument("config", help="config JSON (a manifest.json also works)")
    p_run.add_argument("--progress", action="store_true", help="task progress on stderr")
    p_run.set_defaults(func=cmd_run)

    p_an = sub.add_parser("analyze", help="re-aggregate an existing records.csv")
    p_an.add_argument("records")
    p_an.add_argument("--out", required=True, help="output directory")
    p_an.add_argument("--w-min", type=float, default=None)
    p_an.add_argument("--w-max", type=float, default=None)
    p_an.add_argument("--p2", type=float, default=None,
                      help="two-qubit error rate for effective-volume weighting")
    p_an.set_defaults(func=cmd_analyze)

    p_ex = sub.add_parser("export-graph", help="emit a coupling graph as JSON")
    group = p_ex.add_mutually_exclusive_group()
    group.add_argument("--edge-list", default=None, help="read this edge-list file")
    p_ex.add_argument("--rows", type=int, default=1)
    p_ex.add_argument("--cols", type=int, default=1)
    p_ex.add_argument("--out", default=None, help="output file (default stdout)")
    p_ex.set_defaults(func=cmd_export_graph)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
