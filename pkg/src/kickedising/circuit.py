"""Circuit construction for Floquet OTOC measurements.

Gate conventions: RX(t) = exp(-i t X / 2), RZ(t) = exp(-i t Z / 2),
RZZ(t) = exp(-i t Z.Z / 2). One Floquet step applies the transverse kick
first (RX on every site), then the commuting Ising half (RZ on every site,
RZZ over the edge layers); the whole step equals
exp(-i H_Z / 2) * exp(-i H_X / 2) for the angle choices in `model`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .lattice import CouplingGraph, bfs_distances
from .model import DisorderRealization, ModelParams

RX = "RX"
RZ = "RZ"
RZZ = "RZZ"
X = "X"
IDLE = "IDLE"

_ROTATIONS = {RX, RZ, RZZ}
_KINDS = _ROTATIONS | {X, IDLE}
_ARITY = {RX: 1, RZ: 1, RZZ: 2, X: 1, IDLE: 1}


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {_ARITY[self.kind]} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("repeated qubit in gate")
        if self.kind in _ROTATIONS:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle")
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    def adjoint(self) -> "Gate":
        if self.kind in _ROTATIONS:
            return replace(self, angle=-self.angle)
        return self  # X and IDLE are self-inverse


Layer = tuple[Gate, ...]


@dataclass(frozen=True)
class Circuit:
    """Immutable gate-layer sequence plus bookkeeping for steps and folding.

    step_ends holds the layer index closing each represented Floquet step, in
    order; an OTOC circuit with n steps has 2n entries (forward and adjoint
    halves both count).
    """

    n_qubits: int
    layers: tuple[Layer, ...]
    steps: int = 0
    step_ends: tuple[int, ...] = ()
    butterfly: int | None = None
    pruned: bool = False
    fold_factor: float = 1.0

    def __post_init__(self):
        for layer in self.layers:
            used: set[int] = set()
            for gate in layer:
                for q in gate.qubits:
                    if not (0 <= q < self.n_qubits):
                        raise ValueError(f"gate qubit {q} out of range")
                    if q in used:
                        raise ValueError(f"qubit {q} used twice in one layer")
                    used.add(q)
        for idx in self.step_ends:
            if not (0 <= idx < len(self.layers)):
                raise ValueError("step_ends index out of range")
        if tuple(sorted(self.step_ends)) != self.step_ends:
            raise ValueError("step_ends must be ascending")

    @property
    def num_gates(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def count_two_qubit_gates(self) -> int:
        return sum(1 for layer in self.layers for g in layer if len(g.qubits) == 2)


def build_floquet_step(
    graph: CouplingGraph, params: ModelParams, realization: DisorderRealization
) -> Circuit:
    """One Floquet step as layers: RX kick, RZ fields, then the RZZ matchings."""
    if graph.edge_layers is None:
        raise ValueError("graph needs edge_layers; run color_edges first")
    if realization.n_qubits != graph.num_qubits:
        raise ValueError(
            f"realization has {realization.n_qubits} sites, graph has {graph.num_qubits}"
        )
    n = graph.num_qubits
    layers: list[Layer] = [
        tuple(Gate(RX, (q,), realization.bxt[q]) for q in range(n)),
        tuple(Gate(RZ, (q,), params.bzt) for q in range(n)),
    ]
    for matching in graph.edge_layers:
        layers.append(tuple(Gate(RZZ, e, params.jt) for e in matching))
    return Circuit(
        n_qubits=n,
        layers=tuple(layers),
        steps=1,
        step_ends=(len(layers) - 1,),
    )


def adjoint(circ: Circuit) -> Circuit:
    """Reverse the layers and invert every gate."""
    layers = tuple(
        tuple(g.adjoint() for g in layer) for layer in reversed(circ.layers)
    )
    total = len(circ.layers)
    # a layer that closed a step going forward opens one in reverse
    starts = sorted(total - 1 - idx for idx in circ.step_ends)
    ends: list[int] = []
    for i, s in enumerate(starts):
        nxt = starts[i + 1] if i + 1 < len(starts) else total
        ends.append(nxt - 1)
    return Circuit(
        n_qubits=circ.n_qubits,
        layers=layers,
        steps=circ.steps,
        step_ends=tuple(ends) if circ.step_ends else (),
        butterfly=circ.butterfly,
        pruned=circ.pruned,
        fold_factor=circ.fold_factor,
    )


def build_otoc_circuit(
    step: Circuit, n: int, butterfly: int, insert_butterfly: bool
) -> Circuit:
    """n forward steps, the optional butterfly X, then the exact adjoint.

    With insert_butterfly=False the circuit composes a unitary with its own
    inverse; noiselessly it returns |0...0> and every <Z_m> is 1, which is the
    normalization reference for the butterfly circuit.
    """
    if step.steps != 1:
        raise ValueError("step must be a single Floquet step")
    if n < 0:
        raise ValueError("step count n must be >= 0")
    if not (0 <= butterfly < step.n_qubits):
        raise ValueError(f"butterfly qubit {butterfly} out of range")
    per_step = len(step.layers)
    layers: list[Layer] = []
    step_ends: list[int] = []
    for _ in range(n):
        layers.extend(step.layers)
        step_ends.append(len(layers) - 1)
    if insert_butterfly:
        layers.append((Gate(X, (butterfly,)),))
    back = adjoint(step)
    for _ in range(n):
        layers.extend(back.layers)
        step_ends.append(len(layers) - 1)
    assert len(layers) == 2 * n * per_step + (1 if insert_butterfly else 0)
    return Circuit(
        n_qubits=step.n_qubits,
        layers=tuple(layers),
        steps=2 * n,
        step_ends=tuple(step_ends),
        butterfly=butterfly if insert_butterfly else None,
    )


def _forward_step_layers(circ: Circuit, n: int) -> list[list[Layer]]:
    """Split the forward half of an OTOC circuit back into its n step groups."""
    if n == 0:
        return []
    bounds = circ.step_ends[:n]
    groups: list[list[Layer]] = []
    start = 0
    for end in bounds:
        groups.append(list(circ.layers[start : end + 1]))
        start = end + 1
    return groups


def prune_causal_cone(
    circ: Circuit, graph: CouplingGraph, butterfly: int
) -> Circuit:
    """Drop forward-half gates outside the butterfly's backward light cone.

    Support spreads at most one hop per step (the Ising half commutes
    internally), so step k of n only needs gates near the cone: Z-type gates
    that touch ball(butterfly, n-k) and X kicks inside ball(butterfly, n-k+1).
    The removed gates commute with the Heisenberg-evolved butterfly operator,
    hence every <Z_m> of the pruned circuit matches the unpruned one exactly.
    The adjoint half is rebuilt as the inverse of the pruned forward half, so
    the normalization circuit still composes to the identity.
    """
    if circ.steps % 2 != 0:
        raise ValueError("expected an OTOC circuit (forward + adjoint halves)")
    n = circ.steps // 2
    if graph.num_qubits != circ.n_qubits:
        raise ValueError("graph does not match circuit width")
    if not (0 <= butterfly < circ.n_qubits):
        raise ValueError(f"butterfly qubit {butterfly} out of range")
    if circ.butterfly is not None and circ.butterfly != butterfly:
        raise ValueError("butterfly disagrees with the circuit's own")
    dist = bfs_distances(graph, butterfly)

    def keep(gate: Gate, radius: int) -> bool:
        if gate.kind == RX:
            return any(0 <= dist[q] <= radius + 1 for q in gate.qubits)
        return any(0 <= dist[q] <= radius for q in gate.qubits)

    forward: list[Layer] = []
    fwd_ends: list[int] = []
    for k, group in enumerate(_forward_step_layers(circ, n), start=1):
        radius = n - k
        for layer in group:
            kept = tuple(g for g in layer if keep(g, radius))
            if kept:
                forward.append(kept)
        fwd_ends.append(len(forward) - 1)

    layers: list[Layer] = list(forward)
    step_ends: list[int] = [e for e in fwd_ends if e >= 0]
    has_butterfly = circ.butterfly is not None
    if has_butterfly:
        layers.append((Gate(X, (butterfly,)),))
    offset = len(layers)
    back_layers = [
        tuple(g.adjoint() for g in layer) for layer in reversed(forward)
    ]
    layers.extend(back_layers)
    # mirror the forward step boundaries onto the adjoint half
    fwd_sizes: list[int] = []
    prev = 0
    for e in fwd_ends:
        fwd_sizes.append(e + 1 - prev)
        prev = e + 1
    pos = offset
    for size in reversed(fwd_sizes):
        pos += size
        step_ends.append(pos - 1)
    return Circuit(
        n_qubits=circ.n_qubits,
        layers=tuple(layers),
        steps=circ.steps,
        step_ends=tuple(step_ends),
        butterfly=circ.butterfly,
        pruned=True,
        fold_factor=circ.fold_factor,
    )


def fold_gates(circ: Circuit, f: float, rng_seed) -> Circuit:
    """Replace two-qubit gates G by G G' G (G' the inverse), at random.

    Each RZZ is folded floor((f-1)/2) times plus one more with probability
    frac((f-1)/2), so the expected two-qubit gate count scales by exactly f.
    f = 1 returns the circuit unchanged; f = 3 folds every gate once. The
    unitary is unchanged for any draw.
    """
    if not math.isfinite(f) or f < 1.0:
        raise ValueError(f"noise factor must be >= 1, got {f}")
    if f == 1.0:
        return replace(circ, fold_factor=1.0)
    s = (f - 1.0) / 2.0
    base = int(math.floor(s))
    frac = s - base
    rng = np.random.default_rng(rng_seed)

    layers: list[Layer] = []
    new_ends: list[int] = []
    end_set = set(circ.step_ends)
    for idx, layer in enumerate(circ.layers):
        folds: dict[int, int] = {}
        for pos, gate in enumerate(layer):
            if len(gate.qubits) != 2:
                continue
            extra = base + (1 if frac > 0 and rng.random() < frac else 0)
            if extra:
                folds[pos] = extra
        layers.append(layer)
        if folds:
            rounds = max(folds.values())
            for r in range(1, rounds + 1):
                layers.append(
                    tuple(layer[p].adjoint() for p in sorted(folds) if folds[p] >= r)
                )
                layers.append(
                    tuple(layer[p] for p in sorted(folds) if folds[p] >= r)
                )
        if idx in end_set:
            new_ends.append(len(layers) - 1)
    return Circuit(
        n_qubits=circ.n_qubits,
        layers=tuple(layers),
        steps=circ.steps,
        step_ends=tuple(new_ends),
        butterfly=circ.butterfly,
        pruned=circ.pruned,
        fold_factor=f,
    )


def count_lightcone_gates(
    step: Circuit, graph: CouplingGraph, n: int, butterfly: int
) -> int:
    """Two-qubit gates surviving causal-cone pruning of the OTOC circuit."""
    circ = build_otoc_circuit(step, n, butterfly, insert_butterfly=True)
    return prune_causal_cone(circ, graph, butterfly).count_two_qubit_gates()


def circuit_to_json(circ: Circuit) -> str:
    payload = {
        "schema_version": 1,
        "n_qubits": circ.n_qubits,
        "steps": circ.steps,
        "step_ends": list(circ.step_ends),
        "butterfly": circ.butterfly,
        "pruned": circ.pruned,
        "fold_factor": circ.fold_factor,
        "layers": [
            [
                {"kind": g.kind, "qubits": list(g.qubits), "angle": g.angle}
                for g in layer
            ]
            for layer in circ.layers
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)
