"""Statevector simulation with stochastic Pauli / global-reset noise.

Basis convention is little-endian: bit q of the amplitude index is qubit q.
All kernels act in place on a (2,)*n view of the flat amplitude array; each
gate touches two disjoint half-slices, so a single temporary of half the
state is the only allocation per gate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_QUBITS = 26  # 2**26 complex128 amplitudes = 1 GiB

NONE = "none"
LOCAL_DEPOLARIZING = "local_depolarizing"
GLOBAL_DEPOLARIZING = "global_depolarizing"
_MODES = (NONE, LOCAL_DEPOLARIZING, GLOBAL_DEPOLARIZING)

DEFAULT_P2 = 3.7e-3  # median two-qubit gate error on the reference hardware


@dataclass(frozen=True)
class NoiseModel:
    mode: str = NONE
    p2: float = DEFAULT_P2
    q_global: float = 0.0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if not (0.0 <= self.p2 < 1.0):
            raise ValueError(f"p2 must be in [0, 1), got {self.p2}")
        if not (0.0 <= self.q_global < 1.0):
            raise ValueError(f"q_global must be in [0, 1), got {self.q_global}")


class StateVector:
    """2**n complex amplitudes; refuses construction past the qubit cap."""

    __slots__ = ("n_qubits", "amps")

    def __init__(self, n_qubits: int, max_qubits: int = DEFAULT_MAX_QUBITS):
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        if n_qubits > max_qubits:
            raise ValueError(
                f"{n_qubits} qubits exceeds the cap of {max_qubits} "
                f"(2**{n_qubits} amplitudes); raise max_qubits explicitly to override"
            )
        self.n_qubits = n_qubits
        self.amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        self.amps[0] = 1.0

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))


def _halves(amps: np.ndarray, n: int, q: int):
    """Views of the q-th qubit's 0 and 1 subspaces."""
    view = amps.reshape(1 << (n - 1 - q), 2, 1 << q)
    return view[:, 0, :], view[:, 1, :]


def _apply_rx(amps, n, q, cos_half, neg_i_sin_half):
    a0, a1 = _halves(amps, n, q)
    t = a0.copy()
    a0 *= cos_half
    a0 += neg_i_sin_half * a1
    a1 *= cos_half
    a1 += neg_i_sin_half * t


def _apply_phase(amps, n, q, phase0, phase1):
    a0, a1 = _halves(amps, n, q)
    a0 *= phase0
    a1 *= phase1


def _apply_x(amps, n, q):
    a0, a1 = _halves(amps, n, q)
    t = a0.copy()
    a0[...] = a1
    a1[...] = t


def _apply_y(amps, n, q):
    a0, a1 = _halves(amps, n, q)
    t = a0.copy()
    a0[...] = -1j * a1
    a1[...] = 1j * t


def _apply_z(amps, n, q):
    _, a1 = _halves(amps, n, q)
    a1 *= -1.0


def _apply_rzz(amps, n, q1, q2, phase_even, phase_odd):
    hi, lo = max(q1, q2), min(q1, q2)
    view = amps.reshape(
        1 << (n - 1 - hi), 2, 1 << (hi - 1 - lo), 2, 1 << lo
    )
    view[:, 0, :, 0, :] *= phase_even
    view[:, 1, :, 1, :] *= phase_even
    view[:, 0, :, 1, :] *= phase_odd
    view[:, 1, :, 0, :] *= phase_odd


def apply_gate(state: StateVector, gate) -> None:
    """Apply one gate from `circuit` in place."""
    n = state.n_qubits
    kind = gate.kind
    if kind == "RX":
        half = 0.5 * gate.angle
        _apply_rx(state.amps, n, gate.qubits[0], math.cos(half), -1j * math.sin(half))
    elif kind == "RZ":
        half = 0.5 * gate.angle
        _apply_phase(state.amps, n, gate.qubits[0], np.exp(-1j * half), np.exp(1j * half))
    elif kind == "RZZ":
        half = 0.5 * gate.angle
        _apply_rzz(
            state.amps, n, gate.qubits[0], gate.qubits[1],
            np.exp(-1j * half), np.exp(1j * half),
        )
    elif kind == "X":
        _apply_x(state.amps, n, gate.qubits[0])
    elif kind == "IDLE":
        pass
    else:
        raise ValueError(f"unknown gate kind {kind!r}")
    if __debug__:
        assert abs(state.norm() - 1.0) < 1e-10


def apply_circuit(state: StateVector, circ) -> None:
    for layer in circ.layers:
        for gate in layer:
            apply_gate(state, gate)


_PAULI_APPLY = {1: _apply_x, 2: _apply_y, 3: _apply_z}


def _apply_pauli(amps, n, q, code):
    if code:
        _PAULI_APPLY[code](amps, n, q)


def _prob_one(amps: np.ndarray, n: int, q: int) -> float:
    _, a1 = _halves(amps, n, q)
    return float(np.sum(np.abs(a1) ** 2))


def expectation_z(state: StateVector, m: int) -> float:
    """<Z_m> of the current state."""
    if not (0 <= m < state.n_qubits):
        raise ValueError(f"qubit {m} out of range")
    return 1.0 - 2.0 * _prob_one(state.amps, state.n_qubits, m)


def expectation_z_all(state: StateVector) -> np.ndarray:
    """<Z_m> for every m; identical arithmetic to per-qubit calls."""
    return np.array(
        [1.0 - 2.0 * _prob_one(state.amps, state.n_qubits, m) for m in range(state.n_qubits)]
    )


@dataclass
class TrajectoryResult:
    mean: np.ndarray    # per-qubit <Z_m>
    stderr: np.ndarray  # standard error of the mean over trajectories
    n_traj: int


class _Op:
    """Gate precompiled for the trajectory loop (trig evaluated once)."""

    __slots__ = ("kind", "q0", "q1", "c0", "c1", "is_two_qubit")

    def __init__(self, gate):
        self.kind = gate.kind
        self.q0 = gate.qubits[0]
        self.q1 = gate.qubits[1] if len(gate.qubits) == 2 else -1
        self.is_two_qubit = len(gate.qubits) == 2
        if gate.kind == "RX":
            half = 0.5 * gate.angle
            self.c0, self.c1 = math.cos(half), -1j * math.sin(half)
        elif gate.kind in ("RZ", "RZZ"):
            half = 0.5 * gate.angle
            self.c0, self.c1 = np.exp(-1j * half), np.exp(1j * half)
        else:
            self.c0 = self.c1 = None

    def apply(self, amps, n):
        if self.kind == "RX":
            _apply_rx(amps, n, self.q0, self.c0, self.c1)
        elif self.kind == "RZ":
            _apply_phase(amps, n, self.q0, self.c0, self.c1)
        elif self.kind == "RZZ":
            _apply_rzz(amps, n, self.q0, self.q1, self.c0, self.c1)
        elif self.kind == "X":
            _apply_x(amps, n, self.q0)
        # IDLE: nothing


def _compile(circ) -> tuple[list[_Op], list[int], list[int]]:
    """Flatten to ops; return (ops, 2q-op indices, op index after each step)."""
    ops: list[_Op] = []
    two_qubit: list[int] = []
    step_breaks: list[int] = []
    ends = set(circ.step_ends)
    for idx, layer in enumerate(circ.layers):
        for gate in layer:
            op = _Op(gate)
            if op.is_two_qubit:
                two_qubit.append(len(ops))
            ops.append(op)
        if idx in ends:
            step_breaks.append(len(ops))
    return ops, two_qubit, step_breaks


def _exact_expectations(circ, max_qubits) -> np.ndarray:
    state = StateVector(circ.n_qubits, max_qubits=max_qubits)
    apply_circuit(state, circ)
    return expectation_z_all(state)


def run_noisy(
    circ,
    noise: NoiseModel,
    n_traj: int,
    shots_per_traj: int | None,
    rng_seed,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> TrajectoryResult:
    """Monte Carlo estimate of every <Z_m> under the given noise model.

    LOCAL_DEPOLARIZING: after each two-qubit gate, with probability p2 a
    uniformly random non-identity two-qubit Pauli hits the gate's qubits.
    GLOBAL_DEPOLARIZING: after each Floquet step, with probability q_global
    the state is replaced by a uniformly random computational basis state.
    shots_per_traj=None means exact expectation values per trajectory;
    otherwise binomial shot noise is added per qubit. Trajectory streams are
    keyed on (rng_seed, trajectory index) so results do not depend on how
    trajectories are scheduled. Error-free trajectories reuse one cached
    noiseless evaluation, which is exactly what simulating them would give.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if shots_per_traj is not None and shots_per_traj < 1:
        raise ValueError("shots_per_traj must be None or >= 1")
    n = circ.n_qubits
    exact = _exact_expectations(circ, max_qubits)

    noiseless = noise.mode == NONE or (
        noise.mode == LOCAL_DEPOLARIZING and noise.p2 == 0.0
    ) or (noise.mode == GLOBAL_DEPOLARIZING and noise.q_global == 0.0)
    if noiseless and shots_per_traj is None:
        return TrajectoryResult(mean=exact, stderr=np.zeros(n), n_traj=n_traj)

    base = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    ops, two_qubit, step_breaks = _compile(circ)

    vals = np.empty((n_traj, n))
    for t in range(n_traj):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=base.entropy, spawn_key=base.spawn_key + (t,))
        )
        z = _one_trajectory(
            circ, ops, two_qubit, step_breaks, noise, rng, exact, max_qubits
        )
        if shots_per_traj is not None:
            p1 = np.clip(0.5 * (1.0 - z), 0.0, 1.0)
            z = 1.0 - 2.0 * rng.binomial(shots_per_traj, p1) / shots_per_traj
        vals[t] = z

    mean = vals.mean(axis=0)
    if n_traj > 1:
        stderr = vals.std(axis=0, ddof=1) / math.sqrt(n_traj)
    else:
        stderr = np.zeros(n)
    return TrajectoryResult(mean=mean, stderr=stderr, n_traj=n_traj)


def _one_trajectory(circ, ops, two_qubit, step_breaks, noise, rng, exact, max_qubits):
    n = circ.n_qubits
    if noise.mode == LOCAL_DEPOLARIZING:
        hits = rng.random(len(two_qubit)) < noise.p2
        if not hits.any():
            return exact.copy()
        paulis = rng.integers(1, 16, size=int(hits.sum()))
        hit_after = dict(zip((two_qubit[i] for i in np.flatnonzero(hits)), paulis))
        state = StateVector(n, max_qubits=max_qubits)
        for idx, op in enumerate(ops):
            op.apply(state.amps, n)
            code = hit_after.get(idx)
            if code is not None:
                _apply_pauli(state.amps, n, op.q0, code >> 2)
                _apply_pauli(state.amps, n, op.q1, code & 3)
        return expectation_z_all(state)

    if noise.mode == GLOBAL_DEPOLARIZING:
        resets = rng.random(len(step_breaks)) < noise.q_global
        if not resets.any():
            return exact.copy()
        basis_states = rng.integers(0, 1 << n, size=int(resets.sum()))
        # only the evolution after the last reset is observable
        last = int(np.flatnonzero(resets)[-1])
        state = StateVector(n, max_qubits=max_qubits)
        state.amps[0] = 0.0
        state.amps[int(basis_states[-1])] = 1.0
        for op in ops[step_breaks[last]:]:
            op.apply(state.amps, n)
        return expectation_z_all(state)

    return exact.copy()
