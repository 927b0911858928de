"""Model parameters and disorder sampling for the kicked Ising chain/lattice.

Angles are stored as dimensionless products of couplings with the Floquet
period (jt = J*T etc.), which is all the circuit layer ever needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Point where the clean model is maximally scrambling.
DEFAULT_JT = math.pi / 2
DEFAULT_BZT = 1.3
DEFAULT_BX0T = math.pi / 2


@dataclass(frozen=True)
class ModelParams:
    """Couplings of one Floquet step, all premultiplied by the period."""

    jt: float = DEFAULT_JT
    bzt: float = DEFAULT_BZT
    bx0t: float = DEFAULT_BX0T
    w: float = 0.0  # half-width of the uniform transverse-field disorder

    def __post_init__(self):
        for name in ("jt", "bzt", "bx0t", "w"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.w < 0:
            raise ValueError(f"disorder width must be >= 0, got {self.w}")


@dataclass(frozen=True)
class DisorderRealization:
    """Per-qubit transverse-field angles for one disorder sample."""

    bxt: tuple[float, ...]
    seed: int
    realization_index: int

    @property
    def n_qubits(self) -> int:
        return len(self.bxt)


def sample_disorder(
    params: ModelParams, n_qubits: int, seed: int, realization_index: int
) -> DisorderRealization:
    """Draw site fields uniformly from [bx0t - w, bx0t + w].

    The stream is keyed on (seed, realization_index) only, so sweeping w with
    fixed indices reuses the same underlying uniforms (common random numbers
    across the disorder-strength axis). w = 0 returns bx0t at every site
    exactly.
    """
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if realization_index < 0:
        raise ValueError("realization_index must be >= 0")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(realization_index,))
    rng = np.random.default_rng(ss)
    offsets = 2.0 * rng.random(n_qubits) - 1.0
    bxt = params.bx0t + params.w * offsets
    return DisorderRealization(
        bxt=tuple(float(b) for b in bxt),
        seed=seed,
        realization_index=realization_index,
    )
