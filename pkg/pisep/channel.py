"""
Phase-fading Gaussian channel uses.

Every receiver sees the gain-and-phase weighted sum of its incoming paths plus
CN(0, noise_scale * N) noise. Phases are either drawn once per block
(non-ergodic) or i.i.d. per symbol (ergodic). Relay transmissions are supplied
by the caller, so a channel use is memoryless.
"""

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from .errors import ArgumentError, ValidationError
from .model import (
    NOISE_STREAM,
    PHASE_STREAM,
    ROUTES,
    TWO_PI,
    ChannelSpec,
    PhaseVector,
    Topology,
    check_phase_vector,
    gain_names,
    path_count,
    receivers,
    require_valid,
    stream_rng,
    transmitters,
)


@dataclass(frozen=True)
class PhaseMode:
    """How path phases evolve over a block."""
    kind: str                            # "non_ergodic" or "ergodic"
    theta: Optional[PhaseVector] = None  # fixed phases; None draws one vector per block

    @classmethod
    def non_ergodic(cls, theta: Optional[PhaseVector] = None) -> "PhaseMode":
        return cls("non_ergodic", theta)

    @classmethod
    def fixed(cls, theta: PhaseVector) -> "PhaseMode":
        return cls("non_ergodic", theta)

    @classmethod
    def ergodic(cls) -> "PhaseMode":
        return cls("ergodic")

    @property
    def is_ergodic(self) -> bool:
        return self.kind == "ergodic"


@dataclass(frozen=True)
class ChannelUse:
    inputs: Dict[str, np.ndarray]
    outputs: Dict[str, np.ndarray]
    phases_used: np.ndarray          # n x paths

    @property
    def n(self) -> int:
        return self.phases_used.shape[0]


def sample_phases(topology: Topology, mode: PhaseMode, n: int, seed: int,
                  stream: int = 0) -> np.ndarray:
    """An n x paths matrix of phases in [0, 2pi)."""
    if n < 1:
        raise ArgumentError(f"block length must be at least 1, got {n}", field="n")
    paths = path_count(topology)
    if mode.kind not in ("non_ergodic", "ergodic"):
        raise ValidationError(f"unknown phase mode '{mode.kind}'", field="phase_mode")
    if mode.is_ergodic:
        rng = stream_rng(seed, PHASE_STREAM, stream)
        return rng.uniform(0.0, TWO_PI, size=(n, paths))
    if mode.theta is not None:
        theta = check_phase_vector(mode.theta, topology).as_array()
    else:
        theta = stream_rng(seed, PHASE_STREAM, stream).uniform(0.0, TWO_PI, size=paths)
    return np.tile(theta, (n, 1))


def path_gains(spec: ChannelSpec, phases: np.ndarray) -> np.ndarray:
    """Complex path gains g * e^{j theta}, columns in gain-name order."""
    g = np.array([spec.g(name) for name in gain_names(spec.topology)])
    phases = np.asarray(phases, dtype=float)
    if phases.shape[-1] != g.size:
        raise ValidationError(f"expected {g.size} phases per symbol, got {phases.shape[-1]}",
                              field="theta")
    return g * np.exp(1j * phases)


def _check_inputs(spec: ChannelSpec, inputs: Mapping[str, np.ndarray]) -> Dict[str, np.ndarray]:
    expected = transmitters(spec.topology)
    missing = [name for name in expected if name not in inputs]
    extra = [name for name in inputs if name not in expected]
    if missing or extra:
        raise ValidationError(
            f"inputs for {spec.topology.value} must be {', '.join(expected)} "
            f"(missing: {missing or '-'}, unexpected: {extra or '-'})", field="inputs")
    arrays = {name: np.asarray(inputs[name], dtype=complex).ravel() for name in expected}
    lengths = {a.size for a in arrays.values()}
    if len(lengths) != 1 or 0 in lengths:
        raise ValidationError(f"inputs must share one nonzero length, got {sorted(lengths)}",
                              field="inputs")
    return arrays


def transmit(spec: ChannelSpec, inputs: Mapping[str, np.ndarray], mode: PhaseMode,
             noise_scale: float = 1.0, seed: int = 0, stream: int = 0,
             phases: Optional[np.ndarray] = None) -> ChannelUse:
    """One block over the channel.

    ``phases`` overrides `mode` with an explicit n x paths matrix.
    """
    require_valid(spec)
    if not (math.isfinite(noise_scale) and noise_scale >= 0):
        raise ArgumentError(f"noise_scale must be finite and nonnegative, got {noise_scale}",
                            field="noise_scale")
    x = _check_inputs(spec, inputs)
    n = next(iter(x.values())).size
    if phases is None:
        phases = sample_phases(spec.topology, mode, n, seed, stream)
    elif phases.shape != (n, path_count(spec.topology)):
        raise ValidationError(f"phase matrix must be {n}x{path_count(spec.topology)}", field="theta")
    h = path_gains(spec, phases)
    column = {name: k for k, name in enumerate(gain_names(spec.topology))}

    outputs = {}
    sigma = math.sqrt(noise_scale * spec.noise / 2.0)
    for index, receiver in enumerate(receivers(spec.topology)):
        y = np.zeros(n, dtype=complex)
        for gain, tx in ROUTES[spec.topology][receiver]:
            y += h[:, column[gain]] * x[tx]
        if noise_scale > 0:
            rng = stream_rng(seed, NOISE_STREAM, stream, index)
            y += sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        outputs[receiver] = y
    return ChannelUse(x, outputs, phases)
