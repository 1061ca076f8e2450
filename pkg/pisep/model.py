"""
Source and channel data model.

Joint source PMFs and their entropies, the eight channel topologies with
their wiring, validated channel parameter sets, and phase vectors.
All entropies are in bits.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError

PMF_SUM_TOLERANCE = 1e-12
ZERO_MASS = 1e-15
IDENTITY_TOLERANCE = 1e-9
TWO_PI = 2.0 * math.pi


class Topology(Enum):
    MAC = "mac"
    MARC = "marc"
    UNCC_MARC = "uncc_marc"
    UCC_MARC = "ucc_marc"
    UNCC_MAC = "uncc_mac"
    UCC_MAC = "ucc_mac"
    IC = "ic"
    IRC = "irc"

    @classmethod
    def parse(cls, name: str) -> "Topology":
        key = str(name).strip().lower().replace("-", "_")
        for topology in cls:
            if topology.value == key:
                return topology
        raise ValidationError(f"unknown topology '{name}'", field="topology")


# Receiver -> ordered (gain name, transmitter) paths. The gain names of a
# topology are exactly its path names; their order is the phase-vector order.
_MAC_ROUTES = {"y": (("g1", "x1"), ("g2", "x2"))}
_MARC_ROUTES = {
    "y": (("g1", "x1"), ("g2", "x2"), ("gr", "xr")),
    "yr": (("g1r", "x1"), ("g2r", "x2")),
}

ROUTES: Dict[Topology, Dict[str, Tuple[Tuple[str, str], ...]]] = {
    Topology.MAC: dict(_MAC_ROUTES),
    Topology.UNCC_MAC: dict(_MAC_ROUTES),
    Topology.UCC_MAC: {**_MAC_ROUTES, "y1": (("g21", "x2"),)},
    Topology.MARC: dict(_MARC_ROUTES),
    Topology.UNCC_MARC: dict(_MARC_ROUTES),
    Topology.UCC_MARC: {**_MARC_ROUTES, "y1": (("g21", "x2"),)},
    Topology.IC: {
        "y1": (("g11", "x1"), ("g21", "x2")),
        "y2": (("g12", "x1"), ("g22", "x2")),
    },
    Topology.IRC: {
        "y1": (("g11", "x1"), ("g21", "x2"), ("gr1", "xr")),
        "y2": (("g12", "x1"), ("g22", "x2"), ("gr2", "xr")),
        "yr": (("g1r", "x1"), ("g2r", "x2")),
    },
}

RELAY_TOPOLOGIES = frozenset({Topology.MARC, Topology.UNCC_MARC, Topology.UCC_MARC, Topology.IRC})
COOPERATIVE_TOPOLOGIES = frozenset({Topology.UCC_MAC, Topology.UCC_MARC})
NONCAUSAL_TOPOLOGIES = frozenset({Topology.UNCC_MAC, Topology.UNCC_MARC})

# MARC-family topology -> the MAC-family topology it reduces to when Pr = 0
RELAY_REDUCTIONS = {
    Topology.MARC: Topology.MAC,
    Topology.UNCC_MARC: Topology.UNCC_MAC,
    Topology.UCC_MARC: Topology.UCC_MAC,
}


def gain_names(topology: Topology) -> Tuple[str, ...]:
    """Gain (= path) names of a topology in phase-vector order."""
    names: List[str] = []
    for paths in ROUTES[topology].values():
        for gain, _ in paths:
            if gain not in names:
                names.append(gain)
    return tuple(names)


def path_count(topology: Topology) -> int:
    return len(gain_names(topology))


def transmitters(topology: Topology) -> Tuple[str, ...]:
    return ("x1", "x2", "xr") if topology in RELAY_TOPOLOGIES else ("x1", "x2")


def receivers(topology: Topology) -> Tuple[str, ...]:
    return tuple(ROUTES[topology])


# ============================================================================
# Sources
# ============================================================================

@dataclass(frozen=True)
class JointSourcePMF:
    """Joint distribution p(u, v) of a memoryless correlated source pair."""
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 2 or probs.size == 0:
            raise ValidationError("probs must be a non-empty |U|x|V| matrix", field="probs")
        violations = []
        if not np.all(np.isfinite(probs)):
            violations.append("every entry must be finite")
        elif np.any(probs < 0):
            violations.append("every entry must be nonnegative")
        if not violations and abs(probs.sum() - 1.0) > PMF_SUM_TOLERANCE:
            violations.append(f"entries must sum to 1 (sum is {probs.sum():.15g})")
        if violations:
            raise ValidationError("invalid joint PMF: " + "; ".join(violations),
                                  field="probs", violations=violations)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def alphabet_u(self) -> int:
        return self.probs.shape[0]

    @property
    def alphabet_v(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def from_literal(cls, rows: Sequence[Sequence[float]]) -> "JointSourcePMF":
        return cls(np.asarray(rows, dtype=float))

    def swapped(self) -> "JointSourcePMF":
        """The PMF of (V, U)."""
        return JointSourcePMF(self.probs.T.copy())

    def sample(self, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Draw an i.i.d. block of n source pairs."""
        flat = rng.choice(self.probs.size, size=n, p=self.probs.ravel())
        u, v = np.divmod(flat, self.alphabet_v)
        return u.astype(np.int64), v.astype(np.int64)

    def to_literal(self) -> List[List[float]]:
        return self.probs.tolist()


@dataclass(frozen=True)
class EntropyTriple:
    """Entropies of a source pair, in bits."""
    h_u_given_v: float
    h_v_given_u: float
    h_uv: float
    h_u: float
    h_v: float

    def consistency_errors(self, tol: float = IDENTITY_TOLERANCE) -> List[str]:
        errors = []
        if not (-tol <= self.h_u_given_v <= self.h_u + tol <= self.h_uv + 2 * tol):
            errors.append("0 <= H(U|V) <= H(U) <= H(U,V)")
        if not (-tol <= self.h_v_given_u <= self.h_v + tol <= self.h_uv + 2 * tol):
            errors.append("0 <= H(V|U) <= H(V) <= H(U,V)")
        if abs(self.h_uv - (self.h_u_given_v + self.h_v)) > tol:
            errors.append("H(U,V) = H(U|V) + H(V)")
        if abs(self.h_uv - (self.h_v_given_u + self.h_u)) > tol:
            errors.append("H(U,V) = H(V|U) + H(U)")
        if self.h_uv > self.h_u + self.h_v + tol:
            errors.append("H(U,V) <= H(U) + H(V)")
        return errors

    def as_dict(self) -> Dict[str, float]:
        return {
            "h_u_given_v": self.h_u_given_v,
            "h_v_given_u": self.h_v_given_u,
            "h_uv": self.h_uv,
            "h_u": self.h_u,
            "h_v": self.h_v,
        }


def _entropy_bits(masses: np.ndarray) -> float:
    masses = np.asarray(masses, dtype=float).ravel()
    # sorted so the sum does not depend on the alphabet order
    masses = np.sort(masses[masses > ZERO_MASS])
    return float(-np.sum(masses * np.log2(masses))) if masses.size else 0.0


def marginals(pmf: JointSourcePMF) -> Tuple[np.ndarray, np.ndarray]:
    return pmf.probs.sum(axis=1), pmf.probs.sum(axis=0)


def entropy_triple(pmf: JointSourcePMF) -> EntropyTriple:
    """H(U|V), H(V|U), H(U,V), H(U), H(V) of a joint PMF."""
    if not isinstance(pmf, JointSourcePMF):
        pmf = JointSourcePMF(np.asarray(pmf, dtype=float))
    p_u, p_v = marginals(pmf)
    h_uv = _entropy_bits(pmf.probs)
    h_u = _entropy_bits(p_u)
    h_v = _entropy_bits(p_v)
    # Conditional entropies by the chain rule, clamped against rounding below zero.
    return EntropyTriple(
        h_u_given_v=max(h_uv - h_v, 0.0),
        h_v_given_u=max(h_uv - h_u, 0.0),
        h_uv=h_uv,
        h_u=h_u,
        h_v=h_v,
    )


def make_dsbs(crossover: float) -> JointSourcePMF:
    """Doubly symmetric binary source with P[U != V] = crossover."""
    p = float(crossover)
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValidationError(f"crossover must lie in [0, 1], got {crossover}", field="crossover")
    return JointSourcePMF(np.array([[(1.0 - p) / 2.0, p / 2.0],
                                    [p / 2.0, (1.0 - p) / 2.0]]))


def binary_entropy(p: float) -> float:
    return _entropy_bits(np.array([p, 1.0 - p]))


# ============================================================================
# Channels
# ============================================================================

@dataclass(frozen=True)
class ChannelSpec:
    """Gains, powers and noise of one channel topology."""
    topology: Topology
    gains: Mapping[str, float] = field(default_factory=dict)
    p1: float = 1.0
    p2: float = 1.0
    pr: float = 0.0
    noise: float = 1.0

    def g(self, name: str) -> float:
        return float(self.gains[name])

    @property
    def has_relay(self) -> bool:
        return self.topology in RELAY_TOPOLOGIES

    @property
    def powers(self) -> Dict[str, float]:
        powers = {"x1": float(self.p1), "x2": float(self.p2)}
        if self.has_relay:
            powers["xr"] = float(self.pr)
        return powers

    def replace(self, **changes) -> "ChannelSpec":
        return replace(self, **changes)

    def with_gains(self, **gains: float) -> "ChannelSpec":
        return replace(self, gains={**self.gains, **gains})

    def as_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {"topology": self.topology.value}
        data.update({name: float(value) for name, value in self.gains.items()})
        data.update({"p1": float(self.p1), "p2": float(self.p2)})
        if self.has_relay:
            data["pr"] = float(self.pr)
        data["noise"] = float(self.noise)
        return data


def validate_channel(spec: ChannelSpec) -> List[str]:
    """Every violated invariant of a channel spec; empty iff the spec is usable."""
    violations: List[str] = []
    if not isinstance(spec.topology, Topology):
        return [f"unknown topology '{spec.topology}'"]

    expected = gain_names(spec.topology)
    for name in expected:
        if name not in spec.gains:
            violations.append(f"missing gain for topology: {name}")
    for name in spec.gains:
        if name not in expected:
            violations.append(f"unexpected gain for topology: {name}")

    for name, value in spec.gains.items():
        if name not in expected:
            continue
        if not _is_finite(value):
            violations.append(f"gain {name} must be finite")
        elif value < 0:
            violations.append(f"gain {name} must be nonnegative")

    for label, value in (("P1", spec.p1), ("P2", spec.p2), ("Pr", spec.pr)):
        if not _is_finite(value):
            violations.append(f"power {label} must be finite")
        elif value < 0:
            violations.append(f"power {label} must be nonnegative")
    if not spec.has_relay and _is_finite(spec.pr) and spec.pr != 0:
        violations.append("relay power given for topology without relay")

    if not _is_finite(spec.noise):
        violations.append("noise power must be finite")
    elif spec.noise <= 0:
        violations.append("noise power must be positive")
    return violations


def require_valid(spec: ChannelSpec) -> ChannelSpec:
    violations = validate_channel(spec)
    if violations:
        raise ValidationError("invalid channel: " + "; ".join(violations),
                              field="channel", violations=violations)
    return spec


def _is_finite(value) -> bool:
    try:
        return math.isfinite(float(value))
    except (TypeError, ValueError):
        return False


# ============================================================================
# Phases
# ============================================================================

@dataclass(frozen=True)
class PhaseVector:
    """One phase per channel path, each in [0, 2pi)."""
    phases: Tuple[float, ...]

    def __post_init__(self):
        phases = tuple(float(x) for x in np.ravel(self.phases))
        bad = [x for x in phases if not (0.0 <= x < TWO_PI)]
        if bad:
            raise ValidationError(f"phases must lie in [0, 2pi), got {bad[0]!r}", field="theta")
        object.__setattr__(self, "phases", phases)

    @classmethod
    def wrap(cls, values: Sequence[float]) -> "PhaseVector":
        wrapped = np.mod(np.asarray(values, dtype=float).ravel(), TWO_PI)
        # mod can round up to exactly 2pi for tiny negative inputs
        wrapped[wrapped >= TWO_PI] = 0.0
        return cls(tuple(wrapped))

    @classmethod
    def zeros(cls, length: int) -> "PhaseVector":
        return cls((0.0,) * length)

    def __len__(self) -> int:
        return len(self.phases)

    def as_array(self) -> np.ndarray:
        return np.array(self.phases, dtype=float)


def check_phase_vector(theta: PhaseVector, topology: Topology) -> PhaseVector:
    if len(theta) != path_count(topology):
        raise ValidationError(
            f"phase vector has {len(theta)} entries, topology {topology.value} "
            f"has {path_count(topology)} paths", field="theta")
    return theta


def channel_from_mapping(data: Mapping[str, object], topology: Optional[Topology] = None) -> ChannelSpec:
    """Build a ChannelSpec from a flat mapping (CLI flags or config file)."""
    topology = topology or Topology.parse(str(data.get("topology", "")))
    gains = {}
    for name in gain_names(topology):
        if data.get(name) is not None:
            gains[name] = float(data[name])
    return ChannelSpec(
        topology=topology,
        gains=gains,
        p1=float(data.get("p1", 1.0)),
        p2=float(data.get("p2", 1.0)),
        pr=float(data.get("pr") or 0.0),
        noise=float(data.get("noise", 1.0)),
    )


# ============================================================================
# Random streams
# ============================================================================

# Stream families; together with the seed and a task index they pick a PCG64 stream.
PHASE_STREAM = 1
NOISE_STREAM = 2
CORRELATION_STREAM = 3
ERGODIC_STREAM = 4
DISCRETE_MI_STREAM = 5
SOURCE_STREAM = 6
CODEBOOK_STREAM = 7
BINNING_STREAM = 8


def stream_rng(seed: int, family: int, *index: int) -> np.random.Generator:
    """An independent, reproducible generator for (seed, family, index...)."""
    return np.random.default_rng([int(seed), int(family), *(int(i) for i in index)])
