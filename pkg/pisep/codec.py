"""
Desk-scale coding machinery for the separation schemes.

Slepian-Wolf random binning with exhaustive maximum-likelihood source
decoding, Gaussian codebooks, block-Markov transmission schedules and
exhaustive ML channel decoders. Every exhaustive search checks its budget up
front and raises BudgetError instead of truncating.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ArgumentError, BudgetError, ValidationError
from .model import (
    BINNING_STREAM,
    ChannelSpec,
    JointSourcePMF,
    PhaseVector,
    Topology,
    gain_names,
    stream_rng,
)

SOURCE_DECODE_BUDGET = 2 ** 26
CHANNEL_DECODE_BUDGET = 2 ** 22
MAX_SEQUENCE_SPACE = 2 ** 62


def message_bits(n: int, rate: float) -> int:
    """ceil(n * rate), forgiving float noise in the product."""
    if n < 1:
        raise ArgumentError(f"block length must be at least 1, got {n}", field="n")
    if not (math.isfinite(rate) and rate >= 0):
        raise ArgumentError(f"rate must be finite and nonnegative, got {rate}", field="rates")
    return max(int(math.ceil(n * rate - 1e-9)), 0)


# ============================================================================
# Slepian-Wolf binning
# ============================================================================

class BinningCode:
    """Random binning of length-n sequences over an alphabet into 2^ceil(n*rate) bins.

    When there are at least as many bins as sequences the identity map is used;
    otherwise a seeded multiply-shift hash of the sequence index.
    """

    def __init__(self, n: int, rate: float, alphabet_size: int, seed: int, stream: int = 0):
        self.n = n
        self.rate = float(rate)
        self.alphabet_size = int(alphabet_size)
        self.bits = message_bits(n, rate)
        if self.alphabet_size < 1:
            raise ValidationError("alphabet must not be empty", field="alphabet_size")
        self.space = self.alphabet_size ** n
        if self.space > MAX_SEQUENCE_SPACE:
            raise ValidationError(f"{self.alphabet_size}^{n} sequences cannot be indexed",
                                  field="n")
        self.injective = 2 ** self.bits >= self.space
        rng = stream_rng(seed, BINNING_STREAM, stream)
        self._multiplier = np.uint64(int(rng.integers(0, 2 ** 63)) * 2 + 1)
        self._offset = np.uint64(int(rng.integers(0, 2 ** 63)))
        self._weights = np.uint64(self.alphabet_size) ** np.arange(n - 1, -1, -1, dtype=np.uint64)

    @property
    def bins(self) -> int:
        return 2 ** self.bits

    def index_of(self, sequences: np.ndarray) -> np.ndarray:
        """Base-|A| value of each sequence, first symbol most significant."""
        seqs = np.atleast_2d(np.asarray(sequences, dtype=np.uint64))
        return seqs @ self._weights

    def sequences_of(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.uint64)
        base = np.uint64(self.alphabet_size)
        return ((indices[:, None] // self._weights[None, :]) % base).astype(np.int64)

    def bin_of_index(self, indices: np.ndarray) -> np.ndarray:
        indices = np.atleast_1d(np.asarray(indices, dtype=np.uint64))
        if self.injective:
            return indices.astype(np.int64)
        if self.bits == 0:
            return np.zeros(indices.size, dtype=np.int64)
        hashed = indices * self._multiplier + self._offset   # wraps mod 2^64
        return (hashed >> np.uint64(64 - self.bits)).astype(np.int64)

    @cached_property
    def _csr(self) -> Tuple[np.ndarray, np.ndarray]:
        bins = self.bin_of_index(np.arange(self.space, dtype=np.uint64))
        order = np.argsort(bins, kind="stable")
        offsets = np.searchsorted(bins[order], np.arange(self.bins + 1))
        return order, offsets

    def members(self, bin_index: int) -> np.ndarray:
        """Indices of every sequence in a bin, ascending."""
        if not 0 <= bin_index < self.bins:
            raise ValidationError(f"bin {bin_index} out of range [0, {self.bins})", field="bin")
        if self.injective:
            return np.array([bin_index], dtype=np.int64) if bin_index < self.space \
                else np.empty(0, dtype=np.int64)
        order, offsets = self._csr
        return order[offsets[bin_index]:offsets[bin_index + 1]]


def sw_encode(code: BinningCode, sequence: Sequence[int]) -> int:
    seq = np.asarray(sequence, dtype=np.int64).ravel()
    if seq.size != code.n:
        raise ValidationError(f"sequence length {seq.size} does not match block length {code.n}",
                              field="sequence")
    if seq.size and (seq.min() < 0 or seq.max() >= code.alphabet_size):
        raise ValidationError("sequence symbols outside the alphabet", field="sequence")
    return int(code.bin_of_index(code.index_of(seq))[0])


def sw_decode(bin_u: int, bin_v: int, pmf: JointSourcePMF, code_u: BinningCode,
              code_v: BinningCode, budget: int = SOURCE_DECODE_BUDGET,
              chunk_pairs: int = 1 << 22) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Most likely (u, v) consistent with both bins; ties go to the lexicographically first pair.

    Returns None when either bin holds no sequence, which a channel decoding
    error can produce whenever the code has more bins than it fills.
    """
    if (code_u.alphabet_size, code_v.alphabet_size) != pmf.probs.shape:
        raise ValidationError("code alphabets do not match the PMF", field="pmf")
    if code_u.n != code_v.n:
        raise ValidationError("source codes have different block lengths", field="n")
    for code in (code_u, code_v):
        if not code.injective and code.space > budget:
            raise BudgetError("source bin index", code.space, budget)
    cand_u = code_u.members(bin_u)
    cand_v = code_v.members(bin_v)
    pairs = int(cand_u.size) * int(cand_v.size)
    if pairs > budget:
        raise BudgetError("source decoding", pairs, budget)
    if pairs == 0:
        return None

    seq_u = code_u.sequences_of(cand_u)
    seq_v = code_v.sequences_of(cand_v)
    probs = pmf.probs
    # one indicator matrix per symbol; scores are count-weighted sums, so equal joint types tie exactly
    ind_v = [(seq_v == b).astype(float).T for b in range(probs.shape[1])]
    rows = max(1, chunk_pairs // max(cand_v.size, 1))
    best_score, best = -np.inf, (0, 0)
    for start in range(0, cand_u.size, rows):
        block = seq_u[start:start + rows]
        scores = np.zeros((block.shape[0], cand_v.size))
        impossible = np.zeros(scores.shape, dtype=bool)
        for a in range(probs.shape[0]):
            ind_u = (block == a).astype(float)
            for b in range(probs.shape[1]):
                counts = ind_u @ ind_v[b]
                if probs[a, b] > 0:
                    scores += math.log(probs[a, b]) * counts
                else:
                    impossible |= counts > 0
        scores[impossible] = -np.inf
        flat = int(np.argmax(scores))
        score = scores.flat[flat]
        if score > best_score or (best_score == -np.inf and start == 0):
            best_score = score
            best = (start + flat // cand_v.size, flat % cand_v.size)
    return seq_u[best[0]], seq_v[best[1]]


# ============================================================================
# Channel codebooks
# ============================================================================

@dataclass(frozen=True)
class GaussianCodebook:
    """`size` complex codewords of length n, each with average power exactly `power`."""
    n: int
    power: float
    codewords: np.ndarray

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @classmethod
    def generate(cls, n: int, size: int, power: float, rng: np.random.Generator) -> "GaussianCodebook":
        if n < 1 or size < 1:
            raise ArgumentError("codebooks need n >= 1 and at least one codeword", field="n")
        if not (math.isfinite(power) and power >= 0):
            raise ValidationError(f"codeword power must be nonnegative, got {power}", field="power")
        raw = rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))
        scale = np.sqrt(power / np.mean(np.abs(raw) ** 2, axis=1))
        return cls(n, float(power), raw * scale[:, None])

    def __getitem__(self, index: int) -> np.ndarray:
        return self.codewords[index]


# ============================================================================
# Block-Markov schedules
# ============================================================================

@dataclass(frozen=True)
class Slot:
    """Message W_{user,block}; blocks outside [1, B] are the known filler '1'."""
    user: int
    block: int
    filler: bool = False

    @property
    def key(self) -> Optional[Tuple[int, int]]:
        return None if self.filler else (self.user, self.block)

    def __str__(self) -> str:
        if self.filler:
            return "1"
        sep = "," if self.block > 9 else ""
        return f"W{self.user}{sep}{self.block}"


# encoder -> per layer (user, block offset); offset -1 is the previous block's message
SCHEDULE_TEMPLATES: Dict[Topology, Dict[str, Tuple[Tuple[int, int], ...]]] = {
    Topology.MARC: {
        "x1": ((1, -1), (1, 0)),
        "x2": ((2, -1), (2, 0)),
        "xr": ((1, -1), (2, -1)),
    },
    Topology.UNCC_MARC: {
        "x1": ((1, -1), (1, 0), (2, 0), (2, -1)),
        "x2": ((2, -1), (2, 0)),
        "xr": ((1, -1), (2, -1)),
    },
    Topology.UCC_MARC: {
        "x1": ((1, -1), (1, 0), (2, -1)),
        "x2": ((2, -1), (2, 0)),
        "xr": ((1, -1), (2, -1)),
    },
    Topology.IRC: {
        "x1": ((1, -1), (1, 0)),
        "x2": ((2, -1), (2, 0)),
        "xr": ((1, -1), (2, -1)),
    },
}


@dataclass(frozen=True)
class Schedule:
    topology: Topology
    blocks: int
    rows: Dict[str, Tuple[Tuple[Slot, ...], ...]]

    def layers(self, encoder: str) -> Tuple[Tuple[int, int], ...]:
        return SCHEDULE_TEMPLATES[self.topology][encoder]

    def at(self, encoder: str, t: int) -> Tuple[Slot, ...]:
        """Slots sent by an encoder in block t (1-based)."""
        return self.rows[encoder][t - 1]

    def as_rows(self) -> List[Dict[str, object]]:
        return [
            {"encoder": encoder, "block": t + 1, "slots": [str(s) for s in slots]}
            for encoder, blocks in self.rows.items()
            for t, slots in enumerate(blocks)
        ]


def build_schedule(topology: Topology, blocks: int) -> Schedule:
    """Block-Markov table over B + 1 blocks."""
    if topology not in SCHEDULE_TEMPLATES:
        supported = ", ".join(t.value for t in SCHEDULE_TEMPLATES)
        raise ArgumentError(f"no block-Markov schedule for {topology.value} (supported: {supported})",
                            field="topology")
    if blocks < 1:
        raise ArgumentError(f"number of blocks must be at least 1, got {blocks}", field="blocks")
    rows = {}
    for encoder, template in SCHEDULE_TEMPLATES[topology].items():
        rows[encoder] = tuple(
            tuple(Slot(user, t + offset, filler=not 1 <= t + offset <= blocks)
                  for user, offset in template)
            for t in range(1, blocks + 2)
        )
    return Schedule(topology, blocks, rows)


def format_schedule(schedule: Schedule) -> str:
    header = ["Block"] + [str(t) for t in range(1, schedule.blocks + 2)]
    table = [header]
    for encoder, blocks in schedule.rows.items():
        table.append([encoder] + [f"{encoder}({','.join(str(s) for s in slots)})" for slots in blocks])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                     for row in table) + "\n"


# ============================================================================
# Exhaustive ML channel decoding
# ============================================================================

def ml_decode_single(residual: np.ndarray, candidates: np.ndarray) -> int:
    """argmin_w ||residual - candidates[w]||^2, lowest index on ties."""
    distances = np.sum(np.abs(residual[None, :] - candidates) ** 2, axis=1)
    return int(np.argmin(distances))


def ml_decode_pair(residual: np.ndarray, first: np.ndarray, second: np.ndarray,
                   budget: int = CHANNEL_DECODE_BUDGET, chunk_pairs: int = 1 << 20) -> Tuple[int, int]:
    """argmin over (i, j) of ||residual - first[i] - second[j]||^2; ties go to the lowest (i, j)."""
    pairs = first.shape[0] * second.shape[0]
    if pairs > budget:
        raise BudgetError("channel decoding", pairs, budget)
    # ||r - a - b||^2 minus the constant ||r||^2
    norm_a = np.sum(np.abs(first) ** 2, axis=1) - 2.0 * (first @ residual.conj()).real
    norm_b = np.sum(np.abs(second) ** 2, axis=1) - 2.0 * (second @ residual.conj()).real
    rows = max(1, chunk_pairs // second.shape[0])
    best_value, best = np.inf, (0, 0)
    for start in range(0, first.shape[0], rows):
        block = first[start:start + rows]
        metric = (norm_a[start:start + rows, None] + norm_b[None, :]
                  + 2.0 * (block @ second.conj().T).real)
        flat = int(np.argmin(metric))
        value = metric.flat[flat]
        if value < best_value:
            best_value = value
            best = (start + flat // second.shape[0], flat % second.shape[0])
    return best


def ml_decode_mac(y: np.ndarray, codebooks: Tuple[GaussianCodebook, GaussianCodebook],
                  theta, spec: ChannelSpec,
                  budget: int = CHANNEL_DECODE_BUDGET) -> Tuple[int, int]:
    """Joint ML message pair at a two-user MAC receiver that knows the phases.

    `theta` is a PhaseVector (one phase per path) or an n x paths matrix.
    """
    names = gain_names(spec.topology)
    if names[:2] != ("g1", "g2"):
        raise ArgumentError(f"{spec.topology.value} is not a two-user MAC", field="topology")
    phases = theta.as_array() if isinstance(theta, PhaseVector) else np.asarray(theta, dtype=float)
    if phases.shape[-1] != len(names):
        raise ValidationError(f"expected {len(names)} phases, got {phases.shape[-1]}", field="theta")
    h1 = spec.g("g1") * np.exp(1j * phases[..., 0])
    h2 = spec.g("g2") * np.exp(1j * phases[..., 1])
    c1, c2 = codebooks
    return ml_decode_pair(np.asarray(y, dtype=complex), h1 * c1.codewords, h2 * c2.codewords, budget)
