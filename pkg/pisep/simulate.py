"""
End-to-end error-rate estimation for separate source-channel coding.

One random code (bins and codebooks) is drawn per run from the seed; every
trial then draws its own source blocks, phases and noise from streams indexed
by the trial number, so outcomes do not depend on how trials are scheduled.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .channel import PhaseMode, sample_phases, transmit
from .codec import (
    CHANNEL_DECODE_BUDGET,
    SOURCE_DECODE_BUDGET,
    BinningCode,
    GaussianCodebook,
    Schedule,
    build_schedule,
    message_bits,
    ml_decode_mac,
    ml_decode_pair,
    ml_decode_single,
    sw_decode,
    sw_encode,
)
from .console import log
from .errors import ArgumentError, BudgetError
from .model import (
    CODEBOOK_STREAM,
    SOURCE_STREAM,
    TWO_PI,
    ChannelSpec,
    JointSourcePMF,
    PhaseVector,
    Topology,
    gain_names,
    path_count,
    require_valid,
    stream_rng,
)

PHASE_MODES = ("random", "fixed", "ergodic", "worst_case")
DF_TOPOLOGIES = (Topology.MARC, Topology.UNCC_MARC, Topology.UCC_MARC)
DEFAULT_SUP_GRID = 64


@dataclass
class SimOutcome:
    trials: int
    errors: int
    stages: Dict[str, int]
    config: Dict[str, object]
    sup_error_estimate: float
    per_phase_error_rates: List[Tuple[float, float]] = field(default_factory=list)
    rate_loss: float = 1.0
    message_bits: Tuple[int, int] = (0, 0)

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials if self.trials else 0.0

    def stage_rate(self, stage: str) -> float:
        return self.stages.get(stage, 0) / self.trials if self.trials else 0.0

    def as_dict(self) -> Dict[str, object]:
        return {
            "trials": self.trials,
            "errors": self.errors,
            "error_rate": self.error_rate,
            "stages": dict(self.stages),
            "sup_error_estimate": self.sup_error_estimate,
            "per_phase_error_rates": [list(p) for p in self.per_phase_error_rates],
            "rate_loss": self.rate_loss,
            "message_bits": list(self.message_bits),
            "config": dict(self.config),
        }

    def rows(self) -> List[Dict[str, object]]:
        """One CSV row for the total and one per decoding stage."""
        common = {
            "n": self.config.get("n"),
            "B": self.config.get("B"),
            "rate1": self.config.get("rate1"),
            "rate2": self.config.get("rate2"),
            "seed": self.config.get("seed"),
            "theta_mode": self.config.get("theta_mode"),
        }
        rows = [{"trial_count": self.trials, "errors": self.errors,
                 "error_rate": self.error_rate, "stage": "total", **common}]
        for stage, count in self.stages.items():
            rows.append({"trial_count": self.trials, "errors": count,
                         "error_rate": self.stage_rate(stage), "stage": stage, **common})
        return rows


@dataclass(frozen=True)
class TrialResult:
    error: bool
    stages: Dict[str, bool]


def error_rate_decreased(before: SimOutcome, after: SimOutcome, confidence: float = 0.95) -> bool:
    """One-sided test that `after` has a lower error rate than `before`.

    Conditioned on the total error count, the errors of `after` are binomial with
    its share of the trials under equal rates.
    """
    total = before.errors + after.errors
    if total == 0:
        return False
    share = after.trials / (before.trials + after.trials)
    result = stats.binomtest(after.errors, total, share, alternative="less")
    return result.pvalue < 1.0 - confidence


# ============================================================================
# Shared plumbing
# ============================================================================

def _check_common(pmf: JointSourcePMF, rates: Sequence[float], n: int, trials: int,
                  phase_mode: str, theta: Optional[PhaseVector]) -> Tuple[float, float]:
    if len(rates) != 2:
        raise ArgumentError(f"two rates are required, got {len(rates)}", field="rates")
    if n < 1:
        raise ArgumentError(f"block length must be at least 1, got {n}", field="n")
    if trials < 1:
        raise ArgumentError(f"trials must be at least 1, got {trials}", field="trials")
    if phase_mode not in PHASE_MODES:
        raise ArgumentError(f"unknown phase mode '{phase_mode}' (choose from {', '.join(PHASE_MODES)})",
                            field="phase_mode")
    if phase_mode == "fixed" and theta is None:
        raise ArgumentError("phase mode 'fixed' needs theta", field="theta")
    return float(rates[0]), float(rates[1])


def _source_codes(pmf: JointSourcePMF, n: int, rates: Tuple[float, float],
                  seed: int) -> Tuple[BinningCode, BinningCode]:
    code_u = BinningCode(n, rates[0], pmf.alphabet_u, seed, stream=1)
    code_v = BinningCode(n, rates[1], pmf.alphabet_v, seed, stream=2)
    for code in (code_u, code_v):
        if not code.injective and code.space > SOURCE_DECODE_BUDGET:
            raise BudgetError("source bin index", code.space, SOURCE_DECODE_BUDGET)
        code.members(0)   # build the bin index before trials share the code
    return code_u, code_v


def _phase_grid(topology: Topology, sup_grid: int) -> List[PhaseVector]:
    """Gauge-fixed sweep of the destination phase difference theta_1 - theta_2."""
    if sup_grid < 1:
        raise ArgumentError(f"sup_grid must be at least 1, got {sup_grid}", field="sup_grid")
    names = gain_names(topology)
    grid = []
    for k in range(sup_grid):
        phases = [0.0] * len(names)
        phases[names.index("g2")] = TWO_PI * k / sup_grid
        grid.append(PhaseVector(tuple(phases)))
    return grid


def _recovered(decoded: Optional[Tuple[np.ndarray, np.ndarray]], u: np.ndarray,
               v: np.ndarray) -> bool:
    # None is an empty bin: nothing to decode to
    return decoded is not None and np.array_equal(decoded[0], u) and np.array_equal(decoded[1], v)


def _run_trials(run_one: Callable[[int], TrialResult], trials: int, workers: int) -> List[TrialResult]:
    if workers > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_one, range(trials)))
    return [run_one(t) for t in range(trials)]


def _aggregate(results: List[TrialResult], stage_names: Sequence[str]) -> Tuple[int, Dict[str, int]]:
    errors = sum(1 for r in results if r.error)
    stages = {name: sum(1 for r in results if r.stages.get(name)) for name in stage_names}
    return errors, stages


def _sweep(run_with: Callable[[Optional[PhaseVector]], Tuple[int, Dict[str, int]]],
           topology: Topology, phase_mode: str, theta: Optional[PhaseVector], trials: int,
           sup_grid: int):
    """Run every trial once, or once per grid phase in worst-case mode (keeping the worst)."""
    if phase_mode != "worst_case":
        errors, stages = run_with(theta if phase_mode == "fixed" else None)
        return errors, stages, errors / trials, []
    per_phase = []
    worst = None
    for phases in _phase_grid(topology, sup_grid):
        errors, stages = run_with(phases)
        per_phase.append((phases.phases[gain_names(topology).index("g2")], errors / trials))
        if worst is None or errors > worst[0]:
            worst = (errors, stages)
    return worst[0], worst[1], max(rate for _, rate in per_phase), per_phase


def _trial_phases(topology: Topology, phase_mode: str, fixed: Optional[PhaseVector], n: int,
                  seed: int, stream: int) -> Optional[np.ndarray]:
    if phase_mode == "ergodic":
        return None
    if fixed is not None:
        return sample_phases(topology, PhaseMode.fixed(fixed), n, seed, stream)
    return sample_phases(topology, PhaseMode.non_ergodic(), n, seed, stream)


# ============================================================================
# Two-user MAC
# ============================================================================

def simulate_mac_e2e(pmf: JointSourcePMF, spec: ChannelSpec, rates: Sequence[float], n: int,
                     trials: int, phase_mode: str = "random", seed: int = 1,
                     theta: Optional[PhaseVector] = None, noise_scale: float = 1.0,
                     sup_grid: int = DEFAULT_SUP_GRID, workers: int = 1) -> SimOutcome:
    """Slepian-Wolf binning followed by independent Gaussian channel codes over the MAC."""
    require_valid(spec)
    if spec.topology is not Topology.MAC:
        raise ArgumentError(f"end-to-end MAC simulation needs topology mac, got {spec.topology.value}",
                            field="topology")
    r1, r2 = _check_common(pmf, rates, n, trials, phase_mode, theta)
    k1, k2 = message_bits(n, r1), message_bits(n, r2)
    if 2 ** (k1 + k2) > CHANNEL_DECODE_BUDGET:
        raise BudgetError("channel decoding", 2 ** (k1 + k2), CHANNEL_DECODE_BUDGET)
    code_u, code_v = _source_codes(pmf, n, (r1, r2), seed)
    book1 = GaussianCodebook.generate(n, 2 ** k1, spec.p1, stream_rng(seed, CODEBOOK_STREAM, 0, 1))
    book2 = GaussianCodebook.generate(n, 2 ** k2, spec.p2, stream_rng(seed, CODEBOOK_STREAM, 0, 2))
    mode = PhaseMode.ergodic() if phase_mode == "ergodic" else PhaseMode.non_ergodic()

    def run_with(fixed: Optional[PhaseVector]):
        def run_one(trial: int) -> TrialResult:
            u, v = pmf.sample(n, stream_rng(seed, SOURCE_STREAM, trial))
            w1, w2 = sw_encode(code_u, u), sw_encode(code_v, v)
            phases = _trial_phases(spec.topology, phase_mode, fixed, n, seed, trial)
            use = transmit(spec, {"x1": book1[w1], "x2": book2[w2]}, mode, noise_scale, seed,
                           stream=trial, phases=phases)
            w1_hat, w2_hat = ml_decode_mac(use.outputs["y"], (book1, book2), use.phases_used, spec)
            channel_error = (w1_hat, w2_hat) != (w1, w2)
            decoded = sw_decode(w1_hat, w2_hat, pmf, code_u, code_v)
            error = not _recovered(decoded, u, v)
            if decoded is None:
                source_error = True
            elif channel_error:
                source_error = not _recovered(sw_decode(w1, w2, pmf, code_u, code_v), u, v)
            else:
                source_error = error
            return TrialResult(error, {"channel": channel_error, "source": source_error})

        return _aggregate(_run_trials(run_one, trials, workers), ("channel", "source"))

    errors, stages, sup_error, per_phase = _sweep(run_with, spec.topology, phase_mode, theta,
                                                  trials, sup_grid)
    config = _config_echo(spec, pmf, (r1, r2), n, 1, trials, seed, phase_mode, noise_scale, theta)
    outcome = SimOutcome(trials, errors, stages, config, sup_error, per_phase, 1.0, (k1, k2))
    log(f"mac n={n}: {errors}/{trials} errors, channel {stages['channel']}, source {stages['source']}",
        "STAGE")
    return outcome


# ============================================================================
# Decode-and-forward MARC family
# ============================================================================

class _BlockMarkovLink:
    """Superposition codebooks for one schedule and the effective signals they induce."""

    def __init__(self, schedule: Schedule, spec: ChannelSpec, n: int, bits: Tuple[int, int],
                 seed: int, power_split: Optional[Dict[str, Sequence[float]]] = None):
        self.schedule = schedule
        self.n = n
        self.books: Dict[Tuple[str, int], np.ndarray] = {}
        for e, encoder in enumerate(("x1", "x2", "xr")):
            layers = schedule.layers(encoder)
            split = list((power_split or {}).get(encoder, [1.0 / len(layers)] * len(layers)))
            if len(split) != len(layers) or any(s < 0 for s in split) or sum(split) > 1.0 + 1e-12:
                raise ArgumentError(f"power split for {encoder} needs {len(layers)} nonnegative "
                                    "fractions summing to at most 1", field="power_split")
            for layer, (user, _) in enumerate(layers):
                rng = stream_rng(seed, CODEBOOK_STREAM, e, layer)
                book = GaussianCodebook.generate(n, 2 ** bits[user - 1],
                                                 spec.powers[encoder] * split[layer], rng)
                self.books[(encoder, layer)] = book.codewords

    def codeword(self, encoder: str, t: int, beliefs: Dict[Tuple[int, int], int]) -> np.ndarray:
        """What an encoder sends in block t given its own view of the messages."""
        x = np.zeros(self.n, dtype=complex)
        for layer, slot in enumerate(self.schedule.at(encoder, t)):
            x += self.books[(encoder, layer)][0 if slot.filler else beliefs[slot.key]]
        return x

    def effective(self, t: int, paths: Dict[str, np.ndarray], beliefs: Dict[Tuple[int, int], int],
                  unknown: Sequence[Tuple[int, int]]):
        """Known part of the received signal plus one candidate matrix per unknown message."""
        known = np.zeros(self.n, dtype=complex)
        candidates = [None] * len(unknown)
        for encoder, h in paths.items():
            for layer, slot in enumerate(self.schedule.at(encoder, t)):
                book = self.books[(encoder, layer)]
                if slot.key in unknown:
                    i = list(unknown).index(slot.key)
                    term = h * book
                    candidates[i] = term if candidates[i] is None else candidates[i] + term
                else:
                    known = known + h * book[0 if slot.filler else beliefs[slot.key]]
        return known, candidates


def _decode_unknown(residual: np.ndarray, candidates: List[Optional[np.ndarray]],
                    sizes: Sequence[int]) -> Tuple[int, ...]:
    # a message absent from every path at this receiver cannot be told apart: lowest index
    filled = [c if c is not None else np.zeros((size, residual.size), dtype=complex)
              for c, size in zip(candidates, sizes)]
    if len(filled) == 1:
        return (ml_decode_single(residual, filled[0]),)
    return ml_decode_pair(residual, filled[0], filled[1])


def simulate_marc_df(pmf: JointSourcePMF, spec: ChannelSpec, rates: Sequence[float], n: int,
                     blocks: int, trials: int, phase_mode: str = "random", seed: int = 1,
                     theta: Optional[PhaseVector] = None, noise_scale: float = 1.0,
                     power_split: Optional[Dict[str, Sequence[float]]] = None,
                     sup_grid: int = DEFAULT_SUP_GRID, workers: int = 1) -> SimOutcome:
    """Decode-and-forward over B + 1 blocks: forward decoding at the relay, backward at the destination."""
    require_valid(spec)
    topology = spec.topology
    if topology not in DF_TOPOLOGIES:
        raise ArgumentError(f"decode-and-forward simulation needs one of "
                            f"{', '.join(t.value for t in DF_TOPOLOGIES)}, got {topology.value}",
                            field="topology")
    r1, r2 = _check_common(pmf, rates, n, trials, phase_mode, theta)
    schedule = build_schedule(topology, blocks)
    bits = (message_bits(n, r1), message_bits(n, r2))
    sizes = (2 ** bits[0], 2 ** bits[1])
    if sizes[0] * sizes[1] > CHANNEL_DECODE_BUDGET:
        raise BudgetError("channel decoding", sizes[0] * sizes[1], CHANNEL_DECODE_BUDGET)
    code_u, code_v = _source_codes(pmf, n, (r1, r2), seed)
    link = _BlockMarkovLink(schedule, spec, n, bits, seed, power_split)
    names = gain_names(topology)
    cooperative = topology is Topology.UCC_MARC
    noncausal = topology is Topology.UNCC_MARC
    mode = PhaseMode.ergodic() if phase_mode == "ergodic" else PhaseMode.non_ergodic()
    stage_names = ("relay", "cooperative", "destination", "source") if cooperative \
        else ("relay", "destination", "source")

    def run_with(fixed: Optional[PhaseVector]):
        def run_one(trial: int) -> TrialResult:
            rng = stream_rng(seed, SOURCE_STREAM, trial)
            truth: Dict[Tuple[int, int], int] = {}
            sources = []
            for b in range(1, blocks + 1):
                u, v = pmf.sample(n, rng)
                sources.append((u, v))
                truth[(1, b)], truth[(2, b)] = sw_encode(code_u, u), sw_encode(code_v, v)

            trial_phases = _trial_phases(topology, phase_mode, fixed, n, seed, trial)
            relay_view: Dict[Tuple[int, int], int] = {}
            enc1_view = {k: w for k, w in truth.items() if k[0] == 1 or noncausal}
            received = {}
            for t in range(1, blocks + 2):
                stream = trial * (blocks + 1) + (t - 1)
                x = {
                    "x1": link.codeword("x1", t, enc1_view),
                    "x2": link.codeword("x2", t, truth),
                    "xr": link.codeword("xr", t, relay_view),
                }
                use = transmit(spec, x, mode, noise_scale, seed, stream=stream, phases=trial_phases)
                h = {name: spec.g(name) * np.exp(1j * use.phases_used[:, k])
                     for k, name in enumerate(names)}
                received[t] = (use.outputs["y"], h)
                if t > blocks:
                    continue
                new = ((1, t), (2, t))
                known, cands = link.effective(t, {"x1": h["g1r"], "x2": h["g2r"]}, relay_view, new)
                relay_view[(1, t)], relay_view[(2, t)] = _decode_unknown(
                    use.outputs["yr"] - known, cands, sizes)
                if cooperative:
                    known, cands = link.effective(t, {"x2": h["g21"]}, enc1_view, ((2, t),))
                    enc1_view[(2, t)] = _decode_unknown(use.outputs["y1"] - known, cands,
                                                        sizes[1:])[0]

            destination: Dict[Tuple[int, int], int] = {}
            for t in range(blocks + 1, 1, -1):
                y, h = received[t]
                old = ((1, t - 1), (2, t - 1))
                known, cands = link.effective(t, {"x1": h["g1"], "x2": h["g2"], "xr": h["gr"]},
                                              destination, old)
                destination[old[0]], destination[old[1]] = _decode_unknown(y - known, cands, sizes)

            relay_error = any(relay_view[k] != w for k, w in truth.items())
            coop_error = cooperative and any(enc1_view[(2, b)] != truth[(2, b)]
                                             for b in range(1, blocks + 1))
            dest_error = any(destination[k] != w for k, w in truth.items())
            error = source_error = False
            for b, (u, v) in enumerate(sources, start=1):
                decoded = sw_decode(destination[(1, b)], destination[(2, b)], pmf, code_u, code_v)
                wrong = not _recovered(decoded, u, v)
                error = error or wrong
                if decoded is not None and dest_error:
                    wrong = not _recovered(sw_decode(truth[(1, b)], truth[(2, b)], pmf, code_u, code_v),
                                           u, v)
                source_error = source_error or wrong
            stage_flags = {"relay": relay_error, "destination": dest_error, "source": source_error}
            if cooperative:
                stage_flags["cooperative"] = coop_error
            return TrialResult(error, stage_flags)

        return _aggregate(_run_trials(run_one, trials, workers), stage_names)

    errors, stages, sup_error, per_phase = _sweep(run_with, topology, phase_mode, theta, trials,
                                                  sup_grid)
    config = _config_echo(spec, pmf, (r1, r2), n, blocks, trials, seed, phase_mode, noise_scale, theta)
    outcome = SimOutcome(trials, errors, stages, config, sup_error, per_phase,
                         blocks / (blocks + 1), bits)
    log(f"{topology.value} n={n} B={blocks}: {errors}/{trials} errors, "
        + ", ".join(f"{k} {v}" for k, v in stages.items()), "STAGE")
    return outcome


def _config_echo(spec: ChannelSpec, pmf: JointSourcePMF, rates: Tuple[float, float], n: int,
                 blocks: int, trials: int, seed: int, phase_mode: str, noise_scale: float,
                 theta: Optional[PhaseVector]) -> Dict[str, object]:
    return {
        "topology": spec.topology.value,
        "channel": spec.as_dict(),
        "source": pmf.to_literal(),
        "rate1": rates[0],
        "rate2": rates[1],
        "n": n,
        "B": blocks,
        "trials": trials,
        "seed": seed,
        "theta_mode": phase_mode,
        "theta": list(theta.phases) if theta is not None else None,
        "noise_scale": noise_scale,
        "paths": path_count(spec.topology),
    }
