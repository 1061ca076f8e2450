"""
Gaussian-input mutual information under adversarial channel phases.

The receiver sees V = sum_i g_i e^{j theta_i} X_i + Z with Z ~ CN(0, N). For
jointly Gaussian inputs with correlation rho the output is Gaussian with
variance

    sigma_V^2 = sum g_i^2 P_i + N + 2 sum_{i<j} g_i g_j sqrt(P_i P_j) Re{rho_ij e^{j(theta_i - theta_j)}}

and the mutual information is log2(sigma_V^2 / N). This module evaluates it,
minimizes it over theta, checks that independent inputs are the best answer
to the worst phase, averages it over uniform phases, and estimates the same
quantity for finite constellations.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize
from scipy.special import logsumexp

from .console import log
from .errors import ArgumentError, ValidationError
from .model import (
    CORRELATION_STREAM,
    DISCRETE_MI_STREAM,
    ERGODIC_STREAM,
    PMF_SUM_TOLERANCE,
    TWO_PI,
    PhaseVector,
    stream_rng,
)

EIGEN_TOLERANCE = 1e-9
HERMITIAN_TOLERANCE = 1e-9
MAX_GRID_CELLS = 2 ** 20
DEFAULT_GRID_POINTS = 64
DEFAULT_STARTS = 8
SWEEP_TOLERANCE = 1e-12
MAX_SWEEPS = 200
INDEPENDENCE_TOLERANCE = 1e-9
LN2 = math.log(2.0)

PhasesLike = Union[PhaseVector, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class GaussianInputSpec:
    """Branch gains, powers, noise and the input correlation matrix."""
    gains: Tuple[float, ...]
    powers: Tuple[float, ...]
    noise: float
    rho: Optional[np.ndarray] = None

    def __post_init__(self):
        gains = tuple(float(g) for g in self.gains)
        powers = tuple(float(p) for p in self.powers)
        m = len(gains)
        violations = []
        if m == 0:
            violations.append("at least one branch is required")
        if len(powers) != m:
            violations.append(f"{len(powers)} powers given for {m} gains")
        if any(not math.isfinite(g) or g < 0 for g in gains):
            violations.append("gains must be finite and nonnegative")
        if any(not math.isfinite(p) or p < 0 for p in powers):
            violations.append("powers must be finite and nonnegative")
        if not (math.isfinite(self.noise) and self.noise > 0):
            violations.append("noise power must be positive")

        rho = np.eye(m, dtype=complex) if self.rho is None else np.array(self.rho, dtype=complex)
        if rho.shape != (m, m):
            violations.append(f"rho must be {m}x{m}, got shape {rho.shape}")
        else:
            violations.extend(_correlation_violations(rho))
        if violations:
            raise ValidationError("invalid Gaussian input: " + "; ".join(violations),
                                  field="rho" if any("rho" in v for v in violations) else "gains",
                                  violations=violations)
        np.fill_diagonal(rho, 1.0)
        rho.setflags(write=False)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "noise", float(self.noise))
        object.__setattr__(self, "rho", rho)

    @classmethod
    def independent(cls, gains: Sequence[float], powers: Sequence[float],
                    noise: float) -> "GaussianInputSpec":
        return cls(tuple(gains), tuple(powers), noise, None)

    def with_rho(self, rho: np.ndarray) -> "GaussianInputSpec":
        return GaussianInputSpec(self.gains, self.powers, self.noise, rho)

    @property
    def m(self) -> int:
        return len(self.gains)

    @property
    def received_powers(self) -> np.ndarray:
        return np.array([g ** 2 * p for g, p in zip(self.gains, self.powers)])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([g * math.sqrt(p) for g, p in zip(self.gains, self.powers)])

    @property
    def is_uncorrelated(self) -> bool:
        off = self.rho - np.diag(np.diag(self.rho))
        return not np.any(off)


def _correlation_violations(rho: np.ndarray) -> List[str]:
    violations = []
    if not np.all(np.isfinite(rho)):
        return ["rho entries must be finite"]
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > HERMITIAN_TOLERANCE:
        violations.append("rho must be Hermitian")
    if np.max(np.abs(np.diag(rho) - 1.0), initial=0.0) > HERMITIAN_TOLERANCE:
        violations.append("rho must have a unit diagonal")
    if np.max(np.abs(rho), initial=0.0) > 1.0 + HERMITIAN_TOLERANCE:
        violations.append("rho entries must satisfy |rho_ij| <= 1")
    if not violations:
        smallest = float(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)))
        if smallest < -EIGEN_TOLERANCE:
            violations.append(f"rho must be positive semidefinite (min eigenvalue {smallest:.3g})")
    return violations


def _theta_array(spec: GaussianInputSpec, theta: PhasesLike) -> np.ndarray:
    values = theta.as_array() if isinstance(theta, PhaseVector) else np.asarray(theta, dtype=float)
    values = values.ravel()
    if values.size != spec.m:
        raise ValidationError(f"theta has {values.size} entries for {spec.m} branches", field="theta")
    return values


def _signal_power(spec: GaussianInputSpec, theta: np.ndarray) -> float:
    amps = spec.amplitudes
    cross = 0.0
    for i in range(spec.m):
        for j in range(i + 1, spec.m):
            cross += amps[i] * amps[j] * (spec.rho[i, j] * np.exp(1j * (theta[i] - theta[j]))).real
    return math.fsum(spec.received_powers) + 2.0 * cross


def _signal_power_batch(spec: GaussianInputSpec, thetas: np.ndarray) -> np.ndarray:
    """Signal power for each row of a (K, m) phase matrix."""
    u = spec.amplitudes * np.exp(1j * thetas)
    return np.einsum("ki,ij,kj->k", u, spec.rho, u.conj()).real


def _bits(spec: GaussianInputSpec, signal_power):
    return np.log2(1.0 + np.maximum(signal_power, 0.0) / spec.noise)


def sigma_v_sq(spec: GaussianInputSpec, theta: PhasesLike) -> float:
    """Variance of the received signal plus noise for one phase vector."""
    return _signal_power(spec, _theta_array(spec, theta)) + spec.noise


def mi_gaussian(spec: GaussianInputSpec, theta: PhasesLike) -> float:
    """I(X; V) in bits for Gaussian inputs at phase vector theta."""
    signal = _signal_power(spec, _theta_array(spec, theta))
    return math.log2(1.0 + max(signal, 0.0) / spec.noise)


# ============================================================================
# Adversarial minimization
# ============================================================================

@dataclass(frozen=True)
class MinimaxResult:
    value: float
    argmin_phases: PhaseVector
    method: str             # closed_form, grid or descent
    grid_resolution: int = 0

    def as_dict(self):
        return {"value": self.value, "argmin_phases": list(self.argmin_phases.phases),
                "method": self.method, "grid_resolution": self.grid_resolution}


def _effective_grid(m: int, grid_points: int) -> int:
    if grid_points < 2:
        raise ArgumentError(f"grid_points must be at least 2, got {grid_points}", field="grid_points")
    free = m - 1
    if free <= 0 or grid_points ** free <= MAX_GRID_CELLS:
        return grid_points
    reduced = int(math.floor(MAX_GRID_CELLS ** (1.0 / free) + 1e-9))
    reduced = max(reduced, 2)
    log(f"phase grid {grid_points}^{free} exceeds {MAX_GRID_CELLS} cells, using {reduced}^{free}",
        "WARNING")
    return reduced


def _grid_scan(spec: GaussianInputSpec, grid_points: int, keep: int,
               chunk: int = 1 << 16) -> Tuple[np.ndarray, np.ndarray]:
    """Best `keep` cells of the gauge-fixed grid (theta_0 = 0): (values, phase rows)."""
    free = spec.m - 1
    axis = np.arange(grid_points) * (TWO_PI / grid_points)
    total = grid_points ** free
    best_vals = np.empty(0)
    best_rows = np.empty((0, spec.m))
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        rows = np.zeros((idx.size, spec.m))
        if free:
            rows[:, 1:] = axis[np.stack(np.unravel_index(idx, (grid_points,) * free), axis=1)]
        vals = _bits(spec, _signal_power_batch(spec, rows))
        best_vals = np.concatenate([best_vals, vals])
        best_rows = np.concatenate([best_rows, rows])
        if best_vals.size > keep:
            # stable so equal values keep grid order
            order = np.argsort(best_vals, kind="stable")[:keep]
            best_vals, best_rows = best_vals[order], best_rows[order]
    order = np.argsort(best_vals, kind="stable")
    return best_vals[order], best_rows[order]


def grid_min_theta_mi(spec: GaussianInputSpec,
                      grid_points: int = DEFAULT_GRID_POINTS) -> MinimaxResult:
    """Exhaustive minimum over the gauge-fixed phase grid."""
    resolution = _effective_grid(spec.m, grid_points)
    _, rows = _grid_scan(spec, resolution, keep=1)
    theta = rows[0]
    return MinimaxResult(mi_gaussian(spec, theta), PhaseVector.wrap(theta), "grid", resolution)


def _descend(spec: GaussianInputSpec, theta: np.ndarray) -> Tuple[float, np.ndarray]:
    theta = theta.copy()
    objective = lambda t: float(_bits(spec, _signal_power(spec, t)))  # noqa: E731
    current = objective(theta)
    steps = np.arange(8) * (TWO_PI / 8)
    for _ in range(MAX_SWEEPS):
        before = current
        for k in range(1, spec.m):
            def along(x, k=k):
                trial = theta.copy()
                trial[k] = x
                return objective(trial)

            points = theta[k] + steps
            values = np.array([along(x) for x in points])
            best = int(np.argmin(values))
            a, b, c = points[best] - TWO_PI / 8, points[best], points[best] + TWO_PI / 8
            fb = values[best]
            if not (fb < along(a) and fb < along(c)):
                candidate, fc = b, fb
            else:
                found = optimize.minimize_scalar(along, bracket=(a, b, c), method="golden",
                                                 options={"xtol": 1e-12})
                candidate, fc = float(found.x), float(found.fun)
                if fb < fc:
                    candidate, fc = b, fb
            if fc < current:
                theta[k] = math.fmod(candidate, TWO_PI)
                current = fc
        if before - current < SWEEP_TOLERANCE:
            break
    return current, theta


def min_theta_mi(spec: GaussianInputSpec, grid_points: int = DEFAULT_GRID_POINTS,
                 refine: bool = True, method: str = "auto", starts: int = DEFAULT_STARTS,
                 workers: int = 1) -> MinimaxResult:
    """Worst-case mutual information over phase vectors.

    Uncorrelated inputs and the two-branch case have closed forms; otherwise a
    gauge-fixed grid seeds coordinate descent from its best `starts` cells.
    ``method="descent"`` forces the numeric path.
    """
    if method not in ("auto", "descent"):
        raise ArgumentError(f"unknown minimization method '{method}'", field="method")
    m = spec.m
    if method == "auto" and (spec.is_uncorrelated or m == 1):
        value = math.log2(1.0 + math.fsum(spec.received_powers) / spec.noise)
        return MinimaxResult(value, PhaseVector.zeros(m), "closed_form", 0)
    if method == "auto" and m == 2:
        a1, a2 = spec.amplitudes
        r1, r2 = spec.received_powers
        rho12 = spec.rho[0, 1]
        value = math.log2(1.0 + max(math.fsum([r1, r2, -2.0 * a1 * a2 * abs(rho12)]), 0.0) / spec.noise)
        theta = PhaseVector.wrap([math.pi - float(np.angle(rho12)), 0.0])
        return MinimaxResult(value, theta, "closed_form", 0)

    resolution = _effective_grid(m, grid_points)
    values, rows = _grid_scan(spec, resolution, keep=max(1, starts))
    if not refine:
        return MinimaxResult(mi_gaussian(spec, rows[0]), PhaseVector.wrap(rows[0]), "grid", resolution)

    if workers > 1 and len(rows) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda row: _descend(spec, row), rows))
    else:
        outcomes = [_descend(spec, row) for row in rows]
    best_value, best_theta = min(outcomes, key=lambda item: item[0])
    if values[0] < best_value:
        best_value, best_theta = float(values[0]), rows[0]
    return MinimaxResult(mi_gaussian(spec, best_theta), PhaseVector.wrap(best_theta),
                         "descent", resolution)


# ============================================================================
# Independence optimality
# ============================================================================

def sample_correlation_matrices(m: int, count: int, seed: int) -> List[np.ndarray]:
    """Seeded random Hermitian PSD matrices with unit diagonal, of random rank."""
    matrices = []
    for index in range(count):
        rng = stream_rng(seed, CORRELATION_STREAM, m, index)
        rank = int(rng.integers(1, m + 1))
        factor = rng.standard_normal((m, rank)) + 1j * rng.standard_normal((m, rank))
        gram = factor @ factor.conj().T
        scale = 1.0 / np.sqrt(np.diag(gram).real)
        rho = gram * np.outer(scale, scale)
        rho = (rho + rho.conj().T) / 2.0
        np.fill_diagonal(rho, 1.0)
        matrices.append(rho)
    return matrices


@dataclass(frozen=True)
class IndependenceReport:
    max_over_rho_of_min: float
    independent_value: float
    witness_rho: np.ndarray
    samples: int
    holds: bool
    values: Tuple[float, ...] = field(default=(), repr=False)

    def as_dict(self):
        return {
            "max_over_rho_of_min": self.max_over_rho_of_min,
            "independent_value": self.independent_value,
            "witness_rho": [[[float(z.real), float(z.imag)] for z in row] for row in self.witness_rho],
            "samples": self.samples,
            "holds": self.holds,
        }


def verify_independence_optimal(gains: Sequence[float], powers: Sequence[float], noise: float,
                                rho_samples: int, seed: int,
                                rhos: Optional[Sequence[np.ndarray]] = None,
                                augment: bool = True,
                                grid_points: int = DEFAULT_GRID_POINTS,
                                workers: int = 1) -> IndependenceReport:
    """Check that the worst-phase information is maximized by independent inputs."""
    base = GaussianInputSpec.independent(gains, powers, noise)
    m = base.m
    if rhos is None and rho_samples < 1:
        raise ArgumentError("rho_samples must be at least 1", field="rho_samples")

    candidates: List[np.ndarray] = []
    if augment:
        candidates.append(np.eye(m, dtype=complex))
        candidates.append(np.ones((m, m), dtype=complex))
    if rhos is not None:
        candidates.extend(np.asarray(r, dtype=complex) for r in rhos)
    else:
        candidates.extend(sample_correlation_matrices(m, rho_samples, seed))

    values = [min_theta_mi(base.with_rho(rho), grid_points=grid_points, workers=workers).value
              for rho in candidates]
    independent = min_theta_mi(base).value
    best = int(np.argmax(values))
    holds = all(v <= independent + INDEPENDENCE_TOLERANCE for v in values)
    if not holds:
        log(f"correlated input beats independent inputs: {values[best]:.12g} > {independent:.12g}",
            "WARNING")
    return IndependenceReport(values[best], independent, candidates[best], len(candidates), holds,
                              tuple(values))


# ============================================================================
# Averages and estimates
# ============================================================================

@dataclass(frozen=True)
class MIEstimate:
    value: float
    stderr: float
    samples: int
    method: str

    def as_dict(self):
        return {"value": self.value, "stderr": self.stderr, "samples": self.samples,
                "method": self.method}


def _two_branch_coefficients(spec: GaussianInputSpec) -> Tuple[float, float]:
    a1, a2 = spec.amplitudes
    r1, r2 = spec.received_powers
    return r1 + r2 + spec.noise, 2.0 * a1 * a2 * abs(spec.rho[0, 1])


def ergodic_avg_mi_closed_form(spec: GaussianInputSpec) -> float:
    """Average over a uniform phase difference, via the log-cosine integral (two branches)."""
    if spec.m != 2:
        raise ArgumentError("closed-form ergodic average needs exactly two branches", field="gains")
    a, b = _two_branch_coefficients(spec)
    return math.log2((a + math.sqrt(max(a * a - b * b, 0.0))) / 2.0) - math.log2(spec.noise)


def ergodic_avg_mi(spec: GaussianInputSpec, method: str = "auto", mc_samples: int = 100_000,
                   seed: int = 0) -> MIEstimate:
    """E over i.i.d. uniform phases of the Gaussian-input mutual information."""
    if spec.is_uncorrelated or spec.m == 1:
        value = math.log2(1.0 + math.fsum(spec.received_powers) / spec.noise)
        return MIEstimate(value, 0.0, 0, "closed_form")
    if method == "auto":
        method = "quadrature" if spec.m == 2 else "monte_carlo"

    if method == "quadrature":
        if spec.m != 2:
            raise ArgumentError("quadrature is only available for two branches", field="method")
        a, b = _two_branch_coefficients(spec)
        integral, _ = integrate.quad(lambda phi: math.log2(a + b * math.cos(phi)), 0.0, TWO_PI,
                                     limit=200)
        return MIEstimate(integral / TWO_PI - math.log2(spec.noise), 0.0, 0, "quadrature")
    if method != "monte_carlo":
        raise ArgumentError(f"unknown averaging method '{method}'", field="method")
    if mc_samples < 2:
        raise ArgumentError("mc_samples must be at least 2", field="mc_samples")

    rng = stream_rng(seed, ERGODIC_STREAM, spec.m)
    thetas = rng.uniform(0.0, TWO_PI, size=(mc_samples, spec.m))
    values = _bits(spec, _signal_power_batch(spec, thetas))
    stderr = float(np.std(values, ddof=1) / math.sqrt(mc_samples))
    return MIEstimate(float(np.mean(values)), stderr, mc_samples, "monte_carlo")


@dataclass(frozen=True)
class DiscreteInput:
    """A finite joint input distribution: rows of `points` are m-tuples of symbols."""
    points: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=complex)
        if points.ndim == 1:
            points = points[:, None]
        priors = np.array(self.priors, dtype=float).ravel()
        violations = []
        if points.shape[0] != priors.size or priors.size == 0:
            violations.append("one prior per constellation point is required")
        elif np.any(priors < 0) or abs(priors.sum() - 1.0) > PMF_SUM_TOLERANCE * max(priors.size, 1):
            violations.append("priors must be nonnegative and sum to 1")
        if violations:
            raise ValidationError("invalid constellation: " + "; ".join(violations),
                                  field="constellation", violations=violations)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "priors", priors)

    @property
    def m(self) -> int:
        return self.points.shape[1]

    @classmethod
    def bpsk(cls, power: float = 1.0) -> "DiscreteInput":
        amp = math.sqrt(power)
        return cls(np.array([[amp], [-amp]]), np.array([0.5, 0.5]))

    @classmethod
    def product(cls, *branches: "DiscreteInput") -> "DiscreteInput":
        """Independent branches combined into one joint input."""
        points, priors = branches[0].points, branches[0].priors
        for other in branches[1:]:
            k, j = len(priors), len(other.priors)
            points = np.hstack([np.repeat(points, j, axis=0), np.tile(other.points, (k, 1))])
            priors = np.outer(priors, other.priors).ravel()
        return cls(points, priors)

    def average_powers(self) -> np.ndarray:
        return self.priors @ (np.abs(self.points) ** 2)


def mi_discrete_input(constellation: DiscreteInput, gains: Sequence[float], theta: PhasesLike,
                      noise: float, mc_samples: int = 20_000, seed: int = 0,
                      chunk: int = 4096) -> MIEstimate:
    """Monte-Carlo I(X; sum g_i e^{j theta_i} X_i + Z) for a finite input, theta known at the receiver."""
    gains = np.asarray(gains, dtype=float).ravel()
    phases = theta.as_array() if isinstance(theta, PhaseVector) else np.asarray(theta, dtype=float).ravel()
    if gains.size != constellation.m or phases.size != constellation.m:
        raise ValidationError(f"constellation has {constellation.m} branches, got {gains.size} gains "
                              f"and {phases.size} phases", field="theta")
    if not noise > 0:
        raise ValidationError("noise power must be positive", field="noise")
    if mc_samples < 1:
        raise ArgumentError("mc_samples must be at least 1", field="mc_samples")
    if len(constellation.priors) == 1:
        return MIEstimate(0.0, 0.0, 0, "exact")

    symbols = constellation.points @ (gains * np.exp(1j * phases))
    log_priors = np.log(np.where(constellation.priors > 0, constellation.priors, 1.0))
    log_priors[constellation.priors == 0] = -np.inf

    rng = stream_rng(seed, DISCRETE_MI_STREAM, constellation.m)
    totals = []
    for start in range(0, mc_samples, chunk):
        size = min(chunk, mc_samples - start)
        sent = rng.choice(len(symbols), size=size, p=constellation.priors)
        z = math.sqrt(noise / 2.0) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
        y = symbols[sent] + z
        metric = -np.abs(y[:, None] - symbols[None, :]) ** 2 / noise
        # log p(y|x) - log p(y), in nats
        totals.append(-np.abs(z) ** 2 / noise - logsumexp(metric + log_priors, axis=1))
    values = np.concatenate(totals) / LN2
    stderr = float(np.std(values, ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else 0.0
    return MIEstimate(float(np.mean(values)), stderr, mc_samples, "monte_carlo")
