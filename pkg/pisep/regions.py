"""
Reliable-communication regions on the entropy triple.

For each topology: the upper bounds on (H(U|V), H(V|U), H(U,V)), the gain
conditions under which separate source-channel coding is optimal, feasibility
queries, and the decode-and-forward rate constraints behind the regions.
All capacities are log2(1 + SNR) in bits per channel use.
"""

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ArgumentError, ValidationError
from .model import (
    NONCAUSAL_TOPOLOGIES,
    ChannelSpec,
    EntropyTriple,
    Topology,
    require_valid,
)

RELATIVE_TOLERANCE = 1e-9
ABSOLUTE_TOLERANCE = 1e-12

PROVENANCE = {
    Topology.MAC: "pi-mac-separation",
    Topology.MARC: "pi-marc-separation",
    Topology.UNCC_MARC: "pi-uncc-marc-separation",
    Topology.UNCC_MAC: "pi-uncc-mac-separation",
    Topology.UCC_MARC: "pi-ucc-marc-separation",
    Topology.UCC_MAC: "pi-ucc-mac-separation",
    Topology.IC: "pi-ic-strong-interference",
    Topology.IRC: "pi-irc-separation",
}

BOUND_FIELDS = ("h_u_given_v", "h_v_given_u", "h_uv")


class Boundary(Enum):
    CLOSED = "closed"   # necessary conditions, <=
    OPEN = "open"       # sufficient conditions, <


class MarcConditionVariant(Enum):
    LITERAL = "literal"
    SYMMETRIC = "symmetric"


def tolerance_for(*values: float) -> float:
    scale = max((abs(v) for v in values if math.isfinite(v)), default=0.0)
    return max(RELATIVE_TOLERANCE * scale, ABSOLUTE_TOLERANCE)


def capacity(noise: float, *received_powers: float) -> float:
    """log2(1 + (sum of received powers) / N)."""
    return math.log2(1.0 + math.fsum(received_powers) / noise)


# ============================================================================
# Regions
# ============================================================================

@dataclass(frozen=True)
class RegionBounds:
    """Upper bounds on the entropy triple; None marks an unconstrained entropy."""
    bound_h_u_given_v: Optional[float]
    bound_h_v_given_u: Optional[float]
    bound_h_uv: float
    topology: Topology
    provenance: str

    def bounds(self) -> Dict[str, Optional[float]]:
        return {
            "h_u_given_v": self.bound_h_u_given_v,
            "h_v_given_u": self.bound_h_v_given_u,
            "h_uv": self.bound_h_uv,
        }

    def as_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = dict(self.bounds())
        data["topology"] = self.topology.value
        data["provenance"] = self.provenance
        return data


def _received(spec: ChannelSpec, gain: str, power: float) -> float:
    return spec.g(gain) ** 2 * power


def compute_region(spec: ChannelSpec) -> RegionBounds:
    """The reliable-communication region of a channel, as bounds on the entropy triple."""
    require_valid(spec)
    topology = spec.topology
    n = spec.noise
    r = lambda gain, power: _received(spec, gain, power)  # noqa: E731

    u_given_v: Optional[float]
    v_given_u: Optional[float]

    if topology is Topology.MAC:
        u_given_v = capacity(n, r("g1", spec.p1))
        v_given_u = capacity(n, r("g2", spec.p2))
        uv = capacity(n, r("g1", spec.p1), r("g2", spec.p2))
    elif topology is Topology.MARC:
        u_given_v = capacity(n, r("g1", spec.p1), r("gr", spec.pr))
        v_given_u = capacity(n, r("g2", spec.p2), r("gr", spec.pr))
        uv = capacity(n, r("g1", spec.p1), r("g2", spec.p2), r("gr", spec.pr))
    elif topology in (Topology.UNCC_MARC, Topology.UCC_MARC):
        u_given_v = capacity(n, r("g1", spec.p1), r("gr", spec.pr))
        v_given_u = None
        uv = capacity(n, r("g1", spec.p1), r("g2", spec.p2), r("gr", spec.pr))
    elif topology in (Topology.UNCC_MAC, Topology.UCC_MAC):
        u_given_v = capacity(n, r("g1", spec.p1))
        v_given_u = None
        uv = capacity(n, r("g1", spec.p1), r("g2", spec.p2))
    elif topology is Topology.IC:
        u_given_v = capacity(n, r("g11", spec.p1))
        v_given_u = capacity(n, r("g22", spec.p2))
        uv = min(capacity(n, r("g11", spec.p1), r("g21", spec.p2)),
                 capacity(n, r("g12", spec.p1), r("g22", spec.p2)))
    elif topology is Topology.IRC:
        u_given_v = capacity(n, r("g11", spec.p1), r("gr1", spec.pr))
        v_given_u = capacity(n, r("g22", spec.p2), r("gr2", spec.pr))
        uv = capacity(n, r("g12", spec.p1), r("g22", spec.p2), r("gr2", spec.pr))
    else:
        raise ValidationError(f"no region for topology {topology}", field="topology")

    return RegionBounds(u_given_v, v_given_u, uv, topology, PROVENANCE[topology])


# ============================================================================
# Gain conditions
# ============================================================================

@dataclass(frozen=True)
class Condition:
    """One inequality lhs >= rhs (lhs > rhs when strict)."""
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    slack: float
    tolerance: float
    strict: bool = False


@dataclass(frozen=True)
class ConditionReport:
    topology: Topology
    conditions: Tuple[Condition, ...] = ()

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.conditions)

    def failed(self) -> List[Condition]:
        return [c for c in self.conditions if not c.satisfied]

    def as_rows(self) -> List[Dict[str, object]]:
        return [asdict(c) for c in self.conditions]


def at_least(name: str, lhs: float, rhs: float, strict: bool = False) -> Condition:
    slack = lhs - rhs
    tol = tolerance_for(lhs, rhs)
    satisfied = slack > tol if strict else slack >= -tol
    return Condition(name, lhs, rhs, satisfied, slack, tol, strict)


def _ratio_equality(spec: ChannelSpec) -> Condition:
    """g11/g12 = gr1/gr2, compared by cross-multiplication."""
    g11, g12, gr1, gr2 = (spec.g(k) for k in ("g11", "g12", "gr1", "gr2"))
    left, right = g11 * gr2, g12 * gr1
    tol = max(RELATIVE_TOLERANCE * max(abs(left), abs(right)), ABSOLUTE_TOLERANCE)
    slack = -abs(left - right)
    alpha = g11 / g12 if g12 > 0 else math.inf
    beta = gr1 / gr2 if gr2 > 0 else math.inf
    return Condition("g11/g12 = gr1/gr2", alpha, beta, slack >= -tol, slack, tol)


def check_gain_conditions(
    spec: ChannelSpec,
    triple: Optional[EntropyTriple] = None,
    marc_condition_variant: MarcConditionVariant = MarcConditionVariant.LITERAL,
) -> ConditionReport:
    """Evaluate the gain conditions that accompany a topology's region."""
    require_valid(spec)
    topology = spec.topology
    variant = MarcConditionVariant(marc_condition_variant)
    p1, p2, pr, n = spec.p1, spec.p2, spec.pr, spec.noise
    r = lambda gain, power: _received(spec, gain, power)  # noqa: E731
    conditions: List[Condition] = []

    if topology in (Topology.UCC_MARC, Topology.UCC_MAC) and triple is None:
        raise ArgumentError(
            f"entropy triple is required for {topology.value} conditions (they depend on H(U|V))",
            field="source")

    if topology is Topology.MARC:
        conditions.append(at_least("g1r^2 P1 >= g1^2 P1 + gr^2 Pr",
                                   r("g1r", p1), r("g1", p1) + r("gr", pr)))
        if variant is MarcConditionVariant.LITERAL:
            conditions.append(at_least("g2r^2 P1 >= g2^2 P1 + gr^2 Pr",
                                       r("g2r", p1), r("g2", p1) + r("gr", pr)))
        else:
            conditions.append(at_least("g2r^2 P2 >= g2^2 P2 + gr^2 Pr",
                                       r("g2r", p2), r("g2", p2) + r("gr", pr)))
    elif topology is Topology.UNCC_MARC:
        conditions.append(at_least("g1r^2 P1 >= g1^2 P1 + gr^2 Pr",
                                   r("g1r", p1), r("g1", p1) + r("gr", pr)))
        conditions.append(at_least("g1r^2 P1 + g2r^2 P2 >= g1^2 P1 + g2^2 P2 + gr^2 Pr",
                                   r("g1r", p1) + r("g2r", p2),
                                   r("g1", p1) + r("g2", p2) + r("gr", pr)))
    elif topology is Topology.UCC_MARC:
        conditions.append(at_least("g1r^2 P1 >= g1^2 P1 + gr^2 Pr",
                                   r("g1r", p1), r("g1", p1) + r("gr", pr)))
        conditions.append(at_least("g2r^2 P1 >= g1^2 P1 + g2^2 P1 + gr^2 Pr",
                                   r("g2r", p1), r("g1", p1) + r("g2", p1) + r("gr", pr)))
        conditions.append(_cooperative_link_condition(
            spec, triple, (r("g1", p1), r("g2", p2), r("gr", pr))))
    elif topology is Topology.UCC_MAC:
        conditions.append(_cooperative_link_condition(
            spec, triple, (r("g1", p1), r("g2", p2))))
    elif topology is Topology.IC:
        # strong-interference direction as stated for this result
        conditions.append(at_least("g11 >= g12", spec.g("g11"), spec.g("g12")))
        conditions.append(at_least("g22 >= g21", spec.g("g22"), spec.g("g21")))
    elif topology is Topology.IRC:
        conditions.extend(_irc_conditions(spec))
    # MAC and UNCC-MAC carry no gain conditions.

    return ConditionReport(topology, tuple(conditions))


def _cooperative_link_condition(spec: ChannelSpec, triple: EntropyTriple,
                                destination_powers: Sequence[float]) -> Condition:
    n = spec.noise
    lhs = 1.0 + _received(spec, "g21", spec.p2) / n
    rhs = 2.0 ** (-triple.h_u_given_v) * (1.0 + math.fsum(destination_powers) / n)
    terms = " + ".join(("g1^2 P1", "g2^2 P2", "gr^2 Pr")[:len(destination_powers)])
    return at_least(f"1 + g21^2 P2/N >= 2^-H(U|V) (1 + ({terms})/N)", lhs, rhs)


def _irc_conditions(spec: ChannelSpec) -> List[Condition]:
    p1, p2, pr = spec.p1, spec.p2, spec.pr
    g = spec.g
    ratio = _ratio_equality(spec)
    alpha = ratio.lhs
    conditions = [ratio, at_least("alpha = g11/g12 < 1", 1.0, alpha, strict=True)]
    conditions.append(at_least("g1r^2 P1 >= g11^2 P1 + gr1^2 Pr",
                               g("g1r") ** 2 * p1, g("g11") ** 2 * p1 + g("gr1") ** 2 * pr))
    conditions.append(at_least("g2r^2 P2 >= g22^2 P2 + gr2^2 Pr",
                               g("g2r") ** 2 * p2, g("g22") ** 2 * p2 + g("gr2") ** 2 * pr))
    if math.isfinite(alpha):
        a2 = alpha ** 2
        conditions.append(at_least("alpha^2 gr2^2 Pr >= (1 - alpha^2) g12^2 P1",
                                   a2 * g("gr2") ** 2 * pr, (1.0 - a2) * g("g12") ** 2 * p1))
        # multiplied through by P2 so that P2 = 0 stays well defined
        conditions.append(at_least(
            "g21^2 P2 >= (1 - alpha^2) g12^2 P1 + (1 - alpha^2) gr2^2 Pr + g22^2 P2",
            g("g21") ** 2 * p2,
            (1.0 - a2) * g("g12") ** 2 * p1 + (1.0 - a2) * g("gr2") ** 2 * pr + g("g22") ** 2 * p2))
    else:
        nan = math.nan
        for name in ("alpha^2 gr2^2 Pr >= (1 - alpha^2) g12^2 P1",
                     "g21^2 P2 >= (1 - alpha^2) g12^2 P1 + (1 - alpha^2) gr2^2 Pr + g22^2 P2"):
            conditions.append(Condition(name, nan, nan, False, -math.inf, ABSOLUTE_TOLERANCE))
    return conditions


# ============================================================================
# Feasibility
# ============================================================================

@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    boundary: Boundary
    violations: Dict[str, float] = field(default_factory=dict)  # bound - value per present bound

    def as_dict(self) -> Dict[str, object]:
        return {"feasible": self.feasible, "boundary": self.boundary.value,
                "slack": dict(self.violations)}


def is_feasible(triple: EntropyTriple, region: RegionBounds,
                boundary: Boundary = Boundary.CLOSED) -> Feasibility:
    """Whether the entropy triple lies inside the region (closed: <=, open: <)."""
    boundary = Boundary(boundary)
    values = {"h_u_given_v": triple.h_u_given_v, "h_v_given_u": triple.h_v_given_u,
              "h_uv": triple.h_uv}
    slacks: Dict[str, float] = {}
    feasible = True
    for name, bound in region.bounds().items():
        if bound is None:
            continue
        value = values[name]
        slack = bound - value
        tol = tolerance_for(bound, value)
        ok = slack > tol if boundary is Boundary.OPEN else slack >= -tol
        feasible = feasible and ok
        slacks[name] = slack
    return Feasibility(feasible, boundary, slacks)


# ============================================================================
# Rate constraints behind the regions
# ============================================================================

@dataclass(frozen=True)
class RateConstraint:
    """R_which < bound, imposed by one decoding stage."""
    stage: str
    which: str      # "R1", "R2" or "R1+R2"
    bound: float
    strict: bool = True


def _rate_of(rates: Tuple[float, float], which: str) -> float:
    return {"R1": rates[0], "R2": rates[1], "R1+R2": rates[0] + rates[1]}[which]


def achievable_rate_constraints(spec: ChannelSpec) -> List[RateConstraint]:
    """Channel-coding constraints of the separation schemes, for independent Gaussian inputs."""
    require_valid(spec)
    topology = spec.topology
    n = spec.noise
    r = lambda gain, power: _received(spec, gain, power)  # noqa: E731
    p1, p2, pr = spec.p1, spec.p2, spec.pr
    constraints: List[RateConstraint] = []

    def add(stage: str, which: str, *powers: float) -> None:
        constraints.append(RateConstraint(stage, which, capacity(n, *powers)))

    if topology in (Topology.MAC, Topology.UNCC_MAC, Topology.UCC_MAC):
        add("destination", "R1", r("g1", p1))
        if topology is Topology.MAC:
            add("destination", "R2", r("g2", p2))
        add("destination", "R1+R2", r("g1", p1), r("g2", p2))
        if topology is Topology.UCC_MAC:
            add("cooperative", "R2", r("g21", p2))
    elif topology in (Topology.MARC, Topology.UNCC_MARC, Topology.UCC_MARC):
        add("relay", "R1", r("g1r", p1))
        if topology is not Topology.UNCC_MARC:
            add("relay", "R2", r("g2r", p2))
        add("relay", "R1+R2", r("g1r", p1), r("g2r", p2))
        add("destination", "R1", r("g1", p1), r("gr", pr))
        if topology is Topology.MARC:
            add("destination", "R2", r("g2", p2), r("gr", pr))
        add("destination", "R1+R2", r("g1", p1), r("g2", p2), r("gr", pr))
        if topology is Topology.UCC_MARC:
            add("cooperative", "R2", r("g21", p2))
    elif topology is Topology.IC:
        for receiver, (ga, gb) in (("y1", ("g11", "g21")), ("y2", ("g12", "g22"))):
            add(receiver, "R1", r(ga, p1))
            add(receiver, "R2", r(gb, p2))
            add(receiver, "R1+R2", r(ga, p1), r(gb, p2))
    elif topology is Topology.IRC:
        add("relay", "R1", r("g1r", p1))
        add("relay", "R2", r("g2r", p2))
        add("relay", "R1+R2", r("g1r", p1), r("g2r", p2))
        for receiver, (ga, gb, gr) in (("y1", ("g11", "g21", "gr1")),
                                       ("y2", ("g12", "g22", "gr2"))):
            add(receiver, "R1", r(ga, p1), r(gr, pr))
            add(receiver, "R2", r(gb, p2), r(gr, pr))
            add(receiver, "R1+R2", r(ga, p1), r(gb, p2), r(gr, pr))
    return constraints


def source_rate_constraints(triple: EntropyTriple,
                            topology: Optional[Topology] = None) -> List[RateConstraint]:
    """Slepian-Wolf lower bounds, expressed as constraints rate > bound."""
    constraints = [RateConstraint("source", "R1", triple.h_u_given_v)]
    if topology not in NONCAUSAL_TOPOLOGIES:
        constraints.append(RateConstraint("source", "R2", triple.h_v_given_u))
    constraints.append(RateConstraint("source", "R1+R2", triple.h_uv))
    return constraints


def check_rate_pair(rates: Tuple[float, float], channel: Sequence[RateConstraint] = (),
                    source: Sequence[RateConstraint] = ()) -> List[Condition]:
    """Rates against channel upper bounds (R < C) and source lower bounds (R > H)."""
    report = []
    for c in channel:
        rate = _rate_of(rates, c.which)
        report.append(at_least(f"{c.stage}: {c.which} < {c.bound:.6g}", c.bound, rate, strict=c.strict))
    for c in source:
        rate = _rate_of(rates, c.which)
        report.append(at_least(f"{c.stage}: {c.which} > {c.bound:.6g}", rate, c.bound, strict=c.strict))
    return report
