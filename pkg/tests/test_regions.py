"""
Tests for regions, gain conditions and feasibility.

This module tests:
- Region bounds of every topology
- Gain conditions, including boundary cases and the IRC ratio check
- Closed and open feasibility
- Rate constraints of the separation schemes
"""

import math

import numpy as np
import pytest

from conftest import *

from pisep.errors import ArgumentError, ValidationError
from pisep.model import ChannelSpec, EntropyTriple, JointSourcePMF, Topology, entropy_triple
from pisep.regions import (
    Boundary,
    MarcConditionVariant,
    achievable_rate_constraints,
    at_least,
    capacity,
    check_gain_conditions,
    check_rate_pair,
    compute_region,
    is_feasible,
    source_rate_constraints,
)


def triple_of(h_u_given_v, h_v_given_u, h_uv):
    return EntropyTriple(h_u_given_v, h_v_given_u, h_uv,
                         h_uv - h_v_given_u, h_uv - h_u_given_v)


class TestComputeRegion:
    """Region bounds per topology."""

    def test_unit_mac(self, unit_mac):
        region = compute_region(unit_mac)
        assert region.bound_h_u_given_v == pytest.approx(1.0)
        assert region.bound_h_v_given_u == pytest.approx(1.0)
        assert region.bound_h_uv == pytest.approx(LOG2_3)
        assert region.provenance == "pi-mac-separation"

    def test_silent_relay_reduces_to_mac(self, unit_mac, unit_marc):
        marc = compute_region(unit_marc.replace(pr=0.0))
        mac = compute_region(unit_mac)
        assert marc.bounds() == pytest.approx(mac.bounds())

    def test_irc_example(self, irc_example):
        region = compute_region(irc_example)
        assert region.bound_h_u_given_v == pytest.approx(LOG2_3)
        assert region.bound_h_v_given_u == pytest.approx(math.log2(6.0))
        assert region.bound_h_uv == pytest.approx(math.log2(10.0))

    @pytest.mark.parametrize("topology", [Topology.UNCC_MAC, Topology.UCC_MAC,
                                          Topology.UNCC_MARC, Topology.UCC_MARC])
    def test_receiver_side_information_drops_a_bound(self, topology):
        region = compute_region(unit_channel(topology))
        assert region.bound_h_v_given_u is None
        assert "h_v_given_u" in region.as_dict()
        assert region.as_dict()["h_v_given_u"] is None

    def test_ic_sum_bound_is_weaker_receiver(self):
        spec = unit_channel(Topology.IC, g12=0.5)
        region = compute_region(spec)
        assert region.bound_h_uv == pytest.approx(math.log2(1 + 0.25 + 1))

    def test_invalid_channel_rejected(self):
        with pytest.raises(ValidationError):
            compute_region(unit_channel(Topology.MAC, noise=0.0))

    def test_sum_bound_dominates_single_bounds(self, rng):
        for topology in (Topology.MAC, Topology.MARC):
            for _ in range(20):
                region = compute_region(random_channel(topology, rng))
                assert region.bound_h_uv >= region.bound_h_u_given_v - 1e-12
                assert region.bound_h_uv >= region.bound_h_v_given_u - 1e-12

    def test_capacity(self):
        assert capacity(1.0, 1.0, 1.0) == pytest.approx(LOG2_3)
        assert capacity(2.0) == 0.0



def expected_bounds(spec):
    """Region bounds written out term by term."""
    g, n = spec.g, spec.noise
    p1, p2, pr = spec.p1, spec.p2, spec.pr

    def c(*received):
        return math.log2(1.0 + sum(received) / n)

    t = spec.topology
    if t is Topology.MAC:
        return c(g("g1") ** 2 * p1), c(g("g2") ** 2 * p2), c(g("g1") ** 2 * p1, g("g2") ** 2 * p2)
    if t is Topology.MARC:
        relay = g("gr") ** 2 * pr
        return (c(g("g1") ** 2 * p1, relay), c(g("g2") ** 2 * p2, relay),
                c(g("g1") ** 2 * p1, g("g2") ** 2 * p2, relay))
    if t in (Topology.UNCC_MARC, Topology.UCC_MARC):
        relay = g("gr") ** 2 * pr
        return c(g("g1") ** 2 * p1, relay), None, c(g("g1") ** 2 * p1, g("g2") ** 2 * p2, relay)
    if t in (Topology.UNCC_MAC, Topology.UCC_MAC):
        return c(g("g1") ** 2 * p1), None, c(g("g1") ** 2 * p1, g("g2") ** 2 * p2)
    if t is Topology.IC:
        return (c(g("g11") ** 2 * p1), c(g("g22") ** 2 * p2),
                min(c(g("g11") ** 2 * p1, g("g21") ** 2 * p2), c(g("g12") ** 2 * p1, g("g22") ** 2 * p2)))
    return (c(g("g11") ** 2 * p1, g("gr1") ** 2 * pr), c(g("g22") ** 2 * p2, g("gr2") ** 2 * pr),
            c(g("g12") ** 2 * p1, g("g22") ** 2 * p2, g("gr2") ** 2 * pr))


def bound_tuple(region):
    return region.bound_h_u_given_v, region.bound_h_v_given_u, region.bound_h_uv


def assert_bounds_close(actual, expected, rel=1e-12):
    for got, want in zip(actual, expected):
        if want is None:
            assert got is None
        else:
            assert got == pytest.approx(want, rel=rel)


class TestRegionProperties:
    """Seeded random channels of every topology."""

    DRAWS = 50
    SILENT_RELAY = {Topology.MARC: Topology.MAC, Topology.UNCC_MARC: Topology.UNCC_MAC,
                    Topology.UCC_MARC: Topology.UCC_MAC}

    @pytest.mark.parametrize("topology", list(Topology))
    def test_bounds_match_written_out_formulas(self, topology):
        rng = np.random.default_rng(100)
        for _ in range(self.DRAWS):
            spec = random_channel(topology, rng)
            assert_bounds_close(bound_tuple(compute_region(spec)), expected_bounds(spec))

    @pytest.mark.parametrize("relay_topology", list(SILENT_RELAY))
    def test_silent_relay_reduces_to_mac(self, relay_topology):
        mac_topology = self.SILENT_RELAY[relay_topology]
        rng = np.random.default_rng(101)
        for _ in range(self.DRAWS):
            spec = random_channel(relay_topology, rng).replace(pr=0.0)
            gains = {name: spec.g(name) for name in UNIT_GAINS[mac_topology]}
            mac = ChannelSpec(mac_topology, gains, p1=spec.p1, p2=spec.p2, noise=spec.noise)
            assert bound_tuple(compute_region(spec)) == bound_tuple(compute_region(mac))

    @pytest.mark.parametrize("topology", list(Topology))
    def test_bounds_grow_with_gains_and_powers(self, topology):
        rng = np.random.default_rng(102)
        for _ in range(10):
            spec = random_channel(topology, rng)
            before = bound_tuple(compute_region(spec))
            changes = [spec.with_gains(**{name: 1.5 * spec.g(name)}) for name in spec.gains]
            changes += [spec.replace(p1=1.5 * spec.p1), spec.replace(p2=1.5 * spec.p2)]
            if spec.has_relay:
                changes.append(spec.replace(pr=1.5 * spec.pr))
            for changed in changes:
                for old, new in zip(before, bound_tuple(compute_region(changed))):
                    if old is not None:
                        assert new >= old - 1e-12

    @pytest.mark.parametrize("topology", list(Topology))
    @pytest.mark.parametrize("scale", [0.01, 7.3])
    def test_common_power_scale_keeps_verdicts(self, topology, scale, dsbs_011):
        triple = entropy_triple(dsbs_011)
        rng = np.random.default_rng(103)
        for _ in range(20):
            spec = random_channel(topology, rng)
            scaled = spec.replace(p1=scale * spec.p1, p2=scale * spec.p2, pr=scale * spec.pr,
                                  noise=scale * spec.noise)
            original = check_gain_conditions(spec, triple)
            rescaled = check_gain_conditions(scaled, triple)
            assert [c.satisfied for c in rescaled.conditions] == \
                [c.satisfied for c in original.conditions]
            assert_bounds_close(bound_tuple(compute_region(scaled)),
                                bound_tuple(compute_region(spec)), rel=1e-9)
            assert is_feasible(triple, compute_region(scaled)).feasible == \
                is_feasible(triple, compute_region(spec)).feasible

    @pytest.mark.parametrize("topology", list(Topology))
    @pytest.mark.parametrize("boundary", list(Boundary))
    def test_feasibility_is_downward_closed(self, topology, boundary):
        rng = np.random.default_rng(104)
        feasible_seen = 0
        for _ in range(self.DRAWS):
            region = compute_region(random_channel(topology, rng))
            outer = [float(rng.uniform(0.0, 5.0)) if bound is None else
                     bound * float(rng.uniform(0.0, 1.3)) for bound in bound_tuple(region)]
            inner = [value * float(rng.uniform(0.0, 1.0)) for value in outer]
            if is_feasible(triple_of(*outer), region, boundary).feasible:
                feasible_seen += 1
                assert is_feasible(triple_of(*inner), region, boundary).feasible
        assert feasible_seen > 0


class TestGainConditions:
    """Gain conditions accompanying each region."""

    def test_mac_has_none(self, unit_mac):
        report = check_gain_conditions(unit_mac)
        assert report.conditions == ()
        assert report.all_satisfied

    def test_uncc_marc_boundary_slack_zero(self):
        spec = unit_channel(Topology.UNCC_MARC, g1r=math.sqrt(2.0))
        condition = check_gain_conditions(spec).conditions[0]
        assert condition.name == "g1r^2 P1 >= g1^2 P1 + gr^2 Pr"
        assert condition.satisfied
        assert condition.slack == pytest.approx(0.0, abs=1e-12)

    def test_ucc_marc_cooperative_condition_at_boundary(self):
        independent = entropy_triple(JointSourcePMF.from_literal([[0.25, 0.25], [0.25, 0.25]]))
        report = check_gain_conditions(unit_channel(Topology.UCC_MARC), independent)
        condition = report.conditions[-1]
        assert condition.name.startswith("1 + g21^2 P2/N >= 2^-H(U|V)")
        assert condition.lhs == pytest.approx(2.0)
        assert condition.rhs == pytest.approx(2.0)
        assert condition.satisfied

    @pytest.mark.parametrize("topology", [Topology.UCC_MAC, Topology.UCC_MARC])
    def test_cooperative_conditions_need_source(self, topology):
        with pytest.raises(ArgumentError) as excinfo:
            check_gain_conditions(unit_channel(topology))
        assert excinfo.value.field == "source"

    def test_irc_ratio_mismatch(self):
        spec = unit_channel(Topology.IRC, g11=1.0, g12=2.0, gr1=1.0, gr2=3.0)
        ratio = check_gain_conditions(spec).conditions[0]
        assert ratio.name == "g11/g12 = gr1/gr2"
        assert not ratio.satisfied

    def test_irc_ratio_and_alpha_hold(self, irc_example):
        report = check_gain_conditions(irc_example)
        ratio, alpha = report.conditions[:2]
        assert ratio.satisfied
        assert alpha.satisfied
        assert alpha.rhs == pytest.approx(0.5)
        assert len(report.conditions) == 6

    def test_irc_alpha_one_is_not_strictly_less(self):
        report = check_gain_conditions(unit_channel(Topology.IRC))
        assert not report.conditions[1].satisfied

    def test_irc_zero_cross_gain(self):
        spec = unit_channel(Topology.IRC, g12=0.0, gr2=0.0)
        report = check_gain_conditions(spec)
        assert len(report.conditions) == 6
        assert not report.conditions[4].satisfied
        assert not report.conditions[5].satisfied
        assert math.isnan(report.conditions[4].lhs)

    def test_marc_variants(self):
        spec = unit_channel(Topology.MARC, p2=4.0, g2r=2.0)
        literal = check_gain_conditions(spec).conditions[1]
        symmetric = check_gain_conditions(spec, marc_condition_variant=MarcConditionVariant.SYMMETRIC)
        assert "P1" in literal.name
        assert symmetric.conditions[1].name == "g2r^2 P2 >= g2^2 P2 + gr^2 Pr"
        assert symmetric.conditions[1].lhs == pytest.approx(16.0)

    def test_ic_strong_interference(self):
        report = check_gain_conditions(unit_channel(Topology.IC, g12=0.5, g21=2.0))
        names = [c.name for c in report.failed()]
        assert names == ["g22 >= g21"]

    def test_as_rows(self, uncc_marc_strong_relay):
        rows = check_gain_conditions(uncc_marc_strong_relay).as_rows()
        assert len(rows) == 2
        assert all(row["satisfied"] for row in rows)
        assert set(rows[0]) >= {"name", "lhs", "rhs", "slack", "strict"}

    def test_strict_zero_slack_fails(self):
        assert not at_least("x > y", 1.0, 1.0, strict=True).satisfied
        assert at_least("x >= y", 1.0, 1.0).satisfied


class TestFeasibility:
    """Closed and open feasibility against the unit MAC region."""

    def test_interior(self, unit_mac):
        result = is_feasible(triple_of(0.9, 0.9, 1.5), compute_region(unit_mac))
        assert result.feasible

    def test_boundary_semantics(self, unit_mac):
        region = compute_region(unit_mac)
        corner = triple_of(1.0, 1.0, LOG2_3)
        assert is_feasible(corner, region, Boundary.CLOSED).feasible
        assert not is_feasible(corner, region, Boundary.OPEN).feasible

    def test_sum_violation(self, unit_mac):
        result = is_feasible(triple_of(0.9, 0.9, 1.7), compute_region(unit_mac))
        assert not result.feasible
        assert result.violations["h_uv"] == pytest.approx(LOG2_3 - 1.7)
        assert result.violations["h_uv"] == pytest.approx(-0.115, abs=1e-3)

    def test_absent_bound_is_not_checked(self):
        region = compute_region(unit_channel(Topology.UNCC_MAC))
        result = is_feasible(triple_of(0.5, 5.0, 1.5), region, "closed")
        assert result.feasible
        assert "h_v_given_u" not in result.violations

    def test_as_dict(self, unit_mac):
        data = is_feasible(triple_of(0.9, 0.9, 1.5), compute_region(unit_mac)).as_dict()
        assert data["boundary"] == "closed"
        assert set(data["slack"]) == {"h_u_given_v", "h_v_given_u", "h_uv"}


class TestRateConstraints:
    """Channel and source rate constraints of the separation schemes."""

    def test_mac(self, unit_mac):
        constraints = achievable_rate_constraints(unit_mac)
        assert [(c.stage, c.which) for c in constraints] == [
            ("destination", "R1"), ("destination", "R2"), ("destination", "R1+R2")]
        assert constraints[-1].bound == pytest.approx(LOG2_3)

    def test_uncc_marc_has_no_individual_r2(self):
        constraints = achievable_rate_constraints(unit_channel(Topology.UNCC_MARC))
        keys = [(c.stage, c.which) for c in constraints]
        assert ("relay", "R2") not in keys
        assert ("destination", "R2") not in keys
        assert ("relay", "R1+R2") in keys

    def test_ucc_marc_has_cooperative_stage(self):
        stages = {c.stage for c in achievable_rate_constraints(unit_channel(Topology.UCC_MARC))}
        assert stages == {"relay", "destination", "cooperative"}

    def test_irc_both_receivers(self, irc_example):
        stages = {c.stage for c in achievable_rate_constraints(irc_example)}
        assert stages == {"relay", "y1", "y2"}

    def test_source_constraints(self, dsbs_011):
        triple = entropy_triple(dsbs_011)
        assert [c.which for c in source_rate_constraints(triple)] == ["R1", "R2", "R1+R2"]
        noncausal = source_rate_constraints(triple, Topology.UNCC_MARC)
        assert [c.which for c in noncausal] == ["R1", "R1+R2"]

    def test_rate_pair(self, unit_mac, dsbs_011):
        channel = achievable_rate_constraints(unit_mac)
        source = source_rate_constraints(entropy_triple(dsbs_011))
        inside = check_rate_pair((0.78, 0.78), channel, source)
        assert all(c.satisfied for c in inside)
        outside = check_rate_pair((0.6, 0.6), channel, source)
        failed = [c.name for c in outside if not c.satisfied]
        assert failed == [f"source: R1+R2 > {entropy_triple(dsbs_011).h_uv:.6g}"]
