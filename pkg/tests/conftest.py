"""
Pytest fixtures for the pi-separation test suite.

These fixtures provide sources, channels and configuration files for all test categories.
"""

import json
import math
import sys
import tempfile
from pathlib import Path
from typing import Generator

import numpy as np
import pytest

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from pisep.model import ChannelSpec, JointSourcePMF, Topology, make_dsbs  # noqa: E402

LOG2_3 = math.log2(3.0)


# ============================================================================
# Core Fixtures
# ============================================================================

@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def quiet_console():
    """Leave the console non-verbose between tests."""
    from pisep.console import set_verbose
    set_verbose(False)
    yield
    set_verbose(False)


# ============================================================================
# Source Fixtures
# ============================================================================

@pytest.fixture
def dsbs_011() -> JointSourcePMF:
    """Doubly symmetric binary source with crossover 0.11 (H(U|V) close to 0.5)."""
    return make_dsbs(0.11)


@pytest.fixture
def skewed_source() -> JointSourcePMF:
    """Low-entropy correlated binary pair, H(U,V) about 0.62 bits."""
    return JointSourcePMF.from_literal([[0.90, 0.04], [0.04, 0.02]])


@pytest.fixture
def constant_source() -> JointSourcePMF:
    """A source pair that is always (0, 0)."""
    return JointSourcePMF.from_literal([[1.0, 0.0], [0.0, 0.0]])


@pytest.fixture
def ternary_source() -> JointSourcePMF:
    return JointSourcePMF.from_literal([[0.20, 0.05, 0.00],
                                        [0.05, 0.30, 0.05],
                                        [0.10, 0.00, 0.25]])


# ============================================================================
# Channel Fixtures
# ============================================================================

UNIT_GAINS = {
    Topology.MAC: {"g1": 1.0, "g2": 1.0},
    Topology.UNCC_MAC: {"g1": 1.0, "g2": 1.0},
    Topology.UCC_MAC: {"g1": 1.0, "g2": 1.0, "g21": 1.0},
    Topology.MARC: {"g1": 1.0, "g2": 1.0, "gr": 1.0, "g1r": 1.0, "g2r": 1.0},
    Topology.UNCC_MARC: {"g1": 1.0, "g2": 1.0, "gr": 1.0, "g1r": 1.0, "g2r": 1.0},
    Topology.UCC_MARC: {"g1": 1.0, "g2": 1.0, "gr": 1.0, "g1r": 1.0, "g2r": 1.0, "g21": 1.0},
    Topology.IC: {"g11": 1.0, "g21": 1.0, "g12": 1.0, "g22": 1.0},
    Topology.IRC: {"g11": 1.0, "g21": 1.0, "gr1": 1.0, "g12": 1.0, "g22": 1.0, "gr2": 1.0,
                   "g1r": 1.0, "g2r": 1.0},
}


def unit_channel(topology: Topology, **overrides) -> ChannelSpec:
    """Unit gains and powers, N = 1; relay power 1 where there is a relay."""
    gains = dict(UNIT_GAINS[topology])
    powers = {k: overrides.pop(k) for k in ("p1", "p2", "pr", "noise") if k in overrides}
    gains.update(overrides)
    spec = ChannelSpec(topology, gains)
    if spec.has_relay:
        spec = spec.replace(pr=1.0)
    return spec.replace(**powers) if powers else spec


def random_channel(topology: Topology, rng: np.random.Generator) -> ChannelSpec:
    gains = {name: float(rng.uniform(0.05, 3.0)) for name in UNIT_GAINS[topology]}
    spec = ChannelSpec(topology, gains, p1=float(rng.uniform(0.1, 5.0)),
                       p2=float(rng.uniform(0.1, 5.0)), noise=float(rng.uniform(0.2, 4.0)))
    if spec.has_relay:
        spec = spec.replace(pr=float(rng.uniform(0.1, 5.0)))
    return spec


@pytest.fixture
def unit_mac() -> ChannelSpec:
    return unit_channel(Topology.MAC)


@pytest.fixture
def unit_marc() -> ChannelSpec:
    return unit_channel(Topology.MARC)


@pytest.fixture
def irc_example() -> ChannelSpec:
    return unit_channel(Topology.IRC, g11=1.0, gr1=1.0, g22=1.0, g12=2.0, gr2=2.0)


@pytest.fixture
def uncc_marc_strong_relay() -> ChannelSpec:
    """UNCC-MARC whose relay links meet the gain conditions with a factor-2 margin."""
    return unit_channel(Topology.UNCC_MARC, g1=1.0, g2=1.0, gr=1.0, g1r=2.0, g2r=2.0)


# ============================================================================
# Configuration Fixtures
# ============================================================================

@pytest.fixture
def yaml_config_file(temp_dir) -> Path:
    """A YAML config that sets a MAC channel in a nested section."""
    config_file = temp_dir / "run.yaml"
    config_file.write_text("""
channel:
  topology: mac
  g1: 2.0
  g2: 1.0
  p1: 1.0
  p2: 1.0
  noise: 1.0
boundary: open
""")
    return config_file


@pytest.fixture
def json_config_file(temp_dir) -> Path:
    config_file = temp_dir / "run.json"
    config_file.write_text(json.dumps({"topology": "irc", "blocks": 3}))
    return config_file
