"""
Command-line front door: region, check, lemma, simulate and schedule.

Results go to stdout (or --output) as JSON, CSV or text and always embed the
effective configuration; logs go to stderr. Exit codes: 0 success, 2 invalid
input or output, 3 search budget exceeded.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .codec import build_schedule, format_schedule
from .console import Colors, log, print_table, set_verbose
from .errors import ArgumentError, BudgetError, PiSepError, ValidationError
from .minimax import (
    DEFAULT_GRID_POINTS,
    GaussianInputSpec,
    ergodic_avg_mi,
    ergodic_avg_mi_closed_form,
    min_theta_mi,
    verify_independence_optimal,
)
from .model import (
    ChannelSpec,
    JointSourcePMF,
    PhaseVector,
    Topology,
    channel_from_mapping,
    entropy_triple,
    gain_names,
    make_dsbs,
)
from .regions import (
    Boundary,
    MarcConditionVariant,
    achievable_rate_constraints,
    check_gain_conditions,
    compute_region,
    is_feasible,
)
from .simulate import DF_TOPOLOGIES, simulate_mac_e2e, simulate_marc_df

COMMANDS = ("region", "check", "lemma", "simulate", "schedule")
ALL_GAINS = tuple(dict.fromkeys(g for t in Topology for g in gain_names(t)))
SECTIONS = ("channel", "sim", "output")
SIMULATE_COLUMNS = ["trial_count", "errors", "error_rate", "stage", "n", "B", "rate1", "rate2",
                    "seed", "theta_mode"]


@dataclass
class RunConfig:
    """Effective settings of one invocation."""
    command: str
    topology: Optional[str] = None
    channel_gains: Dict[str, float] = field(default_factory=dict)
    p1: float = 1.0
    p2: float = 1.0
    pr: float = 0.0
    noise: float = 1.0
    source: Optional[Any] = None
    boundary: str = "closed"
    marc_condition_variant: str = "literal"
    grid_points: int = DEFAULT_GRID_POINTS
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    format: Optional[str] = None
    output: Optional[str] = None
    pretty: bool = False
    verbose: bool = False
    n: int = 8
    blocks: int = 2
    trials: int = 200
    rates: Optional[List[float]] = None
    seed: int = 0
    phase_mode: str = "random"
    theta: Optional[List[float]] = None
    noise_scale: float = 1.0
    sup_grid: int = 64
    gains: Optional[List[float]] = None
    powers: Optional[List[float]] = None
    rho: Optional[Any] = None
    rho_phase: float = 0.0
    rho_samples: int = 200
    mc_samples: int = 100_000

    @property
    def output_format(self) -> str:
        if self.format:
            return self.format
        return "text" if self.command == "schedule" else "json"

    def as_dict(self) -> Dict[str, Any]:
        """The echoed configuration. The thread count is left out."""
        data = asdict(self)
        data.pop("workers")
        data["format"] = self.output_format
        return data


def _load_config(config_file: Optional[str]) -> Dict[str, Any]:
    """Read a YAML or JSON config file into a flat dictionary."""
    if not config_file:
        return {}
    path = Path(config_file)
    if not path.exists():
        raise ArgumentError(f"config file not found: {config_file}", field="config")
    try:
        with open(path, "r") as f:
            if config_file.endswith(".yaml") or config_file.endswith(".yml"):
                user_config = yaml.safe_load(f)
            else:
                user_config = json.load(f)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot parse config file {config_file}: {e}", field="config")
    if user_config is None:
        return {}
    if not isinstance(user_config, dict):
        raise ValidationError("config file must contain a mapping", field="config")
    return _flatten(user_config)


def _flatten(data: Dict[str, Any]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in data.items():
        key = str(key).replace("-", "_")
        if key in SECTIONS and isinstance(value, dict):
            for inner, inner_value in _flatten(value).items():
                flat["output" if (key, inner) == ("output", "path") else inner] = inner_value
        else:
            flat[key] = value
    return flat


def build_run_config(command: str, flags: Dict[str, Any], file_values: Dict[str, Any]) -> RunConfig:
    """Defaults, then command-line flags, then the config file."""
    merged: Dict[str, Any] = {}
    merged.update({k: v for k, v in flags.items() if v is not None})
    merged.update(file_values)

    known = {f.name for f in fields(RunConfig)}
    gains = dict(merged.pop("channel_gains", None) or {})
    values: Dict[str, Any] = {"command": command}
    for key, value in merged.items():
        if key in ALL_GAINS:
            gains[key] = float(value)
        elif key in known and key != "command":
            values[key] = value
        elif key not in ("config", "command"):
            raise ValidationError(f"unknown configuration key '{key}'", field=key)
    values["channel_gains"] = gains
    config = RunConfig(**values)
    if config.output_format not in ("json", "csv", "text"):
        raise ValidationError(f"unknown output format '{config.format}'", field="format")
    return config


def parse_source(value: Any) -> JointSourcePMF:
    """'dsbs:p', a JSON matrix literal, or a nested list."""
    if isinstance(value, JointSourcePMF):
        return value
    if isinstance(value, (list, tuple)):
        return JointSourcePMF.from_literal(value)
    text = str(value).strip()
    if text.lower().startswith("dsbs:"):
        try:
            return make_dsbs(float(text.split(":", 1)[1]))
        except ValueError as e:
            if isinstance(e, ValidationError):
                raise
            raise ValidationError(f"bad DSBS crossover in '{text}'", field="source")
    try:
        return JointSourcePMF.from_literal(json.loads(text))
    except (json.JSONDecodeError, TypeError):
        raise ValidationError(f"source must be 'dsbs:p' or a JSON matrix, got '{text}'",
                              field="source")


@dataclass
class CommandResult:
    record: Dict[str, Any]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    columns: List[str] = field(default_factory=list)
    text: Optional[str] = None


def _json_ready(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Enum):
        return value.value
    return value


def render(result: CommandResult, fmt: str, config: Dict[str, Any]) -> str:
    """The exact bytes an output file receives."""
    config = _json_ready(config)
    if fmt == "json":
        document = dict(_json_ready(result.record))
        document["config"] = config
        return json.dumps(document, indent=2) + "\n"
    if fmt == "text":
        body = result.text if result.text is not None \
            else json.dumps(_json_ready(result.record), indent=2) + "\n"
        return f"# config: {json.dumps(config, sort_keys=True)}\n" + body
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=result.columns, lineterminator="\n",
                            extrasaction="ignore")
    writer.writeheader()
    for row in result.rows:
        writer.writerow(_json_ready(row))
    return buffer.getvalue()


def config_sidecar(destination: str) -> str:
    return destination + ".config.json"


def emit(result: CommandResult, fmt: str, destination: Optional[str], config: Dict[str, Any]) -> None:
    """Write a result to stdout or a file.

    CSV stays plain CSV: its configuration goes to a `<file>.config.json` sidecar,
    or to stderr when the rows go to stdout.
    """
    payload = render(result, fmt, config)
    echo = json.dumps(_json_ready(config), sort_keys=True)
    if destination in (None, "", "-"):
        if fmt == "csv":
            sys.stderr.write(f"# config: {echo}\n")
        sys.stdout.write(payload)
        sys.stdout.flush()
        return
    with open(destination, "w", newline="") as f:
        f.write(payload)
    if fmt == "csv":
        with open(config_sidecar(destination), "w") as f:
            f.write(echo + "\n")
    log(f"wrote {fmt} output to {destination}", "SUCCESS")


class SeparationRunner:
    """Runs one configured command."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.verbose = config.verbose

    # -- inputs -------------------------------------------------------------

    def channel(self) -> ChannelSpec:
        cfg = self.config
        if not cfg.topology:
            raise ArgumentError(f"{cfg.command} needs --topology", field="topology")
        data = dict(cfg.channel_gains)
        data.update({"p1": cfg.p1, "p2": cfg.p2, "pr": cfg.pr, "noise": cfg.noise})
        topology = Topology.parse(cfg.topology)
        spec = channel_from_mapping(data, topology)
        stray = [g for g in cfg.channel_gains if g not in gain_names(topology)]
        if stray:
            spec = spec.with_gains(**{g: cfg.channel_gains[g] for g in stray})
        return spec

    def source(self, required: bool = False) -> Optional[JointSourcePMF]:
        if self.config.source is None:
            if required:
                raise ArgumentError(f"{self.config.command} needs --source", field="source")
            return None
        return parse_source(self.config.source)

    # -- commands -----------------------------------------------------------

    def run_region(self) -> CommandResult:
        spec = self.channel()
        region = compute_region(spec)
        record: Dict[str, Any] = region.as_dict()
        record["rate_constraints"] = [asdict(c) for c in achievable_rate_constraints(spec)]
        pmf = self.source()
        if pmf is not None:
            triple = entropy_triple(pmf)
            record["source"] = triple.as_dict()
            record["feasibility"] = is_feasible(triple, region, Boundary(self.config.boundary)).as_dict()
        if self.config.pretty:
            print_table(f"{spec.topology.value} region ({region.provenance})", ["bound", "bits"],
                        [[k, "-" if v is None else f"{v:.6f}"] for k, v in region.bounds().items()])
        row = {k: v for k, v in region.bounds().items()}
        row["topology"] = spec.topology.value
        if "feasibility" in record:
            row["feasible"] = record["feasibility"]["feasible"]
        return CommandResult(record, [row], list(row))

    def run_check(self) -> CommandResult:
        spec = self.channel()
        pmf = self.source()
        triple = entropy_triple(pmf) if pmf is not None else None
        report = check_gain_conditions(spec, triple,
                                       MarcConditionVariant(self.config.marc_condition_variant))
        record: Dict[str, Any] = {
            "topology": spec.topology.value,
            "all_satisfied": report.all_satisfied,
            "conditions": report.as_rows(),
        }
        if triple is not None:
            record["source"] = triple.as_dict()
            record["feasibility"] = is_feasible(triple, compute_region(spec),
                                                Boundary(self.config.boundary)).as_dict()
        for failed in report.failed():
            log(f"condition not satisfied: {failed.name} (slack {failed.slack:.3g})", "WARNING")
        columns = ["name", "lhs", "rhs", "satisfied", "slack", "tolerance", "strict"]
        return CommandResult(record, report.as_rows(), columns)

    def _lemma_rho(self, m: int) -> Optional[np.ndarray]:
        rho = self.config.rho
        if rho is None:
            return None
        if isinstance(rho, (int, float)):
            if m != 2:
                raise ArgumentError("--rho is the two-branch shorthand |rho_12|; give the full "
                                    "matrix in a config file for more branches", field="rho")
            value = float(rho) * complex(math.cos(self.config.rho_phase), math.sin(self.config.rho_phase))
            return np.array([[1.0, value], [value.conjugate(), 1.0]])
        matrix = [[complex(*entry) if isinstance(entry, (list, tuple)) else complex(entry)
                   for entry in row] for row in rho]
        return np.array(matrix, dtype=complex)

    def run_lemma(self) -> CommandResult:
        cfg = self.config
        if not cfg.gains:
            raise ArgumentError("lemma needs --gains", field="gains")
        powers = cfg.powers if cfg.powers else [1.0] * len(cfg.gains)
        base = GaussianInputSpec.independent(cfg.gains, powers, cfg.noise)
        rho = self._lemma_rho(base.m)
        spec = base if rho is None else base.with_rho(rho)

        minimax = min_theta_mi(spec, grid_points=cfg.grid_points, workers=cfg.workers)
        ergodic = ergodic_avg_mi(spec, mc_samples=cfg.mc_samples, seed=cfg.seed)
        closed = ergodic_avg_mi_closed_form(spec) if spec.m == 2 else None
        independence = verify_independence_optimal(cfg.gains, powers, cfg.noise, cfg.rho_samples,
                                                   cfg.seed, grid_points=cfg.grid_points,
                                                   workers=cfg.workers)
        if independence.holds:
            log(f"independent inputs are optimal over {independence.samples} correlations", "SUCCESS")
        record = {
            "m": spec.m,
            "minimax": minimax.as_dict(),
            "ergodic": ergodic.as_dict(),
            "ergodic_closed_form": closed,
            "independence": independence.as_dict(),
        }
        row = {
            "m": spec.m,
            "minimax_value": minimax.value,
            "minimax_method": minimax.method,
            "grid_resolution": minimax.grid_resolution,
            "ergodic_value": ergodic.value,
            "ergodic_stderr": ergodic.stderr,
            "ergodic_method": ergodic.method,
            "independent_value": independence.independent_value,
            "max_over_rho_of_min": independence.max_over_rho_of_min,
            "rho_samples": independence.samples,
            "holds": independence.holds,
        }
        return CommandResult(record, [row], list(row))

    def run_simulate(self) -> CommandResult:
        cfg = self.config
        if not cfg.seed:
            raise ArgumentError("simulate needs an explicit nonzero --seed", field="seed")
        if not cfg.rates or len(cfg.rates) != 2:
            raise ArgumentError("simulate needs --rates R1 R2", field="rates")
        spec = self.channel()
        pmf = self.source(required=True)
        theta = PhaseVector(tuple(cfg.theta)) if cfg.theta is not None else None
        common = dict(rates=[float(r) for r in cfg.rates], n=int(cfg.n), trials=int(cfg.trials),
                      phase_mode=cfg.phase_mode, seed=int(cfg.seed), theta=theta,
                      noise_scale=float(cfg.noise_scale), sup_grid=int(cfg.sup_grid),
                      workers=int(cfg.workers))
        log(f"simulating {spec.topology.value}: {cfg.trials} trials, n={cfg.n}", "STAGE")
        if spec.topology is Topology.MAC:
            outcome = simulate_mac_e2e(pmf, spec, **common)
        elif spec.topology in DF_TOPOLOGIES:
            outcome = simulate_marc_df(pmf, spec, blocks=int(cfg.blocks), **common)
        else:
            raise ArgumentError(f"no simulation for topology {spec.topology.value}", field="topology")
        record = outcome.as_dict()
        record["run"] = record.pop("config")
        record["rows"] = outcome.rows()
        return CommandResult(record, outcome.rows(), list(SIMULATE_COLUMNS))

    def run_schedule(self) -> CommandResult:
        cfg = self.config
        if not cfg.topology:
            raise ArgumentError("schedule needs --topology", field="topology")
        schedule = build_schedule(Topology.parse(cfg.topology), int(cfg.blocks))
        text = format_schedule(schedule)
        if cfg.pretty:
            header = ["encoder"] + [str(t) for t in range(1, schedule.blocks + 2)]
            print_table(f"{schedule.topology.value} block-Markov schedule", header,
                        [[enc] + [",".join(str(s) for s in slots) for slots in blocks]
                         for enc, blocks in schedule.rows.items()])
        rows = [{"encoder": r["encoder"], "block": r["block"], "slots": " ".join(r["slots"])}
                for r in schedule.as_rows()]
        record = {"topology": schedule.topology.value, "blocks": schedule.blocks,
                  "rows": schedule.as_rows()}
        return CommandResult(record, rows, ["encoder", "block", "slots"], text)

    def dispatch(self) -> CommandResult:
        if self.config.command not in COMMANDS:
            raise ArgumentError(f"unknown command '{self.config.command}'", field="command")
        log(f"running {self.config.command}", "INFO")
        return getattr(self, f"run_{self.config.command}")()

    def execute(self) -> None:
        result = self.dispatch()
        emit(result, self.config.output_format, self.config.output, self.config.as_dict())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=None, help="Enable verbose logging")
    common.add_argument("--config", type=str, help="YAML or JSON configuration file (overrides flags)")
    common.add_argument("--format", choices=["json", "csv", "text"], help="Output format")
    common.add_argument("--output", type=str, help="Output file (default: stdout)")
    common.add_argument("--workers", type=int, help="Worker threads (default: available cores)")
    common.add_argument("--pretty", action="store_true", default=None, help="Also render a table on stderr")

    channel = argparse.ArgumentParser(add_help=False)
    channel.add_argument("--topology", type=str,
                         help="One of: " + ", ".join(t.value for t in Topology))
    for gain in ALL_GAINS:
        channel.add_argument(f"--{gain}", type=float, help=f"Path gain {gain} (amplitude)")
    channel.add_argument("--p1", type=float, help="Power of encoder 1 (default 1)")
    channel.add_argument("--p2", type=float, help="Power of encoder 2 (default 1)")
    channel.add_argument("--pr", type=float, help="Relay power (default 0)")
    channel.add_argument("--noise", type=float, help="Noise power N (default 1)")
    channel.add_argument("--source", type=str, help="Source PMF: 'dsbs:p' or a JSON matrix")

    parser = argparse.ArgumentParser(
        prog="pi-sep",
        description=f"pi-separation {__version__} - source-channel separation over phase-incoherent "
                    "multi-user channels. Rates in bits per channel use, angles in radians.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    region = sub.add_parser("region", parents=[common, channel], help="Region bounds on the entropy triple")
    region.add_argument("--boundary", choices=[b.value for b in Boundary])

    check = sub.add_parser("check", parents=[common, channel], help="Gain conditions of a topology")
    check.add_argument("--boundary", choices=[b.value for b in Boundary])
    check.add_argument("--marc-condition-variant", choices=[v.value for v in MarcConditionVariant])

    lemma = sub.add_parser("lemma", parents=[common], help="Worst-phase Gaussian mutual information")
    lemma.add_argument("--gains", type=float, nargs="+", help="Branch gains g_i")
    lemma.add_argument("--powers", type=float, nargs="+", help="Branch powers P_i (default 1 each)")
    lemma.add_argument("--noise", type=float, help="Noise power N (default 1)")
    lemma.add_argument("--rho", type=float, help="Two-branch correlation magnitude |rho_12|")
    lemma.add_argument("--rho-phase", type=float, help="Phase of rho_12 in radians")
    lemma.add_argument("--rho-samples", type=int, help="Random correlation matrices to test (default 200)")
    lemma.add_argument("--grid-points", type=int, help="Phase grid points per dimension (default 64)")
    lemma.add_argument("--mc-samples", type=int, help="Monte-Carlo samples for ergodic averages")
    lemma.add_argument("--seed", type=int, help="Random seed")

    simulate = sub.add_parser("simulate", parents=[common, channel], help="End-to-end error rates")
    simulate.add_argument("--rates", type=float, nargs=2, metavar=("R1", "R2"), help="Rates in bits/symbol")
    simulate.add_argument("--n", type=int, help="Block length (default 8)")
    simulate.add_argument("--blocks", type=int, help="Message blocks B for relay topologies (default 2)")
    simulate.add_argument("--trials", type=int, help="Monte-Carlo trials (default 200)")
    simulate.add_argument("--seed", type=int, help="Random seed (required, nonzero)")
    simulate.add_argument("--phase-mode", choices=["random", "fixed", "ergodic", "worst_case"])
    simulate.add_argument("--theta", type=float, nargs="+", help="Phases for --phase-mode fixed")
    simulate.add_argument("--noise-scale", type=float, help="Multiplier on N (0 = noiseless)")
    simulate.add_argument("--sup-grid", type=int, help="Phase grid points for worst_case mode")

    schedule = sub.add_parser("schedule", parents=[common], help="Block-Markov encoding table")
    schedule.add_argument("--topology", type=str, help="marc, uncc_marc, ucc_marc or irc")
    schedule.add_argument("--blocks", type=int, help="Message blocks B (default 2)")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    set_verbose(bool(flags.get("verbose")))
    try:
        config = build_run_config(args.command, flags, _load_config(args.config))
        set_verbose(config.verbose)
        SeparationRunner(config).execute()
    except BudgetError as e:
        log(f"{e} (reduce n or the rates)", "ERROR")
        return 3
    except (ValidationError, ArgumentError) as e:
        where = f" [{e.field}]" if getattr(e, "field", None) else ""
        log(f"{e}{where}", "ERROR")
        return 2
    except OSError as e:
        log(f"cannot write output: {e}", "ERROR")
        return 2
    except PiSepError as e:
        log(str(e), "ERROR")
        return 2
    return 0


def main():
    """Console entry point."""
    if not sys.stderr.isatty():
        Colors.disable()
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        log("Interrupted by user", "WARNING")
        sys.exit(1)


if __name__ == "__main__":
    main()
