"""Command-line scenario runner: analytic curves, Monte Carlo curves and comparisons as CSV."""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import re
import sys
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from . import perf, simulator
from .errors import (
    AccuracyError,
    CapabilityError,
    ConvergenceError,
    DivergenceError,
    HetAdHocError,
)
from .model import DistributionSpec, NetworkConfig, PowerControlSpec, TypeClassConfig
from .sirdist import CancellationSpec

__all__ = [
    "ScenarioError",
    "Scenario",
    "SweepSpec",
    "SimulationSpec",
    "OutputSpec",
    "ResultRow",
    "PRESETS",
    "parse_scenario",
    "dump_scenario",
    "load_preset",
    "cmd_eval",
    "cmd_sim",
    "cmd_compare",
    "cmd_sweep",
    "format_rows",
    "main",
]

EXIT_OK, EXIT_PARSE, EXIT_TOLERANCE, EXIT_NUMERIC = 0, 2, 3, 4
THREADS_ENV = "HETADHOC_THREADS"
METRICS = ("success_prob", "ergodic_capacity", "throughput")
SWEEP_VARIABLES = ("lambda1", "theta", "cancel", "gamma")
COLUMNS = (
    "sweep_value", "type_index", "metric_name", "analytic",
    "mc_mean", "mc_stderr", "rel_err", "flags",
)
DEFAULT_TOLERANCE = 0.01
# below this many replications the normal approximation behind the 4-sigma rule is not trusted
MIN_TEST_REPLICATIONS = 100


class ScenarioError(HetAdHocError, ValueError):
    """Invalid scenario document; ``line`` and ``column`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)
        self.line, self.column = line, column


# ---------------------------------------------------------------------------
# Scenario document
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class SimulationSpec:
    replications: int = 20_000
    seed: int = 1
    window: float | None = None


@dataclass(frozen=True)
class OutputSpec:
    metrics: tuple[str, ...] = METRICS
    path: str | None = None
    tolerance: tuple[tuple[str, float], ...] = ()

    def tolerance_for(self, metric: str) -> float:
        return dict(self.tolerance).get(metric, DEFAULT_TOLERANCE)


@dataclass(frozen=True)
class Scenario:
    net: NetworkConfig
    sweep: SweepSpec | None = None
    simulation: SimulationSpec | None = None
    outputs: OutputSpec = field(default_factory=OutputSpec)


class _Node:
    """Plain value plus the source position of the YAML node it came from."""

    __slots__ = ("value", "line", "column")

    def __init__(self, value, mark):
        self.value = value
        self.line = mark.line + 1 if mark is not None else None
        self.column = mark.column + 1 if mark is not None else None

    def error(self, message: str) -> ScenarioError:
        return ScenarioError(message, self.line, self.column)


def _construct(node: yaml.Node) -> _Node:
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = _construct(key_node)
            if not isinstance(key.value, str):
                raise key.error("mapping keys must be strings")
            if key.value in out:
                raise key.error(f"duplicate key {key.value!r}")
            out[key.value] = _construct(value_node)
        return _Node(out, node.start_mark)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_construct(v) for v in node.value], node.start_mark)
    return _Node(yaml.SafeLoader("").construct_object(node), node.start_mark)


def _mapping(node: _Node, allowed: Iterable[str], what: str) -> dict[str, _Node]:
    if not isinstance(node.value, dict):
        raise node.error(f"{what} must be a mapping")
    allowed = tuple(allowed)
    for key, child in node.value.items():
        if key not in allowed:
            raise ScenarioError(
                f"unknown key {key!r} in {what} (allowed: {', '.join(allowed)})",
                child.line, child.column,
            )
    return node.value


def _number(node: _Node, what: str, *, positive=False, integer=False, minimum=None) -> float:
    value = node.value
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise node.error(f"{what} must be a number") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise node.error(f"{what} must be a number")
    if not math.isfinite(value):
        raise node.error(f"{what} must be finite")
    if integer:
        if int(value) != value:
            raise node.error(f"{what} must be an integer")
        value = int(value)
    if positive and not value > 0:
        raise node.error(f"{what} must be positive")
    if minimum is not None and value < minimum:
        raise node.error(f"{what} must be at least {minimum}")
    return value


def _distribution(node: _Node, what: str, unit_mean: bool = False) -> DistributionSpec:
    if not isinstance(node.value, (dict, str)):
        return DistributionSpec.constant(_number(node, what, positive=True))
    if isinstance(node.value, str):
        name = node.value.lower()
        if name in ("exponential", "rayleigh"):
            return DistributionSpec.exponential()
        if name in ("none", "constant"):
            return DistributionSpec.constant(1.0)
        try:
            return DistributionSpec.constant(_number(node, what, positive=True))
        except ScenarioError:
            raise node.error(f"unknown {what} law {node.value!r}") from None
    spec = _mapping(node, ("kind", "mean", "shape"), what)
    if "kind" not in spec:
        raise node.error(f"{what} needs a 'kind'")
    kind = str(spec["kind"].value).lower()
    mean = 1.0 if unit_mean or "mean" not in spec else _number(spec["mean"], f"{what} mean", positive=True)
    if unit_mean and "mean" in spec:
        raise spec["mean"].error(f"{what} is normalized to unit mean; drop 'mean'")
    if kind == "constant":
        return DistributionSpec.constant(mean)
    if kind in ("exponential", "rayleigh"):
        return DistributionSpec.exponential(mean)
    if kind in ("gamma", "nakagami"):
        if "shape" not in spec:
            raise node.error(f"{what} of kind gamma needs a 'shape'")
        return DistributionSpec.gamma(_number(spec["shape"], f"{what} shape", positive=True), mean)
    raise spec["kind"].error(f"unknown {what} kind {kind!r}")


_TYPE_KEYS = ("intensity", "power", "fading", "distance", "gamma", "antennas")


def _parse_type(node: _Node, index: int) -> TypeClassConfig:
    what = f"network.types[{index}]"
    spec = _mapping(node, _TYPE_KEYS, what)
    if "intensity" not in spec:
        raise node.error(f"{what} needs an 'intensity'")
    kwargs: dict[str, Any] = {
        "intensity": _number(spec["intensity"], "intensity", positive=True),
    }
    if "power" in spec:
        kwargs["power"] = _distribution(spec["power"], "power")
    if "fading" in spec:
        kwargs["fading"] = _distribution(spec["fading"], "fading", unit_mean=True)
    if "distance" in spec:
        kwargs["distance"] = DistributionSpec.constant(
            _number(spec["distance"], "distance", minimum=1.0)
        )
    if "gamma" in spec:
        gamma = _number(spec["gamma"], "gamma")
        if not gamma > -1.0:
            raise spec["gamma"].error("gamma must exceed -1")
        kwargs["pc_exponent"] = float(gamma)
    if "antennas" in spec:
        kwargs["rx_antennas"] = _number(spec["antennas"], "antennas", integer=True, minimum=1)
    try:
        t = TypeClassConfig(**kwargs)
    except ValueError as exc:
        raise node.error(str(exc)) from None
    if t.pc_exponent != 0.0 and not t.power.is_constant:
        raise node.error("power control needs a constant mean power")
    return t


def _parse_network(node: _Node) -> NetworkConfig:
    spec = _mapping(node, ("types", "alpha", "theta", "cancel"), "network")
    if "types" not in spec or not isinstance(spec["types"].value, list) or not spec["types"].value:
        raise node.error("network needs a non-empty 'types' list")
    types = tuple(_parse_type(t, i) for i, t in enumerate(spec["types"].value))
    alpha = _number(spec["alpha"], "alpha") if "alpha" in spec else 4.0
    if not alpha > 2.0:
        raise spec["alpha"].error("alpha must exceed 2")
    theta = _number(spec["theta"], "theta", positive=True) if "theta" in spec else 1.0
    cancel = _number(spec["cancel"], "cancel", integer=True, minimum=0) if "cancel" in spec else 0
    return NetworkConfig(types, float(alpha), float(theta), int(cancel))


def _parse_sweep(node: _Node) -> SweepSpec:
    spec = _mapping(node, ("variable", "values", "grid"), "sweep")
    if "variable" not in spec:
        raise node.error("sweep needs a 'variable'")
    variable = spec["variable"].value
    if variable not in SWEEP_VARIABLES:
        raise spec["variable"].error(
            f"unknown sweep variable {variable!r} (allowed: {', '.join(SWEEP_VARIABLES)})"
        )
    if ("values" in spec) == ("grid" in spec):
        raise node.error("sweep needs exactly one of 'values' or 'grid'")
    if "values" in spec:
        if not isinstance(spec["values"].value, list):
            raise spec["values"].error("values must be a list")
        values = tuple(float(_number(v, "sweep value")) for v in spec["values"].value)
    else:
        grid = _mapping(spec["grid"], ("start", "stop", "num", "scale"), "sweep.grid")
        for key in ("start", "stop", "num"):
            if key not in grid:
                raise spec["grid"].error(f"sweep.grid needs '{key}'")
        start = _number(grid["start"], "start")
        stop = _number(grid["stop"], "stop")
        num = _number(grid["num"], "num", integer=True, minimum=0)
        scale = grid["scale"].value if "scale" in grid else "log"
        if scale not in ("log", "linear"):
            raise grid["scale"].error("scale must be 'log' or 'linear'")
        if scale == "log":
            if not (start > 0 and stop > 0):
                raise spec["grid"].error("log grids need positive start and stop")
            values = tuple(np.geomspace(start, stop, num).tolist())
        else:
            values = tuple(np.linspace(start, stop, num).tolist())
    return SweepSpec(variable, values)


def _parse_simulation(node: _Node) -> SimulationSpec:
    spec = _mapping(node, ("replications", "seed", "window"), "simulation")
    reps = _number(spec["replications"], "replications", integer=True, minimum=1) if "replications" in spec else 20_000
    seed = _number(spec["seed"], "seed", integer=True, minimum=0) if "seed" in spec else 1
    window = None
    if "window" in spec and spec["window"].value != "auto":
        window = float(_number(spec["window"], "window", positive=True))
    return SimulationSpec(int(reps), int(seed), window)


def _parse_outputs(node: _Node) -> OutputSpec:
    spec = _mapping(node, ("metrics", "path", "tolerance"), "outputs")
    metrics = METRICS
    if "metrics" in spec:
        if not isinstance(spec["metrics"].value, list):
            raise spec["metrics"].error("metrics must be a list")
        metrics = []
        for m in spec["metrics"].value:
            if m.value not in METRICS:
                raise m.error(f"unknown metric {m.value!r} (allowed: {', '.join(METRICS)})")
            metrics.append(m.value)
        metrics = tuple(metrics)
    path = str(spec["path"].value) if "path" in spec else None
    tolerance = ()
    if "tolerance" in spec:
        tol = _mapping(spec["tolerance"], METRICS, "outputs.tolerance")
        tolerance = tuple(
            (k, float(_number(v, f"tolerance {k}", positive=True))) for k, v in tol.items()
        )
    return OutputSpec(metrics, path, tolerance)


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document; unknown keys are rejected."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ScenarioError(
            f"YAML syntax error: {exc.problem}",
            mark.line + 1 if mark else None,
            mark.column + 1 if mark else None,
        ) from None
    if root is None:
        raise ScenarioError("empty scenario document")
    doc = _mapping(_construct(root), ("network", "sweep", "simulation", "outputs"), "scenario")
    if "network" not in doc:
        raise ScenarioError("scenario needs a 'network' section", 1, 1)
    return Scenario(
        net=_parse_network(doc["network"]),
        sweep=_parse_sweep(doc["sweep"]) if "sweep" in doc else None,
        simulation=_parse_simulation(doc["simulation"]) if "simulation" in doc else None,
        outputs=_parse_outputs(doc["outputs"]) if "outputs" in doc else OutputSpec(),
    )


def _dist_doc(d: DistributionSpec, unit_mean: bool = False):
    if d.is_constant and not unit_mean:
        return d.mean
    if d.is_constant:
        return "constant"
    if d.kind == "exponential":
        return "exponential" if unit_mean else {"kind": "exponential", "mean": d.mean}
    doc = {"kind": "gamma", "shape": d.shape}
    if not unit_mean:
        doc["mean"] = d.mean
    return doc


def dump_scenario(scenario: Scenario) -> str:
    """Serialize a scenario so that ``parse_scenario(dump_scenario(s)) == s``."""
    net = scenario.net
    doc: dict[str, Any] = {
        "network": {
            "alpha": net.alpha,
            "theta": net.theta,
            "cancel": net.cancel_count,
            "types": [
                {
                    "intensity": t.intensity,
                    "power": _dist_doc(t.power),
                    "fading": _dist_doc(t.fading, unit_mean=True),
                    "distance": t.link_distance,
                    "gamma": t.pc_exponent,
                    "antennas": t.rx_antennas,
                }
                for t in net.types
            ],
        }
    }
    if scenario.sweep is not None:
        doc["sweep"] = {"variable": scenario.sweep.variable, "values": list(scenario.sweep.values)}
    if scenario.simulation is not None:
        sim = scenario.simulation
        doc["simulation"] = {
            "replications": sim.replications,
            "seed": sim.seed,
            "window": "auto" if sim.window is None else sim.window,
        }
    out = scenario.outputs
    doc["outputs"] = {"metrics": list(out.metrics)}
    if out.path is not None:
        doc["outputs"]["path"] = out.path
    if out.tolerance:
        doc["outputs"]["tolerance"] = dict(out.tolerance)
    return yaml.safe_dump(doc, sort_keys=False)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_TABLE1 = """
network:
  alpha: 4
  theta: 1
  cancel: {cancel}
  types:
    - {{intensity: 1.0e-4, power: 1.0, fading: {fading}, distance: 10, gamma: {gamma}, antennas: {antennas}}}
    - {{intensity: 5.0e-4, power: 0.5, fading: {fading}, distance: 10, gamma: {gamma}, antennas: {antennas}}}
    - {{intensity: 1.0e-3, power: 0.05, fading: {fading}, distance: 10, gamma: {gamma}, antennas: {antennas}}}
sweep:
  variable: lambda1
  grid: {{start: 1.0e-5, stop: 1.0e-3, num: 17, scale: log}}
simulation:
  replications: 20000
  seed: 1
  window: auto
outputs:
  metrics: [success_prob, ergodic_capacity, throughput]
"""

PRESETS = {
    "table1": dict(fading="exponential", gamma=0.0, antennas=1, cancel=0),
    "table1-nofading": dict(fading="none", gamma=0.0, antennas=1, cancel=0),
    "table1-simo4": dict(fading="exponential", gamma=0.0, antennas=4, cancel=0),
}
_PC_PRESET = re.compile(r"^table1-pc\(?(-?[0-9.]+(?:e-?[0-9]+)?)\)?$")
_CANCEL_PRESET = re.compile(r"^table1-cancel\(?([0-9]+)\)?$")


def preset_text(name: str) -> str:
    """Scenario document for a named preset.

    ``table1-pc(g)`` (or ``table1-pcg``) applies exponent ``g`` to every type;
    ``table1-cancel(L)`` cancels the ``L`` strongest interferers.
    """
    if name in PRESETS:
        return _TABLE1.format(**PRESETS[name])
    m = _PC_PRESET.match(name)
    if m:
        return _TABLE1.format(fading="exponential", gamma=float(m.group(1)), antennas=1, cancel=0)
    m = _CANCEL_PRESET.match(name)
    if m:
        return _TABLE1.format(fading="exponential", gamma=0.0, antennas=1, cancel=int(m.group(1)))
    raise ScenarioError(
        f"unknown preset {name!r}; available: {', '.join(PRESETS)}, table1-pc(<gamma>), "
        "table1-cancel(<L>)"
    )


def load_preset(name: str) -> Scenario:
    return parse_scenario(preset_text(name))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    sweep_value: float | None
    type_index: int
    metric_name: str
    analytic: float | None = None
    mc_mean: float | None = None
    mc_stderr: float | None = None
    rel_err: float | None = None
    flags: str = ""


def _apply_sweep(net: NetworkConfig, variable: str | None, value: float | None) -> NetworkConfig:
    if variable is None:
        return net
    if variable == "lambda1":
        return net.with_first_intensity(value)
    if variable == "theta":
        return net.with_theta(value)
    if variable == "cancel":
        if int(value) != value or value < 0:
            raise ScenarioError(f"cancel sweep values must be nonnegative integers, got {value}")
        return replace(net, cancel_count=int(value))
    if variable == "gamma":
        return net.with_types(pc_exponent=float(value))
    raise ScenarioError(f"unknown sweep variable {variable!r}")


def _variant(net: NetworkConfig):
    """Split a configured network into the base network and its cancellation / PC options."""
    pc_active = any(t.pc_exponent != 0.0 for t in net.types)
    if pc_active and net.cancel_count > 0:
        raise CapabilityError("combined cancellation and power control is not modelled")
    cancel = CancellationSpec(net.cancel_count) if net.cancel_count > 0 else None
    pc = None
    base = net
    if pc_active:
        pc = PowerControlSpec(
            tuple(t.pc_exponent for t in net.types), tuple(t.power.mean for t in net.types)
        )
        base = net.with_types(pc_exponent=0.0)
    return base, cancel, pc


def _suffix(cancel, pc) -> str:
    return "_cancel" if cancel is not None else "_pc" if pc is not None else ""


def _flag_words(net: NetworkConfig, records) -> list[str]:
    words = []
    if any(t.rx_antennas > 1 for t in net.types):
        words.append("simo")
    for rec in records:
        name = rec.category.__name__
        if name not in words:
            words.append(name)
    return words


def _analytic_point(net: NetworkConfig, metrics: Sequence[str]) -> list[tuple[int, str, float, list]]:
    base, cancel, pc = _variant(net)
    suffix = _suffix(cancel, pc)
    out = []
    for metric in metrics:
        targets = [0] if metric == "throughput" else [k + 1 for k in range(net.K)]
        for idx in targets:
            k = idx - 1
            with warnings.catch_warnings(record=True) as records:
                warnings.simplefilter("always")
                if metric == "success_prob":
                    if cancel is not None:
                        value = perf.success_prob_cancel(base, cancel, net.theta, k)
                    elif pc is not None:
                        value = perf.success_prob_pc(base, pc, net.theta, k, numeric=True).value
                    else:
                        value = perf.success_prob(base, net.theta, k)
                elif metric == "ergodic_capacity":
                    if cancel is not None:
                        value = perf.ergodic_capacity_cancel(base, cancel, k)
                    elif pc is not None:
                        value = perf.ergodic_capacity_pc(base, pc, k)
                    else:
                        value = perf.ergodic_capacity(base, k)
                else:
                    value = perf.throughput_capacity(base, net.theta, cancel=cancel, pc=pc).C
            out.append((idx, metric + suffix, float(value), _flag_words(net, records)))
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _mc_point(net: NetworkConfig, sim: SimulationSpec, metrics: Sequence[str]):
    scenario = simulator.SimScenario(
        net, replications=sim.replications, seed=sim.seed, window_radius=sim.window
    )
    with warnings.catch_warnings(record=True) as records:
        warnings.simplefilter("always")
        draws = simulator.simulate(scenario, workers=_threads())
        base, cancel, pc = _variant(net)
        suffix = _suffix(cancel, pc)
        out = []
        for metric in metrics:
            if metric == "throughput":
                out.append((0, metric + suffix, draws.throughput(net.theta)))
                continue
            for k in range(net.K):
                est = (
                    draws.success_prob(net.theta, k)
                    if metric == "success_prob"
                    else draws.ergodic_capacity(k)
                )
                out.append((k + 1, metric + suffix, est))
    return out, _flag_words(net, records)


def _sweep_points(scenario: Scenario):
    if scenario.sweep is None:
        return [(None, scenario.net)]
    return [
        (v, _apply_sweep(scenario.net, scenario.sweep.variable, v)) for v in scenario.sweep.values
    ]


def cmd_eval(scenario: Scenario) -> list[ResultRow]:
    """Analytic rows over the sweep grid."""
    rows = []
    for value, net in _sweep_points(scenario):
        for idx, name, analytic, flags in _analytic_point(net, scenario.outputs.metrics):
            rows.append(ResultRow(value, idx, name, analytic, flags=";".join(flags)))
    return rows


def _require_simulation(scenario: Scenario) -> SimulationSpec:
    return scenario.simulation or SimulationSpec()


def cmd_sim(scenario: Scenario) -> list[ResultRow]:
    """Monte Carlo rows over the sweep grid."""
    sim = _require_simulation(scenario)
    rows = []
    for value, net in _sweep_points(scenario):
        results, flags = _mc_point(net, sim, scenario.outputs.metrics)
        for idx, name, est in results:
            rows.append(
                ResultRow(value, idx, name, mc_mean=est.mean, mc_stderr=est.stderr,
                          flags=";".join(flags))
            )
    return rows


def _merge(analytic_rows, mc_rows) -> list[ResultRow]:
    merged = []
    for a, m in zip(analytic_rows, mc_rows):
        rel = abs(a.analytic - m.mc_mean) / max(abs(a.analytic), 1e-300)
        flags = ";".join(dict.fromkeys(f for f in (a.flags + ";" + m.flags).split(";") if f))
        merged.append(replace(a, mc_mean=m.mc_mean, mc_stderr=m.mc_stderr, rel_err=rel, flags=flags))
    return merged


def _breach(row: ResultRow, tolerance: float, replications: int) -> bool:
    """Deviation exceeds both the relative tolerance and four standard errors.

    Success probabilities use the larger of the sample standard error and the
    binomial standard error implied by the analytic value, so that tiny runs
    with all-equal outcomes are not misread as exact.
    """
    sigma = row.mc_stderr
    if row.metric_name.startswith("success_prob"):
        a = min(max(row.analytic, 0.0), 1.0)
        sigma = max(sigma, math.sqrt(max(a * (1.0 - a), 1.0 / replications) / replications))
    deviation = abs(row.analytic - row.mc_mean)
    return deviation > max(tolerance * abs(row.analytic), 4.0 * sigma)


def cmd_compare(scenario: Scenario) -> tuple[list[ResultRow], list[ResultRow]]:
    """Analytic and Monte Carlo rows side by side; returns ``(rows, breaches)``.

    Runs with fewer than ``MIN_TEST_REPLICATIONS`` replications are reported
    with a ``small_sample`` flag and never breach.
    """
    sim = _require_simulation(scenario)
    rows = _merge(cmd_eval(scenario), cmd_sim(replace(scenario, simulation=sim)))
    out, breaches = [], []
    for row in rows:
        base_metric = next(m for m in METRICS if row.metric_name.startswith(m))
        if sim.replications < MIN_TEST_REPLICATIONS:
            out.append(replace(row, flags=";".join(f for f in (row.flags, "small_sample") if f)))
            continue
        if _breach(row, scenario.outputs.tolerance_for(base_metric), sim.replications):
            row = replace(row, flags=";".join(f for f in (row.flags, "breach") if f))
            breaches.append(row)
        out.append(row)
    return out, breaches


def cmd_sweep(scenario: Scenario) -> list[ResultRow]:
    """Full sweep: analytic rows, merged with Monte Carlo when a simulation section exists."""
    if scenario.simulation is None:
        return cmd_eval(scenario)
    return _merge(cmd_eval(scenario), cmd_sim(scenario))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.11e}"


def format_rows(rows: Iterable[ResultRow]) -> str:
    """CSV text with a fixed header and 12-significant-digit numbers."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow(
            [
                _fmt(r.sweep_value), str(r.type_index), r.metric_name, _fmt(r.analytic),
                _fmt(r.mc_mean), _fmt(r.mc_stderr), _fmt(r.rel_err), r.flags,
            ]
        )
    return buf.getvalue()


def read_rows(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetadhoc",
        description="Success probability, capacity and throughput of heterogeneous Poisson "
        "ad hoc networks: analytic evaluation and Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("eval", "analytic curves"),
        ("sim", "Monte Carlo curves"),
        ("compare", "analytic vs Monte Carlo with tolerance checks (exit 3 on breach)"),
        ("sweep", "analytic curves plus Monte Carlo when the scenario has a simulation section"),
    ):
        p = sub.add_parser(name, help=text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", help="path to a YAML scenario file")
        src.add_argument("--preset", help="built-in scenario name")
        p.add_argument("--seed", type=int, help="override the simulation seed")
        p.add_argument("--replications", type=int, help="override the replication count")
        p.add_argument("--out", help="CSV output path (default: outputs.path or stdout)")
    show = sub.add_parser("presets", help="list presets, or print one as YAML")
    show.add_argument("name", nargs="?")
    return parser


def _load(args) -> Scenario:
    if args.preset:
        scenario = load_preset(args.preset)
    else:
        try:
            with open(args.scenario, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario: {exc}") from None
        scenario = parse_scenario(text)
    if args.seed is not None or args.replications is not None:
        sim = scenario.simulation or SimulationSpec()
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ScenarioError("seed must be a 64-bit unsigned integer")
            sim = replace(sim, seed=args.seed)
        if args.replications is not None:
            if args.replications < 1:
                raise ScenarioError("replications must be at least 1")
            sim = replace(sim, replications=args.replications)
        scenario = replace(scenario, simulation=sim)
    return scenario


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    if args.command == "presets":
        if args.name:
            try:
                sys.stdout.write(preset_text(args.name))
            except ScenarioError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_PARSE
        else:
            print("\n".join([*PRESETS, "table1-pc(<gamma>)", "table1-cancel(<L>)"]))
        return EXIT_OK
    try:
        scenario = _load(args)
        breaches: list[ResultRow] = []
        if args.command == "eval":
            rows = cmd_eval(scenario)
        elif args.command == "sim":
            rows = cmd_sim(scenario)
        elif args.command == "compare":
            rows, breaches = cmd_compare(scenario)
        else:
            rows = cmd_sweep(scenario)
    except (ScenarioError, CapabilityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConvergenceError, AccuracyError, DivergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _write(format_rows(rows), args.out or scenario.outputs.path)
    if breaches:
        print("tolerance breach in rows:", file=sys.stderr)
        sys.stderr.write(format_rows(breaches))
        return EXIT_TOLERANCE
    return EXIT_OK
