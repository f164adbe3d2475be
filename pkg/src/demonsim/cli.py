"""Scenario-driven command line: run the four protocols, sweep one knob,
emit CSV plus a JSON metadata sidecar.

Config files are JSON:

    {
      "protocol": "feedback-demon",
      "parameters": {"beta_homega": 2.1972, "strength": 2.0, "trials": 100000},
      "sweep": {"parameter": "strength", "values": [0, 0.5, 1, 2, 4]},
      "seed": 7,
      "output_dir": "out"
    }

`demonsim validate config.json` echoes the fully resolved scenario with all
defaults filled; `demonsim run config.json` executes it. Exit codes: 0 on
success, 2 for any config problem, 3 when a stochastic integrator aborts
(the failing trajectory seed is printed).

Stochastic protocols shard their trials across a process pool; because each
trial owns a counter-based stream, the CSV body is byte-identical for every
worker count and the sidecar records the seed needed to reproduce it.
Work columns are in qubit energy quanta (the erasure protocol reports k_B T
units), information columns in nats.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import multiprocessing
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__, kernels, qcore, thermo
from .autonomous import AutonomousDemonConfig, GateModel, InitialQubit, run_autonomous_demon
from .evolve import IntegratorAbort, Scheme, SMEConfig
from .feedback import (
    FeedbackDemonConfig,
    GaussianMeasurementModel,
    eps_fb,
    jarzynski_feedback,
    run_feedback_demon,
)
from .landauer import LandauerConfig, information_efficiency, run_landauer_protocol
from .trajectory import TrajectoryDemonConfig, run_trajectory_demon


class Protocol(Enum):
    FEEDBACK = "feedback-demon"
    TRAJECTORY = "trajectory-demon"
    AUTONOMOUS = "autonomous-demon"
    LANDAUER = "landauer"


STOCHASTIC = (Protocol.FEEDBACK, Protocol.TRAJECTORY)


class ConfigError(Exception):
    """Anything wrong with a scenario file or its parameter values."""


@dataclass(frozen=True)
class Scenario:
    protocol: Protocol
    parameters: dict
    sweep: tuple[str, tuple] | None
    output_dir: Path
    seed: int | None
    name: str


@dataclass
class ResultTable:
    """Named equal-length columns plus everything needed to reproduce them."""

    columns: dict
    metadata: dict

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"ragged result table: column lengths {sorted(lengths)}")


_PARAM_KEYS = {
    Protocol.FEEDBACK: {"beta_homega", "strength", "threshold", "t1_ratio", "trials"},
    Protocol.TRAJECTORY: {
        "beta_homega", "dt", "eta", "gamma_m", "scheme", "drive", "t_m", "trials",
    },
    Protocol.AUTONOMOUS: {
        "alpha", "n_cav", "gate_model", "initial_qubit", "gamma_a", "t_pi",
        "pulse_steps", "chi", "drive_scale",
    },
    Protocol.LANDAUER: {"beta_homega1", "omega2_ratio", "ramp_steps"},
}


def _need(params: dict, key: str):
    if key not in params:
        raise ConfigError(f"parameters.{key} is required for this protocol")
    return params[key]


def _as_float(value, where: str) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"{where}: expected a number, got the string {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {type(value).__name__}")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _check_keys(params: dict, protocol: Protocol):
    unknown = set(params) - _PARAM_KEYS[protocol]
    if unknown:
        raise ConfigError(
            f"unknown parameter(s) {sorted(unknown)} for {protocol.value}; "
            f"known: {sorted(_PARAM_KEYS[protocol])}"
        )


def _initial_qubit_from(value) -> InitialQubit:
    if isinstance(value, str):
        if value in ("ground", "excited"):
            return InitialQubit(kind=value)
        if value == "superposed":
            return InitialQubit.superposed()
        raise ConfigError(
            f"parameters.initial_qubit: {value!r} needs no extra fields only for "
            f"'ground', 'excited' or 'superposed'; use an object for 'thermal'"
        )
    if isinstance(value, dict):
        kind = value.get("kind")
        try:
            if kind == "thermal":
                return InitialQubit.thermal(_as_float(value.get("p_e", 0.0), "initial_qubit.p_e"))
            if kind == "superposed":
                return InitialQubit.superposed(
                    theta=_as_float(value.get("theta", math.pi / 2), "initial_qubit.theta"),
                    phi=_as_float(value.get("phi", 0.0), "initial_qubit.phi"),
                )
            if kind in ("ground", "excited"):
                return InitialQubit(kind=kind)
        except ValueError as err:
            raise ConfigError(f"parameters.initial_qubit: {err}") from None
    raise ConfigError(f"parameters.initial_qubit: cannot interpret {value!r}")


def build_feedback_config(params: dict, seed: int, trials: int | None) -> FeedbackDemonConfig:
    _check_keys(params, Protocol.FEEDBACK)
    try:
        model = GaussianMeasurementModel(
            strength=_as_float(_need(params, "strength"), "parameters.strength"),
            threshold=_as_float(params.get("threshold", 0.0), "parameters.threshold"),
        )
        return FeedbackDemonConfig(
            beta_homega=_as_float(_need(params, "beta_homega"), "parameters.beta_homega"),
            model=model,
            t1_ratio=_as_float(params.get("t1_ratio", 0.01), "parameters.t1_ratio"),
            trials=trials if trials is not None else _as_int(params.get("trials", 100_000), "parameters.trials"),
            seed=seed,
        )
    except ValueError as err:
        raise ConfigError(f"invalid feedback-demon parameters: {err}") from None


def build_trajectory_config(params: dict, seed: int, trials: int | None) -> TrajectoryDemonConfig:
    _check_keys(params, Protocol.TRAJECTORY)
    scheme_name = params.get("scheme", Scheme.NORMALIZED_EULER.value)
    try:
        scheme = Scheme(scheme_name)
    except ValueError:
        raise ConfigError(
            f"parameters.scheme: {scheme_name!r} is not one of "
            f"{[s.value for s in Scheme]}"
        ) from None
    try:
        sme = SMEConfig(
            dt=_as_float(_need(params, "dt"), "parameters.dt"),
            eta=_as_float(_need(params, "eta"), "parameters.eta"),
            gamma_m=_as_float(_need(params, "gamma_m"), "parameters.gamma_m"),
            seed=seed,
            scheme=scheme,
        )
        return TrajectoryDemonConfig(
            beta_homega=_as_float(_need(params, "beta_homega"), "parameters.beta_homega"),
            sme=sme,
            drive=_as_float(_need(params, "drive"), "parameters.drive"),
            t_m=_as_float(_need(params, "t_m"), "parameters.t_m"),
            trials=trials if trials is not None else _as_int(params.get("trials", 100_000), "parameters.trials"),
            seed=seed,
        )
    except ValueError as err:
        raise ConfigError(f"invalid trajectory-demon parameters: {err}") from None


def build_autonomous_config(params: dict) -> AutonomousDemonConfig:
    _check_keys(params, Protocol.AUTONOMOUS)
    alpha_raw = _need(params, "alpha")
    if isinstance(alpha_raw, list):
        if len(alpha_raw) != 2:
            raise ConfigError("parameters.alpha: a complex alpha is [re, im]")
        alpha = complex(
            _as_float(alpha_raw[0], "parameters.alpha[0]"),
            _as_float(alpha_raw[1], "parameters.alpha[1]"),
        )
    else:
        alpha = complex(_as_float(alpha_raw, "parameters.alpha"), 0.0)
    model_name = params.get("gate_model", GateModel.IDEAL.value)
    try:
        gate_model = GateModel(model_name)
    except ValueError:
        raise ConfigError(
            f"parameters.gate_model: {model_name!r} is not one of "
            f"{[m.value for m in GateModel]}"
        ) from None
    try:
        return AutonomousDemonConfig(
            alpha=alpha,
            n_cav=_as_int(params.get("n_cav", 0), "parameters.n_cav"),
            gate_model=gate_model,
            initial_qubit=_initial_qubit_from(params.get("initial_qubit", "ground")),
            gamma_a=_as_float(params.get("gamma_a", 0.0), "parameters.gamma_a"),
            t_pi=_as_float(params.get("t_pi", 1.0), "parameters.t_pi"),
            pulse_steps=_as_int(params.get("pulse_steps", 200), "parameters.pulse_steps"),
            chi=_as_float(params.get("chi", 1.0), "parameters.chi"),
            drive_scale=_as_float(params.get("drive_scale", 0.05), "parameters.drive_scale"),
        )
    except ValueError as err:
        raise ConfigError(f"invalid autonomous-demon parameters: {err}") from None


def build_landauer_config(params: dict) -> LandauerConfig:
    _check_keys(params, Protocol.LANDAUER)
    try:
        return LandauerConfig(
            beta_homega1=_as_float(_need(params, "beta_homega1"), "parameters.beta_homega1"),
            omega2_ratio=_as_float(params.get("omega2_ratio", 50.0), "parameters.omega2_ratio"),
            ramp_steps=_as_int(params.get("ramp_steps", 100_000), "parameters.ramp_steps"),
        )
    except ValueError as err:
        raise ConfigError(f"invalid landauer parameters: {err}") from None


def parse_scenario(path: str, out_dir=None, seed=None, trials=None) -> Scenario:
    """Load, validate and resolve a scenario file; overrides win over JSON."""
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON: {err}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    allowed = {"protocol", "parameters", "sweep", "output_dir", "seed"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}; allowed: {sorted(allowed)}")
    try:
        protocol = Protocol(raw.get("protocol"))
    except ValueError:
        raise ConfigError(
            f"protocol must be one of {[x.value for x in Protocol]}, got {raw.get('protocol')!r}"
        ) from None
    params = raw.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("parameters must be a JSON object")
    params = dict(params)
    if trials is not None:
        if "trials" in _PARAM_KEYS[protocol]:
            params["trials"] = trials
        else:
            raise ConfigError(f"--trials does not apply to {protocol.value}")

    sweep = None
    if raw.get("sweep") is not None:
        sw = raw["sweep"]
        if not isinstance(sw, dict) or set(sw) != {"parameter", "values"}:
            raise ConfigError('sweep must be {"parameter": name, "values": [...]}')
        name = sw["parameter"]
        if name not in _PARAM_KEYS[protocol]:
            raise ConfigError(
                f"sweep parameter {name!r} does not exist for {protocol.value}; "
                f"known: {sorted(_PARAM_KEYS[protocol])}"
            )
        values = sw["values"]
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep.values must be a non-empty list")
        for v in values:
            _as_float(v, f"sweep.values entry {v!r}")
        sweep = (name, tuple(values))

    eff_seed = seed if seed is not None else raw.get("seed")
    if eff_seed is not None:
        eff_seed = _as_int(eff_seed, "seed")
        if not 0 <= eff_seed < 2**64:
            raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {eff_seed}")
    if protocol in STOCHASTIC and eff_seed is None:
        raise ConfigError(f"{protocol.value} is stochastic: a seed is required (config or --seed)")

    # construct every point up front so validation errors surface before any run
    if sweep is None:
        build_protocol_config(protocol, params, eff_seed)
    else:
        for v in sweep[1]:
            point = dict(params)
            point[sweep[0]] = v
            build_protocol_config(protocol, point, eff_seed)

    return Scenario(
        protocol=protocol,
        parameters=params,
        sweep=sweep,
        output_dir=Path(out_dir) if out_dir is not None else Path(raw.get("output_dir", ".")),
        seed=eff_seed,
        name=p.stem,
    )


def build_protocol_config(protocol: Protocol, params: dict, seed: int | None):
    if protocol is Protocol.FEEDBACK:
        return build_feedback_config(params, seed if seed is not None else 0, None)
    if protocol is Protocol.TRAJECTORY:
        return build_trajectory_config(params, seed if seed is not None else 0, None)
    if protocol is Protocol.AUTONOMOUS:
        return build_autonomous_config(params)
    return build_landauer_config(params)


# ---------------------------------------------------------------------------
# Runners


def _shards(trials: int, workers: int) -> list[tuple[int, int]]:
    size = (trials + workers - 1) // workers
    out = []
    start = 0
    while start < trials:
        count = min(size, trials - start)
        out.append((start, count))
        start += count
    return out


def _feedback_shard(args):
    cfg, start, count = args
    return run_feedback_demon(cfg, start, count)


def _trajectory_shard(args):
    cfg, start, count = args
    return run_trajectory_demon(cfg, start, count)


def _run_sharded(shard_fn, cfg, trials: int, workers: int) -> list:
    jobs = [(cfg, start, count) for start, count in _shards(trials, workers)]
    if workers <= 1 or len(jobs) == 1:
        results = [shard_fn(j) for j in jobs]
    else:
        with multiprocessing.Pool(processes=min(workers, len(jobs))) as pool:
            results = pool.map(shard_fn, jobs)
    merged = []
    for r in results:
        merged.extend(r)
    return merged


def _estimator_columns(columns: dict, records, beta: float, config=None):
    est = jarzynski_feedback(records, beta, config)
    ok = [r for r in records if not r.irreversible]
    info = thermo.average_information([r.i_qc for r in ok]) if ok else None
    columns.setdefault("jarz_generalized", []).append(est.generalized.mean)
    columns.setdefault("jarz_generalized_stderr", []).append(est.generalized.std_error)
    columns.setdefault("jarz_plain", []).append(est.plain.mean)
    columns.setdefault("jarz_plain_stderr", []).append(est.plain.std_error)
    columns.setdefault("lambda_fb", []).append(est.lambda_fb)
    columns.setdefault("avg_info", []).append(info.mean if info else math.nan)
    columns.setdefault("avg_info_stderr", []).append(info.std_error if info else math.nan)


def _sweep_points(scn: Scenario):
    if scn.sweep is None:
        yield None, dict(scn.parameters)
    else:
        name, values = scn.sweep
        for v in values:
            params = dict(scn.parameters)
            params[name] = v
            yield v, params


def run_feedback_scenario(scn: Scenario, workers: int) -> ResultTable:
    columns: dict = {}
    for value, params in _sweep_points(scn):
        cfg = build_feedback_config(params, scn.seed, None)
        records = _run_sharded(_feedback_shard, cfg, cfg.trials, workers)
        if scn.sweep is not None:
            columns.setdefault(scn.sweep[0], []).append(_as_float(value, "sweep value"))
        columns.setdefault("eps_fb", []).append(eps_fb(cfg))
        _estimator_columns(columns, records, cfg.beta_homega, cfg)
    return ResultTable(columns=columns, metadata={})


def run_trajectory_scenario(scn: Scenario, workers: int) -> ResultTable:
    columns: dict = {}
    for value, params in _sweep_points(scn):
        cfg = build_trajectory_config(params, scn.seed, None)
        records = _run_sharded(_trajectory_shard, cfg, cfg.trials, workers)
        if scn.sweep is not None:
            columns.setdefault(scn.sweep[0], []).append(_as_float(value, "sweep value"))
        _estimator_columns(columns, records, cfg.beta_homega, None)
    return ResultTable(columns=columns, metadata={})


def run_autonomous_scenario(scn: Scenario, workers: int) -> ResultTable:
    columns: dict = {}
    sidecars = {}
    for value, params in _sweep_points(scn):
        cfg = build_autonomous_config(params)
        result = run_autonomous_demon(cfg)
        if scn.sweep is not None:
            columns.setdefault(scn.sweep[0], []).append(_as_float(value, "sweep value"))
        nbar = float(
            np.real(np.trace(result.rho_d.entries @ qcore.number_op(cfg.cavity_dim).entries))
        )
        columns.setdefault("alpha_abs", []).append(abs(cfg.alpha))
        columns.setdefault("n_bar", []).append(nbar)
        columns.setdefault("work_direct", []).append(result.work_direct)
        columns.setdefault("delta_u", []).append(result.delta_u)
        columns.setdefault("entropy_qubit", []).append(result.entropies.qubit)
        columns.setdefault("entropy_cavity", []).append(result.entropies.cavity)
        columns.setdefault("entropy_joint", []).append(result.entropies.joint)
        sidecars = _autonomous_sidecars(cfg, result)
    return ResultTable(columns=columns, metadata={"sidecars": sidecars})


def _matrix_rows(m: np.ndarray) -> list[str]:
    rows = ["row,col,real,imag"]
    for r in range(m.shape[0]):
        for c in range(m.shape[1]):
            rows.append(f"{r},{c},{_fmt(m[r, c].real)},{_fmt(m[r, c].imag)}")
    return rows


def _autonomous_sidecars(cfg: AutonomousDemonConfig, result) -> dict:
    half = abs(cfg.alpha) + 3.0
    axis = np.linspace(-half, half, 41)
    grid = [complex(x, y) for y in axis for x in axis]
    q = qcore.husimi_q(result.rho_d, grid)
    husimi_rows = ["alpha_re,alpha_im,q"]
    for point, val in zip(grid, q):
        husimi_rows.append(f"{_fmt(point.real)},{_fmt(point.imag)},{_fmt(float(val))}")
    return {
        "rho_S.csv": "\n".join(_matrix_rows(result.rho_s.entries)) + "\n",
        "rho_D.csv": "\n".join(_matrix_rows(result.rho_d.entries)) + "\n",
        "husimi.csv": "\n".join(husimi_rows) + "\n",
    }


def run_landauer_scenario(scn: Scenario, workers: int) -> ResultTable:
    columns: dict = {}
    for value, params in _sweep_points(scn):
        cfg = build_landauer_config(params)
        total, ratio = run_landauer_protocol(cfg)
        if scn.sweep is not None:
            columns.setdefault(scn.sweep[0], []).append(_as_float(value, "sweep value"))
        columns.setdefault("beta_homega1", []).append(cfg.beta_homega1)
        columns.setdefault("omega2_ratio", []).append(cfg.omega2_ratio)
        columns.setdefault("ramp_steps", []).append(cfg.ramp_steps)
        columns.setdefault("w_total_kbt", []).append(total)
        columns.setdefault("ratio_ln2", []).append(ratio)
        columns.setdefault("efficiency_info", []).append(information_efficiency(cfg))
    return ResultTable(columns=columns, metadata={})


_RUNNERS = {
    Protocol.FEEDBACK: run_feedback_scenario,
    Protocol.TRAJECTORY: run_trajectory_scenario,
    Protocol.AUTONOMOUS: run_autonomous_scenario,
    Protocol.LANDAUER: run_landauer_scenario,
}


# ---------------------------------------------------------------------------
# Output


def _fmt(x) -> str:
    if isinstance(x, float):
        # builtin-float repr is the shortest digit string that round-trips
        return repr(float(x))
    return str(x)


def table_to_csv(table: ResultTable) -> str:
    names = list(table.columns)
    lines = [",".join(names)]
    n_rows = len(next(iter(table.columns.values()))) if names else 0
    for r in range(n_rows):
        lines.append(",".join(_fmt(table.columns[name][r]) for name in names))
    return "\n".join(lines) + "\n"


def _resolved_config(scn: Scenario) -> dict:
    params = dict(scn.parameters)
    if scn.sweep is not None and scn.sweep[0] not in params:
        # echo the first sweep point so the resolved view is always complete
        params[scn.sweep[0]] = scn.sweep[1][0]
    cfg = build_protocol_config(scn.protocol, params, scn.seed)
    resolved = dataclasses.asdict(cfg)

    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, complex):
            return [obj.real, obj.imag]
        if isinstance(obj, float) and math.isinf(obj):
            return "inf"
        return obj

    return {
        "protocol": scn.protocol.value,
        "parameters": clean(resolved),
        "sweep": None if scn.sweep is None else {"parameter": scn.sweep[0], "values": list(scn.sweep[1])},
        "seed": scn.seed,
        "output_dir": str(scn.output_dir),
    }


def run_scenario(scn: Scenario, workers: int) -> list[Path]:
    """Execute a resolved scenario and write its outputs; returns the paths."""
    table = _RUNNERS[scn.protocol](scn, workers)
    scn.output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    csv_path = scn.output_dir / f"{scn.name}.csv"
    csv_path.write_text(table_to_csv(table), encoding="utf-8")
    written.append(csv_path)
    for fname, text in table.metadata.pop("sidecars", {}).items():
        side = scn.output_dir / fname
        side.write_text(text, encoding="utf-8")
        written.append(side)
    meta = {
        "artifact": "demonsim",
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "resolved": _resolved_config(scn),
        "files": [p.name for p in written],
        "units": {
            "work": "qubit energy quanta; landauer columns in k_B T",
            "information": "nats; divide by ln 2 = 0.6931471805599453 for bits",
        },
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
    }
    meta_path = scn.output_dir / f"{scn.name}.meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(meta_path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="demonsim",
        description="Measurement-feedback thermodynamics simulations on a qubit-cavity system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in ("run", "validate"):
        sp = sub.add_parser(cmd)
        sp.add_argument("config", help="scenario JSON file")
        if cmd == "run":
            sp.add_argument("--out", help="output directory (overrides config)")
            sp.add_argument("--seed", type=int, help="master seed (overrides config)")
            sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
            sp.add_argument("--trials", type=int, help="trial count override")
    args = parser.parse_args(argv)

    try:
        if args.command == "validate":
            scn = parse_scenario(args.config)
            print(json.dumps(_resolved_config(scn), indent=2, sort_keys=True))
            return 0
        scn = parse_scenario(args.config, out_dir=args.out, seed=args.seed, trials=args.trials)
        written = run_scenario(scn, max(1, args.workers))
        for p in written:
            print(p)
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except IntegratorAbort as err:
        print(f"integrator abort (trajectory seed {err.seed}): {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
