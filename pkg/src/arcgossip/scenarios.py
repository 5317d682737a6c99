"""Reproducible experiment scenarios: config files, runners, manifests.

A scenario is described by one YAML file (key-value with nesting; schema
below), executed by :func:`run_scenario`, and leaves behind CSV data files
plus a JSON manifest listing every output with its content hash.  Data
files are byte-identical across reruns of the same config: all randomness
is counter-based, and floats are written with shortest round-trip repr.

Config schema (YAML, all keys optional unless marked):

    schema_version: 1
    scenario: PathConsensus | RingConsensus | WindingFreeze |
              CrossingProbMC | SweepEscape | CompensatorBound   (required)
    n: vertex count                                             (required)
    horizon: steps per replica
    replicas: independent substreams (default 1)
    seed: 64-bit integer
    output_dir: path
    sample_stride: pow2 | <int>
    eps_antipodal: tolerance for antipodal detection (default 0.0)
    check_stride: winding/corridor verification stride (default 1024)
    log: none | crossings | full
    workers: replica worker threads (default 1)
    init:
      kind: uniform | twist | twist_noise | consensus | file
      w0: winding for twist inits
      noise: amplitude for twist_noise
      alpha: consensus angle
      path: angle file (one angle per line) for kind=file
    params:
      edges_per_replica: CrossingProbMC sampled edges
      sweep_budget: SweepEscape linear sweeps
      replay_horizon: SweepEscape wrapped replay steps
      resync_stride: CompensatorBound lift rebuild stride
"""

import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from . import __version__, rng
from .backend import backend_name
from .circle import (
    Configuration,
    Topology,
    twisted_configuration,
    wrap_pi_array,
)
from .dynamics import SimState, run
from .liftframe import FrameTolerances, SectorFrame, SectorError
from .montecarlo import crossing_probability_mc, write_fractions_csv
from .observables import SampleRecorder, write_observables_csv
from .sweep import escape_scenario, write_sweep_csv

SCHEMA_VERSION = 1

SCENARIOS = (
    "PathConsensus",
    "RingConsensus",
    "WindingFreeze",
    "CrossingProbMC",
    "SweepEscape",
    "CompensatorBound",
)

_RING_SCENARIOS = {"RingConsensus", "WindingFreeze", "CompensatorBound",
                   "SweepEscape", "CrossingProbMC"}

_TOP_KEYS = {"schema_version", "scenario", "n", "horizon", "replicas", "seed",
             "output_dir", "sample_stride", "eps_antipodal", "check_stride",
             "log", "workers", "init", "params", "tolerances"}
_INIT_KEYS = {"kind", "w0", "noise", "alpha", "path"}
_PARAM_KEYS = {"edges_per_replica", "sweep_budget", "replay_horizon",
               "resync_stride"}


@dataclass
class ExperimentConfig:
    scenario: str
    n: int
    horizon: int = 0
    replicas: int = 1
    seed: int = 0
    output_dir: str = "out"
    sample_stride: "str | int" = "pow2"
    eps_antipodal: float = 0.0
    check_stride: int = 1024
    log: str = "crossings"
    workers: int = 1
    init_kind: str = "uniform"
    init_w0: int = 1
    init_noise: float = 0.05
    init_alpha: float = 0.0
    init_path: "str | None" = None
    edges_per_replica: int = 200
    sweep_budget: int = 200
    replay_horizon: "int | None" = None
    resync_stride: int = 1 << 16
    tolerances: dict = field(default_factory=dict)

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; "
                             f"choose from {', '.join(SCENARIOS)}")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.scenario in _RING_SCENARIOS and self.n < 3:
            raise ValueError(f"{self.scenario} needs n >= 3 (neighbor sums)")
        if self.init_kind not in ("uniform", "twist", "twist_noise",
                                  "consensus", "file"):
            raise ValueError(f"unknown init kind {self.init_kind!r}")
        if self.init_kind == "file" and not self.init_path:
            raise ValueError("init kind 'file' needs init.path")
        return self


def load_config(path, overrides=None):
    """Load and validate a YAML scenario config; `overrides` wins per key."""
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"config {path}: expected a mapping at top level")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ValueError(f"config {path}: unknown keys {sorted(unknown)}")
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ValueError(f"config {path}: unsupported schema_version")
    init = raw.get("init") or {}
    params = raw.get("params") or {}
    for section, keys, name in ((init, _INIT_KEYS, "init"),
                                (params, _PARAM_KEYS, "params")):
        bad = set(section) - keys
        if bad:
            raise ValueError(f"config {path}: unknown {name} keys {sorted(bad)}")
    scenario = raw.get("scenario", "")
    # reference-experiment defaults for the MC scenario, fully overridable
    # (desk-scale configs in configs/ use 500/50/200)
    if scenario == "CrossingProbMC":
        raw.setdefault("n", 4000)
        raw.setdefault("replicas", 1000)
        params.setdefault("edges_per_replica", 200)
    cfg = ExperimentConfig(
        scenario=scenario,
        n=int(raw.get("n", 0)),
        horizon=int(raw.get("horizon", 0)),
        replicas=int(raw.get("replicas", 1)),
        seed=int(raw.get("seed", 0)),
        output_dir=str(raw.get("output_dir", "out")),
        sample_stride=raw.get("sample_stride", "pow2"),
        eps_antipodal=float(raw.get("eps_antipodal", 0.0)),
        check_stride=int(raw.get("check_stride", 1024)),
        log=str(raw.get("log", "crossings")),
        workers=int(raw.get("workers", 1)),
        init_kind=str(init.get("kind", "uniform")),
        init_w0=int(init.get("w0", 1)),
        init_noise=float(init.get("noise", 0.05)),
        init_alpha=float(init.get("alpha", 0.0)),
        init_path=init.get("path"),
        edges_per_replica=int(params.get("edges_per_replica", 200)),
        sweep_budget=int(params.get("sweep_budget", 200)),
        replay_horizon=(int(params["replay_horizon"])
                        if params.get("replay_horizon") is not None else None),
        resync_stride=int(params.get("resync_stride", 1 << 16)),
        tolerances=dict(raw.get("tolerances") or {}),
    )
    for key, value in (overrides or {}).items():
        setattr(cfg, key, value)
    return cfg.validate()


def initial_configuration(cfg, replica=0):
    """Build the initial configuration for one replica of a scenario."""
    topo = (Topology.path(cfg.n) if cfg.scenario == "PathConsensus"
            else Topology.ring(cfg.n))
    kind = cfg.init_kind
    if kind == "uniform":
        key = rng.stream_key(cfg.seed, replica)
        return Configuration(topo, rng.uniform_angles(key, cfg.n))
    if kind == "twist":
        base = twisted_configuration(cfg.n, cfg.init_w0)
        return Configuration(topo, base.angles)
    if kind == "twist_noise":
        key = rng.stream_key(cfg.seed, replica)
        base = twisted_configuration(cfg.n, cfg.init_w0).angles
        noise = rng.uniform_noise(key, cfg.n, cfg.init_noise)
        return Configuration(topo, wrap_pi_array(base + noise))
    if kind == "consensus":
        return Configuration(topo, wrap_pi_array(np.full(cfg.n, cfg.init_alpha)))
    if kind == "file":
        angles = np.loadtxt(cfg.init_path, dtype=np.float64, ndmin=1)
        return Configuration(topo, wrap_pi_array(angles))
    raise ValueError(kind)


@dataclass
class ScenarioResult:
    exit_code: int
    output_dir: str
    outputs: dict
    summary: dict
    manifest_path: str


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _suffix(replica, replicas):
    return f"_r{replica}" if replicas > 1 else ""


def _counter_violations(counters):
    return (counters.lyapunov_violations + counters.winding_violations
            + counters.corridor_violations + counters.s_domain_violations
            + counters.integrality_violations + counters.log_dropped)


def _map_replicas(cfg, fn):
    if cfg.workers > 1 and cfg.replicas > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(fn, range(cfg.replicas)))
    return [fn(r) for r in range(cfg.replicas)]


def _run_trajectory_scenario(cfg, outdir):
    corridor_check = cfg.scenario != "PathConsensus"

    def one(replica):
        config = initial_configuration(cfg, replica)
        state = SimState(config, 0, cfg.seed, replica)
        recorder = SampleRecorder()
        final, report = run(
            state, cfg.horizon, observers=[recorder],
            eps_antipodal=cfg.eps_antipodal, check_stride=cfg.check_stride,
            corridor_check=corridor_check, log=cfg.log,
            sample_steps=cfg.sample_stride)
        return final, report, recorder.samples

    results = _map_replicas(cfg, one)
    outputs = {}
    per_replica = []
    violations = 0
    for r, (final, report, samples) in enumerate(results):
        sfx = _suffix(r, cfg.replicas)
        obs_name = f"observables{sfx}.csv"
        write_observables_csv(outdir / obs_name, samples)
        outputs[obs_name] = None
        if report.log is not None:
            cross_name = f"crossings{sfx}.csv"
            report.log.to_csv(outdir / cross_name)
            outputs[cross_name] = None
        violations += _counter_violations(report.counters)
        per_replica.append({
            "replica": r,
            "final_l1": samples[-1].l1_lyapunov,
            "final_winding": report.final_winding,
            "initial_winding": report.initial_winding,
            "winding_changes": report.counters.winding_changes,
            "last_crossing_step": report.counters.last_crossing_step,
            "antipodal_events": report.counters.antipodal_events,
            "violations": _counter_violations(report.counters),
        })
    summary = {"replicas": per_replica, "total_violations": violations}
    return outputs, summary, 0 if violations == 0 else 2


def _run_crossing_mc(cfg, outdir):
    result = crossing_probability_mc(cfg.n, cfg.edges_per_replica,
                                     cfg.replicas, cfg.seed)
    write_fractions_csv(outdir / "replica_fractions.csv", result)
    err = abs(result.pooled_mean - result.theoretical)
    summary = {
        "pooled_mean": result.pooled_mean,
        "pooled_se": result.pooled_se,
        "theoretical": result.theoretical,
        "abs_error": err,
        "within_3se": bool(err <= 3.0 * result.pooled_se),
    }
    return {"replica_fractions.csv": None}, summary, 0


def _run_sweep_escape(cfg, outdir):
    report = escape_scenario(
        cfg.n, cfg.init_w0, cfg.sweep_budget,
        replay_horizon=cfg.replay_horizon, seed=cfg.seed,
        check_stride=cfg.check_stride)
    write_sweep_csv(outdir / "sweeps.csv", report.rows)
    report.replay_log.to_csv(outdir / "replay_crossings.csv")
    summary = {
        "first_unsafe_sweep": report.first_unsafe_sweep,
        "replay_horizon": report.replay_horizon,
        "replay_first_crossing_step": report.replay_first_crossing_step,
        "replay_final_winding": report.replay_final_winding,
        "replay_winding_zero_step": report.replay_winding_zero_step,
    }
    outputs = {"sweeps.csv": None, "replay_crossings.csv": None}
    return outputs, summary, 0


def _frame_csv_rows(samples):
    rows = []
    for s in samples:
        rows.append(",".join([
            str(s.step),
            repr(float(s.psi_variance)),
            repr(float(s.zeta_diameter)),
            repr(float(s.d_tilde)),
            repr(float(s.s_l2_per_site)),
            repr(float(s.zeta_mean)),
        ]))
    return rows


def _run_compensator_bound(cfg, outdir):
    from .liftframe import FRAME_CSV_HEADER

    def one(replica):
        config = initial_configuration(cfg, replica)
        frame = SectorFrame(
            config, cfg.seed, replica, eps_antipodal=cfg.eps_antipodal,
            resync_stride=cfg.resync_stride,
            tolerances=FrameTolerances(**cfg.tolerances))
        samples = frame.advance(cfg.horizon, sample_steps=cfg.sample_stride)
        return frame, samples

    outputs = {}
    per_replica = []
    violations = 0
    exit_code = 0
    for r in range(cfg.replicas):
        sfx = _suffix(r, cfg.replicas)
        name = f"frame{sfx}.csv"
        try:
            frame, samples = one(r)
        except SectorError as exc:
            per_replica.append({"replica": r, "error": str(exc)})
            exit_code = 2
            continue
        with open(outdir / name, "w", newline="\n") as fh:
            fh.write(FRAME_CSV_HEADER + "\n")
            for row in _frame_csv_rows(samples):
                fh.write(row + "\n")
        outputs[name] = None
        check = frame.verify()
        counters = frame.counters
        violations += counters.total_violations
        per_replica.append({
            "replica": r,
            "winding": frame.w0,
            "beta": frame.beta,
            "final_d_tilde": samples[-1].d_tilde,
            "final_psi": samples[-1].psi_variance,
            "max_s_l2_per_site": frame.stats.max_s_l2_per_site,
            "s_l2_bound": frame.tol.s_l2_bound,
            "resyncs": counters.resyncs,
            "violations": counters.total_violations,
            "final_lift_residuals": {
                "increment": check.max_increment_residual,
                "projection": check.max_projection_residual,
                "closing": check.closing_residual,
            },
        })
    summary = {"replicas": per_replica, "total_violations": violations}
    if violations:
        exit_code = 2
    return outputs, summary, exit_code


_RUNNERS = {
    "PathConsensus": _run_trajectory_scenario,
    "RingConsensus": _run_trajectory_scenario,
    "WindingFreeze": _run_trajectory_scenario,
    "CrossingProbMC": _run_crossing_mc,
    "SweepEscape": _run_sweep_escape,
    "CompensatorBound": _run_compensator_bound,
}


def run_scenario(cfg, output_dir=None):
    """Execute a scenario; write data files, summary.json, manifest.json.

    Data files are byte-identical for identical configs.  Returns a
    ScenarioResult whose exit_code is 0 on success and 2 when an invariant
    violation or sector exit was detected (diagnostics in the summary).
    """
    from pathlib import Path

    cfg.validate()
    outdir = Path(output_dir if output_dir is not None else cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    outputs, summary, exit_code = _RUNNERS[cfg.scenario](cfg, outdir)
    wall = time.perf_counter() - t_start

    summary_doc = {
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.scenario,
        "exit_code": exit_code,
        **summary,
    }
    with open(outdir / "summary.json", "w") as fh:
        json.dump(summary_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs["summary.json"] = None

    for name in outputs:
        outputs[name] = _sha256(outdir / name)
    try:
        import numba
        numba_version = numba.__version__
    except ImportError:
        numba_version = None
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.scenario,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "backend": backend_name(),
        "versions": {
            "arcgossip": __version__,
            "numpy": np.__version__,
            "numba": numba_version,
            "python": sys.version.split()[0],
        },
        "wall_time_s": wall,
        "outputs": outputs,
    }
    manifest_path = outdir / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ScenarioResult(
        exit_code=exit_code,
        output_dir=str(outdir),
        outputs=outputs,
        summary=summary_doc,
        manifest_path=str(manifest_path),
    )
