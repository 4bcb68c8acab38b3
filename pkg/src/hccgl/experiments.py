"""Built-in engagement cases, result tables and on-disk artifacts.

Three named cases are provided: ``case1`` (four missiles, stationary target),
``case2`` (same missiles, weaving target) and ``case3-mc`` (five missiles with
randomised launch points, evaluated over many episodes). Each can run at the
full training budget or at a reduced desk budget.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import yaml

from . import nces
from .bench import run_study, write_trials
from .engagement import G0, Maneuver, MissileState, TargetState
from .harness import (
    RolloutResult,
    Scenario,
    TrainConfig,
    TrainResult,
    initial_ecosystem,
    rollout,
    train,
    write_history,
)
from .topology import ImpactAngleSpec, Topology

log = logging.getLogger(__name__)

CASES = ("case1", "case2", "case3-mc")
PRESETS = ("desk", "full")

CASE1_MISSILES = (
    (1900.0, 17000.0, -25.0, 700.0),
    (1500.0, 13000.0, 0.0, 650.0),
    (1400.0, 4000.0, 5.0, 700.0),
    (3000.0, 1300.0, 10.0, 680.0),
)
CASE1_TARGET = (9500.0, 9000.0)
CASE1_RELATIVE_ANGLES = (20.0, 60.0, 30.0)  # degrees

CASE2_TARGET_SPEED = 130.0
CASE2_TARGET_HEADING = 162.0  # degrees
CASE2_MANEUVER = Maneuver(amplitude=5 * G0, omega=math.pi / 7)

CASE3_N = 5
CASE3_TARGET = (10000.0, 9000.0)
CASE3_RELATIVE_ANGLE = 25.0  # degrees
CASE3_SPEED = 600.0
CASE3_EPISODES = 200

# Desk budget: smaller networks and search noise so a few hundred
# generations at m=40 make visible progress on one core.
DESK_TRAIN = TrainConfig(
    generations=300,
    population=40,
    sigma=0.07,
    learning_rate=0.1,
    lr_min=0.02,
    hidden=(8, 8),
    bootstrap_samples=256,
)
FULL_TRAIN = TrainConfig()


@dataclass
class CaseConfig:
    """Everything needed to reproduce one run; round-trips through YAML/JSON."""

    case: str = "case1"
    preset: str = "desk"
    seed: int = 0
    eta: float = 0.3
    n_missiles: Optional[int] = None  # truncate case 1/2 to the first n missiles
    edges: Optional[list] = None  # topology as an edge list; default chain
    frameskip: Optional[int] = None
    time_limit: float = 60.0
    episodes: Optional[int] = None
    skip_training: bool = False
    checkpoint: Optional[str] = None
    out_dir: str = "runs"
    train: dict = field(default_factory=dict)  # TrainConfig overrides

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}; choose from {CASES}")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {PRESETS}")
        unknown = set(self.train) - {f.name for f in fields(TrainConfig)}
        if unknown:
            raise ValueError(f"unknown training keys {sorted(unknown)}")

    @classmethod
    def from_mapping(cls, doc: dict) -> "CaseConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_yaml(cls, path) -> "CaseConfig":
        doc = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(doc, dict):
            raise ValueError(f"{path}: expected a key/value mapping at top level")
        return cls.from_mapping(doc)

    def merged(self, **overrides) -> "CaseConfig":
        """Copy with non-None overrides; ``train`` dicts are merged key-wise."""
        changes = {k: v for k, v in overrides.items() if v is not None and k != "train"}
        train_over = {k: v for k, v in (overrides.get("train") or {}).items() if v is not None}
        return replace(self, **changes, train={**self.train, **train_over})

    def train_config(self) -> TrainConfig:
        base = DESK_TRAIN if self.preset == "desk" else FULL_TRAIN
        over = dict(self.train)
        if "hidden" in over:
            over["hidden"] = tuple(over["hidden"])
        return replace(base, seed=self.seed, **over)


# ---------------------------------------------------------------------------
# scenarios


def _topology(n: int, edges) -> Topology:
    return Topology.chain(n) if edges is None else Topology.from_edges(n, [tuple(e) for e in edges])


def case1_scenario(
    eta: float = 0.3,
    n_missiles: Optional[int] = None,
    edges=None,
    frameskip: int = 12,
    time_limit: float = 60.0,
    target: Optional[TargetState] = None,
    seed: int = 0,
) -> Scenario:
    n = len(CASE1_MISSILES) if n_missiles is None else n_missiles
    if not 1 <= n <= len(CASE1_MISSILES):
        raise ValueError(f"case 1 has between 1 and {len(CASE1_MISSILES)} missiles")
    missiles = tuple(
        MissileState(x, y, v, math.radians(a)) for x, y, a, v in CASE1_MISSILES[:n]
    )
    if target is None:
        target = TargetState(*CASE1_TARGET)
    scen = Scenario(
        missiles=missiles,
        target=target,
        topology=_topology(n, edges),
        angles=ImpactAngleSpec(0.0, tuple(math.radians(a) for a in CASE1_RELATIVE_ANGLES[: n - 1])),
        frameskip=frameskip,
        time_limit=time_limit,
        seed=seed,
    )
    return scen.with_eta(eta)


def case2_scenario(eta: float = 0.3, n_missiles=None, edges=None, frameskip: int = 12,
                   time_limit: float = 60.0, seed: int = 0) -> Scenario:
    target = TargetState(
        *CASE1_TARGET, v=CASE2_TARGET_SPEED, alpha=math.radians(CASE2_TARGET_HEADING),
        maneuver=CASE2_MANEUVER,
    )
    return case1_scenario(eta, n_missiles, edges, frameskip, time_limit, target, seed)


def case3_sampler(eta: float = 0.3, edges=None, frameskip: int = 40,
                  time_limit: float = 60.0) -> Callable[[np.random.Generator], Scenario]:
    """Scenario factory drawing the randomised launch points of case 3."""
    topology = _topology(CASE3_N, edges)
    angles = ImpactAngleSpec(0.0, (math.radians(CASE3_RELATIVE_ANGLE),) * (CASE3_N - 1))
    target = TargetState(*CASE3_TARGET)

    def sample(rng: np.random.Generator) -> Scenario:
        xs = rng.uniform(2000.0, 2600.0, size=CASE3_N)
        # missile i (counted from 1) is shifted down by 2000*i
        ys = rng.uniform(11000.0, 13000.0, size=CASE3_N) - 2000.0 * np.arange(1, CASE3_N + 1)
        missiles = tuple(MissileState(float(x), float(y), CASE3_SPEED, 0.0) for x, y in zip(xs, ys))
        return Scenario(missiles, target, topology, angles, frameskip=frameskip,
                        time_limit=time_limit).with_eta(eta)

    return sample


# ---------------------------------------------------------------------------
# result tables

METRICS = ("e_t", "e_a_deg", "zem")
STATS = ("mean", "max", "min")


@dataclass
class ResultTable:
    """Per-missile terminal errors.

    A single-episode table holds one signed value per metric and missile.
    A Monte-Carlo table keeps the per-episode absolute values (``episodes``,
    shape (E, n, 3) in :data:`METRICS` order) and derives mean/max/min from
    them on demand, so the statistics can always be re-derived.
    """

    values: Optional[np.ndarray] = None  # (n, 3), single episode
    episodes: Optional[np.ndarray] = None  # (E, n, 3), absolute values

    @classmethod
    def from_rollout(cls, res: RolloutResult) -> "ResultTable":
        return cls(values=np.column_stack([res.e_t, np.degrees(res.e_a), res.zem]))

    @classmethod
    def from_episodes(cls, results: list[RolloutResult]) -> "ResultTable":
        recs = np.stack([np.abs(cls.from_rollout(r).values) for r in results])
        return cls(episodes=recs)

    @property
    def monte_carlo(self) -> bool:
        return self.episodes is not None

    @property
    def n(self) -> int:
        return (self.episodes.shape[1] if self.monte_carlo else self.values.shape[0])

    def statistics(self) -> dict[str, dict[str, np.ndarray]]:
        if not self.monte_carlo:
            raise ValueError("statistics need a Monte-Carlo table")
        reducers = {"mean": np.mean, "max": np.max, "min": np.min}
        return {
            metric: {s: reducers[s](self.episodes[:, :, k], axis=0) for s in STATS}
            for k, metric in enumerate(METRICS)
        }

    def to_dict(self) -> dict:
        missiles = [f"M{i + 1}" for i in range(self.n)]
        if self.monte_carlo:
            stats = self.statistics()
            return {
                "missiles": missiles,
                "episodes": int(self.episodes.shape[0]),
                **{m: {s: stats[m][s].tolist() for s in STATS} for m in METRICS},
            }
        return {"missiles": missiles, **{m: self.values[:, k].tolist() for k, m in enumerate(METRICS)}}

    def rows(self) -> list[list]:
        """Printable rows: metric (and statistic) followed by one value per missile."""
        if self.monte_carlo:
            stats = self.statistics()
            return [[m, s, *stats[m][s].tolist()] for m in METRICS for s in STATS]
        return [[m, *self.values[:, k].tolist()] for k, m in enumerate(METRICS)]

    def format(self) -> str:
        header = ["metric"] + (["stat"] if self.monte_carlo else []) + [f"M{i + 1}" for i in range(self.n)]
        lines = ["  ".join(f"{h:>10}" for h in header)]
        for row in self.rows():
            cells = [f"{c:>10}" if isinstance(c, str) else f"{c:>10.3g}" for c in row]
            lines.append("  ".join(cells))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# running


@dataclass
class CaseOutcome:
    config: CaseConfig
    train_config: TrainConfig
    scenario: Scenario  # evaluation scenario (first episode for Monte-Carlo)
    ecosystem: nces.Ecosystem
    table: ResultTable
    rollouts: list[RolloutResult]
    training: Optional[TrainResult] = None


def _scenario_for(cfg: CaseConfig):
    """Return ``(base_scenario, sampler or None)`` for a case config."""
    fs = cfg.frameskip
    if cfg.case == "case1":
        return case1_scenario(cfg.eta, cfg.n_missiles, cfg.edges, fs or 12, cfg.time_limit, seed=cfg.seed), None
    if cfg.case == "case2":
        return case2_scenario(cfg.eta, cfg.n_missiles, cfg.edges, fs or 12, cfg.time_limit, seed=cfg.seed), None
    sampler = case3_sampler(cfg.eta, cfg.edges, fs or 40, cfg.time_limit)
    return sampler(np.random.default_rng([cfg.seed, 99])), sampler


def _episode_rng(seed: int, k: int) -> np.random.Generator:
    # evaluation episodes use their own stream, disjoint from training draws
    return np.random.default_rng(np.random.SeedSequence([seed, 7, k]))


def run_case(cfg: CaseConfig) -> CaseOutcome:
    """Train (or load) the case's policies, then evaluate them."""
    tcfg = cfg.train_config()
    scen, sampler = _scenario_for(cfg)
    eco = None
    if cfg.checkpoint and Path(cfg.checkpoint).exists():
        eco = nces.load_checkpoint(cfg.checkpoint)
        log.info("resumed from %s at generation %d", cfg.checkpoint, eco.generation)

    training = None
    if not cfg.skip_training:
        executor = ThreadPoolExecutor(tcfg.workers) if tcfg.workers > 1 else None
        try:
            training = train(scen, tcfg, sampler, ecosystem=eco, executor=executor)
        finally:
            if executor is not None:
                executor.shutdown()
        eco = training.ecosystem
    elif eco is None:
        eco = initial_ecosystem(scen.n, tcfg, scen.angles.nominal)

    if sampler is None:
        res = rollout(scen.with_nominal_angle(eco.nominal_angle), eco.params, eco.widths, record=True)
        rollouts = [res]
        table = ResultTable.from_rollout(res)
        eval_scen = scen
    else:
        episodes = cfg.episodes or (20 if cfg.preset == "desk" else CASE3_EPISODES)
        scens = [sampler(_episode_rng(cfg.seed, k)).with_nominal_angle(eco.nominal_angle)
                 for k in range(episodes)]
        rollouts = [rollout(s, eco.params, eco.widths, record=(k == 0)) for k, s in enumerate(scens)]
        table = ResultTable.from_episodes(rollouts)
        eval_scen = scens[0]
    return CaseOutcome(cfg, tcfg, eval_scen, eco, table, rollouts, training)


def config_echo(scenario: Scenario, tcfg: TrainConfig) -> dict:
    """Every physical constant and hyperparameter behind a run."""
    c, r, g, t = scenario.constraints, scenario.rewards, scenario.guidance, scenario.target
    return {
        "constraints": {
            "a_lmax_g": c.a_lmax / c.g,
            "a_vmax_g": c.a_vmax / c.g,
            "v_max": c.v_max,
            "v_min": c.v_min,
            "g": c.g,
        },
        "hyperparameters": {
            "tau_ms": scenario.tau * 1000.0,
            "eta": g.eta,
            "learning_rate": tcfg.learning_rate,
            "sigma": tcfg.sigma,
            "l": tcfg.lr_perturbations,
            "m": tcfg.population,
            "rho": tcfg.adaptation_cycle,
            "nav_constant": g.nav_constant,
            "k_a": r.k_a,
            "k_t": r.k_t,
            "xi_a": r.xi_a,
            "xi_t": r.xi_t,
            "lambda_a": r.gamma_a,
            "lambda_t": r.gamma_t,
            "beta_a": r.beta_a,
            "beta_t": r.beta_t,
        },
        "simulation": {
            "frameskip": scenario.frameskip,
            "time_limit": scenario.time_limit,
            "hit_threshold": scenario.hit_threshold,
            "near_miss_window": scenario.near_miss_window,
            "tgo_saturation": scenario.tgo_saturation,
        },
        "target": {
            "x": t.x,
            "y": t.y,
            "v": t.v,
            "alpha_deg": math.degrees(t.alpha),
            "maneuver_amplitude": t.maneuver.amplitude,
            "maneuver_omega": t.maneuver.omega,
            "maneuver_period": (2 * math.pi / t.maneuver.omega) if t.maneuver.omega else None,
        },
        "missiles": [
            {"x": m.x, "y": m.y, "v": m.v, "alpha_deg": math.degrees(m.alpha)} for m in scenario.missiles
        ],
        "topology_edges": [list(e) for e in scenario.topology.edges()],
        "relative_angles_deg": [math.degrees(a) for a in scenario.angles.relative],
        "training": {**asdict(tcfg), "hidden": list(tcfg.hidden)},
    }


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _long_rows(arr: np.ndarray):
    for row in arr:
        out = row.tolist()
        out[1] = int(out[1]) + 1  # missiles are reported as M1..Mn
        yield out


def emit_artifacts(outcome: CaseOutcome, out_dir) -> dict[str, Path]:
    """Write trajectories, error profiles, training history and a JSON summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectories": out / "trajectories.csv",
        "errors": out / "errors.csv",
        "history": out / "history.csv",
        "summary": out / "summary.json",
    }
    first = outcome.rollouts[0]
    _write_csv(paths["trajectories"], RolloutResult.traj_columns, _long_rows(first.trajectory))
    _write_csv(paths["errors"], RolloutResult.error_columns, _long_rows(first.errors))
    history = outcome.training.history if outcome.training else []
    write_history(paths["history"], history, outcome.scenario.n)

    if outcome.table.monte_carlo:
        paths["episodes"] = out / "episodes.csv"
        recs = outcome.table.episodes
        _write_csv(
            paths["episodes"],
            ["episode", "missile", *METRICS],
            ([k, i + 1, *recs[k, i].tolist()] for k in range(recs.shape[0]) for i in range(recs.shape[1])),
        )

    if outcome.training is not None:
        paths["checkpoint"] = out / "checkpoint.json"
        nces.save_checkpoint(paths["checkpoint"], outcome.ecosystem)

    summary = {
        "case": outcome.config.case,
        "seed": outcome.config.seed,
        "case_config": asdict(outcome.config),
        "result_table": outcome.table.to_dict(),
        "nominal_angle": outcome.ecosystem.nominal_angle,
        "generations_trained": outcome.ecosystem.generation,
        "final_learning_rate": outcome.ecosystem.learning_rate,
        "intercepted": [bool(x) for x in first.intercepted],
        "config": config_echo(outcome.scenario, outcome.train_config),
    }
    paths["summary"].write_text(json.dumps(summary, indent=2, default=_json_default))
    return paths


def _json_default(obj: Any):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def run_bench(trials: int = 200, m: int = 140, sigma: float = 0.2, seed: int = 0, out_dir=None):
    results, summary = run_study(trials, m, sigma, seed)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trials(out / "trials.csv", results)
        (out / "summary.json").write_text(json.dumps({**asdict(summary), "m": m, "sigma": sigma, "seed": seed,
                                                      "passed": summary.passed}, indent=2))
    return results, summary
