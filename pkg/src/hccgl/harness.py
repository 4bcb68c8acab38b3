"""Closed-loop episodes, master/worker generation evaluation and the training loop."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import nces
from ._kernel import DIAG_COLUMNS, ERROR_COLUMNS, TRAJ_COLUMNS, rollout_kernel
from .engagement import Constraints, MissileState, TargetState
from .guidance import GuidanceParams
from .nces import Ecosystem, Generation
from .policy import param_count
from .reward import RewardParams
from .topology import DEFAULT_TGO_SATURATION, ImpactAngleSpec, Topology

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Scenario:
    missiles: tuple[MissileState, ...]
    target: TargetState
    topology: Topology
    angles: ImpactAngleSpec
    constraints: Constraints = Constraints()
    rewards: RewardParams = RewardParams()
    guidance: GuidanceParams = GuidanceParams()
    tau: float = 0.005
    frameskip: int = 12
    time_limit: float = 60.0
    hit_threshold: float = 0.5
    near_miss_window: float = 5.0
    tgo_saturation: float = DEFAULT_TGO_SATURATION
    seed: int = 0

    def __post_init__(self):
        n = len(self.missiles)
        if n < 1:
            raise ValueError("scenario needs at least one missile")
        if self.topology.n != n or self.angles.n != n:
            raise ValueError("topology, impact-angle spec and missile count disagree")
        if not all(m.active for m in self.missiles):
            raise ValueError("all missiles must start active")
        if self.tau <= 0 or self.frameskip < 1 or self.time_limit <= 0:
            raise ValueError("need tau > 0, frameskip >= 1 and a positive time limit")

    @property
    def n(self) -> int:
        return len(self.missiles)

    @property
    def eval_interval(self) -> float:
        return self.tau * self.frameskip

    @property
    def fitness_floor(self) -> float:
        """Worst achievable episode fitness (flight-reward infimum over the whole time limit)."""
        return self.rewards.flight_floor * self.time_limit

    def with_nominal_angle(self, angle: float) -> "Scenario":
        return replace(self, angles=self.angles.with_nominal(angle))

    def with_eta(self, eta: float) -> "Scenario":
        return replace(self, guidance=replace(self.guidance, eta=eta))

    @cached_property
    def _arrays(self):
        m0 = np.array([[m.x, m.y, m.v, m.alpha] for m in self.missiles], dtype=np.float64)
        t = self.target
        tgt = np.array([t.x, t.y, t.v, t.alpha], dtype=np.float64)
        man = np.array([t.maneuver.bias, t.maneuver.amplitude, t.maneuver.omega], dtype=np.float64)
        c = self.constraints
        limits = np.array([c.a_lmax, c.a_vmax, c.v_min, c.v_max], dtype=np.float64)
        r = self.rewards
        rew = np.array([r.gamma_a, r.gamma_t, r.xi_a, r.xi_t, r.k_a, r.k_t, r.beta_a, r.beta_t])
        return m0, tgt, man, np.ascontiguousarray(self.topology.adjacency), self.angles.desired(), limits, rew


@dataclass(eq=False)
class RolloutResult:
    fitness: np.ndarray
    e_t: np.ndarray
    e_a: np.ndarray
    e_xi: np.ndarray
    zem: np.ndarray
    impact_time: np.ndarray
    intercepted: np.ndarray
    aborted: bool
    duration: float
    trajectory: Optional[np.ndarray] = None
    errors: Optional[np.ndarray] = None

    traj_columns = TRAJ_COLUMNS
    error_columns = ERROR_COLUMNS


def rollout(scenario: Scenario, params, widths: tuple[int, int] = (16, 16), record: bool = False) -> RolloutResult:
    """Simulate one closed-loop episode with per-missile genomes ``params``."""
    q1, q2 = widths
    theta = np.ascontiguousarray(params, dtype=np.float64)
    if theta.shape != (scenario.n, param_count(q1, q2)):
        raise ValueError(f"params shape {theta.shape} does not match {scenario.n} x {param_count(q1, q2)}")
    m0, tgt, man, adj, desired, limits, rew = scenario._arrays
    g = scenario.guidance
    fitness, diag, aborted, t_end, traj, errs = rollout_kernel(
        m0, tgt, man, adj, desired, theta, q1, q2, limits, rew,
        g.nav_constant, g.eta, scenario.tau, scenario.frameskip, scenario.time_limit,
        scenario.hit_threshold, scenario.near_miss_window, scenario.tgo_saturation,
        scenario.fitness_floor, record,
    )
    cols = {name: diag[:, k].copy() for k, name in enumerate(DIAG_COLUMNS)}
    return RolloutResult(
        fitness=fitness,
        e_t=cols["e_t"],
        e_a=cols["e_a"],
        e_xi=cols["e_xi"],
        zem=cols["zem"],
        impact_time=cols["impact_time"],
        intercepted=cols["intercepted"] == 1.0,
        aborted=bool(aborted),
        duration=float(t_end),
        trajectory=traj if record else None,
        errors=errs if record else None,
    )


def _fitness_with_retry(fn: Callable, scenario: Scenario, params, widths) -> np.ndarray:
    for attempt in (1, 2):
        try:
            return np.asarray(fn(scenario, params, widths).fitness, dtype=np.float64)
        except Exception:  # noqa: BLE001 - any worker failure is retried then floored
            log.warning("rollout failed (attempt %d)", attempt, exc_info=True)
    return np.full(scenario.n, scenario.fitness_floor)


def map_rollouts(
    scenario: Scenario,
    param_sets,
    widths: tuple[int, int],
    executor: Optional[Executor] = None,
    rollout_fn: Callable = rollout,
) -> np.ndarray:
    """Fitness for each joint parameter set, in input order."""
    tasks = list(param_sets)
    if executor is None:
        rows = [_fitness_with_retry(rollout_fn, scenario, p, widths) for p in tasks]
    else:
        futures = [executor.submit(_fitness_with_retry, rollout_fn, scenario, p, widths) for p in tasks]
        rows = [f.result() for f in futures]
    return np.array(rows).reshape(len(tasks), scenario.n)


def evaluate_generation(
    scenario: Scenario,
    ecosystem: Ecosystem,
    generation: Generation,
    executor: Optional[Executor] = None,
    rollout_fn: Callable = rollout,
) -> Generation:
    """Roll out every joint sample of ``generation`` (optionally on worker
    threads) and return it with raw fitnesses filled in sample order."""
    samples = generation.samples(ecosystem.params)
    fitness = map_rollouts(scenario, samples, ecosystem.widths, executor, rollout_fn)
    return replace(generation, fitness=fitness)


@dataclass
class TrainConfig:
    generations: int = 300
    population: int = 140
    sigma: float = 0.2
    learning_rate: float = 0.015
    lr_min: float = nces.LR_MIN
    lr_max: float = nces.LR_MAX
    lr_perturbations: int = 20
    adaptation_cycle: int = 50
    bootstrap_samples: int = 16
    hidden: tuple[int, int] = (16, 16)
    gradient_mode: str = "rescaled"
    init_scale: float = 1.0
    workers: int = 1
    seed: int = 0
    plateau_patience: Optional[int] = None
    plateau_tol: float = 1e-3


@dataclass
class HistoryRow:
    generation: int
    mean_fitness: np.ndarray  # per missile, over the generation's samples
    centre_fitness: np.ndarray  # per missile, unperturbed genomes before the update
    learning_rate: float


@dataclass
class TrainResult:
    ecosystem: Ecosystem
    history: list[HistoryRow] = field(default_factory=list)
    bootstrap: Optional[nces.AngleBootstrap] = None
    adaptations: list[nces.LrAdaptation] = field(default_factory=list)

    def mean_fitness(self) -> np.ndarray:
        """Population-and-missile mean fitness per generation."""
        return np.array([row.mean_fitness.mean() for row in self.history])


def _seed(cfg_seed: int, *tags: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([cfg_seed, *tags])


def initial_ecosystem(n: int, config: TrainConfig, nominal_angle: float = 0.0) -> Ecosystem:
    q1, q2 = config.hidden
    rng = np.random.default_rng(_seed(config.seed, 0))
    params = config.init_scale * rng.standard_normal((n, param_count(q1, q2)))
    # output layer starts at zero: initial command is pure PN, but W3 gets a first-order signal
    params[:, param_count(q1, q2) - 2 * q2:] = 0.0
    return Ecosystem(
        params=params,
        sigma=config.sigma,
        learning_rate=config.learning_rate,
        nominal_angle=nominal_angle,
        widths=(q1, q2),
        lr_bounds=(config.lr_min, config.lr_max),
    )


def train(
    scenario: Scenario,
    config: TrainConfig,
    scenario_sampler: Optional[Callable[[np.random.Generator], Scenario]] = None,
    ecosystem: Optional[Ecosystem] = None,
    executor: Optional[Executor] = None,
    rollout_fn: Callable = rollout,
) -> TrainResult:
    """Bootstrap the nominal impact angle, then evolve every population.

    ``scenario_sampler`` draws a fresh scenario (e.g. random initial
    conditions) for each generation; all samples of a generation share it.
    Passing ``ecosystem`` resumes from a checkpoint and skips bootstrapping.
    """
    own_executor = None
    if executor is None and config.workers > 1:
        executor = own_executor = ThreadPoolExecutor(max_workers=config.workers)
    try:
        return _train(scenario, config, scenario_sampler, ecosystem, executor, rollout_fn)
    finally:
        if own_executor is not None:
            own_executor.shutdown()


def _train(scenario, config, scenario_sampler, ecosystem, executor, rollout_fn) -> TrainResult:
    mapper = executor.map if executor is not None else map
    result = TrainResult(ecosystem=ecosystem)  # type: ignore[arg-type]
    if ecosystem is None:
        eco = initial_ecosystem(scenario.n, config, scenario.angles.nominal)
        if config.bootstrap_samples > 0:
            boot_scenario = scenario
            if scenario_sampler is not None:
                boot_scenario = scenario_sampler(np.random.default_rng(_seed(config.seed, 2)))

            def angle_fitness(theta, angle):
                return rollout_fn(boot_scenario.with_nominal_angle(angle), theta, eco.widths).fitness

            result.bootstrap = nces.bootstrap_impact_angle(
                angle_fitness, eco.params, config.bootstrap_samples, _seed(config.seed, 1), mapper
            )
            eco = replace(eco, nominal_angle=result.bootstrap.nominal_angle)
    else:
        eco = ecosystem

    best = -math.inf
    stale = 0
    for _ in range(config.generations):
        gen = eco.generation
        if scenario_sampler is not None:
            base = scenario_sampler(np.random.default_rng(_seed(config.seed, 3, gen)))
        else:
            base = scenario
        scen = base.with_nominal_angle(eco.nominal_angle)

        generation = nces.sample_generation(eco, config.population, _seed(config.seed, 4, gen))
        generation = evaluate_generation(scen, eco, generation, executor, rollout_fn)
        grads = nces.estimate_gradients(generation, scen.topology, config.gradient_mode)
        centre = map_rollouts(scen, [eco.params], eco.widths, None, rollout_fn)[0]
        result.history.append(
            HistoryRow(gen, generation.fitness.mean(axis=0), centre, eco.learning_rate)
        )

        updated = nces.update_params(eco, grads)
        if config.adaptation_cycle and (gen + 1) % config.adaptation_cycle == 0:

            def joint_fitness(theta, scen=scen):
                return _fitness_with_retry(rollout_fn, scen, theta, eco.widths)

            adapt = nces.adapt_learning_rate(eco, grads, joint_fitness, config.lr_perturbations, mapper)
            result.adaptations.append(adapt)
            updated = replace(updated, learning_rate=adapt.learning_rate)
            log.info("generation %d: learning rate %.5g -> %.5g", gen, eco.learning_rate, adapt.learning_rate)
        eco = updated

        mean = float(result.history[-1].mean_fitness.mean())
        log.debug("generation %d mean fitness %.3f", gen, mean)
        if config.plateau_patience:
            if mean > best + config.plateau_tol * max(1.0, abs(best)):
                best, stale = mean, 0
            else:
                stale += 1
                if stale >= config.plateau_patience:
                    break

    result.ecosystem = eco
    return result


def write_history(path, history: list[HistoryRow], n: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["generation"]
            + [f"mean_fitness_{i + 1}" for i in range(n)]
            + [f"centre_fitness_{i + 1}" for i in range(n)]
            + ["learning_rate"]
        )
        for row in history:
            w.writerow(
                [row.generation, *map(repr, row.mean_fitness.tolist()),
                 *map(repr, row.centre_fitness.tolist()), repr(row.learning_rate)]
            )
