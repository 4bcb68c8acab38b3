"""Natural co-evolutionary strategy.

One Gaussian search distribution per missile ("population"), all centred on
that missile's policy genome and sharing one isotropic ``sigma``. A generation
draws ``m`` joint perturbation sets in mirrored pairs, every population is
evaluated jointly, and each population's natural-gradient estimate is
reweighted by the likelihood of the perturbations its neighbours drew in the
same sample (the confidence). All populations are then updated from the same
snapshot.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .topology import Topology

LR_MIN = 1e-4
LR_MAX = 0.1


@dataclass(frozen=True, eq=False)
class Ecosystem:
    params: np.ndarray  # (n, P), one genome per population
    sigma: float = 0.2
    learning_rate: float = 0.015
    generation: int = 0
    nominal_angle: float = 0.0
    widths: tuple[int, int] = (16, 16)
    lr_bounds: tuple[float, float] = (LR_MIN, LR_MAX)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        lo, hi = self.lr_bounds
        if not lo <= self.learning_rate <= hi:
            raise ValueError(f"learning rate {self.learning_rate} outside [{lo}, {hi}]")
        p = np.array(self.params, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError("params must be (populations, dimension)")
        p.setflags(write=False)
        object.__setattr__(self, "params", p)

    @property
    def n(self) -> int:
        return self.params.shape[0]

    @property
    def dim(self) -> int:
        return self.params.shape[1]


@dataclass(eq=False)
class Generation:
    perturbations: np.ndarray  # (m, n, P); sample k and k + m/2 are mirrors
    sigma: float
    fitness: Optional[np.ndarray] = None  # (m, n) raw per-population fitness
    index: int = 0

    @property
    def m(self) -> int:
        return self.perturbations.shape[0]

    def samples(self, params: np.ndarray) -> np.ndarray:
        """Joint perturbed parameter sets, shape (m, n, P)."""
        return params[None, :, :] + self.perturbations

    def shaped(self, i: int) -> np.ndarray:
        if self.fitness is None:
            raise ValueError("generation has not been evaluated")
        return shape_fitness(self.fitness[:, i])


def sample_generation(ecosystem: Ecosystem, m: int, rng_seed) -> Generation:
    """Draw ``m`` mirrored joint perturbation sets; reproducible for a seed."""
    if m < 2 or m % 2:
        raise ValueError(f"population size must be even and >= 2, got {m}")
    rng = np.random.default_rng(rng_seed)
    half = rng.normal(0.0, ecosystem.sigma, size=(m // 2, ecosystem.n, ecosystem.dim))
    return Generation(np.concatenate([half, -half]), ecosystem.sigma, index=ecosystem.generation)


def rank_utilities(m: int) -> np.ndarray:
    """Utilities by rank (index 0 is the best), summing to zero."""
    raw = np.maximum(0.0, math.log(m / 2 + 1) - np.log(np.arange(1, m + 1)))
    return raw / raw.sum() - 1.0 / m


def shape_fitness(raw) -> np.ndarray:
    """Rank-based fitness shaping; tied values share their mean utility."""
    raw = np.asarray(raw, dtype=np.float64)
    m = raw.shape[0]
    if m < 2:
        raise ValueError("need at least two fitness values")
    util = rank_utilities(m)
    order = np.argsort(-raw, kind="stable")
    out = np.zeros(m)
    if raw[order[0]] == raw[order[-1]]:
        return out
    start = 0
    while start < m:
        stop = start + 1
        while stop < m and raw[order[stop]] == raw[order[start]]:
            stop += 1
        out[order[start:stop]] = util[start:stop].mean()
        start = stop
    return out


def log_confidence(generation: Generation, topology: Topology, i: int) -> np.ndarray:
    """Joint log-density of the neighbours' perturbations, per sample."""
    nbrs = sorted(topology.neighbors(i))
    eps = generation.perturbations
    s2 = generation.sigma ** 2
    dim = eps.shape[2]
    out = np.zeros(generation.m)
    for c in nbrs:
        sq = np.einsum("kd,kd->k", eps[:, c, :], eps[:, c, :])
        out += -0.5 * sq / s2 - 0.5 * dim * math.log(2 * math.pi * s2)
    return out


def confidence_weights(generation: Generation, topology: Topology, i: int) -> np.ndarray:
    """Neighbour-confidence weights normalised so the largest is exactly 1."""
    logl = log_confidence(generation, topology, i)
    return np.exp(logl - logl.max())


def estimate_gradient(
    generation: Generation,
    i: int,
    topology: Optional[Topology] = None,
    mode: str = "rescaled",
    shaping: bool = True,
) -> np.ndarray:
    """Search-gradient estimate for population ``i``.

    ``mode="plain"`` is the ordinary NES estimator (all weights 1);
    ``"rescaled"`` multiplies each sample by its neighbour confidence.
    """
    if generation.fitness is None:
        raise ValueError("generation has not been evaluated")
    f = generation.shaped(i) if shaping else generation.fitness[:, i]
    if mode == "rescaled":
        if topology is None:
            raise ValueError("rescaled mode needs the topology")
        f = f * confidence_weights(generation, topology, i)
    elif mode != "plain":
        raise ValueError(f"unknown gradient mode {mode!r}")
    eps = generation.perturbations[:, i, :]
    # summing each mirrored half on its own makes the halves cancel bit-exactly
    # whenever the weighted fitness is symmetric (e.g. constant)
    h = generation.m // 2
    total = f[:h] @ eps[:h] + f[h:] @ eps[h:]
    return total / (generation.m * generation.sigma ** 2)


def estimate_gradients(generation: Generation, topology: Topology, mode: str = "rescaled") -> np.ndarray:
    n = generation.perturbations.shape[1]
    return np.stack([estimate_gradient(generation, i, topology, mode) for i in range(n)])


def update_params(ecosystem: Ecosystem, gradients) -> Ecosystem:
    g = np.asarray(gradients, dtype=np.float64)
    if g.shape != ecosystem.params.shape:
        raise ValueError(f"gradient shape {g.shape} != parameter shape {ecosystem.params.shape}")
    return replace(
        ecosystem,
        params=ecosystem.params + ecosystem.learning_rate * g,
        generation=ecosystem.generation + 1,
    )


def lr_candidates(lr: float, l: int, lo: float = LR_MIN, hi: float = LR_MAX) -> np.ndarray:
    ks = np.arange(-(l // 2), l // 2 + 1)
    return np.array([min(max((1 + 0.1 * int(k)) * lr, lo), hi) for k in ks])


@dataclass
class LrAdaptation:
    learning_rate: float
    candidates: np.ndarray
    scores: np.ndarray  # summed G per candidate


def adapt_learning_rate(
    ecosystem: Ecosystem,
    gradients,
    evaluator: Callable[[np.ndarray], np.ndarray],
    l: int = 20,
    mapper: Callable = map,
) -> LrAdaptation:
    """Elitist learning-rate selection.

    ``evaluator`` maps joint parameters (n, P) to per-population fitness.
    Each candidate rate is scored by the summed fitness gain of stepping with
    it over stepping with the current rate; the best candidate wins (lowest
    index on ties). ``mapper`` may be an executor's ``map``.
    """
    g = np.asarray(gradients, dtype=np.float64)
    lr = ecosystem.learning_rate
    cands = lr_candidates(lr, l, *ecosystem.lr_bounds)
    centre = l // 2
    trials = [ecosystem.params + lr * g] + [
        ecosystem.params + c * g for k, c in enumerate(cands) if k != centre
    ]
    results = [np.asarray(f, dtype=np.float64) for f in mapper(evaluator, trials)]
    base = results[0]
    gains = iter(results[1:])
    scores = np.empty(len(cands))
    for k in range(len(cands)):
        scores[k] = 0.0 if k == centre else float(np.sum(next(gains) - base))
    best = int(np.argmax(scores))
    return LrAdaptation(float(cands[best]), cands, scores)


@dataclass
class AngleBootstrap:
    nominal_angle: float
    samples: np.ndarray
    scores: np.ndarray


def bootstrap_impact_angle(
    evaluator: Callable[[np.ndarray, float], np.ndarray],
    theta_init,
    h: int = 16,
    rng_seed=None,
    mapper: Callable = map,
) -> AngleBootstrap:
    """Pick the nominal desired LOS angle that maximises total fitness of the
    initial policies among ``h`` uniform draws on [-pi, pi]."""
    if h < 1:
        raise ValueError("need at least one bootstrap sample")
    rng = np.random.default_rng(rng_seed)
    angles = rng.uniform(-math.pi, math.pi, size=h)
    theta = np.asarray(theta_init, dtype=np.float64)
    totals = np.array([
        float(np.sum(f)) for f in mapper(lambda a: evaluator(theta, float(a)), angles)
    ])
    best = int(np.argmax(totals))
    return AngleBootstrap(float(angles[best]), angles, totals)


def save_checkpoint(path, ecosystem: Ecosystem) -> None:
    doc = {
        "generation": ecosystem.generation,
        "learning_rate": ecosystem.learning_rate,
        "sigma": ecosystem.sigma,
        "nominal_angle": ecosystem.nominal_angle,
        "widths": list(ecosystem.widths),
        "lr_bounds": list(ecosystem.lr_bounds),
        "params": ecosystem.params.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path) -> Ecosystem:
    doc = json.loads(Path(path).read_text())
    return Ecosystem(
        params=np.array(doc["params"], dtype=np.float64),
        sigma=doc["sigma"],
        learning_rate=doc["learning_rate"],
        generation=doc["generation"],
        nominal_angle=doc["nominal_angle"],
        widths=tuple(doc["widths"]),
        lr_bounds=tuple(doc["lr_bounds"]),
    )
