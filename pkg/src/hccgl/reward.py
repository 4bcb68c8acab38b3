"""Per-evaluation-step rewards and the per-missile fitness accumulator."""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit


@dataclass(frozen=True)
class RewardParams:
    # terminal weights; the hyper-parameter table lists them as lambda_a/lambda_t
    gamma_a: float = 4000.0
    gamma_t: float = 2000.0
    xi_a: float = 10.0
    xi_t: float = 1.0
    k_a: float = 1.0
    k_t: float = 0.2
    beta_a: float = 10.0
    beta_t: float = 2.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")

    @property
    def flight_floor(self) -> float:
        """Infimum of the flight reward rate."""
        return -(self.beta_a + self.beta_t)


@njit(cache=True)
def terminal_reward_core(e_xi, e_t, gamma_a, gamma_t, xi_a, xi_t):
    return gamma_a * math.exp(-xi_a * abs(e_xi)) + gamma_t * math.exp(-xi_t * abs(e_t))


@njit(cache=True)
def flight_reward_core(e_a, e_t, beta_a, beta_t, k_a, k_t):
    return beta_a * (math.exp(-k_a * abs(e_a)) - 1.0) + beta_t * (math.exp(-k_t * abs(e_t)) - 1.0)


def terminal_reward(e_xi: float, e_t: float, is_terminal_step: bool, params: RewardParams) -> float:
    if not is_terminal_step:
        return 0.0
    p = params
    return terminal_reward_core(e_xi, e_t, p.gamma_a, p.gamma_t, p.xi_a, p.xi_t)


def flight_reward(e_a: float, e_t: float, params: RewardParams) -> float:
    p = params
    return flight_reward_core(e_a, e_t, p.beta_a, p.beta_t, p.k_a, p.k_t)


class TerminalAlreadyApplied(RuntimeError):
    pass


@dataclass(frozen=True)
class FitnessAccumulator:
    fitness: float = 0.0
    terminal_applied: bool = False


def accumulate(
    acc: FitnessAccumulator,
    r_flight: float,
    r_terminal: float,
    dt_eval: float,
    terminal: bool = False,
) -> FitnessAccumulator:
    """Add one evaluation step's rewards.

    The flight reward is integrated as a rectangle of width ``dt_eval``; the
    terminal reward is added as-is, once, and only when ``terminal`` is set.
    """
    fitness = acc.fitness + r_flight * dt_eval
    if not terminal:
        return FitnessAccumulator(fitness, acc.terminal_applied)
    if acc.terminal_applied:
        raise TerminalAlreadyApplied("terminal reward already added this episode")
    return FitnessAccumulator(fitness + r_terminal, True)
