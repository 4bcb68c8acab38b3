"""Undirected communication graph and the consensus errors built on it.

Missiles are indexed from 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .engagement import wrap_angle

DEFAULT_TGO_SATURATION = 100.0


@dataclass(frozen=True, eq=False)
class Topology:
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("adjacency must be binary")
        if not _connected(a):
            raise ValueError("communication graph is not connected")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Topology":
        a = np.zeros((n, n))
        for i, j in edges:
            if i == j:
                raise ValueError(f"self loop on {i}")
            a[i, j] = a[j, i] = 1.0
        return cls(a)

    @classmethod
    def chain(cls, n: int) -> "Topology":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def complete(cls, n: int) -> "Topology":
        return cls(np.ones((n, n)) - np.eye(n))

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency))
        return [(int(a), int(b)) for a, b in zip(i, j)]

    def neighbors(self, i: int) -> set[int]:
        return neighbors(self, i)


def _connected(a: np.ndarray) -> bool:
    n = a.shape[0]
    if n == 0:
        return False
    seen = {0}
    stack = [0]
    while stack:
        k = stack.pop()
        for j in np.nonzero(a[k])[0]:
            if int(j) not in seen:
                seen.add(int(j))
                stack.append(int(j))
    return len(seen) == n


def neighbors(topology: Topology, i: int) -> set[int]:
    if not 0 <= i < topology.n:
        raise IndexError(f"missile index {i} out of range for n={topology.n}")
    return {int(j) for j in np.nonzero(topology.adjacency[i])[0]}


@njit(cache=True)
def tgo_difference(tgo_i, tgo_j, saturation):
    """``tgo_i - tgo_j`` with an opening-range (infinite) operand saturated."""
    inf_i = math.isinf(tgo_i)
    inf_j = math.isinf(tgo_j)
    if inf_i and inf_j:
        return 0.0
    if inf_i:
        return saturation
    if inf_j:
        return -saturation
    return tgo_i - tgo_j


@njit(cache=True)
def time_errors_core(tgo, adjacency, saturation, out):
    n = tgo.shape[0]
    for i in range(n):
        s = 0.0
        for j in range(n):
            if adjacency[i, j] != 0.0:
                s += tgo_difference(tgo[i], tgo[j], saturation)
        out[i] = s


@njit(cache=True)
def angle_errors_core(los_errors, adjacency, out):
    n = los_errors.shape[0]
    for i in range(n):
        s = 0.0
        for j in range(n):
            if adjacency[i, j] != 0.0:
                s += wrap_angle(los_errors[i] - los_errors[j])
        out[i] = s


def consensus_time_errors(
    t_go: Sequence[float], topology: Topology, saturation: float = DEFAULT_TGO_SATURATION
) -> np.ndarray:
    tgo = np.asarray(t_go, dtype=np.float64)
    if tgo.shape != (topology.n,):
        raise ValueError(f"expected {topology.n} time-to-go values")
    out = np.empty(topology.n)
    time_errors_core(tgo, topology.adjacency, saturation, out)
    return out


def consensus_time_error(
    t_go: Sequence[float], topology: Topology, i: int,
    saturation: float = DEFAULT_TGO_SATURATION,
) -> float:
    neighbors(topology, i)
    return float(consensus_time_errors(t_go, topology, saturation)[i])


def consensus_angle_errors(los_errors: Sequence[float], topology: Topology) -> np.ndarray:
    e = np.asarray(los_errors, dtype=np.float64)
    if e.shape != (topology.n,):
        raise ValueError(f"expected {topology.n} LOS errors")
    out = np.empty(topology.n)
    angle_errors_core(e, topology.adjacency, out)
    return out


def consensus_angle_error(los_errors: Sequence[float], topology: Topology, i: int) -> float:
    neighbors(topology, i)
    return float(consensus_angle_errors(los_errors, topology)[i])


@dataclass(frozen=True)
class ImpactAngleSpec:
    """Nominal desired LOS angle of missile 0 plus the relative offsets
    between consecutive missiles (radians)."""

    nominal: float = 0.0
    relative: tuple[float, ...] = field(default_factory=tuple)

    @property
    def n(self) -> int:
        return len(self.relative) + 1

    def with_nominal(self, nominal: float) -> "ImpactAngleSpec":
        return ImpactAngleSpec(float(nominal), tuple(self.relative))

    def desired(self) -> np.ndarray:
        return np.array([desired_impact_angle(self, i) for i in range(self.n)])


def desired_impact_angle(spec: ImpactAngleSpec, i: int) -> float:
    if not 0 <= i < spec.n:
        raise IndexError(f"missile index {i} out of range for n={spec.n}")
    return wrap_angle(spec.nominal + math.fsum(spec.relative[:i]))
