"""Three-layer perceptron consensus controller and its flat genome codec.

Genome layout: ``W1`` (3 x q1), ``W2`` (q1 x q2), ``W3`` (q2 x 2), each
row-major, concatenated in that order. No biases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

N_INPUTS = 3
N_OUTPUTS = 2


def param_count(q1: int, q2: int) -> int:
    return N_INPUTS * q1 + q1 * q2 + N_OUTPUTS * q2


@njit(cache=True)
def _sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))


@njit(cache=True)
def forward_core(theta, q1, q2, e_a, e_t, e_xi, a_lmax, a_vmax):
    s0 = _sigmoid(e_a)
    s1 = _sigmoid(e_t)
    s2 = _sigmoid(e_xi)
    w2_off = N_INPUTS * q1
    w3_off = w2_off + q1 * q2
    h1 = np.empty(q1)
    for j in range(q1):
        z = theta[j] * s0 + theta[q1 + j] * s1 + theta[2 * q1 + j] * s2
        h1[j] = _sigmoid(z)
    raw0 = 0.0
    raw1 = 0.0
    for k in range(q2):
        z2 = 0.0
        for j in range(q1):
            z2 += theta[w2_off + j * q2 + k] * h1[j]
        raw0 += theta[w3_off + 2 * k] * z2
        raw1 += theta[w3_off + 2 * k + 1] * z2
    return a_lmax * math.tanh(raw0), a_vmax * math.tanh(raw1)


@dataclass(frozen=True, eq=False)
class PolicyNetwork:
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    a_lmax: float = 50 * 9.81
    a_vmax: float = 5 * 9.81

    def __post_init__(self):
        q1 = self.w1.shape[1]
        q2 = self.w2.shape[1]
        if self.w1.shape != (N_INPUTS, q1) or self.w2.shape != (q1, q2) or self.w3.shape != (q2, N_OUTPUTS):
            raise ValueError(
                f"inconsistent weight shapes {self.w1.shape}, {self.w2.shape}, {self.w3.shape}"
            )

    @property
    def widths(self) -> tuple[int, int]:
        return self.w1.shape[1], self.w2.shape[1]

    @classmethod
    def zeros(cls, q1: int = 16, q2: int = 16, **scales) -> "PolicyNetwork":
        return decode(np.zeros(param_count(q1, q2)), q1, q2, **scales)


def encode(net: PolicyNetwork) -> np.ndarray:
    return np.concatenate([net.w1.ravel(), net.w2.ravel(), net.w3.ravel()]).astype(np.float64)


def decode(vec, q1: int, q2: int, a_lmax: float = 50 * 9.81, a_vmax: float = 5 * 9.81) -> PolicyNetwork:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (param_count(q1, q2),):
        raise ValueError(
            f"parameter vector of shape {vec.shape} does not match widths ({q1}, {q2}); "
            f"expected {param_count(q1, q2)} values"
        )
    a = N_INPUTS * q1
    b = a + q1 * q2
    return PolicyNetwork(
        vec[:a].reshape(N_INPUTS, q1).copy(),
        vec[a:b].reshape(q1, q2).copy(),
        vec[b:].reshape(q2, N_OUTPUTS).copy(),
        a_lmax,
        a_vmax,
    )


def forward(net: PolicyNetwork, x) -> tuple[float, float]:
    """Map the observation ``(e_a, e_t, e_xi)`` to ``(a_l, a_v)``."""
    e_a, e_t, e_xi = (float(v) for v in x)
    q1, q2 = net.widths
    return forward_core(encode(net), q1, q2, e_a, e_t, e_xi, net.a_lmax, net.a_vmax)


def to_bytes(vec) -> bytes:
    return np.asarray(vec, dtype="<f8").tobytes()


def from_bytes(buf: bytes) -> np.ndarray:
    return np.frombuffer(buf, dtype="<f8").astype(np.float64)
