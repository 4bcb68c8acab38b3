"""Two-parameter eggholder testbed for the neighbour-confidence gradient estimator.

Population ``i`` owns ``theta_i``; its single neighbour owns ``theta_c``. Because
the neighbour is itself being sampled, the objective population ``i`` actually
faces is the marginal of the eggholder variant over the neighbour's Gaussian.
The study below asks which estimator tracks the derivative of that marginal
more closely: the plain search gradient, or the one whose samples are
reweighted by the likelihood of the neighbour's perturbation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

DOMAIN = (-2.0, 2.0)
MIN_RESOLUTION = 16


@dataclass(frozen=True)
class BenchPoint:
    theta_i: float
    theta_c: float

    def __post_init__(self):
        lo, hi = DOMAIN
        if not (lo <= self.theta_i <= hi and lo <= self.theta_c <= hi):
            raise ValueError(f"bench point {self} outside [{lo}, {hi}]^2")


def eggholder_variant(theta_i, theta_c):
    """Scaled, shifted eggholder surface on two scalars (broadcasts)."""
    theta_i = np.asarray(theta_i, dtype=np.float64)
    a = 30.0 * np.asarray(theta_c, dtype=np.float64) + 47.0
    first = a * np.sin(np.sqrt(np.abs(a + 15.0 * theta_i)))
    second = 30.0 * theta_i * np.sin(np.sqrt(np.abs(30.0 * theta_i - a)))
    out = (first - second) / 200.0 - 0.2
    return float(out) if out.ndim == 0 else out


def eggholder_kinks(theta_i: float) -> tuple[float, ...]:
    """Neighbour values where an absolute-value argument of the variant
    vanishes; the integrand has square-root cusps there."""
    a = (-47.0 - 15.0 * theta_i) / 30.0
    b = (30.0 * theta_i - 47.0) / 30.0
    lo, hi = DOMAIN
    return tuple(sorted(p for p in (a, b) if lo < p < hi))


def _nodes(resolution: int, breakpoints) -> np.ndarray:
    lo, hi = DOMAIN
    edges = [lo, *sorted(p for p in breakpoints if lo < p < hi), hi]
    if len(edges) == 2:
        return np.linspace(lo, hi, resolution)
    # one uniform sub-grid per piece, sized by its share of the domain, so the
    # nodes slide continuously as the breakpoints move
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(2, int(round((resolution - 1) * (b - a) / (hi - lo))) + 1)
        pieces.append(np.linspace(a, b, k)[:-1])
    return np.append(np.concatenate(pieces), hi)


def marginal_objective(
    theta_i: float,
    sigma: float,
    resolution: int = 2048,
    mu_c: float = 0.0,
    objective: Callable = eggholder_variant,
    breakpoints=(),
) -> float:
    """Expected objective over a neighbour drawn from N(mu_c, sigma^2),
    truncated to the bench domain and integrated by the trapezoid rule.

    ``breakpoints`` (optional) split the domain so that cusps of the
    integrand fall on nodes.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"quadrature resolution must be >= {MIN_RESOLUTION}")
    tc = _nodes(resolution, breakpoints)
    dens = np.exp(-0.5 * ((tc - mu_c) / sigma) ** 2)
    vals = np.broadcast_to(objective(theta_i, tc), tc.shape)
    return float(np.trapezoid(vals * dens, tc) / np.trapezoid(dens, tc))


def marginal_gradient(theta_i, sigma, mu_c=0.0, h=1e-4, resolution=8193, objective=eggholder_variant) -> float:
    """Central finite difference of :func:`marginal_objective` in ``theta_i``.

    For the eggholder variant the quadrature grid is split at the cusps of
    each shifted point. A fixed uniform grid would let a cusp cross a node
    between the two evaluations, and the difference quotient would amplify
    that jump by ``1/h``.
    """
    def at(t):
        bps = eggholder_kinks(t) if objective is eggholder_variant else ()
        return marginal_objective(t, sigma, resolution, mu_c, objective, bps)

    return (at(theta_i + h) - at(theta_i - h)) / (2.0 * h)


@dataclass(frozen=True)
class TrialResult:
    seed: int
    m: int
    sigma: float
    mu_i: float
    mu_c: float
    reference: float
    plain: float
    rescaled: float
    error_plain: float
    error_rescaled: float
    cos_plain: float
    cos_rescaled: float

    @property
    def rescaled_wins(self) -> bool:
        return self.error_rescaled < self.error_plain


def _sign_cos(g, ref) -> float:
    # cosine similarity degenerates to the sign agreement for scalars
    if g == 0.0 or ref == 0.0:
        return 0.0
    return math.copysign(1.0, g * ref)


def gradient_comparison_trial(
    m: int = 140,
    sigma: float = 0.2,
    seed: int = 0,
    centre: Optional[tuple[float, float]] = None,
    objective: Callable = eggholder_variant,
) -> TrialResult:
    """Draw ``m`` mirrored joint perturbations around a centre and score both
    estimators against the finite-difference marginal gradient.

    Fitness values are min-max normalised to [0, 1] first; the reference is
    divided by the same span, so errors are unaffected by that scaling. The
    rescaled estimator normalises by the weight total rather than by ``m`` so
    the two estimates live on the same scale.
    When ``centre`` is omitted it is drawn uniformly from [-1.5, 1.5]^2.
    """
    if m < 2 or m % 2:
        raise ValueError(f"m must be even and >= 2, got {m}")
    rng = np.random.default_rng(seed)
    mu_i, mu_c = centre if centre is not None else rng.uniform(-1.5, 1.5, size=2)
    half = rng.normal(0.0, sigma, size=(m // 2, 2))
    eps = np.concatenate([half, -half])
    f = np.broadcast_to(objective(mu_i + eps[:, 0], mu_c + eps[:, 1]), (m,)).astype(np.float64)
    ref = marginal_gradient(mu_i, sigma, mu_c, objective=objective)

    span = f.max() - f.min()
    if span > 0:
        f = (f - f.min()) / span
        ref = ref / span
    else:
        f = np.zeros(m)

    w = np.exp(-0.5 * (eps[:, 1] / sigma) ** 2)
    w /= w.max()
    plain = float(f @ eps[:, 0] / (m * sigma**2))
    rescaled = float((f * w) @ eps[:, 0] / (w.sum() * sigma**2))

    def rel(g):
        return abs(g - ref) / abs(ref) if ref != 0.0 else abs(g)

    return TrialResult(
        seed=seed, m=m, sigma=sigma, mu_i=float(mu_i), mu_c=float(mu_c),
        reference=float(ref), plain=plain, rescaled=rescaled,
        error_plain=rel(plain), error_rescaled=rel(rescaled),
        cos_plain=_sign_cos(plain, ref), cos_rescaled=_sign_cos(rescaled, ref),
    )


@dataclass(frozen=True)
class StudySummary:
    trials: int
    win_fraction: float
    median_error_plain: float
    median_error_rescaled: float

    @property
    def passed(self) -> bool:
        return self.win_fraction > 0.5 and self.median_error_rescaled < self.median_error_plain


def run_study(trials: int = 200, m: int = 140, sigma: float = 0.2, seed: int = 0) -> tuple[list[TrialResult], StudySummary]:
    results = [gradient_comparison_trial(m, sigma, seed + k) for k in range(trials)]
    ep = np.array([r.error_plain for r in results])
    er = np.array([r.error_rescaled for r in results])
    summary = StudySummary(
        trials=trials,
        win_fraction=float(np.mean(er < ep)),
        median_error_plain=float(np.median(ep)),
        median_error_rescaled=float(np.median(er)),
    )
    return results, summary


def write_trials(path, results: list[TrialResult]) -> None:
    fields = list(TrialResult.__dataclass_fields__)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields + ["rescaled_wins"])
        w.writeheader()
        for r in results:
            w.writerow({**asdict(r), "rescaled_wins": int(r.rescaled_wins)})
