"""Long-run laws of the leftmost path: attach epochs, limit sums, tail checks.

The leftmost-path length of a tree on n uniform points can be sampled
without building trees.  Each deepening of the path happens at a random
insertion epoch, and the gaps between consecutive epochs are geometric
with a success probability read off the recentered set chain.  This
module builds those epoch paths, the limiting scaled sum of the gaps,
and the comparisons between the two descriptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import chain_step, initial_state
from .geometry import (
    BallIntersection,
    NormedSpace,
    estimate_volume_adaptive,
    unit_ball_body,
)

Z_95 = 1.96


def _body_volume(body: BallIntersection, rng: np.random.Generator,
                 rel_tol: float, max_samples: int) -> float:
    v = body.exact_volume()
    if v is not None:
        return v
    return estimate_volume_adaptive(body, rng, rel_tol=rel_tol,
                                    max_samples=max_samples)[0]


def geometric_draw(p: float, rng: np.random.Generator) -> int:
    """Inverse-transform geometric on {1, 2, ...} with success probability p."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"success probability must be in (0, 1], got {p}")
    if p == 1.0:
        return 1
    u = 1.0 - rng.random()  # in (0, 1]
    return int(math.log(u) / math.log1p(-p)) + 1


@dataclass
class GeometricSumPath:
    """One sampled sequence of leftmost-path deepening epochs.

    partial_sums[k] is the number of non-root insertions needed for the
    path to reach depth k, so depth k is attained at insertion
    1 + partial_sums[k]; partial_sums[0] = 0.
    """

    dim: int
    tau: float
    success_probs: list[float]
    increments: list[int]
    partial_sums: list[int]

    @property
    def depth(self) -> int:
        return len(self.increments)


def attach_epoch_path(space: NormedSpace, tau: float, rng: np.random.Generator,
                      target_n: int | None = None, max_level: int | None = None,
                      body: BallIntersection | None = None,
                      volume_rel_tol: float = 0.02,
                      max_samples: int = 2**23) -> GeometricSumPath:
    """Sample deepening epochs until they pass target_n or reach max_level.

    The level-k success probability is tau**(k*d) times the volume ratio
    of the k-step recentered set to the starting body.
    """
    if target_n is None and max_level is None:
        raise ValueError("need target_n or max_level to bound the path")
    if body is None:
        body = unit_ball_body(space)
    vol_start = _body_volume(body, rng, volume_rel_tol, max_samples)
    state = initial_state(space, tau, body=body)
    probs: list[float] = []
    gaps: list[int] = []
    sums: list[int] = [0]
    k = 0
    while True:
        if target_n is not None and 1 + sums[-1] > target_n:
            break
        if max_level is not None and k >= max_level:
            break
        state = chain_step(state, rng)
        k += 1
        vol = _body_volume(state.body, rng, volume_rel_tol, max_samples)
        p = min(1.0, tau ** (k * space.dim) * vol / vol_start)
        g = geometric_draw(p, rng)
        probs.append(p)
        gaps.append(g)
        sums.append(sums[-1] + g)
    return GeometricSumPath(space.dim, tau, probs, gaps, sums)


def leftmost_length_from_path(path: GeometricSumPath, n: int) -> int:
    """Largest depth whose attach epoch 1 + S_k is at most n."""
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    best = -1
    for k, s in enumerate(path.partial_sums):
        if 1 + s <= n:
            best = k
        else:
            break
    if best == path.depth and 1 + path.partial_sums[-1] < n:
        # every sampled epoch fits: the true value may be censored
        raise ValueError(f"path of depth {path.depth} too shallow for n={n}")
    return best


def sample_leftmost_lengths(space: NormedSpace, tau: float, n: int,
                            n_draws: int, rng: np.random.Generator,
                            body: BallIntersection | None = None,
                            volume_rel_tol: float = 0.02) -> np.ndarray:
    """Draws of the leftmost-path length for an n-point tree, via epochs."""
    out = np.empty(n_draws, dtype=np.int64)
    for i in range(n_draws):
        path = attach_epoch_path(space, tau, rng, target_n=n, body=body,
                                 volume_rel_tol=volume_rel_tol)
        out[i] = leftmost_length_from_path(path, n)
    return out


# -- limiting scaled sum ------------------------------------------------------


@dataclass
class LimitSample:
    """One draw of the limiting scaled epoch sum, with its truncation data."""

    value: float
    levels: int
    tail_bound: float


def _floor_volume_ratio(space: NormedSpace, tau: float, vol_start: float,
                        start_inscribed: float) -> float:
    # every chain state contains a ball of this radius almost surely
    r = min(start_inscribed, 1.0) * 2.0 ** (-(space.dim + 1))
    return (r ** space.dim) * space.unit_ball_volume / vol_start


def sample_limit_sum(space: NormedSpace, tau: float, rng: np.random.Generator,
                     tol: float = 1e-5, burn_steps: int = 128,
                     volume_rel_tol: float = 0.05,
                     max_samples: int = 2**23,
                     max_level: int = 400) -> LimitSample:
    """Draw the limiting scaled sum of deepening gaps.

    Terms are exponentials whose rates come from a stationary run of the
    set chain; the series is cut once a guaranteed bound on the mean of
    the remainder drops below tol.  The chain is started at the unit
    ball (the regeneration state) and mixed for burn_steps first.
    """
    body = unit_ball_body(space)
    vol_start = body.exact_volume()
    d = space.dim
    floor_ratio = _floor_volume_ratio(space, tau, vol_start, 1.0)
    state = initial_state(space, tau)
    for _ in range(burn_steps):
        state = chain_step(state, rng)
    terms: list[float] = []
    level = 0
    while True:
        vol = _body_volume(state.body, rng, volume_rel_tol, max_samples)
        rate = tau ** (-level * d) * vol / vol_start
        terms.append(-math.log1p(-rng.random()) / rate)
        tail = tau ** ((level + 1) * d) / (floor_ratio * (1.0 - tau ** d))
        if tail < tol:
            return LimitSample(math.fsum(terms), level + 1, tail)
        if level + 1 >= max_level:
            raise RuntimeError(
                f"tail bound {tail:.3g} still above {tol} after {max_level} levels")
        state = chain_step(state, rng)
        level += 1


def sample_limit_sums(space: NormedSpace, tau: float, n_draws: int,
                      rng: np.random.Generator, **kwargs) -> np.ndarray:
    out = np.empty(n_draws, dtype=float)
    for i in range(n_draws):
        out[i] = sample_limit_sum(space, tau, rng, **kwargs).value
    return out


def limit_sum_mean(space: NormedSpace, tau: float,
                   reciprocal_volume_mean: float,
                   body: BallIntersection | None = None) -> float:
    """Mean of the limiting sum from the stationary mean of 1/volume."""
    if body is None:
        body = unit_ball_body(space)
    vol_start = body.exact_volume()
    return vol_start * reciprocal_volume_mean / (1.0 - tau ** space.dim)


# -- interval comparisons -----------------------------------------------------


def wilson_interval(successes: int, n: int, z: float = Z_95) -> tuple[float, float]:
    """Score interval for a binomial proportion."""
    if n < 1:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= n:
        raise ValueError(f"successes {successes} outside [0, {n}]")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n))
    return center - half, center + half


@dataclass
class TailComparison:
    """Both sides of one tail identity check, as score intervals."""

    x: float
    shift: int
    n_points: int
    threshold: float
    length_ci: tuple[float, float]
    limit_ci: tuple[float, float]
    overlap: bool


def tail_comparison(x: float, shift: int, level: int, dim: int, tau: float,
                    lengths: np.ndarray, limit_pool: np.ndarray,
                    z: float = Z_95) -> TailComparison:
    """Compare P{length <= level+shift} against its limit-sum tail.

    lengths must be draws for a tree of floor(x * tau**(-level*d)) points.
    Depth level+shift is attained strictly after epoch n exactly when the
    (level+shift+1)-th partial sum exceeds n-1, so the matching tail event
    is {limit sum >= x * tau**((shift+1)*d)}.
    """
    n_points = int(x * tau ** (-level * dim))
    thr = x * tau ** ((shift + 1) * dim)
    lo1, hi1 = wilson_interval(int(np.sum(lengths <= level + shift)),
                               len(lengths), z)
    lo2, hi2 = wilson_interval(int(np.sum(limit_pool >= thr)),
                               len(limit_pool), z)
    return TailComparison(x, shift, n_points, thr, (lo1, hi1), (lo2, hi2),
                          overlap=max(lo1, lo2) <= min(hi1, hi2))


def tail_comparison_grid(space: NormedSpace, tau: float, level: int,
                         xs: tuple[float, ...], shifts: tuple[int, ...],
                         limit_pool: np.ndarray, rng: np.random.Generator,
                         n_length_draws: int = 400,
                         volume_rel_tol: float = 0.02,
                         z: float = Z_95) -> list[TailComparison]:
    """Run the tail check over a grid, one pooled length sample per x."""
    out = []
    for x in xs:
        n_points = int(x * tau ** (-level * space.dim))
        lengths = sample_leftmost_lengths(space, tau, n_points, n_length_draws,
                                          rng, volume_rel_tol=volume_rel_tol)
        for s in shifts:
            out.append(tail_comparison(x, s, level, space.dim, tau, lengths,
                                       limit_pool, z))
    return out


# -- growth-rate table --------------------------------------------------------


def growth_constant(dim: int, tau: float) -> float:
    """Limit of length / log(n): the reciprocal of d * log(1/tau)."""
    return 1.0 / (dim * math.log(1.0 / tau))


def growth_ratio_table(space: NormedSpace, tau: float, ns: tuple[int, ...],
                       n_replicas: int, rng: np.random.Generator,
                       body: BallIntersection | None = None,
                       volume_rel_tol: float = 0.02) -> list[dict]:
    """Mean and standard error of length / log(n), one row per n.

    Each replica samples a single epoch path deep enough for max(ns) and
    reads every n off it, so rows are coupled within a replica.
    """
    ns = tuple(sorted(int(n) for n in ns))
    if ns[0] < 2:
        raise ValueError("need n >= 2 so that log(n) > 0")
    ratios = np.empty((n_replicas, len(ns)), dtype=float)
    for i, child in enumerate(rng.spawn(n_replicas)):
        path = attach_epoch_path(space, tau, child, target_n=ns[-1], body=body,
                                 volume_rel_tol=volume_rel_tol)
        for j, n in enumerate(ns):
            ratios[i, j] = leftmost_length_from_path(path, n) / math.log(n)
    rows = []
    for j, n in enumerate(ns):
        col = ratios[:, j]
        rows.append({
            "n": n,
            "mean_ratio": float(np.mean(col)),
            "se_ratio": float(np.std(col, ddof=1) / math.sqrt(n_replicas)),
            "target": growth_constant(space.dim, tau),
        })
    return rows
