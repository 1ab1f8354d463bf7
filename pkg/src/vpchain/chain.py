"""Set-valued Markov chain on ball intersections.

One transition: draw u uniformly from the current body, recenter at u,
rescale by 1/tau, intersect with the unit ball, prune.  The unit ball is an
atom; visits to it split the trajectory into independent blocks, which is
what the regeneration bookkeeping below records.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .geometry import (
    Ball,
    BallIntersection,
    Box,
    NormedSpace,
    estimate_volume_adaptive,
    unit_ball,
    unit_ball_body,
)

# tolerance for recognizing the exact-power radius ladder and the atom
LADDER_TOL = 1e-9

_DEFAULT_FUNCTIONALS = ("volume", "inscribed_radius", "ball_count", "reciprocal_volume")


class StepBudgetError(RuntimeError):
    """Regeneration run exceeded its step budget; carries partial stats."""

    def __init__(self, message: str, partial: "RegenStats"):
        super().__init__(message)
        self.partial = partial


@dataclass(eq=False)
class ChainState:
    body: BallIntersection
    step: int
    tau: float
    regen_count: int = 0
    last_regen_step: int | None = None


@dataclass(eq=False)
class TrajectoryStep:
    """State at a step together with the draw that leaves it (None at the end)."""

    step: int
    u: np.ndarray | None
    state: ChainState


@dataclass(eq=False)
class RegenStats:
    """Per-block bookkeeping from a regeneration run.

    functional_sums[name][i] is the sum of the functional over the states of
    block i; blocks are the segments between successive visits to the unit
    ball, each opened by the visit itself.
    """

    return_times: list[int] = field(default_factory=list)
    functional_sums: dict[str, list[float]] = field(default_factory=dict)
    blocks: int = 0
    ball_count_hist: Counter = field(default_factory=Counter)
    min_inscribed: float | None = None
    states_seen: int = 0
    violations: int = 0


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    return tau


def initial_state(space: NormedSpace, tau: float,
                  body: BallIntersection | None = None) -> ChainState:
    tau = _check_tau(tau)
    if body is None:
        body = unit_ball_body(space)
    if body.space != space:
        raise ValueError("body belongs to a different space")
    at_atom = _body_is_unit_ball(body)
    return ChainState(body, 0, tau, 0, 0 if at_atom else None)


def _ladder_exponent(radius: float, tau: float) -> int | None:
    """k >= 0 with radius == tau**(-k), or None if the radius is off-ladder."""
    if radius <= 0.0:
        return None
    k = round(math.log(radius) / math.log(1.0 / tau))
    if k < 0:
        return None
    canon = tau ** (-k)
    if abs(radius - canon) <= LADDER_TOL * max(1.0, canon):
        return k
    return None


def chain_step(state: ChainState, rng: np.random.Generator,
               u: np.ndarray | None = None) -> ChainState:
    """One transition; pass u to force the draw (tests, figures)."""
    body = state.body
    tau = state.tau
    if u is None:
        u = body.sample_uniform(rng)
    else:
        u = np.asarray(u, dtype=float).reshape(-1)
    new_balls = []
    for b in body.balls:
        k = _ladder_exponent(b.radius, tau)
        # keep radii exactly on the canonical power ladder when they started there
        radius = tau ** (-(k + 1)) if k is not None else b.radius / tau
        new_balls.append(Ball((b.center - u) / tau, radius))
    new_balls.append(unit_ball(body.space))
    box = body.box
    new_box = Box((box.center - u) / tau, box.half_width / tau) if box is not None else None
    new_body = BallIntersection(body.space, tuple(new_balls), new_box).prune()
    step = state.step + 1
    if _body_is_unit_ball(new_body):
        return ChainState(new_body, step, tau, state.regen_count + 1, step)
    return ChainState(new_body, step, tau, state.regen_count, state.last_regen_step)


def _body_is_unit_ball(body: BallIntersection) -> bool:
    if body.box is not None or len(body.balls) != 1:
        return False
    b = body.balls[0]
    if abs(b.radius - 1.0) > LADDER_TOL:
        return False
    return bool(body.space.norm(b.center) <= LADDER_TOL)


def is_unit_ball(state: "ChainState | BallIntersection") -> bool:
    """Exact atom test; sound because a state equal to the unit ball as a set
    has every other ball containing it, so pairwise pruning leaves only the
    appended unit ball."""
    body = state.body if isinstance(state, ChainState) else state
    return _body_is_unit_ball(body)


def iter_trajectory(space: NormedSpace, tau: float, steps: int,
                    rng: np.random.Generator,
                    body: BallIntersection | None = None,
                    u_seq: Iterable[np.ndarray] | None = None) -> Iterator[TrajectoryStep]:
    """Yield steps+1 records; record h holds the state at h and the draw
    taken from it (the final record has u=None)."""
    steps = int(steps)
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    state = initial_state(space, tau, body)
    forced = iter(u_seq) if u_seq is not None else None
    for _ in range(steps):
        u = np.asarray(next(forced), dtype=float) if forced is not None \
            else state.body.sample_uniform(rng)
        yield TrajectoryStep(state.step, u, state)
        state = chain_step(state, rng, u=u)
    yield TrajectoryStep(state.step, None, state)


def regen_frequency(space: NormedSpace, tau: float, n_trials: int,
                    rng: np.random.Generator) -> float:
    """Fraction of single steps from the unit ball that return to it."""
    tau = _check_tau(tau)
    hits = 0
    state = initial_state(space, tau)
    for _ in range(int(n_trials)):
        if is_unit_ball(chain_step(state, rng)):
            hits += 1
    return hits / n_trials


def _validate_state(body: BallIntersection, tau: float, step: int) -> int:
    """Count invariant violations: origin membership, power-ladder radii,
    and (past step 0) the presence of exactly one unit-radius ball."""
    bad = 0
    if not body.contains(np.zeros(body.space.dim), tol=LADDER_TOL):
        bad += 1
    unit = 0
    for b in body.balls:
        k = _ladder_exponent(b.radius, tau)
        if k is None:
            bad += 1
        elif k == 0:
            unit += 1
    if step >= 1 and unit != 1:
        bad += 1
    return bad


def _functional_values(names: tuple[str, ...], body: BallIntersection,
                       rng: np.random.Generator, rel_tol: float) -> dict[str, float]:
    out: dict[str, float] = {}
    vol = None
    if "volume" in names or "reciprocal_volume" in names:
        exact = body.exact_volume()
        vol = exact if exact is not None else estimate_volume_adaptive(body, rng, rel_tol)[0]
    for name in names:
        if name == "volume":
            out[name] = vol
        elif name == "reciprocal_volume":
            out[name] = 1.0 / vol
        elif name == "inscribed_radius":
            out[name] = body.inscribed_radius()[0]
        elif name == "ball_count":
            out[name] = float(len(body.balls))
        elif name == "indicator_unit_ball":
            out[name] = 1.0 if _body_is_unit_ball(body) else 0.0
        elif name == "one":
            out[name] = 1.0
        else:
            raise ValueError(f"unknown functional {name!r}")
    return out


def run_regenerations(space: NormedSpace, tau: float, n_blocks: int,
                      rng: np.random.Generator,
                      functionals: tuple[str, ...] = _DEFAULT_FUNCTIONALS,
                      step_budget: int = 10**8,
                      body: BallIntersection | None = None,
                      validate: bool = False,
                      volume_rel_tol: float = 0.02) -> RegenStats:
    """Run until n_blocks visits to the unit ball, accumulating block sums.

    Started anywhere but the atom, the stretch before the first visit is
    burned (it belongs to no block).  Each block opens with the unit-ball
    state and closes just before the next visit.
    """
    tau = _check_tau(tau)
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    functionals = tuple(functionals)
    state = initial_state(space, tau, body)
    stats = RegenStats(functional_sums={name: [] for name in functionals})
    in_block = is_unit_ball(state)
    current = {name: 0.0 for name in functionals}
    block_start = state.step
    steps = 0
    inscribed_min = None
    while stats.blocks < n_blocks:
        if steps >= step_budget:
            raise StepBudgetError(
                f"only {stats.blocks} of {n_blocks} blocks within {step_budget} steps",
                partial=stats)
        if in_block:
            stats.states_seen += 1
            stats.ball_count_hist[len(state.body.balls)] += 1
            if validate:
                stats.violations += _validate_state(state.body, tau, state.step)
            if functionals:
                vals = _functional_values(functionals, state.body, rng, volume_rel_tol)
                for name in functionals:
                    current[name] += vals[name]
                if "inscribed_radius" in vals:
                    r = vals["inscribed_radius"]
                    inscribed_min = r if inscribed_min is None else min(inscribed_min, r)
        state = chain_step(state, rng)
        steps += 1
        if is_unit_ball(state):
            if in_block:
                stats.blocks += 1
                stats.return_times.append(state.step - block_start)
                for name in functionals:
                    stats.functional_sums[name].append(current[name])
                    current[name] = 0.0
            in_block = True
            block_start = state.step
    stats.min_inscribed = inscribed_min
    return stats


def stationary_estimate(stats: RegenStats, functional_id: str) -> tuple[float, float]:
    """Ratio estimator of the stationary mean with its delta-method error."""
    if functional_id not in stats.functional_sums:
        raise ValueError(f"functional {functional_id!r} was not accumulated")
    ys = stats.functional_sums[functional_id]
    ls = stats.return_times
    n = len(ys)
    if n < 2:
        raise ValueError(f"need at least 2 blocks, have {n}")
    total_y = math.fsum(ys)
    total_l = math.fsum(ls)
    ratio = total_y / total_l
    resid = math.fsum((y - ratio * l) ** 2 for y, l in zip(ys, ls))
    s2 = resid / (n - 1)
    return ratio, math.sqrt(s2 * n) / total_l
