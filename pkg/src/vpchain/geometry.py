"""Normed spaces, balls, and finite ball intersections.

Everything downstream (the set-valued chain, the trees, the limit
experiments) works with intersections of norm balls, so this module keeps
the representation deliberately small: a space fixes the dimension and the
norm, a body is an ordered tuple of balls plus an optional axis-aligned box
constraint.  Volumes are Monte Carlo, the inscribed ball is found by
subgradient descent, and uniform sampling is rejection from the cheapest
exactly-samplable constraint.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

# Ties in containment tests count as containment.
CONTAIN_TOL = 1e-9

_BATCH = 4096


class DegenerateSetError(RuntimeError):
    """Rejection sampling exhausted its trial budget."""

    def __init__(self, message: str, trials: int = 0):
        super().__init__(message)
        self.trials = trials


class ConvergenceError(RuntimeError):
    """Optimizer hit its iteration cap; carries the best iterate found."""

    def __init__(self, message: str, best: tuple[float, np.ndarray]):
        super().__init__(message)
        self.best = best


class Norm(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @classmethod
    def coerce(cls, value: "Norm | str") -> "Norm":
        if isinstance(value, Norm):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown norm {value!r}; expected l1, l2 or linf") from None


@dataclass(frozen=True)
class NormedSpace:
    """Finite-dimensional real space with one of the l1/l2/linf norms."""

    dim: int
    kind: Norm

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "kind", Norm.coerce(self.kind))

    def norm(self, x) -> np.ndarray | float:
        """Evaluate the norm along the last axis of x."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected last axis {self.dim}, got shape {x.shape}")
        if self.kind is Norm.L1:
            return np.abs(x).sum(axis=-1)
        if self.kind is Norm.L2:
            return np.sqrt((x * x).sum(axis=-1))
        return np.abs(x).max(axis=-1)

    @property
    def unit_ball_volume(self) -> float:
        d = self.dim
        if self.kind is Norm.L2:
            return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
        if self.kind is Norm.L1:
            return 2.0**d / math.factorial(d)
        return 2.0**d

    def sample_unit_ball(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        """Uniform draws from the unit ball; shape (d,) or (n, d)."""
        m = 1 if n is None else int(n)
        d = self.dim
        if self.kind is Norm.LINF:
            x = rng.uniform(-1.0, 1.0, size=(m, d))
        elif self.kind is Norm.L2:
            g = rng.standard_normal((m, d))
            r = rng.random(m) ** (1.0 / d)
            nrm = np.sqrt((g * g).sum(axis=1))
            nrm[nrm == 0.0] = 1.0
            x = g * (r / nrm)[:, None]
        else:
            e = rng.standard_exponential((m, d))
            w = e / e.sum(axis=1, keepdims=True)
            signs = rng.integers(0, 2, size=(m, d)) * 2 - 1
            r = rng.random(m) ** (1.0 / d)
            x = signs * w * r[:, None]
        # Guard against 1-ulp overshoot so the support claim is exact.
        nrm = self.norm(x)
        hot = nrm > 1.0
        if np.any(hot):
            x[hot] *= ((1.0 - 1e-12) / nrm[hot])[:, None]
        return x[0] if n is None else x


@dataclass(eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(-1)
        self.radius = float(self.radius)
        if not math.isfinite(self.radius) or self.radius < 0.0:
            raise ValueError(f"radius must be finite and >= 0, got {self.radius}")

    def __repr__(self):
        c = ", ".join(repr(v) for v in self.center.tolist())
        return f"Ball([{c}], {self.radius!r})"


@dataclass(eq=False)
class Box:
    """Axis-aligned cube constraint: |x_i - center_i| <= half_width."""

    center: np.ndarray
    half_width: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(-1)
        self.half_width = float(self.half_width)
        if not math.isfinite(self.half_width) or self.half_width <= 0.0:
            raise ValueError(f"half_width must be finite and > 0, got {self.half_width}")

    def vertices(self) -> np.ndarray:
        offs = np.array(list(itertools.product((-self.half_width, self.half_width),
                                               repeat=self.center.size)))
        return self.center + offs


def ball_contains_ball(space: NormedSpace, inner: Ball, outer: Ball,
                       tol: float = CONTAIN_TOL) -> bool:
    """True iff inner lies inside outer, ties within tol counted as inside."""
    return bool(space.norm(inner.center - outer.center) <= outer.radius - inner.radius + tol)


def _ball_in_box(space: NormedSpace, ball: Ball, box: Box, tol: float) -> bool:
    # every unit ball here has extent exactly 1 along each axis
    return bool(np.abs(ball.center - box.center).max() <= box.half_width - ball.radius + tol)


def _box_in_ball(space: NormedSpace, box: Box, ball: Ball, tol: float) -> bool:
    return bool(np.max(space.norm(box.vertices() - ball.center)) <= ball.radius + tol)


@dataclass(eq=False)
class BallIntersection:
    """Nonempty intersection of balls (optionally also a box), in one space.

    The ball list is ordered; pruning preserves the insertion order of the
    survivors.  The box slot exists so bodies like "cube intersected with a
    few balls" can flow through the same operations.
    """

    space: NormedSpace
    balls: tuple[Ball, ...]
    box: Box | None = None

    def __post_init__(self):
        self.balls = tuple(self.balls)
        d = self.space.dim
        for b in self.balls:
            if b.center.size != d:
                raise ValueError(f"ball center has dim {b.center.size}, space has {d}")
        if self.box is not None and self.box.center.size != d:
            raise ValueError(f"box center has dim {self.box.center.size}, space has {d}")
        if not self.balls and self.box is None:
            raise ValueError("need at least one ball or a box")

    # -- membership ---------------------------------------------------------

    def _member_mask(self, X: np.ndarray, tol: float = 0.0,
                     skip_ball: int | None = None) -> np.ndarray:
        mask = np.ones(X.shape[0], dtype=bool)
        for i, b in enumerate(self.balls):
            if i == skip_ball:
                continue
            mask &= self.space.norm(X - b.center) <= b.radius + tol
        if self.box is not None:
            mask &= np.abs(X - self.box.center).max(axis=1) <= self.box.half_width + tol
        return mask

    def contains(self, x, tol: float = 0.0):
        """Membership test for a point (d,) or a batch (m, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = x.reshape(1, -1) if single else x
        if X.shape[1] != self.space.dim:
            raise ValueError(f"point dim {X.shape[1]} != space dim {self.space.dim}")
        mask = self._member_mask(X, tol=tol)
        return bool(mask[0]) if single else mask

    # -- pruning ------------------------------------------------------------

    def prune(self, tol: float = CONTAIN_TOL) -> "BallIntersection":
        """Drop every constraint that contains another one (it is redundant)."""
        balls = self.balls
        n = len(balls)
        drop = [False] * n
        for i in range(n):
            for j in range(n):
                if i == j or drop[j]:
                    continue
                if ball_contains_ball(self.space, balls[j], balls[i], tol):
                    # mutual containment means equal as sets; keep the earlier
                    if j < i or not ball_contains_ball(self.space, balls[i], balls[j], tol):
                        drop[i] = True
                        break
        box = self.box
        if box is not None:
            if any(_ball_in_box(self.space, b, box, tol)
                   for k, b in enumerate(balls) if not drop[k]):
                box = None
        if box is not None:
            for i in range(n):
                if drop[i]:
                    continue
                if _box_in_ball(self.space, box, balls[i], tol) and not _ball_in_box(
                        self.space, balls[i], box, tol):
                    drop[i] = True
        kept = tuple(b for k, b in enumerate(balls) if not drop[k])
        return BallIntersection(self.space, kept, box)

    # -- sampling and volume ------------------------------------------------

    def _source(self) -> tuple[str, int]:
        """Cheapest constraint we can sample exactly: ('ball', i) or ('box', -1)."""
        d = self.space.dim
        if self.balls:
            radii = [b.radius for b in self.balls]
            i = radii.index(min(radii))
            if self.box is None:
                return "ball", i
            if radii[i] ** d * self.space.unit_ball_volume <= (2.0 * self.box.half_width) ** d:
                return "ball", i
        return "box", -1

    def _source_volume(self, which: str, i: int) -> float:
        if which == "ball":
            return self.balls[i].radius ** self.space.dim * self.space.unit_ball_volume
        return (2.0 * self.box.half_width) ** self.space.dim

    def _source_draw(self, which: str, i: int, rng: np.random.Generator, m: int) -> np.ndarray:
        if which == "ball":
            b = self.balls[i]
            return b.center + b.radius * self.space.sample_unit_ball(rng, m)
        return self.box.center + rng.uniform(-self.box.half_width, self.box.half_width,
                                             size=(m, self.space.dim))

    def sample_uniform(self, rng: np.random.Generator, max_trials: int = 10**6,
                       return_trials: bool = False):
        """One uniform point, by rejection from the cheapest constraint."""
        which, i = self._source()
        trials = 0
        m = 32  # grow the batch only when the acceptance rate turns out low
        while trials < max_trials:
            m = min(m, max_trials - trials)
            X = self._source_draw(which, i, rng, m)
            ok = self._member_mask(X)
            hit = int(np.argmax(ok)) if ok.any() else -1
            if hit >= 0:
                trials += hit + 1
                x = X[hit]
                return (x, trials) if return_trials else x
            trials += m
            m = min(m * 4, _BATCH)
        raise DegenerateSetError(
            f"no point accepted after {trials} trials; intersection is degenerate "
            "or the budget is too small", trials=trials)

    def volume_estimate(self, n_samples: int, rng: np.random.Generator) -> tuple[float, float]:
        """Hit-or-miss volume and its binomial standard error."""
        n_samples = int(n_samples)
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        which, i = self._source()
        skip = i if which == "ball" else None
        hits = 0
        done = 0
        while done < n_samples:
            m = min(65536, n_samples - done)
            X = self._source_draw(which, i, rng, m)
            hits += int(self._member_mask(X, skip_ball=skip).sum())
            done += m
        vol = self._source_volume(which, i)
        p = hits / n_samples
        return vol * p, vol * math.sqrt(p * (1.0 - p) / n_samples)

    def exact_volume(self) -> float | None:
        """Closed-form volume when the body is a single ball or a bare box.

        In one dimension every constraint is an interval, so the volume is
        always exact there.
        """
        if self.space.dim == 1:
            lo, hi = -math.inf, math.inf
            for b in self.balls:
                c = float(b.center[0])
                lo, hi = max(lo, c - b.radius), min(hi, c + b.radius)
            if self.box is not None:
                c = float(self.box.center[0])
                lo = max(lo, c - self.box.half_width)
                hi = min(hi, c + self.box.half_width)
            return max(0.0, hi - lo)
        if self.box is None and len(self.balls) == 1:
            return self.balls[0].radius ** self.space.dim * self.space.unit_ball_volume
        if self.box is not None and not self.balls:
            return (2.0 * self.box.half_width) ** self.space.dim
        return None

    # -- inscribed ball -----------------------------------------------------

    def _constraint_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rows = [(b.center, b.radius, _NORM_CODE[self.space.kind]) for b in self.balls]
        if self.box is not None:
            rows.append((self.box.center, self.box.half_width, _NORM_CODE[Norm.LINF]))
        centers = np.array([r[0] for r in rows], dtype=float)
        radii = np.array([r[1] for r in rows], dtype=float)
        kinds = np.array([r[2] for r in rows], dtype=np.int64)
        return centers, radii, kinds

    def inscribed_radius(self, tol: float = 1e-7,
                         max_iter: int = 100_000) -> tuple[float, np.ndarray]:
        """Radius and center of a largest inscribed ball.

        Minimizes max_i(||x - c_i|| - r_i) by subgradient descent from the
        origin (feasible for every chain state).  Returns (radius, center);
        the radius is evaluated at the best iterate, so it never overstates
        the optimum.
        """
        from ._subgrad import subgrad_min_max_margin

        centers, radii, kinds = self._constraint_arrays()
        x0 = np.zeros(self.space.dim)
        f_best, x_best, iters, converged = subgrad_min_max_margin(
            centers, radii, kinds, x0, tol, max_iter)
        radius = max(0.0, -f_best)
        if not converged:
            raise ConvergenceError(
                f"inscribed-ball search hit the {max_iter}-iteration cap",
                best=(radius, x_best))
        return radius, x_best


_NORM_CODE = {Norm.L1: 0, Norm.L2: 1, Norm.LINF: 2}


# -- bodies and helpers -----------------------------------------------------

def unit_ball(space: NormedSpace) -> Ball:
    return Ball(np.zeros(space.dim), 1.0)


def unit_ball_body(space: NormedSpace) -> BallIntersection:
    return BallIntersection(space, (unit_ball(space),))


def box_body(space: NormedSpace, half_width: float) -> BallIntersection:
    return BallIntersection(space, (), box=Box(np.zeros(space.dim), half_width))


def estimate_volume_adaptive(body: BallIntersection, rng: np.random.Generator,
                             rel_tol: float = 0.02, initial: int = 2048,
                             max_samples: int = 2**23) -> tuple[float, float]:
    """Grow the hit-or-miss sample until the relative std error is below rel_tol."""
    which, i = body._source()
    skip = i if which == "ball" else None
    vol = body._source_volume(which, i)
    hits = 0
    n = 0
    m = int(initial)
    while True:
        X = body._source_draw(which, i, rng, m)
        hits += int(body._member_mask(X, skip_ball=skip).sum())
        n += m
        p = hits / n
        est = vol * p
        se = vol * math.sqrt(p * (1.0 - p) / n)
        if n >= max_samples:
            if hits == 0:
                raise DegenerateSetError(
                    f"no hits in {n} volume samples; body volume below "
                    f"{vol / n:.3g}", trials=n)
            return est, se
        if hits > 0 and se <= rel_tol * est:
            return est, se
        if hits == 0 and n >= max_samples:
            raise DegenerateSetError(
                f"no hits in {n} volume samples; body appears degenerate", trials=n)
        m = n  # double

def nonredundant_count(body: BallIntersection, rng: np.random.Generator,
                       n_samples: int = 512) -> int:
    """Number of balls with a sampled witness certifying non-redundancy.

    A witness for ball i is a point inside all other constraints but outside
    ball i.  The count is a lower bound on the size of a minimal
    representation of this particular list (the box, if any, is not scored).
    """
    certified = 0
    for i, b in enumerate(body.balls):
        rest = body.balls[:i] + body.balls[i + 1:]
        if not rest and body.box is None:
            certified += 1  # a lone ball is never redundant
            continue
        others = BallIntersection(body.space, rest, body.box)
        which, j = others._source()
        X = others._source_draw(which, j, rng, n_samples)
        ok = others._member_mask(X)
        outside = body.space.norm(X - b.center) > b.radius
        if bool(np.any(ok & outside)):
            certified += 1
    return certified
