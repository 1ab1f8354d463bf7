import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import stats

from vpchain.geometry import (
    Ball,
    BallIntersection,
    Box,
    ConvergenceError,
    DegenerateSetError,
    Norm,
    NormedSpace,
    ball_contains_ball,
    box_body,
    estimate_volume_adaptive,
    unit_ball_body,
)

ALL_KINDS = (Norm.L1, Norm.L2, Norm.LINF)


def body(space, *balls, box=None):
    return BallIntersection(space, tuple(balls), box=box)


# -- norms -------------------------------------------------------------------


def test_norm_values_on_axis_and_diagonal():
    v = np.array([3.0, -4.0])
    assert NormedSpace(2, Norm.L2).norm(v) == 5.0
    assert NormedSpace(2, Norm.L1).norm(v) == 7.0
    assert NormedSpace(2, Norm.LINF).norm(v) == 4.0


def test_unit_ball_volumes_closed_forms():
    for d in (1, 2, 3):
        assert NormedSpace(d, Norm.LINF).unit_ball_volume == pytest.approx(2.0**d)
        assert NormedSpace(d, Norm.L1).unit_ball_volume == pytest.approx(
            2.0**d / math.factorial(d))
        assert NormedSpace(d, Norm.L2).unit_ball_volume == pytest.approx(
            math.pi ** (d / 2) / math.gamma(d / 2 + 1))


@st.composite
def vectors(draw, dim):
    return np.array(draw(st.lists(
        st.floats(-50, 50, allow_nan=False, allow_infinity=False),
        min_size=dim, max_size=dim)))


@given(x=vectors(3), y=vectors(3), kind=st.sampled_from(ALL_KINDS))
def test_norm_triangle_inequality(x, y, kind):
    sp = NormedSpace(3, kind)
    assert sp.norm(x + y) <= sp.norm(x) + sp.norm(y) + 1e-9


@given(x=vectors(3), c=st.floats(-8, 8, allow_nan=False), kind=st.sampled_from(ALL_KINDS))
def test_norm_homogeneity(x, c, kind):
    sp = NormedSpace(3, kind)
    assert sp.norm(c * x) == pytest.approx(abs(c) * sp.norm(x), rel=1e-12, abs=1e-12)


# -- containment -------------------------------------------------------------


def test_ball_containment_hand_cases():
    sp = NormedSpace(2, Norm.L2)
    outer = Ball(np.zeros(2), 1.0)
    assert ball_contains_ball(sp, Ball(np.array([0.3, 0.0]), 0.5), outer)
    # boundary touch counts as contained
    assert ball_contains_ball(sp, Ball(np.array([0.5, 0.0]), 0.5), outer)
    assert not ball_contains_ball(sp, Ball(np.array([0.6, 0.0]), 0.5), outer)
    sp1 = NormedSpace(2, Norm.L1)
    assert ball_contains_ball(sp1, Ball(np.array([0.25, 0.25]), 0.5), outer)
    assert not ball_contains_ball(sp1, Ball(np.array([0.3, 0.3]), 0.5), outer)


@given(c1=vectors(2), c2=vectors(2), c3=vectors(2),
       r1=st.floats(0.1, 5), g12=st.floats(0, 3), g23=st.floats(0, 3),
       kind=st.sampled_from(ALL_KINDS))
def test_containment_transitive(c1, c2, c3, r1, g12, g23, kind):
    # build a chain that satisfies the premises exactly, then check A in C
    sp = NormedSpace(2, kind)
    r2 = r1 + sp.norm(c1 - c2) + g12
    r3 = r2 + sp.norm(c2 - c3) + g23
    a, b, c = Ball(c1, r1), Ball(c2, r2), Ball(c3, r3)
    # the gap construction can round a premise off by an ulp; require both
    assume(ball_contains_ball(sp, a, b, tol=0.0))
    assume(ball_contains_ball(sp, b, c, tol=0.0))
    assert ball_contains_ball(sp, a, c, tol=1e-9)


def test_membership_hand_cases():
    sp = NormedSpace(2, Norm.L2)
    b = body(sp, Ball(np.zeros(2), 1.0), Ball(np.array([1.0, 0.0]), 1.0))
    assert b.contains(np.array([0.5, 0.0]))
    assert b.contains(np.array([0.5, 0.86]), tol=1e-9)
    assert not b.contains(np.array([-0.1, 0.0]))   # outside the shifted ball
    assert not b.contains(np.array([1.1, 0.0]))    # outside the centred ball


def test_box_vertices_and_membership():
    box = Box(np.array([1.0, -1.0]), 0.5)
    vs = {tuple(v) for v in box.vertices()}
    assert vs == {(0.5, -1.5), (0.5, -0.5), (1.5, -1.5), (1.5, -0.5)}
    sp = NormedSpace(2, Norm.L2)
    b = body(sp, Ball(np.zeros(2), 2.0), box=box)
    assert b.contains(np.array([1.0, -1.0]))
    assert not b.contains(np.array([1.0, -1.6]))


# -- pruning -----------------------------------------------------------------


def test_prune_drops_enclosing_ball():
    sp = NormedSpace(2, Norm.L2)
    small = Ball(np.array([0.2, 0.0]), 0.5)
    b = body(sp, Ball(np.zeros(2), 1.0), small).prune()
    assert len(b.balls) == 1
    assert b.balls[0].radius == 0.5


def test_prune_keeps_earlier_duplicate():
    sp = NormedSpace(2, Norm.LINF)
    first = Ball(np.zeros(2), 1.0)
    b = body(sp, first, Ball(np.zeros(2), 1.0)).prune()
    assert len(b.balls) == 1
    assert b.balls[0] is first


def test_prune_box_against_ball_both_directions():
    sp = NormedSpace(2, Norm.L2)
    wide = body(sp, Ball(np.zeros(2), 1.0), box=Box(np.zeros(2), 2.0)).prune()
    assert wide.box is None and len(wide.balls) == 1
    tight = body(sp, Ball(np.zeros(2), 1.0), box=Box(np.zeros(2), 0.4)).prune()
    assert tight.box is not None and len(tight.balls) == 0


@given(data=st.data())
def test_prune_preserves_membership(data):
    kind = data.draw(st.sampled_from(ALL_KINDS))
    sp = NormedSpace(2, kind)
    n_balls = data.draw(st.integers(1, 4))
    balls = [Ball(np.array([data.draw(st.floats(-0.6, 0.6)),
                            data.draw(st.floats(-0.6, 0.6))]),
                  data.draw(st.floats(0.3, 2.5))) for _ in range(n_balls)]
    b = body(sp, *balls)
    pruned = b.prune()
    pts = np.random.default_rng(7).uniform(-1.5, 1.5, size=(1000, 2))
    for x in pts:
        assert b.contains(x, tol=1e-12) == pruned.contains(x, tol=1e-12)


# -- sampling ----------------------------------------------------------------


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("kind", ALL_KINDS)
def test_unit_ball_sampler_support_and_symmetry(dim, kind):
    sp = NormedSpace(dim, kind)
    rng = np.random.default_rng(5)
    X = sp.sample_unit_ball(rng, 4000)
    assert X.shape == (4000, dim)
    assert np.all(sp.norm(X) <= 1.0)
    # coordinate means vanish; self-normalized 4-sigma bound
    for j in range(dim):
        col = X[:, j]
        assert abs(col.mean()) <= 4 * col.std(ddof=1) / math.sqrt(len(col))


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("kind", ALL_KINDS)
def test_unit_ball_sampler_uniform_on_inscribed_cube(dim, kind):
    # bin the points falling in the largest centred cube into 4^d equal
    # cells; conditional on the inside count the cell law is multinomial
    side = {Norm.LINF: 1.0, Norm.L2: 1 / math.sqrt(dim), Norm.L1: 1 / dim}[kind]
    sp = NormedSpace(dim, kind)
    rng = np.random.default_rng(12)
    X = sp.sample_unit_ball(rng, 12000)
    Y = X[np.all(np.abs(X) <= side, axis=1)]
    bins = np.clip(((Y + side) / (2 * side / 4)).astype(int), 0, 3)
    idx = bins[:, 0]
    for j in range(1, dim):
        idx = idx * 4 + bins[:, j]
    counts = np.bincount(idx, minlength=4**dim)
    expected = len(Y) / 4**dim
    chi = ((counts - expected) ** 2 / expected).sum()
    assert stats.chi2(4**dim - 1).sf(chi) > 0.01


def test_sample_uniform_lands_in_body(rng):
    sp = NormedSpace(2, Norm.L2)
    b = body(sp, Ball(np.zeros(2), 1.0), Ball(np.array([0.9, 0.0]), 1.0))
    for _ in range(200):
        assert b.contains(b.sample_uniform(rng), tol=1e-12)


def test_sample_uniform_empty_body_raises(rng):
    sp = NormedSpace(2, Norm.L2)
    b = body(sp, Ball(np.zeros(2), 1.0), Ball(np.array([3.0, 0.0]), 1.0))
    with pytest.raises(DegenerateSetError) as exc:
        b.sample_uniform(rng, max_trials=10_000)
    assert exc.value.trials >= 10_000


# -- volume ------------------------------------------------------------------


def test_exact_volumes():
    sp = NormedSpace(2, Norm.L2)
    assert unit_ball_body(sp).exact_volume() == pytest.approx(math.pi)
    assert body(sp, Ball(np.ones(2), 0.5)).exact_volume() == pytest.approx(
        0.25 * math.pi)
    assert box_body(sp, 1.5).exact_volume() == pytest.approx(9.0)
    # one dimension is always an interval, hence always exact
    sp1 = NormedSpace(1, Norm.LINF)
    b = body(sp1, Ball(np.array([0.0]), 1.0), Ball(np.array([0.9]), 0.5))
    assert b.exact_volume() == pytest.approx(0.6)
    gone = body(sp1, Ball(np.array([0.0]), 1.0), Ball(np.array([3.0]), 0.5))
    assert gone.exact_volume() == 0.0


def test_lens_volume_against_closed_form():
    # two unit round balls with centres one apart
    sp = NormedSpace(2, Norm.L2)
    b = body(sp, Ball(np.zeros(2), 1.0), Ball(np.array([1.0, 0.0]), 1.0))
    rng = np.random.default_rng(8)
    est, se = b.volume_estimate(200_000, rng)
    exact = 2 * math.pi / 3 - math.sqrt(3) / 2
    assert abs(est - exact) <= 4 * se


def test_adaptive_volume_tracks_target_precision():
    sp = NormedSpace(2, Norm.LINF)
    b = body(sp, Ball(np.zeros(2), 1.0), Ball(np.array([0.5, 0.5]), 1.0))
    rng = np.random.default_rng(3)
    est, se = estimate_volume_adaptive(b, rng, rel_tol=0.01)
    assert se <= 0.01 * est
    # overlap of two axis boxes: [-0.5,1]x[-0.5,1]
    assert abs(est - 2.25) <= 4 * se


# -- inscribed ball ----------------------------------------------------------


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_inscribed_radius_unit_ball(kind):
    sp = NormedSpace(2, kind)
    r, x = unit_ball_body(sp).inscribed_radius()
    assert r == pytest.approx(1.0, abs=1e-6)
    assert sp.norm(x) <= 1e-5


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_inscribed_radius_two_balls(kind):
    # equal balls radius R at distance D admit radius R - D/2 at the midpoint
    sp = NormedSpace(2, kind)
    c = np.array([0.8, 0.0])
    b = body(sp, Ball(np.zeros(2), 1.0), Ball(c, 1.0))
    r, x = b.inscribed_radius()
    assert r == pytest.approx(1.0 - sp.norm(c) / 2, abs=1e-6)


def test_inscribed_radius_ball_box_mix():
    sp = NormedSpace(2, Norm.L2)
    b = body(sp, Ball(np.array([1.0, 0.0]), 1.0), box=Box(np.zeros(2), 1.0))
    r, _ = b.inscribed_radius()
    assert r == pytest.approx(0.5, abs=1e-6)


def test_inscribed_radius_interval():
    sp = NormedSpace(1, Norm.LINF)
    b = body(sp, Ball(np.array([0.0]), 1.0), Ball(np.array([0.9]), 0.5))
    r, x = b.inscribed_radius()
    # the set is [0.4, 1.0]
    assert r == pytest.approx(0.3, abs=1e-6)
    assert x[0] == pytest.approx(0.7, abs=1e-5)


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_inscribed_radius_matches_grid_search(seed):
    rng = np.random.default_rng(seed)
    sp = NormedSpace(2, Norm.L2)
    balls = [Ball(rng.uniform(-0.4, 0.4, 2), rng.uniform(0.7, 1.3))
             for _ in range(3)]
    b = body(sp, *balls)
    r, _ = b.inscribed_radius()
    xs = np.linspace(-1.5, 1.5, 301)
    G = np.stack(np.meshgrid(xs, xs), axis=-1).reshape(-1, 2)
    margins = np.full(len(G), np.inf)
    for bl in balls:
        margins = np.minimum(margins, bl.radius - sp.norm(G - bl.center))
    grid_best = margins.max()
    # the optimizer may only beat the grid by at most one cell diagonal
    assert r >= grid_best - 1e-6
    assert r <= grid_best + math.hypot(0.01, 0.01)


def test_inscribed_radius_iteration_cap():
    sp = NormedSpace(2, Norm.L2)
    b = body(sp, Ball(np.zeros(2), 1.0), Ball(np.array([0.7, 0.3]), 1.0))
    with pytest.raises(ConvergenceError) as exc:
        b.inscribed_radius(tol=1e-12, max_iter=3)
    radius, center = exc.value.best
    assert 0.0 <= radius <= 1.0 and center.shape == (2,)
