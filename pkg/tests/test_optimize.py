import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaybounds.gaussian import _pro, default_config, pro2_threshold
from relaybounds.network import GaussianRelayParams
from relaybounds.optimize import SearchConfig, maximize

UNIT = SearchConfig(bounds=((0.0, 1.0),))


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(bounds=((0.0, 1.0),), grid_points=1)
    with pytest.raises(ValueError):
        SearchConfig(bounds=((0.0, 1.0),), tol=0.0)
    with pytest.raises(ValueError):
        SearchConfig(bounds=((1.0, 1.0),))
    with pytest.raises(ValueError):
        SearchConfig(bounds=((0.0, math.inf),))
    with pytest.raises(ValueError):
        SearchConfig(bounds=((0.0, 1.0),), log_scale=(True,))
    cfg = SearchConfig(bounds=((0, 1), (2, 3)))
    assert (cfg.grid_points, cfg.refine_iters, cfg.shrink, cfg.tol) == (33, 60, 0.5, 1e-5)
    assert cfg.replace(grid_points=9).grid_points == 9 and cfg.dim == 2


def test_interior_maximum():
    res = maximize(lambda x: -(x[0] - 0.3) ** 2, None, UNIT)
    assert abs(res.point[0] - 0.3) < 1e-4
    assert abs(res.value) < 1e-7
    assert res.feasible and not res.empty


@pytest.mark.parametrize("edge", [0.5, 0.4, 0.123456])
def test_boundary_maximum(edge):
    res = maximize(lambda x: x[0], lambda x: x[0] <= edge, UNIT)
    assert abs(res.point[0] - edge) < 1e-6
    assert res.point[0] <= edge


def test_empty_feasible_set():
    res = maximize(lambda x: x[0], lambda x: False, UNIT)
    assert res.empty and not res.feasible and res.value == -math.inf


def test_nan_objective_counts_as_infeasible():
    res = maximize(lambda x: math.nan if x[0] > 0.2 else x[0], None, UNIT)
    assert res.point[0] <= 0.2 + 1e-12
    assert abs(res.value - 0.2) < 1e-6


def test_log_scale_dimension():
    cfg = SearchConfig(bounds=((1e-4, 1e4),), log_scale=(True,))
    res = maximize(lambda x: -(math.log10(x[0]) - 1.5) ** 2, None, cfg)
    assert abs(math.log10(res.point[0]) - 1.5) < 1e-4


def test_tie_breaks_toward_smallest_point():
    res = maximize(lambda x: 1.0, None, SearchConfig(bounds=((0, 1), (0, 1))))
    np.testing.assert_array_equal(res.point, [0.0, 0.0])


def _bumpy(X):
    X = np.atleast_2d(X)
    return np.sin(7 * X[:, 0]) * np.cos(5 * X[:, 1]) - 0.3 * (X[:, 0] - X[:, 1]) ** 2


def _disc(X):
    X = np.atleast_2d(X)
    return (X[:, 0] - 0.2) ** 2 + (X[:, 1] - 0.6) ** 2 <= 0.16


def test_deterministic_and_mode_independent():
    cfg = SearchConfig(bounds=((0, 1), (0, 1)), grid_points=17)
    a = maximize(_bumpy, _disc, cfg, vectorized=True)
    b = maximize(_bumpy, _disc, cfg, vectorized=True)
    c = maximize(lambda x: float(_bumpy(x)[0]), lambda x: bool(_disc(x)[0]), cfg)
    assert a.point.tobytes() == b.point.tobytes() and a.value == b.value
    assert a.point.tobytes() == c.point.tobytes() and a.value == c.value


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.1, 0.5))
def test_result_is_feasible_and_grid_refinement_does_not_lose(cx, cy, r):
    def feas(X):
        X = np.atleast_2d(X)
        return (X[:, 0] - cx) ** 2 + (X[:, 1] - cy) ** 2 <= r * r

    coarse = SearchConfig(bounds=((0, 1), (0, 1)), grid_points=9)
    fine = coarse.replace(grid_points=17)
    a = maximize(_bumpy, feas, coarse, vectorized=True)
    b = maximize(_bumpy, feas, fine, vectorized=True)
    for res in (a, b):
        if res.empty:
            continue
        assert feas(res.point)[0]
        assert res.value == _bumpy(res.point)[0]
    if not a.empty:
        assert not b.empty and b.value >= a.value - fine.tol


def test_projection_candidates_are_used():
    # the feasible set is the line y = x, which no grid point off the
    # diagonal reaches; the projection supplies it
    cfg = SearchConfig(bounds=((0, 1), (0, 1)), grid_points=4)

    def feas(X):
        return np.abs(X[:, 1] - X[:, 0]) < 1e-12

    def proj(X):
        out = X.copy()
        out[:, 1] = X[:, 0]
        return out

    f = lambda X: -(X[:, 0] - 0.37) ** 2
    res = maximize(f, feas, cfg, vectorized=True, project=proj)
    assert abs(res.point[0] - 0.37) < 1e-4 and feas(res.point[None])[0]


def test_pro2_problem_at_d075():
    ch = GaussianRelayParams.table1(0.75)
    cfg = default_config()

    def abg(P):
        return P[:, 0], 1 - P[:, 1] ** 2, 1 - P[:, 2] ** 2

    def f(P):
        return _pro(ch.s12, ch.s13, ch.s23, *abg(P), P[:, 3])

    def feas(P):
        a, _, g = abg(P)
        return P[:, 3] >= pro2_threshold(ch, a, g)

    def proj(P):
        a, _, g = abg(P)
        out = P.copy()
        out[:, 3] = np.clip(pro2_threshold(ch, a, g) * (1 + 1e-12), *cfg.bounds[3])
        return out

    res = maximize(f, feas, cfg, vectorized=True, project=proj)
    assert abs(res.value - 1.7077) <= 0.003
    assert feas(res.point[None])[0]
