"""Deterministic box-constrained maximization: full grid scan, then compass
(pattern) search from the best grid points. Constraints are handled by
rejection; an optional projection maps a point onto the constraint
boundary, where optima of the relay problems tend to sit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SearchConfig:
    bounds: tuple[tuple[float, float], ...]
    log_scale: tuple[bool, ...] | None = None
    grid_points: int = 33
    refine_iters: int = 60
    shrink: float = 0.5
    tol: float = 1e-5
    n_starts: int = 4

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        log = self.log_scale or (False,) * len(bounds)
        object.__setattr__(self, "log_scale", tuple(bool(b) for b in log))
        if len(self.log_scale) != len(bounds):
            raise ValueError("log_scale needs one flag per dimension")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        for (lo, hi), lg in zip(bounds, self.log_scale):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bad bounds ({lo}, {hi})")
            if lg and lo <= 0:
                raise ValueError("log-scale dimensions need positive bounds")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def replace(self, **kw) -> "SearchConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return SearchConfig(**d)


@dataclass
class SearchResult:
    point: np.ndarray | None
    value: float
    evaluations: int
    feasible: bool
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def empty(self) -> bool:
        return self.point is None


class _Problem:
    """Maps the unit cube (log dims in log space) onto the search box and
    batches objective/feasibility calls."""

    def __init__(self, objective, feasible, cfg: SearchConfig, vectorized: bool, project=None):
        self.cfg = cfg
        self.lo = np.array([math.log(lo) if lg else lo for (lo, _), lg in zip(cfg.bounds, cfg.log_scale)])
        self.hi = np.array([math.log(hi) if lg else hi for (_, hi), lg in zip(cfg.bounds, cfg.log_scale)])
        self.log = np.array(cfg.log_scale)
        self.objective = objective
        self.feasible = feasible
        self.vectorized = vectorized
        self.project = project
        self.evaluations = 0

    def projected(self, Uc: np.ndarray) -> np.ndarray:
        """Unit-cube images of the projections of ``Uc``; unusable rows dropped."""
        Xb = self.to_box(Uc)
        if self.vectorized:
            Q = np.asarray(self.project(Xb), dtype=float)
        else:
            rows = [self.project(x) for x in Xb]
            Q = np.array([np.full(self.cfg.dim, np.nan) if q is None else q for q in rows])
        Q = Q.reshape(-1, self.cfg.dim)
        Q = Q[np.all(np.isfinite(Q), axis=1)]
        return self.to_unit(Q)

    def to_box(self, u: np.ndarray) -> np.ndarray:
        z = self.lo + u * (self.hi - self.lo)
        x = np.where(self.log, np.exp(z), z)
        # exp/log round trips can step a hair outside the box
        return np.clip(x, [b[0] for b in self.cfg.bounds], [b[1] for b in self.cfg.bounds])

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        z = np.where(self.log, np.log(np.maximum(x, 1e-300)), x)
        return np.clip((z - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Objective values with infeasible points set to -inf."""
        X = np.atleast_2d(X)
        self.evaluations += len(X)
        if self.vectorized:
            ok = np.asarray(self.feasible(X), dtype=bool) if self.feasible else np.ones(len(X), bool)
            vals = np.full(len(X), -np.inf)
            if ok.any():
                vals[ok] = np.asarray(self.objective(X[ok]), dtype=float)
        else:
            vals = np.empty(len(X))
            for i, x in enumerate(X):
                if self.feasible is None or self.feasible(x):
                    vals[i] = float(self.objective(x))
                else:
                    vals[i] = -np.inf
        vals[np.isnan(vals)] = -np.inf
        return vals


def _grid(cfg: SearchConfig, m: int) -> np.ndarray:
    axes = [np.linspace(0.0, 1.0, m)] * cfg.dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.ravel() for a in mesh], axis=1)


def maximize(
    objective: Callable,
    feasible: Callable | None,
    cfg: SearchConfig,
    *,
    vectorized: bool = False,
    project: Callable[[np.ndarray], np.ndarray | None] | None = None,
    chunk: int = 1 << 18,
) -> SearchResult:
    """Maximize ``objective`` over the box in ``cfg`` subject to ``feasible``.

    With ``vectorized=True`` both callables take an (m, dim) array and
    return m values. ``project`` maps points to candidates on the
    constraint boundary (rows of NaN where there is none); projections of
    the grid and of every poll are evaluated alongside. It is batched
    exactly when the objective is.

    The grid ties break toward the lexicographically smallest point, and no
    randomness is involved, so repeated calls give identical results.
    """
    prob = _Problem(objective, feasible, cfg, vectorized, project)
    G = _grid(cfg, cfg.grid_points)
    if project is not None:
        G = np.vstack([G] + [prob.projected(G[i : i + chunk]) for i in range(0, len(G), chunk)])
    vals = np.concatenate(
        [prob.evaluate(prob.to_box(G[i : i + chunk])) for i in range(0, len(G), chunk)]
    )
    if not np.isfinite(vals).any():
        return SearchResult(None, -math.inf, prob.evaluations, False)

    # starting points: best grid values, stable order keeps lexicographic ties
    order = np.argsort(-vals, kind="stable")
    step0 = 1.0 / (cfg.grid_points - 1)
    starts = _spread_starts(G, vals, order, cfg.n_starts, 2.5 * step0)

    best_u, best_v = G[order[0]], vals[order[0]]
    history = [float(best_v)]
    for i in starts:
        u, v = _pattern_search(prob, G[i], vals[i], step0, cfg, project)
        if v > best_v:
            best_u, best_v = u, v
        history.append(float(v))
    point = prob.to_box(best_u)
    # re-evaluate so the reported value belongs to the reported point
    check = prob.evaluate(point[None, :])[0]
    return SearchResult(point, float(check), prob.evaluations, bool(np.isfinite(check)), history)


def _spread_starts(G, vals, order, k: int, sep: float) -> list[int]:
    """Best grid points, skipping any within ``sep`` (max-norm) of one
    already taken, so the starts cover separate basins rather than one
    plateau."""
    taken: list[int] = []
    for i in order:
        if len(taken) == k or not np.isfinite(vals[i]):
            break
        if all(np.max(np.abs(G[i] - G[j])) > sep for j in taken):
            taken.append(int(i))
    return taken


def _directions(dim: int) -> np.ndarray:
    """Poll directions: every vertex of the {-1,0,1}^dim stencil for small
    dim (ridges of min-type objectives run diagonally), else the compass."""
    if dim <= 4:
        d = np.array(np.meshgrid(*[[-1.0, 0.0, 1.0]] * dim, indexing="ij")).reshape(dim, -1).T
        return d[np.any(d != 0, axis=1)]
    eye = np.eye(dim)
    return np.concatenate([eye, -eye])


def _pattern_search(prob: _Problem, u, v, step, cfg: SearchConfig, project):
    u = np.array(u, dtype=float)
    dirs = _directions(cfg.dim)
    h = step
    for _ in range(cfg.refine_iters):
        cand = u + h * dirs
        cand = np.clip(cand, 0.0, 1.0)
        if project is not None:
            cand = np.vstack([cand, prob.projected(np.vstack([u[None, :], cand]))])
        cv = prob.evaluate(prob.to_box(cand))
        j = int(np.argmax(cv))
        gain = cv[j] - v
        if gain > 0:
            u, v = cand[j], cv[j]
        # negligible gains shrink too, so creeping along a ridge terminates
        if gain <= 1e-4 * cfg.tol:
            h *= cfg.shrink
            if h < 1e-12:
                break
    return u, v
