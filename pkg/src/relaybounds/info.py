"""Probability-table algebra: marginals, entropies and conditional mutual
information in bits, plus the Gaussian helpers used by the closed forms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_CELLS = 2**24
PMF_ATOL = 1e-9
MI_CLAMP = 1e-9


class InfoError(ValueError):
    """Bad arguments to an information measure."""


class StateSpaceTooLarge(InfoError):
    pass


def _names(A: Iterable[str] | str | None) -> tuple[str, ...]:
    if A is None:
        return ()
    if isinstance(A, str):
        return (A,)
    return tuple(A)


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Dense joint pmf over named finite variables.

    ``table`` has one axis per variable, in the order of ``names``.
    Entropies of variable subsets are memoized; the table itself is
    read-only.
    """

    names: tuple[str, ...]
    table: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(set(names)) != len(names):
            raise InfoError(f"duplicate variable names in {names}")
        cells = int(np.prod(np.shape(self.table), dtype=np.int64))
        if cells > MAX_CELLS:
            raise StateSpaceTooLarge(f"joint state space has {cells} cells (cap {MAX_CELLS})")
        table = np.array(self.table, dtype=float)
        if table.ndim != len(names):
            raise InfoError(
                f"table has {table.ndim} axes but {len(names)} variables were named"
            )
        if np.any(table < 0):
            raise InfoError("negative probability")
        if abs(table.sum() - 1.0) > PMF_ATOL:
            raise InfoError(f"probabilities sum to {table.sum()!r}, not 1")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def sizes(self) -> dict[str, int]:
        return dict(zip(self.names, self.table.shape))

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InfoError(f"unknown variable {name!r}") from None

    def marginal_table(self, keep: Sequence[str]) -> np.ndarray:
        """Marginal over ``keep`` with axes in the order given."""
        keep = _names(keep)
        axes = [self.index(n) for n in keep]
        drop = tuple(i for i in range(len(self.names)) if i not in axes)
        t = self.table.sum(axis=drop)
        # remaining axes are in original order; permute to requested order
        order = sorted(axes)
        return np.transpose(t, [order.index(a) for a in axes])

    def H(self, A) -> float:
        key = frozenset(_names(A))
        if not key:
            return 0.0
        if key not in self._cache:
            for n in key:
                self.index(n)
            keep = [n for n in self.names if n in key]
            p = self.marginal_table(keep).ravel()
            p = p[p > 0]
            self._cache[key] = float(-np.sum(p * np.log2(p)))
        return self._cache[key]

    def I(self, A, B, C=()) -> float:
        return cond_mutual_info(self, A, B, C)


def marginalize(p: JointPmf, keep) -> JointPmf:
    """Sum out every variable not in ``keep``; kept variables stay in the
    order they have in ``p``."""
    keep = set(_names(keep))
    for n in keep:
        p.index(n)
    names = tuple(n for n in p.names if n in keep)
    return JointPmf(names, p.marginal_table(names))


def entropy(p: JointPmf, A) -> float:
    """Joint entropy H(A) in bits."""
    A = _names(A)
    if not A:
        raise InfoError("entropy of an empty variable set")
    return p.H(A)


def cond_entropy(p: JointPmf, A, C=()) -> float:
    A, C = _names(A), _names(C)
    return p.H(A + C) - p.H(C)


def cond_mutual_info(p: JointPmf, A, B, C=()) -> float:
    """I(A;B|C) in bits.

    Floating-point negatives down to -1e-9 are clamped to zero; anything
    more negative means the table or the caller is broken.
    """
    A, B, C = _names(A), _names(B), _names(C)
    if not A or not B:
        raise InfoError("mutual information needs nonempty A and B")
    sa, sb, sc = set(A), set(B), set(C)
    if sa & sb or sa & sc or sb & sc:
        raise InfoError(f"overlapping variable sets {A}, {B}, {C}")
    val = p.H(A + C) + p.H(B + C) - p.H(A + B + C) - p.H(C)
    if val < 0:
        if val < -MI_CLAMP:
            raise InfoError(f"negative mutual information {val!r}")
        val = 0.0
    return val


def gauss_c(x) -> float:
    """C(x) = 1/2 log2(1 + x)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise InfoError("C(x) needs x >= 0")
    out = 0.5 * np.log2(1.0 + x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GaussCovariance:
    labels: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        labels = tuple(self.labels)
        if m.shape != (len(labels), len(labels)):
            raise InfoError("covariance shape does not match labels")
        if not np.allclose(m, m.T, atol=1e-12, rtol=0):
            raise InfoError("covariance not symmetric")
        if np.linalg.eigvalsh(m).min() < -1e-9:
            raise InfoError("covariance not positive semidefinite")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrix", m)

    def _logdet(self, names) -> float:
        if not names:
            return 0.0
        idx = [self.labels.index(n) for n in names]
        sub = self.matrix[np.ix_(idx, idx)] + 1e-12 * np.eye(len(idx))
        sign, ld = np.linalg.slogdet(sub)
        if sign <= 0:
            raise InfoError(f"singular covariance block for {names}")
        return ld


def gauss_mi_from_cov(cov: GaussCovariance, A, B, C=()) -> float:
    """I(A;B|C) in bits for jointly Gaussian variables, via log-determinants."""
    A, B, C = _names(A), _names(B), _names(C)
    for n in A + B + C:
        if n not in cov.labels:
            raise InfoError(f"unknown variable {n!r}")
    if set(A) & set(B) or set(A) & set(C) or set(B) & set(C):
        raise InfoError("overlapping variable sets")
    nats = 0.5 * (
        cov._logdet(A + C) + cov._logdet(B + C) - cov._logdet(A + B + C) - cov._logdet(C)
    )
    return nats / np.log(2)


def linear_gaussian_cov(
    sources: dict[str, float], outputs: dict[str, dict[str, float]]
) -> GaussCovariance:
    """Covariance of variables built as linear combinations of independent
    zero-mean sources (``sources`` maps name -> variance).

    ``outputs`` maps each variable to coefficients over sources or over
    previously listed outputs; sources themselves are included as labels.
    """
    src = list(sources)
    rows: dict[str, np.ndarray] = {n: np.eye(len(src))[i] for i, n in enumerate(src)}
    for name, coeffs in outputs.items():
        v = np.zeros(len(src))
        for k, c in coeffs.items():
            v = v + c * rows[k]
        rows[name] = v
    labels = tuple(rows)
    M = np.array([rows[n] for n in labels])
    D = np.diag([sources[n] for n in src])
    return GaussCovariance(labels, M @ D @ M.T)
