"""Network descriptions and admissible cuts. The joint pmf is assembled
from a channel law plus a factored input/auxiliary distribution.

Variable naming convention used throughout the package:

    X<k>   channel input of node k            (k = 1..N)
    Y<k>   channel output / feedback at node k
    Yh<k>  compressed output of node k
    U<k>, V<k>  per-node auxiliaries; U0, V0 are the common layers
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .info import JointPmf, MAX_CELLS, StateSpaceTooLarge

SLICE_ATOL = 1e-9

_VAR_RE = re.compile(r"^(X|Y|Yh|U|V)(\d+)$")


def X(k: int) -> str:
    return f"X{k}"


def Y(k: int) -> str:
    return f"Y{k}"


def Yh(k: int) -> str:
    return f"Yh{k}"


def U(k: int) -> str:
    return f"U{k}"


def V(k: int) -> str:
    return f"V{k}"


def parse_var(name: str) -> tuple[str, int]:
    """Split ``'Yh3'`` into ``('Yh', 3)``."""
    m = _VAR_RE.match(name)
    if not m:
        raise NetworkError(f"unrecognized variable name {name!r}")
    return m.group(1), int(m.group(2))


class NetworkError(ValueError):
    pass


class FactorizationError(NetworkError):
    """A distribution falls outside the family a bound is stated for."""

    def __init__(self, report: "FactorizationReport"):
        super().__init__(str(report))
        self.report = report


@dataclass(frozen=True)
class NodeRoles:
    """Node 1 transmits; ``relays`` is R, every other node in [2:N] is a
    receiver. Feedback rates are bits per channel use, missing means 0."""

    n: int
    relays: frozenset[int] = frozenset()
    feedback_rates: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 3:
            raise NetworkError("a multicast network needs N >= 3 nodes")
        relays = frozenset(int(r) for r in self.relays)
        object.__setattr__(self, "relays", relays)
        if not relays <= set(self.others):
            raise NetworkError(f"relays {sorted(relays)} not within [2:{self.n}]")
        if not self.receivers:
            raise NetworkError("at least one receiver is required")
        rates = {int(k): float(v) for k, v in dict(self.feedback_rates).items()}
        for k, v in rates.items():
            if k not in self.others:
                raise NetworkError(f"feedback rate given for non-node {k}")
            if v < 0 or math.isnan(v):
                raise NetworkError(f"feedback rate of node {k} must be >= 0")
        object.__setattr__(self, "feedback_rates", rates)

    @classmethod
    def perfect_feedback(cls, n: int, relays: Iterable[int] = ()) -> "NodeRoles":
        return cls(n, frozenset(relays), {k: math.inf for k in range(2, n + 1)})

    @property
    def others(self) -> tuple[int, ...]:
        return tuple(range(2, self.n + 1))

    @property
    def receivers(self) -> frozenset[int]:
        return frozenset(self.others) - self.relays

    def feedback_rate(self, k: int) -> float:
        return self.feedback_rates.get(k, 0.0)

    def with_feedback(self, rates: Mapping[int, float]) -> "NodeRoles":
        return NodeRoles(self.n, self.relays, rates)


class CutSet(NamedTuple):
    T: frozenset
    Tc: frozenset

    def __str__(self):
        return "{" + ",".join(map(str, sorted(self.T))) + "}"


def enumerate_cuts(roles: NodeRoles) -> list[CutSet]:
    """All T strictly inside [2:N] whose complement holds a receiver,
    ordered by size and then lexicographically."""
    nodes = roles.others
    full = frozenset(nodes)
    cuts = []
    for size in range(len(nodes)):
        for T in combinations(nodes, size):
            Tc = full - frozenset(T)
            if Tc & roles.receivers:
                cuts.append(CutSet(frozenset(T), Tc))
    return cuts


@dataclass(frozen=True, eq=False)
class DiscreteNetwork:
    """Channel law ``channel[x1..xN, y1..yN] = P(y | x)``."""

    roles: NodeRoles
    input_sizes: tuple[int, ...]
    output_sizes: tuple[int, ...]
    channel: np.ndarray

    def __post_init__(self):
        n = self.roles.n
        xs = tuple(int(s) for s in self.input_sizes)
        ys = tuple(int(s) for s in self.output_sizes)
        if len(xs) != n or len(ys) != n:
            raise NetworkError(f"need {n} input and {n} output alphabet sizes")
        if min(xs + ys) < 1:
            raise NetworkError("alphabet sizes must be >= 1")
        ch = np.array(self.channel, dtype=float)
        if ch.size == math.prod(xs + ys):
            ch = ch.reshape(xs + ys)
        if ch.shape != xs + ys:
            raise NetworkError(f"channel shape {ch.shape}, expected {xs + ys}")
        if np.any(ch < 0):
            raise NetworkError("channel has negative entries")
        sums = ch.reshape(math.prod(xs), -1).sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1) > SLICE_ATOL)
        if bad.size:
            x = np.unravel_index(bad[0], xs)
            raise NetworkError(
                f"channel slice x={tuple(int(v) for v in x)} sums to {float(sums[bad[0]]):.12g}"
            )
        ch.setflags(write=False)
        object.__setattr__(self, "input_sizes", xs)
        object.__setattr__(self, "output_sizes", ys)
        object.__setattr__(self, "channel", ch)

    @property
    def n(self) -> int:
        return self.roles.n

    def with_roles(self, roles: NodeRoles) -> "DiscreteNetwork":
        return DiscreteNetwork(roles, self.input_sizes, self.output_sizes, self.channel)


@dataclass(frozen=True, eq=False)
class Factor:
    """P(target | given); ``table`` axes are ``given`` followed by target."""

    target: str
    given: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        parse_var(self.target)
        given = tuple(self.given)
        for g in given:
            parse_var(g)
        if self.target in given or len(set(given)) != len(given):
            raise NetworkError(f"factor {self.target}: bad conditioning set {given}")
        t = np.array(self.table, dtype=float)
        if t.ndim != len(given) + 1:
            raise NetworkError(
                f"factor {self.target}: table has {t.ndim} axes, expected {len(given) + 1}"
            )
        if np.any(t < 0):
            raise NetworkError(f"factor {self.target}: negative entries")
        sums = t.sum(axis=-1)
        if np.any(np.abs(sums - 1) > SLICE_ATOL):
            idx = np.unravel_index(np.argmax(np.abs(sums - 1)), sums.shape)
            raise NetworkError(
                f"factor {self.target}: slice {tuple(int(i) for i in idx)} "
                f"sums to {float(sums[idx]):.12g}"
            )
        t.setflags(write=False)
        object.__setattr__(self, "given", given)
        object.__setattr__(self, "table", t)

    @property
    def size(self) -> int:
        return self.table.shape[-1]

    @property
    def role(self) -> str:
        return parse_var(self.target)[0]


@dataclass(frozen=True, eq=False)
class FactoredDistribution:
    factors: tuple[Factor, ...]

    def __post_init__(self):
        factors = tuple(self.factors)
        object.__setattr__(self, "factors", factors)
        seen = set()
        for f in factors:
            if f.role == "Y":
                raise NetworkError(f"{f.target} is produced by the channel, not a factor")
            if f.target in seen:
                raise NetworkError(f"variable {f.target} defined twice")
            seen.add(f.target)

    def __iter__(self):
        return iter(self.factors)

    def __getitem__(self, name: str) -> Factor:
        for f in self.factors:
            if f.target == name:
                return f
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(f.target == name for f in self.factors)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(f.target for f in self.factors)

    def sizes(self) -> dict[str, int]:
        return {f.target: f.size for f in self.factors}

    def replace(self, *new: Factor) -> "FactoredDistribution":
        """Swap in factors by target name, appending unknown ones."""
        repl = {f.target: f for f in new}
        out = [repl.pop(f.target, f) for f in self.factors]
        return FactoredDistribution(tuple(out) + tuple(repl.values()))

    def without(self, *names: str) -> "FactoredDistribution":
        return FactoredDistribution(tuple(f for f in self.factors if f.target not in names))


def factor(target: str, given: Sequence[str] = (), table=None) -> Factor:
    return Factor(target, tuple(given), np.asarray(table, dtype=float))


def _check_order(fd: FactoredDistribution, n: int) -> tuple[str, str] | None:
    """None if every factor only conditions on variables already defined
    (outputs become available once every input is), else (offender, message)."""
    inputs = {X(k) for k in range(1, n + 1)}
    outputs = {Y(k) for k in range(1, n + 1)}
    defined: set[str] = set()
    for f in fd:
        kind, k = parse_var(f.target)
        if kind == "X" and not 1 <= k <= n:
            return f.target, f"{f.target} is not a node input of an N={n} network"
        missing = [g for g in f.given if g not in defined]
        if missing:
            return f.target, f"conditions on {missing} before they are defined"
        defined.add(f.target)
        if inputs <= defined:
            defined |= outputs
    absent = sorted(inputs - defined, key=lambda s: parse_var(s)[1])
    if absent:
        return absent[0], f"no factor defines {', '.join(absent)}"
    return None


def build_joint(dn: DiscreteNetwork, fd: FactoredDistribution) -> JointPmf:
    """Multiply the factors with the channel law into one joint table over
    X1..XN, Y1..YN and the auxiliaries (in factor order)."""
    n = dn.n
    bad = _check_order(fd, n)
    if bad:
        raise NetworkError(f"{bad[0]}: {bad[1]}")
    sizes = {X(k): dn.input_sizes[k - 1] for k in range(1, n + 1)}
    sizes.update({Y(k): dn.output_sizes[k - 1] for k in range(1, n + 1)})
    for f in fd:
        kind, k = parse_var(f.target)
        if kind == "X" and f.size != sizes[f.target]:
            raise NetworkError(
                f"{f.target} has alphabet {f.size} in the factor but "
                f"{sizes[f.target]} in the network"
            )
        sizes[f.target] = f.size
        for g, s in zip(f.given, f.table.shape[:-1]):
            if sizes[g] != s:
                raise NetworkError(
                    f"factor {f.target}: axis for {g} has size {s}, expected {sizes[g]}"
                )
    names = [X(k) for k in range(1, n + 1)] + [Y(k) for k in range(1, n + 1)]
    names += [f.target for f in fd if parse_var(f.target)[0] != "X"]
    cells = math.prod(sizes[v] for v in names)
    if cells > MAX_CELLS:
        raise StateSpaceTooLarge(f"joint state space has {cells} cells (cap {MAX_CELLS})")
    letters = string.ascii_letters
    if len(names) > len(letters):
        raise NetworkError("too many variables")
    sub = {v: letters[i] for i, v in enumerate(names)}
    operands, specs = [dn.channel], ["".join(sub[v] for v in names[: 2 * n])]
    for f in fd:
        operands.append(f.table)
        specs.append("".join(sub[g] for g in f.given) + sub[f.target])
    expr = ",".join(specs) + "->" + "".join(sub[v] for v in names)
    table = np.einsum(expr, *operands, optimize="greedy")
    # renormalize away accumulated rounding in long products
    table = table / table.sum()
    return JointPmf(tuple(names), table)


@dataclass(frozen=True)
class GaussianRelayParams:
    """Enhanced Gaussian relay channel: gains and powers. The received
    SNRs are derived on access."""

    g12: float
    g13: float
    g23: float
    g21: float
    P1: float
    P2: float

    def __post_init__(self):
        for name in ("g12", "g13", "g23", "g21", "P1", "P2"):
            if not math.isfinite(getattr(self, name)):
                raise NetworkError(f"{name} must be finite")
        if self.P1 < 0 or self.P2 < 0:
            raise NetworkError("powers must be >= 0")

    @property
    def s12(self) -> float:
        return self.g12**2 * self.P1

    @property
    def s13(self) -> float:
        return self.g13**2 * self.P1

    @property
    def s23(self) -> float:
        return self.g23**2 * self.P2

    @property
    def s21(self) -> float:
        return self.g21**2 * self.P2

    @classmethod
    def table1(cls, d: float, P1: float = 5.0, P2: float = 1.0) -> "GaussianRelayParams":
        """Line geometry: relay at distance d from the transmitter, unit
        source-destination distance."""
        if not d > 0 or d == 1:
            raise NetworkError(f"relay position d must be positive and != 1, got {d}")
        return cls(1 / d, 1.0, 1 / abs(1 - d), 1 / abs(1 - d), P1, P2)

    @classmethod
    def fig4(cls, P: float) -> "GaussianRelayParams":
        return cls(1.0, 1.0, 0.7, 1.0, P, P)


# -- factorization families --------------------------------------------------

PATTERNS = ("thm1", "thm2", "thm3", "thm4", "nnc", "ddf")


@dataclass
class FactorizationReport:
    pattern: str
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first_offender(self) -> str | None:
        return self.violations[0].split(":", 1)[0] if self.violations else None

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return f"{self.pattern}: ok"
        return f"{self.pattern}: " + "; ".join(self.violations)


def _allowed(
    name: str, pattern: str, roles: NodeRoles, decode_set: frozenset[int]
) -> set[str] | None:
    """Conditioning variables a factor for ``name`` may use under
    ``pattern``; None if the variable has no place in that family."""
    kind, k = parse_var(name)
    n, R = roles.n, roles.relays
    others = roles.others
    is_relay = k in R
    xs = {X(j) for j in others}
    if pattern == "nnc":
        if kind == "X":
            return set()
        if kind == "Yh" and k >= 2:
            return {X(k), Y(k)}
        return None
    if pattern == "thm1":
        if kind == "X":
            return xs if k == 1 else set()
        if kind == "Yh" and k >= 2:
            return {X(k), Y(k)}
        return None
    if pattern == "thm2":
        if kind == "X":
            if k == 1:
                return xs | {U(r) for r in R}
            return {U(k)} if is_relay else set()
        if kind == "U" and is_relay:
            return {X(k)}
        if kind == "Yh" and k >= 2:
            return {U(k), X(k), Y(k)} if is_relay else {X(k), Y(k)}
        return None
    if pattern == "thm3":
        if name == "V0":
            return set()
        if name == "U0":
            return {"V0"}
        if kind == "X":
            if k == 1:
                return {"V0", "U0"} | xs | {U(r) for r in R}
            return {"V0"} if is_relay else set()
        if kind == "U" and is_relay:
            return {"V0", "U0", X(k)}
        if kind == "Yh" and k >= 2:
            if is_relay:
                return {"V0", "U0", U(k), X(k), Y(k)}
            return {X(k), Y(k)}
        return None
    if pattern == "thm4":
        if kind == "V" and k >= 2:
            return set()
        if kind == "X":
            if k == 1:
                return {V(j) for j in decode_set} | {U(j) for j in decode_set if j in R}
            return {V(k)}
        if kind == "U" and is_relay:
            return {V(k)}
        if kind == "Yh" and k >= 2:
            if is_relay:
                return {U(k), V(k), X(k), Y(k)}
            return {V(k), X(k), Y(k)}
        return None
    if pattern == "ddf":
        if kind == "X":
            return xs if k == 1 else set()
        if kind == "U" and k >= 2:
            return {X(j) for j in range(1, n + 1)} | {U(j) for j in others if j != k}
        return None
    raise NetworkError(f"unknown factorization pattern {pattern!r}")


def validate_factorization(
    fd: FactoredDistribution,
    pattern: str,
    roles: NodeRoles,
    decode_set: Iterable[int] | None = None,
) -> FactorizationReport:
    """Check that ``fd`` belongs to the pmf family of ``pattern``.

    Alphabet-size-1 variables are constants and are ignored both as factor
    targets and as conditioners, so one distribution can be checked
    against several families.
    """
    if pattern not in PATTERNS:
        raise NetworkError(f"unknown factorization pattern {pattern!r}")
    A = frozenset(roles.others if decode_set is None else decode_set)
    report = FactorizationReport(pattern)
    bad = _check_order(fd, roles.n)
    if bad:
        report.violations.append(f"{bad[0]}: {bad[1]}")
    sizes = fd.sizes()
    for f in fd:
        if f.size == 1:
            continue
        allowed = _allowed(f.target, pattern, roles, A)
        if allowed is None:
            report.violations.append(f"{f.target}: not a variable of the {pattern} family")
            continue
        extra = [g for g in f.given if sizes.get(g, 2) > 1 and g not in allowed]
        if extra:
            report.violations.append(
                f"{f.target}: conditioned on {extra}, allowed only {sorted(allowed)}"
            )
    return report
