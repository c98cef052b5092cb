"""Achievable-rate lower bounds for discrete memoryless multicast networks,
evaluated exactly for one fixed distribution.

Every evaluator returns a :class:`BoundResult` holding the minimum of the
rate expression over receivers ``d`` and admissible cuts ``T`` together
with the term that attains it. Side constraints such as feedback rates or
transmitter decoding are listed with their slack.

Auxiliaries that a bound does not use (set to the empty variable) are
either omitted from the distribution or given alphabet size 1; both are
treated as constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Sequence

import numpy as np

from .info import JointPmf, cond_mutual_info
from .network import (
    CutSet,
    DiscreteNetwork,
    FactoredDistribution,
    FactorizationError,
    NetworkError,
    U,
    V,
    X,
    Y,
    Yh,
    build_joint,
    enumerate_cuts,
    parse_var,
    validate_factorization,
)

SLACK_TOL = 1e-12
MAX_DDF_ORDER_N = 5


@dataclass(frozen=True)
class Constraint:
    label: str
    satisfied: bool
    slack: float


@dataclass(frozen=True)
class CutValue:
    receiver: int | None
    cut: CutSet | None
    label: str
    value: float


@dataclass
class BoundResult:
    bound: str
    rate: float
    binding_receiver: int | None
    binding_cut: CutSet | None
    binding_label: str
    feasibility: list[Constraint] = field(default_factory=list)
    values: list[CutValue] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def achieved_rate(self) -> float:
        return max(self.rate, 0.0)

    @property
    def feasible(self) -> bool:
        return all(c.satisfied for c in self.feasibility)

    def as_dict(self) -> dict:
        return {
            "bound": self.bound,
            "rate": self.rate,
            "achieved_rate": self.achieved_rate,
            "feasible": self.feasible,
            "binding_receiver": self.binding_receiver,
            "binding_cut": None if self.binding_cut is None else sorted(self.binding_cut.T),
            "binding_label": self.binding_label,
            "constraints": [
                {"label": c.label, "satisfied": c.satisfied, "slack": c.slack}
                for c in self.feasibility
            ],
            **self.details,
        }


# -- term helpers -------------------------------------------------------------

_AUX = ("Yh", "U", "V")


class _Terms:
    """Mutual-information calculator that treats missing auxiliaries as
    constants and drops conditioned variables from the arguments."""

    def __init__(self, p: JointPmf):
        self.p = p
        self._names = set(p.names)

    def _keep(self, names: Iterable[str]) -> list[str]:
        out = []
        for n in names:
            if n in self._names:
                if n not in out:
                    out.append(n)
            elif parse_var(n)[0] not in _AUX:
                raise NetworkError(f"variable {n} missing from the joint pmf")
        return out

    def I(self, A: Sequence[str], B: Sequence[str], C: Sequence[str] = ()) -> float:
        C = self._keep(C)
        A = [a for a in self._keep(A) if a not in C]
        B = [b for b in self._keep(B) if b not in C]
        if not A or not B:
            return 0.0
        return cond_mutual_info(self.p, A, B, C)


def _xs(S) -> list[str]:
    return [X(k) for k in sorted(S)]


def _ys(S) -> list[str]:
    return [Y(k) for k in sorted(S)]


def _yhs(S) -> list[str]:
    return [Yh(k) for k in sorted(S)]


def _us(S) -> list[str]:
    return [U(k) for k in sorted(S)]


def _vs(S) -> list[str]:
    return [V(k) for k in sorted(S)]


def _is_degenerate(fd: FactoredDistribution, name: str) -> bool:
    return name not in fd or fd[name].size == 1


def _prepare(dn: DiscreteNetwork, fd: FactoredDistribution, pattern: str, **kw):
    report = validate_factorization(fd, pattern, dn.roles, **kw)
    if not report.ok:
        raise FactorizationError(report)
    return _Terms(build_joint(dn, fd))


def _feedback_constraint(roles, k: int, needed: float, term: str) -> Constraint:
    rate = roles.feedback_rate(k)
    slack = rate - needed
    return Constraint(f"R_Fb,{k} >= {term}", slack >= -SLACK_TOL, slack)


def _collect(bound: str, values: list[CutValue], constraints, **details) -> BoundResult:
    best = min(values, key=lambda v: v.value)
    return BoundResult(
        bound=bound,
        rate=best.value,
        binding_receiver=best.receiver,
        binding_cut=best.cut,
        binding_label=best.label,
        feasibility=list(constraints),
        values=values,
        details=details,
    )


def _min_or_zero(xs: Iterable[float]) -> float:
    xs = list(xs)
    return min(xs) if xs else 0.0


# -- compress-forward family --------------------------------------------------


def _cf_value(t: _Terms, n: int, d: int, cut: CutSet) -> float:
    T, Tc = cut
    allx = _xs(range(1, n + 1))
    return t.I([X(1)] + _xs(T), _yhs(Tc) + [Y(d)], _xs(Tc)) - t.I(
        _yhs(T), _ys(T), allx + [Y(d)] + _yhs(Tc)
    )


def eval_nnc(dn: DiscreteNetwork, fd: FactoredDistribution) -> BoundResult:
    """Noisy network coding with the transmitter's own compression dropped;
    all inputs independent."""
    t = _prepare(dn, fd, "nnc")
    roles = dn.roles
    values = [
        CutValue(d, cut, "", _cf_value(t, roles.n, d, cut))
        for d in sorted(roles.receivers)
        for cut in enumerate_cuts(roles)
    ]
    return _collect("nnc", values, [])


def eval_thm1(dn: DiscreteNetwork, fd: FactoredDistribution) -> BoundResult:
    """Compress-forward at every node, indices fed back to the transmitter,
    which may correlate X1 with X2..XN."""
    t = _prepare(dn, fd, "thm1")
    roles = dn.roles
    values = [
        CutValue(d, cut, "", _cf_value(t, roles.n, d, cut))
        for d in sorted(roles.receivers)
        for cut in enumerate_cuts(roles)
    ]
    cons = [
        _feedback_constraint(
            roles, k, t.I([Yh(k)], [Y(k)], [X(k)]), f"I(Yh{k};Y{k}|X{k})"
        )
        for k in roles.others
    ]
    return _collect("thm1", values, cons)


def eval_thm2(dn: DiscreteNetwork, fd: FactoredDistribution) -> BoundResult:
    """Relays combine compress-forward with decoding a common message part
    carried by U_r; receivers only compress."""
    t = _prepare(dn, fd, "thm2")
    roles = dn.roles
    n, R = roles.n, roles.relays
    allx = _xs(range(1, n + 1))
    allu = _us(roles.others)
    df = _min_or_zero(t.I([U(r)], [Y(r)], [X(r)]) for r in sorted(R))
    values = []
    for d in sorted(roles.receivers):
        for cut in enumerate_cuts(roles):
            T, Tc = cut
            TR, TcD = T | R, Tc & roles.receivers
            a = (
                t.I([X(1)] + _xs(T) + _us(T), _yhs(Tc) + [Y(d)], _xs(Tc) + _us(Tc))
                - t.I(_yhs(T), _ys(T), allu + allx + _yhs(Tc) + [Y(d)])
                + df
            )
            b = t.I([X(1)] + _xs(TR) + _us(R), _yhs(TcD) + [Y(d)], _xs(TcD)) - t.I(
                _yhs(TR), _ys(TR), allu + allx + _yhs(TcD) + [Y(d)]
            )
            values += [CutValue(d, cut, "a", a), CutValue(d, cut, "b", b)]
    cons = []
    for k in roles.others:
        if k in R:
            need, term = t.I([Yh(k)], [Y(k)], [X(k), U(k)]), f"I(Yh{k};Y{k}|X{k},U{k})"
        else:
            need, term = t.I([Yh(k)], [Y(k)], [X(k)]), f"I(Yh{k};Y{k}|X{k})"
        cons.append(_feedback_constraint(roles, k, need, term))
    return _collect("thm2", values, cons)


def eval_thm3(dn: DiscreteNetwork, fd: FactoredDistribution) -> BoundResult:
    """Relays decode different message parts: a common layer (V0, U0)
    decoded by all relays plus a private layer U_r per relay.

    The first inequality is read as a conditional mutual information
    I(X1, X(T), U(T); Yh(T^c), Y_d | V0, U0, X(T^c), U(T^c)); the leading
    "I" is missing from the printed statement.
    """
    t = _prepare(dn, fd, "thm3")
    roles = dn.roles
    n, R = roles.n, roles.relays
    allx = _xs(range(1, n + 1))
    allu = _us(roles.others)
    common = ["V0", "U0"]
    m0 = _min_or_zero(t.I(["U0"], [Y(r)], ["V0", X(r)]) for r in sorted(R))
    private = {r: t.I([U(r)], [Y(r)], ["U0", "V0", X(r)]) for r in R}
    values = []
    for d in sorted(roles.receivers):
        for cut in enumerate_cuts(roles):
            T, Tc = cut
            TR, TcD = T | R, Tc & roles.receivers
            a = (
                t.I(
                    [X(1)] + _xs(T) + _us(T),
                    _yhs(Tc) + [Y(d)],
                    common + _xs(Tc) + _us(Tc),
                )
                + sum(private[r] for r in sorted(Tc & R))
                + m0
                - t.I(_yhs(T), _ys(T), common + allu + allx + _yhs(Tc) + [Y(d)])
            )
            b = t.I(
                common + [X(1)] + _xs(TR) + _us(R), _yhs(TcD) + [Y(d)], _xs(TcD)
            ) - t.I(_yhs(TR), _ys(TR), common + allu + allx + _yhs(TcD) + [Y(d)])
            values += [CutValue(d, cut, "a", a), CutValue(d, cut, "b", b)]
    cons = []
    for k in roles.others:
        if k in R:
            need = t.I([Yh(k)], [Y(k)], ["V0", "U0", X(k), U(k)])
            term = f"I(Yh{k};Y{k}|V0,U0,X{k},U{k})"
        else:
            need, term = t.I([Yh(k)], [Y(k)], [X(k)]), f"I(Yh{k};Y{k}|X{k})"
        cons.append(_feedback_constraint(roles, k, need, term))
    return _collect("thm3", values, cons)


def eval_thm4(
    dn: DiscreteNetwork,
    fd: FactoredDistribution,
    decode_set: Iterable[int] | None = None,
    *,
    relay_decode_from_compressed: bool = False,
) -> BoundResult:
    """No feedback: the transmitter decodes the compression indices of the
    nodes in ``decode_set`` (default all of [2:N]) from its own output Y1.

    The decode-forward credit of relay r is I(U_r; Y_r | X_r, V_r), the form
    that reproduces the single-relay Gaussian specialization; pass
    ``relay_decode_from_compressed=True`` for the I(U_r; Yh_r | X_r, V_r)
    reading. In the second inequality the V variables conditioned on are
    those of T^c intersected with D.
    """
    roles = dn.roles
    A = frozenset(roles.others if decode_set is None else decode_set)
    if not A <= set(roles.others):
        raise NetworkError(f"decode set {sorted(A)} not within [2:{roles.n}]")
    t = _prepare(dn, fd, "thm4", decode_set=A)
    n, R, D = roles.n, roles.relays, roles.receivers
    allx = _xs(range(1, n + 1))
    allu, allv = _us(roles.others), _vs(roles.others)
    src = Yh if relay_decode_from_compressed else Y
    df = _min_or_zero(t.I([U(r)], [src(r)], [X(r), V(r)]) for r in sorted(R))
    cuts = enumerate_cuts(roles)
    values = []
    for d in sorted(D):
        for cut in cuts:
            T, Tc = cut
            TR, TcD = T | R, Tc & D
            a = (
                t.I(
                    [X(1)] + _xs(T) + _us(T) + _vs(T),
                    _yhs(Tc) + [Y(d)],
                    _us(Tc) + _vs(Tc) + _xs(Tc),
                )
                - t.I(_yhs(T), _ys(T), allu + allv + allx + _yhs(Tc) + [Y(d)])
                + df
            )
            b = t.I(
                [X(1)] + _vs(TR) + _us(R) + _xs(TR),
                _yhs(TcD) + [Y(d)],
                _vs(TcD) + _xs(TcD),
            ) - t.I(_yhs(TR), _ys(TR), allv + allx + allu + _yhs(TcD) + [Y(d)])
            values += [CutValue(d, cut, "a", a), CutValue(d, cut, "b", b)]
    cons = []
    seen = set()
    for cut in cuts:
        TA = cut.T & A
        if TA in seen:
            continue
        seen.add(TA)
        cons.append(decoding_constraint(t, roles, TA, A))
    return _collect("thm4", values, cons, decode_set=sorted(A))


def decoding_constraint(t: _Terms | JointPmf, roles, TA, A) -> Constraint:
    """Transmitter decoding of the compression indices of T_A from Y1:
    total compression cost must not exceed I(X(T_A); Y1 | U(A), V(A),
    X(A minus T_A), X1)."""
    if isinstance(t, JointPmf):
        t = _Terms(t)
    TA, A = frozenset(TA), frozenset(A)
    cost = sum(
        t.I([Yh(k)], [Y(k)], [U(k), V(k), X(k)])
        if k in roles.relays
        else t.I([Yh(k)], [Y(k)], [V(k), X(k)])
        for k in sorted(TA)
    )
    cap = t.I(_xs(TA), [Y(1)], _us(A) + _vs(A) + _xs(A - TA) + [X(1)])
    slack = cap - cost
    label = "decode T_A={" + ",".join(map(str, sorted(TA))) + "}"
    return Constraint(label, slack >= -SLACK_TOL, slack)


# -- distributed decode-forward -----------------------------------------------


def _ddf_values(t: _Terms, roles, order: Sequence[int]) -> list[CutValue]:
    n = roles.n
    allx = _xs(range(1, n + 1))
    pos = {k: i for i, k in enumerate(order)}
    values = []
    for d in sorted(roles.receivers):
        for cut in enumerate_cuts(roles):
            T, Tc = cut
            S = {1} | T
            v = t.I(_xs(S), _us(Tc) + [Y(d)], _xs(Tc))
            for k in sorted(Tc):
                earlier = [j for j in Tc if pos[j] < pos[k]]
                v -= t.I([U(k)], _us(earlier) + allx, [X(k), Y(k)])
            values.append(CutValue(d, cut, "", v))
    return values


def eval_ddf(
    dn: DiscreteNetwork,
    fd: FactoredDistribution,
    ordering: Sequence[int] | None = None,
    *,
    all_orderings: bool = False,
) -> BoundResult:
    """Distributed decode-forward. ``ordering`` is the node order used for
    the backward-encoding chain (default 2..N); ``all_orderings`` takes the
    best over every permutation (N <= 5)."""
    t = _prepare(dn, fd, "ddf")
    roles = dn.roles
    if all_orderings:
        if roles.n > MAX_DDF_ORDER_N:
            raise NetworkError(f"ordering search capped at N <= {MAX_DDF_ORDER_N}")
        best = None
        for order in permutations(roles.others):
            res = _collect("ddf", _ddf_values(t, roles, order), [], ordering=list(order))
            if best is None or res.rate > best.rate:
                best = res
        return best
    order = tuple(roles.others if ordering is None else ordering)
    if sorted(order) != list(roles.others):
        raise NetworkError(f"ordering {order} is not a permutation of [2:{roles.n}]")
    return _collect("ddf", _ddf_values(t, roles, order), [], ordering=list(order))


# -- small-network specializations --------------------------------------------


def _require_roles(dn, n, relays, what):
    roles = dn.roles
    if roles.n != n or roles.relays != frozenset(relays):
        raise NetworkError(f"{what} needs N={n} with relays {sorted(relays)}")


def _require_degenerate(fd, names, what):
    for name in names:
        if not _is_degenerate(fd, name):
            raise NetworkError(f"{what} requires {name} to be constant")


def _require_input_degenerate(dn, k, what):
    if dn.input_sizes[k - 1] != 1:
        raise NetworkError(f"{what} requires node {k} to have no input (|X{k}| = 1)")


def eval_relay_cf_fb(dn: DiscreteNetwork, fd: FactoredDistribution) -> BoundResult:
    """Single relay with relay-to-transmitter feedback, relay compresses:
    R <= I(X1; Yh2, Y3 | X2) and R <= I(X1, X2; Y3) - I(Yh2; Y2 | X1, X2, Y3)."""
    what = "relay compress-forward bound"
    _require_roles(dn, 3, {2}, what)
    _require_input_degenerate(dn, 3, what)
    _require_degenerate(fd, ["Yh3"], what)
    t = _prepare(dn, fd, "thm1")
    c1 = t.I(["X1"], ["Yh2", "Y3"], ["X2"])
    c2 = t.I(["X1", "X2"], ["Y3"]) - t.I(["Yh2"], ["Y2"], ["X1", "X2", "Y3"])
    cons = [
        _feedback_constraint(dn.roles, 2, t.I(["Yh2"], ["Y2"], ["X2"]), "I(Yh2;Y2|X2)")
    ]
    return _collect(
        "relay-cf-fb", [CutValue(3, None, "1", c1), CutValue(3, None, "2", c2)], cons
    )


def eval_relay_cfdf_fb(dn: DiscreteNetwork, fd: FactoredDistribution) -> BoundResult:
    """Single relay with feedback, relay compresses and partially decodes:
    R <= I(X1; Yh2, Y3 | U2, X2) + I(U2; Y2 | X2),
    R <= I(X1, X2; Y3) - I(Yh2; Y2 | U2, X1, X2, Y3)."""
    what = "relay compress/decode-forward bound"
    _require_roles(dn, 3, {2}, what)
    _require_input_degenerate(dn, 3, what)
    _require_degenerate(fd, ["Yh3", "U3"], what)
    t = _prepare(dn, fd, "thm2")
    c1 = t.I(["X1"], ["Yh2", "Y3"], ["U2", "X2"]) + t.I(["U2"], ["Y2"], ["X2"])
    c2 = t.I(["X1", "X2"], ["Y3"]) - t.I(["Yh2"], ["Y2"], ["U2", "X1", "X2", "Y3"])
    cons = [
        _feedback_constraint(
            dn.roles, 2, t.I(["Yh2"], ["Y2"], ["X2", "U2"]), "I(Yh2;Y2|X2,U2)"
        )
    ]
    return _collect(
        "relay-cfdf-fb", [CutValue(3, None, "1", c1), CutValue(3, None, "2", c2)], cons
    )


def is_diamond(dn: DiscreteNetwork, atol: float = 1e-12) -> bool:
    """True if P(y2,y3,y4 | x) = P(y2,y3 | x1) P(y4 | x2,x3) and X4 is absent."""
    if dn.n != 4 or dn.input_sizes[3] != 1:
        return False
    ch = dn.channel.sum(axis=(3, 4))  # sum out x4 (size 1) and y1
    ch = ch.reshape(dn.input_sizes[:3] + dn.output_sizes[1:])
    p23 = ch.sum(axis=5)  # (x1,x2,x3,y2,y3)
    p4 = ch.sum(axis=(3, 4))  # (x1,x2,x3,y4)
    if not np.allclose(p23, p23[:, :1, :1], atol=atol):
        return False
    if not np.allclose(p4, p4[:1], atol=atol):
        return False
    return np.allclose(ch, p23[..., None] * p4[:, :, :, None, None, :], atol=atol)


def _diamond_checks(dn, fd, what):
    _require_roles(dn, 4, {2, 3}, what)
    if not is_diamond(dn):
        raise NetworkError(f"{what} needs a diamond channel P(y2,y3|x1) P(y4|x2,x3)")
    _require_degenerate(fd, ["Yh4", "U4"], what)


def eval_diamond_fb(dn: DiscreteNetwork, fd: FactoredDistribution) -> BoundResult:
    """Four-node diamond with relay-to-transmitter feedback: five
    inequalities, one per cut of the relay pair plus the sum constraint."""
    what = "diamond feedback bound"
    _diamond_checks(dn, fd, what)
    t = _prepare(dn, fd, "thm3")
    c = ["V0", "U0"]
    xs = ["X1", "X2", "X3"]
    m0 = min(t.I(["U0"], [Y(r)], ["V0", X(r)]) for r in (2, 3))
    p2 = t.I(["U2"], ["Y2"], c + ["X2"])
    p3 = t.I(["U3"], ["Y3"], c + ["X3"])
    both = t.I(["Yh2", "Yh3"], ["Y2", "Y3"], c + ["U2", "U3"] + xs + ["Y4"])
    vals = {
        "a": t.I(xs, ["Y4"]) - both,
        "b": t.I(["X1", "X2", "U2"], ["Yh3", "Y4"], c + ["X3", "U3"])
        + p3
        + m0
        - t.I(["Yh2"], ["Y2"], c + ["U2", "U3"] + xs + ["Yh3", "Y4"]),
        "c": t.I(["X1", "X3", "U3"], ["Yh2", "Y4"], c + ["X2", "U2"])
        + p2
        + m0
        - t.I(["Yh3"], ["Y3"], c + ["U2", "U3"] + xs + ["Yh2", "Y4"]),
        "d": t.I(xs + ["U2", "U3"], ["Y4"], c) + m0 - both,
        "e": t.I(["X1"], ["Yh2", "Yh3", "Y4"], c + ["X2", "X3", "U2", "U3"]) + p2 + p3 + m0,
    }
    cons = [
        _feedback_constraint(
            dn.roles,
            r,
            t.I([Yh(r)], [Y(r)], c + [X(r), U(r)]),
            f"I(Yh{r};Y{r}|V0,U0,X{r},U{r})",
        )
        for r in (2, 3)
    ]
    return _collect(
        "diamond-fb", [CutValue(4, None, k, v) for k, v in vals.items()], cons
    )


def eval_diamond_nofb(dn: DiscreteNetwork, fd: FactoredDistribution) -> BoundResult:
    """Four-node diamond without feedback: both relays partially decode
    different message parts, nobody compresses."""
    what = "diamond no-feedback bound"
    _diamond_checks(dn, fd, what)
    _require_degenerate(fd, ["Yh2", "Yh3"], what)
    t = _prepare(dn, fd, "thm3")
    c = ["V0", "U0"]
    xs = ["X1", "X2", "X3"]
    m0 = min(t.I(["U0"], [Y(r)], ["V0", X(r)]) for r in (2, 3))
    p2 = t.I(["U2"], ["Y2"], c + ["X2"])
    p3 = t.I(["U3"], ["Y3"], c + ["X3"])
    vals = {
        "a": t.I(xs, ["Y4"]),
        "b": m0 + p3 + t.I(["X1", "X2", "U2"], ["Y4"], c + ["X3", "U3"]),
        "c": m0 + p2 + t.I(["X1", "X3", "U3"], ["Y4"], c + ["X2", "U2"]),
        "d": m0 + t.I(xs + ["U2", "U3"], ["Y4"], c),
        "e": m0 + p2 + p3 + t.I(["X1"], ["Y4"], c + ["X2", "X3", "U2", "U3"]),
    }
    return _collect(
        "diamond-nofb", [CutValue(4, None, k, v) for k, v in vals.items()], []
    )


EVALUATORS = {
    "thm1": eval_thm1,
    "thm2": eval_thm2,
    "thm3": eval_thm3,
    "thm4": eval_thm4,
    "nnc": eval_nnc,
    "ddf": eval_ddf,
    "diamond-fb": eval_diamond_fb,
    "diamond-nofb": eval_diamond_nofb,
    "relay-cf-fb": eval_relay_cf_fb,
    "relay-cfdf-fb": eval_relay_cfdf_fb,
}
