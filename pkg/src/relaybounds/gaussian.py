"""Closed-form achievable rates for the enhanced Gaussian relay channel

    Y1 = g21 X2 + Z1,  Y2 = g12 X1 + Z2,  Y3 = g13 X1 + g23 X2 + Z3

with unit-variance noises, evaluated under the layered Gaussian input
family V2 -> (U2, X2), U2 -> X1, Yh2 = Y2 + Z' parameterized by
(alpha, beta, gamma, N'): alpha is the fresh-power share of X1, beta the
share of the remaining X1 power carried by U2 beyond the coherent part,
gamma the fresh-power share of X2, N' the compression noise variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .info import gauss_c
from .network import GaussianRelayParams
from .optimize import SearchConfig, SearchResult, maximize

N_PRIME_RANGE = (1e-4, 1e4)
CE_FORMS = ("derived", "printed")


def _C(x):
    return 0.5 * np.log2(1.0 + x)


@dataclass(frozen=True)
class ChongParams:
    alpha: float
    beta: float
    gamma: float
    n_prime: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not self.n_prime > 0:
            raise ValueError("n_prime must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.n_prime])


@dataclass
class GaussianRate:
    rate: float
    params: dict = field(default_factory=dict)
    search: SearchResult | None = field(default=None, repr=False)

    def __float__(self):
        return float(self.rate)


# -- pointwise expressions ----------------------------------------------------


def chong_terms(ch: GaussianRelayParams, p: ChongParams) -> dict[str, float]:
    """The six mutual-information terms of the layered Gaussian family."""
    a, b, g, N = p.alpha, p.beta, p.gamma, p.n_prime
    s12, s13, s23, s21 = ch.s12, ch.s13, ch.s23, ch.s21
    return {
        "I(X1;Yh2,Y3|X2,V2,U2)": gauss_c(a * s13 + a * s12 / (1 + N)),
        "I(U2;Y2|V2,X2)": gauss_c(s12 * b * (1 - a) / (a * s12 + 1)),
        "I(X1,X2;Y3)": gauss_c(2 * math.sqrt((1 - a) * (1 - b) * (1 - g) * s13 * s23) + s13 + s23),
        "I(Yh2;Y2|U2,V2,X1,X2,Y3)": gauss_c(1 / N),
        "I(Yh2;Y2|U2,V2,X2)": gauss_c((1 + a * s12) / N),
        "I(X2;Y1|U2,X1,V2)": gauss_c(g * s21),
    }


def _pro(s12, s13, s23, a, b, g, N):
    """Vectorized objective; N may be inf (no compression)."""
    coh = np.sqrt(np.clip((1 - a) * (1 - b) * (1 - g), 0.0, None) * s13 * s23)
    with np.errstate(divide="ignore"):
        inv = np.where(np.isinf(N), 0.0, 1.0 / N)
    first = _C(a * s13 + a * s12 * inv / (1 + inv)) + _C(s12 * b * (1 - a) / (a * s12 + 1))
    second = _C(2 * coh + s13 + s23) - _C(inv)
    return np.minimum(first, second)


def balanced_noise(s12, s13, s23, a, b, g):
    """N' where the two branches of the objective meet (vectorized).

    With x = 1/(1+N') the crossing condition is linear in x. Gives inf
    when the decode-forward branch never catches up (no compression is
    best) and 0 when compression should be as fine as possible.
    """
    a, b, g = (np.asarray(v, dtype=float) for v in (a, b, g))
    M = 1 + s12 * b * (1 - a) / (a * s12 + 1)
    Q = 2 * np.sqrt(np.clip((1 - a) * (1 - b) * (1 - g), 0.0, None) * s13 * s23) + s13 + s23
    den = a * s12 * M + (1 + Q)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(den > 0, ((1 + Q) - (1 + a * s13) * M) / den, 0.0)
        N = np.where(x <= 0, np.inf, np.where(x >= 1, 0.0, 1 / x - 1))
    return N


def pro_objective(ch: GaussianRelayParams, p: ChongParams) -> float:
    """min{ C(a s13 + a s12/(1+N')) + C(s12 b(1-a)/(a s12+1)),
            C(2 sqrt((1-a)(1-b)(1-g) s13 s23) + s13 + s23) - C(1/N') }"""
    return float(_pro(ch.s12, ch.s13, ch.s23, p.alpha, p.beta, p.gamma, p.n_prime))


def pro2_threshold(ch: GaussianRelayParams, alpha, gamma):
    """Smallest N' for which the transmitter can decode the relay's
    compression index from Y1."""
    num = 1 + np.asarray(alpha) * ch.s12
    den = np.asarray(gamma) * ch.s21
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)


def ce_threshold(ch: GaussianRelayParams, alpha, beta, gamma, form: str = "derived"):
    """Smallest N' allowed by the Cover-El Gamal compression constraint.

    ``form="derived"`` is I(Yh2;Y2|U2,X2,Y3) <= I(X2;Y3|V2) worked out for
    this input family:

        (a(s13+s12)+1) ((b-ab+a) s13+1) / (g s23 (a s13+1))

    ``form="printed"`` has s23 in place of s12 in the first factor, as the
    expression is usually quoted; it disagrees with the covariance
    computation and is kept for comparison only.
    """
    if form not in CE_FORMS:
        raise ValueError(f"form must be one of {CE_FORMS}")
    a, b, g = (np.asarray(v, dtype=float) for v in (alpha, beta, gamma))
    lead = ch.s12 if form == "derived" else ch.s23
    num = (a * (ch.s13 + lead) + 1) * ((b - a * b + a) * ch.s13 + 1)
    den = g * ch.s23 * (a * ch.s13 + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)


def pro2_feasible(ch: GaussianRelayParams, p: ChongParams) -> tuple[bool, float]:
    """(N' gamma s21 >= 1 + alpha s12, N' - threshold)."""
    thr = float(pro2_threshold(ch, p.alpha, p.gamma))
    ok = p.n_prime * p.gamma * ch.s21 >= 1 + p.alpha * ch.s12 and math.isfinite(thr)
    return bool(ok), p.n_prime - thr


def ce_feasible(ch: GaussianRelayParams, p: ChongParams, form: str = "derived") -> tuple[bool, float]:
    thr = float(ce_threshold(ch, p.alpha, p.beta, p.gamma, form))
    return bool(math.isfinite(thr) and p.n_prime >= thr), p.n_prime - thr


# -- maximizations --------------------------------------------------------------


def default_config(**kw) -> SearchConfig:
    """Search box over (alpha, sqrt(1-beta), sqrt(1-gamma), N').

    The coherent-combining term depends on sqrt((1-beta)(1-gamma)), so the
    optima sit on ridges with beta close to 1; a uniform grid over the
    amplitudes sqrt(1-beta), sqrt(1-gamma) resolves them where a uniform
    grid over beta, gamma does not. N' is searched on a log scale.
    """
    cfg = SearchConfig(
        bounds=((0.0, 1.0), (0.0, 1.0), (0.0, 1.0), N_PRIME_RANGE),
        log_scale=(False, False, False, True),
    )
    return cfg.replace(**kw) if kw else cfg


def _abg(P):
    """Search coordinates to (alpha, beta, gamma)."""
    return P[:, 0], 1.0 - P[:, 1] ** 2, 1.0 - P[:, 2] ** 2


def _params(point, n_prime) -> dict:
    a, b, g = _abg(np.asarray(point, dtype=float)[None, :3])
    return dict(alpha=float(a[0]), beta=float(b[0]), gamma=float(g[0]), n_prime=float(n_prime))


def _no_compression(ch, cfg: SearchConfig) -> SearchResult:
    """Best rate with Yh2 constant (N' -> inf): pure partial decode-forward,
    feasible under every compression constraint."""
    cfg3 = cfg.replace(bounds=cfg.bounds[:3], log_scale=cfg.log_scale[:3])

    def f(P):
        return _pro(ch.s12, ch.s13, ch.s23, *_abg(P), np.inf)

    return maximize(f, None, cfg3, vectorized=True)


def _constrained(ch, cfg, threshold) -> GaussianRate:
    lo, hi = cfg.bounds[3]

    def f(P):
        return _pro(ch.s12, ch.s13, ch.s23, *_abg(P), P[:, 3])

    def feas(P):
        return P[:, 3] >= threshold(*_abg(P))

    def project(P):
        # for fixed (a, b, g) the best N' is the branch crossing, pushed up
        # to the constraint boundary when the crossing is infeasible
        a, b, g = _abg(P)
        t = balanced_noise(ch.s12, ch.s13, ch.s23, a, b, g)
        if threshold is not None:
            t = np.maximum(t, threshold(a, b, g))
        out = P.copy()
        # the nudge keeps boundary points feasible through the optimizer's
        # log-scale round trip
        out[:, 3] = np.clip(t * (1 + 1e-12), lo, hi)
        out[~np.isfinite(t)] = np.nan
        return out

    res = maximize(f, None if threshold is None else feas, cfg, vectorized=True, project=project)
    flat = _no_compression(ch, cfg)
    if res.empty or flat.value > res.value:
        return GaussianRate(flat.value, _params(flat.point, math.inf), flat)
    return GaussianRate(res.value, _params(res.point, res.point[3]), res)


def eval_pro2(ch: GaussianRelayParams, cfg: SearchConfig | None = None) -> GaussianRate:
    """No feedback: the transmitter decodes the compression index from Y1,
    so N' is bounded below by the decoding threshold."""
    cfg = cfg or default_config()
    return _constrained(ch, cfg, lambda a, b, g: pro2_threshold(ch, a, g))


def eval_ce(ch: GaussianRelayParams, cfg: SearchConfig | None = None, form: str = "derived") -> GaussianRate:
    """Cover-El Gamal combined compress/decode-forward in the same family."""
    cfg = cfg or default_config()
    out = _constrained(ch, cfg, lambda a, b, g: ce_threshold(ch, a, b, g, form))
    out.params["form"] = form
    return out


def eval_pro1(ch: GaussianRelayParams, cfg: SearchConfig | None = None) -> GaussianRate:
    """Relay-to-transmitter feedback: no lower bound on N'. The feedback
    rate the optimum needs, I(Yh2;Y2|X2,U2) = C((1+a s12)/N'), is reported
    in ``params['required_feedback']``."""
    cfg = cfg or default_config()
    out = _constrained(ch, cfg, None)
    N = out.params["n_prime"]
    out.params["required_feedback"] = (
        0.0 if math.isinf(N) else gauss_c((1 + out.params["alpha"] * ch.s12) / N)
    )
    return out


def eval_nnc_gauss(ch: GaussianRelayParams) -> float:
    """Compress-forward with independent Gaussian inputs and the best
    compression noise: C(s13 + s12 s23 / (s13 + s12 + s23 + 1))."""
    s12, s13, s23 = ch.s12, ch.s13, ch.s23
    return gauss_c(s13 + s12 * s23 / (s13 + s12 + s23 + 1))


def nnc_optimal_noise(ch: GaussianRelayParams) -> float:
    """Compression noise variance at which both compress-forward
    constraints meet."""
    return (1 + ch.s12 + ch.s13) / ch.s23 if ch.s23 > 0 else math.inf


def ddf_objective(ch: GaussianRelayParams, rho):
    rho = np.asarray(rho, dtype=float)
    s12, s13, s23 = ch.s12, ch.s13, ch.s23
    return np.minimum(
        _C(s13 + s23 + 2 * rho * math.sqrt(s13 * s23)), _C(s12 * (1 - rho**2))
    )


def eval_ddf_gauss(ch: GaussianRelayParams, cfg: SearchConfig | None = None) -> GaussianRate:
    """Decode-forward with source-relay correlation rho, maximized over
    rho in [0, 1]."""
    cfg = cfg or SearchConfig(bounds=((0.0, 1.0),), grid_points=201, refine_iters=200)
    res = maximize(lambda P: ddf_objective(ch, P[:, 0]), None, cfg, vectorized=True)
    return GaussianRate(res.value, {"rho": float(res.point[0])}, res)


def af_objective(ch: GaussianRelayParams, alpha, leading_half: bool = True):
    """Amplify-forward rate at power split alpha in (0, 1].

    Implemented as quoted: 1/2 C(2 a P (1 + (sqrt((1-a)/a) + g12 g23 k)^2
    / (1 + g23^2 k^2))) with k = sqrt(2 P2 / (2 a s13^2 + 1)) and P = P1.
    ``leading_half=False`` drops the leading 1/2, giving the usual C(.)
    reading for sensitivity checks; it is not the quoted formula.
    """
    a = np.asarray(alpha, dtype=float)
    k = np.sqrt(2 * ch.P2 / (2 * a * ch.s13**2 + 1))
    # a (sqrt((1-a)/a) + c)^2 rewritten to stay finite as a -> 0
    coh = (np.sqrt(1 - a) + ch.g12 * ch.g23 * k * np.sqrt(a)) ** 2
    snr = 2 * ch.P1 * (a + coh / (1 + ch.g23**2 * k**2))
    r = _C(snr)
    return 0.5 * r if leading_half else r


def eval_af_gauss(
    ch: GaussianRelayParams, cfg: SearchConfig | None = None, leading_half: bool = True
) -> GaussianRate:
    cfg = cfg or SearchConfig(bounds=((1e-9, 1.0),), grid_points=2001, refine_iters=200)
    res = maximize(lambda P: af_objective(ch, P[:, 0], leading_half), None, cfg, vectorized=True)
    return GaussianRate(res.value, {"alpha": float(res.point[0]), "leading_half": leading_half}, res)


def check_condition_enh(
    ch: GaussianRelayParams, resolution: int = 101, form: str = "derived"
) -> tuple[bool, float]:
    """Whether the decoding threshold for the no-feedback scheme lies below
    the Cover-El Gamal threshold for every (alpha, beta), checked on a
    uniform grid that includes the corners. Returns (holds, min margin).

    The comparison does not depend on gamma. ``form`` picks the CE
    threshold variant, as in :func:`ce_threshold`.
    """
    if form not in CE_FORMS:
        raise ValueError(f"form must be one of {CE_FORMS}")
    g = np.linspace(0.0, 1.0, max(int(resolution), 2))
    a, b = np.meshgrid(g, g, indexing="ij")
    s12, s13, s23, s21 = ch.s12, ch.s13, ch.s23, ch.s21
    lead = s12 if form == "derived" else s23
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = (1 + a * s12) / (s21 * (a * (s13 + lead) + 1))
        rhs = ((b - a * b + a) * s13 + 1) / (s23 * (a * s13 + 1))
        lhs = np.where(np.isnan(lhs), np.inf, lhs)
        rhs = np.where(np.isnan(rhs), -np.inf, rhs)
        # inf - inf (no SNR anywhere) counts as a violation
        margin = rhs - lhs
    margin = np.where(np.isnan(margin), -np.inf, margin)
    m = float(margin.min())
    return bool(m > 0), m


# Published Table I values, rates in bits per channel use.
TABLE1_D = (0.73, 0.74, 0.75, 0.76)
TABLE1_REFERENCE = {
    "R_NNC": (1.6908, 1.6971, 1.7033, 1.7094),
    "R_DDF": (1.6881, 1.6703, 1.6529, 1.6358),
    "R_CE": (1.6927, 1.6971, 1.7033, 1.7094),
    "R_Pro1": (1.7069, 1.7111, 1.7153, 1.7195),
    "R_Pro2": (1.6996, 1.7032, 1.7077, 1.7129),
}
TABLE1_TOLERANCE = {
    "R_NNC": 1e-4,
    "R_DDF": 1e-3,
    "R_CE": 3e-3,
    "R_Pro1": 5e-3,
    "R_Pro2": 3e-3,
}


def table1_row(d: float, cfg: SearchConfig | None = None) -> dict[str, float]:
    ch = GaussianRelayParams.table1(d)
    return {
        "d": d,
        "R_NNC": eval_nnc_gauss(ch),
        "R_DDF": eval_ddf_gauss(ch).rate,
        "R_CE": eval_ce(ch, cfg).rate,
        "R_Pro1": eval_pro1(ch, cfg).rate,
        "R_Pro2": eval_pro2(ch, cfg).rate,
    }
