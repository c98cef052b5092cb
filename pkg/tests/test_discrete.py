import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import netgen as ng
import oracle
from relaybounds import netfile
from relaybounds.discrete import (
    EVALUATORS,
    decoding_constraint,
    eval_ddf,
    eval_diamond_fb,
    eval_diamond_nofb,
    eval_nnc,
    eval_relay_cf_fb,
    eval_relay_cfdf_fb,
    eval_thm1,
    eval_thm2,
    eval_thm3,
    eval_thm4,
    is_diamond,
)
from relaybounds.network import FactorizationError, NetworkError, build_joint, enumerate_cuts

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

seeds = st.integers(0, 2**32 - 1)
# (n, relays) pairs small enough for the symbol-by-symbol oracle
shapes = st.sampled_from([(3, ()), (3, (2,)), (4, ()), (4, (2,)), (4, (2, 3))])


def _setup(seed, shape, make, **kw):
    rng = np.random.default_rng(seed)
    n, relays = shape
    dn = ng.rand_network(rng, n, relays)
    fd = make(rng, dn, **kw)
    return dn, fd, oracle.joint(dn, fd)


# -- every evaluator against the restated oracle ---------------------------------------


@settings(max_examples=12, deadline=None)
@given(seeds, shapes)
def test_nnc_matches_oracle(seed, shape):
    dn, fd, p = _setup(seed, shape, ng.thm1_fd, product_x1=True)
    assert abs(eval_nnc(dn, fd).rate - oracle.nnc(p, *shape)) < 1e-10


@settings(max_examples=12, deadline=None)
@given(seeds, shapes)
def test_thm1_matches_oracle(seed, shape):
    dn, fd, p = _setup(seed, shape, ng.thm1_fd)
    assert abs(eval_thm1(dn, fd).rate - oracle.nnc(p, *shape)) < 1e-10


@settings(max_examples=12, deadline=None)
@given(seeds, shapes)
def test_thm2_matches_oracle(seed, shape):
    dn, fd, p = _setup(seed, shape, ng.thm2_fd)
    assert abs(eval_thm2(dn, fd).rate - oracle.thm2(p, *shape)) < 1e-10


@settings(max_examples=8, deadline=None)
@given(seeds, shapes)
def test_thm3_matches_oracle(seed, shape):
    dn, fd, p = _setup(seed, shape, ng.thm3_fd)
    assert abs(eval_thm3(dn, fd).rate - oracle.thm3(p, *shape)) < 1e-10


@settings(max_examples=8, deadline=None)
@given(seeds, shapes)
def test_thm4_matches_oracle(seed, shape):
    dn, fd, p = _setup(seed, shape, ng.thm4_fd)
    res = eval_thm4(dn, fd)
    assert abs(res.rate - oracle.thm4(p, *shape)) < 1e-10
    A = set(dn.roles.others)
    for c in res.feasibility:
        TA = {int(s) for s in c.label.split("{")[1].rstrip("}").split(",") if s}
        assert abs(c.slack - oracle.thm4_decode_slack(p, set(shape[1]), TA, A)) < 1e-10


@settings(max_examples=12, deadline=None)
@given(seeds, shapes, st.data())
def test_ddf_matches_oracle(seed, shape, data):
    dn, fd, p = _setup(seed, shape, ng.ddf_fd)
    order = data.draw(st.permutations(list(range(2, shape[0] + 1))))
    assert abs(eval_ddf(dn, fd).rate - oracle.ddf(p, *shape)) < 1e-10
    assert abs(eval_ddf(dn, fd, order).rate - oracle.ddf(p, *shape, order)) < 1e-10


def test_ddf_best_ordering():
    rng = np.random.default_rng(21)
    dn = ng.rand_network(rng, 4, {2})
    fd = ng.ddf_fd(rng, dn)
    p = oracle.joint(dn, fd)
    best = eval_ddf(dn, fd, all_orderings=True)
    ref = max(oracle.ddf(p, 4, {2}, o) for o in ([2, 3, 4], [2, 4, 3], [3, 2, 4], [3, 4, 2], [4, 2, 3], [4, 3, 2]))
    assert abs(best.rate - ref) < 1e-10
    assert best.rate >= eval_ddf(dn, fd).rate - 1e-12
    with pytest.raises(NetworkError):
        eval_ddf(dn, fd, [2, 3])


# -- reductions between the bounds -----------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(seeds, shapes)
def test_thm2_without_decoding_is_thm1(seed, shape):
    rng = np.random.default_rng(seed)
    dn = ng.rand_network(rng, *shape)
    fd = ng.degenerate(ng.thm2_fd(rng, dn), *[f"U{r}" for r in shape[1]])
    assert abs(eval_thm2(dn, fd).rate - eval_thm1(dn, fd).rate) < 1e-12


@settings(max_examples=15, deadline=None)
@given(seeds, shapes)
def test_thm1_with_independent_inputs_is_nnc(seed, shape):
    rng = np.random.default_rng(seed)
    dn = ng.rand_network(rng, *shape)
    fd = ng.thm1_fd(rng, dn, product_x1=True)
    assert abs(eval_thm1(dn, fd).rate - eval_nnc(dn, fd).rate) < 1e-12


@settings(max_examples=15, deadline=None)
@given(seeds, shapes)
def test_thm3_without_common_layer_dominates_thm2(seed, shape):
    rng = np.random.default_rng(seed)
    dn = ng.rand_network(rng, *shape)
    fd = ng.thm3_fd(rng, dn, v0=1, u0=1)
    r3, r2 = eval_thm3(dn, fd).rate, eval_thm2(dn, fd).rate
    assert r3 >= r2 - 1e-12
    if len(shape[1]) <= 1:
        assert abs(r3 - r2) < 1e-12


@settings(max_examples=15, deadline=None)
@given(seeds, shapes)
def test_thm4_without_decoding_is_nnc(seed, shape):
    rng = np.random.default_rng(seed)
    dn = ng.rand_network(rng, *shape)
    names = [f"V{k}" for k in dn.roles.others] + [f"U{r}" for r in shape[1]]
    fd = ng.degenerate(ng.thm4_fd(rng, dn, decode_set=set()), *names)
    res = eval_thm4(dn, fd, decode_set=set())
    assert abs(res.rate - eval_nnc(dn, fd).rate) < 1e-12
    assert res.feasible


def test_constant_compressions_leave_cut_expression():
    rng = np.random.default_rng(4)
    dn = ng.relay_network(rng)
    fd = ng.degenerate(ng.thm1_fd(rng, dn), "Yh2", "Yh3")
    p = oracle.joint(dn, fd)
    ref = min(p.I(["X1"], ["Y3"], ["X2"]), p.I(["X1", "X2"], ["Y3"]))
    assert abs(eval_thm1(dn, fd).rate - ref) < 1e-12


# -- small-network specializations ----------------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_relay_specializations(seed):
    rng = np.random.default_rng(seed)
    dn = ng.relay_network(rng)
    f1 = ng.degenerate(ng.thm1_fd(rng, dn), "Yh3")
    p1 = oracle.joint(dn, f1)
    assert abs(eval_relay_cf_fb(dn, f1).rate - eval_thm1(dn, f1).rate) < 1e-12
    assert abs(eval_relay_cf_fb(dn, f1).rate - oracle.relay_cf_fb(p1)) < 1e-10
    f2 = ng.degenerate(ng.thm2_fd(rng, dn), "Yh3")
    p2 = oracle.joint(dn, f2)
    assert abs(eval_relay_cfdf_fb(dn, f2).rate - eval_thm2(dn, f2).rate) < 1e-12
    assert abs(eval_relay_cfdf_fb(dn, f2).rate - oracle.relay_cfdf_fb(p2)) < 1e-10


@settings(max_examples=6, deadline=None)
@given(seeds)
def test_diamond_specializations(seed):
    rng = np.random.default_rng(seed)
    dn = ng.diamond_network(rng)
    assert is_diamond(dn)
    fd = ng.thm3_fd(rng, dn, rx_yh=1)
    p = oracle.joint(dn, fd)
    assert abs(eval_diamond_fb(dn, fd).rate - eval_thm3(dn, fd).rate) < 1e-12
    assert abs(eval_diamond_fb(dn, fd).rate - oracle.diamond_fb(p)) < 1e-10
    fn = ng.degenerate(fd, "Yh2", "Yh3")
    pn = oracle.joint(dn, fn)
    assert abs(eval_diamond_nofb(dn, fn).rate - eval_thm3(dn, fn).rate) < 1e-12
    assert abs(eval_diamond_nofb(dn, fn).rate - oracle.diamond_nofb(pn)) < 1e-10
    fddf = ng.ddf_fd(rng, dn, u_nodes={2, 3})
    assert abs(eval_ddf(dn, fddf).rate - oracle.diamond_ddf(oracle.joint(dn, fddf))) < 1e-10


def test_specializations_check_their_shape():
    rng = np.random.default_rng(2)
    dn4 = ng.rand_network(rng, 4, {2})
    with pytest.raises(NetworkError):
        eval_relay_cf_fb(dn4, ng.thm1_fd(rng, dn4))
    relay = ng.relay_network(rng)
    with pytest.raises(NetworkError, match="Yh3"):
        eval_relay_cf_fb(relay, ng.thm1_fd(rng, relay))
    odd = ng.rand_network(rng, 4, {2, 3}, x_sizes=[2, 2, 2, 1])
    assert not is_diamond(odd)
    with pytest.raises(NetworkError, match="diamond"):
        eval_diamond_fb(odd, ng.thm3_fd(rng, odd, rx_yh=1))
    dia = ng.diamond_network(rng)
    with pytest.raises(NetworkError, match="Yh2"):
        eval_diamond_nofb(dia, ng.thm3_fd(rng, dia, rx_yh=1))


def test_wrong_family_is_rejected():
    rng = np.random.default_rng(12)
    dn = ng.rand_network(rng, 4, {2})
    with pytest.raises(FactorizationError) as err:
        eval_nnc(dn, ng.thm1_fd(rng, dn))
    assert err.value.report.first_offender == "X1"
    with pytest.raises(FactorizationError):
        eval_thm1(dn, ng.thm2_fd(rng, dn))
    with pytest.raises(NetworkError):
        eval_thm4(dn, ng.thm4_fd(rng, dn), decode_set={7})


# -- side constraints ---------------------------------------------------------------------


def test_feedback_constraints_track_rates():
    rng = np.random.default_rng(13)
    dn = ng.rand_network(rng, 4, {2}, fb=0.0)
    fd = ng.thm2_fd(rng, dn)
    p = oracle.joint(dn, fd)
    low = eval_thm2(dn, fd)
    need = {2: p.I(["Yh2"], ["Y2"], ["X2", "U2"]), 3: p.I(["Yh3"], ["Y3"], ["X3"]),
            4: p.I(["Yh4"], ["Y4"], ["X4"])}
    for k, c in zip((2, 3, 4), low.feasibility):
        assert abs(c.slack + need[k]) < 1e-10
    assert not low.feasible
    rates = {k: 0.0 for k in (2, 3, 4)}
    prev = low
    for step in np.linspace(0.1, 1.0, 4):
        rates = {k: float(step) for k in rates}
        res = eval_thm2(dn.with_roles(dn.roles.with_feedback(rates)), fd)
        assert res.rate == prev.rate
        for a, b in zip(prev.feasibility, res.feasibility):
            assert b.slack >= a.slack and (b.satisfied or not a.satisfied)
        prev = res
    assert prev.feasible == all(need[k] <= 1.0 for k in need)
    perfect = dn.with_roles(dn.roles.with_feedback({k: math.inf for k in rates}))
    assert eval_thm2(perfect, fd).feasible


def test_decoding_constraint_accepts_joint():
    rng = np.random.default_rng(14)
    dn = ng.rand_network(rng, 4, {2})
    fd = ng.thm4_fd(rng, dn, decode_set={2, 3})
    res = eval_thm4(dn, fd, decode_set={2, 3})
    assert res.details["decode_set"] == [2, 3]
    # T restricted to A = {2, 3}: the distinct T_A are {}, {2}, {3}, {2,3}
    assert len(res.feasibility) == 4
    p = oracle.joint(dn, fd)
    direct = decoding_constraint(build_joint(dn, fd), dn.roles, {2, 3}, {2, 3})
    assert abs(direct.slack - oracle.thm4_decode_slack(p, {2}, {2, 3}, {2, 3})) < 1e-10


def test_relay_decode_from_compressed_option():
    rng = np.random.default_rng(15)
    dn = ng.rand_network(rng, 3, {2})
    fd = ng.thm4_fd(rng, dn)
    a = eval_thm4(dn, fd).rate
    b = eval_thm4(dn, fd, relay_decode_from_compressed=True).rate
    # I(U2;Yh2|X2,V2) <= I(U2;Y2|X2,V2) by data processing through Y2
    assert b <= a + 1e-12


# -- results ---------------------------------------------------------------------------------


def test_result_reports_binding_term():
    rng = np.random.default_rng(16)
    dn = ng.rand_network(rng, 4, {2})
    res = eval_thm2(dn, ng.thm2_fd(rng, dn))
    assert len(res.values) == 2 * 2 * len(enumerate_cuts(dn.roles))
    best = min(res.values, key=lambda v: v.value)
    assert (res.binding_receiver, res.binding_cut, res.binding_label) == (
        best.receiver, best.cut, best.label)
    assert res.achieved_rate == max(res.rate, 0.0)
    d = res.as_dict()
    assert d["bound"] == "thm2" and d["binding_cut"] == sorted(best.cut.T)


def test_fixture_relay():
    dn, fd = netfile.load(FIXTURES / "relay_bsc.toml")
    r1 = eval_thm1(dn, fd)
    assert abs(r1.rate - eval_relay_cf_fb(dn, fd).rate) < 1e-12
    assert r1.rate == pytest.approx(0.367588, abs=1e-6)
    assert r1.feasible
    assert abs(r1.rate - oracle.nnc(oracle.joint(dn, fd), 3, {2})) < 1e-10


def test_fixture_diamond():
    dn, fd = netfile.load(FIXTURES / "diamond.toml")
    r = eval_thm3(dn, fd)
    assert abs(r.rate - eval_diamond_fb(dn, fd).rate) < 1e-12
    assert r.rate == pytest.approx(0.328128, abs=1e-6)


def test_registry_is_complete():
    assert set(EVALUATORS) == {
        "thm1", "thm2", "thm3", "thm4", "nnc", "ddf",
        "diamond-fb", "diamond-nofb", "relay-cf-fb", "relay-cfdf-fb",
    }


# -- collapsed forms ------------------------------------------------------------------------


def test_thm1_without_compression_is_single_user_term():
    for seed in range(5):
        rng = np.random.default_rng(40 + seed)
        dn = ng.rand_network(rng, 4, {2})
        fd = ng.degenerate(ng.thm1_fd(rng, dn, product_x1=True), "Yh2", "Yh3", "Yh4")
        p = oracle.joint(dn, fd)
        res = eval_thm1(dn, fd)
        ref = min(p.I(["X1"], [f"Y{d}"], ["X2", "X3", "X4"]) for d in (3, 4))
        assert abs(res.rate - ref) < 1e-12
        assert all(abs(c.slack - 1.0) < 1e-12 for c in res.feasibility)


def test_thm3_without_auxiliaries_is_thm1():
    for seed in range(5):
        rng = np.random.default_rng(50 + seed)
        dn = ng.rand_network(rng, 4, {2, 3})
        fd = ng.thm3_fd(rng, dn, v0=1, u0=1, u=1)
        assert abs(eval_thm3(dn, fd).rate - eval_thm1(dn, fd).rate) < 1e-12


def test_relay_forms():
    for seed in range(5):
        rng = np.random.default_rng(60 + seed)
        dn = ng.relay_network(rng)
        # compress-forward with independent inputs
        f = ng.degenerate(ng.thm1_fd(rng, dn, product_x1=True), "Yh3")
        assert abs(eval_nnc(dn, f).rate - oracle.relay_cf_fb(oracle.joint(dn, f))) < 1e-12
        # no partial decoding: the compress/decode form is the compress form
        f = ng.degenerate(ng.thm2_fd(rng, dn), "Yh3", "U2")
        assert abs(eval_relay_cfdf_fb(dn, f).rate - eval_relay_cf_fb(dn, f).rate) < 1e-12
        # no compression: two-constraint partial decode-forward
        f = ng.degenerate(ng.thm2_fd(rng, dn), "Yh3", "Yh2")
        p = oracle.joint(dn, f)
        pdf = min(p.I(["X1", "X2"], ["Y3"]), p.I(["U2"], ["Y2"], ["X2"]) + p.I(["X1"], ["Y3"], ["X2", "U2"]))
        assert abs(eval_relay_cfdf_fb(dn, f).rate - pdf) < 1e-12
        # distributed decode-forward on the relay is the same partial decode-forward
        f = ng.ddf_fd(rng, dn, u_nodes={2})
        p = oracle.joint(dn, f)
        pdf = min(p.I(["X1", "X2"], ["Y3"]), p.I(["U2"], ["Y2"], ["X2"]) + p.I(["X1"], ["Y3"], ["X2", "U2"]))
        assert abs(eval_ddf(dn, f).rate - pdf) < 1e-12


def test_ddf_without_auxiliaries_is_cut_expression():
    rng = np.random.default_rng(70)
    dn = ng.rand_network(rng, 4, {2})
    fd = ng.remove(ng.ddf_fd(rng, dn), "U2", "U3", "U4")
    p = oracle.joint(dn, fd)
    ref = min(
        p.I([f"X{k}" for k in sorted({1} | T)], [f"Y{d}"], [f"X{k}" for k in sorted(Tc)])
        for d in (3, 4) for T, Tc in oracle.cuts(4, {2})
    )
    assert abs(eval_ddf(dn, fd).rate - ref) < 1e-12


def test_diamond_without_auxiliaries():
    rng = np.random.default_rng(80)
    dn = ng.diamond_network(rng)
    fd = ng.thm3_fd(rng, dn, v0=1, u0=1, u=1, yh=1)
    p = oracle.joint(dn, fd)
    cut = min(p.I(["X1", "X2", "X3"], ["Y4"]), p.I(["X1", "X2"], ["Y4"], ["X3"]),
              p.I(["X1", "X3"], ["Y4"], ["X2"]), p.I(["X1"], ["Y4"], ["X2", "X3"]))
    assert abs(eval_diamond_fb(dn, fd).rate - cut) < 1e-12
    assert abs(eval_diamond_nofb(dn, fd).rate - cut) < 1e-12
