import itertools
import math

import numpy as np
import pytest

import oracles
from helpers import independent_joint, random_instances
from maxleak.channels import binary_joint, bsc, identity_channel
from maxleak.dist import Pmf, compose
from maxleak.errors import KTooLarge, ZeroGain
from maxleak.metrics import maximal_leakage
from maxleak.oracle import (AuxChannel, GainFunction, expand_for_k, gain_leakage_of,
                            guess_success, k_guess_leakage_of_U, leakage_of_U, map_estimate,
                            opportunistic_leakage, per_output_bound, per_output_ratios,
                            posterior_guess_prob, prior_guess_prob, random_aux,
                            shattering_channel)

LN15 = math.log(1.5)
BIN = (0, 1)


def test_prior_guess_examples():
    assert prior_guess_prob(AuxChannel.identity(range(4)), Pmf.uniform(range(4))) == 0.25
    aux = AuxChannel.independent(BIN, Pmf.uniform(range(5)))
    assert prior_guess_prob(aux, Pmf(BIN, [0.3, 0.7])) == pytest.approx(0.2, abs=1e-15)
    px = Pmf(BIN, [2 / 3, 1 / 3])
    assert prior_guess_prob(shattering_channel(px), px) == pytest.approx(1 / 3, abs=1e-12)


def test_posterior_guess_examples(bsc_joint):
    j = independent_joint([0.5, 0.5], [0.3, 0.7])
    aux = AuxChannel.identity(j.x_labels)
    assert posterior_guess_prob(aux, j) == pytest.approx(prior_guess_prob(aux, Pmf(BIN, j.px)))
    assert posterior_guess_prob(AuxChannel.identity(BIN),
                                compose(Pmf.uniform(BIN), identity_channel(2))) == pytest.approx(1.0)
    assert posterior_guess_prob(AuxChannel.identity(BIN), bsc_joint) == pytest.approx(0.75, abs=1e-15)


def test_leakage_of_U_examples(bsc_joint):
    aux = AuxChannel.independent(BIN, Pmf.uniform(range(3)))
    assert leakage_of_U(aux, bsc_joint).nats == pytest.approx(0, abs=1e-15)
    assert leakage_of_U(AuxChannel.identity(BIN), bsc_joint).nats == pytest.approx(LN15, abs=1e-15)
    px = Pmf(BIN, [0.7, 0.3])
    j = compose(px, bsc(0.2))
    assert leakage_of_U(shattering_channel(px), j).nats == pytest.approx(maximal_leakage(j).nats, abs=1e-12)


def test_shattering_examples():
    aux = shattering_channel(Pmf(BIN, [0.5, 0.5]))
    assert np.allclose(aux.m, np.eye(2))
    px = Pmf(BIN, [2 / 3, 1 / 3])
    aux = shattering_channel(px)
    assert len(aux.u_labels) == 3
    assert np.allclose(aux.m @ px.probs, 1 / 3, atol=1e-12)
    px = Pmf("abc", [0.5, 0.3, 0.2])
    aux = shattering_channel(px)
    per_x = [sum(1 for u in aux.u_labels if u[0] == x) for x in "abc"]
    assert per_x == [3, 2, 1]
    assert np.allclose(aux.m @ px.probs, [0.2, 0.2, 0.1, 0.2, 0.1, 0.2], atol=1e-12)


def test_shattering_structure():
    rng = np.random.default_rng(61)
    for _ in range(200):
        k = int(rng.integers(1, 7))
        px = Pmf(range(k), rng.dirichlet(np.ones(k)))
        aux = shattering_channel(px)
        pu = aux.m @ px.probs
        assert pu.max() == pytest.approx(px.probs.min(), rel=1e-12)
        support = aux.m > 0
        assert np.all(support.sum(axis=1) == 1)  # each atom belongs to one x


def test_achievability():
    for px, ch, j in random_instances(200, seed=62):
        aux = shattering_channel(px)
        assert leakage_of_U(aux, j).nats == pytest.approx(maximal_leakage(j).nats, abs=1e-9)


def test_dominance_and_additive_bound():
    rng = np.random.default_rng(63)
    inst = list(random_instances(50, seed=64))
    count = 0
    for px, ch, j in inst:
        lm = maximal_leakage(j).nats
        for _ in range(10):
            aux = random_aux(rng, int(rng.integers(1, 13)), j.x_labels, alpha=float(rng.choice([0.1, 1.0])))
            assert leakage_of_U(aux, j).nats <= lm + 1e-12
            post = posterior_guess_prob(aux, j)
            prior = prior_guess_prob(aux, px)
            assert post - prior <= -math.expm1(-lm) + 1e-12
            assert post == pytest.approx(oracles.guess_prob_posterior(aux.m.tolist(), j.dense().tolist()),
                                         abs=1e-12)
            assert prior == pytest.approx(oracles.guess_prob_prior(aux.m.tolist(), px.probs.tolist()),
                                          abs=1e-12)
            count += 1
    assert count >= 500


def test_proposition_per_output_bound():
    rng = np.random.default_rng(65)
    for px, ch, j in random_instances(100, seed=66, zero_prob=0.3):
        bound = per_output_bound(j)
        for aux in [shattering_channel(px)] + [random_aux(rng, 5, j.x_labels) for _ in range(3)]:
            r = per_output_ratios(aux, j)
            ok = ~np.isnan(bound)
            assert np.all(r[ok] <= bound[ok] + 1e-12)


def test_k_guess_examples(bsc_joint):
    aux = AuxChannel.identity(BIN)
    assert k_guess_leakage_of_U(aux, bsc_joint, 2).nats == pytest.approx(0, abs=1e-15)
    assert k_guess_leakage_of_U(aux, bsc_joint, 1).nats == pytest.approx(
        leakage_of_U(aux, bsc_joint).nats, abs=1e-15)
    with pytest.raises(KTooLarge):
        k_guess_leakage_of_U(aux, bsc_joint, 3)
    sh = shattering_channel(Pmf.uniform(BIN))
    assert k_guess_leakage_of_U(expand_for_k(sh, 3), bsc_joint, 3).nats == pytest.approx(LN15, abs=1e-12)


def test_expand_for_k_examples():
    aux = AuxChannel.identity(BIN)
    one = expand_for_k(aux, 1)
    assert np.allclose(one.m, aux.m) and one.u_labels == ((0, 1), (1, 1))
    two = expand_for_k(aux, 2)
    assert two.m.shape == (4, 2)
    assert np.allclose(two.m, [[0.5, 0], [0.5, 0], [0, 0.5], [0, 0.5]])


def test_k_guess_sandwich():
    rng = np.random.default_rng(67)
    for px, ch, j in random_instances(200, seed=68, max_x=4, max_y=4):
        k = int(rng.integers(1, 4))
        lm = maximal_leakage(j).nats
        v = k_guess_leakage_of_U(expand_for_k(shattering_channel(px), k), j, k).nats
        assert v == pytest.approx(lm, abs=1e-9)
        aux = random_aux(rng, 6, j.x_labels)
        assert k_guess_leakage_of_U(aux, j, min(k, 6)).nats <= lm + 1e-12
        assert k_guess_leakage_of_U(expand_for_k(aux, k), j, k).nats == pytest.approx(
            leakage_of_U(aux, j).nats, abs=1e-12)


def test_opportunistic_examples(bsc_joint):
    ind = AuxChannel.independent(BIN, Pmf.uniform(range(2)))
    assert opportunistic_leakage([ind, ind], bsc_joint).nats == pytest.approx(0, abs=1e-15)
    sh = shattering_channel(Pmf.uniform(BIN))
    assert opportunistic_leakage([sh, sh], bsc_joint).nats == pytest.approx(LN15, abs=1e-12)
    idt = AuxChannel.identity(BIN)
    assert opportunistic_leakage([idt, idt], bsc_joint).nats == pytest.approx(LN15, abs=1e-12)


def test_opportunistic_bounds():
    rng = np.random.default_rng(69)
    for px, ch, j in random_instances(200, seed=70):
        lm = maximal_leakage(j).nats
        fam = [random_aux(rng, int(rng.integers(1, 6)), j.x_labels) for _ in j.y_labels]
        assert 0.0 <= opportunistic_leakage(fam, j).nats <= lm + 1e-12
        sh = shattering_channel(px)
        assert opportunistic_leakage([sh] * len(j.y_labels), j).nats == pytest.approx(lm, abs=1e-12)


def test_gain_examples(bsc_joint):
    aux = AuxChannel.identity(BIN)
    g = GainFunction.indicator(BIN)
    assert gain_leakage_of(aux, g, bsc_joint).nats == pytest.approx(leakage_of_U(aux, bsc_joint).nats)
    assert gain_leakage_of(aux, g.scaled(7), bsc_joint).nats == pytest.approx(
        gain_leakage_of(aux, g, bsc_joint).nats, abs=1e-15)
    ga = GainFunction(BIN, BIN, [[2, 0], [0, 1]])
    p = bsc_joint.dense()
    num = sum(max(sum(ga.g[u, h] * p[u, y] for u in range(2)) for h in range(2)) for y in range(2))
    den = max(sum(ga.g[u, h] * 0.5 for u in range(2)) for h in range(2))
    v = gain_leakage_of(aux, ga, bsc_joint).nats
    assert v == pytest.approx(math.log(num / den), abs=1e-15)
    assert v == pytest.approx(math.log(1.125), abs=1e-15)
    assert v <= LN15
    with pytest.raises(ZeroGain):
        gain_leakage_of(aux, GainFunction(BIN, BIN, np.zeros((2, 2))), bsc_joint)


def test_gain_dominance():
    rng = np.random.default_rng(71)
    for px, ch, j in random_instances(200, seed=72):
        nu = int(rng.integers(1, 6))
        aux = random_aux(rng, nu, j.x_labels)
        nh = int(rng.integers(1, 5))
        g = GainFunction(range(nu), range(nh), rng.random((nu, nh)))
        lm = maximal_leakage(j).nats
        v = gain_leakage_of(aux, g, j).nats
        assert v <= lm + 1e-12
        assert gain_leakage_of(aux, g.scaled(3.5), j).nats == pytest.approx(v, abs=1e-12)


def test_map_estimate_examples(bsc_joint):
    assert map_estimate(compose(Pmf.uniform(BIN), identity_channel(2)))[1] == pytest.approx(1.0)
    assert map_estimate(independent_joint([0.5, 0.5], [0.5, 0.5]))[1] == pytest.approx(0.5)
    assert map_estimate(bsc_joint)[1] == pytest.approx(0.75)


def test_map_estimate_is_optimal_by_exhaustion():
    for px, ch, j in random_instances(100, seed=73, max_x=3, max_y=4):
        guess, best = map_estimate(j)
        assert guess_success(j, guess) == pytest.approx(best, abs=1e-15)
        for f in itertools.product(j.x_labels, repeat=len(j.y_labels)):
            assert guess_success(j, dict(zip(j.y_labels, f))) <= best + 1e-15
