import math

import numpy as np
import pytest

from robustdyn.attacks import CutProbeAttack, HubsFamily, LandmarkAttack, SumAttack, sum_script, toggle_script
from robustdyn.errors import InvalidArgument
from robustdyn.estimators import (ExactSum, LandmarkDistance, SampledMinCut, SparsifiedEffRes, SubsampleSum,
                                  accurate, make_estimator, one_sided_scale)
from robustdyn.experiments import game_experiment, sigma, trial_seeds
from robustdyn.graph import GraphUpdate, complete_graph, effective_resistance_exact, min_cut_exact, path_graph, two_cliques
from robustdyn.harness import AdaptiveAdversary, EstimatorPlayer, ObliviousAdversary, run_game
from robustdyn.problems import DistanceProblem, MinCutProblem, SetPair, SumProblem, SumUpdate


def test_accurate_predicate():
    assert accurate(10, 10, 1.25) and accurate(10, 12.5, 1.25)
    assert not accurate(10, 9.99, 1.25) and not accurate(10, 12.6, 1.25)
    assert accurate(0, 0, 2) and not accurate(0, 1, 2)
    assert accurate(math.inf, math.inf, 2) and not accurate(math.inf, 5, 2)


def test_one_sided_scale():
    e = 0.25 / 2.25
    assert one_sided_scale(0.25) == pytest.approx(1 / (1 - e))
    # (1 - e') * scale = 1 and (1 + e') * scale = 1 + eps
    assert (1 + e) * one_sided_scale(0.25) == pytest.approx(1.25)


# ---------------------------------------------------------------- sum

def test_sum_rate_one_exact():
    est = ExactSum()
    est.init({0: 2.0, 1: 3.0}, np.random.default_rng(0))
    est.update(SumUpdate.insert(2, 5.0))
    est.update(SumUpdate.delete(0))
    assert est.query() == 8.0 and est.gamma == 1.0


def test_sum_rejects_bad_rate():
    with pytest.raises(InvalidArgument):
        SubsampleSum(0.0)


def test_sum_oblivious_accuracy():
    rng = np.random.default_rng(0)
    script = sum_script(200, 1.0, rng, start_key=200)
    prob = SumProblem({i: 1.0 for i in range(200)})
    freqs = []
    for ts in trial_seeds(1, 50):
        _, met = run_game(EstimatorPlayer(SubsampleSum(0.9)), ObliviousAdversary(script), prob, 200, ts)
        freqs.append(met.acc_freq())
    assert np.mean(freqs) >= 0.9 - 3 * sigma(0.9, 50)


def test_sum_adaptive_drift_is_linear():
    prob = SumProblem({i: 1.0 for i in range(100)})
    gaps = {100: [], 400: []}
    for ts in trial_seeds(2, 10):
        est = SubsampleSum(0.5)
        _, met = run_game(EstimatorPlayer(est), AdaptiveAdversary(SumAttack(1.0)), prob, 400, ts)
        raw = np.array(met.output) / est.scale
        for k in gaps:
            gaps[k].append(met.truth[k - 1] - raw[k - 1])
    g100, g400 = np.mean(gaps[100]), np.mean(gaps[400])
    assert g100 > 10
    assert 3 < g400 / g100 < 5


# ---------------------------------------------------------------- min cut

def test_mincut_rho_one_exact():
    rng = np.random.default_rng(3)
    g = two_cliques(6, 5, 8, 1, rng)
    est = SampledMinCut(1.0)
    est.init(g, rng)
    cur = g.copy()
    for upd in toggle_script(g, [(a, 6 + b) for a in range(6) for b in range(6)], 1, 40, rng):
        cur.apply(upd)
        est.update(upd)
        assert est.query() == min_cut_exact(cur)[0]


def test_mincut_auto_rho():
    g = two_cliques(10, 40, 30, 10, np.random.default_rng(0))
    est = SampledMinCut(None)
    est.init(g, np.random.default_rng(1))
    e = 0.25 / 2.25
    assert est.rho == pytest.approx(min(1, 3 * math.log(20) / (e * e * 300)))


def test_mincut_k20_oblivious():
    """Two K20 blocks, 40 cross edges of weight 8; 200 independent oblivious runs."""
    hits = []
    for ts in trial_seeds(3, 200):
        rng = np.random.default_rng(ts)
        g = two_cliques(20, 60, 40, 8, rng)
        pairs = [(a, 20 + b) for a in range(20) for b in range(20)]
        script = toggle_script(g, pairs, 8, 10, rng)
        _, met = run_game(EstimatorPlayer(SampledMinCut(0.5)), ObliviousAdversary(script), MinCutProblem(g), 10, ts)
        hits += met.acc
    assert np.mean(hits) >= 0.9


def _attack(rho, ts, steps=500):
    g = two_cliques(12, 60, 100, 3, np.random.default_rng(ts))
    est = SampledMinCut(rho)
    att = CutProbeAttack(3, one_sided_scale(0.25) if rho < 1 else 1.0)
    _, met = run_game(EstimatorPlayer(est), AdaptiveAdversary(att), MinCutProblem(g), steps, ts)
    return met


def test_mincut_attack_succeeds():
    freqs = [_attack(0.5, ts).acc_freq() for ts in trial_seeds(4, 5)]
    assert sum(f < 0.5 for f in freqs) >= 4


def test_mincut_attack_useless_without_randomness():
    assert _attack(1.0, 11, steps=150).all_accurate()


# ---------------------------------------------------------------- effective resistance

def test_effres_exact_mode():
    g = complete_graph(12)
    est = SparsifiedEffRes()  # full constants: every rate clamps to 1
    est.init(g, np.random.default_rng(0))
    assert est.query() == pytest.approx(effective_resistance_exact(g, 0, 1), rel=1e-12)
    est.update(SetPair(2, 7))
    est.update(GraphUpdate.delete(2, 3))
    g.apply(GraphUpdate.delete(2, 3))
    assert est.query() == pytest.approx(effective_resistance_exact(g, 2, 7), rel=1e-12)


def test_effres_oblivious_then_locked():
    ob = game_experiment(dict(problem="effres", adversary="oblivious", trials=6, steps=120), 2)
    ad = game_experiment(dict(problem="effres", adversary="adaptive", trials=6, steps=120), 2)
    assert np.mean([r["acc_freq"] for r in ob]) >= 0.9 - 3 * sigma(0.9, 6)
    assert np.median([r["acc_freq"] for r in ad]) < 0.5


# ---------------------------------------------------------------- distance

def test_distance_same_endpoint():
    est = LandmarkDistance(2)
    est.init(path_graph(5), np.random.default_rng(0))
    est.update(SetPair(3, 3))
    assert est.query() == 0.0


def test_landmark_on_shortest_path_exact():
    est = LandmarkDistance(candidates=[2], k=1)
    est.init(path_graph(5), np.random.default_rng(0))
    est.update(SetPair(0, 4))
    assert est.landmark() is None or est.landmark() == 2
    assert est.query() == 4.0


def test_hubs_answer_reveals_landmark():
    fam = HubsFamily(6)
    est = LandmarkDistance(k=3, candidates=[fam.hub(i) for i in range(6)])
    est.init(fam.graph(), np.random.default_rng(5))
    z = est.query()
    assert fam.hub_from_answer(z) == est.landmark() - 2
    assert accurate(2 * fam.h, z, 3.0)


def _landmark_game(adversary, steps=200, k=4, seed=0, hubs=32):
    fam = HubsFamily(hubs)
    pool = None if k == "all" else [fam.hub(i) for i in range(fam.k)]  # "all" means every vertex
    est = LandmarkDistance(k=k, candidates=pool)
    prob = DistanceProblem(fam.graph(), fam.src, fam.snk)
    adv = adversary(fam)
    _, met = run_game(EstimatorPlayer(est), adv, prob, steps, seed)
    return est, met, adv


@pytest.mark.parametrize("steps", [200, 400])
def test_landmark_attack_forces_recommits(steps):
    est, met, adv = _landmark_game(lambda f: AdaptiveAdversary(LandmarkAttack(f)), steps=steps)
    assert est.recommits == adv.strategy.probes
    assert est.recommits >= 0.4 * steps
    assert met.all_accurate() and met.violation is None


def test_landmark_oblivious_recommits_rare():
    fam = HubsFamily(32)
    script = toggle_script(fam.graph(), [(fam.src, fam.hub(i)) for i in range(fam.k)], fam.h, 200,
                           np.random.default_rng(1))
    est, met, _ = _landmark_game(lambda f: ObliviousAdversary(script))
    # a blind deletion hits the committed landmark w.p. about 1/hubs
    assert est.recommits <= 15
    assert met.all_accurate()


def test_landmark_all_vertices_never_recommits():
    est, met, _ = _landmark_game(lambda f: AdaptiveAdversary(LandmarkAttack(f)), k="all")
    assert est.recommits == 0 and met.all_accurate()


# ---------------------------------------------------------------- interface

@pytest.mark.parametrize("name", ["sum", "mincut", "effres", "distance"])
def test_registry_and_gamma(name):
    est = make_estimator(name)
    assert est.gamma >= 1 and est.spec.name.startswith(name)


def test_registry_unknown():
    with pytest.raises(InvalidArgument):
        make_estimator("nope")


def test_counters_reproducible_and_monotone():
    def run():
        g = two_cliques(8, 10, 20, 2, np.random.default_rng(0))
        est = SampledMinCut(0.5)
        script = toggle_script(g, [(a, 8 + b) for a in range(8) for b in range(8)], 2, 60, np.random.default_rng(1))
        _, met = run_game(EstimatorPlayer(est), ObliviousAdversary(script), MinCutProblem(g), 60, 9)
        return met.work, met.output
    w1, o1 = run()
    w2, o2 = run()
    assert w1 == w2 and o1 == o2
    assert all(b >= a for a, b in zip(w1, w1[1:]))


def test_reset_restores_contract_on_suffix():
    rng = np.random.default_rng(0)
    prob = SumProblem({i: 1.0 for i in range(200)})
    script = sum_script(100, 1.0, rng, start_key=200)
    hits = []
    for ts in trial_seeds(5, 30):
        est = SubsampleSum(0.9)
        r = np.random.default_rng(ts)
        est.init(prob.input(), r)
        for upd in script[:50]:
            est.update(upd)
        cur = prob.clone()
        for upd in script[:50]:
            cur.apply(upd)
        est.reset(cur.input(), np.random.default_rng([ts, 1]))
        for upd in script[50:]:
            cur.apply(upd)
            est.update(upd)
            hits.append(est.accurate(cur.truth(), est.query()))
    assert np.mean(hits) >= 0.9
