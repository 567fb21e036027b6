"""Experiments as pure functions of (config, master seed).

Each ``*_experiment`` takes a config dict (missing keys fall back to the module
defaults) and an integer seed, and returns a list of JSON-friendly records. Trial i
always draws from the i-th child of ``SeedSequence(seed)``, so any single trial can
be replayed on its own.
"""

from __future__ import annotations

import math

import numpy as np

from .attacks import (CutProbeAttack, HubsFamily, LandmarkAttack, LockInAttack, SumAttack, sum_script,
                      toggle_script)
from .config import merged
from .errors import InvalidArgument
from .estimators import (LandmarkDistance, SampledMinCut, SparsifiedEffRes, SubsampleSum, one_sided_scale)
from .graph import Graph, complete_graph, random_circulant, random_multigraph, two_cliques
from .harness import AdaptiveAdversary, BlinkingAdversary, EstimatorPlayer, ObliviousAdversary, run_game
from .metering import Meter
from .problems import DistanceProblem, EffResProblem, MinCutProblem, SumProblem
from .separation import (BoxesScheme, CacheEverything, CostedOracle, HonestAdaptive, avg_boxes_oblivious,
                         boxes_roundtrip, lob_adaptive_game, lob_oblivious, oblivious_query_stream)
from .sparsify import DecompConfig, ExpanderDecomposition, SamplingConfig, sparsify
from .wrapper import MinCutPipeline, RobustWrapper, composition_budget, derive_params


def trial_seeds(seed: int, trials: int) -> list[int]:
    return [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]


def _params(cfg):
    return derive_params(cfg["T"], cfg["U"], cfg["alpha"], cfg["delta"], s_mult=cfg["s_mult"],
                         c_mult=cfg["c_mult"], eps_med=cfg["eps_med"])


def _game_record(met, **extra) -> dict:
    rec = {"acc_freq": met.acc_freq(), "all_accurate": met.all_accurate(), "steps": met.steps,
           "violation": met.violation, **extra}
    if met.copy_frac:
        cf = np.asarray(met.copy_frac)
        rec["min_copy_frac"] = float(cf.min())
        rec["copy_ok_steps"] = int((cf >= 0.8).sum())
    return rec


# ------------------------------------------------------------------ attack / defense on min cut

ATTACK_DEFAULTS = dict(trials=100, steps=500, q=12, intra=60, bridge=100, bridge_w=3, rho=0.5, eps=0.25,
                       T=500, U=1000.0, alpha=0.05, delta=0.1, s_mult=2.5, c_mult=2.0, eps_med=0.5,
                       single=True, wrapped=True, oblivious=False, instrument=True)


def attack_experiment(cfg: dict, seed: int) -> list[dict]:
    """Concrete adaptive attack against one sampled min-cut copy and against the wrapper.

    Both targets see the same graph and game seed in each trial.
    """
    cfg = merged(ATTACK_DEFAULTS, cfg)
    p = _params(cfg)
    out = []
    for i, ts in enumerate(trial_seeds(seed, cfg["trials"])):
        g = two_cliques(cfg["q"], cfg["intra"], cfg["bridge"], cfg["bridge_w"], np.random.default_rng(ts))
        unit = one_sided_scale(cfg["eps"])
        if cfg["single"]:
            att = CutProbeAttack(cfg["bridge_w"], unit)
            _, met = run_game(EstimatorPlayer(SampledMinCut(cfg["rho"], cfg["eps"])), AdaptiveAdversary(att),
                              MinCutProblem(g), cfg["steps"], ts)
            out.append(_game_record(met, experiment="attack", target="single", trial=i, probes=att.probes))
        if cfg["oblivious"]:
            q = cfg["q"]
            pairs = [(a, q + b) for a in range(q) for b in range(q)]
            script = toggle_script(g, pairs, cfg["bridge_w"], cfg["steps"], np.random.default_rng([ts, 1]))
            _, met = run_game(EstimatorPlayer(SampledMinCut(cfg["rho"], cfg["eps"])), ObliviousAdversary(script),
                              MinCutProblem(g), cfg["steps"], ts)
            out.append(_game_record(met, experiment="attack", target="single-oblivious", trial=i))
        if cfg["wrapped"]:
            att = CutProbeAttack(cfg["bridge_w"], unit)
            w = RobustWrapper(lambda: SampledMinCut(cfg["rho"], cfg["eps"]), p, tracker=MinCutProblem(g))
            _, met = run_game(w, AdaptiveAdversary(att), MinCutProblem(g), cfg["steps"], ts,
                              instrument=cfg["instrument"])
            out.append(_game_record(met, experiment="attack", target="wrapped", trial=i, probes=att.probes,
                                    s=p.s, c=p.c, work=int(w.meter.total())))
    return out


# ------------------------------------------------------------------ blinking pipeline

PIPELINE_DEFAULTS = dict(trials=8, steps=200, n=60, graph="complete", wmin=40, wmax=48, multiplicities=[1, 2],
                         T=40, U=1e4, alpha=0.05, delta=0.1, s_mult=2.5, c_mult=2.0, eps_med=0.5,
                         phase_cnt=40, phi=0.1, oversampling=512.0, eps=0.25, w_probe=44, instrument=True)


def _pipeline_graph(cfg, mult: int, rng) -> Graph:
    n, lo, hi = cfg["n"], cfg["wmin"] * mult, cfg["wmax"] * mult
    if cfg["graph"] == "complete":
        return Graph.from_edges(n, [(u, v, int(rng.integers(lo, hi + 1))) for u in range(n) for v in range(u + 1, n)])
    if cfg["graph"] == "circulant":
        return random_circulant(n, n // 2 if (n // 2) % 2 == 0 else n // 2 - 1, rng, lo, hi)
    raise InvalidArgument(f"unknown pipeline graph {cfg['graph']!r}")


def pipeline_experiment(cfg: dict, seed: int) -> list[dict]:
    """Sparsified min-cut pipeline under the blinking probe attack.

    Every trial is run once per weight multiplicity; multiplying all weights by k
    multiplies the number of edge units m by k and leaves the topology alone.
    """
    cfg = merged(PIPELINE_DEFAULTS, cfg)
    p = _params(cfg)
    dcfg = DecompConfig(phi=cfg["phi"])
    scfg = SamplingConfig(eps=cfg["eps"], oversampling=cfg["oversampling"])
    out = []
    for i, ts in enumerate(trial_seeds(seed, cfg["trials"])):
        for mult in cfg["multiplicities"]:
            g = _pipeline_graph(cfg, mult, np.random.default_rng(ts))
            pipe = MinCutPipeline(p, cfg["phase_cnt"], dcfg, scfg)
            att = CutProbeAttack(cfg["w_probe"] * mult, one_sided_scale(cfg["eps"]))
            _, met = run_game(pipe, BlinkingAdversary(att), MinCutProblem(g), cfg["steps"], ts,
                              instrument=cfg["instrument"])
            out.append(_game_record(met, experiment="pipeline", trial=i, mult=mult,
                                    m_units=int(sum(w for _, _, w in g.edges())),
                                    phase_refresh=[int(x) for x in pipe.phase_refresh_work],
                                    per_copy_refresh=[x / p.c for x in pipe.phase_refresh_work],
                                    build_work=int(pipe.build_work), phases=len(pipe.phase_refresh_work)))
    return out


def refresh_spread(records: list[dict], phases: int = 5) -> dict:
    """Per-phase mean refresh counter for each multiplicity, and the worst relative gap."""
    by = {}
    for r in records:
        by.setdefault(r["mult"], []).append(r["phase_refresh"][:phases])
    means = {k: np.mean(np.array(v, dtype=float), axis=0) for k, v in by.items()}
    ks = sorted(means)
    gap = 0.0
    for a in ks:
        for b in ks:
            gap = max(gap, float(np.max(np.abs(means[a] - means[b]) / np.minimum(means[a], means[b]))))
    return {"means": {k: [float(x) for x in v] for k, v in means.items()}, "max_rel_gap": gap}


# ------------------------------------------------------------------ refresh vs decompose

REFRESH_DEFAULTS = dict(trials=5, n=100, ms=[1000, 5000], phi=0.1, oversampling=4.0, eps=0.25, t=64)


def refresh_bench(cfg: dict, seed: int) -> list[dict]:
    """Counter cost of one sparsifier refresh versus building the decomposition."""
    cfg = merged(REFRESH_DEFAULTS, cfg)
    scfg = SamplingConfig(eps=cfg["eps"], oversampling=cfg["oversampling"])
    out = []
    for i, ts in enumerate(trial_seeds(seed, cfg["trials"])):
        for m in cfg["ms"]:
            rng = np.random.default_rng(ts)
            g = random_multigraph(cfg["n"], m, rng)
            dm = Meter()
            d = ExpanderDecomposition(g, DecompConfig(phi=cfg["phi"], bucket_weights=False), dm)
            h = sparsify(d, cfg["t"], rng, scfg)
            out.append({"experiment": "refresh", "trial": i, "m": m, "edges": g.m, "pieces": len(d.pieces),
                        "refresh": int(h.build_work), "decompose": int(dm.total())})
    return out


# ------------------------------------------------------------------ separation lab

SEPARATION_DEFAULTS = dict(problem="lob", trials=3, n=10, c=1, blocks=2, oblivious_steps=20, P=None,
                           chain_len=16, bits=16, m=200, ell=50, alpha=0.1, beta=0.05, support=48, roundtrip=100)


def separation_experiment(cfg: dict, seed: int) -> list[dict]:
    cfg = merged(SEPARATION_DEFAULTS, cfg)
    seeds = trial_seeds(seed, cfg["trials"])
    out = []
    if cfg["problem"] == "lob":
        n, c = cfg["n"], cfg["c"]
        steps = cfg["blocks"] * n**c
        for i, ts in enumerate(seeds):
            ob = lob_oblivious(n, c, cfg["oblivious_steps"], ts, cfg["P"])
            rec_ob = {"experiment": "lob", "algorithm": "oblivious", "trial": i, "n": n, "c": c, "P": ob.P,
                      "steps": ob.steps, "cost": ob.total, "formula": ob.oblivious_formula(),
                      "failures": ob.failures, "violations": ob.violations, "x_bound_ok": ob.x_bound_ok,
                      "amortized": ob.amortized()}
            out.append(rec_ob)
            for name, alg in (("honest", HonestAdaptive()), ("cache", CacheEverything(int(2 ** (0.5 * n))))):
                r = lob_adaptive_game(alg, n, c, steps, ts, cfg["P"])
                out.append({"experiment": "lob", "algorithm": name, "trial": i, "n": n, "c": c, "P": r.P,
                            "steps": steps, "preprocess": r.preprocess_cost, "blocks": r.block_costs(),
                            "block_formula": r.block_formula(), "slack": r.slack, "violations": r.violations,
                            "x_bound_ok": r.x_bound_ok, "amortized": r.amortized(),
                            "ratio_vs_oblivious": r.amortized() / rec_ob["amortized"]})
    elif cfg["problem"] == "boxes":
        b, T = cfg["bits"], cfg["chain_len"]
        for i, ts in enumerate(seeds):
            rng = np.random.default_rng(ts)
            scheme = BoxesScheme(CostedOracle(int(rng.integers(2**63))), b, T)
            key = scheme.gen(rng)
            ok = boxes_roundtrip(scheme, key, rng.integers(0, 1 << b, size=cfg["roundtrip"]), rng)
            support = rng.integers(0, 1 << b, size=cfg["support"])
            xs = rng.choice(support, size=cfg["m"])
            boxes = [scheme.enc(key, int(x), rng) for x in xs]
            queries = oblivious_query_stream(b, cfg["ell"], rng)
            before = scheme.oracle.reads
            res = avg_boxes_oblivious(scheme, key, boxes, queries, cfg["alpha"], cfg["beta"], rng)
            spent = scheme.oracle.reads - before
            truth = np.array([q(xs).mean() for q in queries])
            err = float(np.max(np.abs(res.answers - truth)))
            out.append({"experiment": "boxes", "trial": i, "bits": b, "T": T, "m": cfg["m"], "ell": cfg["ell"],
                        "roundtrip_ok": ok, "w": res.w, "w_eff": res.w_eff, "oracle_reads": spent,
                        "cost": res.cost, "formula": res.w_eff * T + cfg["ell"] * res.w_eff,
                        "max_err": err, "accurate": err <= cfg["alpha"]})
    else:
        raise InvalidArgument(f"unknown separation problem {cfg['problem']!r}")
    return out


# ------------------------------------------------------------------ generic game

GAME_DEFAULTS = dict(problem="sum", adversary="adaptive", wrapped=False, trials=1, steps=200, items=100,
                     value=1.0, rate=0.5, eps=0.25, rho=0.5, n=24, hubs=8, landmarks=4, effres_n=65, oversampling=16.0,
                     T=200, U=1000.0, alpha=0.05, delta=0.1, s_mult=2.5, c_mult=2.0, eps_med=0.5,
                     instrument=False)


def _game_setup(cfg, rng):
    """(problem, estimator factory, adaptive strategy, oblivious script)."""
    kind, steps = cfg["problem"], cfg["steps"]
    if kind == "sum":
        prob = SumProblem({i: cfg["value"] for i in range(cfg["items"])})
        return (prob, lambda: SubsampleSum(cfg["rate"], cfg["eps"]), SumAttack(cfg["value"]),
                sum_script(steps, cfg["value"], rng, start_key=cfg["items"]))
    if kind == "mincut":
        q = cfg["n"] // 2
        g = two_cliques(q, 60, min(100, q * q), 3, rng)
        pairs = [(a, q + b) for a in range(q) for b in range(q)]
        return (MinCutProblem(g), lambda: SampledMinCut(cfg["rho"], cfg["eps"]),
                CutProbeAttack(3, one_sided_scale(cfg["eps"])), toggle_script(g, pairs, 3, steps, rng))
    if kind == "distance":
        fam = HubsFamily(cfg["hubs"])
        g = fam.graph()
        pairs = [(fam.src, fam.hub(i)) for i in range(fam.k)]
        return (DistanceProblem(g, fam.src, fam.snk), lambda: LandmarkDistance(cfg["landmarks"]),
                LandmarkAttack(fam), toggle_script(g, pairs, fam.h, steps, rng))
    if kind == "effres":
        g = complete_graph(cfg["effres_n"], 1)
        pairs = [(0, v) for v in range(2, g.n)]
        truth = lambda h, s, t: EffResProblem(h, s, t).truth()  # noqa: E731
        return (EffResProblem(g, 0, 1), lambda: SparsifiedEffRes(cfg["eps"], oversampling=cfg["oversampling"]),
                LockInAttack(0, 1, truth, 1 + cfg["eps"]), toggle_script(g, pairs, 1, steps, rng))
    raise InvalidArgument(f"unknown problem {kind!r}")


def game_experiment(cfg: dict, seed: int) -> list[dict]:
    cfg = merged(GAME_DEFAULTS, cfg)
    out = []
    for i, ts in enumerate(trial_seeds(seed, cfg["trials"])):
        prob, factory, strategy, script = _game_setup(cfg, np.random.default_rng(ts))
        adv = AdaptiveAdversary(strategy) if cfg["adversary"] == "adaptive" else ObliviousAdversary(script)
        if cfg["wrapped"]:
            player = RobustWrapper(factory, _params(cfg), tracker=prob.clone())
        else:
            player = EstimatorPlayer(factory())
        tr, met = run_game(player, adv, prob, cfg["steps"], ts, instrument=cfg["instrument"] and cfg["wrapped"])
        out.append(_game_record(met, experiment="game", problem=cfg["problem"], adversary=cfg["adversary"],
                                wrapped=cfg["wrapped"], trial=i, final_truth=met.truth[-1] if met.truth else None,
                                final_output=met.output[-1] if met.output else None,
                                work=int(player.meter.total())))
    return out


def budget_table(configs) -> list[dict]:
    """Composition-budget check for a list of (T, U, alpha, delta) tuples in full-constant mode."""
    out = []
    for T, U, alpha, delta in configs:
        p = derive_params(T, U, alpha, delta)
        out.append({"T": T, "U": U, "alpha": alpha, "delta": delta, "s": p.s, "c": p.c,
                    "budget": composition_budget(p), "ok": composition_budget(p) <= 0.01 + 1e-9})
    return out


def sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / max(trials, 1))
