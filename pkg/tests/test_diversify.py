import itertools
import math

import numpy as np
import pytest

from lakediv.distances import cosine_distance, pairwise_distances
from lakediv.diversify import (
    DiverseResult,
    DiversifyError,
    DiversifyParams,
    brute_force_best,
    clt,
    cluster_medoids,
    diversify_dust,
    gmc,
    gne,
    greedy_marginal_sequence,
    mmr_objective,
    prune_tuples,
    random_select,
    rank_candidates,
    rank_from_distances,
    top_similar,
)
from lakediv.embedding import EmbeddingMatrix
from lakediv.synth import mixture_instance
from lakediv.tables import TupleRef


def mk(vectors, tables=None, name="t"):
    vectors = np.asarray(vectors, dtype=float)
    if tables is None:
        tables = [name] * len(vectors)
    counters = {}
    ids = []
    for t in tables:
        counters[t] = counters.get(t, 0)
        ids.append(TupleRef(t, counters[t]))
        counters[t] += 1
    return EmbeddingMatrix(ids=ids, vectors=vectors, provider_tag="test")


# ---------------------------------------------------------------------------
# params
# ---------------------------------------------------------------------------

def test_params_validation():
    DiversifyParams(k=3, s=10, p=2)
    with pytest.raises(DiversifyError):
        DiversifyParams(k=0)
    with pytest.raises(DiversifyError):
        DiversifyParams(k=3, p=0)
    with pytest.raises(DiversifyError):
        DiversifyParams(k=3, s=5, p=2)  # s < k*p
    with pytest.raises(DiversifyError):
        DiversifyParams(k=5, s=5, p=1)  # k < s violated
    with pytest.raises(DiversifyError):
        DiversifyParams(k=1, objective="max-avg")


# ---------------------------------------------------------------------------
# prune
# ---------------------------------------------------------------------------

def test_prune_hand_derived_three_points():
    e = mk([[1.0, 0.0], [0.0, 1.0], [0.707, 0.707]])
    pruned = prune_tuples(e, 2)
    kept = {r.key() for r in pruned.ids}
    assert kept == {("t", 0), ("t", 1)}  # the mean points at 45 degrees


def test_prune_noop_when_budget_covers():
    e = mk([[1.0, 0.0], [0.0, 1.0]])
    assert prune_tuples(e, 2) is e
    assert prune_tuples(e, None) is e


def test_prune_all_identical_keeps_first_by_tiebreak():
    e = mk([[1.0, 1.0]] * 4)
    pruned = prune_tuples(e, 2)
    assert [r.key() for r in pruned.ids] == [("t", 0), ("t", 1)]


def test_prune_preserves_input_order():
    rng = np.random.default_rng(0)
    e = mk(rng.normal(size=(10, 3)))
    pruned = prune_tuples(e, 6)
    rows = [r.row for r in pruned.ids]
    assert rows == sorted(rows)


def test_prune_is_per_table():
    # two tables with different means: scores computed against each table's own mean
    a = [[1.0, 0.0], [0.9, 0.1]]
    b = [[0.0, 1.0], [0.1, 0.9]]
    e = mk(a + b, tables=["ta", "ta", "tb", "tb"])
    pruned = prune_tuples(e, 2)
    kept_tables = {r.table for r in pruned.ids}
    assert kept_tables == {"ta", "tb"}  # one outlier per table, not both from one


def test_prune_never_drops_higher_scored_tuple():
    rng = np.random.default_rng(3)
    for trial in range(20):
        n = int(rng.integers(5, 25))
        e = mk(rng.normal(size=(n, 4)), tables=[f"t{i % 3}" for i in range(n)])
        s = int(rng.integers(1, n))
        pruned = prune_tuples(e, s)
        scores = {}
        for table, idx in e.by_table().items():
            mean = e.vectors[idx].mean(axis=0)
            for i in idx:
                scores[e.ids[i].key()] = cosine_distance(mean, e.vectors[i])
        kept = {r.key() for r in pruned.ids}
        dropped = {r.key() for r in e.ids} - kept
        if kept and dropped:
            assert max(scores[d] for d in dropped) <= min(scores[k] for k in kept) + 1e-12


# ---------------------------------------------------------------------------
# cluster medoids
# ---------------------------------------------------------------------------

def test_medoids_singletons_when_n_equals_pool():
    e = mk(np.random.default_rng(0).normal(size=(5, 3)))
    assert cluster_medoids(e, 5) == [0, 1, 2, 3, 4]


def test_medoids_two_tight_groups_bruteforce():
    rng = np.random.default_rng(1)
    g1 = np.array([1.0, 0.0]) + 0.01 * rng.normal(size=(4, 2))
    g2 = np.array([0.0, 1.0]) + 0.01 * rng.normal(size=(4, 2))
    e = mk(np.vstack([g1, g2]))
    medoids = cluster_medoids(e, 2)
    # brute-force medoid per group: member minimizing summed cosine distance
    for group_idx in (list(range(4)), list(range(4, 8))):
        d = pairwise_distances(e.vectors[group_idx])
        expected = group_idx[int(np.argmin(d.sum(axis=1)))]
        assert expected in medoids
    assert len(medoids) == 2


def test_medoids_clamp_warns():
    e = mk(np.random.default_rng(0).normal(size=(3, 2)))
    with pytest.warns(UserWarning, match="clamping"):
        out = cluster_medoids(e, 7)
    assert out == [0, 1, 2]


def test_medoids_identical_points_still_fill_clusters():
    e = mk([[1.0, 1.0]] * 6)
    out = cluster_medoids(e, 3)
    assert len(out) == 3


# ---------------------------------------------------------------------------
# ranking
# ---------------------------------------------------------------------------

EXAMPLE4 = np.array(
    [
        [0.30, 0.40, 0.50],  # t1
        [0.40, 0.50, 0.60],  # t2
        [0.40, 0.49, 0.58],  # t3
        [0.40, 0.48, 0.56],  # t4
        [0.01, 0.50, 0.60],  # t5
        [0.00, 0.30, 0.40],  # t6
    ]
)
EXAMPLE4_REFS = [TupleRef("x", i) for i in range(1, 7)]


def test_rank_example_ordering():
    ranked = rank_from_distances(EXAMPLE4, EXAMPLE4_REFS)
    rows = [s.ref.row for s in ranked]
    assert rows == [2, 3, 4, 1, 5, 6]
    t2, t4 = ranked[0], ranked[2]
    assert (t2.rank_score, t2.tie_score) == (0.40, 0.50)
    assert (t4.rank_score, t4.tie_score) == (0.40, 0.48)


def test_rank_single_query_collapses():
    e_q = mk([[1.0, 0.0]], name="q")
    cands = mk([[0.0, 1.0], [1.0, 1.0]])
    ranked = rank_candidates(cands, e_q)
    for s in ranked:
        assert s.rank_score == s.tie_score


def test_rank_query_copy_last():
    e_q = mk([[1.0, 0.0], [0.0, 1.0]], name="q")
    cands = mk([[1.0, 0.0], [-1.0, -1.0], [-1.0, 0.0]])
    ranked = rank_candidates(cands, e_q)
    assert ranked[-1].ref.key() == ("t", 0)
    assert ranked[-1].rank_score == 0.0


def test_rank_total_order_on_exact_ties():
    d = np.array([[0.5], [0.5], [0.5]])
    refs = [TupleRef("b", 1), TupleRef("a", 9), TupleRef("b", 0)]
    ranked = rank_from_distances(d, refs)
    assert [s.ref.key() for s in ranked] == [("a", 9), ("b", 0), ("b", 1)]


# ---------------------------------------------------------------------------
# main pipeline
# ---------------------------------------------------------------------------

def _angles(degrees):
    rad = np.deg2rad(np.asarray(degrees, dtype=float))
    return np.stack([np.cos(rad), np.sin(rad)], axis=1)


def test_dust_clamp_path_all_medoids():
    e_q = mk([[1.0, 0.0]], name="q")
    e_t = mk(_angles([10, 100, 190, 280]))
    res = diversify_dust(e_q, e_t, DiversifyParams(k=3, p=2))  # k*p > pool
    assert len(res.selected) == 3
    assert len({s.ref.key() for s in res.selected}) == 3


def test_dust_p1_orders_k_medoids():
    e_q = mk([[1.0, 0.0]], name="q")
    e_t = mk(_angles([10, 100, 190, 280, 15, 105]))
    res = diversify_dust(e_q, e_t, DiversifyParams(k=3, p=1))
    assert len(res.selected) == 3
    scores = [s.rank_score for s in res.selected]
    assert scores == sorted(scores, reverse=True)


def test_dust_requires_enough_tuples():
    e_q = mk([[1.0, 0.0]], name="q")
    e_t = mk([[0.0, 1.0]])
    with pytest.raises(DiversifyError):
        diversify_dust(e_q, e_t, DiversifyParams(k=2))


def test_dust_beats_random_on_duplicate_heavy_instance():
    inst = mixture_instance(
        n_query=3, n_tuples=40, dim=8, n_modes=15,
        duplicate_fraction=0.75, spread=0.02, seed=5,
    )
    params = DiversifyParams(k=3, s=10, p=2)
    dust_min = diversify_dust(inst.e_q, inst.e_t, params).metrics.min
    randoms = random_select(inst.e_t, 3, seeds=range(100), e_q=inst.e_q)
    wins = sum(1 for r in randoms if dust_min >= r.metrics.min - 1e-12)
    assert wins >= 95


def test_dust_deterministic():
    inst = mixture_instance(seed=9, n_tuples=80, n_modes=10)
    params = DiversifyParams(k=5, s=40, p=2)
    a = diversify_dust(inst.e_q, inst.e_t, params)
    b = diversify_dust(inst.e_q, inst.e_t, params)
    assert a.as_dict() == b.as_dict()


# ---------------------------------------------------------------------------
# greedy marginal contribution
# ---------------------------------------------------------------------------

def _reference_greedy(d, rel, k, lam):
    """Independent step-by-step simulation of the documented contribution rule."""
    n = len(rel)
    picks = []
    while len(picks) < k:
        best, best_score = None, -math.inf
        for t in range(n):
            if t in picks:
                continue
            score = (1 - lam) * max(k - 1, 1) * rel[t]
            score += 2 * lam * sum(d[t][r] for r in picks)
            m_future = k - 1 - len(picks)
            denom = n - 1 - len(picks)
            if m_future > 0 and denom > 0:
                unsel = [u for u in range(n) if u not in picks and u != t]
                score += lam * m_future * sum(d[t][u] for u in unsel) / denom
            if score > best_score:
                best, best_score = t, score
        picks.append(best)
    return picks


def test_gmc_hand_simulation_five_points():
    pts = _angles([0, 40, 90, 150, 200])
    e_q = mk([[1.0, 0.0]], name="q")
    e_t = mk(pts)
    d = pairwise_distances(pts)
    rel = pairwise_distances(pts, np.array([[1.0, 0.0]])).mean(axis=1)
    for lam in (0.0, 0.3, 0.5, 1.0):
        for k in (1, 2, 3, 5):
            ours = greedy_marginal_sequence(d, rel, k, lam)
            assert ours == _reference_greedy(d, rel, k, lam), (lam, k)


def test_gmc_lambda1_k2_returns_greedy_max_pair():
    pts = _angles([0, 40, 90, 150, 200])
    d = pairwise_distances(pts)
    rel = np.zeros(5)
    picks = greedy_marginal_sequence(d, rel, 2, 1.0)
    # first pick maximizes summed distance to the others
    assert picks[0] == int(np.argmax(d.sum(axis=1)))
    # second pick is the farthest point from the first
    assert picks[1] == int(np.argmax(d[picks[0]]))


def test_gmc_k1_lambda0_argmax_relevance():
    e_q = mk([[1.0, 0.0]], name="q")
    pts = _angles([10, 120, 185])
    e_t = mk(pts)
    res = gmc(e_q, e_t, k=1, lam=0.0)
    rel = pairwise_distances(pts, np.array([[1.0, 0.0]])).mean(axis=1)
    assert res.selected[0].ref.row == int(np.argmax(rel))


def test_gmc_identical_tuples_deterministic_tiebreak():
    e_q = mk([[1.0, 1.0]], name="q")
    e_t = mk([[2.0, 1.0]] * 5, tables=["b", "a", "b", "a", "a"])
    res = gmc(e_q, e_t, k=2)
    assert {s.ref.key() for s in res.selected} == {("a", 0), ("a", 1)}


def test_gmc_deterministic():
    inst = mixture_instance(seed=2, n_tuples=60, n_modes=8)
    a = gmc(inst.e_q, inst.e_t, 5)
    b = gmc(inst.e_q, inst.e_t, 5)
    assert a.as_dict() == b.as_dict()


# ---------------------------------------------------------------------------
# gne
# ---------------------------------------------------------------------------

def test_gne_reaches_objective_optimum_on_tiny_instances():
    rng = np.random.default_rng(17)
    hits = 0
    for trial in range(10):
        pts = rng.normal(size=(8, 3))
        q = rng.normal(size=(2, 3))
        e_q = mk(q, name="q")
        e_t = mk(pts)
        lam = 0.5
        res = gne(e_q, e_t, k=3, lam=lam, iterations=50, seed=trial)
        d = pairwise_distances(pts)
        rel = pairwise_distances(pts, q).mean(axis=1)
        best = max(
            mmr_objective(d, rel, list(c), 3, lam)
            for c in itertools.combinations(range(8), 3)
        )
        got = mmr_objective(d, rel, [s.ref.row for s in res.selected], 3, lam)
        if got >= best - 1e-9:
            hits += 1
    assert hits >= 8


def test_gne_seed_determinism():
    inst = mixture_instance(seed=4, n_tuples=30, n_modes=8)
    a = gne(inst.e_q, inst.e_t, 4, seed=11)
    b = gne(inst.e_q, inst.e_t, 4, seed=11)
    assert a.as_dict() == b.as_dict()


def test_gne_k_equals_pool_returns_everything():
    e_q = mk([[1.0, 0.0]], name="q")
    e_t = mk(_angles([5, 95, 185]))
    res = gne(e_q, e_t, k=3)
    assert {s.ref.row for s in res.selected} == {0, 1, 2}


# ---------------------------------------------------------------------------
# clt / topsim / random
# ---------------------------------------------------------------------------

def test_clt_k_equals_pool():
    e_q = mk([[1.0, 0.0]], name="q")
    e_t = mk(_angles([5, 95, 185]))
    res = clt(e_q, e_t, 3)
    assert {s.ref.row for s in res.selected} == {0, 1, 2}


def test_clt_two_groups_picks_group_medoids():
    rng = np.random.default_rng(6)
    g1 = np.array([1.0, 0.0]) + 0.01 * rng.normal(size=(3, 2))
    g2 = np.array([-1.0, 0.3]) + 0.01 * rng.normal(size=(3, 2))
    e_q = mk([[0.0, 1.0]], name="q")
    e_t = mk(np.vstack([g1, g2]))
    res = clt(e_q, e_t, 2)
    rows = {s.ref.row for s in res.selected}
    assert len(rows & {0, 1, 2}) == 1
    assert len(rows & {3, 4, 5}) == 1


def test_clt_set_equals_dust_p1_nopruning():
    inst = mixture_instance(seed=8, n_tuples=50, n_modes=10)
    k = 6
    dust_res = diversify_dust(inst.e_q, inst.e_t, DiversifyParams(k=k, s=None, p=1))
    clt_res = clt(inst.e_q, inst.e_t, k)
    assert {s.ref.key() for s in dust_res.selected} == {s.ref.key() for s in clt_res.selected}


def test_topsim_selects_most_similar():
    e_q = mk([[1.0, 0.0]], name="q")
    e_t = mk(_angles([5, 60, 170]))
    res = top_similar(e_q, e_t, 1)
    assert res.selected[0].ref.row == 0


def test_random_select_reproducible_and_counts():
    e_t = mk(np.random.default_rng(0).normal(size=(20, 4)))
    results = random_select(e_t, 5, seeds=[1, 2, 3, 4, 5])
    assert len(results) == 5
    again = random_select(e_t, 5, seeds=[1, 2, 3, 4, 5])
    for a, b in zip(results, again):
        assert [s.ref.key() for s in a.selected] == [s.ref.key() for s in b.selected]


def test_random_select_k_equals_pool():
    e_t = mk(np.random.default_rng(0).normal(size=(4, 3)))
    (res,) = random_select(e_t, 4, seeds=[99])
    assert {s.ref.row for s in res.selected} == {0, 1, 2, 3}


# ---------------------------------------------------------------------------
# brute force oracle
# ---------------------------------------------------------------------------

def test_brute_force_k_equals_pool():
    e_q = mk([[1.0, 0.0]], name="q")
    e_t = mk(_angles([5, 95, 185]))
    res = brute_force_best(e_q, e_t, 3)
    assert {s.ref.row for s in res.selected} == {0, 1, 2}


def test_brute_force_square_maxmin_antipodal():
    # square in the xy-plane; query on the z-axis is exactly distance 1 from
    # all four corners, so every pair scores 1 and the lexicographic tie-break
    # lands on the first combination: the antipodal pair (0, 1)
    e_q = mk([[0.0, 0.0, 1.0]], name="q")
    e_t = mk([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
    res = brute_force_best(e_q, e_t, 2, objective="max-min")
    picked = {s.ref.row for s in res.selected}
    assert picked == {0, 1}
    v = e_t.vectors
    assert cosine_distance(v[0], v[1]) == pytest.approx(2.0)


def test_brute_force_matches_independent_enumeration():
    rng = np.random.default_rng(21)
    for trial in range(5):
        q = rng.normal(size=(2, 3))
        pts = rng.normal(size=(7, 3))
        e_q, e_t = mk(q, name="q"), mk(pts)
        for objective in ("max-sum", "max-min"):
            res = brute_force_best(e_q, e_t, 3, objective=objective)
            def score(combo):
                sel = pts[list(combo)]
                cross = [cosine_distance(a, b) for a in q for b in sel]
                within = [
                    cosine_distance(sel[i], sel[j])
                    for i in range(3)
                    for j in range(i + 1, 3)
                ]
                if objective == "max-sum":
                    return (sum(cross) + sum(within)) / (len(q) + 3)
                return min(cross + within)
            best = max(score(c) for c in itertools.combinations(range(7), 3))
            assert score(tuple(sorted(s.ref.row for s in res.selected))) == pytest.approx(best, abs=1e-12)


def test_brute_force_guard():
    e_q = mk([[1.0, 0.0]], name="q")
    e_t = mk(np.random.default_rng(0).normal(size=(40, 2)))
    with pytest.raises(DiversifyError, match="guard"):
        brute_force_best(e_q, e_t, 15, guard=1000)


def test_heuristics_never_beat_brute_force():
    rng = np.random.default_rng(33)
    for trial in range(10):
        pts = rng.normal(size=(9, 3))
        q = rng.normal(size=(2, 3))
        e_q, e_t = mk(q, name="q"), mk(pts)
        best_sum = brute_force_best(e_q, e_t, 3, objective="max-sum").metrics.average
        best_min = brute_force_best(e_q, e_t, 3, objective="max-min").metrics.min
        params = DiversifyParams(k=3, p=2)
        for res in (
            diversify_dust(e_q, e_t, params),
            gmc(e_q, e_t, 3),
            gne(e_q, e_t, 3, seed=trial),
            clt(e_q, e_t, 3),
            top_similar(e_q, e_t, 3),
        ):
            assert res.metrics.average <= best_sum + 1e-9
            assert res.metrics.min <= best_min + 1e-9


# ---------------------------------------------------------------------------
# shared invariants
# ---------------------------------------------------------------------------

def _all_algorithms(e_q, e_t, k):
    yield diversify_dust(e_q, e_t, DiversifyParams(k=k, p=2))
    yield gmc(e_q, e_t, k)
    yield gne(e_q, e_t, k, seed=0)
    yield clt(e_q, e_t, k)
    yield top_similar(e_q, e_t, k)
    yield from random_select(e_t, k, seeds=[0], e_q=e_q)
    yield brute_force_best(e_q, e_t, k)


def test_output_invariants_for_all_algorithms():
    inst = mixture_instance(seed=14, n_tuples=30, n_modes=9)
    pool_keys = {r.key() for r in inst.e_t.ids}
    for res in _all_algorithms(inst.e_q, inst.e_t, 4):
        keys = [s.ref.key() for s in res.selected]
        assert len(keys) == 4, res.algorithm
        assert len(set(keys)) == 4, res.algorithm
        assert set(keys) <= pool_keys, res.algorithm
        pairs = [(s.rank_score, s.tie_score) for s in res.selected]
        assert pairs == sorted(pairs, reverse=True), res.algorithm
        assert res.metrics is not None
