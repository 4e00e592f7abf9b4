import numpy as np
import pytest

from parityqaoa import engine, layout as lay, rcc, schedule as sch, sk

from oracles import brute_completion_exists


def test_bulk_onsite_cone_p1():
    L = lay.build(8)
    q = L.index[(2, 5)]
    cone = rcc.extract(L, frozenset((q,)), 1)
    assert len(cone.qubit_set) == 9
    assert cone.j_support == frozenset((q,))
    assert len(cone.plaquette_set) == 4


def test_bulk_onsite_cone_sizes_grow_as_squares():
    L = lay.build(12)
    q = L.index[(3, 8)]
    for p in (1, 2):
        cone = rcc.extract(L, frozenset((q,)), p)
        assert len(cone.qubit_set) == (2 * p + 1) ** 2


def test_bulk_plaquette_cone_p1():
    L = lay.build(8)
    plq_index = next(
        k for k, plq in enumerate(L.plaquettes) if plq.label == (1, 5)
    )
    cone = rcc.extract(L, frozenset(L.plaquettes[plq_index].members), 1)
    assert len(cone.qubit_set) == 16
    assert len(cone.j_support) == 4


def test_depth_zero_cone_is_empty():
    L = lay.build(5)
    cone = rcc.extract(L, frozenset((2,)), 0)
    assert cone.gates == ()
    assert cone.qubit_set == frozenset((2,))
    state = engine.uniform_state(sorted(cone.qubit_set))
    assert engine.expect(state, engine.ZObservable((2,))) == pytest.approx(0.0)


def test_extract_deterministic():
    L = lay.build(7)
    a = rcc.extract(L, frozenset((3, 11)), 2)
    b = rcc.extract(L, frozenset((11, 3)), 2)
    assert a.gates == b.gates
    assert a.qubit_set == b.qubit_set
    assert a.j_support == b.j_support


def test_extract_requires_support():
    L = lay.build(5)
    with pytest.raises(ValueError):
        rcc.extract(L, frozenset(), 1)


def test_gates_form_growing_cone():
    L = lay.build(8)
    q = L.index[(2, 5)]
    cone = rcc.extract(L, frozenset((q,)), 3)
    per_layer = {}
    for gate in cone.gates:
        per_layer.setdefault(gate.layer, set()).add((gate.kind, gate.target))
    sizes = [len(per_layer[l]) for l in sorted(per_layer)]
    assert sizes == sorted(sizes, reverse=True)  # earliest layer retains most


def test_every_term_rcc_equals_full_n6_p1():
    L = lay.build(6)
    inst = sk.sample(6, seed=44)
    rng = np.random.default_rng(10)
    draw = lambda: tuple(rng.uniform(-np.pi / 2, np.pi / 2, size=1))
    s = sch.AngleSchedule(draw(), draw(), draw())
    state = engine.evolve(L, inst, s)
    for obs in engine.pe_terms(L, inst, 3.0) + engine.st_terms(L, inst):
        cone = rcc.extract(L, frozenset(obs.support), 1)
        restricted = engine.evolve(L, inst, s, gate_filter=cone)
        assert engine.expect(restricted, obs) == pytest.approx(
            engine.expect(state, obs), abs=1e-10
        )


# --- GF(2) helpers ----------------------------------------------------------


def test_gf2_rank_examples():
    assert rcc.gf2_rank([0b001, 0b010, 0b011]) == 2
    assert rcc.gf2_rank([0b111, 0b101, 0b010]) == 2
    assert rcc.gf2_rank([]) == 0


def test_gf2_in_span_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(30):
        rows = [int(rng.integers(1, 1 << 10)) for _ in range(rng.integers(1, 9))]
        target = int(rng.integers(0, 1 << 10))
        assert rcc.gf2_in_span(target, rows) == brute_completion_exists(target, rows)


def test_completion_agrees_with_subset_search_on_cones():
    L = lay.build(7)
    rng = np.random.default_rng(6)
    for _ in range(10):
        i, j, t = rng.choice(7, size=3, replace=False)
        i, j = min(i, j), max(i, j)
        qa = L.qubit(i, t)
        qb = L.qubit(t, j)
        cq = L.index[(i, j)]
        cone = rcc.extract(L, frozenset((qa, qb)), 2)
        if len(cone.plaquette_set) > 12:
            continue
        rows = [
            sum(1 << q for q in L.plaquettes[pi].members)
            for pi in sorted(cone.plaquette_set)
        ]
        target = (1 << qa) ^ (1 << qb) ^ (1 << cq)
        assert rcc.gf2_in_span(target, rows) == brute_completion_exists(target, rows)


# --- vanishing criteria ------------------------------------------------------


def test_appendix_witness_pair():
    L = lay.build(10)
    obs = (L.index[(2, 7)], L.index[(7, 8)])
    assert rcc.is_vanishing_avg(L, obs, (2, 8), 2) is True
    assert rcc.is_vanishing_avg(L, obs, (2, 8), 3) is False


def test_coupling_outside_cone_vanishes():
    L = lay.build(10)
    obs = (L.index[(0, 1)],)
    assert rcc.is_vanishing_avg(L, obs, (7, 9), 1) is True


def test_onsite_own_coupling_never_vanishes():
    L = lay.build(6)
    for q, pair in enumerate(L.qubits):
        assert rcc.is_vanishing_avg(L, (q,), pair, 1) is False


def test_jsupport_is_clipped_chebyshev_ball():
    # The cheap radius test used to prune the counting loops must agree
    # with the exact backward pass for every qubit, depth, and size.
    for n in (5, 7, 9):
        L = lay.build(n)
        for p in (1, 2, 3, 4):
            for q, (a, b) in enumerate(L.qubits):
                cone = rcc.extract(L, frozenset((q,)), p)
                ball = {
                    L.index[(i, j)]
                    for i, j in L.qubits
                    if max(abs(i - a), abs(j - b)) <= p - 1
                }
                assert cone.j_support == frozenset(ball)


# --- counting and bounds -----------------------------------------------------


@pytest.mark.parametrize("n", range(3, 21))
def test_count_zero_at_depth_one(n):
    assert rcc.count_nonvanishing_2body(n, 1) == 0


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_count_saturates_at_depth_n_minus_1(n):
    K = n * (n - 1) // 2
    assert rcc.count_nonvanishing_2body(n, max(n - 1, 1) if n > 1 else 1) == (
        (n - 2) * K if n >= 3 else 0
    )
    assert rcc.count_nonvanishing_2body(n, n) == (n - 2) * K


def test_count_monotone_in_p_and_bounded():
    for n in (5, 6, 7):
        K = n * (n - 1) // 2
        counts = [rcc.count_nonvanishing_2body(n, p) for p in range(1, n + 1)]
        assert counts == sorted(counts)
        assert all(c <= (n - 2) * K for c in counts)


def test_completable_not_larger_than_support_only():
    for n in (6, 8, 10):
        for p in (2, 3):
            strict = rcc.count_nonvanishing_2body(n, p, "completable")
            loose = rcc.count_nonvanishing_2body(n, p, "support_only")
            assert strict <= loose


@pytest.mark.parametrize("p", [2, 3])
def test_growth_exactly_linear_beyond_threshold(p):
    threshold = 3 * p - 1
    counts = {n: rcc.count_nonvanishing_2body(n, p) for n in range(threshold, threshold + 7)}
    for n in range(threshold + 1, threshold + 5):
        second = counts[n + 2] - 2 * counts[n + 1] + counts[n]
        assert second == 0, f"n={n}, p={p}"


def test_count_validation():
    with pytest.raises(ValueError):
        rcc.count_nonvanishing_2body(2, 1)
    with pytest.raises(ValueError):
        rcc.count_nonvanishing_2body(5, 0)
    with pytest.raises(ValueError):
        rcc.count_nonvanishing_2body(5, 1, "bogus")


def test_upper_bound_depth_one_formula():
    for n in (4, 9, 16):
        assert rcc.upper_bound_perf(n, 1) == pytest.approx(n**-0.5 - n**-1.5, abs=1e-15)


def test_upper_bound_saturated_small_n():
    assert rcc.upper_bound_perf(4, 3) == pytest.approx(0.75)


def test_pair_count_zero_at_depth_one():
    assert rcc.count_nonvanishing_pairs(6, 1) == 0


def test_pair_count_bounded_by_n6():
    n = 8
    assert rcc.count_nonvanishing_pairs(n, 2) <= n**6


def test_pair_count_refusal():
    with pytest.raises(ValueError):
        rcc.count_nonvanishing_pairs(21, 2)


def test_count_report_rows():
    rows = rcc.count_report_rows([4, 5], [1, 2])
    assert len(rows) == 4
    assert rows[0] == (4, 1, "completable", 0, pytest.approx(0.375))
