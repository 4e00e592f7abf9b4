import numpy as np
import pytest

from parityqaoa import engine, layout as lay, rcc, schedule as sch, sk

from oracles import naive_expect, naive_vanilla_energy

TRIVIAL = sch.AngleSchedule((-np.pi / 4,), (np.pi / 4,), (0.0,))


def random_schedule(rng, p):
    draw = lambda: tuple(rng.uniform(-np.pi / 2, np.pi / 2, size=p))
    return sch.AngleSchedule(draw(), draw(), draw())


def test_zero_schedule_is_uniform():
    L = lay.build(4)
    inst = sk.sample(4, seed=1)
    state = engine.evolve(L, inst, sch.zero(2))
    assert np.allclose(state.amplitudes, 1.0 / np.sqrt(64), atol=1e-14)


def test_norm_preserved_each_layer():
    L = lay.build(5)
    inst = sk.sample(5, seed=3)
    rng = np.random.default_rng(0)
    for p in (1, 2, 3):
        state = engine.evolve(L, inst, random_schedule(rng, p))
        assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_product_state_onsite_formula():
    # With no constraint angle the state is a product and each <Z> has the
    # single-qubit closed form sin(2 beta) sin(2 gamma J).
    L = lay.build(5)
    inst = sk.sample(5, seed=12)
    beta, gamma = 0.37, -0.61
    s = sch.AngleSchedule((gamma,), (beta,), (0.0,))
    state = engine.evolve(L, inst, s)
    for q, pair in enumerate(L.qubits):
        expected = np.sin(2 * beta) * np.sin(2 * gamma * inst.couplings[pair])
        assert engine.expect(state, engine.ZObservable((q,))) == pytest.approx(
            expected, abs=1e-10
        )


def test_expect_on_uniform_state_is_zero():
    state = engine.uniform_state(range(6))
    assert engine.expect(state, engine.ZObservable((0, 3))) == pytest.approx(0.0, abs=1e-14)


def test_expect_on_encoded_basis_state():
    L = lay.build(4)
    rng = np.random.default_rng(8)
    cfg = rng.choice([-1, 1], size=4)
    pc = lay.encode(L, cfg)
    index = sum(1 << q for q in range(6) if pc[q] == -1)
    amp = np.zeros(64, dtype=complex)
    amp[index] = 1.0
    state = engine.StateVector(amp, tuple(range(6)))
    for q, (i, j) in enumerate(L.qubits):
        assert engine.expect(state, engine.ZObservable((q,))) == pytest.approx(
            cfg[i] * cfg[j]
        )


def test_expect_matches_naive_loop():
    rng = np.random.default_rng(5)
    amp = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    amp /= np.linalg.norm(amp)
    state = engine.StateVector(amp, tuple(range(6)))
    for support in [(0,), (1, 4), (0, 2, 5), (1, 2, 3, 4)]:
        obs = engine.ZObservable(support, 1.7)
        assert engine.expect(state, obs) == pytest.approx(
            naive_expect(state, support, 1.7), abs=1e-12
        )


def test_expect_outside_register():
    state = engine.uniform_state((2, 5, 7))
    with pytest.raises(ValueError):
        engine.expect(state, engine.ZObservable((3,)))


def test_energy_pe_zero_schedule():
    L = lay.build(4)
    inst = sk.sample(4, seed=9)
    assert engine.energy_pe(L, inst, sch.zero(1), 3.0) == pytest.approx(0.0, abs=1e-12)


def test_energy_pe_coupling_term_at_trivial_angles():
    L = lay.build(4)
    for seed in range(4):
        inst = sk.sample(4, seed=seed)
        state = engine.evolve(L, inst, TRIVIAL)
        coupling_sum = sum(
            engine.expect(state, engine.ZObservable((q,), inst.couplings[pair]))
            for q, pair in enumerate(L.qubits)
        )
        assert coupling_sum == pytest.approx(-6.0, abs=1e-10)


def test_energy_pe_rejects_negative_strength():
    L = lay.build(4)
    inst = sk.sample(4, seed=0)
    with pytest.raises(ValueError):
        engine.energy_pe(L, inst, TRIVIAL, -1.0)


def test_full_vs_rcc_backends_agree():
    L = lay.build(6)
    inst = sk.sample(6, seed=2)
    rng = np.random.default_rng(77)
    for p in (1, 2):
        s = random_schedule(rng, p)
        for kind in ("pe", "st"):
            if kind == "pe":
                a = engine.energy_pe(L, inst, s, 3.0, backend="full")
                b = engine.energy_pe(L, inst, s, 3.0, backend="rcc")
            else:
                a = engine.energy_st(L, inst, s, backend="full")
                b = engine.energy_st(L, inst, s, backend="rcc")
            assert a == pytest.approx(b, abs=1e-10)


def test_perf_st_mean_over_all_n4_instances():
    L = lay.build(4)
    values = [engine.perf_st(L, inst, TRIVIAL) for inst in sk.enumerate_all(4)]
    assert np.mean(values) == pytest.approx(0.375, abs=1e-12)


def test_perf_st_zero_schedule():
    L = lay.build(4)
    inst = sk.sample(4, seed=4)
    assert engine.perf_st(L, inst, sch.zero(1)) == pytest.approx(0.0, abs=1e-12)


def test_st_terms_match_direct_sum():
    # The split form must equal the raw double sum over lines.
    L = lay.build(5)
    inst = sk.sample(5, seed=6)
    s = random_schedule(np.random.default_rng(3), 2)
    state = engine.evolve(L, inst, s)
    direct = 0.0
    for t in range(5):
        for (i, j), coupling in inst.couplings.items():
            support = []
            if i != t:
                support.append(L.qubit(i, t))
            if j != t:
                support.append(L.qubit(t, j))
            direct += coupling * engine.expect(
                state, engine.ZObservable(tuple(set(support)))
            )
    direct /= 5
    assert engine.energy_st(L, inst, s) == pytest.approx(direct, abs=1e-10)


def test_expected_broken_on_uniform():
    L = lay.build(5)
    state = engine.uniform_state(range(L.num_qubits))
    assert engine.expected_broken_constraints(L, state) == pytest.approx(
        L.num_plaquettes / 2
    )


def test_resource_cap_full_register():
    L = lay.build(9)  # 36 qubits
    inst = sk.sample(9, seed=0)
    with pytest.raises(engine.ResourceLimitError):
        engine.evolve(L, inst, TRIVIAL)


def test_subset_filter_consistency():
    L = lay.build(5)
    inst = sk.sample(5, seed=1)
    cone = rcc.extract(L, frozenset((3,)), 1)
    state = engine.evolve(L, inst, TRIVIAL, qubit_subset=set(cone.qubit_set), gate_filter=cone)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        engine.evolve(L, inst, TRIVIAL, qubit_subset={0, 1}, gate_filter=cone)
    with pytest.raises(ValueError):
        engine.evolve(L, inst, TRIVIAL, qubit_subset={0, 1})


def test_vanilla_zero_angles():
    inst = sk.sample(6, seed=13)
    assert engine.vanilla_perf(inst, (0.0,), (0.0,)) == pytest.approx(0.0, abs=1e-12)


def test_vanilla_matches_dense_matrix_oracle():
    inst = sk.sample(8, seed=19)
    gammas, betas = (0.42, -0.17), (0.33, 0.51)
    assert engine.vanilla_energy(inst, gammas, betas) == pytest.approx(
        naive_vanilla_energy(inst, gammas, betas), abs=1e-10
    )


def test_vanilla_resource_cap():
    coup = {p: 1.0 for p in sk.pair_list(25)}
    inst = sk.SkInstance(25, coup, 0)
    with pytest.raises(engine.ResourceLimitError):
        engine.evolve_vanilla(inst, (0.1,), (0.1,))


def test_vanilla_evaluator_matches_functions():
    inst = sk.sample(7, seed=23)
    ev = engine.VanillaEvaluator(inst)
    gammas, betas = np.array([0.3, -0.2]), np.array([0.1, 0.4])
    assert ev.energy(gammas, betas) == pytest.approx(
        engine.vanilla_energy(inst, gammas, betas), abs=1e-12
    )
