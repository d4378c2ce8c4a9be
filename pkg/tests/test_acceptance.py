"""Toolkit acceptance suite.

One test per acceptance criterion, each enforcing its stated tolerance and
runtime budget and printing a PASS line (run with ``pytest -s`` to see the
lines). Criteria:

 1. scoring matches an exact brute-force oracle on 200 random matrices
 2. detectable-error cardinality closed form on the same 200 matrices
 3. four-class fixture facts
 4. exhaustive self-error-detection semantics on the fixture
 5. scheme dominance on 50 simulated 43-class streams + constant R1 rows
 6. detection monotonicity in the selection size + 3-sigma agreement with
    the analytic ceiling under oracle explanations
 7. loss-gradient finite-difference check
 8. FGSM identity/bounds and rising error counts over epsilon
 9. end-to-end: self-explainable + regular models on disjoint splits,
    attacked at three epsilons; the combined scheme dominates ensemble-only

The adapter round-trip criterion lives in the secondary package's own test
suite (adapter/tests); this suite is self-contained.
"""

import time
from itertools import combinations

import numpy as np
import pytest

import oracles
from conftest import (
    A_COLOR_RED,
    A_PARALLEL,
    A_TWO_CARS,
    C_END_NO_PASSING,
    C_END_SPEED_80,
    C_NO_PASSING,
    make_matrix,
)
from sedkit import (
    SCHEMES,
    PredictionRecord,
    SimulatorSpec,
    TrainConfig,
    associated_classes,
    detectable_errors,
    evaluate_scheme,
    explanation_of,
    fgsm_perturb,
    importance_score,
    jaccard,
    loss,
    make_task,
    max_ped_oracle,
    overall_scores,
    predict_batch,
    run_scheme_sweep,
    sample_dataset,
    sed_flag,
    similarity_score,
    simulate_records,
    train_sgd,
)
from sedkit.toymodel import SEModelParams, init_params, input_gradient, loss_and_param_grads
from sedkit.workflow import SimulatorBackend

REL = 1e-12


def report(n, text):
    print(f"\nACCEPTANCE {n} PASS: {text}")


@pytest.fixture(scope="module")
def random_matrices():
    """200 random valid incidence structures with N <= 6, M in [2, 6]."""
    rng = np.random.default_rng(20240810)
    out = []
    for _ in range(200):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(2, 7))
        out.append(oracles.random_incidence(rng, n, m))
    return out


@pytest.fixture(scope="module")
def big_matrix():
    """Seeded 43-class, 12-concept matrix for the scheme evaluations."""
    rng = np.random.default_rng(43)
    return make_matrix(oracles.random_incidence(rng, 43, 12))


def test_criterion_1_scoring_oracle_equivalence(random_matrices):
    start = time.monotonic()
    for inc in random_matrices:
        m = make_matrix(inc)
        table = overall_scores(m)
        s_imp, s_sim, s_ov, _ = oracles.score_table(inc)
        for row in table.rows:
            assert row.s_imp == pytest.approx(float(s_imp[row.concept]), rel=REL)
            assert row.s_sim == pytest.approx(float(s_sim[row.concept]), rel=REL)
            assert row.s_ov == pytest.approx(float(s_ov[row.concept]), rel=REL)
            assert row.s_imp == pytest.approx(importance_score(m, row.concept), rel=REL)
            assert row.s_sim == pytest.approx(similarity_score(m, row.concept), rel=REL)
    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    report(1, f"200 matrices match the exact oracle at 1e-12 ({elapsed:.1f}s)")


def test_criterion_2_deterr_closed_form(random_matrices):
    start = time.monotonic()
    for inc in random_matrices:
        m = make_matrix(inc)
        n = m.n_classes
        for a in range(m.n_concepts):
            pairs = detectable_errors(m, a)
            assert pairs == oracles.det_err_pairs(inc, a)
            g = len(associated_classes(m, a))
            assert len(pairs) == 2 * g * (n - g)
    elapsed = time.monotonic() - start
    assert elapsed < 5.0
    report(2, f"|detectable errors| = 2g(N-g) on all concepts ({elapsed:.1f}s)")


def test_criterion_3_fixture_facts(f4):
    got = {f4.class_names[j] for j in associated_classes(f4, A_TWO_CARS)}
    assert got == {"No passing", "End of no passing zone"}
    pairs = detectable_errors(f4, A_TWO_CARS)
    assert (C_NO_PASSING, C_END_SPEED_80) in pairs
    assert (C_NO_PASSING, C_END_NO_PASSING) not in pairs
    assert (
        jaccard(detectable_errors(f4, A_COLOR_RED), detectable_errors(f4, A_PARALLEL))
        == 1.0
    )
    report(3, "fixture association, detectability, and duplicate-set facts hold")


def test_criterion_4_sed_semantics_exhaustive(f4):
    start = time.monotonic()
    n = f4.n_classes
    for r in range(1, f4.n_concepts + 1):
        for sel in combinations(range(f4.n_concepts), r):
            expl = [explanation_of(f4, c, sel) for c in range(n)]
            detected = set()
            for truth in range(n):
                for predicted in range(n):
                    flagged = sed_flag(f4, sel, predicted, expl[truth])
                    assert flagged == (expl[predicted] != expl[truth])
                    if truth != predicted and flagged:
                        detected.add((truth, predicted))
            brute = {
                (j, k)
                for j in range(n)
                for k in range(n)
                if j != k and expl[j] != expl[k]
            }
            assert detected == brute
            assert len(detected) == round(max_ped_oracle(f4, sel) * n * (n - 1))
    elapsed = time.monotonic() - start
    assert elapsed < 1.0
    report(4, f"flag fires iff explanations differ, all selections ({elapsed:.2f}s)")


def test_criterion_5_scheme_dominance(big_matrix):
    m = big_matrix
    selected = overall_scores(m).top(5)
    spec = SimulatorSpec(
        samples=10000, p_err=0.3, explanation="noisy", flip_q=0.1,
        p_err_b=0.25, copy_prob=0.15,
    )
    violations = 0
    for seed in range(50):
        records = simulate_records(m, selected, spec, seed)
        reports = {s: evaluate_scheme(s, m, selected, records) for s in SCHEMES}
        combined = reports["SE+R1"].err_detected
        if combined < reports["SE"].err_detected or combined < reports["R1"].err_detected:
            violations += 1
    assert violations == 0
    sweep = run_scheme_sweep(
        m, ["R1"], SimulatorBackend(spec), seed=7, k_range=list(range(1, 13))
    )
    r1_peds = {row.p_ed for row in sweep.rows}
    assert len(r1_peds) == 1
    report(5, "SE+R1 dominated on 50/50 streams; R1 constant across k")


def test_criterion_6_se_monotonicity_and_ceiling(big_matrix):
    start = time.monotonic()
    m = big_matrix
    ranking = overall_scores(m).ranking()
    spec = SimulatorSpec(samples=20000, p_err=0.5)
    for seed in (101, 202, 303):
        previous = -1.0
        for k in range(1, m.n_concepts + 1):
            selected = ranking[:k]
            records = simulate_records(m, selected, spec, seed)
            rep = evaluate_scheme("SE", m, selected, records)
            assert rep.p_ed >= previous - 1e-15, f"seed {seed}, k {k}"
            previous = rep.p_ed
            ceiling = max_ped_oracle(m, selected)
            sd = np.sqrt(ceiling * (1.0 - ceiling) / rep.err_total)
            assert abs(rep.p_ed - ceiling) <= 3.0 * sd + 1e-15, f"seed {seed}, k {k}"
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    report(6, f"P_ed non-decreasing in k and within 3 sigma of the ceiling ({elapsed:.1f}s)")


def test_criterion_7_gradient_check():
    rng = np.random.default_rng(1717)
    for trial in range(20):
        d = int(rng.integers(2, 9))
        hid = int(rng.integers(2, 9))
        n_cls = int(rng.integers(2, 6))
        n_con = int(rng.integers(0, min(5, 10 - n_cls) + 1))
        params = init_params(d, (hid,), n_cls, n_con, rng)
        x = rng.uniform(0, 1, size=d)
        y = rng.integers(0, 2, size=n_cls + n_con).astype(float)

        _, gw, gb = loss_and_param_grads(params, x, y)
        for l in range(len(params.weights)):
            def loss_w(arr, l=l):
                ws = list(params.weights)
                ws[l] = arr
                return loss(SEModelParams(tuple(ws), params.biases, n_cls, n_con), x, y)

            def loss_b(arr, l=l):
                bs = list(params.biases)
                bs[l] = arr
                return loss(SEModelParams(params.weights, tuple(bs), n_cls, n_con), x, y)

            for got, fn, ref in (
                (gw[l], loss_w, params.weights[l]),
                (gb[l], loss_b, params.biases[l]),
            ):
                fd = oracles.finite_diff(fn, ref, step=1e-5)
                err = np.linalg.norm(got - fd)
                assert err <= 1e-4 * (np.linalg.norm(got) + np.linalg.norm(fd) + 1e-8)

        fd_x = oracles.finite_diff(lambda arr: loss(params, arr, y), x, step=1e-5)
        gx = input_gradient(params, x, y)
        err = np.linalg.norm(gx - fd_x)
        assert err <= 1e-4 * (np.linalg.norm(gx) + np.linalg.norm(fd_x) + 1e-8)
    report(7, "analytic gradients match central differences (20 configs)")


@pytest.fixture(scope="module")
def fgsm_setup():
    rng = np.random.default_rng(123)
    inc = oracles.random_incidence(rng, 6, 4)
    m = make_matrix(inc)
    task = make_task(m, input_dim=16, noise_scale=0.15, seed=1)
    cfg = TrainConfig(
        selected=(0, 1), hidden=(24,), epochs=60, seed=2, n_train=600
    )
    params = train_sgd(task, cfg).params
    return m, task, params


def test_criterion_8_fgsm_behavior(fgsm_setup):
    start = time.monotonic()
    _, task, params = fgsm_setup
    X, Y, truth = sample_dataset(task, (0, 1), 500, 777)

    assert np.array_equal(fgsm_perturb(params, X, Y, 0.0), X)

    counts = []
    for eps in (0.05, 0.1, 0.15):
        X_adv = fgsm_perturb(params, X, Y, eps)
        assert np.abs(X_adv - X).max() <= eps + 1e-12
        assert X_adv.min() >= 0.0 and X_adv.max() <= 1.0
        cls, _ = predict_batch(params, X_adv)
        counts.append(int(np.sum(cls != truth)))

    inversions = [
        counts[i] - counts[i + 1]
        for i in range(len(counts) - 1)
        if counts[i + 1] < counts[i]
    ]
    assert len(inversions) <= 1 and all(gap <= 2 for gap in inversions), counts
    elapsed = time.monotonic() - start
    report(8, f"identity/bounds hold; errors over epsilon {counts} ({elapsed:.1f}s)")


def test_criterion_9_end_to_end(fgsm_setup):
    start = time.monotonic()
    rng = np.random.default_rng(2024)
    inc = oracles.random_incidence(rng, 10, 6)
    m = make_matrix(inc)
    top3 = overall_scores(m).top(3)
    task = make_task(m, input_dim=16, noise_scale=0.15, seed=99)

    seed_passes = 0
    for s in range(5):
        # one 1200-sample pool per seed, split 50/50 and disjoint
        se_cfg = TrainConfig(
            selected=top3, hidden=(24,), epochs=60, n_train=1200,
            seed=(s, 1), data_seed=(s, 9), split="first",
        )
        reg_cfg = TrainConfig(
            selected=(), hidden=(24,), epochs=60, n_train=1200,
            seed=(s, 2), data_seed=(s, 9), split="second",
        )
        model_a = train_sgd(task, se_cfg).params
        model_b = train_sgd(task, reg_cfg).params
        X, Y, truth = sample_dataset(task, top3, 400, (s, 5))
        ok, saw_errors = True, False
        for eps in (0.05, 0.1, 0.15):
            X_adv = fgsm_perturb(model_a, X, Y, eps)
            cls_a, bits = predict_batch(model_a, X_adv)
            cls_b, _ = predict_batch(model_b, X_adv)
            records = [
                PredictionRecord(
                    sample_id=f"r{i}",
                    true_class=int(truth[i]),
                    predicted_class_a=int(cls_a[i]),
                    predicted_explanation=tuple(int(v) for v in bits[i]),
                    predicted_class_b=int(cls_b[i]),
                )
                for i in range(400)
            ]
            r1 = evaluate_scheme("R1", m, top3, records)
            combined = evaluate_scheme("SE+R1", m, top3, records)
            if r1.err_total > 0:
                saw_errors = True
                if combined.p_ed < r1.p_ed:
                    ok = False
        seed_passes += int(ok and saw_errors)

    assert seed_passes >= 4, f"only {seed_passes}/5 seeds"
    elapsed = time.monotonic() - start
    assert elapsed < 300.0
    report(9, f"P_ed(SE+R1) >= P_ed(R1) on {seed_passes}/5 seeds ({elapsed:.1f}s)")
