import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import dense_B, dense_B_scaled, dense_sign, dense_two_stage
from sbm_recover.gpm import (GPM_MAX_ITERS, PM_RESIDUAL_TOL, gpm_run, gpm_step, sign_map,
                             stage_one_budget, two_stage_recover)
from sbm_recover.metrics import is_exact, misclassification
from sbm_recover.sbm import SbmParams, generate, generate_raw
from sbm_recover.spectral import RegularizedOperator, matvec, sample_unit_sphere


def test_sign_map_zero_goes_positive():
    assert sign_map(np.array([0.5, -0.2, 0.0])).tolist() == [1, -1, 1]
    assert sign_map(np.array([-0.0])).tolist() == [1]


def test_sign_map_rejects_nan():
    with pytest.raises(ValueError, match="NaN"):
        sign_map(np.array([1.0, np.nan]))


@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=50))
def test_sign_map_idempotent_on_labels(xs):
    x = np.array(xs)
    assert np.array_equal(sign_map(x), x)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.floats(1e-3, 1e3))
def test_sign_map_positive_scale_invariance(vs, c):
    v = np.array(vs)
    assert np.array_equal(sign_map(v), sign_map(c * v))
    assert np.array_equal(sign_map(v), sign_map(3 * v))


def test_block_instance_fixed_point(block4):
    graph, truth = block4
    op = RegularizedOperator(graph)
    # hand evaluation: rho = 8/16, so (B x*)_i = 2 x*_i - 0.5 * 0 = 2 x*_i
    assert np.allclose(matvec(op, truth.labels), 2 * truth.labels)
    assert np.array_equal(gpm_step(op, truth.labels), truth.labels)


def test_fixed_point_when_certificate_holds():
    checked = 0
    for s in range(10):
        graph, truth = generate(SbmParams(400, 12, 2, seed=s))
        op = RegularizedOperator(graph)
        x = truth.labels.astype(float)
        if (x * matvec(op, x)).min() > 0:
            assert np.array_equal(gpm_step(op, truth.labels), truth.labels)
            checked += 1
    assert checked > 0


def test_gpm_step_matches_dense(small_instance):
    graph, _ = small_instance
    B = dense_B_scaled(graph)
    op = RegularizedOperator(graph)
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.choice([-1, 1], size=graph.n)
        assert np.array_equal(gpm_step(op, x), dense_sign(B @ x))


def test_gpm_step_exact_zero_goes_positive():
    # A = J - I on 4 nodes, rho = 3/4; x = (1, 1, 1, -1) has 1'x = 2,
    # A x = 2 - x = (1, 1, 1, 3), so B x = (-1/2, -1/2, -1/2, 3/2)
    graph, _ = generate_raw(4, 1.0, 1.0, include_diagonal=False)
    op = RegularizedOperator(graph)
    x = np.array([1, 1, 1, -1])
    assert gpm_step(op, x).tolist() == [-1, -1, -1, 1]
    graph, _ = generate_raw(2, 0.0, 1.0, include_diagonal=False)
    op = RegularizedOperator(graph)
    # A = [[0,1],[1,0]], rho = 1/2, x = (1, 1): B x = (1 - 1, 1 - 1) = 0 -> +1
    assert gpm_step(op, np.array([1, 1])).tolist() == [1, 1]


def test_gpm_run_converges_immediately_at_truth():
    graph, truth = generate_raw(100, 1.0, 0.0, seed=2)
    op = RegularizedOperator(graph)
    x0 = math.sqrt(100) * (truth.labels / math.sqrt(100))
    out = gpm_run(op, x0)
    assert out.converged and out.iterations == 1
    assert np.array_equal(out.labels, truth.labels)


def test_gpm_run_rejects_wrong_norm(small_instance):
    op = RegularizedOperator(small_instance[0])
    with pytest.raises(ValueError, match="sqrt"):
        gpm_run(op, np.ones(50) * 2)


def test_gpm_run_cap_is_normal_return():
    graph, _ = generate(SbmParams(300, 3, 3, seed=1))
    op = RegularizedOperator(graph)
    x0 = math.sqrt(300) * sample_unit_sphere(300, np.random.default_rng(0))
    out = gpm_run(op, x0, max_iters=1)
    assert out.iterations == 1 and not out.converged


def test_two_cycle_detected():
    # single edge, no loops: B = [[-1/2, 1/2], [1/2, -1/2]] swaps (1, -1) and (-1, 1)
    graph, _ = generate_raw(2, 0.0, 1.0, include_diagonal=False)
    op = RegularizedOperator(graph)
    out = gpm_run(op, np.array([1.0, -1.0]), max_iters=10)
    assert out.cycled and not out.converged and out.iterations == 2
    # B (1, 1) = 0, which signs to (1, 1): a fixed point
    assert gpm_run(op, np.array([1.0, 1.0])).converged


def test_two_stage_noiseless_instance():
    graph, truth = generate_raw(100, 1.0, 0.0, seed=4)
    B = dense_B(graph)
    w, V = np.linalg.eigh(B)
    x = truth.labels / 10.0
    assert min(np.linalg.norm(V[:, -1] - s * x) for s in (1, -1)) < 1e-10
    for seed in range(5):
        res = two_stage_recover(graph, seed=seed)
        assert is_exact(res.labels, truth) and res.converged


@pytest.mark.parametrize("alpha, beta, lo, hi", [(20, 2, 38, 40), (4, 3, 0, 4)])
def test_two_stage_on_either_side_of_threshold(alpha, beta, lo, hi):
    wins = 0
    for s in range(40):
        graph, truth = generate(SbmParams(300, alpha, beta, seed=s))
        wins += is_exact(two_stage_recover(graph, seed=s).labels, truth)
    assert lo <= wins <= hi


def test_converged_labels_are_fixed_points():
    for s in range(10):
        graph, truth = generate(SbmParams(600, 7, 2, seed=s))
        res = two_stage_recover(graph, seed=s)
        if res.converged:
            op = RegularizedOperator(graph)
            assert np.array_equal(gpm_step(op, res.labels), res.labels)
            assert res.gpm_iterations >= 1


def test_stage_two_iterations_and_recovery_rate():
    ok = 0
    for s in range(40):
        graph, truth = generate(SbmParams(5000, 10, 2, seed=s))
        res = two_stage_recover(graph, seed=s)
        ok += res.converged and res.gpm_iterations <= 20 and is_exact(res.labels, truth)
    assert ok >= 38


def test_below_threshold_mostly_fails():
    wins = 0
    for s in range(40):
        graph, truth = generate(SbmParams(5000, 2.5, 2, seed=s))
        wins += is_exact(two_stage_recover(graph, seed=s).labels, truth)
    assert wins <= 4


def test_stage_one_budget():
    g, _ = generate(SbmParams(300, 10, 2, seed=0))
    assert stage_one_budget(g) == 10
    g, _ = generate(SbmParams(300, 2, 10, seed=0))
    assert stage_one_budget(g) == 200


def test_one_step_region_exhaustive():
    n, gamma = 256, 0.1
    certified = 0
    for s in range(10):
        graph, truth = generate(SbmParams(n, 10, 2, seed=s))
        op = RegularizedOperator(graph)
        xs = truth.labels.astype(np.int64)
        if (xs * matvec(op, xs)).min() < gamma * math.log(n):
            continue
        certified += 1
        for l in range(n):
            x = xs.copy()
            x[l] = -x[l]
            assert np.array_equal(gpm_step(op, x), xs)
    assert certified >= 1


def test_contraction_along_trajectories():
    monotone = converging = 0
    for s in range(20):
        graph, truth = generate(SbmParams(5000, 10, 2, seed=s))
        t = truth.labels.astype(float)
        dists = []

        def track(k, x):
            x = np.asarray(x, dtype=float)
            dists.append(min(np.linalg.norm(x - t), np.linalg.norm(x + t)))

        res = two_stage_recover(graph, seed=s, gpm_callback=track)
        if res.converged:
            converging += 1
            monotone += all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    assert converging >= 19
    assert monotone >= 0.95 * converging


def test_matches_dense_reference_step_for_step():
    rng = np.random.default_rng(0)
    for trial in range(30):
        n = int(rng.choice([8, 16, 32, 64]))
        alpha = float(rng.uniform(2, min(25, n / math.log(n))))
        graph, truth = generate(SbmParams(n, alpha, float(rng.uniform(0, alpha)), seed=trial))
        B = dense_B(graph)
        Bs = dense_B_scaled(graph)
        y0 = sample_unit_sphere(n, np.random.Generator(np.random.Philox(np.random.SeedSequence(trial))))
        N = stage_one_budget(graph)
        ref_labels, ref_k, ref_conv, ref_hist = dense_two_stage(B, y0, N, PM_RESIDUAL_TOL,
                                                                GPM_MAX_ITERS, Bs)
        hist = []
        try:
            res = two_stage_recover(graph, seed=trial, gpm_callback=lambda k, x: hist.append(x))
        except ArithmeticError:
            continue
        assert res.gpm_iterations == ref_k
        assert res.converged == ref_conv
        assert np.array_equal(res.labels, ref_labels)
        for mine, theirs in zip(hist[1:], ref_hist):
            assert np.array_equal(mine, theirs)
