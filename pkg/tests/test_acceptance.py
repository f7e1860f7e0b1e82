"""Acceptance suite: one test per release criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the PASS/FAIL line
per criterion alongside the measured values.
"""

import itertools
import math
import time

import numpy as np

from concentra.cli import main as cli_main
from concentra.dips import (
    dips_pair_sampler,
    eta_bn,
    lambda_dips,
    random_dips_array,
    random_graph_edges,
)
from concentra.families import (
    make_dips_family,
    make_graph_family,
    make_mww_family,
)
from concentra.harness import (
    dips_linearity_residual,
    dominance_report,
    empirical_tail,
    exact_tail_from_values,
    pattern_size_bias_identity,
    ustat_linearity_residual,
)
from concentra.linalg import nu1, sigma1_lower_bound, smallest_singular_value
from concentra.patterns import (
    Pattern,
    pattern_count,
    pattern_mean,
    pattern_pair_sampler,
    pattern_variance,
)
from concentra.ustat import (
    FiniteDistribution,
    gamma_d,
    kernel_by_name,
    ustat_pair_sampler,
)

RADEMACHER = FiniteDistribution.rademacher()
MILLION = 1_000_000


def report_line(num, description, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    suffix = f" [{detail}]" if detail else ""
    print(f"criterion {num} ({description}): {status}{suffix}")
    return ok


def test_criterion_1_ustat_exact_linearity():
    started = time.perf_counter()
    report = ustat_linearity_residual(kernel_by_name("mean-pair"), RADEMACHER, 5)
    elapsed = time.perf_counter() - started
    ok = report.max_residual <= 1e-10 and elapsed < 5.0
    assert report_line(
        1, "exact linearity, U-statistics", ok,
        f"residual={report.max_residual:.3e}, {elapsed:.2f}s, "
        f"space={report.sample_space_size}",
    )


def test_criterion_2_dips_exact_linearity_with_remainder():
    started = time.perf_counter()
    array = random_dips_array(5, 1.0, seed=20240501)
    report = dips_linearity_residual(array)
    elapsed = time.perf_counter() - started
    ok = report.max_residual <= 1e-9 and elapsed < 10.0
    assert report_line(
        2, "exact linearity with remainder, DIPS", ok,
        f"residual={report.max_residual:.3e}, {elapsed:.2f}s, 120 permutations",
    )


def test_criterion_3_pathwise_coupling_bounds():
    chunk = 20_000
    rounds = MILLION // chunk

    n_u = 9
    kernel = kernel_by_name("sign-avg-d3")
    u_sampler = ustat_pair_sampler(RADEMACHER, n_u, kernel, seed=31)
    u_limit = 2.0 * kernel.sup_bound * gamma_d(3) / math.sqrt(n_u)
    u_viol = 0
    for _ in range(rounds):
        w, w_prime, _ = u_sampler.draw_batch(chunk)
        gaps = np.linalg.norm(w - w_prime, axis=1)
        u_viol += int((gaps > u_limit * (1 + 1e-12)).sum())

    n_d = 20
    array = random_dips_array(n_d, 1.0, seed=32)
    d_sampler = dips_pair_sampler(array, seed=33)
    d_limit = eta_bn(array.sup_bound, n_d)
    d_viol = 0
    for _ in range(rounds):
        v, v_prime, _, _ = d_sampler.draw_batch(chunk)
        gaps = np.linalg.norm(v - v_prime, axis=1) / n_d**1.5
        d_viol += int((gaps > d_limit * (1 + 1e-12)).sum())

    p_sampler = pattern_pair_sampler(
        12, Pattern.identity(3), Pattern.from_text("1 3 2"), 1, seed=34
    )
    p_limit = 2 * 3 - 1
    p_viol = 0
    for _ in range(rounds):
        w, w_biased, _ = p_sampler.draw_batch(chunk)
        p_viol += int((np.abs(w - w_biased) > p_limit).sum())

    ok = u_viol == 0 and d_viol == 0 and p_viol == 0
    assert report_line(
        3, "pathwise coupling bounds, 1e6 pairs each", ok,
        f"violations: ustat={u_viol}, dips={d_viol}, patterns={p_viol}",
    )


def test_criterion_4_singular_value_lower_bound_dominance():
    rng = np.random.default_rng(20240502)
    checked = 0
    worst_gap = -np.inf
    while checked < 10_000:
        k = int(rng.integers(2, 7))
        a = rng.uniform(-1.0, 1.0, size=(k, k))
        sigma1 = smallest_singular_value(a)
        if sigma1 < 1e-6:
            continue
        checked += 1
        worst_gap = max(worst_gap, sigma1_lower_bound(a) - sigma1)
    lb_ok = worst_gap <= 1e-9

    nu_ok = all(nu1(lambda_dips(n)) < 2 * n for n in range(2, 1001))
    ok = lb_ok and nu_ok
    assert report_line(
        4, "determinant-trace bound dominance + nu1 < 2n", ok,
        f"worst lb-sigma1 gap={worst_gap:.3e} over 10000 matrices; "
        f"nu1<2n for n in 2..1000: {nu_ok}",
    )


def test_criterion_5_exact_dominance_and_moments():
    started = time.perf_counter()

    mww = make_mww_family(3, 3)
    grid = np.linspace(0.0, mww.default_scale, 40)
    mww_report = dominance_report(mww.bound_fn, mww.exact_fragment(grid))
    mww_ok = mww_report.violations == [] and mww_report.sample_count == 20

    dips = make_dips_family(random_dips_array(6, 1.0, seed=51), b=1.0)
    grid = np.linspace(0.0, dips.default_scale, 40)
    dips_report = dominance_report(dips.bound_fn, dips.exact_fragment(grid))
    dips_ok = dips_report.violations == [] and dips_report.sample_count == 720

    n, pats = 7, (Pattern.identity(3), Pattern.from_text("3 2 1"))
    moment_gap = 0.0
    for pat in pats:
        counts = np.array([
            pattern_count(np.array(pi), pat)
            for pi in itertools.permutations(range(n))
        ], dtype=float)
        moment_gap = max(moment_gap, abs(counts.mean() - pattern_mean(n, 3)))
        moment_gap = max(moment_gap, abs(counts.var() - pattern_variance(n, pat)))
    moments_ok = moment_gap <= 1e-9

    elapsed = time.perf_counter() - started
    ok = mww_ok and dips_ok and moments_ok and elapsed < 60.0
    assert report_line(
        5, "exact dominance (MWW, DIPS) + pattern moments", ok,
        f"mww violations={len(mww_report.violations)}, "
        f"dips violations={len(dips_report.violations)}, "
        f"moment gap={moment_gap:.3e}, {elapsed:.1f}s",
    )


def test_criterion_6_size_bias_identity_exhaustive():
    worst = 0.0
    mean_gap = 0.0
    for direction in (1, 2):
        report = pattern_size_bias_identity(
            6, Pattern.identity(3), Pattern.from_text("1 3 2"), direction
        )
        worst = max(worst, report.max_residual)
        mean_gap = max(mean_gap, report.metadata["mean_residual"])
    ok = worst <= 1e-9 and mean_gap == 0.0
    assert report_line(
        6, "size-bias identity, n=6 m=3 exhaustive", ok,
        f"max residual={worst:.3e}, mean exact: {mean_gap == 0.0}",
    )


def test_criterion_7_monte_carlo_dominance():
    budgets = []

    started = time.perf_counter()
    fam = make_dips_family(random_dips_array(20, 1.0, seed=71), b=1.0)
    frag = empirical_tail(fam.sample, np.linspace(0, fam.default_scale, 40),
                          100_000, 0.99, seed=72)
    dips_report = dominance_report(fam.bound_fn, frag)
    budgets.append(time.perf_counter() - started)

    started = time.perf_counter()
    fam = make_mww_family(25, 25)
    frag = empirical_tail(fam.sample, np.linspace(0, fam.default_scale, 40),
                          100_000, 0.99, seed=73)
    mww_report = dominance_report(fam.bound_fn, frag)
    budgets.append(time.perf_counter() - started)

    started = time.perf_counter()
    edges1 = random_graph_edges(25, 30, seed=74)
    edges2 = random_graph_edges(25, 30, seed=75)
    fam = make_graph_family(edges1, edges2, 25)
    frag = empirical_tail(fam.sample, np.linspace(0, fam.default_scale, 40),
                          100_000, 0.99, seed=76)
    graph_report = dominance_report(fam.bound_fn, frag)
    budgets.append(time.perf_counter() - started)

    counts = (len(dips_report.violations), len(mww_report.violations),
              len(graph_report.violations))
    ok = counts == (0, 0, 0) and max(budgets) < 120.0
    assert report_line(
        7, "Monte Carlo dominance at moderate scale", ok,
        f"violations dips/mww/graph={counts}, "
        f"times={[f'{b:.1f}s' for b in budgets]}",
    )


def test_criterion_8_negative_control():
    frag = empirical_tail(
        lambda seed, size: np.random.default_rng(seed).choice([-1.0, 1.0], size=size),
        np.array([0.5]), 10_000, 0.99, seed=81,
    )
    mc_report = dominance_report(lambda t: 0.01, frag)
    exact_frag = exact_tail_from_values([-1.0, 1.0], [0.5, 0.5], np.array([0.5]))
    exact_report = dominance_report(lambda t: 0.01, exact_frag)
    ok = mc_report.violations == [0.5] and exact_report.violations == [0.5]
    assert report_line(
        8, "negative control flags scaled-down bound", ok,
        f"flagged thresholds mc={mc_report.violations}, exact={exact_report.violations}",
    )


def test_criterion_9_reproducibility_across_threads(tmp_path):
    pairs = []
    for threads in ("1", "4"):
        out = tmp_path / f"validate_t{threads}.csv"
        code = cli_main([
            "validate", "dips", "--n", "20", "--b", "1",
            "--samples", "100000", "--seed", "7",
            "--threads", threads, "--out", str(out),
        ])
        assert code == 0
        pairs.append(out.read_bytes())
    validate_ok = pairs[0] == pairs[1]

    pairs = []
    for threads in ("1", "4"):
        out = tmp_path / f"simulate_t{threads}.csv"
        code = cli_main([
            "simulate", "mww", "--n1", "10", "--n2", "10",
            "--samples", "50000", "--seed", "9",
            "--threads", threads, "--out", str(out),
        ])
        assert code == 0
        pairs.append(out.read_bytes())
    simulate_ok = pairs[0] == pairs[1]

    ok = validate_ok and simulate_ok
    assert report_line(
        9, "byte-identical CSV across --threads", ok,
        f"validate={validate_ok}, simulate={simulate_ok}",
    )
