"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible with ``pytest -s`` or
in the ``-v`` report captured output) before asserting.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate
from scipy import special as sp

from evalbars import intervals_clustered as icl
from evalbars import intervals_compare as icmp
from evalbars import intervals_single as isg
from evalbars import metrics_confusion as mc
from evalbars.data import BinaryEvalVector, ClusteredEvalData, ConfusionCounts, PairedEvalData
from evalbars.simharness import MATCHED_BAYES, SimConfig, exact_coverage, run_coverage_experiment
from evalbars.statfn import RngStream, beta_quantile, bivariate_normal_cdf, reg_inc_beta

pytestmark = pytest.mark.slow


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")
        return ok

    return emit


def test_criterion_1_clt_undercoverage(verdict):
    config = SimConfig(
        "iid", n_param_draws=100, n_datasets_per_draw=200, sizes=(100,), levels=(0.95,), methods=("clt",)
    )
    start = time.perf_counter()
    cov = run_coverage_experiment(config).row("clt", 100, 0.95).coverage
    elapsed = time.perf_counter() - start
    ok = abs(cov - 0.925) <= 0.015 and elapsed < 120
    verdict(1, ok, f"CLT coverage at N=100, level 0.95 = {cov:.5f} (target 0.925 +/- 0.015), {elapsed:.1f} s")
    assert elapsed < 120
    assert cov == pytest.approx(0.925, abs=0.015)


def test_criterion_2_matched_prior_calibration(verdict):
    # One dataset per parameter draw keeps the replicates independent, so the
    # binomial standard error is the right yardstick; 1250 replicates per cell
    # matches the fast profile's budget.
    worst = {}
    for setting, method in MATCHED_BAYES.items():
        config = SimConfig(setting, n_param_draws=1250, n_datasets_per_draw=1, methods=(method,), master_seed=2024)
        report = run_coverage_experiment(config)
        for N in config.sizes:
            z = [(r.coverage - r.level) / r.binomial_se() for r in report.slice(method, N)]
            worst[(setting, N)] = max(abs(v) for v in z)
    ok = max(worst.values()) <= 3.0
    verdict(2, ok, f"max |coverage - level| / binomial SE = {max(worst.values()):.2f} over {len(worst)} (setting, N) cells")
    assert all(v <= 3.0 for v in worst.values()), worst


def test_criterion_3_clopper_pearson_guarantee(verdict):
    thetas = np.round(np.arange(1, 100) / 100, 2)
    levels = np.array([0.95, 0.99])
    lowest = np.inf
    failures = 0
    for n in range(1, 26):
        cov = exact_coverage("cp", thetas, n, levels)
        failures += int(np.sum(cov < levels - 1e-12))
        lowest = min(lowest, float(np.min(cov - levels)))
    ok = failures == 0
    verdict(3, ok, f"min exact coverage minus level over theta grid, N<=25 = {lowest:.2e}")
    assert failures == 0


def test_criterion_4_wilson_beats_clt(verdict):
    report = run_coverage_experiment(SimConfig.profile("fast", "iid", methods=("clt", "wilson")))
    pairs = {N: (report.coverage_error("wilson", N), report.coverage_error("clt", N)) for N in (3, 10, 30)}
    ok = all(w < c for w, c in pairs.values())
    detail = ", ".join(f"N={N}: wilson {w:.4f} vs clt {c:.4f}" for N, (w, c) in pairs.items())
    verdict(4, ok, detail)
    assert ok


def test_criterion_5_bootstrap_undercovers_f1(verdict):
    report = run_coverage_experiment(SimConfig.profile("fast", "confusion", sizes=(10,), methods=("bootstrap", "bayes-qbi")))
    boot = report.coverage_error("bootstrap", 10)
    qbi = report.coverage_error("bayes-qbi", 10)
    ok = boot > qbi
    verdict(5, ok, f"N=10 coverage error: bootstrap {boot:.4f} vs bayes-qbi {qbi:.4f}")
    assert ok


def test_criterion_6_small_sample_pathology(verdict):
    y = BinaryEvalVector.from_counts(20, 20)
    clt = isg.clt_interval(y)
    others = [isg.wilson_interval(y), isg.clopper_pearson_interval(y), isg.bayes_beta_interval(y)]
    one = isg.clt_interval(BinaryEvalVector.from_counts(1, 20))
    checks = [
        clt.width == 0.0 and clt.diagnostics["zero_width"],
        all(iv.width > 0 and 0.0 <= iv.lower <= iv.upper <= 1.0 for iv in others),
        one.lower < 0.0 and one.diagnostics["out_of_range"],
    ]
    ok = all(checks)
    verdict(6, ok, f"all-correct CLT width {clt.width}, S=1 CLT lower {one.lower:.4f}")
    assert ok


def _f1(p):
    return 2 * p[0] / (2 * p[0] + p[1] + p[2])


def test_criterion_7_numerical_oracles(verdict):
    gaps = {}
    shapes = [0.5, 1.0, 2.0, 10.0, 100.0, 1000.0]
    ps = np.array([1e-6, 1e-3, 0.025, 0.5, 0.975, 0.999, 1 - 1e-6])
    worst = 0.0
    for a in shapes:
        for b in shapes:
            q = beta_quantile(ps, a, b)
            worst = max(worst, float(np.max(np.abs(reg_inc_beta(q, a, b) - ps))), float(np.max(np.abs(sp.betainc(a, b, q) - ps))))
    gaps["beta_quantile round trip"] = (worst, 1e-8)

    worst = 0.0
    for x1, x2, rho in [(0.3, -0.4, 0.7), (-1.5, 2.0, -0.6), (1.0, 1.0, 0.95), (-2.5, -2.5, 0.3), (0.0, 0.8, -0.99)]:
        c = math.sqrt(1 - rho * rho)
        quad = integrate.quad(lambda u: sp.ndtr((x2 - rho * u) / c) * math.exp(-u * u / 2) / math.sqrt(2 * math.pi), -np.inf, x1, epsabs=1e-13)[0]
        worst = max(worst, abs(bivariate_normal_cdf(x1, x2, rho=rho) - quad))
    gaps["bvn vs quadrature"] = (worst, 1e-6)
    worst = max(abs(bivariate_normal_cdf(0.0, 0.0, rho=r) - (0.25 + math.asin(r) / (2 * math.pi))) for r in np.linspace(-0.99, 0.99, 41))
    gaps["bvn vs arcsin at origin"] = (worst, 1e-9)

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        counts = rng.integers(1, 60, size=4)
        c = ConfusionCounts(*map(int, counts))
        p = counts / counts.sum()
        grad = np.zeros(4)
        for i in range(4):
            h = 1e-6
            up, dn = p.copy(), p.copy()
            up[i] += h
            dn[i] -= h
            grad[i] = (_f1(up) - _f1(dn)) / (2 * h)
        cov = (np.diag(p) - np.outer(p, p)) / counts.sum()
        se_fd = math.sqrt(grad @ cov @ grad)
        worst = max(worst, abs(mc.f1_delta_se(c) - se_fd) / se_fd)
    gaps["delta F1 SE relative"] = (worst, 1e-6)

    worst = 0.0
    for s, n in [(0, 10), (3, 10), (12, 30), (40, 45), (50, 100)]:
        data = ClusteredEvalData(np.ones(n, dtype=int), np.array([1] * s + [0] * (n - s)))
        iv = icl.bayes_clustered_interval(data, 0.95, 10_000, RngStream(s, n))[0]
        ref = isg.bayes_beta_interval(BinaryEvalVector.from_counts(s, n))
        worst = max(worst, abs(iv.lower - ref.lower), abs(iv.upper - ref.upper))
    gaps["singleton-cluster IS vs conjugate"] = (worst, 0.02)

    ok = all(v <= tol for v, tol in gaps.values())
    verdict(7, ok, "; ".join(f"{k} {v:.1e} (<= {tol:g})" for k, (v, tol) in gaps.items()))
    for name, (v, tol) in gaps.items():
        assert v <= tol, name


def test_criterion_8_determinism_and_seed_robustness(verdict):
    base = SimConfig.profile("fast", "iid")
    by_threads = {t: run_coverage_experiment(base, threads=t).to_csv() for t in (1, 4, 16)}
    identical = by_threads[1] == by_threads[4] == by_threads[16]
    runs = [run_coverage_experiment(SimConfig.profile("fast", "iid", master_seed=s)) for s in range(5)]
    rows = [r.rows for r in runs]
    cov = np.array([[row.coverage for row in rs] for rs in rows])
    se = cov.std(axis=0, ddof=1) / math.sqrt(cov.shape[0])
    ok = identical and float(se.max()) <= 5e-3
    verdict(
        8, ok,
        f"thread-identical CSV: {identical}; per-level seed SE max {se.max():.4f}, median {np.median(se):.4f} (limit 0.005)",
    )
    assert identical
    assert se.max() <= 5e-3


def _single_dataset_calls():
    rng = np.random.default_rng(3)
    y = BinaryEvalVector(rng.integers(0, 2, 100))
    y_b = BinaryEvalVector(rng.integers(0, 2, 100))
    pair = PairedEvalData(y, y_b)
    clusters = ClusteredEvalData(np.full(20, 5), rng.integers(0, 6, 20))
    conf = ConfusionCounts(30, 20, 15, 35)
    k = 10_000
    return {
        "clt": lambda: isg.clt_interval(y),
        "t": lambda: isg.t_interval(y),
        "wilson": lambda: isg.wilson_interval(y),
        "cp": lambda: isg.clopper_pearson_interval(y),
        "bootstrap": lambda: isg.bootstrap_interval(y, 0.95, k, RngStream(1)),
        "bayes": lambda: isg.bayes_beta_interval(y),
        "clt-diff": lambda: icmp.clt_diff_interval(y, y_b),
        "fisher-or": lambda: icmp.fisher_exact_or_interval(y, y_b),
        "bayes-diff": lambda: icmp.bayes_independent_comparison(y, y_b, 0.95, "difference", k, RngStream(2)),
        "bayes-or": lambda: icmp.bayes_independent_comparison(y, y_b, 0.95, "odds_ratio", k, RngStream(3)),
        "paired-clt": lambda: icmp.paired_clt_interval(pair),
        "bayes-paired": lambda: icmp.bayes_paired_diff(pair, 0.95, k, RngStream(4)),
        "clustered-clt": lambda: icl.clustered_clt_interval(clusters),
        "bayes-clustered": lambda: icl.bayes_clustered_interval(clusters, 0.95, k, RngStream(5)),
        "delta-f1": lambda: mc.f1_delta_interval(conf),
        "bayes-qbi": lambda: mc.bayes_f1_interval(conf, 0.95, k, RngStream(6), "quantile"),
        "bayes-hdi": lambda: mc.bayes_f1_interval(conf, 0.95, k, RngStream(7), "hdi"),
        "bootstrap-f1": lambda: mc.bootstrap_f1_interval(conf, 0.95, k, RngStream(8)),
    }


def test_criterion_9_timing(verdict):
    # Median of five timed calls after one warm-up call.
    timings = {}
    for name, call in _single_dataset_calls().items():
        call()
        samples = []
        for _ in range(5):
            start = time.perf_counter()
            call()
            samples.append(time.perf_counter() - start)
        timings[name] = float(np.median(samples))
    slowest = max(timings, key=timings.get)
    ok = timings[slowest] <= 0.2
    verdict(9, ok, f"slowest single-dataset method {slowest} at {1000 * timings[slowest]:.1f} ms (limit 200 ms)")
    assert all(t <= 0.2 for t in timings.values()), timings
