import math

import numpy as np
import pytest
from scipy import integrate, stats

import oracles
from evalbars.errors import ConfigurationError, DomainError
from evalbars.simharness import (
    CSV_HEADER,
    DEFAULT_LEVELS,
    REGISTRY,
    CoverageReport,
    MethodSpec,
    Prior,
    SimConfig,
    cluster_sizes_for,
    coverage_error,
    exact_coverage,
    format_config,
    gen_clustered,
    gen_confusion,
    gen_iid,
    gen_paired,
    load_config,
    logit_levels,
    parse_config_text,
    parse_levels,
    prior_averaged_coverage,
    resolve_methods,
    run_coverage_experiment,
)
from evalbars.simharness.priors import draw_parameters
from evalbars.statfn import RngStream

THETA_AB_06_09_07 = 0.5899088228542303  # 2-D quadrature, tests/oracles.py


def small_config(setting="iid", **kw):
    base = dict(n_param_draws=4, n_datasets_per_draw=10, sizes=(5, 12), levels=(0.8, 0.9, 0.95), master_seed=3)
    base.update(kw)
    return SimConfig(setting, **base)


class TestGenerators:
    def test_iid(self):
        assert gen_iid(0.0, 30, RngStream(1)).S == 0
        assert gen_iid(1.0, 30, RngStream(1)).S == 30
        assert gen_iid(0.5, 100_000, RngStream(1)).mean == pytest.approx(0.5, abs=0.005)
        with pytest.raises(DomainError):
            gen_iid(1.2, 5, RngStream(1))

    def test_clustered_large_d(self):
        sizes = [10**8] * 10_000
        data = gen_clustered(0.3, 1e6, sizes, RngStream(2))
        rates = data.successes / data.sizes
        assert np.var(rates) <= 10 * 0.3 * 0.7 / 1e6

    def test_clustered_tower_property(self):
        data = gen_clustered(0.35, 2.0, [5] * 20_000, RngStream(3))
        se = math.sqrt(0.35 * 0.65 * (1 + 4 / 3) / data.N)  # design effect 1 + (N_t - 1) / (d + 1)
        assert abs(data.S / data.N - 0.35) <= 4 * se

    def test_clustered_u_shape_moments(self):
        # d = 1, theta = 0.5 gives theta_t ~ Beta(0.5, 0.5): mean 1/2, var 1/8.
        data = gen_clustered(0.5, 1.0, [10**6] * 10_000, RngStream(4))
        rates = data.successes / data.sizes
        assert rates.mean() == pytest.approx(0.5, abs=0.015)
        assert rates.var() == pytest.approx(0.125, abs=0.006)
        assert np.mean(rates < 0.1) + np.mean(rates > 0.9) > 2 * np.mean((rates > 0.4) & (rates < 0.6))

    def test_clustered_rejects_boundary(self):
        for theta in (0.0, 1.0):
            with pytest.raises(DomainError):
                gen_clustered(theta, 1.0, [3], RngStream(0))
        with pytest.raises(DomainError):
            gen_clustered(0.5, 0.0, [3], RngStream(0))

    def test_cluster_sizes(self):
        assert cluster_sizes_for(12, 5) == [5, 5, 2]
        assert cluster_sizes_for(3, 5) == [3]

    def test_paired_independent(self):
        data = gen_paired(0.6, 0.3, 0.0, 100_000, RngStream(5))
        r = np.corrcoef(data.y_a.outcomes, data.y_b.outcomes)[0, 1]
        assert abs(r) < 4 / math.sqrt(100_000)

    def test_paired_marginals(self):
        data = gen_paired(0.6, 0.9, 0.7, 100_000, RngStream(6))
        assert data.y_a.mean == pytest.approx(0.6, abs=0.005)
        assert data.y_b.mean == pytest.approx(0.9, abs=0.005)
        n = data.N
        both = data.counts[0] / n
        assert abs(both - THETA_AB_06_09_07) <= 4 * math.sqrt(THETA_AB_06_09_07 * (1 - THETA_AB_06_09_07) / n)

    def test_paired_rejects(self):
        with pytest.raises(DomainError):
            gen_paired(0.0, 0.5, 0.1, 4, RngStream(0))
        with pytest.raises(DomainError):
            gen_paired(0.3, 0.5, 1.0, 4, RngStream(0))

    def test_confusion(self):
        assert gen_confusion((1, 0, 0, 0), 17, RngStream(7)).as_array().tolist() == [17, 0, 0, 0]
        c = gen_confusion((0.25,) * 4, 100_000, RngStream(8))
        assert c.N == 100_000
        assert np.all(np.abs(c.as_array() - 25_000) <= 3 * math.sqrt(100_000 * 3 / 16))
        with pytest.raises(DomainError):
            gen_confusion((0.5, 0.5, 0.5, 0), 3, RngStream(0))


class TestPriors:
    def test_parse_round_trip(self):
        for text in ("beta(1, 1)", "gamma(1, 1)", "dirichlet(1, 2, 3, 4)", "fixed(0.3)"):
            assert str(Prior.parse(text)) == text

    @pytest.mark.parametrize("text", ["beta(1)", "normal(0, 1)", "beta(0, 1)", "beta 1 1", "gamma(a, b)"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigurationError):
            Prior.parse(text)

    def test_rho_prior_on_half_shifted_scale(self):
        priors = SimConfig("paired").priors
        rhos = [draw_parameters("paired", priors, RngStream(9).child(i).generator())["rho"] for i in range(4000)]
        # rho = 2 * Beta(4, 2) - 1 has mean 2 * 4/6 - 1 = 1/3.
        assert np.mean(rhos) == pytest.approx(1 / 3, abs=0.02)
        fixed = SimConfig("paired", priors={"rho": "fixed(0.9)"}).priors
        assert draw_parameters("paired", fixed, RngStream(0).generator())["rho"] == 0.9


class TestConfig:
    def test_level_grid(self):
        assert len(DEFAULT_LEVELS) == 100
        assert DEFAULT_LEVELS[0] == 0.8 and DEFAULT_LEVELS[-1] == 0.995
        logits = np.log(np.array(DEFAULT_LEVELS) / (1 - np.array(DEFAULT_LEVELS)))
        assert np.allclose(np.diff(logits), np.diff(logits)[0])
        assert logit_levels(0.5, 0.9, 3)[1] == pytest.approx(0.75)

    def test_parse_levels(self):
        lv = parse_levels("grid(0.8, 0.995, 100), 0.95")
        assert len(lv) == 101 and 0.95 in lv
        assert parse_levels("0.9, 0.8") == (0.8, 0.9)
        with pytest.raises(ConfigurationError):
            parse_levels("0.9, high")

    def test_defaults_and_profiles(self):
        c = SimConfig("iid")
        assert (c.n_param_draws, c.n_datasets_per_draw, c.sizes) == (100, 200, (3, 10, 30, 100))
        f = SimConfig.profile("fast", "iid", sizes=(10,))
        assert (f.n_param_draws, f.n_datasets_per_draw, f.sizes) == (25, 50, (10,))
        assert SimConfig.profile("full", "iid", n_param_draws=3).n_param_draws == 3

    @pytest.mark.parametrize(
        "kw",
        [
            dict(levels=(0.9, 0.8)),
            dict(levels=(0.8, 1.0)),
            dict(n_param_draws=0),
            dict(sizes=(0,)),
            dict(priors={"phi": "beta(1, 1)"}),
            dict(threads=0),
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            SimConfig("iid", **kw)

    def test_unknown_setting(self):
        with pytest.raises(ConfigurationError):
            SimConfig("bogus")

    def test_text_format(self):
        text = """
        # comment
        setting = clustered
        profile = fast
        theta = beta(2, 2)
        d = gamma(1, 1)
        sizes = 10, 30
        levels = grid(0.8, 0.995, 100), 0.95
        methods = clt, bayes-clustered
        master_seed = 7
        clamp = true
        """
        c = parse_config_text(text)
        assert c.setting == "clustered" and c.n_param_draws == 25 and c.sizes == (10, 30)
        assert str(c.priors["theta"]) == "beta(2, 2)" and c.clamp and c.master_seed == 7
        assert len(c.levels) == 101 and c.methods == ("clt", "bayes-clustered")
        assert parse_config_text(format_config(c)) == c

    @pytest.mark.parametrize(
        "text,line",
        [
            ("setting = iid\nbogus = 1\n", 2),
            ("setting = iid\nsizes = 3\nsizes = 4\n", 3),
            ("setting = iid\n\ntheta = beta(1)\n", 3),
            ("setting = iid\nmaster_seed = x\n", 2),
            ("setting = iid\njunk\n", 2),
        ],
    )
    def test_text_errors_have_line_numbers(self, text, line):
        with pytest.raises(ConfigurationError, match=f"cfg:{line}:"):
            parse_config_text(text, source="cfg")

    def test_missing_setting_and_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            parse_config_text("sizes = 3\n")
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "nope.cfg")

    def test_threads_from_environment(self, monkeypatch):
        monkeypatch.setenv("UQ_THREADS", "3")
        assert SimConfig("iid").worker_count() == 3
        monkeypatch.setenv("UQ_THREADS", "zero")
        with pytest.raises(ConfigurationError):
            SimConfig("iid").worker_count()


class TestCoverageError:
    def test_examples(self):
        lv = np.array(DEFAULT_LEVELS)
        assert coverage_error(lv, lv) == 0.0
        assert coverage_error(lv - 0.01, lv) == pytest.approx(0.01)
        assert coverage_error([0.925], [0.95]) == pytest.approx(0.025)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            coverage_error([0.9, 0.9], [0.9])


def _stub(lo_fn, hi_fn, name="stub", setting="iid"):
    return MethodSpec(name, (setting,), lambda data, levels, ctx: (lo_fn(ctx) + 0 * levels, hi_fn(ctx) + 0 * levels))


class TestEngine:
    def test_unit_interval_stub(self):
        stub = _stub(lambda c: 0.0, lambda c: 1.0)
        report = run_coverage_experiment(small_config(methods=("stub",)), {"stub": stub})
        assert all(r.coverage == 1.0 for r in report.rows)
        assert all(r.mean_width == 1.0 and r.invalid_count == 0 for r in report.rows)

    def test_truth_stub(self):
        stub = _stub(lambda c: c.truth, lambda c: c.truth)
        report = run_coverage_experiment(small_config(methods=("stub",)), {"stub": stub})
        assert all(r.coverage == 1.0 and r.mean_width == 0.0 for r in report.rows)
        assert all(r.invalid_count == r.reps for r in report.rows)  # zero width is tallied

    @pytest.mark.parametrize("setting", ["iid", "clustered", "independent_pair", "paired", "confusion"])
    def test_every_registered_method_runs(self, setting):
        config = small_config(setting, n_param_draws=2, n_datasets_per_draw=3, is_k=1000, bootstrap_k=200, posterior_k=1000)
        report = run_coverage_experiment(config)
        assert set(report.methods) == {n for (s, n) in REGISTRY if s == setting}
        for r in report.rows:
            assert 0.0 <= r.coverage <= 1.0 and r.reps == 6

    def test_configuration_error_before_compute(self):
        calls = []
        spy = MethodSpec("spy", ("iid",), lambda d, lv, ctx: calls.append(1) or (lv * 0, lv * 0 + 1))
        with pytest.raises(ConfigurationError):
            run_coverage_experiment(small_config(methods=("spy", "fisher-or")), {"spy": spy})
        with pytest.raises(ConfigurationError):
            run_coverage_experiment(small_config("confusion", methods=("wilson",)))
        assert calls == []
        with pytest.raises(ConfigurationError):
            resolve_methods(small_config(methods=("clt", "clt")))

    def test_infinite_upper_covers_and_is_tallied(self):
        stub = _stub(lambda c: 0.0, lambda c: math.inf)
        report = run_coverage_experiment(small_config(methods=("stub",)), {"stub": stub})
        assert all(r.coverage == 1.0 and r.invalid_count == r.reps for r in report.rows)
        assert all(math.isnan(r.mean_width) for r in report.rows)

    def test_method_errors_count_as_invalid_non_covering(self):
        from evalbars.errors import DegeneratePosteriorError

        def boom(data, levels, ctx):
            raise DegeneratePosteriorError("stub")

        spec = MethodSpec("boom", ("iid",), boom)
        report = run_coverage_experiment(small_config(methods=("boom",)), {"boom": spec})
        assert all(r.coverage == 0.0 and r.invalid_count == r.reps for r in report.rows)

    def test_clamp_knob(self):
        base = small_config(methods=("clt",), sizes=(3,), n_param_draws=10, levels=(0.95,))
        raw = run_coverage_experiment(base)
        clamped = run_coverage_experiment(SimConfig(**{**base.__dict__, "clamp": True}))
        # Clamping never changes containment of a theta inside [0, 1], only validity flags.
        assert [r.coverage for r in raw.rows] == [r.coverage for r in clamped.rows]
        assert clamped.rows[0].invalid_count <= raw.rows[0].invalid_count

    def test_thread_count_does_not_change_results(self):
        config = small_config("paired", is_k=1000, posterior_k=1000, n_param_draws=6, n_datasets_per_draw=4)
        outputs = {t: run_coverage_experiment(config, threads=t) for t in (1, 4, 16)}
        assert outputs[1].to_csv() == outputs[4].to_csv() == outputs[16].to_csv()
        assert outputs[1].to_json() == outputs[16].to_json()

    def test_seed_changes_results(self):
        a = run_coverage_experiment(small_config(methods=("bootstrap",), bootstrap_k=200))
        b = run_coverage_experiment(small_config(methods=("bootstrap",), bootstrap_k=200, master_seed=4))
        assert a.to_csv() != b.to_csv()

    def test_mismatched_prior_ablation(self):
        config = small_config(priors={"theta": "beta(100, 20)"}, methods=("bayes", "wilson"))
        report = run_coverage_experiment(config)
        assert report.config["priors"]["theta"] == "beta(100, 20)"

    def test_monte_carlo_matches_conditional_exact(self):
        # The harness estimates the average over its own theta draws of the
        # exact coverage; recompute those draws and compare within 3 SE.
        config = SimConfig(
            "iid", n_param_draws=10, n_datasets_per_draw=300, sizes=(10, 30), levels=(0.8, 0.9, 0.95),
            methods=("clt", "wilson", "cp", "bayes"), master_seed=5,
        )
        report = run_coverage_experiment(config)
        root = RngStream(5).child("coverage", "iid")
        thetas = [draw_parameters("iid", config.priors, root.child("params", j).generator())["theta"] for j in range(10)]
        for row in report.rows:
            p = exact_coverage(row.method, np.array(thetas), row.N, [row.level])[:, 0]
            se = math.sqrt(np.sum(p * (1 - p) / 300)) / 10
            assert abs(row.coverage - p.mean()) <= 3 * se + 1e-12, (row.method, row.N, row.level)


class TestExact:
    def test_prior_average_against_quadrature(self):
        for method in ("clt", "wilson", "cp", "bayes"):
            closed = prior_averaged_coverage(method, 10, [0.9])[0]
            # Coverage is piecewise constant-times-polynomial in theta; split at the bounds.
            from evalbars.simharness.exact import _all_bounds

            lo, hi = _all_bounds(method, 10, [0.9], False)
            knots = np.unique(np.clip(np.concatenate([lo.ravel(), hi.ravel(), [0.0, 1.0]]), 0, 1))
            total = sum(
                integrate.quad(lambda t: exact_coverage(method, t, 10, [0.9])[0], a, b, limit=200)[0]
                for a, b in zip(knots[:-1], knots[1:])
            )
            assert closed == pytest.approx(total, abs=1e-8), method

    def test_cp_and_bayes_prior_coverage(self):
        # Under a matched uniform prior the Bayes interval is exactly calibrated.
        lv = np.array([0.8, 0.9, 0.95])
        np.testing.assert_allclose(prior_averaged_coverage("bayes", 7, lv), lv, atol=1e-10)

    def test_clt_prior_average_at_100(self):
        # Exact uniform-prior average of CLT coverage at N=100, level 0.95.
        assert prior_averaged_coverage("clt", 100, [0.95])[0] == pytest.approx(0.92225448, abs=1e-7)

    def test_full_protocol_clt_tracks_its_own_draws(self):
        # The seed-0 full-protocol estimate sits within MC error of the exact
        # coverage averaged over the 100 theta values that seed draws.
        config = SimConfig("iid", sizes=(100,), levels=(0.95,), methods=("clt",))
        mc_cov = run_coverage_experiment(config).row("clt", 100, 0.95).coverage
        root = RngStream(0).child("coverage", "iid")
        thetas = np.array([draw_parameters("iid", config.priors, root.child("params", j).generator())["theta"] for j in range(100)])
        p = exact_coverage("clt", thetas, 100, [0.95])[:, 0]
        se = math.sqrt(np.sum(p * (1 - p) / 200)) / 100
        assert abs(mc_cov - p.mean()) <= 3 * se

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            exact_coverage("bootstrap", 0.5, 3, [0.9])


class TestReport:
    def test_csv_header_and_round_trip(self):
        report = run_coverage_experiment(small_config(methods=("clt", "wilson")))
        lines = report.to_csv().splitlines()
        assert lines[0] == ",".join(CSV_HEADER) == "method,setting,N,level,coverage,mean_width,invalid_count,reps"
        assert len(lines) == 1 + 2 * 2 * 3
        back = CoverageReport.from_json_dict(report.to_json_dict())
        assert back.to_csv() == report.to_csv()
        assert report.coverage_error("clt", 5) == pytest.approx(
            coverage_error(report.coverage("clt", 5), [0.8, 0.9, 0.95])
        )
        assert "wilson" in report.summary_table()

    def test_write(self, tmp_path):
        report = run_coverage_experiment(small_config(methods=("clt",)))
        csv_path, json_path = report.write(tmp_path)
        assert csv_path.name == "coverage_iid.csv" and json_path.exists()
