"""The coverage experiment: simulate datasets, build intervals, tally containment.

Every (parameter draw, dataset, N, method) gets its own rng substream derived
from the master seed, so results do not depend on scheduling. Per-dataset
outcomes are written into preallocated arrays at fixed positions and reduced
in a fixed order, which makes reports bit-identical under any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import math
from typing import Callable, Mapping

import numpy as np

from evalbars.errors import ConfigurationError, EvalbarsError
from evalbars.metrics_confusion import f1_of_probs
from evalbars.simharness.config import SimConfig
from evalbars.simharness.generators import (
    cluster_sizes_for,
    gen_clustered,
    gen_confusion,
    gen_iid,
    gen_paired,
)
from evalbars.simharness.methods import REGISTRY, MethodSpec, TaskContext, default_methods
from evalbars.simharness.priors import draw_parameters
from evalbars.simharness.report import WIDTH_PROBS, CoverageReport, CoverageRow
from evalbars.statfn import RngStream

_RANGES = {
    ("iid", "default"): (0.0, 1.0),
    ("clustered", "default"): (0.0, 1.0),
    ("confusion", "default"): (0.0, 1.0),
    ("independent_pair", "default"): (-1.0, 1.0),
    ("paired", "default"): (-1.0, 1.0),
    ("independent_pair", "odds_ratio"): (0.0, math.inf),
    ("paired", "odds_ratio"): (0.0, math.inf),
}


def resolve_methods(config: SimConfig, extra: Mapping[str, MethodSpec] | None = None) -> list[MethodSpec]:
    """Look up every configured method, failing before any simulation work."""
    extra = dict(extra or {})
    names = config.methods or (default_methods(config.setting) + tuple(n for n in extra if n not in default_methods(config.setting)))
    specs = []
    for name in names:
        spec = extra.get(name) or REGISTRY.get((config.setting, name))
        if spec is None:
            known = [n for (s, n) in REGISTRY if s == config.setting]
            raise ConfigurationError(f"method {name!r} is not available for setting {config.setting!r}; choose from {known}")
        if config.setting not in spec.settings:
            raise ConfigurationError(f"method {name!r} does not support setting {config.setting!r}")
        if (config.setting, spec.target) not in _RANGES:
            raise ConfigurationError(f"method {name!r} targets {spec.target!r}, undefined for {config.setting!r}")
        specs.append(spec)
    if len({s.name for s in specs}) != len(specs):
        raise ConfigurationError("duplicate method names in config")
    return specs


def true_value(setting: str, params: dict, target: str = "default") -> float:
    if setting in ("iid", "clustered"):
        return float(params["theta"])
    if setting in ("independent_pair", "paired"):
        a, b = params["theta_a"], params["theta_b"]
        if target == "odds_ratio":
            with np.errstate(divide="ignore", invalid="ignore"):
                return float((a / (1.0 - a)) / (b / (1.0 - b)))
        return float(a - b)
    values, ok = f1_of_probs(np.asarray(params["theta4"], dtype=float)[None, :])
    return float(values[0]) if ok[0] else math.nan


def generate(setting: str, params: dict, N: int, config: SimConfig, stream: RngStream):
    gen = stream.generator()
    if setting == "iid":
        return gen_iid(params["theta"], N, gen)
    if setting == "clustered":
        return gen_clustered(params["theta"], params["d"], cluster_sizes_for(N, config.cluster_size), gen)
    if setting == "independent_pair":
        return (gen_iid(params["theta_a"], N, gen), gen_iid(params["theta_b"], N, gen))
    if setting == "paired":
        return gen_paired(params["theta_a"], params["theta_b"], params["rho"], N, gen)
    if setting == "confusion":
        return gen_confusion(params["theta4"], N, gen)
    raise ConfigurationError(f"unknown setting {setting!r}")


class _Cache:
    """Shared memo for deterministic methods; values are read-only arrays."""

    def __init__(self) -> None:
        self._store: dict = {}

    def get_or_compute(self, key, fn: Callable):
        hit = self._store.get(key)
        if hit is None:
            lo, hi = fn()
            lo = np.array(lo, dtype=float)
            hi = np.array(hi, dtype=float)
            lo.setflags(write=False)
            hi.setflags(write=False)
            hit = (lo, hi)
            self._store[key] = hit
        return hit


def _evaluate(spec: MethodSpec, data, levels: np.ndarray, ctx: TaskContext, cache: _Cache):
    if spec.cache_key is not None:
        key = (spec.name, spec.cache_key(data))
        return cache.get_or_compute(key, lambda: spec.compute(data, levels, ctx))
    return spec.compute(data, levels, ctx)


def run_coverage_experiment(
    config: SimConfig,
    methods: Mapping[str, MethodSpec] | None = None,
    threads: int | None = None,
) -> CoverageReport:
    """Run the full simulate-interval-tally loop described by ``config``.

    ``methods`` adds or overrides method specs by tag (useful for stub
    intervals). ``threads`` overrides the config and ``UQ_THREADS``; it never
    changes the result.
    """
    specs = resolve_methods(config, methods)
    setting = config.setting
    levels = np.asarray(config.levels, dtype=float)
    n_levels = levels.size
    n_draws, n_sets = config.n_param_draws, config.n_datasets_per_draw
    reps = n_draws * n_sets
    workers = threads if threads is not None else config.worker_count()
    root = RngStream(config.master_seed).child("coverage", setting)
    params = [draw_parameters(setting, config.priors, root.child("params", j).generator()) for j in range(n_draws)]
    truths = {spec.name: [true_value(setting, p, spec.target) for p in params] for spec in specs}
    cache = _Cache()
    rows: dict[tuple[str, int], list[CoverageRow]] = {}

    for N in config.sizes:
        covered = {s.name: np.zeros((reps, n_levels), dtype=bool) for s in specs}
        invalid = {s.name: np.zeros((reps, n_levels), dtype=bool) for s in specs}
        widths = {s.name: np.full((reps, n_levels), np.nan) for s in specs}

        def run_draw(j: int, N: int = N) -> None:
            for i in range(n_sets):
                r = j * n_sets + i
                data = generate(setting, params[j], N, config, root.child("data", j, i, N))
                for spec in specs:
                    truth = truths[spec.name][j]
                    ctx = TaskContext(root.child("method", j, i, N, spec.name), truth, params[j], config)
                    try:
                        lo, hi = _evaluate(spec, data, levels, ctx, cache)
                    except EvalbarsError:
                        invalid[spec.name][r] = True
                        continue
                    lo = np.asarray(lo, dtype=float)
                    hi = np.asarray(hi, dtype=float)
                    rmin, rmax = _RANGES[(setting, spec.target)]
                    if config.clamp and spec.clampable:
                        lo = np.clip(lo, rmin, rmax)
                        hi = np.clip(hi, rmin, rmax)
                    w = hi - lo
                    covered[spec.name][r] = (lo <= truth) & (truth <= hi)
                    invalid[spec.name][r] = (w == 0) | (lo < rmin) | (hi > rmax) | ~np.isfinite(w)
                    widths[spec.name][r] = np.where(np.isfinite(w), w, np.nan)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run_draw, range(n_draws)))
        else:
            for j in range(n_draws):
                run_draw(j)

        for spec in specs:
            cov = covered[spec.name].sum(axis=0) / reps
            inv = invalid[spec.name].sum(axis=0)
            w = widths[spec.name]
            out = []
            for k in range(n_levels):
                col = w[:, k]
                finite = col[~np.isnan(col)]
                if finite.size:
                    mean_w = float(np.sum(finite) / finite.size)
                    wq = tuple(float(q) for q in np.quantile(finite, WIDTH_PROBS))
                else:
                    mean_w = math.nan
                    wq = (math.nan,) * len(WIDTH_PROBS)
                out.append(
                    CoverageRow(spec.name, setting, N, float(levels[k]), float(cov[k]), mean_w, int(inv[k]), reps, wq)
                )
            rows[(spec.name, N)] = out

    ordered = tuple(row for spec in specs for N in config.sizes for row in rows[(spec.name, N)])
    return CoverageReport(setting, tuple(float(x) for x in levels), ordered, config.to_dict())
