"""Interval methods the coverage harness can run, keyed by setting and tag.

A method maps one simulated dataset and the full level grid to ``(lower,
upper)`` arrays. Deterministic methods declare a ``cache_key`` over the
dataset's sufficient statistics so repeated datasets are computed once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Hashable

import numpy as np

from evalbars import intervals_clustered as icl
from evalbars import intervals_compare as icmp
from evalbars import intervals_single as isg
from evalbars import metrics_confusion as mc
from evalbars.statfn import RngStream


@dataclass(eq=False)
class TaskContext:
    """What a method sees besides the data: its own rng stream, the truth, the config."""

    stream: RngStream
    truth: float
    params: dict
    config: Any

    @cached_property
    def gen(self) -> np.random.Generator:
        return self.stream.generator()


Bounds = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class MethodSpec:
    """``target`` is ``"default"`` (the setting's natural estimand) or ``"odds_ratio"``.

    ``clampable`` marks normal-approximation methods whose raw bounds may
    leave the parameter space; they are clipped only when the config asks.
    """

    name: str
    settings: tuple[str, ...]
    compute: Callable[[Any, np.ndarray, TaskContext], Bounds]
    cache_key: Callable[[Any], Hashable] | None = None
    target: str = "default"
    clampable: bool = False


def _sn(y) -> tuple[int, int]:
    return (y.S, y.N)


def _pooled(data) -> tuple[int, int]:
    return (data.S, data.N)


def _grouped(data) -> tuple:
    n, y, m = data.grouped()
    return tuple(zip(n.tolist(), y.tolist(), m.tolist()))


def _pair_stats(pair) -> tuple[int, int, int, int]:
    ya, yb = pair
    return (ya.S, ya.N, yb.S, yb.N)


def _marginals(data) -> tuple[int, int, int, int]:
    s, t, u, _ = data.counts
    return (s + t, data.N, s + u, data.N)


def _counts(c) -> tuple[int, int, int, int]:
    return (c.n_tp, c.n_fp, c.n_fn, c.n_tn)


def _single(fn, stats):
    return lambda data, levels, ctx: fn(*stats(data), levels)


def _bootstrap(stats):
    return lambda data, levels, ctx: isg.bootstrap_bounds(*stats(data), levels, ctx.config.bootstrap_k, ctx.gen)


def _bayes_clustered(data, levels, ctx):
    return icl.bayes_clustered_bounds(data, levels, ctx.config.is_k, ctx.gen, ctx.config.resample)


def _bayes_independent(stats, metric):
    def compute(data, levels, ctx):
        return icmp.bayes_independent_bounds(*stats(data), levels, metric, ctx.config.posterior_k, ctx.gen)

    return compute


def _bayes_paired(data, levels, ctx):
    return icmp.bayes_paired_bounds(data.counts, levels, ctx.config.is_k, ctx.gen, ctx.config.resample)


def _paired_clt(data, levels, ctx):
    return icmp.paired_clt_bounds(data.counts, levels)


def _delta(c, levels, ctx):
    return mc.f1_delta_bounds(c, levels)


def _bayes_f1(kind):
    return lambda c, levels, ctx: mc.bayes_f1_bounds(c, levels, ctx.config.posterior_k, ctx.gen, kind)


def _bootstrap_f1(c, levels, ctx):
    return mc.bootstrap_f1_bounds(c, levels, ctx.config.bootstrap_k, ctx.gen)


def _fisher(data, levels, ctx):
    return icmp.fisher_or_bounds(*_pair_stats(data), levels)


def _build() -> dict[tuple[str, str], MethodSpec]:
    table: list[tuple[str, MethodSpec]] = []

    def add(setting, name, compute, cache_key=None, target="default", clampable=False):
        table.append((setting, MethodSpec(name, (setting,), compute, cache_key, target, clampable)))

    add("iid", "clt", _single(isg.clt_bounds, _sn), _sn, clampable=True)
    add("iid", "t", _single(isg.t_bounds, _sn), _sn, clampable=True)
    add("iid", "wilson", _single(isg.wilson_bounds, _sn), _sn)
    add("iid", "cp", _single(isg.clopper_pearson_bounds, _sn), _sn)
    add("iid", "bayes", _single(isg.bayes_beta_bounds, _sn), _sn)
    add("iid", "bootstrap", _bootstrap(_sn))

    add("clustered", "clt", _single(isg.clt_bounds, _pooled), _pooled, clampable=True)
    add("clustered", "clustered-clt", lambda d, lv, ctx: icl.clustered_clt_bounds(d, lv), _grouped, clampable=True)
    add("clustered", "wilson", _single(isg.wilson_bounds, _pooled), _pooled)
    add("clustered", "cp", _single(isg.clopper_pearson_bounds, _pooled), _pooled)
    add("clustered", "bayes", _single(isg.bayes_beta_bounds, _pooled), _pooled)
    add("clustered", "bootstrap", _bootstrap(_pooled))
    add("clustered", "bayes-clustered", _bayes_clustered)

    add("independent_pair", "clt-diff", _single(icmp.clt_diff_bounds, _pair_stats), _pair_stats, clampable=True)
    add("independent_pair", "bayes-diff", _bayes_independent(_pair_stats, "difference"))
    add("independent_pair", "fisher-or", _fisher, _pair_stats, target="odds_ratio")
    add("independent_pair", "bayes-or", _bayes_independent(_pair_stats, "odds_ratio"), target="odds_ratio")

    add("paired", "paired-clt", _paired_clt, lambda d: d.counts, clampable=True)
    add("paired", "clt-diff", _single(icmp.clt_diff_bounds, _marginals), _marginals, clampable=True)
    add("paired", "bayes-paired", _bayes_paired)
    add("paired", "bayes-unpaired", _bayes_independent(_marginals, "difference"))

    add("confusion", "delta", _delta, _counts, clampable=True)
    add("confusion", "bayes-qbi", _bayes_f1("quantile"))
    add("confusion", "bayes-hdi", _bayes_f1("hdi"))
    add("confusion", "bootstrap", _bootstrap_f1)
    return {(setting, spec.name): spec for setting, spec in table}


REGISTRY: dict[tuple[str, str], MethodSpec] = _build()


def default_methods(setting: str) -> tuple[str, ...]:
    return tuple(name for (s, name) in REGISTRY if s == setting)


# Methods whose intervals are credible intervals under the same uniform-type
# prior the data generator uses by default.
MATCHED_BAYES = {
    "iid": "bayes",
    "clustered": "bayes-clustered",
    "paired": "bayes-paired",
    "confusion": "bayes-qbi",
}
