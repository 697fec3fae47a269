"""Data-generating priors for simulation parameters.

A prior is written as ``beta(a, b)``, ``gamma(shape, rate)``,
``dirichlet(a1, ..., ak)`` or ``fixed(x[, ...])``.
"""

from __future__ import annotations

from dataclasses import dataclass
import re

import numpy as np

from evalbars.errors import ConfigurationError

_ARITY = {"beta": 2, "gamma": 2}
_PATTERN = re.compile(r"^\s*([a-z]+)\s*\(([^()]*)\)\s*$")


@dataclass(frozen=True)
class Prior:
    kind: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("beta", "gamma", "dirichlet", "fixed"):
            raise ConfigurationError(f"unknown prior family {self.kind!r}")
        if self.kind in _ARITY and len(self.params) != _ARITY[self.kind]:
            raise ConfigurationError(f"{self.kind} prior takes {_ARITY[self.kind]} parameters")
        if not self.params:
            raise ConfigurationError(f"{self.kind} prior needs parameters")
        if self.kind != "fixed" and any(not p > 0 for p in self.params):
            raise ConfigurationError(f"{self.kind} prior parameters must be positive")

    @classmethod
    def parse(cls, text: str) -> "Prior":
        m = _PATTERN.match(text)
        if not m:
            raise ConfigurationError(f"cannot parse prior {text!r}; expected e.g. beta(1, 1)")
        try:
            params = tuple(float(p) for p in m.group(2).split(","))
        except ValueError as exc:
            raise ConfigurationError(f"non-numeric prior parameter in {text!r}") from exc
        return cls(m.group(1), params)

    def __str__(self) -> str:
        return f"{self.kind}({', '.join(format(p, 'g') for p in self.params)})"

    def sample(self, gen: np.random.Generator):
        if self.kind == "beta":
            return float(gen.beta(*self.params))
        if self.kind == "gamma":
            shape, rate = self.params
            return float(gen.gamma(shape, 1.0 / rate))
        if self.kind == "dirichlet":
            return gen.dirichlet(np.array(self.params))
        return self.params[0] if len(self.params) == 1 else np.array(self.params)


# Parameters each setting draws, in draw order, with their default priors.
# For ``rho`` a Beta prior is placed on ``(rho + 1) / 2``; a fixed value is rho itself.
SETTING_PARAMETERS: dict[str, dict[str, str]] = {
    "iid": {"theta": "beta(1, 1)"},
    "clustered": {"theta": "beta(1, 1)", "d": "gamma(1, 1)"},
    "independent_pair": {"theta_a": "beta(1, 1)", "theta_b": "beta(1, 1)"},
    "paired": {"theta_a": "beta(1, 1)", "theta_b": "beta(1, 1)", "rho": "beta(4, 2)"},
    "confusion": {"theta4": "dirichlet(1, 1, 1, 1)"},
}


def default_priors(setting: str) -> dict[str, Prior]:
    return {name: Prior.parse(text) for name, text in SETTING_PARAMETERS[setting].items()}


def draw_parameters(setting: str, priors: dict[str, Prior], gen: np.random.Generator) -> dict:
    params = {}
    for name in SETTING_PARAMETERS[setting]:
        prior = priors[name]
        value = prior.sample(gen)
        if name == "rho" and prior.kind != "fixed":
            value = 2.0 * value - 1.0
        params[name] = value
    return params
