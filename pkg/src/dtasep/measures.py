"""Initial and invariant distributions for the gap chain.

Provides the quenched geometric product equilibria (gap at label i geometric
with ratio a / rate_i), three i.i.d. gap families with prescribed mean for
sub-critical-density starts, and the packed jam initial condition. All
samplers draw through counter-based streams keyed by (seed, label).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .disorder import DisorderField, velocity_to_gap
from .errors import ConfigError, HypothesisError
from .state import GapConfig, ParticleConfig

GAP_FAMILIES = ("geometric", "uniform", "two_point")


def geometric_gaps_from_uniforms(u: np.ndarray, ratio: np.ndarray) -> np.ndarray:
    """Inverse-transform geometric draws on {0, 1, ...} with P(k) = (1-r) r^k."""
    u = np.asarray(u, dtype=float)
    ratio = np.asarray(ratio, dtype=float)
    out = np.zeros(np.broadcast(u, ratio).shape, dtype=np.int64)
    pos = ratio > 0.0
    if np.any(pos):
        with np.errstate(divide="ignore"):
            vals = np.floor(np.log(u) / np.log(np.where(pos, ratio, 0.5)))
        out = np.where(pos, vals, 0.0).astype(np.int64)
    return out


@dataclass(frozen=True)
class EquilibriumSpec:
    """Quenched geometric product measure at common velocity a.

    With `fastening` r the rates are floored at r before sampling, so the
    geometric ratio at label i is a / max(rate_i, r).
    """

    a: float
    field: DisorderField
    fastening: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.a < 0.0:
            raise ValueError("velocity a must be nonnegative")

    def effective_rates(self, first_label: int, last_label: int) -> np.ndarray:
        rates = self.field.rate_window(first_label, last_label)
        if self.fastening is not None:
            rates = np.maximum(rates, self.fastening)
        return rates

    def check_valid(self, first_label: int, last_label: int) -> None:
        rates = self.effective_rates(first_label, last_label)
        bad = np.nonzero(rates <= self.a)[0]
        if bad.size:
            label = first_label + int(bad[0])
            raise HypothesisError(
                f"velocity a={self.a} is not below the effective rate "
                f"{rates[bad[0]]:.6g} at label {label}"
            )


def sample_equilibrium_gaps(spec: EquilibriumSpec, first_label: int,
                            last_label: int, anchor_position: int = 0) -> GapConfig:
    """Independent geometric gaps for labels first_label..last_label.

    Gap at label i uses ratio a / effective_rate_i; draws depend only on
    (spec.seed, label).
    """
    spec.check_valid(first_label, last_label)
    labels = np.arange(first_label, last_label + 1, dtype=np.int64)
    if spec.a == 0.0:
        gaps = np.zeros(len(labels), dtype=np.int64)
    else:
        rates = spec.effective_rates(first_label, last_label)
        u = rng.uniform_array(rng.derive(spec.seed, rng.STREAM_GAPS), labels)
        gaps = geometric_gaps_from_uniforms(u, spec.a / rates)
    return GapConfig(first_label=first_label, gaps=gaps,
                     anchor=(first_label, anchor_position))


@dataclass(frozen=True)
class IIDGapSpec:
    """An i.i.d. gap family with prescribed mean and finite variance.

    geometric: P(k) = (1/(1+u)) (u/(1+u))^k on {0, 1, ...}
    uniform:   uniform on {0, ..., 2u} (integer u)
    two_point: mass 1/2 each on {0, 2u} (2u integer); bounded support
    """

    u: float
    family: str = "geometric"
    seed: int = 0

    def __post_init__(self):
        if self.u <= 0.0:
            raise ValueError("mean gap u must be positive")
        if self.family not in GAP_FAMILIES:
            raise ConfigError(f"unknown gap family {self.family!r}; "
                              f"expected one of {GAP_FAMILIES}")
        if self.family == "uniform" and self.u != int(self.u):
            raise ConfigError("uniform gap family needs an integer mean")
        if self.family == "two_point" and 2.0 * self.u != int(2.0 * self.u):
            raise ConfigError("two_point gap family needs 2u to be an integer")

    @property
    def variance(self) -> float:
        if self.family == "geometric":
            return self.u * (1.0 + self.u)
        if self.family == "uniform":
            return self.u * (self.u + 1.0) / 3.0
        return self.u * self.u

    def draw(self, u01: np.ndarray) -> np.ndarray:
        """Map counter uniforms in (0, 1] to gap values."""
        if self.family == "geometric":
            return geometric_gaps_from_uniforms(u01, self.u / (1.0 + self.u))
        if self.family == "uniform":
            n_support = int(2 * self.u) + 1
            return (np.ceil(u01 * n_support) - 1).astype(np.int64)
        top = int(2 * self.u)
        return np.where(u01 <= 0.5, 0, top).astype(np.int64)


def sample_iid_gaps(spec: IIDGapSpec, first_label: int, last_label: int,
                    anchor_position: int = 0) -> GapConfig:
    """I.i.d. gaps for labels first_label..last_label from the chosen family."""
    labels = np.arange(first_label, last_label + 1, dtype=np.int64)
    u = rng.uniform_array(rng.derive(spec.seed, rng.STREAM_GAPS), labels)
    return GapConfig(first_label=first_label, gaps=spec.draw(u),
                     anchor=(first_label, anchor_position))


def jam_initial(n: int) -> ParticleConfig:
    """n packed particles: labels -n+1..0 at positions -n+1..0.

    Every site in (-n, 0] is occupied and the right half-line is vacant.
    """
    if n < 1:
        raise ValueError("a jam needs at least one particle")
    positions = np.arange(-n + 1, 1, dtype=np.int64)
    return ParticleConfig(first_label=-n + 1, positions=positions)


def equilibrium_mean_gap(spec: EquilibriumSpec) -> tuple[float, float]:
    """(quenched, annealed) mean gap of the equilibrium spec.

    Quenched: average of a/(rate - a) over the stored field. Annealed: the
    law integral with the same fastening.
    """
    if spec.a == 0.0:
        return 0.0, 0.0
    spec.check_valid(spec.field.first_label, spec.field.last_label)
    rates = spec.effective_rates(spec.field.first_label, spec.field.last_label)
    quenched = float(np.mean(spec.a / (rates - spec.a)))
    annealed = velocity_to_gap(spec.field.law, spec.a, fastening=spec.fastening)
    return quenched, annealed
