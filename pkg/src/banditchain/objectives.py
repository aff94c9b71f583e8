"""Stochastic gradient constructors for learning from bandit feedback.

Each constructor turns one sampled output (or output pair) plus its scalar
feedback into an unbiased single-sample estimate of the gradient of the
corresponding full-information objective:

* expected loss:        s = delta * (phi(x, y~) - E_p[phi])
* pairwise preference:  s = delta * (phi_pair - E[phi_pair]) over ordered pairs
* cross-entropy:        s = (gain / p^(y~|x)) * (-phi(x, y~) + E_p[phi])

The pair model factorizes as p_w(y_i|x) * p_{-w}(y_j|x), so pairs are drawn
by sampling each side from its own chain, and the pair feature expectation
is the exact difference of the two chain expectations.  The cross-entropy
divisor may be clipped from below by a constant k, which bounds the
importance weight at the cost of bias.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .chain import (
    ChainInstance,
    ChainModel,
    expected_features,
    extract_features,
    prob,
    sample,
    sample_many,
)
from .sparse import SparseVector


class ObjectiveKind(Enum):
    """The four trainable objectives; PR variants differ only in feedback."""

    EL = "el"
    PR_BIN = "pr-bin"
    PR_CONT = "pr-cont"
    CE = "ce"

    @classmethod
    def parse(cls, name: "str | ObjectiveKind") -> "ObjectiveKind":
        if isinstance(name, ObjectiveKind):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            options = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown objective {name!r} (expected one of {options})") from None

    @property
    def is_pairwise(self) -> bool:
        return self in (ObjectiveKind.PR_BIN, ObjectiveKind.PR_CONT)

    @property
    def pair_mode(self) -> str:
        if not self.is_pairwise:
            raise ValueError(f"{self.value} has no pair feedback mode")
        return "bin" if self is ObjectiveKind.PR_BIN else "cont"


@dataclass(frozen=True)
class PairSample:
    """An ordered pair of labelings for one input."""

    first: tuple[str, ...]
    second: tuple[str, ...]


@dataclass(frozen=True)
class ClippingConfig:
    """Lower clipping constant for the cross-entropy sampling probability.

    k = 0 disables clipping; k must stay below 1 so the divisor max(p, k)
    never exceeds certainty.
    """

    k: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.k < 1.0:
            raise ValueError(f"clipping constant must be in [0, 1), got {self.k}")

    @classmethod
    def coerce(cls, clip: "ClippingConfig | float | None") -> "ClippingConfig":
        if clip is None:
            return cls(0.0)
        if isinstance(clip, ClippingConfig):
            return clip
        return cls(float(clip))


def _check_unit_interval(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")
    return value


def el_gradient(
    model: ChainModel,
    w: SparseVector,
    x: ChainInstance,
    y_sampled,
    delta: float,
) -> SparseVector:
    """Expected-loss stochastic gradient: delta * (phi(x, y~) - E_p[phi]).

    The update pushes the sampled structure's features toward the mean the
    harder the worse its feedback was; delta = 0 contributes nothing.
    """
    delta = _check_unit_interval("delta", delta)
    if delta == 0.0:
        return SparseVector()
    grad = extract_features(model, x, y_sampled)
    grad.add_scaled(expected_features(model, w, x), -1.0)
    return grad.scale(delta)


def pr_sample_pair(
    model: ChainModel,
    w: SparseVector,
    x: ChainInstance,
    rng: np.random.Generator,
) -> PairSample:
    """Draw an ordered pair: first from p_w(.|x), second from p_{-w}(.|x)."""
    first = sample(model, w, x, rng)
    second = sample(model, w.scaled(-1.0), x, rng)
    return PairSample(first=first, second=second)


def pr_sample_pairs_many(
    model: ChainModel,
    w: SparseVector,
    x: ChainInstance,
    size: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched ordered-pair draws as two (size, n) label-index arrays.

    Same distribution as pr_sample_pair: the components are independent
    chain samples under w and under -w.
    """
    first = sample_many(model, w, x, size, rng)
    second = sample_many(model, w.scaled(-1.0), x, size, rng)
    return first, second


def pair_feedback(delta_first: float, delta_second: float, mode: str) -> float:
    """Pairwise feedback from two pointwise losses.

    Continuous mode returns the loss gap when the first member is strictly
    worse, binary mode returns 1 in that case; both return 0 otherwise.
    """
    delta_first = _check_unit_interval("delta_first", delta_first)
    delta_second = _check_unit_interval("delta_second", delta_second)
    if mode not in ("bin", "cont"):
        raise ValueError(f"mode must be 'bin' or 'cont', got {mode!r}")
    if delta_first > delta_second:
        return 1.0 if mode == "bin" else delta_first - delta_second
    return 0.0


def pair_expected_features(
    model: ChainModel, w: SparseVector, x: ChainInstance
) -> SparseVector:
    """Exact pair-feature expectation E[phi(x, y_i) - phi(x, y_j)].

    By the factorization of the pair model this is the difference between
    the chain expectation under w and the one under -w; no sampling needed.
    """
    exp_pair = expected_features(model, w, x)
    exp_pair.add_scaled(expected_features(model, w.scaled(-1.0), x), -1.0)
    return exp_pair


def pr_gradient(
    model: ChainModel,
    w: SparseVector,
    x: ChainInstance,
    pair: PairSample,
    delta_pair: float,
) -> SparseVector:
    """Pairwise-preference stochastic gradient over ordered output pairs."""
    delta_pair = _check_unit_interval("delta_pair", delta_pair)
    if delta_pair == 0.0:
        return SparseVector()
    grad = extract_features(model, x, pair.first)
    grad.add_scaled(extract_features(model, x, pair.second), -1.0)
    grad.add_scaled(pair_expected_features(model, w, x), -1.0)
    return grad.scale(delta_pair)


def ce_gradient(
    model: ChainModel,
    w: SparseVector,
    x: ChainInstance,
    y_sampled,
    gain: float,
    clip: "ClippingConfig | float | None" = None,
) -> SparseVector:
    """Cross-entropy stochastic gradient with clipped importance weight.

    s = (gain / max(p_w(y~|x), k)) * (-phi(x, y~) + E_p[phi]).  With k = 0
    the estimate is unbiased; k > 0 trades bias for bounded variance.
    """
    gain = _check_unit_interval("gain", gain)
    clip = ClippingConfig.coerce(clip)
    if gain == 0.0:
        return SparseVector()
    p_hat = max(prob(model, w, x, y_sampled), clip.k)
    grad = expected_features(model, w, x)
    grad.add_scaled(extract_features(model, x, y_sampled), -1.0)
    return grad.scale(gain / p_hat)
