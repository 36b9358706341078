"""Acquisition agents: two exploration criteria, a reinforced certainty
threshold, an epsilon floor, and the stream baselines.

Every agent votes with a probability in [0, 1] for acquiring the current
sample and then observes the sample pass by (window-based agents push it
whether or not it was acquired).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SlidingWindow, as_feature_vector

__all__ = [
    "AcquisitionContext",
    "Agent",
    "LowDensityAgent",
    "SpaceFillingAgent",
    "CertaintyThresholdAgent",
    "EpsilonGreedyAgent",
    "RandomBaseline",
    "UncertaintyBaseline",
    "local_sparsity",
    "epsilon_wrap",
    "random_baseline_rate",
    "uncertainty_vote",
]

THRESHOLD_FLOOR = 1e-6


@dataclass
class AcquisitionContext:
    """Everything an agent may inspect before voting on one stream sample."""

    features: np.ndarray
    predicted: int
    proba: np.ndarray
    certainty: float
    time_index: int = -1
    budget_total: int = 0
    budget_used: int = 0


def local_sparsity(window: SlidingWindow, x) -> int:
    """Count window members farther from every co-member than from ``x``.

    A member contributes when its cached farthest co-member distance is
    strictly below its distance to ``x``; a high count means ``x`` lies in a
    region the window covers sparsely.
    """
    if len(window) == 0:
        raise ValueError("local sparsity needs a nonempty window")
    v = as_feature_vector(x)
    pts = window.points_matrix()
    if v.size != pts.shape[1]:
        raise ValueError(f"dimension mismatch: {v.size} vs window {pts.shape[1]}")
    diff = pts - v
    to_x = np.sqrt((diff * diff).sum(axis=1))
    far = window.farthest_distances()
    far = np.where(np.isnan(far), 0.0, far)  # singleton window: no co-members
    return int(np.count_nonzero(far < to_x))


def epsilon_wrap(p: float, epsilon: float) -> float:
    """Mix a vote with an epsilon floor of forced acquisition."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"vote must lie in [0, 1], got {p}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    return epsilon + (1.0 - epsilon) * p


def random_baseline_rate(budget: int, stream_len: int) -> float:
    """Constant per-step acquisition probability that spends the budget uniformly."""
    if stream_len <= 0:
        raise ValueError("stream length must be positive")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    return min(budget / stream_len, 1.0)


def uncertainty_vote(certainty: float, threshold: float) -> float:
    """All-or-nothing vote: acquire strictly below the certainty threshold."""
    return 1.0 if certainty < threshold else 0.0


class Agent:
    """Stream-agent interface; subclasses override what they need."""

    name = "agent"

    def propose(self, ctx: AcquisitionContext) -> float:
        raise NotImplementedError

    def observe(self, ctx: AcquisitionContext) -> None:
        """Per-step state update, applied whether or not the sample was acquired."""

    def reinforce(self, signed_reward: float) -> None:
        """Feedback after an acquisition this agent voted for."""

    def seed(self, points) -> None:
        """Prime internal state with the initial pool's feature vectors."""


class LowDensityAgent(Agent):
    """Votes for samples that fall where the recent stream is sparse.

    The raw vote is ``lsf / (L * sparsity_level)`` clipped to 1, where lsf is
    :func:`local_sparsity` against the window before the sample is inserted.
    """

    def __init__(self, capacity: int, sparsity_level: float, name: str = "ld"):
        if not 0.0 < sparsity_level <= 1.0:
            raise ValueError(f"sparsity level must lie in (0, 1], got {sparsity_level}")
        self.window = SlidingWindow(capacity)
        self.sparsity_level = float(sparsity_level)
        self.name = name

    def seed(self, points) -> None:
        for p in points:
            self.window.push(p)

    def propose(self, ctx: AcquisitionContext) -> float:
        if len(self.window) == 0:
            return 1.0  # no density evidence yet
        score = local_sparsity(self.window, ctx.features)
        return min(1.0, score / (self.window.capacity * self.sparsity_level))

    def observe(self, ctx: AcquisitionContext) -> None:
        self.window.push(ctx.features)


class SpaceFillingAgent(Agent):
    """Votes for samples that would fill a gap in the window's coverage.

    The raw vote is the distance from the sample to its nearest window member,
    scaled by the largest nearest-neighbour distance inside the window.
    """

    def __init__(self, capacity: int, name: str = "spf"):
        if capacity < 2:
            raise ValueError("space-filling window needs capacity >= 2")
        self.window = SlidingWindow(capacity)
        self.name = name

    def seed(self, points) -> None:
        for p in points:
            self.window.push(p)

    def propose(self, ctx: AcquisitionContext) -> float:
        if len(self.window) < 2:
            return 1.0  # spread undefined below two members
        pts = self.window.points_matrix()
        diff = pts - ctx.features
        gap = float(np.sqrt((diff * diff).sum(axis=1)).min())
        spread = float(self.window.nearest_distances().max())
        if spread == 0.0:  # window collapsed onto one location
            return 1.0 if gap > 0.0 else 0.0
        return min(1.0, gap / spread)

    def observe(self, ctx: AcquisitionContext) -> None:
        self.window.push(ctx.features)


class CertaintyThresholdAgent(Agent):
    """Votes to acquire while the model is uncertain; feedback moves the bar.

    A positive reward (the acquired label contradicted the model) raises the
    threshold so the agent keeps acquiring; the signed penalty lowers it.
    """

    def __init__(self, threshold: float, learning_rate: float,
                 penalty: float = -0.5, name: str = "ral"):
        if not 0.0 < threshold <= 1.0:
            raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
        if learning_rate <= 0.0:
            raise ValueError("learning rate must be positive")
        if penalty >= 0.0:
            raise ValueError("the penalty enters the update signed (negative)")
        self.threshold = float(threshold)
        self.learning_rate = float(learning_rate)
        self.penalty = float(penalty)
        self.name = name

    def propose(self, ctx: AcquisitionContext) -> float:
        return uncertainty_vote(ctx.certainty, self.threshold)

    def reinforce(self, signed_reward: float) -> None:
        if not math.isfinite(signed_reward):
            raise ValueError("reward must be finite")
        factor = 1.0 + self.learning_rate * (1.0 - 2.0 ** (signed_reward / self.penalty))
        self.threshold = min(self.threshold * factor, 1.0)
        self.threshold = max(self.threshold, THRESHOLD_FLOOR)


class EpsilonGreedyAgent(Agent):
    """Wraps an agent so its vote never drops below an epsilon floor."""

    def __init__(self, inner: Agent, epsilon: float = 0.01):
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
        self.inner = inner
        self.epsilon = float(epsilon)
        self.name = inner.name

    def propose(self, ctx: AcquisitionContext) -> float:
        return epsilon_wrap(self.inner.propose(ctx), self.epsilon)

    def observe(self, ctx: AcquisitionContext) -> None:
        self.inner.observe(ctx)

    def reinforce(self, signed_reward: float) -> None:
        self.inner.reinforce(signed_reward)

    def seed(self, points) -> None:
        self.inner.seed(points)


class RandomBaseline(Agent):
    """Acquires at a constant rate, blind to the sample."""

    def __init__(self, rate: float, name: str = "rs"):
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"rate must lie in [0, 1], got {rate}")
        self.rate = float(rate)
        self.name = name

    def propose(self, ctx: AcquisitionContext) -> float:
        return self.rate


class UncertaintyBaseline(Agent):
    """Acquires whenever model certainty sits strictly below a fixed threshold."""

    def __init__(self, threshold: float = 0.7, name: str = "us"):
        if not 0.0 < threshold <= 1.0:
            raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
        self.threshold = float(threshold)
        self.name = name

    def propose(self, ctx: AcquisitionContext) -> float:
        return uncertainty_vote(ctx.certainty, self.threshold)
