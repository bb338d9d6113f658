"""Transition mechanisms: local MH moves, ring swaps, and interaction steps.

A :class:`KernelSet` bundles a ladder, a ring partition, one proposal per
level, and the per-level mixture weight epsilon, and exposes every move the
sampler makes:

* ``mh_step``        -- one Metropolis-Hastings move targeting level i
* ``swap_step``      -- exchange attempt between a state and a feeder draw,
                        accepted with min(1, pi_i(y) pi_{i-1}(x) / (pi_i(x) pi_{i-1}(y)))
* ``selection_step`` -- feeder draw, swap attempt, then one local move from
                        the first post-swap coordinate (selection/mutation)
* ``nonlinear_step`` -- the epsilon-mixture of local and selection moves
* ``ee_jump_step``   -- the original equi-energy jump: feeder draw accepted
                        by the swap ratio, with no trailing local move

Randomness contract: each step consumes draws from its generator in the
fixed order (branch coin, feeder draw, swap coin, proposal, MH coin), so
runs are bit-reproducible per seed. Degenerate mixtures skip the branch
coin: epsilon == 0 always takes the local branch and epsilon == 1 always
takes the interaction branch, without consuming a draw.

If the feeder measure holds no atoms in the current state's ring, the
interaction branch falls back to the local kernel and flags the event; the
caller logs it as a stability fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ConfigurationError, NumericalError
from .state_space import DensityLadder, FiniteSpace, RingPartition


@dataclass(frozen=True)
class UniformProposal:
    """Independent uniform proposal over a finite space (all S states)."""

    kind = "uniform"


@dataclass(frozen=True)
class NeighborProposal:
    """Lazy symmetric walk on the cycle 0..S-1: half the proposal mass stays
    put, a quarter goes to each neighbor. The holding mass keeps every level
    aperiodic whatever the target."""

    kind = "neighbor"


@dataclass(frozen=True)
class GaussianWalkProposal:
    """Isotropic Gaussian random-walk proposal on a box; out-of-box rejects."""

    step: float
    kind = "gaussian_walk"

    def __post_init__(self):
        if not (self.step > 0):
            raise ConfigurationError(f"gaussian walk step must be positive, got {self.step}")


Proposal = Union[UniformProposal, NeighborProposal, GaussianWalkProposal]


@dataclass
class StepInfo:
    """What a single interacting move did; recorded into the trace."""

    branch: str  # "local" | "selection" | "jump"
    swap_accepted: bool | None = None
    fallback: bool = False


class KernelSet:
    """All transition mechanisms for one ladder/partition/proposal setup."""

    def __init__(
        self,
        ladder: DensityLadder,
        partition: RingPartition,
        proposals: Sequence[Proposal],
        epsilon: float | Sequence[float] = 1.0,
    ):
        if len(proposals) != ladder.r:
            raise ConfigurationError(
                f"need one proposal per level: got {len(proposals)} for r={ladder.r}"
            )
        self.ladder = ladder
        self.partition = partition
        self.proposals = tuple(proposals)
        if np.isscalar(epsilon):
            eps = [float(epsilon)] * ladder.r
        else:
            eps = [float(e) for e in epsilon]
            if len(eps) == ladder.r - 1:  # convenience: one per interacting level
                eps = [0.0] + eps
            if len(eps) != ladder.r:
                raise ConfigurationError(
                    f"epsilon must be scalar or per-level ({ladder.r} values), got {len(eps)}"
                )
        if any(not (0.0 <= e <= 1.0) for e in eps):
            raise ConfigurationError(f"epsilon values must lie in [0, 1]: {eps}")
        self.epsilons = tuple(eps)
        finite = isinstance(ladder.space, FiniteSpace)
        for i, p in enumerate(self.proposals):
            if finite and isinstance(p, GaussianWalkProposal):
                raise ConfigurationError(f"level {i}: gaussian walk needs a box space")
            if not finite and not isinstance(p, GaussianWalkProposal):
                raise ConfigurationError(f"level {i}: box spaces need a gaussian walk proposal")
        self._logw = ladder.log_table() if finite else None

    # -- local Metropolis-Hastings ------------------------------------------------
    def _logpi(self, level: int, x) -> float:
        if self._logw is not None:
            return self._logw[level, int(x)]
        v = self.ladder.log_density(level, x)
        if not math.isfinite(v):
            raise NumericalError(f"log-density at level {level} is not finite at {x!r}")
        return v

    def mh_step(self, level: int, x, rng: np.random.Generator):
        """One MH transition targeting level's density; proposals are
        symmetric so acceptance is min(1, pi(y)/pi(x))."""
        prop = self.proposals[level]
        if isinstance(prop, UniformProposal):
            y = int(rng.integers(self.ladder.space.size))
        elif isinstance(prop, NeighborProposal):
            size = self.ladder.space.size
            u = rng.random()
            if u < 0.5:
                y = int(x)
            else:
                y = (int(x) + (1 if u < 0.75 else -1)) % size
        else:
            y = np.asarray(x, dtype=float) + prop.step * rng.standard_normal(
                self.ladder.space.dim
            )
        u = rng.random()  # MH coin drawn unconditionally, keeps stream alignment
        if isinstance(prop, GaussianWalkProposal) and not self.ladder.space.contains(y):
            return x
        log_a = self._logpi(level, y) - self._logpi(level, x)
        if log_a >= 0.0 or u < math.exp(log_a):
            return y
        return x

    # -- swap mechanics ------------------------------------------------------------
    def swap_log_ratio(self, level: int, x, y) -> float:
        if level < 1:
            raise ConfigurationError("swaps need a feeder level below them (level >= 1)")
        return (
            self._logpi(level, y)
            + self._logpi(level - 1, x)
            - self._logpi(level, x)
            - self._logpi(level - 1, y)
        )

    def swap_accept_prob(self, level: int, x, y) -> float:
        """min(1, pi_i(y) pi_{i-1}(x) / (pi_i(x) pi_{i-1}(y))), in log space."""
        ratio = self.swap_log_ratio(level, x, y)
        if math.isnan(ratio):
            raise NumericalError(f"swap ratio is NaN for pair ({x!r}, {y!r})")
        return math.exp(min(0.0, ratio))

    def swap_step(self, level: int, x, y, rng: np.random.Generator):
        """Exchange (x, y) -> (y, x) with the swap probability.

        Returns (x', y', accepted); the output pair is always a permutation
        of the input pair.
        """
        alpha = self.swap_accept_prob(level, x, y)
        if rng.random() < alpha:
            return y, x, True
        return x, y, False

    # -- interaction moves -----------------------------------------------------------
    def selection_step(self, level: int, x, feeder, rng: np.random.Generator):
        """Selection/mutation move: draw z from the feeder restricted to
        ring(x), attempt the swap, then one local move from the first
        post-swap coordinate. Falls back to the local kernel when the ring
        holds no feeder atoms."""
        ring = self.partition.assign(x)
        if feeder.ring_count(ring) == 0:
            return self.mh_step(level, x, rng), StepInfo("local", fallback=True)
        z = feeder.draw(ring, rng)
        x2, _, accepted = self.swap_step(level, x, z, rng)
        out = self.mh_step(level, x2, rng)
        return out, StepInfo("selection", swap_accepted=accepted)

    def nonlinear_step(self, level: int, x, feeder, rng: np.random.Generator):
        """(1 - eps) local + eps selection; the branch uses its own draw."""
        eps = self.epsilons[level]
        if eps >= 1.0:
            return self.selection_step(level, x, feeder, rng)
        if eps <= 0.0 or rng.random() >= eps:
            return self.mh_step(level, x, rng), StepInfo("local")
        return self.selection_step(level, x, feeder, rng)

    def ee_jump_step(self, level: int, x, feeder, rng: np.random.Generator):
        """Original equi-energy variant: the interaction branch proposes a
        feeder atom from ring(x) and accepts it with the swap probability,
        with no trailing local move. The jump never leaves ring(x)."""
        eps = self.epsilons[level]
        if eps < 1.0 and (eps <= 0.0 or rng.random() >= eps):
            return self.mh_step(level, x, rng), StepInfo("local")
        ring = self.partition.assign(x)
        if feeder.ring_count(ring) == 0:
            return self.mh_step(level, x, rng), StepInfo("local", fallback=True)
        z = feeder.draw(ring, rng)
        alpha = self.swap_accept_prob(level, x, z)
        if rng.random() < alpha:
            return z, StepInfo("jump", swap_accepted=True)
        return x, StepInfo("jump", swap_accepted=False)

    def interacting_step(self, level: int, x, feeder, rng: np.random.Generator, variant: str):
        if variant == "selection-mutation":
            return self.nonlinear_step(level, x, feeder, rng)
        if variant == "ee-jump":
            return self.ee_jump_step(level, x, feeder, rng)
        raise ConfigurationError(f"unknown kernel variant {variant!r}")
