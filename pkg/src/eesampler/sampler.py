"""The staged multi-chain process: activation schedule, rounds, traces.

Chain 0 (the base feeder) moves by plain MH from round 1. Chain k activates
once chains 0..k-1 have completed N_k further rounds: it holds exactly
(state unchanged, measure untouched) until round ``sum(offsets[:k])`` has
passed, then advances by one interacting step per round, reading chain
k-1's empirical measure. Within a round chains update sequentially in
chain order, so chain k sees its feeder as already updated this round; the
optional strict-snapshot mode makes every chain read the feeder as it stood
at the round's start instead (the two differ by one atom of weight
1/(count+1)).

Freezing: in frozen-feeder mode chain 0 and its measure stop updating after
the freeze round, so the interacting chain runs against a fixed feeder
measure from then on; this is the regime whose long-run bias the oracle can
predict exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigurationError, StabilityError
from .kernels import StepInfo
from .measures import EmpiricalMeasure, StabilityMonitor
from .state_space import FiniteSpace


@dataclass
class Trace:
    """Append-only record of a run: per-chain rows, mass snapshots, events."""

    r: int
    state_dim: int  # 0 for finite spaces, k for box spaces
    rows: list = field(default_factory=list)  # (chain, round, state, ring, branch, swap, hold)
    mass_snapshots: list = field(default_factory=list)  # (round, chain, ring, mass)
    events: list = field(default_factory=list)  # (round, chain, kind, ring)
    meta: dict = field(default_factory=dict)

    def record(self, chain, rnd, state, ring, branch, swap, hold):
        self.rows.append((chain, rnd, state, ring, branch, swap, hold))

    def snapshot_masses(self, rnd, chain, masses):
        for ring, mass in enumerate(masses):
            self.mass_snapshots.append((rnd, chain, ring, float(mass)))

    def chain_states(self, chain: int) -> list:
        return [row[2] for row in self.rows if row[0] == chain]

    def _state_header(self) -> list[str]:
        if self.state_dim == 0:
            return ["state"]
        return [f"state_{i}" for i in range(self.state_dim)]

    def _state_cells(self, state) -> list[str]:
        if self.state_dim == 0:
            return [str(int(state))]
        return [repr(float(v)) for v in np.asarray(state, dtype=float)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["chain", "round"] + self._state_header()
                            + ["ring", "branch", "swap_accept", "holds"])
            for chain, rnd, state, ring, branch, swap, hold in self.rows:
                swap_cell = "" if swap is None else str(int(swap))
                writer.writerow([chain, rnd] + self._state_cells(state)
                                + [ring, branch, swap_cell, int(hold)])

    def write_mass_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "chain", "ring", "mass"])
            for rnd, chain, ring, mass in self.mass_snapshots:
                writer.writerow([rnd, chain, ring, repr(mass)])

    def write_events_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "chain", "kind", "ring"])
            for rnd, chain, kind, ring in self.events:
                writer.writerow([rnd, chain, kind, ring])


class ChainEnsemble:
    """Current states, per-chain empirical measures, and the round engine."""

    def __init__(
        self,
        config: ExperimentConfig,
        replicate: int = 0,
        record_trace: bool = True,
        freeze_feeder_after: int | None = None,
        fixed_feeder_atoms=None,
    ):
        self.config = config
        self.kernels = config.kernels
        self.r = config.r
        self.n = 0
        self.thresholds = [config.activation_threshold(k) for k in range(self.r)]
        self.freeze_feeder_after = freeze_feeder_after
        seq = config.replicate_seed_seq(replicate)
        self.rngs = [np.random.default_rng(child) for child in seq.spawn(self.r)]
        self.monitor = StabilityMonitor(config.theta)

        self._fallbacks = 0
        self.states = list(config.initial_states)
        self.measures = [EmpiricalMeasure(config.partition) for _ in range(self.r)]
        for k, x in enumerate(self.states):
            self.measures[k].insert(x)

        if fixed_feeder_atoms is not None:
            if self.r != 2:
                raise ConfigurationError("fixed feeder measures need exactly two chains")
            feeder = EmpiricalMeasure(config.partition)
            for atom in fixed_feeder_atoms:
                feeder.insert(atom)
            self.measures[0] = feeder
            self.freeze_feeder_after = 0  # chain 0 never moves
            self.thresholds[1] = 0  # the interacting chain starts immediately

        state_dim = 0 if isinstance(config.space, FiniteSpace) else config.space.dim
        self.trace = Trace(r=self.r, state_dim=state_dim) if record_trace else None
        if self.trace is not None:
            for k, x in enumerate(self.states):
                ring = config.partition.assign(x)
                self.trace.record(k, 0, x, ring, "init", None, 0)

    # -- schedule -------------------------------------------------------------
    def chain_active(self, chain: int, rnd: int | None = None) -> bool:
        rnd = self.n if rnd is None else rnd
        if chain == 0 and self.freeze_feeder_after is not None:
            return rnd > self.thresholds[0] and rnd <= self.freeze_feeder_after
        return rnd > self.thresholds[chain]

    def move_count(self, chain: int) -> int:
        """How many times `chain` has moved by the current round."""
        if chain == 0 and self.freeze_feeder_after is not None:
            return max(0, min(self.n, self.freeze_feeder_after) - self.thresholds[0])
        return max(0, self.n - self.thresholds[chain])

    # -- the round engine -------------------------------------------------------
    def step_round(self) -> None:
        """Advance every active chain by one move; inactive chains hold."""
        cfg = self.config
        self.n += 1
        feeder_views = None
        if cfg.strict_snapshot:
            feeder_views = [m.snapshot() for m in self.measures]
        for k in range(self.r):
            if not self.chain_active(k):
                if self.trace is not None:
                    ring = cfg.partition.assign(self.states[k])
                    self.trace.record(k, self.n, self.states[k], ring, "hold", None, 1)
                continue
            rng = self.rngs[k]
            if k == 0:
                new_state = self.kernels.mh_step(0, self.states[k], rng)
                info = StepInfo("local")
            else:
                feeder = feeder_views[k - 1] if feeder_views is not None else self.measures[k - 1]
                new_state, info = self.kernels.interacting_step(
                    k, self.states[k], feeder, rng, cfg.variant
                )
            self.states[k] = new_state
            self.measures[k].insert(new_state)
            ring = cfg.partition.assign(new_state)
            if info.fallback:
                if self.trace is not None:
                    self.trace.events.append((self.n, k, "fallback", ring))
                self._fallbacks += 1
            if self.trace is not None:
                self.trace.record(k, self.n, new_state, ring, info.branch,
                                  info.swap_accepted, 0)
        self._monitor_feeders()
        if self.trace is not None and self.n % cfg.snapshot_every == 0:
            for k in range(self.r):
                self.trace.snapshot_masses(self.n, k, self.measures[k].masses())

    def _monitor_feeders(self) -> None:
        """A1 watch: each feeding chain's ring masses once its consumer runs."""
        for k in range(self.r - 1):
            if self.chain_active(k + 1):
                fresh = self.monitor.check(self.measures[k], self.n, chain=k)
                if fresh and self.trace is not None:
                    for v in fresh:
                        self.trace.events.append((self.n, k, "low_mass", v.ring))
                if fresh and self.config.stability_policy == "abort":
                    v = fresh[0]
                    raise StabilityError(
                        f"round {self.n}: chain {k} ring {v.ring} mass {v.mass:.4f} "
                        f"below theta={self.config.theta}"
                    )

    def run_rounds(self, rounds: int) -> None:
        for _ in range(rounds):
            self.step_round()

    def finalize_trace(self, replicate: int = 0) -> Trace:
        if self.trace is None:
            raise ConfigurationError("ensemble was created without trace recording")
        if self.n % self.config.snapshot_every != 0:
            for k in range(self.r):
                self.trace.snapshot_masses(self.n, k, self.measures[k].masses())
        self.trace.meta = {
            "config_hash": self.config.config_hash(),
            "master_seed": self.config.seed,
            "replicate": replicate,
            "rounds": self.n,
            "chains": self.r,
            "schedule": list(self.config.schedule_lengths()),
            "theta": self.config.theta,
            "min_ring_mass": None
            if not np.isfinite(self.monitor.min_mass_seen)
            else self.monitor.min_mass_seen,
            "stability_violations": len(self.monitor.violations),
            "fallbacks": self._fallbacks,
            "frozen_after": self.freeze_feeder_after,
        }
        return self.trace


def init_ensemble(config: ExperimentConfig, replicate: int = 0) -> ChainEnsemble:
    """Fresh ensemble: every chain at its initial point, each measure a
    point mass there, chain 0 due to move first."""
    return ChainEnsemble(config, replicate=replicate)


def run(config: ExperimentConfig, replicate: int = 0) -> Trace:
    """Execute the staged schedule for the configured rounds; returns the
    complete trace. Bit-reproducible per (config, seed, replicate)."""
    ens = ChainEnsemble(config, replicate=replicate)
    ens.run_rounds(config.total_rounds)
    return ens.finalize_trace(replicate)


def run_frozen_feeder(
    config: ExperimentConfig,
    freeze_at: int,
    replicate: int = 0,
    fixed_feeder_atoms=None,
) -> Trace:
    """Run with the feeder chain stopped after `freeze_at` rounds (its
    measure then holds freeze_at+1 atoms), or against an explicitly supplied
    fixed atom list. Two chains only: the frozen regime is the single
    feeding chain whose bias the oracle predicts."""
    if config.r != 2:
        raise ConfigurationError("frozen-feeder runs need exactly two chains")
    if fixed_feeder_atoms is None and freeze_at < 1:
        raise ConfigurationError(f"freeze_at must be >= 1, got {freeze_at}")
    ens = ChainEnsemble(
        config,
        replicate=replicate,
        freeze_feeder_after=None if fixed_feeder_atoms is not None else freeze_at,
        fixed_feeder_atoms=fixed_feeder_atoms,
    )
    ens.run_rounds(config.total_rounds)
    return ens.finalize_trace(replicate)
