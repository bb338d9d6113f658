"""Experiment configuration: schema, validation, and object construction.

Configs are plain JSON-compatible dicts (see README for the schema). Loading
resolves them into live objects (space, ladder, partition, kernel set) and
validates every cross-reference; all failures raise
:class:`ConfigurationError` so the CLI can map them to exit code 2.

Seeding rule: replicate ``i`` of a run with master seed ``s`` draws from
``numpy.random.SeedSequence([s, i])``, whose spawned children seed the
per-chain generators in chain order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .kernels import (
    GaussianWalkProposal,
    KernelSet,
    NeighborProposal,
    UniformProposal,
)
from .state_space import (
    BoxSpace,
    DensityLadder,
    FiniteSpace,
    RingPartition,
    ladder_masses,
    tempered_ladder,
)

VARIANTS = ("selection-mutation", "ee-jump")
STABILITY_POLICIES = ("warn", "abort")


@dataclass(frozen=True)
class TestFunction:
    """Named bounded test function; on finite spaces also a vector."""

    name: str
    fn: Callable
    vector: np.ndarray | None = None

    def __call__(self, x) -> float:
        return float(self.fn(x))


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description."""

    raw: dict
    space: FiniteSpace | BoxSpace
    ladder: DensityLadder
    partition: RingPartition
    kernels: KernelSet
    variant: str
    offsets: tuple[int, ...]  # activation offsets N_1..N_{r-1}
    total_rounds: int
    initial_states: tuple
    replicates: int
    seed: int
    theta: float
    stability_policy: str
    strict_snapshot: bool
    snapshot_every: int
    test_functions: tuple[TestFunction, ...] = field(default_factory=tuple)

    @property
    def r(self) -> int:
        return self.ladder.r

    def activation_threshold(self, chain: int) -> int:
        """Round after which `chain` (0-based) starts moving."""
        return int(sum(self.offsets[:chain]))

    def schedule_lengths(self) -> tuple[int, ...]:
        """N_1..N_r with N_r the remainder of the run."""
        burn = sum(self.offsets)
        return tuple(self.offsets) + (self.total_rounds - burn,)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest()

    def replicate_seed_seq(self, replicate: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.seed, int(replicate)])


def _gaussian_mixture_logpdf(means, scales, weights) -> Callable:
    means = np.asarray(means, dtype=float)
    scales = np.asarray(scales, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if means.ndim == 1:
        means = means[:, None]
    if np.any(scales <= 0) or np.any(weights <= 0):
        raise ConfigurationError("mixture scales and weights must be positive")
    dim = means.shape[1]
    logw = np.log(weights / weights.sum())

    def logpdf(x):
        x = np.asarray(x, dtype=float)
        comp = (
            logw
            - 0.5 * np.sum((x[None, :] - means) ** 2, axis=1) / scales**2
            - dim * np.log(scales)
        )
        m = comp.max()
        return float(m + math.log(np.exp(comp - m).sum()))

    return logpdf


def _build_space(spec: dict):
    kind = spec.get("kind")
    if kind == "finite":
        return FiniteSpace(spec["size"])
    if kind == "box":
        return BoxSpace(spec["lower"], spec["upper"])
    raise ConfigurationError(f"unknown space kind {kind!r}")


def _build_ladder(spec: dict, space) -> DensityLadder:
    if "log_weights" in spec:
        return DensityLadder(space, [np.asarray(row, dtype=float) for row in spec["log_weights"]])
    if "weights" in spec:
        rows = []
        for row in spec["weights"]:
            w = np.asarray(row, dtype=float)
            if np.any(w <= 0):
                raise ConfigurationError("density weights must be strictly positive")
            rows.append(np.log(w))
        return DensityLadder(space, rows)
    if "temperatures" in spec:
        temps = spec["temperatures"]
        if "base_weights" in spec:
            w = np.asarray(spec["base_weights"], dtype=float)
            if np.any(w <= 0):
                raise ConfigurationError("base weights must be strictly positive")
            return tempered_ladder(space, np.log(w), temps)
        if "base_log_weights" in spec:
            return tempered_ladder(space, np.asarray(spec["base_log_weights"], dtype=float), temps)
        if "base" in spec:
            base = spec["base"]
            if base.get("family") != "gaussian_mixture":
                raise ConfigurationError(f"unknown density family {base.get('family')!r}")
            logpdf = _gaussian_mixture_logpdf(base["means"], base["scales"], base["weights"])
            return tempered_ladder(space, logpdf, temps)
    raise ConfigurationError(
        "ladder spec needs log_weights, weights, or a base with temperatures"
    )


def _build_partition(spec: dict, space, ladder: DensityLadder) -> RingPartition:
    if "labels" in spec:
        return RingPartition(space, labels=spec["labels"])
    if "thresholds" in spec:
        energy_name = spec.get("energy", "neg_log_target")
        if energy_name != "neg_log_target":
            raise ConfigurationError(f"unknown energy function {energy_name!r}")
        target = ladder.r - 1

        def energy(x, _lvl=target):
            return -ladder.log_density(_lvl, x)

        return RingPartition(space, energy=energy, thresholds=spec["thresholds"])
    raise ConfigurationError("partition spec needs labels or thresholds")


def _build_proposals(spec, space, r: int):
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind", "uniform" if isinstance(space, FiniteSpace) else "gaussian_walk")
    if kind == "uniform":
        return tuple(UniformProposal() for _ in range(r))
    if kind == "neighbor":
        return tuple(NeighborProposal() for _ in range(r))
    if kind == "gaussian_walk":
        steps = spec.get("steps")
        if steps is None:
            raise ConfigurationError("gaussian_walk proposal needs per-level steps")
        steps = [float(s) for s in steps]
        if len(steps) != r:
            raise ConfigurationError(f"need {r} step sizes, got {len(steps)}")
        return tuple(GaussianWalkProposal(s) for s in steps)
    raise ConfigurationError(f"unknown proposal kind {kind!r}")


def _build_test_functions(specs, space, partition) -> tuple[TestFunction, ...]:
    out = []
    for i, spec in enumerate(specs or []):
        kind = spec.get("kind")
        name = spec.get("name", f"f{i}")
        if kind == "ring_indicator":
            ring = int(spec["ring"])
            if not (0 <= ring < partition.d):
                raise ConfigurationError(f"test function {name}: no ring {ring}")
            fn = lambda x, _r=ring: 1.0 if partition.assign(x) == _r else 0.0
        elif kind == "coordinate":
            axis = int(spec.get("axis", 0))
            if isinstance(space, FiniteSpace):
                fn = lambda x: float(x)
            else:
                fn = lambda x, _a=axis: float(np.asarray(x)[_a])
        elif kind == "table":
            values = np.asarray(spec["values"], dtype=float)
            if not isinstance(space, FiniteSpace) or values.shape != (space.size,):
                raise ConfigurationError(f"test function {name}: table needs one value per state")
            fn = lambda x, _v=values: float(_v[int(x)])
        else:
            raise ConfigurationError(f"unknown test function kind {kind!r}")
        vector = None
        if isinstance(space, FiniteSpace):
            vector = np.array([fn(s) for s in range(space.size)])
        out.append(TestFunction(name=name, fn=fn, vector=vector))
    return tuple(out)


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Resolve and validate a configuration dict."""
    try:
        space = _build_space(raw["space"])
        ladder = _build_ladder(raw["ladder"], space)
        partition = _build_partition(raw["partition"], space, ladder)
    except KeyError as exc:
        raise ConfigurationError(f"missing config section: {exc}") from exc

    kernel_spec = raw.get("kernel", {})
    variant = kernel_spec.get("variant", "selection-mutation")
    if variant not in VARIANTS:
        raise ConfigurationError(f"kernel variant must be one of {VARIANTS}, got {variant!r}")
    epsilon = kernel_spec.get("epsilon", 1.0)
    proposals = _build_proposals(kernel_spec.get("proposal", {}), space, ladder.r)
    kernels = KernelSet(ladder, partition, proposals, epsilon)

    sched = raw.get("schedule", {})
    offsets = tuple(int(n) for n in sched.get("offsets", []))
    if len(offsets) != ladder.r - 1:
        raise ConfigurationError(
            f"schedule needs {ladder.r - 1} activation offsets, got {len(offsets)}"
        )
    if any(n < 1 for n in offsets):
        raise ConfigurationError(f"activation offsets must be >= 1: {offsets}")
    total_rounds = int(sched.get("total_rounds", 0))
    if total_rounds <= sum(offsets):
        raise ConfigurationError(
            f"total_rounds ({total_rounds}) must exceed the activation burn-in "
            f"({sum(offsets)})"
        )

    initial = raw.get("initial_states")
    if initial is None or len(initial) != ladder.r:
        raise ConfigurationError(f"need {ladder.r} initial states")
    if isinstance(space, FiniteSpace):
        initial_states = tuple(space.require(int(x)) for x in initial)
    else:
        initial_states = tuple(space.require(np.asarray(x, dtype=float)) for x in initial)

    replicates = int(raw.get("replicates", 1))
    if replicates < 1:
        raise ConfigurationError(f"replicates must be >= 1, got {replicates}")

    stability = raw.get("stability", {})
    theta = float(stability.get("theta", 0.05))
    if not (0.0 < theta <= 1.0):
        raise ConfigurationError(f"theta must lie in (0, 1], got {theta}")
    policy = stability.get("policy", "warn")
    if policy not in STABILITY_POLICIES:
        raise ConfigurationError(f"stability policy must be one of {STABILITY_POLICIES}")

    trace_spec = raw.get("trace", {})
    snapshot_every = int(trace_spec.get("snapshot_every", 256))
    if snapshot_every < 1:
        raise ConfigurationError("snapshot_every must be >= 1")

    # partition validity: every ring charged by every level (exact on finite)
    if isinstance(space, FiniteSpace):
        ladder_masses(ladder, partition)

    return ExperimentConfig(
        raw=raw,
        space=space,
        ladder=ladder,
        partition=partition,
        kernels=kernels,
        variant=variant,
        offsets=offsets,
        total_rounds=total_rounds,
        initial_states=initial_states,
        replicates=replicates,
        seed=int(raw.get("seed", 0)),
        theta=theta,
        stability_policy=policy,
        strict_snapshot=bool(trace_spec.get("strict_snapshot", False)),
        snapshot_every=snapshot_every,
        test_functions=_build_test_functions(raw.get("test_functions"), space, partition),
    )


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


def four_state_raw(**overrides) -> dict:
    """The shipped 4-state reference fixture: pi_1 uniform, pi_2 ~ (1,1,2,4),
    rings {0,1} and {2,3}, uniform-independent proposals."""
    raw = {
        "space": {"kind": "finite", "size": 4},
        "ladder": {"weights": [[1, 1, 1, 1], [1, 1, 2, 4]]},
        "partition": {"labels": [0, 0, 1, 1]},
        "kernel": {"variant": "selection-mutation", "epsilon": 0.5, "proposal": "uniform"},
        "schedule": {"offsets": [50], "total_rounds": 4096},
        "initial_states": [0, 0],
        "replicates": 1,
        "seed": 74321,
        "stability": {"theta": 0.05, "policy": "warn"},
        "trace": {"snapshot_every": 256, "strict_snapshot": False},
        "test_functions": [
            {"name": "ring1", "kind": "ring_indicator", "ring": 1},
            {"name": "coord", "kind": "coordinate"},
        ],
    }
    raw.update(overrides)
    return raw


def four_state_config(**overrides) -> ExperimentConfig:
    return config_from_dict(four_state_raw(**overrides))
