"""Running empirical measures, ring-restricted conditioning, and stability.

An :class:`EmpiricalMeasure` stores every atom a chain has visited, grouped
by energy ring at insertion time, with multiplicity (no weight collapsing):
the feeding chain's full realized history is exactly what the interaction
kernel conditions on, and uniform draws stay O(1). Each atom carries weight
1/(total count).

Snapshots are prefix views: atoms are append-only, so freezing the per-ring
counts yields a zero-copy, immutable picture of the measure at a past step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, StabilityError
from .state_space import FiniteSpace, RingPartition


class EmpiricalMeasure:
    """Uniform measure on all states inserted so far, grouped by ring."""

    def __init__(self, partition: RingPartition):
        self.partition = partition
        self._ring_atoms: list[list] = [[] for _ in range(partition.d)]
        self._order: list[tuple[int, object]] = []  # (ring, state) in insertion order
        self._total = 0

    # -- update ------------------------------------------------------------
    def insert(self, x) -> None:
        """Append one atom; equivalent to the convex update
        S_n = S_{n-1} + 1/(n+1) [delta_x - S_{n-1}]."""
        ring = self.partition.assign(x)
        self._ring_atoms[ring].append(x)
        self._order.append((ring, x))
        self._total += 1

    # -- mass queries --------------------------------------------------------
    @property
    def d(self) -> int:
        return self.partition.d

    @property
    def total_count(self) -> int:
        return self._total

    def ring_count(self, ring: int) -> int:
        return len(self._ring_atoms[ring])

    def ring_mass(self, ring: int) -> float:
        if self._total == 0:
            return 0.0
        return len(self._ring_atoms[ring]) / self._total

    def masses(self) -> np.ndarray:
        if self._total == 0:
            return np.zeros(self.d)
        return np.array([len(a) for a in self._ring_atoms], dtype=float) / self._total

    # -- sampling and conditioning --------------------------------------------
    def draw(self, ring: int, rng: np.random.Generator):
        """Uniform draw (with multiplicity) from the stored atoms of a ring."""
        atoms = self._ring_atoms[ring]
        if not atoms:
            raise StabilityError(f"ring {ring} holds no atoms")
        return atoms[int(rng.integers(len(atoms)))]

    def restrict(self, x) -> "RestrictedMeasure":
        """The conditional measure mu_x: this measure given the ring of x."""
        ring = self.partition.assign(x)
        n = len(self._ring_atoms[ring])
        if n == 0:
            raise StabilityError(f"ring {ring} of state {x!r} holds no atoms")
        return RestrictedMeasure(self, ring, n)

    def snapshot(self) -> "MeasureSnapshot":
        """Immutable prefix view of the measure as it stands now."""
        return MeasureSnapshot(self, tuple(len(a) for a in self._ring_atoms), self._total)

    def atoms(self, ring: int):
        return iter(self._ring_atoms[ring])

    # -- finite-space vector form ----------------------------------------------
    def as_vector(self, space: FiniteSpace) -> np.ndarray:
        """Probability vector over an enumerated space (finite spaces only)."""
        if self._total == 0:
            raise StabilityError("empty measure has no probability vector")
        v = np.zeros(space.size)
        for _, x in self._order:
            v[int(x)] += 1.0
        return v / self._total

    def dump_rows(self):
        """(step, state, ring) rows in insertion order, for the text dump."""
        for step, (ring, x) in enumerate(self._order):
            yield step, x, ring


class MeasureSnapshot:
    """Frozen prefix of an EmpiricalMeasure: counts fixed, storage shared."""

    def __init__(self, source: EmpiricalMeasure, ring_counts: tuple[int, ...], total: int):
        self._source = source
        self._counts = ring_counts
        self._total = total

    @property
    def d(self) -> int:
        return self._source.d

    @property
    def total_count(self) -> int:
        return self._total

    def ring_count(self, ring: int) -> int:
        return self._counts[ring]

    def ring_mass(self, ring: int) -> float:
        if self._total == 0:
            return 0.0
        return self._counts[ring] / self._total

    def masses(self) -> np.ndarray:
        if self._total == 0:
            return np.zeros(self.d)
        return np.array(self._counts, dtype=float) / self._total

    def draw(self, ring: int, rng: np.random.Generator):
        n = self._counts[ring]
        if n == 0:
            raise StabilityError(f"ring {ring} holds no atoms in snapshot")
        return self._source._ring_atoms[ring][int(rng.integers(n))]

    def restrict(self, x) -> "RestrictedMeasure":
        ring = self._source.partition.assign(x)
        n = self._counts[ring]
        if n == 0:
            raise StabilityError(f"ring {ring} of state {x!r} holds no atoms in snapshot")
        return RestrictedMeasure(self._source, ring, n)

    def as_vector(self, space: FiniteSpace) -> np.ndarray:
        if self._total == 0:
            raise StabilityError("empty snapshot has no probability vector")
        v = np.zeros(space.size)
        for ring, x in self._source._order[: self._total]:
            v[int(x)] += 1.0
        return v / self._total


@dataclass(frozen=True)
class RestrictedMeasure:
    """mu_x: uniform (with multiplicity) over one ring's first `count` atoms."""

    source: EmpiricalMeasure
    ring: int
    count: int

    def draw(self, rng: np.random.Generator):
        return self.source._ring_atoms[self.ring][int(rng.integers(self.count))]

    def mean(self, f) -> float:
        """Average of f over the restricted atoms: S_{m,x}(f)."""
        atoms = self.source._ring_atoms[self.ring][: self.count]
        return float(sum(f(a) for a in atoms)) / self.count

    def measure_of(self, states) -> float:
        """mu_x(A) for an atom set A (membership counted with multiplicity)."""
        members = set(states)
        atoms = self.source._ring_atoms[self.ring][: self.count]
        return sum(1 for a in atoms if a in members) / self.count

    def as_vector(self, space: FiniteSpace) -> np.ndarray:
        v = np.zeros(space.size)
        for a in self.source._ring_atoms[self.ring][: self.count]:
            v[int(a)] += 1.0
        return v / self.count


@dataclass
class StabilityViolation:
    step: int
    chain: int
    ring: int
    mass: float


@dataclass
class StabilityMonitor:
    """Watches ring masses against the stability threshold theta.

    The threshold is an assumption about the run, not an algorithmic step,
    so by default violations are recorded and reported, never fatal; the
    caller decides whether to abort.
    """

    theta: float
    violations: list[StabilityViolation] = field(default_factory=list)
    min_mass_seen: float = np.inf

    def __post_init__(self):
        if not (0.0 < self.theta <= 1.0):
            raise ConfigurationError(f"theta must lie in (0, 1], got {self.theta}")

    def check(self, measure, step: int, chain: int = 0) -> list[StabilityViolation]:
        """Record and return violations for every ring with mass below theta."""
        fresh = []
        masses = measure.masses()
        lo = float(masses.min())
        if lo < self.min_mass_seen:
            self.min_mass_seen = lo
        for ring, mass in enumerate(masses):
            if mass < self.theta:
                v = StabilityViolation(step=step, chain=chain, ring=ring, mass=float(mass))
                self.violations.append(v)
                fresh.append(v)
        return fresh


def tv_distance(mu, xi) -> float:
    """Total variation distance between two probability vectors.

    Computed as 0.5 * sum |mu - xi|, which equals the sup-over-sets
    definition on enumerated spaces; always in [0, 1].
    """
    p = np.asarray(mu, dtype=float)
    q = np.asarray(xi, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    for name, v in (("mu", p), ("xi", q)):
        if np.any(v < -1e-12) or abs(v.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} is not a probability vector (sum={v.sum()!r})")
    return 0.5 * float(np.abs(p - q).sum())
