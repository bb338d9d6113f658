import numpy as np
import pytest

from eesampler.errors import ConfigurationError, StabilityError
from eesampler.measures import EmpiricalMeasure, StabilityMonitor, tv_distance
from eesampler.state_space import FiniteSpace, RingPartition


def two_ring_measure(atoms=()):
    part = RingPartition(FiniteSpace(4), labels=[0, 0, 1, 1])
    m = EmpiricalMeasure(part)
    for a in atoms:
        m.insert(a)
    return m


# ---------------------------------------------------------------------------
# insertion / update consistency
# ---------------------------------------------------------------------------

def test_two_atom_average():
    m = two_ring_measure([0])
    m.insert(2)
    np.testing.assert_allclose(m.as_vector(FiniteSpace(4)), [0.5, 0.0, 0.5, 0.0])
    np.testing.assert_allclose(m.masses(), [0.5, 0.5])


def test_counting_with_multiplicity():
    m = two_ring_measure([0, 2])
    m.insert(0)
    np.testing.assert_allclose(m.as_vector(FiniteSpace(4)), [2 / 3, 0.0, 1 / 3, 0.0])


def test_recursive_update_matches_batch_recount():
    # oracle: recount ring membership from scratch after every insertion
    rng = np.random.default_rng(314)
    part = RingPartition(FiniteSpace(6), labels=[0, 1, 2, 0, 1, 2])
    m = EmpiricalMeasure(part)
    inserted = []
    for x in rng.integers(6, size=1000):
        m.insert(int(x))
        inserted.append(int(x))
        counts = np.zeros(3)
        for a in inserted:
            counts[part.assign(a)] += 1
        assert m.total_count == len(inserted)
        np.testing.assert_array_equal(
            [m.ring_count(j) for j in range(3)], counts.astype(int)
        )
        np.testing.assert_allclose(m.masses(), counts / len(inserted))


def test_insertion_order_preserved():
    m = two_ring_measure([0, 1, 0, 1])
    assert list(m.atoms(0)) == [0, 1, 0, 1]
    assert [row for row in m.dump_rows()] == [
        (0, 0, 0), (1, 1, 0), (2, 0, 0), (3, 1, 0)
    ]


# ---------------------------------------------------------------------------
# restriction
# ---------------------------------------------------------------------------

def test_restrict_uniform_conditioning():
    m = two_ring_measure([0, 1, 2, 3])
    mu_x = m.restrict(2)
    np.testing.assert_allclose(mu_x.as_vector(FiniteSpace(4)), [0, 0, 0.5, 0.5])
    assert mu_x.measure_of({2, 3}) == 1.0


def test_restrict_single_atom_ring():
    m = two_ring_measure([0, 0, 2])
    mu_x = m.restrict(0)
    np.testing.assert_allclose(mu_x.as_vector(FiniteSpace(4)), [1.0, 0, 0, 0])


def test_restrict_identity_battery():
    # mu_x(A) * S(E_ring) == S(E_ring intersect A) over random measures and sets
    rng = np.random.default_rng(99)
    part = RingPartition(FiniteSpace(6), labels=[0, 0, 1, 1, 2, 2])
    for _ in range(100):
        m = EmpiricalMeasure(part)
        for x in rng.integers(6, size=int(rng.integers(6, 60))):
            m.insert(int(x))
        x = int(rng.integers(6))
        if m.ring_count(part.assign(x)) == 0:
            continue
        subset = {int(s) for s in rng.choice(6, size=int(rng.integers(1, 6)), replace=False)}
        ring = part.assign(x)
        lhs = m.restrict(x).measure_of(subset) * m.ring_mass(ring)
        rhs = sum(
            1 for _, a in ((0, a) for a in m.atoms(ring)) if a in subset
        ) / m.total_count
        assert lhs == pytest.approx(rhs, abs=1e-14)


def test_restrict_empty_ring_raises():
    m = two_ring_measure([0])
    with pytest.raises(StabilityError):
        m.restrict(3)


# ---------------------------------------------------------------------------
# draws
# ---------------------------------------------------------------------------

def test_draw_single_atom():
    m = two_ring_measure([2])
    rng = np.random.default_rng(0)
    assert all(m.draw(1, rng) == 2 for _ in range(10))


def test_draw_respects_multiplicity():
    # atoms (a, a, b) in one ring: a with prob 2/3 over 1e5 draws, 3 s.e. band
    m = two_ring_measure([0, 0, 1])
    rng = np.random.default_rng(123)
    n = 100_000
    hits = sum(1 for _ in range(n) if m.draw(0, rng) == 0)
    p = 2.0 / 3.0
    se = np.sqrt(p * (1 - p) / n)
    assert abs(hits / n - p) < 3 * se


def test_draw_deterministic_per_seed():
    m = two_ring_measure([0, 1, 0, 1, 1])
    rng = np.random.default_rng(7)
    draws1 = [m.draw(0, rng) for _ in range(20)]
    rng = np.random.default_rng(7)
    draws2 = [m.draw(0, rng) for _ in range(20)]
    assert draws1 == draws2


def test_draw_empty_ring_raises():
    m = two_ring_measure([0])
    with pytest.raises(StabilityError):
        m.draw(1, np.random.default_rng(1))


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def test_snapshot_is_frozen_prefix():
    m = two_ring_measure([0, 2])
    snap = m.snapshot()
    m.insert(1)
    m.insert(3)
    assert snap.total_count == 2
    assert snap.ring_count(0) == 1 and snap.ring_count(1) == 1
    np.testing.assert_allclose(snap.as_vector(FiniteSpace(4)), [0.5, 0, 0.5, 0])
    assert m.total_count == 4
    rng = np.random.default_rng(5)
    assert all(snap.draw(0, rng) == 0 for _ in range(20))  # atom 1 not visible


def test_snapshot_restrict():
    m = two_ring_measure([0, 2])
    snap = m.snapshot()
    m.insert(3)
    assert snap.restrict(2).count == 1
    assert m.restrict(2).count == 2


# ---------------------------------------------------------------------------
# stability monitoring
# ---------------------------------------------------------------------------

def test_single_ring_never_violates():
    part = RingPartition.single_ring(FiniteSpace(3))
    m = EmpiricalMeasure(part)
    m.insert(0)
    monitor = StabilityMonitor(theta=1.0)
    assert monitor.check(m, step=1) == []


def test_empty_ring_violates():
    m = two_ring_measure([0])
    monitor = StabilityMonitor(theta=0.1)
    violations = monitor.check(m, step=3)
    assert [v.ring for v in violations] == [1]
    assert violations[0].mass == 0.0
    assert monitor.min_mass_seen == 0.0


def test_threshold_comparison():
    m = two_ring_measure([0, 2, 2, 2])  # masses (0.25, 0.75)
    monitor = StabilityMonitor(theta=0.3)
    violations = monitor.check(m, step=9)
    assert [v.ring for v in violations] == [0]
    assert monitor.min_mass_seen == pytest.approx(0.25)


@pytest.mark.parametrize("theta", [0.0, -0.2, 1.5])
def test_theta_validation(theta):
    with pytest.raises(ConfigurationError):
        StabilityMonitor(theta=theta)


# ---------------------------------------------------------------------------
# total variation
# ---------------------------------------------------------------------------

def test_tv_identity():
    assert tv_distance([0.3, 0.7], [0.3, 0.7]) == 0.0


def test_tv_disjoint_supports():
    assert tv_distance([1.0, 0.0], [0.0, 1.0]) == 1.0


def test_tv_hand_value():
    assert tv_distance([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.25)


def test_tv_symmetry_and_triangle():
    rng = np.random.default_rng(202)
    for _ in range(50):
        p, q, s = (rng.dirichlet(np.ones(5)) for _ in range(3))
        assert tv_distance(p, q) == pytest.approx(tv_distance(q, p))
        assert tv_distance(p, s) <= tv_distance(p, q) + tv_distance(q, s) + 1e-12
        assert 0.0 <= tv_distance(p, q) <= 1.0


@pytest.mark.parametrize(
    "mu,xi",
    [([0.5, 0.5], [0.3, 0.3, 0.4]), ([0.9, 0.3], [0.5, 0.5]), ([-0.1, 1.1], [0.5, 0.5])],
)
def test_tv_contract_errors(mu, xi):
    with pytest.raises(ValueError):
        tv_distance(mu, xi)
