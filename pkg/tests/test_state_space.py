import numpy as np
import pytest

from eesampler.errors import ConfigurationError, DomainError
from eesampler.state_space import (
    BoxSpace,
    DensityLadder,
    FiniteSpace,
    RingPartition,
    ladder_masses,
    tempered_ladder,
)


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------

def test_finite_space_needs_two_states():
    with pytest.raises(ConfigurationError):
        FiniteSpace(1)


def test_finite_space_membership():
    space = FiniteSpace(4)
    assert space.contains(0) and space.contains(3)
    assert not space.contains(4) and not space.contains(-1)
    with pytest.raises(DomainError):
        space.require(7)


@pytest.mark.parametrize(
    "lower,upper",
    [([0.0], [0.0]), ([1.0], [0.0]), ([0.0, 0.0], [1.0]), ([-np.inf], [1.0])],
)
def test_box_space_bad_bounds(lower, upper):
    with pytest.raises(ConfigurationError):
        BoxSpace(lower, upper)


def test_box_space_membership():
    space = BoxSpace([-1.0, 0.0], [1.0, 2.0])
    assert space.contains(np.array([0.0, 1.0]))
    assert not space.contains(np.array([0.0, 3.0]))


# ---------------------------------------------------------------------------
# tempered ladders
# ---------------------------------------------------------------------------

def test_single_temperature_is_identity():
    space = FiniteSpace(3)
    base = np.log([0.2, 0.3, 0.5])
    ladder = tempered_ladder(space, base, [1.0])
    assert ladder.r == 1
    np.testing.assert_allclose(ladder.log_table()[0], base)


def test_quadratic_tempering_on_box():
    space = BoxSpace([-5.0], [5.0])
    ladder = tempered_ladder(space, lambda x: -float(x[0]) ** 2, [4.0, 1.0])
    for v in (0.0, 0.5, 2.0):
        x = np.array([v])
        assert ladder.log_density(0, x) == pytest.approx(-(v**2) / 4.0)
        assert ladder.log_density(1, x) == pytest.approx(-(v**2))


def test_finite_tempering_matches_direct_exponentiation():
    # oracle: density^(1/2) renormalized, computed by hand
    base = np.array([1.0, 1.0, 2.0, 4.0]) / 8.0
    expected = np.array([1.0, 1.0, np.sqrt(2.0), 2.0])
    expected /= expected.sum()
    ladder = tempered_ladder(FiniteSpace(4), np.log(base), [2.0, 1.0])
    np.testing.assert_allclose(ladder.density_table()[0], expected, atol=1e-14)
    np.testing.assert_allclose(ladder.density_table()[1], base, atol=1e-14)


@pytest.mark.parametrize(
    "temps", [[0.0, 1.0], [-2.0, 1.0], [1.0, 2.0], [4.0, 2.0], [2.0], []]
)
def test_temperature_validation(temps):
    with pytest.raises(ConfigurationError):
        tempered_ladder(FiniteSpace(2), np.zeros(2), temps)


def test_ladder_rejects_non_finite_log_density():
    with pytest.raises(ConfigurationError):
        DensityLadder(FiniteSpace(3), [np.array([0.0, -np.inf, 0.0])])


def test_ladder_level_count():
    with pytest.raises(ConfigurationError):
        DensityLadder(FiniteSpace(2), [])


# ---------------------------------------------------------------------------
# ring assignment
# ---------------------------------------------------------------------------

def test_single_ring_partition():
    part = RingPartition.single_ring(FiniteSpace(5))
    assert part.d == 1
    assert all(part.assign(s) == 0 for s in range(5))


def test_label_lookup_canonicalizes():
    part = RingPartition(FiniteSpace(4), labels=[1, 1, 2, 2])
    assert part.d == 2
    assert part.assign(2) == 1  # second ring, 0-based
    assert [part.assign(s) for s in range(4)] == [0, 0, 1, 1]


def test_energy_threshold_assignment():
    space = BoxSpace([-3.0], [3.0])
    part = RingPartition(space, energy=lambda x: float(x[0]) ** 2, thresholds=[1.0])
    assert part.d == 2
    assert part.assign(np.array([0.5])) == 0
    assert part.assign(np.array([2.0])) == 1


def test_assign_out_of_domain():
    part = RingPartition(FiniteSpace(4), labels=[0, 0, 1, 1])
    with pytest.raises(DomainError):
        part.assign(9)


def test_partition_totality():
    part = RingPartition(FiniteSpace(6), labels=[0, 2, 1, 0, 2, 1])
    seen = [part.assign(s) for s in range(6)]
    assert all(0 <= j < part.d for j in seen)


@pytest.mark.parametrize("labels", [[0, 0, 1], [0] * 5])
def test_label_shape_validation(labels):
    with pytest.raises(ConfigurationError):
        RingPartition(FiniteSpace(4), labels=labels)


def test_decreasing_thresholds_rejected():
    with pytest.raises(ConfigurationError):
        RingPartition(BoxSpace([0.0], [1.0]), energy=lambda x: 0.0, thresholds=[2.0, 1.0])


# ---------------------------------------------------------------------------
# ladder masses
# ---------------------------------------------------------------------------

def test_masses_uniform_equal_rings():
    ladder = DensityLadder(FiniteSpace(4), [np.zeros(4)])
    part = RingPartition(FiniteSpace(4), labels=[0, 0, 1, 1])
    np.testing.assert_allclose(ladder_masses(ladder, part), [[0.5, 0.5]])


def test_masses_hand_summed():
    # oracle: exact summation of (1,1,2,4)/8 over rings {0,1} and {2,3}
    ladder = DensityLadder(FiniteSpace(4), [np.log([1.0, 1.0, 2.0, 4.0])])
    part = RingPartition(FiniteSpace(4), labels=[0, 0, 1, 1])
    np.testing.assert_allclose(ladder_masses(ladder, part), [[0.25, 0.75]], atol=1e-14)


def test_masses_single_ring_is_total_mass():
    ladder = DensityLadder(FiniteSpace(3), [np.log([3.0, 2.0, 5.0])])
    part = RingPartition.single_ring(FiniteSpace(3))
    np.testing.assert_allclose(ladder_masses(ladder, part), [[1.0]], atol=1e-14)


def test_masses_rows_sum_to_one():
    rng = np.random.default_rng(11)
    ladder = DensityLadder(FiniteSpace(6), [rng.normal(size=6) for _ in range(3)])
    part = RingPartition(FiniteSpace(6), labels=[0, 1, 2, 0, 1, 2])
    masses = ladder_masses(ladder, part)
    np.testing.assert_allclose(masses.sum(axis=1), np.ones(3), atol=1e-12)
    assert np.all(masses > 0)


def test_masses_zero_ring_on_grid_is_error():
    space = BoxSpace([0.0], [1.0])
    ladder = DensityLadder(space, [lambda x: 0.0])
    part = RingPartition(space, energy=lambda x: float(x[0]), thresholds=[2.0])
    grid = np.linspace(0.0, 1.0, 50)[:, None]  # never reaches ring 1
    with pytest.raises(ConfigurationError):
        ladder_masses(ladder, part, grid=grid)


def test_masses_box_quadrature():
    space = BoxSpace([-3.0], [3.0])
    ladder = tempered_ladder(space, lambda x: -float(x[0]) ** 2, [2.0, 1.0])
    part = RingPartition(space, energy=lambda x: float(x[0]) ** 2, thresholds=[1.0])
    grid = np.linspace(-3.0, 3.0, 601)[:, None]
    masses = ladder_masses(ladder, part, grid=grid)
    assert masses.shape == (2, 2)
    np.testing.assert_allclose(masses.sum(axis=1), np.ones(2), atol=1e-12)
    # the hotter level spreads more mass into the outer ring
    assert masses[0, 1] > masses[1, 1] > 0
