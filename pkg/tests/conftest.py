import numpy as np
import pytest

from eesampler import KernelSet, UniformProposal
from eesampler.config import four_state_config
from eesampler.state_space import DensityLadder, FiniteSpace, RingPartition


@pytest.fixture
def four_state():
    """Shipped reference fixture: pi_1 uniform, pi_2 ~ (1,1,2,4), rings {0,1},{2,3}."""
    return four_state_config()


@pytest.fixture
def two_state_model():
    """2-state ladder with pi_1 uniform and pi_2 = (1/3, 2/3), uniform proposals."""
    space = FiniteSpace(2)
    ladder = DensityLadder(space, [np.zeros(2), np.log([1.0, 2.0])])
    partition = RingPartition.single_ring(space)
    return KernelSet(ladder, partition, [UniformProposal(), UniformProposal()], epsilon=0.5)


def make_model(log_weights, labels, epsilon=0.5):
    """Finite model from per-level log-weight rows and ring labels."""
    rows = [np.asarray(r, dtype=float) for r in log_weights]
    space = FiniteSpace(rows[0].size)
    ladder = DensityLadder(space, rows)
    partition = RingPartition(space, labels=labels)
    proposals = [UniformProposal() for _ in rows]
    return KernelSet(ladder, partition, proposals, epsilon=epsilon)
