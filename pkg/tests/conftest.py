import numpy as np
import pytest

from haar_ca.group import GroupSpec
from haar_ca.measure import build_regen, haar_measure
from haar_ca.reference import bernoulli, block_measure, full_two_shift, two_block_shift


@pytest.fixture(scope="session")
def full2():
    return full_two_shift()


@pytest.fixture(scope="session")
def block2():
    return two_block_shift()


@pytest.fixture(scope="session")
def bern():
    return bernoulli(0.7)


@pytest.fixture(scope="session")
def blockmu():
    return block_measure(0.6)


@pytest.fixture(scope="session")
def haar_block(block2):
    return haar_measure(block2)


@pytest.fixture(scope="session")
def bern_sampler(bern):
    return build_regen(bern)


@pytest.fixture(scope="session")
def block_sampler(blockmu):
    return build_regen(blockmu)


def small_groups():
    """Every group with |A| <= 64 over the primes 2, 3, 5 with at most three factors."""
    out = []
    for p in (2, 3, 5):
        for d in (1, 2, 3):
            for exps in np.ndindex(*(6,) * d):
                exps = tuple(sorted(e + 1 for e in exps))
                spec = GroupSpec(p, exps)
                if spec.order <= 64 and spec not in out:
                    out.append(spec)
    return out
