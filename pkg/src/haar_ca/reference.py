"""The two reference shifts and their standard measures."""
from __future__ import annotations

import numpy as np

from .group import GroupSpec
from .measure import MarkovMeasure, validate_measure
from .shift import SubgroupShift, validate_subgroup_shift


def full_two_shift() -> SubgroupShift:
    return validate_subgroup_shift(GroupSpec(2, (1,)), np.ones((2, 2), dtype=int))


def two_block_shift() -> SubgroupShift:
    """Z2 x Z2 with (a, b) -> (c, d) allowed iff c = b (the 2-block presentation of the full 2-shift)."""
    spec = GroupSpec(2, (1, 1))
    els = spec.elements
    M = np.array([[int(h[0] == g[1]) for h in els] for g in els])
    return validate_subgroup_shift(spec, M)


def bernoulli(q: float = 0.7) -> MarkovMeasure:
    """i.i.d. measure on the full 2-shift with P(x = 1) = q."""
    return validate_measure(full_two_shift(), [[1 - q, q], [1 - q, q]])


def block_measure(split: float = 0.6) -> MarkovMeasure:
    """Two-block measure: weight ``split`` on the follower ending in 0, ``1 - split`` on the other."""
    shift = two_block_shift()
    els = shift.spec.elements
    P = np.zeros((4, 4))
    for i, g in enumerate(els):
        for j, h in enumerate(els):
            if h[0] == g[1]:
                P[i, j] = split if h[1] == 0 else 1 - split
    return validate_measure(shift, P)
