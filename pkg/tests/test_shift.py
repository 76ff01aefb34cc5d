import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from haar_ca.errors import (
    HaarCAError,
    NonSurjectiveError,
    NotIrreducibleError,
    NotSubgroupError,
    ResourceError,
    StructureError,
)
from haar_ca.group import GroupSpec, add
from haar_ca.shift import (
    enumerate_words,
    follower_set,
    haar_kernel,
    haar_marginal,
    path_count,
    validate_subgroup_shift,
)

from helpers import count_paths, incidence_from, span

Z2xZ2 = GroupSpec(2, (1, 1))
A4 = set(Z2xZ2.elements)


def test_full_shift(full2):
    assert full2.F0 == {(0,), (1,)} and full2.r == 1 and full2.fsize == 2


def test_two_block_structure(block2):
    assert block2.F0 == {(0, 0), (0, 1)}
    assert block2.fsize == 2 and block2.r == 2
    assert block2.P0 == {(0, 0), (1, 0)}
    assert block2.f((0, 1)) == (1, 0)


def test_z4_not_irreducible():
    spec = GroupSpec(2, (2,))
    M = [[int(h[0] in {2 * g[0] % 4, (2 * g[0] + 2) % 4}) for h in spec.elements] for g in spec.elements]
    with pytest.raises(NotIrreducibleError):
        validate_subgroup_shift(spec, M)


def test_missing_zero_edge():
    with pytest.raises(NotSubgroupError):
        validate_subgroup_shift(GroupSpec(2, (1,)), [[0, 1], [1, 1]])


def test_not_closed():
    # Z3: 0->0, 1->1, 2->2 plus 0->1 is not a subgroup of Z3 x Z3
    M = np.eye(3, dtype=int)
    M[0, 1] = 1
    with pytest.raises(NotSubgroupError):
        validate_subgroup_shift(GroupSpec(3, (1,)), M)


def test_empty_row_is_non_surjective():
    # S = {(0,0), (1,0)} leaves column 1 empty and is closed; rows all nonempty.
    # S = {(0,0)} in Z2 leaves row 1 empty.
    with pytest.raises(NonSurjectiveError):
        validate_subgroup_shift(GroupSpec(2, (1,)), [[1, 0], [0, 0]])


def test_bad_shape_and_entries():
    with pytest.raises(StructureError):
        validate_subgroup_shift(GroupSpec(2, (1,)), np.ones((3, 3), dtype=int))
    with pytest.raises(StructureError):
        validate_subgroup_shift(GroupSpec(2, (1,)), [[1, 2], [1, 1]])


def test_follower_set_examples(full2, block2):
    assert follower_set(full2, (0,), 1) == {(0,), (1,)}
    assert follower_set(block2, (1, 1), 1) == {(1, 0), (1, 1)}
    for g in Z2xZ2.elements:
        assert follower_set(block2, g, 2) == A4


def test_path_count_examples(full2, block2):
    assert path_count(full2, 3, (0,), (0,)) == 4
    assert path_count(block2, 3, (0, 0), (0, 0)) == 2 == block2.fsize**3 // block2.order
    for g in Z2xZ2.elements:
        for h in Z2xZ2.elements:
            assert path_count(block2, 1, g, h) == int(block2.M[Z2xZ2.index(g), Z2xZ2.index(h)])


def test_path_count_big_integers(full2):
    assert path_count(full2, 200, (0,), (1,)) == 2**199


def test_haar_kernel(full2, block2):
    L, rho = haar_kernel(full2)
    assert np.array_equal(L, [[0.5, 0.5], [0.5, 0.5]]) and np.array_equal(rho, [0.5, 0.5])
    L, rho = haar_kernel(block2)
    assert np.allclose(L.sum(axis=1), 1) and np.all(rho == 0.25)
    assert sorted(L[1]) == [0, 0, 0.5, 0.5]


def test_haar_kernel_stationary_exact(block2):
    L, rho = haar_kernel(block2, exact=True)
    n = len(rho)
    assert [sum(rho[g] * L[g][h] for g in range(n)) for h in range(n)] == rho
    assert all(sum(row) == 1 for row in L)
    assert all(isinstance(v, Fraction) for v in rho)


def test_haar_marginal_examples(full2, block2):
    d = haar_marginal(full2, 3)
    assert d.table == {w: 0.125 for w in enumerate_words(full2, 3)} and len(d.table) == 8
    d = haar_marginal(block2, 2)
    assert len(d.table) == 8 and set(d.table.values()) == {0.125}
    assert math.fsum(d.table.values()) == 1.0
    d = haar_marginal(block2, 1)
    assert d.table == {(g,): 0.25 for g in Z2xZ2.elements}


def test_enumerate_words_examples(full2, block2):
    assert len(enumerate_words(full2, 2)) == 4
    words = enumerate_words(block2, 2)
    assert len(words) == 8 and words == sorted(words)
    assert ((0, 1), (1, 0)) in words and ((0, 1), (0, 0)) not in words
    assert enumerate_words(block2, 1) == [(g,) for g in Z2xZ2.elements]


def test_enumeration_cap():
    shift = validate_subgroup_shift(GroupSpec(2, (1,)), np.ones((2, 2), dtype=int), enum_cap=16)
    assert len(enumerate_words(shift, 4)) == 16
    with pytest.raises(ResourceError):
        enumerate_words(shift, 5)
    with pytest.raises(ResourceError):
        haar_marginal(shift, 5)


# -- random Markov subgroups --------------------------------------------------------

GROUPS = [GroupSpec(2, (1,)), GroupSpec(2, (2,)), GroupSpec(2, (1, 1)), GroupSpec(3, (1,)),
          GroupSpec(2, (1, 2)), GroupSpec(3, (1, 1)), GroupSpec(2, (1, 1, 1)), GroupSpec(5, (1,)),
          GroupSpec(2, (3,)), GroupSpec(2, (2, 2))]


@st.composite
def markov_subgroups(draw):
    spec = draw(st.sampled_from(GROUPS))
    els = spec.elements
    gens = draw(st.lists(st.tuples(st.sampled_from(els), st.sampled_from(els)), min_size=1, max_size=3))
    S = span(spec, gens)
    return spec, S, incidence_from(spec, S)


@settings(max_examples=150, suppress_health_check=[HealthCheck.too_slow], deadline=None)
@given(markov_subgroups())
def test_random_subgroups_validate_or_fail_cleanly(case):
    spec, S, M = case
    try:
        shift = validate_subgroup_shift(spec, M)
    except HaarCAError:
        # rejected instances must really be reducible or non-surjective
        reach = {spec.zero}
        for _ in range(spec.order + 1):
            reach = {b for a, b in S if a in reach}
        sources = {a for a, _ in S}
        targets = {b for _, b in S}
        assert len(reach) < spec.order or sources != set(spec.elements) or targets != set(spec.elements)
        return
    els = spec.elements
    idx = spec.index
    # transition-set subgroup law
    for a, b in S:
        for c, d in S:
            assert M[idx(add(spec, a, c)), idx(add(spec, b, d))] == 1
    # coset law
    F = shift.F0
    for g in els:
        assert set(shift.followers_of(g)) == {add(spec, shift.f(g), h) for h in F}
    assert len(shift.P0) == len(F)
    # mixing index
    full = set(els)
    for g in els:
        for n in range(shift.r, shift.r + 3):
            assert follower_set(shift, g, n) == full
    if shift.r > 1:
        assert follower_set(shift, spec.zero, shift.r - 1) != full
    # follower recursion and size independence
    for n in (1, 2):
        sizes = {len(follower_set(shift, g, n)) for g in els}
        assert len(sizes) == 1
        for g in els:
            union = set().union(*(follower_set(shift, h, n) for h in shift.followers_of(g)))
            assert follower_set(shift, g, n + 1) == union
    # path counts at and beyond r
    z = spec.zero
    assert path_count(shift, shift.r + 1, z, z) * spec.order == shift.fsize ** (shift.r + 1)
    base = path_count(shift, shift.r, z, z)
    assert {path_count(shift, shift.r, g, h) for g in els for h in els} == {base}
    if spec.order <= 4 and shift.r <= 3:
        assert count_paths(M, shift.r + 1, 0, 0) == path_count(shift, shift.r + 1, z, z)
    # words and Haar consistency
    for ell in (1, 2, 3):
        words = enumerate_words(shift, ell)
        assert len(words) == spec.order * shift.fsize ** (ell - 1)
        nu = haar_marginal(shift, ell + 1)
        assert np.allclose(nu.marginalize_last().probs, haar_marginal(shift, ell).probs, rtol=0, atol=1e-15)
        assert shift.gamma_exact(ell + 1) * shift.fsize == shift.gamma_exact(ell)
