"""Markov subgroups of A^Z: validation, follower cosets, words and Haar marginals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    DomainError,
    NonSurjectiveError,
    NotIrreducibleError,
    NotSubgroupError,
    ResourceError,
    StructureError,
)
from .group import DEFAULT_ENUM_CAP, GroupElement, GroupSpec

Word = tuple[GroupElement, ...]


@dataclass(frozen=True, eq=False)
class SubgroupShift:
    """A validated Markov subgroup.  Build it with :func:`validate_subgroup_shift`.

    Follower data is stored by element index: ``followers[g]`` is the sorted
    index array of F(g), ``section[g]`` the index of f(g).
    """

    spec: GroupSpec
    M: np.ndarray
    F0: frozenset[GroupElement]
    P0: frozenset[GroupElement]
    r: int
    section: np.ndarray
    followers: tuple[np.ndarray, ...]
    enum_cap: int = field(default=DEFAULT_ENUM_CAP, repr=False)

    @property
    def fsize(self) -> int:
        return len(self.F0)

    @property
    def order(self) -> int:
        return self.spec.order

    @property
    def f0_indices(self) -> np.ndarray:
        return self.followers[0]

    def f(self, g: GroupElement) -> GroupElement:
        return self.spec.element(int(self.section[self.spec.index(g)]))

    def followers_of(self, g: GroupElement) -> list[GroupElement]:
        return [self.spec.element(int(h)) for h in self.followers[self.spec.index(g)]]

    def gamma(self, ell: int) -> float:
        return 1.0 / (self.order * self.fsize ** (ell - 1))

    def gamma_exact(self, ell: int) -> Fraction:
        return Fraction(1, self.order * self.fsize ** (ell - 1))

    def n_words(self, ell: int) -> int:
        return self.order * self.fsize ** (ell - 1)

    def allows(self, word: Sequence[GroupElement]) -> bool:
        idx = [self.spec.index(g) for g in word]
        return all(self.M[a, b] for a, b in zip(idx, idx[1:]))


def _follower_closure(M: np.ndarray, start: np.ndarray) -> np.ndarray:
    return M[start].any(axis=0)


def validate_subgroup_shift(
    spec: GroupSpec, M: np.ndarray | Sequence[Sequence[int]], enum_cap: int = DEFAULT_ENUM_CAP
) -> SubgroupShift:
    M = np.asarray(M)
    n = spec.order
    if M.shape != (n, n):
        raise StructureError(f"incidence matrix has shape {M.shape}, expected ({n}, {n})")
    if not np.isin(M, (0, 1)).all():
        raise StructureError("incidence matrix entries must be 0 or 1")
    M = M.astype(bool)
    M.setflags(write=False)

    if not M[0, 0]:
        raise NotSubgroupError("(0, 0) is not an allowed transition")
    src, dst = np.nonzero(M)
    add = spec.add_table
    closed = M[add[src[:, None], src[None, :]], add[dst[:, None], dst[None, :]]]
    if not closed.all():
        i, j = map(int, np.argwhere(~closed)[0])
        a, b = (spec.element(int(src[i])), spec.element(int(dst[i])))
        c, d = (spec.element(int(src[j])), spec.element(int(dst[j])))
        raise NotSubgroupError(f"transitions {a}->{b} and {c}->{d} allowed but their sum is not")

    empty_rows = np.flatnonzero(~M.any(axis=1))
    if empty_rows.size:
        raise NonSurjectiveError(f"element {spec.element(int(empty_rows[0]))} has no follower")

    # F^n(0) grows along a chain of subgroups, so it stabilises within |A| steps
    reach = M[0].copy()
    r = 1
    while not reach.all():
        nxt = _follower_closure(M, np.flatnonzero(reach))
        if (nxt == reach).all():
            raise NotIrreducibleError(
                f"not irreducible: follower sets of 0 stabilise at {int(reach.sum())} < {n} elements"
            )
        reach = nxt
        r += 1

    empty_cols = np.flatnonzero(~M.any(axis=0))
    if empty_cols.size:
        raise NonSurjectiveError(f"element {spec.element(int(empty_cols[0]))} has no predecessor")

    followers = tuple(np.flatnonzero(M[g]) for g in range(n))
    for arr in followers:
        arr.setflags(write=False)
    section = np.array([arr[0] for arr in followers], dtype=np.int64)
    section.setflags(write=False)
    f0 = followers[0]
    p0 = np.flatnonzero(M[:, 0])

    # runtime checks of the coset and mixing facts the construction relies on
    for g in range(n):
        coset = np.sort(add[section[g], f0])
        if not np.array_equal(coset, followers[g]):
            raise NotSubgroupError(f"F({spec.element(g)}) is not f(g) + F")
    if len(p0) != len(f0):
        raise NotSubgroupError(f"|F| = {len(f0)} but |P| = {len(p0)}")
    Mr = _bool_power(M, r)
    if not Mr.all():
        raise NotIrreducibleError(f"F^{r}(g) != A for some g although F^{r}(0) = A")

    return SubgroupShift(
        spec=spec,
        M=M,
        F0=frozenset(spec.element(int(h)) for h in f0),
        P0=frozenset(spec.element(int(h)) for h in p0),
        r=r,
        section=section,
        followers=followers,
        enum_cap=enum_cap,
    )


def _bool_power(M: np.ndarray, n: int) -> np.ndarray:
    out = np.eye(len(M), dtype=bool)
    base = M.astype(np.int64)
    for _ in range(n):
        out = (out.astype(np.int64) @ base) > 0
    return out


def follower_set(shift: SubgroupShift, g: GroupElement, n: int) -> set[GroupElement]:
    """F^n(g): the symbols reachable from ``g`` in exactly ``n`` steps."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    reach = np.zeros(shift.order, dtype=bool)
    reach[shift.spec.index(g)] = True
    for _ in range(n):
        reach = _follower_closure(shift.M, np.flatnonzero(reach))
    return {shift.spec.element(int(h)) for h in np.flatnonzero(reach)}


def _int_matrix_power(M: np.ndarray, n: int) -> np.ndarray:
    base = M.astype(object)
    out = np.eye(len(M), dtype=np.int64).astype(object)
    while n:
        if n & 1:
            out = out @ base
        base = base @ base
        n >>= 1
    return out


def path_count(shift: SubgroupShift, n: int, g: GroupElement, h: GroupElement) -> int:
    """Number of interior words (g_1, ..., g_{n-1}) of allowed paths g -> h of length n."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    i, j = shift.spec.index(g), shift.spec.index(h)
    return int(_int_matrix_power(shift.M, n)[i, j])


def haar_kernel(shift: SubgroupShift, exact: bool = False):
    """Transition matrix and stationary vector of the Haar measure.

    With ``exact=True`` both are returned as nested lists of ``Fraction``.
    """
    n = shift.order
    if exact:
        w = Fraction(1, shift.fsize)
        L = [[w if shift.M[g, h] else Fraction(0) for h in range(n)] for g in range(n)]
        return L, [Fraction(1, n)] * n
    L = shift.M.astype(float) / shift.fsize
    return L, np.full(n, 1.0 / n)


def _check_cap(shift: SubgroupShift, ell: int, cap: int | None = None) -> None:
    if ell < 1:
        raise DomainError(f"word length must be >= 1, got {ell}")
    cap = shift.enum_cap if cap is None else cap
    count = shift.n_words(ell)
    if count > cap:
        raise ResourceError(f"|G_{ell}| = {count} exceeds enumeration cap {cap}")


def word_index_array(shift: SubgroupShift, ell: int, cap: int | None = None) -> np.ndarray:
    """All allowed words of length ``ell`` as rows of element indices, lexicographically sorted."""
    _check_cap(shift, ell, cap)
    words = np.arange(shift.order, dtype=np.int64)[:, None]
    fsize = shift.fsize
    fol = np.stack(shift.followers)
    for _ in range(ell - 1):
        nxt = fol[words[:, -1]]
        words = np.concatenate(
            [np.repeat(words, fsize, axis=0), nxt.reshape(-1, 1)], axis=1
        )
    return words


def enumerate_words(shift: SubgroupShift, ell: int) -> list[Word]:
    els = shift.spec.elements
    return [tuple(els[i] for i in row) for row in word_index_array(shift, ell)]


class CylinderDistribution:
    """Probability table over words of a fixed length ``m``.

    Stored densely as an array with ``m`` axes of size |A|, indexed by element
    indices, so ``probs[i0, ..., i_{m-1}]`` is the mass of the word whose k-th
    symbol is ``spec.element(ik)``.
    """

    def __init__(self, spec: GroupSpec, probs: np.ndarray):
        probs = np.asarray(probs, dtype=float)
        if probs.ndim < 1 or any(d != spec.order for d in probs.shape):
            raise StructureError(f"table shape {probs.shape} does not match |A| = {spec.order}")
        self.spec = spec
        self.probs = probs

    @property
    def m(self) -> int:
        return self.probs.ndim

    def __getitem__(self, word: Sequence[GroupElement]) -> float:
        if len(word) != self.m:
            raise StructureError(f"word of length {len(word)} queried in a length-{self.m} table")
        return float(self.probs[tuple(self.spec.index(g) for g in word)])

    @property
    def table(self) -> dict[Word, float]:
        els = self.spec.elements
        return {
            tuple(els[i] for i in idx): float(self.probs[tuple(idx)])
            for idx in np.argwhere(self.probs != 0)
        }

    def total(self) -> float:
        return math.fsum(self.probs.ravel())

    def marginalize_last(self) -> "CylinderDistribution":
        return CylinderDistribution(self.spec, self.probs.sum(axis=-1))

    def __repr__(self) -> str:
        return f"CylinderDistribution(m={self.m}, support={int((self.probs != 0).sum())})"


def haar_marginal(shift: SubgroupShift, ell: int) -> CylinderDistribution:
    words = word_index_array(shift, ell)
    probs = np.zeros((shift.order,) * ell)
    probs[tuple(words.T)] = shift.gamma(ell)
    return CylinderDistribution(shift.spec, probs)
