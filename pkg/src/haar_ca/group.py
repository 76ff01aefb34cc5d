"""Finite Abelian p-power torsion groups Z_{p^s1} x ... x Z_{p^sd}.

Elements are tuples of residues.  The canonical order of elements is the
lexicographic order of these tuples; the position of an element in that order
is its *index*, and the heavier modules work on index arrays built from the
addition / negation / scalar tables exposed here.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, ResourceError, StructureError, ValidationError

GroupElement = tuple[int, ...]

DEFAULT_ENUM_CAP = 10**6


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


@dataclass(frozen=True)
class GroupSpec:
    """Product of cyclic groups of orders ``p**e`` for ``e`` in ``exponents``."""

    p: int
    exponents: tuple[int, ...]
    enum_cap: int = field(default=DEFAULT_ENUM_CAP, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(int(e) for e in self.exponents))
        if not is_prime(self.p):
            raise ValidationError(f"p={self.p} is not prime")
        if not self.exponents:
            raise ValidationError("at least one cyclic factor is required")
        if any(e < 1 for e in self.exponents):
            raise ValidationError(f"exponents must be >= 1, got {self.exponents}")

    @property
    def s(self) -> int:
        return max(self.exponents)

    @property
    def torsion(self) -> int:
        return self.p**self.s

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(self.p**e for e in self.exponents)

    @property
    def order(self) -> int:
        return math.prod(self.moduli)

    @property
    def zero(self) -> GroupElement:
        return (0,) * len(self.exponents)

    # -- canonical indexing -------------------------------------------------

    @cached_property
    def elements(self) -> list[GroupElement]:
        return enumerate_elements(self)

    @cached_property
    def _index(self) -> dict[GroupElement, int]:
        return {g: i for i, g in enumerate(self.elements)}

    def index(self, g: GroupElement) -> int:
        self.check(g)
        return self._index[tuple(g)]

    def element(self, i: int) -> GroupElement:
        return self.elements[i]

    def check(self, g: GroupElement) -> None:
        if len(g) != len(self.moduli):
            raise StructureError(f"{g!r} has {len(g)} coordinates, expected {len(self.moduli)}")
        for r, q in zip(g, self.moduli):
            if not 0 <= r < q:
                raise StructureError(f"residue {r} of {g!r} outside [0, {q})")

    # -- index-level tables used by the vectorised code ---------------------

    @cached_property
    def add_table(self) -> np.ndarray:
        els = np.array(self.elements, dtype=np.int64)
        mods = np.array(self.moduli, dtype=np.int64)
        sums = (els[:, None, :] + els[None, :, :]) % mods
        return self._flat(sums)

    @cached_property
    def neg_table(self) -> np.ndarray:
        els = np.array(self.elements, dtype=np.int64)
        mods = np.array(self.moduli, dtype=np.int64)
        return self._flat((-els) % mods)

    @cached_property
    def scalar_table(self) -> np.ndarray:
        """``scalar_table[c, i]`` is the index of ``c * element(i)`` for c < p**s."""
        els = np.array(self.elements, dtype=np.int64)
        mods = np.array(self.moduli, dtype=np.int64)
        cs = np.arange(self.torsion, dtype=np.int64)
        return self._flat((cs[:, None, None] * els[None, :, :]) % mods)

    def _flat(self, residues: np.ndarray) -> np.ndarray:
        # lexicographic order == mixed-radix order with the first coordinate most significant
        idx = np.zeros(residues.shape[:-1], dtype=np.int64)
        for k, q in enumerate(self.moduli):
            idx = idx * q + residues[..., k]
        return idx


def _check_pair(a: GroupElement, b: GroupElement, spec: GroupSpec) -> None:
    spec.check(a)
    spec.check(b)


def add(spec: GroupSpec, a: GroupElement, b: GroupElement) -> GroupElement:
    _check_pair(a, b, spec)
    return tuple((x + y) % q for x, y, q in zip(a, b, spec.moduli))


def neg(spec: GroupSpec, g: GroupElement) -> GroupElement:
    spec.check(g)
    return tuple((-x) % q for x, q in zip(g, spec.moduli))


def scalar_mul(spec: GroupSpec, c: int, g: GroupElement) -> GroupElement:
    spec.check(g)
    c %= spec.torsion
    return tuple((c * x) % q for x, q in zip(g, spec.moduli))


def unit_inverse(c: int, p: int, s: int) -> int:
    """Inverse of ``c`` in Z_{p^s}; ``c`` must be prime to ``p``."""
    if c % p == 0:
        raise DomainError(f"{c} is not a unit modulo {p}^{s}")
    # pow(., -1, .) runs extended Euclid
    return pow(c, -1, p**s)


def enumerate_elements(spec: GroupSpec) -> list[GroupElement]:
    if spec.order > spec.enum_cap:
        raise ResourceError(f"|A| = {spec.order} exceeds enumeration cap {spec.enum_cap}")
    return list(itertools.product(*(range(q) for q in spec.moduli)))
