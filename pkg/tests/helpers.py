"""Test-side constructions that do not reuse package internals."""
import itertools

import numpy as np

from haar_ca.group import GroupSpec, add


def span(spec: GroupSpec, gens):
    """Subgroup of A x A generated by ``gens`` (pairs of elements), by closure."""
    zero = (spec.zero, spec.zero)
    S = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for a, b in frontier:
            for c, d in gens:
                e = (add(spec, a, c), add(spec, b, d))
                if e not in S:
                    S.add(e)
                    nxt.append(e)
        frontier = nxt
    return S


def incidence_from(spec: GroupSpec, S):
    idx = {g: i for i, g in enumerate(spec.elements)}
    M = np.zeros((spec.order, spec.order), dtype=int)
    for a, b in S:
        M[idx[a], idx[b]] = 1
    return M


def count_paths(M, n, i, j):
    """Interior words of length n - 1 between i and j, by explicit enumeration."""
    if n == 0:
        return int(i == j)
    total = 0
    for mid in itertools.product(range(len(M)), repeat=n - 1):
        path = (i, *mid, j)
        total += all(M[a, b] for a, b in zip(path, path[1:]))
    return total
