"""Compatible Markov measures and their regenerative (Athreya-Ney) construction.

Random streams
--------------
Every sampled path owns one PCG64 stream seeded with
``SeedSequence(seed, spawn_key=(path_index,))``.  A path of length ``L`` takes
exactly ``3 * L + 1`` doubles from ``Generator.random`` in one call, laid out as

* ``r[0]`` -- inverse-CDF draw of the seed symbol x_{-1} from ``pi``,
* ``r[1 : L+1]`` -- U_n = 1 iff the draw is below alpha,
* ``r[L+1 : 2L+1]`` -- W_n is the ``floor(draw * |F|)``-th element of F,
* ``r[2L+1 : 3L+1]`` -- V_n.

Any implementation that reproduces PCG64/SeedSequence and this layout
reproduces the traces bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CompatibilityError, DomainError, ParameterError, StructureError, ValidationError
from .group import GroupElement
from .shift import SubgroupShift, haar_kernel

ROW_TOL = 1e-12
STATIONARY_TOL = 1e-10
SUPPLIED_PI_TOL = 1e-8
CHUNK = 8192


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    shift: SubgroupShift
    P: np.ndarray
    pi: np.ndarray

    @property
    def spec(self):
        return self.shift.spec


def stationary_vector(P: np.ndarray) -> np.ndarray:
    """Solve pi P = pi, sum(pi) = 1 with the last balance equation replaced by normalisation."""
    n = len(P)
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def validate_measure(
    shift: SubgroupShift, P: np.ndarray | Sequence[Sequence[float]], pi: Sequence[float] | None = None
) -> MarkovMeasure:
    P = np.array(P, dtype=float)
    n = shift.order
    if P.shape != (n, n):
        raise StructureError(f"transition matrix has shape {P.shape}, expected ({n}, {n})")
    if (P < 0).any():
        raise ValidationError("transition matrix has negative entries")
    bad = (P > 0) != shift.M
    if bad.any():
        g, h = map(int, np.argwhere(bad)[0])
        gs, hs = shift.spec.element(g), shift.spec.element(h)
        kind = "zero on an allowed edge" if shift.M[g, h] else "positive on a forbidden edge"
        raise CompatibilityError(f"P[{gs}, {hs}] is {kind}")
    rows = P.sum(axis=1)
    if np.abs(rows - 1).max() > ROW_TOL:
        g = int(np.argmax(np.abs(rows - 1)))
        raise ValidationError(f"row {shift.spec.element(g)} of P sums to {rows[g]!r}")

    if pi is None:
        pi = stationary_vector(P)
        tol = STATIONARY_TOL
    else:
        pi = np.array(pi, dtype=float)
        if pi.shape != (n,):
            raise StructureError(f"pi has shape {pi.shape}, expected ({n},)")
        tol = SUPPLIED_PI_TOL
    if np.abs(pi @ P - pi).max() > tol or abs(pi.sum() - 1) > tol:
        raise ValidationError("pi is not a stationary probability vector of P")
    if (pi <= 0).any():
        raise ValidationError("stationary vector is not strictly positive")
    P.setflags(write=False)
    pi.setflags(write=False)
    return MarkovMeasure(shift, P, pi)


def haar_measure(shift: SubgroupShift) -> MarkovMeasure:
    L, rho = haar_kernel(shift)
    return validate_measure(shift, L, rho)


# -- regeneration --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RegenSampler:
    """Splitting P = alpha * (uniform on F(g)) + (1 - alpha) * Q with the data to drive H.

    ``qtiles[g]`` holds right endpoints of consecutive intervals laid over
    [0, 1]; interval ``j`` belongs to follower ``qfollowers[g][j]`` and has
    length Q[g, that follower].
    """

    measure: MarkovMeasure
    alpha: float
    Q: np.ndarray
    qtiles: tuple[np.ndarray, ...]
    qfollowers: tuple[np.ndarray, ...]
    seed: int = 0
    _cum: np.ndarray = field(repr=False, default=None)
    _fol: np.ndarray = field(repr=False, default=None)

    @property
    def shift(self) -> SubgroupShift:
        return self.measure.shift


def build_regen(measure: MarkovMeasure, alpha: float | None = None, seed: int = 0) -> RegenSampler:
    shift = measure.shift
    alpha_max = float(measure.P[shift.M].min())
    if alpha is None:
        alpha = 0.5 * alpha_max
    elif not 0 < alpha < alpha_max:
        raise ParameterError(f"alpha must lie in (0, {alpha_max}), got {alpha}")
    Q = (measure.P - alpha / shift.fsize * shift.M) / (1 - alpha)
    if (Q < -ROW_TOL).any():
        raise ParameterError(f"alpha = {alpha} makes some Q entry negative")
    Q = np.clip(Q, 0.0, None)

    qtiles, qfollowers = [], []
    width = max(len(f) for f in shift.followers)
    cum = np.full((shift.order, width), np.inf)
    fol = np.zeros((shift.order, width), dtype=np.int64)
    for g, followers in enumerate(shift.followers):
        keep = followers[Q[g, followers] > 0]
        ends = np.cumsum(Q[g, keep])
        ends[-1] = 1.0
        qtiles.append(ends)
        qfollowers.append(keep)
        cum[g, : len(ends)] = ends
        fol[g, : len(keep)] = keep
        fol[g, len(keep):] = keep[-1]
    Q.setflags(write=False)
    return RegenSampler(measure, float(alpha), Q, tuple(qtiles), tuple(qfollowers), seed, cum, fol)


def step_H(sampler: RegenSampler, g: GroupElement, u: int, w: GroupElement, v: float) -> GroupElement:
    """One step of the regenerative update x_n = H(x_{n-1}, U_n, W_n, V_n)."""
    shift = sampler.shift
    spec = shift.spec
    if tuple(w) not in shift.F0:
        raise DomainError(f"{w} is not in the follower subgroup F")
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"v = {v} outside [0, 1]")
    gi = spec.index(g)
    if u:
        return spec.element(int(spec.add_table[shift.section[gi], spec.index(w)]))
    j = min(int(np.searchsorted(sampler.qtiles[gi], v, side="right")), len(sampler.qtiles[gi]) - 1)
    return spec.element(int(sampler.qfollowers[gi][j]))


def _stream(seed: int, path_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(path_index,))))


def path_uniforms(seed: int, path_index: int, length: int) -> np.ndarray:
    return _stream(seed, path_index).random(3 * length + 1)


@dataclass
class PathBatch:
    """Index-level traces of many paths; row ``t`` is path ``first + t``."""

    x_prev: np.ndarray
    x: np.ndarray
    U: np.ndarray
    W: np.ndarray
    V: np.ndarray


def sample_batch(
    sampler: RegenSampler,
    length: int,
    seed: int,
    first: int,
    count: int,
    forced_ones: tuple[int, int] | None = None,
    start: GroupElement | None = None,
) -> PathBatch:
    if length < 1:
        raise DomainError(f"path length must be >= 1, got {length}")
    shift = sampler.shift
    add = shift.spec.add_table
    L = length
    R = np.empty((count, 3 * L + 1))
    for t in range(count):
        R[t] = path_uniforms(seed, first + t, L)

    cdf = np.cumsum(sampler.measure.pi)
    x_prev = np.minimum(np.searchsorted(cdf, R[:, 0], side="right"), shift.order - 1)
    if start is not None:
        x_prev[:] = shift.spec.index(start)
    U = R[:, 1 : L + 1] < sampler.alpha
    if forced_ones is not None:
        lo, hi = forced_ones
        U[:, max(lo, 0) : min(hi, L - 1) + 1] = True
    w_rank = np.minimum((R[:, L + 1 : 2 * L + 1] * shift.fsize).astype(np.int64), shift.fsize - 1)
    W = shift.f0_indices[w_rank]
    V = R[:, 2 * L + 1 :]

    x = np.empty((count, L), dtype=np.int64)
    prev = x_prev
    for n in range(L):
        regen = add[shift.section[prev], W[:, n]]
        j = (V[:, n, None] >= sampler._cum[prev]).sum(axis=1)
        j = np.minimum(j, sampler._cum.shape[1] - 1)
        resid = sampler._fol[prev, j]
        prev = np.where(U[:, n], regen, resid)
        x[:, n] = prev
    return PathBatch(x_prev, x, U, W, V)


def iter_batches(
    sampler: RegenSampler,
    length: int,
    seed: int,
    trials: int,
    forced_ones: tuple[int, int] | None = None,
    start: GroupElement | None = None,
) -> Iterable[PathBatch]:
    for first in range(0, trials, CHUNK):
        yield sample_batch(
            sampler, length, seed, first, min(CHUNK, trials - first), forced_ones, start
        )


@dataclass(frozen=True)
class PathTrace:
    x_prev: GroupElement
    x: tuple[GroupElement, ...]
    U: tuple[int, ...]
    W: tuple[GroupElement, ...]
    V: tuple[float, ...]


def sample_path(
    sampler: RegenSampler,
    length: int,
    seed: int | None = None,
    forced_ones: tuple[int, int] | None = None,
    path_index: int = 0,
    start: GroupElement | None = None,
) -> PathTrace:
    """Sample one path x_0 ... x_{L-1} together with the randomness that drove it.

    ``forced_ones = (lo, hi)`` sets U_n = 1 for ``lo <= n <= hi``; since U is
    independent of (W, V, x_{-1}) this samples exactly from the law
    conditioned on that block of ones.
    """
    seed = sampler.seed if seed is None else seed
    b = sample_batch(sampler, length, seed, path_index, 1, forced_ones, start)
    el = sampler.shift.spec.element
    return PathTrace(
        x_prev=el(int(b.x_prev[0])),
        x=tuple(el(int(i)) for i in b.x[0]),
        U=tuple(int(u) for u in b.U[0]),
        W=tuple(el(int(i)) for i in b.W[0]),
        V=tuple(float(v) for v in b.V[0]),
    )


# -- renewal process -------------------------------------------------------------


@dataclass(frozen=True)
class RenewalStats:
    m: int
    times: list[int]
    beta: float | None

    def hits(self, A: Iterable[int]) -> set[int]:
        """The renewal hits N^(m)(A): members of A that are renewal times.

        Negative members (as left by shifting A down) are dropped.
        """
        ts = set(self.times)
        return {a for a in A if a in ts}


def renewal_times(U: Sequence[int], m: int) -> RenewalStats:
    """Starts of all-ones blocks of length m+1, each more than m after the previous one.

    T_0 = 0 always; T_1 is the first block start i > 0.  Blocks must fit
    inside ``U``.  ``beta`` is the geometric-rate MLE ``1 - 1/mean gap`` over
    the observed inter-renewal gaps (None without a gap).
    """
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    U = np.asarray(U, dtype=bool)
    times = [0]
    i = 1
    last_end = len(U) - m
    while i < last_end:
        if U[i : i + m + 1].all():
            times.append(i)
            i += m + 1
        else:
            i += 1
    gaps = np.diff(times)
    beta = float(1 - len(gaps) / gaps.sum()) if len(gaps) else None
    return RenewalStats(m, times, beta)


def renewal_indicator(U: np.ndarray, m: int) -> np.ndarray:
    """Vectorised renewal times: ``out[t, i]`` is True iff i = T_l for some l >= 1 in row t."""
    U = np.asarray(U, dtype=bool)
    trials, L = U.shape
    width = L - m
    out = np.zeros((trials, L), dtype=bool)
    if width <= 1:
        return out
    block = np.ones((trials, width), dtype=bool)
    for d in range(m + 1):
        block &= U[:, d : d + width]
    # T_1 only needs i > 0, later times need i > previous + m
    last = np.full(trials, -m, dtype=np.int64)
    for i in range(1, width):
        hit = block[:, i] & (i > last + m)
        out[:, i] = hit
        last[hit] = i
    return out


def first_renewal(U: np.ndarray, m: int) -> np.ndarray:
    """T_1^(m) per row, or -1 when no block fits."""
    ind = renewal_indicator(U, m)
    has = ind.any(axis=1)
    return np.where(has, ind.argmax(axis=1), -1)


def m_separated(A: Iterable[int], m: int) -> list[int]:
    """Greedy left-to-right m-separated subset of A (pairwise gaps >= m + 1)."""
    out: list[int] = []
    for a in sorted(set(A)):
        if not out or a - out[-1] >= m + 1:
            out.append(a)
    return out


def is_m_separated(A: Iterable[int], m: int) -> bool:
    s = sorted(set(A))
    return all(b - a >= m + 1 for a, b in zip(s, s[1:]))


def delta_bound(alpha: float, m: int) -> float:
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha ** (m + 1) * (1 - alpha)


def geometric_tail_rate(samples: np.ndarray, censor: int) -> float:
    """Smallest beta with empirical P(T > t) <= beta**t for 1 <= t < censor.

    Samples equal to -1 (no renewal within the window) count as exceeding
    every t in range.
    """
    samples = np.asarray(samples)
    long = np.where(samples < 0, np.iinfo(np.int64).max, samples)
    beta = 0.0
    for t in range(1, censor):
        surv = float((long > t).mean())
        if surv > 0:
            beta = max(beta, surv ** (1.0 / t))
    return beta
