"""Marginals of Phi^n mu for Phi = id + sigma, and the checks built on them.

The exact engine is a forward dynamic program over positions t of the input
word.  Its state is the current symbol x_t together with the m partial sums
y_j = sum_{k <= t} C(n, k - j) x_k of the output coordinates, held as a dense
tensor ``D[x_t, y_0, ..., y_{m-1}]``.  Positions where every coefficient
vanishes mod p^s only move x_t, so runs of them collapse into one
multiplication by a power of P.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .binomial import binom_row, in_M0, isolated_set
from .errors import DomainError, PreconditionError, ResourceError
from .group import GroupSpec
from .measure import MarkovMeasure, RegenSampler, build_regen, haar_measure, iter_batches
from .shift import CylinderDistribution, SubgroupShift, haar_marginal, word_index_array

DEFAULT_WORK_CAP = 2 * 10**8
BRUTE_CAP = 2 * 10**7
SE_THRESHOLD = 4.0


@dataclass(frozen=True)
class PhiCoefficientRow:
    n: int
    coeffs: tuple[int, ...]


def phi_row(n: int, spec: GroupSpec) -> PhiCoefficientRow:
    """Coefficients of Phi^n = sum_k C(n, k) sigma^k reduced mod p^s."""
    return PhiCoefficientRow(n, tuple(binom_row(n, spec.p, spec.s)))


# -- exact dynamic program ------------------------------------------------------


class _DPKernel:
    """Per-(measure, m) caches: gather maps for coefficient patterns and powers of P."""

    def __init__(self, measure: MarkovMeasure, m: int):
        spec = measure.spec
        self.A = spec.order
        self.m = m
        self.P = measure.P
        self.pi = measure.pi
        self.spec = spec
        self._gather: dict[tuple[int, ...], np.ndarray] = {}
        self._powers: dict[int, np.ndarray] = {1: measure.P}
        # y-digits of every flat accumulator index, most significant first
        flat = np.arange(self.A**m, dtype=np.int64)
        self.ydigits = np.stack(
            [(flat // self.A ** (m - 1 - j)) % self.A for j in range(m)], axis=1
        ) if m else np.zeros((1, 0), dtype=np.int64)

    def gather(self, coeffs: tuple[int, ...]) -> np.ndarray:
        """``src[g, Y]``: flat index Y' with Y = Y' + coeffs * g componentwise."""
        src = self._gather.get(coeffs)
        if src is None:
            spec, A, m = self.spec, self.A, self.m
            add, neg, scal = spec.add_table, spec.neg_table, spec.scalar_table
            src = np.zeros((A, A**m), dtype=np.int64)
            for g in range(A):
                idx = np.zeros(A**m, dtype=np.int64)
                for j in range(m):
                    shift = neg[scal[coeffs[j], g]]
                    idx = idx * A + add[self.ydigits[:, j], shift]
                src[g] = idx
            self._gather[coeffs] = src
        return src

    def power(self, d: int) -> np.ndarray:
        Pd = self._powers.get(d)
        if Pd is None:
            Pd = np.linalg.matrix_power(self.P, d)
            self._powers[d] = Pd
        return Pd


def _work(A: int, n: int, m: int) -> int:
    return A ** (m + 1) * (n + m)


def exact_marginal(
    measure: MarkovMeasure, n: int, m: int, work_cap: int = DEFAULT_WORK_CAP, _kernel=None
) -> CylinderDistribution:
    """Exact law of ((Phi^n x)_0, ..., (Phi^n x)_{m-1}) under the stationary measure."""
    if n < 0 or m < 1:
        raise DomainError(f"need n >= 0 and m >= 1, got n={n}, m={m}")
    A = measure.spec.order
    if _work(A, n, m) > work_cap:
        raise ResourceError(f"|A|^(m+1)(n+m) = {_work(A, n, m)} exceeds work cap {work_cap}")
    kern = _kernel if _kernel is not None else _DPKernel(measure, m)
    row = phi_row(n, measure.spec).coeffs
    T = n + m
    q = measure.spec.torsion

    def coeffs_at(t: int) -> tuple[int, ...]:
        return tuple(row[t - j] % q if 0 <= t - j <= n else 0 for j in range(m))

    D = np.zeros((A, A**m))
    D[:, 0] = measure.pi
    gidx = np.arange(A)[:, None]
    t = 0
    while True:
        c = coeffs_at(t)
        if any(c):
            D = D[gidx, kern.gather(c)]
        if t == T - 1:
            break
        # skip ahead over positions with no live coefficient
        d = 1
        while t + d < T - 1 and not any(coeffs_at(t + d)):
            d += 1
        D = kern.power(d).T @ D
        t += d
    probs = D.sum(axis=0).reshape((A,) * m)
    return CylinderDistribution(measure.spec, probs)


def mu_marginal(measure: MarkovMeasure, m: int) -> CylinderDistribution:
    """Law of x_0 ... x_{m-1} under the stationary Markov measure."""
    A = measure.spec.order
    probs = measure.pi.copy()
    for _ in range(m - 1):
        probs = probs[..., None] * measure.P.reshape((1,) * (probs.ndim - 1) + (A, A))
    return CylinderDistribution(measure.spec, probs)


# -- brute-force oracle -------------------------------------------------------------


def apply_phi(words: np.ndarray, spec: GroupSpec, times: int) -> np.ndarray:
    """Apply x -> x + sigma x ``times`` times to rows of element indices (each pass drops one column)."""
    add = spec.add_table
    for _ in range(times):
        words = add[words[:, :-1], words[:, 1:]]
    return words


def brute_marginal(measure: MarkovMeasure, n: int, m: int, exact: bool = False) -> CylinderDistribution:
    """Enumerate every allowed word of length n + m and push it through Phi n times.

    With ``exact=True`` the weights are accumulated as ``Fraction`` objects
    (from the binary values of P and pi) and converted at the very end.
    """
    if n < 0 or m < 1:
        raise DomainError(f"need n >= 0 and m >= 1, got n={n}, m={m}")
    shift = measure.shift
    A = shift.order
    # the cap bounds the enumerated allowed words, not all of A^(n+m)
    words = word_index_array(shift, n + m, cap=BRUTE_CAP)
    out = apply_phi(words, shift.spec, n)
    flat = np.zeros(len(out), dtype=np.int64)
    for j in range(m):
        flat = flat * A + out[:, j]
    if exact:
        P = [[Fraction(float(v)) for v in row] for row in measure.P]
        pi = [Fraction(float(v)) for v in measure.pi]
        acc = [Fraction(0)] * A**m
        for w, cell in zip(words.tolist(), flat.tolist()):
            wt = pi[w[0]]
            for a, b in zip(w, w[1:]):
                wt *= P[a][b]
            acc[cell] += wt
        probs = np.array([float(v) for v in acc])
    else:
        wt = measure.pi[words[:, 0]].copy()
        for t in range(1, n + m):
            wt *= measure.P[words[:, t - 1], words[:, t]]
        probs = np.bincount(flat, weights=wt, minlength=A**m)
    return CylinderDistribution(shift.spec, probs.reshape((A,) * m))


# -- Monte Carlo -----------------------------------------------------------------------


def _window_flat(x: np.ndarray, coeffs: Sequence[int], spec: GroupSpec, start: int, m: int) -> np.ndarray:
    """Flat cell index of ((Phi^n x)_start, ..., (Phi^n x)_{start+m-1}) for each row of x."""
    add, scal = spec.add_table, spec.scalar_table
    A = spec.order
    nz = [(k, c) for k, c in enumerate(coeffs) if c]
    flat = np.zeros(len(x), dtype=np.int64)
    for j in range(m):
        acc = np.zeros(len(x), dtype=np.int64)
        for k, c in nz:
            acc = add[acc, scal[c, x[:, start + j + k]]]
        flat = flat * A + acc
    return flat


def mc_counts(
    sampler: RegenSampler,
    n: int,
    m: int,
    trials: int,
    seed: int,
    offset: int = 0,
    forced_ones: tuple[int, int] | None = None,
) -> np.ndarray:
    spec = sampler.shift.spec
    coeffs = phi_row(n, spec).coeffs
    counts = np.zeros(spec.order**m, dtype=np.int64)
    for b in iter_batches(sampler, offset + n + m, seed, trials, forced_ones):
        counts += np.bincount(_window_flat(b.x, coeffs, spec, offset, m), minlength=len(counts))
    return counts


def mc_marginal(sampler: RegenSampler, n: int, m: int, trials: int, seed: int, offset: int = 0) -> CylinderDistribution:
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    counts = mc_counts(sampler, n, m, trials, seed, offset)
    A = sampler.shift.order
    return CylinderDistribution(sampler.shift.spec, (counts / trials).reshape((A,) * m))


# -- distances and Cesàro means ------------------------------------------------------


def tv_distance(d1: CylinderDistribution, d2: CylinderDistribution) -> float:
    if d1.m != d2.m or d1.spec != d2.spec:
        raise DomainError(f"cannot compare tables of length {d1.m} and {d2.m}")
    return 0.5 * math.fsum(np.abs(d1.probs - d2.probs).ravel())


@dataclass(frozen=True)
class Subsequence:
    """Which iterates n enter a Cesàro mean.

    ``all``; ``pa`` = multiples of p^a; ``m0`` = M0(a) shifted by j; ``res`` =
    the residue class n = j mod p^a.
    """

    kind: str = "all"
    a: int = 0
    j: int = 0

    def __post_init__(self):
        if self.kind not in ("all", "pa", "m0", "res"):
            raise DomainError(f"unknown subsequence kind {self.kind!r}")

    def members(self, N: int, p: int) -> list[int]:
        q = p**self.a
        if self.kind == "all":
            return list(range(N))
        if self.kind == "pa":
            return list(range(0, N, q))
        if self.kind == "res":
            return list(range(self.j % q, N, q))
        return [n + self.j for n in range(0, N - self.j, q) if in_M0(n, self.a, p)]

    @classmethod
    def parse(cls, text: str) -> "Subsequence":
        """Parse ``all``, ``pa:<a>``, ``m0:<a>[,<j>]`` or ``res:<j>,<a>``."""
        if text == "all":
            return cls()
        kind, _, arg = text.partition(":")
        try:
            nums = [int(v) for v in arg.split(",")] if arg else []
        except ValueError:
            raise DomainError(f"bad subsequence selector {text!r}") from None
        if kind == "pa" and len(nums) == 1:
            return cls("pa", nums[0])
        if kind == "m0" and len(nums) in (1, 2):
            return cls("m0", nums[0], nums[1] if len(nums) == 2 else 0)
        if kind == "res" and len(nums) == 2:
            return cls("res", nums[1], nums[0])
        raise DomainError(f"bad subsequence selector {text!r}")

    def tag(self) -> str:
        return {
            "all": "all",
            "pa": f"pa:{self.a}",
            "m0": f"m0:{self.a},{self.j}",
            "res": f"res:{self.j},{self.a}",
        }[self.kind]


@dataclass
class CesaroReport:
    m: int
    N: int
    subsequence: str
    rows: list[tuple[int, float, float]] = field(default_factory=list)
    mean: CylinderDistribution | None = None

    @property
    def per_n(self) -> list[tuple[int, float]]:
        return [(n, tv) for n, tv, _ in self.rows]

    @property
    def cesaro_tv(self) -> list[tuple[int, float]]:
        """(N', TV of the running mean over members below N') after each member."""
        return [(n + 1, c) for n, _, c in self.rows]

    def cesaro_at(self, N: int) -> float | None:
        """TV of the running mean over the members below N (None if there are none)."""
        val = None
        for n, _, c in self.rows:
            if n >= N:
                break
            val = c
        return val

    @property
    def empty(self) -> bool:
        return not self.rows


def cesaro_scan(
    measure: MarkovMeasure,
    m: int,
    N: int,
    subsequence: Subsequence | str = "all",
    engine: str = "exact",
    trials: int = 10_000,
    seed: int = 0,
    work_cap: int = DEFAULT_WORK_CAP,
    sampler: RegenSampler | None = None,
) -> CesaroReport:
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if isinstance(subsequence, str):
        subsequence = Subsequence.parse(subsequence)
    shift = measure.shift
    haar = haar_marginal(shift, m)
    report = CesaroReport(m, N, subsequence.tag())
    members = subsequence.members(N, shift.spec.p)
    if engine == "exact":
        kern = _DPKernel(measure, m)
        for n in members:
            if _work(shift.order, n, m) > work_cap:
                raise ResourceError(f"exact engine refuses n = {n}: work cap {work_cap} exceeded")
    elif engine == "mc":
        sampler = sampler or build_regen(measure)
    else:
        raise DomainError(f"unknown engine {engine!r}")

    total = np.zeros_like(haar.probs)
    for count, n in enumerate(members, start=1):
        if engine == "exact":
            d = exact_marginal(measure, n, m, work_cap, _kernel=kern)
        else:
            d = mc_marginal(sampler, n, m, trials, seed + n)
        total += d.probs
        mean = CylinderDistribution(shift.spec, total / count)
        report.rows.append((n, tv_distance(d, haar), tv_distance(mean, haar)))
    if members:
        report.mean = CylinderDistribution(shift.spec, total / len(members))
    return report


def residue_decomposition(measure: MarkovMeasure, m: int, N: int, a: int) -> dict:
    """Compare the all-n Cesàro mean with the average of the per-residue means mod p^a."""
    p = measure.spec.p
    full = cesaro_scan(measure, m, N, "all")
    parts = [cesaro_scan(measure, m, N, Subsequence("res", a, j)) for j in range(p**a)]
    present = [r for r in parts if not r.empty]
    avg = sum(r.mean.probs for r in present) / len(present)
    haar = haar_marginal(measure.shift, m)
    return {
        "full": full,
        "parts": parts,
        "max_abs_diff": float(np.abs(avg - full.mean.probs).max()),
        "avg_tv": tv_distance(CylinderDistribution(measure.spec, avg), haar),
    }


# -- conditional-uniformity checks ---------------------------------------------------


@dataclass
class CheckReport:
    name: str
    trials: int
    target: float | None = None
    max_dev: float | None = None
    se: float | None = None
    passed: bool | None = None
    prefix_max_dev: float | None = None
    prefix_se: float | None = None
    prefix_passed: bool | None = None
    details: dict = field(default_factory=dict)

    def as_rows(self) -> list[tuple[str, object]]:
        rows = [(k, getattr(self, k)) for k in (
            "name", "trials", "target", "max_dev", "se", "passed",
            "prefix_max_dev", "prefix_se", "prefix_passed",
        )]
        return rows + sorted(self.details.items())


def _uniformity(counts: np.ndarray, support: np.ndarray, gamma: float, total: int) -> tuple[float, float, bool]:
    freq = counts / total
    dev = np.abs(freq - np.where(support, gamma, 0.0)).max()
    se = math.sqrt(gamma * (1 - gamma) / total)
    # mass off the allowed words would already be a structural failure
    ok = bool(dev <= SE_THRESHOLD * se and counts[~support].sum() == 0)
    return float(dev), se, ok


def _support_mask(shift: SubgroupShift, ell: int) -> np.ndarray:
    mask = np.zeros(shift.order**ell, dtype=bool)
    flat = np.zeros(shift.n_words(ell), dtype=np.int64)
    for col in word_index_array(shift, ell).T:
        flat = flat * shift.order + col
    mask[flat] = True
    return mask


def check_lemma31(
    sampler: RegenSampler, k: int, m: int, trials: int, seed: int, two_sided: bool = False
) -> CheckReport:
    """Frequencies of x_k..x_{k+m} given a forced block of U-ones starting at k - r.

    The prefix statistic is the symbol x_{k-r-1} (x_{-1} when k = r), paired
    with x_{k+m+r+1} in the two-sided case; the same uniformity is checked
    among paths where it takes its most frequent value.
    """
    shift = sampler.shift
    r = shift.r
    if k < r:
        raise PreconditionError(f"k = {k} < r = {r}")
    name = "lemma31" + ("_two_sided" if two_sided else "")
    report = CheckReport(name, trials, details={"k": k, "m": m, "r": r})
    if trials == 0:
        return report
    hi = k + m + (r if two_sided else 0)
    length = hi + 1 + (1 if two_sided else 0)
    A = shift.order
    cells = A ** (m + 1)
    counts = np.zeros(cells, dtype=np.int64)
    n_stats = A * A if two_sided else A
    by_prefix = np.zeros((n_stats, cells), dtype=np.int64)
    for b in iter_batches(sampler, length, seed, trials, (k - r, hi)):
        flat = np.zeros(len(b.x), dtype=np.int64)
        for t in range(k, k + m + 1):
            flat = flat * A + b.x[:, t]
        pre = b.x_prev if k - r - 1 < 0 else b.x[:, k - r - 1]
        if two_sided:
            pre = pre * A + b.x[:, hi + 1]
        counts += np.bincount(flat, minlength=cells)
        np.add.at(by_prefix, (pre, flat), 1)
    gamma = shift.gamma(m + 1)
    support = _support_mask(shift, m + 1)
    report.target = gamma
    report.max_dev, report.se, report.passed = _uniformity(counts, support, gamma, trials)
    g0 = int(by_prefix.sum(axis=1).argmax())
    sub = by_prefix[g0]
    report.prefix_max_dev, report.prefix_se, report.prefix_passed = _uniformity(
        sub, support, gamma, int(sub.sum())
    )
    before = "x_prev" if k - r - 1 < 0 else f"x_{k - r - 1}"
    el = shift.spec.element
    if two_sided:
        report.details["prefix_symbol"] = f"{before}+x_{hi + 1}"
        report.details["prefix_value"] = (el(g0 // A), el(g0 % A))
    else:
        report.details["prefix_symbol"] = before
        report.details["prefix_value"] = el(g0)
    return report


def check_lemma32(
    measure: MarkovMeasure,
    n: int,
    k: int,
    m: int,
    trials: int,
    seed: int,
    alpha: float | None = None,
) -> CheckReport:
    """Frequencies of (Phi^n x)_i..(Phi^n x)_{i+m} given U-ones on [i+k-r, i+k+r+m].

    The window offset i is the smallest value keeping the forced block inside
    the sampled path, i = max(0, r - k); by shift invariance any i is valid.
    """
    shift = measure.shift
    spec = shift.spec
    r = shift.r
    if n < 2 * r + 2 * m + 1:
        raise PreconditionError(f"n = {n} < 2r + 2m + 1 = {2 * r + 2 * m + 1}")
    if not 0 <= k <= n:
        raise PreconditionError(f"k = {k} outside [0, {n}]")
    iso = isolated_set(n, r + m, r + m, spec.p, spec.s)
    if k not in iso.isolated:
        raise PreconditionError(f"k = {k} is not ({r + m}, {r + m})-isolated in n = {n}")
    sampler = build_regen(measure, alpha)
    offset = max(0, r - k)
    report = CheckReport("lemma32", trials, details={"n": n, "k": k, "m": m, "r": r, "offset": offset})
    if trials == 0:
        return report
    forced = (offset + k - r, offset + k + r + m)
    counts = mc_counts(sampler, n, m + 1, trials, seed, offset, forced)
    gamma = shift.gamma(m + 1)
    report.target = gamma
    report.max_dev, report.se, report.passed = _uniformity(
        counts, _support_mask(shift, m + 1), gamma, trials
    )
    return report


def check_haar_fixed(shift: SubgroupShift, n_max: int, m_max: int, tol: float = 1e-12) -> CheckReport:
    nu = haar_measure(shift)
    worst = 0.0
    worst_at = (0, 1)
    for m in range(1, m_max + 1):
        kern = _DPKernel(nu, m)
        target = haar_marginal(shift, m)
        for n in range(n_max + 1):
            tv = tv_distance(exact_marginal(nu, n, m, _kernel=kern), target)
            if tv > worst:
                worst, worst_at = tv, (n, m)
    return CheckReport(
        "haar_fixed",
        0,
        target=0.0,
        max_dev=worst,
        passed=worst <= tol,
        details={"n_max": n_max, "m_max": m_max, "worst_n": worst_at[0], "worst_m": worst_at[1]},
    )
