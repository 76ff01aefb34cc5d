"""Binomial coefficients modulo p^s, carry counting and isolated positions in Pascal rows."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, PreconditionError


def digits(n: int, p: int) -> list[int]:
    """Base-p digits of n, least significant first ([] for n = 0)."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    out = []
    while n:
        n, d = divmod(n, p)
        out.append(d)
    return out


@dataclass(frozen=True)
class DigitExpansion:
    n: int
    p: int
    digits: tuple[int, ...]

    def J(self, i: int) -> list[int]:
        """Positions j >= i of nonzero digits."""
        return [j for j in range(i, len(self.digits)) if self.digits[j]]

    def xi(self, i: int) -> int:
        return len(self.J(i))

    def in_power_multiples(self, a: int) -> bool:
        """Membership of n in p^a N, i.e. its lowest ``a`` digits vanish."""
        return all(d == 0 for d in self.digits[:a])

    def value(self) -> int:
        return sum(d * self.p**j for j, d in enumerate(self.digits))


def digit_profile(n: int, p: int) -> DigitExpansion:
    return DigitExpansion(n, p, tuple(digits(n, p)))


def carry_count(n: int, k: int, p: int) -> int:
    """Carries in the base-p addition k + (n - k); equals v_p(C(n, k)) by Kummer."""
    if not 0 <= k <= n:
        raise DomainError(f"k = {k} outside [0, {n}]")
    a, b = k, n - k
    carry = count = 0
    while a or b or carry:
        carry = 1 if (a % p + b % p + carry) >= p else 0
        count += carry
        a //= p
        b //= p
    return count


def p_valuation(x: int, p: int) -> int:
    if x == 0:
        raise DomainError("valuation of 0 is infinite")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def binom_mod(n: int, k: int, p: int, s: int) -> int:
    """C(n, k) mod p^s, with C(n, k) = 0 outside 0 <= k <= n."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if k < 0 or k > n:
        return 0
    if carry_count(n, k, p) >= s:
        return 0
    return math.comb(n, k) % p**s


def binom_row(n: int, p: int, s: int) -> list[int]:
    """Whole row C(n, 0..n) mod p^s in O(n) without big integers.

    Walks C(n, k+1) = C(n, k) (n - k) / (k + 1), keeping the p-adic valuation
    and the unit part mod p^s separately.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    q = p**s
    row = [1 % q]
    unit, val = 1, 0
    for k in range(n):
        num, den = n - k, k + 1
        a = b = 0
        while num % p == 0:
            num //= p
            a += 1
        while den % p == 0:
            den //= p
            b += 1
        val += a - b
        unit = unit * num * pow(den, -1, q) % q
        row.append(unit * p**val % q if val < s else 0)
    return row


@dataclass(frozen=True)
class IsolationReport:
    n: int
    m: int
    ell: int
    p: int
    s: int
    isolated: list[int]

    def xi(self, a: int, i: int) -> int:
        """Nonzero base-p digits of n at positions >= a + i."""
        return digit_profile(self.n, self.p).xi(a + i)

    def __len__(self) -> int:
        return len(self.isolated)


def unit_positions(n: int, p: int) -> list[int]:
    """All k in [0, n] with C(n, k) prime to p: digitwise k_j <= n_j (no carries)."""
    ds = digits(n, p)
    ks = [0]
    for j, d in enumerate(ds):
        ks = [k + c * p**j for c in range(d + 1) for k in ks]
    return sorted(ks)


def _vanishes(n: int, k: int, p: int, s: int) -> bool:
    return k < 0 or k > n or carry_count(n, k, p) >= s


def isolated_set(n: int, m: int, ell: int, p: int, s: int) -> IsolationReport:
    """Positions k whose coefficient is a unit while every other coefficient
    with index in [k - m, k + ell] vanishes mod p^s."""
    if min(n, m, ell) < 0:
        raise DomainError("n, m and ell must be >= 0")
    out = [
        k
        for k in unit_positions(n, p)
        if all(_vanishes(n, kp, p, s) for kp in range(k - m, k + ell + 1) if kp != k)
    ]
    return IsolationReport(n, m, ell, p, s, out)


def isolated_set_bruteforce(n: int, m: int, ell: int, p: int, s: int) -> list[int]:
    """Reference scan over a zero-padded row computed by big-integer binomials."""
    q = p**s
    pad = [0] * m + [math.comb(n, k) % q for k in range(n + 1)] + [0] * ell
    return [
        k
        for k in range(n + 1)
        if pad[k + m] % p != 0
        and all(pad[k + m + d] == 0 for d in range(-m, ell + 1) if d != 0)
    ]


def lemma34_check(n: int, a: int, i: int, m: int, p: int, s: int) -> tuple[int, int, bool]:
    """Count (m, m)-isolated positions in row n against 2**xi_{a+i}(n) - 1.

    The hypotheses (m >= 1, a >= 2s+1, p**(a//2) > m, n in p^a N, i >= a) are
    enforced.
    """
    if m < 1:
        raise PreconditionError(f"m must be >= 1, got {m}")
    if a < 2 * s + 1:
        raise PreconditionError(f"a = {a} < 2s+1 = {2 * s + 1}")
    if p ** (a // 2) <= m:
        raise PreconditionError(f"p^floor(a/2) = {p ** (a // 2)} is not > m = {m}")
    prof = digit_profile(n, p)
    if not prof.in_power_multiples(a):
        raise PreconditionError(f"n = {n} is not a multiple of {p}^{a}")
    if i < a:
        raise PreconditionError(f"i = {i} < a = {a}")
    count = len(isolated_set(n, m, m, p, s))
    bound = 2 ** prof.xi(a + i) - 1
    return count, bound, count >= bound


def floor_half_log(n: int, p: int) -> int:
    """floor(log_p(n) / 2) computed exactly: the largest i with p**(2i) <= n."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    i = 0
    while p ** (2 * (i + 1)) <= n:
        i += 1
    return i


def in_M0(n: int, a: int, p: int) -> bool:
    """Is n in p^a N with xi_{a + floor(log_p(n)/2)}(n) >= log_p(n) / 5?"""
    if n < 1:
        return False
    prof = digit_profile(n, p)
    if not prof.in_power_multiples(a):
        return False
    xi = prof.xi(a + floor_half_log(n, p))
    # xi >= log_p(n)/5  <=>  p**(5 xi) >= n
    return p ** (5 * xi) >= n


def m0_counts(N: int, a: int, p: int) -> tuple[int, int]:
    """(|M0 ∩ [0, N)|, |p^a N ∩ [0, N)|)."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    step = p**a
    base = range(0, N, step)
    return sum(in_M0(n, a, p) for n in base), len(base)


def m0_density(N: int, a: int, p: int) -> float:
    members, total = m0_counts(N, a, p)
    return members / total


def bound_chain(n: int, a: int, m_prime: int, p: int, s: int, delta: float) -> dict:
    """Numbers behind the final estimate for one n in M0.

    Returns the isolated count |A|, the digit bound 2**xi - 1, the power bound
    n**(1/C) - 1 with C = 5 log2(p), and the (unasserted) TV bound
    (1 - delta)**(n**(1/C) - 1).
    """
    i = floor_half_log(n, p)
    count = len(isolated_set(n, m_prime, m_prime, p, s))
    digit_bound = 2 ** digit_profile(n, p).xi(a + i) - 1
    C = 5 * math.log2(p)
    power_bound = n ** (1 / C) - 1
    return {
        "n": n,
        "i": i,
        "isolated": count,
        "digit_bound": digit_bound,
        "power_bound": power_bound,
        "tv_bound": (1 - delta) ** power_bound,
    }
