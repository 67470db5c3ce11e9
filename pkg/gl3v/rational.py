"""
Diophantine and modular arithmetic: continued fractions, approximant
selection, modular inverses, divisors, the Moebius function and
Kloosterman sums.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import CapExceededError, NotInvertibleError

logger = logging.getLogger(__name__)

# Gauss map cutoffs for floating-point input
FRAC_CUTOFF = 1e-14
QUOTIENT_CUTOFF = 1e12
KLOOSTERMAN_CAP = 10 ** 7


def gcd(a, b):
    return math.gcd(int(a), int(b))


def mod_inverse(a, c):
    """The inverse of a modulo c, in [0, c)."""
    a, c = int(a), int(c)
    if c < 1:
        raise ValueError("modulus must be positive, got {0}".format(c))
    if c == 1:
        return 0
    try:
        return pow(a % c, -1, c)
    except ValueError as err:
        raise NotInvertibleError("{0} is not invertible mod {1} (gcd {2})".format(a, c, math.gcd(a, c))) from err


def factorize(n):
    """Prime factorization of n >= 1 as {p: e}, by trial division."""
    n = int(n)
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    factors = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


def divisors(c):
    c = abs(int(c))
    small, large = [], []
    d = 1
    while d * d <= c:
        if c % d == 0:
            small.append(d)
            if d * d != c:
                large.append(c // d)
        d += 1
    return small + large[::-1]


def divisor_count(c):
    count = 1
    for e in factorize(c).values():
        count *= e + 1
    return count


def mobius(d):
    factors = factorize(d)
    if any(e > 1 for e in factors.values()):
        return 0
    return -1 if len(factors) % 2 else 1


@lru_cache(maxsize=256)
def _unit_table(c):
    units = [x for x in range(c) if math.gcd(x, c) == 1]
    inverses = [mod_inverse(x, c) for x in units]
    return np.array(units, dtype=np.int64), np.array(inverses, dtype=np.int64)


def kloosterman(n, m, c):
    """S(n, m; c) = sum over units x mod c of e((n x + m xbar) / c)."""
    c = int(c)
    if c < 1:
        raise ValueError("Kloosterman modulus must be >= 1")
    if c > KLOOSTERMAN_CAP:
        raise CapExceededError("Kloosterman modulus {0} above cap {1}".format(c, KLOOSTERMAN_CAP))
    units, inverses = _unit_table(c)
    # exact residues before going to floating point
    phases = (int(n) % c * units + int(m) % c * inverses) % c
    value = np.sum(np.exp(2j * np.pi * phases / c))
    if abs(value.imag) > 1e-10 * max(1.0, c):
        logger.warning("Kloosterman sum S(%d,%d;%d) has imaginary part %g", n, m, c, value.imag)
    return float(value.real)


def kloosterman_residues(n, c):
    """Array of S(n, r; c) for r = 0 .. c-1."""
    return np.array([kloosterman(n, r, c) for r in range(c)])


def weil_bound(n, m, c):
    g = math.gcd(math.gcd(int(n), int(m)), int(c))
    return divisor_count(c) * math.sqrt(g) * math.sqrt(c)


@dataclass
class Convergent:
    p: int
    q: int
    k: int
    a: int

    @property
    def value(self):
        return Fraction(self.p, self.q)


@dataclass
class ApproximantChoice:
    a: int
    c: int
    Y: float
    k: int


def _partial_quotients(alpha, max_depth):
    if isinstance(alpha, (Fraction, int)):
        alpha = Fraction(alpha)
        num, den = alpha.numerator, alpha.denominator
        quotients = []
        while den and len(quotients) < max_depth:
            a, r = divmod(num, den)
            quotients.append(a)
            num, den = den, r
        return quotients
    x = float(alpha)
    quotients = []
    while len(quotients) < max_depth:
        a = math.floor(x)
        quotients.append(int(a))
        frac = x - a
        if frac < FRAC_CUTOFF:
            break
        x = 1.0 / frac
        if x > QUOTIENT_CUTOFF:
            break
    return quotients


def continued_fraction(alpha, max_depth=64):
    """Convergents p_k/q_k of alpha; stops early for rationals."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    convergents = []
    # p_{-2}, p_{-1} = 0, 1 and q_{-2}, q_{-1} = 1, 0
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    for k, a in enumerate(_partial_quotients(alpha, max_depth)):
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        convergents.append(Convergent(p=p, q=q, k=k, a=a))
    return convergents


def select_approximant(alpha, T, max_depth=64):
    """(a, c, Y) with a = -p_k, c = q_k, q_k^2 <= T <= q_{k+1}^2 and Y = T |alpha + a/c|."""
    if T < 1:
        raise ValueError("select_approximant needs T >= 1")
    convergents = continued_fraction(alpha, max_depth)
    chosen = convergents[0]
    for conv in convergents:
        if conv.q * conv.q <= T:
            chosen = conv
        else:
            break
    if isinstance(alpha, (Fraction, int)):
        Y = float(T * abs(Fraction(alpha) - Fraction(chosen.p, chosen.q)))
    else:
        Y = T * abs(float(alpha) - chosen.p / chosen.q)
    return ApproximantChoice(a=-chosen.p, c=chosen.q, Y=Y, k=chosen.k)
