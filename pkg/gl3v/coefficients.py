"""
Coefficient tables: Ramanujan tau and its normalisation, the symmetric
square lift to GL(3), the triple divisor function, the bi-index Hecke
recursion, Rankin-Selberg averages and the on-disk cache.
"""
import hashlib
import logging
import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import rational
from .errors import CacheChecksumError, CacheVersionError, CapExceededError, InsufficientTableError
from .mellin import EmbeddingParams

logger = logging.getLogger(__name__)

TAU_CAP = 10 ** 7
CACHE_FORMAT = "gl3v-coefficients"
CACHE_VERSION = 1
CACHE_ENV = "GL3V_CACHE_DIR"
KINDS = ("gl2", "sym2", "d3", "unit")
# primes 2^31 - {1, 19, 61, 69, 85, 99}
MODULI = (2147483647, 2147483629, 2147483587, 2147483579, 2147483563, 2147483549)


@dataclass(frozen=True)
class FormDescriptor:
    kind: str
    degree: int
    embedding: object = None
    conductor: int = 1

    @property
    def cuspidal(self):
        return self.kind in ("gl2", "sym2")

    @property
    def integral(self):
        return self.kind in ("d3", "unit")

    @classmethod
    def for_kind(cls, kind):
        if kind == "gl2":
            return cls("gl2", 2)
        if kind == "sym2":
            return cls("sym2", 3, EmbeddingParams.discrete_series(23, 0.0, (0, 1)))
        if kind == "d3":
            return cls("d3", 3, EmbeddingParams((0, 0, 0), (0, 0, 0)))
        if kind == "unit":
            return cls("unit", 1)
        raise ValueError("unknown coefficient kind {0!r}; choose from {1}".format(kind, KINDS))


class CoefficientTable(object):
    """First row a_{1,n}, n = 1 .. n_max, of a self-dual Hecke eigenform.

    values[0] is unused. a_{n,1} = a_{1,n}, and a_{q,-n} = a_{q,n}.
    """

    def __init__(self, descriptor, values):
        self.descriptor = descriptor
        self.values = np.asarray(values)
        self.n_max = self.values.size - 1

    @property
    def kind(self):
        return self.descriptor.kind

    def row(self, n_max=None):
        n_max = self.n_max if n_max is None else n_max
        self.require(n_max)
        return self.values[1:n_max + 1]

    def require(self, n):
        if n > self.n_max:
            raise InsufficientTableError("{0} table covers n <= {1}, need {2}".format(self.kind, self.n_max, n))

    def a(self, n):
        n = abs(int(n))
        self.require(n)
        return self.values[n]

    def bi_index(self, n, m):
        return bi_index(self, n, m)

    def scaled(self, kappa):
        return CoefficientTable(self.descriptor, self.values * kappa)

    def __eq__(self, other):
        return (isinstance(other, CoefficientTable) and self.descriptor.kind == other.descriptor.kind
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return "CoefficientTable(kind={0}, n_max={1})".format(self.kind, self.n_max)


def _moduli_for(N):
    # |tau(n)| <= d(n) n^(11/2) <= 2 N^6
    bits = math.log2(4.0) + 6.0 * math.log2(max(N, 2)) + 1.0
    count = int(math.ceil(bits / 31.0)) + 1
    if count > len(MODULI):
        raise CapExceededError("tau table of size {0} needs more CRT moduli".format(N))
    return MODULI[:count]


def _eta_cubed(N):
    # prod (1 - q^n)^3 = sum_k (-1)^k (2k+1) q^(k(k+1)/2)
    terms = []
    k = 0
    while k * (k + 1) // 2 <= N:
        terms.append((k * (k + 1) // 2, (-1) ** k * (2 * k + 1)))
        k += 1
    return terms


def _delta_mod(N, p, terms):
    # q prod (1 - q^n)^24 = q (eta^3)^8, coefficients of q^1 .. q^N mod p
    size = N
    series = np.zeros(size, dtype=np.int64)
    for shift, coef in terms:
        if shift < size:
            series[shift] = coef % p
    for _ in range(7):
        product = np.zeros(size, dtype=np.int64)
        for shift, coef in terms:
            if shift >= size:
                break
            product[shift:] = (product[shift:] + (coef % p) * series[:size - shift]) % p
        series = product
    return series


def ramanujan_tau(N):
    """Exact tau(1..N) as python ints, by multi-modular sparse products and CRT."""
    if N > TAU_CAP:
        raise CapExceededError("tau table size {0} above cap {1}".format(N, TAU_CAP))
    if N < 1:
        return []
    terms = _eta_cubed(N)
    moduli = _moduli_for(N)
    logger.info("building tau(1..%d) modulo %d primes", N, len(moduli))
    residues = [_delta_mod(N, p, terms) for p in moduli]
    value = residues[0].astype(object)
    modulus = moduli[0]
    for p, r in zip(moduli[1:], residues[1:]):
        inv = pow(modulus % p, -1, p)
        step = ((r.astype(object) - value) % p) * inv % p
        value = value + modulus * step
        modulus *= p
    half = modulus // 2
    return [int(v) - modulus if v > half else int(v) for v in value]


def gl2_normalized(N, tau=None):
    """a_n = tau(n) n^(-11/2)."""
    tau = ramanujan_tau(N) if tau is None else tau
    values = np.zeros(N + 1)
    values[1:] = np.array(tau[:N], dtype=float) * np.arange(1, N + 1, dtype=float) ** -5.5
    return values


def smallest_prime_factors(N):
    spf = np.zeros(N + 1, dtype=np.int64)
    for p in range(2, int(math.isqrt(N)) + 1):
        if spf[p] == 0:
            block = spf[p * p::p]
            block[block == 0] = p
    rest = np.arange(N + 1)
    unset = spf == 0
    spf[unset] = rest[unset]
    return spf


def multiplicative_extension(N, local, dtype=float):
    """values[n] = prod over p^e || n of local(p, e)."""
    spf = smallest_prime_factors(N).tolist()
    values = [0] * (N + 1)
    if N >= 1:
        values[1] = 1
    for n in range(2, N + 1):
        p = spf[n]
        m = n // p
        e = 1
        while m % p == 0:
            m //= p
            e += 1
        values[n] = values[m] * local(p, e)
    return np.array(values, dtype=dtype)


def sym2_coefficients(N, tau=None):
    """a_{1,n} of the symmetric square of the weight 12 cusp form."""
    lam = gl2_normalized(N, tau)

    @lru_cache(maxsize=None)
    def local_row(p):
        A = lam[p] ** 2 - 1.0
        h = [1.0, A]
        while p ** len(h) <= N:
            h.append(A * h[-1] - A * h[-2] + (h[-3] if len(h) >= 3 else 0.0))
        return h

    return multiplicative_extension(N, lambda p, e: local_row(p)[e])


def d3_coefficients(N):
    """d_3(n) = #{(a, b, c): abc = n}; d_3(p^e) = (e+1)(e+2)/2."""
    return multiplicative_extension(N, lambda p, e: (e + 1) * (e + 2) // 2, dtype=np.int64)


def unit_coefficients(N):
    values = np.ones(N + 1, dtype=np.int64)
    values[0] = 0
    return values


def build_table(kind, N):
    descriptor = FormDescriptor.for_kind(kind)
    if kind == "gl2":
        values = gl2_normalized(N)
    elif kind == "sym2":
        values = sym2_coefficients(N)
    elif kind == "d3":
        values = d3_coefficients(N)
    else:
        values = unit_coefficients(N)
    return CoefficientTable(descriptor, values)


def bi_index(table, n, m):
    """a_{n,m} = sum_{d | (n,m)} mu(d) a_{n/d,1} a_{1,m/d}."""
    n, m = abs(int(n)), abs(int(m))
    total = 0
    for d in rational.divisors(math.gcd(n, m)):
        mu = rational.mobius(d)
        if mu:
            total += mu * table.a(n // d) * table.a(m // d)
    return total


def bi_index_row(table, q, N):
    """a_{q,n} for n = 1 .. N as an array (equal to a_{n,q} for self-dual tables)."""
    q = abs(int(q))
    table.require(N)
    row = table.row(N).astype(float)
    if q == 1:
        return row
    out = np.zeros(N)
    for d in rational.divisors(q):
        mu = rational.mobius(d)
        if mu and d <= N:
            out[d - 1::d] += mu * float(table.a(q // d)) * row[:N // d]
    return out


def rankin_selberg_slope(table, T_grid):
    """Slope of log sum_{n <= T} a_{1,n}^2 against log T."""
    T_grid = np.asarray(T_grid, dtype=np.int64)
    table.require(int(T_grid.max()))
    sums = np.cumsum(table.row().astype(float) ** 2)[T_grid - 1]
    slope, _ = np.polyfit(np.log(T_grid), np.log(sums), 1)
    return float(slope)


def average_size_constant(table, T_grid):
    """max over T of sum_{n <= T} |a_{1,n}| / T."""
    T_grid = np.asarray(T_grid, dtype=np.int64)
    table.require(int(T_grid.max()))
    sums = np.cumsum(np.abs(table.row().astype(float)))[T_grid - 1]
    return float(np.max(sums / T_grid))


def _format_value(v):
    return str(int(v)) if isinstance(v, (int, np.integer)) else repr(float(v))


def save_cache(table, path):
    body = "".join("{0} {1}\n".format(n, _format_value(table.values[n])) for n in range(1, table.n_max + 1))
    checksum = hashlib.sha256(body.encode("utf-8")).hexdigest()
    header = ["format={0}".format(CACHE_FORMAT), "version={0}".format(CACHE_VERSION),
              "kind={0}".format(table.kind), "n_max={0}".format(table.n_max),
              "checksum={0}".format(checksum)]
    with open(path, "w", encoding="utf-8") as fout:
        for line in header:
            fout.write("# {0}\n".format(line))
        fout.write(body)
    logger.info("saved %s table (n_max=%d) to %s", table.kind, table.n_max, path)


def load_cache(path):
    header = {}
    body = []
    with open(path, "r", encoding="utf-8") as fin:
        for line in fin:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key] = value
            else:
                body.append(line)
    if header.get("format") != CACHE_FORMAT or header.get("version") != str(CACHE_VERSION):
        raise CacheVersionError("{0}: unsupported cache {1} version {2}".format(
            path, header.get("format"), header.get("version")))
    if hashlib.sha256("".join(body).encode("utf-8")).hexdigest() != header.get("checksum"):
        raise CacheChecksumError("{0}: checksum mismatch".format(path))
    kind = header["kind"]
    n_max = int(header["n_max"])
    if len(body) != n_max:
        raise CacheChecksumError("{0}: {1} rows for n_max={2}".format(path, len(body), n_max))
    descriptor = FormDescriptor.for_kind(kind)
    dtype = np.int64 if descriptor.integral else float
    values = np.zeros(n_max + 1, dtype=dtype)
    for line in body:
        n, value = line.split()
        values[int(n)] = int(value) if descriptor.integral else float(value)
    return CoefficientTable(descriptor, values)


def cache_dir(override=None):
    if override:
        return override
    return os.environ.get(CACHE_ENV, os.path.join(os.path.expanduser("~"), ".gl3v_cache"))


def cached_table(kind, N, directory=None):
    """Load the kind table from the cache directory, building it on a miss."""
    directory = cache_dir(directory)
    path = os.path.join(directory, "{0}_{1}.txt".format(kind, N))
    if os.path.exists(path):
        logger.debug("loading cached %s table from %s", kind, path)
        return load_cache(path)
    table = build_table(kind, N)
    os.makedirs(directory, exist_ok=True)
    save_cache(table, path)
    return table
