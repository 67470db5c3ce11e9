"""
Additively twisted sums S(T, alpha) = sum_{n <= T} a_n e(n alpha), their
smoothed versions, partial summation, the Parseval identity and the
Dirichlet-kernel convolution that turns smoothed sums into sharp ones.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from joblib import Parallel, delayed

from . import coefficients
from .errors import InsufficientTableError, KernelSingularityError
from .mellin import BumpSpec
from .reporting import write_csv

logger = logging.getLogger(__name__)

# alpha = hi + lo with hi on a 2^-SPLIT_BITS grid
SPLIT_BITS = 20
KERNEL_FLOOR = 1e-6
TAIL_TOL = 1e-12
SUM_FIELDS = ["T", "alpha", "re", "im", "abs"]


@dataclass
class SumResult:
    T: float
    alpha: object
    value: complex
    kind: str = "sharp"
    tail: float = 0.0


def reduced_phases(n, alpha):
    """n alpha mod 1 for an integer array n.

    Fraction alpha is reduced exactly; floats are split so that the bulk of
    n alpha is formed in integer arithmetic.
    """
    n = np.asarray(n, dtype=np.int64)
    if isinstance(alpha, (Fraction, int)):
        alpha = Fraction(alpha)
        p, q = alpha.numerator % alpha.denominator, alpha.denominator
        return ((n % q) * p % q) / float(q)
    alpha = float(alpha) - math.floor(float(alpha))
    scale = 1 << SPLIT_BITS
    hi = int(round(alpha * scale))
    lo = alpha - hi / scale
    coarse = ((n % scale) * hi % scale) / float(scale)
    return np.mod(coarse + n * lo, 1.0)


def twist(n, alpha):
    return np.exp(2j * np.pi * reduced_phases(n, alpha))


def sharp_sum(table, T, alpha):
    """sum_{n <= T} a_n e(n alpha)."""
    N = int(math.floor(T))
    if N < 1:
        return 0j
    table.require(N)
    n = np.arange(1, N + 1)
    return complex(np.sum(table.row(N) * twist(n, alpha)))


def smoothed_sum(table, T, alpha, phi, q=1, extent=None, tol=TAIL_TOL):
    """sum_{n != 0} a_{q,n} e(n alpha) phi(n/T), using a_{q,-n} = a_{q,n}.

    `phi` is a vectorised callable; `extent` bounds its effective support
    (taken from phi.extent when present). Without one the sum runs to the end
    of the table, and phi on the next 3 n_max integers must be negligible.
    """
    extent = getattr(phi, "extent", None) if extent is None else extent
    cutoff = table.n_max if extent is None else int(math.ceil(extent * T))
    n_cut = min(cutoff, table.n_max)
    n = np.arange(1, n_cut + 1)
    a = coefficients.bi_index_row(table, q, n_cut)
    x = n / float(T)
    value = complex(np.sum(a * (twist(n, alpha) * phi(x) + twist(-n, alpha) * phi(-x))))
    tail = 0.0
    if extent is None or cutoff > n_cut:
        last = 4 * n_cut if extent is None else min(cutoff, 4 * n_cut)
        beyond = np.arange(n_cut + 1, last + 1) / float(T)
        tail = float(np.max(np.abs(a)) * np.sum(np.abs(phi(beyond)) + np.abs(phi(-beyond))))
        if tail > tol * max(abs(value), 1.0):
            raise InsufficientTableError("table n_max={0} leaves a tail of {1:g} at T={2}".format(
                table.n_max, tail, T))
    return SumResult(T=T, alpha=alpha, value=value, kind="smoothed", tail=tail)


def partial_summation_transfer(a, b, K):
    """sum_{n<K} A_n (b_n - b_{n+1}) + A_K b_K with A_n = a_1 + ... + a_n."""
    if K < 1:
        raise ValueError("K must be >= 1")
    a = np.asarray(a)[:K]
    b = np.asarray(b)[:K]
    A = np.cumsum(a)
    return np.sum(A[:-1] * (b[:-1] - b[1:])) + A[-1] * b[-1]


@dataclass
class KernelSpec:
    g: object
    N: int

    def coefficients(self):
        n = np.arange(1, self.N + 1)
        return np.asarray(self.g(n / float(self.N)), dtype=complex)


def dirichlet_kernel(g, N, x):
    """D_{g,N}(x) = sum_{n <= N} e(n x) g(n/N)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    coef = KernelSpec(g, N).coefficients()
    n = np.arange(1, N + 1)
    return np.exp(2j * np.pi * np.outer(x, n)) @ coef


def kernel_l1_norm(g, N, oversample=16):
    """L1 norm of D_{g,N} over R/Z from oversample*N equispaced values."""
    M = oversample * N
    coef = np.zeros(M, dtype=complex)
    coef[1:N + 1] = KernelSpec(g, N).coefficients()
    values = M * np.fft.ifft(coef)
    return float(np.mean(np.abs(values)))


def smoothed_evaluator(table, T, weight, extent):
    """beta -> sum_{n != 0} a_n e(n beta) weight(n/T) on arrays of beta.

    The weight is cut off beyond extent*T; the cutoff is the degree of the
    resulting trigonometric polynomial.
    """
    cutoff = min(int(math.ceil(extent * T)), table.n_max)
    n = np.arange(1, cutoff + 1)
    a = table.row(cutoff).astype(float)
    x = n / float(T)
    plus = a * weight(x)
    minus = a * weight(-x)

    def evaluate(betas):
        betas = np.atleast_1d(np.asarray(betas, dtype=float))
        out = np.empty(betas.shape, dtype=complex)
        for i, beta in enumerate(betas):
            out[i] = np.sum(plus * twist(n, beta)) + np.sum(minus * twist(-n, beta))
        return out

    evaluate.degree = cutoff
    return evaluate


def sharpen_by_convolution(evaluator, phi0, N, alphas):
    """sum_{n <= N} a_n e(n alpha) from the smoothed sums weighted by phi0_hat(n/N).

    Convolves against D_{g,N} with g = 1/phi0_hat; the equispaced rule is
    exact for the trigonometric polynomials involved.
    """
    grid = np.arange(1, N + 1) / float(N)
    weights = phi0.fourier(grid)
    if np.min(np.abs(weights)) < KERNEL_FLOOR:
        raise KernelSingularityError("phi0_hat has |value| {0:g} on [0, 1]".format(np.min(np.abs(weights))))

    def g(x):
        return 1.0 / phi0.fourier(x)

    M = 2 * (N + evaluator.degree) + 1
    betas = np.arange(M) / float(M)
    values = evaluator(betas)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    kernel = dirichlet_kernel(g, N, (alphas[:, None] - betas[None, :]).ravel()).reshape(alphas.size, M)
    return kernel @ values / M


def parseval_residual(table, T):
    """|int_0^1 |S(T, alpha)|^2 d alpha - sum_{n <= T} a_n^2| at 2T+1 equispaced nodes."""
    T = int(T)
    table.require(T)
    M = 2 * T + 1
    coef = np.zeros(M, dtype=complex)
    coef[1:T + 1] = table.row(T)
    values = M * np.fft.ifft(coef)
    integral = float(np.mean(np.abs(values) ** 2))
    return abs(integral - float(np.sum(table.row(T).astype(float) ** 2)))


@dataclass
class ExponentFit:
    beta: float
    intercept: float
    T_grid: np.ndarray
    envelope: np.ndarray
    alpha_at_max: object
    residual: float
    alphas: list = field(default_factory=list)


def _block_maxima(row, alpha, T_grid):
    n = np.arange(1, row.size + 1)
    partial = np.abs(np.cumsum(row * twist(n, alpha)))
    return np.array([np.max(partial[T // 2:T]) for T in T_grid])


def exponent_fit(table, T_grid, alpha_set, n_jobs=1, refine=True):
    """Slope of log max_alpha |S(T, alpha)| over dyadic blocks (T/2, T] against log T."""
    T_grid = np.asarray(sorted(int(T) for T in T_grid))
    T_max = int(T_grid[-1])
    row = table.row(T_max).astype(float)
    alphas = list(alpha_set)
    if not alphas:
        raise ValueError("alpha set is empty")
    parallel = Parallel(n_jobs=n_jobs, verbose=0)
    maxima = parallel(delayed(_block_maxima)(row, alpha, T_grid) for alpha in alphas)
    if refine:
        best = alphas[int(np.argmax([m[-1] for m in maxima]))]
        step = 1.0 / (4.0 * T_max)
        extra = [float(best) + k * step for k in (-2, -1, 1, 2)]
        maxima.extend(parallel(delayed(_block_maxima)(row, alpha, T_grid) for alpha in extra))
        alphas.extend(extra)
    stacked = np.vstack(maxima)
    envelope = np.max(stacked, axis=0)
    alpha_at_max = alphas[int(np.argmax(stacked[:, -1]))]
    logT = np.log(T_grid)
    logE = np.log(envelope)
    beta, intercept = np.polyfit(logT, logE, 1)
    residual = float(np.sqrt(np.mean((logE - (beta * logT + intercept)) ** 2)))
    logger.info("exponent fit over %d alphas, T in [%d, %d]: beta=%.4f", len(alphas), T_grid[0], T_max, beta)
    return ExponentFit(beta=float(beta), intercept=float(intercept), T_grid=T_grid, envelope=envelope,
                       alpha_at_max=alpha_at_max, residual=residual, alphas=alphas)


def dyadic_grid(T_from, T_to):
    T_grid = []
    T = int(T_from)
    while T <= T_to:
        T_grid.append(T)
        T *= 2
    return T_grid


def adversarial_alphas(count_random=10, seed=0):
    """Badly approximable irrationals, small-denominator rationals and seeded random points."""
    rng = np.random.default_rng(seed)
    alphas = [(math.sqrt(5.0) - 1.0) / 2.0, math.sqrt(2.0) - 1.0, Fraction(1, 3), Fraction(0)]
    alphas.extend(float(a) for a in rng.random(count_random))
    return alphas


def gaussian_phi():
    return BumpSpec(parity=0, profile="gaussian")


def write_sums_csv(path, results):
    rows = [{"T": r.T, "alpha": float(r.alpha), "re": repr(r.value.real), "im": repr(r.value.imag),
             "abs": repr(abs(r.value))} for r in results]
    write_csv(path, "sums", SUM_FIELDS, rows)
