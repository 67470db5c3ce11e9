"""
Signed Mellin transforms, Fourier transforms, the test-function family
and the f -> F transform of the GL(3) Voronoi formula.

F is evaluated from

    4 pi i F(x) / (|x| sg(x)^eta)
        = int_{Re s = sigma} G_{d1+eta}(s-l1) G_{d2+eta}(s-l2) M_{d3+eta} phi(s-l3) |x|^-s ds

by the trapezoid rule on a truncated vertical line, with the node values
shared across every x.
"""
import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import special_fn
from .errors import ContourError, ConvergenceError, DivergenceError, DomainError, ParityError
from .special_fn import parity

logger = logging.getLogger(__name__)

DEFAULT_SIGMA = 0.75
DEFAULT_H = 400.0
DEFAULT_STEP = 0.05
QUAD_EPS = 1e-12
QUAD_LIMIT = 200
# Gaussian profiles are cut off where exp(-pi x^2) < 1e-60
GAUSS_EXTENT = 6.5
DEFORM_DEPTH = 0.5
MELLIN_FLOOR = 1e-8
SIGNED_FLOOR = 1e-8
CHUNK = 128
CHUNK_BYTES = 1 << 27
BUMP_NODES = 160
# outer-band share of the node mass accepted by adapted_line
TAIL_RTOL = 1e-13
MAX_HEIGHT = 51200.0
ROUNDOFF = 8 * np.finfo(float).eps
REGIME_RTOL = 1e-4


class EmbeddingParams(object):
    """Archimedean data (l1, l2, l3; d1, d2, d3) of a GL(3) form.

    The normalisation l1 + l2 + l3 = 0, d1 + d2 + d3 even is enforced. The
    ordering conditions on the real parts are only checked when
    `automorphic` is set, since synthetic test parameters violate them.
    """

    def __init__(self, lambdas, deltas, automorphic=False, label=None):
        self.lambdas = tuple(complex(l) for l in lambdas)
        self.deltas = tuple(parity(d) for d in deltas)
        self.label = label
        if len(self.lambdas) != 3 or len(self.deltas) != 3:
            raise DomainError("embedding parameters are triples")
        if abs(sum(self.lambdas)) > 1e-12:
            raise DomainError("lambdas must sum to 0, got {0}".format(sum(self.lambdas)))
        if sum(self.deltas) % 2:
            raise DomainError("deltas must have even sum, got {0}".format(self.deltas))
        if automorphic and not self.is_ordered():
            raise DomainError("lambdas {0} violate the ordering of real parts".format(self.lambdas))

    @classmethod
    def discrete_series(cls, k, t=0.0, split=(0, 1)):
        """(-2it, -(k-1)/2 + it, (k-1)/2 + it) with d1 = k and d2 + d3 = k mod 2."""
        if k < 2:
            raise DomainError("discrete series weight must be >= 2, got {0}".format(k))
        d2, d3 = (parity(d) for d in split)
        if (d2 + d3) % 2 != k % 2:
            raise DomainError("split {0} incompatible with k={1}".format(split, k))
        h = 0.5 * (k - 1)
        lambdas = (-2j * t, -h + 1j * t, h + 1j * t)
        return cls(lambdas, (k % 2, d2, d3), automorphic=True,
                   label="D{0} t={1:g} split={2}{3}".format(k, t, d2, d3))

    def is_ordered(self):
        r1, r2, r3 = (l.real for l in self.lambdas)
        return r1 <= r3 and r2 <= r3 and r1 < 0.5 and r2 < 0.5 and r3 >= 0

    def overlapping_poles(self):
        """True when two of the G-factor pole lattices meet."""
        l1, l2 = self.lambdas[0], self.lambdas[1]
        diff = l1 - l2
        return abs(diff.imag) < 1e-12 and abs(diff.real - round(diff.real)) < 1e-12

    def holomorphic_on_contour(self, eta, sigma):
        """No G-factor pole of the contour integrand on the line Re s = sigma."""
        for l, d in zip(self.lambdas[:2], self.deltas[:2]):
            w = sigma - l.real
            if w <= 0 and abs(w - round(w)) < 1e-12 and parity(round(w)) == parity(d + eta):
                return False
        return sigma >= 0.5

    def _key(self):
        return self.lambdas, self.deltas

    def __eq__(self, other):
        return isinstance(other, EmbeddingParams) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return "EmbeddingParams(lambdas={0}, deltas={1})".format(self.lambdas, self.deltas)


@lru_cache(maxsize=None)
def _bump_mass():
    value, _ = integrate.quad(lambda x: math.exp(-1.0 / (1.0 - x * x)), -1.0, 1.0,
                              epsabs=0.0, epsrel=1e-13, limit=QUAD_LIMIT)
    return value


@lru_cache(maxsize=64)
def _bump_polys(n):
    # b^(j) = Q_j(x) / (1 - x^2)^(2j) * exp(-1/(1-x^2))
    P = np.polynomial.Polynomial
    one_minus = P([1.0, 0.0, -1.0])
    x = P([0.0, 1.0])
    polys = [P([1.0])]
    for j in range(n):
        q = polys[-1]
        polys.append(q.deriv() * one_minus ** 2 + (4 * j * x * one_minus - 2 * x) * q)
    return polys


@lru_cache(maxsize=64)
def _gauss_polys(n):
    # (exp(-pi x^2))^(j) = H_j(x) exp(-pi x^2)
    P = np.polynomial.Polynomial
    polys = [P([1.0])]
    for _ in range(n):
        q = polys[-1]
        polys.append(q.deriv() - P([0.0, 2.0 * np.pi]) * q)
    return polys


@lru_cache(maxsize=256)
def _legendre(n):
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class BumpSpec:
    """phi0: a smooth profile of the given parity.

    profile "bump" is exp(-1/(1-x^2)) on (-1, 1), multiplied by x when odd;
    profile "gaussian" is exp(-pi x^2), likewise. Both are dilated by
    `scale` and normalised so that the even profile has phi0_hat(0) = 1.
    """
    parity: int = 0
    profile: str = "bump"
    scale: float = 1.0

    def __post_init__(self):
        if self.profile not in ("bump", "gaussian"):
            raise DomainError("unknown profile {0!r}".format(self.profile))
        if self.scale <= 0:
            raise DomainError("scale must be positive")

    @property
    def extent(self):
        half = 1.0 if self.profile == "bump" else GAUSS_EXTENT
        return half * self.scale

    @property
    def compact(self):
        return self.profile == "bump"

    def _mass(self):
        return _bump_mass() if self.profile == "bump" else 1.0

    def _base_derivative(self, u, n):
        u = np.asarray(u, dtype=float)
        if self.profile == "gaussian":
            return _gauss_polys(n)[n](u) * np.exp(-np.pi * u * u)
        flat = np.atleast_1d(u)
        out = np.zeros_like(flat)
        inside = np.abs(flat) < 1.0
        v = flat[inside]
        one_minus = 1.0 - v * v
        out[inside] = _bump_polys(n)[n](v) * np.exp(-2 * n * np.log(one_minus) - 1.0 / one_minus)
        return out.reshape(u.shape)

    def derivative(self, x, n=0):
        """phi0^(n)(x)."""
        u = np.asarray(x, dtype=float) / self.scale
        if self.parity == 0:
            base = self._base_derivative(u, n)
        else:
            base = u * self._base_derivative(u, n)
            if n:
                base = base + n * self._base_derivative(u, n - 1)
        return base / (self.scale ** (n + 1) * self._mass())

    def __call__(self, x):
        return self.derivative(x, 0)

    def _bump_hat(self, r):
        # deform [-1, 1] into the half-plane where e(-z r) decays
        nodes, weights = _legendre(BUMP_NODES + 8 * int(math.ceil(abs(r))))
        depth = DEFORM_DEPTH * np.sign(r)
        z = nodes - 1j * depth * (1.0 - nodes ** 2)
        dz = 1.0 + 2j * depth * nodes
        integrand = np.exp(-1.0 / (1.0 - z * z) - 2j * np.pi * z * r) * dz
        if self.parity:
            integrand = integrand * z
        return np.sum(weights * integrand)

    def fourier(self, r):
        """phi0_hat(r) = int phi0(x) e(-x r) dx."""
        scalar = np.ndim(r) == 0
        rho = np.atleast_1d(np.asarray(r, dtype=float)) * self.scale
        if self.profile == "gaussian":
            out = np.exp(-np.pi * rho * rho).astype(complex)
            if self.parity:
                out = -1j * rho * out
        else:
            out = np.array([self._bump_hat(v) if v >= 0 else np.conj(self._bump_hat(-v))
                            for v in rho]) / _bump_mass()
        return complex(out[0]) if scalar else out


class ParityFunction(object):
    """A function on R of definite parity, with support hints.

    `extent` bounds the support (or the range beyond which the function is
    negligible); `order_at_zero` is the vanishing order at the origin.
    """

    def __init__(self, func, parity_bit, extent, order_at_zero=0):
        self.func = func
        self.parity = parity(parity_bit)
        self.extent = float(extent)
        self.order_at_zero = int(order_at_zero)

    def __call__(self, x):
        return self.func(x)


@dataclass(frozen=True)
class TestFunctionFamily:
    """phi, phi1 = phi(Y .), and f = |x|^l3 sg(x)^d3 phi_hat for one (Y, omega, eta)."""
    Y: float
    omega: int
    eta: int
    delta3: int
    lambda3: complex
    phi0: BumpSpec = field(default_factory=BumpSpec)
    amplitude: complex = 1.0

    @property
    def phi_parity(self):
        return parity(self.delta3 + self.eta)

    @property
    def phi_extent(self):
        return self.Y + self.phi0.extent

    @property
    def vanishes_near_zero(self):
        return self.phi0.compact and self.Y > self.phi0.extent

    @property
    def rescaled(self):
        return self.Y >= 1.0

    def _carrier(self, x):
        if self.omega:
            return -2j * self.amplitude * np.sin(2 * np.pi * self.Y * x)
        return 2.0 * self.amplitude * np.cos(2 * np.pi * self.Y * x)

    def phi_derivative(self, x, n=0):
        x = np.asarray(x, dtype=float)
        sign = -1.0 if self.omega else 1.0
        m = n + self.delta3
        value = self.phi0.derivative(x - self.Y, m) + sign * self.phi0.derivative(x + self.Y, m)
        if self.delta3:
            return self.amplitude * value / (2j * np.pi)
        return self.amplitude * value

    def phi(self, x):
        return self.phi_derivative(x, 0)

    def phi1(self, x):
        return self.phi(self.Y * np.asarray(x, dtype=float))

    def phi_hat(self, r):
        r = np.asarray(r, dtype=float)
        value = self._carrier(r) * self.phi0.fourier(r)
        return r * value if self.delta3 else value

    def f(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            power = np.where(ax > 0, ax.astype(complex) ** (self.lambda3 + self.delta3), 0.0)
        return power * self._carrier(x) * self.phi0.fourier(x)

    def scaled(self, kappa):
        """kappa * f; F and every Mellin transform scale with it."""
        return replace(self, amplitude=self.amplitude * complex(kappa))


def build_test_function(Y, omega, eta, params, profile="bump", scale=1.0):
    if Y < 0:
        raise DomainError("Y must be >= 0, got {0}".format(Y))
    omega, eta = parity(omega), parity(eta)
    phi0 = BumpSpec(parity=parity(eta + omega), profile=profile, scale=scale)
    return TestFunctionFamily(Y=float(Y), omega=omega, eta=eta, delta3=params.deltas[2],
                              lambda3=params.lambdas[2], phi0=phi0)


@dataclass(frozen=True)
class VerticalLineSpec:
    sigma: float = DEFAULT_SIGMA
    H: float = DEFAULT_H
    h: float = DEFAULT_STEP

    def __post_init__(self):
        if self.h <= 0 or self.H <= 0:
            raise ContourError("contour height and step must be positive")
        ratio = self.H / self.h
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ContourError("H/h must be an integer, got {0}".format(ratio))

    @property
    def count(self):
        return int(round(self.H / self.h))

    def heights(self):
        return self.h * np.arange(-self.count, self.count + 1)

    def weights(self):
        w = np.full(2 * self.count + 1, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def doubled(self):
        return VerticalLineSpec(sigma=self.sigma, H=2 * self.H, h=self.h)


def signed_mellin(g, s, eta=None):
    """M_eta g(s) = int g(x) |x|^(s-1) sg(x)^eta dx for a ParityFunction g.

    The half-line integral runs in u = log x down to SIGNED_FLOOR * extent;
    below that g(x) ~ c x^k is integrated in closed form.
    """
    eta = g.parity if eta is None else parity(eta)
    if eta != g.parity:
        raise ParityError("function of parity {0} has vanishing M_{1}".format(g.parity, eta))
    s = complex(s)
    k = g.order_at_zero
    if s.real + k <= 0.0:
        raise DivergenceError("M g(s) diverges at Re s = {0} (order at zero {1})".format(s.real, k))
    lower = SIGNED_FLOOR * g.extent

    def part(u, which):
        value = complex(np.asarray(g(math.exp(u))).item()) * cmath.exp(u * s)
        return value.real if which == 0 else value.imag

    total = []
    for which in (0, 1):
        value, _ = integrate.quad(part, math.log(lower), math.log(g.extent), args=(which,),
                                  epsabs=QUAD_EPS, epsrel=QUAD_EPS, limit=QUAD_LIMIT)
        total.append(value)
    lead = complex(np.asarray(g(lower)).item()) / lower ** k
    tail = lead * lower ** (s + k) / (s + k)
    return 2.0 * (complex(total[0], total[1]) + tail)


def fourier_transform(g, r):
    """g_hat(r) = int g(x) e(-x r) dx, by oscillatory quadrature on [0, extent]."""
    r = float(r)
    omega = 2.0 * np.pi * r
    if g.parity == 0:
        weight, factor = "cos", 2.0
    else:
        weight, factor = "sin", -2.0j

    def part(x, which):
        value = complex(np.asarray(g(x)).item())
        return value.real if which == 0 else value.imag

    total = []
    for which in (0, 1):
        if r == 0.0:
            if g.parity:
                total.append(0.0)
                continue
            value, _ = integrate.quad(part, 0.0, g.extent, args=(which,),
                                      epsabs=QUAD_EPS, epsrel=QUAD_EPS, limit=QUAD_LIMIT)
        else:
            value, _ = integrate.quad(part, 0.0, g.extent, args=(which,), weight=weight,
                                      wvar=abs(omega), epsabs=QUAD_EPS, epsrel=QUAD_EPS,
                                      limit=QUAD_LIMIT)
            if weight == "sin" and omega < 0:
                value = -value
        total.append(value)
    return factor * complex(total[0], total[1])


def hat(g, extent=None):
    """g_hat as a ParityFunction, evaluated pointwise by fourier_transform."""
    return ParityFunction(lambda r: fourier_transform(g, r), g.parity,
                          g.extent if extent is None else extent, order_at_zero=g.parity)


def mellin_fourier_residual(g, s, hat_extent=None):
    """|M_eta g_hat(s) - (-1)^eta G_eta(s) M_eta g(1-s)|."""
    eta = g.parity
    lhs = signed_mellin(hat(g, hat_extent), s, eta)
    rhs = (-1.0) ** eta * special_fn.g_delta(eta, s) * signed_mellin(g, 1.0 - complex(s), eta)
    return abs(lhs - rhs)


def _mellin_window(fam, min_re, rescaled):
    # (dilation, K, lower, upper) for the u = log x integral
    dilation = fam.Y if rescaled else 1.0
    upper = fam.phi_extent / dilation
    if fam.vanishes_near_zero:
        return dilation, 0, (fam.Y - fam.phi0.extent) / dilation, upper
    return dilation, max(0, int(math.ceil(1.0 - min_re))), MELLIN_FLOOR * upper, upper


def _integrated_by_parts(fam, w, K, lower, dilation, integral):
    # adds the closed-form piece on [0, lower] and divides out (w)_K
    if not fam.vanishes_near_zero:
        at_zero = fam.phi_derivative(np.array([0.0]), K)[0] * dilation ** K
        integral = integral + at_zero * lower ** (w + K) / (w + K)
    if K:
        poch = np.ones_like(w)
        for j in range(K):
            poch = poch * (w + j)
        integral = (-1.0) ** K * integral / poch
    return 2.0 * integral


def mellin_phi_on_line(fam, w, rescaled=False):
    """M_{d3+eta} phi(w) (or of phi1) for an array of w, by K-fold integration by parts.

    (-1)^K / prod_{j<K} (w+j) * 2 int_0^b phi^(K)(x) x^(w+K-1) dx continues the
    transform to Re w > -K; the integral runs in u = log x.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    dilation, K, lower, upper = _mellin_window(fam, np.min(w.real), rescaled)
    span = math.log(upper) - math.log(lower)
    t_max = float(np.max(np.abs(w.imag)))
    du = min(np.pi / (4.0 * (t_max + 1.0)), span / 2000.0)
    count = int(math.ceil(span / du))
    u = np.linspace(math.log(lower), math.log(upper), count + 1)
    x = np.exp(u)
    quad_w = np.full(u.shape, span / count)
    quad_w[0] *= 0.5
    quad_w[-1] *= 0.5
    deriv = fam.phi_derivative(dilation * x, K) * dilation ** K
    out = np.empty(w.shape, dtype=complex)
    for start in range(0, w.size, CHUNK):
        ws = w[start:start + CHUNK]
        out[start:start + CHUNK] = np.exp(np.outer(ws + K, u)) @ (quad_w * deriv)
    return _integrated_by_parts(fam, w, K, lower, dilation, out)


def mellin_phi_on_progression(fam, a, b, h, count, rescaled=False):
    """mellin_phi_on_line at w_k = a + i(b + k h), k = -count .. count, by one FFT.

    The u-grid step is 2 pi / (h M) so that e^{i k h u_j} are M-th roots of
    unity; falls back to mellin_phi_on_line when the window is wider than 2 pi / h.
    """
    k = np.arange(-count, count + 1)
    w = a + 1j * (b + h * k)
    dilation, K, lower, upper = _mellin_window(fam, a, rescaled)
    span = math.log(upper) - math.log(lower)
    t_max = abs(b) + h * count
    du = min(np.pi / (4.0 * (t_max + 1.0)), span / 2000.0)
    M = 1 << int(math.ceil(math.log2(max(2.0 * np.pi / (h * du), 2 * count + 2))))
    du = 2.0 * np.pi / (h * M)
    J = int(math.ceil(span / du)) + 1
    if J > M:
        return mellin_phi_on_line(fam, w, rescaled)
    u = math.log(lower) + du * np.arange(J)
    quad_w = np.full(J, du)
    quad_w[0] *= 0.5
    deriv = fam.phi_derivative(dilation * np.exp(u), K) * dilation ** K
    samples = np.zeros(M, dtype=complex)
    samples[:J] = quad_w * deriv * np.exp((a + K + 1j * b) * u)
    spectrum = M * np.fft.ifft(samples)
    out = np.exp(1j * h * k * u[0]) * spectrum[k % M]
    return _integrated_by_parts(fam, w, K, lower, dilation, out)


@dataclass
class FValue:
    value: complex
    error: float
    accurate: bool = True


class FTransform(object):
    """F on an x-grid for one (params, family, contour); node values are shared.

    Values are memoised per x; the memo is filled by one writer and read
    afterwards.
    """

    def __init__(self, params, fam, line=None):
        line = VerticalLineSpec() if line is None else line
        if line.sigma < 0.5:
            raise ContourError("contour abscissa {0} below 1/2".format(line.sigma))
        self.params = params
        self.fam = fam
        self.line = line
        self.rescaled = fam.rescaled
        t = line.heights()
        self.s = line.sigma + 1j * t
        eta = fam.eta
        l1, l2, l3 = params.lambdas
        d1, d2, _ = params.deltas
        gammas = special_fn.g_delta(d1 + eta, self.s - l1) * special_fn.g_delta(d2 + eta, self.s - l2)
        l3 = complex(l3)
        self.W = gammas * mellin_phi_on_progression(fam, line.sigma - l3.real, -l3.imag, line.h, line.count,
                                                    rescaled=self.rescaled)
        self.qw = line.weights()
        band = np.abs(t) > 0.9 * line.H
        self._tail_mass = float(np.sum(self.qw[band] * np.abs(self.W[band])))
        self._mass = float(np.sum(self.qw * np.abs(self.W)))
        self._chunk = max(1, CHUNK_BYTES // (16 * t.size))
        self._memo = {}
        logger.debug("F transform on sigma=%g H=%g h=%g: %d nodes, tail mass %g of %g",
                     line.sigma, line.H, line.h, t.size, self._tail_mass, self._mass)

    @property
    def tail_fraction(self):
        return self._tail_mass / self._mass if self._mass else 0.0

    def _prefactor(self, x):
        ax = np.abs(x)
        sg = np.where(x < 0, (-1.0) ** self.fam.eta, 1.0)
        if self.rescaled:
            return ax * sg * self.fam.Y ** (-self.params.lambdas[2]) / (4 * np.pi), np.log(ax / self.fam.Y)
        return ax * sg / (4 * np.pi), np.log(ax)

    def _compute(self, x):
        pre, logx = self._prefactor(x)
        out = np.empty(x.shape, dtype=complex)
        for start in range(0, x.size, self._chunk):
            kernel = np.exp(-np.outer(logx[start:start + self._chunk], self.s))
            out[start:start + self._chunk] = kernel @ (self.qw * self.W)
        return pre * out

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x == 0):
            raise DomainError("F is evaluated at x != 0")
        missing = np.array(sorted({v for v in x.tolist() if v not in self._memo}))
        if missing.size:
            for key, value in zip(missing.tolist(), self._compute(missing)):
                self._memo.setdefault(key, value)
        out = np.array([self._memo[v] for v in x.tolist()])
        return complex(out[0]) if scalar else out

    def error_estimate(self, x):
        """Truncation of the line plus rounding in the node sum."""
        pre, logx = self._prefactor(np.atleast_1d(np.asarray(x, dtype=float)))
        return np.abs(pre) * np.exp(-self.line.sigma * logx) * (self._tail_mass + ROUNDOFF * self._mass)


@lru_cache(maxsize=16)
def f_transform(params, fam, line=None):
    return FTransform(params, fam, line)


def adapted_line(params, fam, line=None, rtol=TAIL_RTOL, max_height=MAX_HEIGHT):
    """`line` with its height doubled until the outer tenth of the contour
    carries at most rtol of the node mass."""
    line = VerticalLineSpec() if line is None else line
    while f_transform(params, fam, line).tail_fraction > rtol:
        if 2 * line.H > max_height:
            logger.warning("contour height capped at %g: tail fraction %.2e above %.2e",
                           line.H, f_transform(params, fam, line).tail_fraction, rtol)
            break
        line = line.doubled()
    return line


def voronoi_transform_F(params, fam, x, line=None, tol=None):
    """F(x) with its truncation-error estimate."""
    transform = f_transform(params, fam, line)
    value = transform(float(x))
    error = float(transform.error_estimate(float(x))[0])
    accurate = tol is None or error <= tol
    if not accurate:
        logger.warning("F(%g): truncation estimate %g above tolerance %g", x, error, tol)
    return FValue(value=value, error=error, accurate=accurate)


def _fourier_parity(h, p, r):
    # 2 int_0^inf h cos, or -2i int_0^inf h sin, as QAWF on [0, inf)
    weight = "cos" if p == 0 else "sin"
    parts = []
    for which in (0, 1):
        value, _ = integrate.quad(lambda y: complex(h(y)).real if which == 0 else complex(h(y)).imag,
                                  0.0, np.inf, weight=weight, wvar=2 * np.pi * abs(r),
                                  epsabs=1e-11, limlst=100, limit=QUAD_LIMIT)
        parts.append(value)
    value = complex(parts[0], parts[1])
    if p == 0:
        return 2.0 * value
    return -2j * value * np.sign(r)


def _signed_power(y, d, l):
    if y == 0:
        # integrable at 0 for Re l < 1
        return 1.0 if (l == 0 and d == 0) else 0.0
    return (-1.0 if (d and y < 0) else 1.0) * abs(y) ** (-l)


def direct_F_oracle(params, fam, x):
    """F(x) from the iterated integral over x3, then x2, then x1.

    The x3 integral is phi(-1/A) in closed form; the other two are
    oscillatory half-line quadratures.
    """
    l1, l2, l3 = params.lambdas
    d1, d2, d3 = params.deltas
    if not (l1.real > l2.real > l3.real):
        raise ConvergenceError("repeated integral needs Re l1 > Re l2 > Re l3, got {0}".format(params.lambdas))
    if x == 0:
        raise DomainError("F is evaluated at x != 0")
    eta = fam.eta

    def inner3(a):
        if a == 0:
            return 0.0
        sg = -1.0 if (d3 and a < 0) else 1.0
        return sg * abs(a) ** (l3 - 1.0) * complex(np.asarray(fam.phi(np.array([-1.0 / a])))[0])

    def level(g, d, l):
        p = parity(eta + d)

        def transformed(a):
            if a == 0:
                return 0.0
            sg = -1.0 if (d and a < 0) else 1.0
            r = 1.0 / a
            return sg * abs(a) ** (l - 1.0) * _fourier_parity(lambda y: g(y) * _signed_power(y, d, l), p, r)
        return transformed

    inner2 = lru_cache(maxsize=None)(level(inner3, d2, l2))
    outer = level(inner2, d1, l1)
    return complex(outer(1.0 / x))


@dataclass
class RegimeReport:
    regime: str
    x: float
    Y: float
    measured: float
    exponent: float
    envelope: float
    error: float = 0.0
    accurate: bool = True
    overlapping_poles: bool = False

    @property
    def ratio(self):
        return self.measured / self.envelope if self.envelope else np.inf


def regime_envelope(fam, x, lambda3, N=4):
    """(regime, x-exponent, envelope) for the bound that applies at (Y, x)."""
    Y = fam.Y
    ax = abs(x)
    re3 = complex(lambda3).real
    if Y <= 1.0:
        return "small-Y", -float(N), ax ** (-N)
    if ax <= Y:
        return "small-x", 0.5, ax ** 0.5 * Y ** (-0.5 - re3)
    if ax <= Y ** 3:
        exponent = 0.75 + 0.5 * re3
        return "medium-x", exponent, Y ** (-re3) * (ax / Y) ** exponent
    return "large-x", -float(N), Y ** 1.5 * (ax / Y ** 3) ** (-N)


def regime_report(params, fam, x, N=4, line=None, rtol=REGIME_RTOL):
    """|F(x)| against the envelope of its regime, on a contour raised by adapted_line.

    `accurate` is False when the error estimate exceeds rtol |F(x)|.
    """
    regime, exponent, envelope = regime_envelope(fam, x, params.lambdas[2], N)
    transform = f_transform(params, fam, adapted_line(params, fam, line))
    measured = abs(transform(float(x)))
    error = float(transform.error_estimate(float(x))[0])
    accurate = error <= rtol * measured
    if not accurate:
        logger.warning("F(%g) at Y=%g: error estimate %.2e against |F| = %.2e", x, fam.Y, error, measured)
    overlap = params.overlapping_poles()
    if overlap:
        logger.info("pole lattices of the first two G-factors overlap for %s", params)
    return RegimeReport(regime=regime, x=float(x), Y=fam.Y, measured=measured, exponent=exponent,
                        envelope=envelope, error=error, accurate=accurate, overlapping_poles=overlap)


def decay_slope(xs, values):
    """Least-squares slope of log|F| against log|x|."""
    xs = np.abs(np.asarray(xs, dtype=float))
    mags = np.abs(np.asarray(values))
    slope, _ = np.polyfit(np.log(xs), np.log(mags), 1)
    return float(slope)
