"""
Complex log-gamma and the gamma-type factors G_delta.

G_delta(s) = (2 pi)^-s Gamma(s) [e(s/4) + (-1)^delta e(-s/4)], with
e(z) = exp(2 pi i z) on principal exponentials throughout.

All functions accept scalars or numpy arrays of complex arguments and
return the same shape.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import PoleError

logger = logging.getLogger(__name__)

POLE_EPS = 1e-8
LOG_2PI = np.log(2.0 * np.pi)
# distance below which a removable singularity of G is evaluated by reciprocity
REMOVABLE_EPS = 1e-6
FIT_HEIGHT = 256.0
FIT_SIGMA = 1.0


def parity(value):
    """Class of an integer in Z/2Z, as 0 or 1."""
    return int(value) & 1


def _as_complex(s):
    return np.asarray(s, dtype=complex)


def _unwrap(arr, scalar):
    return complex(arr) if scalar else arr


def _nonpositive_integer_distance(s):
    n = np.round(s.real)
    dist = np.abs(s - n)
    return n, np.where(n <= 0, dist, np.inf)


def log_gamma(s, pole_eps=POLE_EPS):
    """Principal branch of log Gamma(s).

    Raises PoleError within `pole_eps` of a non-positive integer.
    """
    scalar = np.ndim(s) == 0
    s = _as_complex(s)
    _, dist = _nonpositive_integer_distance(s)
    if np.any(dist < pole_eps):
        raise PoleError("log_gamma: argument at a pole of Gamma: {0}".format(s[dist < pole_eps].ravel()[0]))
    return _unwrap(special.loggamma(s), scalar)


def _g_regular(delta, s):
    # factor out the dominant exponential; the other one is exp(-pi |Im s|) times it
    upper = s.imag >= 0
    sign = -1.0 if delta else 1.0
    log_dom = np.where(upper, -0.5j * np.pi * s + 1j * np.pi * delta, 0.5j * np.pi * s)
    ratio = np.where(upper, sign * np.exp(1j * np.pi * s), sign * np.exp(-1j * np.pi * s))
    return np.exp(special.loggamma(s) - s * LOG_2PI + log_dom) * (1.0 + ratio)


def g_delta(delta, s, pole_eps=POLE_EPS):
    """G_delta(s), exponential-pair form.

    Poles on (2Z + delta) within Z_{<=0} raise PoleError. The removable
    singularities at the other non-positive integers are evaluated through
    G(s) G(1-s) = (-1)^delta.
    """
    delta = parity(delta)
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(_as_complex(s))
    n, dist = _nonpositive_integer_distance(s)
    poles = (dist < pole_eps) & (np.mod(n, 2) == delta)
    if np.any(poles):
        raise PoleError("G_{0} has a pole at {1}".format(delta, s[poles][0]))
    removable = dist < REMOVABLE_EPS
    out = np.empty_like(s)
    regular = ~removable
    if np.any(regular):
        out[regular] = _g_regular(delta, s[regular])
    if np.any(removable):
        out[removable] = (-1.0) ** delta / _g_regular(delta, 1.0 - s[removable])
    if scalar:
        return complex(out[0])
    return out.reshape(np.shape(s))


def g_delta_trig(delta, s):
    """G_delta(s) in the cos/sin form; only for moderate |Im s|."""
    delta = parity(delta)
    s = _as_complex(s)
    pre = 2.0 * np.exp(special.loggamma(s) - s * LOG_2PI)
    if delta == 0:
        return pre * np.cos(np.pi * s / 2.0)
    return 1j * pre * np.sin(np.pi * s / 2.0)


def g_stirling_ratio(delta, sigma, t):
    """|G_delta(sigma + i t)| / (|t| / 2 pi)^(sigma - 1/2); tends to 1."""
    if abs(t) < 1:
        raise ValueError("g_stirling_ratio needs |t| >= 1, got {0}".format(t))
    value = abs(g_delta(delta, complex(sigma, t)))
    return value / (abs(t) / (2.0 * np.pi)) ** (sigma - 0.5)


def gamma_ratio_modulus(s, a, b):
    """|Gamma(s+a) / Gamma(s+b)| / |s|^Re(a-b)."""
    s = _as_complex(s)
    log_ratio = log_gamma(s + a) - log_gamma(s + b)
    return np.abs(np.exp(log_ratio)) / np.abs(s) ** np.real(a - b)


def gamma_multiplication_residual(n, s):
    """Relative residual of prod_j Gamma(s + j/n) = (2pi)^((n-1)/2) n^(1/2-ns) Gamma(ns)."""
    if n < 2:
        raise ValueError("multiplication formula needs n >= 2")
    s = complex(s)
    lhs = sum(log_gamma(s + j / n) for j in range(n))
    rhs = 0.5 * (n - 1) * LOG_2PI + (0.5 - n * s) * np.log(n) + log_gamma(n * s)
    return abs(np.exp(lhs - rhs) - 1.0)


def discrete_series_ratio(k, t, s):
    """Closed form of G_{d2}(s - l2) G_{d3}(s - l3) for l2 = -(k-1)/2 + it,
    l3 = (k-1)/2 + it and d2 + d3 = k mod 2."""
    s = _as_complex(s)
    h = 0.5 * (k - 1)
    log_ratio = special.loggamma(s + h - 1j * t) - special.loggamma(1.0 - s + h + 1j * t)
    return (1j ** k) * np.exp((1.0 - 2.0 * s + 2j * t) * LOG_2PI + log_ratio)


@dataclass
class AsymptoticExpansion:
    """sum_gamma sum_{j<M} C[gamma, j] n^(-n s) G_gamma(n s - n mean + (1-n)/2 - j)."""
    n: int
    mean: complex
    constants: np.ndarray  # shape (2, order)
    mus: tuple = field(default=())
    epsilons: tuple = field(default=())

    @property
    def order(self):
        return self.constants.shape[1]

    def argument(self, s, j=0):
        return self.n * s - self.n * self.mean + 0.5 * (1 - self.n) - j

    def __call__(self, s):
        s = _as_complex(s)
        scale = np.exp(-self.n * s * np.log(self.n))
        total = np.zeros_like(s)
        for j in range(self.order):
            w = self.argument(s, j)
            total = total + self.constants[0, j] * g_delta(0, w) + self.constants[1, j] * g_delta(1, w)
        return scale * total

    def exact(self, s):
        s = _as_complex(s)
        value = np.ones_like(s)
        for mu, eps in zip(self.mus, self.epsilons):
            value = value * g_delta(eps, s - mu)
        return value

    def relative_error(self, s):
        approx = self(s)
        return np.abs(self.exact(s) - approx) / np.abs(approx)


def _log_branch(n, mean, j, s, side):
    # log of n^(-ns) (2pi)^-w Gamma(w) e(-/+ w/4) for the half-plane `side`
    w = n * s - n * mean + 0.5 * (1 - n) - j
    phase = -0.5j * np.pi * w if side > 0 else 0.5j * np.pi * w
    return -n * s * np.log(n) - w * LOG_2PI + special.loggamma(w) + phase


def _fit_side(n, mean, mus, epsilons, order, heights, side):
    s = FIT_SIGMA + 1j * side * heights
    exact = np.ones_like(s)
    for mu, eps in zip(mus, epsilons):
        exact = exact * g_delta(eps, s - mu)
    log_b0 = _log_branch(n, mean, 0, s, side)
    columns = np.stack([np.exp(_log_branch(n, mean, j, s, side) - log_b0) for j in range(order)], axis=1)
    norms = np.linalg.norm(columns, axis=0)
    sol, _, _, _ = np.linalg.lstsq(columns / norms, exact / np.exp(log_b0), rcond=None)
    return sol / norms


def asymptotic_product(mus, epsilons, order, heights=None):
    """Asymptotic expansion of prod_j G_{eps_j}(s - mu_j).

    The constants are found by matching the e(-ns/4) component in the upper
    half-plane and the e(ns/4) component in the lower one at large heights.
    """
    if order < 1:
        raise ValueError("expansion order must be >= 1")
    mus = tuple(complex(m) for m in mus)
    epsilons = tuple(parity(e) for e in epsilons)
    n = len(mus)
    mean = sum(mus) / n
    if heights is None:
        heights = FIT_HEIGHT * 2.0 ** np.arange(max(2, order))
    heights = np.asarray(heights, dtype=float)
    upper = _fit_side(n, mean, mus, epsilons, order, heights, +1)  # C0 - C1
    lower = _fit_side(n, mean, mus, epsilons, order, heights, -1)  # C0 + C1
    constants = np.vstack([0.5 * (lower + upper), 0.5 * (lower - upper)])
    logger.debug("asymptotic constants for mus=%s eps=%s: %s", mus, epsilons, constants)
    return AsymptoticExpansion(n=n, mean=mean, constants=constants, mus=mus, epsilons=epsilons)


def asymptotic_pair(mu1, mu2, eps1, eps2, order=1):
    return asymptotic_product((mu1, mu2), (eps1, eps2), order)
