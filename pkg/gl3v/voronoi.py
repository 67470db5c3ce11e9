"""
Both sides of the GL(3) Voronoi summation formula

    sum_{n != 0} a_{q,n} e(-na/c) f(n/T)
        = sum_{d | cq} |c/d| sum_{n != 0} a_{n,d} / |n| S(q abar, n; qc/d) F(n d^2 T / (c^3 q))

for a concrete instance, the identity residual, the embedding menu used to
pin down the archimedean parameters of a table, and the growth of the
right-hand side along continued-fraction approximants.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from joblib import Parallel, delayed

from . import coefficients, mellin, rational
from .errors import DomainError, InsufficientTableError, TruncationBudgetError
from .mellin import EmbeddingParams, VerticalLineSpec, build_test_function
from .reporting import write_csv, write_report
from .twisted_sums import twist

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-3
QUIET_BLOCKS = 3
QUIET_FRACTION = 1e-2
FLOOR_FACTOR = 1e-12
MENU_WEIGHTS = (21, 23, 25)
DECAYING_REGIMES = ("small-Y", "large-x")
# longest table required_rhs_size will ask for
SIZE_CAP = 1 << 24
SIZE_SAMPLES = 8
DIVISOR_FIELDS = ["d", "modulus", "X", "n_cutoff", "partial_re", "partial_im", "tail_estimate",
                  "quadrature_error", "weil_ok"]


@dataclass
class VoronoiInstance:
    """One instance (q, a/c, T, f) of the summation formula; `line` is raised by adapted_line."""
    table: object
    q: int
    a: int
    c: int
    T: float
    fam: object
    line: VerticalLineSpec = None
    params: EmbeddingParams = None

    def __post_init__(self):
        if self.c == 0:
            raise DomainError("c must be nonzero")
        if self.q < 1:
            raise DomainError("q must be positive")
        if math.gcd(self.a, self.c) != 1:
            raise DomainError("(a, c) = ({0}, {1}) not coprime".format(self.a, self.c))
        if self.c < 0:
            self.a, self.c = -self.a, -self.c
        if self.params is None:
            self.params = self.table.descriptor.embedding
        self.abar = rational.mod_inverse(self.a, self.c)
        self.line = mellin.adapted_line(self.params, self.fam, self.line)

    @property
    def floor(self):
        return FLOOR_FACTOR * self.T * float(np.max(np.abs(self.table.row())))


@dataclass
class DivisorTerm:
    d: int
    modulus: int
    X: float
    n_cutoff: int
    partial: complex
    tail_estimate: float
    quadrature_error: float
    weil_ok: bool


@dataclass
class IdentityReport:
    lhs: complex
    rhs: complex
    residual: float
    divisors: list
    lhs_tail: float
    rhs_tail: float
    quadrature_error: float
    tol: float = DEFAULT_TOL
    excluded: bool = False

    @property
    def passed(self):
        return self.excluded or self.residual <= self.tol

    @property
    def budget(self):
        return (self.lhs_tail + self.rhs_tail + self.quadrature_error) / max(abs(self.lhs) + abs(self.rhs), 1e-300)


def _dyadic_sum(block_terms, n_limit, tol, on_exhausted, n_min=1):
    """Sum block_terms(lo, hi) over [1,2), [2,4), ... until QUIET_BLOCKS blocks in a
    row past n_min each carry at most QUIET_FRACTION * tol of the largest block."""
    total = 0j
    peak = 0.0
    quiet = 0
    masses = []
    lo = 1
    while quiet < QUIET_BLOCKS:
        hi = 2 * lo
        if hi - 1 > n_limit:
            raise on_exhausted("dyadic truncation needs n < {0}, table stops at {1}".format(hi, n_limit))
        block = block_terms(lo, hi)
        mass = float(np.sum(np.abs(block)))
        total += complex(np.sum(block))
        peak = max(peak, mass)
        quiet = quiet + 1 if hi > n_min and mass <= QUIET_FRACTION * tol * peak else 0
        masses.append(mass)
        lo = hi
    return total, float(sum(masses[-QUIET_BLOCKS:])), lo - 1


def lhs_sum(inst, tol=DEFAULT_TOL):
    """(sum_{n != 0} a_{q,n} e(-na/c) f(n/T), tail estimate)."""
    n_limit = inst.table.n_max
    a_row = coefficients.bi_index_row(inst.table, inst.q, n_limit)
    phase = Fraction(-inst.a, inst.c)

    def block(lo, hi):
        n = np.arange(lo, hi)
        x = n / float(inst.T)
        return a_row[lo - 1:hi - 1] * (twist(n, phase) * inst.fam.f(x) + twist(-n, phase) * inst.fam.f(-x))

    n_min = int(math.ceil(inst.T * max(1.0, inst.fam.Y)))
    value, tail, cutoff = _dyadic_sum(block, n_limit, tol, InsufficientTableError, n_min)
    logger.debug("lhs for (a,c,q,T)=(%d,%d,%d,%g): %s, cutoff %d", inst.a, inst.c, inst.q, inst.T, value, cutoff)
    return value, tail


def _certified_tail(inst, x_end, last_mass):
    """Bound on the blocks beyond x_end from the regime envelope of F."""
    regime, exponent, _ = mellin.regime_envelope(inst.fam, x_end, inst.params.lambdas[2])
    if regime not in DECAYING_REGIMES:
        raise TruncationBudgetError("truncation at x={0:g} lies in the {1} regime of F (Y={2:g})".format(
            x_end, regime, inst.fam.Y))
    ratio = 2.0 ** exponent
    return last_mass * ratio / (1.0 - ratio)


def _divisor_branch(inst, transform, d, tol):
    c, q = inst.c, inst.q
    modulus = q * c // d
    n_limit = inst.table.n_max
    a_row = coefficients.bi_index_row(inst.table, d, n_limit)
    kloost = rational.kloosterman_residues(q * inst.abar, modulus)
    scale = d * d * inst.T / float(c ** 3 * q)
    sign = (-1.0) ** inst.fam.eta
    weil = all(abs(kloost[r]) <= rational.weil_bound(q * inst.abar, r, modulus) + 1e-9
               for r in range(modulus))
    quad_error = [0.0]
    masses = []

    def block(lo, hi):
        n = np.arange(lo, hi)
        x = n * scale
        F = transform(x)
        quad_error[0] += float(np.sum(np.abs(a_row[lo - 1:hi - 1] / n) * transform.error_estimate(x)))
        S = kloost[n % modulus] + sign * kloost[(-n) % modulus]
        terms = a_row[lo - 1:hi - 1] / n * S * F
        masses.append(float(np.sum(np.abs(terms))))
        return terms

    n_min = int(math.ceil(1.0 / scale))
    partial, tail, cutoff = _dyadic_sum(block, n_limit, tol, TruncationBudgetError, n_min)
    tail += _certified_tail(inst, (cutoff + 1) * scale, masses[-1])
    factor = abs(c / float(d))
    return DivisorTerm(d=d, modulus=modulus, X=1.0 / scale, n_cutoff=cutoff, partial=factor * partial,
                       tail_estimate=factor * tail, quadrature_error=factor * quad_error[0], weil_ok=weil)


def rhs_sum(inst, tol=DEFAULT_TOL):
    """(right-hand side, per-divisor terms sorted by d)."""
    transform = mellin.f_transform(inst.params, inst.fam, inst.line)
    terms = [_divisor_branch(inst, transform, d, tol) for d in rational.divisors(inst.c * inst.q)]
    total = sum(term.partial for term in terms)
    for term in terms:
        logger.debug("d=%d modulus=%d cutoff=%d partial=%s", term.d, term.modulus, term.n_cutoff, term.partial)
    return total, terms


def identity_residual(inst, tol=DEFAULT_TOL):
    lhs, lhs_tail = lhs_sum(inst, tol)
    rhs, terms = rhs_sum(inst, tol)
    residual = abs(lhs - rhs) / (abs(lhs) + abs(rhs) + inst.floor)
    report = IdentityReport(lhs=lhs, rhs=rhs, residual=residual, divisors=terms, lhs_tail=lhs_tail,
                            rhs_tail=sum(t.tail_estimate for t in terms),
                            quadrature_error=sum(t.quadrature_error for t in terms), tol=tol)
    logger.info("identity (a,c,q,T)=(%d,%d,%d,%g) eta=%d omega=%d Y=%g: residual %.3e",
                inst.a, inst.c, inst.q, inst.T, inst.fam.eta, inst.fam.omega, inst.fam.Y, residual)
    return report


def embedding_menu(weights=MENU_WEIGHTS, t=0.0):
    """Discrete-series candidates with every admissible (d2, d3) split."""
    menu = []
    for k in weights:
        splits = ((0, 1), (1, 0)) if k % 2 else ((0, 0), (1, 1))
        menu.extend(EmbeddingParams.discrete_series(k, t, split) for split in splits)
    return menu


def calibrate_embedding(table, menu=None, pairs=((1, 2),), T=10.0, q=1, profile="bump", line=None, tol=DEFAULT_TOL):
    """Rank embedding candidates by their worst identity residual; best first."""
    menu = embedding_menu() if menu is None else menu
    line = VerticalLineSpec() if line is None else line
    ranked = []
    for params in menu:
        worst = 0.0
        for a, c in pairs:
            fam = build_test_function(0.0, 0, 0, params, profile=profile)
            inst = VoronoiInstance(table, q, a, c, T, fam, line, params)
            worst = max(worst, identity_residual(inst, tol).residual)
        logger.info("embedding candidate %s: worst residual %.3e", params.label, worst)
        ranked.append((worst, params))
    ranked.sort(key=lambda item: item[0])
    return [(params, worst) for worst, params in ranked]


def _matrix_cell(table, params, a, c, q, T, eta, omega, Y, profile, line, tol):
    fam = build_test_function(Y, omega, eta, params, profile=profile)
    inst = VoronoiInstance(table, q, a, c, T, fam, line, params)
    try:
        report = identity_residual(inst, tol)
    except (TruncationBudgetError, InsufficientTableError) as err:
        logger.warning("excluding (a,c,q,T)=(%d,%d,%d,%g): %s", a, c, q, T, err)
        return (a, c, q, T, eta, omega, Y), None
    if report.residual > tol and report.budget > tol:
        logger.warning("excluding (a,c,q,T)=(%d,%d,%d,%g): error budget %.2e above tolerance",
                       a, c, q, T, report.budget)
        report.excluded = True
    return (a, c, q, T, eta, omega, Y), report


def instance_matrix(table, params=None, pairs=((1, 2), (1, 3), (2, 3)), qs=(1, 2), Ts=(10.0, 20.0),
                    etas=(0, 1), omegas=(0, 1), Ys=(0.0,), alpha=None, profile="bump", line=None,
                    tol=DEFAULT_TOL, n_jobs=1):
    """Identity reports over the instance grid, keyed by (a, c, q, T, eta, omega, Y).

    With `alpha`, each T also gets the Y of its continued-fraction approximant.
    Cells whose truncation cannot be certified map to None.
    """
    params = table.descriptor.embedding if params is None else params
    line = VerticalLineSpec() if line is None else line
    cells = []
    for a, c in pairs:
        for q in qs:
            for T in Ts:
                Y_values = list(Ys)
                if alpha is not None:
                    Y_values.append(rational.select_approximant(alpha, T).Y)
                for eta in etas:
                    for omega in omegas:
                        for Y in Y_values:
                            cells.append((a, c, q, T, eta, omega, Y))
    parallel = Parallel(n_jobs=n_jobs, verbose=0)
    results = parallel(delayed(_matrix_cell)(table, params, a, c, q, T, eta, omega, Y, profile, line, tol)
                       for a, c, q, T, eta, omega, Y in cells)
    return dict(sorted(results, key=lambda item: item[0]))


@dataclass
class ScalingFit:
    slope: float
    T_grid: list
    magnitudes: list
    choices: list
    excluded: list = field(default_factory=list)


def required_rhs_size(inst, tol=DEFAULT_TOL):
    """Table length the d = 1 branch of rhs_sum needs, predicted from |F| alone.

    Every other divisor samples F more coarsely and stops earlier.
    """
    transform = mellin.f_transform(inst.params, inst.fam, inst.line)
    scale = inst.T / float(inst.c ** 3 * inst.q)

    def block(lo, hi):
        n = np.unique(np.geomspace(lo, hi - 1, SIZE_SAMPLES).astype(int))
        return np.array([np.max(np.abs(transform(n * scale)))])

    _, _, cutoff = _dyadic_sum(block, SIZE_CAP, tol, TruncationBudgetError, int(math.ceil(1.0 / scale)))
    return 2 * (cutoff + 1)


def rhs_scaling_experiment(table, alpha, T_grid, params=None, eta=0, omega=0, q=1, profile="bump",
                           line=None, tol=DEFAULT_TOL, table_for=None):
    """Slope of log |rhs| against log T, with (a, c, Y) from the approximant of alpha at each T.

    Each T is first sized with required_rhs_size; a table that is too short is
    replaced by table_for(N) when given, otherwise that T is excluded.
    """
    params = table.descriptor.embedding if params is None else params
    line = VerticalLineSpec() if line is None else line
    kept = []
    magnitudes = []
    choices = []
    excluded = []
    for T in T_grid:
        choice = rational.select_approximant(alpha, T)
        fam = build_test_function(choice.Y, omega, eta, params, profile=profile)
        inst = VoronoiInstance(table, q, choice.a, choice.c, T, fam, line, params)
        try:
            need = required_rhs_size(inst, tol)
            if need > table.n_max:
                if table_for is None:
                    raise TruncationBudgetError("T={0:g} needs a table of {1}, have {2}".format(T, need, table.n_max))
                table = table_for(need)
                inst = VoronoiInstance(table, q, choice.a, choice.c, T, fam, line, params)
            rhs, _ = rhs_sum(inst, tol)
        except TruncationBudgetError as err:
            logger.warning("excluding T=%g from the scaling fit: %s", T, err)
            excluded.append((T, str(err)))
            continue
        kept.append(T)
        magnitudes.append(abs(rhs))
        choices.append(choice)
        logger.info("T=%g: (a,c,Y)=(%d,%d,%.4g) |rhs|=%.4e", T, choice.a, choice.c, choice.Y, abs(rhs))
    if len(kept) < 2:
        raise TruncationBudgetError("only {0} of {1} T values could be certified".format(len(kept), len(T_grid)))
    slope, _ = np.polyfit(np.log(np.asarray(kept, dtype=float)), np.log(magnitudes), 1)
    return ScalingFit(slope=float(slope), T_grid=kept, magnitudes=magnitudes, choices=choices, excluded=excluded)


def write_identity_report(path, inst, report):
    write_report(path, [
        ("a", inst.a), ("c", inst.c), ("q", inst.q), ("T", inst.T),
        ("eta", inst.fam.eta), ("omega", inst.fam.omega), ("Y", inst.fam.Y),
        ("lambdas", " ".join(repr(l) for l in inst.params.lambdas)),
        ("deltas", " ".join(str(d) for d in inst.params.deltas)),
        ("sigma", inst.line.sigma), ("H", inst.line.H), ("h", inst.line.h),
        ("lhs_re", repr(report.lhs.real)), ("lhs_im", repr(report.lhs.imag)),
        ("rhs_re", repr(report.rhs.real)), ("rhs_im", repr(report.rhs.imag)),
        ("residual", repr(report.residual)), ("lhs_tail", repr(report.lhs_tail)),
        ("rhs_tail", repr(report.rhs_tail)), ("quadrature_error", repr(report.quadrature_error)),
        ("tol", report.tol), ("passed", int(report.passed)),
    ])


def write_divisor_csv(path, report):
    rows = [{"d": t.d, "modulus": t.modulus, "X": repr(t.X), "n_cutoff": t.n_cutoff,
             "partial_re": repr(t.partial.real), "partial_im": repr(t.partial.imag),
             "tail_estimate": repr(t.tail_estimate), "quadrature_error": repr(t.quadrature_error),
             "weil_ok": int(t.weil_ok)} for t in report.divisors]
    write_csv(path, "voronoi-divisors", DIVISOR_FIELDS, rows)
