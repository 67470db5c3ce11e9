"""
Experiment configuration, orchestration and the gl3v command line.

Configuration files are INI-style:

    [experiment]
    name = gl2-exponent
    kind = exponent          ; exponent | voronoi | scaling | average | sharpen | fcheck | arith
    form = gl2
    profile = bump           ; bump | gaussian, for the test-function family
    seed = 0
    jobs = 1

    [grid]
    T_from = 256
    T_to = 32768
    Y_values = 2 4           ; fcheck only
    c_max = 100              ; arith only

    [alphas]
    count_random = 10
    values = 0.25 0.125

    [tolerances]
    beta_min = 0.35
    beta_max = 0.65

    [contour]
    sigma = 0.75
    height = 400
    step = 0.05

    [paths]
    cache = ~/.gl3v_cache
    output = out/gl2-exponent
"""
import argparse
import configparser
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import coefficients, mellin, rational, special_fn, twisted_sums, voronoi
from .errors import ConfigError, DomainError, Gl3vError, StageError
from .mellin import VerticalLineSpec, build_test_function
from .reporting import read_report, write_csv, write_report
from .versionString import vstr

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("exponent", "voronoi", "scaling", "average", "sharpen", "fcheck", "arith")
PROFILES = ("bump", "gaussian")
DEFAULT_TOLERANCES = {
    "beta_min": 0.0,
    "beta_max": 0.85,
    "residual": voronoi.DEFAULT_TOL,
    "slope_max": 0.85,
    "rankin_min": 0.9,
    "rankin_max": 1.1,
    "kernel_ratio": 20.0,
    "sharpen": 1e-8,
    "oracle": 1e-6,
    "ratio_spread": 100.0,
}
SPECIAL_TOLERANCES = {"reciprocity": 1e-10, "multiplication": 1e-9, "bridge": 1e-8, "parseval": 1e-9}
ARITH_TOLERANCES = {"weil": 1e-9, "multiplicativity": 1e-8, "bracketing": 0}
# ordered exponents so that the repeated-integral oracle converges
CHECK_PARAMS = mellin.EmbeddingParams((0.3, 0.0, -0.3), (0, 0, 0), label="synthetic")


@dataclass
class ExperimentConfig:
    name: str
    kind: str
    form: str = "gl2"
    seed: int = 0
    jobs: int = 1
    profile: str = "bump"
    T_from: int = 256
    T_to: int = 32768
    T_values: list = field(default_factory=list)
    N_table: int = 0
    c_max: int = 100
    Y_values: list = field(default_factory=list)
    count_random: int = 10
    alpha_values: list = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    line: VerticalLineSpec = field(default_factory=VerticalLineSpec)
    cache_dir: str = None
    output_dir: str = "."

    @property
    def T_grid(self):
        return self.T_values or twisted_sums.dyadic_grid(self.T_from, self.T_to)

    def alphas(self):
        """Configured alphas, or the seeded adversarial set followed by them."""
        return twisted_sums.adversarial_alphas(self.count_random, self.seed) + list(self.alpha_values)


def parse_alpha(text):
    """'1/3' is exact, 'golden' and 'sqrt2' are the usual irrationals, anything else a float."""
    text = text.strip()
    named = {"golden": (math.sqrt(5.0) - 1.0) / 2.0, "sqrt2": math.sqrt(2.0) - 1.0}
    if text in named:
        return named[text]
    if "/" in text:
        return Fraction(text)
    return float(text)


def _lineno(lines, section, key):
    current = None
    for lineno, line in enumerate(lines, 1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
        elif current == section and stripped.split("=", 1)[0].strip().lower() == key.lower():
            return lineno
    return None


def load_config(path):
    """ExperimentConfig from an INI file; every problem is a ConfigError with its line."""
    with open(path, "r") as f:
        text = f.read()
    lines = text.splitlines()
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=path)
    except configparser.MissingSectionHeaderError as err:
        raise ConfigError("missing section header", lineno=err.lineno) from err
    except configparser.ParsingError as err:
        lineno = err.errors[0][0] if err.errors else None
        raise ConfigError("malformed line, expected key = value", lineno=lineno) from err
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as err:
        raise ConfigError(err.message, lineno=err.lineno) from err

    def get(section, key, convert=str, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return convert(raw)
        except (ValueError, ZeroDivisionError) as err:
            raise ConfigError("[{0}] {1}: cannot read {2!r}".format(section, key, raw),
                              lineno=_lineno(lines, section, key)) from err

    def numbers(raw, convert):
        return [convert(v) for v in raw.split()]

    if not parser.has_section("experiment"):
        raise ConfigError("{0}: no [experiment] section".format(path))
    kind = get("experiment", "kind")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError("unknown experiment kind {0!r}; choose from {1}".format(kind, EXPERIMENT_KINDS),
                          lineno=_lineno(lines, "experiment", "kind"))
    form = get("experiment", "form", default="sym2" if kind in ("voronoi", "scaling") else "gl2")
    if form not in coefficients.KINDS:
        raise ConfigError("unknown form {0!r}".format(form), lineno=_lineno(lines, "experiment", "form"))
    profile = get("experiment", "profile", default="bump")
    if profile not in PROFILES:
        raise ConfigError("unknown profile {0!r}; choose from {1}".format(profile, PROFILES),
                          lineno=_lineno(lines, "experiment", "profile"))

    tolerances = dict(DEFAULT_TOLERANCES)
    if parser.has_section("tolerances"):
        for key in parser.options("tolerances"):
            tolerances[key] = get("tolerances", key, float)

    try:
        line = VerticalLineSpec(sigma=get("contour", "sigma", float, mellin.DEFAULT_SIGMA),
                                H=get("contour", "height", float, mellin.DEFAULT_H),
                                h=get("contour", "step", float, mellin.DEFAULT_STEP))
    except Gl3vError as err:
        raise ConfigError("[contour] {0}".format(err), lineno=_lineno(lines, "contour", "height")) from err

    config = ExperimentConfig(
        name=get("experiment", "name", default=os.path.splitext(os.path.basename(path))[0]),
        kind=kind,
        form=form,
        seed=get("experiment", "seed", int, 0),
        jobs=get("experiment", "jobs", int, 1),
        profile=profile,
        T_from=get("grid", "T_from", int, 256),
        T_to=get("grid", "T_to", int, 32768),
        T_values=get("grid", "T_values", lambda raw: numbers(raw, float), []),
        N_table=get("grid", "N_table", int, 0),
        c_max=get("grid", "c_max", int, 100),
        Y_values=get("grid", "Y_values", lambda raw: numbers(raw, float), []),
        count_random=get("alphas", "count_random", int, 10),
        alpha_values=get("alphas", "values", lambda raw: numbers(raw, parse_alpha), []),
        tolerances=tolerances,
        line=line,
        cache_dir=get("paths", "cache", os.path.expanduser),
        output_dir=get("paths", "output", os.path.expanduser, "."),
    )
    if not config.T_grid:
        raise ConfigError("empty T grid", lineno=_lineno(lines, "grid", "T_from"))
    logger.info("loaded %s experiment %r from %s", config.kind, config.name, path)
    return config


@dataclass
class MomentExponent:
    beta: float
    m: int
    exponent: float


def moment_exponent(beta, m):
    """1 + (2 beta - 1) m, the second-moment exponent implied by cancellation exponent beta."""
    if not 0.5 <= beta < 1.0:
        raise DomainError("beta must lie in [1/2, 1), got {0}".format(beta))
    if int(m) != m or m < 2:
        raise DomainError("m must be an integer >= 2, got {0}".format(m))
    return MomentExponent(beta=beta, m=int(m), exponent=1.0 + (2.0 * beta - 1.0) * int(m)).exponent


def _table_size(config):
    if config.N_table:
        return config.N_table
    if config.kind in ("exponent", "average"):
        return int(max(config.T_grid))
    if config.kind in ("fcheck", "arith"):
        return 64
    return 1 << 15


def _run_exponent(config, table, out):
    alphas = config.alphas()
    fit = twisted_sums.exponent_fit(table, config.T_grid, alphas, n_jobs=config.jobs)
    rows = [{"T": int(T), "envelope": repr(float(E))} for T, E in zip(fit.T_grid, fit.envelope)]
    write_csv(os.path.join(out, "envelope.csv"), "envelope", ["T", "envelope"], rows)
    tol = config.tolerances
    passed = tol["beta_min"] <= fit.beta <= tol["beta_max"]
    return passed, [("beta", repr(fit.beta)), ("intercept", repr(fit.intercept)),
                    ("fit_residual", repr(fit.residual)), ("alpha_at_max", float(fit.alpha_at_max)),
                    ("alphas", " ".join(repr(float(a)) for a in fit.alphas))]


def _run_voronoi(config, table, out):
    Ts = config.T_values or [10.0, 20.0]
    alpha = config.alpha_values[0] if config.alpha_values else None
    cells = voronoi.instance_matrix(table, Ts=Ts, alpha=alpha, profile=config.profile, line=config.line,
                                    tol=config.tolerances["residual"], n_jobs=config.jobs)
    fields = ["a", "c", "q", "T", "eta", "omega", "Y", "residual", "lhs_abs", "rhs_abs", "excluded"]
    rows = []
    worst = 0.0
    excluded = 0
    for (a, c, q, T, eta, omega, Y), report in cells.items():
        row = {"a": a, "c": c, "q": q, "T": T, "eta": eta, "omega": omega, "Y": repr(Y)}
        if report is None or report.excluded:
            excluded += 1
            row.update(residual="", lhs_abs="", rhs_abs="", excluded=1)
        else:
            worst = max(worst, report.residual)
            row.update(residual=repr(report.residual), lhs_abs=repr(abs(report.lhs)),
                       rhs_abs=repr(abs(report.rhs)), excluded=0)
        rows.append(row)
    write_csv(os.path.join(out, "instances.csv"), "voronoi-instances", fields, rows)
    passed = worst <= config.tolerances["residual"] and excluded < len(rows)
    return passed, [("instances", len(rows)), ("excluded", excluded), ("max_residual", repr(worst))]


def _run_scaling(config, table, out):
    alphas = config.alpha_values or [parse_alpha("golden")]

    def table_for(N):
        return coefficients.cached_table(config.form, 1 << (int(N) - 1).bit_length(), config.cache_dir)

    rows = []
    items = []
    passed = True
    for alpha in alphas:
        fit = voronoi.rhs_scaling_experiment(table, alpha, config.T_grid, profile=config.profile, line=config.line,
                                             tol=config.tolerances["residual"], table_for=table_for)
        for T, mag, choice in zip(fit.T_grid, fit.magnitudes, fit.choices):
            rows.append({"alpha": repr(float(alpha)), "T": T, "a": choice.a, "c": choice.c,
                         "Y": repr(choice.Y), "rhs_abs": repr(mag)})
        items.append(("slope[{0}]".format(alpha), repr(fit.slope)))
        items.append(("excluded[{0}]".format(alpha), " ".join("{0:g}".format(T) for T, _ in fit.excluded)))
        passed = passed and fit.slope <= config.tolerances["slope_max"]
    write_csv(os.path.join(out, "rhs_scaling.csv"), "rhs-scaling", ["alpha", "T", "a", "c", "Y", "rhs_abs"], rows)
    return passed, items


def kernel_weight(phi0=None):
    """g = 1/phi0_hat for the Gaussian phi0."""
    phi0 = twisted_sums.gaussian_phi() if phi0 is None else phi0
    return lambda x: 1.0 / phi0.fourier(x)


def _run_average(config, table, out):
    tol = config.tolerances
    slope = coefficients.rankin_selberg_slope(table, config.T_grid)
    constant = coefficients.average_size_constant(table, config.T_grid)
    g = kernel_weight()
    rows = []
    worst = 0.0
    for N in twisted_sums.dyadic_grid(64, 8192):
        ratio = twisted_sums.kernel_l1_norm(g, N) / math.log(N)
        worst = max(worst, ratio)
        rows.append({"N": N, "l1_over_log": repr(ratio)})
    write_csv(os.path.join(out, "kernel.csv"), "kernel", ["N", "l1_over_log"], rows)
    passed = tol["rankin_min"] <= slope <= tol["rankin_max"] and worst < tol["kernel_ratio"]
    return passed, [("rankin_slope", repr(slope)), ("average_constant", repr(constant)),
                    ("kernel_ratio_max", repr(worst))]


def sharpen_residual(table, N, alphas):
    """Largest relative gap between convolution-sharpened and directly computed sharp sums."""
    phi0 = twisted_sums.gaussian_phi()
    evaluator = twisted_sums.smoothed_evaluator(table, N, phi0.fourier, phi0.extent)
    sharpened = twisted_sums.sharpen_by_convolution(evaluator, phi0, N, [float(a) for a in alphas])
    direct = np.array([twisted_sums.sharp_sum(table, N, float(a)) for a in alphas])
    return float(np.max(np.abs(sharpened - direct) / np.maximum(np.abs(direct), 1.0)))


def _run_sharpen(config, table, out):
    alphas = config.alphas()
    rows = []
    worst = 0.0
    for N in config.T_grid:
        gap = sharpen_residual(table, int(N), alphas)
        worst = max(worst, gap)
        rows.append({"N": int(N), "relative_gap": repr(gap)})
    write_csv(os.path.join(out, "sharpen.csv"), "sharpen", ["N", "relative_gap"], rows)
    return worst <= config.tolerances["sharpen"], [("max_relative_gap", repr(worst))]


def f_cross_check(params=CHECK_PARAMS, xs=(0.7, 1.5, -2.0), profile="bump", line=None):
    """(largest relative gap, rows) between the contour F and the repeated-integral oracle."""
    rows = []
    worst = 0.0
    for eta in (0, 1):
        fam = build_test_function(0.0, 0, eta, params, profile=profile)
        fam_line = mellin.adapted_line(params, fam, line)
        for x in xs:
            contour = mellin.voronoi_transform_F(params, fam, x, fam_line).value
            direct = mellin.direct_F_oracle(params, fam, x)
            gap = abs(contour - direct) / max(1.0, abs(direct))
            worst = max(worst, gap)
            rows.append({"eta": eta, "x": repr(x), "contour_re": repr(contour.real),
                         "contour_im": repr(contour.imag), "oracle_re": repr(direct.real),
                         "oracle_im": repr(direct.imag), "gap": repr(gap)})
    return worst, rows


def regime_table(params, Ys, N=4, profile="bump", line=None):
    """Regime reports at x = Y/2, Y, Y^2, Y^3 and 10 Y^3 for each Y."""
    reports = []
    for Y in Ys:
        fam = build_test_function(Y, 0, 0, params, profile=profile)
        for x in (0.5 * Y, Y, Y * Y, Y ** 3, 10.0 * Y ** 3):
            reports.append(mellin.regime_report(params, fam, x, N, line))
    return reports


def ratio_spread(reports, regime="small-x"):
    """max/min over Y of the largest |F|/envelope seen in one regime."""
    peaks = {}
    for report in reports:
        if report.regime == regime:
            peaks[report.Y] = max(peaks.get(report.Y, 0.0), report.ratio)
    if not peaks or min(peaks.values()) == 0.0:
        return np.inf
    return max(peaks.values()) / min(peaks.values())


def arithmetic_checks(c_max=100, seed=0, T_max=1 << 20):
    """Weil-bound excess, twisted-multiplicativity residual and bracketing failures."""
    rng = np.random.default_rng(seed)
    weil = 0.0
    for c in range(1, c_max + 1):
        for n in range(c):
            row = rational.kloosterman_residues(n, c)
            bounds = np.array([rational.weil_bound(n, m, c) for m in range(c)])
            weil = max(weil, float(np.max(np.abs(row) - bounds)))
    multiplicativity = 0.0
    for c1 in range(1, c_max + 1):
        for c2 in range(1, c_max // c1 + 1):
            if math.gcd(c1, c2) != 1:
                continue
            inv1, inv2 = rational.mod_inverse(c1, c2), rational.mod_inverse(c2, c1)
            for n, m in rng.integers(-100, 100, size=(4, 2)):
                n, m = int(n), int(m)
                product = (rational.kloosterman(n * inv2 * inv2, m, c1) *
                           rational.kloosterman(n * inv1 * inv1, m, c2))
                multiplicativity = max(multiplicativity, abs(rational.kloosterman(n, m, c1 * c2) - product))
    bracketing = 0
    alphas = [parse_alpha("golden"), parse_alpha("sqrt2"), Fraction(1, 3), math.pi - 3.0, math.e - 2.0]
    for alpha in alphas:
        qs = [conv.q for conv in rational.continued_fraction(alpha)]
        for T in twisted_sums.dyadic_grid(1, T_max):
            choice = rational.select_approximant(alpha, T)
            later = [q for q in qs if q > choice.c]
            Y = T * abs(float(alpha) + choice.a / float(choice.c))
            if choice.c * choice.c > T or (later and later[0] ** 2 <= T) or abs(Y - choice.Y) > 1e-9 * max(1.0, Y):
                logger.warning("approximant of %r at T=%d fails to bracket: %s", alpha, T, choice)
                bracketing += 1
    return {"weil": weil, "multiplicativity": multiplicativity, "bracketing": bracketing}


def _run_fcheck(config, table, out):
    tol = config.tolerances
    gap, rows = f_cross_check(profile=config.profile, line=config.line)
    write_csv(os.path.join(out, "f_oracle.csv"), "f-oracle",
              ["eta", "x", "contour_re", "contour_im", "oracle_re", "oracle_im", "gap"], rows)
    reports = regime_table(CHECK_PARAMS, config.Y_values or [2.0, 4.0], profile=config.profile, line=config.line)
    write_csv(os.path.join(out, "regimes.csv"), "f-regimes",
              ["Y", "x", "regime", "measured", "envelope", "ratio", "error", "accurate"],
              [{"Y": repr(r.Y), "x": repr(r.x), "regime": r.regime, "measured": repr(r.measured),
                "envelope": repr(r.envelope), "ratio": repr(r.ratio), "error": repr(r.error),
                "accurate": int(r.accurate)} for r in reports])
    spread = ratio_spread(reports)
    inaccurate = sum(1 for r in reports if r.regime in ("small-x", "medium-x") and not r.accurate)
    passed = gap <= tol["oracle"] and spread <= tol["ratio_spread"] and inaccurate == 0
    return passed, [("oracle_gap", repr(gap)), ("small_x_ratio_spread", repr(spread)),
                    ("inaccurate", inaccurate)]


def _run_arith(config, table, out):
    results = arithmetic_checks(config.c_max, config.seed)
    rows = [{"check": name, "value": repr(value), "tolerance": repr(ARITH_TOLERANCES[name]),
             "ok": int(value <= ARITH_TOLERANCES[name])} for name, value in results.items()]
    write_csv(os.path.join(out, "arith.csv"), "arith", ["check", "value", "tolerance", "ok"], rows)
    return all(row["ok"] for row in rows), [(name, repr(value)) for name, value in results.items()]


RUNNERS = {
    "exponent": _run_exponent,
    "voronoi": _run_voronoi,
    "scaling": _run_scaling,
    "average": _run_average,
    "sharpen": _run_sharpen,
    "fcheck": _run_fcheck,
    "arith": _run_arith,
}


def run_experiment(config):
    """Run one configured experiment; returns the summary as a dict.

    Writes the experiment's CSVs and `summary.txt` under config.output_dir.
    """
    out = config.output_dir
    stage = "coefficients"
    try:
        os.makedirs(out, exist_ok=True)
        table = coefficients.cached_table(config.form, _table_size(config), config.cache_dir)
        stage = config.kind
        passed, items = RUNNERS[config.kind](config, table, out)
        stage = "summary"
        summary = [("version", vstr), ("name", config.name), ("kind", config.kind), ("form", config.form),
                   ("seed", config.seed), ("T_grid", " ".join(str(T) for T in config.T_grid))]
        summary.extend(items)
        summary.append(("passed", int(passed)))
        write_report(os.path.join(out, "summary.txt"), summary)
    except Gl3vError as err:
        raise StageError(stage, err) from err
    except OSError as err:
        raise StageError(stage, err) from err
    logger.info("experiment %r %s", config.name, "passed" if passed else "FAILED")
    return dict(summary)


def special_identities(seed=0, count=200):
    """Worst residual of each exact identity check, keyed by name."""
    rng = np.random.default_rng(seed)
    s = rng.uniform(-3.0, 4.0, count) + 1j * rng.uniform(-30.0, 30.0, count)
    reciprocity = 0.0
    for delta in (0, 1):
        product = special_fn.g_delta(delta, s) * special_fn.g_delta(delta, 1.0 - s)
        reciprocity = max(reciprocity, float(np.max(np.abs(product - (-1.0) ** delta))))
    multiplication = max(special_fn.gamma_multiplication_residual(n, complex(v))
                         for n in (2, 3, 4) for v in rng.uniform(0.2, 3.0, 20) + 1j * rng.uniform(-10, 10, 20))
    even = mellin.ParityFunction(lambda x: np.exp(-np.pi * x * x), 0, mellin.GAUSS_EXTENT)
    odd = mellin.ParityFunction(lambda x: x * np.exp(-np.pi * x * x), 1, mellin.GAUSS_EXTENT, order_at_zero=1)
    bridge = max(mellin.mellin_fourier_residual(g, complex(sr, si))
                 for g in (even, odd) for sr in (0.3, 0.5, 0.7) for si in (0.0, 1.5))
    table = coefficients.build_table("gl2", 500)
    parseval = max(twisted_sums.parseval_residual(table, T) / float(np.sum(table.row(T) ** 2))
                   for T in (50, 200, 500))
    return {"reciprocity": reciprocity, "multiplication": multiplication, "bridge": bridge,
            "parseval": parseval}


def _load_table(args, extent=1.0):
    N = args.N if args.N else int(math.ceil(extent * getattr(args, "T", 1.0)))
    return coefficients.cached_table(args.form, max(N, 1), args.cache_dir)


def cmd_coeffs(args):
    table = _load_table(args)
    for n in range(1, min(args.show, table.n_max) + 1):
        print(n, table.values[n])
    if args.output:
        coefficients.save_cache(table, args.output)
    return 0


def cmd_kloosterman(args):
    print("{0:.12g}".format(rational.kloosterman(args.n, args.m, args.c)))
    return 0


def cmd_sum(args):
    phi = twisted_sums.gaussian_phi()
    table = _load_table(args, phi.extent if args.smooth else 1.0)
    alpha = parse_alpha(args.alpha)
    if args.smooth:
        value = twisted_sums.smoothed_sum(table, args.T, alpha, phi.fourier, extent=phi.extent).value
    else:
        value = twisted_sums.sharp_sum(table, args.T, alpha)
    print("{0!r} {1!r} {2!r}".format(value.real, value.imag, abs(value)))
    return 0


def cmd_exponent_fit(args):
    table = coefficients.cached_table(args.form, args.T_to, args.cache_dir)
    alphas = twisted_sums.adversarial_alphas(args.count_random, args.seed)
    alphas.extend(parse_alpha(a) for a in args.alpha or [])
    if args.alpha_only:
        alphas = [parse_alpha(a) for a in args.alpha_only]
    fit = twisted_sums.exponent_fit(table, twisted_sums.dyadic_grid(args.T_from, args.T_to), alphas,
                                    n_jobs=args.jobs)
    print("beta = {0:.4f}".format(fit.beta))
    print("alpha_at_max = {0!r}".format(float(fit.alpha_at_max)))
    if args.output:
        rows = [{"T": int(T), "envelope": repr(float(E))} for T, E in zip(fit.T_grid, fit.envelope)]
        write_csv(args.output, "envelope", ["T", "envelope"], rows)
    return 0 if args.beta_min <= fit.beta <= args.beta_max else 1


def cmd_voronoi_check(args):
    table = coefficients.cached_table("sym2", args.N, args.cache_dir)
    params = table.descriptor.embedding
    line = VerticalLineSpec(sigma=args.sigma, H=args.H, h=args.h)
    fam = build_test_function(args.Y, args.omega, args.eta, params, profile=args.profile)
    inst = voronoi.VoronoiInstance(table, args.q, args.a, args.c, args.T, fam, line, params)
    report = voronoi.identity_residual(inst, args.tol)
    print("lhs = {0!r}".format(report.lhs))
    print("rhs = {0!r}".format(report.rhs))
    print("residual = {0:.3e}".format(report.residual))
    for term in report.divisors:
        print("  d={0} modulus={1} X={2:.4g} cutoff={3} partial={4!r}".format(
            term.d, term.modulus, term.X, term.n_cutoff, term.partial))
    if args.report:
        voronoi.write_identity_report(args.report, inst, report)
    if args.csv:
        voronoi.write_divisor_csv(args.csv, report)
    return 0 if report.passed else 1


def cmd_special_test(args):
    results = special_identities(args.seed)
    failed = False
    for name, value in results.items():
        ok = value <= SPECIAL_TOLERANCES[name]
        failed = failed or not ok
        print("{0:16s} {1:.3e} {2}".format(name, value, "ok" if ok else "FAIL"))
    return 1 if failed else 0


def cmd_f_check(args):
    line = VerticalLineSpec(sigma=args.sigma, H=args.H, h=args.h)
    gap, _ = f_cross_check(profile=args.profile, line=line)
    print("oracle_gap {0:.3e} {1}".format(gap, "ok" if gap <= args.oracle_tol else "FAIL"))
    reports = regime_table(CHECK_PARAMS, args.Y, profile=args.profile, line=line)
    for r in reports:
        print("Y={0:g} x={1:.4g} {2:9s} |F|={3:.3e} ratio={4:.3e} error={5:.2e}{6}".format(
            r.Y, r.x, r.regime, r.measured, r.ratio, r.error, "" if r.accurate else " inaccurate"))
    spread = ratio_spread(reports)
    print("small_x_ratio_spread {0:.3e}".format(spread))
    inaccurate = sum(1 for r in reports if r.regime in ("small-x", "medium-x") and not r.accurate)
    passed = gap <= args.oracle_tol and spread <= DEFAULT_TOLERANCES["ratio_spread"] and inaccurate == 0
    if args.report:
        write_report(args.report, [("version", vstr), ("profile", args.profile), ("oracle_gap", repr(gap)),
                                   ("small_x_ratio_spread", repr(spread)), ("inaccurate", inaccurate),
                                   ("passed", int(passed))])
    return 0 if passed else 1


def cmd_arith_check(args):
    results = arithmetic_checks(args.c_max, args.seed)
    failed = False
    for name, value in results.items():
        ok = value <= ARITH_TOLERANCES[name]
        failed = failed or not ok
        print("{0:16s} {1:.3e} {2}".format(name, value, "ok" if ok else "FAIL"))
    if args.report:
        items = [("version", vstr), ("c_max", args.c_max)] + [(k, repr(v)) for k, v in results.items()]
        write_report(args.report, items + [("passed", int(not failed))])
    return 1 if failed else 0


def cmd_moment_exponent(args):
    print("{0:g}".format(moment_exponent(args.beta, args.m)))
    return 0


def cmd_run(args):
    config = load_config(args.config)
    if args.output:
        config.output_dir = args.output
    summary = run_experiment(config)
    for key, value in summary.items():
        print("{0} = {1}".format(key, value))
    return 0 if int(summary["passed"]) else 1


def cmd_summary(args):
    summary = read_report(args.summary)
    for key, value in summary.items():
        print("{0} = {1}".format(key, value))
    return 0 if int(summary.get("passed", 0)) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="gl3v", description="GL(3) Voronoi summation and twisted-sum experiments")
    parser.add_argument("--version", action="version", version="gl3v " + vstr)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output")
    parser.add_argument("--cache-dir", type=str, default=None,
                        help="coefficient cache directory (default ${0} or ~/.gl3v_cache)".format(coefficients.CACHE_ENV))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="build or load a coefficient table")
    p.add_argument("-f", "--form", choices=coefficients.KINDS, default="gl2")
    p.add_argument("-N", "--N", type=int, required=True, help="table size")
    p.add_argument("-s", "--show", type=int, default=10, help="print the first values")
    p.add_argument("-o", "--output", type=str, help="also save the table to this file")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("kloosterman", help="print S(n, m; c)")
    p.add_argument("n", type=int)
    p.add_argument("m", type=int)
    p.add_argument("c", type=int)
    p.set_defaults(func=cmd_kloosterman)

    p = sub.add_parser("sum", help="print re, im, abs of S(T, alpha)")
    p.add_argument("-f", "--form", choices=coefficients.KINDS, default="gl2")
    p.add_argument("-T", "--T", type=float, required=True)
    p.add_argument("-a", "--alpha", type=str, required=True, help="float, p/q, 'golden' or 'sqrt2'")
    p.add_argument("-N", "--N", type=int, default=0, help="table size (default: enough for the sum)")
    p.add_argument("--smooth", action="store_true", help="Gaussian-smoothed sum instead of the sharp one")
    p.set_defaults(func=cmd_sum)

    p = sub.add_parser("exponent-fit", help="fit the cancellation exponent over dyadic T")
    p.add_argument("-f", "--form", choices=coefficients.KINDS, default="gl2")
    p.add_argument("--T-from", type=int, default=1 << 8)
    p.add_argument("--T-to", type=int, default=1 << 15)
    p.add_argument("-r", "--count-random", type=int, default=10)
    p.add_argument("-s", "--seed", type=int, default=0)
    p.add_argument("-a", "--alpha", type=str, nargs="+", help="extra alphas")
    p.add_argument("--alpha-only", type=str, nargs="+", help="use only these alphas")
    p.add_argument("-j", "--jobs", type=int, default=1)
    p.add_argument("--beta-min", type=float, default=DEFAULT_TOLERANCES["beta_min"])
    p.add_argument("--beta-max", type=float, default=DEFAULT_TOLERANCES["beta_max"])
    p.add_argument("-o", "--output", type=str, help="envelope CSV")
    p.set_defaults(func=cmd_exponent_fit)

    p = sub.add_parser("voronoi-check", help="residual of the Voronoi identity for one instance")
    p.add_argument("-a", "--a", type=int, default=1)
    p.add_argument("-c", "--c", type=int, default=2)
    p.add_argument("-q", "--q", type=int, default=1)
    p.add_argument("-T", "--T", type=float, default=10.0)
    p.add_argument("-Y", "--Y", type=float, default=0.0)
    p.add_argument("--eta", type=int, choices=(0, 1), default=0)
    p.add_argument("--omega", type=int, choices=(0, 1), default=0)
    p.add_argument("--profile", choices=PROFILES, default="bump")
    p.add_argument("-N", "--N", type=int, default=1 << 15, help="sym2 table size")
    p.add_argument("--sigma", type=float, default=mellin.DEFAULT_SIGMA)
    p.add_argument("--H", type=float, default=mellin.DEFAULT_H)
    p.add_argument("--h", type=float, default=mellin.DEFAULT_STEP)
    p.add_argument("-t", "--tol", type=float, default=voronoi.DEFAULT_TOL)
    p.add_argument("--report", type=str, help="key = value report file")
    p.add_argument("--csv", type=str, help="per-divisor CSV")
    p.set_defaults(func=cmd_voronoi_check)

    p = sub.add_parser("special-test", help="exact identities: reciprocity, multiplication, Mellin-Fourier, Parseval")
    p.add_argument("-s", "--seed", type=int, default=0)
    p.set_defaults(func=cmd_special_test)

    p = sub.add_parser("f-check", help="F against the repeated-integral oracle, and its regime envelopes")
    p.add_argument("-Y", "--Y", type=float, nargs="+", default=[2.0, 4.0])
    p.add_argument("--profile", choices=PROFILES, default="bump")
    p.add_argument("--sigma", type=float, default=mellin.DEFAULT_SIGMA)
    p.add_argument("--H", type=float, default=mellin.DEFAULT_H)
    p.add_argument("--h", type=float, default=mellin.DEFAULT_STEP)
    p.add_argument("--oracle-tol", type=float, default=DEFAULT_TOLERANCES["oracle"])
    p.add_argument("--report", type=str, help="key = value report file")
    p.set_defaults(func=cmd_f_check)

    p = sub.add_parser("arith-check", help="Weil bound, twisted multiplicativity and approximant bracketing")
    p.add_argument("--c-max", type=int, default=100)
    p.add_argument("-s", "--seed", type=int, default=0)
    p.add_argument("--report", type=str, help="key = value report file")
    p.set_defaults(func=cmd_arith_check)

    p = sub.add_parser("moment-exponent", help="print 1 + (2 beta - 1) m")
    p.add_argument("beta", type=float)
    p.add_argument("m", type=int)
    p.set_defaults(func=cmd_moment_exponent)

    p = sub.add_parser("run", help="run a configured experiment")
    p.add_argument("config", type=str)
    p.add_argument("-o", "--output", type=str, help="override the output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("summary", help="print a summary file; exit status follows its pass flag")
    p.add_argument("summary", type=str)
    p.set_defaults(func=cmd_summary)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else (logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except Gl3vError as err:
        print("gl3v {0}: {1}".format(args.command, err), file=sys.stderr)
        return 2
