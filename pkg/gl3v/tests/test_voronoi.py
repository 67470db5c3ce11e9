import math
import os
import tempfile
from fractions import Fraction
from unittest import TestCase

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gl3v import coefficients, twisted_sums, voronoi
from gl3v.errors import DomainError, InsufficientTableError, TruncationBudgetError
from gl3v.mellin import build_test_function
from gl3v.reporting import read_csv, read_report

_TABLES = {}


def sym2_table(N):
    if N not in _TABLES:
        _TABLES[N] = coefficients.build_table("sym2", N)
    return _TABLES[N]


def instance(a, c, q=1, T=10.0, Y=0.0, eta=0, omega=0, N=1 << 15, kappa=None):
    table = sym2_table(N)
    fam = build_test_function(Y, omega, eta, table.descriptor.embedding, profile="gaussian")
    if kappa is not None:
        fam = fam.scaled(kappa)
    return voronoi.VoronoiInstance(table, q, a, c, T, fam)


class test_instance(TestCase):
    def test_validation(self):
        self.assertRaises(DomainError, instance, 2, 4, N=64)
        self.assertRaises(DomainError, instance, 1, 0, N=64)
        self.assertRaises(DomainError, instance, 1, 3, q=0, N=64)

    def test_normalisation(self):
        inst = instance(1, -3, N=64)
        self.assertEqual((inst.a, inst.c), (-1, 3))
        self.assertEqual(inst.abar, 2)
        self.assertEqual(inst.params, inst.table.descriptor.embedding)
        assert_allclose(inst.floor, 1e-12 * 10.0 * np.max(np.abs(inst.table.row())))


class test_dyadic_sum(TestCase):
    def test_geometric(self):
        blocks = lambda lo, hi: 2.0 ** -np.arange(lo, hi)
        total, tail, cutoff = voronoi._dyadic_sum(blocks, 1000, 1e-3, TruncationBudgetError)
        assert_allclose(total, 1.0, rtol=1e-14)
        self.assertEqual(cutoff, 255)
        self.assertLess(tail, 1e-8)

    def test_growing_start(self):
        # blocks that grow first must not stop the sum early
        blocks = lambda lo, hi: np.arange(lo, hi, dtype=float) ** 4 * np.exp(-np.arange(lo, hi) / 20.0)
        total, _, cutoff = voronoi._dyadic_sum(blocks, 1 << 14, 1e-3, TruncationBudgetError)
        n = np.arange(1, cutoff + 1)
        assert_allclose(total, np.sum(n ** 4.0 * np.exp(-n / 20.0)), rtol=1e-12)
        self.assertGreater(cutoff, 500)

    def test_exhausted(self):
        blocks = lambda lo, hi: 2.0 ** -np.arange(lo, hi)
        self.assertRaises(TruncationBudgetError, voronoi._dyadic_sum, blocks, 100, 1e-3, TruncationBudgetError)
        self.assertRaises(InsufficientTableError, voronoi._dyadic_sum, blocks, 100, 1e-3, InsufficientTableError)

    def test_zero_blocks(self):
        blocks = lambda lo, hi: np.zeros(hi - lo)
        total, tail, cutoff = voronoi._dyadic_sum(blocks, 64, 1e-3, InsufficientTableError)
        self.assertEqual((total, tail, cutoff), (0j, 0.0, 7))
        total, _, cutoff = voronoi._dyadic_sum(blocks, 64, 1e-3, InsufficientTableError, n_min=10)
        self.assertEqual((total, cutoff), (0j, 63))
        self.assertRaises(InsufficientTableError, voronoi._dyadic_sum, blocks, 32, 1e-3,
                          InsufficientTableError, n_min=10)


class test_certified_tail(TestCase):
    def test_decaying(self):
        inst = instance(1, 2, Y=4.0, N=64)
        assert_allclose(voronoi._certified_tail(inst, 1000.0, 1.0), 1.0 / 15.0)
        inst = instance(1, 2, N=64)
        assert_allclose(voronoi._certified_tail(inst, 50.0, 2.0), 2.0 / 15.0)

    def test_medium_x(self):
        inst = instance(1, 2, Y=4.0, N=64)
        self.assertRaises(TruncationBudgetError, voronoi._certified_tail, inst, 10.0, 1.0)
        self.assertRaises(TruncationBudgetError, voronoi._certified_tail, inst, 2.0, 1.0)


class test_odd_half(TestCase):
    def test_vanishes(self):
        # eta = 1 at c = 2: real twists against an odd f
        inst = instance(1, 2, eta=1, N=64)
        self.assertEqual(voronoi.lhs_sum(inst), (0j, 0.0))
        report = voronoi.identity_residual(inst)
        self.assertEqual(report.lhs, 0j)
        self.assertEqual(report.rhs, 0j)
        self.assertEqual(report.residual, 0.0)
        self.assertTrue(report.passed)


class test_lhs(TestCase):
    def test_untwisted_reduces_to_smoothed_sum(self):
        inst = instance(0, 1, N=1024)
        value, _ = voronoi.lhs_sum(inst)
        expected = twisted_sums.smoothed_sum(inst.table, inst.T, Fraction(0), inst.fam.f).value
        assert_allclose(value, expected, rtol=1e-10)

    def test_conjugation(self):
        plus, _ = voronoi.lhs_sum(instance(1, 3, N=1024))
        minus, _ = voronoi.lhs_sum(instance(-1, 3, N=1024))
        assert_allclose(minus, np.conj(plus), rtol=1e-12, atol=1e-14)

    def test_linear_in_f(self):
        base, _ = voronoi.lhs_sum(instance(1, 2, N=1024))
        scaled, _ = voronoi.lhs_sum(instance(1, 2, N=1024, kappa=-3.0))
        assert_allclose(scaled, -3.0 * base, rtol=1e-12)

    def test_linear_in_table(self):
        inst = instance(1, 2, N=1024)
        base, _ = voronoi.lhs_sum(inst)
        doubled = voronoi.VoronoiInstance(inst.table.scaled(2.0), 1, 1, 2, inst.T, inst.fam, params=inst.params)
        assert_allclose(voronoi.lhs_sum(doubled)[0], 2.0 * base, rtol=1e-12)

    def test_short_table(self):
        self.assertRaises(InsufficientTableError, voronoi.lhs_sum, instance(1, 2, T=10.0, N=16))


class test_table_sizing(TestCase):
    def test_required_size(self):
        need = voronoi.required_rhs_size(instance(1, 3, N=64))
        self.assertGreaterEqual(need, 16)
        self.assertEqual(need % 2, 0)
        self.assertLessEqual(need, voronoi.SIZE_CAP)

    def test_short_table_excluded(self):
        table = sym2_table(8)
        with self.assertLogs("gl3v.voronoi", "WARNING"):
            self.assertRaises(TruncationBudgetError, voronoi.rhs_scaling_experiment, table, Fraction(1, 3),
                              [10.0, 20.0], profile="gaussian")


class test_embedding_menu(TestCase):
    def test_menu(self):
        menu = voronoi.embedding_menu()
        self.assertEqual(len(menu), 6)
        self.assertEqual(len({p.label for p in menu}), 6)
        for params in menu:
            self.assertEqual(sum(params.deltas) % 2, 0)
            assert_allclose(sum(params.lambdas), 0.0)
        even = voronoi.embedding_menu(weights=(22,))
        self.assertEqual([p.deltas[1:] for p in even], [(0, 0), (1, 1)])


class test_reports(TestCase):
    def test_writers(self):
        inst = instance(1, 2, N=64)
        terms = [voronoi.DivisorTerm(d=d, modulus=2 // d, X=8.0 / (d * d * 10.0), n_cutoff=255, partial=0.5 + 0.25j,
                                     tail_estimate=1e-9, quadrature_error=1e-12, weil_ok=True) for d in (1, 2)]
        report = voronoi.IdentityReport(lhs=1.0 + 0.5j, rhs=1.0 + 0.5j, residual=0.0, divisors=terms,
                                        lhs_tail=1e-10, rhs_tail=2e-9, quadrature_error=2e-12)
        self.assertTrue(report.passed)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "identity.txt")
            voronoi.write_identity_report(path, inst, report)
            items = read_report(path)
            self.assertEqual(items["c"], "2")
            self.assertEqual(items["passed"], "1")
            self.assertEqual(float(items["rhs_im"]), 0.5)
            path = os.path.join(tmp, "divisors.csv")
            voronoi.write_divisor_csv(path, report)
            kind, header, rows = read_csv(path)
        self.assertEqual(kind, "voronoi-divisors")
        self.assertEqual(header, voronoi.DIVISOR_FIELDS)
        self.assertEqual([int(r["d"]) for r in rows], [1, 2])


@pytest.mark.slow
class test_identity(TestCase):
    def test_half(self):
        report = voronoi.identity_residual(instance(1, 2, T=10.0))
        self.assertLessEqual(report.residual, 1e-3)
        self.assertEqual([t.d for t in report.divisors], [1, 2])
        assert_allclose(sum(t.partial for t in report.divisors), report.rhs)
        self.assertTrue(all(t.weil_ok for t in report.divisors))
        self.assertEqual(report.divisors[0].modulus, 2)
        assert_allclose(report.divisors[1].X, 8.0 / (4 * 10.0))

    def test_third(self):
        report = voronoi.identity_residual(instance(1, 3, T=20.0))
        self.assertLessEqual(report.residual, 1e-3)

    def test_trivial_modulus(self):
        rhs, terms = voronoi.rhs_sum(instance(0, 1, T=10.0))
        self.assertEqual(len(terms), 1)
        self.assertEqual(terms[0].modulus, 1)
        assert_allclose(rhs, terms[0].partial)

    def test_doubled_height(self):
        inst = instance(1, 3, T=10.0)
        taller = voronoi.VoronoiInstance(inst.table, 1, 1, 3, inst.T, inst.fam, inst.line.doubled())
        self.assertEqual(taller.line.H, 2 * inst.line.H)
        base, terms = voronoi.rhs_sum(inst)
        doubled, _ = voronoi.rhs_sum(taller)
        self.assertLessEqual(abs(doubled - base), sum(t.quadrature_error for t in terms) + 1e-12 * abs(base))

    def test_cutoff_doubling(self):
        inst = instance(2, 3, q=2, T=10.0)
        coarse, coarse_terms = voronoi.rhs_sum(inst, tol=1e-3)
        fine, _ = voronoi.rhs_sum(inst, tol=1e-6)
        self.assertLessEqual(abs(fine - coarse), sum(t.tail_estimate for t in coarse_terms) + 1e-12)

    def test_scaling_invariance(self):
        base = voronoi.identity_residual(instance(1, 2, T=10.0, eta=1))
        scaled = voronoi.identity_residual(instance(1, 2, T=10.0, eta=1, kappa=2.5))
        assert_allclose(scaled.lhs, 2.5 * base.lhs, rtol=1e-10)
        assert_allclose(scaled.rhs, 2.5 * base.rhs, rtol=1e-10)
        assert_allclose(scaled.residual, base.residual, rtol=1e-6, atol=1e-12)

    def test_matrix(self):
        cells = voronoi.instance_matrix(sym2_table(1 << 15), Ts=(10.0, 20.0), profile="gaussian")
        self.assertEqual(len(cells), 3 * 2 * 2 * 2 * 2)
        checked = [r for r in cells.values() if r is not None and not r.excluded]
        self.assertTrue(checked)
        for report in checked:
            self.assertLessEqual(report.residual, 1e-3)

    def test_calibration(self):
        ranked = voronoi.calibrate_embedding(sym2_table(1 << 15), T=10.0)
        self.assertEqual(len(ranked), 6)
        best, residual = ranked[0]
        self.assertEqual(best.lambdas, (0j, -11 + 0j, 11 + 0j))
        self.assertEqual(best.deltas, (1, 0, 1))
        self.assertLessEqual(residual, 1e-3)


@pytest.mark.slow
class test_rhs_scaling(TestCase):
    def test_slopes(self):
        T_grid = twisted_sums.dyadic_grid(16, 1024)
        requested = []

        def table_for(N):
            requested.append(N)
            return sym2_table(1 << (N - 1).bit_length())

        for alpha in ((math.sqrt(5.0) - 1.0) / 2.0, math.sqrt(2.0) - 1.0, Fraction(1, 3)):
            fit = voronoi.rhs_scaling_experiment(sym2_table(1 << 17), alpha, T_grid, table_for=table_for)
            self.assertLessEqual(fit.slope, 0.85, "alpha {0}: slope {1}".format(alpha, fit.slope))
            self.assertEqual(len(fit.magnitudes), len(T_grid))
            self.assertEqual(fit.excluded, [])
        self.assertTrue(all(N > 1 << 17 for N in requested))

    def test_bump_matrix_with_alpha(self):
        alpha = (math.sqrt(5.0) - 1.0) / 2.0
        cells = voronoi.instance_matrix(sym2_table(1 << 15), pairs=((1, 2),), qs=(1,), Ts=(10.0,),
                                        etas=(0,), omegas=(0,), alpha=alpha)
        self.assertEqual(len(cells), 2)
        assert_allclose(sorted(key[-1] for key in cells), [0.0, 10.0 * abs(alpha - 2.0 / 3.0)])
        for report in cells.values():
            if report is not None and not report.excluded:
                self.assertLessEqual(report.residual, 1e-3)
