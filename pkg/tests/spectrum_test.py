""" Tests for Sturm counts and bisection """
from typing import NamedTuple

import numpy as np
from fixtures import NumericTestFixture
from tridiag_invit.matgen import gen_glued_wilkinson, gen_type2
from tridiag_invit.spectrum import (ToleranceError, bisect_eigenvalues, default_tolerance,
                                    gershgorin_interval, sturm_count)
from tridiag_invit.tridiag import EPS, SymTridiagonal


class SturmCountTest(NumericTestFixture):
    """ Tests for sturm_count """

    def test_known_counts(self):
        """ Counts of small matrices, an eigenvalue on x is not counted """

        class Case(NamedTuple):
            diag: list
            offdiag: list
            x: float
            expected: int

        cases = [
            Case(diag=[1.0, 1.0, 1.0], offdiag=[1.0, 1.0], x=1.0, expected=1),
            Case(diag=[1.0, 1.0, 1.0], offdiag=[1.0, 1.0], x=-1.0, expected=0),
            Case(diag=[1.0, 1.0, 1.0], offdiag=[1.0, 1.0], x=3.0, expected=3),
            Case(diag=[2.0], offdiag=[], x=2.5, expected=1),
            Case(diag=[2.0], offdiag=[], x=2.0, expected=0),
            Case(diag=[0.0, 0.0], offdiag=[0.0], x=0.0, expected=0),
        ]

        for case in cases:
            with self.subTest(case=case):
                matrix = SymTridiagonal(case.diag, case.offdiag)
                self.assertEqual(sturm_count(matrix, case.x), case.expected)

    def test_matches_dense_eigenvalues(self):
        """ Counts agree with a dense solver at points away from the spectrum """
        matrix = self.random_tridiagonal(60)
        eigenvalues = np.linalg.eigvalsh(matrix.to_dense())

        for x in np.linspace(eigenvalues[0] - 1.0, eigenvalues[-1] + 1.0, 97):
            if np.min(np.abs(eigenvalues - x)) < 1e-8:
                continue
            with self.subTest(x=x):
                self.assertEqual(sturm_count(matrix, x), int(np.sum(eigenvalues < x)))

    def test_monotone_between_gershgorin_bounds(self):
        """ Counts rise from 0 to n across the Gershgorin interval """
        matrix = self.random_tridiagonal(40)
        low, high = gershgorin_interval(matrix)
        counts = [sturm_count(matrix, x) for x in np.linspace(low, high, 301)]

        self.assertEqual(counts[0], 0)
        self.assertEqual(counts[-1], matrix.n)
        self.assertTrue(all(a <= b for a, b in zip(counts, counts[1:])))

    def test_non_finite_point(self):
        """ Infinite points are rejected """
        with self.assertRaises(ValueError):
            sturm_count(gen_type2(4), np.inf)


class BisectionTest(NumericTestFixture):
    """ Tests for bisect_eigenvalues """

    def test_type2_closed_form(self):
        """ Eigenvalues of the all-ones tridiagonal are 1 + 2 cos(k pi / (n + 1)) """
        for n in (1, 3, 100, 500):
            with self.subTest(n=n):
                matrix = gen_type2(n)
                estimates = bisect_eigenvalues(matrix)
                k = np.arange(1, n + 1)
                exact = np.sort(1.0 + 2.0 * np.cos(k * np.pi / (n + 1)))
                tol = default_tolerance(matrix)

                self.assertEqual(len(estimates), n)
                self.assertLessEqual(np.max(estimates.half_widths), tol)
                self.assertLessEqual(np.max(np.abs(estimates.values - exact)), 2.0 * tol)

    def test_random_matrix_against_dense(self):
        """ Bisection agrees with a dense solver on a random matrix """
        matrix = self.random_tridiagonal(150)
        estimates = bisect_eigenvalues(matrix)
        exact = np.linalg.eigvalsh(matrix.to_dense())

        self.assertTrue(np.all(np.diff(estimates.values) >= 0.0))
        self.assertLessEqual(
            np.max(np.abs(estimates.values - exact)), 2.0 * default_tolerance(matrix))

    def test_smallest_m_only(self):
        """ Only the m smallest eigenvalues are returned """
        matrix = self.random_tridiagonal(50)
        estimates = bisect_eigenvalues(matrix, m=7, tol=1e-10)
        exact = np.linalg.eigvalsh(matrix.to_dense())[:7]

        self.assertEqual(estimates.m, 7)
        self.assertEqual(estimates.n, 50)
        np.testing.assert_allclose(estimates.values, exact, rtol=0, atol=2e-10)

    def test_repeated_eigenvalues(self):
        """ A decoupled matrix with equal diagonal entries has a multiple eigenvalue """
        matrix = SymTridiagonal([2.0, 2.0, 2.0, -1.0], [0.0, 0.0, 0.0])
        estimates = bisect_eigenvalues(matrix)
        np.testing.assert_allclose(estimates.values, [-1.0, 2.0, 2.0, 2.0], rtol=0, atol=1e-14)

    def test_invalid_arguments(self):
        """ Out of range counts and tolerances raise ValueError """
        matrix = gen_type2(5)

        class Case(NamedTuple):
            m: object
            tol: object

        for case in (Case(m=0, tol=None), Case(m=6, tol=None), Case(m=None, tol=0.0),
                     Case(m=None, tol=-1e-3)):
            with self.subTest(case=case):
                with self.assertRaises(ValueError):
                    bisect_eigenvalues(matrix, m=case.m, tol=case.tol)

    def test_intervals_enclose_an_eigenvalue(self):
        """ Each interval holds eigenvalue j: the count rises across it and it is no wider than tol """
        for matrix in (gen_glued_wilkinson(5), gen_type2(50), self.random_tridiagonal(80)):
            floor = default_tolerance(matrix)
            for tol in (None, floor, 10.0 * floor, 1e-9):
                estimates = bisect_eigenvalues(matrix, tol=tol)
                bound = floor if tol is None else tol
                with self.subTest(n=matrix.n, tol=tol):
                    self.assertLessEqual(np.max(estimates.half_widths), bound)
                    for j, (value, half_width) in enumerate(
                            zip(estimates.values, estimates.half_widths)):
                        below = sturm_count(matrix, value - half_width)
                        above = sturm_count(matrix, value + half_width)
                        self.assertLessEqual(below, j)
                        self.assertGreater(above, j)

    def test_tolerance_below_count_resolution(self):
        """ Tolerances finer than eps * ||T|| * n are rejected """
        matrix = gen_glued_wilkinson(5)
        for tol in (1e-14, 1e-16, 0.5 * default_tolerance(matrix)):
            with self.subTest(tol=tol):
                with self.assertRaises(ToleranceError):
                    bisect_eigenvalues(matrix, tol=tol)

    def test_zero_matrix(self):
        """ All eigenvalues of the zero matrix are 0 """
        estimates = bisect_eigenvalues(SymTridiagonal(np.zeros(4), np.zeros(3)))
        np.testing.assert_allclose(estimates.values, np.zeros(4), rtol=0, atol=4 * 4 * EPS)
