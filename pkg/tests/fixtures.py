""" Test fixtures to provide easier setup and tear down of matrices and the application """

import contextlib
import os
import tempfile
import unittest

import numpy as np
from click.testing import Result
from tridiag_invit import create_app
from tridiag_invit.tridiag import EPS, SymTridiagonal


class NumericTestFixture(unittest.TestCase):
    """ Fixture providing a seeded generator and matrix builders """

    seed = 20240607

    def setUp(self):
        self.rng = np.random.default_rng(self.seed)

    def random_tridiagonal(self, n: int) -> SymTridiagonal:
        """ Symmetric tridiagonal matrix with standard normal entries """
        return SymTridiagonal(self.rng.standard_normal(n), self.rng.standard_normal(n - 1))

    def random_orthonormal(self, n: int, m: int) -> np.ndarray:
        """ n x m matrix with orthonormal columns """
        q, _ = np.linalg.qr(self.rng.standard_normal((n, m)))
        return q

    def conditioned_vectors(self, n: int, m: int, kappa: float) -> np.ndarray:
        """ n x m matrix with 2-norm condition number kappa """
        singular_values = np.logspace(0.0, -np.log10(kappa), m)
        return (self.random_orthonormal(n, m) * singular_values) @ self.random_orthonormal(m, m).T

    def assertOrthonormal(self, q: np.ndarray, tol: float):
        """ max |Q^T Q - I| <= tol """
        deviation = np.max(np.abs(q.T @ q - np.eye(q.shape[1])))
        self.assertLessEqual(deviation, tol)

    def assertSameColumnsUpToSign(self, a: np.ndarray, b: np.ndarray, tol: float):
        """ Every column of a equals the matching column of b or its negative """
        signs = np.where(np.sum(a * b, axis=0) < 0.0, -1.0, 1.0)
        self.assertLessEqual(np.max(np.abs(a - b * signs)), tol)

    @staticmethod
    def unit_roundoff_bound(n: int, factor: float = 100.0) -> float:
        """ factor * n * eps """
        return factor * n * EPS


class AppTestFixture(unittest.TestCase):
    """ Fixture to provide an app instance in testing mode writing into a temporary directory """

    def setUp(self):
        with contextlib.ExitStack() as stack:
            self.temp_dir = stack.enter_context(tempfile.TemporaryDirectory())
            self.addCleanup(stack.pop_all().close)

        self.output_path = os.path.join(self.temp_dir, "results.csv")

        self.app = create_app(
            {
                "TESTING": True,
                "OUTPUT_PATH": self.output_path,
                "THREADS": 1,
            },
            instance_path=os.path.join(self.temp_dir, "instance"),
        )

    def invoke(self, *args) -> Result:
        """ Helper function to run a cli command """
        runner = self.app.test_cli_runner()
        return runner.invoke(args=[str(arg) for arg in args])

    def write_config(self, text: str) -> str:
        """ Helper function to write a settings file for --config """
        path = os.path.join(self.temp_dir, "settings.py")
        with open(path, mode="w", encoding="utf-8") as config_file:
            config_file.write(text)
        return path

    def read_csv_lines(self) -> list:
        """ Lines of the results file """
        with open(self.output_path, encoding="utf-8") as csv_file:
            return csv_file.read().splitlines()
