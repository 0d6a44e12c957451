""" Tests for the command line interface """
import os

from fixtures import AppTestFixture
from tridiag_invit.bench import CSV_FIELDS


class RunCommandTest(AppTestFixture):
    """ Tests for the run command """

    def test_verified_run(self):
        """ A verified run exits 0 and writes a header and a row """
        result = self.invoke("run", "--family", "type2", "--n", 30, "--backend", "cwy_packed",
                             "--verify")

        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("verification   passed", result.output)
        lines = self.read_csv_lines()
        self.assertEqual(lines[0], ",".join(CSV_FIELDS))
        self.assertTrue(lines[1].startswith("type2,30,cwy_packed,1,1,"))

    def test_rows_are_appended(self):
        """ Each run appends one row under a single header """
        for backend in ("mgs", "householder"):
            result = self.invoke("run", "--n", 20, "--backend", backend)
            self.assertEqual(result.exit_code, 0, result.output)

        lines = self.read_csv_lines()
        self.assertEqual(len(lines), 3)
        self.assertEqual(lines.count(",".join(CSV_FIELDS)), 1)

    def test_config_defaults_used(self):
        """ Without flags the app config decides the experiment """
        self.app.config.update(FAMILY="glued_wilkinson", BLOCKS=2, BACKEND="cwy_ordinary")
        result = self.invoke("run")

        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("glued_wilkinson n=42 backend=cwy_ordinary", result.output)

    def test_output_flag(self):
        """ --out redirects the CSV file """
        other_path = os.path.join(self.temp_dir, "other.csv")
        result = self.invoke("run", "--n", 10, "--out", other_path)

        self.assertEqual(result.exit_code, 0, result.output)
        self.assertTrue(os.path.exists(other_path))
        self.assertFalse(os.path.exists(self.output_path))

    def test_config_file(self):
        """ --config settings apply, and flags still win over them """
        path = self.write_config('FAMILY = "type1"\nN = 25\nSEED = 3\n')
        result = self.invoke("run", "--config", path, "--seed", 4)

        self.assertEqual(result.exit_code, 0, result.output)
        self.assertTrue(self.read_csv_lines()[1].startswith("type1,25,cwy_packed,1,4,"))

    def test_failed_verification_exits_1(self):
        """ Columns that cannot converge make verification fail """
        path = self.write_config("GROWTH_THRESHOLD = 1e300\nMAX_ITERS = 2\n")
        result = self.invoke("run", "--n", 15, "--verify", "--config", path)

        self.assertEqual(result.exit_code, 1, result.output)
        self.assertIn("FAILED", result.output)

    def test_unwritable_output_exits_1(self):
        """ A CSV path that cannot be written exits 1 """
        missing = os.path.join(self.temp_dir, "missing", "results.csv")
        result = self.invoke("run", "--n", 10, "--out", missing)
        self.assertEqual(result.exit_code, 1, result.output)

    def test_usage_errors_exit_2(self):
        """ Invalid flags exit 2 """
        cases = [
            ("run", "--threads", 0),
            ("run", "--family", "type7"),
            ("run", "--backend", "qr"),
            ("run", "--family", "glued_wilkinson", "--blocks", 2, "--delta", 2.0),
            ("run", "--n", 0),
        ]
        for args in cases:
            with self.subTest(args=args):
                self.assertEqual(self.invoke(*args).exit_code, 2)

    def test_malformed_config_file_exits_2(self):
        """ A settings file that does not load is a usage error """
        for text in ("FAMILY=type1\n", "N = (\n", "N = 1 / 0\n"):
            with self.subTest(text=text):
                result = self.invoke("run", "--config", self.write_config(text))
                self.assertEqual(result.exit_code, 2, result.output)
                self.assertIn("--config", result.output)

        result = self.invoke("run", "--config", self.write_config('FAMILY = "type7"\n'))
        self.assertEqual(result.exit_code, 2, result.output)

    def test_tolerance_errors_exit_2(self):
        """ Non-positive tolerances and tolerances below the count resolution exit 2 """
        for tol in (-1.0, 0.0, 1e-18):
            with self.subTest(tol=tol):
                result = self.invoke("run", "--n", 20, "--tol", tol)
                self.assertEqual(result.exit_code, 2, result.output)
        self.assertFalse(os.path.exists(self.output_path))

    def test_valid_tolerance(self):
        """ A tolerance above the resolution runs normally """
        result = self.invoke("run", "--n", 20, "--tol", 1e-10)
        self.assertEqual(result.exit_code, 0, result.output)


class CompareCommandTest(AppTestFixture):
    """ Tests for the compare and sweep commands """

    def test_compare_default_backends(self):
        """ compare defaults to mgs against cwy_packed """
        result = self.invoke("compare", "--n", 40)

        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("mgs", result.output)
        self.assertIn("cwy_packed", result.output)
        self.assertEqual(len(self.read_csv_lines()), 3)

    def test_compare_chosen_backends(self):
        """ compare runs the backends given with --backend """
        result = self.invoke("compare", "--family", "glued_wilkinson", "--blocks", 1,
                             "--backend", "cwy_ordinary", "--backend", "cwy_packed",
                             "--backend", "householder", "--verify")

        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("householder", result.output)
        self.assertNotIn("mgs", result.output)

    def test_compare_single_backend_rejected(self):
        """ compare needs at least two backends """
        result = self.invoke("compare", "--backend", "mgs")
        self.assertEqual(result.exit_code, 2)

    def test_sweep(self):
        """ sweep prints the ratio table and writes a row per run """
        result = self.invoke("sweep", "--n", 20, "--n", 30, "--threads", 2)

        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("t/t_cwy", result.output)
        self.assertEqual(len(self.read_csv_lines()), 5)

    def test_sweep_needs_sizes(self):
        """ sweep without --n is a usage error """
        self.assertEqual(self.invoke("sweep").exit_code, 2)
