""" Tests for app configuration capabilities """
import os.path
import tempfile
import unittest
from unittest import mock

from tridiag_invit import create_app


class ConfigTest(unittest.TestCase):
    """ Tests for app configuration capabilities """

    def test_default_testing_mode(self):
        """ By default, app should be created with testing set to False """
        with tempfile.TemporaryDirectory() as temp_instance_dir:
            app = create_app(instance_path=temp_instance_dir)
            self.assertFalse(app.testing)

    def test_testing_mode_argument(self):
        """ App test mode should be settable through config argument """

        for testing_enabled in (False, True):
            with self.subTest(testing_enabled=testing_enabled):
                app = create_app({"TESTING": testing_enabled})
                self.assertEqual(app.testing, testing_enabled)

    def test_experiment_defaults(self):
        """ Defaults describe a verified-size type2 run of the packed backend """
        app = create_app({"TESTING": True})

        self.assertEqual(app.config["FAMILY"], "type2")
        self.assertEqual(app.config["N"], 100)
        self.assertEqual(app.config["BLOCKS"], 5)
        self.assertEqual(app.config["DELTA"], 1e-4)
        self.assertEqual(app.config["BACKEND"], "cwy_packed")
        self.assertEqual(app.config["MAX_ITERS"], 5)
        self.assertIsNone(app.config["TOL"])
        self.assertFalse(app.config["VERIFY"])

    def test_config_file(self):
        """ Settings should be readable from config file in instance path """

        for testing_enabled in (False, True):
            with tempfile.TemporaryDirectory() as temp_instance_dir:
                temp_config_path = os.path.join(temp_instance_dir, "config.py")
                with open(temp_config_path, mode='w', encoding="utf-8") as temp_config_file:
                    temp_config_file.write(f"TESTING = {testing_enabled}\nN = 42\n")

                with self.subTest(testing_enabled=testing_enabled):
                    app = create_app(instance_path=temp_instance_dir)
                    self.assertEqual(app.testing, testing_enabled)
                    self.assertEqual(app.config["N"], 42)

    def test_thread_count_from_environment(self):
        """ TRIDIAG_THREADS sets the default thread count """
        with mock.patch.dict(os.environ, {"TRIDIAG_THREADS": "3"}):
            app = create_app({"TESTING": True})
        self.assertEqual(app.config["THREADS"], 3)

        with mock.patch.dict(os.environ, {"TRIDIAG_THREADS": "3"}):
            app = create_app({"TESTING": True, "THREADS": 2})
        self.assertEqual(app.config["THREADS"], 2)

    def test_invalid_thread_count_in_environment(self):
        """ A TRIDIAG_THREADS that is not a positive integer falls back to 1 thread """
        for value in ("many", "", "0", "-2", "2.5"):
            with self.subTest(value=value):
                with mock.patch.dict(os.environ, {"TRIDIAG_THREADS": value}):
                    with self.assertLogs("tridiag_invit", level="WARNING"):
                        app = create_app({"TESTING": True})
                self.assertEqual(app.config["THREADS"], 1)

    def test_commands_registered(self):
        """ The experiment commands are registered on the app """
        app = create_app({"TESTING": True})
        for name in ("run", "compare", "sweep"):
            with self.subTest(name=name):
                self.assertIn(name, app.cli.commands)
