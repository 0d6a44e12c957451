""" Inverse iteration for symmetric tridiagonal eigenvectors with compact WY reorthogonalization """

import os

from flask import Flask


def default_thread_count(app: Flask) -> int:
    """ TRIDIAG_THREADS from the environment, 1 when unset or not a positive integer """
    value = os.environ.get("TRIDIAG_THREADS")
    if value is None:
        return 1
    try:
        threads = int(value)
    except ValueError:
        threads = 0
    if threads < 1:
        app.logger.warning("Ignoring TRIDIAG_THREADS=%r, using 1 thread", value)
        return 1
    return threads


def create_app(test_config=None, instance_path=None):
    """ create and configure the app holding the experiment settings and commands """
    app = Flask(
        __name__,
        instance_relative_config=True,
        instance_path=instance_path
    )

    app.config.from_mapping(
        FAMILY="type2",
        N=100,
        BLOCKS=5,
        DELTA=1e-4,
        SEED=1,
        BACKEND="cwy_packed",
        THREADS=default_thread_count(app),
        TOL=None,
        MAX_ITERS=5,
        GROWTH_THRESHOLD=None,
        PERTURB_FACTOR=1.0,
        OUTPUT_PATH="results.csv",
        VERIFY=False,
    )

    if test_config is None:
        app.config.from_pyfile("config.py", silent=True)
    else:
        app.config.from_mapping(test_config)

    try:
        os.makedirs(app.instance_path)
    except OSError:
        pass

    from .cli import add_cli_commands
    add_cli_commands(app)

    return app
