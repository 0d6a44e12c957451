from setuptools import find_packages, setup

setup(
    name="tridiag_invit",
    version="1.0.0",
    packages=find_packages(exclude=["tests"]),
    include_package_data=True,
    zip_safe=False,
    install_requires=[
        "flask",
        "numba",
        "numpy",
        "scipy",
    ],
    entry_points={
        "console_scripts": [
            "tridiag-bench=tridiag_invit.cli:main",
        ],
    },
)
