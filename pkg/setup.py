from setuptools import setup, find_packages


setup(
    name="parrondo-lattice",
    version="0.1.0",
    description="Exact and simulated mean and variance of 2-D spatially dependent Parrondo games",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "click>=8.2",
        "loguru",
        "pydantic>=2",
        "PyYAML",
        "numpy>=1.24",
        "scipy>=1.12",
        "numba>=0.58",
    ],
    entry_points={
        "console_scripts": [
            "parrondo=parrondo.cli:main",
        ]
    },
    python_requires=">=3.10",
)
