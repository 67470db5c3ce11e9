import os
from setuptools import setup, find_packages

here = os.path.dirname(os.path.abspath(__file__))
version = {}
with open(os.path.join(here, "gl3v", "versionString.py")) as f:
    exec(f.read(), version)

setup(
    name="gl3v",
    version=version["vstr"],
    description="Numerical GL(3) Voronoi summation and additively twisted sum experiments",
    packages=find_packages(),
    python_requires=">=3.8",
    install_requires=["numpy", "scipy", "joblib"],
    extras_require={"test": ["pytest", "mpmath", "hypothesis"]},
    scripts=["gl3v_cli.py", "merge_sweeps.py"],
    entry_points={"console_scripts": ["gl3v = gl3v.harness:main"]},
)
