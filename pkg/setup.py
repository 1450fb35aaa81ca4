#!/usr/bin/env python

from os.path import exists
from setuptools import setup, find_packages

extras_require = {
    "distributed": ["distributed>=2021.01.1"],
}
extras_require["all"] = set(pkg for pkgs in extras_require.values() for pkg in pkgs)

setup(
    name="smd-sim",
    version="0.1.0",
    description="Cycle level simulation of self-managing DRAM and its maintenance mechanisms",
    keywords="dram,refresh,rowhammer,memory,simulation",
    license="BSD",
    packages=find_packages(exclude=["examples", "examples.*"]),
    include_package_data=True,
    package_data={
        "smd_sim": ["smdsim.yaml"],
        "smd_sim.experiment": ["templates/*.j2"],
    },
    long_description=(open("README.rst").read() if exists("README.rst") else ""),
    long_description_content_type="text/x-rst",
    zip_safe=False,
    install_requires=list(open("requirements.txt").read().strip().split("\n")),
    extras_require=extras_require,
    entry_points="""
    [console_scripts]
    smdsim=smd_sim.cli.smdsim:go
    """,
    python_requires=">=3.10",
)
