#!/usr/bin/env python3
"""
Setup script for trigzeros package.
"""

from setuptools import setup, find_packages
import os

# Read long description from README if available
long_description = "Zeros of random trigonometric polynomials"
if os.path.exists("README.md"):
    with open("README.md", "r", encoding="utf-8") as fh:
        long_description = fh.read()

setup(
    name="trigzeros",
    version="0.1.0",
    author="trigzeros development team",
    description="Zeros of random trigonometric polynomials",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "PyYAML>=5.4.0",
        "sympy>=1.9",
    ],
    extras_require={
        "dev": [
            "pytest>=6.0",
            "pytest-cov>=2.10",
        ]
    },
    entry_points={
        "console_scripts": [
            "rtpz=trigzeros.cli:main",
        ],
    },
    include_package_data=True,
    package_data={
        "trigzeros": [
            "config/*.json",
            "config/*.yaml",
        ],
    },
)
