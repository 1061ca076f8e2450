#!/usr/bin/env python3
"""
pi-separation - source-channel separation over phase-incoherent multi-user channels

Setup script for PyPI packaging.
"""

from setuptools import setup, find_packages
import os

# Read README for long description
this_directory = os.path.abspath(os.path.dirname(__file__))
with open(os.path.join(this_directory, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

setup(
    name="pi-separation",
    version="1.0.0",
    author="The Aetherial Team",
    author_email="realmselection@gmail.com",
    description="Source-channel separation tools for phase-incoherent multi-user Gaussian channels",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(include=["pisep", "pisep.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Information Analysis",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords="information-theory multiple-access relay interference slepian-wolf phase-fading simulation cli",
    python_requires=">=3.8",
    install_requires=[
        "PyYAML>=6.0",
        "rich>=13.0.0",
        "numpy>=1.22",
        "scipy>=1.9",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-cov>=4.0.0",
            "black>=22.0.0",
            "flake8>=4.0.0",
            "mypy>=0.950",
        ],
    },
    entry_points={
        "console_scripts": [
            "pi-sep=pisep.cli:main",
            "pisep=pisep.cli:main",  # Short alias
        ],
    },
    include_package_data=True,
    zip_safe=False,
)
