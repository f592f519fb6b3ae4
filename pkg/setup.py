from setuptools import setup, find_packages

setup(
    name="cocycle_lab",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "pandas>=1.5",
        "matplotlib",
        "joblib",
        "tqdm",
        "psutil",
    ],
    entry_points={
        "console_scripts": [
            "cocycle-lab=src.processing.cli:main",
        ],
    },
    python_requires=">=3.9",
    description="Finite-scale laboratory for SL(2,R) cocycles and Schroedinger operators over subshifts",
    author="Cocycle Lab Team",
    author_email="cocycle-lab@example.com",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
    ],
)
