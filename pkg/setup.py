from setuptools import setup, find_packages

setup(
    name="hmm-entropy",
    version="0.1.0",
    description="Asymptotic entropy-rate expansions of hidden Markov chains near weak Black Holes",
    author="Arbaz Pathan",
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",        # numeric oracles
        "numba>=0.56",        # Monte Carlo path sampler and forward recursion
        "mpmath>=1.2",        # extended-precision real coefficients
    ],
    extras_require={
        "test": ["pytest>=7", "hypothesis>=6"],
    },
    # The 'hmm-entropy' launcher in the root folder is installed as an executable
    scripts=[
        "hmm-entropy",
    ],
)
