import os

from .errors import ConfigError

# Defaults; every one of them can be overridden through the environment.
DEFAULT_MAX_ORDER = 2          # n0 = 6k+6 = 18 at the guard
DEFAULT_SERIES_SLACK = 4
DEFAULT_SLACK_RETRIES = 3
DEFAULT_THREADS = 1
DEFAULT_PRECISION = "double"
DEFAULT_EXTENDED_DPS = 50
DEFAULT_ENUMERATION_BUDGET = 2 ** 17   # n <= 16 for a binary alphabet
DEFAULT_AGREEMENT_TOLERANCE = 1e-9

PRECISIONS = ("double", "extended")


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")


def get_max_order() -> int:
    """
    Get the guard on the expansion order k.

    The sequence tree grows roughly as A^(6k+6) before pruning, so large
    orders are refused unless 'HMM_ENTROPY_MAX_K' raises the guard.
    """
    return _int_env("HMM_ENTROPY_MAX_K", DEFAULT_MAX_ORDER)


def get_series_slack() -> int:
    """
    Get the truncation slack S used for the working length L = 2k+2+S.

    Overridden via 'HMM_ENTROPY_SLACK'.
    """
    return _int_env("HMM_ENTROPY_SLACK", DEFAULT_SERIES_SLACK)


def get_slack_retries() -> int:
    """Number of slack doublings attempted after truncation starvation."""
    return _int_env("HMM_ENTROPY_SLACK_RETRIES", DEFAULT_SLACK_RETRIES)


def get_thread_count() -> int:
    """
    Get the worker cap for subtree-parallel traversal.

    Set 'HMM_ENTROPY_THREADS'; the command line '--threads' flag writes
    the same variable.
    """
    return max(1, _int_env("HMM_ENTROPY_THREADS", DEFAULT_THREADS))


def get_real_precision() -> str:
    """
    Get the arithmetic used for real-valued series coefficients.

    'double' uses Python floats, 'extended' uses mpmath at
    get_extended_dps() decimal digits.
    """
    value = os.getenv("HMM_ENTROPY_PRECISION", DEFAULT_PRECISION).strip().lower()
    if value not in PRECISIONS:
        raise ConfigError(f"HMM_ENTROPY_PRECISION must be one of {PRECISIONS}, got {value!r}")
    return value


def get_extended_dps() -> int:
    return _int_env("HMM_ENTROPY_DPS", DEFAULT_EXTENDED_DPS)


def get_enumeration_budget() -> int:
    """Maximum number of leaves A^(n+1) an exact numeric H_n may visit."""
    return _int_env("HMM_ENTROPY_MAX_LEAVES", DEFAULT_ENUMERATION_BUDGET)


def get_agreement_tolerance() -> float:
    raw = os.getenv("HMM_ENTROPY_TOLERANCE")
    if not raw:
        return DEFAULT_AGREEMENT_TOLERANCE
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"HMM_ENTROPY_TOLERANCE must be a number, got {raw!r}")


def get_bootstrap_config() -> dict:
    """
    Get the Monte Carlo block-bootstrap parameters.
    """
    return {
        "resamples": 200,
        # block length is floor(sqrt(N))
        "block_exponent": 0.5,
    }
