#!/usr/bin/env python3
"""
Smooth Entropy Library

Shared configuration, numeric tolerances, error types and logging used by the
linear-algebra kernels, the SDP engine, the entropy programs, the verification
suites and the command-line frontend.
"""

import os
import sys
import logging
from dataclasses import dataclass, replace, fields
from typing import Any, Dict, Optional


# =============================================================================
# ENVIRONMENT CONFIGURATION
# =============================================================================

def is_ci_environment() -> bool:
    """Check if running in a CI environment"""
    ci_indicators = [
        'CI',              # Generic CI indicator
        'GITHUB_ACTIONS',  # GitHub Actions
        'GITLAB_CI',       # GitLab CI
        'BUILDKITE',       # Buildkite
        'TF_BUILD'         # Azure DevOps
    ]

    return any(os.getenv(indicator) for indicator in ci_indicators)


def load_env_file(env_file: str = ".env") -> None:
    """Load environment variables from .env file if it exists.

    Variables already present in the environment win over the file.
    """
    if not os.path.exists(env_file):
        return
    with open(env_file, 'r') as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith('#') and '=' in line:
                key, value = line.split('=', 1)
                key = key.strip()
                value = value.strip().strip('"\'')
                os.environ.setdefault(key, value)


# =============================================================================
# CONSTANTS AND CONFIGURATION
# =============================================================================

@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances shared by every module.

    Tests tighten or loosen them uniformly with ``TOLERANCES.replace(...)``.
    """

    # linalg
    hermitian: float = 1e-12
    eig_residual: float = 1e-10
    psd_clamp: float = 1e-12
    sqrt_psd: float = 1e-10
    jacobi_sweeps: int = 100

    # quantum
    state_psd: float = 1e-10
    trace_slack: float = 1e-12
    channel: float = 1e-10
    rank: float = 1e-12

    # sdp
    sdp_gap: float = 1e-8
    sdp_feasibility: float = 1e-8
    sdp_psd: float = 1e-9
    sdp_max_iterations: int = 200
    sdp_regularization: float = 1e-12
    sdp_step_fraction: float = 0.98
    sdp_divergence: float = 1e8
    sdp_rank: float = 1e-10
    sdp_weak_duality: float = 1e-9
    sdp_step_backoff: float = 0.5
    sdp_backoff_attempts: int = 40
    sdp_relaxed_factor: float = 5.0

    # entropy
    witness: float = 1e-7
    ball_slack: float = 1e-6
    log_floor: float = 1e-300

    def replace(self, **changes: Any) -> "Tolerances":
        """Return a copy with some tolerances changed"""
        return replace(self, **changes)

    def as_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


TOLERANCES = Tolerances()


class EntropyConfig:
    """Project configuration constants"""

    THREADS_ENV_VAR = "SMOOTH_ENTROPY_THREADS"
    DEFAULT_THREADS = 4

    STATE_FILE_VERSION = 1
    REPORT_FORMAT_VERSION = 1

    # Output formatting
    VALUE_FORMAT = "{:.12f}"
    REPORT_FLOAT_FORMAT = "{:.6e}"

    # Verification defaults
    DEFAULT_SEED = 42
    NEAR_VIOLATION_FACTOR = 10.0
    MAX_SDP_DIMENSION = 64

    # Tolerance tiers for the verification suites
    TIER_LINEAR_ALGEBRA = 1e-8
    TIER_SINGLE_SDP = 1e-5
    TIER_NESTED_ORACLE = 1e-3

    @staticmethod
    def get_thread_count() -> int:
        """Get the suite thread count, honoring the environment override"""
        raw = os.getenv(EntropyConfig.THREADS_ENV_VAR)
        if not raw:
            return EntropyConfig.DEFAULT_THREADS
        try:
            count = int(raw)
        except ValueError:
            raise ContractViolation(
                f"{EntropyConfig.THREADS_ENV_VAR} must be a positive integer, got {raw!r}")
        if count < 1:
            raise ContractViolation(
                f"{EntropyConfig.THREADS_ENV_VAR} must be a positive integer, got {raw!r}")
        return count


# =============================================================================
# ERRORS
# =============================================================================

class EntropyError(Exception):
    """Base class for every error raised by the library"""

    reason = "error"
    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def one_line(self) -> str:
        """Machine-parsable single line for stderr"""
        text = " ".join(self.message.split())
        return f"error={self.reason} message={text}"


class ContractViolation(EntropyError):
    """Input violates an operation's contract"""
    reason = "contract-violation"
    exit_code = 3


class LayoutError(ContractViolation):
    """Unknown label, duplicate label or dimension mismatch"""
    reason = "layout"


class NotPSDError(ContractViolation):
    """Operator has an eigenvalue below the PSD tolerance"""
    reason = "not-psd"


class InsufficientDimensionError(ContractViolation):
    """A purifying or target space is too small"""
    reason = "insufficient-dimension"


class PreconditionError(ContractViolation):
    """A documented precondition does not hold"""
    reason = "precondition"


class NumericalFailure(EntropyError):
    """Iterative method failed to reach its tolerance"""
    reason = "numerical-failure"
    exit_code = 4

    @property
    def residual(self) -> Optional[float]:
        return self.details.get("residual")


class StateFileError(EntropyError):
    """Malformed state or channel file"""
    reason = "malformed-file"
    exit_code = 2


# =============================================================================
# LOGGING AND OUTPUT
# =============================================================================

class Colors:
    """ANSI color codes for terminal output"""
    RED = '\033[0;31m'
    GREEN = '\033[0;32m'
    YELLOW = '\033[1;33m'
    BLUE = '\033[0;34m'
    BOLD = '\033[1m'
    NC = '\033[0m'  # No Color


def _colors_enabled(stream) -> bool:
    if is_ci_environment():
        return False
    return hasattr(stream, "isatty") and stream.isatty()


class EntropyLogger:
    """Colored logging on stderr; stdout is reserved for command records"""

    def __init__(self, name: str = "smooth_entropy", level: int = logging.INFO):
        self.logger = logging.getLogger(name)
        if self.logger.level == logging.NOTSET:
            self.logger.setLevel(level)

        # Create console handler if not already exists
        if not self.logger.handlers:
            handler = logging.StreamHandler(sys.stderr)
            handler.setFormatter(logging.Formatter('%(message)s'))
            self.logger.addHandler(handler)
            self.logger.propagate = False

    def _tag(self, color: str, tag: str) -> str:
        if _colors_enabled(sys.stderr):
            return f"{color}[{tag}]{Colors.NC}"
        return f"[{tag}]"

    def set_level(self, level: int) -> None:
        self.logger.setLevel(level)

    def debug(self, message: str):
        """Log debug message (library internals)"""
        self.logger.debug(f"[DEBUG] {message}")

    def info(self, message: str):
        """Log info message with blue tag"""
        self.logger.info(f"{self._tag(Colors.BLUE, 'INFO')} {message}")

    def success(self, message: str):
        """Log success message with green tag"""
        self.logger.info(f"{self._tag(Colors.GREEN, 'SUCCESS')} {message}")

    def warning(self, message: str):
        """Log warning message with yellow tag"""
        self.logger.warning(f"{self._tag(Colors.YELLOW, 'WARNING')} {message}")

    def error(self, message: str):
        """Log error message with red tag"""
        self.logger.error(f"{self._tag(Colors.RED, 'ERROR')} {message}")

    def step(self, message: str):
        """Log step header with formatting"""
        self.logger.info("")
        self.logger.info("=" * 60)
        if _colors_enabled(sys.stderr):
            self.logger.info(f"{Colors.BOLD}{Colors.BLUE}{message}{Colors.NC}")
        else:
            self.logger.info(message)
        self.logger.info("=" * 60)


def set_log_level(level: int, prefix: str = "smooth_entropy") -> None:
    """Apply ``level`` to every project logger created so far"""
    for name in list(logging.Logger.manager.loggerDict):
        if name == prefix or name.startswith(prefix + "."):
            logging.getLogger(name).setLevel(level)
