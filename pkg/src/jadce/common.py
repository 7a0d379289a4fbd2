"""Shared solver plumbing: stopping rule, result container, flop accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Numerical floors for the empirical error estimates.  These are applied in
# the solver's internal units, where the average channel slab variance is
# normalized to 1 (see `rescale_problem`), so 1e-12 is ~120 dB below the
# typical signal level.
V_FLOOR = 1e-12
TAU_FLOOR = 1e-12
C_GAP_FLOOR = 1e-12
OMEGA_EPS = 1e-12
EPS_DEGENERATE = 1e-14


class ConfigError(ValueError):
    """Invalid configuration or experiment plan."""


@dataclass
class StoppingRule:
    """Iteration budget and relative-change tolerance shared by all solvers."""

    max_iters: int = 50
    tol: float = 1e-5

    def validate(self):
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")


class FlopCounter:
    """Analytic floating-point operation tally.

    Solvers report the dominant linear-algebra costs through `add`; a complex
    m-by-k times k-by-n product is charged 8*m*k*n real flops, elementwise
    passes are charged per entry by the caller.  `end_iteration` snapshots
    the per-iteration totals so scaling tests can fit flops against problem
    dimensions.
    """

    def __init__(self):
        self.total = 0
        self.setup = 0
        self.per_iteration = []
        self._iter_mark = 0
        self._in_iterations = False

    def add(self, flops: int):
        self.total += int(flops)

    def add_gemm(self, m: int, k: int, n: int):
        self.total += 8 * m * k * n

    def end_setup(self):
        self.setup = self.total
        self._iter_mark = self.total
        self._in_iterations = True

    def end_iteration(self):
        self.per_iteration.append(self.total - self._iter_mark)
        self._iter_mark = self.total


class _NullCounter:
    def add(self, flops):
        pass

    def add_gemm(self, m, k, n):
        pass

    def end_setup(self):
        pass

    def end_iteration(self):
        pass


NULL_COUNTER = _NullCounter()


@dataclass
class SolverDiagnostics:
    """Per-run traces useful for debugging and for the property tests."""

    residual_trace: list = field(default_factory=list)   # relative change of s per iteration
    v2_history: list = field(default_factory=list)       # per-iteration (M,) arrays
    tau2_history: list = field(default_factory=list)
    trace_norm_dev: float = 0.0      # max |tr(W P)/((T+1)N) - 1| over all LE calls
    c_clamp_count: int = 0           # times tau^2 - psi_bar hit the positivity floor
    alpha_fallbacks: int = 0         # MAMP: degenerate denominators in the weight solve
    abort_reason: str = ""


@dataclass
class SolverResult:
    """Output of one solver run on one received-signal block.

    `H_hat` is the (T+1)N x M posterior-mean channel estimate, `omega` the
    N x (T+1) activity/delay belief used by the detector.  `diverged` marks
    trials aborted on non-finite iterates; such results carry all-zero
    estimates and are scored as total failures.
    """

    H_hat: np.ndarray
    omega: np.ndarray
    iterations: int
    converged: bool
    diverged: bool = False
    diagnostics: SolverDiagnostics = field(default_factory=SolverDiagnostics)


def rescale_problem(Y, beta, noise_var_eff):
    """Normalize signal units so the mean slab variance is 1.

    Physical large-scale fading coefficients are ~1e-13 in linear units; the
    absolute numerical floors above would swamp them.  Dividing the received
    signal by sqrt(mean(beta)) is a pure reparameterization (all estimators
    are scale-equivariant) that puts channel entries at O(1).
    Returns (Y_scaled, beta_scaled, noise_var_scaled, scale).
    """
    scale = float(np.mean(beta))
    if not scale > 0:
        raise ValueError("large-scale fading coefficients must be positive")
    return Y / np.sqrt(scale), beta / scale, noise_var_eff / scale, scale


def relative_change(s_next, s_prev) -> float:
    """Relative squared change of the stacked iterate; +inf when s_prev = 0."""
    denom = float(np.sum(np.abs(s_prev) ** 2))
    if denom == 0.0:
        return np.inf
    return float(np.sum(np.abs(s_next - s_prev) ** 2)) / denom
