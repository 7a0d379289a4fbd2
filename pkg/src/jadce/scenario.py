"""Synthesis of the asynchronous uplink: pilots, activity, delays, channels.

The sensing matrix stacks, for every user, all T+1 delayed copies of that
user's pilot; the effective channel is row-sparse on the same (user, delay)
grid.  Entry ordering is user-major: column n*(T+1)+t holds user n's pilot
delayed by t symbols, and the same index addresses row (n, t) of the
effective channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, db_to_linear


@dataclass
class ExpandedPilotMatrix:
    """Base pilots plus the delay-expanded sensing matrix."""

    base: np.ndarray       # (N, L_bar) complex
    P: np.ndarray          # (L, (T+1)N) complex
    max_delay: int

    @property
    def trace_gram(self) -> float:
        return float(np.sum(np.abs(self.base) ** 2) * (self.max_delay + 1))

    def gram(self) -> np.ndarray:
        """P P^H, the L x L Gram of the rows."""
        return self.P @ self.P.conj().T


@dataclass
class GroundTruth:
    active: np.ndarray     # (N,) bool
    delays: np.ndarray     # (N,) int, -1 for inactive users
    beta: np.ndarray       # (N,) linear large-scale fading, all users
    channels: np.ndarray   # (N, M) complex antenna channels
    indicator: np.ndarray  # (N, T+1) 0/1, one-hot rows for active users
    H: np.ndarray          # ((T+1)N, M) complex effective channel

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.active)


@dataclass
class ReceivedSignal:
    Y: np.ndarray          # (L, M) complex, normalized by sqrt(rho * L)
    noise_var_eff: float   # per-entry variance of the normalized noise


@dataclass
class Scenario:
    config: SystemConfig
    pilots: ExpandedPilotMatrix
    truth: GroundTruth
    received: ReceivedSignal


def generate_pilots(cfg: SystemConfig, rng: np.random.Generator) -> ExpandedPilotMatrix:
    """Draw i.i.d. complex Gaussian pilots (variance 1/L_bar per symbol) and
    assemble the delay-expanded sensing matrix."""
    n, lbar, t_max = cfg.n_users, cfg.pilot_len, cfg.max_delay
    scale = np.sqrt(0.5 / lbar)
    base = scale * (
        rng.standard_normal((n, lbar)) + 1j * rng.standard_normal((n, lbar))
    )
    seq_len = lbar + t_max
    P = np.zeros((seq_len, (t_max + 1) * n), dtype=np.complex128)
    for t in range(t_max + 1):
        P[t:t + lbar, t::t_max + 1] = base.T
    return ExpandedPilotMatrix(base=base, P=P, max_delay=t_max)


def expand_pilot(base_pilot: np.ndarray, delay: int, max_delay: int) -> np.ndarray:
    """Zero-pad one pilot: `delay` leading and `max_delay - delay` trailing zeros."""
    if not 0 <= delay <= max_delay:
        raise ValueError(f"delay must be in [0, {max_delay}], got {delay}")
    base_pilot = np.asarray(base_pilot)
    out = np.zeros(base_pilot.shape[0] + max_delay, dtype=base_pilot.dtype)
    out[delay:delay + base_pilot.shape[0]] = base_pilot
    return out


def sample_ground_truth(cfg: SystemConfig, rng: np.random.Generator) -> GroundTruth:
    """Draw activity, delays, positions, and Rayleigh channels for one block."""
    n, m, t_max = cfg.n_users, cfg.n_antennas, cfg.max_delay
    if cfg.n_active > n:
        raise ValueError("n_active exceeds n_users")

    active = np.zeros(n, dtype=bool)
    chosen = rng.choice(n, size=cfg.n_active, replace=False)
    active[chosen] = True

    delays = np.full(n, -1, dtype=np.int64)
    delays[chosen] = rng.integers(0, t_max + 1, size=cfg.n_active)

    dist = rng.uniform(cfg.cell_radius_min_km, cfg.cell_radius_max_km, size=n)
    beta = db_to_linear(cfg.pathloss_db(dist))

    channels = np.sqrt(beta / 2.0)[:, None] * (
        rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    )

    indicator = np.zeros((n, t_max + 1), dtype=np.float64)
    indicator[chosen, delays[chosen]] = 1.0

    H = np.zeros(((t_max + 1) * n, m), dtype=np.complex128)
    rows = chosen * (t_max + 1) + delays[chosen]
    H[rows, :] = channels[chosen, :]

    return GroundTruth(
        active=active, delays=delays, beta=beta, channels=channels,
        indicator=indicator, H=H,
    )


def synthesize_received(
    pilots: ExpandedPilotMatrix,
    truth: GroundTruth,
    cfg: SystemConfig,
    rng: np.random.Generator,
) -> ReceivedSignal:
    """Normalized received pilot block Y = P H + N.

    Equivalent to forming sqrt(rho L) P H plus physical noise of variance
    sigma^2 per entry and dividing by sqrt(rho L); the normalization is
    applied directly so the per-entry noise variance is sigma^2/(rho L).
    """
    seq_len, m = cfg.seq_len, cfg.n_antennas
    nv = cfg.noise_var_eff
    noise = np.sqrt(nv / 2.0) * (
        rng.standard_normal((seq_len, m)) + 1j * rng.standard_normal((seq_len, m))
    )
    Y = pilots.P @ truth.H + noise
    return ReceivedSignal(Y=Y, noise_var_eff=nv)


def make_scenario(
    cfg: SystemConfig,
    rng: np.random.Generator,
    pilots: ExpandedPilotMatrix | None = None,
) -> Scenario:
    """Draw one complete trial (pilots, truth, received signal) from `rng`.

    Draw order is fixed (pilots, truth, noise) so a seeded generator yields a
    byte-identical scenario.  Pass `pilots` to reuse a sensing matrix across
    trials; the generator then only draws truth and noise.
    """
    cfg.validate()
    if pilots is None:
        pilots = generate_pilots(cfg, rng)
    truth = sample_ground_truth(cfg, rng)
    received = synthesize_received(pilots, truth, cfg, rng)
    return Scenario(config=cfg, pilots=pilots, truth=truth, received=received)
