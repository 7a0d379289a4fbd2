"""System configuration, experiment plans, and the flat key=value config format.

All powers enter in dB / dBm and are converted to linear units once, here.
Solvers only ever see the normalized model Y = P H + N with per-entry noise
variance sigma^2 / (rho * L).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .common import ConfigError, StoppingRule

ALGORITHMS = ("oamp", "mamp", "amp")


def dbm_to_linear(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass
class SystemConfig:
    """Physical and dimensional parameters of one uplink block.

    `n_active` users are drawn without replacement each trial; the solvers'
    prior activity rate is n_active / n_users.
    """

    n_users: int = 400
    n_antennas: int = 16
    pilot_len: int = 50
    max_delay: int = 4
    n_active: int = 50
    tx_power_dbm: float = 23.0
    noise_psd_dbm_hz: float = -169.0
    bandwidth_hz: float = 1e6
    cell_radius_min_km: float = 0.05
    cell_radius_max_km: float = 1.0
    pathloss_intercept_db: float = -128.1
    pathloss_slope_db: float = 36.7

    @property
    def seq_len(self) -> int:
        """Observation window length: pilot length plus the maximum delay."""
        return self.pilot_len + self.max_delay

    @property
    def grid_size(self) -> int:
        """Number of (user, delay) hypotheses, (T+1)N."""
        return (self.max_delay + 1) * self.n_users

    @property
    def activity_rate(self) -> float:
        return self.n_active / self.n_users

    @property
    def tx_power_lin(self) -> float:
        return dbm_to_linear(self.tx_power_dbm)

    @property
    def noise_var_lin(self) -> float:
        """Receiver noise power sigma^2 in linear units (dBm over the band)."""
        return dbm_to_linear(self.noise_psd_dbm_hz + 10.0 * np.log10(self.bandwidth_hz))

    @property
    def noise_var_eff(self) -> float:
        """Per-entry noise variance of the normalized received signal."""
        return self.noise_var_lin / (self.tx_power_lin * self.seq_len)

    def pathloss_db(self, dist_km):
        return self.pathloss_intercept_db - self.pathloss_slope_db * np.log10(dist_km)

    def validate(self):
        if self.n_users < 1:
            raise ConfigError("n_users must be >= 1")
        if self.n_antennas < 1:
            raise ConfigError("n_antennas must be >= 1")
        if self.pilot_len < 1:
            raise ConfigError("pilot_len must be >= 1")
        if self.max_delay < 0:
            raise ConfigError("max_delay must be >= 0")
        if not 0 <= self.n_active <= self.n_users:
            raise ConfigError(
                f"n_active must be in [0, n_users], got {self.n_active} of {self.n_users}"
            )
        if not 0 < self.cell_radius_min_km <= self.cell_radius_max_km:
            raise ConfigError("cell radii must satisfy 0 < min <= max")
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth_hz must be > 0")


@dataclass
class ExperimentPlan:
    """A sweep over the number of active users, run for several algorithms."""

    system: SystemConfig = field(default_factory=SystemConfig)
    sweep_k: list = field(default_factory=lambda: [50])
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    n_trials: int = 100
    seed: int = 0
    fixed_pilots: bool = False
    stopping: StoppingRule = field(default_factory=StoppingRule)
    activity_threshold: float = 0.6

    def validate(self):
        self.system.validate()
        self.stopping.validate()
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if not self.algorithms:
            raise ConfigError("at least one algorithm must be selected")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {ALGORITHMS}")
        if not self.sweep_k:
            raise ConfigError("sweep_k must be nonempty")
        for k in self.sweep_k:
            if not 0 <= k <= self.system.n_users:
                raise ConfigError(f"sweep value {k} outside [0, n_users]")
        if not 0.0 < self.activity_threshold < 1.0:
            raise ConfigError("activity_threshold must be in (0, 1)")


# ---------------------------------------------------------------------------
# Flat key=value config files
# ---------------------------------------------------------------------------

_SYSTEM_KEYS = {
    "n_users": int,
    "n_antennas": int,
    "pilot_len": int,
    "max_delay": int,
    "n_active": int,
    "tx_power_dbm": float,
    "noise_psd_dbm_hz": float,
    "bandwidth_hz": float,
    "cell_radius_min_km": float,
    "cell_radius_max_km": float,
    "pathloss_intercept_db": float,
    "pathloss_slope_db": float,
}

_PLAN_KEYS = {
    "n_trials": int,
    "seed": int,
    "fixed_pilots": bool,
    "activity_threshold": float,
    "max_iters": int,
    "tol": float,
}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"cannot parse boolean from {text!r}")


def _parse_scalar(key: str, text: str, kind):
    try:
        if kind is bool:
            return _parse_bool(text)
        if kind is int:
            return int(float(text)) if ("e" in text.lower() or "." in text) else int(text)
        return kind(text)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


def parse_config_text(text: str) -> ExperimentPlan:
    """Parse the flat `key = value` format (one pair per line, # comments)."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return plan_from_pairs(pairs)


def plan_from_pairs(pairs: dict) -> ExperimentPlan:
    plan = ExperimentPlan()
    plan = replace(plan, system=replace(plan.system), stopping=StoppingRule())
    apply_overrides(plan, pairs)
    plan.validate()
    return plan


def apply_overrides(plan: ExperimentPlan, pairs: dict):
    """Apply key=value overrides in place; unknown keys raise ConfigError."""
    for key, value in pairs.items():
        if key in _SYSTEM_KEYS:
            setattr(plan.system, key, _parse_scalar(key, value, _SYSTEM_KEYS[key]))
        elif key == "sweep_k":
            plan.sweep_k = [int(tok) for tok in str(value).replace(" ", "").split(",") if tok]
        elif key == "algorithms":
            plan.algorithms = [tok for tok in str(value).replace(" ", "").lower().split(",") if tok]
        elif key == "max_iters":
            plan.stopping.max_iters = _parse_scalar(key, value, int)
        elif key == "tol":
            plan.stopping.tol = _parse_scalar(key, value, float)
        elif key in _PLAN_KEYS:
            setattr(plan, key, _parse_scalar(key, value, _PLAN_KEYS[key]))
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return plan


def load_plan(path) -> ExperimentPlan:
    return parse_config_text(Path(path).read_text())


def plan_to_pairs(plan: ExperimentPlan) -> dict:
    """Normalized key=value view of a plan (inverse of parse, for meta echo)."""
    out = {key: getattr(plan.system, key) for key in _SYSTEM_KEYS}
    out["sweep_k"] = ",".join(str(k) for k in plan.sweep_k)
    out["algorithms"] = ",".join(plan.algorithms)
    out["n_trials"] = plan.n_trials
    out["seed"] = plan.seed
    out["fixed_pilots"] = plan.fixed_pilots
    out["activity_threshold"] = plan.activity_threshold
    out["max_iters"] = plan.stopping.max_iters
    out["tol"] = plan.stopping.tol
    return out
