"""Experiment configuration: ``key = value`` files, overrides and validation."""

import os
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .errors import ConfigError
from .integrity import Tier, default_window
from .rng import STREAM_COVARIANCE, RngSeed, sample_spd_covariance

SEED_ENV_VAR = "RIDGESPLIT_SEED"


@dataclass(frozen=True)
class ExperimentConfig:
    m: int
    n: int
    c: float
    sigma: float
    alpha: float
    covariance_scheme: str = "random"
    trials: int = 10_000
    tier: Tier = Tier.TIER2
    seed: int = 0
    p_min: Optional[int] = None
    p_max: Optional[int] = None
    step: int = 1
    smoothing_window: Optional[int] = None  # None means auto

    def __post_init__(self):
        validate(self)

    @property
    def p_grid(self):
        lo = self.n + 2 if self.p_min is None else self.p_min
        hi = self.m - 1 if self.p_max is None else self.p_max
        return lo, hi, self.step

    def grid(self):
        lo, hi, step = self.p_grid
        return list(range(lo, hi + 1, step))

    def window(self) -> int:
        if self.smoothing_window is not None:
            return self.smoothing_window
        return default_window(len(self.grid()))

    def rng_seed(self) -> RngSeed:
        return RngSeed(self.seed)

    def covariance(self) -> np.ndarray:
        """The one row covariance used by every trial of this experiment."""
        return sample_spd_covariance(self.n, self.covariance_scheme,
                                     RngSeed(self.seed, STREAM_COVARIANCE, self.n))

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _require(ok, constraint):
    if not ok:
        raise ConfigError(f"constraint violated: {constraint}")


def validate(cfg: ExperimentConfig):
    _require(cfg.n >= 1, "n >= 1")
    _require(cfg.m >= cfg.n + 3, "m >= n + 3")
    _require(cfg.c >= 0, "c >= 0")
    _require(cfg.sigma > 0, "sigma > 0")
    _require(cfg.alpha > 0, "alpha > 0")
    _require(cfg.covariance_scheme in ("identity", "random"), "covariance_scheme in {identity, random}")
    _require(cfg.trials >= 100, "trials >= 100")
    _require(0 <= cfg.seed < 2**64, "0 <= seed < 2^64")
    _require(cfg.step >= 1, "step >= 1")
    lo, hi, _ = cfg.p_grid
    _require(cfg.n + 2 <= lo < hi <= cfg.m - 1, "n + 2 <= p_min < p_max <= m - 1")
    _require(cfg.smoothing_window is None or cfg.smoothing_window >= 0, "smoothing_window >= 0")


_INT_KEYS = {"m", "n", "trials", "seed", "p_min", "p_max", "step"}
_FLOAT_KEYS = {"c", "sigma", "alpha"}
KEYS = [f.name for f in fields(ExperimentConfig)]


def _convert(key, raw: str):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key == "tier":
            return Tier.parse(raw)
        if key == "smoothing_window":
            return None if raw.lower() == "auto" else int(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None


def read_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _convert(key, raw)
    return values


def parse_config(path=None, overrides=None, env=None) -> ExperimentConfig:
    """Build a validated config from an optional file plus overrides.

    Precedence: explicit overrides, then the seed environment variable, then
    the file.  Override values may be strings (converted like file values).
    """
    values = read_config_file(path) if path is not None else {}
    env = os.environ if env is None else env
    if SEED_ENV_VAR in env and env[SEED_ENV_VAR].strip():
        values["seed"] = _convert("seed", env[SEED_ENV_VAR])
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _convert(key, val) if isinstance(val, str) else val
    missing = [k for k in ("m", "n", "c", "sigma", "alpha") if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    return ExperimentConfig(**values)
