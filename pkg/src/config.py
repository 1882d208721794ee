import logging
import os
from dataclasses import dataclass, fields
from typing import Optional

from dotenv import dotenv_values, load_dotenv

from src.errors import ConfigError, IoError, ParseError

log = logging.getLogger(__name__)

# Load environment variables from .env file
load_dotenv()


def _env(name: str, default, kind=str):
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return kind(raw)
    except ValueError:
        log.warning("ignoring %s=%r: not a valid %s", name, raw, kind.__name__)
        return default


class Config:
    # External MILP solver: command template with {lp}, {sol} and {tl} placeholders,
    # e.g. "cbc {lp} sec {tl} solve solu {sol}"
    SOLVER_CMD = _env("PWL_SOLVER_CMD", "")
    TIME_LIMIT = _env("PWL_TIME_LIMIT", 100.0, float)   # seconds

    # Determinism and budgets
    SEED = _env("PWL_SEED", 1, int)
    ENUM_BUDGET = _env("PWL_ENUM_BUDGET", 10 ** 8, int)  # candidate sets examined by enumerations
    MAX_ITER = _env("PWL_MAX_ITER", 100000, int)          # fitting iterations
    REFINE_CAP = _env("PWL_REFINE_CAP", 10 ** 6, int)     # Ruppert insertions per refinement
    SAMPLE_BUDGET = _env("PWL_SAMPLE_BUDGET", 2_000_000, int)  # active sampling cells per simplex

    # Fitting tolerances
    ALPHA_LB = 18.0  # degrees
    THETA = 0.5

    # Artifacts and the run registry
    OUT_DIR = _env("PWL_OUT_DIR", "out")
    DB_URL = _env("PWL_DB_URL", "")  # empty: sqlite:///<out dir>/runs.db

    # Ruppert refinement is only guaranteed to terminate below ~20.7 degrees
    MAX_ALPHA_LB = 20.0

    @classmethod
    def validate_cli_config(cls, cfg: "CliConfig"):
        """Validate every override and report all violations at once."""
        errors = []

        if cfg.seed < 0:
            errors.append(f"seed must be >= 0 (got {cfg.seed})")
        if cfg.enum_budget < 1:
            errors.append(f"enum_budget must be >= 1 (got {cfg.enum_budget})")
        if cfg.max_iter < 1:
            errors.append(f"max_iter must be >= 1 (got {cfg.max_iter})")
        if cfg.refine_cap < 0:
            errors.append(f"refine_cap must be >= 0 (got {cfg.refine_cap})")
        if cfg.sample_budget < 1:
            errors.append(f"sample_budget must be >= 1 (got {cfg.sample_budget})")
        if not 0 < cfg.alpha_lb < cls.MAX_ALPHA_LB:
            errors.append(f"alpha_lb must lie in (0, {cls.MAX_ALPHA_LB}) degrees (got {cfg.alpha_lb})")
        if not 0 < cfg.theta <= 0.5:
            errors.append(f"theta must lie in (0, 0.5] (got {cfg.theta})")
        if cfg.time_limit <= 0:
            errors.append(f"time_limit must be positive (got {cfg.time_limit})")
        if not cfg.out_dir:
            errors.append("out_dir must not be empty")

        if errors:
            error_msg = "Invalid configuration:\n" + "\n".join(f"  - {error}" for error in errors)
            error_msg += "\n\nFix the flags, the --config file or the PWL_* environment variables."
            raise ConfigError(error_msg)

        return True


@dataclass
class CliConfig:
    seed: int = Config.SEED
    enum_budget: int = Config.ENUM_BUDGET
    max_iter: int = Config.MAX_ITER
    refine_cap: int = Config.REFINE_CAP
    sample_budget: int = Config.SAMPLE_BUDGET
    alpha_lb: float = Config.ALPHA_LB
    theta: float = Config.THETA
    solver_cmd: str = Config.SOLVER_CMD
    time_limit: float = Config.TIME_LIMIT
    out_dir: str = Config.OUT_DIR
    db_url: str = Config.DB_URL
    record: bool = True

    @property
    def database_url(self) -> str:
        return self.db_url or f"sqlite:///{os.path.join(self.out_dir, 'runs.db')}"

    @classmethod
    def build(cls, config_file: Optional[str] = None, **flags) -> "CliConfig":
        """Defaults, then the key=value config file, then flags that were actually given."""
        cfg = cls()
        if config_file:
            for name, value in load_config_file(config_file).items():
                setattr(cfg, name, value)
        for name, value in flags.items():
            if value is not None and hasattr(cfg, name):
                setattr(cfg, name, value)
        Config.validate_cli_config(cfg)
        return cfg


def load_config_file(path) -> dict:
    """Parse a key=value file (keys like SEED or ALPHA_LB, optionally prefixed with PWL_)."""
    if not os.path.isfile(path):
        raise IoError(f"config file not found: {path}")
    raw = dotenv_values(path)
    types = {f.name: f.type for f in fields(CliConfig)}
    out = {}
    unknown = []
    for key, text in raw.items():
        name = key.lower()
        if name.startswith("pwl_"):
            name = name[4:]
        if name not in types:
            unknown.append(key)
            continue
        kind = types[name]
        try:
            if kind in (bool, "bool"):
                out[name] = (text or "").strip().lower() in ("1", "true", "yes", "on")
            elif kind in (int, "int"):
                out[name] = int(text)
            elif kind in (float, "float"):
                out[name] = float(text)
            else:
                out[name] = text or ""
        except (TypeError, ValueError):
            raise ParseError(f"bad value '{text}' in {path}", field=key) from None
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {', '.join(sorted(unknown))}")
    return out
