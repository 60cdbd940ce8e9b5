"""
Configuración por variables de entorno (cargadas con python-dotenv).

Los flags de la línea de comandos tienen prioridad sobre todo lo que se lee aquí.
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


def _env_int(name: str, default: int, minimum: int = 0) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        value = int(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from exc
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        value = float(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{name} must be a number, got {raw!r}") from exc
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class Settings:
    seed: int = 0
    workers: int = 4
    budget: int = 2_000_000
    max_shatter_d: int = 6
    constant_c: float = 1.0
    log_level: str = 'WARNING'


def load_settings(dotenv_path: Optional[str] = None) -> Settings:
    """Lee las variables TAMECHECK_*, cargando antes el archivo .env si existe."""
    load_dotenv(dotenv_path, override=False)
    level = os.getenv('TAMECHECK_LOG_LEVEL', 'WARNING').strip().upper() or 'WARNING'
    if level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
        raise ConfigError(f"TAMECHECK_LOG_LEVEL: unknown level {level!r}")
    return Settings(
        seed=_env_int('TAMECHECK_SEED', 0),
        workers=_env_int('TAMECHECK_WORKERS', 4, minimum=1),
        budget=_env_int('TAMECHECK_BUDGET', 2_000_000, minimum=1),
        max_shatter_d=_env_int('TAMECHECK_MAX_SHATTER_D', 6, minimum=1),
        constant_c=_env_float('TAMECHECK_CONSTANT_C', 1.0),
        log_level=level,
    )
