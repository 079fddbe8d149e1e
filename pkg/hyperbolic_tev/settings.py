"""
Runtime settings with environment fallback
Configurações de execução com fallback para variáveis de ambiente
"""

import logging
import os
from dataclasses import dataclass
from typing import Any, Callable, Optional

from .errors import ParameterError


def _env_value(name: str, convert: Callable[[str], Any], default: Any) -> Any:
    raw = os.environ.get(name, "")
    if raw == "":
        return default
    try:
        return convert(raw)
    except ValueError as e:
        raise ParameterError(f"Invalid value for {name}: {raw!r} ({e})") from e


@dataclass
class Settings:
    """
    Package-wide defaults

    Values given explicitly win; anything left as None is read from the
    environment (HTEV_OUTPUT_DIR, HTEV_T_MAX, HTEV_WORKERS, HTEV_LOG_LEVEL)
    and finally from the built-in defaults.
    """
    output_dir: str = "."
    t_max: float = 50.0
    workers: int = 1
    log_level: str = "INFO"

    def __post_init__(self):
        if self.t_max <= 0:
            raise ParameterError(f"t_max must be positive, got {self.t_max}")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")
        level = logging.getLevelName(str(self.log_level).upper())
        if not isinstance(level, int):
            raise ParameterError(f"Unknown log level: {self.log_level!r}")
        self.log_level = str(self.log_level).upper()

    @classmethod
    def from_env(
        cls,
        output_dir: Optional[str] = None,
        t_max: Optional[float] = None,
        workers: Optional[int] = None,
        log_level: Optional[str] = None,
    ) -> "Settings":
        """Monta as configurações, usando variáveis de ambiente como fallback"""
        return cls(
            output_dir=output_dir if output_dir is not None
            else _env_value("HTEV_OUTPUT_DIR", str, "."),
            t_max=float(t_max) if t_max is not None
            else _env_value("HTEV_T_MAX", float, 50.0),
            workers=int(workers) if workers is not None
            else _env_value("HTEV_WORKERS", int, 1),
            log_level=log_level if log_level is not None
            else _env_value("HTEV_LOG_LEVEL", str, "INFO"),
        )
