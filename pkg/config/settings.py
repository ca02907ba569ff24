"""Configuración centralizada de la aplicación"""
import os
from dataclasses import dataclass
import logging
from dotenv import load_dotenv

# Cargar variables de entorno desde .env
load_dotenv()

logger = logging.getLogger(__name__)

# Valores por defecto del solucionador y del Monte Carlo (documentados en README)
DEFAULT_EPSILON = 1e-10
DEFAULT_MAX_ITERS = 500
DEFAULT_ALPHA = 1.0
DEFAULT_STEPS_PER_PERIOD = 2000
DEFAULT_WARMUP_PERIODS = 20
DEFAULT_N_PATHS = 1000
DEFAULT_N_TRIALS = 1
DEFAULT_N_BINS = 100
DEFAULT_SAMPLE_PERIODS = 1
DEFAULT_ROOT_SEED = 20240601
DEFAULT_PATH_COUNTS = (100, 500, 1000, 5000)
DEFAULT_RELATIVE_MAE_THRESHOLD = 0.05

MAX_CLASSES = 10


def _env_float(key, default):
    valor = os.getenv(key)
    if valor is None or valor == "":
        return default
    try:
        return float(valor)
    except ValueError:
        logger.warning(f"Variable {key} inválida ({valor!r}), usando {default}")
        return default


def _env_int(key, default):
    valor = os.getenv(key)
    if valor is None or valor == "":
        return default
    try:
        return int(valor)
    except ValueError:
        logger.warning(f"Variable {key} inválida ({valor!r}), usando {default}")
        return default


@dataclass
class AppConfig:
    """Configuración de la aplicación"""
    output_dir: str = "resultados"
    log_level: str = "INFO"
    log_file: str = "periodicaoi.log"
    workers: int = 4
    undefined_threshold: float = 1e-9

    @classmethod
    def from_env(cls):
        """Crea configuración desde variables de entorno"""
        workers_defecto = min(8, os.cpu_count() or 1)
        return cls(
            output_dir=os.getenv("AOI_OUTPUT_DIR") or "resultados",
            log_level=(os.getenv("AOI_LOG_LEVEL") or "INFO").upper(),
            log_file=os.getenv("AOI_LOG_FILE") or "periodicaoi.log",
            workers=max(1, _env_int("AOI_WORKERS", workers_defecto)),
            undefined_threshold=_env_float("AOI_UNDEFINED_THRESHOLD", 1e-9),
        )


# Instancia global de configuración
config = AppConfig.from_env()
