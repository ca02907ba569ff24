"""Carga de archivos de escenario YAML

Esquema (claves opcionales entre corchetes):

    name: tabla1
    n_classes: 3
    period: 10.0
    [t_pass: 5.0]                 # ventana por defecto de los perfiles sinusoidales
    classes:                      # uno por clase, en orden de prioridad
      - arrival: {kind: windowed_sinusoid_arrival, lambda_base: 0.05, lambda_peak: 0.10}
        service: {kind: windowed_sinusoid_service, mu_peak: 1.0}
    [availability: {on_windows: [[0.0, 5.0]]}]
    [solver: {epsilon, max_iters, alpha, steps_per_period}]
    [mc: {n_paths, n_trials, warmup_periods, root_seed, n_bins, sample_periods}]
    [validation: {path_counts, relative_mae_threshold}]

Tipos de perfil: windowed_sinusoid_service (mu_peak, [t_pass], [offset]),
windowed_sinusoid_arrival (lambda_base, lambda_peak, [t_pass], [offset]),
piecewise_constant (values, [breakpoints]), sampled_table (samples) y constant (rate).
"""
import copy
from dataclasses import dataclass, field, replace
import logging
from pathlib import Path

import yaml

from config.settings import (
    DEFAULT_ALPHA,
    DEFAULT_EPSILON,
    DEFAULT_MAX_ITERS,
    DEFAULT_N_BINS,
    DEFAULT_N_PATHS,
    DEFAULT_N_TRIALS,
    DEFAULT_PATH_COUNTS,
    DEFAULT_RELATIVE_MAE_THRESHOLD,
    DEFAULT_ROOT_SEED,
    DEFAULT_SAMPLE_PERIODS,
    DEFAULT_STEPS_PER_PERIOD,
    DEFAULT_WARMUP_PERIODS,
)
from services.montecarlo_service import McConfig
from services.ode_service import IntegrationConfig
from services.pss_service import PssConfig
from services.rates import (
    PIECEWISE_CONSTANT,
    SAMPLED_TABLE,
    WINDOWED_ARRIVAL,
    WINDOWED_SERVICE,
    RateProfile,
    Scenario,
)
from utils.exceptions import ConfigurationError
from utils.validators import validar_n_clases, validar_periodo

logger = logging.getLogger(__name__)

CONSTANT = "constant"


@dataclass(frozen=True)
class ValidationConfig:
    path_counts: tuple = DEFAULT_PATH_COUNTS
    relative_mae_threshold: float = DEFAULT_RELATIVE_MAE_THRESHOLD


@dataclass
class ScenarioConfig:
    """Escenario y parámetros de solver, Monte Carlo y validación de un archivo"""
    scenario: Scenario
    pss: PssConfig
    mc: McConfig
    validation: ValidationConfig
    raw: dict = field(default_factory=dict)


def _numero(bloque, clave, tipo, defecto=None, contexto=""):
    if clave not in bloque or bloque[clave] is None:
        if defecto is None:
            raise ConfigurationError(f"Falta la clave '{clave}'{contexto}")
        return defecto
    try:
        return tipo(bloque[clave])
    except (TypeError, ValueError):
        raise ConfigurationError(f"Valor inválido para '{clave}'{contexto}: {bloque[clave]!r}")


def _entero(bloque, clave, defecto=None, contexto=""):
    valor = _numero(bloque, clave, float, defecto, contexto)
    if float(valor) != int(valor):
        raise ConfigurationError(f"'{clave}'{contexto} debe ser entero (recibido {valor})")
    return int(valor)


def _lista(bloque, clave, contexto=""):
    valores = bloque.get(clave)
    if not isinstance(valores, (list, tuple)) or not valores:
        raise ConfigurationError(f"'{clave}'{contexto} debe ser una lista no vacía")
    try:
        return [float(v) for v in valores]
    except (TypeError, ValueError):
        raise ConfigurationError(f"'{clave}'{contexto} contiene valores no numéricos")


def build_profile(perfil, period, t_pass=None, contexto=""):
    """RateProfile a partir de un bloque de perfil del YAML"""
    if not isinstance(perfil, dict):
        raise ConfigurationError(f"Perfil{contexto} debe ser un mapa con 'kind'")
    kind = perfil.get("kind")
    if kind in (WINDOWED_SERVICE, WINDOWED_ARRIVAL):
        ventana = _numero(perfil, "t_pass", float, t_pass, contexto)
        offset = _numero(perfil, "offset", float, 0.0, contexto)
        if kind == WINDOWED_SERVICE:
            return RateProfile.windowed_service(
                _numero(perfil, "mu_peak", float, contexto=contexto), ventana, period, offset)
        return RateProfile.windowed_arrival(
            _numero(perfil, "lambda_base", float, contexto=contexto),
            _numero(perfil, "lambda_peak", float, contexto=contexto),
            ventana, period, offset)
    if kind == PIECEWISE_CONSTANT:
        breakpoints = _lista(perfil, "breakpoints", contexto) if "breakpoints" in perfil else None
        return RateProfile.piecewise(_lista(perfil, "values", contexto), period, breakpoints)
    if kind == SAMPLED_TABLE:
        return RateProfile.table(_lista(perfil, "samples", contexto), period)
    if kind == CONSTANT:
        return RateProfile.constant(_numero(perfil, "rate", float, contexto=contexto), period)
    raise ConfigurationError(f"Tipo de perfil desconocido{contexto}: {kind!r}")


def build_scenario(raw):
    """Scenario a partir del diccionario ya parseado"""
    n = _entero(raw, "n_classes")
    es_valido, mensaje = validar_n_clases(n)
    if not es_valido:
        raise ConfigurationError(mensaje)
    period = _numero(raw, "period", float)
    t_pass = raw.get("t_pass")
    t_pass = float(t_pass) if t_pass is not None else None
    es_valido, mensaje = validar_periodo(period, t_pass)
    if not es_valido:
        raise ConfigurationError(mensaje)
    clases = raw.get("classes")
    if not isinstance(clases, list) or len(clases) != n:
        raise ConfigurationError(
            f"'classes' debe listar {n} clases (recibidas {len(clases) if isinstance(clases, list) else 0})"
        )
    llegadas, servicios = [], []
    for i, clase in enumerate(clases, start=1):
        if not isinstance(clase, dict) or "arrival" not in clase or "service" not in clase:
            raise ConfigurationError(f"La clase {i} requiere bloques 'arrival' y 'service'")
        llegadas.append(build_profile(clase["arrival"], period, t_pass, f" (clase {i}, llegada)"))
        servicios.append(build_profile(clase["service"], period, t_pass, f" (clase {i}, servicio)"))
    escenario = Scenario(
        N=n, period=period, arrival=tuple(llegadas), service=tuple(servicios),
        name=str(raw.get("name", "escenario")),
    )
    disponibilidad = raw.get("availability") or {}
    ventanas = disponibilidad.get("on_windows")
    if ventanas:
        try:
            ventanas = [(float(a), float(b)) for a, b in ventanas]
        except (TypeError, ValueError):
            raise ConfigurationError(f"on_windows inválido: {ventanas!r}")
        escenario = escenario.with_availability(ventanas)
    return escenario


def build_pss_config(bloque):
    return PssConfig(
        epsilon=_numero(bloque, "epsilon", float, DEFAULT_EPSILON),
        max_iters=_entero(bloque, "max_iters", DEFAULT_MAX_ITERS),
        alpha=_numero(bloque, "alpha", float, DEFAULT_ALPHA),
        integration=IntegrationConfig(
            steps_per_period=_entero(bloque, "steps_per_period", DEFAULT_STEPS_PER_PERIOD)
        ),
    )


def build_mc_config(bloque):
    return McConfig(
        n_paths=_entero(bloque, "n_paths", DEFAULT_N_PATHS),
        n_trials=_entero(bloque, "n_trials", DEFAULT_N_TRIALS),
        warmup_periods=_entero(bloque, "warmup_periods", DEFAULT_WARMUP_PERIODS),
        root_seed=_entero(bloque, "root_seed", DEFAULT_ROOT_SEED),
        n_bins=_entero(bloque, "n_bins", DEFAULT_N_BINS),
        sample_periods=_entero(bloque, "sample_periods", DEFAULT_SAMPLE_PERIODS),
    )


def build_validation_config(bloque):
    conteos = bloque.get("path_counts", list(DEFAULT_PATH_COUNTS))
    try:
        conteos = tuple(sorted(set(int(c) for c in conteos)))
    except (TypeError, ValueError):
        raise ConfigurationError(f"path_counts inválido: {conteos!r}")
    if not conteos or conteos[0] < 1:
        raise ConfigurationError(f"path_counts debe contener enteros positivos: {conteos!r}")
    umbral = _numero(bloque, "relative_mae_threshold", float, DEFAULT_RELATIVE_MAE_THRESHOLD)
    if umbral <= 0:
        raise ConfigurationError(f"relative_mae_threshold debe ser positivo (recibido {umbral})")
    return ValidationConfig(path_counts=conteos, relative_mae_threshold=umbral)


def _bloque(raw, clave):
    valor = raw.get(clave) or {}
    if not isinstance(valor, dict):
        raise ConfigurationError(f"El bloque '{clave}' debe ser un mapa")
    return valor


def parse_scenario(raw):
    """ScenarioConfig desde un diccionario (por ejemplo, el resultado de yaml.safe_load)"""
    if not isinstance(raw, dict):
        raise ConfigurationError("El archivo de escenario debe contener un mapa YAML")
    try:
        return ScenarioConfig(
            scenario=build_scenario(raw),
            pss=build_pss_config(_bloque(raw, "solver")),
            mc=build_mc_config(_bloque(raw, "mc")),
            validation=build_validation_config(_bloque(raw, "validation")),
            raw=copy.deepcopy(raw),
        )
    except ConfigurationError:
        raise
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigurationError(f"Escenario inválido: {type(e).__name__}: {e}")


def load_scenario(path):
    """Lee y valida un archivo de escenario"""
    ruta = Path(path)
    if not ruta.is_file():
        raise ConfigurationError(f"No existe el archivo de escenario: {ruta}")
    try:
        with open(ruta, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"YAML inválido en {ruta}: {e}")
    cfg = parse_scenario(raw)
    logger.info(f"Escenario '{cfg.scenario.name}' cargado desde {ruta} (N={cfg.scenario.N})")
    return cfg


def apply_overrides(cfg, paths=None, seed=None, steps=None):
    """Aplica las opciones de línea de comandos y las refleja en `raw` para el manifiesto"""
    raw = copy.deepcopy(cfg.raw)
    pss, mc, validacion = cfg.pss, cfg.mc, cfg.validation
    if steps is not None:
        pss = replace(pss, integration=IntegrationConfig(steps_per_period=int(steps)))
        raw.setdefault("solver", {})["steps_per_period"] = int(steps)
    if seed is not None:
        mc = replace(mc, root_seed=int(seed))
        raw.setdefault("mc", {})["root_seed"] = int(seed)
    if paths is not None:
        paths = int(paths)
        mc = replace(mc, n_paths=paths)
        conteos = tuple(sorted({c for c in validacion.path_counts if c < paths} | {paths}))
        validacion = replace(validacion, path_counts=conteos)
        raw.setdefault("mc", {})["n_paths"] = paths
        raw.setdefault("validation", {})["path_counts"] = list(conteos)
    return ScenarioConfig(scenario=cfg.scenario, pss=pss, mc=mc, validation=validacion, raw=raw)
