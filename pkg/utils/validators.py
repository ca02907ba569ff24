"""Validadores para la aplicación"""
import logging
import math

from config.settings import MAX_CLASSES

logger = logging.getLogger(__name__)


def validar_n_clases(n):
    """Valida el número de clases de prioridad"""
    if not isinstance(n, int) or isinstance(n, bool):
        return False, f"n_classes debe ser entero (recibido {n!r})"
    if n < 1 or n > MAX_CLASSES:
        return False, f"n_classes fuera de rango ({n}). Permitido: 1..{MAX_CLASSES}"
    return True, None


def validar_periodo(period, t_pass=None):
    """Valida el periodo común y la ventana de servicio"""
    if not math.isfinite(period) or period <= 0:
        return False, f"El periodo debe ser positivo (recibido {period})"
    if t_pass is not None:
        if not math.isfinite(t_pass) or t_pass <= 0:
            return False, f"t_pass debe ser positivo (recibido {t_pass})"
        if t_pass > period:
            return False, f"t_pass ({t_pass}) no puede superar el periodo ({period})"
    return True, None


def validar_tasas(valores, nombre="tasa"):
    """Valida que todas las tasas sean finitas y no negativas"""
    for v in valores:
        if not math.isfinite(v):
            return False, f"{nombre} no finita: {v}"
        if v < 0:
            return False, f"{nombre} negativa: {v}"
    return True, None


def validar_breakpoints(breakpoints, period):
    """Valida puntos de quiebre estrictamente crecientes dentro de [0, T)"""
    if len(breakpoints) == 0:
        return False, "Se requiere al menos un punto de quiebre"
    if breakpoints[0] != 0:
        return False, f"El primer punto de quiebre debe ser 0 (recibido {breakpoints[0]})"
    for a, b in zip(breakpoints, breakpoints[1:]):
        if b <= a:
            return False, f"Puntos de quiebre no crecientes: {a} -> {b}"
    if breakpoints[-1] >= period:
        return False, f"Punto de quiebre {breakpoints[-1]} fuera de [0, {period})"
    return True, None


def validar_ventanas(ventanas, period):
    """Valida ventanas ON [inicio, fin) dentro de [0, T]"""
    for inicio, fin in ventanas:
        if not (0 <= inicio < fin <= period):
            return False, f"Ventana ON inválida [{inicio}, {fin}) para periodo {period}"
    return True, None


def validar_solver(epsilon, max_iters, alpha, steps_per_period):
    """Valida los parámetros de la iteración de punto fijo"""
    if not (epsilon > 0):
        return False, f"epsilon debe ser positivo (recibido {epsilon})"
    if max_iters < 1:
        return False, f"max_iters debe ser >= 1 (recibido {max_iters})"
    if not (0 < alpha <= 1):
        return False, f"alpha debe estar en (0, 1] (recibido {alpha})"
    if steps_per_period < 100:
        return False, f"steps_per_period debe ser >= 100 (recibido {steps_per_period})"
    return True, None


def validar_mc(n_paths, n_trials, warmup_periods, n_bins, sample_periods):
    """Valida los parámetros del Monte Carlo"""
    if n_paths < 1:
        return False, f"n_paths debe ser >= 1 (recibido {n_paths})"
    if n_trials < 1:
        return False, f"n_trials debe ser >= 1 (recibido {n_trials})"
    if warmup_periods < 0:
        return False, f"warmup_periods no puede ser negativo (recibido {warmup_periods})"
    if n_bins < 1:
        return False, f"n_bins debe ser >= 1 (recibido {n_bins})"
    if sample_periods < 1:
        return False, f"sample_periods debe ser >= 1 (recibido {sample_periods})"
    return True, None
