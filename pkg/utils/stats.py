"""Estadísticos básicos para las estimaciones Monte Carlo"""
import numpy as np


def _sin_eje(shape, axis):
    return tuple(s for i, s in enumerate(shape) if i != axis % len(shape))


def sample_mean(x, axis=0):
    """Media muestral; NaN si no hay muestras"""
    x = np.asarray(x, dtype=float)
    if x.shape[axis] == 0:
        return np.full(_sin_eje(x.shape, axis), np.nan)
    return np.mean(x, axis=axis)


def standard_error(x, axis=0):
    """Error estándar de la media (ddof=1); NaN con menos de dos muestras"""
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    if n < 2:
        return np.full(_sin_eje(x.shape, axis), np.nan)
    return np.std(x, axis=axis, ddof=1) / np.sqrt(n)


def mean_and_se(values):
    """Media, error estándar y número de muestras de una lista de escalares"""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n == 0:
        return float("nan"), float("nan"), 0
    if n < 2:
        return float(values[0]), float("nan"), 1
    return float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(n)), n
