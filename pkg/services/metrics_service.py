"""Métricas de frescura por clase: AoI medio, PAoI medio, probabilidad de servicio,
edad media no servida y la identidad de la brecha media/pico.

Una métrica con denominador de probabilidad bajo el umbral queda indefinida
(None en las funciones escalares, NaN en las series).
"""
from dataclasses import dataclass
import logging

import numpy as np
import pandas as pd

from config.settings import config
from services.generator import structure

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["t", "class", "mean_aoi", "peak_aoi", "service_prob",
                  "unserved_age", "gap_lhs", "gap_rhs"]


def mean_aoi(a_i):
    """Δ̄_i = a_i·1"""
    return float(np.sum(a_i))


def service_prob(p, d_J_eq_i):
    """π_i = p·δ_{J=i}"""
    return float(np.dot(p, d_J_eq_i))


def peak_aoi(a_i, p, d_J_eq_i, threshold=None):
    """Δ̂_i = (a_i·δ_{J=i}) / (p·δ_{J=i}), o None si el denominador es despreciable"""
    threshold = config.undefined_threshold if threshold is None else threshold
    den = float(np.dot(p, d_J_eq_i))
    if den < threshold:
        return None
    return float(np.dot(a_i, d_J_eq_i)) / den


def unserved_age(a_i, p, d_J_eq_i, threshold=None):
    """Δ^c_i = (a_i·(1−δ_{J=i})) / (p·(1−δ_{J=i})), o None"""
    threshold = config.undefined_threshold if threshold is None else threshold
    complemento = 1.0 - np.asarray(d_J_eq_i, dtype=float)
    den = float(np.dot(p, complemento))
    if den < threshold:
        return None
    return float(np.dot(a_i, complemento)) / den


def gap(mean, peak, unserved, pi):
    """Lados de Δ̂ − Δ̄ = (1 − π)(Δ̂ − Δ^c); (None, None) si falta alguna métrica"""
    if peak is None or unserved is None or mean is None:
        return None, None
    return peak - mean, (1.0 - pi) * (peak - unserved)


@dataclass
class ClassMetrics:
    """Series temporales de una clase sobre la malla de integración"""
    klass: int
    t: np.ndarray
    mean_aoi: np.ndarray
    peak_aoi: np.ndarray
    peak_defined: np.ndarray
    service_prob: np.ndarray
    unserved_age: np.ndarray
    unserved_defined: np.ndarray
    gap_lhs: np.ndarray
    gap_rhs: np.ndarray

    def gap_residual(self):
        """Máximo de |lhs − rhs| / (1 + |lhs|) donde ambos lados están definidos"""
        ok = self.peak_defined & self.unserved_defined
        if not np.any(ok):
            return 0.0
        diff = np.abs(self.gap_lhs[ok] - self.gap_rhs[ok]) / (1.0 + np.abs(self.gap_lhs[ok]))
        return float(np.max(diff))

    def inversion_points(self):
        """Instantes donde el AoI medio supera al PAoI medio (ambos definidos)"""
        ok = self.peak_defined
        return self.t[ok & (self.mean_aoi > np.where(ok, self.peak_aoi, np.inf))]


def class_metrics(times, samples, n_classes, klass, threshold=None):
    """Métricas vectorizadas de la clase `klass` (1-based) sobre muestras (T, 2N+2, |Q|)"""
    threshold = config.undefined_threshold if threshold is None else threshold
    d = structure(n_classes).indicators.d_J_eq[klass - 1]
    a = samples[:, klass - 1, :]
    p = samples[:, 2 * n_classes + 1, :]

    mean = a.sum(axis=1)
    pi = p @ d
    resto = p @ (1.0 - d)
    en_servicio = a @ d
    fuera = a @ (1.0 - d)

    peak_ok = pi >= threshold
    unserved_ok = resto >= threshold
    with np.errstate(divide="ignore", invalid="ignore"):
        peak = np.where(peak_ok, en_servicio / np.where(peak_ok, pi, 1.0), np.nan)
        unserved = np.where(unserved_ok, fuera / np.where(unserved_ok, resto, 1.0), np.nan)
    ambos = peak_ok & unserved_ok
    lhs = np.where(ambos, peak - mean, np.nan)
    rhs = np.where(ambos, (1.0 - pi) * (peak - unserved), np.nan)
    return ClassMetrics(
        klass=klass,
        t=np.asarray(times),
        mean_aoi=mean,
        peak_aoi=peak,
        peak_defined=peak_ok,
        service_prob=pi,
        unserved_age=unserved,
        unserved_defined=unserved_ok,
        gap_lhs=lhs,
        gap_rhs=rhs,
    )


def solution_metrics(solution, threshold=None):
    """ClassMetrics de todas las clases de una PssSolution"""
    tray = solution.trajectory
    return [class_metrics(tray.times, tray.samples, solution.scenario.N, i, threshold)
            for i in range(1, solution.scenario.N + 1)]


def metrics_frame(solution, threshold=None):
    """DataFrame largo: una fila por instante de la malla y clase"""
    por_clase = solution_metrics(solution, threshold)
    n_t = len(solution.times)
    n = len(por_clase)
    frame = pd.DataFrame({
        "t": np.repeat(solution.times, n),
        "class": np.tile(np.arange(1, n + 1), n_t),
        "mean_aoi": np.column_stack([m.mean_aoi for m in por_clase]).ravel(),
        "peak_aoi": np.column_stack([m.peak_aoi for m in por_clase]).ravel(),
        "service_prob": np.column_stack([m.service_prob for m in por_clase]).ravel(),
        "unserved_age": np.column_stack([m.unserved_age for m in por_clase]).ravel(),
        "gap_lhs": np.column_stack([m.gap_lhs for m in por_clase]).ravel(),
        "gap_rhs": np.column_stack([m.gap_rhs for m in por_clase]).ravel(),
    })
    return frame[METRIC_COLUMNS]


def state_probs_frame(solution):
    """Probabilidad de ocioso y de servicio de cada clase a lo largo del ciclo"""
    n = solution.scenario.N
    ind = structure(n).indicators
    p = solution.trajectory.samples[:, 2 * n + 1, :]
    datos = {"t": solution.times, "idle_prob": p[:, 0]}
    for i in range(1, n + 1):
        datos[f"serving_class_{i}"] = p @ ind.d_J_eq[i - 1]
    datos["outage"] = [solution.scenario.is_outage(t) for t in solution.times]
    return pd.DataFrame(datos)
