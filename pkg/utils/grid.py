"""Mallas de tiempo fijas alineadas con los puntos de quiebre de las tasas"""
import math

import numpy as np


def build_time_grid(t0, t1, period, steps_per_period, breakpoints=(), align=True):
    """Malla de [t0, t1] con paso ≈ T/steps_per_period

    Con `align`, cada punto de quiebre b + k·T dentro de (t0, t1) es un nodo y cada
    segmento entre nodos se divide uniformemente.
    """
    if t1 <= t0:
        raise ValueError(f"Intervalo vacío: [{t0}, {t1}]")
    h = period / steps_per_period
    nodos = [t0, t1]
    if align:
        for b in breakpoints:
            k0 = math.floor((t0 - b) / period)
            k1 = math.ceil((t1 - b) / period)
            for k in range(k0, k1 + 1):
                tb = b + k * period
                if t0 < tb < t1:
                    nodos.append(tb)
    nodos = sorted(nodos)
    tol = 1e-12 * max(1.0, abs(t1))
    limpios = [nodos[0]]
    for tb in nodos[1:]:
        if tb - limpios[-1] > tol:
            limpios.append(tb)
        else:
            limpios[-1] = tb if tb == t1 else limpios[-1]
    partes = []
    for a, b in zip(limpios, limpios[1:]):
        m = max(1, math.ceil((b - a) / h - 1e-9))
        partes.append(np.linspace(a, b, m + 1)[:-1])
    partes.append(np.array([limpios[-1]]))
    return np.concatenate(partes)


def phase_grid(period, n_bins):
    """Bordes izquierdos de n_bins intervalos iguales de [0, T)"""
    return period * np.arange(n_bins) / n_bins


def match_grid(times, targets, period):
    """Posición en `times` de cada instante de `targets`; None si alguno no coincide"""
    times = np.asarray(times)
    idx = np.searchsorted(times, targets)
    tol = 1e-9 * period
    posiciones = []
    for t, i in zip(targets, idx):
        candidatos = [j for j in (i - 1, i) if 0 <= j < len(times)]
        j = min(candidatos, key=lambda c: abs(times[c] - t), default=None)
        if j is None or abs(times[j] - t) > tol:
            return None
        posiciones.append(j)
    return np.array(posiciones, dtype=int)
