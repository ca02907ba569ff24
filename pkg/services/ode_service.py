"""Sistema lineal T-periódico de momentos de edad y ecuación de Kolmogorov

El vector apilado x = [a_1..a_N, y, z_1..z_N, p] se guarda como un arreglo
(2N+2, |Q|); su aplanado fila a fila es el vector de dimensión (2N+2)|Q|.
La integración usa Runge-Kutta clásico de orden 4 sobre una malla fija.
"""
from dataclasses import dataclass
import logging

import numpy as np

from services.generator import structure
from utils.exceptions import ConfigurationError, NumericalFailureError, StateLogicError
from utils.grid import build_time_grid

logger = logging.getLogger(__name__)

STRUCTURAL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class IntegrationConfig:
    """Malla fija: steps_per_period pasos por periodo, quiebres alineados"""
    steps_per_period: int = 2000
    align_breakpoints: bool = True

    def __post_init__(self):
        if self.steps_per_period < 100:
            raise ConfigurationError(
                f"steps_per_period debe ser >= 100 (recibido {self.steps_per_period})"
            )


class MomentStack:
    """Momentos a_i, y, z_i y probabilidades p de un instante"""

    def __init__(self, data, n_classes):
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data.reshape(2 * n_classes + 2, -1)
        if data.shape[0] != 2 * n_classes + 2:
            raise StateLogicError(
                f"Dimensión inválida {data.shape} para N={n_classes}"
            )
        self.data = data
        self.N = n_classes

    @property
    def n_states(self):
        return self.data.shape[1]

    @property
    def a(self):
        return self.data[: self.N]

    @property
    def y(self):
        return self.data[self.N]

    @property
    def z(self):
        return self.data[self.N + 1: 2 * self.N + 1]

    @property
    def p(self):
        return self.data[2 * self.N + 1]

    def flat(self):
        return self.data.reshape(-1)

    def copy(self):
        return MomentStack(self.data.copy(), self.N)

    def norm(self):
        return float(np.linalg.norm(self.data))

    @classmethod
    def zeros(cls, space):
        return cls(np.zeros((2 * space.N + 2, space.size)), space.N)

    @classmethod
    def idle(cls, space):
        """Probabilidad 1 en el estado ocioso y todos los momentos en 0"""
        x = cls.zeros(space)
        x.p[0] = 1.0
        return x

    @classmethod
    def uniform(cls, space):
        """p uniforme y momentos en 0"""
        x = cls.zeros(space)
        x.p[:] = 1.0 / space.size
        return x

    @classmethod
    def from_parts(cls, a, y, z, p):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        z = np.atleast_2d(np.asarray(z, dtype=float))
        return cls(np.vstack([a, np.asarray(y, dtype=float)[None, :], z,
                              np.asarray(p, dtype=float)[None, :]]), a.shape[0])


def structural_drift(x, space):
    """Máximo valor absoluto en los ceros estructurales (y ocioso, z_i con B_i = 0)"""
    ind = structure(space.N).indicators
    y_idle = abs(x.y[0])
    z_fuera = np.max(np.abs(x.z * (1.0 - ind.d_B_eq_1))) if x.N else 0.0
    return float(max(y_idle, z_fuera))


def _rhs_array(t, X, st, scenario):
    n = st.N
    lam = scenario.arrival_rates(t)
    mu_state = st.state_service_rates(scenario.service_rates(t))
    ind = st.indicators

    dX = X @ st.generator_matrix(lam, mu_state)
    a = X[:n]
    y = X[n]
    z = X[n + 1: 2 * n + 1]
    p = X[2 * n + 1]

    # Todas las matrices M son diag(pesos)·D, así que los productos x·M se hacen con D
    W = np.empty((2 * n + 1, X.shape[1]))
    W[:n] = (y[None, :] - a) * (mu_state[None, :] * ind.d_J_eq)
    z_next = np.sum(z * ind.d_next_eq, axis=0)
    W[n] = (z_next - y) * mu_state
    W[n + 1:] = -z * (mu_state[None, :] * ind.d_next_eq)
    WD = W @ st.completion

    dX[:n] += p[None, :] + WD[:n]
    dX[n] += p * ind.d_J_neq_0 + WD[n]
    dX[n + 1: 2 * n + 1] += p[None, :] * ind.d_B_eq_1 - lam[:, None] * (z * ind.d_B_eq_1) + WD[n + 1:]
    return dX


def rhs(t, x, space, scenario):
    """Derivada del vector apilado en t"""
    if x.N != space.N or x.n_states != space.size or scenario.N != space.N:
        raise StateLogicError(
            f"Dimensiones incompatibles: stack N={x.N}, |Q|={x.n_states}; "
            f"espacio N={space.N}, |Q|={space.size}; escenario N={scenario.N}"
        )
    return MomentStack(_rhs_array(t, x.data, structure(space.N), scenario), space.N)


def rk4_propagate(f, y0, grid, record=False):
    """Runge-Kutta clásico de orden 4 sobre una malla dada

    Devuelve (y_final, muestras) con muestras de forma (len(grid), *y0.shape) si `record`.
    """
    y = np.array(y0, dtype=float, copy=True)
    muestras = None
    if record:
        muestras = np.empty((len(grid),) + y.shape)
        muestras[0] = y
    for k in range(len(grid) - 1):
        t = grid[k]
        h = grid[k + 1] - t
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericalFailureError("Valores no finitos en la integración", t=grid[k + 1])
        if record:
            muestras[k + 1] = y
    return y, muestras


@dataclass
class Trajectory:
    """Muestras del vector apilado sobre la malla"""
    times: np.ndarray
    samples: np.ndarray   # (len(times), 2N+2, |Q|)
    N: int

    def stack_at(self, k):
        return MomentStack(self.samples[k], self.N)


def integration_grid(scenario, t0, t1, cfg):
    return build_time_grid(
        t0, t1, scenario.period, cfg.steps_per_period,
        breakpoints=scenario.breakpoints(), align=cfg.align_breakpoints,
    )


def integrate(x0, t0, t1, cfg, scenario, space, record=False):
    """Integra el sistema completo de t0 a t1

    Devuelve el MomentStack final, y además la Trajectory si `record`.
    """
    if not t1 > t0:
        raise ValueError(f"Se requiere t1 > t0 (t0={t0}, t1={t1})")
    st = structure(space.N)
    grid = integration_grid(scenario, t0, t1, cfg)
    y, muestras = rk4_propagate(lambda t, X: _rhs_array(t, X, st, scenario), x0.data, grid, record)
    x1 = MomentStack(y, space.N)
    drift = structural_drift(x1, space)
    if drift > STRUCTURAL_TOLERANCE:
        logger.warning(f"Deriva en ceros estructurales: {drift:.3e} en t={t1:.6g}")
    if record:
        return x1, Trajectory(grid, muestras, space.N)
    return x1
