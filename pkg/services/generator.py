"""Generador Q(t), matrices de finalización M y forma reducida de Kolmogorov

Todas las matrices son densas. La estructura independiente del tiempo (patrón de llegadas,
patrón de finalizaciones y vectores indicadores) se calcula una vez por N y se reutiliza.
"""
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache
import logging
import threading

import numpy as np

from services.state_space import arrival_target, dest, enumerate_states, next_class
from utils.exceptions import StateLogicError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IndicatorVectors:
    """Vectores 0/1 de longitud |Q| para los predicados de estado"""
    d_J_neq_0: np.ndarray
    d_J_eq: np.ndarray       # (N, |Q|), fila i-1 ↔ J = i
    d_B_eq_1: np.ndarray     # (N, |Q|)
    d_next_eq: np.ndarray    # (N, |Q|)

    def d_J_eq_i(self, i):
        return self.d_J_eq[i - 1]

    def d_B_i_eq_1(self, i):
        return self.d_B_eq_1[i - 1]

    def d_next_eq_i(self, i):
        return self.d_next_eq[i - 1]


@dataclass(frozen=True)
class GeneratorStructure:
    """Piezas constantes: Q(t) = Σ_k λ_k(t)·arrival_basis[k] + diag(μ_J)(D − I)"""
    space: object
    indicators: IndicatorVectors
    served_class: np.ndarray     # J(s) por posición
    dest_pos: np.ndarray         # posición de dest(s), -1 en el estado ocioso
    arrival_pos: np.ndarray      # (N, |Q|) posición de a^{(k,+)}
    arrival_basis: np.ndarray    # (N, |Q|, |Q|)
    completion: np.ndarray       # D: D[s, dest(s)] = 1 para s ocupado

    @property
    def N(self):
        return self.space.N

    @property
    def size(self):
        return self.space.size

    def state_service_rates(self, mu):
        """μ_{J(s)}(t) por estado (0 en el estado ocioso)"""
        return np.concatenate(([0.0], np.asarray(mu, dtype=float)))[self.served_class]

    def generator_matrix(self, lam, mu_state):
        q = np.tensordot(np.asarray(lam, dtype=float), self.arrival_basis, axes=1)
        q += mu_state[:, None] * self.completion
        q[np.diag_indices_from(q)] -= mu_state
        return q


@lru_cache(maxsize=None)
def structure(n):
    """Estructura del generador para N clases (cacheada por N)"""
    space = enumerate_states(n)
    nq = space.size
    served = np.array([s.J for s in space.states], dtype=int)
    dest_pos = np.full(nq, -1, dtype=int)
    arrival_pos = np.zeros((n, nq), dtype=int)
    basis = np.zeros((n, nq, nq))
    completion = np.zeros((nq, nq))

    d_J_eq = np.zeros((n, nq))
    d_B = np.zeros((n, nq))
    d_next = np.zeros((n, nq))
    for pos, s in enumerate(space.states):
        if s.J != 0:
            d_J_eq[s.J - 1, pos] = 1.0
            dest_pos[pos] = space.position(dest(s))
            completion[pos, dest_pos[pos]] = 1.0
        for i, b in enumerate(s.B):
            d_B[i, pos] = float(b)
        k = next_class(s)
        if k != 0:
            d_next[k - 1, pos] = 1.0
        for k in range(1, n + 1):
            target = space.position(arrival_target(s, k))
            arrival_pos[k - 1, pos] = target
            if target != pos:
                basis[k - 1, pos, target] += 1.0
                basis[k - 1, pos, pos] -= 1.0

    indicators = IndicatorVectors(
        d_J_neq_0=(served != 0).astype(float),
        d_J_eq=d_J_eq,
        d_B_eq_1=d_B,
        d_next_eq=d_next,
    )
    for arr in (indicators.d_J_neq_0, d_J_eq, d_B, d_next, basis, completion):
        arr.setflags(write=False)
    logger.debug(f"Estructura del generador lista: N={n}, |Q|={nq}")
    return GeneratorStructure(space, indicators, served, dest_pos, arrival_pos, basis, completion)


@dataclass(frozen=True)
class GeneratorSet:
    """Q(t) y matrices de finalización evaluadas en t"""
    t: float
    Q: np.ndarray
    M_comp: np.ndarray
    M_class: np.ndarray   # (N, |Q|, |Q|), índice i-1 ↔ clase i
    M_next: np.ndarray    # (N, |Q|, |Q|)
    arrival_rates: np.ndarray
    service_rates: np.ndarray


@dataclass(frozen=True)
class ReducedGenerator:
    """Par (Q_red, β) del sistema de Kolmogorov reducido"""
    Q_red: np.ndarray
    beta: np.ndarray


def _check_space(space, scenario):
    if space.N != scenario.N:
        raise StateLogicError(f"Espacio con N={space.N} y escenario con N={scenario.N}")


def build(space, scenario, t):
    """Ensambla Q(t), M^(comp), M^(i) y M^(next=i)"""
    _check_space(space, scenario)
    st = structure(space.N)
    lam = scenario.arrival_rates(t)
    mu = scenario.service_rates(t)
    mu_state = st.state_service_rates(mu)
    m_comp = mu_state[:, None] * st.completion
    ind = st.indicators
    return GeneratorSet(
        t=float(t),
        Q=st.generator_matrix(lam, mu_state),
        M_comp=m_comp,
        M_class=ind.d_J_eq[:, :, None] * m_comp[None, :, :],
        M_next=ind.d_next_eq[:, :, None] * m_comp[None, :, :],
        arrival_rates=lam,
        service_rates=mu,
    )


def indicators(space):
    """Vectores indicadores (independientes del tiempo)"""
    return structure(space.N).indicators


def reduction_matrices(n_states):
    """T = [I | −1], E = [I ; 0ᵀ] y b = último vector unitario"""
    m = n_states - 1
    T = np.hstack([np.eye(m), -np.ones((m, 1))])
    E = np.vstack([np.eye(m), np.zeros((1, m))])
    b = np.zeros(n_states)
    b[-1] = 1.0
    return T, E, b


def reduce(genset):
    """Q_red = T·Q·E y β = b·Q·E, eliminando el último estado (σ = |Q|)"""
    q = genset.Q
    last = q[-1, :-1]
    return ReducedGenerator(Q_red=q[:-1, :-1] - last[None, :], beta=last.copy())


def last_state_exit_rate(genset):
    return -genset.Q[-1, -1]


class GeneratorCache:
    """Memoización LRU de build() por instante t (thread-safe)

    Sólo es exacta con una malla de tiempos determinista; las claves son los t exactos.
    """

    def __init__(self, space, scenario, maxsize=64):
        self.space = space
        self.scenario = scenario
        self.maxsize = maxsize
        self._entries = OrderedDict()
        self.lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, t):
        key = float(t)
        with self.lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                self.hits += 1
                return self._entries[key]
        genset = build(self.space, self.scenario, key)
        with self.lock:
            self.misses += 1
            self._entries[key] = genset
            while len(self._entries) > self.maxsize:
                self._entries.popitem(last=False)
        return genset
