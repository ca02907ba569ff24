"""Espacio de estados de la cola latest-only con prioridad no expulsiva

Un estado es la tupla (J, B_1..B_N): J es la clase en servicio (0 = ocioso) y B_i
indica si hay un paquete esperando en el buffer de tamaño uno de la clase i.
El índice σ se expone 1-based; los arreglos internos usan σ - 1.
"""
from dataclasses import dataclass, field
import logging

from utils.exceptions import ConfigurationError, StateLogicError
from utils.validators import validar_n_clases

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SystemState:
    """Estado de la CTMC: clase en servicio y ocupación de buffers"""
    J: int
    B: tuple

    def __post_init__(self):
        if self.J < 0 or self.J > len(self.B):
            raise StateLogicError(f"Clase en servicio fuera de rango: J={self.J}, N={len(self.B)}")
        if any(b not in (0, 1) for b in self.B):
            raise StateLogicError(f"Ocupación de buffer inválida: {self.B}")
        # Conservación de trabajo: el único estado ocioso tiene los buffers vacíos
        if self.J == 0 and any(self.B):
            raise StateLogicError(f"Estado ocioso con buffers ocupados: {self.B}")

    @property
    def n_classes(self):
        return len(self.B)

    @property
    def is_idle(self):
        return self.J == 0

    @classmethod
    def idle(cls, n):
        return cls(0, (0,) * n)

    def __str__(self):
        if self.J == 0:
            return "ocioso"
        return f"(J={self.J}, B={''.join(str(b) for b in self.B)})"


def sigma(s):
    """Índice σ(s) en 1..|Q| (forma cerrada)"""
    if s.J == 0:
        return 1
    n = s.n_classes
    return 2 + (2 ** n) * (s.J - 1) + sum(b << i for i, b in enumerate(s.B))


def next_class(s):
    """Clase que entra a servicio tras una finalización: min{i : B_i = 1}, o 0"""
    for i, b in enumerate(s.B, start=1):
        if b:
            return i
    return 0


def dest(s):
    """Estado alcanzado inmediatamente después de una finalización de servicio"""
    if s.J == 0:
        raise StateLogicError("dest() no está definido para el estado ocioso")
    k = next_class(s)
    if k == 0:
        return SystemState.idle(s.n_classes)
    buffers = list(s.B)
    buffers[k - 1] = 0
    return SystemState(k, tuple(buffers))


def arrival_target(s, k):
    """Estado tras una llegada de clase k (los reemplazos son auto-transiciones)"""
    n = s.n_classes
    if k < 1 or k > n:
        raise StateLogicError(f"Clase de llegada fuera de rango: k={k}, N={n}")
    if s.J == 0:
        return SystemState(k, (0,) * n)
    if s.B[k - 1] == 1:
        return s
    buffers = list(s.B)
    buffers[k - 1] = 1
    return SystemState(s.J, tuple(buffers))


@dataclass(frozen=True)
class StateSpace:
    """Estados ordenados por σ; inmutable y compartible entre hilos"""
    N: int
    states: tuple
    _index: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: i + 1 for i, s in enumerate(self.states)})

    @property
    def size(self):
        return len(self.states)

    def index_of(self, s):
        """σ(s), 1-based"""
        try:
            return self._index[s]
        except KeyError:
            raise StateLogicError(f"Estado fuera del espacio: {s}") from None

    def position(self, s):
        """Posición 0-based en los arreglos internos"""
        return self.index_of(s) - 1

    def state_at(self, sigma_value):
        """Estado con índice σ (1-based)"""
        if sigma_value < 1 or sigma_value > self.size:
            raise StateLogicError(f"σ fuera de rango: {sigma_value}")
        return self.states[sigma_value - 1]

    @property
    def idle_state(self):
        return self.states[0]

    @property
    def last_state(self):
        return self.states[-1]


def enumerate_states(n):
    """Enumera los 1 + N·2^N estados en orden σ"""
    es_valido, mensaje = validar_n_clases(n)
    if not es_valido:
        raise ConfigurationError(mensaje)
    if n > 7:
        logger.warning(f"N={n}: |Q|={1 + n * 2 ** n}; las matrices densas ocupan mucha memoria")
    states = [SystemState.idle(n)]
    for j in range(1, n + 1):
        for code in range(2 ** n):
            states.append(SystemState(j, tuple((code >> i) & 1 for i in range(n))))
    space = StateSpace(n, tuple(states))
    logger.debug(f"Espacio de estados N={n}: |Q|={space.size}")
    return space

