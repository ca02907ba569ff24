"""Perfiles de tasa T-periódicos (llegadas y servicio) y escenarios

La disponibilidad ON/OFF no es un objeto aparte: se pliega en los perfiles de servicio,
que evalúan a cero fuera de las ventanas ON.
"""
from dataclasses import dataclass, replace
import logging
import math

import numpy as np

from utils.exceptions import ConfigurationError
from utils.validators import (
    validar_breakpoints,
    validar_n_clases,
    validar_periodo,
    validar_tasas,
    validar_ventanas,
)

logger = logging.getLogger(__name__)

WINDOWED_SERVICE = "windowed_sinusoid_service"
WINDOWED_ARRIVAL = "windowed_sinusoid_arrival"
PIECEWISE_CONSTANT = "piecewise_constant"
SAMPLED_TABLE = "sampled_table"

KINDS = (WINDOWED_SERVICE, WINDOWED_ARRIVAL, PIECEWISE_CONSTANT, SAMPLED_TABLE)


def _exigir(resultado):
    es_valido, mensaje = resultado
    if not es_valido:
        raise ConfigurationError(mensaje)


@dataclass(frozen=True)
class RateProfile:
    """Función de tasa T-periódica no negativa

    Parámetros según `kind`:
      - windowed_sinusoid_service: peak, t_pass, offset
      - windowed_sinusoid_arrival: base, peak, t_pass, offset
      - piecewise_constant: breakpoints, values
      - sampled_table: values (muestras en una malla uniforme de [0, T))
    `on_windows` (opcional) anula la tasa fuera de las ventanas ON.
    """
    kind: str
    period: float
    peak: float = 0.0
    base: float = 0.0
    t_pass: float = 0.0
    offset: float = 0.0
    breakpoints: tuple = ()
    values: tuple = ()
    on_windows: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"Tipo de perfil desconocido: {self.kind!r}")
        _exigir(validar_periodo(self.period))
        if self.kind in (WINDOWED_SERVICE, WINDOWED_ARRIVAL):
            _exigir(validar_periodo(self.period, self.t_pass))
            _exigir(validar_tasas([self.peak, self.base]))
            if not (0 <= self.offset < self.period):
                raise ConfigurationError(f"offset fuera de [0, {self.period}): {self.offset}")
        elif self.kind == PIECEWISE_CONSTANT:
            if len(self.values) == 0:
                raise ConfigurationError("piecewise_constant requiere al menos un valor")
            if len(self.breakpoints) != len(self.values):
                raise ConfigurationError(
                    f"piecewise_constant: {len(self.breakpoints)} puntos de quiebre "
                    f"para {len(self.values)} valores"
                )
            _exigir(validar_breakpoints(self.breakpoints, self.period))
            _exigir(validar_tasas(self.values))
        else:
            if len(self.values) == 0:
                raise ConfigurationError("sampled_table requiere al menos una muestra")
            _exigir(validar_tasas(self.values))
        _exigir(validar_ventanas(self.on_windows, self.period))

    # Constructores por tipo
    @classmethod
    def windowed_service(cls, mu_peak, t_pass, period, offset=0.0):
        return cls(WINDOWED_SERVICE, float(period), peak=float(mu_peak),
                   t_pass=float(t_pass), offset=float(offset))

    @classmethod
    def windowed_arrival(cls, lambda_base, lambda_peak, t_pass, period, offset=0.0):
        return cls(WINDOWED_ARRIVAL, float(period), peak=float(lambda_peak),
                   base=float(lambda_base), t_pass=float(t_pass), offset=float(offset))

    @classmethod
    def piecewise(cls, values, period, breakpoints=None):
        values = tuple(float(v) for v in values)
        if breakpoints is None:
            breakpoints = tuple(period * j / len(values) for j in range(len(values)))
        return cls(PIECEWISE_CONSTANT, float(period),
                   breakpoints=tuple(float(b) for b in breakpoints), values=values)

    @classmethod
    def constant(cls, rate, period):
        return cls.piecewise([rate], period)

    @classmethod
    def table(cls, samples, period):
        return cls(SAMPLED_TABLE, float(period), values=tuple(float(v) for v in samples))

    def with_availability(self, on_windows):
        """Copia del perfil con las ventanas ON plegadas"""
        if not on_windows:
            return self
        return replace(self, on_windows=tuple((float(a), float(b)) for a, b in on_windows))

    def _window(self, tau):
        u = (tau - self.offset) % self.period
        if u > self.t_pass:
            return 0.0
        return max(0.0, math.cos(math.pi / self.t_pass * (u - self.t_pass / 2.0)))

    def _available(self, tau):
        if not self.on_windows:
            return True
        return any(a <= tau < b for a, b in self.on_windows)

    def eval(self, t):
        """Tasa en el instante t (siempre evaluada en t mod T)"""
        tau = t % self.period
        if not self._available(tau):
            return 0.0
        if self.kind == WINDOWED_SERVICE:
            return self.peak * self._window(tau)
        if self.kind == WINDOWED_ARRIVAL:
            return self.base + self.peak * self._window(tau)
        if self.kind == PIECEWISE_CONSTANT:
            j = int(np.searchsorted(self.breakpoints, tau, side="right")) - 1
            return self.values[j]
        # sampled_table: interpolación lineal con cierre periódico
        m = len(self.values)
        x = tau / self.period * m
        j = int(math.floor(x)) % m
        w = x - math.floor(x)
        return (1.0 - w) * self.values[j] + w * self.values[(j + 1) % m]

    def max_rate(self):
        """Cota superior de eval sobre [0, T] (exacta para las sinusoides)"""
        if self.kind == WINDOWED_SERVICE:
            return self.peak
        if self.kind == WINDOWED_ARRIVAL:
            return self.base + self.peak
        return max(self.values)

    def breakpoint_times(self):
        """Instantes en [0, T) donde la tasa o su derivada no son suaves"""
        puntos = {0.0}
        if self.kind in (WINDOWED_SERVICE, WINDOWED_ARRIVAL):
            puntos.add(self.offset % self.period)
            puntos.add((self.offset + self.t_pass) % self.period)
        elif self.kind == PIECEWISE_CONSTANT:
            puntos.update(self.breakpoints)
        else:
            m = len(self.values)
            puntos.update(self.period * j / m for j in range(m))
        for a, b in self.on_windows:
            puntos.add(a % self.period)
            puntos.add(b % self.period)
        return sorted(puntos)


def eval(profile, t):  # noqa: A001
    return profile.eval(t)


def max_rate(profile):
    return profile.max_rate()


@dataclass(frozen=True)
class Scenario:
    """N clases con perfiles de llegada y de servicio de periodo común T"""
    N: int
    period: float
    arrival: tuple
    service: tuple
    name: str = "escenario"

    def __post_init__(self):
        _exigir(validar_n_clases(self.N))
        _exigir(validar_periodo(self.period))
        if len(self.arrival) != self.N or len(self.service) != self.N:
            raise ConfigurationError(
                f"Se esperaban {self.N} perfiles de llegada y de servicio "
                f"(recibidos {len(self.arrival)} y {len(self.service)})"
            )
        for perfil in self.arrival + self.service:
            if not math.isclose(perfil.period, self.period, rel_tol=0, abs_tol=1e-12):
                raise ConfigurationError(
                    f"Todos los perfiles deben compartir el periodo {self.period} "
                    f"(encontrado {perfil.period})"
                )

    def arrival_rates(self, t):
        """Vector λ(t) de longitud N"""
        return np.array([p.eval(t) for p in self.arrival])

    def service_rates(self, t):
        """Vector μ(t) de longitud N"""
        return np.array([p.eval(t) for p in self.service])

    def breakpoints(self):
        """Unión de los puntos de quiebre de todos los perfiles en [0, T)"""
        puntos = set()
        for perfil in self.arrival + self.service:
            puntos.update(perfil.breakpoint_times())
        return sorted(puntos)

    def is_outage(self, t):
        """True si todas las tasas de servicio son cero en t"""
        return all(p.eval(t) == 0.0 for p in self.service)

    def with_availability(self, on_windows):
        """Pliega ventanas ON/OFF en todos los perfiles de servicio"""
        servicio = tuple(p.with_availability(on_windows) for p in self.service)
        return replace(self, service=servicio)


def windowed_scenario(mu_peaks, lambda_bases, lambda_peaks, t_pass, period, name="ventana"):
    """Escenario de sinusoides con ventana, como el de la Tabla 1"""
    n = len(mu_peaks)
    return Scenario(
        N=n,
        period=float(period),
        arrival=tuple(
            RateProfile.windowed_arrival(lambda_bases[i], lambda_peaks[i], t_pass, period)
            for i in range(n)
        ),
        service=tuple(RateProfile.windowed_service(mu_peaks[i], t_pass, period) for i in range(n)),
        name=name,
    )


def constant_scenario(lambdas, mus, period=1.0, name="constante"):
    """Escenario de tasas constantes (caso invariante en el tiempo)"""
    n = len(lambdas)
    return Scenario(
        N=n,
        period=float(period),
        arrival=tuple(RateProfile.constant(lam, period) for lam in lambdas),
        service=tuple(RateProfile.constant(mu, period) for mu in mus),
        name=name,
    )


def table1_scenario():
    """Escenario de referencia: T = 10, T_pass = 5, tres clases"""
    return windowed_scenario(
        mu_peaks=(1.0, 1.5, 3.0),
        lambda_bases=(0.05, 0.10, 0.20),
        lambda_peaks=(0.10, 0.30, 0.80),
        t_pass=5.0,
        period=10.0,
        name="tabla1",
    )
