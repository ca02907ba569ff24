"""Simulación de eventos discretos de la cola física para validar la solución ODE

Llegadas Poisson no homogéneas y finalizaciones con tasa μ_J(t) se muestrean por
adelgazamiento (thinning) contra cotas constantes. Disciplina de prioridad estricta
no expulsiva con buffers latest-only de tamaño uno.

Semillas: el camino `i` del ensayo `k` usa SeedSequence([root_seed, k, i]).
"""
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
import logging
import math

import numpy as np
import pandas as pd

from config.settings import (
    DEFAULT_N_BINS,
    DEFAULT_N_PATHS,
    DEFAULT_N_TRIALS,
    DEFAULT_ROOT_SEED,
    DEFAULT_SAMPLE_PERIODS,
    DEFAULT_WARMUP_PERIODS,
    config,
)
from services.generator import structure
from services.metrics_service import solution_metrics
from services.state_space import SystemState
from utils.exceptions import ConfigurationError, InsufficientDataError
from utils.grid import match_grid, phase_grid
from utils.stats import sample_mean, standard_error
from utils.validators import validar_mc

logger = logging.getLogger(__name__)

# Caminos por tarea enviada al pool
CHUNK_SIZE = 25


@dataclass(frozen=True)
class McConfig:
    """Parámetros del Monte Carlo"""
    n_paths: int = DEFAULT_N_PATHS
    n_trials: int = DEFAULT_N_TRIALS
    warmup_periods: int = DEFAULT_WARMUP_PERIODS
    root_seed: int = DEFAULT_ROOT_SEED
    n_bins: int = DEFAULT_N_BINS
    sample_periods: int = DEFAULT_SAMPLE_PERIODS

    def __post_init__(self):
        es_valido, mensaje = validar_mc(
            self.n_paths, self.n_trials, self.warmup_periods, self.n_bins, self.sample_periods
        )
        if not es_valido:
            raise ConfigurationError(mensaje)

    def horizon(self, period):
        return (self.warmup_periods + self.sample_periods) * period

    def warmup(self, period):
        return self.warmup_periods * period


@dataclass(frozen=True)
class PathEvent:
    """Evento registrado: kind es 'arrival' o 'completion'

    En una llegada gen_time es el instante de generación del paquete que llega; en una
    finalización es el del paquete que entra a servicio (None si el servidor queda ocioso).
    """
    t: float
    kind: str
    klass: int
    before: SystemState
    after: SystemState
    gen_time: float = None
    served_gen_time: float = None


@dataclass
class PathResult:
    """Muestras de un camino tras el calentamiento"""
    period: float
    n_bins: int
    aoi_sum: np.ndarray          # (N, n_bins) suma de Δ_i en cada fase
    aoi_count: np.ndarray        # (n_bins,)
    completion_class: np.ndarray
    completion_bin: np.ndarray
    completion_age: np.ndarray
    completion_time: np.ndarray
    occupancy: np.ndarray        # tiempo en cada estado (posición σ − 1)
    arrivals: np.ndarray         # (N, n_bins) llegadas aceptadas por fase
    events: list = None

    def mean_aoi_by_phase(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.aoi_sum / self.aoi_count[None, :]


def path_seed(root_seed, trial, index):
    return np.random.SeedSequence([int(root_seed), int(trial), int(index)])


def _posicion(J, B, n):
    if J == 0:
        return 0
    return 1 + (2 ** n) * (J - 1) + sum(b << i for i, b in enumerate(B))


def _estado(J, B):
    return SystemState(J, tuple(B))


def _sample_times(period, grid, warmup, horizon):
    k0 = int(math.floor(warmup / period))
    k1 = int(math.ceil(horizon / period))
    ks = np.arange(k0, k1 + 1)
    tiempos = (ks[:, None] * period + grid[None, :]).ravel()
    fases = np.tile(np.arange(len(grid)), len(ks))
    mask = (tiempos >= warmup) & (tiempos < horizon)
    return tiempos[mask], fases[mask]


def simulate_path(scenario, horizon, warmup, seed, n_bins=DEFAULT_N_BINS, log_events=False):
    """Simula un camino desde el sistema vacío en t = 0 con edades del monitor en 0"""
    if not (horizon > warmup >= 0):
        raise ConfigurationError(f"Se requiere horizon > warmup >= 0 (horizon={horizon}, warmup={warmup})")
    rng = np.random.default_rng(seed)
    n = scenario.N
    T = scenario.period
    ancho = T / n_bins
    grid = phase_grid(T, n_bins)
    lam_max = [p.max_rate() for p in scenario.arrival]
    mu_max = [p.max_rate() for p in scenario.service]
    lam_acum = np.cumsum(lam_max)
    lam_total = float(lam_acum[-1])

    J = 0
    B = [0] * n
    gen_servicio = None
    gen_buffer = [None] * n
    origen = [0.0] * n

    aoi_sum = np.zeros((n, n_bins))
    aoi_count = np.zeros(n_bins)
    occupancy = np.zeros(1 + n * 2 ** n)
    arrivals = np.zeros((n, n_bins))
    comp_cls, comp_bin, comp_age, comp_t = [], [], [], []
    events = [] if log_events else None

    muestras, fases = _sample_times(T, grid, warmup, horizon)
    si = 0
    t = 0.0
    while True:
        cota = lam_total + (mu_max[J - 1] if J else 0.0)
        t_next = t + rng.exponential(1.0 / cota) if cota > 0 else math.inf
        fin = min(t_next, horizon)
        while si < len(muestras) and muestras[si] < fin:
            ts = muestras[si]
            j = fases[si]
            for i in range(n):
                aoi_sum[i, j] += ts - origen[i]
            aoi_count[j] += 1
            si += 1
        inicio = max(t, warmup)
        if fin > inicio:
            occupancy[_posicion(J, B, n)] += fin - inicio
        if t_next >= horizon:
            break
        t = t_next
        u = rng.random() * cota
        bin_t = min(int((t % T) / ancho), n_bins - 1)

        if u < lam_total:
            k = int(np.searchsorted(lam_acum, u, side="right"))
            if rng.random() * lam_max[k] >= scenario.arrival[k].eval(t):
                continue
            antes = _estado(J, B) if log_events else None
            if J == 0:
                J = k + 1
                gen_servicio = t
            else:
                # Buffer vacío: se llena; ocupado: se reemplaza (latest-only)
                B[k] = 1
                gen_buffer[k] = t
            if t >= warmup:
                arrivals[k, bin_t] += 1
            if log_events:
                events.append(PathEvent(t, "arrival", k + 1, antes, _estado(J, B), gen_time=t))
        else:
            if rng.random() * mu_max[J - 1] >= scenario.service[J - 1].eval(t):
                continue
            antes = _estado(J, B) if log_events else None
            c = J
            servido = gen_servicio
            if t >= warmup:
                comp_cls.append(c)
                comp_bin.append(bin_t)
                comp_age.append(t - origen[c - 1])
                comp_t.append(t)
            origen[c - 1] = servido
            siguiente = next((i for i in range(n) if B[i]), None)
            if siguiente is None:
                J = 0
                gen_servicio = None
            else:
                J = siguiente + 1
                gen_servicio = gen_buffer[siguiente]
                B[siguiente] = 0
                gen_buffer[siguiente] = None
            if log_events:
                events.append(PathEvent(t, "completion", c, antes, _estado(J, B),
                                        gen_time=gen_servicio, served_gen_time=servido))

    return PathResult(
        period=T,
        n_bins=n_bins,
        aoi_sum=aoi_sum,
        aoi_count=aoi_count,
        completion_class=np.array(comp_cls, dtype=int),
        completion_bin=np.array(comp_bin, dtype=int),
        completion_age=np.array(comp_age, dtype=float),
        completion_time=np.array(comp_t, dtype=float),
        occupancy=occupancy,
        arrivals=arrivals,
        events=events,
    )


def _simulate_chunk(scenario, horizon, warmup, seeds, n_bins, log_events):
    return [simulate_path(scenario, horizon, warmup, s, n_bins, log_events) for s in seeds]


def run_paths(scenario, mc, n_paths=None, trial=0, workers=None, log_events=False):
    """Simula n_paths caminos independientes; el orden del resultado es el índice del camino"""
    n_paths = mc.n_paths if n_paths is None else n_paths
    workers = config.workers if workers is None else workers
    horizon = mc.horizon(scenario.period)
    warmup = mc.warmup(scenario.period)
    seeds = [path_seed(mc.root_seed, trial, i) for i in range(n_paths)]
    bloques = [seeds[i: i + CHUNK_SIZE] for i in range(0, n_paths, CHUNK_SIZE)]
    logger.info(f"Simulando {n_paths} caminos (ensayo {trial}, {workers} proceso(s))")

    if workers <= 1 or len(bloques) <= 1:
        return _simulate_chunk(scenario, horizon, warmup, seeds, mc.n_bins, log_events)

    resultados = {}
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {
            executor.submit(_simulate_chunk, scenario, horizon, warmup, bloque, mc.n_bins, log_events): idx
            for idx, bloque in enumerate(bloques)
        }
        for future in as_completed(futures):
            resultados[futures[future]] = future.result()
    caminos = []
    for idx in sorted(resultados):
        caminos.extend(resultados[idx])
    return caminos


@dataclass
class McEstimate:
    """Promedios por fase del AoI y del PAoI empíricos con errores estándar"""
    grid: np.ndarray
    period: float
    mean_aoi: np.ndarray       # (N, n_bins)
    mean_aoi_se: np.ndarray
    peak_aoi: np.ndarray       # NaN donde no hubo finalizaciones
    peak_aoi_se: np.ndarray
    peak_count: np.ndarray
    n_paths: int
    n_trials: int = 1

    @property
    def n_classes(self):
        return self.mean_aoi.shape[0]

    def to_frame(self):
        n, m = self.mean_aoi.shape
        return pd.DataFrame({
            "t": np.tile(self.grid, n),
            "class": np.repeat(np.arange(1, n + 1), m),
            "mean_aoi": self.mean_aoi.ravel(),
            "mean_aoi_se": self.mean_aoi_se.ravel(),
            "peak_aoi": self.peak_aoi.ravel(),
            "peak_aoi_se": self.peak_aoi_se.ravel(),
            "peak_count": self.peak_count.ravel().astype(int),
            "n_paths": self.n_paths,
        })


def estimate(paths, n_trials=1):
    """Agrega caminos en promedios por fase (reducción determinista en orden de índice)"""
    if not paths:
        raise InsufficientDataError("No hay caminos para estimar")
    primero = paths[0]
    n_bins = primero.n_bins
    n = primero.aoi_sum.shape[0]
    por_camino = np.stack([p.mean_aoi_by_phase() for p in paths])
    mean = sample_mean(por_camino, axis=0)
    se = standard_error(por_camino, axis=0)

    clases = np.concatenate([p.completion_class for p in paths])
    bins = np.concatenate([p.completion_bin for p in paths])
    edades = np.concatenate([p.completion_age for p in paths])
    peak = np.full((n, n_bins), np.nan)
    peak_se = np.full((n, n_bins), np.nan)
    conteo = np.zeros((n, n_bins), dtype=int)
    for c in range(1, n + 1):
        m = clases == c
        b = bins[m]
        ag = edades[m]
        cnt = np.bincount(b, minlength=n_bins)
        sumas = np.bincount(b, weights=ag, minlength=n_bins)
        with np.errstate(invalid="ignore", divide="ignore"):
            media = np.where(cnt > 0, sumas / np.maximum(cnt, 1), np.nan)
            desv = np.bincount(b, weights=(ag - media[b]) ** 2, minlength=n_bins)
            se_c = np.where(cnt >= 2, np.sqrt(desv / np.maximum(cnt - 1, 1)) / np.sqrt(np.maximum(cnt, 1)), np.nan)
        peak[c - 1] = media
        peak_se[c - 1] = se_c
        conteo[c - 1] = cnt
        vacios = int(np.sum(cnt == 0))
        if vacios:
            logger.debug(f"Clase {c}: {vacios} intervalo(s) sin finalizaciones (PAoI indefinido)")
    return McEstimate(
        grid=phase_grid(primero.period, n_bins),
        period=primero.period,
        mean_aoi=mean,
        mean_aoi_se=se,
        peak_aoi=peak,
        peak_aoi_se=peak_se,
        peak_count=conteo,
        n_paths=len(paths),
        n_trials=n_trials,
    )


@dataclass
class ValidationReport:
    """Errores absolutos medios ODE vs Monte Carlo por clase"""
    n_paths: int
    mean_aoi_mae: np.ndarray
    peak_aoi_mae: np.ndarray
    undefined_peak_bins: np.ndarray
    mean_level: np.ndarray
    ode_mean_aoi: np.ndarray = field(repr=False)
    ode_peak_aoi: np.ndarray = field(repr=False)
    outage: np.ndarray = field(repr=False)

    @property
    def relative_mean_aoi_mae(self):
        """MAE del AoI medio relativo al nivel medio de la curva ODE"""
        return float(np.sum(self.mean_aoi_mae) / np.sum(self.mean_level))

    def fraction_within(self, mc, k=3.0):
        """Fracción de puntos de la malla con |ODE − MC| ≤ k·se (AoI medio)"""
        ok = np.abs(self.ode_mean_aoi - mc.mean_aoi) <= k * mc.mean_aoi_se
        return float(np.mean(ok))


def _ode_peak_by_bin(solution, grid_edges, klass):
    """PAoI ODE por intervalo ponderado por la intensidad de finalización μ_i(t)·π_i(t)"""
    n = solution.scenario.N
    T = solution.scenario.period
    d = structure(n).indicators.d_J_eq[klass - 1]
    times = solution.times[:-1]
    muestras = solution.trajectory.samples[:-1]
    mu = np.array([solution.scenario.service[klass - 1].eval(t) for t in times])
    # regla del rectángulo: la malla alineada con quiebres puede tener pasos desiguales
    h = np.diff(solution.times)
    num = h * mu * (muestras[:, klass - 1, :] @ d)
    den = h * mu * (muestras[:, 2 * n + 1, :] @ d)
    ancho = T / len(grid_edges)
    idx = np.minimum((times / ancho + 1e-9).astype(int), len(grid_edges) - 1)
    suma_num = np.bincount(idx, weights=num, minlength=len(grid_edges))
    suma_den = np.bincount(idx, weights=den, minlength=len(grid_edges))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(suma_den > config.undefined_threshold, suma_num / suma_den, np.nan)


def validate(solution, mc):
    """Compara la PSS con una estimación Monte Carlo sobre la misma malla de fases"""
    T = solution.scenario.period
    if not math.isclose(mc.period, T) or mc.n_classes != solution.scenario.N:
        raise ConfigurationError(
            f"Estimación incompatible: periodo {mc.period} vs {T}, "
            f"{mc.n_classes} vs {solution.scenario.N} clases"
        )
    posiciones = match_grid(solution.times, mc.grid, T)
    if posiciones is None:
        raise ConfigurationError(
            "La malla Monte Carlo no coincide con la malla de integración; "
            "use n_bins que divida a steps_per_period"
        )
    metricas = solution_metrics(solution)
    ode_mean = np.stack([m.mean_aoi[posiciones] for m in metricas])
    ode_peak = np.stack([_ode_peak_by_bin(solution, mc.grid, i) for i in range(1, solution.scenario.N + 1)])

    mean_mae = np.mean(np.abs(ode_mean - mc.mean_aoi), axis=1)
    definidos = np.isfinite(ode_peak) & np.isfinite(mc.peak_aoi)
    with np.errstate(invalid="ignore"):
        diff = np.where(definidos, np.abs(ode_peak - mc.peak_aoi), 0.0)
        peak_mae = np.where(definidos.sum(axis=1) > 0, diff.sum(axis=1) / np.maximum(definidos.sum(axis=1), 1), np.nan)
    outage = np.array([solution.scenario.is_outage(t) for t in mc.grid])
    return ValidationReport(
        n_paths=mc.n_paths,
        mean_aoi_mae=mean_mae,
        peak_aoi_mae=peak_mae,
        undefined_peak_bins=(~definidos).sum(axis=1),
        mean_level=np.mean(ode_mean, axis=1),
        ode_mean_aoi=ode_mean,
        ode_peak_aoi=ode_peak,
        outage=outage,
    )


def mae_table(reports):
    """Tabla MAE vs número de caminos, ordenada por número de caminos"""
    filas = []
    for rep in sorted(reports, key=lambda r: r.n_paths):
        fila = {
            "n_paths": rep.n_paths,
            "mean_aoi_mae": float(np.mean(rep.mean_aoi_mae)),
            "peak_aoi_mae": float(np.nanmean(rep.peak_aoi_mae)) if np.any(np.isfinite(rep.peak_aoi_mae)) else np.nan,
            "relative_mean_aoi_mae": rep.relative_mean_aoi_mae,
            "undefined_peak_bins": int(np.sum(rep.undefined_peak_bins)),
        }
        for i, (m, pk) in enumerate(zip(rep.mean_aoi_mae, rep.peak_aoi_mae), start=1):
            fila[f"mean_aoi_mae_c{i}"] = float(m)
            fila[f"peak_aoi_mae_c{i}"] = float(pk)
        filas.append(fila)
    return pd.DataFrame(filas)


def _average_reports(reports):
    """Promedio de varios ensayos con el mismo número de caminos"""
    base = reports[0]
    return ValidationReport(
        n_paths=base.n_paths,
        mean_aoi_mae=np.mean([r.mean_aoi_mae for r in reports], axis=0),
        peak_aoi_mae=np.nanmean([r.peak_aoi_mae for r in reports], axis=0),
        undefined_peak_bins=np.max([r.undefined_peak_bins for r in reports], axis=0),
        mean_level=base.mean_level,
        ode_mean_aoi=base.ode_mean_aoi,
        ode_peak_aoi=base.ode_peak_aoi,
        outage=base.outage,
    )


def progressive_validation(solution, mc, path_counts, workers=None):
    """MC progresivo: por ensayo se simula el mayor número de caminos y los menores usan un prefijo

    Devuelve (tabla MAE vs caminos, última estimación, último reporte).
    """
    counts = sorted(set(int(c) for c in path_counts))
    if not counts or counts[0] < 1:
        raise ConfigurationError(f"Conteos de caminos inválidos: {path_counts}")
    por_conteo = {c: [] for c in counts}
    ultima = None
    for trial in range(mc.n_trials):
        caminos = run_paths(solution.scenario, mc, n_paths=counts[-1], trial=trial, workers=workers)
        for c in counts:
            est = estimate(caminos[:c], n_trials=mc.n_trials)
            rep = validate(solution, est)
            por_conteo[c].append(rep)
            logger.info(
                f"Ensayo {trial}: {c} caminos, MAE AoI medio {np.mean(rep.mean_aoi_mae):.4f} "
                f"(relativo {rep.relative_mean_aoi_mae:.2%})"
            )
            ultima = est
    reportes = [_average_reports(por_conteo[c]) for c in counts]
    return mae_table(reportes), ultima, reportes[-1]


def overlay_frame(report, mc):
    """Curvas ODE y MC superpuestas con marcas de corte de enlace"""
    n, m = mc.mean_aoi.shape
    return pd.DataFrame({
        "t": np.tile(mc.grid, n),
        "class": np.repeat(np.arange(1, n + 1), m),
        "ode_mean_aoi": report.ode_mean_aoi.ravel(),
        "mc_mean_aoi": mc.mean_aoi.ravel(),
        "mc_mean_aoi_se": mc.mean_aoi_se.ravel(),
        "ode_peak_aoi": report.ode_peak_aoi.ravel(),
        "mc_peak_aoi": mc.peak_aoi.ravel(),
        "mc_peak_aoi_se": mc.peak_aoi_se.ravel(),
        "mc_peak_count": mc.peak_count.ravel().astype(int),
        "outage": np.tile(report.outage, n),
    })
