"""Estado estacionario periódico (PSS) y diagnóstico de Floquet

El PSS es el punto fijo del mapa de un periodo F(x0) = x(T). Se resuelve con la
iteración relajada x ← (1−α)x + α·F(x), renormalizando p después de cada periodo.
"""
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy import linalg

from config.settings import DEFAULT_ALPHA, DEFAULT_EPSILON, DEFAULT_MAX_ITERS
from services.generator import GeneratorCache, build, reduce, structure
from services.ode_service import (
    IntegrationConfig,
    MomentStack,
    integrate,
    integration_grid,
    rk4_propagate,
)
from services.state_space import enumerate_states
from utils.exceptions import ConfigurationError, InsufficientDataError, NumericalFailureError
from utils.validators import validar_solver

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PssConfig:
    """Tolerancia ε, máximo de iteraciones K y relajación α"""
    epsilon: float = DEFAULT_EPSILON
    max_iters: int = DEFAULT_MAX_ITERS
    alpha: float = DEFAULT_ALPHA
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)

    def __post_init__(self):
        es_valido, mensaje = validar_solver(
            self.epsilon, self.max_iters, self.alpha, self.integration.steps_per_period
        )
        if not es_valido:
            raise ConfigurationError(mensaje)


@dataclass
class PssSolution:
    """Trayectoria periódica convergida y su historial de residuos"""
    x_star_0: MomentStack
    trajectory: object
    residual_history: list
    converged: bool
    iterations: int
    scenario: object
    space: object
    config: PssConfig

    @property
    def times(self):
        return self.trajectory.times

    @property
    def final_residual(self):
        return self.residual_history[-1] if self.residual_history else float("nan")

    def periodicity_residual(self):
        """‖x(T) − x(0)‖ / (1 + ‖x(0)‖) sobre la trayectoria guardada"""
        x0 = self.trajectory.samples[0]
        xT = self.trajectory.samples[-1]
        return float(np.linalg.norm(xT - x0) / (1.0 + np.linalg.norm(x0)))


@dataclass
class FloquetReport:
    """Multiplicadores de la matriz de monodromía del sistema reducido homogéneo"""
    multipliers: np.ndarray
    spectral_radius: float
    stable: bool
    block_sizes: tuple
    lower_block_residual: float
    monodromy: np.ndarray = field(repr=False, default=None)

    @property
    def dimension(self):
        return int(sum(self.block_sizes))


def one_period_map(x0, scenario, cfg, space=None):
    """F(x0) = x(T) integrando sobre [0, T]"""
    space = space or enumerate_states(scenario.N)
    integracion = cfg.integration if isinstance(cfg, PssConfig) else cfg
    return integrate(x0, 0.0, scenario.period, integracion, scenario, space)


def renormalize(x):
    """Reescala p para que sume 1; los bloques de momentos no cambian"""
    total = float(np.sum(x.p))
    if not total > 0:
        raise NumericalFailureError(f"No se puede renormalizar: Σp = {total}")
    y = x.copy()
    y.p[:] = x.p / total
    return y


def relative_change(x_new, x_old):
    return float(np.linalg.norm(x_new.data - x_old.data) / (1.0 + np.linalg.norm(x_old.data)))


def solve(scenario, cfg=None, x0=None):
    """Iteración de punto fijo relajada para el PSS

    La no convergencia en K iteraciones se devuelve con converged=False.
    """
    cfg = cfg or PssConfig()
    space = enumerate_states(scenario.N)
    x = x0.copy() if x0 is not None else MomentStack.idle(space)
    logger.info(
        f"Resolviendo PSS de '{scenario.name}': N={scenario.N}, |Q|={space.size}, "
        f"dimensión {x.data.size}, α={cfg.alpha}, ε={cfg.epsilon:g}"
    )
    history = []
    converged = False
    for n in range(cfg.max_iters):
        x_T = renormalize(one_period_map(x, scenario, cfg, space))
        x_new = MomentStack((1.0 - cfg.alpha) * x.data + cfg.alpha * x_T.data, space.N)
        residuo = relative_change(x_new, x)
        history.append(residuo)
        logger.debug(f"Iteración {n + 1}: residuo relativo {residuo:.3e}")
        x = x_new
        if residuo <= cfg.epsilon:
            converged = True
            break

    _, trayectoria = integrate(x, 0.0, scenario.period, cfg.integration, scenario, space, record=True)
    if converged:
        logger.info(f"PSS convergido en {len(history)} iteraciones (residuo {history[-1]:.3e})")
    else:
        logger.warning(
            f"PSS sin convergencia tras {len(history)} iteraciones (residuo {history[-1]:.3e})"
        )
    return PssSolution(
        x_star_0=x,
        trajectory=trayectoria,
        residual_history=history,
        converged=converged,
        iterations=len(history),
        scenario=scenario,
        space=space,
        config=cfg,
    )


def fixed_point_residual(solution):
    """‖F(x*) − x*‖ / (1 + ‖x*‖)"""
    x = solution.x_star_0
    fx = one_period_map(x, solution.scenario, solution.config, solution.space)
    return relative_change(fx, x)


def contraction_rate(residual_history, tail=None):
    """Razón geométrica estimada por mínimos cuadrados sobre log(residuo)"""
    r = np.asarray(residual_history, dtype=float)
    if tail is not None:
        r = r[-tail:]
    r = r[r > 0]
    if len(r) < 5:
        raise InsufficientDataError(f"Se requieren al menos 5 residuos positivos (hay {len(r)})")
    pendiente = np.polyfit(np.arange(len(r)), np.log(r), 1)[0]
    return float(np.exp(pendiente))


def compact_block_sizes(n, nq):
    return (nq,) * n + (nq,) + (nq,) * n + (nq - 1,)


def compact_matrix(genset, ind, n):
    """Matriz A(t) del sistema homogéneo compacto (forma de columna, triangular superior por bloques)"""
    nq = genset.Q.shape[0]
    dim = (2 * n + 1) * nq + nq - 1
    A = np.zeros((dim, dim))
    red = reduce(genset)
    off_y = n * nq
    off_p = (2 * n + 1) * nq

    def acoplar_p(fila, C):
        # Ẋ += p·C con p = p_red·T + b  ⇒  bloque (T·C)ᵀ; la parte b es fuente y no entra
        A[fila: fila + nq, off_p:] = (C[:-1] - C[-1][None, :]).T

    Qt = genset.Q.T
    for i in range(n):
        fila = i * nq
        A[fila: fila + nq, fila: fila + nq] = Qt - genset.M_class[i].T
        A[fila: fila + nq, off_y: off_y + nq] = genset.M_class[i].T
        acoplar_p(fila, np.eye(nq))

    A[off_y: off_y + nq, off_y: off_y + nq] = Qt - genset.M_comp.T
    for k in range(n):
        col = (n + 1 + k) * nq
        A[off_y: off_y + nq, col: col + nq] = (ind.d_next_eq[k][:, None] * genset.M_comp).T
    acoplar_p(off_y, np.diag(ind.d_J_neq_0))

    for i in range(n):
        fila = (n + 1 + i) * nq
        A[fila: fila + nq, fila: fila + nq] = (
            Qt - genset.M_next[i].T - genset.arrival_rates[i] * np.diag(ind.d_B_eq_1[i])
        )
        acoplar_p(fila, np.diag(ind.d_B_eq_1[i]))

    A[off_p:, off_p:] = red.Q_red.T
    return A


def lower_block_residual(phi, block_sizes):
    """Máximo |Φ_ij| en los bloques estrictamente debajo de la diagonal"""
    bordes = np.concatenate(([0], np.cumsum(block_sizes)))
    peor = 0.0
    for r in range(1, len(block_sizes)):
        bloque = phi[bordes[r]: bordes[r + 1], : bordes[r]]
        if bloque.size:
            peor = max(peor, float(np.max(np.abs(bloque))))
    return peor


def block_multipliers(phi, block_sizes):
    """Multiplicadores de Φ triangular superior por bloques: autovalores de cada bloque diagonal"""
    bordes = np.concatenate(([0], np.cumsum(block_sizes)))
    return np.concatenate([
        linalg.eigvals(phi[bordes[r]: bordes[r + 1], bordes[r]: bordes[r + 1]])
        for r in range(len(block_sizes))
    ])


def monodromy(scenario, cfg=None, workers=1, cache_size=64, keep_matrix=True):
    """Φ(T) del sistema compacto reducido y sus multiplicadores de Floquet

    Las columnas de Φ se integran por bloques en paralelo con la misma malla que el solver.
    """
    cfg = cfg or PssConfig()
    integracion = cfg.integration if isinstance(cfg, PssConfig) else cfg
    space = enumerate_states(scenario.N)
    n, nq = scenario.N, space.size
    ind = structure(n).indicators
    sizes = compact_block_sizes(n, nq)
    dim = int(sum(sizes))
    grid = integration_grid(scenario, 0.0, scenario.period, integracion)
    cache = GeneratorCache(space, scenario, maxsize=cache_size)
    logger.info(f"Monodromía de '{scenario.name}': dimensión reducida {dim}, {workers} bloque(s)")

    def derivada(t, phi):
        return compact_matrix(cache.get(t), ind, n) @ phi

    bloques = [b for b in np.array_split(np.arange(dim), max(1, workers)) if len(b)]
    columnas = {}

    def integrar_bloque(idx, cols):
        ident = np.zeros((dim, len(cols)))
        ident[cols, np.arange(len(cols))] = 1.0
        phi_T, _ = rk4_propagate(derivada, ident, grid)
        return idx, phi_T

    if len(bloques) == 1:
        columnas[0] = integrar_bloque(0, bloques[0])[1]
    else:
        with ThreadPoolExecutor(max_workers=len(bloques)) as executor:
            futures = {executor.submit(integrar_bloque, i, cols): i for i, cols in enumerate(bloques)}
            for future in as_completed(futures):
                idx, phi_T = future.result()
                columnas[idx] = phi_T
    phi = np.hstack([columnas[i] for i in sorted(columnas)])

    residuo = lower_block_residual(phi, sizes)
    multipliers = block_multipliers(phi, sizes)
    radio = float(np.max(np.abs(multipliers)))
    estable = radio < 1.0
    if not estable:
        logger.warning(f"Radio espectral {radio:.12f} >= 1: el escenario no es estable")
    logger.info(f"Radio espectral de la monodromía: {radio:.6f} (caché {cache.hits}/{cache.hits + cache.misses})")
    return FloquetReport(
        multipliers=multipliers,
        spectral_radius=radio,
        stable=estable,
        block_sizes=sizes,
        lower_block_residual=residuo,
        monodromy=phi if keep_matrix else None,
    )
