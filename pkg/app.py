"""PeriodicAoI - línea de comandos

    python app.py solve|simulate|validate|floquet <config.yaml> [--out DIR] [--paths N]
                  [--seed S] [--steps M] [--workers W] [--xlsx]

Códigos de salida: 0 ok, 1 error inesperado, 2 configuración, 3 sin convergencia,
4 inestabilidad, 5 validación fallida.
"""
import argparse
import logging
import sys

import numpy as np
import pandas as pd

from config.scenario import apply_overrides, load_scenario
from config.settings import config
from services import export_service
from services.metrics_service import metrics_frame, state_probs_frame
from services.montecarlo_service import estimate, overlay_frame, progressive_validation, run_paths
from services.pss_service import monodromy, solve
from services.state_space import enumerate_states
from utils.exceptions import ConfigurationError, InsufficientDataError, NumericalFailureError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_UNSTABLE = 4
EXIT_VALIDATION = 5


def configurar_logging():
    logging.basicConfig(
        level=getattr(logging, config.log_level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(config.log_file, encoding="utf-8"),
            logging.StreamHandler()
        ]
    )


def _resumen(cfg):
    space = enumerate_states(cfg.scenario.N)
    logger.info(
        f"Escenario '{cfg.scenario.name}': N={cfg.scenario.N}, T={cfg.scenario.period}, "
        f"|Q|={space.size}, dimensión apilada {(2 * cfg.scenario.N + 2) * space.size}"
    )


def _cargar(args):
    cfg = load_scenario(args.config)
    cfg = apply_overrides(cfg, paths=args.paths, seed=args.seed, steps=args.steps)
    _resumen(cfg)
    return cfg


def _residuals_frame(solution):
    return pd.DataFrame({
        "iteration": np.arange(1, len(solution.residual_history) + 1),
        "residual": solution.residual_history,
    })


def _solver_extra(solution):
    return {
        "converged": bool(solution.converged),
        "iterations": int(solution.iterations),
        "final_residual": float(solution.final_residual),
    }


def cmd_solve(args, out_dir):
    """Resuelve el PSS y escribe trayectoria de métricas, residuos y probabilidades de estado"""
    cfg = _cargar(args)
    solution = solve(cfg.scenario, cfg.pss)
    tablas = {
        "pss_trajectory": metrics_frame(solution),
        "residuals": _residuals_frame(solution),
        "state_probs": state_probs_frame(solution),
    }
    for nombre, frame in tablas.items():
        export_service.write_csv(frame, out_dir, f"{nombre}.csv")
    export_service.write_manifest(out_dir, "solve", cfg.raw, _solver_extra(solution))
    if args.xlsx:
        export_service.write_workbook(out_dir, tablas)
    return EXIT_OK if solution.converged else EXIT_NO_CONVERGENCE


def cmd_floquet(args, out_dir):
    """Imprime los multiplicadores de Floquet y el radio espectral"""
    cfg = _cargar(args)
    reporte = monodromy(cfg.scenario, cfg.pss, workers=args.workers or config.workers, keep_matrix=False)
    orden = np.argsort(-np.abs(reporte.multipliers), kind="stable")
    multiplicadores = reporte.multipliers[orden]
    for z in multiplicadores:
        print(f"{z.real:.12g} {z.imag:+.12g}j  |{abs(z):.12g}|")
    print(f"spectral_radius {reporte.spectral_radius:.12g}")
    print(f"dimension {len(multiplicadores)}")
    frame = pd.DataFrame({
        "real": multiplicadores.real,
        "imag": multiplicadores.imag,
        "abs": np.abs(multiplicadores),
    })
    export_service.write_csv(frame, out_dir, "floquet_multipliers.csv")
    export_service.write_manifest(out_dir, "floquet", cfg.raw, {
        "spectral_radius": reporte.spectral_radius,
        "stable": bool(reporte.stable),
        "dimension": reporte.dimension,
        "lower_block_residual": reporte.lower_block_residual,
    })
    if args.xlsx:
        export_service.write_workbook(out_dir, {"floquet_multipliers": frame})
    return EXIT_OK if reporte.stable else EXIT_UNSTABLE


def cmd_simulate(args, out_dir):
    """Monte Carlo puro: estimaciones por fase con errores estándar"""
    cfg = _cargar(args)
    caminos = []
    for trial in range(cfg.mc.n_trials):
        caminos.extend(run_paths(cfg.scenario, cfg.mc, trial=trial, workers=args.workers or config.workers))
    est = estimate(caminos, n_trials=cfg.mc.n_trials)
    frame = est.to_frame()
    export_service.write_csv(frame, out_dir, "mc_estimate.csv")
    export_service.write_manifest(out_dir, "simulate", cfg.raw, {"n_paths_total": len(caminos)})
    if args.xlsx:
        export_service.write_workbook(out_dir, {"mc_estimate": frame})
    return EXIT_OK


def cmd_validate(args, out_dir):
    """PSS más Monte Carlo progresivo; falla si el MAE relativo final supera el umbral"""
    cfg = _cargar(args)
    solution = solve(cfg.scenario, cfg.pss)
    tabla, est, reporte = progressive_validation(
        solution, cfg.mc, cfg.validation.path_counts, workers=args.workers or config.workers
    )
    tablas = {
        "mae_vs_paths": tabla,
        "overlay": overlay_frame(reporte, est),
        "pss_trajectory": metrics_frame(solution),
        "mc_estimate": est.to_frame(),
    }
    for nombre, frame in tablas.items():
        export_service.write_csv(frame, out_dir, f"{nombre}.csv")
    relativo = reporte.relative_mean_aoi_mae
    extra = _solver_extra(solution)
    extra.update({
        "relative_mean_aoi_mae": relativo,
        "relative_mae_threshold": cfg.validation.relative_mae_threshold,
    })
    export_service.write_manifest(out_dir, "validate", cfg.raw, extra)
    if args.xlsx:
        export_service.write_workbook(out_dir, tablas)
    if not solution.converged:
        return EXIT_NO_CONVERGENCE
    if relativo < cfg.validation.relative_mae_threshold:
        logger.info(f"Validación aprobada: MAE relativo {relativo:.2%}")
        return EXIT_OK
    logger.warning(
        f"Validación fallida: MAE relativo {relativo:.2%} >= {cfg.validation.relative_mae_threshold:.2%}"
    )
    return EXIT_VALIDATION


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "floquet": cmd_floquet,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="periodicaoi",
        description="AoI y PAoI en estado estacionario periódico para colas de prioridad latest-only",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="archivo de escenario YAML")
    parser.add_argument("--out", default=None, help="directorio de salida (por defecto AOI_OUTPUT_DIR)")
    parser.add_argument("--paths", type=int, default=None, help="número de caminos Monte Carlo")
    parser.add_argument("--seed", type=int, default=None, help="semilla raíz")
    parser.add_argument("--steps", type=int, default=None, help="pasos de integración por periodo")
    parser.add_argument("--workers", type=int, default=None, help="procesos/hilos en paralelo")
    parser.add_argument("--xlsx", action="store_true", help="escribe además reporte.xlsx")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    configurar_logging()
    out_dir = args.out or config.output_dir
    try:
        codigo = COMMANDS[args.command](args, out_dir)
    except ConfigurationError as e:
        logger.error(f"Configuración inválida: {e}")
        print(f"Error de configuración: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailureError as e:
        logger.error(f"Fallo numérico en t={e.t}: {e}")
        return EXIT_NO_CONVERGENCE
    except InsufficientDataError as e:
        logger.error(f"Datos insuficientes: {e}")
        return EXIT_VALIDATION
    except Exception as e:
        logger.exception(f"Error inesperado: {type(e).__name__}")
        return EXIT_ERROR
    logger.info(f"Comando '{args.command}' terminado con código {codigo}")
    return codigo


if __name__ == "__main__":
    sys.exit(main())
