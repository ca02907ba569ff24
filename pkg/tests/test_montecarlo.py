from types import SimpleNamespace

import numpy as np
import pytest

from services.montecarlo_service import (
    McConfig,
    McEstimate,
    PathResult,
    _ode_peak_by_bin,
    estimate,
    mae_table,
    overlay_frame,
    path_seed,
    progressive_validation,
    run_paths,
    simulate_path,
    validate,
)
from services.rates import constant_scenario
from services.state_space import dest, next_class
from utils.exceptions import ConfigurationError, InsufficientDataError
from utils.grid import phase_grid


def _camino(aoi, period=1.0, clases=(), bins=(), edades=()):
    """PathResult mínimo con una sola clase"""
    aoi = np.atleast_2d(np.asarray(aoi, dtype=float))
    n_bins = aoi.shape[1]
    return PathResult(
        period=period,
        n_bins=n_bins,
        aoi_sum=aoi,
        aoi_count=np.ones(n_bins),
        completion_class=np.array(clases, dtype=int),
        completion_bin=np.array(bins, dtype=int),
        completion_age=np.array(edades, dtype=float),
        completion_time=np.zeros(len(clases)),
        occupancy=np.zeros(3),
        arrivals=np.zeros((aoi.shape[0], n_bins)),
    )


def _estimacion_desde(report, solution, n_bins):
    return McEstimate(
        grid=phase_grid(solution.scenario.period, n_bins),
        period=solution.scenario.period,
        mean_aoi=report.ode_mean_aoi.copy(),
        mean_aoi_se=np.ones_like(report.ode_mean_aoi),
        peak_aoi=report.ode_peak_aoi.copy(),
        peak_aoi_se=np.ones_like(report.ode_peak_aoi),
        peak_count=np.ones(report.ode_peak_aoi.shape, dtype=int),
        n_paths=10,
    )


def test_no_arrivals_age_grows_linearly():
    escenario = constant_scenario([0.0], [0.0], period=1.0)
    camino = simulate_path(escenario, horizon=3.0, warmup=1.0, seed=path_seed(1, 0, 0), n_bins=4)
    assert np.allclose(camino.aoi_count, 2)
    assert np.allclose(camino.aoi_sum[0], 3.0 + np.arange(4) / 2.0)
    assert camino.completion_class.size == 0
    assert camino.occupancy[0] == pytest.approx(2.0)


def test_same_seed_same_path(table1):
    a = simulate_path(table1, 60.0, 20.0, path_seed(5, 0, 3), log_events=True)
    b = simulate_path(table1, 60.0, 20.0, path_seed(5, 0, 3), log_events=True)
    assert np.array_equal(a.aoi_sum, b.aoi_sum)
    assert np.array_equal(a.completion_age, b.completion_age)
    assert a.events == b.events
    c = simulate_path(table1, 60.0, 20.0, path_seed(5, 0, 4))
    assert not np.array_equal(a.aoi_sum, c.aoi_sum)


def test_simulate_path_requires_horizon_after_warmup(table1):
    with pytest.raises(ConfigurationError):
        simulate_path(table1, 10.0, 10.0, path_seed(1, 0, 0))


def test_priority_and_replacement_rules():
    escenario = constant_scenario([1.0, 1.0, 1.0], [1.5, 1.0, 0.8])
    camino = simulate_path(escenario, 200.0, 0.0, path_seed(42, 0, 0), log_events=True)
    en_servicio = None
    buffer = {}
    completadas = 0
    for ev in camino.events:
        if ev.kind == "arrival":
            if ev.before.is_idle:
                en_servicio = ev.t
                assert ev.after.J == ev.klass
            else:
                # latest-only: la llegada reemplaza cualquier paquete en espera
                buffer[ev.klass] = ev.t
                assert ev.after.B[ev.klass - 1] == 1
        else:
            completadas += 1
            assert ev.served_gen_time == en_servicio
            assert ev.after == dest(ev.before)
            assert ev.after.J == next_class(ev.before)
            if ev.after.J:
                en_servicio = buffer.pop(ev.after.J)
                assert ev.gen_time == en_servicio
            else:
                en_servicio = None
                assert ev.gen_time is None
    assert completadas > 50


def test_no_completions_during_outage(table1):
    mc = McConfig(n_paths=20, warmup_periods=2, sample_periods=3)
    for camino in run_paths(table1, mc, workers=1):
        fases = camino.completion_time % table1.period
        assert np.all(fases <= 5.0)
        assert np.all(camino.completion_bin < 50)


def test_thinning_matches_integrated_arrival_rate(table1):
    mc = McConfig(n_paths=200, warmup_periods=1, sample_periods=4)
    caminos = run_paths(table1, mc, workers=1)
    ventana = np.array([c.arrivals[2, :50].sum() for c in caminos])
    corte = np.array([c.arrivals[2, 50:].sum() for c in caminos])
    esperado_ventana = 4 * (0.2 * 5.0 + 0.8 * 10.0 / np.pi)
    esperado_corte = 4 * 0.2 * 5.0
    for muestras, esperado in ((ventana, esperado_ventana), (corte, esperado_corte)):
        se = muestras.std(ddof=1) / np.sqrt(len(muestras))
        assert abs(muestras.mean() - esperado) <= 3 * se


def test_single_class_occupancy_matches_stationary_law(single_class):
    mc = McConfig(n_paths=200, warmup_periods=5, sample_periods=50, n_bins=10)
    caminos = run_paths(single_class, mc, workers=1)
    fracciones = np.array([c.occupancy / c.occupancy.sum() for c in caminos])
    media = fracciones.mean(axis=0)
    se = fracciones.std(axis=0, ddof=1) / np.sqrt(len(caminos))
    assert np.all(np.abs(media - np.array([4, 2, 1]) / 7) <= 3 * se)


def test_estimate_mean_and_standard_error():
    est = estimate([_camino([[1.0]]), _camino([[3.0]])])
    assert est.mean_aoi[0, 0] == pytest.approx(2.0)
    assert est.mean_aoi_se[0, 0] == pytest.approx(1.0)
    assert est.n_paths == 2


def test_estimate_identical_paths_have_zero_error():
    caminos = [_camino([[2.0, 4.0]], clases=[1, 1], bins=[0, 0], edades=[3.0, 3.0]) for _ in range(3)]
    est = estimate(caminos)
    assert np.all(est.mean_aoi_se == 0.0)
    assert est.peak_aoi[0, 0] == pytest.approx(3.0)
    assert est.peak_aoi_se[0, 0] == 0.0
    assert est.peak_count[0].tolist() == [6, 0]
    # intervalo sin finalizaciones: PAoI indefinido
    assert np.isnan(est.peak_aoi[0, 1])


def test_estimate_requires_paths():
    with pytest.raises(InsufficientDataError):
        estimate([])


def test_mc_config_validation():
    with pytest.raises(ConfigurationError):
        McConfig(n_paths=0)
    with pytest.raises(ConfigurationError):
        McConfig(warmup_periods=-1)


def test_validate_is_zero_when_mc_equals_ode(single_class_solution):
    base = _estimacion_desde(validate(single_class_solution, estimate([_camino(np.zeros((1, 10)))])),
                             single_class_solution, 10)
    reporte = validate(single_class_solution, base)
    assert np.allclose(reporte.mean_aoi_mae, 0.0)
    assert np.allclose(reporte.peak_aoi_mae, 0.0)
    assert reporte.undefined_peak_bins.tolist() == [0]
    assert reporte.relative_mean_aoi_mae == 0.0
    frame = overlay_frame(reporte, base)
    assert len(frame) == 10
    assert "outage" in frame.columns


def test_validate_excludes_undefined_peak_bins(single_class_solution):
    base = _estimacion_desde(validate(single_class_solution, estimate([_camino(np.zeros((1, 10)))])),
                             single_class_solution, 10)
    base.peak_aoi[0, [1, 4, 7]] = np.nan
    reporte = validate(single_class_solution, base)
    assert reporte.undefined_peak_bins.tolist() == [3]
    assert reporte.peak_aoi_mae[0] == pytest.approx(0.0)


def test_validate_rejects_grid_mismatch(single_class_solution):
    with pytest.raises(ConfigurationError):
        validate(single_class_solution, estimate([_camino(np.zeros((1, 7)))]))
    with pytest.raises(ConfigurationError):
        validate(single_class_solution, estimate([_camino(np.zeros((1, 10)), period=2.0)]))


def test_mae_table_is_ordered_by_paths(single_class_solution):
    mc = McConfig(n_paths=40, n_trials=2, warmup_periods=5, sample_periods=5, n_bins=10)
    tabla, est, reporte = progressive_validation(single_class_solution, mc, [40, 20], workers=1)
    assert tabla["n_paths"].tolist() == [20, 40]
    assert {"mean_aoi_mae", "peak_aoi_mae", "mean_aoi_mae_c1", "undefined_peak_bins"} <= set(tabla.columns)
    assert est.n_paths == 40
    assert reporte.n_paths == 40
    assert mae_table([reporte]).shape[0] == 1


def test_parallel_paths_match_sequential(table1):
    mc = McConfig(n_paths=60, warmup_periods=1, sample_periods=1)
    secuencial = run_paths(table1, mc, workers=1)
    paralelo = run_paths(table1, mc, workers=2)
    assert len(paralelo) == 60
    for a, b in zip(secuencial, paralelo):
        assert np.array_equal(a.aoi_sum, b.aoi_sum)
        assert np.array_equal(a.completion_age, b.completion_age)


def test_ode_peak_bins_weight_uneven_steps(single_class):
    times = np.array([0.0, 0.1, 0.5, 1.0])
    muestras = np.zeros((4, 4, 3))
    muestras[:, 3, 1] = 1.0                 # π_1 = 1 en toda la malla
    muestras[:, 0, 1] = [1.0, 2.0, 3.0, 9.0]
    solucion = SimpleNamespace(
        scenario=single_class, times=times, trajectory=SimpleNamespace(samples=muestras),
    )
    pico = _ode_peak_by_bin(solucion, np.array([0.0]), 1)
    assert pico[0] == pytest.approx(0.1 * 1.0 + 0.4 * 2.0 + 0.5 * 3.0)


@pytest.mark.slow
def test_single_class_ode_matches_monte_carlo(single_class_solution):
    mc = McConfig(n_paths=400, warmup_periods=20, sample_periods=50, n_bins=10, root_seed=7)
    caminos = run_paths(single_class_solution.scenario, mc)
    est = estimate(caminos)
    reporte = validate(single_class_solution, est)
    assert np.all(np.abs(reporte.ode_mean_aoi - est.mean_aoi) <= 3 * est.mean_aoi_se)

    por_camino = np.array([c.completion_age.mean() for c in caminos])
    se = por_camino.std(ddof=1) / np.sqrt(len(por_camino))
    pico_ode = np.nanmean(reporte.ode_peak_aoi)
    assert abs(por_camino.mean() - pico_ode) <= 3 * se


@pytest.mark.slow
def test_table1_progressive_validation(table1_solution):
    mc = McConfig(n_paths=5000, root_seed=2024)
    tabla, est, reporte = progressive_validation(table1_solution, mc, (100, 500, 1000, 5000))
    assert tabla["n_paths"].tolist() == [100, 500, 1000, 5000]
    mae = tabla["mean_aoi_mae"].to_numpy()
    assert np.sum(np.diff(mae) > 0) <= 1
    assert reporte.relative_mean_aoi_mae < 0.05
    assert reporte.fraction_within(est, k=3.0) >= 0.95
