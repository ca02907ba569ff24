import numpy as np
import pytest

from services.generator import structure
from services.metrics_service import (
    METRIC_COLUMNS,
    class_metrics,
    gap,
    mean_aoi,
    metrics_frame,
    peak_aoi,
    service_prob,
    solution_metrics,
    state_probs_frame,
    unserved_age,
)


def test_scalar_metrics_single_class():
    d = structure(1).indicators.d_J_eq_i(1)
    a = np.array([0.5, 1.0, 0.25])
    p = np.array([0.5, 0.25, 0.25])
    assert mean_aoi(a) == pytest.approx(1.75)
    assert service_prob(p, d) == pytest.approx(0.5)
    assert peak_aoi(a, p, d) == pytest.approx(2.5)
    assert unserved_age(a, p, d) == pytest.approx(1.0)
    lhs, rhs = gap(mean_aoi(a), 2.5, 1.0, 0.5)
    assert lhs == pytest.approx(rhs)


def test_peak_aoi_undefined_without_service_probability():
    d = structure(1).indicators.d_J_eq_i(1)
    p = np.array([1.0, 0.0, 0.0])
    assert peak_aoi(np.array([3.0, 0.0, 0.0]), p, d) is None
    assert gap(3.0, None, 3.0, 0.0) == (None, None)


def test_gap_identity_holds_on_normalized_samples():
    n = 2
    nq = structure(n).size
    rng = np.random.default_rng(21)
    muestras = rng.random((5, 2 * n + 2, nq))
    muestras[:, 2 * n + 1, :] /= muestras[:, 2 * n + 1, :].sum(axis=1, keepdims=True)
    for i in (1, 2):
        m = class_metrics(np.arange(5.0), muestras, n, i)
        assert np.all(m.peak_defined)
        assert m.gap_residual() <= 1e-12


def test_class_metrics_marks_undefined_points():
    nq = structure(1).size
    muestras = np.zeros((2, 4, nq))
    muestras[:, 0, 0] = [1.0, 2.0]
    muestras[:, 3, 0] = 1.0            # todo el peso en el estado ocioso
    m = class_metrics(np.array([0.0, 1.0]), muestras, 1, 1)
    assert not np.any(m.peak_defined)
    assert np.all(np.isnan(m.peak_aoi))
    assert np.allclose(m.unserved_age, [1.0, 2.0])
    assert np.all(np.isnan(m.gap_lhs))
    assert m.gap_residual() == 0.0
    assert m.inversion_points().size == 0


def test_metrics_frame_layout(single_class_solution):
    frame = metrics_frame(single_class_solution)
    assert list(frame.columns) == METRIC_COLUMNS
    assert len(frame) == len(single_class_solution.times)
    assert frame["class"].unique().tolist() == [1]
    assert frame["peak_aoi"].notna().all()
    assert np.allclose(frame["gap_lhs"], frame["gap_rhs"], atol=1e-10)


def test_state_probs_frame(single_class_solution):
    frame = state_probs_frame(single_class_solution)
    assert list(frame.columns) == ["t", "idle_prob", "serving_class_1", "outage"]
    assert np.allclose(frame["idle_prob"] + frame["serving_class_1"], 1.0)
    assert np.allclose(frame["idle_prob"], 4 / 7, atol=1e-8)
    assert not frame["outage"].any()


@pytest.mark.slow
def test_table1_gap_identity_and_inversion(table1_solution):
    metricas = solution_metrics(table1_solution)
    for m in metricas:
        assert m.gap_residual() <= 1e-8
    # La clase de menor prioridad muestra AoI medio por encima del PAoI medio
    assert metricas[2].inversion_points().size > 0


@pytest.mark.slow
def test_table1_metrics_frame_rows(table1_solution):
    frame = metrics_frame(table1_solution)
    assert len(frame) == 2001 * 3
    assert frame.loc[frame["class"] == 1, "t"].is_monotonic_increasing


@pytest.mark.slow
def test_table1_mean_aoi_slope_is_one_during_outage(table1_solution):
    t = table1_solution.times
    fuera = (t > 5.5) & (t < 9.5)
    for m in solution_metrics(table1_solution):
        pendiente = np.diff(m.mean_aoi[fuera]) / np.diff(t[fuera])
        assert np.max(np.abs(pendiente - 1.0)) <= 1e-6
