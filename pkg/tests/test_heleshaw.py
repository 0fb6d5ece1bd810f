import csv
import io
import math

import numpy as np
import pytest

from equipotential import heleshaw as hs
from equipotential.conformal import ConformalMap, check_univalence, parse_preset
from equipotential.errors import KindError, ResolutionError
from equipotential.functionals import conservation_E
from equipotential.levelset import sample_levelset
from equipotential.verify import check_exterior


def area_rate(fmap, rates):
    """d/dt of pi (c^2 - sum k |a_k|^2) along the coefficient velocity."""
    c, a = fmap.coeffs[0].real, fmap.coeffs[2:]
    k = np.arange(1, a.size + 1)
    return 2 * math.pi * (c * rates[0].real - float(np.sum(k * np.real(np.conj(a) * rates[2:]))))


def test_circle_velocity():
    for c, flux in ((1.0, 1.0), (2.5, 3.0)):
        fmap = ConformalMap("exterior", flux, [c, 0.0]).padded(8)
        rates, residual = hs.pg_velocity(fmap)
        assert rates[0] == pytest.approx(flux / (2 * math.pi * c), rel=1e-14)
        assert np.max(np.abs(rates[1:])) < 1e-15
        assert residual < 1e-14


def test_ellipse_velocity_excites_compatible_modes_only():
    fmap = ConformalMap("exterior", 1.0, [1.0, 0.0, 0.1]).padded(16)
    rates, residual = hs.pg_velocity(fmap)
    assert residual <= 1e-8
    # ellipses stay ellipses: only c and a_1 move
    assert abs(rates[2]) > 1e-3
    assert np.max(np.abs(np.delete(rates, [0, 2]))) < 1e-15


@pytest.mark.parametrize("expr", ["ellipse(1,0.1)", "perturbed(3,0.2)", "perturbed(2,0.3)"])
def test_velocity_moves_area_at_unit_flux_rate(expr):
    fmap = parse_preset(expr, flux=1.7).padded(32)
    rates, _ = hs.pg_velocity(fmap, n=2048)
    assert area_rate(fmap, rates) == pytest.approx(fmap.flux, rel=1e-8)


def test_velocity_errors():
    with pytest.raises(KindError):
        hs.pg_velocity(ConformalMap("interior", 1.0, [1.0]))
    with pytest.raises(ResolutionError):
        hs.pg_velocity(parse_preset("ellipse(1,0.25)").padded(64), n=128)


def test_circle_run_matches_exact_radius():
    result = hs.run(parse_preset("circle"), 0.5, 1e-3, modes=8)
    assert result.status == "completed"
    assert result.final.t == pytest.approx(0.5, abs=1e-12)
    assert result.final.c == pytest.approx(math.sqrt(1 + 0.5 / math.pi), abs=1e-8)
    assert result.final.c == pytest.approx(1.076640, abs=1e-6)
    assert np.max(np.abs(result.column("deficit"))) < 1e-12


def test_perturbed_run_monotone_deficit_and_area():
    fmap = parse_preset("perturbed(2,0.1)")
    result = hs.run(fmap, 0.3, 1e-3, modes=32)
    assert result.status == "completed"
    deficit = result.column("deficit")
    assert np.min(np.diff(deficit)) >= -1e-8
    assert np.min(result.column("cov_kv")) >= -1e-8
    t, area = result.column("t"), result.column("A_complement")
    np.testing.assert_allclose(area - area[0], fmap.flux * t, rtol=1e-6, atol=1e-12)


def test_deficit_rate_equals_covariance_formula():
    result = hs.run(parse_preset("perturbed(2,0.1)"), 0.05, 1e-3, modes=16)
    D, t = result.column("deficit"), result.column("t")
    L, cov = result.column("L"), result.column("cov_kv")
    fd = (D[2:] - D[:-2]) / (t[2:] - t[:-2])
    np.testing.assert_allclose(fd, 2 * L[1:-1] ** 2 * cov[1:-1], rtol=1e-7)


def test_ellipse_start_deficit_nondecreasing():
    result = hs.run(parse_preset("ellipse(1,0.2)"), 0.2, 2e-3, modes=32)
    assert result.status == "completed"
    assert np.min(np.diff(result.column("deficit"))) >= -1e-8


def test_snapshots_remain_valid_problems():
    result = hs.run(parse_preset("perturbed(3,0.1)"), 0.1, 2e-3, modes=32, sample_every=25)
    for state in result.states:
        s = sample_levelset(state.map, 1.0, 1024)
        assert conservation_E(s) == pytest.approx(4 * math.pi**2, rel=1e-7)
        assert all(r.passed for r in check_exterior(s))


def test_rk4_step_halving_is_fourth_order():
    fmap = parse_preset("perturbed(2,0.2)")
    finals = [hs.run(fmap, 0.08, dt, modes=32).final.map.coeffs for dt in (0.02, 0.01, 0.005)]
    e1 = np.max(np.abs(finals[0] - finals[1]))
    e2 = np.max(np.abs(finals[1] - finals[2]))
    assert e2 < e1
    assert math.log2(e1 / e2) == pytest.approx(4.0, abs=0.6)


def test_fingering_shape_loses_univalence():
    fmap = parse_preset("perturbed(5,0.15)")
    result = hs.run(fmap, 2.0, 1e-3, modes=64)
    assert result.status == "univalence_lost"
    assert 0 < result.final.t < 2.0
    assert check_univalence(result.final.map, 4096)
    assert result.diagnostic is not None and not result.diagnostic.passed
    assert np.min(np.diff(result.column("deficit"))) >= -1e-8


def test_fixed_resolution_reports_resolution_loss():
    fmap = parse_preset("perturbed(5,0.15)")
    result = hs.run(fmap, 2.0, 1e-3, modes=64, n=2048, max_samples=2048)
    assert result.status == "resolution_lost"
    assert result.final.t < 2.0
    assert "resolve" in result.message


def test_tail_monitor_halves_step():
    fmap = parse_preset("perturbed(2,0.1)")
    result = hs.run(fmap, 0.01, 5e-3, modes=16, tail_tol=0.0, min_dt=1e-3)
    assert result.status == "completed"
    assert result.final.dt_used < 5e-3


def test_run_argument_errors():
    with pytest.raises(KindError):
        hs.run(ConformalMap("interior", 1.0, [1.0]), 0.1)
    with pytest.raises(ValueError):
        hs.run(parse_preset("circle"), 0.0)
    with pytest.raises(ValueError):
        hs.step(hs.initial_state(parse_preset("circle"), 8), -1e-3)
    with pytest.raises(ValueError):
        hs.initial_state(parse_preset("perturbed(5,0.1)"), modes=4)


def test_trajectory_csv():
    result = hs.run(parse_preset("circle"), 0.01, 5e-3, modes=8)
    buf = io.StringIO()
    hs.write_trajectory_csv(result, buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert tuple(rows[0]) == hs.TRAJECTORY_COLUMNS
    assert len(rows) == 1 + len(result.states)
    assert float(rows[-1][1]) == result.final.c
