import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equipotential import verify
from equipotential.conformal import ConformalMap, parse_preset
from equipotential.corpus import random_map
from equipotential.errors import DomainError, KindError
from equipotential.functionals import conservation_E, entropy_H
from equipotential.levelset import sample_levelset
from equipotential.verify import (
    EXTERIOR_IDS,
    INTERIOR_IDS,
    check_asymptotics,
    check_exterior,
    check_identities,
    check_inequalities,
    check_interior,
    check_isoperimetric_monotonicity,
    check_variations,
    cov_kappa_E_interior,
)

from oracles import curve_points, ellipse_perimeter, geometry

CIRCLE = ConformalMap("exterior", 1.0, [1.0, 0.0])
ELLIPSE = ConformalMap("exterior", 1.0, [1.0, 0.0, 0.25])
DISK = ConformalMap("interior", 1.0, [1.0])
CARDIOID = ConformalMap("interior", 1.0, [1.0, 0.2])


def oracle_exterior_margins(fmap, rho, n=8192):
    """The six exterior margins from curve-geometry quadrature (no library calls)."""
    z = curve_points(fmap, rho, n)
    E, kappa, ds, n_dot_r = geometry(z, fmap.flux)
    L = ds.sum()
    avg = lambda v: float(np.dot(v, ds)) / L
    cov = lambda a, b: avg(a * b) - avg(a) * avg(b)
    log_el = np.log(E * L / fmap.flux)
    return {
        "cov1": cov(kappa / E, E),
        "longinetti_mono": avg(1 / E) - avg(kappa / E) * avg(n_dot_r),
        "cov2": cov(kappa, E),
        "cov3": cov(kappa / (2 * math.pi), log_el) - cov(E / fmap.flux, log_el),
        "longinetti_cor": 2 * math.pi / fmap.flux * avg(1 / E) - avg(kappa / E**2),
    }


@pytest.mark.parametrize("rho", [1.0, 1.5, 2.0, 4.0, 8.0])
def test_circle_margins_vanish(rho):
    for flux in (1.0, 2.0):
        reports = check_exterior(sample_levelset(CIRCLE.with_flux(flux), rho, 1024))
        assert [r.id for r in reports] == list(EXTERIOR_IDS)
        for r in reports:
            assert abs(r.margin) <= 1e-10, r
            assert r.passed


@pytest.mark.parametrize("rho", [0.3, 0.6, 0.9, 1.0])
def test_centred_disk_margins_vanish(rho):
    reports = check_interior(sample_levelset(DISK, rho, 1024))
    assert [r.id for r in reports] == list(INTERIOR_IDS)
    for r in reports:
        assert abs(r.margin) <= 1e-10, r


def test_ellipse_margins_positive_and_match_oracle():
    reports = {r.id: r for r in check_exterior(sample_levelset(ELLIPSE, 1.0, 1024))}
    oracle = oracle_exterior_margins(ELLIPSE, 1.0)
    for id_, r in reports.items():
        assert r.margin > 0 and r.status == "pass", id_
    for id_, value in oracle.items():
        assert reports[id_].margin == pytest.approx(value, rel=1e-9), id_


def test_perturbed_passes_at_all_radii():
    fmap = parse_preset("perturbed(2,0.3)")
    for rho in (1.0, 1.5, 2.0, 4.0, 8.0):
        assert all(r.passed for r in check_exterior(sample_levelset(fmap, rho, 1024)))


def test_cardioid_interior_suite():
    reports = check_interior(sample_levelset(CARDIOID, 0.9, 1024))
    assert all(r.passed and r.margin > 0 for r in reports)
    for rho in (0.3, 0.6, 0.9):
        value = conservation_E(sample_levelset(CARDIOID, rho, 1024))
        assert value == pytest.approx(4 * math.pi**2, rel=1e-10)


def test_kind_errors():
    with pytest.raises(KindError):
        check_exterior(sample_levelset(CARDIOID, 0.5, 256))
    with pytest.raises(KindError):
        check_interior(sample_levelset(ELLIPSE, 1.5, 256))
    with pytest.raises(KindError):
        cov_kappa_E_interior(sample_levelset(ELLIPSE, 1.5, 256))
    with pytest.raises(KindError):
        check_isoperimetric_monotonicity(CARDIOID, [0.3, 0.6])


def test_interior_probe_is_reported_only():
    assert math.isfinite(cov_kappa_E_interior(sample_levelset(CARDIOID, 0.6, 512)))


def test_status_classification():
    assert verify._record("x", 1.0, 0.0, 1.0, 1e-9, 1.0).status == "pass"
    r = verify._record("x", 0.0, 1e-10, -1e-10, 1e-9, 1.0)
    assert r.passed and r.status == "equality-within-tolerance"
    r = verify._record("x", 0.0, 1e-3, -1e-3, 1e-9, 1.0)
    assert not r.passed and r.status == "violation"
    assert set(r.as_dict()) == {"id", "rho", "lhs", "rhs", "margin", "pass"}


def test_large_negative_margin_triggers_recheck():
    seen = []

    def builder(sample, tol):
        seen.append(sample.n)
        margin = -1e-3 if sample.n == 256 else 1e-3
        return [verify._record("x", margin, 0.0, margin, tol, sample.rho)]

    out = verify._checked(sample_levelset(ELLIPSE, 1.5, 256), 1e-9, True, builder)
    assert seen == [256, 1024]
    assert out[0].passed
    seen.clear()
    verify._checked(sample_levelset(ELLIPSE, 1.5, 256), 1e-9, False, builder)
    assert seen == [256]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["exterior", "interior"]))
def test_inequalities_hold_on_random_maps(seed, kind):
    fmap = random_map(np.random.default_rng(seed), kind)
    radii = (1.0, 1.5, 2.0, 4.0, 8.0) if kind == "exterior" else (0.3, 0.6, 0.9)
    for rho in radii:
        for r in check_inequalities(sample_levelset(fmap, rho, 1024)):
            assert r.margin >= -1e-9, r


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["exterior", "interior"]))
def test_identities_hold_on_random_maps(seed, kind):
    fmap = random_map(np.random.default_rng(seed), kind)
    for rho in ((1.0, 3.0) if kind == "exterior" else (0.4, 0.9)):
        for r in check_identities(sample_levelset(fmap, rho, 1024)):
            assert r.passed, r


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cov1_chain(seed):
    fmap = random_map(np.random.default_rng(seed), "exterior")
    s = sample_levelset(fmap, 1.5, 1024)
    margin = check_exterior(s)[0].margin
    chain = fmap.flux / s.length * entropy_H(s)[1]
    assert abs(margin - chain) <= 1e-9 * max(abs(chain), 1.0)


@pytest.mark.parametrize("fmap,rho", [(ELLIPSE, 2.0), (parse_preset("perturbed(3,0.2)"), 1.5),
                                      (CARDIOID, 0.6)])
def test_variations(fmap, rho):
    for r in check_variations(fmap, rho, 1024):
        assert r.passed, r
        assert abs(r.lhs - r.rhs) <= 1e-6 * abs(r.rhs)


def test_monotonicity_circle():
    rep = check_isoperimetric_monotonicity(CIRCLE, [1.0, 2.0, 4.0], 256)
    assert rep.passed
    assert np.max(np.abs(rep.d_deficit)) < 1e-11
    assert np.max(np.abs(rep.d_deficit_scaled)) < 1e-13


def test_monotonicity_ellipse_against_closed_form():
    grid = np.geomspace(1.0, 8.0, 8)
    rep = check_isoperimetric_monotonicity(ELLIPSE, grid, 1024)
    assert rep.passed
    for rho, scaled in zip(grid, rep.deficit_scaled):
        a, b = rho + 0.25 / rho, rho - 0.25 / rho
        L = ellipse_perimeter(a, b)
        assert scaled == pytest.approx(1 - 4 * math.pi * (math.pi * a * b) / L**2, rel=1e-9, abs=1e-14)
    assert np.all(np.diff(rep.deficit_scaled) < 0)
    assert rep.deficit_scaled[-1] < 1e-4


def test_monotonicity_perturbed_and_grid_errors():
    assert check_isoperimetric_monotonicity(parse_preset("perturbed(3,0.2)"), [1, 1.5, 2, 4], 1024).passed
    with pytest.raises(DomainError):
        check_isoperimetric_monotonicity(ELLIPSE, [2.0, 1.0])
    with pytest.raises(DomainError):
        check_isoperimetric_monotonicity(ELLIPSE, [0.5, 1.0])
    with pytest.raises(DomainError):
        check_isoperimetric_monotonicity(ELLIPSE, [2.0])


def test_asymptotics_circle_exact():
    rep = check_asymptotics(CIRCLE, [8, 16, 32, 64], 256)
    assert np.max(rep.kappa_dev) < 1e-13
    assert np.max(rep.field_dev) < 1e-13


def test_asymptotics_ellipse():
    rep = check_asymptotics(ELLIPSE, [8, 16, 32, 64, 100], 1024)
    assert rep.kappa_dev[-1] <= 1e-3
    fit = check_asymptotics(ELLIPSE, [8, 16, 32, 64], 1024)
    assert fit.kappa_slope == pytest.approx(-2.0, abs=0.1)
    assert fit.field_slope == pytest.approx(-2.0, abs=0.1)
    # |d log E / ds| is bounded by a multiple of |r|^-2; for the ellipse it falls like rho^-3
    assert fit.dlogE_slope <= -1.9
    assert fit.dlogE_slope == pytest.approx(-3.0, abs=0.1)
    assert np.max(fit.dlogE_scaled) < 1.0
