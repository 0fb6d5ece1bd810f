"""Pass/fail checks for the curvature/field inequalities and related identities.

Every record is oriented so that ``margin >= 0`` is the claimed direction. A
margin in (-tol, 0) is reported as equality within tolerance; a margin below
``RECHECK_BELOW`` is recomputed at four times the resolution before it is
reported, so that resolution artifacts are not mistaken for violations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conformal import ConformalMap, ProblemKind, check_radius
from .errors import DomainError, KindError
from .functionals import conservation_E, entropy_H, fd_derivatives_all
from .levelset import (
    DEFAULT_SAMPLES,
    LevelSetSample,
    average,
    covariance,
    sample_levelset,
    weighted_average,
    weighted_variance,
)

PASS_TOL = 1e-9
RECHECK_BELOW = -1e-6
IDENTITY_TOL = 1e-8

EXTERIOR_IDS = ("cov1", "longinetti_mono", "cov2", "cov3", "grad_prod", "longinetti_cor")
INTERIOR_IDS = ("cov1'", "cov3'", "grad_prod'", "longinetti_cor'")


@dataclass
class InequalityReport:
    id: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    tolerance: float
    rho: float = math.nan
    normalized_margin: float | None = None
    status: str = ""

    def as_dict(self) -> dict:
        return {"id": self.id, "rho": self.rho, "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "pass": self.passed}


def _record(id_, lhs, rhs, margin, tol, rho, scale=None):
    if margin >= 0:
        status = "pass"
    elif margin >= -tol:
        status = "equality-within-tolerance"
    else:
        status = "violation"
    normalized = None
    if scale is not None:
        normalized = margin / scale if scale > 0 else 0.0
    return InequalityReport(id_, float(lhs), float(rhs), float(margin), margin >= -tol,
                            tol, rho, normalized, status)


def _std(sample, selector):
    return math.sqrt(max(covariance(sample, selector, selector), 0.0))


def _exterior_reports(s: LevelSetSample, tol: float):
    flux, rho = s.flux, s.rho
    out = []

    lhs = covariance(s, "kappa/E", "E")
    out.append(_record("cov1", lhs, 0.0, lhs, tol, rho, _std(s, "kappa/E") * _std(s, "E")))

    lhs = average(s, "1/E")
    rhs = average(s, "kappa/E") * average(s, "n_dot_r")
    out.append(_record("longinetti_mono", lhs, rhs, lhs - rhs, tol, rho))

    lhs = covariance(s, "kappa", "E")
    out.append(_record("cov2", lhs, 0.0, lhs, tol, rho, _std(s, "kappa") * _std(s, "E")))

    log_el = "log(EL/flux)"
    lhs = covariance(s, "kappa/2pi", log_el)
    rhs = covariance(s, "E/flux", log_el)
    out.append(_record("cov3", lhs, rhs, lhs - rhs, tol, rho,
                       _std(s, log_el) * (_std(s, "kappa/2pi") + _std(s, "E/flux"))))

    lhs = average(s, "grad_prod")
    out.append(_record("grad_prod", lhs, 0.0, -lhs, tol, rho))

    lhs = average(s, "kappa/E^2")
    rhs = 2.0 * math.pi / flux * average(s, "1/E")
    out.append(_record("longinetti_cor", lhs, rhs, rhs - lhs, tol, rho))
    return out


def _interior_reports(s: LevelSetSample, tol: float):
    flux, rho = s.flux, s.rho
    out = []

    lhs = covariance(s, "kappa/E", "E")
    out.append(_record("cov1'", lhs, 0.0, -lhs, tol, rho, _std(s, "kappa/E") * _std(s, "E")))

    log_el = "log(EL/flux)"
    lhs = covariance(s, "kappa/2pi", log_el)
    rhs = covariance(s, "E/flux", log_el)
    out.append(_record("cov3'", lhs, rhs, rhs - lhs, tol, rho,
                       _std(s, log_el) * (_std(s, "kappa/2pi") + _std(s, "E/flux"))))

    lhs = average(s, "grad_prod")
    out.append(_record("grad_prod'", lhs, 0.0, lhs, tol, rho))

    lhs = average(s, "kappa/E^2")
    rhs = 2.0 * math.pi / flux * average(s, "1/E")
    out.append(_record("longinetti_cor'", lhs, rhs, lhs - rhs, tol, rho))
    return out


def _checked(sample, tol, recheck, builder):
    reports = builder(sample, tol)
    if recheck and any(r.margin < RECHECK_BELOW for r in reports):
        reports = builder(sample.resampled(4 * sample.n), tol)
    return reports


def check_exterior(sample: LevelSetSample, tol: float = PASS_TOL, recheck: bool = True):
    """The six exterior inequalities on one level set."""
    if sample.kind is not ProblemKind.EXTERIOR:
        raise KindError("check_exterior needs a sample from an exterior map")
    return _checked(sample, tol, recheck, _exterior_reports)


def check_interior(sample: LevelSetSample, tol: float = PASS_TOL, recheck: bool = True):
    """The four interior inequalities, with the reversed orientations."""
    if sample.kind is not ProblemKind.INTERIOR:
        raise KindError("check_interior needs a sample from an interior map")
    return _checked(sample, tol, recheck, _interior_reports)


def check_inequalities(sample: LevelSetSample, tol: float = PASS_TOL, recheck: bool = True):
    if sample.kind is ProblemKind.EXTERIOR:
        return check_exterior(sample, tol, recheck)
    return check_interior(sample, tol, recheck)


def cov_kappa_E_interior(sample: LevelSetSample) -> float:
    """cov(kappa, E) on an interior level set; exploratory, no sign is claimed."""
    if sample.kind is not ProblemKind.INTERIOR:
        raise KindError("exploration probe is for interior samples")
    return covariance(sample, "kappa", "E")


# -- identities ------------------------------------------------------------------

def _identity(id_, lhs, rhs, rel_tol, rho, scale=None, floor=0.0):
    scale = max(abs(lhs), abs(rhs)) if scale is None else scale
    tol = rel_tol * max(scale, floor)
    margin = tol - abs(lhs - rhs)
    return InequalityReport(id_, float(lhs), float(rhs), float(margin), margin >= 0, tol, rho,
                            status="pass" if margin >= 0 else "violation")


def check_identities(sample: LevelSetSample, tol: float = IDENTITY_TOL):
    """Umlaufsatz, flux constancy, conservation law, fluctuation identity and the cov1/H' chain.

    Tolerances are relative, with a floor of 1e-4 of each quantity's natural
    size so that exact zeros on circles compare equal.
    """
    flux, rho = sample.flux, sample.rho
    two_pi = 2.0 * math.pi
    H_prime = entropy_H(sample)[1]
    var = weighted_variance(sample, "kappa/E", "flux")
    grad = weighted_average(sample, "dE_inv_ds^2", "flux")
    cov = covariance(sample, "kappa/E", "E")
    chain = flux / sample.length * H_prime
    return [
        _identity("umlaufsatz", sample.integrate(sample.kappa), two_pi, tol, rho, two_pi),
        _identity("flux", sample.integrate(sample.E), flux, tol, rho, flux),
        _identity("conservation", conservation_E(sample), two_pi**2 / flux, tol, rho),
        _identity("fluctuation", var, grad, tol, rho, floor=1e-4 * (two_pi / flux) ** 2),
        _identity("cov1_chain", cov, chain, tol, rho, floor=1e-4 * two_pi / sample.length),
    ]


def check_variations(fmap: ConformalMap, rho: float, n: int = DEFAULT_SAMPLES,
                     h_phi: float = 1e-3, tol: float = 1e-6):
    """Coarea formula and arc-length variation against Richardson FD in the potential."""
    s = sample_levelset(fmap, rho, n)
    d = fd_derivatives_all(fmap, rho, n, h_phi, 1, ("A_D", "L_sigma"))
    return [
        _identity("coarea", -d["A_D"], s.integrate(1.0 / s.E), tol, rho),
        _identity("arc_length_variation", d["L_sigma"], -s.integrate(s.kappa / s.E), tol, rho),
    ]


# -- isoperimetric monotonicity ------------------------------------------------------

@dataclass
class MonotonicityReport:
    rho: np.ndarray
    phi: np.ndarray
    deficit: np.ndarray
    deficit_scaled: np.ndarray
    d_deficit: np.ndarray  # analytic d/dphi at each grid point
    d_deficit_scaled: np.ndarray
    fd_deficit: np.ndarray  # secant slopes between consecutive grid points
    fd_deficit_scaled: np.ndarray
    passed: bool
    tolerance: float


def _check_grid(fmap, rho_grid):
    grid = np.asarray(rho_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise DomainError("rho grid needs at least two points")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("rho grid must be strictly increasing")
    for r in grid:
        check_radius(fmap, r)
    return grid


def check_isoperimetric_monotonicity(fmap: ConformalMap, rho_grid, n: int = DEFAULT_SAMPLES,
                                     tol: float = PASS_TOL) -> MonotonicityReport:
    """Both isoperimetric deficits are non-decreasing in the potential.

    Analytic derivatives use the coarea formula and the arc-length variation;
    secant slopes between grid points give an independent check.
    """
    if fmap.kind is not ProblemKind.EXTERIOR:
        raise KindError("isoperimetric monotonicity is an exterior statement")
    grid = _check_grid(fmap, rho_grid)
    phi, deficit, scaled, d_def, d_scaled = [], [], [], [], []
    for r in grid:
        s = sample_levelset(fmap, r, n)
        L, A = s.length, s.area
        inv = s.integrate(1.0 / s.E)
        bent = s.integrate(s.kappa / s.E)
        phi.append(s.phi)
        deficit.append(L**2 - 4.0 * math.pi * A)
        scaled.append(1.0 - 4.0 * math.pi * A / L**2)
        d_def.append(-2.0 * L * bent + 4.0 * math.pi * inv)
        d_scaled.append(-(4.0 * math.pi * A / L**2) * (2.0 * bent / L - inv / A))
    phi, deficit, scaled = map(np.array, (phi, deficit, scaled))
    d_def, d_scaled = np.array(d_def), np.array(d_scaled)
    dphi = np.diff(phi)
    fd_def = np.diff(deficit) / dphi
    fd_scaled = np.diff(scaled) / dphi
    scale_def = np.maximum(np.abs(deficit), 1.0)
    ok = (np.all(d_def >= -tol * scale_def) and np.all(d_scaled >= -tol)
          and np.all(fd_def >= -tol * scale_def[1:]) and np.all(fd_scaled >= -tol))
    return MonotonicityReport(grid, phi, deficit, scaled, d_def, d_scaled, fd_def, fd_scaled,
                              bool(ok), tol)


# -- asymptotics ---------------------------------------------------------------------

@dataclass
class AsymptoticsReport:
    rho: np.ndarray
    kappa_dev: np.ndarray  # max |kappa |r| - 1|
    field_dev: np.ndarray  # max |2 pi E |r| / flux - 1|
    dlogE_scaled: np.ndarray  # max |d log E / ds| |r|^2
    dlogE: np.ndarray  # max |d log E / ds|
    kappa_slope: float
    field_slope: float
    dlogE_slope: float
    extras: dict = field(default_factory=dict)


def _slope(rho, values):
    good = values > 0
    if np.count_nonzero(good) < 2:
        return -math.inf
    return float(np.polyfit(np.log(rho[good]), np.log(values[good]), 1)[0])


def check_asymptotics(fmap: ConformalMap, rho_list, n: int = DEFAULT_SAMPLES) -> AsymptoticsReport:
    """Far-field behaviour: kappa |r| -> 1, 2 pi E |r| / flux -> 1, bounded |d log E/ds| |r|^2.

    Decay exponents are fitted by log-log regression against rho.
    """
    if fmap.kind is not ProblemKind.EXTERIOR:
        raise KindError("far-field asymptotics are an exterior statement")
    rho = _check_grid(fmap, rho_list)
    kdev, edev, gscaled, graw = [], [], [], []
    for r in rho:
        s = sample_levelset(fmap, r, n)
        dist = np.abs(s.z)
        kdev.append(np.max(np.abs(s.kappa * dist - 1.0)))
        edev.append(np.max(np.abs(2.0 * math.pi * s.E * dist / s.flux - 1.0)))
        grad = np.abs(s.dlogE_ds)
        gscaled.append(np.max(grad * dist**2))
        graw.append(np.max(grad))
    kdev, edev, gscaled, graw = map(np.array, (kdev, edev, gscaled, graw))
    return AsymptoticsReport(rho, kdev, edev, gscaled, graw,
                             _slope(rho, kdev), _slope(rho, edev), _slope(rho, graw))

