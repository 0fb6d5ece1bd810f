"""Level-set functionals, their analytic potential-derivatives, and FD estimators.

Moving the potential by ``d`` moves the reference radius to
``rho * exp(-2 pi d / flux)``, so finite differences in the potential need no
re-solve, just another sample of the same map.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from .conformal import ConformalMap, check_radius
from .errors import DomainError
from .levelset import DEFAULT_SAMPLES, LevelSetSample, fmt, sample_levelset

TWO_PI = 2.0 * math.pi


def entropy_H(sample: LevelSetSample) -> tuple[float, float]:
    """Relative entropy of the flux measure w.r.t. the line measure, and its derivative."""
    flux, length = sample.flux, sample.length
    H = sample.integrate(sample.E / flux * np.log(sample.E * length / flux))
    H_prime = TWO_PI / flux - sample.integrate(sample.kappa / sample.E) / length
    return H, H_prime


def conservation_E(sample: LevelSetSample) -> float:
    curv = sample.integrate(sample.kappa**2 / sample.E)
    return curv - sample.integrate(sample.dlogE_ds**2 / sample.E)


def dirichlet_F(sample: LevelSetSample) -> tuple[float, float]:
    F = sample.integrate(sample.dlogE_ds**2 / sample.E)
    F_prime = -2.0 * sample.integrate(sample.dkappaOverE_ds * sample.dE_inv_ds)
    return F, F_prime


def longinetti_L(sample: LevelSetSample) -> tuple[float, float]:
    inv = sample.integrate(1.0 / sample.E)
    return math.log(inv), -2.0 * sample.integrate(sample.kappa / sample.E**2) / inv


def kongxu_K(sample: LevelSetSample) -> float:
    return sample.integrate(sample.dkappa_ds**2 / sample.E**3)


@dataclass(frozen=True)
class FunctionalReport:
    rho: float
    phi: float
    H: float
    H_prime: float
    E_consv: float
    F: float
    F_prime: float
    L_log: float
    L_prime: float
    K: float
    L_sigma: float
    A_D: float
    deficit: float
    deficit_scaled: float


def report(sample: LevelSetSample) -> FunctionalReport:
    H, H_prime = entropy_H(sample)
    F, F_prime = dirichlet_F(sample)
    L_log, L_prime = longinetti_L(sample)
    length, area = sample.length, sample.area
    return FunctionalReport(
        rho=sample.rho,
        phi=sample.phi,
        H=H,
        H_prime=H_prime,
        E_consv=conservation_E(sample),
        F=F,
        F_prime=F_prime,
        L_log=L_log,
        L_prime=L_prime,
        K=kongxu_K(sample),
        L_sigma=length,
        A_D=area,
        deficit=length**2 - 4.0 * math.pi * area,
        deficit_scaled=1.0 - 4.0 * math.pi * area / length**2,
    )


REPORT_COLUMNS = ("rho", "phi", "H", "H_prime", "E_consv", "F", "F_prime",
                  "L_log", "L_prime", "K", "L_sigma", "A_D", "deficit")


def write_report_csv(reports, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for rep in reports:
        row = asdict(rep)
        writer.writerow([fmt(row[c]) for c in REPORT_COLUMNS])


# -- finite differences in the potential -------------------------------------------

SCALARS = {
    "H": lambda s: entropy_H(s)[0],
    "E_consv": conservation_E,
    "F": lambda s: dirichlet_F(s)[0],
    "L_log": lambda s: longinetti_L(s)[0],
    "K": kongxu_K,
    "log_L_sigma": lambda s: math.log(s.length),
    "L_sigma": lambda s: s.length,
    "A_D": lambda s: s.area,
    "deficit": lambda s: s.length**2 - 4.0 * math.pi * s.area,
    "deficit_scaled": lambda s: 1.0 - 4.0 * math.pi * s.area / s.length**2,
}

DEFAULT_STEP = {1: 1e-3, 2: 1e-2}


def shifted_radius(fmap: ConformalMap, rho: float, dphi: float) -> float:
    """Reference radius of the level set whose potential is higher by ``dphi``."""
    return rho * math.exp(-TWO_PI * dphi / fmap.flux)


def fd_derivatives_all(fmap: ConformalMap, rho: float, n: int = DEFAULT_SAMPLES,
                       h_phi: float | None = None, order: int = 2,
                       functionals=tuple(SCALARS), richardson: bool = True) -> dict[str, float]:
    """Central FD derivative in the potential of several functionals at once.

    With ``richardson`` the estimates at steps h and h/2 are combined to
    cancel the O(h^2) error term.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    h = DEFAULT_STEP[order] if h_phi is None else float(h_phi)
    if h <= 0:
        raise ValueError("h_phi must be positive")
    rho = check_radius(fmap, rho)
    for d in (-h, h):
        try:
            check_radius(fmap, shifted_radius(fmap, rho, d))
        except DomainError:
            raise DomainError(f"FD stencil of half-width {h:g} around rho = {rho:g} leaves the domain") from None
    funcs = {name: SCALARS[name] for name in functionals}

    cache = {}

    def values(d):
        if d not in cache:
            s = sample_levelset(fmap, shifted_radius(fmap, rho, d), n)
            cache[d] = {name: f(s) for name, f in funcs.items()}
        return cache[d]

    def stencil(step):
        lo, hi = values(-step), values(step)
        if order == 1:
            return {k: (hi[k] - lo[k]) / (2.0 * step) for k in funcs}
        mid = values(0.0)
        return {k: (hi[k] - 2.0 * mid[k] + lo[k]) / step**2 for k in funcs}

    coarse = stencil(h)
    if not richardson:
        return coarse
    fine = stencil(h / 2.0)
    return {k: (4.0 * fine[k] - coarse[k]) / 3.0 for k in funcs}


def fd_derivatives(fmap: ConformalMap, rho: float, n: int = DEFAULT_SAMPLES,
                   h_phi: float | None = None, order: int = 2, functional: str = "H",
                   richardson: bool = True) -> float:
    """Central FD derivative of one functional (H, F, L_log, K, log_L_sigma, ...)."""
    if functional not in SCALARS:
        raise KeyError(f"unknown functional {functional!r}; known: {sorted(SCALARS)}")
    return fd_derivatives_all(fmap, rho, n, h_phi, order, (functional,), richardson)[functional]
