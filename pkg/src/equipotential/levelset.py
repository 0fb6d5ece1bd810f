"""Sampling of one equipotential curve and arc-length statistics on it.

The curve is the image of w = rho e^{i theta} on a uniform theta grid. With
f' evaluated there, the conformal identities

    E     = flux / (2 pi rho |f'|)
    kappa = Re(1 + w f'' / f') / (rho |f'|)
    ds    = rho |f'| dtheta

give field magnitude, signed curvature and arc-length weights, and tangential
derivatives are d/ds = (rho |f'|)^-1 d/dtheta computed spectrally. The
trapezoidal rule on this grid is spectrally accurate for the analytic,
periodic integrands involved.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .conformal import ConformalMap, ProblemKind, _series, check_radius, enclosed_area_exact, potential
from .errors import ResolutionError

DEFAULT_SAMPLES = 1024
MIN_SAMPLES = 128
TAIL_TOL = 1e-10


def spectral_derivative(values: np.ndarray, dealias: bool = True) -> np.ndarray:
    """d/dtheta of real samples on a uniform periodic grid.

    Modes above n/3 are discarded when ``dealias`` is set (2/3 rule); the
    Nyquist mode is always dropped.
    """
    n = values.size
    coef = np.fft.rfft(values)
    k = np.arange(coef.size, dtype=float)
    coef *= 1j * k
    cutoff = n / 3.0 if dealias else n / 2.0
    coef[k >= cutoff] = 0.0
    return np.fft.irfft(coef, n)


def spectral_tail_ratio(values: np.ndarray, start: float) -> float:
    """Fraction of the (non-constant-weighted) spectral energy in modes above ``start``."""
    power = np.abs(np.fft.rfft(values)) ** 2
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    return float(np.sum(power[np.arange(power.size) > start])) / total


def _check_samples(n: int) -> int:
    n = int(n)
    if n < MIN_SAMPLES or n & (n - 1):
        raise ResolutionError(f"sample count must be a power of two >= {MIN_SAMPLES}, got {n}")
    return n


class LevelPoint(NamedTuple):
    theta: float
    position: complex
    E: float
    kappa: float
    ds_weight: float
    n_dot_r: float
    dE_inv_ds: float
    dkappaOverE_ds: float
    dlogE_ds: float


@dataclass(frozen=True, eq=False)
class LevelSetSample:
    """All pointwise quantities on one level set, stored as parallel arrays."""

    fmap: ConformalMap
    rho: float
    phi: float
    theta: np.ndarray
    w: np.ndarray
    z: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    E: np.ndarray
    kappa: np.ndarray
    ds: np.ndarray
    n_dot_r: np.ndarray
    dE_inv_ds: np.ndarray
    dkappaOverE_ds: np.ndarray
    dlogE_ds: np.ndarray
    dkappa_ds: np.ndarray
    length: float
    area: float

    @property
    def n(self) -> int:
        return self.theta.size

    @property
    def flux(self) -> float:
        return self.fmap.flux

    @property
    def kind(self) -> ProblemKind:
        return self.fmap.kind

    @property
    def kappa_over_E(self) -> np.ndarray:
        return self.kappa / self.E

    def points(self):
        for row in zip(self.theta, self.z, self.E, self.kappa, self.ds, self.n_dot_r,
                       self.dE_inv_ds, self.dkappaOverE_ds, self.dlogE_ds):
            yield LevelPoint(*(complex(v) if i == 1 else float(v) for i, v in enumerate(row)))

    def integrate(self, values) -> float:
        """Closed-curve integral of ``values`` against ds."""
        return float(np.dot(values, self.ds))

    def resampled(self, n: int) -> "LevelSetSample":
        return sample_levelset(self.fmap, self.rho, n)


def sample_levelset(fmap: ConformalMap, rho: float, n: int = DEFAULT_SAMPLES) -> LevelSetSample:
    """Sample the equipotential curve that is the image of |w| = rho."""
    rho = check_radius(fmap, rho)
    n = _check_samples(n)
    theta = 2.0 * math.pi * np.arange(n) / n
    w = rho * np.exp(1j * theta)
    z, fp, fpp = _series(fmap, w)
    abs_fp = np.abs(fp)
    if spectral_tail_ratio(abs_fp, n / 4.0) > TAIL_TOL:
        raise ResolutionError(f"{n} samples do not resolve |f'| on rho = {rho:g}")

    speed = rho * abs_fp  # |dz/dtheta|
    E = fmap.flux / (2.0 * math.pi * speed)
    bend = np.real(1.0 + w * fpp / fp)
    kappa = bend / speed
    ds = speed * (2.0 * math.pi / n)
    n_dot_r = np.real(np.conj(z) * w * fp) / speed

    def d_ds(values):
        return spectral_derivative(values) / speed

    return LevelSetSample(
        fmap=fmap,
        rho=rho,
        phi=potential(fmap, rho),
        theta=theta,
        w=w,
        z=z,
        fp=fp,
        fpp=fpp,
        E=E,
        kappa=kappa,
        ds=ds,
        n_dot_r=n_dot_r,
        dE_inv_ds=d_ds(1.0 / E),
        dkappaOverE_ds=d_ds(kappa / E),
        dlogE_ds=d_ds(np.log(E)),
        dkappa_ds=d_ds(kappa),
        length=float(np.sum(ds)),
        area=enclosed_area_exact(fmap, rho),
    )


# -- averages -------------------------------------------------------------------

Selector = Union[str, np.ndarray, Callable[[LevelSetSample], np.ndarray]]

FIELDS: dict[str, Callable[[LevelSetSample], np.ndarray]] = {
    "1": lambda s: np.ones_like(s.E),
    "E": lambda s: s.E,
    "kappa": lambda s: s.kappa,
    "n_dot_r": lambda s: s.n_dot_r,
    "1/E": lambda s: 1.0 / s.E,
    "kappa/E": lambda s: s.kappa / s.E,
    "kappa/E^2": lambda s: s.kappa / s.E**2,
    "E^2": lambda s: s.E**2,
    "E/flux": lambda s: s.E / s.flux,
    "kappa/2pi": lambda s: s.kappa / (2.0 * math.pi),
    "log(EL/flux)": lambda s: np.log(s.E * s.length / s.flux),
    "dE_inv_ds": lambda s: s.dE_inv_ds,
    "dkappaOverE_ds": lambda s: s.dkappaOverE_ds,
    "dlogE_ds": lambda s: s.dlogE_ds,
    "dkappa_ds": lambda s: s.dkappa_ds,
    "dE_inv_ds^2": lambda s: s.dE_inv_ds**2,
    "grad_prod": lambda s: s.dkappaOverE_ds * s.dE_inv_ds,
}


def field(sample: LevelSetSample, selector: Selector) -> np.ndarray:
    if isinstance(selector, str):
        try:
            return FIELDS[selector](sample)
        except KeyError:
            raise KeyError(f"unknown field {selector!r}; known: {sorted(FIELDS)}") from None
    if callable(selector):
        return np.asarray(selector(sample), dtype=float)
    values = np.asarray(selector, dtype=float)
    if values.shape != sample.E.shape:
        raise ValueError(f"field has shape {values.shape}, expected {sample.E.shape}")
    return values


def average(sample: LevelSetSample, selector: Selector) -> float:
    """Arc-length average over the curve."""
    return sample.integrate(field(sample, selector)) / sample.length


def covariance(sample: LevelSetSample, f1: Selector, f2: Selector) -> float:
    """Arc-length weighted covariance; centred before multiplying."""
    a = field(sample, f1)
    b = field(sample, f2)
    a = a - sample.integrate(a) / sample.length
    b = b - sample.integrate(b) / sample.length
    return sample.integrate(a * b) / sample.length


def measure(sample: LevelSetSample, weight: str) -> np.ndarray:
    """Normalized quadrature weights of the flux, line or inverse-field measure."""
    if weight == "flux":
        raw = sample.E * sample.ds
    elif weight == "line":
        raw = sample.ds
    elif weight == "inverse":
        raw = sample.ds / sample.E
    else:
        raise ValueError(f"weight must be 'flux', 'line' or 'inverse', got {weight!r}")
    return raw / np.sum(raw)


def weighted_average(sample: LevelSetSample, selector: Selector, weight: str = "line") -> float:
    return float(np.dot(field(sample, selector), measure(sample, weight)))


def weighted_variance(sample: LevelSetSample, selector: Selector, weight: str = "line") -> float:
    mu = measure(sample, weight)
    values = field(sample, selector)
    centred = values - np.dot(values, mu)
    return float(np.dot(centred**2, mu))


# -- export -----------------------------------------------------------------------

CSV_COLUMNS = ("theta", "x", "y", "E", "kappa", "ds", "n_dot_r", "dlogE_ds")


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(sample: LevelSetSample, fh):
    """Per-curve table with 17 significant digits."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in zip(sample.theta, sample.z.real, sample.z.imag, sample.E, sample.kappa,
                   sample.ds, sample.n_dot_r, sample.dlogE_ds):
        writer.writerow([fmt(v) for v in row])
