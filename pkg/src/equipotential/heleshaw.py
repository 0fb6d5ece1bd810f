"""Hele-Shaw growth of the exterior boundary in coefficient space.

The boundary moves with normal speed equal to the field magnitude. For the
exterior map f this is the Polubarinova-Galin condition on |w| = 1:

    Re(df/dt * conj(w f')) = flux / (2 pi).

Writing df/dt = w f' P with P analytic outside the disk, bounded at infinity
and Re P = flux / (2 pi |f'|^2) on the circle, P follows from the negative
Fourier modes of that boundary data (one-sided Schwarz extension), and the
coefficient derivatives are the Laurent coefficients of the product. The
resulting ODE is integrated with classical RK4.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.polynomial import polyval

from .conformal import ConformalMap, ProblemKind, _series, check_univalence, enclosed_area_exact
from .errors import KindError, ResolutionError, UnivalenceLost
from .levelset import covariance, fmt, sample_levelset, spectral_tail_ratio

DEFAULT_MODES = 64
DEFAULT_DT = 1e-3
RESIDUAL_TOL = 1e-8
# energy ratio; amplitude ratio 1e-8
BOUNDARY_TAIL_TOL = 1e-16
MAX_SAMPLES = 1 << 19


def _samples_for(modes: int, n: int | None) -> int:
    if n is None:
        n = max(256, 1 << (4 * modes - 1).bit_length())
    if n & (n - 1) or n < 4 * modes:
        raise ResolutionError(f"need a power-of-two sample count >= 4 * modes = {4 * modes}, got {n}")
    return n


def pg_velocity(fmap: ConformalMap, n: int | None = None, residual_tol: float = RESIDUAL_TOL):
    """Time derivatives of the stored coefficients (c, a_0, ..., a_K).

    Returns ``(derivatives, residual)`` where ``residual`` is the largest
    mismatch between the boundary normal speed implied by the truncated
    derivatives and flux / (2 pi |f'|), relative to the largest speed.
    """
    if fmap.kind is not ProblemKind.EXTERIOR:
        raise KindError("the Hele-Shaw stepper handles exterior maps only")
    K = fmap.max_degree
    n = _samples_for(K, n)
    w = np.exp(2j * math.pi * np.arange(n) / n)
    _, fp, _ = _series(fmap, w)
    abs_fp = np.abs(fp)
    if np.min(abs_fp) <= 0.0:
        raise UnivalenceLost("f' vanishes on the boundary")
    q = fmap.flux / (2.0 * math.pi * abs_fp**2)
    if spectral_tail_ratio(q, n / 4.0) > BOUNDARY_TAIL_TOL:
        raise ResolutionError(f"{n} samples do not resolve the boundary speed")
    Q = np.fft.fft(q) / n  # Q[j]: coefficient of e^{i j theta}; Q[n - j] for -j

    m = K + 1
    P = np.empty(m + 1, dtype=complex)  # powers 0, -1, ..., -(K + 1)
    P[0] = Q[0].real
    P[1:] = 2.0 * Q[n - np.arange(1, m + 1)]

    k = np.arange(1, K + 1)
    wfp = np.concatenate(([fmap.coeffs[0], 0.0], -k * fmap.coeffs[2:]))  # powers 1, 0, -1, ..., -K
    rates = np.convolve(wfp, P)[: K + 2]
    rates[0] = rates[0].real

    fdot = rates[0] * w + polyval(np.conj(w), rates[1:])
    speed = np.real(fdot * np.conj(w * fp)) / abs_fp
    target = fmap.flux / (2.0 * math.pi * abs_fp)
    residual = float(np.max(np.abs(speed - target)) / np.max(target))
    if residual > residual_tol:
        raise ResolutionError(f"boundary-speed residual {residual:.3e} exceeds {residual_tol:g}")
    return rates, residual


@dataclass(frozen=True, eq=False)
class HeleShawState:
    t: float
    map: ConformalMap
    L: float
    A_complement: float
    deficit: float
    cov_kv: float
    min_abs_fprime: float
    tail_energy: float
    dt_used: float = 0.0
    samples: int = 0

    @property
    def c(self) -> float:
        return self.map.leading


def coefficient_tail(fmap: ConformalMap) -> float:
    """Share of sum k |a_k|^2 carried by the upper half of the retained modes."""
    a = fmap.coeffs[2:]
    weights = np.arange(1, a.size + 1) * np.abs(a) ** 2
    total = fmap.leading**2 + float(np.sum(weights))
    return float(np.sum(weights[a.size // 2:])) / total


def make_state(fmap: ConformalMap, t: float = 0.0, n: int | None = None, dt_used: float = 0.0,
               min_abs_fprime: float | None = None) -> HeleShawState:
    n = _samples_for(fmap.max_degree, n)
    s = sample_levelset(fmap, 1.0, n)
    if min_abs_fprime is None:
        min_abs_fprime = float(np.min(np.abs(s.fp)))
    area = enclosed_area_exact(fmap, 1.0)
    # on the moving boundary the normal speed v equals E
    return HeleShawState(
        t=t,
        map=fmap,
        L=s.length,
        A_complement=area,
        deficit=s.length**2 - 4.0 * math.pi * area,
        cov_kv=covariance(s, "kappa", "E"),
        min_abs_fprime=min_abs_fprime,
        tail_energy=coefficient_tail(fmap),
        dt_used=dt_used,
        samples=n,
    )


def initial_state(fmap: ConformalMap, modes: int = DEFAULT_MODES, n: int | None = None) -> HeleShawState:
    if fmap.kind is not ProblemKind.EXTERIOR:
        raise KindError("the Hele-Shaw stepper handles exterior maps only")
    if fmap.max_degree > modes:
        raise ValueError(f"map has {fmap.max_degree} modes, more than the requested {modes}")
    return make_state(fmap.padded(modes), 0.0, n)


def _rk4(fmap: ConformalMap, dt: float, n: int) -> ConformalMap:
    y0 = np.array(fmap.coeffs)

    def rhs(y):
        y = y.copy()
        y[0] = y[0].real
        return pg_velocity(fmap.with_coeffs(y), n)[0]

    k1 = rhs(y0)
    k2 = rhs(y0 + 0.5 * dt * k1)
    k3 = rhs(y0 + 0.5 * dt * k2)
    k4 = rhs(y0 + dt * k3)
    y1 = y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    y1[0] = y1[0].real
    return fmap.with_coeffs(y1)


def step(state: HeleShawState, dt: float, n: int | None = None) -> HeleShawState:
    """Advance one RK4 step; raises UnivalenceLost (carrying ``state``) if the map folds."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = _samples_for(state.map.max_degree, n)
    try:
        new_map = _rk4(state.map, dt, n)
    except UnivalenceLost as exc:
        raise UnivalenceLost(str(exc), last_state=state) from None
    verdict = check_univalence(new_map, n)
    if not verdict:
        raise UnivalenceLost(f"map is no longer univalent at t = {state.t + dt:.6g}",
                             last_state=state, diagnostic=verdict)
    return make_state(new_map, state.t + dt, n, dt, verdict.min_abs_fprime)


@dataclass
class HeleShawRun:
    states: list
    status: str  # "completed", "univalence_lost" or "resolution_lost"
    message: str = ""
    steps: int = 0
    diagnostic: object = None
    extras: dict = field(default_factory=dict)

    @property
    def final(self) -> HeleShawState:
        return self.states[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states])


def run(fmap: ConformalMap, t_end: float, dt: float = DEFAULT_DT, modes: int = DEFAULT_MODES,
        n: int | None = None, sample_every: int = 1, max_samples: int = MAX_SAMPLES,
        tail_tol: float | None = None, min_dt: float = 1e-6) -> HeleShawRun:
    """Integrate to ``t_end`` with fixed step ``dt``.

    Loss of univalence or resolution ends the run early with the status set;
    the last accepted state is always in the trajectory. A step that cannot
    be resolved is retried with twice the samples while that stays within
    ``max_samples``. If ``tail_tol`` is given, a step
    whose coefficient tail exceeds it is retried with half the step, down to
    ``min_dt``.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    n = _samples_for(modes, n)
    while True:
        try:
            state = initial_state(fmap, modes, n)
            break
        except ResolutionError:
            if 2 * n > max_samples:
                raise
            n *= 2
    states = [state]
    status, message, steps, diagnostic = "completed", "", 0, None
    while state.t < t_end * (1 - 1e-12):
        h = min(dt, t_end - state.t)
        try:
            new = _refined_step(state, h, n, max_samples)
            while tail_tol is not None and new.tail_energy > tail_tol and h / 2 >= min_dt:
                h /= 2
                new = _refined_step(state, h, n, max_samples)
        except UnivalenceLost as exc:
            status, message, diagnostic = "univalence_lost", str(exc), exc.diagnostic
            break
        except ResolutionError as exc:
            status, message = "resolution_lost", str(exc)
            break
        state = new
        n = max(n, state.samples)
        steps += 1
        if steps % sample_every == 0 or state.t >= t_end * (1 - 1e-12):
            states.append(state)
    if states[-1] is not state:
        states.append(state)
    return HeleShawRun(states, status, message, steps, diagnostic, {"samples": n})


def _refined_step(state, h, n, max_samples):
    while True:
        try:
            return step(state, h, n)
        except ResolutionError:
            if 2 * n > max_samples:
                raise
            n *= 2


TRAJECTORY_COLUMNS = ("t", "c", "L", "A", "deficit", "cov_kv", "min_abs_fprime", "tail_energy")


def write_trajectory_csv(result: HeleShawRun, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)
    for s in result.states:
        writer.writerow([fmt(v) for v in (s.t, s.c, s.L, s.A_complement, s.deficit, s.cov_kv,
                                          s.min_abs_fprime, s.tail_energy)])
