"""Seeded random univalent maps and sweeps of the checks over them."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conformal import ConformalMap, ProblemKind, _series, check_univalence
from .errors import ResolutionError
from .functionals import fd_derivatives_all
from .levelset import DEFAULT_SAMPLES, sample_levelset, spectral_tail_ratio
from .verify import (
    EXTERIOR_IDS,
    INTERIOR_IDS,
    IDENTITY_TOL,
    check_identities,
    check_inequalities,
)

EXTERIOR_RADII = (1.0, 1.5, 2.0, 4.0, 8.0)
INTERIOR_RADII = (0.3, 0.6, 0.9)
EXTERIOR_FD_RADII = (1.2, 1.5, 2.0, 4.0, 8.0)
INTERIOR_FD_RADII = (0.3, 0.6, 0.85)
CONVEX_FUNCTIONALS = ("H", "F", "L_log", "log_L_sigma", "K")

# Tail of |f'| on the reference circle must sit at round-off for the corpus.
CORPUS_TAIL = 1e-26
SHRINK = 0.7


def _resolved(fmap: ConformalMap, n: int) -> bool:
    theta = 2.0 * math.pi * np.arange(n) / n
    _, fp, _ = _series(fmap, np.exp(1j * theta))
    return spectral_tail_ratio(np.abs(fp), n / 4.0) <= CORPUS_TAIL


def random_map(rng: np.random.Generator, kind: ProblemKind | str = "exterior", max_degree: int = 6,
               amplitude: float = 1.0, n: int = DEFAULT_SAMPLES, rescale: bool = True,
               max_tries: int = 60) -> ConformalMap | None:
    """Draw one map with up to ``max_degree`` modes.

    Coefficients are complex Gaussian with amplitude/k decay; with ``rescale``
    the non-leading part is shrunk geometrically until the map is univalent and
    its boundary spectrum is resolved at ``n`` samples. Without it the raw
    draw is returned, or ``None`` if it is not univalent.
    """
    kind = ProblemKind(kind)
    # interior degree 1 is the centred disk, an equality case
    lowest = 1 if kind is ProblemKind.EXTERIOR else 2
    degree = int(rng.integers(lowest, max(max_degree, lowest) + 1))
    lead = float(rng.uniform(0.5, 2.0))
    flux = float(rng.uniform(0.5, 2.0))
    k = np.arange(1, degree + 1)
    noise = (rng.standard_normal(degree) + 1j * rng.standard_normal(degree)) / math.sqrt(2.0)
    if kind is ProblemKind.EXTERIOR:
        shift = complex(*rng.normal(0.0, 0.5, 2))
        tail = amplitude * lead * noise / k
        build = lambda s: np.concatenate(([lead, shift], s * tail))
    else:
        tail = amplitude * lead * noise[: degree - 1] / k[1:]
        build = lambda s: np.concatenate(([lead], s * tail))

    scale = 1.0
    for _ in range(max_tries):
        fmap = ConformalMap(kind, flux, build(scale))
        ok = bool(check_univalence(fmap, 256))
        if ok and rescale:
            ok = _resolved(fmap, n) and bool(check_univalence(fmap, n))
        if ok:
            return fmap
        if not rescale:
            return None
        scale *= SHRINK
    return None


def draw_corpus(seed: int, count: int, kind="exterior", max_degree: int = 6, amplitude: float = 1.0,
                n: int = DEFAULT_SAMPLES, rescale: bool = True):
    """``count`` draws from one seeded stream; rejected draws appear as ``None``."""
    rng = np.random.default_rng(seed)
    return [random_map(rng, kind, max_degree, amplitude, n, rescale) for _ in range(count)]


@dataclass
class MapResult:
    index: int
    margins: dict = field(default_factory=dict)  # id -> list of margins over radii
    identity_errors: dict = field(default_factory=dict)  # id -> worst relative mismatch
    convexity: dict = field(default_factory=dict)  # functional -> min FD second derivative
    error: str | None = None


def _relative_mismatch(rep):
    # identity tolerances are IDENTITY_TOL times the comparison scale
    return abs(rep.lhs - rep.rhs) * IDENTITY_TOL / rep.tolerance if rep.tolerance > 0 else 0.0


def evaluate_map(args) -> MapResult:
    index, fmap, radii, fd_radii, n, tol = args
    result = MapResult(index)
    try:
        for rho in radii:
            s = sample_levelset(fmap, rho, n)
            for rep in check_inequalities(s, tol):
                result.margins.setdefault(rep.id, []).append(rep.margin)
            for rep in check_identities(s):
                worst = result.identity_errors.get(rep.id, 0.0)
                result.identity_errors[rep.id] = max(worst, _relative_mismatch(rep))
        for rho in fd_radii:
            d2 = fd_derivatives_all(fmap, rho, n, None, 2, CONVEX_FUNCTIONALS)
            for name, value in d2.items():
                result.convexity[name] = min(result.convexity.get(name, math.inf), value)
    except ResolutionError as exc:
        result.error = str(exc)
    return result


@dataclass
class CorpusSummary:
    seed: int
    kind: str
    maps: int
    rejected: int
    errors: int
    ids: tuple
    results: list

    def margins(self, id_):
        return np.array([m for r in self.results for m in r.margins.get(id_, [])])

    def worst_margin(self, id_):
        values = self.margins(id_)
        return float(np.min(values)) if values.size else math.nan

    def violations(self, id_, tol):
        return int(np.count_nonzero(self.margins(id_) < -tol))

    def worst_identity(self, id_):
        return max((r.identity_errors.get(id_, 0.0) for r in self.results), default=0.0)

    def min_convexity(self, name):
        return min((r.convexity.get(name, math.inf) for r in self.results), default=math.inf)


def run_corpus(seed: int = 42, count: int = 200, kind="exterior", n: int = DEFAULT_SAMPLES,
               radii=None, fd_radii=(), tol: float = 1e-9, max_degree: int = 6,
               amplitude: float = 1.0, rescale: bool = True, workers: int = 1) -> CorpusSummary:
    """Run the inequality and identity checks (and optional FD convexity) over a seeded corpus.

    Results are collected in draw order whatever the worker count.
    """
    kind = ProblemKind(kind)
    if radii is None:
        radii = EXTERIOR_RADII if kind is ProblemKind.EXTERIOR else INTERIOR_RADII
    maps = draw_corpus(seed, count, kind, max_degree, amplitude, n, rescale)
    jobs = [(i, m, tuple(radii), tuple(fd_radii), n, tol) for i, m in enumerate(maps) if m is not None]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(evaluate_map, jobs, chunksize=4))
    else:
        results = [evaluate_map(job) for job in jobs]
    ids = EXTERIOR_IDS if kind is ProblemKind.EXTERIOR else INTERIOR_IDS
    return CorpusSummary(seed, kind.value, count, count - len(jobs),
                         sum(r.error is not None for r in results), ids, results)

