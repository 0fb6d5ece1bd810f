"""Conformal-map representation of planar exterior and interior Dirichlet problems.

An exterior problem is encoded by a Laurent map

    f(w) = c w + a_0 + a_1 / w + ... + a_K / w^K,      |w| >= 1,

and an interior (Green's function) problem by a Taylor map

    g(w) = b_1 w + b_2 w^2 + ... + b_K w^K,            |w| <= 1.

In both cases the harmonic potential on the image of the circle |w| = rho is
``-(flux / 2 pi) log rho``, so equipotential curves are images of circles.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass

import numpy as np
import shapely

from .errors import DomainError, ValidationError

DOMAIN_TOL = 1e-12
MIN_ABS_FPRIME = 1e-9
DEFAULT_MAX_DEGREE = 32


class ProblemKind(str, enum.Enum):
    EXTERIOR = "exterior"
    INTERIOR = "interior"


@dataclass(frozen=True, eq=False)
class ConformalMap:
    """Truncated series map from the reference disk (interior) or its complement (exterior).

    ``coeffs`` holds ``(c, a_0, a_1, ..., a_K)`` for exterior maps and
    ``(b_1, ..., b_K)`` for interior maps. The leading coefficient is real and
    positive. Instances are immutable; the coefficient array is read-only.
    """

    kind: ProblemKind
    flux: float
    coeffs: np.ndarray

    def __post_init__(self):
        kind = ProblemKind(self.kind)
        coeffs = np.array(self.coeffs, dtype=complex).ravel()
        minimum = 2 if kind is ProblemKind.EXTERIOR else 1
        if coeffs.size < minimum:
            raise ValidationError(f"{kind.value} map needs at least {minimum} coefficients")
        if not np.all(np.isfinite(coeffs)):
            raise ValidationError("coefficients must be finite")
        lead = coeffs[0]
        if lead.imag != 0.0 or not lead.real > 0.0:
            raise ValidationError(f"leading coefficient must be real and positive, got {lead!r}")
        flux = float(self.flux)
        if not (math.isfinite(flux) and flux > 0.0):
            raise ValidationError(f"flux must be positive, got {self.flux!r}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "flux", flux)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def max_degree(self) -> int:
        if self.kind is ProblemKind.EXTERIOR:
            return self.coeffs.size - 2
        return self.coeffs.size

    @property
    def leading(self) -> float:
        return float(self.coeffs[0].real)

    @property
    def powers(self) -> np.ndarray:
        """Exponent of w attached to each stored coefficient."""
        if self.kind is ProblemKind.EXTERIOR:
            return np.arange(1, -self.max_degree - 1, -1)
        return np.arange(1, self.max_degree + 1)

    def padded(self, max_degree: int) -> "ConformalMap":
        """Same map with the series zero-padded (or truncated) to ``max_degree``."""
        size = max_degree + 2 if self.kind is ProblemKind.EXTERIOR else max_degree
        coeffs = np.zeros(size, dtype=complex)
        keep = min(size, self.coeffs.size)
        coeffs[:keep] = self.coeffs[:keep]
        return ConformalMap(self.kind, self.flux, coeffs)

    def with_coeffs(self, coeffs) -> "ConformalMap":
        return ConformalMap(self.kind, self.flux, coeffs)

    def with_flux(self, flux: float) -> "ConformalMap":
        return ConformalMap(self.kind, flux, self.coeffs)

    def __repr__(self):
        terms = ", ".join(f"{c:.6g}" for c in self.coeffs[: min(6, self.coeffs.size)])
        more = ", ..." if self.coeffs.size > 6 else ""
        return f"ConformalMap({self.kind.value}, flux={self.flux:g}, [{terms}{more}])"


def _horner3(coeffs, x):
    """Value, first and second derivative of sum_k coeffs[k] x^k."""
    p = np.zeros_like(x)
    dp = np.zeros_like(x)
    ddp = np.zeros_like(x)
    for c in coeffs[::-1]:
        ddp = ddp * x + 2.0 * dp
        dp = dp * x + p
        p = p * x + c
    return p, dp, ddp


def _check_domain(fmap: ConformalMap, w):
    r = np.abs(w)
    if fmap.kind is ProblemKind.EXTERIOR:
        if np.any(r < 1.0 - DOMAIN_TOL):
            raise DomainError(f"exterior map needs |w| >= 1, got min |w| = {np.min(r):.17g}")
    elif np.any(r > 1.0 + DOMAIN_TOL):
        raise DomainError(f"interior map needs |w| <= 1, got max |w| = {np.max(r):.17g}")


def _series(fmap: ConformalMap, w):
    """f, f', f'' at w (no domain check)."""
    w = np.asarray(w, dtype=complex)
    if fmap.kind is ProblemKind.EXTERIOR:
        c = fmap.coeffs[0]
        u = 1.0 / w
        p, dp, ddp = _horner3(fmap.coeffs[1:], u)
        u2 = u * u
        f = c * w + p
        fp = c - dp * u2
        fpp = ddp * u2 * u2 + 2.0 * dp * u2 * u
        return f, fp, fpp
    poly = np.concatenate(([0.0], fmap.coeffs))
    return _horner3(poly, w)


def _unwrap_scalar(x):
    return complex(x) if np.ndim(x) == 0 else x


def evaluate(fmap: ConformalMap, w):
    """z = f(w) (exterior) or g(w) (interior); accepts scalars or arrays."""
    _check_domain(fmap, w)
    f, _, _ = _series(fmap, w)
    return _unwrap_scalar(f)


def eval_derivatives(fmap: ConformalMap, w):
    """(f'(w), f''(w)) from term-by-term differentiation of the stored series."""
    _check_domain(fmap, w)
    _, fp, fpp = _series(fmap, w)
    return _unwrap_scalar(fp), _unwrap_scalar(fpp)


def potential(fmap: ConformalMap, rho: float) -> float:
    """Potential value on the image of |w| = rho."""
    return -fmap.flux / (2.0 * math.pi) * math.log(rho) + 0.0  # no negative zero


def radius_for_potential(fmap: ConformalMap, phi: float) -> float:
    return math.exp(-2.0 * math.pi * phi / fmap.flux)


def check_radius(fmap: ConformalMap, rho: float) -> float:
    rho = float(rho)
    if fmap.kind is ProblemKind.EXTERIOR:
        if not (math.isfinite(rho) and rho >= 1.0 - DOMAIN_TOL):
            raise DomainError(f"exterior level sets need rho >= 1, got {rho!r}")
    elif not (math.isfinite(rho) and 0.0 < rho <= 1.0 + DOMAIN_TOL):
        raise DomainError(f"interior level sets need 0 < rho <= 1, got {rho!r}")
    return rho


def enclosed_area_exact(fmap: ConformalMap, rho: float) -> float:
    """Area enclosed by the image of |w| = rho, from the series coefficients."""
    rho = check_radius(fmap, rho)
    if fmap.kind is ProblemKind.EXTERIOR:
        k = np.arange(1, fmap.max_degree + 1)
        a = np.abs(fmap.coeffs[2:]) ** 2
        return math.pi * (fmap.leading**2 * rho**2 - float(np.sum(k * a * rho ** (-2.0 * k))))
    k = np.arange(1, fmap.max_degree + 1)
    b = np.abs(fmap.coeffs) ** 2
    return math.pi * float(np.sum(k * b * rho ** (2.0 * k)))


@dataclass(frozen=True)
class UnivalenceVerdict:
    passed: bool
    min_abs_fprime: float
    self_intersecting: bool
    winding: int
    critical_points: int

    def __bool__(self):
        return self.passed


def _winding(values) -> int:
    steps = np.angle(np.roll(values, -1) / values)
    return int(round(float(np.sum(steps)) / (2.0 * math.pi)))


def check_univalence(fmap: ConformalMap, n_samples: int = 1024) -> UnivalenceVerdict:
    """Sampled univalence test on the closed reference domain.

    Combines (i) the minimum of |f'| over the boundary circle and a polar grid
    covering the reference domain, (ii) the number of zeros of f' inside the
    domain by the argument principle, (iii) simplicity of the sampled boundary
    image and (iv) its winding number about an interior point.
    """
    if n_samples < 64:
        raise ValueError("n_samples must be at least 64")
    exterior = fmap.kind is ProblemKind.EXTERIOR
    theta = 2.0 * math.pi * np.arange(n_samples) / n_samples
    circle = np.exp(1j * theta)

    # Polar grid in s = 1/w (exterior) or w (interior); both fill the unit disk.
    n_angles = min(n_samples, 512)
    spokes = np.exp(2j * math.pi * np.arange(n_angles) / n_angles)
    s = np.linspace(0.0, 1.0, 33)[1:, None] * spokes[None, :]
    w_grid = 1.0 / s if exterior else s
    _, fp_grid, _ = _series(fmap, w_grid)
    min_fp = min(float(np.min(np.abs(fp_grid))), fmap.leading if exterior else abs(fmap.coeffs[0]))

    # Zeros of f' in the domain: winding of f'(1/s) (exterior) or g'(w) on the unit circle.
    n_arg = max(n_samples, 16 * (fmap.max_degree + 2))
    ring = np.exp(2j * math.pi * np.arange(n_arg) / n_arg)
    _, fp_ring, _ = _series(fmap, np.conj(ring) if exterior else ring)
    critical = _winding(fp_ring) if np.all(np.abs(fp_ring) > 0) else -1

    z, _, _ = _series(fmap, circle)
    xy = np.column_stack([z.real, z.imag])
    ring_geom = shapely.LinearRing(xy)
    simple = bool(ring_geom.is_simple)
    if exterior:
        if simple:
            point = shapely.Polygon(xy).representative_point()
            centre = complex(point.x, point.y)
        else:
            centre = complex(np.mean(z))
    else:
        centre = 0j
    offsets = z - centre
    winding = _winding(offsets) if np.all(np.abs(offsets) > 0) else 0

    passed = min_fp > MIN_ABS_FPRIME and simple and winding == 1 and critical == 0
    return UnivalenceVerdict(passed, min_fp, not simple, winding, critical)


# -- presets -----------------------------------------------------------------

def _circle(params):
    (radius,) = params or (1.0,)
    return ProblemKind.EXTERIOR, [radius, 0.0]


def _ellipse(params):
    radius, m = params
    return ProblemKind.EXTERIOR, [radius, 0.0, radius * m]


def _perturbed(params):
    n, eps = params
    n = int(n)
    if n < 1 or n != params[0]:
        raise ValidationError(f"perturbed(n, eps) needs integer n >= 1, got {params[0]!r}")
    coeffs = [1.0, 0.0] + [0.0] * n
    coeffs[n + 1] = eps
    return ProblemKind.EXTERIOR, coeffs


def _interior_circle(params):
    (radius,) = params or (1.0,)
    return ProblemKind.INTERIOR, [radius]


def _interior_cardioid(params):
    (b2,) = params
    return ProblemKind.INTERIOR, [1.0, b2]


PRESETS = {
    "circle": _circle,
    "ellipse": _ellipse,
    "perturbed": _perturbed,
    "interior-circle": _interior_circle,
    "interior-cardioid-like": _interior_cardioid,
}


def preset(name: str, params=(), flux: float = 1.0, max_degree: int | None = None) -> ConformalMap:
    """Build and validate one of the named shape families.

    ``circle(R)``: f = R w; ``ellipse(R, m)``: f = R (w + m / w);
    ``perturbed(n, eps)``: f = w + eps w^-n; ``interior-circle``: g = w;
    ``interior-cardioid-like(b2)``: g = w + b2 w^2.
    """
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    try:
        kind, coeffs = builder([float(p) for p in params])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad parameters for {name}: {list(params)!r}") from exc
    fmap = ConformalMap(kind, flux, coeffs)
    if max_degree is not None:
        fmap = fmap.padded(max(max_degree, fmap.max_degree))
    verdict = check_univalence(fmap)
    if not verdict:
        raise ValidationError(f"{name}{tuple(params)} is not univalent: {verdict}")
    return fmap


_PRESET_RE = re.compile(r"^\s*([a-z-]+)\s*(?:\(([^)]*)\))?\s*$")


def parse_preset(text: str, flux: float = 1.0) -> ConformalMap:
    """Parse an expression such as ``"ellipse(1, 0.25)"`` into a validated map."""
    match = _PRESET_RE.match(text)
    if not match:
        raise ValidationError(f"cannot parse preset expression {text!r}")
    name, args = match.groups()
    params = [float(a) for a in args.split(",") if a.strip()] if args else []
    return preset(name, params, flux=flux)


# -- shape files ---------------------------------------------------------------

_SHAPE_KEYS = {"kind", "flux", "coeffs"}
_COEFF_KEYS = {"k", "re", "im"}


def shape_from_dict(doc) -> ConformalMap:
    """Decode the shape-file schema; unknown fields are rejected.

    Exterior: ``k = -1`` is the leading c, ``k = 0`` is a_0, ``k >= 1`` is a_k.
    Interior: ``k >= 1`` is b_k.
    """
    if not isinstance(doc, dict):
        raise ValidationError("shape document must be a JSON object")
    extra = set(doc) - _SHAPE_KEYS
    if extra:
        raise ValidationError(f"unknown shape field(s): {sorted(extra)}")
    missing = _SHAPE_KEYS - set(doc)
    if missing:
        raise ValidationError(f"missing shape field(s): {sorted(missing)}")
    try:
        kind = ProblemKind(doc["kind"])
    except ValueError:
        raise ValidationError(f"field 'kind': expected 'exterior' or 'interior', got {doc['kind']!r}") from None
    flux = doc["flux"]
    if isinstance(flux, bool) or not isinstance(flux, (int, float)):
        raise ValidationError(f"field 'flux': expected a number, got {flux!r}")
    entries = doc["coeffs"]
    if not isinstance(entries, list) or not entries:
        raise ValidationError("field 'coeffs': expected a non-empty list")

    terms = {}
    for i, entry in enumerate(entries):
        where = f"coeffs[{i}]"
        if not isinstance(entry, dict):
            raise ValidationError(f"{where}: expected an object")
        extra = set(entry) - _COEFF_KEYS
        if extra:
            raise ValidationError(f"{where}: unknown field(s) {sorted(extra)}")
        if "k" not in entry or "re" not in entry:
            raise ValidationError(f"{where}: needs 'k' and 're'")
        k = entry["k"]
        if isinstance(k, bool) or not isinstance(k, int):
            raise ValidationError(f"{where}.k: expected an integer, got {k!r}")
        re_, im_ = entry["re"], entry.get("im", 0.0)
        for name, value in (("re", re_), ("im", im_)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"{where}.{name}: expected a number, got {value!r}")
        lowest = -1 if kind is ProblemKind.EXTERIOR else 1
        if k < lowest:
            raise ValidationError(f"{where}.k: {k} is out of range for a {kind.value} map")
        if k in terms:
            raise ValidationError(f"{where}.k: duplicate index {k}")
        terms[k] = complex(re_, im_)

    top = max(terms)
    if kind is ProblemKind.EXTERIOR:
        coeffs = np.zeros(top + 2, dtype=complex)
        for k, value in terms.items():
            coeffs[k + 1] = value
        if -1 not in terms:
            raise ValidationError("exterior shape needs the leading coefficient (k = -1)")
    else:
        coeffs = np.zeros(top, dtype=complex)
        for k, value in terms.items():
            coeffs[k - 1] = value
        if 1 not in terms:
            raise ValidationError("interior shape needs the leading coefficient (k = 1)")
    fmap = ConformalMap(kind, float(flux), coeffs)
    verdict = check_univalence(fmap)
    if not verdict:
        raise ValidationError(f"shape is not univalent: {verdict}")
    return fmap


def shape_to_dict(fmap: ConformalMap) -> dict:
    offset = -1 if fmap.kind is ProblemKind.EXTERIOR else 1
    coeffs = [
        {"k": i + offset, "re": float(c.real), "im": float(c.imag)}
        for i, c in enumerate(fmap.coeffs)
        if c != 0 or i == 0
    ]
    return {"kind": fmap.kind.value, "flux": fmap.flux, "coeffs": coeffs}


def load_shape(path) -> ConformalMap:
    """Read a shape file; JSON syntax errors are reported with line and column."""
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return shape_from_dict(doc)


def save_shape(fmap: ConformalMap, path):
    with open(path, "w") as fh:
        json.dump(shape_to_dict(fmap), fh, indent=2)
        fh.write("\n")
