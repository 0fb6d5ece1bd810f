"""Equipotential-curve geometry for planar Dirichlet problems given by conformal maps."""

from .conformal import (
    ConformalMap,
    ProblemKind,
    check_univalence,
    enclosed_area_exact,
    eval_derivatives,
    evaluate,
    load_shape,
    parse_preset,
    potential,
    preset,
    save_shape,
)
from .errors import (
    DomainError,
    EquipotentialError,
    KindError,
    ResolutionError,
    UnivalenceLost,
    ValidationError,
)
from .functionals import fd_derivatives, report
from .levelset import LevelSetSample, average, covariance, sample_levelset
from .verify import check_identities, check_inequalities

__version__ = "0.1.0"
