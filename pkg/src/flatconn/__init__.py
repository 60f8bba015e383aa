"""Exact trivialization of flat connections over truncated power-series rings."""

from .completion import Tower, complete, is_coherent, kernel_order_check, project
from .connection import (
    Connection,
    FlatnessReport,
    NotFlatError,
    curvature,
    d_apply,
    decompose,
    gauge_transform,
    horizontal_basis,
    is_flat,
    psi_apply,
    psi_full,
    solve_unique,
    trivialize,
)
from .ode import (
    OdeProblem,
    bjork_counterexample,
    commuting_family_check,
    exp_method,
    residual,
    riemann_product,
    solve_matrix_ode,
)
from .series import DimensionError, NotAUnitError, PrecisionError, Series, SeriesMatrix
from .weyl import DiffOperator, apply, commutator, compose, psi_component

__version__ = "0.1.0"
