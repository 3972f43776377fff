"""Numerical tolerances shared by every solver and checker."""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    row_sum: float = 1e-12
    # reciprocal condition number below which a chain solve is declared singular
    rcond: float = 1e-13
    stationary_residual: float = 1e-8
    poisson_residual: float = 1e-8
    kemeny_start: float = 1e-8
    # MV-MAPI: strict improvement needed to switch an action
    switch_margin: float = 1e-10
    zero_derivative: float = 1e-9
    eta_equal: float = 1e-9
    stationarity: float = 1e-9
    monotone_slack: float = 1e-10
    local_ne: float = 1e-10


DEFAULT = Tolerances()
