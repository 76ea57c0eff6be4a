"""Finite-precision p-adic linear algebra for converging families of
matrix representations: convergence diagnostics, irreducibility
certificates, physical-limit construction, stable lattices, component
order bounds, and thin-set density estimation."""

from .errors import (
    CoercivityError,
    ConfigError,
    NegativeVerdict,
    NoCertificateError,
    NoSeparatingWordError,
    PadicError,
    PrecisionError,
    PrecisionExhaustedError,
    RankDeficiencyError,
    StageError,
    UnboundedLatticeError,
    UndecidableError,
)
from .field import FieldSpec, PadicScalar, congruent, format_scalar, padic_exp, parse_scalar
from .polys import Poly, hensel_lift_root, roots_monic

__all__ = [
    "CoercivityError",
    "ConfigError",
    "FieldSpec",
    "NegativeVerdict",
    "NoCertificateError",
    "NoSeparatingWordError",
    "PadicError",
    "PadicScalar",
    "Poly",
    "PrecisionError",
    "PrecisionExhaustedError",
    "RankDeficiencyError",
    "StageError",
    "UnboundedLatticeError",
    "UndecidableError",
    "congruent",
    "format_scalar",
    "hensel_lift_root",
    "padic_exp",
    "parse_scalar",
    "roots_monic",
]
