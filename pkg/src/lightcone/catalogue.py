"""Reference Lagrangians and metric fields with their expected verdicts.

Every expected value carries a provenance tag:

* ``TRIVIAL`` -- follows from a closed-form computation;
* ``PAPER``   -- a statement of the underlying theory about this example;
* ``DERIVED`` -- established numerically by this package's own scans.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Optional, Union

from .core import (HOPF4, HopfMetricField, LagrangianSpec, beem2, beem3, from_expression, minkowski,
                   randers4)

PAPER = "PAPER"
TRIVIAL = "TRIVIAL"
DERIVED = "DERIVED"
PROVENANCE = (PAPER, TRIVIAL, DERIVED)

VALID = "VALID_LORENTZ_FINSLER"
NON_FINSLER = "NON_FINSLER"

DEFAULT_ALPHA = 0.05
ALPHA_CERTIFIED = 3.72  # scan-certified bound (4000 directions) for the bump coefficient
DEFAULT_BETA = 0.05
BETA_CERTIFIED = 0.40  # scan-certified bound for the odd perturbation

ODD_PERTURBED_TEXT = "0.5*(-v0^2+v1^2+v2^2)+beta*v1^3/sqrt(v0^2+v1^2+v2^2)"


@dataclass(frozen=True)
class Expected:
    value: object
    provenance: str
    note: str = ""

    def __post_init__(self):
        if self.provenance not in PROVENANCE:
            raise ValueError(f"unknown provenance tag {self.provenance!r}")


@dataclass(frozen=True)
class CatalogueEntry:
    name: str
    source: Union[LagrangianSpec, HopfMetricField]
    expected: Mapping[str, Expected]
    description: str = ""

    @property
    def is_metric_field(self) -> bool:
        return isinstance(self.source, HopfMetricField)

    @property
    def spec(self) -> LagrangianSpec:
        if self.is_metric_field:
            raise TypeError(f"{self.name} is a metric field, not a Lagrangian")
        return self.source

    @property
    def dimension(self) -> int:
        return self.source.dimension

    def text(self) -> Optional[str]:
        """Expression text of the Lagrangian, or ``None`` for a bare metric field."""
        return None if self.is_metric_field else self.source.text()


def odd_perturbed(beta: float = DEFAULT_BETA) -> LagrangianSpec:
    """Minkowski 2+1 plus the odd 2-homogeneous term ``beta v1^3/|v|``: non-reversible."""
    return from_expression(ODD_PERTURBED_TEXT, 3, {"beta": beta}, reversible=False,
                           name=f"odd_perturbed(beta={beta:g})")


def _table(**items) -> Mapping[str, Expected]:
    return MappingProxyType(dict(items))


def _flat(n: int) -> CatalogueEntry:
    return CatalogueEntry(
        f"minkowski{n}",
        minkowski(n),
        _table(
            validity=Expected(VALID, TRIVIAL, "constant metric of signature (1, n)"),
            reversible=Expected(True, TRIVIAL, "even quadratic form"),
            timelike_components=Expected(2, TRIVIAL, "future and past cones"),
            null_components=Expected(2, TRIVIAL, "one light cone sheet per time orientation"),
            spacelike_components=Expected(1, TRIVIAL, "a band around the equator"),
            euler=Expected("FINSLER", TRIVIAL, "Hessian of a quadratic Lagrangian"),
        ),
        f"flat {n}+1 Minkowski space",
    )


def _entries() -> dict:
    return {
        "minkowski2": _flat(2),
        "minkowski3": _flat(3),
        "beem3": CatalogueEntry(
            "beem3",
            beem3(DEFAULT_ALPHA),
            _table(
                validity=Expected(VALID, PAPER, "Lorentz-Finsler for small enough alpha"),
                reversible=Expected(True, PAPER, "even in v"),
                timelike_components=Expected(2, PAPER, "a valid Lagrangian in dimension >= 3 has two cones"),
                null_components=Expected(2, DERIVED, "atlas at two resolutions"),
                spacelike_components=Expected(1, DERIVED, "atlas at two resolutions"),
                alpha_range=Expected((0.0, ALPHA_CERTIFIED), DERIVED, "signature scan with bisection"),
                euler=Expected("FINSLER", TRIVIAL, "Hessian of a Lagrangian"),
            ),
            "2+1 Minkowski deformed by a bump that vanishes on the axis and the equator",
        ),
        "beem2": CatalogueEntry(
            "beem2",
            beem2(DEFAULT_ALPHA),
            _table(
                validity=Expected(VALID, PAPER, "1+1 analogue of beem3"),
                reversible=Expected(True, TRIVIAL, "even in v"),
                timelike_components=Expected(2, DERIVED, "arcs around +-e0 on the circle"),
                null_components=Expected(4, DERIVED, "four isolated light rays on the circle"),
                spacelike_components=Expected(2, DERIVED, "arcs around +-e1 on the circle"),
                alpha_range=Expected((0.0, ALPHA_CERTIFIED), DERIVED, "signature scan with bisection"),
                euler=Expected("FINSLER", TRIVIAL, "Hessian of a Lagrangian"),
            ),
            "1+1 Minkowski deformed by the same bump",
        ),
        "randers4": CatalogueEntry(
            "randers4",
            randers4(1.0, 1.0),
            _table(
                validity=Expected("DOMAIN_WITNESS", PAPER, "undefined outside v0^2 > |x|^2"),
                reversible=Expected(False, TRIVIAL, "the linear term is odd"),
                timelike_components=Expected(0, DERIVED, "L >= 0 wherever it is defined"),
                euler=Expected("FINSLER", TRIVIAL, "Hessian of a Lagrangian where defined"),
            ),
            "Randers-type square of a cone norm plus a linear form",
        ),
        "hopf4": CatalogueEntry(
            "hopf4",
            HOPF4,
            _table(
                validity=Expected(NON_FINSLER, PAPER, "not the Hessian of any Lagrangian"),
                euler=Expected(NON_FINSLER, DERIVED, "(d g) v residual far above 0.1 off the axes"),
                timelike_components=Expected(0, PAPER, "g_v(v, v) = |v|^2 > 0, so no causal vectors"),
                quadratic_positive=Expected(True, TRIVIAL, "g_v(v, v) = |v|^2 by construction"),
            ),
            "direction-dependent Lorentzian metric on R^4 built from the Hopf fibration",
        ),
        "odd_perturbed": CatalogueEntry(
            "odd_perturbed",
            odd_perturbed(DEFAULT_BETA),
            _table(
                validity=Expected(VALID, DERIVED, "signature scan"),
                reversible=Expected(False, TRIVIAL, "odd perturbation"),
                timelike_components=Expected(2, DERIVED, "atlas at two resolutions"),
                null_components=Expected(2, DERIVED, "atlas at two resolutions"),
                spacelike_components=Expected(1, DERIVED, "atlas at two resolutions"),
                beta_range=Expected((0.0, BETA_CERTIFIED), DERIVED, "signature scan with bisection"),
                euler=Expected("FINSLER", TRIVIAL, "Hessian of a Lagrangian"),
            ),
            "non-reversible valid Lagrangian: Minkowski plus a small odd 2-homogeneous term",
        ),
    }


_CATALOGUE = _entries()
NAMES = tuple(_CATALOGUE)


def get(name: str) -> CatalogueEntry:
    try:
        return _CATALOGUE[name]
    except KeyError:
        raise KeyError(f"unknown catalogue entry {name!r}; choose from {', '.join(NAMES)}") from None
