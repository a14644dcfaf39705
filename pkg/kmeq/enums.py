from __future__ import annotations

import enum


@enum.unique
class Method(enum.Enum):
    ARBK = "arbk"
    GRBK = "grbk"
    CME_RK = "cme_rk"
    GRADIENT = "gradient"
    """Gradient iteration on G(X) = ||F - AXB||_F^2 / 2; stands in for LSPIA."""

    @property
    def is_block(self) -> bool:
        """Whether the method needs row and column partitions."""
        return self in (Method.ARBK, Method.GRBK)

    @property
    def display_name(self) -> str:
        return {
            Method.ARBK: "ARBK",
            Method.GRBK: "GRBK",
            Method.CME_RK: "CME-RK",
            Method.GRADIENT: "LSPIA",
        }[self]

    @classmethod
    def from_name(cls, name: str) -> Method:
        name = name.lower().replace("-", "_")
        if name == "lspia":
            return cls.GRADIENT
        try:
            return cls(name)
        except ValueError:
            raise ValueError(name) from None


@enum.unique
class Family(enum.Enum):
    GAUSSIAN = "gaussian"
    SMATRIX = "smatrix"
    BSPLINE = "bspline"

    @property
    def is_random(self) -> bool:
        """Random families are redrawn for every trial."""
        return self is not Family.BSPLINE

    @classmethod
    def from_name(cls, name: str) -> Family:
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(name) from None


@enum.unique
class Surface(enum.Enum):
    SURFACE1 = "surface1"
    """z = s^3 - 3st^2 over 0 <= s <= 2pi, 1/2 <= t <= 1"""

    SURFACE2 = "surface2"
    """z = (s - s^3 - t^5) exp(-s^2 - t^2) over -1 <= s, t <= 1"""

    @classmethod
    def from_name(cls, name: str) -> Surface:
        name = name.lower()
        if name in ("1", "2"):
            name = "surface" + name
        try:
            return cls(name)
        except ValueError:
            raise ValueError(name) from None


@enum.unique
class Termination(enum.Enum):
    TOLERANCE_REACHED = "ToleranceReached"
    MAX_ITERS_EXCEEDED = "MaxItersExceeded"