"""Quadratic smoothing of the dry-friction potential.

The friction potential of one body is the nonsmooth convex function
``phi(y) = f*|y|``.  For each smoothing index ``n`` we replace it by its
quadratic inf-convolution

    phi_n(y) = inf_y' { (n/2)*(y - y')**2 + f*|y'| }
             = (n/2)*y**2            if n*|y| <= f,
               f*|y| - f**2/(2*n)    otherwise,

which is C^1 with derivative ``phi_n'(y) = clamp(n*y, [-f, f])`` — the
force law a stiff viscous band of slope ``n`` would produce.  As ``n``
grows, ``phi_n`` increases pointwise to ``f*|y|`` and the clamped force
tends to the set-valued Coulomb law.

The resolvent ``J_n(y) = y - phi_n'(y)/n`` maps each point to the base of
its quadratic penalty; the key exact inclusion ``phi_n'(y) in
d(phi)(J_n(y))`` is what lets solutions of the smoothed dynamics pass to
the limit inside the variational inequalities.  The product bound
(`monotonicity_margin`) quantifies how far two different smoothing indices can
disagree, and is the sole ingredient of the solver's Cauchy refinement
certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "FrictionPotential",
    "RegularizationIndex",
    "envelope",
    "gradient",
    "resolvent",
    "subdifferential",
    "monotonicity_margin",
]


@dataclass(frozen=True)
class FrictionPotential:
    """Threshold ``f >= 0`` of the potential ``phi(y) = f*|y|``."""

    f: float

    def __post_init__(self) -> None:
        f = float(self.f)
        if not math.isfinite(f) or f < 0.0:
            raise ValueError(f"friction threshold must be finite and >= 0, got {self.f!r}")

    def value(self, y: float) -> float:
        return self.f * abs(y)


@dataclass(frozen=True)
class RegularizationIndex:
    """Pair of smoothing indices, one per body."""

    n1: int
    n2: int

    def __post_init__(self) -> None:
        for name in ("n1", "n2"):
            n = getattr(self, name)
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {n!r}")

    def scaled(self, factor: int) -> "RegularizationIndex":
        return RegularizationIndex(self.n1 * factor, self.n2 * factor)

    @property
    def max(self) -> int:
        return max(self.n1, self.n2)


def _check_index(n: int) -> None:
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"smoothing index must be an integer >= 1, got {n!r}")


def envelope(pot: FrictionPotential, n: int, y: float) -> float:
    """Smoothed potential ``phi_n(y)`` (quadratic inf-convolution of ``pot``)."""
    _check_index(n)
    f = pot.f
    if n * abs(y) <= f:
        return 0.5 * n * y * y
    return f * abs(y) - f * f / (2.0 * n)


def gradient(pot: FrictionPotential, n: int, y: float) -> float:
    """Derivative ``phi_n'(y) = clamp(n*y, [-f, f])``."""
    _check_index(n)
    f = pot.f
    g = n * y
    if g > f:
        return f
    if g < -f:
        return -f
    return g


def resolvent(pot: FrictionPotential, n: int, y: float) -> float:
    """Resolvent ``J_n(y) = y - phi_n'(y)/n``.

    Computed branchwise so the subdifferential inclusion
    ``phi_n'(y) in d(phi)(J_n(y))`` holds exactly in floating point:
    inside the band the resolvent collapses to 0 (where the
    subdifferential is the full interval ``[-f, f]``), outside it the
    result keeps the sign of ``y`` (where the subdifferential is
    ``{f*sign}``), snapping roundoff-level sign flips back to 0.
    """
    _check_index(n)
    f = pot.f
    if abs(n * y) <= f:
        return 0.0
    s = 1.0 if y > 0.0 else -1.0
    j = y - (f / n) * s
    if j * s <= 0.0:
        return 0.0
    return j


def subdifferential(
    pot: FrictionPotential, y: float, v_stick: float = 1e-9
) -> tuple[float, float]:
    """Subdifferential ``d(phi)(y)`` as a closed interval ``(lo, hi)``.

    ``{f*sign(y)}`` away from rest, the full interval ``[-f, f]`` inside
    the stick band.
    """
    f = pot.f
    if abs(y) > v_stick:
        fs = f if y > 0.0 else -f
        return (fs, fs)
    return (-f, f)


def monotonicity_margin(pot: FrictionPotential, y1: float, y2: float, n: int, r: int) -> float:
    """Nonnegative slack in the two-index monotonicity bound.

    For any ``y1, y2`` and indices ``n, r``,

        -(y1 - y2) * (phi_n'(y1) - phi_r'(y2)) <= f**2 * (1/n + 1/r),

    so the returned ``f**2*(1/n + 1/r) + (y1-y2)*(phi_n'(y1)-phi_r'(y2))``
    is >= 0.  Summed along trajectories this inequality yields the Cauchy
    bound between two smoothing levels of the penalized dynamics.
    """
    f = pot.f
    g1 = gradient(pot, n, y1)
    g2 = gradient(pot, r, y2)
    return f * f * (1.0 / n + 1.0 / r) + (y1 - y2) * (g1 - g2)
