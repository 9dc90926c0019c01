"""Quasi-parabolic and directional compactification charts.

The parabolic chart wraps phase space onto the bounded domain
``D = {P(x) < 1}`` with horizon ``E = {P = 1}``, where
``P(x) = sum_{i in I_alpha} x_i**(2 beta_i)``.  A phase point y maps to
``x_j = kappa**(-alpha_j) y_j`` where kappa >= 1 solves

    kappa**(2c) - kappa**(2c - 1) = sum_i y_i**(2 beta_i),

and back via ``y_j = kappa**(alpha_j) x_j`` with ``kappa = 1 / (1 - P(x))``.
The horizon gap ``W = 1 - P`` equals ``1/kappa`` exactly, which the embedding
exploits to keep round trips at working precision.

A directional chart covers one half-space ``sign * y_i0 > 0`` with
``s = (sign * y_i0)**(-1/alpha_i0)`` stored in slot i0 and the remaining
coordinates rescaled by powers of s; its horizon is simply ``{s = 0}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import (
    ChartDomainError,
    ConvergenceError,
    DomainError,
    HorizonError,
)
from .homogeneity import HomogeneityType

__all__ = [
    "ParabolicChart",
    "DirectionalChart",
    "EmbeddedPoint",
    "horizon_value",
    "solve_kappa",
    "embed",
    "project",
    "transition",
]

_KAPPA_RTOL = 1e-14
_KAPPA_MAX_ITER = 200


@dataclass(frozen=True)
class ParabolicChart:
    """The global quasi-parabolic chart for a homogeneity type."""

    htype: HomogeneityType

    @property
    def n(self) -> int:
        return self.htype.n

    @property
    def label(self) -> str:
        return "parabolic"

    def _two_beta(self) -> np.ndarray:
        return 2 * self.htype.beta_full()

    def horizon_poly(self, coords: np.ndarray) -> np.ndarray:
        """P at one point or a batch (last axis = variables)."""
        x = np.asarray(coords, dtype=float)
        tb = self._two_beta()
        idx = list(self.htype.i_alpha)
        return (x[..., idx] ** tb[idx]).sum(axis=-1)

    def horizon_gap_of(self, coords: np.ndarray) -> np.ndarray:
        return 1.0 - self.horizon_poly(coords)

    def grad_horizon_poly(self, coords: np.ndarray) -> np.ndarray:
        x = np.asarray(coords, dtype=float)
        tb = self._two_beta()
        out = np.zeros_like(x)
        for i in self.htype.i_alpha:
            out[..., i] = tb[i] * x[..., i] ** (tb[i] - 1)
        return out

    def embed_array(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorized embed: (m, n) phase points -> (coords, horizon_gap)."""
        yv = np.asarray(y, dtype=float)
        kappa = np.asarray(solve_kappa(self, yv), dtype=float)
        alpha = self.htype.alpha_array()
        scale = np.power(kappa[..., None], -alpha.astype(float))
        coords = yv * scale
        return coords, 1.0 / kappa

    def project_array(self, coords: np.ndarray, gap: np.ndarray = None) -> np.ndarray:
        """Vectorized inverse of embed_array.

        When the exact horizon gap from the embedding is available, pass it:
        recomputing 1 - P(x) near the horizon loses precision to cancellation.
        """
        x = np.asarray(coords, dtype=float)
        if gap is None:
            gap = self.horizon_gap_of(x)
        gap = np.asarray(gap, dtype=float)
        if np.any(gap < 0):
            raise DomainError("coordinates outside the closed chart domain (P > 1)")
        if np.any(gap == 0):
            raise HorizonError("cannot project a point on the horizon (P = 1)")
        alpha = self.htype.alpha_array()
        kappa = 1.0 / gap
        return x * np.power(kappa[..., None], alpha.astype(float))


@dataclass(frozen=True)
class DirectionalChart:
    """One directional chart: covers sign * y_i0 > 0, horizon {s = 0}.

    Coordinate slot i0 stores s; the other slots store the rescaled
    x-hat coordinates.
    """

    htype: HomogeneityType
    i0: int
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ChartDomainError(f"chart sign must be +1 or -1, got {self.sign}")
        if self.i0 not in self.htype.i_alpha:
            raise ChartDomainError(
                f"directional chart requires a positively weighted variable; "
                f"alpha[{self.i0}] = "
                f"{self.htype.alpha[self.i0] if 0 <= self.i0 < self.htype.n else '?'}"
            )

    @property
    def n(self) -> int:
        return self.htype.n

    @property
    def label(self) -> str:
        tag = "+" if self.sign > 0 else "-"
        return f"directional[{tag}{self.i0}]"

    def horizon_gap_of(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=float)[..., self.i0]

    def embed_array(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        yv = np.asarray(y, dtype=float)
        pivot = self.sign * yv[..., self.i0]
        if np.any(pivot <= 0):
            raise ChartDomainError(
                f"point outside chart half-space: requires "
                f"{'+' if self.sign > 0 else '-'}y[{self.i0}] > 0"
            )
        a0 = self.htype.alpha[self.i0]
        s = pivot ** (-1.0 / a0)
        alpha = self.htype.alpha_array().astype(float)
        coords = yv * np.power(s[..., None], alpha)
        coords[..., self.i0] = s
        return coords, s

    def project_array(self, coords: np.ndarray, gap: np.ndarray = None) -> np.ndarray:
        x = np.asarray(coords, dtype=float)
        s = x[..., self.i0]
        if np.any(s < 0):
            raise DomainError("negative s: outside the closed chart domain")
        if np.any(s == 0):
            raise HorizonError("cannot project a point on the horizon (s = 0)")
        alpha = self.htype.alpha_array().astype(float)
        y = x * np.power(s[..., None], -alpha)
        y[..., self.i0] = self.sign * s ** (-float(self.htype.alpha[self.i0]))
        return y


Chart = Union[ParabolicChart, DirectionalChart]


@dataclass(frozen=True, eq=False)
class EmbeddedPoint:
    """A point in chart coordinates together with its horizon gap.

    horizon_gap is 1 - P(coords) in the parabolic chart and s in a
    directional chart; zero marks the horizon (image of infinity).
    """

    chart: Chart
    coords: np.ndarray
    horizon_gap: float

    def __post_init__(self):
        object.__setattr__(
            self, "coords", np.asarray(self.coords, dtype=float).copy()
        )
        object.__setattr__(self, "horizon_gap", float(self.horizon_gap))


def horizon_value(chart: Chart, coords) -> Tuple[float, np.ndarray]:
    """Horizon function and its gradient at chart coordinates.

    Parabolic: (P(x), grad P).  Directional: (s, e_i0).  Accepts a single
    point (n,) or a batch (..., n); scalar outputs follow the input shape.
    """
    x = np.asarray(coords, dtype=float)
    if isinstance(chart, ParabolicChart):
        P = chart.horizon_poly(x)
        grad = chart.grad_horizon_poly(x)
    else:
        P = x[..., chart.i0]
        grad = np.zeros_like(x)
        grad[..., chart.i0] = 1.0
    if x.ndim == 1:
        return float(P), grad
    return P, grad


def solve_kappa(chart: ParabolicChart, y) -> Union[float, np.ndarray]:
    """Solve kappa**(2c) - kappa**(2c-1) = P~(y) for the unique root >= 1.

    Safeguarded Newton from the provable upper bound 1 + P~**(1/(2c)) inside
    the bracket [1, 1 + P~**(1/(2c)) + P~]; converges to 1e-14 relative.
    Vectorized over a batch of phase points.
    """
    if not isinstance(chart, ParabolicChart):
        raise TypeError("solve_kappa applies to the parabolic chart")
    yv = np.asarray(y, dtype=float)
    single = yv.ndim == 1
    tb = chart._two_beta()
    idx = list(chart.htype.i_alpha)
    with np.errstate(over="ignore"):
        ptilde = (yv[..., idx] ** tb[idx].astype(float)).sum(axis=-1)
    if not np.all(np.isfinite(ptilde)):
        raise DomainError("phase point too large: P~ overflows float64")
    tc = 2 * chart.htype.c

    pt = np.atleast_1d(ptilde)
    lo = np.ones_like(pt)
    hi = 1.0 + pt ** (1.0 / tc)
    kappa = hi.copy()
    done = pt == 0.0
    kappa[done] = 1.0
    for _ in range(_KAPPA_MAX_ITER):
        if done.all():
            break
        F = kappa ** (tc - 1) * (kappa - 1.0) - pt
        Fp = kappa ** (tc - 2) * (tc * kappa - (tc - 1))
        lo = np.where(~done & (F < 0), kappa, lo)
        hi = np.where(~done & (F > 0), kappa, hi)
        step = F / Fp
        new = kappa - step
        outside = (new <= lo) | (new >= hi)
        new = np.where(outside & ~done, 0.5 * (lo + hi), new)
        moved = np.abs(new - kappa)
        kappa = np.where(done, kappa, new)
        done = done | (moved <= _KAPPA_RTOL * kappa)
    else:
        raise ConvergenceError("kappa iteration did not converge in 200 steps")
    if single:
        return float(kappa[0])
    return kappa.reshape(ptilde.shape)


def embed(chart: Chart, y) -> EmbeddedPoint:
    """Map a phase-space point into chart coordinates.

    Raises ChartDomainError for points outside a directional chart's
    half-space and DomainError for points too large for float64.

    Round-trip accuracy (project(embed(y)) ~ y to 1e-10 relative or
    better) holds while each rescaled coordinate y_i / kappa^alpha_i is
    a normal double; a component so small relative to the others that
    its rescaling underflows past ~2.2e-308 keeps only the mantissa bits
    subnormals retain.
    """
    yv = np.asarray(y, dtype=float)
    if yv.shape != (chart.n,):
        raise ValueError(f"point has shape {yv.shape}, expected ({chart.n},)")
    coords, gap = chart.embed_array(yv)
    return EmbeddedPoint(chart=chart, coords=coords, horizon_gap=float(gap))


def project(point: EmbeddedPoint) -> np.ndarray:
    """Map an embedded point back to original phase-space coordinates.

    Uses the point's stored horizon gap (exact from the embedding) rather
    than recomputing it, so embed -> project round trips at ~1e-14.
    Raises HorizonError on the horizon: infinity has no phase-space image.
    """
    if point.horizon_gap < 0:
        raise DomainError("point lies outside the closed chart domain")
    if point.horizon_gap == 0:
        raise HorizonError("cannot project a horizon point (gap = 0)")
    return point.chart.project_array(
        point.coords, np.asarray(point.horizon_gap, dtype=float)
    )


def transition(point: EmbeddedPoint, to_chart: Chart) -> EmbeddedPoint:
    """Re-express an interior point in another chart of the same type.

    Composition of project and embed; horizon points cannot transition
    (HorizonError), and the target chart's sign condition applies
    (ChartDomainError).
    """
    if to_chart.htype.alpha != point.chart.htype.alpha:
        raise ChartDomainError(
            "transition requires charts of the same homogeneity type"
        )
    if point.chart == to_chart:
        return EmbeddedPoint(
            chart=to_chart, coords=point.coords, horizon_gap=point.horizon_gap
        )
    return embed(to_chart, project(point))
