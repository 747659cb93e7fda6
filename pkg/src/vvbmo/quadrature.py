"""Deterministic quadrature rules on the circle, the radial interval and the disc.

Conventions: the circle rule integrates against the normalized measure
``dm = dθ/2π`` (total mass 1), the disc rule against plain Lebesgue area
``dA = r dr dθ`` (total mass ≈ π).  Radial rules are composite Gauss–Legendre
on dyadic panels ``[1 - 2^-j, 1 - 2^-(j+1)]`` and stop at ``1 - 2^-J``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "QuadratureRule",
    "RefinementEstimate",
    "QuadratureError",
    "circle_nodes",
    "radial_composite",
    "disc_rule",
    "build_rule",
    "refine_and_estimate",
]


class QuadratureError(ValueError):
    """Raised when an integrand produces non-finite samples."""


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights plus the parameters that produced them.

    ``nodes`` are angles for ``kind="circle"``, radii for ``kind="radial"`` and
    complex points ``r e^{iθ}`` for ``kind="disc"``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    params: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return self.weights.size

    def integrate(self, values) -> float | complex:
        """Weighted sum of ``values`` sampled at ``nodes`` (leading axis)."""
        values = np.asarray(values)
        return np.tensordot(self.weights, values, axes=(0, 0))


@dataclass(frozen=True)
class RefinementEstimate:
    value: float
    error_estimate: float
    levels_used: int
    history: tuple = ()


def circle_nodes(M: int) -> QuadratureRule:
    """M-point trapezoid rule for ``dm`` on the circle.

    Exact for trigonometric polynomials of degree < M.
    """
    if M < 1:
        raise ValueError(f"circle rule needs M >= 1, got {M}")
    theta = 2.0 * np.pi * np.arange(M) / M
    weights = np.full(M, 1.0 / M)
    return QuadratureRule(theta, weights, "circle", {"M": int(M)})


@lru_cache(maxsize=32)
def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def radial_panels(J: int) -> np.ndarray:
    """Dyadic panel edges ``0, 1/2, 3/4, ..., 1 - 2^-J``."""
    return 1.0 - 2.0 ** -np.arange(J + 1, dtype=float)


def radial_composite(J: int, order: int) -> QuadratureRule:
    """Composite Gauss–Legendre rule on ``[0, 1 - 2^-J]`` with dyadic panels."""
    if J < 1 or order < 1:
        raise ValueError(f"radial rule needs J >= 1 and order >= 1, got J={J}, order={order}")
    x, w = _gauss_legendre(order)
    edges = radial_panels(J)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + half * (x[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    return QuadratureRule(nodes, weights, "radial", {"J": int(J), "order": int(order)})


def disc_rule(M: int, J: int, order: int) -> QuadratureRule:
    """Product rule for ``dA`` on the disc of radius ``1 - 2^-J``.

    Nodes are ordered radius-major: ``nodes.reshape(J*order, M)`` gives one
    circle of M equispaced angles per radial node.
    """
    circ = circle_nodes(M)
    rad = radial_composite(J, order)
    r = rad.nodes[:, None]
    nodes = (r * np.exp(1j * circ.nodes[None, :])).ravel()
    weights = (2.0 * np.pi * rad.weights[:, None] * r * circ.weights[None, :]).ravel()
    return QuadratureRule(nodes, weights, "disc", {"M": int(M), "J": int(J), "order": int(order)})


_BUILDERS: dict[str, Callable[..., QuadratureRule]] = {
    "circle": circle_nodes,
    "radial": radial_composite,
    "disc": disc_rule,
}


def build_rule(kind: str, **params) -> QuadratureRule:
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise ValueError(f"unknown rule kind {kind!r}") from None
    return builder(**params)


def _doubled(kind: str, params: Mapping[str, int], level: int) -> dict:
    out = dict(params)
    factor = 2**level
    if "M" in out:
        out["M"] = out["M"] * factor
    if "J" in out:
        out["J"] = out["J"] * factor
    return out


def refine_and_estimate(integrand, base: Mapping, levels: int = 3) -> RefinementEstimate:
    """Integrate ``integrand`` at successively doubled resolutions.

    ``base`` holds ``kind`` plus the rule parameters.  Each level doubles M and
    J (the order is kept).  The estimate is the finest value and the error is
    the absolute difference between the last two levels.
    """
    if levels < 2:
        raise ValueError("refinement needs at least two levels")
    base = dict(base)
    kind = base.pop("kind")
    history = []
    for level in range(levels):
        rule = build_rule(kind, **_doubled(kind, base, level))
        samples = np.asarray(integrand(rule.nodes))
        if not np.all(np.isfinite(samples)):
            raise QuadratureError(f"non-finite integrand values at level {level} ({kind} rule)")
        history.append(rule.integrate(samples))
    value = history[-1]
    err = float(abs(history[-1] - history[-2]))
    return RefinementEstimate(value=value, error_estimate=err, levels_used=levels, history=tuple(history))
