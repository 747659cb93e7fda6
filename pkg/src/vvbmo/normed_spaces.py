"""Finite-dimensional normed spaces and numerical moduli of convexity/smoothness.

A space is ``ℓ^p_d`` optionally composed with an invertible matrix ``T``,
``‖x‖ = ‖T x‖_p``.  Complex coordinates are supported throughout; the moduli
searches run over the realification when ``complex_field`` is set.

The convexity search returns the smallest value of ``1 - ‖(a+b)/2‖`` seen over
exactly admissible pairs, so it can only overestimate the infimum.  The
smoothness search returns the largest value seen, an underestimate of the
supremum.  Both are monotone in the search budget because larger budgets run
a superset of the same deterministic trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NormSpec",
    "ModulusCurve",
    "ModulusBudget",
    "PowerFit",
    "DegenerateModulusError",
    "make_space",
    "norm",
    "modulus_convexity",
    "modulus_smoothness",
    "modulus_curve",
    "power_type_fit",
]

_COND_LIMIT = 1e12
_ADMISSIBLE_TOL = 1e-12
_ROOT_STEPS = 24


class DegenerateModulusError(ValueError):
    """The modulus vanishes on part of the curve, so it has no power type."""


@dataclass(frozen=True)
class NormSpec:
    p: float
    d: int
    transform: np.ndarray | None = None
    complex_field: bool = True

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError(f"exponent must satisfy 1 <= p <= inf, got {self.p}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        if self.transform is not None:
            T = np.array(self.transform, dtype=float)
            if T.shape != (self.d, self.d):
                raise ValueError(f"transform must be {self.d}x{self.d}, got {T.shape}")
            cond = np.linalg.cond(T)
            if not np.isfinite(cond) or cond > _COND_LIMIT:
                raise ValueError(f"transform is singular (condition number {cond:.3g})")
            T.setflags(write=False)
            object.__setattr__(self, "transform", T)

    @property
    def is_hilbert(self) -> bool:
        # a linear image of l^2 is still an inner-product space
        return self.p == 2

    def norm(self, v, axis: int = -1) -> np.ndarray:
        return norm(self, v, axis=axis)

    def describe(self) -> dict:
        out = {"p": _p_to_json(self.p), "d": int(self.d)}
        if self.transform is not None:
            out["transform"] = self.transform.tolist()
        return out


def _p_to_json(p):
    return "inf" if np.isinf(p) else float(p)


def make_space(p: float, d: int, transform=None, complex_field: bool = True) -> NormSpec:
    """Build ``ℓ^p_d`` (or its image under ``transform``)."""
    if isinstance(p, str):
        p = float(p)
    return NormSpec(float(p), int(d), transform, complex_field)


def norm(space: NormSpec, v, axis: int = -1) -> np.ndarray:
    """``‖T v‖_p`` along ``axis`` (coordinate axis of length ``space.d``)."""
    v = np.asarray(v)
    if v.ndim == 0 or v.shape[axis] != space.d:
        raise ValueError(f"expected {space.d} coordinates, got shape {v.shape}")
    if space.transform is not None:
        v = np.moveaxis(np.tensordot(v, space.transform, axes=([axis], [1])), -1, axis)
    mod = np.abs(v)
    p = space.p
    if p == 1:
        return np.sum(mod, axis=axis)
    if np.isinf(p):
        return np.max(mod, axis=axis)
    top = np.max(mod, axis=axis)
    # mod**p under/overflows once the largest coordinate leaves this range;
    # those entries are redone scaled by their largest coordinate
    lim = 10.0 ** (280.0 / p)
    bad = (top > 0) & ((top < 1.0 / lim) | (top > lim))
    with np.errstate(over="ignore", under="ignore"):
        out = np.sqrt(np.sum(mod * mod, axis=axis)) if p == 2 else np.sum(mod**p, axis=axis) ** (1.0 / p)
    if np.any(bad):
        with np.errstate(invalid="ignore", divide="ignore", under="ignore"):
            ratio = mod / np.expand_dims(np.where(top > 0, top, 1.0), axis)
            safe = top * np.sum(ratio**p, axis=axis) ** (1.0 / p)
        out = np.where(bad & np.isfinite(top), safe, out)
    return out


@dataclass(frozen=True)
class ModulusBudget:
    """Search effort: random multistarts and coordinate-descent sweeps.

    Deterministic structured starts (coordinate pairs) are always run in
    addition to the random ones.
    """

    starts: int = 64
    sweeps: int = 200
    seed: int = 0
    initial_step: float = 0.5
    min_step: float = 1e-9


@dataclass(frozen=True)
class ModulusCurve:
    abscissae: np.ndarray
    estimates: np.ndarray
    side: str  # "upper" for convexity estimates, "lower" for smoothness
    kind: str  # "convexity" | "smoothness"
    budget: ModulusBudget = field(default_factory=ModulusBudget)

    def cleaned(self) -> np.ndarray:
        """Monotone cleanup that keeps the one-sided semantics.

        Upper bounds of a nondecreasing function stay upper bounds after a
        running minimum from the right; lower bounds after a running maximum.
        """
        est = np.asarray(self.estimates, dtype=float)
        if self.side == "upper":
            return np.minimum.accumulate(est[::-1])[::-1]
        return np.maximum.accumulate(est)


@dataclass(frozen=True)
class PowerFit:
    exponent: float
    coefficient: float
    residual: float


def _real_dim(space: NormSpec) -> int:
    return 2 * space.d if space.complex_field else space.d


def _as_vectors(space: NormSpec, x: np.ndarray) -> np.ndarray:
    if space.complex_field:
        return x[..., : space.d] + 1j * x[..., space.d :]
    return x


def _normalize(space: NormSpec, x: np.ndarray) -> np.ndarray:
    n = norm(space, _as_vectors(space, x))
    with np.errstate(invalid="ignore", divide="ignore"):
        return x / n[..., None]


def _structured_pairs(n: int) -> np.ndarray:
    """Coordinate-aligned starting pairs ``(e_i, e_j)`` and ``(e_i+e_j, e_i-e_j)``."""
    eye = np.eye(n)
    pairs = []
    for i in range(n):
        for j in range(n):
            if i != j:
                pairs.append(np.concatenate([eye[i], eye[j]]))
    for i in range(n):
        for j in range(i + 1, n):
            pairs.append(np.concatenate([eye[i] + eye[j], eye[i] - eye[j]]))
    if not pairs:
        # one real dimension: only a = ±b is available
        pairs.append(np.array([1.0, -1.0]))
    return np.array(pairs)


def _starts(space: NormSpec, budget: ModulusBudget) -> np.ndarray:
    n = _real_dim(space)
    rng = np.random.default_rng(budget.seed)
    rand = rng.standard_normal((budget.starts, 2 * n))
    return np.concatenate([_structured_pairs(n), rand], axis=0)


def _convexity_objective(space: NormSpec, eps: float, X: np.ndarray) -> np.ndarray:
    """``1 - ‖(a+b)/2‖`` for the admissible pair generated by each row of X.

    ``a`` is the normalized first half; ``b`` runs along the normalized arc
    ``cos φ a + sin φ v`` from ``a`` to ``-a`` and the crossing
    ``‖a - b‖ = eps`` is located by a bracketed root search.  Rows that cannot be made
    admissible to ``_ADMISSIBLE_TOL`` get ``+inf``.
    """
    n = X.shape[1] // 2
    a = _normalize(space, X[:, :n])
    v = X[:, n:]
    lo = np.zeros(X.shape[0])
    hi = np.full(X.shape[0], np.pi)

    def gap(phi):
        b = _normalize(space, np.cos(phi)[:, None] * a + np.sin(phi)[:, None] * v)
        return norm(space, _as_vectors(space, a - b)) - eps, b

    # bracketed Illinois iteration on g(phi); g(0) = -eps < 0 < 2 - eps = g(pi)
    g_lo = np.full(X.shape[0], -eps)
    g_hi = np.full(X.shape[0], 2.0 - eps)
    side = np.zeros(X.shape[0], dtype=int)
    # rows freeze individually once converged, so each row's result does not
    # depend on which other rows share the batch
    done = np.zeros(X.shape[0], dtype=bool)
    for it in range(_ROOT_STEPS):
        denom = g_hi - g_lo
        with np.errstate(invalid="ignore", divide="ignore"):
            mid = hi - g_hi * (hi - lo) / denom
        # plain bisection every few steps and wherever the secant misbehaves
        bad = ~np.isfinite(mid) | (mid <= lo) | (mid >= hi) | (it % 3 == 2)
        mid = np.where(bad, 0.5 * (lo + hi), mid)
        g, _b = gap(mid)
        g = np.where(np.isfinite(g), g, 1.0)
        below = g < 0
        lo_new, g_lo_new = np.where(below, mid, lo), np.where(below, g, g_lo)
        hi_new, g_hi_new = np.where(below, hi, mid), np.where(below, g_hi, g)
        # Illinois: halve the retained endpoint's value after a repeated side
        g_hi_new = np.where(below & (side == -1), 0.5 * g_hi_new, g_hi_new)
        g_lo_new = np.where(~below & (side == 1), 0.5 * g_lo_new, g_lo_new)
        live = ~done
        lo, hi = np.where(live, lo_new, lo), np.where(live, hi_new, hi)
        g_lo, g_hi = np.where(live, g_lo_new, g_lo), np.where(live, g_hi_new, g_hi)
        side = np.where(live, np.where(below, -1, 1), side)
        done |= (np.abs(g) < 1e-14) | (hi - lo < 1e-13)
        if done.all():
            break
    g_lo, b_lo = gap(lo)
    g_hi, b_hi = gap(hi)
    use_hi = np.abs(g_hi) <= np.abs(g_lo)
    b = np.where(use_hi[:, None], b_hi, b_lo)
    g = np.where(use_hi, g_hi, g_lo)
    mid_norm = norm(space, _as_vectors(space, 0.5 * (a + b)))
    val = 1.0 - mid_norm
    ok = np.isfinite(val) & (np.abs(g) <= _ADMISSIBLE_TOL) & np.all(np.isfinite(a), axis=1)
    return np.where(ok, val, np.inf), a, b


def _smoothness_objective(space: NormSpec, t: float, X: np.ndarray):
    n = X.shape[1] // 2
    a = _normalize(space, X[:, :n])
    b = _normalize(space, X[:, n:])
    va, vb = _as_vectors(space, a), _as_vectors(space, b)
    val = 0.5 * (norm(space, va + t * vb) + norm(space, va - t * vb)) - 1.0
    ok = np.isfinite(val)
    # minimized, so negate
    return np.where(ok, -val, np.inf), a, b


def _coordinate_descent(objective, X: np.ndarray, budget: ModulusBudget):
    """Vectorized compass search; every row evolves independently."""
    X = X.copy()
    n = X.shape[1] // 2
    best, _, _ = objective(X)
    step = np.full(X.shape[0], budget.initial_step)
    for _ in range(budget.sweeps):
        active = step >= budget.min_step
        if not active.any():
            break
        improved = np.zeros(X.shape[0], dtype=bool)
        for c in range(X.shape[1]):
            for sign in (1.0, -1.0):
                trial = X.copy()
                trial[:, c] += sign * step * active
                val, _, _ = objective(trial)
                better = active & (val < best)
                X[better] = trial[better]
                best = np.where(better, val, best)
                improved |= better
        step = np.where(improved | ~active, step, 0.5 * step)
        # keep the raw parameters on a unit scale; the objective only sees directions
        scale_a = np.linalg.norm(X[:, :n], axis=1, keepdims=True)
        scale_b = np.linalg.norm(X[:, n:], axis=1, keepdims=True)
        X[:, :n] /= np.where(scale_a > 0, scale_a, 1.0)
        X[:, n:] /= np.where(scale_b > 0, scale_b, 1.0)
    return X, best


def modulus_convexity(space: NormSpec, eps: float, budget: ModulusBudget | None = None,
                      return_pair: bool = False):
    """Upper estimate of the modulus of convexity ``δ(eps)``, ``0 < eps < 2``."""
    if not (0.0 < eps < 2.0):
        raise ValueError(f"modulus of convexity needs 0 < eps < 2, got {eps}")
    budget = budget or ModulusBudget()
    X0 = _starts(space, budget)

    def objective(X):
        return _convexity_objective(space, eps, X)

    X, best = _coordinate_descent(objective, X0, budget)
    i = int(np.argmin(best))
    if not np.isfinite(best[i]):
        raise RuntimeError("no admissible pair found; increase the search budget")
    value = float(min(max(best[i], 0.0), 1.0))
    if return_pair:
        _, a, b = objective(X[i : i + 1])
        return value, _as_vectors(space, a[0]), _as_vectors(space, b[0])
    return value


def modulus_smoothness(space: NormSpec, t: float, budget: ModulusBudget | None = None,
                       return_pair: bool = False):
    """Lower estimate of the modulus of smoothness ``ρ(t)``, ``t > 0``."""
    if not (t > 0.0) or not np.isfinite(t):
        raise ValueError(f"modulus of smoothness needs t > 0, got {t}")
    budget = budget or ModulusBudget()
    X0 = _starts(space, budget)

    def objective(X):
        return _smoothness_objective(space, t, X)

    X, best = _coordinate_descent(objective, X0, budget)
    i = int(np.argmin(best))
    # triangle inequality: 0 <= rho(t) <= t; clip roundoff
    value = float(min(max(-best[i], 0.0), t))
    if return_pair:
        _, a, b = objective(X[i : i + 1])
        return value, _as_vectors(space, a[0]), _as_vectors(space, b[0])
    return value


def modulus_curve(space: NormSpec, kind: str, abscissae, budget: ModulusBudget | None = None) -> ModulusCurve:
    budget = budget or ModulusBudget()
    xs = np.asarray(abscissae, dtype=float)
    if kind == "convexity":
        est = [modulus_convexity(space, x, budget) for x in xs]
        side = "upper"
    elif kind == "smoothness":
        est = [modulus_smoothness(space, x, budget) for x in xs]
        side = "lower"
    else:
        raise ValueError(f"kind must be 'convexity' or 'smoothness', got {kind!r}")
    return ModulusCurve(xs, np.array(est), side, kind, budget)


def power_type_fit(curve: ModulusCurve, floor: float = 1e-12) -> PowerFit:
    """Least-squares fit of ``log est = log c + q log x`` over the curve."""
    y = curve.cleaned()
    x = np.asarray(curve.abscissae, dtype=float)
    if x.size < 4:
        raise ValueError("power-type fit needs at least 4 points")
    if np.any(y <= floor):
        raise DegenerateModulusError(
            f"degenerate modulus: {int(np.sum(y <= floor))} of {y.size} estimates vanish"
        )
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (intercept + slope * lx)
    return PowerFit(float(slope), float(np.exp(intercept)), float(np.sqrt(np.mean(resid**2))))
