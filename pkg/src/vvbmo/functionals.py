"""BMO, square-function and Carleson-type functionals of disc harmonic extensions.

All functionals take a :class:`~vvbmo.disc_harmonics.TrigPolynomial` and act
through its harmonic extension.  Gradient norms use the sum convention
``‖∂_x f‖ + ‖∂_y f‖`` unless stated otherwise.

Two grids organize the suprema:

* :class:`PoissonGrid` samples pole locations ``z₀ = (1-2^-j) e^{2πim/M_j}``
  with ``M_j = max(8, 2^{j+3})`` for ``j = 0..depth``.
* :class:`ArcGrid` samples dyadic-length arcs: at depth ``j`` the arcs have
  normalized length ``2^-j`` and centers spaced ``2^-j / centers_per_level``.

Disc integrals are computed one radial node at a time.  At each radius the
integrand is sampled on an equispaced circle (exact FFT evaluation), and the
Poisson-weighted integrals for a whole ring of poles are one circular
correlation against the sampled kernel, whose DFT has the closed form
``c (s^n + s^{M-n}) / (1 - s^M)``.  Tent integrals use the fact that the
dyadic radial panels end exactly at the tent floors ``1 - 2^-j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .disc_harmonics import GRADIENT_CONVENTIONS, TrigPolynomial, eval_gradient, gradient_density, on_circle
from .normed_spaces import NormSpec, norm
from .quadrature import _gauss_legendre, radial_composite

__all__ = [
    "ArcGrid",
    "PoissonGrid",
    "DiscResolution",
    "CarlesonReport",
    "bmo_arc",
    "bmo_poisson_q",
    "g_function",
    "g_Lp",
    "lusin_area",
    "carleson_poisson",
    "carleson_tent",
    "c_q_pointwise",
    "poisson_weighted_sup",
    "default_depth",
]

_DENSITIES = ("gradient", "radial", "value")
_CONVENTIONS = GRADIENT_CONVENTIONS
_WEIGHTS = ("1-|z|^2", "1-|z|")
_ANALYTIC_FACTOR = {"sum": 2.0, "polar": 2.0, "euclidean": math.sqrt(2.0)}
# elements per chunk in the direct Poisson oscillation sums
_CHUNK = 1 << 22


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def default_depth(f: TrigPolynomial) -> int:
    """Grid depth that resolves the polynomial's smallest oscillation scale."""
    return max(1, math.ceil(math.log2(max(f.degree, 1)))) + 2


@dataclass(frozen=True)
class ArcGrid:
    max_depth: int
    centers_per_level: int = 4

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError(f"arc grid depth must be >= 1, got {self.max_depth}")
        c = self.centers_per_level
        if c < 1 or c & (c - 1):
            raise ValueError(f"centers_per_level must be a power of two, got {c}")

    def n_centers(self, j: int) -> int:
        return self.centers_per_level * 2**j

    def centers(self, j: int) -> np.ndarray:
        """Arc centers at depth ``j`` as angles in ``[0, 2π)``."""
        n = self.n_centers(j)
        return 2.0 * np.pi * np.arange(n) / n

    def min_nodes(self, degree: int) -> int:
        """Circle resolution: >= 8 intervals on the smallest arc, aligned with every center."""
        return _next_pow2(max(8 * 2**self.max_depth, self.n_centers(self.max_depth), 4 * degree + 4))

    def to_json(self) -> dict:
        return {"max_depth": self.max_depth, "centers_per_level": self.centers_per_level}


@dataclass(frozen=True)
class PoissonGrid:
    depth: int

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError(f"pole grid depth must be >= 0, got {self.depth}")

    def rings(self) -> list[tuple[int, float, int]]:
        """``(j, ρ_j, M_j)`` for every ring; ring 0 is the single point ``z₀ = 0``."""
        out = [(0, 0.0, 1)]
        for j in range(1, self.depth + 1):
            out.append((j, 1.0 - 2.0**-j, max(8, 2 ** (j + 3))))
        return out

    def points(self) -> np.ndarray:
        pts = []
        for _, rho, m in self.rings():
            pts.append(rho * np.exp(2j * np.pi * np.arange(m) / m))
        return np.concatenate(pts)

    def to_json(self) -> dict:
        return {"depth": self.depth}


@dataclass(frozen=True)
class DiscResolution:
    """Angular nodes ``M`` and dyadic radial panels ``J`` of Gauss order ``order``."""

    M: int
    J: int
    order: int = 8

    def coarser(self) -> "DiscResolution":
        return DiscResolution(max(8, self.M // 2), max(1, self.J - 2), self.order)

    def finer(self) -> "DiscResolution":
        return DiscResolution(2 * self.M, self.J + 2, self.order)

    def to_json(self) -> dict:
        return {"M": self.M, "J": self.J, "order": self.order}


@dataclass
class CarlesonReport:
    """Supremum of a Carleson-type functional over a finite grid.

    ``value`` is the supremum of the disc integral itself (homogeneous of
    degree ``q`` in ``f``); ``norm`` is its ``q``-th root.
    """

    functional: str
    q: float
    value: float
    argmax: object
    grid: dict
    error_estimate: float = float("nan")
    values: np.ndarray | None = field(default=None, repr=False)

    @property
    def norm(self) -> float:
        return self.value ** (1.0 / self.q)

    def to_json(self) -> dict:
        arg = self.argmax
        if isinstance(arg, complex):
            arg = {"re": arg.real, "im": arg.imag}
        return {
            "functional": self.functional,
            "q": self.q,
            "value": self.value,
            "norm": self.norm,
            "argmax": arg,
            "grid": self.grid,
            "error_estimate": self.error_estimate,
        }


# ---------------------------------------------------------------------------
# circle sampling helpers


def _circle_density(space, f, r, M, kind, convention="sum"):
    if kind == "value":
        return norm(space, on_circle(f, r, M, values=True, gradient=False).values)
    s = on_circle(f, r, M, values=False, gradient=True, radial=kind == "radial")
    if kind == "radial":
        return norm(space, s.dr)
    if f.is_analytic and convention in _ANALYTIC_FACTOR:
        # ∂_y f = i ∂_x f, and every convention is a multiple of ‖f'‖
        return _ANALYTIC_FACTOR[convention] * norm(space, s.dx)
    theta = 2.0 * np.pi * np.arange(M) / M
    return gradient_density(space, s.dx, s.dy, theta, convention)


def _point_density(space, f, z, mode, convention):
    g = eval_gradient(f, z)
    if mode == "radial":
        return norm(space, g.dr)
    if mode != "full":
        raise ValueError(f"mode must be 'full' or 'radial', got {mode!r}")
    return gradient_density(space, g.dx, g.dy, np.angle(z), convention)


def _radial_weight(r: np.ndarray, q: float, weight: str) -> np.ndarray:
    if weight == "1-|z|^2":
        return (1.0 - r * r) ** (q - 1.0)
    if weight == "1-|z|":
        return (1.0 - r) ** (q - 1.0)
    raise ValueError(f"unknown weight {weight!r}; expected one of {_WEIGHTS}")


def _check_q(q: float, allow_one: bool = False):
    if not (q >= 1.0 if allow_one else q > 1.0) or not np.isfinite(q):
        bound = ">= 1" if allow_one else "> 1"
        raise ValueError(f"exponent q must be {bound}, got {q}")


def _is_zero(f: TrigPolynomial, ignore_mean: bool = True) -> bool:
    c = f.coeffs.copy()
    if ignore_mean:
        c[f.degree] = 0
    return not np.any(c)


# ---------------------------------------------------------------------------
# BMO norms


def bmo_arc(space: NormSpec, f: TrigPolynomial, grid: ArcGrid, M: int | None = None,
            return_argmax: bool = False):
    """Largest mean oscillation ``|I|^-1 ∫_I ‖f - f_I‖ dm`` over the grid arcs.

    The full circle is included as the depth-0 arc.  Arc integrals use the
    trapezoid rule on the global equispaced nodes that fall in the arc.
    """
    M = M or grid.min_nodes(f.degree)
    if M % grid.n_centers(grid.max_depth) or M < 8 * 2**grid.max_depth:
        raise ValueError(f"M={M} is not aligned with the arc grid")
    F = on_circle(f, 1.0, M, values=True, gradient=False).values
    mean = F.mean(axis=0)
    best = float(np.mean(norm(space, F - mean)))
    arg = (0, 0.0)
    for j in range(1, grid.max_depth + 1):
        L = M >> j
        nc = grid.n_centers(j)
        start = (np.arange(nc) * (M // nc) - L // 2) % M
        idx = (start[:, None] + np.arange(L + 1)[None, :]) % M
        w = np.ones(L + 1)
        w[0] = w[-1] = 0.5
        w /= L
        seg = F[idx]
        local = np.einsum("l,ald->ad", w, seg)
        osc = norm(space, seg - local[:, None, :]) @ w
        a = int(np.argmax(osc))
        if osc[a] > best:
            best = float(osc[a])
            arg = (j, float(grid.centers(j)[a]))
    return (best, arg) if return_argmax else best


def bmo_poisson_q(space: NormSpec, f: TrigPolynomial, q: float, grid: PoissonGrid | None = None,
                  min_nodes: int = 0, return_report: bool = False):
    """``sup_{z₀} (∫ ‖f - f(z₀)‖^q P_{z₀} dm)^{1/q}`` over a pole grid."""
    _check_q(q, allow_one=True)
    grid = grid or PoissonGrid(default_depth(f))
    N = f.degree
    vals = []
    pts = []
    for j, rho, Mj in grid.rings():
        Mb = _next_pow2(max(2 * N + 1, 2 ** (j + 4), min_nodes))
        F = on_circle(f, 1.0, Mb, values=True, gradient=False).values
        theta = 2.0 * np.pi * np.arange(Mb) / Mb
        if Mj == 1:
            centre = f.coefficient(0)[None, :]
            phis = np.zeros(1)
        else:
            centre = on_circle(f, rho, Mj, values=True, gradient=False).values
            phis = 2.0 * np.pi * np.arange(Mj) / Mj
        chunk = max(1, _CHUNK // (Mb * f.d))
        ring = np.empty(phis.size)
        for lo in range(0, phis.size, chunk):
            hi = min(phis.size, lo + chunk)
            P = (1.0 - rho * rho) / np.abs(1.0 - rho * np.exp(1j * (theta[None, :] - phis[lo:hi, None]))) ** 2
            dev = norm(space, F[None, :, :] - centre[lo:hi, None, :])
            ring[lo:hi] = np.mean(dev**q * P, axis=1)
        vals.append(ring)
        pts.append(rho * np.exp(1j * phis))
    vals = np.concatenate(vals) ** (1.0 / q)
    pts = np.concatenate(pts)
    a = int(np.argmax(vals))
    value = float(vals[a])
    if not return_report:
        return value
    return CarlesonReport("bmo_poisson_q", q, value**q, complex(pts[a]), grid.to_json(), values=vals)


# ---------------------------------------------------------------------------
# square functions


def g_function(space: NormSpec, f: TrigPolynomial, q: float, theta, mode: str = "full",
               J: int = 30, order: int = 8, convention: str = "sum"):
    """``(∫_0^1 (1-r)^{q-1} ‖∇f(re^{iθ})‖^q dr)^{1/q}`` (``mode="radial"`` uses ``‖∂_r f‖``)."""
    _check_q(q)
    theta = np.asarray(theta, dtype=float)
    rule = radial_composite(J, order)
    z = rule.nodes[:, None] * np.exp(1j * theta.reshape(-1))[None, :]
    dens = _point_density(space, f, z, mode, convention)
    w = rule.weights * (1.0 - rule.nodes) ** (q - 1.0)
    out = (w @ dens**q) ** (1.0 / q)
    return float(out[0]) if theta.ndim == 0 else out.reshape(theta.shape)


def g_profile(space: NormSpec, f: TrigPolynomial, q: float, M: int, mode: str = "full",
              J: int = 30, order: int = 8, convention: str = "sum") -> np.ndarray:
    """``g_function`` at the ``M`` equispaced angles ``2πl/M``."""
    _check_q(q)
    if mode not in ("full", "radial"):
        raise ValueError(f"mode must be 'full' or 'radial', got {mode!r}")
    kind = "gradient" if mode == "full" else "radial"
    rule = radial_composite(J, order)
    acc = np.zeros(M)
    for r, w in zip(rule.nodes, rule.weights):
        acc += w * (1.0 - r) ** (q - 1.0) * _circle_density(space, f, r, M, kind, convention) ** q
    return acc ** (1.0 / q)


def g_Lp(space: NormSpec, f: TrigPolynomial, q: float, p: float, M: int | None = None,
         mode: str = "full", J: int = 30, order: int = 8, convention: str = "sum") -> float:
    """``‖G_q f‖_{L^p(dm)}`` by the trapezoid rule on ``M`` angles."""
    if not (1.0 < p < np.inf):
        raise ValueError(f"p must lie in (1, ∞), got {p}")
    M = M or _next_pow2(max(64, 4 * f.degree + 4))
    G = g_profile(space, f, q, M, mode, J, order, convention)
    return float(np.mean(G**p) ** (1.0 / p))


def _stolz_halfwidth(r: np.ndarray, alpha: float) -> np.ndarray:
    """Half-angle of the Stolz region ``|z - 1| <= α(1-|z|)`` on the circle ``|z| = r``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (1.0 + r * r - (alpha * (1.0 - r)) ** 2) / (2.0 * r)
    c = np.where(r == 0, -np.inf if alpha > 1 else np.inf, c)
    out = np.where(c <= -1.0, np.pi, np.arccos(np.clip(c, -1.0, 1.0)))
    return np.where(c >= 1.0, 0.0, out)


def lusin_area(space: NormSpec, f: TrigPolynomial, q: float, theta: float, aperture: float = 2.0,
               mode: str = "full", J: int = 24, order: int = 8, convention: str = "sum") -> float:
    """``(∫_{Γ_α(θ)} ((1-|z|)‖∇f‖)^q dA / (1-|z|)^2)^{1/q}`` over a Stolz region.

    The region ``{|z - e^{iθ}| <= α(1-|z|)}`` is empty for ``α <= 1``.  Each
    radial node carries a composite Gauss–Legendre rule over its exact
    angular interval.
    """
    _check_q(q)
    if not aperture > 0:
        raise ValueError(f"aperture must be positive, got {aperture}")
    if mode not in ("full", "radial"):
        raise ValueError(f"mode must be 'full' or 'radial', got {mode!r}")
    if aperture <= 1.0 or _is_zero(f):
        return 0.0
    rule = radial_composite(J, order)
    r = rule.nodes
    half = _stolz_halfwidth(r, aperture)
    keep = half > 0
    r, wr, half = r[keep], rule.weights[keep], half[keep]
    x, w = _gauss_legendre(order)
    panels = max(2, math.ceil(2 * np.pi * (f.degree + 1) / (np.pi * order)) + 1)
    u = ((np.arange(panels)[:, None] + 0.5 * (x[None, :] + 1.0)) / panels).ravel()
    wu = np.tile(w / (2.0 * panels), panels)
    # angles within [θ - h, θ + h], weights for dφ
    phi = theta + half[:, None] * (2.0 * u[None, :] - 1.0)
    wphi = 2.0 * half[:, None] * wu[None, :]
    dens = _point_density(space, f, r[:, None] * np.exp(1j * phi), mode, convention)
    radial = wr * r * (1.0 - r) ** (q - 2.0)
    return float((radial @ np.sum(wphi * dens**q, axis=1)) ** (1.0 / q))


# ---------------------------------------------------------------------------
# Carleson functionals


def _default_resolution(f: TrigPolynomial, depth: int) -> DiscResolution:
    N = max(f.degree, 1)
    M = _next_pow2(max(2 ** (depth + 4), 2 * N + 1))
    J = max(depth, math.ceil(math.log2(N))) + 14
    return DiscResolution(M, J, 8)


def _kernel_dft(rho: float, r: float, M: int, n: np.ndarray) -> np.ndarray:
    """DFT (length-M sum) of ``P_{ρ}(r e^{iθ_l})`` sampled at ``θ_l = 2πl/M``, frequencies ``n``."""
    s = rho * r
    c = (1.0 - rho * rho) / (1.0 - s * s)
    return M * c * (np.power(s, n) + np.power(s, M - n)) / (1.0 - s**M)


def _poisson_pass(space, f, q, grid: PoissonGrid, res: DiscResolution, density, weight, convention):
    """Weighted Poisson integrals at every grid pole, ring by ring."""
    M = res.M
    rings = grid.rings()
    if any(M % m for _, _, m in rings):
        raise ValueError(f"M={M} is not divisible by every ring size")
    n = np.arange(M // 2 + 1)
    acc = np.zeros((len(rings), n.size), dtype=complex)
    rule = radial_composite(res.J, res.order)
    for r, w in zip(rule.nodes, rule.weights):
        G = _circle_density(space, f, r, M, density, convention) ** q
        c = 2.0 * np.pi * w * r * _radial_weight(r, q, weight) / M
        Gh = np.fft.rfft(G) * c
        for i, (_, rho, _) in enumerate(rings):
            acc[i] += Gh * _kernel_dft(rho, r, M, n)
    vals, pts = [], []
    for i, (_, rho, m) in enumerate(rings):
        V = np.fft.irfft(acc[i], n=M)
        vals.append(V[:: M // m])
        pts.append(rho * np.exp(2j * np.pi * np.arange(m) / m))
    return np.concatenate(vals), np.concatenate(pts)


def poisson_weighted_sup(space: NormSpec, f: TrigPolynomial, q: float, grid: PoissonGrid | None = None,
                         resolution: DiscResolution | None = None, density: str = "gradient",
                         weight: str = "1-|z|^2", estimate_error: bool = True,
                         name: str = "poisson_weighted_sup", convention: str = "sum") -> CarlesonReport:
    """``sup_{z₀} ∫_D w(|z|)^{q-1} D(z)^q P_{z₀}(z) dA(z)`` over a pole grid.

    ``density`` selects ``D``: the sum-convention gradient norm, the radial
    derivative norm, or the value norm.  ``weight`` is ``1-|z|^2`` or
    ``1-|z|``.  The error estimate is the change in the supremum against a
    coarser companion resolution.
    """
    _check_q(q)
    if density not in _DENSITIES:
        raise ValueError(f"unknown density {density!r}; expected one of {_DENSITIES}")
    _radial_weight(np.zeros(1), q, weight)
    grid = grid or PoissonGrid(default_depth(f))
    res = resolution or _default_resolution(f, grid.depth)
    meta = {"poles": grid.to_json(), "disc": res.to_json(), "density": density, "weight": weight,
            "convention": convention}
    if _is_zero(f, ignore_mean=density != "value"):
        pts = grid.points()
        return CarlesonReport(name, q, 0.0, 0j, meta, 0.0, values=np.zeros(pts.size))
    vals, pts = _poisson_pass(space, f, q, grid, res, density, weight, convention)
    vals = np.maximum(vals, 0.0)
    a = int(np.argmax(vals))
    err = float("nan")
    if estimate_error:
        cvals, _ = _poisson_pass(space, f, q, grid, res.coarser(), density, weight, convention)
        err = float(abs(vals[a] - cvals.max()))
    return CarlesonReport(name, q, float(vals[a]), complex(pts[a]), meta, err, values=vals)


def carleson_poisson(space: NormSpec, f: TrigPolynomial, q: float, grid: PoissonGrid | None = None,
                     resolution: DiscResolution | None = None, estimate_error: bool = True,
                     convention: str = "sum") -> CarlesonReport:
    """``sup_{z₀} ∫_D (1-|z|^2)^{q-1} ‖∇f‖^q P_{z₀} dA`` over a pole grid."""
    return poisson_weighted_sup(space, f, q, grid, resolution, "gradient", "1-|z|^2",
                                estimate_error, name="carleson_poisson", convention=convention)


def _tent_resolution(f: TrigPolynomial, grid: ArcGrid) -> DiscResolution:
    N = max(f.degree, 1)
    J = max(grid.max_depth, math.ceil(math.log2(N))) + 14
    return DiscResolution(grid.min_nodes(f.degree), J, 8)


def _tent_levels(space, f, q, grid: ArcGrid, res: DiscResolution, convention) -> np.ndarray:
    """``H_j(θ_l) = Σ_{r_i >= 1-2^-j} c_i D(r_i e^{iθ_l})``: weighted radial sums above each tent floor."""
    M, D = res.M, grid.max_depth
    if res.J < D:
        raise ValueError("radial panels must reach the deepest tent floor")
    rule = radial_composite(res.J, res.order)
    panel = np.repeat(np.arange(res.J), res.order)
    H = np.zeros((D + 1, M))
    for r, w, p in zip(rule.nodes, rule.weights, panel):
        G = _circle_density(space, f, r, M, "gradient", convention) ** q
        H[min(p, D)] += w * r * (1.0 - r) ** (q - 1.0) * G
    # suffix sums: level j collects every panel at or beyond j
    return np.cumsum(H[::-1], axis=0)[::-1]


def _tent_averages(H: np.ndarray, grid: ArcGrid) -> list[np.ndarray]:
    """Normalized tent mass ``|I|^-1 ∫_{T(I)}`` for every grid arc, per depth."""
    D, M = H.shape[0] - 1, H.shape[1]
    out = [np.array([2.0 * np.pi * H[0].mean()])]
    for j in range(1, D + 1):
        L = M >> j
        nc = grid.n_centers(j)
        start = (np.arange(nc) * (M // nc) - L // 2) % M
        h = np.concatenate([H[j], H[j]])
        cs = np.concatenate([[0.0], np.cumsum(h)])
        total = cs[start + L + 1] - cs[start] - 0.5 * (h[start] + h[start + L])
        out.append(total * (2.0 * np.pi / M) * 2.0**j)
    return out


def _tent_report(space, f, q, grid, res, convention):
    H = _tent_levels(space, f, q, grid, res, convention)
    return _tent_averages(H, grid)


def carleson_tent(space: NormSpec, f: TrigPolynomial, q: float, grid: ArcGrid,
                  resolution: DiscResolution | None = None, estimate_error: bool = True,
                  convention: str = "sum") -> CarlesonReport:
    """``sup_I |I|^-1 ∫_{T(I)} (1-|z|)^{q-1} ‖∇f‖^q dA`` over dyadic-length grid arcs.

    The tent over an arc ``I`` of normalized length ``|I|`` is
    ``{r e^{iθ}: e^{iθ} ∈ I, 1 - r <= |I|}``; depth 0 is the whole disc.
    """
    _check_q(q)
    res = resolution or _tent_resolution(f, grid)
    meta = {"arcs": grid.to_json(), "disc": res.to_json(), "convention": convention}
    if _is_zero(f):
        return CarlesonReport("carleson_tent", q, 0.0, (0, 0.0), meta, 0.0)
    avgs = _tent_report(space, f, q, grid, res, convention)
    best, arg = -1.0, (0, 0.0)
    for j, a in enumerate(avgs):
        k = int(np.argmax(a))
        if a[k] > best:
            best = float(a[k])
            arg = (j, 0.0 if j == 0 else float(grid.centers(j)[k]))
    err = float("nan")
    if estimate_error:
        coarse = _tent_report(space, f, q, grid, DiscResolution(max(grid.min_nodes(0), res.M // 2),
                                                                max(grid.max_depth, res.J - 2), res.order), convention)
        err = float(abs(best - max(a.max() for a in coarse)))
    return CarlesonReport("carleson_tent", q, best, arg, meta, err)


def c_q_pointwise(space: NormSpec, f: TrigPolynomial, q: float, theta, grid: ArcGrid,
                  resolution: DiscResolution | None = None, convention: str = "sum"):
    """Rooted tent average maximized over the grid arcs that contain ``e^{iθ}``."""
    _check_q(q)
    theta = np.asarray(theta, dtype=float)
    flat = theta.reshape(-1)
    if _is_zero(f):
        out = np.zeros(flat.size)
    else:
        res = resolution or _tent_resolution(f, grid)
        avgs = _tent_report(space, f, q, grid, res, convention)
        out = np.full(flat.size, avgs[0][0])
        for j in range(1, grid.max_depth + 1):
            centers = grid.centers(j)
            dist = np.abs(np.angle(np.exp(1j * (flat[:, None] - centers[None, :]))))
            inside = dist <= np.pi * 2.0**-j * (1.0 + 1e-12)
            cand = np.where(inside, avgs[j][None, :], -np.inf).max(axis=1)
            out = np.maximum(out, cand)
        out = np.maximum(out, 0.0) ** (1.0 / q)
    return float(out[0]) if theta.ndim == 0 else out.reshape(theta.shape)
