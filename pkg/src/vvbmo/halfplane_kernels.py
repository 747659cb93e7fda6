"""Upper half-plane kernels and the cone operators built from them (line case).

``P_t(x) = t / (π(t² + x²))`` is the Poisson kernel,
``φ_t = t ∂_t P_t = t(x² - t²) / (π(t² + x²)²)`` and, by the semigroup law
``P_s * P_t = P_{s+t}``, ``φ_s * φ_t = k_{s,t}`` with
``k_{s,t}(x) = st ∂²_r P_r(x)|_{r=s+t} = 2st·r(r² - 3x²) / (π(r² + x²)³)``.

Functions on the cone ``Γ = {(z, t): |z| < t}`` with measure ``dz dt / t²``
are discretized on a :class:`ConeGrid` whose ``z``-nodes sit on the same
lattice as the line nodes.  With that alignment the operators

    Ψ(h)(x)      = ∫_Γ ∫ φ_t(x + z - y) h(y, z, t) dy dz dt/t²
    Φ(h)(x,u,s)  = ∫_Γ ∫ k_{s,t}(x + u + z - y) h(y, z, t) dy dz dt/t²

become, for each ``t``-level, one-dimensional lattice convolutions.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, signal

from .normed_spaces import NormSpec, make_space, norm

__all__ = [
    "kernel_eval",
    "kernel_antiderivative",
    "convolve_check",
    "ConvolutionCheck",
    "decay_ratio",
    "decay_sweep",
    "LineGrid",
    "ConeGrid",
    "ConeFunction",
    "apply_Psi",
    "apply_Phi",
    "apply_direct",
    "poisson_smooth",
    "phi_from_psi",
    "op_norm_estimate",
    "default_resolutions",
    "smooth_random_input",
    "NormEstimate",
    "estimates_to_csv",
]


# ---------------------------------------------------------------------------
# closed forms


def _positive(name, v):
    v = np.asarray(v, dtype=float)
    if np.any(~(v > 0)):
        raise ValueError(f"{name} must be positive")
    return v


def kernel_eval(kind: str, t, x, s=None):
    """Closed-form ``P_t(x)``, ``φ_t(x)`` or ``k_{s,t}(x)`` (broadcasting)."""
    t = _positive("t", t)
    x = np.asarray(x, dtype=float)
    if kind == "P":
        out = t / (np.pi * (t * t + x * x))
    elif kind == "phi":
        out = t * (x * x - t * t) / (np.pi * (t * t + x * x) ** 2)
    elif kind == "k":
        if s is None:
            raise ValueError("kind='k' needs s")
        s = _positive("s", s)
        r = s + t
        out = s * t * 2.0 * r * (r * r - 3.0 * x * x) / (np.pi * (r * r + x * x) ** 3)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}; expected 'P', 'phi' or 'k'")
    return float(out) if np.ndim(out) == 0 else out


def kernel_antiderivative(kind: str, t, x, s=None):
    """``∫_0^x K(y) dy`` for the same kernels, used for exact cell averages in ``y``.

    ``P``: ``arctan(x/t)/π``; ``phi``: ``-tx / (π(t² + x²))``;
    ``k``: ``2st·rx / (π(r² + x²)²)`` with ``r = s + t``.
    """
    t = _positive("t", t)
    x = np.asarray(x, dtype=float)
    if kind == "P":
        out = np.arctan2(x, t) / np.pi
    elif kind == "phi":
        out = -t * x / (np.pi * (t * t + x * x))
    elif kind == "k":
        if s is None:
            raise ValueError("kind='k' needs s")
        s = _positive("s", s)
        r = s + t
        out = 2.0 * s * t * r * x / (np.pi * (r * r + x * x) ** 2)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}; expected 'P', 'phi' or 'k'")
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ConvolutionCheck:
    s: float
    t: float
    x: float
    numeric: float
    closed_form: float
    relative_error: float
    quad_error: float
    tail_bound: float
    converged: bool


def convolve_check(s: float, t: float, x: float, window: float = 50.0,
                   epsabs: float = 1e-14, epsrel: float = 1e-12, limit: int = 400) -> ConvolutionCheck:
    """Numerical ``(φ_s * φ_t)(x)`` against the closed form ``k_{s,t}(x)``.

    The window ``|y| <= window·(s+t) + |x|`` is split at the kernel centers
    ``0`` and ``x``; the two tails are integrated on half-lines.  The tail
    bound ``2 min(s/t, t/s) / (π² W)`` comes from ``|φ_a(y)| <= a/(π y²)`` and
    ``|φ_b| <= 1/(π b)``.  ``converged`` is false when the quadrature error
    estimate exceeds ``1e-8`` of the result's scale.
    """
    _positive("s", s), _positive("t", t)

    def integrand(y):
        return kernel_eval("phi", s, y) * kernel_eval("phi", t, x - y)

    W = window * (s + t) + abs(x)
    cuts = sorted({-W, 0.0, float(x), W})
    total, err = 0.0, 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        v, e = integrate.quad(integrand, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
        total += v
        err += e
    for a, b in ((W, np.inf), (-np.inf, -W)):
        v, e = integrate.quad(integrand, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
        total += v
        err += e
    exact = kernel_eval("k", t, x, s=s)
    scale = max(abs(exact), 1e-300)
    rel = abs(total - exact) / scale
    tail = 2.0 * min(s / t, t / s) / (np.pi**2 * W)
    return ConvolutionCheck(s, t, x, total, exact, rel, err, tail, bool(err <= 1e-8 * scale))


def decay_ratio(s, t, x):
    """``|k_{s,t}(x)| (s + t + |x|)³ / (st)``; depends only on ``x/(s+t)``."""
    s = _positive("s", s)
    t = _positive("t", t)
    x = np.asarray(x, dtype=float)
    xi = np.abs(x) / (s + t)
    out = (2.0 / np.pi) * np.abs(1.0 - 3.0 * xi * xi) * (1.0 + xi) ** 3 / (1.0 + xi * xi) ** 3
    return float(out) if np.ndim(out) == 0 else out


def decay_sweep(points_per_octave: int = 2, s_range=(-8, 8), x_range=(-10, 10)) -> dict:
    """Supremum of ``decay_ratio`` over a log grid of ``s, t`` and a signed log grid of ``x``.

    Returns the supremum and where it is attained.  The ratio is evaluated
    from the kernel itself (not the reduced form) so the sweep checks both.
    """
    ppo = int(points_per_octave)
    if ppo < 1:
        raise ValueError("points_per_octave must be >= 1")
    e = np.arange(s_range[0] * ppo, s_range[1] * ppo + 1) / ppo
    st = 2.0**e
    ex = np.arange(x_range[0] * ppo, x_range[1] * ppo + 1) / ppo
    xs = np.concatenate([-(2.0**ex[::-1]), [0.0], 2.0**ex])
    best, arg = -1.0, None
    for s in st:
        S, X = np.meshgrid(st, xs, indexing="ij")
        k = kernel_eval("k", S, X, s=s)
        ratio = np.abs(k) * (s + S + np.abs(X)) ** 3 / (s * S)
        i = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
        if ratio[i] > best:
            best = float(ratio[i])
            arg = (float(s), float(S[i]), float(X[i]))
    return {"sup": best, "argmax": arg, "points_per_octave": ppo, "s_range": list(s_range),
            "x_range": list(x_range), "n_s": int(st.size), "n_x": int(xs.size)}


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class LineGrid:
    """Nodes ``x_i = i·hx`` for ``|x_i| < X_max``."""

    hx: float = 0.25
    X_max: float = 32.0

    @cached_property
    def offset(self) -> int:
        return int(math.ceil(self.X_max / self.hx)) - 1

    @cached_property
    def nodes(self) -> np.ndarray:
        n = self.offset
        return self.hx * np.arange(-n, n + 1)

    def __len__(self) -> int:
        return 2 * self.offset + 1

    def to_json(self) -> dict:
        return {"hx": self.hx, "X_max": self.X_max, "nodes": self.nodes.tolist()}


@dataclass(frozen=True)
class ConeGrid:
    """Truncated cone ``{|z| < t, T_min <= t <= T_max}`` on a lattice of spacing ``hx``.

    ``t``-levels are ``T_max·2^{-i/levels_per_octave}``, each standing for a
    cell of logarithmic width ``ln 2 / levels_per_octave``.  ``z``-nodes are
    the multiples of ``hx`` inside ``(-t, t)`` (always at least ``z = 0``);
    node ``z`` owns ``[z - hx/2, z + hx/2] ∩ (-t, t)``, and the two outermost
    nodes extend to ``±t`` so every level covers ``(-t, t)`` exactly.  A cell's weight is
    its share of ``dz dt / t²``.
    """

    hx: float = 0.25
    T_min: float = 2.0**-6
    T_max: float = 8.0
    levels_per_octave: int = 1

    def __post_init__(self):
        if not (0 < self.T_min <= self.T_max) or self.hx <= 0 or self.levels_per_octave < 1:
            raise ValueError("invalid cone grid parameters")

    @cached_property
    def t_levels(self) -> np.ndarray:
        L = int(round(math.log2(self.T_max / self.T_min) * self.levels_per_octave))
        return self.T_max * 2.0 ** (-np.arange(L + 1) / self.levels_per_octave)

    @cached_property
    def log_width(self) -> float:
        return math.log(2.0) / self.levels_per_octave

    @cached_property
    def _cells(self):
        levels, zidx, weights = [], [], []
        for i, t in enumerate(self.t_levels):
            m = int(math.ceil(t / self.hx)) - 1
            k = np.arange(-m, m + 1)
            lo = np.maximum(k * self.hx - 0.5 * self.hx, -t)
            hi = np.minimum(k * self.hx + 0.5 * self.hx, t)
            # the outermost nodes also own the strip out to the cone edge
            lo[0], hi[-1] = -t, t
            levels.append(np.full(k.size, i))
            zidx.append(k)
            weights.append((hi - lo) * self.log_width / t)
        return np.concatenate(levels), np.concatenate(zidx), np.concatenate(weights)

    @property
    def level(self) -> np.ndarray:
        return self._cells[0]

    @property
    def z_index(self) -> np.ndarray:
        return self._cells[1]

    @property
    def z(self) -> np.ndarray:
        return self.z_index * self.hx

    @property
    def t(self) -> np.ndarray:
        return self.t_levels[self.level]

    @property
    def weights(self) -> np.ndarray:
        return self._cells[2]

    def __len__(self) -> int:
        return self.weights.size

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    def to_json(self) -> dict:
        return {
            "hx": self.hx,
            "T_min": self.T_min,
            "T_max": self.T_max,
            "levels_per_octave": self.levels_per_octave,
            "t": self.t.tolist(),
            "z": self.z.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_json(cls, doc) -> "ConeGrid":
        if isinstance(doc, str):
            doc = json.loads(doc)
        grid = cls(doc["hx"], doc["T_min"], doc["T_max"], doc["levels_per_octave"])
        if "z" in doc and not np.allclose(grid.z, doc["z"]):
            raise ValueError("serialized nodes do not match the grid parameters")
        return grid


@dataclass(frozen=True, eq=False)
class ConeFunction:
    """Values ``h(y_i, cell)`` with shape ``(len(line), len(cone), d)``."""

    values: np.ndarray
    line: LineGrid
    cone: ConeGrid
    space: NormSpec

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 2:
            v = v[..., None]
        if v.shape != (len(self.line), len(self.cone), self.space.d):
            raise ValueError(f"values of shape {v.shape} do not match the grids "
                             f"({len(self.line)}, {len(self.cone)}, {self.space.d})")
        if not math.isclose(self.line.hx, self.cone.hx):
            raise ValueError("line and cone lattices differ")
        object.__setattr__(self, "values", v)

    def a_norm(self, q: float) -> np.ndarray:
        """``(Σ_cells ‖h‖^q w_cell)^{1/q}`` at every line node."""
        return (norm(self.space, self.values) ** q @ self.cone.weights) ** (1.0 / q)

    def lq_norm(self, q: float) -> float:
        """Discrete ``L^q(line; L^q(Γ; B))`` norm."""
        return float((self.line.hx * np.sum(self.a_norm(q) ** q)) ** (1.0 / q))

    def __add__(self, other: "ConeFunction") -> "ConeFunction":
        return ConeFunction(self.values + other.values, self.line, self.cone, self.space)

    def __rmul__(self, lam) -> "ConeFunction":
        return ConeFunction(lam * self.values, self.line, self.cone, self.space)

    def to_json(self) -> dict:
        v = self.values
        return {
            "space": self.space.describe(),
            "line": self.line.to_json(),
            "cone": self.cone.to_json(),
            "values": [v.real.tolist(), v.imag.tolist()] if np.iscomplexobj(v) else v.tolist(),
        }

    @classmethod
    def from_json(cls, doc) -> "ConeFunction":
        if isinstance(doc, str):
            doc = json.loads(doc)
        sp = doc["space"]
        space = make_space(sp["p"], sp["d"], sp.get("transform"))
        line = LineGrid(doc["line"]["hx"], doc["line"]["X_max"])
        cone = ConeGrid.from_json(doc["cone"])
        v = doc["values"]
        arr = np.array(v, dtype=float)
        if arr.ndim == 4:
            arr = arr[0] + 1j * arr[1]
        return cls(arr, line, cone, space)


# ---------------------------------------------------------------------------
# operators


def _level_sums(h: ConeFunction):
    """``H_t[k] = Σ_z w_cell h(y_{k+z}, z, t)`` on the shifted index ``k = j - z``.

    Returns the common ``k`` offset and an array ``(levels, n_k, d)``.
    """
    cone, n = h.cone, len(h.line)
    zi = cone.z_index
    kmin = -int(zi.max())
    n_k = n + 2 * int(zi.max())
    out = np.zeros((cone.t_levels.size, n_k, h.values.shape[2]), dtype=h.values.dtype)
    wv = h.values * cone.weights[None, :, None]
    for c in range(len(cone)):
        # y index j = k + z  ->  k = j - z
        start = -int(zi[c]) - kmin
        out[cone.level[c], start:start + n] += wv[:, c, :]
    return kmin, out


_Y_RULES = ("point", "cell")


def _lattice_kernel(kind, t, s, offsets, hx, y_rule="point"):
    """Weights of ``K(x_i - y_j)`` for lattice offsets ``i - j``.

    ``point`` samples the kernel (``hx·K``); ``cell`` integrates it exactly
    over the source cell ``[y_j - hx/2, y_j + hx/2]``, which stays accurate
    when the kernel is narrower than the lattice.
    """
    if y_rule == "point":
        return kernel_eval(kind, t, offsets * hx, s=s) * hx
    if y_rule == "cell":
        return (kernel_antiderivative(kind, t, (offsets + 0.5) * hx, s=s)
                - kernel_antiderivative(kind, t, (offsets - 0.5) * hx, s=s))
    raise ValueError(f"unknown y_rule {y_rule!r}; expected one of {_Y_RULES}")


def apply_Psi(h: ConeFunction, y_rule: str = "point") -> np.ndarray:
    """``Ψ(h)`` at the line nodes, shape ``(len(line), d)``."""
    line, cone = h.line, h.cone
    n = len(line)
    kmin, H = _level_sums(h)
    n_k = H.shape[1]
    # output index i, source k: offset i - k ranges over [-(kmin + n_k - 1), n - 1 - kmin]
    omin = -(kmin + n_k - 1)
    offsets = np.arange(omin, n - kmin)
    out = np.zeros((n, H.shape[2]), dtype=np.result_type(H.dtype, float))
    for i, t in enumerate(cone.t_levels):
        K = _lattice_kernel("phi", t, None, offsets, line.hx, y_rule)
        full = signal.fftconvolve(K[:, None], H[i], mode="full", axes=0)
        # full[p] pairs with i + 0 = omin + kmin + p
        p0 = -(omin + kmin)
        out += full[p0:p0 + n]
    return out


def apply_Phi(h: ConeFunction, out_cone: ConeGrid | None = None, u_slice: bool = False,
              y_rule: str = "point") -> ConeFunction | np.ndarray:
    """``Φ(h)`` on ``line × out_cone``; with ``u_slice`` only ``u = 0`` (shape ``(len(line), n_s, d)``).

    ``out_cone`` defaults to the input cone; its ``t``-levels play the role
    of ``s`` and its ``z``-nodes the role of ``u``.
    """
    line, cone = h.line, h.cone
    out_cone = out_cone or cone
    if not math.isclose(out_cone.hx, line.hx):
        raise ValueError("output cone lattice differs from the line lattice")
    n = len(line)
    kmin, H = _level_sums(h)
    n_k = H.shape[1]
    umax = 0 if u_slice else int(np.abs(out_cone.z_index).max())
    omin = -umax - (kmin + n_k - 1)
    offsets = np.arange(omin, n - 1 + umax - kmin + 1)
    p0 = -(omin + kmin)
    dtype = np.result_type(H.dtype, float)
    d = H.shape[2]
    svals = out_cone.t_levels
    if u_slice:
        out = np.zeros((n, svals.size, d), dtype=dtype)
    else:
        out = np.zeros((n, len(out_cone), d), dtype=dtype)
    for si, s in enumerate(svals):
        acc = None
        for i, t in enumerate(cone.t_levels):
            K = _lattice_kernel("k", t, s, offsets, line.hx, y_rule)
            full = signal.fftconvolve(K[:, None], H[i], mode="full", axes=0)
            acc = full if acc is None else acc + full
        if u_slice:
            out[:, si] = acc[p0:p0 + n]
        else:
            cells = np.flatnonzero(out_cone.level == si)
            for c in cells:
                u = int(out_cone.z_index[c])
                out[:, c] = acc[p0 + u:p0 + u + n]
    if u_slice:
        return out
    return ConeFunction(out, line, out_cone, h.space)


def apply_direct(h: ConeFunction, kind: str, s: float | None = None, u: float = 0.0,
                 y_rule: str = "point") -> np.ndarray:
    """Brute-force ``Σ_{y, cell} hx w_cell K(x + u + z - y) h`` at every line node.

    ``kind="phi"`` gives ``Ψ(h)``; ``kind="k"`` with ``s`` gives the ``(s, u)``
    slice of ``Φ(h)``.  Quadratic cost; intended as a test oracle.
    """
    line, cone = h.line, h.cone
    x = line.nodes
    out = np.zeros((len(line), h.values.shape[2]), dtype=np.result_type(h.values.dtype, float))
    for c in range(len(cone)):
        arg = x[:, None] + u + cone.z[c] - x[None, :]
        if y_rule == "point":
            K = kernel_eval(kind, cone.t[c], arg, s=s) * line.hx
        else:
            half = 0.5 * line.hx
            K = (kernel_antiderivative(kind, cone.t[c], arg + half, s=s)
                 - kernel_antiderivative(kind, cone.t[c], arg - half, s=s))
        out += (K * cone.weights[c]) @ h.values[:, c, :]
    return out


def poisson_smooth(values: np.ndarray, line: LineGrid, s: float, kind: str = "P") -> np.ndarray:
    """Lattice convolution ``hx Σ_y K_s(x - y) v(y)`` of a line function with ``P_s`` or ``φ_s``."""
    n = len(line)
    offsets = np.arange(-(n - 1), n)
    K = _lattice_kernel(kind, s, None, offsets, line.hx)
    full = signal.fftconvolve(K[:, None], np.asarray(values).reshape(n, -1), mode="full", axes=0)
    return full[n - 1:2 * n - 1]


def phi_from_psi(h: ConeFunction, s: float, rel_step: float = 1e-3) -> np.ndarray:
    """``s ∂_s (P_s * Ψ(h))`` by a central difference in ``s``.

    Since ``s ∂_s P_s = φ_s`` and ``φ_s * φ_t = k_{s,t}``, this approximates
    the ``u = 0`` slice of ``Φ(h)`` at ``s``, up to lattice and truncation
    errors of the line.
    """
    psi = apply_Psi(h)
    hi = poisson_smooth(psi, h.line, s * (1 + rel_step))
    lo = poisson_smooth(psi, h.line, s * (1 - rel_step))
    return (hi - lo) / (2.0 * rel_step)


# ---------------------------------------------------------------------------
# operator norm probe


@dataclass(frozen=True)
class NormEstimate:
    resolution: int
    q: float
    estimate: float
    trials: int
    seed: int
    hx: float
    levels_per_octave: int
    cells: int


def smooth_random_input(line: LineGrid, cone: ConeGrid, rng: np.random.Generator, bumps: int = 4) -> np.ndarray:
    """Sum of Gaussian bumps in ``(y, z/t, log t)`` with random centers, widths and signs.

    The bumps are functions on the continuous cone, so inputs drawn with the
    same generator state at different resolutions sample the same function.
    """
    y = line.nodes[:, None]
    zt = (cone.z / cone.t)[None, :]
    lt = np.log2(cone.t)[None, :]
    lo, hi = math.log2(cone.T_min), math.log2(cone.T_max)
    out = np.zeros((len(line), len(cone)))
    for _ in range(bumps):
        amp = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
        cy = rng.uniform(-0.5, 0.5) * line.X_max
        wy = rng.uniform(1.0, 4.0)
        cz = rng.uniform(-0.5, 0.5)
        clt = rng.uniform(lo, hi)
        wlt = rng.uniform(0.5, 2.0)
        out += amp * np.exp(-((y - cy) / wy) ** 2 - ((zt - cz) / 0.4) ** 2 - ((lt - clt) / wlt) ** 2)
    return out


def default_resolutions(levels: int = 3, hx0: float = 0.5) -> list[tuple[float, int]]:
    """``(hx, levels_per_octave)`` pairs, halving ``hx`` and doubling the ``t`` density."""
    return [(hx0 / 2**k, 2**k) for k in range(levels)]


def op_norm_estimate(q: float, resolutions=None, trials: int = 32, seed: int = 0,
                     X_max: float = 32.0, T_min: float = 2.0**-6, T_max: float = 8.0,
                     single_cell: tuple[int, int] | None = None, y_rule: str = "cell") -> list[NormEstimate]:
    """Largest ``‖Φh‖_q / ‖h‖_q`` over seeded random inputs, per resolution.

    Norms are the discrete ``L^q(line; L^q(Γ))`` norms, with ``Φh`` evaluated
    on the input's own line and cone.  Each trial draws a smooth input from a
    generator seeded by ``(seed, trial)``, so trial ``k`` probes the same
    continuous function at every resolution.  ``single_cell=(i, c)`` replaces
    the random inputs by the indicator of line node ``i`` and cell ``c``.
    """
    if not (1.0 < q < np.inf):
        raise ValueError(f"q must lie in (1, ∞), got {q}")
    resolutions = resolutions or default_resolutions()
    space = make_space(2, 1)
    out = []
    for level, (hx, lpo) in enumerate(resolutions):
        line = LineGrid(hx, X_max)
        cone = ConeGrid(hx, T_min, T_max, lpo)
        best = 0.0
        n_trials = 1 if single_cell is not None else trials
        for k in range(n_trials):
            if single_cell is not None:
                v = np.zeros((len(line), len(cone)))
                v[single_cell] = 1.0
            else:
                rng = np.random.default_rng([seed, k])
                v = smooth_random_input(line, cone, rng)
            h = ConeFunction(v[..., None], line, cone, space)
            ratio = apply_Phi(h, y_rule=y_rule).lq_norm(q) / h.lq_norm(q)
            best = max(best, ratio)
        out.append(NormEstimate(level, q, best, n_trials, seed, hx, lpo, len(cone)))
    return out


def estimates_to_csv(rows: list[NormEstimate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["resolution", "q", "estimate", "trials", "seed", "hx", "levels_per_octave", "cells"])
    for r in rows:
        w.writerow([r.resolution, repr(float(r.q)), "%.17g" % r.estimate, r.trials, r.seed,
                    repr(float(r.hx)), r.levels_per_octave, r.cells])
    return buf.getvalue()
