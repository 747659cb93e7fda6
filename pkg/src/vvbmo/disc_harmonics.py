"""Vector-valued trigonometric polynomials and their harmonic extensions.

A polynomial ``f(e^{iθ}) = Σ_{|k|<=N} a_k e^{ikθ}`` with ``a_k ∈ ℂ^d`` extends
to the disc as ``Σ a_k r^{|k|} e^{ikθ}``; the analytic part is ``Σ_{k>=0} a_k z^k``
and the conjugate-analytic part ``Σ_{k<0} a_k z̄^{|k|}``.  All evaluations and
gradients are exact series sums.  ``on_circle`` evaluates on a whole circle
of equispaced angles with FFTs and agrees with the pointwise routines to
rounding.
"""

from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .normed_spaces import NormSpec, make_space, norm

__all__ = [
    "TrigPolynomial",
    "GradientValue",
    "CircleSamples",
    "eval_poisson_extension",
    "eval_gradient",
    "gradient_norm",
    "gradient_density",
    "GRADIENT_CONVENTIONS",
    "poisson_kernel_disc",
    "mobius_map",
    "compose_mobius_gradient",
    "random_polynomial",
    "lacunary_polynomial",
    "on_circle",
    "boundary_coefficients",
]


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """Coefficients ``coeffs[k + N] = a_k`` for ``k = -N..N``, shape ``(2N+1, d)``."""

    coeffs: np.ndarray
    space: NormSpec
    seed: int | None = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] % 2 != 1:
            raise ValueError(f"coefficient array must be (2N+1, d), got {c.shape}")
        if c.shape[1] != self.space.d:
            raise ValueError(f"coefficients have {c.shape[1]} coordinates, space has d={self.space.d}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def d(self) -> int:
        return self.coeffs.shape[1]

    def coefficient(self, k: int) -> np.ndarray:
        N = self.degree
        if abs(k) > N:
            return np.zeros(self.d, dtype=complex)
        return self.coeffs[k + N]

    @property
    def analytic(self) -> np.ndarray:
        """``a_0, a_1, ..., a_N``."""
        return self.coeffs[self.degree :]

    @property
    def antianalytic(self) -> np.ndarray:
        """``a_{-1}, a_{-2}, ..., a_{-N}``."""
        N = self.degree
        return self.coeffs[:N][::-1]

    @property
    def is_analytic(self) -> bool:
        return not np.any(self.antianalytic)

    def scaled(self, lam) -> "TrigPolynomial":
        return TrigPolynomial(self.coeffs * lam, self.space, self.seed)

    def rotated(self, alpha: float) -> "TrigPolynomial":
        """``f(e^{iα} ·)``: multiplies ``a_k`` by ``e^{ikα}``."""
        k = np.arange(-self.degree, self.degree + 1)
        return TrigPolynomial(self.coeffs * np.exp(1j * k * alpha)[:, None], self.space, self.seed)

    def to_json(self) -> dict:
        return {
            "space": self.space.describe(),
            "degree": self.degree,
            "coefficients": [[[float(z.real), float(z.imag)] for z in row] for row in self.coeffs],
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc) -> "TrigPolynomial":
        if isinstance(doc, str):
            doc = json.loads(doc)
        sp = doc["space"]
        space = make_space(sp["p"], sp["d"], sp.get("transform"))
        arr = np.array(doc["coefficients"], dtype=float)
        coeffs = arr[..., 0] + 1j * arr[..., 1]
        if coeffs.shape[0] != 2 * doc["degree"] + 1:
            raise ValueError("degree does not match the coefficient count")
        return cls(coeffs, space, doc.get("seed"))


class GradientValue(NamedTuple):
    dx: np.ndarray
    dy: np.ndarray
    dr: np.ndarray | None = None


def _powers(z: np.ndarray, n: int) -> np.ndarray:
    """``z^0 .. z^{n-1}`` along a new last axis, via polar form."""
    r = np.abs(z)[..., None]
    th = np.angle(z)[..., None]
    k = np.arange(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        rk = np.where(k == 0, 1.0, r ** k)
    return rk * np.exp(1j * k * th)


def eval_poisson_extension(f: TrigPolynomial, z) -> np.ndarray:
    """Values of the harmonic extension at points ``z`` (``|z| <= 1``), shape ``z.shape + (d,)``."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > 1.0 + 1e-12):
        raise ValueError("points must lie in the closed unit disc")
    N = f.degree
    pw = _powers(z, N + 1)
    out = pw @ f.analytic
    if N > 0:
        out = out + np.conj(pw[..., 1:]) @ f.antianalytic
    return out


def eval_gradient(f: TrigPolynomial, z) -> GradientValue:
    """Exact Cartesian (and radial) derivatives of the extension at interior points."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1.0):
        raise ValueError("gradients are only defined at interior points |z| < 1")
    N = f.degree
    d = f.d
    if N == 0:
        zero = np.zeros(z.shape + (d,), dtype=complex)
        return GradientValue(zero, zero.copy(), zero.copy())
    k = np.arange(1, N + 1)[:, None]
    pw = _powers(z, N)  # z^0 .. z^{N-1}
    hprime = pw @ (k * f.analytic[1:])
    gprime = np.conj(pw) @ (k * f.antianalytic)
    dx = hprime + gprime
    dy = 1j * (hprime - gprime)
    unit = np.exp(1j * np.angle(z))[..., None]
    dr = unit * hprime + np.conj(unit) * gprime
    return GradientValue(dx, dy, dr)


GRADIENT_CONVENTIONS = ("sum", "polar", "euclidean")


def gradient_norm(space: NormSpec, f: TrigPolynomial, z, convention: str = "sum") -> np.ndarray:
    """Norm of the gradient of the extension at interior points ``z``.

    The default ``sum`` convention is ``‖∂_x f‖ + ‖∂_y f‖``; see
    :func:`gradient_density` for the others.
    """
    z = np.asarray(z, dtype=complex)
    g = eval_gradient(f, z)
    return gradient_density(space, g.dx, g.dy, np.angle(z), convention)


def gradient_density(space: NormSpec, dx, dy, theta, convention: str = "sum") -> np.ndarray:
    """Combine Cartesian derivatives at points of angle ``theta`` into one norm.

    ``sum`` is ``‖∂_x f‖ + ‖∂_y f‖``, ``euclidean`` is ``(‖∂_x f‖² + ‖∂_y f‖²)^{1/2}``
    and ``polar`` is ``‖∂_r f‖ + ‖r^{-1}∂_θ f‖``, the only one of the three that
    is rotation equivariant for every norm.
    """
    if convention == "polar":
        c = np.cos(theta)[..., None]
        s = np.sin(theta)[..., None]
        return norm(space, c * dx + s * dy) + norm(space, c * dy - s * dx)
    nx, ny = norm(space, dx), norm(space, dy)
    if convention == "sum":
        return nx + ny
    if convention == "euclidean":
        return np.hypot(nx, ny)
    raise ValueError(f"unknown gradient convention {convention!r}; expected one of {GRADIENT_CONVENTIONS}")


def poisson_kernel_disc(z0, w) -> np.ndarray:
    """``(1 - |z0|²) / |1 - conj(z0) w|²``."""
    z0 = np.asarray(z0, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(z0) >= 1.0):
        raise ValueError("the kernel pole must lie inside the disc")
    return (1.0 - np.abs(z0) ** 2) / np.abs(1.0 - np.conj(z0) * w) ** 2


def mobius_map(z0, z):
    """``φ(z) = (z + z0)/(1 + conj(z0) z)`` and ``|φ'(z)|``."""
    z0 = np.asarray(z0, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z0) >= 1.0):
        raise ValueError("Möbius parameter must lie inside the disc")
    den = 1.0 + np.conj(z0) * z
    return (z + z0) / den, (1.0 - np.abs(z0) ** 2) / np.abs(den) ** 2


def compose_mobius_gradient(f: TrigPolynomial, z0, z) -> GradientValue:
    """Cartesian gradient of ``f∘φ`` at ``z`` through the real Jacobian of ``φ``."""
    z0 = complex(z0)
    z = np.asarray(z, dtype=complex)
    w, _ = mobius_map(z0, z)
    gw = eval_gradient(f, w)
    dphi = (1.0 - abs(z0) ** 2) / (1.0 + np.conj(z0) * z) ** 2
    ux, vx = dphi.real[..., None], dphi.imag[..., None]
    # Cauchy–Riemann: u_y = -v_x, v_y = u_x
    dx = gw.dx * ux + gw.dy * vx
    dy = gw.dx * (-vx) + gw.dy * ux
    return GradientValue(dx, dy)


def random_polynomial(N: int, decay: float, space: NormSpec, seed: int) -> TrigPolynomial:
    """I.i.d. complex Gaussian coefficients scaled by ``(1+|k|)^-decay``."""
    rng = np.random.default_rng(seed)
    k = np.arange(-N, N + 1)
    g = (rng.standard_normal((2 * N + 1, space.d)) + 1j * rng.standard_normal((2 * N + 1, space.d))) / np.sqrt(2)
    coeffs = g * ((1.0 + np.abs(k)) ** -float(decay))[:, None]
    return TrigPolynomial(coeffs, space, seed)


def lacunary_polynomial(vectors, space: NormSpec) -> TrigPolynomial:
    """``Σ_{k=1}^m a_k z^{2^k}`` for ``vectors = [a_1, ..., a_m]``."""
    vecs = np.atleast_2d(np.asarray(vectors, dtype=complex))
    m = vecs.shape[0]
    if m > 16:
        raise ValueError("lacunary length is limited to 16 terms")
    N = 2**m
    coeffs = np.zeros((2 * N + 1, space.d), dtype=complex)
    for k in range(1, m + 1):
        coeffs[N + 2**k] = vecs[k - 1]
    return TrigPolynomial(coeffs, space)


def boundary_coefficients(samples: np.ndarray, N: int) -> np.ndarray:
    """Discrete Fourier inversion of ``M >= 2N+1`` equispaced boundary samples."""
    M = samples.shape[0]
    if M < 2 * N + 1:
        raise ValueError("need at least 2N+1 samples")
    spectrum = np.fft.fft(samples, axis=0) / M
    k = np.arange(-N, N + 1)
    return spectrum[k % M]


_SPARSE_TERMS = 24


class CircleSamples(NamedTuple):
    values: np.ndarray | None
    dx: np.ndarray | None
    dy: np.ndarray | None
    dr: np.ndarray | None


def _fold(c: np.ndarray, freqs: np.ndarray, M: int) -> np.ndarray:
    """Sum coefficients into ``M`` frequency bins modulo ``M``."""
    out = np.zeros((M,) + c.shape[1:], dtype=complex)
    idx = freqs % M
    if freqs.size == 0:
        return out
    if freqs.max() - freqs.min() < M:
        out[idx] = c
    else:
        np.add.at(out, idx, c)
    return out


@lru_cache(maxsize=4)
def _phase_matrix(M: int, freqs: tuple) -> np.ndarray:
    """``e^{ikθ_l}`` for ``θ_l = 2πl/M``, looked up from exact roots of unity."""
    roots = np.exp(2j * np.pi * np.arange(M) / M)
    out = roots[np.outer(np.arange(M), np.array(freqs, dtype=np.int64)) % M]
    out.setflags(write=False)
    return out


def _synthesize(c: np.ndarray, freqs: np.ndarray, M: int) -> np.ndarray:
    """``Σ_k c_k e^{ikθ_l}`` at ``θ_l = 2πl/M``; direct sum for sparse spectra."""
    nz = np.flatnonzero(np.any(c != 0, axis=1))
    if nz.size == 0:
        return np.zeros((M,) + c.shape[1:], dtype=complex)
    if nz.size <= _SPARSE_TERMS:
        return _phase_matrix(M, tuple(int(k) for k in freqs[nz])) @ c[nz]
    return np.fft.ifft(_fold(c, freqs, M), axis=0) * M


def on_circle(f: TrigPolynomial, r: float, M: int, values: bool = True, gradient: bool = True,
              radial: bool = True) -> CircleSamples:
    """Extension and gradient on ``r e^{2πil/M}``, ``l = 0..M-1``, via inverse FFTs.

    Coefficients are folded modulo M first, so this is exact at the sample
    points for any degree.  Returned arrays have shape ``(M, d)``;
    ``radial=False`` skips ``∂_r``.
    """
    N = f.degree
    k = np.arange(-N, N + 1)
    rk = float(r) ** np.abs(k)
    vals = dx = dy = dr = None
    if values:
        vals = _synthesize(f.coeffs * rk[:, None], k, M)
    if gradient:
        if not r < 1.0:
            raise ValueError("gradients need r < 1")
        kp = np.arange(1, N + 1)
        # h'(z) = Σ k a_k z^{k-1}: frequency k-1, modulus k r^{k-1}
        hc = f.analytic[1:] * (kp * float(r) ** (kp - 1))[:, None]
        gc = f.antianalytic * (kp * float(r) ** (kp - 1))[:, None]
        hprime = _synthesize(hc, kp - 1, M) if N > 0 else np.zeros((M, f.d), dtype=complex)
        unit = np.exp(2j * np.pi * np.arange(M) / M)[:, None] if radial else None
        if np.any(gc):
            gprime = _synthesize(gc, -(kp - 1), M)
            dx = hprime + gprime
            dy = 1j * (hprime - gprime)
            if radial:
                dr = unit * hprime + np.conj(unit) * gprime
        else:
            dx = hprime
            dy = 1j * hprime
            if radial:
                dr = unit * hprime
    return CircleSamples(vals, dx, dy, dr)
