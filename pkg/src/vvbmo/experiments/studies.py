"""Studies that combine the numerical modules into checkable claims.

Every study returns a :class:`StudyReport` whose rows carry the raw
functional values at two or more resolutions.  Gates are evaluated at each
resolution; the verdict is the finest level's, and a gate whose verdict
changes between levels is flagged.
"""

from __future__ import annotations

import math
import platform
from dataclasses import replace

import numpy as np

from .. import disc_harmonics as dh
from .. import functionals as fn
from .. import halfplane_kernels as hk
from .. import normed_spaces as ns
from ..quadrature import disc_rule
from .config import ConfigError, Gate, StudyConfig, StudyReport

__all__ = [
    "run_equivalence_study",
    "run_lacunary_study",
    "run_witness_study",
    "run_mobius_check",
    "run_moduli_study",
    "run_kernel_checks",
    "run_lp_cotype_study",
    "run_study",
    "default_config",
    "DEFAULT_GATES",
]

DEFAULT_GATES = {
    "equivalence": {"band": 64.0, "slope": 0.15},
    "lacunary": {"band": 32.0, "slope": 0.15},
    "witness": {"growth": 4.0, "control_band": 2.0},
    "mobius": {"max_rel_diff": 1e-2, "identity_diff": 1e-12},
    "moduli": {"exponent_tol": 0.3},
    "kernels": {"convolve_rel": 1e-6, "decay_stability": 2.0, "op_norm_growth": 2.0, "closed_form_rel": 1e-12},
    "cotype": {"constant": 8.0, "slope": 0.15},
}

_STUDY_DEFAULTS = {
    "equivalence": {},
    "lacunary": {"dims": [3, 4, 5, 6, 7, 8], "spaces": [2.0, 3.0], "q": [2.0, 3.0], "count": 1},
    "witness": {"dims": [2, 4, 8, 16], "spaces": ["inf", 1.0, 2.0], "grid_j": 3},
    "mobius": {"count": 10, "degrees": [16], "decays": [0.5], "grid_j": 8},
    "moduli": {"spaces": [[1.0, 2], [1.5, 2], [2.0, 2], [3.0, 2], [4.0, 2]], "count": 16},
    "kernels": {"q": [1.5, 2.0, 3.0], "count": 32},
    "cotype": {"p": 2.0, "d": 4, "p_exponents": [1.5, 2.0, 4.0], "degrees": [8, 16, 32, 64], "count": 10},
}

_MOBIUS_POINTS = [0.3, 0.5j, -0.7]


def default_config(study: str, **overrides) -> StudyConfig:
    """The study's default configuration, with keyword overrides applied."""
    base = dict(_STUDY_DEFAULTS.get(study, {}))
    base.update(overrides)
    return StudyConfig(study=study, **base)


def _gates(config: StudyConfig) -> dict:
    out = dict(DEFAULT_GATES[config.study])
    unknown = set(config.gates) - set(out)
    if unknown:
        raise ConfigError(f"unknown gates for {config.study}: {sorted(unknown)}")
    out.update(config.gates)
    return out


def _compare(value: float, threshold: float, comparison: str) -> bool:
    if not np.isfinite(value):
        return False
    return {"<=": value <= threshold, "<": value < threshold, ">=": value >= threshold,
            "abs<": abs(value) < threshold, "true": bool(value)}[comparison]


def _gate(name: str, per_level: list[float], threshold: float, comparison: str, note: str = "") -> Gate:
    """Verdict at the finest (last) level; flagged when some level disagrees."""
    verdicts = [_compare(v, threshold, comparison) for v in per_level]
    levels = [{"level": i, "value": float(v), "passed": ok} for i, (v, ok) in enumerate(zip(per_level, verdicts))]
    final = verdicts[-1]
    return Gate(name, final, float(per_level[-1]), float(threshold), comparison, levels,
                flagged=any(v != final for v in verdicts), note=note)


def _band(values) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.any(v <= 0) or not np.all(np.isfinite(v)):
        return math.inf
    return float(v.max() / v.min())


def _slope(x, y) -> float:
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    if np.unique(x).size < 2 or not np.all(np.isfinite(y)):
        return math.nan
    return float(np.polyfit(x, y, 1)[0])


def _environment(config: StudyConfig, **extra) -> dict:
    env = {"levels": config.refine, "numpy": np.__version__, "python": platform.python_version()}
    env.update(extra)
    return env


def _exponent_only(entry):
    """Space entries for studies that set the dimension themselves: ``p`` or ``[p, ...]``."""
    return entry[0] if isinstance(entry, (list, tuple)) else entry


def _item_seed(base: int, degree: int, index: int) -> int:
    return int(np.random.SeedSequence([int(base), int(degree), int(index)]).generate_state(1)[0])


def _corpus(config: StudyConfig, space: ns.NormSpec, degree: int):
    for i in range(config.count):
        seed = _item_seed(config.seeds[0], degree, i)
        decay = float(config.decays[i % len(config.decays)])
        yield i, decay, dh.random_polynomial(degree, decay, space, seed)


def _coarsened(res: fn.DiscResolution, steps: int) -> fn.DiscResolution:
    for _ in range(steps):
        res = res.coarser()
    return res


def _disc_resolution(config: StudyConfig, f: dh.TrigPolynomial, pole_depth: int) -> fn.DiscResolution:
    res = fn._default_resolution(f, pole_depth)
    if config.grid_m is not None:
        res = replace(res, M=max(res.M, fn._next_pow2(config.grid_m)))
    return res


# ---------------------------------------------------------------------------
# equivalence


def _directions(p: float, q: float) -> list[str]:
    out = []
    if q >= max(2.0, p):
        out.append("convexity")
    if q <= min(2.0, p):
        out.append("smoothness")
    return out


def run_equivalence_study(config: StudyConfig) -> StudyReport:
    """Carleson functional versus BMO norms over a random polynomial corpus.

    For each item and resolution level the rows hold ``bmo_arc``,
    ``bmo_poisson_q`` and ``carleson_poisson`` together with the ratios
    ``carleson / bmo^q``.  A ratio is gated (band and degree trend) for the
    exponents at which one of the two one-sided inequalities is expected:
    ``q >= max(2, p)`` (convexity side) or ``q <= min(2, p)`` (smoothness side).
    """
    gates_cfg = _gates(config)
    p = config.space_p
    space = ns.make_space(p, config.d)
    qs = [float(q) for q in config.q]
    L = config.refine
    rows = []
    for N in config.degrees:
        for i, decay, f in _corpus(config, space, int(N)):
            pole = fn.PoissonGrid(config.grid_j or fn.default_depth(f))
            depth = config.depth or fn.default_depth(f)
            fine = _disc_resolution(config, f, pole.depth)
            bmo_p = {q: fn.bmo_poisson_q(space, f, q, pole) for q in qs}
            for level in range(L):
                steps = L - 1 - level
                res = _coarsened(fine, steps)
                arcs = fn.ArcGrid(max(1, depth - steps))
                b_arc = fn.bmo_arc(space, f, arcs)
                for q in qs:
                    rep = fn.carleson_poisson(space, f, q, pole, res, estimate_error=False)
                    rows.append({
                        "degree": int(N), "item": i, "seed": f.seed, "decay": decay, "q": q, "level": level,
                        "disc_M": res.M, "disc_J": res.J, "pole_depth": pole.depth, "arc_depth": arcs.max_depth,
                        "bmo_arc": b_arc, "bmo_poisson": bmo_p[q], "carleson": rep.value,
                        "ratio_arc": rep.value / b_arc**q if b_arc > 0 else math.nan,
                        "ratio_poisson": rep.value / bmo_p[q] ** q if bmo_p[q] > 0 else math.nan,
                        "inverse_ratio_arc": b_arc**q / rep.value if rep.value > 0 else math.nan,
                        "argmax_re": rep.argmax.real, "argmax_im": rep.argmax.imag,
                    })
    summary, gates = {}, []
    for q in qs:
        dirs = _directions(p, q)
        per_level = {"arc": [], "poisson": []}
        slopes = {"arc": [], "poisson": []}
        for level in range(L):
            sel = [r for r in rows if r["q"] == q and r["level"] == level]
            for key in ("arc", "poisson"):
                vals = [r[f"ratio_{key}"] for r in sel]
                per_level[key].append(_band(vals))
                slopes[key].append(_slope([r["degree"] for r in sel], vals))
                summary[f"q={q:g}/level={level}/{key}"] = {
                    "min": float(np.min(vals)), "max": float(np.max(vals)), "median": float(np.median(vals)),
                    "band": per_level[key][-1], "slope": slopes[key][-1],
                }
        summary[f"q={q:g}/directions"] = dirs
        if not dirs:
            continue
        for key in ("arc", "poisson"):
            gates.append(_gate(f"band[{key},q={q:g}]", per_level[key], gates_cfg["band"], "<=",
                               f"max/min of carleson/bmo_{key}^q; expected sides: {', '.join(dirs)}"))
            gates.append(_gate(f"trend[{key},q={q:g}]", slopes[key], gates_cfg["slope"], "abs<",
                               "slope of log ratio against log degree"))
    env = _environment(config, space=space.describe())
    return StudyReport("equivalence", rows, summary, gates, env, config.to_dict())


# ---------------------------------------------------------------------------
# lacunary


_LACUNARY_MAX = 10


def _lacunary_vectors(kind: str, m: int, seed: int) -> np.ndarray:
    """Coefficient vectors ``a_1..a_m`` in ``C^m``.

    Random sets for different ``m`` are the leading ``m x m`` block of one
    fixed draw, so the families are nested in ``m``.
    """
    if kind == "unit":
        return np.eye(m, dtype=complex)
    if kind == "single":
        a = np.zeros((m, m), dtype=complex)
        a[0, 0] = 1.0
        return a
    if kind == "random":
        rng = np.random.default_rng([seed, _LACUNARY_MAX])
        shape = (_LACUNARY_MAX, _LACUNARY_MAX)
        full = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
        return full[:m, :m].copy()
    raise ValueError(kind)


def run_lacunary_study(config: StudyConfig) -> StudyReport:
    """Poisson-weighted integrals of lacunary series against coefficient sums.

    For ``g = Σ_k b_k z^{2^k}`` the reduced comparison is
    ``sup_{z₀} ∫ (1-|z|)^{q-1} ‖g‖^q P_{z₀} dA`` against ``Σ 2^{-qk} ‖b_k‖^q``;
    the derivative comparison uses ``‖g'‖`` against ``Σ ‖b_k‖^q``.  Both are
    band-gated; only the reduced form is trend-gated, the derivative slope is
    reported in the summary.  Each
    ``(space, q, m)`` cell runs unit, single-term and random coefficient sets.
    """
    gates_cfg = _gates(config)
    if any(m > _LACUNARY_MAX for m in config.dims):
        raise ConfigError(f"lacunary length m must be <= {_LACUNARY_MAX}")
    L = config.refine
    rows = []
    kinds = ("unit", "single", "random")
    for p in map(_exponent_only, config.spaces):
        for q in [float(x) for x in config.q]:
            for m in config.dims:
                space = ns.make_space(p, m)
                for kind in kinds:
                    A = _lacunary_vectors(kind, m, config.seeds[0])
                    f = dh.lacunary_polynomial(A, space)
                    k = np.arange(1, m + 1)
                    nrm = ns.norm(space, A) ** q
                    rhs_red = float(np.sum(2.0 ** (-q * k) * nrm))
                    rhs_der = float(np.sum(nrm))
                    pole = fn.PoissonGrid(config.grid_j or fn.default_depth(f))
                    fine = _disc_resolution(config, f, pole.depth)
                    for level in range(L):
                        res = _coarsened(fine, L - 1 - level)
                        red = fn.poisson_weighted_sup(space, f, q, pole, res, "value", "1-|z|", False)
                        der = fn.poisson_weighted_sup(space, f, q, pole, res, "radial", "1-|z|", False)
                        rows.append({
                            "p": ns._p_to_json(space.p), "m": m, "q": q, "kind": kind, "level": level,
                            "disc_M": res.M, "disc_J": res.J, "pole_depth": pole.depth,
                            "lhs_reduced": red.value, "rhs_reduced": rhs_red, "ratio_reduced": red.value / rhs_red,
                            "lhs_derivative": der.value, "rhs_derivative": rhs_der,
                            "ratio_derivative": der.value / rhs_der,
                        })
    summary, gates = {}, []
    for key in ("reduced", "derivative"):
        bands, slopes = [], []
        for level in range(L):
            sel = [r for r in rows if r["level"] == level]
            vals = [r[f"ratio_{key}"] for r in sel]
            bands.append(_band(vals))
            # trend in m within each deterministic (space, q, kind) family; random
            # sets gain coordinates with m, so they are band-gated only
            fam = {}
            for r in sel:
                if r["kind"] != "random":
                    fam.setdefault((r["p"], r["q"], r["kind"]), []).append(r)
            fs = [_slope([r["m"] for r in g], [r[f"ratio_{key}"] for r in g]) for g in fam.values()]
            worst = max(fs, key=abs) if fs else math.nan
            slopes.append(worst)
            summary[f"level={level}/{key}"] = {"min": float(np.min(vals)), "max": float(np.max(vals)),
                                               "band": bands[-1], "worst_slope": worst}
        gates.append(_gate(f"band[{key}]", bands, gates_cfg["band"], "<=",
                           "max/min of the two-sided ratio over every space, q, m and coefficient kind"))
        if key == "reduced":
            gates.append(_gate(f"trend[{key}]", slopes, gates_cfg["slope"], "abs<",
                               "largest |slope| of log ratio against log m within a family"))
    env = _environment(config)
    return StudyReport("lacunary", rows, summary, gates, env, config.to_dict())


# ---------------------------------------------------------------------------
# witness


_WITNESS_RATIONALE = (
    "For f_d = sum_k e_k z^(2^k) every boundary value has sup-coordinate modulus 1, so the BMO side "
    "stays bounded in l^inf_d while the Carleson side grows with d (lacunary estimate). In l^1_d the "
    "BMO side equals d while the Carleson side grows only linearly, so the reverse ratio grows."
)


def run_witness_study(config: StudyConfig) -> StudyReport:
    """Growth of Carleson/BMO ratios for ``f_d = Σ_k e_k z^{2^k}`` in ``ℓ^∞_d``, ``ℓ¹_d``, ``ℓ²_d``."""
    gates_cfg = _gates(config)
    dims = [int(d) for d in config.dims]
    if len(dims) < 3:
        raise ConfigError("witness study needs at least three dimensions")
    if dims != sorted(dims):
        raise ConfigError("witness dimensions must be increasing")
    L = config.refine
    rows = []
    pole = fn.PoissonGrid(config.grid_j or 3)
    for p in map(_exponent_only, config.spaces):
        for d in dims:
            space = ns.make_space(p, d)
            f = dh.lacunary_polynomial(np.eye(d), space)
            N = f.degree
            fine = fn.DiscResolution(fn._next_pow2(max(2 ** (pole.depth + 4), 2 * N + 1)),
                                     max(pole.depth, math.ceil(math.log2(N))) + 8, 8)
            if config.grid_m is not None:
                fine = replace(fine, M=max(fine.M, fn._next_pow2(config.grid_m)))
            bmo = fn.bmo_poisson_q(space, f, 2.0, pole)
            for level in range(L):
                res = _coarsened(fine, L - 1 - level)
                rep = fn.carleson_poisson(space, f, 2.0, pole, res, estimate_error=False)
                rows.append({
                    "p": ns._p_to_json(space.p), "d": d, "level": level, "degree": N,
                    "disc_M": res.M, "disc_J": res.J, "pole_depth": pole.depth,
                    "carleson": rep.value, "bmo_poisson": bmo,
                    "R": rep.value / bmo**2, "R_prime": bmo**2 / rep.value,
                })
    summary = {"rationale": _WITNESS_RATIONALE}
    gates = []

    def series(p, key, level):
        return [r[key] for r in rows if r["p"] == p and r["level"] == level]

    present = {r["p"] for r in rows}
    for p, key, label in (("inf", "R", "linf"), (1.0, "R_prime", "l1")):
        if p not in present:
            continue
        inc, growth = [], []
        for level in range(L):
            s = np.array(series(p, key, level))
            inc.append(float(np.all(np.diff(s) > 0)))
            growth.append(float(s[-1] / s[0]))
            summary[f"{label}/level={level}"] = {"d": dims, key: s.tolist(), "growth": growth[-1]}
        gates.append(_gate(f"increasing[{label}]", inc, 1.0, "true", f"{key}(d) strictly increasing"))
        gates.append(_gate(f"growth[{label}]", growth, gates_cfg["growth"], ">=",
                           f"{key}({dims[-1]})/{key}({dims[0]})"))
    if 2.0 in present:
        bands = []
        for level in range(L):
            s = series(2.0, "R", level)
            bands.append(_band(s))
            summary[f"l2/level={level}"] = {"d": dims, "R": s, "band": bands[-1]}
        gates.append(_gate("flat[l2]", bands, gates_cfg["control_band"], "<=", "max/min of R over d"))
    env = _environment(config, pole_grid=pole.to_json())
    return StudyReport("witness", rows, summary, gates, env, config.to_dict())


# ---------------------------------------------------------------------------
# Möbius


def _mobius_sides(space, f, z0, M, J, order=8):
    rule = disc_rule(M, J, order)
    z = rule.nodes
    g = dh.compose_mobius_gradient(f, z0, z)
    lhs = rule.integrate((ns.norm(space, g.dx) ** 2 + ns.norm(space, g.dy) ** 2) * (1.0 - np.abs(z) ** 2))
    gw = dh.eval_gradient(f, z)
    wt = (1.0 - abs(z0) ** 2) * (1.0 - np.abs(z) ** 2) / np.abs(1.0 - np.conj(z0) * z) ** 2
    rhs = rule.integrate((ns.norm(space, gw.dx) ** 2 + ns.norm(space, gw.dy) ** 2) * wt)
    return float(lhs), float(rhs)


def _mobius_M(N: int, z0: complex, override: int | None) -> int:
    m = fn._next_pow2(max(64, math.ceil(8 * max(N, 1) * (1 + abs(z0)) / (1 - abs(z0)))))
    return max(m, fn._next_pow2(override)) if override else m


def run_mobius_check(config: StudyConfig) -> StudyReport:
    """Change of variables under a disc automorphism for the gradient energy.

    Compares ``∫ |∇(f∘φ)|² (1-|z|²) dA`` with
    ``∫ |∇f(w)|² (1-|z₀|²)(1-|w|²)/|1 - z̄₀w|² dA(w)`` using the Euclidean
    gradient norm, which is conformally invariant.  Level 0 is the default
    grid; each further level doubles M and J.
    """
    gates_cfg = _gates(config)
    p = config.space_p
    if p != 2.0:
        raise ConfigError("the Möbius check needs a scalar or Hilbert target (p = 2)")
    space = ns.make_space(2.0, config.d)
    J0 = config.grid_j or 8
    L = config.refine
    items = []
    N0 = int(config.degrees[0])
    mono = np.zeros((3, config.d), dtype=complex)
    mono[2, 0] = 1.0
    items.append(("monomial", dh.TrigPolynomial(mono, space), [0.0, 0.5]))
    for i, decay, f in _corpus(config, space, N0):
        items.append((f"random-{i}", f, _MOBIUS_POINTS))
    rows = []
    for name, f, points in items:
        for z0 in points:
            M0 = _mobius_M(f.degree, z0, config.grid_m)
            for level in range(L):
                M, J = M0 * 2**level, J0 * 2**level
                lhs, rhs = _mobius_sides(space, f, complex(z0), M, J)
                rows.append({"item": name, "seed": f.seed, "z0_re": complex(z0).real, "z0_im": complex(z0).imag,
                             "level": level, "M": M, "J": J, "lhs": lhs, "rhs": rhs,
                             "rel_diff": abs(lhs - rhs) / abs(rhs) if rhs else abs(lhs - rhs)})
    gates = []
    moving = [r for r in rows if (r["z0_re"], r["z0_im"]) != (0.0, 0.0)]
    still = [r for r in rows if (r["z0_re"], r["z0_im"]) == (0.0, 0.0)]
    worst = [max(r["rel_diff"] for r in moving if r["level"] == lv) for lv in range(L)]
    # the difference must shrink at every refinement step for every (item, z0)
    dec = []
    for lv in range(L):
        if lv == 0:
            dec.append(1.0)
            continue
        ok = True
        for r in (r for r in moving if r["level"] == lv):
            prev = next(s for s in moving if s["item"] == r["item"] and s["z0_re"] == r["z0_re"]
                        and s["z0_im"] == r["z0_im"] and s["level"] == lv - 1)
            ok &= r["rel_diff"] < prev["rel_diff"]
        dec.append(float(ok))
    gates.append(Gate("max_rel_diff[default]", worst[0] <= gates_cfg["max_rel_diff"], worst[0],
                      gates_cfg["max_rel_diff"], "<=",
                      [{"level": i, "value": w, "passed": w <= gates_cfg["max_rel_diff"]} for i, w in enumerate(worst)],
                      note="largest relative difference at the default grid"))
    gates.append(_gate("decreasing", dec, 1.0, "true", "relative difference strictly decreases under refinement"))
    ident = [max(r["rel_diff"] for r in still if r["level"] == lv) for lv in range(L)]
    gates.append(_gate("identity[z0=0]", ident, gates_cfg["identity_diff"], "<=", "z0 = 0 is the identity map"))
    summary = {"worst_rel_diff": worst, "identity_rel_diff": ident}
    env = _environment(config, gradient_norm="euclidean", radial_panels=J0)
    return StudyReport("mobius", rows, summary, gates, env, config.to_dict())


# ---------------------------------------------------------------------------
# moduli

_EPS_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
_T_GRID = [0.05, 0.1, 0.2, 0.3, 0.4]


def run_moduli_study(config: StudyConfig) -> StudyReport:
    """Moduli of convexity and smoothness of ``ℓ^p_d`` and their power-type exponents.

    Convexity estimates are upper bounds and smoothness estimates lower
    bounds (both come from a finite search).  ``count`` is the number of
    random starts at the finest level; coarser levels use a quarter per step.
    The search runs over real vectors, a subset of the complex unit sphere,
    so the one-sided meaning of each estimate is preserved.
    """
    gates_cfg = _gates(config)
    L = config.refine
    rows, fits = [], []
    for p, d in config.spaces:
        space = ns.make_space(p, int(d), complex_field=False)
        for level in range(L):
            budget = ns.ModulusBudget(starts=max(4, config.count // 4 ** (L - 1 - level)),
                                      sweeps=200, seed=config.seeds[0])
            conv = ns.modulus_curve(space, "convexity", _EPS_GRID, budget)
            smooth = ns.modulus_curve(space, "smoothness", _T_GRID, budget)
            for e, v in zip(conv.abscissae, conv.estimates):
                rows.append({"p": ns._p_to_json(space.p), "d": int(d), "level": level, "starts": budget.starts,
                             "kind": "convexity", "x": float(e), "estimate": float(v)})
            for t, v in zip(smooth.abscissae, smooth.estimates):
                rows.append({"p": ns._p_to_json(space.p), "d": int(d), "level": level, "starts": budget.starts,
                             "kind": "smoothness", "x": float(t), "estimate": float(v)})
            entry = {"p": ns._p_to_json(space.p), "d": int(d), "level": level}
            try:
                fit = ns.power_type_fit(conv)
                entry.update(convexity_exponent=fit.exponent, convexity_coefficient=fit.coefficient,
                             degenerate=False)
            except ns.DegenerateModulusError:
                entry.update(convexity_exponent=math.nan, convexity_coefficient=math.nan, degenerate=True)
            sfit = ns.power_type_fit(smooth)
            entry.update(smoothness_exponent=sfit.exponent)
            fits.append(entry)
    gates = []
    for p, d in config.spaces:
        pj = ns._p_to_json(ns.make_space(p, int(d)).p)
        sel = [e for e in fits if e["p"] == pj and e["d"] == int(d)]
        pf = math.inf if pj == "inf" else float(pj)
        if pf == 1.0:
            gates.append(_gate(f"degenerate[p={pj}]", [float(e["degenerate"]) for e in sel], 1.0, "true",
                               "l^1 has a vanishing modulus of convexity"))
        else:
            target = max(2.0, pf)
            dev = [abs(e["convexity_exponent"] - target) for e in sel]
            gates.append(_gate(f"exponent[p={pj}]", dev, gates_cfg["exponent_tol"], "<=",
                               f"|fitted convexity exponent - {target:g}|"))
    excess = []
    for level in range(L):
        sm = [r for r in rows if r["kind"] == "smoothness" and r["level"] == level]
        excess.append(max(r["estimate"] - r["x"] for r in sm))
    gates.append(_gate("rho<=t", excess, 1e-12, "<=", "largest rho(t) - t over all spaces"))
    summary = {"fits": fits, "eps_grid": _EPS_GRID, "t_grid": _T_GRID}
    env = _environment(config, field="real")
    return StudyReport("moduli", rows, summary, gates, env, config.to_dict())


# ---------------------------------------------------------------------------
# kernels

_CONV_S = [0.5, 1.0, 2.0]
_CONV_X = [0.0, 1.0, 3.0]


def run_kernel_checks(config: StudyConfig) -> StudyReport:
    """Closed-form values, the semigroup identity, the decay bound and the operator-norm probe."""
    gates_cfg = _gates(config)
    rows = []
    worked = [("P", None, 1.0, 0.0, 1.0 / math.pi), ("phi", None, 1.0, 0.0, -1.0 / math.pi),
              ("k", 1.0, 1.0, 0.0, 1.0 / (4.0 * math.pi))]
    cf = []
    for kind, s, t, x, expected in worked:
        v = hk.kernel_eval(kind, t, x, s=s)
        err = abs(v - expected) / abs(expected)
        cf.append(err)
        rows.append({"check": "closed_form", "kind": kind, "s": s, "t": t, "x": x, "value": v,
                     "expected": expected, "rel_error": err})
    conv = []
    for s in _CONV_S:
        for t in _CONV_S:
            for x in _CONV_X:
                c = hk.convolve_check(s, t, x)
                conv.append(c.relative_error)
                rows.append({"check": "convolve", "s": s, "t": t, "x": x, "value": c.numeric,
                             "expected": c.closed_form, "rel_error": c.relative_error,
                             "quad_error": c.quad_error, "converged": c.converged})
    sweeps = []
    for level in range(config.refine):
        sw = hk.decay_sweep(points_per_octave=2 * 2**level)
        sweeps.append(sw["sup"])
        rows.append({"check": "decay_sweep", "level": level, "points_per_octave": sw["points_per_octave"],
                     "value": sw["sup"], "argmax": list(sw["argmax"])})
    stability = [sweeps[0] / sweeps[0]] + [max(a / b, b / a) for a, b in zip(sweeps[:-1], sweeps[1:])]
    ops = {}
    for q in [float(v) for v in config.q]:
        est = hk.op_norm_estimate(q, hk.default_resolutions(max(3, config.refine)),
                                  trials=config.count, seed=config.seeds[0])
        ops[q] = [e.estimate for e in est]
        for e in est:
            rows.append({"check": "op_norm", "q": q, "level": e.resolution, "hx": e.hx,
                         "levels_per_octave": e.levels_per_octave, "cells": e.cells,
                         "value": e.estimate, "trials": e.trials, "seed": e.seed})
    gates = [
        _gate("closed_form", [max(cf)], gates_cfg["closed_form_rel"], "<=", "worked kernel values"),
        _gate("convolve", [max(conv)], gates_cfg["convolve_rel"], "<=", "phi_s * phi_t = k_{s,t} on a 3x3x3 grid"),
        _gate("decay_finite", [float(all(np.isfinite(sweeps)))], 1.0, "true", "decay ratio supremum finite"),
        _gate("decay_stable", stability, gates_cfg["decay_stability"], "<=",
              "change of the decay supremum under grid doubling"),
    ]
    for q, seq in ops.items():
        growth = [seq[i] / seq[0] for i in range(1, len(seq))]
        gates.append(_gate(f"op_norm[q={q:g}]", growth, gates_cfg["op_norm_growth"], "<=",
                           "estimate at each finer resolution over the first"))
    summary = {"decay_sups": sweeps, "op_norm": {f"{q:g}": v for q, v in ops.items()},
               "convolve_max_rel_error": max(conv)}
    env = _environment(config, cone_truncation={"T_min": 2.0**-6, "T_max": 8.0, "X_max": 32.0})
    return StudyReport("kernels", rows, summary, gates, env, config.to_dict())


# ---------------------------------------------------------------------------
# cotype


def _lp_oscillation(space, f, p, M):
    F = dh.on_circle(f, 1.0, M, values=True, gradient=False).values - f.coefficient(0)
    return float(np.mean(ns.norm(space, F) ** p) ** (1.0 / p))


def run_lp_cotype_study(config: StudyConfig) -> StudyReport:
    """``‖G_2 f‖_p / ‖f - a_0‖_p`` on a Hilbert-valued corpus for several ``p``.

    Level ``ℓ`` uses ``2^{ℓ-L+1}`` times the finest circle resolution and
    two fewer radial panels per coarsening step.
    """
    gates_cfg = _gates(config)
    space = ns.make_space(config.space_p, config.d)
    ps = [float(v) for v in (config.p_exponents or [1.5, 2.0, 4.0])]
    L = config.refine
    rows = []
    for N in config.degrees:
        for i, decay, f in _corpus(config, space, int(N)):
            M_fine = fn._next_pow2(max(64, 4 * f.degree + 4, config.grid_m or 0))
            for level in range(L):
                steps = L - 1 - level
                M, J = max(32, M_fine >> steps), 30 - 2 * steps
                G = fn.g_profile(space, f, 2.0, M, J=J)
                for p in ps:
                    gp = float(np.mean(G**p) ** (1.0 / p))
                    fp = _lp_oscillation(space, f, p, M)
                    rows.append({"degree": int(N), "item": i, "seed": f.seed, "decay": decay, "p": p,
                                 "level": level, "M": M, "J": J, "g_norm": gp, "f_norm": fp, "ratio": gp / fp})
    gates, summary = [], {}
    maxima, slopes = [], []
    for level in range(L):
        sel = [r for r in rows if r["level"] == level]
        maxima.append(max(r["ratio"] for r in sel))
        cell_max = {}
        for r in sel:
            key = (r["p"], r["degree"])
            cell_max[key] = max(cell_max.get(key, 0.0), r["ratio"])
        per_p = []
        for p in ps:
            degs = sorted(k[1] for k in cell_max if k[0] == p)
            per_p.append(_slope(degs, [cell_max[(p, n)] for n in degs]))
        slopes.append(max(per_p, key=abs))
        summary[f"level={level}"] = {"max_ratio": maxima[-1], "worst_slope": slopes[-1],
                                     "cell_max": {f"p={k[0]:g},N={k[1]}": v for k, v in cell_max.items()}}
    gates.append(_gate("constant", maxima, gates_cfg["constant"], "<=", "largest ratio over corpus, p and N"))
    gates.append(_gate("trend", slopes, gates_cfg["slope"], "abs<", "slope of the per-cell maximum against log N"))
    env = _environment(config, space=space.describe(), q=2.0)
    return StudyReport("cotype", rows, summary, gates, env, config.to_dict())


_RUNNERS = {
    "equivalence": run_equivalence_study,
    "lacunary": run_lacunary_study,
    "witness": run_witness_study,
    "mobius": run_mobius_check,
    "moduli": run_moduli_study,
    "kernels": run_kernel_checks,
    "cotype": run_lp_cotype_study,
}


def run_study(config: StudyConfig) -> StudyReport:
    return _RUNNERS[config.study](config)
