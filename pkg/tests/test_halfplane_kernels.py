import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from vvbmo import halfplane_kernels as hk
from vvbmo.normed_spaces import make_space

H = 1e-5
pos = st.floats(0.05, 20.0)
real = st.floats(-30.0, 30.0)


# --- closed forms, validated against finite differences ----------------------


@given(t=pos, x=real)
def test_phi_is_t_dt_poisson(t, x):
    fd = t * (hk.kernel_eval("P", t + H, x) - hk.kernel_eval("P", t - H, x)) / (2 * H)
    exact = hk.kernel_eval("phi", t, x)
    # the floor covers the zero crossing at |x| = t
    assert exact == pytest.approx(fd, rel=1e-6, abs=1e-6 * hk.kernel_eval("P", t, x))


@given(s=pos, t=pos, x=real)
def test_k_is_st_second_r_derivative(s, t, x):
    # d²P/dr² = d/dr (φ_r / r) since φ_r = r dP/dr
    r = s + t

    def dP(rr):
        return hk.kernel_eval("phi", rr, x) / rr

    fd = s * t * (dP(r + H) - dP(r - H)) / (2 * H)
    exact = hk.kernel_eval("k", t, x, s=s)
    scale = s * t / (r + abs(x)) ** 3
    assert exact == pytest.approx(fd, rel=1e-6, abs=1e-7 * scale)


@pytest.mark.parametrize("kind, s", [("P", None), ("phi", None), ("k", 0.7)])
@given(t=pos, x=real)
def test_antiderivatives(kind, s, t, x):
    assert hk.kernel_antiderivative(kind, t, 0.0, s=s) == 0
    fd = (hk.kernel_antiderivative(kind, t, x + H, s=s) - hk.kernel_antiderivative(kind, t, x - H, s=s)) / (2 * H)
    exact = hk.kernel_eval(kind, t, x, s=s)
    assert exact == pytest.approx(fd, rel=1e-6, abs=1e-6 / t)


def test_worked_points():
    assert hk.kernel_eval("P", 1.0, 0.0) == pytest.approx(1 / np.pi, rel=1e-12)
    assert hk.kernel_eval("phi", 1.0, 0.0) == pytest.approx(-1 / np.pi, rel=1e-12)
    assert hk.kernel_eval("k", 1.0, 0.0, s=1.0) == pytest.approx(1 / (4 * np.pi), rel=1e-12)


def test_kernel_errors():
    with pytest.raises(ValueError):
        hk.kernel_eval("P", 0.0, 1.0)
    with pytest.raises(ValueError):
        hk.kernel_eval("k", 1.0, 1.0, s=-1.0)
    with pytest.raises(ValueError):
        hk.kernel_eval("k", 1.0, 1.0)
    with pytest.raises(ValueError):
        hk.kernel_eval("Q", 1.0, 1.0)


@given(lam=st.floats(0.01, 100), s=pos, t=pos, x=real)
def test_dilation_covariance(lam, s, t, x):
    for kind, ss in (("P", None), ("phi", None)):
        assert hk.kernel_eval(kind, lam * t, lam * x) == pytest.approx(hk.kernel_eval(kind, t, x) / lam, rel=1e-12, abs=1e-300)
    got = hk.kernel_eval("k", lam * t, lam * x, s=lam * s)
    assert got == pytest.approx(hk.kernel_eval("k", t, x, s=s) / lam, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("t", [0.1, 1.0, 7.0])
def test_phi_zero_mean(t):
    W = 50 * t
    v, err = integrate.quad(lambda x: hk.kernel_eval("phi", t, x), -W, W, points=[0.0], limit=400,
                            epsabs=1e-13, epsrel=1e-13)
    # both tails together contribute 2tW / (π(t² + W²))
    tail = 2 * t * W / (np.pi * (t * t + W * W))
    assert abs(v + tail) < 1e-8
    v, _ = integrate.quad(lambda x: hk.kernel_eval("phi", t, x), -np.inf, np.inf, points=None, limit=400)
    assert abs(v) < 1e-8


def test_poisson_mass_one():
    v, _ = integrate.quad(lambda x: hk.kernel_eval("P", 0.3, x), -np.inf, np.inf)
    assert v == pytest.approx(1, abs=1e-10)


# --- semigroup identity ------------------------------------------------------


@pytest.mark.parametrize("s", [0.25, 1.0, 4.0])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("x", [0.0, 1.0, 3.0])
def test_convolve_check_grid(s, t, x):
    chk = hk.convolve_check(s, t, x)
    assert chk.relative_error <= 1e-6
    assert chk.converged
    assert chk.tail_bound >= 0


def test_convolve_symmetry():
    a, b = hk.convolve_check(1.0, 2.0, 3.0), hk.convolve_check(2.0, 1.0, 3.0)
    assert a.numeric == pytest.approx(b.numeric, rel=1e-10)


def test_convolve_reports_coarse_resolution():
    chk = hk.convolve_check(1e-3, 50.0, 0.5, limit=2)
    assert not chk.converged


# --- decay -------------------------------------------------------------------


def test_decay_ratio_worked_point():
    assert hk.decay_ratio(1.0, 1.0, 0.0) == pytest.approx(2 / np.pi, rel=1e-12)


@given(s=pos, t=pos, x=real)
def test_decay_ratio_matches_definition(s, t, x):
    direct = abs(hk.kernel_eval("k", t, x, s=s)) * (s + t + abs(x)) ** 3 / (s * t)
    assert hk.decay_ratio(s, t, x) == pytest.approx(direct, rel=1e-10, abs=1e-15)


def test_decay_ratio_large_x_limit():
    # |k| (s+t+|x|)^3 / st ~ (6/π)(s+t)/|x| once |x| >> s+t, so the ratio tends to 0
    xs = np.array([1e2, 1e4, 1e6])
    vals = hk.decay_ratio(1.0, 1.0, xs)
    np.testing.assert_allclose(vals * xs, 12 / np.pi, rtol=0.1)


def test_decay_sweep_stable():
    base = hk.decay_sweep(1)
    dbl = hk.decay_sweep(2)
    assert np.isfinite(base["sup"]) and np.isfinite(dbl["sup"])
    assert 0.5 <= dbl["sup"] / base["sup"] <= 2
    xi = np.linspace(0, 50, 500001)
    closed = (2 / np.pi) * np.abs(1 - 3 * xi**2) * (1 + xi) ** 3 / (1 + xi**2) ** 3
    assert dbl["sup"] <= closed.max() * (1 + 1e-9)


# --- grids and cone functions ------------------------------------------------


def test_line_grid():
    g = hk.LineGrid(0.5, 2.0)
    np.testing.assert_allclose(g.nodes, [-1.5, -1, -0.5, 0, 0.5, 1, 1.5])
    assert len(g) == 7


@pytest.mark.parametrize("hx, lpo", [(0.5, 1), (0.25, 2), (0.1, 3)])
def test_cone_grid_invariants(hx, lpo):
    cone = hk.ConeGrid(hx, 2.0**-4, 4.0, lpo)
    assert np.all(np.abs(cone.z) < cone.t)
    assert np.all(cone.weights > 0)
    # each level covers (-t, t) exactly: Σ w = 2 · log width per level
    levels = cone.t_levels.size
    assert cone.total_measure == pytest.approx(2 * cone.log_width * levels, rel=1e-12)
    assert cone.total_measure == hk.ConeGrid(hx, 2.0**-4, 4.0, lpo).total_measure


def test_cone_grid_validation():
    with pytest.raises(ValueError):
        hk.ConeGrid(0.5, 2.0, 1.0)
    with pytest.raises(ValueError):
        hk.ConeGrid(-0.5)


def small_grids(hx=0.5):
    return hk.LineGrid(hx, 4.0), hk.ConeGrid(hx, 0.25, 2.0, 1)


def random_h(seed, d=1, complex_values=False, hx=0.5):
    line, cone = small_grids(hx)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((len(line), len(cone), d))
    if complex_values:
        v = v + 1j * rng.standard_normal(v.shape)
    return hk.ConeFunction(v, line, cone, make_space(2, d))


def test_cone_function_norms():
    h = random_h(0, d=2)
    w = h.cone.weights
    manual = np.sqrt(np.sum(np.abs(h.values) ** 2, axis=2) ** 1.5 @ w) ** (1 / 1.5)
    np.testing.assert_allclose(h.a_norm(3.0), manual, rtol=1e-12)
    assert h.lq_norm(2.0) == pytest.approx(math.sqrt(h.line.hx * np.sum(np.abs(h.values) ** 2 * w[None, :, None])))


def test_cone_function_validation():
    line, cone = small_grids()
    with pytest.raises(ValueError):
        hk.ConeFunction(np.zeros((len(line), len(cone) + 1)), line, cone, make_space(2, 1))
    with pytest.raises(ValueError):
        hk.ConeFunction(np.zeros((len(line), len(cone))), hk.LineGrid(0.25, 4.0), cone, make_space(2, 1))


def test_json_round_trips():
    h = random_h(1, d=2, complex_values=True)
    g = hk.ConeFunction.from_json(json.loads(json.dumps(h.to_json())))
    np.testing.assert_array_equal(g.values, h.values)
    assert g.cone == h.cone and g.line == h.line
    assert hk.ConeGrid.from_json(json.dumps(h.cone.to_json())) == h.cone


# --- operators ---------------------------------------------------------------


@pytest.mark.parametrize("y_rule", ["point", "cell"])
def test_single_cell_collapse(y_rule):
    line, cone = small_grids()
    j0, c0 = 5, 7
    v = np.zeros((len(line), len(cone), 1))
    v[j0, c0] = 1.0
    h = hk.ConeFunction(v, line, cone, make_space(2, 1))
    y0, z0, t0, w0 = line.nodes[j0], cone.z[c0], cone.t[c0], cone.weights[c0]
    x = line.nodes
    if y_rule == "point":
        psi_expected = hk.kernel_eval("phi", t0, x + z0 - y0) * w0 * line.hx
    else:
        a = x + z0 - y0
        psi_expected = (hk.kernel_antiderivative("phi", t0, a + line.hx / 2)
                        - hk.kernel_antiderivative("phi", t0, a - line.hx / 2)) * w0
    np.testing.assert_allclose(hk.apply_Psi(h, y_rule)[:, 0], psi_expected, rtol=1e-12, atol=1e-15)
    out = hk.apply_Phi(h, y_rule=y_rule)
    for c in range(len(cone)):
        s, u = cone.t[c], cone.z[c]
        if y_rule == "point":
            expected = hk.kernel_eval("k", t0, x + u + z0 - y0, s=s) * w0 * line.hx
        else:
            a = x + u + z0 - y0
            expected = (hk.kernel_antiderivative("k", t0, a + line.hx / 2, s=s)
                        - hk.kernel_antiderivative("k", t0, a - line.hx / 2, s=s)) * w0
        np.testing.assert_allclose(out.values[:, c, 0], expected, rtol=1e-12, atol=1e-15)


def test_zero_input():
    line, cone = small_grids()
    h = hk.ConeFunction(np.zeros((len(line), len(cone))), line, cone, make_space(2, 1))
    assert not np.any(hk.apply_Psi(h))
    assert not np.any(hk.apply_Phi(h).values)


@given(alpha=st.floats(-5, 5), s1=st.integers(0, 100), s2=st.integers(0, 100))
@settings(max_examples=10, deadline=None)
def test_linearity(alpha, s1, s2):
    h1, h2 = random_h(s1, d=2), random_h(s2, d=2)
    lhs = hk.apply_Phi(alpha * h1 + h2).values
    rhs = alpha * hk.apply_Phi(h1).values + hk.apply_Phi(h2).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()))
    np.testing.assert_allclose(hk.apply_Psi(alpha * h1 + h2), alpha * hk.apply_Psi(h1) + hk.apply_Psi(h2), atol=1e-12)


@pytest.mark.parametrize("y_rule", ["point", "cell"])
def test_fft_apply_matches_direct(y_rule):
    h = random_h(3, d=2, complex_values=True)
    np.testing.assert_allclose(hk.apply_Psi(h, y_rule), hk.apply_direct(h, "phi", y_rule=y_rule), atol=1e-12)
    out = hk.apply_Phi(h, y_rule=y_rule)
    cone = h.cone
    for c in range(0, len(cone), 3):
        direct = hk.apply_direct(h, "k", s=cone.t[c], u=cone.z[c], y_rule=y_rule)
        np.testing.assert_allclose(out.values[:, c], direct, atol=1e-12)


def test_u_slice_is_the_u0_column():
    h = random_h(4)
    full = hk.apply_Phi(h)
    sl = hk.apply_Phi(h, u_slice=True)
    cone = h.cone
    for si in range(cone.t_levels.size):
        c = np.flatnonzero((cone.level == si) & (cone.z_index == 0))[0]
        np.testing.assert_allclose(sl[:, si], full.values[:, c], rtol=1e-13, atol=1e-16)


def test_output_cone_mismatch():
    h = random_h(0)
    with pytest.raises(ValueError):
        hk.apply_Phi(h, out_cone=hk.ConeGrid(0.3, 0.25, 2.0))


def localized_h(hx, X_max):
    line, cone = hk.LineGrid(hx, X_max), hk.ConeGrid(hx, 0.5, 2.0, 1)
    y = line.nodes[:, None]
    v = np.exp(-y**2 - (cone.z / cone.t / 0.4)[None, :] ** 2)
    return hk.ConeFunction(v, line, cone, make_space(2, 1))


def test_phi_from_psi_matches_u0_slice():
    # the identity holds on the whole line; truncating the line cuts the 1/x²
    # tails of Ψ(h), so compare centrally and check the error shrinks with X_max
    worst = []
    for X_max in (32.0, 64.0):
        h = localized_h(0.125, X_max)
        sl = hk.apply_Phi(h, u_slice=True)
        mid = np.abs(h.line.nodes) <= 4
        errs = []
        for si, s in enumerate(h.cone.t_levels):
            fd = hk.phi_from_psi(h, s)[:, 0]
            ref = sl[:, si, 0]
            errs.append(np.max(np.abs(fd - ref)[mid]) / np.max(np.abs(ref)))
        worst.append(max(errs))
    assert worst[0] < 1e-3
    assert worst[1] < worst[0] / 4


# --- operator norm probe -----------------------------------------------------

SMALL = dict(resolutions=[(0.5, 1), (0.25, 2)], X_max=8.0, T_min=0.25, T_max=2.0)


def test_op_norm_reproducible():
    a = hk.op_norm_estimate(2.0, trials=3, seed=5, **SMALL)
    b = hk.op_norm_estimate(2.0, trials=3, seed=5, **SMALL)
    assert [r.estimate for r in a] == [r.estimate for r in b]
    assert hk.estimates_to_csv(a) == hk.estimates_to_csv(b)
    assert hk.estimates_to_csv(a).splitlines()[0] == "resolution,q,estimate,trials,seed,hx,levels_per_octave,cells"


@pytest.mark.parametrize("q", [1.5, 3.0])
def test_op_norm_single_cell_brute_force(q):
    est = hk.op_norm_estimate(q, single_cell=(8, 5), **SMALL)
    for row, (hx, lpo) in zip(est, SMALL["resolutions"]):
        line, cone = hk.LineGrid(hx, 8.0), hk.ConeGrid(hx, 0.25, 2.0, lpo)
        y0, z0, t0, w0 = line.nodes[8], cone.z[5], cone.t[5], cone.weights[5]
        total = 0.0
        for c in range(len(cone)):
            a = line.nodes + cone.z[c] + z0 - y0
            val = (hk.kernel_antiderivative("k", t0, a + hx / 2, s=cone.t[c])
                   - hk.kernel_antiderivative("k", t0, a - hx / 2, s=cone.t[c])) * w0
            total += hx * np.sum(np.abs(val) ** q) * cone.weights[c]
        brute = (total / (hx * w0)) ** (1 / q)
        assert row.estimate == pytest.approx(brute, rel=1e-10)


def test_op_norm_bounded_across_resolutions():
    est = hk.op_norm_estimate(2.0, trials=4, resolutions=hk.default_resolutions(3), X_max=16.0)
    vals = [r.estimate for r in est]
    assert all(np.isfinite(vals))
    assert vals[-1] / vals[0] <= 2


def test_op_norm_rejects_q():
    with pytest.raises(ValueError):
        hk.op_norm_estimate(1.0)


def test_smooth_inputs_resolution_consistent():
    # the same generator state gives the same continuous bumps at any lattice
    a_line, a_cone = hk.LineGrid(0.5, 8.0), hk.ConeGrid(0.5, 0.25, 2.0, 1)
    b_line, b_cone = hk.LineGrid(0.25, 8.0), hk.ConeGrid(0.25, 0.25, 2.0, 1)
    a = hk.smooth_random_input(a_line, a_cone, np.random.default_rng(1))
    b = hk.smooth_random_input(b_line, b_cone, np.random.default_rng(1))
    ia = np.flatnonzero((a_cone.z_index == 0))
    ib = np.flatnonzero((b_cone.z_index == 0))
    # the coarse nodes are every other fine node
    np.testing.assert_allclose(a[:, ia], b[1::2, ib], atol=1e-12)
